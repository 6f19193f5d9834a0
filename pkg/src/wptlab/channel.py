"""Frequency-selective MIMO channels on a uniform tone grid.

A transmission occupies N evenly spaced tones f_n = f0 + n·Δf, each narrow
enough (f_w ≤ Δf) that the channel is flat per tone. Responses are held as
N complex Q×M matrices: Q receive elements, M transmit antennas.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NarrowbandError, ShapeError


@dataclass(frozen=True)
class ToneGrid:
    f0: float
    delta_f: float
    n_tones: int
    bandwidth_fw: float

    def __post_init__(self):
        if self.f0 <= 0 or self.delta_f <= 0 or self.bandwidth_fw <= 0:
            raise ValueError("grid frequencies must be positive")
        if self.n_tones < 1:
            raise ValueError("need at least one tone")
        if self.bandwidth_fw > self.delta_f:
            raise ValueError(
                f"per-tone bandwidth {self.bandwidth_fw} exceeds spacing {self.delta_f}"
            )

    @property
    def frequencies(self):
        return self.f0 + self.delta_f * np.arange(self.n_tones)

    @property
    def period(self):
        """Repetition period of any deterministic multisine on this grid."""
        return 1.0 / self.delta_f

    def to_dict(self):
        return {
            "f0_hz": self.f0,
            "delta_f_hz": self.delta_f,
            "n_tones": self.n_tones,
            "bandwidth_fw_hz": self.bandwidth_fw,
        }

    @staticmethod
    def from_dict(d):
        return ToneGrid(
            f0=float(d["f0_hz"]),
            delta_f=float(d["delta_f_hz"]),
            n_tones=int(d["n_tones"]),
            bandwidth_fw=float(d["bandwidth_fw_hz"]),
        )


@dataclass(frozen=True)
class MultipathProfile:
    """Taps of a time-invariant multipath channel.

    delays: (L,) seconds. gains: (L,) real amplitudes (path loss folded in).
    phases: (Q, M, N, L) radians, one phase per path per link per tone.
    """

    delays: np.ndarray
    gains: np.ndarray
    phases: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "delays", np.asarray(self.delays, dtype=float))
        object.__setattr__(self, "gains", np.asarray(self.gains, dtype=float))
        object.__setattr__(self, "phases", np.asarray(self.phases, dtype=float))
        if self.delays.ndim != 1 or self.gains.shape != self.delays.shape:
            raise DimensionError("delays and gains must be 1-D arrays of equal length")
        if self.phases.ndim != 4 or self.phases.shape[-1] != self.delays.size:
            raise DimensionError("phases must have shape (Q, M, N, L)")

    @property
    def n_paths(self):
        return self.delays.size

    def delay_spread(self):
        return float(self.delays.max() - self.delays.min()) if self.n_paths else 0.0


@dataclass(frozen=True)
class ChannelResponse:
    """Per-tone channel matrices H[n] of shape (n_rx, n_tx), on `grid`."""

    H: np.ndarray
    grid: ToneGrid

    def __post_init__(self):
        H = np.asarray(self.H, dtype=complex)
        object.__setattr__(self, "H", H)
        if H.ndim != 3:
            raise DimensionError("H must have shape (n_tones, n_rx, n_tx)")
        if H.shape[0] != self.grid.n_tones:
            raise DimensionError(
                f"{H.shape[0]} tone matrices for a grid of {self.grid.n_tones} tones"
            )
        if not np.all(np.isfinite(H.view(float))):
            raise ValueError("channel entries must be finite")

    @property
    def n_tones(self):
        return self.H.shape[0]

    @property
    def n_rx(self):
        return self.H.shape[1]

    @property
    def n_tx(self):
        return self.H.shape[2]

    def siso_gains(self):
        """Per-tone scalar channels for the single-antenna-pair case."""
        if self.n_rx != 1 or self.n_tx != 1:
            raise ShapeError(
                f"expected a 1×1 channel, got {self.n_rx}×{self.n_tx}"
            )
        return self.H[:, 0, 0]


def response_from_multipath(profile, grid, n_tx, n_rx):
    """Sum the taps into per-tone responses.

    h_{q,m,n} = Σ_l gains_l · exp(j·(−2π f_n delays_l + phases_{q,m,n,l})).
    """
    if profile.phases.shape[:3] != (n_rx, n_tx, grid.n_tones):
        raise DimensionError(
            f"phase array shape {profile.phases.shape} does not match "
            f"(n_rx={n_rx}, n_tx={n_tx}, N={grid.n_tones}, L={profile.n_paths})"
        )
    spread = profile.delay_spread()
    if spread >= 1.0 / grid.bandwidth_fw:
        raise NarrowbandError(
            f"delay spread {spread:.3e}s is not small against 1/f_w "
            f"{1.0 / grid.bandwidth_fw:.3e}s"
        )
    f = grid.frequencies  # (N,)
    # (N, L) tone-delay phase ramp, then broadcast against (Q, M, N, L).
    ramp = -2.0 * np.pi * np.outer(f, profile.delays)
    terms = profile.gains * np.exp(1j * (ramp[None, None, :, :] + profile.phases))
    H = terms.sum(axis=-1)  # (Q, M, N)
    return ChannelResponse(H=np.transpose(H, (2, 0, 1)), grid=grid)


def rayleigh_iid(n_tx, n_rx, grid, seed=0):
    """I.i.d. zero-mean unit-variance circularly symmetric Gaussian entries."""
    rng = np.random.default_rng(seed)
    shape = (grid.n_tones, n_rx, n_tx)
    H = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    return ChannelResponse(H=H, grid=grid)


def hardening_statistic(channel):
    """Per-tone ‖h_n‖/√M for a single-output channel.

    Concentrates to 1 as M grows, which is what makes per-tone matched
    beamforming with uniform power competitive at large array sizes.
    """
    if channel.n_rx != 1:
        raise ShapeError(
            f"hardening statistic needs a single output, got {channel.n_rx}"
        )
    norms = np.linalg.norm(channel.H[:, 0, :], axis=1)
    return norms / np.sqrt(channel.n_tx)


def save_channel(channel, path):
    doc = {
        "grid": channel.grid.to_dict(),
        "entries": [
            [[[float(h.real), float(h.imag)] for h in row] for row in tone]
            for tone in channel.H
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_channel(source):
    """Read a ChannelResponse from a JSON file path or parsed document."""
    if isinstance(source, (str, bytes)):
        with open(source) as fh:
            doc = json.load(fh)
    else:
        doc = source
    grid = ToneGrid.from_dict(doc["grid"])
    entries = doc["entries"]
    H = np.array(
        [[[complex(re, im) for re, im in row] for row in tone] for tone in entries],
        dtype=complex,
    )
    return ChannelResponse(H=H, grid=grid)
