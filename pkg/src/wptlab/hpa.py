"""Transmit amplifier models: ideal linear gain and a solid-state
saturation law.

The saturating model is the memoryless AM/AM map

    out = G·in / (1 + (G·|in| / A_s)^{2β})^{1/(2β)},

linear for small drive, hard-limited at A_s for large drive, with β
controlling how sharp the knee is. Only amplitude distortion is modeled;
the map is applied sample by sample to the real passband waveform.

DC-to-RF conversion efficiency is a property of the signal being
amplified, not of the amplifier alone, so for the saturating model it is
exposed as a measured report on a concrete transmit profile.
"""

from dataclasses import dataclass

import numpy as np

from . import numerics
from .errors import DomainError, NonFiniteError, RandomSignalError


@dataclass(frozen=True)
class LinearHpa:
    """Distortion-free amplifier with a fixed DC-to-RF efficiency."""

    gain: float = 1.0
    e1_const: float = 1.0

    def __post_init__(self):
        if self.gain <= 0:
            raise DomainError("amplifier gain must be positive")
        if not 0.0 < self.e1_const <= 1.0:
            raise DomainError("DC-to-RF efficiency must lie in (0, 1]")


@dataclass(frozen=True)
class RappHpa:
    """Saturating amplifier: gain, saturation voltage, knee smoothness."""

    gain: float = 1.0
    a_s: float = 1e-3
    beta: float = 1.0

    def __post_init__(self):
        if self.gain <= 0:
            raise DomainError("amplifier gain must be positive")
        if self.a_s <= 0:
            raise DomainError("saturation voltage must be positive")
        if self.beta < 1.0:
            raise DomainError("smoothness exponent must be at least 1")


def apply(model, input_voltage):
    """Run samples through the amplifier's AM/AM map.

    Accepts real passband samples or complex envelope points; the map
    compresses the magnitude and leaves the phase alone.
    """
    x = np.asarray(input_voltage)
    if not np.iscomplexobj(x):
        x = x.astype(float)
    if not np.all(np.isfinite(x)):
        raise NonFiniteError("amplifier input samples must be finite")
    if isinstance(model, LinearHpa):
        return model.gain * x
    if isinstance(model, RappHpa):
        drive = np.abs(model.gain * x) / model.a_s
        return model.gain * x / (1.0 + drive ** (2.0 * model.beta)) ** (
            1.0 / (2.0 * model.beta)
        )
    raise DomainError(f"unknown amplifier model {type(model).__name__}")


def _deterministic_profiles(signal):
    """Per-antenna amplitude rows of a transmit profile, or None if modulated."""
    x = np.atleast_2d(np.asarray(signal.x, dtype=complex))
    dists = getattr(signal, "dist", None)
    if dists is not None and any(d is not None for d in dists):
        return x, False
    return x, True


def e1_report(model, input_signal, draws=256, seed=0):
    """DC-to-RF efficiency on a concrete transmit profile.

    For the linear model this is its configured constant. For the
    saturating model it is the ratio of time-averaged output power to
    time-averaged input power, summed over antennas, measured on the
    canonical commensurate-carrier waveform. Randomly modulated subbands
    are averaged over `draws` fixed-seed symbol realizations.
    """
    if isinstance(model, LinearHpa):
        return model.e1_const
    x, deterministic = _deterministic_profiles(input_signal)
    m_ant, n_tones = x.shape
    samples = max(4096, numerics.default_samples_per_period(n_tones, 8))
    t = np.arange(samples) / samples

    def power_ratio(rows):
        p_in = 0.0
        p_out = 0.0
        for row in rows:
            y = numerics.passband_waveform(row)(t)
            p_in += float(np.mean(y**2))
            p_out += float(np.mean(apply(model, y) ** 2))
        return p_in, p_out

    if deterministic:
        p_in, p_out = power_ratio(x)
    else:
        dists = input_signal.dist
        p_in = p_out = 0.0
        for d in range(draws):
            rng = numerics.substream(seed, d)
            symbols = np.array(
                [1.0 if dist is None else dist.sample(rng, ()) for dist in dists]
            )
            pi, po = power_ratio(x * symbols[np.newaxis, :])
            p_in += pi
            p_out += po
    if p_in <= 0:
        raise DomainError("efficiency undefined for a zero input signal")
    return p_out / p_in


def papr(signal):
    """Peak-to-average power ratio of a deterministic profile, in dB.

    With several antennas the worst branch is reported, since that is the
    one whose amplifier sets the back-off.
    """
    x = np.atleast_2d(np.asarray(signal.x, dtype=complex))
    dists = getattr(signal, "dist", None)
    if dists is not None and any(d is not None for d in dists):
        raise RandomSignalError(
            "peak-to-average ratio is defined for deterministic profiles; "
            "use a Monte Carlo percentile for modulated signals"
        )
    if not np.any(np.abs(x) > 0):
        raise DomainError("peak-to-average ratio undefined for the zero signal")
    n_tones = x.shape[1]
    samples = max(8192, numerics.default_samples_per_period(n_tones, 2))
    t = np.arange(samples) / samples
    worst = 0.0
    for row in x:
        if not np.any(np.abs(row) > 0):
            continue
        y = numerics.passband_waveform(row)(t)
        p = y**2
        worst = max(worst, float(np.max(p) / np.mean(p)))
    return 10.0 * np.log10(worst)
