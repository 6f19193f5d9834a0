"""Spatial-domain transmit techniques for wireless power.

Per-tone matched beamforming concentrates the array gain on the
harvester; combined with the frequency-domain allocation it is the
optimal single-user transmit strategy, and the decoupling is exact. At
the other extreme, phase sweeping needs no channel knowledge at all: it
deliberately creates fast amplitude fluctuations across antennas, which
a fourth-order harvester converts into extra DC on average.
"""

from dataclasses import dataclass

import numpy as np

from . import numerics, rectenna, waveform
from .errors import DimensionError, DomainError, ShapeError, ZeroChannelError


@dataclass(frozen=True)
class Beamformer:
    """Per-tone transmit vectors w[n] (N × M) under a total norm budget."""

    w: np.ndarray
    budget: float

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.w, dtype=complex))
        object.__setattr__(self, "w", w)
        used = float(np.sum(np.abs(w) ** 2))
        if used > self.budget + 1e-12:
            raise DomainError(
                f"beamformer norm {used:.6g} exceeds the budget {self.budget:.6g}"
            )

    def received_amplitudes(self, channel):
        """Per-tone effective amplitudes Σ_m h[n, 0, m]·w[n, m]."""
        if channel.n_rx != 1:
            raise ShapeError("received amplitudes defined for a single output")
        return np.einsum("nm,nm->n", channel.H[:, 0, :], self.w)


def mrt(channel, per_tone_power):
    """Per-tone matched transmission: w_n = √p_n · conj(h_n)/‖h_n‖.

    Each tone's received amplitude becomes √p_n·‖h_n‖, the largest any
    unit-power vector can deliver on that tone.
    """
    if channel.n_rx != 1:
        raise ShapeError("matched transmission defined for a single output")
    gains = channel.H[:, 0, :]  # (N, M)
    p = np.broadcast_to(
        np.asarray(per_tone_power, dtype=float), (channel.n_tones,)
    ).copy()
    if np.any(p < 0):
        raise DomainError("per-tone powers must be nonnegative")
    norms = np.linalg.norm(gains, axis=1)
    w = np.zeros_like(gains)
    for n in range(channel.n_tones):
        if p[n] == 0.0:
            continue
        if norms[n] == 0.0:
            raise ZeroChannelError(
                f"tone {n} has a zero channel; no matched direction exists"
            )
        w[n] = np.sqrt(p[n]) * np.conj(gains[n]) / norms[n]
    return Beamformer(w=w, budget=float(np.sum(p)))


def joint_bf_waveform(channel, model, P, cfg=numerics.DEFAULT_CONFIG):
    """Jointly optimal space-frequency profile for a single harvester.

    Matched direction per tone, then the frequency-domain allocation run
    on the effective gains ‖h_n‖; for one user this decoupling loses
    nothing.
    """
    if channel.n_rx != 1:
        raise ShapeError("joint design defined for a single output")
    x = waveform.matched_single_user_profile(channel, model, P, cfg)
    return waveform.SignalSpec(x=x, power=P)


def phase_sweep_weights(n_tx, phase_slots, P, seed=0):
    """Per-slot transmit weights for channel-free phase sweeping.

    Each antenna sends the carrier at power P/M with an independent
    uniform phase redrawn every slot. Built from the seed alone, so the
    transmitted signal cannot depend on any channel realization.
    """
    if n_tx < 1:
        raise DomainError("need at least one antenna")
    if phase_slots < 1:
        raise DomainError("need at least one phase slot")
    rng = numerics.substream(seed, 0)
    psi = 2.0 * np.pi * rng.random((phase_slots, n_tx))
    return np.sqrt(P / n_tx) * np.exp(1j * psi)


@dataclass(frozen=True)
class DiversityReport:
    """Fading-averaged comparison of phase sweeping against one antenna."""

    v_out_sweep: float
    v_out_single: float
    p_dc_sweep: float
    p_dc_single: float
    p_rf_sweep: float
    p_rf_single: float
    se_v_sweep: float
    se_v_single: float
    trials: int


def _cw_voltage(model, amp2):
    """Harvester voltage for a carrier with squared amplitude amp2."""
    betas = model.betas
    v = betas[2] * amp2
    if 4 in betas:
        v += 1.5 * betas[4] * amp2**2
    if 6 in betas:
        v += 2.5 * betas[6] * amp2**3
    return v


def transmit_diversity_eval(model, n_tx, fading_trials, phase_slots, P, seed=0):
    """Average harvester output with phase sweeping versus a single antenna.

    Per fading draw (i.i.d. Rayleigh across antennas) the sweep cycles
    the channel-free per-slot weights; the single-antenna baseline sends
    the full power on the first antenna of the same draw, so both sides
    share fading randomness. Second-moment terms agree in expectation;
    any average gain comes entirely from the higher moments.
    """
    if n_tx < 2:
        raise DomainError("phase sweeping needs at least two antennas")
    if fading_trials < 1:
        raise DomainError("need at least one fading draw")
    weights = phase_sweep_weights(n_tx, phase_slots, P, seed=seed)
    v_sweep = np.empty(fading_trials)
    v_single = np.empty(fading_trials)
    rf_sweep = np.empty(fading_trials)
    rf_single = np.empty(fading_trials)
    for t in range(fading_trials):
        rng = numerics.substream(seed + 1, t)
        h = (rng.standard_normal(n_tx) + 1j * rng.standard_normal(n_tx)) / np.sqrt(2.0)
        amp2 = np.abs(weights @ h) ** 2  # per-slot received power
        v_sweep[t] = float(np.mean(_cw_voltage(model, amp2)))
        rf_sweep[t] = float(np.mean(amp2))
        base2 = P * np.abs(h[0]) ** 2
        v_single[t] = _cw_voltage(model, base2)
        rf_single[t] = base2
    return DiversityReport(
        v_out_sweep=float(np.mean(v_sweep)),
        v_out_single=float(np.mean(v_single)),
        p_dc_sweep=float(np.mean(v_sweep)) ** 2 / model.r_l,
        p_dc_single=float(np.mean(v_single)) ** 2 / model.r_l,
        p_rf_sweep=float(np.mean(rf_sweep)),
        p_rf_single=float(np.mean(rf_single)),
        se_v_sweep=float(np.std(v_sweep, ddof=1) / np.sqrt(fading_trials)),
        se_v_single=float(np.std(v_single, ddof=1) / np.sqrt(fading_trials)),
        trials=fading_trials,
    )
