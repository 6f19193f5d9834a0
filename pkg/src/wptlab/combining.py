"""Multi-rectifier receive architectures: combine in DC or in RF.

A DC combiner rectifies each antenna's signal separately and adds the
DC outputs; an RF combiner adds the antenna signals before one shared
rectifier. Because rectification is superlinear in amplitude, pooling
RF energy into a single rectifier can beat summing many small DC
contributions, which is why the unconstrained RF architecture is never
worse than DC combining.

Optimizers in this module maximize the voltage in the package-wide
passband convention, the same scaling their reports use, so a returned
report is the optimum of its own objective. The cosine-amplitude form
Σ_i β_i·ζ_i·aⁱ with ζ2 = 1/2, ζ4 = 3/8, ζ6 = 5/16 is exposed alongside
through zeta_voltage and the *_dc_power evaluators for callers who
describe a branch by its cosine amplitude a = |h_q·w| instead.
"""

from dataclasses import dataclass

import numpy as np

from . import numerics, rectenna
from .beamforming import Beamformer
from .errors import DegenerateChannelError, DomainError, ShapeError

_UNIT_SLACK = 1e-12


@dataclass(frozen=True)
class RfCombiner:
    """RF-domain combining weights for Q receive branches.

    The combiner is passive, so its output power cannot exceed its
    input power: ‖w_r‖² ≤ 1. The constrained form models a bank of Q
    phase shifters, each contributing magnitude 1/√Q at angle θ_q.
    """

    w_r: np.ndarray
    constrained: bool = True
    thetas: np.ndarray = None

    def __post_init__(self):
        w = np.asarray(self.w_r, dtype=complex).ravel()
        object.__setattr__(self, "w_r", w)
        if float(np.sum(np.abs(w) ** 2)) > 1.0 + _UNIT_SLACK:
            raise DomainError("combiner output power would exceed its input power")
        if self.constrained:
            q = w.size
            if np.max(np.abs(np.abs(w) - 1.0 / np.sqrt(q))) > 1e-9:
                raise DomainError(
                    "phase-shifter combiner entries must all have magnitude 1/√Q"
                )
            if self.thetas is None:
                object.__setattr__(self, "thetas", np.angle(w))


def _single_tone_rows(channel):
    if channel.n_tones != 1:
        raise ShapeError(
            f"closed-form combining needs a single tone, got {channel.n_tones}"
        )
    return channel.H[0]  # (Q, M)


def zeta_voltage(model, amp_sq):
    """Σ_i β_i·ζ_i·aⁱ as a function of the squared amplitude a²."""
    betas = model.betas
    v = np.zeros_like(np.asarray(amp_sq, dtype=float))
    for i, b in betas.items():
        v = v + b * rectenna.ZETA[i] * np.asarray(amp_sq, dtype=float) ** (i // 2)
    return v


def dc_combining_dc_power(model, channel, w_t):
    """Cosine-convention DC power of the DC combiner: Σ_q v_ζ(|h_q w|)²/R_L."""
    rows = _single_tone_rows(channel)
    amp_sq = np.abs(rows @ np.asarray(w_t, dtype=complex).ravel()) ** 2
    return float(np.sum(zeta_voltage(model, amp_sq) ** 2) / model.r_l)


def rf_combining_dc_power(model, channel, w_t, w_r):
    """Cosine-convention DC power of the RF combiner's single rectifier."""
    rows = _single_tone_rows(channel)
    amp_sq = (
        np.abs(
            np.vdot(np.asarray(w_r, dtype=complex).ravel(), rows @ np.asarray(w_t, dtype=complex).ravel())
        )
        ** 2
    )
    return float(zeta_voltage(model, amp_sq) ** 2 / model.r_l)


def _branch_report(model, amp_sq_per_branch):
    """Passband-convention report for a bank of rectifiers fed amplitudes a_q."""
    betas = model.betas
    v_q = np.zeros_like(amp_sq_per_branch)
    for i, b in betas.items():
        factor = {2: 1.0, 4: 1.5, 6: 2.5}[i]
        v_q = v_q + b * factor * amp_sq_per_branch ** (i // 2)
    p_dc = float(np.sum(v_q**2) / model.r_l)
    p_rf = float(np.sum(amp_sq_per_branch))
    v_eq = float(np.sqrt(p_dc * model.r_l))
    return rectenna.HarvestReport(
        p_rf_r=p_rf,
        v_out=v_eq,
        p_dc_r=p_dc,
        e3=p_dc / p_rf if p_rf > 0 else 0.0,
    )


def dc_combine_harvest(model, channel, beamformer, P):
    """Harvest of the DC-combining bank for a given transmit vector.

    Each branch rectifies the single-tone amplitude |h_q·w| on its own,
    and the DC outputs add. The report's v_out is the equivalent series
    voltage √(P_dc·R_L).
    """
    rows = _single_tone_rows(channel)
    w = np.asarray(beamformer.w, dtype=complex).reshape(-1)
    if w.size != channel.n_tx:
        raise ShapeError(
            f"beamformer length {w.size} does not match {channel.n_tx} antennas"
        )
    if float(np.sum(np.abs(w) ** 2)) > P + 1e-9:
        raise DomainError("beamformer exceeds the transmit power budget")
    amp_sq = np.abs(rows @ w) ** 2
    return _branch_report(model, amp_sq)


def _dc_objective(model, rows):
    betas = model.betas
    b = {i: betas[i] * {2: 1.0, 4: 1.5, 6: 2.5}[i] for i in betas}

    def voltage(u):
        v = b[2] * u
        if 4 in b:
            v = v + b[4] * u**2
        if 6 in b:
            v = v + b[6] * u**3
        return v

    def voltage_slope(u):
        s = np.full_like(u, b[2])
        if 4 in b:
            s = s + 2.0 * b[4] * u
        if 6 in b:
            s = s + 3.0 * b[6] * u**2
        return s

    def value(w):
        z = rows @ w
        return float(np.sum(voltage(np.abs(z) ** 2) ** 2))

    def grad_wirtinger(w):
        z = rows @ w
        u = np.abs(z) ** 2
        coeff = 2.0 * voltage(u) * voltage_slope(u)
        return rows.conj().T @ (coeff * z)

    return value, grad_wirtinger


def optimize_dc_combining(model, channel, P, cfg=numerics.DEFAULT_CONFIG):
    """Transmit vector maximizing the summed DC output of the rectifier bank.

    Gradient ascent on the transmit power ball with matched-filter warm
    starts (per-row and dominant-direction). The report restates the
    winning vector's branch outputs in the same convention the objective
    used, so its p_dc_r is the value that was maximized.
    """
    rows = _single_tone_rows(channel)
    if not np.any(np.abs(rows) > 0):
        raise DegenerateChannelError("all-zero channel matrix")
    if P <= 0:
        raise DomainError("transmit power must be positive")
    q, m = rows.shape
    value, grad_w = _dc_objective(model, rows)

    def value_packed(z):
        return value(z[:m] + 1j * z[m:])

    def grad_packed(z):
        g = grad_w(z[:m] + 1j * z[m:])
        return np.concatenate([2.0 * np.real(g), 2.0 * np.imag(g)])

    starts = []
    _, _, vh = np.linalg.svd(rows)
    starts.append(np.sqrt(P) * np.conj(vh[0]))
    for row in rows:
        nrm = np.linalg.norm(row)
        if nrm > 0:
            starts.append(np.sqrt(P) * np.conj(row) / nrm)
    packed_starts = [np.concatenate([np.real(s), np.imag(s)]) for s in starts]

    z = numerics.projected_gradient_max(
        value_packed,
        dim=2 * m,
        budget=np.sqrt(P),
        cfg=cfg,
        grad=grad_packed,
        constraint="ball",
        nonneg=False,
        starts=packed_starts,
    )
    w = z[:m] + 1j * z[m:]
    # The objective is strictly increasing in every branch amplitude, so
    # the optimum uses the full budget; rescale away any numerical slack.
    nrm = np.linalg.norm(w)
    if nrm > 0:
        w = w * (np.sqrt(P) / nrm)
    bf = Beamformer(w=w[np.newaxis, :], budget=P)
    report = _branch_report(model, np.abs(rows @ w) ** 2)
    return bf, report


def _strongest_tone_channel(channel):
    if channel.n_tones == 1:
        return channel.H[0]
    scores = np.linalg.norm(channel.H.reshape(channel.n_tones, -1), axis=1)
    return channel.H[int(np.argmax(scores))]


def optimize_rf_combining(model, channel, P, cfg=numerics.DEFAULT_CONFIG):
    """Phase-shifter RF combining via alternating optimization.

    Alternates between the matched transmit vector for the combined
    effective channel w_rᴴH and the phase alignment θ_q = arg((H·w_t)_q);
    each half-step can only increase |w_rᴴ·H·w_t|, so the iteration is
    monotone. Random phase restarts guard against poor fixed points. On
    a multi-tone channel the algorithm runs on the strongest tone and the
    resulting tone-independent combiner is returned.
    """
    rows = _strongest_tone_channel(channel)
    if not np.any(np.abs(rows) > 0):
        raise DegenerateChannelError("all-zero channel matrix")
    if P <= 0:
        raise DomainError("transmit power must be positive")
    q, m = rows.shape
    sqrt_q = np.sqrt(q)

    def run(theta0):
        theta = theta0.copy()
        best = -np.inf
        w_t = None
        for _ in range(cfg.max_iters):
            w_r = np.exp(1j * theta) / sqrt_q
            g = rows.conj().T @ w_r  # conj of effective MISO channel
            nrm = np.linalg.norm(g)
            if nrm == 0.0:
                return -np.inf, None, theta
            w_t = np.sqrt(P) * g / nrm
            z = rows @ w_t
            theta = np.angle(z)
            amp = float(np.sum(np.abs(z)) / sqrt_q)
            if amp <= best * (1.0 + cfg.rel_tol):
                best = max(best, amp)
                break
            best = amp
        return best, w_t, theta

    rng = numerics.substream(cfg.seed, 97)
    inits = [np.zeros(q)] + [
        2.0 * np.pi * rng.random(q) for _ in range(max(cfg.restarts, 1))
    ]
    best_amp, best_wt, best_theta = -np.inf, None, None
    for theta0 in inits:
        amp, w_t, theta = run(theta0)
        if amp > best_amp and w_t is not None:
            best_amp, best_wt, best_theta = amp, w_t, theta

    w_r = np.exp(1j * best_theta) / sqrt_q
    combiner = RfCombiner(w_r=w_r, constrained=True, thetas=best_theta)
    bf = Beamformer(w=best_wt[np.newaxis, :], budget=P)
    amp_sq = np.abs(np.vdot(w_r, rows @ best_wt)) ** 2
    report = _branch_report(model, np.array([amp_sq]))
    return bf, combiner, report


def unconstrained_rf_combining(model, channel, P):
    """Upper-bound RF combining: dominant singular pair, no phase-shifter limits.

    w_r is the dominant left singular vector (unit norm, so the passive
    constraint binds exactly) and w_t the matching right vector at full
    power; the single rectifier then sees the largest amplitude any
    linear receive network could deliver.
    """
    rows = _strongest_tone_channel(channel)
    if not np.any(np.abs(rows) > 0):
        raise DegenerateChannelError("all-zero channel matrix")
    u, s, vh = np.linalg.svd(rows)
    w_r = u[:, 0]
    w_t = np.sqrt(P) * np.conj(vh[0])
    combiner = RfCombiner(w_r=w_r, constrained=False)
    bf = Beamformer(w=w_t[np.newaxis, :], budget=P)
    amp_sq = float(s[0] ** 2 * P)
    report = _branch_report(model, np.array([amp_sq]))
    return bf, combiner, report
