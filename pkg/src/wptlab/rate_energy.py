"""Rate-energy tradeoffs: how much information a signal can carry while
still feeding the harvester.

The conflict is structural: information wants dense, noise-like signals
while the fourth-order rectifier term wants peaky, low-entropy ones.
This module quantifies the tradeoff for one subband across input
families (Gaussian variants, flash signaling, finite constellations,
time-shared mixtures), for the two practical receiver architectures
(time switching and power splitting), and for multicarrier Gaussian
inputs where per-tone means act as an embedded deterministic multisine.

Multicarrier energy evaluation uses exact moment algebra: with
independent per-tone symbols c_n = A_n(m_n + ξ_n + jη_n), the waveform
fourth moment reduces by Wick factorization to

    m4 = (3/2)·[Σ_s U_s² + 4(Σd²)(Σp) + 2(Σp)² + Σq² + 2Σ_n U_{2n}q_n]

with d = A·m, U = d∗d, p_n = A_n²(vr_n+vi_n), q_n = A_n²(vr_n−vi_n).
That makes the energy constraint a smooth closed-form function, so the
frontier solver is a deterministic penalty + projected-gradient method
rather than a Monte Carlo loop; Monte Carlo agreement is a test, not a
dependency.
"""

import dataclasses
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from . import numerics, rectenna, waveform
from .channel import ChannelResponse, ToneGrid
from .distributions import (
    AsymGaussian,
    Constellation,
    Cscg,
    Cw,
    InputDistribution,
    Mixture,
    OnOff,
    RealGaussian,
)
from .errors import (
    DomainError,
    InfeasibleError,
    QuadratureError,
    UnsupportedError,
)


@dataclass(frozen=True)
class RePoint:
    """One achievable (rate, energy) pair for a given receiver setting."""

    rate: float
    energy: float
    receiver: str
    param: object = None

    def __post_init__(self):
        if self.rate < -1e-12 or self.energy < -1e-15:
            raise DomainError("rate and energy must be nonnegative")


def pareto_frontier(points):
    """Nondominated subset (no other point better in both coordinates),
    sorted by increasing energy."""
    pts = sorted(points, key=lambda p: (p.energy, p.rate))
    out = []
    best_rate = -np.inf
    for p in reversed(pts):
        if p.rate > best_rate + 1e-15:
            out.append(p)
            best_rate = p.rate
    return list(reversed(out))


# ---------------------------------------------------------------------------
# mutual information on the single-subband AWGN channel
# ---------------------------------------------------------------------------


def _gauss_hermite_entropy(points, probs, sigma2, nodes):
    """Differential entropy (bits) of y = x + n, x discrete, n complex AWGN."""
    t, w = np.polynomial.hermite.hermgauss(nodes)
    # Re n, Im n ~ N(0, σ²/2); Gauss-Hermite scale √(2·σ²/2) = σ.
    sig = np.sqrt(sigma2)
    na, nb = np.meshgrid(t, t, indexing="ij")
    noise = sig * (na + 1j * nb)  # (nodes, nodes)
    weight = np.outer(w, w) / np.pi
    h_bits = 0.0
    for x_s, p_s in zip(points, probs):
        y = x_s + noise
        d2 = np.abs(y[..., np.newaxis] - points[np.newaxis, np.newaxis, :]) ** 2
        dens = np.sum(probs * np.exp(-d2 / sigma2), axis=-1) / (np.pi * sigma2)
        h_bits -= p_s * float(np.sum(weight * np.log2(dens)))
    return h_bits


def _discrete_mi(points, probs, sigma2, nodes=64):
    h_y = _gauss_hermite_entropy(points, probs, sigma2, nodes)
    h_check = _gauss_hermite_entropy(points, probs, sigma2, nodes + 32)
    if abs(h_y - h_check) > 1e-4:
        raise QuadratureError(
            f"entropy quadrature unstable: {h_y:.6f} vs {h_check:.6f} bits"
        )
    return max(0.0, h_check - np.log2(np.pi * np.e * sigma2))


def radial_entropy(pdf, r_max):
    """Entropy (bits) of a circularly symmetric density given p(|y|)."""

    def integrand(r):
        p = pdf(r)
        if p <= 0.0:
            return 0.0
        return -2.0 * np.pi * r * p * np.log2(p)

    val, err = integrate.quad(integrand, 0.0, r_max, limit=200)
    if not np.isfinite(val) or err > max(1e-8, 1e-6 * abs(val)):
        raise QuadratureError(f"radial entropy integral error {err:.2e}")
    return val


def _on_off_mi(ell, peak_amp, sigma2):
    """Rate of flash signaling: off mass plus a uniform-phase ring.

    The random phase belongs to the transmitted symbol, so given x the
    output is just Gaussian and I = h(y) − log2(πeσ²). The output density
    is circularly symmetric, which collapses h(y) to a 1-D radial
    integral; the ring contributes a Rician-type kernel handled with the
    exponentially scaled Bessel function for stability.
    """
    q = 1.0 / ell**2
    a = peak_amp

    def pdf(r):
        off = (1.0 - q) * np.exp(-(r**2) / sigma2)
        ring = q * np.exp(-((r - a) ** 2) / sigma2) * special.i0e(
            2.0 * a * r / sigma2
        )
        return (off + ring) / (np.pi * sigma2)

    r_max = a + 10.0 * np.sqrt(sigma2)
    h_y = radial_entropy(pdf, r_max)
    return max(0.0, h_y - np.log2(np.pi * np.e * sigma2))


def mutual_information(dist, channel_gain, sigma2):
    """Bits per channel use of the single-subband AWGN channel y = h·x + n.

    Gaussian families use their closed forms; discrete and ring-type
    inputs go through numerically controlled quadrature. Time-shared
    mixtures average the rates of their components.
    """
    if sigma2 <= 0:
        raise DomainError("noise variance must be positive")
    g = np.abs(channel_gain) ** 2 / sigma2
    if isinstance(dist, Cw):
        return 0.0
    if isinstance(dist, Cscg):
        return float(np.log2(1.0 + dist.P * g))
    if isinstance(dist, RealGaussian):
        return float(0.5 * np.log2(1.0 + 2.0 * dist.P * g))
    if isinstance(dist, AsymGaussian):
        return float(
            0.5 * np.log2(1.0 + 2.0 * dist.var_re * g)
            + 0.5 * np.log2(1.0 + 2.0 * dist.var_im * g)
        )
    if isinstance(dist, OnOff):
        if dist.ell == 1.0:
            return _on_off_mi(1.0, np.abs(channel_gain) * np.sqrt(dist.P), sigma2)
        peak = dist.ell * np.sqrt(dist.P) * np.abs(channel_gain)
        return _on_off_mi(dist.ell, peak, sigma2)
    if isinstance(dist, Constellation):
        pts = dist.points * channel_gain
        return _discrete_mi(pts, dist.probs, sigma2)
    if isinstance(dist, Mixture):
        return dist.weight * mutual_information(
            dist.first, channel_gain, sigma2
        ) + (1.0 - dist.weight) * mutual_information(dist.second, channel_gain, sigma2)
    raise DomainError(f"no rate rule for distribution {type(dist).__name__}")


def energy_of_distribution(model, dist, channel_gain):
    """Harvested DC power when `dist` is sent through gain `channel_gain`."""
    if not isinstance(dist, InputDistribution):
        raise DomainError(f"expected an input distribution, got {type(dist).__name__}")
    p_rx = dist.power() * np.abs(channel_gain) ** 2
    if p_rx == 0.0:
        return 0.0
    received = dist.scaled(p_rx)
    return rectenna.harvest(model, rectenna.ReceivedSignal.stochastic(received)).p_dc_r


# ---------------------------------------------------------------------------
# single-subband sweeps
# ---------------------------------------------------------------------------


def re_sweep_ideal(model, family, P, channel_gain, sigma2, grid=None):
    """(rate, energy) points for an ideal receiver across a parametric family.

    family: "asym_gaussian" sweeps the real-dimension power P_r ∈ [0, P];
    "on_off" sweeps the peak level l; "mixture" sweeps time-share weight
    and peak level of a CSCG/flash combination.
    """
    points = []
    if family == "asym_gaussian":
        values = np.linspace(0.0, P, 33) if grid is None else np.asarray(grid)
        for p_r in values:
            d = AsymGaussian(var_re=p_r, var_im=P - p_r)
            points.append(
                RePoint(
                    rate=mutual_information(d, channel_gain, sigma2),
                    energy=energy_of_distribution(model, d, channel_gain),
                    receiver="ideal",
                    param=float(p_r),
                )
            )
    elif family == "on_off":
        values = np.geomspace(1.0, 8.0, 25) if grid is None else np.asarray(grid)
        for ell in values:
            d = OnOff(float(ell), P)
            points.append(
                RePoint(
                    rate=mutual_information(d, channel_gain, sigma2),
                    energy=energy_of_distribution(model, d, channel_gain),
                    receiver="ideal",
                    param=float(ell),
                )
            )
    elif family == "mixture":
        if grid is None:
            grid = [
                (w, ell)
                for w in np.linspace(0.0, 1.0, 11)
                for ell in (1.0, 2.0, 4.0, 8.0)
            ]
        for w, ell in grid:
            d = Mixture(float(w), Cscg(P), OnOff(float(ell), P))
            points.append(
                RePoint(
                    rate=mutual_information(d, channel_gain, sigma2),
                    energy=energy_of_distribution(model, d, channel_gain),
                    receiver="ideal",
                    param=(float(w), float(ell)),
                )
            )
    else:
        raise DomainError(f"unknown sweep family {family!r}")
    return points


def re_sweep_receiver(
    model, dist_info, dist_energy, channel_gain, sigma2, receiver, grid=None
):
    """(rate, energy) points for a time-switching or power-splitting receiver.

    Time switching alternates the energy-favored signal (fraction τ) with
    the info-favored one; power splitting transmits the info-favored
    signal and diverts a fraction ρ of its received power to the
    harvester, with the full processing noise hitting the decoder branch
    (worst-case noise convention).
    """
    fractions = np.linspace(0.0, 1.0, 21) if grid is None else np.asarray(grid)
    points = []
    if receiver == "ts":
        r_info = mutual_information(dist_info, channel_gain, sigma2)
        e_info = energy_of_distribution(model, dist_info, channel_gain)
        e_energy = energy_of_distribution(model, dist_energy, channel_gain)
        for tau in fractions:
            points.append(
                RePoint(
                    rate=(1.0 - tau) * r_info,
                    energy=tau * e_energy + (1.0 - tau) * e_info,
                    receiver="ts",
                    param=float(tau),
                )
            )
    elif receiver == "ps":
        for rho in fractions:
            g_info = np.sqrt(max(0.0, 1.0 - rho)) * channel_gain
            g_energy = np.sqrt(rho) * channel_gain
            points.append(
                RePoint(
                    rate=mutual_information(dist_info, g_info, sigma2),
                    energy=energy_of_distribution(model, dist_info, g_energy),
                    receiver="ps",
                    param=float(rho),
                )
            )
    else:
        raise DomainError(f"unknown receiver {receiver!r} (use 'ts' or 'ps')")
    return points


# ---------------------------------------------------------------------------
# multicarrier Gaussian inputs
# ---------------------------------------------------------------------------


def water_filling(gains_sq, sigma2, P):
    """Closed-form capacity allocation: p_n = max(0, μ − σ²/g_n), Σp = P."""
    inv = sigma2 / np.asarray(gains_sq, dtype=float)
    order = np.argsort(inv)
    p = np.zeros_like(inv)
    for k in range(inv.size, 0, -1):
        active = order[:k]
        mu = (P + np.sum(inv[active])) / k
        if mu > inv[active[-1]]:
            p[active] = mu - inv[active]
            break
    return p


def _gains_of(channel):
    if hasattr(channel, "siso_gains"):
        return channel.siso_gains()
    return np.asarray(channel, dtype=complex).ravel()


def _as_channel(gains):
    gains = np.asarray(gains, dtype=complex).ravel()
    grid = ToneGrid(
        f0=1e9, delta_f=1e6, n_tones=gains.size, bandwidth_fw=1e6
    )
    return ChannelResponse(H=gains[:, np.newaxis, np.newaxis], grid=grid)


@dataclass(frozen=True)
class GaussianTonePlan:
    """One multicarrier frontier point: per-tone means and dimension variances."""

    rate: float
    energy: float
    e_target: float
    mean: np.ndarray
    var_re: np.ndarray
    var_im: np.ndarray

    def to_re_point(self):
        return RePoint(
            rate=self.rate, energy=self.energy, receiver="ideal", param=self.e_target
        )


def _mc_energy_terms(amps, z):
    """m2, m4 and their gradients for the mean+Gaussian multicarrier signal.

    z packs [m, vr, vi] per tone; amps are the tone gain magnitudes. Means
    live in the phase-aligned received frame, so d = amps·m is real.
    """
    n = amps.size
    m, vr, vi = z[:n], z[n : 2 * n], z[2 * n :]
    a2 = amps**2
    d = amps * m
    p = a2 * (vr + vi)
    q = a2 * (vr - vi)
    u = np.convolve(d, d)
    sum_d2 = float(np.sum(d**2))
    sum_p = float(np.sum(p))
    u_even = u[:: 2][:n]  # U_{2k} for k = 0..n−1

    m2 = sum_d2 + sum_p
    m4 = 1.5 * (
        float(np.sum(u**2))
        + 4.0 * sum_d2 * sum_p
        + 2.0 * sum_p**2
        + float(np.sum(q**2))
        + 2.0 * float(np.sum(u_even * q))
    )

    # Gradients w.r.t. d, p, q, then chained back to (m, vr, vi).
    corr = np.correlate(u, d, mode="valid")
    dm4_dd = 1.5 * (4.0 * corr + 8.0 * d * sum_p)
    # The Σ U_{2k}·q_k term: ∂U_{2k}/∂d_j = 2·d_{2k−j} when in range.
    q_spread = np.zeros(2 * n - 1)
    q_spread[::2] = q
    cross = 2.0 * np.correlate(q_spread, d, mode="valid")
    dm4_dd += 1.5 * 2.0 * cross
    dm4_dp = 1.5 * (4.0 * sum_d2 + 4.0 * sum_p) * np.ones(n)
    dm4_dq = 1.5 * (2.0 * q + 2.0 * u_even)

    grad_m = dm4_dd * amps
    grad_vr = (dm4_dp + dm4_dq) * a2
    grad_vi = (dm4_dp - dm4_dq) * a2
    m4_grad = np.concatenate([grad_m, grad_vr, grad_vi])

    m2_grad = np.concatenate([2.0 * d * amps, a2, a2])
    return m2, m4, m2_grad, m4_grad


def _mc_energy(model, amps, z):
    m2, m4, m2_g, m4_g = _mc_energy_terms(amps, z)
    betas = model.betas
    v = betas[2] * m2 + betas[4] * m4
    grad_v = betas[2] * m2_g + betas[4] * m4_g
    energy = v**2 / model.r_l
    return energy, (2.0 * v / model.r_l) * grad_v


def _mc_rate(snr2, z):
    """Rate and gradient; snr2 = 2|h_n|²/σ² per tone."""
    n = snr2.size
    vr, vi = z[n : 2 * n], z[2 * n :]
    rate = 0.5 * np.sum(np.log2(1.0 + snr2 * vr)) + 0.5 * np.sum(
        np.log2(1.0 + snr2 * vi)
    )
    g_vr = 0.5 * snr2 / (np.log(2.0) * (1.0 + snr2 * vr))
    g_vi = 0.5 * snr2 / (np.log(2.0) * (1.0 + snr2 * vi))
    return float(rate), np.concatenate([np.zeros(n), g_vr, g_vi])


def _mc_project(z, n, P):
    """Euclidean projection onto {m ≥ 0, v ≥ 0, Σm² + Σv ≤ P}.

    KKT structure: m = max(m₀,0)/(1+λ), v = max(0, v₀ − λ/2) with a
    scalar λ ≥ 0 found by bisection on the budget residual.
    """
    m0 = np.maximum(z[:n], 0.0)
    v0 = np.maximum(z[n:], 0.0)

    def used(lam):
        m = m0 / (1.0 + lam)
        v = np.maximum(0.0, v0 - 0.5 * lam)
        return float(np.sum(m**2) + np.sum(v))

    if used(0.0) <= P:
        return np.concatenate([m0, np.maximum(0.0, z[n:])])
    # λ = 2·max(v₀) kills every variance; beyond that only means remain,
    # and means alone fit once (1+λ)² ≥ Σm₀²/P.
    hi = max(2.0 * float(np.max(v0, initial=0.0)), 1.0)
    if np.sum(m0**2) > 0:
        hi = max(hi, np.sqrt(np.sum(m0**2) / P))
    while used(hi) > P:
        hi *= 2.0
    lo = 0.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if used(mid) > P:
            lo = mid
        else:
            hi = mid
    lam = hi
    m = m0 / (1.0 + lam)
    v = np.maximum(0.0, v0 - 0.5 * lam)
    return np.concatenate([m, v])


def re_multicarrier_gaussian(
    model, channel, sigma2, P, e_targets, cfg=numerics.DEFAULT_CONFIG
):
    """Rate-energy frontier over per-tone nonzero-mean Gaussian inputs.

    Variables per tone: a phase-aligned mean and two dimension variances.
    For each energy target the solver maximizes the rate under the power
    budget with an increasing quadratic penalty on the energy shortfall,
    warm-started from water-filling (pure information), the deterministic
    optimum (pure energy), and the previous target's solution. Returned
    points are polished onto the target by convex blending toward the
    deterministic endpoint, so reported energies meet their targets.
    """
    gains = _gains_of(channel)
    n = gains.size
    if n < 2:
        raise DomainError("multicarrier design needs at least two tones")
    if model.n_o != 4:
        raise UnsupportedError("frontier solver implemented for the order-4 model")
    if sigma2 <= 0 or P <= 0:
        raise DomainError("noise variance and power budget must be positive")
    amps = np.abs(gains)
    snr2 = 2.0 * amps**2 / sigma2

    det_spec = waveform.optimize_allocation(_as_channel(gains), model, P, cfg)
    det_m = np.abs(det_spec.x[0])
    z_det = np.concatenate([det_m, np.zeros(2 * n)])
    e_max, _ = _mc_energy(model, amps, z_det)

    wf = water_filling(amps**2, sigma2, P)
    z_wf = np.concatenate([np.zeros(n), wf / 2.0, wf / 2.0])
    # The symmetric point is a saddle in the variance-asymmetry direction
    # (the energy gradient cannot break vr = vi), so seed asymmetric and
    # single-tone flash-like starts explicitly.
    z_asym = np.concatenate([np.zeros(n), wf, np.zeros(n)])
    z_peak = np.zeros(3 * n)
    z_peak[n + int(np.argmax(amps))] = P

    project = lambda zz: _mc_project(zz, n, P)
    stage_cfg = dataclasses.replace(
        cfg, restarts=1, max_iters=max(150, cfg.max_iters // 2)
    )

    def energy_value(zz):
        return _mc_energy(model, amps, zz)[0]

    def energy_grad(zz):
        return _mc_energy(model, amps, zz)[1]

    z_emax = numerics.projected_gradient_max(
        energy_value,
        dim=3 * n,
        budget=np.sqrt(P),
        cfg=dataclasses.replace(cfg, restarts=2),
        grad=energy_grad,
        constraint=project,
        starts=[z_det, z_asym, z_peak],
    )
    e_family_max = energy_value(z_emax)
    e_ref = max(e_family_max, 1e-300)

    def solve_target(e_bar, extra_starts):
        starts = [z_wf, z_asym, z_det, z_emax, 0.5 * (z_wf + z_det)] + extra_starts

        def make_penalty(mu):
            def value(zz):
                rate, _ = _mc_rate(snr2, zz)
                energy, _ = _mc_energy(model, amps, zz)
                viol = max(0.0, (e_bar - energy) / e_ref)
                return rate - mu * viol**2

            def grad(zz):
                _, g_rate = _mc_rate(snr2, zz)
                energy, g_energy = _mc_energy(model, amps, zz)
                viol = max(0.0, (e_bar - energy) / e_ref)
                return g_rate + (2.0 * mu * viol / e_ref) * g_energy

            return value, grad

        value, grad = make_penalty(1e2)
        z = numerics.projected_gradient_max(
            value, dim=3 * n, budget=np.sqrt(P), cfg=cfg, grad=grad,
            constraint=project, starts=starts,
        )
        for mu in (1e4, 1e6):
            value, grad = make_penalty(mu)
            z = numerics.projected_gradient_max(
                value, dim=3 * n, budget=np.sqrt(P), cfg=stage_cfg, grad=grad,
                constraint=project, starts=[z, z_emax],
            )
        # Polish feasibility: blend toward the family energy maximizer.
        energy, _ = _mc_energy(model, amps, z)
        if energy < e_bar:
            lo_t, hi_t = 0.0, 1.0
            for _ in range(80):
                mid = 0.5 * (lo_t + hi_t)
                zm = (1.0 - mid) * z + mid * z_emax
                if _mc_energy(model, amps, zm)[0] < e_bar:
                    lo_t = mid
                else:
                    hi_t = mid
            z = (1.0 - hi_t) * z + hi_t * z_emax
        return z

    order = np.argsort(np.asarray(e_targets, dtype=float))
    solutions = [None] * len(e_targets)
    prev = []
    for idx in order:
        e_bar = float(e_targets[idx])
        if e_bar > e_max * (1.0 + 1e-9):
            raise InfeasibleError(
                f"energy target {e_bar:.3e} W exceeds the deterministic "
                f"maximum {e_max:.3e} W"
            )
        z = solve_target(e_bar, prev)
        prev = [z]
        solutions[idx] = z

    # A solution found for one target is feasible for every smaller one,
    # so give each target the best-rate feasible candidate from the whole
    # run. This keeps the reported frontier monotone even when individual
    # penalty solves land in different basins.
    results = []
    for idx, z in enumerate(solutions):
        e_bar = float(e_targets[idx])
        best = z
        best_rate = _mc_rate(snr2, z)[0]
        for other in solutions:
            if other is z:
                continue
            if _mc_energy(model, amps, other)[0] >= e_bar - 1e-12 * e_ref:
                r = _mc_rate(snr2, other)[0]
                if r > best_rate:
                    best, best_rate = other, r
        energy, _ = _mc_energy(model, amps, best)
        results.append(
            GaussianTonePlan(
                rate=best_rate,
                energy=energy,
                e_target=e_bar,
                mean=best[:n].copy(),
                var_re=best[n : 2 * n].copy(),
                var_im=best[2 * n :].copy(),
            )
        )
    return results


def multicarrier_signal_spec(plan, gains):
    """Transmit profile realizing a frontier point (for Monte Carlo checks).

    Each tone carries a unit deterministic weight that pre-compensates the
    channel phase and a nonzero-mean Gaussian symbol law in the aligned
    frame.
    """
    gains = np.asarray(gains, dtype=complex).ravel()
    x = np.exp(-1j * np.angle(gains))
    dists = []
    for k, (m, vr, vi) in enumerate(zip(plan.mean, plan.var_re, plan.var_im)):
        if vr == 0.0 and vi == 0.0 and m == 0.0:
            dists.append(None)
            x[k] = 0.0
        else:
            dists.append(AsymGaussian(var_re=vr, var_im=vi, mean_re=m))
    return waveform.SignalSpec(x=x[np.newaxis, :], dist=tuple(dists), power=None)


def re_irs(model, g_d, g_r, g_i, group_size, sigma2, P, e_targets,
           cfg=numerics.DEFAULT_CONFIG):
    """Frontier with a reflecting surface folded into the channel.

    The surface is configured once, on the tone with the largest pooled
    reflect-incident product, and that frequency-flat configuration is
    applied to every tone before the multicarrier frontier runs.
    """
    from . import irs as irs_mod

    g_d = np.asarray(g_d, dtype=complex).ravel()
    n = g_d.size
    g_r = np.asarray(g_r, dtype=complex).reshape(n, -1)
    g_i = np.asarray(g_i, dtype=complex).reshape(n, -1)
    if g_r.shape[1] == 0:
        eff = g_d
    else:
        scores = np.linalg.norm(g_r, axis=1) * np.linalg.norm(g_i, axis=1)
        n_star = int(np.argmax(scores))
        cfg_irs, _ = irs_mod.optimize_group_connected(
            g_d[n_star], g_r[n_star], g_i[n_star], group_size
        )
        eff = np.array(
            [cfg_irs.effective_channel(g_d[k], g_r[k], g_i[k]) for k in range(n)]
        )
    return re_multicarrier_gaussian(model, eff, sigma2, P, e_targets, cfg)
