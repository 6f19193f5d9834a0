"""Transmit-signal design across frequency for wireless power.

The harvester rewards two competing things: putting power on strong
tones (second moment) and spreading it over many tones that add
coherently in time (fourth moment). The optimizer in this module works
in amplitude space with phases pre-aligned to the channel, which is
optimal and turns the design into a smooth problem over the nonnegative
power ball. Scaled-matched-filter and uniform baselines are kept both as
heuristics and as warm starts, so the optimizer provably never returns
anything worse than they achieve.

Multi-user variants optimize a joint space-frequency profile x[m][n] for
a weighted sum of the users' DC powers, or the minimum of them via a
smoothed-min homotopy.
"""

from dataclasses import dataclass

import numpy as np

from . import numerics, rectenna
from .channel import ChannelResponse
from .distributions import dist_from_dict, dist_to_dict
from .errors import (
    DegenerateChannelError,
    DimensionError,
    DomainError,
    NonFiniteError,
    ShapeError,
    UnsupportedError,
)

_POWER_SLACK = 1e-12


@dataclass(frozen=True)
class SignalSpec:
    """Transmit profile: deterministic weights plus optional per-subband laws.

    The symbol sent on antenna m, subband n is x[m, n]·s_n with s_n = 1
    for unmodulated subbands and s_n drawn from dist[n] otherwise, so the
    average power of subband n is ‖x[:, n]‖² times the law's power.
    """

    x: np.ndarray
    dist: tuple = None
    power: float = None

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=complex))
        if x.ndim != 2:
            raise DimensionError(f"profile must be antennas × subbands, got {x.shape}")
        if not np.all(np.isfinite(x)):
            raise NonFiniteError("profile amplitudes must be finite")
        object.__setattr__(self, "x", x)
        n = x.shape[1]
        if self.dist is None:
            object.__setattr__(self, "dist", (None,) * n)
        else:
            d = tuple(self.dist)
            if len(d) != n:
                raise DimensionError(
                    f"{len(d)} subband laws for {n} subbands"
                )
            object.__setattr__(self, "dist", d)
        total = self.total_power()
        if self.power is None:
            object.__setattr__(self, "power", total)
        elif total > self.power + _POWER_SLACK:
            raise DomainError(
                f"profile power {total:.6g} exceeds the budget {self.power:.6g}"
            )

    @property
    def n_antennas(self):
        return self.x.shape[0]

    @property
    def n_subbands(self):
        return self.x.shape[1]

    def total_power(self):
        col = np.sum(np.abs(self.x) ** 2, axis=0)
        scale = np.array(
            [1.0 if d is None else d.power() for d in self.dist]
        )
        return float(np.sum(col * scale))

    def per_tone_power(self):
        col = np.sum(np.abs(self.x) ** 2, axis=0)
        scale = np.array([1.0 if d is None else d.power() for d in self.dist])
        return col * scale

    def to_dict(self):
        return {
            "x_re": np.real(self.x).tolist(),
            "x_im": np.imag(self.x).tolist(),
            "dist": [dist_to_dict(d) for d in self.dist],
            "power_watt": self.power,
        }

    @classmethod
    def from_dict(cls, data):
        x = np.asarray(data["x_re"], dtype=float) + 1j * np.asarray(
            data["x_im"], dtype=float
        )
        dist = tuple(dist_from_dict(d) for d in data.get("dist", [None] * x.shape[1]))
        return cls(x=x, dist=dist, power=float(data["power_watt"]))


@dataclass(frozen=True)
class EnergyRegionPoint:
    """One point of the multi-user harvested-energy region."""

    p_dc: tuple
    weights: tuple

    def __post_init__(self):
        object.__setattr__(self, "p_dc", tuple(float(p) for p in self.p_dc))
        object.__setattr__(self, "weights", tuple(float(v) for v in self.weights))
        if any(p < 0 for p in self.p_dc):
            raise DomainError("harvested powers cannot be negative")


def _siso_gains(channel):
    h = channel.siso_gains()
    return h


def optimal_phases(channel):
    """Per-tone transmit phases that make all received tones add in phase."""
    h = _siso_gains(channel)
    return -np.angle(h)


def smf_allocation(channel, beta_exp, P):
    """Scaled matched filter: amplitude on tone n proportional to A_n^β.

    β = 0 is uniform, β = 1 matches the channel, large β concentrates on
    the strongest tone; β = ∞ is accepted and selects it outright.
    """
    if beta_exp < 0:
        raise DomainError(f"matched-filter exponent must be ≥ 0, got {beta_exp}")
    if P < 0:
        raise DomainError("power budget must be nonnegative")
    h = _siso_gains(channel)
    amps = np.abs(h)
    if not np.any(amps > 0):
        raise DegenerateChannelError("all tone gains are zero")
    if np.isinf(beta_exp):
        s2 = np.zeros(amps.size)
        s2[int(np.argmax(amps))] = P
    else:
        profile = amps ** (2.0 * beta_exp)
        s2 = P * profile / np.sum(profile)
    x = np.sqrt(s2) * np.exp(1j * optimal_phases(channel))
    return SignalSpec(x=x[np.newaxis, :], power=P)


def _allocation_objective(model, amps):
    """v_out as a function of nonnegative tone amplitudes, channel folded in."""
    betas = model.betas
    b2 = betas[2]
    b4 = betas.get(4, 0.0)

    def value(s):
        c = s * amps
        v = b2 * float(np.sum(c**2))
        if b4:
            v += b4 * rectenna.m4_deterministic(c)
        return v

    def grad(s):
        c = s * amps
        g = 2.0 * b2 * c
        if b4:
            g = g + 2.0 * b4 * np.real(rectenna.m4_gradient(c))
        return g * amps

    return value, grad


def _heuristic_amplitudes(amps, P):
    """Warm starts: SMF β ∈ {1, 3}, uniform, strongest-tone."""
    n = amps.size
    starts = []
    for beta_exp in (1.0, 3.0):
        profile = amps ** (2.0 * beta_exp)
        total = np.sum(profile)
        if total > 0:
            starts.append(np.sqrt(P * profile / total))
    starts.append(np.full(n, np.sqrt(P / n)))
    single = np.zeros(n)
    single[int(np.argmax(amps))] = np.sqrt(P)
    starts.append(single)
    return starts


def optimize_allocation(channel, model, P, cfg=numerics.DEFAULT_CONFIG):
    """Power allocation across tones maximizing the harvester output voltage.

    Runs projected gradient ascent over the nonnegative amplitude ball
    with the heuristic allocations as warm starts, so the result can only
    improve on them. The linear (order-2) model degenerates to the
    strongest single tone and is short-circuited to it.
    """
    if P < 0:
        raise DomainError("power budget must be nonnegative")
    h = _siso_gains(channel)
    amps = np.abs(h)
    if not np.any(amps > 0):
        raise DegenerateChannelError("all tone gains are zero")
    if model.n_o == 2:
        return smf_allocation(channel, np.inf, P)
    if model.n_o != 4:
        raise UnsupportedError(
            "allocation optimization is implemented for the order-4 model"
        )
    n = amps.size
    phases = optimal_phases(channel)
    if n == 1:
        x = np.array([[np.sqrt(P) * np.exp(1j * phases[0])]])
        return SignalSpec(x=x, power=P)
    value, grad = _allocation_objective(model, amps)
    s = numerics.projected_gradient_max(
        value,
        dim=n,
        budget=np.sqrt(P),
        cfg=cfg,
        grad=grad,
        constraint="ball",
        nonneg=True,
        starts=_heuristic_amplitudes(amps, P),
    )
    x = s * np.exp(1j * phases)
    return SignalSpec(x=x[np.newaxis, :], power=P)


# ---------------------------------------------------------------------------
# multi-user energy region
# ---------------------------------------------------------------------------


def _check_user_channels(channels):
    if len(channels) < 1:
        raise DomainError("need at least one user channel")
    n = channels[0].n_tones
    m = channels[0].n_tx
    for ch in channels:
        if ch.n_rx != 1:
            raise ShapeError("multi-user energy design expects single-output users")
        if ch.n_tones != n or ch.n_tx != m:
            raise DimensionError("user channels must share grid and array size")
    return n, m


def _user_gain_matrices(channels):
    """Per-user (N, M) matrices of path gains."""
    return [ch.H[:, 0, :] for ch in channels]


def per_user_dc(x, channels, model):
    """Harvested DC power of each user for a deterministic profile x (M×N)."""
    x = np.atleast_2d(np.asarray(x, dtype=complex))
    out = []
    for gains in _user_gain_matrices(channels):
        c = np.einsum("nm,mn->n", gains, x)
        report = rectenna.harvest(model, rectenna.ReceivedSignal.deterministic(c))
        out.append(report.p_dc_r)
    return np.asarray(out)


def _voltage_and_wirtinger(c, model):
    """v_out and ∂v/∂conj(c) for a deterministic per-tone amplitude vector."""
    betas = model.betas
    v = betas[2] * float(np.sum(np.abs(c) ** 2))
    g = betas[2] * c
    if 4 in betas:
        u = np.convolve(c, c)
        v += 1.5 * betas[4] * float(np.sum(np.abs(u) ** 2))
        n = c.size
        conv_grad = np.array(
            [np.sum(u[k : k + n] * np.conj(c)) for k in range(n)]
        )
        g = g + 3.0 * betas[4] * conv_grad
    if 6 in betas:
        u = np.convolve(c, c)
        w = np.convolve(u, c)
        v += 2.5 * betas[6] * float(np.sum(np.abs(w) ** 2))
        n = c.size
        conv_grad6 = np.array(
            [np.sum(w[k : k + 2 * n - 1] * np.conj(u)) for k in range(n)]
        )
        g = g + 7.5 * betas[6] * conv_grad6
    return v, g


def _pack(x):
    return np.concatenate([np.real(x).ravel(), np.imag(x).ravel()])


def _unpack(z, m, n):
    half = m * n
    return (z[:half] + 1j * z[half:]).reshape(m, n)


def _weighted_objective(channels, model, weights):
    gains = _user_gain_matrices(channels)

    def value_and_grad(x):
        total = 0.0
        grad_x = np.zeros_like(x)
        for w_k, g_k in zip(weights, gains):
            if w_k == 0.0:
                continue
            c = np.einsum("nm,mn->n", g_k, x)
            v, g_c = _voltage_and_wirtinger(c, model)
            total += w_k * v**2 / model.r_l
            # ∂(v²/R_L)/∂conj(x[m,n]) = (2v/R_L)·g_c[n]·conj(h[n,m])
            grad_x += w_k * (2.0 * v / model.r_l) * np.conj(g_k.T) * g_c[np.newaxis, :]
        return total, grad_x

    return value_and_grad


def matched_single_user_profile(channel, model, P, cfg=numerics.DEFAULT_CONFIG):
    """Space-frequency profile for one user: per-tone matched direction,
    then the single-user allocation across tones on the effective gains.

    Decoupling space and frequency this way is optimal for a single
    user, and the result doubles as a warm start for the joint
    multi-user solvers."""
    gains = channel.H[:, 0, :]  # (N, M)
    norms = np.linalg.norm(gains, axis=1)
    eff = ChannelResponse(
        H=norms[:, np.newaxis, np.newaxis].astype(complex), grid=channel.grid
    )
    spec = optimize_allocation(eff, model, P, cfg)
    s = np.abs(spec.x[0])
    x = np.zeros((gains.shape[1], gains.shape[0]), dtype=complex)
    for n in range(gains.shape[0]):
        if norms[n] > 0:
            x[:, n] = s[n] * np.conj(gains[n]) / norms[n]
    return x


def weighted_sum_energy(channels, model, weights, P, cfg=numerics.DEFAULT_CONFIG):
    """Maximize Σ_k v_k·P_dc,k over a joint space-frequency profile.

    Warm starts include every user's single-user optimum, which makes the
    result dominate any time-sharing of those single-user solutions.
    """
    n, m = _check_user_channels(channels)
    weights = np.asarray(weights, dtype=float)
    if weights.size != len(channels) or np.any(weights < 0):
        raise DomainError("need one nonnegative weight per user")
    if P < 0:
        raise DomainError("power budget must be nonnegative")
    vg = _weighted_objective(channels, model, weights)

    def value(z):
        return vg(_unpack(z, m, n))[0]

    def grad(z):
        g = vg(_unpack(z, m, n))[1]
        return _pack(2.0 * g)

    starts = [_pack(matched_single_user_profile(ch, model, P, cfg)) for ch in channels]
    z = numerics.projected_gradient_max(
        value,
        dim=2 * m * n,
        budget=np.sqrt(P),
        cfg=cfg,
        grad=grad,
        constraint="ball",
        nonneg=False,
        starts=starts,
    )
    x = _unpack(z, m, n)
    spec = SignalSpec(x=x, power=P)
    point = EnergyRegionPoint(
        p_dc=tuple(per_user_dc(x, channels, model)), weights=tuple(weights)
    )
    return spec, point


def max_min_energy(channels, model, P, cfg=numerics.DEFAULT_CONFIG):
    """Maximize the weakest user's DC power via a smoothed-min homotopy.

    The soft minimum −(1/t)·log Σ exp(−t·P_k/s₀) tightens as t grows;
    each stage warm-starts from the previous solution, beginning from the
    equal-weight optimum and the single-user solutions.
    """
    n, m = _check_user_channels(channels)
    k_users = len(channels)
    if P < 0:
        raise DomainError("power budget must be nonnegative")
    equal = np.full(k_users, 1.0 / k_users)
    spec_eq, _ = weighted_sum_energy(channels, model, equal, P, cfg)

    starts = [_pack(spec_eq.x)]
    starts += [_pack(matched_single_user_profile(ch, model, P, cfg)) for ch in channels]

    scale = max(float(np.max(per_user_dc(spec_eq.x, channels, model))), 1e-300)
    gains = _user_gain_matrices(channels)

    def users_dc_and_grads(x):
        vals = np.empty(k_users)
        grads = np.empty((k_users, x.shape[0], x.shape[1]), dtype=complex)
        for k, g_k in enumerate(gains):
            c = np.einsum("nm,mn->n", g_k, x)
            v, g_c = _voltage_and_wirtinger(c, model)
            vals[k] = v**2 / model.r_l
            grads[k] = (2.0 * v / model.r_l) * np.conj(g_k.T) * g_c[np.newaxis, :]
        return vals, grads

    z_best = starts[0]
    for temp in (4.0, 16.0, 64.0, 256.0):

        def value(z, _t=temp):
            vals, _ = users_dc_and_grads(_unpack(z, m, n))
            u = vals / scale
            return -np.log(np.sum(np.exp(-_t * (u - np.min(u))))) / _t + np.min(u)

        def grad(z, _t=temp):
            vals, grads = users_dc_and_grads(_unpack(z, m, n))
            u = vals / scale
            w = np.exp(-_t * (u - np.min(u)))
            w = w / np.sum(w)
            g = np.tensordot(w, grads, axes=1) / scale
            return _pack(2.0 * g)

        z_best = numerics.projected_gradient_max(
            value,
            dim=2 * m * n,
            budget=np.sqrt(P),
            cfg=cfg,
            grad=grad,
            constraint="ball",
            nonneg=False,
            starts=starts + [z_best],
        )

    # Pick the candidate with the best true minimum, not the smoothed one.
    candidates = starts + [z_best]
    best = max(candidates, key=lambda z: np.min(per_user_dc(_unpack(z, m, n), channels, model)))
    x = _unpack(best, m, n)
    spec = SignalSpec(x=x, power=P)
    point = EnergyRegionPoint(
        p_dc=tuple(per_user_dc(x, channels, model)),
        weights=tuple(np.full(k_users, 1.0 / k_users)),
    )
    return spec, point
