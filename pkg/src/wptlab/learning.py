"""Data-driven pieces: a tiny harvester surrogate and learned modulation.

Two components live here. The first is a fixed-architecture tanh network
(1-3-2-1) regressing harvested DC power against instantaneous input
power, trained by full-batch gradient descent with hand-derived
backpropagation. The second is an autoencoder-style constellation
trainer whose loss couples symbol cross-entropy with the reciprocal of
harvested power; sweeping the coupling weight reproduces the migration
from communication-like dense constellations to flash-like on-off ones.

The decoder is kept fixed as the Gaussian-likelihood softmax rather than
a second learned network, so the constellation geometry alone carries
the tradeoff.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import hpa as hpa_mod
from . import rate_energy
from .distributions import Constellation
from .errors import DivergenceError, DomainError
from .numerics import substream
from .rectenna import EhTaylorModel

log = logging.getLogger(__name__)

_TARGET_SPAN = 0.8  # targets mapped into [-0.8, 0.8] to keep tanh unsaturated


@dataclass
class EhSurrogate:
    """1-3-2-1 tanh regressor from input power to harvested DC power.

    Normalization constants are part of the model: raw watt scales sit at
    1e-6 where tanh gradients stall, so inputs are standardized and
    targets affinely mapped into the tanh range.
    """

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray
    in_mean: float = 0.0
    in_scale: float = 1.0
    out_lo: float = 0.0
    out_hi: float = 1.0

    def __post_init__(self):
        shapes = {
            "w1": (3, 1), "b1": (3,), "w2": (2, 3), "b2": (2,),
            "w3": (1, 2), "b3": (1,),
        }
        for name, want in shapes.items():
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != want:
                raise DomainError(f"{name} must have shape {want}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise DomainError(f"{name} contains non-finite values")
            setattr(self, name, arr)

    def _forward_scaled(self, z):
        """Network output in target units for standardized input z (B,)."""
        a1 = np.tanh(np.outer(z, self.w1[:, 0]) + self.b1)
        a2 = np.tanh(a1 @ self.w2.T + self.b2)
        a3 = np.tanh(a2 @ self.w3.T + self.b3)
        return a1, a2, a3

    def predict(self, p_in):
        """Harvested power estimate (watts) for input power p_in (watts)."""
        p_in = np.asarray(p_in, dtype=float)
        z = (p_in.ravel() - self.in_mean) / self.in_scale
        _, _, a3 = self._forward_scaled(z)
        out = self._unscale(a3[:, 0])
        return out.reshape(p_in.shape) if p_in.shape else float(out[0])

    def predict_with_slope(self, p_in):
        """(prediction, d prediction / d p_in) for an array of input powers."""
        p_in = np.asarray(p_in, dtype=float).ravel()
        z = (p_in - self.in_mean) / self.in_scale
        a1, a2, a3 = self._forward_scaled(z)
        # Chain rule through the three tanh layers, one scalar per sample.
        d3 = (1.0 - a3**2) @ self.w3  # (B,2) = da3/da2
        d2 = (d3 * (1.0 - a2**2)) @ self.w2  # (B,3)
        dz = (d2 * (1.0 - a1**2)) @ self.w1[:, 0]  # (B,)
        span = self.out_hi - self.out_lo
        slope = dz * (span / (2.0 * _TARGET_SPAN)) / self.in_scale
        return self._unscale(a3[:, 0]), slope

    def _unscale(self, scaled):
        span = self.out_hi - self.out_lo
        return self.out_lo + (scaled + _TARGET_SPAN) * span / (2.0 * _TARGET_SPAN)


def _surrogate_loss_and_grads(net, z, t):
    """Mean squared error on scaled targets plus its parameter gradients."""
    B = z.size
    a1, a2, a3 = net._forward_scaled(z)
    resid = a3[:, 0] - t
    loss = float(np.mean(resid**2))
    delta3 = (2.0 / B) * resid[:, np.newaxis] * (1.0 - a3**2)
    gw3 = delta3.T @ a2
    gb3 = delta3.sum(axis=0)
    delta2 = (delta3 @ net.w3) * (1.0 - a2**2)
    gw2 = delta2.T @ a1
    gb2 = delta2.sum(axis=0)
    delta1 = (delta2 @ net.w2) * (1.0 - a1**2)
    gw1 = delta1.T @ z[:, np.newaxis]
    gb1 = delta1.sum(axis=0)
    return loss, {"w1": gw1, "b1": gb1, "w2": gw2, "b2": gb2, "w3": gw3, "b3": gb3}


def fit_eh_surrogate(samples, epochs=5000, lr=0.2, seed=0):
    """Fit the surrogate to (input power, harvested power) pairs.

    Full-batch gradient descent; deterministic for a given seed. Raises
    DivergenceError if the loss goes non-finite (learning rate too hot).
    """
    data = np.asarray(samples, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2 or data.shape[0] < 10:
        raise DomainError("need at least 10 (p_in, p_dc) sample pairs")
    p_in, p_dc = data[:, 0], data[:, 1]
    in_mean = float(np.mean(p_in))
    in_scale = float(np.std(p_in)) or 1.0
    out_lo = float(np.min(p_dc))
    out_hi = float(np.max(p_dc))
    span = out_hi - out_lo
    z = (p_in - in_mean) / in_scale
    if span == 0.0:
        t = np.zeros_like(p_dc)
    else:
        t = -_TARGET_SPAN + (p_dc - out_lo) * (2.0 * _TARGET_SPAN) / span

    rng = np.random.default_rng(seed)
    net = EhSurrogate(
        w1=rng.normal(scale=1.0, size=(3, 1)),
        b1=np.zeros(3),
        w2=rng.normal(scale=1.0 / np.sqrt(3), size=(2, 3)),
        b2=np.zeros(2),
        w3=rng.normal(scale=1.0 / np.sqrt(2), size=(1, 2)),
        b3=np.zeros(1),
        in_mean=in_mean,
        in_scale=in_scale,
        out_lo=out_lo,
        out_hi=out_hi,
    )
    for _ in range(epochs):
        loss, grads = _surrogate_loss_and_grads(net, z, t)
        if not np.isfinite(loss):
            raise DivergenceError("surrogate training loss became non-finite")
        for name, g in grads.items():
            setattr(net, name, getattr(net, name) - lr * g)
    return net


@dataclass(frozen=True)
class LearnedConstellation:
    """Equiprobable learned symbol set with its training context."""

    points: np.ndarray
    power: float
    noise_var: float
    tradeoff: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex)
        object.__setattr__(self, "points", pts)
        emp = float(np.mean(np.abs(pts) ** 2))
        if self.power > 0 and abs(emp - self.power) > 1e-9 * self.power:
            raise DomainError(
                f"constellation power {emp:.6g} deviates from budget {self.power:.6g}"
            )

    def to_distribution(self):
        return Constellation(points=tuple(self.points))


@dataclass(frozen=True)
class ModulationTrainResult:
    constellation: LearnedConstellation
    received_points: np.ndarray
    rate: float
    p_dc: float
    loss_trace: np.ndarray
    p_dc_trace: np.ndarray


def _chain(points, amplifier):
    """Transmit points through the amplifier; None means a clean chain."""
    if amplifier is None:
        return points
    return hpa_mod.apply(amplifier, points)


def _chain_backward(points, amplifier, grad_out):
    """Pull a complex gradient at the amplifier output back to its input."""
    if amplifier is None:
        return grad_out
    if isinstance(amplifier, hpa_mod.LinearHpa):
        return amplifier.gain * grad_out
    # Rapp: f(x) = x·u(|x|) with u(r) = G/(1+(G r/A)^{2β})^{1/(2β)}.
    g_amp = amplifier.gain
    a_s = amplifier.a_s
    beta = amplifier.beta
    r = np.abs(points)
    base = 1.0 + (g_amp * r / a_s) ** (2.0 * beta)
    u = g_amp * base ** (-1.0 / (2.0 * beta))
    # u'(r) = -G·(G/A)^{2β}·r^{2β-1}·base^{-1-1/(2β)}
    up = -g_amp * (g_amp / a_s) ** (2.0 * beta) * r ** (2.0 * beta - 1.0) * base ** (
        -1.0 - 1.0 / (2.0 * beta)
    )
    safe_r = np.where(r > 0, r, 1.0)
    radial = np.where(
        r > 0, up * np.real(np.conj(grad_out) * points) / safe_r**2, 0.0
    )
    return u * grad_out + radial * points


def _harvested_power_and_grad(model, symbols_points, counts, batch):
    """Batch-empirical DC power and its gradient w.r.t. each point.

    `counts[s]` is how many batch draws used point s; gradients follow the
    complex convention grad = dL/dRe + j·dL/dIm.
    """
    weights = counts / batch
    abs2 = np.abs(symbols_points) ** 2
    if isinstance(model, EhTaylorModel):
        betas = model.betas
        m2 = float(np.sum(weights * abs2))
        v = betas[2] * m2
        grad_v = betas[2] * 2.0 * weights * symbols_points
        if model.n_o >= 4:
            m4 = float(np.sum(weights * abs2**2))
            v += betas[4] * 1.5 * m4
            grad_v += betas[4] * 1.5 * 4.0 * weights * abs2 * symbols_points
        if model.n_o >= 6:
            m6 = float(np.sum(weights * abs2**3))
            v += betas[6] * 2.5 * m6
            grad_v += betas[6] * 2.5 * 6.0 * weights * abs2**2 * symbols_points
        p_dc = v**2 / model.r_l
        return p_dc, (2.0 * v / model.r_l) * grad_v
    if isinstance(model, EhSurrogate):
        pred, slope = model.predict_with_slope(abs2)
        p_dc = float(np.sum(weights * pred))
        return p_dc, weights * slope * 2.0 * symbols_points
    raise DomainError(f"no harvest rule for model {type(model).__name__}")


def _modulation_loss_and_grad(
    points, labels, noise, model, amplifier, sigma2, lam, p_dc_floor
):
    """Composite loss (cross entropy + λ / harvested power) and gradient.

    The gradient includes both the decoder path and the path through the
    received sample y = x̃_label + noise, i.e. the exact derivative of the
    empirical loss for the fixed noise draws.
    """
    batch = labels.size
    s_count = points.size
    tx_points = points
    rx_points = _chain(tx_points, amplifier)

    y = rx_points[labels] + noise
    diff = y[:, np.newaxis] - rx_points[np.newaxis, :]  # (B, S)
    logits = -np.abs(diff) ** 2 / sigma2
    log_norm = logsumexp(logits, axis=1)
    ce = float(np.mean(log_norm - logits[np.arange(batch), labels]))
    post = np.exp(logits - log_norm[:, np.newaxis])
    err = post.copy()
    err[np.arange(batch), labels] -= 1.0  # (B, S)

    # Decoder path: ∂logits_{b,s}/∂x̃_s = 2(y_b − x̃_s)/σ².
    grad_rx = (2.0 / sigma2) * np.sum(err * diff, axis=0)
    # Sample path: y_b moves with its true point.
    y_pull = -(2.0 / sigma2) * np.sum(err * diff, axis=1)
    np.add.at(grad_rx, labels, y_pull)
    grad_rx /= batch

    counts = np.bincount(labels, minlength=s_count).astype(float)
    p_dc, grad_p = _harvested_power_and_grad(model, rx_points, counts, batch)
    if p_dc < p_dc_floor:
        log.warning(
            "harvested power %.3e W below floor %.3e W; penalty clipped",
            p_dc, p_dc_floor,
        )
        penalty = lam / p_dc_floor
    else:
        penalty = lam / p_dc
        grad_rx = grad_rx - (lam / p_dc**2) * grad_p

    grad_tx = _chain_backward(tx_points, amplifier, grad_rx)
    return ce + penalty, ce, p_dc, grad_tx


def train_modulation(
    model,
    s_count,
    P,
    sigma2,
    lam,
    batch=256,
    iters=2000,
    seed=0,
    lr=None,
    amplifier=None,
    p_dc_floor=1e-18,
):
    """Learn an S-point constellation trading symbol identity for power.

    Stochastic gradient descent directly on the points, re-projecting onto
    the average-power sphere after every step. Returns the constellation,
    the post-amplifier received points, the estimated information rate of
    the learned set, and the loss/power traces.
    """
    if s_count < 2 or (s_count & (s_count - 1)) != 0:
        raise DomainError(f"constellation size must be a power of two, got {s_count}")
    if lam < 0:
        raise DomainError("tradeoff weight must be nonnegative")
    if P <= 0 or sigma2 <= 0:
        raise DomainError("power and noise variance must be positive")

    rng = substream(seed, 0)
    points = np.sqrt(P / 2.0) * (
        rng.standard_normal(s_count) + 1j * rng.standard_normal(s_count)
    )
    points *= np.sqrt(P / np.mean(np.abs(points) ** 2))
    if isinstance(amplifier, hpa_mod.RappHpa):
        # Start every point inside the amplifier's linear window. Beyond
        # the saturation knee the chain gradient is flat, so a point that
        # begins out there never feels a pull back; approached from below
        # the knee acts as a barrier instead. Clipping fights the power
        # renormalization, so alternate the two until they agree (they
        # cannot when the budget itself exceeds the clip level, in which
        # case the loop settles on the equal-amplitude ring, the best
        # shape available).
        clip = 0.9 * amplifier.a_s / amplifier.gain
        for _ in range(8):
            amps = np.abs(points)
            over = amps > clip
            if not np.any(over):
                break
            points[over] *= clip / amps[over]
            points *= np.sqrt(P / np.mean(np.abs(points) ** 2))
    if lr is None:
        # Adaptive steps move each point by about lr per iteration no
        # matter how the two loss terms are scaled, so a small fraction
        # of the constellation radius works across the whole tradeoff
        # range.
        lr = 0.05 * np.sqrt(P)

    loss_trace = np.empty(iters)
    p_dc_trace = np.empty(iters)
    avg_grad = np.zeros(s_count, dtype=complex)
    avg_sq = np.zeros(s_count)
    decay1, decay2 = 0.9, 0.999
    for it in range(iters):
        step_rng = substream(seed, it + 1)
        labels = step_rng.integers(0, s_count, size=batch)
        noise = np.sqrt(sigma2 / 2.0) * (
            step_rng.standard_normal(batch) + 1j * step_rng.standard_normal(batch)
        )
        loss, _, p_dc, grad = _modulation_loss_and_grad(
            points, labels, noise, model, amplifier, sigma2, lam, p_dc_floor
        )
        if not np.isfinite(loss):
            raise DivergenceError(f"training loss non-finite at iteration {it}")
        loss_trace[it] = loss
        p_dc_trace[it] = p_dc
        # The radial component of the gradient is spent by the power
        # budget, not by the loss, so remove it before stepping. This is
        # what prices amplitude growth of saturated points against the
        # power it drains from the rest.
        radial = np.real(np.vdot(points, grad)) / (s_count * P)
        grad = grad - radial * points
        # Adam on the tangent steps, with one shared second moment per
        # complex point so the scaling is rotation-invariant. The raw
        # gradient magnitudes of the two loss terms differ by orders of
        # magnitude, which defeats any single step size.
        avg_grad = decay1 * avg_grad + (1.0 - decay1) * grad
        avg_sq = decay2 * avg_sq + (1.0 - decay2) * np.abs(grad) ** 2
        hat_grad = avg_grad / (1.0 - decay1 ** (it + 1))
        hat_sq = avg_sq / (1.0 - decay2 ** (it + 1))
        step = lr / (1.0 + it / max(1, iters // 4))
        points = points - step * hat_grad / (np.sqrt(hat_sq) + 1e-30)
        points *= np.sqrt(P / np.mean(np.abs(points) ** 2))

    rx_points = _chain(points, amplifier)
    counts = np.full(s_count, 1.0)
    p_dc_final, _ = _harvested_power_and_grad(model, rx_points, counts, float(s_count))
    rate = rate_energy.mutual_information(
        Constellation(points=tuple(rx_points)), 1.0, sigma2
    )
    constellation = LearnedConstellation(
        points=points, power=P, noise_var=sigma2, tradeoff=lam
    )
    return ModulationTrainResult(
        constellation=constellation,
        received_points=rx_points,
        rate=rate,
        p_dc=p_dc_final,
        loss_trace=loss_trace,
        p_dc_trace=p_dc_trace,
    )
