"""Nonlinear energy-harvester core.

The rectifier is modeled by a truncated Taylor expansion of the diode
characteristic around its bias point. With the passband convention
y(t) = √2·Re{Σ_n c_n e^{j2πf_n t}}, the harvester output voltage is

    v_out = Σ_{even i ≤ n_o} β_i · m_i,     m_i = time-average of y(t)^i,

and the delivered DC power is v_out²/R_L. The even moments m_i are what
couple waveform design to harvested energy: m2 is plain RF power while
m4 and m6 reward signals whose amplitude distribution is peaky.

Closed forms used here (valid when the carrier is commensurate with the
tone spacing, i.e. f0 a multiple of Δf at least N):

    m2 = Σ_n |c_n|²
    m4 = (3/2) · Σ_s |u_s|²,  u = c ∗ c        (self-convolution)
    m6 = (5/2) · Σ_s |w_s|²,  w = c ∗ c ∗ c

For randomly modulated single-subband inputs the time average also
averages over symbols, giving m2 = E|c|², m4 = (3/2)E|c|⁴ and
m6 = (5/2)E|c|⁶ with the phase washing out.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import numerics
from .distributions import InputDistribution
from .errors import (
    DimensionError,
    DomainError,
    NonFiniteError,
    OrderError,
    RandomSignalError,
    ShapeError,
    UnsupportedError,
)

# Time averages of cos(θ)^i over a period; the single-tone moments in the
# amplitude convention where the signal is A·cos(θ) rather than √2·Re{·}.
ZETA = {2: 0.5, 4: 3.0 / 8.0, 6: 5.0 / 16.0}

_EVEN_ORDERS = (2, 4, 6)


def _factorials():
    return {2: 2, 4: 24, 6: 720}


@dataclass(frozen=True)
class EhTaylorModel:
    """Diode Taylor model with derived expansion coefficients β_i.

    β_i = R_ant^{i/2} / (i! · (n_ideality·v_t)^{i−1}) converts the i-th
    signal moment (in watt^{i/2} units after the antenna impedance) into
    an output-voltage contribution.
    """

    n_o: int = 4
    r_ant: float = 50.0
    n_ideality: float = 1.05
    v_t: float = 0.02585
    r_l: float = 1000.0

    def __post_init__(self):
        if self.n_o not in (2, 4, 6):
            raise DomainError(f"truncation order must be 2, 4 or 6, got {self.n_o}")
        for name in ("r_ant", "n_ideality", "v_t", "r_l"):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be positive")

    @property
    def betas(self):
        """Map {order: β_order} for even orders up to n_o."""
        nv = self.n_ideality * self.v_t
        fact = _factorials()
        return {
            i: self.r_ant ** (i / 2.0) / (fact[i] * nv ** (i - 1))
            for i in _EVEN_ORDERS
            if i <= self.n_o
        }

    def output_voltage(self, moments):
        """v_out = Σ β_i·m_i over the orders this model keeps."""
        return float(sum(b * moments[i] for i, b in self.betas.items()))

    def to_dict(self):
        return {
            "n_o": self.n_o,
            "r_ant_ohm": self.r_ant,
            "n_ideality": self.n_ideality,
            "v_t_volt": self.v_t,
            "r_l_ohm": self.r_l,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            n_o=int(data["n_o"]),
            r_ant=float(data["r_ant_ohm"]),
            n_ideality=float(data["n_ideality"]),
            v_t=float(data["v_t_volt"]),
            r_l=float(data["r_l_ohm"]),
        )

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class ReceivedSignal:
    """Signal at the rectenna input, after the channel has been applied.

    Two mutually exclusive forms:
      * deterministic: `amplitudes` holds the per-tone effective complex
        amplitudes c_n (transmit weights times channel gains), `dist` is None;
      * stochastic single subband: `dist` holds the received-symbol law
        (already scaled by the channel), `amplitudes` is None.

    `carrier_ratio` is the carrier-to-spacing ratio f0/Δf used by the
    time-domain sampler; the default N makes every moment up to order six
    exact and equals the infinite-time average of any physical carrier.
    """

    amplitudes: np.ndarray = None
    dist: InputDistribution = None
    carrier_ratio: int = None

    def __post_init__(self):
        if self.amplitudes is not None and self.dist is not None:
            if np.asarray(self.amplitudes).size > 1:
                raise UnsupportedError(
                    "modulated multi-subband inputs have no analytic moments; "
                    "route them through monte_carlo_harvest"
                )
            raise UnsupportedError(
                "give either deterministic amplitudes or a symbol law, not both"
            )
        if self.amplitudes is None and self.dist is None:
            raise DomainError("received signal needs amplitudes or a symbol law")
        if self.amplitudes is not None:
            c = np.asarray(self.amplitudes, dtype=complex)
            if c.ndim != 1:
                raise DimensionError(
                    f"per-tone amplitudes must be a 1-D vector, got shape {c.shape}"
                )
            if not np.all(np.isfinite(c)):
                raise NonFiniteError("per-tone amplitudes must be finite")
            object.__setattr__(self, "amplitudes", c)
        if self.carrier_ratio is not None and (
            int(self.carrier_ratio) != self.carrier_ratio or self.carrier_ratio < 1
        ):
            raise DomainError("carrier-to-spacing ratio must be a positive integer")

    @classmethod
    def deterministic(cls, amplitudes, carrier_ratio=None):
        return cls(amplitudes=amplitudes, carrier_ratio=carrier_ratio)

    @classmethod
    def stochastic(cls, dist):
        return cls(dist=dist)

    @property
    def is_deterministic(self):
        return self.dist is None

    @property
    def n_tones(self):
        return 1 if self.amplitudes is None else int(self.amplitudes.size)

    def effective_carrier_ratio(self):
        return int(self.carrier_ratio) if self.carrier_ratio else max(self.n_tones, 1)


@dataclass(frozen=True)
class HarvestReport:
    """Harvester output summary; se_v_out/trials are set by Monte Carlo runs."""

    p_rf_r: float
    v_out: float
    p_dc_r: float
    e3: float
    se_v_out: float = 0.0
    trials: int = 0

    def to_dict(self):
        return {
            "p_rf_r_watt": self.p_rf_r,
            "v_out_volt": self.v_out,
            "p_dc_r_watt": self.p_dc_r,
            "e3": self.e3,
            "se_v_out_volt": self.se_v_out,
            "trials": self.trials,
        }


# ---------------------------------------------------------------------------
# moment computation
# ---------------------------------------------------------------------------


def m4_deterministic(c):
    """(3/2)·Σ_s |(c ∗ c)_s|² — exact fourth moment of the passband waveform."""
    u = np.convolve(c, c)
    return 1.5 * float(np.sum(np.abs(u) ** 2))


def m6_convolution(c):
    """(5/2)·Σ_s |(c ∗ c ∗ c)_s|² — closed-form sixth moment (sampler-free)."""
    w = np.convolve(np.convolve(c, c), c)
    return 2.5 * float(np.sum(np.abs(w) ** 2))


def m4_gradient(c):
    """Wirtinger gradient of m4_deterministic w.r.t. conj(c): 3·Σ_m u_{n+m}·conj(c_m)."""
    c = np.asarray(c, dtype=complex)
    u = np.convolve(c, c)
    n = c.size
    grad = np.empty(n, dtype=complex)
    for k in range(n):
        grad[k] = 3.0 * np.sum(u[k : k + n] * np.conj(c))
    return grad


def moments_deterministic(signal, order=4):
    """Even moments {2: m2[, 4: m4[, 6: m6]]} of a deterministic multisine.

    m2 and m4 come from the convolution identities; m6 is measured by the
    time-domain sampler on the canonical commensurate carrier, which is the
    route that needs no closed form and doubles as a cross-check.
    """
    if order not in _EVEN_ORDERS:
        raise OrderError(f"moment order must be one of {_EVEN_ORDERS}, got {order}")
    if not signal.is_deterministic:
        raise RandomSignalError(
            "analytic multisine moments need a deterministic signal"
        )
    c = signal.amplitudes
    out = {2: float(np.sum(np.abs(c) ** 2))}
    if order >= 4:
        out[4] = m4_deterministic(c)
    if order >= 6:
        n = c.size
        wave = numerics.passband_waveform(c, signal.effective_carrier_ratio())
        samples = numerics.default_samples_per_period(n, 6)
        out[6] = numerics.time_average(wave, 1.0, samples, orders=(6,))[6]
    return out


def moments_distribution(dist, P=None):
    """Raw absolute moments {2: E|c|², 4: E|c|⁴, 6: E|c|⁶} of a symbol law.

    If P is given the law is first rescaled to that average power. A
    sequence of laws is rejected: per-subband modulation has no analytic
    moments here and belongs in monte_carlo_harvest.
    """
    if isinstance(dist, (list, tuple)):
        if len(dist) == 1:
            dist = dist[0]
        else:
            raise UnsupportedError(
                "multi-subband modulated inputs have no closed-form moments; "
                "route them through monte_carlo_harvest"
            )
    if not isinstance(dist, InputDistribution):
        raise DomainError(f"expected an input distribution, got {type(dist).__name__}")
    if P is not None:
        if P < 0:
            raise DomainError("average symbol power must be nonnegative")
        dist = dist.scaled(P)
    return {k: dist.abs_moment(k) for k in _EVEN_ORDERS}


def _passband_moments_from_raw(raw, n_o):
    """Convert raw E|c|^k into passband moments m_k for a single subband."""
    factors = {2: 1.0, 4: 1.5, 6: 2.5}
    return {k: factors[k] * raw[k] for k in _EVEN_ORDERS if k <= n_o}


def harvest(model, signal):
    """Evaluate the Taylor harvester on a received signal."""
    if signal.is_deterministic:
        moments = moments_deterministic(signal, order=model.n_o)
    else:
        raw = moments_distribution(signal.dist)
        moments = _passband_moments_from_raw(raw, model.n_o)
    v_out = model.output_voltage(moments)
    p_rf = moments[2]
    p_dc = v_out**2 / model.r_l
    e3 = p_dc / p_rf if p_rf > 0 else 0.0
    return HarvestReport(p_rf_r=p_rf, v_out=v_out, p_dc_r=p_dc, e3=e3)


def jensen_lower_bound(model, p_rf_r):
    """Σ β_i·P^{i/2}: the voltage the harvester cannot fall below at RF power P.

    This is what a design that only tracks received power implicitly
    maximizes; shaped waveforms beat it through the higher moments.
    """
    if p_rf_r < 0:
        raise DomainError("received RF power must be nonnegative")
    return float(sum(b * p_rf_r ** (i / 2.0) for i, b in model.betas.items()))


# ---------------------------------------------------------------------------
# Monte Carlo evaluation
# ---------------------------------------------------------------------------


def monte_carlo_harvest(model, signal, channel, trials, seed=0):
    """Average the harvester output over random symbol draws.

    `signal` is a transmit profile with fields x (M×N deterministic
    weights) and dist (per-subband symbol law or None); the symbol on
    antenna m, subband n is x[m, n]·s_n with s_n ~ dist[n] (s_n = 1 for
    unmodulated subbands). The single-path channel folds the draws into
    per-tone effective amplitudes whose even moments are evaluated in
    closed form per draw, then averaged across draws.

    Each trial draws from its own seed-derived substream, so the result
    is reproducible regardless of execution order.
    """
    if trials < 1:
        raise DomainError(f"need at least one trial, got {trials}")
    x = np.atleast_2d(np.asarray(signal.x, dtype=complex))
    m_ant, n_tones = x.shape
    h = channel.H
    if h.shape[1] != 1:
        raise ShapeError(
            f"Monte Carlo harvest expects a single receive path, got Q={h.shape[1]}"
        )
    if h.shape[0] != n_tones or h.shape[2] != m_ant:
        raise DimensionError(
            f"channel {h.shape} does not match signal layout M={m_ant}, N={n_tones}"
        )
    gains = h[:, 0, :]  # (N, M)
    dists = getattr(signal, "dist", None)
    if dists is None:
        dists = [None] * n_tones
    modulated = [n for n, d in enumerate(dists) if d is not None]

    base = np.array([np.dot(gains[n], x[:, n]) for n in range(n_tones)])
    want_m6 = model.n_o >= 6

    if not modulated:
        # Degenerate deterministic case: one evaluation, zero spread.
        report = harvest(model, ReceivedSignal.deterministic(base))
        return HarvestReport(
            p_rf_r=report.p_rf_r,
            v_out=report.v_out,
            p_dc_r=report.p_dc_r,
            e3=report.e3,
            se_v_out=0.0,
            trials=trials,
        )

    v_samples = np.empty(trials)
    m2_samples = np.empty(trials)
    for t in range(trials):
        rng = numerics.substream(seed, t)
        c = base.copy()
        for n in modulated:
            c[n] = c[n] * dists[n].sample(rng, ())
        m2 = float(np.sum(np.abs(c) ** 2))
        moments = {2: m2}
        if model.n_o >= 4:
            moments[4] = m4_deterministic(c)
        if want_m6:
            moments[6] = m6_convolution(c)
        v_samples[t] = model.output_voltage(moments)
        m2_samples[t] = m2

    v_mean = float(np.mean(v_samples))
    se = float(np.std(v_samples, ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    p_rf = float(np.mean(m2_samples))
    p_dc = v_mean**2 / model.r_l
    e3 = p_dc / p_rf if p_rf > 0 else 0.0
    return HarvestReport(
        p_rf_r=p_rf, v_out=v_mean, p_dc_r=p_dc, e3=e3, se_v_out=se, trials=trials
    )
