"""Input distributions for a single modulated subband.

Each distribution describes the complex baseband symbol x of one subband.
What the harvester cares about are the even absolute moments E|x|^k; what
the decoder cares about is the full law. Both views live here so the
energy and rate sides of the toolkit agree on every distribution.

Scaling convention: `scaled(P)` returns the same shape at average symbol
power P (amplitudes multiply by √(P/P0)), which is how a channel gain is
folded into a received-symbol law.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, OrderError


def _gaussian_abs_even_moments(mean, var):
    """E[g^2], E[g^4], E[g^6] for real g ~ N(mean, var)."""
    m2 = var + mean**2
    m4 = mean**4 + 6.0 * mean**2 * var + 3.0 * var**2
    m6 = mean**6 + 15.0 * mean**4 * var + 45.0 * mean**2 * var**2 + 15.0 * var**3
    return m2, m4, m6


class InputDistribution:
    """Common interface; concrete laws are the dataclasses below."""

    kind = "abstract"

    def power(self):
        return self.abs_moment(2)

    def abs_moment(self, order):
        raise NotImplementedError

    def scaled(self, P):
        raise NotImplementedError

    def sample(self, rng, size):
        raise NotImplementedError

    @property
    def is_deterministic(self):
        return False


@dataclass(frozen=True)
class Cw(InputDistribution):
    """Unmodulated constant-envelope carrier at power P."""

    P: float
    kind = "cw"

    def abs_moment(self, order):
        _check_order(order)
        return self.P ** (order // 2)

    def scaled(self, P):
        return Cw(P)

    def sample(self, rng, size):
        return np.full(size, np.sqrt(self.P), dtype=complex)

    @property
    def is_deterministic(self):
        return True


@dataclass(frozen=True)
class Cscg(InputDistribution):
    """Circularly symmetric complex Gaussian, E|x|² = P."""

    P: float
    kind = "cscg"

    def abs_moment(self, order):
        _check_order(order)
        # E|x|^(2k) = k! P^k for a circular Gaussian.
        k = order // 2
        return float(math.factorial(k)) * self.P**k

    def scaled(self, P):
        return Cscg(P)

    def sample(self, rng, size):
        s = np.sqrt(self.P / 2.0)
        return s * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


@dataclass(frozen=True)
class RealGaussian(InputDistribution):
    """Zero-mean real Gaussian carrying all power on one dimension."""

    P: float
    kind = "real_gaussian"

    def abs_moment(self, order):
        _check_order(order)
        m2, m4, m6 = _gaussian_abs_even_moments(0.0, self.P)
        return {2: m2, 4: m4, 6: m6}[order]

    def scaled(self, P):
        return RealGaussian(P)

    def sample(self, rng, size):
        return np.sqrt(self.P) * rng.standard_normal(size) + 0j


@dataclass(frozen=True)
class AsymGaussian(InputDistribution):
    """Independent real/imaginary Gaussians with free variances and means."""

    var_re: float
    var_im: float
    mean_re: float = 0.0
    mean_im: float = 0.0
    kind = "asym_gaussian"

    def abs_moment(self, order):
        _check_order(order)
        a2, a4, a6 = _gaussian_abs_even_moments(self.mean_re, self.var_re)
        b2, b4, b6 = _gaussian_abs_even_moments(self.mean_im, self.var_im)
        if order == 2:
            return a2 + b2
        if order == 4:
            return a4 + 2.0 * a2 * b2 + b4
        return a6 + 3.0 * a4 * b2 + 3.0 * a2 * b4 + b6

    def scaled(self, P):
        p0 = self.power()
        if p0 <= 0:
            raise DomainError("cannot rescale a zero-power distribution")
        r = P / p0
        return AsymGaussian(
            var_re=self.var_re * r,
            var_im=self.var_im * r,
            mean_re=self.mean_re * np.sqrt(r),
            mean_im=self.mean_im * np.sqrt(r),
        )

    def sample(self, rng, size):
        re = self.mean_re + np.sqrt(self.var_re) * rng.standard_normal(size)
        im = self.mean_im + np.sqrt(self.var_im) * rng.standard_normal(size)
        return re + 1j * im


@dataclass(frozen=True)
class OnOff(InputDistribution):
    """Flash signaling: off with probability 1 − 1/l², else a ring of radius l√P.

    Fourth moment l²P² grows without bound in l at fixed average power,
    which is the whole point of the low-duty-cycle high-peak strategy.
    """

    ell: float
    P: float
    kind = "on_off"

    def __post_init__(self):
        if self.ell < 1.0:
            raise DomainError(f"on-off level must be ≥ 1, got {self.ell}")

    def abs_moment(self, order):
        _check_order(order)
        k = order // 2
        # P(on) = 1/l², |x|_on = l√P  =>  E|x|^(2k) = l^(2k-2) P^k.
        return self.ell ** (2 * k - 2) * self.P**k

    def scaled(self, P):
        return OnOff(self.ell, P)

    def sample(self, rng, size):
        on = rng.random(size) < 1.0 / self.ell**2
        phase = np.exp(2j * np.pi * rng.random(size))
        return np.where(on, self.ell * np.sqrt(self.P) * phase, 0.0 + 0.0j)


@dataclass(frozen=True)
class Constellation(InputDistribution):
    """Finite set of complex points with given probabilities (uniform default)."""

    points: np.ndarray
    probs: np.ndarray = None
    kind = "constellation"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex).ravel()
        object.__setattr__(self, "points", pts)
        if self.probs is None:
            pr = np.full(pts.size, 1.0 / pts.size)
        else:
            pr = np.asarray(self.probs, dtype=float).ravel()
        if pr.size != pts.size or abs(pr.sum() - 1.0) > 1e-9 or np.any(pr < 0):
            raise DomainError("constellation probabilities must be a distribution")
        object.__setattr__(self, "probs", pr)

    def abs_moment(self, order):
        _check_order(order)
        return float(np.sum(self.probs * np.abs(self.points) ** order))

    def scaled(self, P):
        p0 = self.power()
        if p0 <= 0:
            raise DomainError("cannot rescale a zero-power constellation")
        return Constellation(self.points * np.sqrt(P / p0), self.probs)

    def sample(self, rng, size):
        idx = rng.choice(self.points.size, size=size, p=self.probs)
        return self.points[idx]


@dataclass(frozen=True)
class Mixture(InputDistribution):
    """Time sharing between two laws: fraction `weight` of slots use `first`."""

    weight: float
    first: InputDistribution
    second: InputDistribution
    kind = "mixture"

    def __post_init__(self):
        if not 0.0 <= self.weight <= 1.0:
            raise DomainError("mixture weight must be in [0, 1]")

    def abs_moment(self, order):
        return self.weight * self.first.abs_moment(order) + (
            1.0 - self.weight
        ) * self.second.abs_moment(order)

    def scaled(self, P):
        p0 = self.power()
        if p0 <= 0:
            raise DomainError("cannot rescale a zero-power mixture")
        r = P / p0
        return Mixture(
            self.weight,
            self.first.scaled(self.first.power() * r),
            self.second.scaled(self.second.power() * r),
        )

    def sample(self, rng, size):
        pick = rng.random(size) < self.weight
        return np.where(pick, self.first.sample(rng, size), self.second.sample(rng, size))


def _check_order(order):
    if order not in (2, 4, 6):
        raise OrderError(f"absolute moments available for orders 2/4/6, got {order}")


def dist_to_dict(dist):
    """JSON-ready description of a distribution (None passes through)."""
    if dist is None:
        return None
    if isinstance(dist, Cw):
        return {"kind": "cw", "P": dist.P}
    if isinstance(dist, Cscg):
        return {"kind": "cscg", "P": dist.P}
    if isinstance(dist, RealGaussian):
        return {"kind": "real_gaussian", "P": dist.P}
    if isinstance(dist, AsymGaussian):
        return {
            "kind": "asym_gaussian",
            "var_re": dist.var_re,
            "var_im": dist.var_im,
            "mean_re": dist.mean_re,
            "mean_im": dist.mean_im,
        }
    if isinstance(dist, OnOff):
        return {"kind": "on_off", "ell": dist.ell, "P": dist.P}
    if isinstance(dist, Constellation):
        return {
            "kind": "constellation",
            "points_re": np.real(dist.points).tolist(),
            "points_im": np.imag(dist.points).tolist(),
            "probs": dist.probs.tolist(),
        }
    if isinstance(dist, Mixture):
        return {
            "kind": "mixture",
            "weight": dist.weight,
            "first": dist_to_dict(dist.first),
            "second": dist_to_dict(dist.second),
        }
    raise DomainError(f"cannot serialize distribution {type(dist).__name__}")


def dist_from_dict(data):
    """Inverse of dist_to_dict."""
    if data is None:
        return None
    kind = data["kind"]
    if kind == "cw":
        return Cw(float(data["P"]))
    if kind == "cscg":
        return Cscg(float(data["P"]))
    if kind == "real_gaussian":
        return RealGaussian(float(data["P"]))
    if kind == "asym_gaussian":
        return AsymGaussian(
            var_re=float(data["var_re"]),
            var_im=float(data["var_im"]),
            mean_re=float(data.get("mean_re", 0.0)),
            mean_im=float(data.get("mean_im", 0.0)),
        )
    if kind == "on_off":
        return OnOff(float(data["ell"]), float(data["P"]))
    if kind == "constellation":
        pts = np.asarray(data["points_re"], dtype=float) + 1j * np.asarray(
            data["points_im"], dtype=float
        )
        return Constellation(pts, np.asarray(data["probs"], dtype=float))
    if kind == "mixture":
        return Mixture(
            float(data["weight"]),
            dist_from_dict(data["first"]),
            dist_from_dict(data["second"]),
        )
    raise DomainError(f"unknown distribution kind {kind!r}")
