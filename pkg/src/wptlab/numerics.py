"""Small numeric building blocks shared by the optimizers.

Scalar root finding and 1-D maximization, a projected-gradient ascent
driver for the low-dimensional power-allocation problems, a periodic
time-average sampler used as the ground-truth oracle for signal moments,
and the symmetric-unitary factor construction used by the surface
optimizers.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    BracketError,
    DimensionError,
    DomainError,
    NonFiniteError,
    SamplingError,
)

_INV_E = 1.0 / np.e


@dataclass(frozen=True)
class SolverConfig:
    """Shared tolerances and iteration budgets for the numeric routines."""

    abs_tol: float = 1e-12
    rel_tol: float = 1e-9
    max_iters: int = 500
    restarts: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")


DEFAULT_CONFIG = SolverConfig()


def substream(seed, index):
    """Independent RNG stream for trial `index`, deterministic in (seed, index)."""
    return np.random.default_rng([int(seed) & 0xFFFFFFFF, int(index)])


def lambert_w0(x, cfg=DEFAULT_CONFIG):
    """Principal branch of the Lambert W function, w·e^w = x with w ≥ −1.

    Halley iteration from a log-based seed; quadratic-plus convergence means
    a handful of steps reach the residual floor anywhere on [−1/e, 1e6].
    """
    x = float(x)
    if not np.isfinite(x):
        raise DomainError(f"lambert_w0 needs a finite argument, got {x}")
    if x < -_INV_E:
        if x < -_INV_E - 1e-12:
            raise DomainError(f"lambert_w0 argument {x} below -1/e")
        x = -_INV_E
    if x == 0.0:
        return 0.0

    # Seed: series near the branch point, identity near 0, log for large x.
    if x < -0.25:
        w = -1.0 + np.sqrt(2.0 * (np.e * x + 1.0))
    elif x < np.e:
        w = x / (1.0 + x) if x > 0 else x
    else:
        lx = np.log(x)
        w = lx - np.log(lx)

    for _ in range(cfg.max_iters):
        ew = np.exp(w)
        f = w * ew - x
        if abs(f) <= cfg.abs_tol * max(1.0, abs(x)):
            break
        fp = ew * (w + 1.0)
        # Halley step; the (w+2)/(2w+2) factor folds in the second derivative.
        denom = fp - f * (w + 2.0) / (2.0 * w + 2.0)
        step = f / denom if denom != 0.0 else f / fp
        w -= step
        if w < -1.0:
            w = -1.0 + 1e-16
    return float(w)


def bisect(f, lo, hi, cfg=DEFAULT_CONFIG):
    """Root of a sign-changing function on [lo, hi] by interval halving."""
    lo = float(lo)
    hi = float(hi)
    flo = f(lo)
    fhi = f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise BracketError(f"f({lo})={flo} and f({hi})={fhi} have the same sign")
    for _ in range(cfg.max_iters):
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if abs(fmid) <= cfg.abs_tol or (hi - lo) <= cfg.rel_tol * max(abs(mid), cfg.abs_tol):
            return mid
        if np.sign(fmid) == np.sign(flo):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f, lo, hi, cfg=DEFAULT_CONFIG):
    """Maximize a unimodal function on [lo, hi].

    Returns (argmax, value). The bracket shrinks by the golden ratio per
    step until its width falls below rel_tol·(hi−lo) + abs_tol.
    """
    lo = float(lo)
    hi = float(hi)
    width_tol = cfg.rel_tol * (hi - lo) + cfg.abs_tol
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1 = f(x1)
    f2 = f(x2)
    for _ in range(cfg.max_iters):
        if (hi - lo) <= width_tol:
            break
        if f1 < f2:
            lo = x1
            x1, f1 = x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = f(x2)
        else:
            hi = x2
            x2, f2 = x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = f(x1)
    xm = 0.5 * (lo + hi)
    return xm, f(xm)


def _project_capped_simplex(x, budget):
    """Project onto {x ≥ 0, Σx ≤ budget}."""
    p = np.maximum(x, 0.0)
    s = p.sum()
    if s <= budget:
        return p
    # Euclidean projection onto the simplex {x >= 0, sum = budget}.
    u = np.sort(x)[::-1]
    cssv = np.cumsum(u) - budget
    idx = np.arange(1, len(u) + 1)
    rho = np.max(np.where(u * idx > cssv)[0])
    tau = cssv[rho] / (rho + 1.0)
    return np.maximum(x - tau, 0.0)


def _project_capped_ball(x, budget, nonneg):
    """Project onto {‖x‖ ≤ budget}, intersected with the orthant if asked.

    Clipping to the orthant first and rescaling second is exact here:
    the ball is centered, so the two projections commute.
    """
    p = np.maximum(x, 0.0) if nonneg else np.asarray(x, dtype=float)
    nrm = float(np.linalg.norm(p))
    if nrm > budget:
        p = p * (budget / nrm)
    return p


def projected_gradient_max(
    objective,
    dim,
    budget,
    cfg=DEFAULT_CONFIG,
    grad=None,
    constraint="simplex",
    nonneg=True,
    starts=None,
):
    """Maximize a smooth objective over a projectable feasible set.

    constraint="simplex" keeps Σx ≤ budget (the power-allocation geometry),
    constraint="ball" keeps ‖x‖ ≤ budget (amplitude-space geometry), and a
    callable is used directly as the Euclidean projection for bespoke
    feasible sets. The best point over `cfg.restarts` random feasible
    initializations is returned; callers can append warm starts (e.g.
    known heuristics) via `starts` to guarantee dominance over them.

    Gradient defaults to central finite differences; pass `grad` for speed
    and accuracy on anything beyond toy dimensions.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    if callable(constraint):
        project = constraint
    elif constraint == "simplex":
        project = lambda x: _project_capped_simplex(x, budget)
    elif constraint == "ball":
        project = lambda x: _project_capped_ball(x, budget, nonneg)
    else:
        raise ValueError(f"unknown constraint {constraint!r}")

    def numeric_grad(x):
        g = np.empty_like(x)
        h = 1e-6 * max(1.0, float(np.max(np.abs(x))))
        for i in range(len(x)):
            e = np.zeros_like(x)
            e[i] = h
            g[i] = (objective(x + e) - objective(x - e)) / (2.0 * h)
        return g

    grad_fn = grad if grad is not None else numeric_grad
    rng = np.random.default_rng(cfg.seed)

    init_points = []
    for _ in range(cfg.restarts):
        if constraint == "simplex":
            raw = rng.random(dim)
            raw = raw / raw.sum() * budget * rng.random()
        else:
            raw = rng.standard_normal(dim)
            raw = raw / np.linalg.norm(raw) * budget * rng.random()
        init_points.append(project(raw))
    if starts is not None:
        init_points.extend(project(np.asarray(s, dtype=float)) for s in starts)

    best_x = None
    best_f = -np.inf
    scale = max(1.0, budget)
    for x0 in init_points:
        x = x0.copy()
        fx = objective(x)
        if not np.isfinite(fx):
            raise NonFiniteError("objective non-finite at initialization")
        step = 1.0
        x_prev = None
        g_prev = None
        for _ in range(cfg.max_iters):
            g = np.asarray(grad_fn(x), dtype=float)
            if not np.all(np.isfinite(g)):
                raise NonFiniteError("gradient returned non-finite values")
            # First-order stationarity on the feasible set, checked with
            # the gradient evaluated at the current point. Checking after
            # the move with the pre-move gradient would pass spuriously:
            # one long step lands near the projected gradient direction,
            # where that stale gradient no longer measures anything.
            resid = np.linalg.norm(project(x + g) - x) / scale
            if resid <= cfg.rel_tol:
                break
            # Spectral (Barzilai-Borwein) trial step where the curvature
            # estimate is usable; it cuts the crawl on ill-conditioned
            # ridges that a purely multiplicative step cannot escape.
            if x_prev is not None:
                s_vec = x - x_prev
                y_vec = g_prev - g
                sy = float(np.dot(s_vec, y_vec))
                if sy > 0.0:
                    step = min(max(float(np.dot(s_vec, s_vec)) / sy, 1e-16), 1e16)
            x_prev, g_prev = x, g
            # Backtracking ascent with a step that grows again on success.
            moved = False
            for _ in range(40):
                cand = project(x + step * g)
                fc = objective(cand)
                if not np.isfinite(fc):
                    raise NonFiniteError("objective returned non-finite value")
                if fc > fx + 1e-12 * abs(fx):
                    x, fx = cand, fc
                    step *= 1.6
                    moved = True
                    break
                step *= 0.5
                if step < 1e-18:
                    break
            if not moved:
                break
        if fx > best_f:
            best_f, best_x = fx, x
    return best_x


def time_average(signal, period, samples_per_period, orders=(2, 4), nyquist_floor=None):
    """Even moments of a periodic real signal by uniform sampling.

    `signal` must accept a vector of times. For a trigonometric polynomial
    whose highest harmonic (after raising to the largest requested order)
    is below `samples_per_period`, the uniform-grid average is exact, so
    callers pass a `nyquist_floor` reflecting their tone count and order.
    """
    orders = tuple(int(o) for o in orders)
    if any(o % 2 or o < 2 for o in orders):
        raise ValueError(f"orders must be even and ≥ 2, got {orders}")
    floor = max(orders) + 1 if nyquist_floor is None else int(nyquist_floor)
    if samples_per_period < floor:
        raise SamplingError(
            f"{samples_per_period} samples per period is below the floor {floor}"
        )
    t = np.arange(samples_per_period) * (period / samples_per_period)
    y = np.asarray(signal(t), dtype=float)
    if y.shape != t.shape:
        raise DimensionError("signal(t) must return one sample per time point")
    return {o: float(np.mean(y**o)) for o in orders}


def multisine_sample_floor(n_tones, order):
    """Minimum samples per period accepted for an n_tones multisine."""
    return 8 * int(n_tones) * int(order)


def default_samples_per_period(n_tones, order):
    """Default oversampled grid for multisine moment extraction."""
    return 64 * int(n_tones) * int(order)


def passband_waveform(amplitudes, carrier_ratio=None):
    """Callable t ↦ √2·Re{Σ_n c_n e^{j2π(k+n)t}} with unit period.

    Time is measured in multisine periods (tone spacing normalized to 1)
    and the carrier sits k spacings up. Any k ≥ N gives the same even
    moments up to order six, matching the infinite-time average of a
    physical carrier; k defaults to N.
    """
    c = np.asarray(amplitudes, dtype=complex).ravel()
    n = c.size
    k = int(carrier_ratio) if carrier_ratio else max(n, 1)
    if k < 1:
        raise ValueError("carrier-to-spacing ratio must be a positive integer")
    tones = k + np.arange(n)

    def wave(t):
        t = np.asarray(t, dtype=float)
        phases = np.exp(2j * np.pi * np.outer(t, tones))
        return np.sqrt(2.0) * np.real(phases @ c)

    return wave


def _complete_basis(cols, L):
    """Extend orthonormal columns to a full orthonormal basis of C^L."""
    basis = [c for c in cols]
    for k in range(L):
        v = np.zeros(L, dtype=complex)
        v[k] = 1.0
        for b in basis:
            v = v - b * np.vdot(b, v)
        nrm = np.linalg.norm(v)
        if nrm > 1e-10:
            basis.append(v / nrm)
        if len(basis) == L:
            break
    return np.column_stack(basis)


def symmetric_unitary_from_pair(a, b, phase=0.0):
    """Symmetric unitary Θ with bᵀΘa = e^{j·phase} for unit vectors a, b.

    This realizes the Cauchy–Schwarz upper bound |bᵀΘa| ≤ ‖a‖‖b‖ = 1 with
    a matrix that is both unitary and equal to its own transpose, the
    structure required of a lossless fully-connected reflection network.

    The construction picks any unitary V mapping w ↦ c and conj(w) ↦ conj(a)
    for an auxiliary unit vector w with wᵀw = aᵀc; then Θ = V·Vᵀ satisfies
    Θa = c = e^{j·phase}·conj(b), which gives the target coupling.
    """
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.shape != b.shape:
        raise DimensionError(f"vector lengths differ: {a.shape} vs {b.shape}")
    L = a.size
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if abs(na - 1.0) > 1e-6 or abs(nb - 1.0) > 1e-6:
        raise ValueError("a and b must be unit vectors")
    a = a / na
    b = b / nb
    c = np.exp(1j * float(phase)) * np.conj(b)

    if L == 1:
        return np.array([[c[0] / a[0]]], dtype=complex)

    rho = complex(np.sum(a * c))
    mag = min(abs(rho), 1.0)
    half = np.exp(0.5j * np.angle(rho)) if rho != 0 else 1.0
    w = np.zeros(L, dtype=complex)
    w[0] = half * np.sqrt((1.0 + mag) / 2.0)
    w[1] = 1j * half * np.sqrt((1.0 - mag) / 2.0)

    u1, u2 = w, np.conj(w)
    v1, v2 = c, np.conj(a)

    p_cols = [u1]
    q_cols = [v1]
    ru = u2 - u1 * np.vdot(u1, u2)
    rv = v2 - v1 * np.vdot(v1, v2)
    nu = np.linalg.norm(ru)
    if nu > 1e-9:
        p_cols.append(ru / nu)
        q_cols.append(rv / np.linalg.norm(rv))

    P = _complete_basis(p_cols, L)
    Q = _complete_basis(q_cols, L)
    V = Q @ P.conj().T
    return V @ V.T
