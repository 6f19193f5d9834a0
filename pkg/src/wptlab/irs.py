"""Passive reflecting surfaces: diagonal, block, and full scattering networks.

A lossless reflecting surface is described by a symmetric unitary
scattering matrix Θ; the effective scalar channel is g_d + g_rᵀ·Θ·g_i.
More interconnection inside the network enlarges the feasible set of Θ:

  * single connected: Θ diagonal, each element contributes its own
    product term, optimally phase-aligned to the direct path;
  * group connected: Θ block diagonal, each block pools its elements'
    gains by Cauchy–Schwarz;
  * fully connected: one block, the whole surface pools coherently into
    |g_d| + ‖g_r‖·‖g_i‖, the unitary upper bound.

All three optima are closed-form constructions, so the solvers are
exact; the Monte Carlo study only averages the resulting gains.
"""

from dataclasses import dataclass

import numpy as np

from . import numerics
from .errors import DimensionError, DivisibilityError, DomainError

_RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class IrsConfig:
    """Scattering matrix of an L-element surface with L_G-sized blocks."""

    theta: np.ndarray
    group_size: int

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=complex)
        if th.ndim != 2 or th.shape[0] != th.shape[1]:
            raise DimensionError(f"scattering matrix must be square, got {th.shape}")
        object.__setattr__(self, "theta", th)
        l_total = th.shape[0]
        if self.group_size < 1 or l_total % self.group_size:
            raise DivisibilityError(
                f"group size {self.group_size} does not divide {l_total} elements"
            )
        res = self.residuals()
        if max(res.values()) > _RESIDUAL_TOL:
            raise DomainError(f"scattering matrix violates its structure: {res}")

    @property
    def n_elements(self):
        return self.theta.shape[0]

    @property
    def n_groups(self):
        return self.n_elements // self.group_size

    def residuals(self):
        """Structure violations: symmetry, unitarity, off-block leakage."""
        th = self.theta
        l_total = th.shape[0]
        sym = float(np.max(np.abs(th - th.T))) if l_total else 0.0
        uni = float(np.max(np.abs(th.conj().T @ th - np.eye(l_total))))
        mask = np.ones_like(th, dtype=bool)
        g = self.group_size
        for start in range(0, l_total, g):
            mask[start : start + g, start : start + g] = False
        off = float(np.max(np.abs(th[mask]))) if mask.any() else 0.0
        return {"symmetry": sym, "unitarity": uni, "off_block": off}

    def effective_channel(self, g_d, g_r, g_i):
        """g_d + g_rᵀ·Θ·g_i for this scattering matrix."""
        g_r = np.asarray(g_r, dtype=complex).ravel()
        g_i = np.asarray(g_i, dtype=complex).ravel()
        return complex(g_d + g_r @ self.theta @ g_i)


def _as_vectors(g_r, g_i):
    g_r = np.asarray(g_r, dtype=complex).ravel()
    g_i = np.asarray(g_i, dtype=complex).ravel()
    if g_r.size != g_i.size:
        raise DimensionError(
            f"reflect/incident vectors differ in length: {g_r.size} vs {g_i.size}"
        )
    return g_r, g_i


def optimize_single_connected(g_d, g_r, g_i):
    """Diagonal surface: every element phase-aligns its product to the
    direct path, giving |h| = |g_d| + Σ_l |g_r,l·g_i,l| exactly."""
    g_r, g_i = _as_vectors(g_r, g_i)
    target = np.angle(g_d) if g_d != 0 else 0.0
    phases = target - np.angle(g_r * g_i)
    cfg = IrsConfig(theta=np.diag(np.exp(1j * phases)), group_size=1)
    return cfg, abs(cfg.effective_channel(g_d, g_r, g_i))


def _block_theta(g_r_block, g_i_block, phase):
    """Optimal symmetric unitary block for one group's subvectors."""
    nr = np.linalg.norm(g_r_block)
    ni = np.linalg.norm(g_i_block)
    if nr == 0.0 or ni == 0.0:
        return np.eye(g_r_block.size, dtype=complex)
    return numerics.symmetric_unitary_from_pair(
        g_i_block / ni, g_r_block / nr, phase=phase
    )


def optimize_fully_connected(g_d, g_r, g_i):
    """Full surface: one symmetric unitary block realizing the
    Cauchy–Schwarz bound |h| = |g_d| + ‖g_r‖·‖g_i‖."""
    g_r, g_i = _as_vectors(g_r, g_i)
    phase = np.angle(g_d) if g_d != 0 else 0.0
    theta = _block_theta(g_r, g_i, phase)
    cfg = IrsConfig(theta=theta, group_size=g_r.size)
    return cfg, abs(cfg.effective_channel(g_d, g_r, g_i))


def optimize_group_connected(g_d, g_r, g_i, group_size):
    """Block-diagonal surface: each group pools its own subvectors,
    all aligned to the direct path; |h| = |g_d| + Σ_g ‖g_r,g‖·‖g_i,g‖."""
    g_r, g_i = _as_vectors(g_r, g_i)
    l_total = g_r.size
    if group_size < 1 or l_total % group_size:
        raise DivisibilityError(
            f"group size {group_size} does not divide {l_total} elements"
        )
    phase = np.angle(g_d) if g_d != 0 else 0.0
    theta = np.zeros((l_total, l_total), dtype=complex)
    for start in range(0, l_total, group_size):
        stop = start + group_size
        theta[start:stop, start:stop] = _block_theta(
            g_r[start:stop], g_i[start:stop], phase
        )
    cfg = IrsConfig(theta=theta, group_size=group_size)
    return cfg, abs(cfg.effective_channel(g_d, g_r, g_i))


def group_gain_value(g_r, g_i, group_size):
    """Closed-form |h| of the group-connected optimum with no direct path."""
    g_r = np.asarray(g_r, dtype=complex).reshape(-1, group_size)
    g_i = np.asarray(g_i, dtype=complex).reshape(-1, group_size)
    return float(
        np.sum(np.linalg.norm(g_r, axis=1) * np.linalg.norm(g_i, axis=1))
    )


def gain_study(l_total, group_sizes, trials, seed=0):
    """Mean received-power gain of each architecture over single-connected.

    Draws i.i.d. unit Rayleigh incident and reflect vectors with no
    direct path and reports mean(|h_arch|²)/mean(|h_single|²) − 1 keyed
    by group size (group size L means fully connected). The closed-form
    per-realization optima are used, so only the averaging is random.
    """
    if trials < 1:
        raise DomainError("need at least one trial")
    sizes = list(group_sizes)
    for g in sizes:
        if g < 1 or l_total % g:
            raise DivisibilityError(f"group size {g} does not divide {l_total}")
    single_sq = np.empty(trials)
    arch_sq = {g: np.empty(trials) for g in sizes}
    for t in range(trials):
        rng = numerics.substream(seed, t)
        g_r = (rng.standard_normal(l_total) + 1j * rng.standard_normal(l_total)) / np.sqrt(2)
        g_i = (rng.standard_normal(l_total) + 1j * rng.standard_normal(l_total)) / np.sqrt(2)
        single_sq[t] = float(np.sum(np.abs(g_r * g_i))) ** 2
        for g in sizes:
            arch_sq[g][t] = group_gain_value(g_r, g_i, g) ** 2
    base = float(np.mean(single_sq))
    return {g: float(np.mean(arch_sq[g])) / base - 1.0 for g in sizes}
