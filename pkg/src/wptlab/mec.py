"""Deadline-constrained computing on harvested power.

A device owes up to N CPU cycles within a deadline, where the number
actually demanded is random with known tail probabilities, and every
joule it spends must first arrive over the air. Cycle k costs energy
proportional to the square of the clock it runs at, so slowing down
saves energy, but the harvested energy available by any point in time
caps how much can have been spent by then, and the deadline caps the
total slowdown. The alternative to computing at all is shipping the
bits to an edge server and spending the energy on the radio instead.

Both modes reduce to closed forms. Local computing splits into three
power regimes separated by two thresholds; offloading has a single
threshold and a Lambert-function expression for the optimal transmit
duration. The mode selector runs both and keeps whichever saves more
of the harvested budget.
"""

from dataclasses import dataclass

import numpy as np

from . import numerics
from .errors import DomainError, NonFiniteError, SolverError

_PROB_SLACK = 1e-12


@dataclass(frozen=True)
class MecScenario:
    """One deadline-constrained computing task and its power situation.

    `tail_probs[k]` is the probability that cycle k+1 is actually
    needed, so it starts at exactly 1 and never increases. The energy
    model charges `switch_cap · f²` joules per cycle executed at clock
    f, and the radio alternative must push `bits` through a Gaussian
    channel with power gain `gain` inside the same deadline.
    """

    deadline: float
    tail_probs: tuple
    switch_cap: float
    p_dc: float
    bits: float
    bandwidth: float
    gain: float
    noise_var: float

    def __post_init__(self):
        probs = tuple(float(p) for p in np.atleast_1d(self.tail_probs))
        object.__setattr__(self, "tail_probs", probs)
        if len(probs) < 1:
            raise DomainError("at least one CPU cycle is needed")
        if abs(probs[0] - 1.0) > _PROB_SLACK:
            raise DomainError("the first cycle is always demanded: tail_probs[0] must be 1")
        if any(b > a + _PROB_SLACK for a, b in zip(probs, probs[1:])):
            raise DomainError("tail probabilities must be nonincreasing")
        if probs[-1] < 0.0:
            raise DomainError("tail probabilities must be nonnegative")
        for name in ("deadline", "switch_cap", "p_dc", "bits", "bandwidth", "gain", "noise_var"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise NonFiniteError(f"{name} must be finite")
            if value <= 0.0:
                raise DomainError(f"{name} must be positive")
            object.__setattr__(self, name, value)

    @property
    def n_cycles(self):
        return len(self.tail_probs)


@dataclass(frozen=True)
class MecPolicy:
    """Chosen execution mode with its schedule and energy savings.

    `frequencies` is set for local mode, `t_star` for offload mode, and
    `savings` is the harvested energy left over after the task (zero
    when infeasible).
    """

    mode: str
    savings: float
    frequencies: tuple = None
    t_star: float = None

    def __post_init__(self):
        if self.mode not in ("local", "offload", "infeasible"):
            raise DomainError(f"unknown execution mode {self.mode!r}")
        if self.mode == "local":
            if self.frequencies is None or len(self.frequencies) < 1:
                raise DomainError("local mode needs a clock schedule")
            freqs = tuple(float(f) for f in self.frequencies)
            if min(freqs) <= 0.0:
                raise DomainError("clock frequencies must be positive")
            object.__setattr__(self, "frequencies", freqs)
        if self.mode == "offload" and not self.t_star > 0.0:
            raise DomainError("offload mode needs a positive transmit duration")
        if not np.isfinite(self.savings):
            raise NonFiniteError("energy savings must be finite")


def local_regime_thresholds(scenario):
    """Harvested-power levels splitting local computing into regimes.

    Below the first value no clock schedule can stay inside the energy
    causality constraints even with the deadline fully spent. At or
    above the second, only the deadline binds and the schedule ignores
    the harvested power entirely. The second is never below the first.
    """
    p = np.asarray(scenario.tail_probs)
    n = p.size
    t3 = scenario.deadline**3
    floor = scenario.switch_cap * n**3 / t3
    with np.errstate(divide="ignore"):
        inv = np.where(p > 0.0, p ** (-2.0 / 3.0), np.inf)
    ceiling = scenario.switch_cap / t3 * np.sum(p ** (1.0 / 3.0)) ** 2 * np.sum(inv)
    return floor, ceiling


def _clock_profile(probs, price, deadline):
    """Deadline-tight clock schedule for a given energy price.

    The family `f_k ∝ (p_k + price)^(-1/3)`, scaled so the total run
    time equals the deadline exactly. Price zero is the deadline-only
    optimum; large prices flatten toward a uniform clock.
    """
    weights = (probs + price) ** (1.0 / 3.0)
    return np.sum(weights) / deadline / weights


def _worst_energy_violation(scenario, freqs):
    """Largest prefix gap between energy spent and energy harvested."""
    spent = np.cumsum(scenario.switch_cap * freqs**2)
    banked = scenario.p_dc * np.cumsum(1.0 / freqs)
    return float(np.max(spent - banked))


def optimize_local(scenario, cfg=numerics.DEFAULT_CONFIG):
    """Minimum-energy clock schedule for computing on the device.

    The energy causality constraints must hold for every possible cycle
    count, so the spend-so-far after each cycle is checked against the
    harvest-so-far. In the intermediate power regime the energy price
    is found by bisection so the worst such gap closes exactly.
    """
    floor, ceiling = local_regime_thresholds(scenario)
    if scenario.p_dc < floor:
        return MecPolicy(mode="infeasible", savings=0.0)
    probs = np.asarray(scenario.tail_probs)
    if scenario.p_dc >= ceiling:
        freqs = _clock_profile(probs, 0.0, scenario.deadline)
    else:
        freqs = _bisect_energy_price(scenario, probs, cfg)
    energy = float(scenario.switch_cap * np.sum(probs * freqs**2))
    return MecPolicy(
        mode="local",
        savings=scenario.p_dc * scenario.deadline - energy,
        frequencies=tuple(freqs),
    )


def _bisect_energy_price(scenario, probs, cfg):
    """Find the energy price whose schedule just meets causality."""
    budget_scale = scenario.p_dc * scenario.deadline
    hi = 1.0
    for _ in range(300):
        if _worst_energy_violation(scenario, _clock_profile(probs, hi, scenario.deadline)) <= 0.0:
            break
        hi *= 2.0
    else:
        # The price ran away, which happens when the harvested power
        # sits on the lower threshold itself; the uniform clock is the
        # limiting schedule and is feasible there.
        freqs = np.full(probs.size, probs.size / scenario.deadline)
        if _worst_energy_violation(scenario, freqs) > 1e-9 * budget_scale:
            raise SolverError("energy price bisection failed to bracket")
        return freqs
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        freqs = _clock_profile(probs, mid, scenario.deadline)
        if _worst_energy_violation(scenario, freqs) > 0.0:
            lo = mid
        else:
            hi = mid
    freqs = _clock_profile(probs, hi, scenario.deadline)
    if _worst_energy_violation(scenario, freqs) > 1e-9 * budget_scale:
        raise SolverError("bisected clock schedule violates energy causality")
    return freqs


def offload_threshold(scenario):
    """Minimum harvested power that makes offloading worthwhile.

    Closed form from the tangency condition where the best achievable
    radio saving just reaches zero; cross-validated in the test suite
    against a direct feasibility search over the transmit duration.
    """
    x = np.log(2.0) * scenario.bits / (scenario.bandwidth * scenario.deadline)
    w = numerics.lambert_w0(-np.exp(-1.0 - x))
    noise_over_gain = scenario.noise_var / scenario.gain
    if x + w + 1.0 > 700.0:
        # The load is so far beyond the link that the threshold
        # overflows a double; no harvested power makes offloading pay.
        return np.inf
    return noise_over_gain * (1.0 + (x + w) * np.exp(x + w + 1.0))


def _offload_savings(scenario, duration):
    """Harvested energy left over after transmitting the task bits."""
    noise_over_gain = scenario.noise_var / scenario.gain
    radio = noise_over_gain * duration * 2.0 ** (scenario.bits / (scenario.bandwidth * duration))
    return (
        scenario.p_dc * scenario.deadline
        + (noise_over_gain - scenario.p_dc) * duration
        - radio
    )


def optimize_offload(scenario):
    """Best transmit duration for pushing the task to the edge server.

    Transmitting longer lets the radio run at a lower spectral
    efficiency and hence lower power, but eats into the energy the
    deadline window can still harvest. The optimum balances the two in
    a Lambert-function closed form.
    """
    if scenario.p_dc < offload_threshold(scenario):
        return MecPolicy(mode="infeasible", savings=0.0)
    arg = scenario.gain * scenario.p_dc / (scenario.noise_var * np.e) - 1.0 / np.e
    t_star = np.log(2.0) * scenario.bits / (
        scenario.bandwidth * (1.0 + numerics.lambert_w0(arg))
    )
    if t_star >= scenario.deadline:
        return MecPolicy(mode="infeasible", savings=0.0)
    savings = _offload_savings(scenario, t_star)
    if savings < 0.0:
        return MecPolicy(mode="infeasible", savings=0.0)
    return MecPolicy(mode="offload", savings=savings, t_star=float(t_star))


def select_mode(scenario, cfg=numerics.DEFAULT_CONFIG):
    """Run both modes and keep the one that saves more energy."""
    local = optimize_local(scenario, cfg)
    offload = optimize_offload(scenario)
    if local.mode == "infeasible":
        return offload
    if offload.mode == "infeasible":
        return local
    return local if local.savings >= offload.savings else offload
