"""Crowd sensing paid for entirely by downlink power.

An operator charges a fleet of sensors over the air for a fixed slot,
then each scheduled sensor spends its harvested budget on sensing,
compressing, and reporting bits inside a shared round deadline. Data
earns the operator logarithmic utility; radiated power costs a linear
price. Every joule a sensor spends must fit inside what its channel
delivered, so the allocation couples the operator's power split with
each sensor's own time split between sensing and transmitting.

The joint problem decomposes: given a price increment for power, each
sensor solves a one-dimensional concave problem over its transmit
duration, and a scalar bisection on the increment clears the power
budget. Scheduling inherits a threshold structure: a sensor rides along
exactly when its marginal utility per harvested joule beats the price.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import numerics
from .errors import DegenerateError, DomainError, InfeasibleError, NonFiniteError

_SLACK = 1e-9
_EXP_CAP = 900.0

_PER_SENSOR = (
    "utility_weight",
    "utility_scale",
    "gain",
    "sense_rate",
    "sense_energy",
    "report_energy",
    "clock_rate",
    "switch_cap",
    "compress_exp",
    "compress_ratio",
)
_SHARED = (
    "round_time",
    "charge_time",
    "power_budget",
    "bandwidth",
    "noise_var",
    "rfdc_eff",
    "energy_price",
    "ratio_cap",
)


def compression_cycles(ratio, exponent):
    """CPU cycles per raw bit to compress by `ratio`, zero at ratio 1."""
    return np.exp(exponent * np.asarray(ratio)) - np.exp(exponent)


@dataclass(frozen=True)
class SensingScenario:
    """One charging round: the fleet, the channel, and the prices.

    Per-sensor fields are tuples of equal length; shared fields are
    scalars. Energy bookkeeping is in joules per raw sensed bit:
    `sense_energy` to acquire it, `report_energy` to hand it off, and
    the compression cost follows from cycles times the per-cycle cost
    `switch_cap · clock_rate²`.
    """

    utility_weight: tuple
    utility_scale: tuple
    gain: tuple
    sense_rate: tuple
    sense_energy: tuple
    report_energy: tuple
    clock_rate: tuple
    switch_cap: tuple
    compress_exp: tuple
    compress_ratio: tuple
    round_time: float
    charge_time: float
    power_budget: float
    bandwidth: float
    noise_var: float
    rfdc_eff: float
    energy_price: float
    ratio_cap: float

    def __post_init__(self):
        k = len(np.atleast_1d(self.utility_weight))
        if k < 1:
            raise DomainError("at least one sensor is needed")
        for name in _PER_SENSOR:
            values = tuple(float(v) for v in np.atleast_1d(getattr(self, name)))
            if len(values) != k:
                raise DomainError(f"{name} must list one value per sensor")
            if not all(np.isfinite(values)):
                raise NonFiniteError(f"{name} must be finite")
            if min(values) <= 0.0:
                raise DomainError(f"{name} must be positive")
            object.__setattr__(self, name, values)
        for name in _SHARED:
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise NonFiniteError(f"{name} must be finite")
            if value <= 0.0:
                raise DomainError(f"{name} must be positive")
            object.__setattr__(self, name, value)
        if max(self.compress_ratio) > self.ratio_cap * (1.0 + 1e-12):
            raise DomainError("compression ratios must not exceed the cap")
        if min(self.compress_ratio) < 1.0:
            raise DomainError("compression ratios below 1 would inflate the data")

    @property
    def n_sensors(self):
        return len(self.utility_weight)

    def cycles_per_bit(self):
        """Compression cycles per raw bit for each sensor."""
        return compression_cycles(self.compress_ratio, self.compress_exp)

    def seconds_per_bit(self):
        """Time to sense and compress one raw bit for each sensor."""
        rate = np.asarray(self.sense_rate)
        clock = np.asarray(self.clock_rate)
        return 1.0 / rate + self.cycles_per_bit() / clock

    def joules_per_bit(self):
        """Device-side energy per raw bit, transmission excluded."""
        cycle_cost = np.asarray(self.switch_cap) * np.asarray(self.clock_rate) ** 2
        return (
            np.asarray(self.report_energy)
            + np.asarray(self.sense_energy)
            + cycle_cost * self.cycles_per_bit()
        )


@dataclass(frozen=True)
class SensingPolicy:
    """Per-sensor allocations plus the clearing price increment."""

    powers: tuple
    bits: tuple
    durations: tuple
    scheduled: tuple
    multiplier: float
    operator_reward: float

    def __post_init__(self):
        k = len(np.atleast_1d(self.powers))
        for name in ("powers", "bits", "durations"):
            values = tuple(float(v) for v in np.atleast_1d(getattr(self, name)))
            if len(values) != k or not all(np.isfinite(values)):
                raise DomainError(f"{name} must hold one finite value per sensor")
            if min(values) < 0.0:
                raise DomainError(f"{name} must be nonnegative")
            object.__setattr__(self, name, values)
        object.__setattr__(self, "scheduled", tuple(bool(s) for s in np.atleast_1d(self.scheduled)))
        if len(self.scheduled) != k:
            raise DomainError("scheduled must hold one flag per sensor")
        if self.multiplier < 0.0 or not np.isfinite(self.multiplier):
            raise DomainError("the price increment must be finite and nonnegative")


def priority(scenario, n):
    """Scheduling priority: marginal utility per harvested joule, net of price.

    Computed at the low-rate margin, where a bit costs its device-side
    energy plus the zero-rate slope of the radio's energy curve. A
    sensor with priority below the price increment never schedules.
    """
    gain = scenario.gain[n]
    radio_slope = (
        scenario.noise_var
        * np.log(2.0)
        / (gain * scenario.bandwidth * scenario.compress_ratio[n])
    )
    joules = scenario.joules_per_bit()[n] + radio_slope
    first = (
        scenario.utility_weight[n]
        * scenario.utility_scale[n]
        * scenario.rfdc_eff
        * gain
        / joules
    )
    return first - scenario.energy_price


def _radio_energy(scenario, n, bits, duration):
    """Transmit energy to deliver `bits` compressed bits in `duration`."""
    if bits <= 0.0:
        return 0.0
    exponent = bits / (scenario.compress_ratio[n] * duration * scenario.bandwidth)
    required = scenario.noise_var * (2.0 ** min(exponent, _EXP_CAP) - 1.0)
    return duration * required / scenario.gain[n]


def _device_power(scenario, n, bits, duration):
    """Downlink power that exactly refills what the sensor spends."""
    spent = scenario.joules_per_bit()[n] * bits + _radio_energy(scenario, n, bits, duration)
    return spent / (scenario.rfdc_eff * scenario.gain[n] * scenario.charge_time)


def per_sensor_subproblem(scenario, n, marginal, cfg=numerics.DEFAULT_CONFIG):
    """Best time split for one sensor at a given power price increment.

    With the round deadline tight, the transmit duration determines the
    sensed bits and hence the power bill, leaving a concave scalar
    problem: long transmissions are cheap per bit but crowd out
    sensing. Returns (duration, bits, power, net value), all zero when
    participation is not worth the price.
    """
    beta = scenario.seconds_per_bit()[n]
    price = scenario.energy_price + marginal
    t_total = scenario.round_time

    def net_value(duration):
        bits = (t_total - duration) / beta
        utility = scenario.utility_weight[n] * np.log(
            1.0 + scenario.utility_scale[n] * bits
        )
        bill = _device_power(scenario, n, bits, duration) * scenario.charge_time
        return utility - price * bill

    # Below t_lo the radio exponent overflows; the objective there is
    # astronomically negative anyway.
    t_lo = t_total / (
        1.0 + _EXP_CAP * beta * scenario.compress_ratio[n] * scenario.bandwidth
    )
    duration, value = numerics.golden_section_max(net_value, t_lo, t_total, cfg)
    if value <= 0.0:
        return 0.0, 0.0, 0.0, 0.0
    bits = (t_total - duration) / beta
    return duration, bits, _device_power(scenario, n, bits, duration), value


def _allocations(scenario, marginal, phis, cfg):
    """Per-sensor allocations at one price increment."""
    k = scenario.n_sensors
    durations = np.zeros(k)
    bits = np.zeros(k)
    powers = np.zeros(k)
    for n in range(k):
        if phis[n] <= marginal:
            continue
        durations[n], bits[n], powers[n], _ = per_sensor_subproblem(
            scenario, n, marginal, cfg
        )
    return durations, bits, powers


def optimize(scenario, cfg=numerics.DEFAULT_CONFIG):
    """Joint power, sensing, and transmission allocation for the round.

    Price-directed decomposition: a scalar increment on the energy
    price is bisected until the sensors' combined power ask meets the
    budget, each sensor responding with its own best time split. The
    scheduled set is exactly the sensors whose priority clears the
    final increment.
    """
    phis = np.array([priority(scenario, n) for n in range(scenario.n_sensors)])
    if np.max(phis) <= 0.0:
        raise DegenerateError("no sensor is worth scheduling at any price")

    durations, bits, powers = _allocations(scenario, 0.0, phis, cfg)
    multiplier = 0.0
    if np.sum(powers) > scenario.power_budget:
        lo, hi = 0.0, float(np.max(phis))
        for _ in range(cfg.max_iters):
            mid = 0.5 * (lo + hi)
            durations, bits, powers, = _allocations(scenario, mid, phis, cfg)
            total = np.sum(powers)
            if total > scenario.power_budget:
                lo = mid
            else:
                hi = mid
            if abs(total - scenario.power_budget) <= cfg.rel_tol * scenario.power_budget:
                hi = mid
                break
        multiplier = hi
        durations, bits, powers = _allocations(scenario, multiplier, phis, cfg)

    weight = np.asarray(scenario.utility_weight)
    scale = np.asarray(scenario.utility_scale)
    utility = float(np.sum(weight * np.log1p(scale * bits)))
    cost = scenario.energy_price * float(np.sum(powers)) * scenario.charge_time
    return SensingPolicy(
        powers=tuple(powers),
        bits=tuple(bits),
        durations=tuple(durations),
        scheduled=tuple(bits > 0.0),
        multiplier=multiplier,
        operator_reward=utility - cost,
    )


def reward(scenario, policy):
    """Operator reward of a policy, after checking it is physical.

    Utility of the delivered bits minus the priced energy bill, with
    every per-sensor time and energy-causality constraint and the total
    power budget verified first.
    """
    total_power = float(np.sum(policy.powers))
    if total_power > scenario.power_budget + _SLACK:
        raise InfeasibleError("combined downlink power exceeds the budget")
    beta = scenario.seconds_per_bit()
    value = 0.0
    for n in range(scenario.n_sensors):
        bits = policy.bits[n]
        duration = policy.durations[n]
        if bits > 0.0 and duration <= 0.0:
            raise InfeasibleError(f"sensor {n} reports bits but never transmits")
        if beta[n] * bits + duration > scenario.round_time + _SLACK:
            raise InfeasibleError(f"sensor {n} overruns the round deadline")
        spent = scenario.joules_per_bit()[n] * bits + _radio_energy(
            scenario, n, bits, duration
        )
        harvested = (
            scenario.rfdc_eff
            * scenario.gain[n]
            * policy.powers[n]
            * scenario.charge_time
        )
        if spent > harvested + _SLACK:
            raise InfeasibleError(f"sensor {n} spends more than it harvests")
        value += scenario.utility_weight[n] * np.log1p(
            scenario.utility_scale[n] * bits
        )
    return value - scenario.energy_price * total_power * scenario.charge_time


def tune_compression(scenario, cfg=numerics.DEFAULT_CONFIG, grid_points=32, sweeps=2):
    """Coordinate descent on the per-sensor compression ratios.

    The joint problem in the ratios is not convex, so each sensor's
    ratio is swept over a grid while the others stay fixed, rerunning
    the allocation for every candidate. Two sweeps in sensor order;
    improvement is monotone but a global optimum is not guaranteed.
    """
    grid = np.linspace(1.0, scenario.ratio_cap, grid_points)
    best_policy = optimize(scenario, cfg)
    for _ in range(sweeps):
        for n in range(scenario.n_sensors):
            ratios = list(scenario.compress_ratio)
            for candidate in grid:
                ratios[n] = float(candidate)
                trial_sc = replace(scenario, compress_ratio=tuple(ratios))
                try:
                    trial = optimize(trial_sc, cfg)
                except DegenerateError:
                    continue
                if trial.operator_reward > best_policy.operator_reward:
                    scenario = trial_sc
                    best_policy = trial
                else:
                    ratios[n] = scenario.compress_ratio[n]
    return scenario, best_policy
