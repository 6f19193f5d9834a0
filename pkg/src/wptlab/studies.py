"""Named studies binding the core modules into reproducible runs.

Each study takes a parameter block from a JSON config, runs the
relevant optimizers on deterministically seeded inputs, and returns
plot-ready long-format rows plus a small summary. The same runners
serve the command line (which writes CSV and a manifest) and the HTTP
service (which returns them inline), so output bytes depend only on
the config and seed, never on the transport.

Column names carry SI-unit suffixes (`_w`, `_v`, `_s`, `_hz`, `_j`,
`_rad`, `_bit`) or are dimensionless identifiers; cells are rendered
with a fixed 12-significant-digit format so reruns are byte-identical.
"""

import csv
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy

from . import __version__, beamforming, channel, combining, irs
from . import learning, mec, numerics, rate_energy, rectenna, sensing, waveform
from .distributions import AsymGaussian, Cscg, Mixture, OnOff
from .errors import ConfigError, DegenerateError
from .hpa import LinearHpa, RappHpa
from .rectenna import EhTaylorModel

STUDY_NAMES = (
    "waveform",
    "irs",
    "combining",
    "re_region",
    "modulation",
    "mec",
    "sensing",
    "diversity",
)


@dataclass(frozen=True)
class StudyConfig:
    """Parsed study request: which study, its seed, and its parameters."""

    study: str
    seed: int = 0
    params: dict = field(default_factory=dict)
    out_dir: str = None


def parse_config(raw):
    """Build a StudyConfig from a decoded JSON object, or raise ConfigError."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    if "study" not in raw:
        raise ConfigError("config missing field 'study'")
    study = raw["study"]
    if study not in STUDY_NAMES:
        raise ConfigError(
            f"unknown study {study!r}; expected one of {', '.join(STUDY_NAMES)}"
        )
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError("field 'seed' must be an integer")
    params = raw.get(study, {})
    if not isinstance(params, dict):
        raise ConfigError(f"parameter block {study!r} must be a JSON object")
    out_dir = raw.get("out_dir")
    if out_dir is not None and not isinstance(out_dir, str):
        raise ConfigError("field 'out_dir' must be a string path")
    return StudyConfig(study=study, seed=seed, params=dict(params), out_dir=out_dir)


def validate_config(raw):
    """Schema and invariant diagnostics for a decoded config, no execution.

    Returns a list of human-readable problems; empty means the config
    would run. Explicit scenario blocks are constructed so their own
    domain validation fires without touching any optimizer.
    """
    try:
        config = parse_config(raw)
    except ConfigError as exc:
        return [str(exc)]
    diagnostics = []
    params = config.params
    known = set(_PARAM_DEFAULTS[config.study])
    for key in params:
        if key not in known:
            diagnostics.append(f"{config.study}: unknown parameter {key!r}")
    try:
        if config.study == "mec":
            merged = {**_PARAM_DEFAULTS["mec"], **params}
            for i, block in enumerate(_mec_scenario_blocks(merged, config.seed)):
                _mec_scenario(block, i)
        elif config.study == "sensing":
            merged = {**_PARAM_DEFAULTS["sensing"], **params}
            _sensing_scenario(merged)
    except Exception as exc:
        diagnostics.append(f"{config.study}: {exc}")
    return diagnostics


# ---------------------------------------------------------------------------
# deterministic output rendering
# ---------------------------------------------------------------------------


def _render(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".12g")
    return str(value)


def write_csv(path, fieldnames, rows):
    """Write rows as CSV with a header and fixed float formatting."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([_render(row.get(name)) for name in fieldnames])


def _versions():
    return {
        "wptlab": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": ".".join(str(v) for v in sys.version_info[:3]),
    }


def jsonable(value):
    if isinstance(value, dict):
        return {k: jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def write_outputs(target, study, seed, params, fieldnames, rows, summary,
                  versions, wall_time_s=None):
    """Write <study>_results.csv and <study>_manifest.json under target.

    Shared by local runs and the command line's server mode, so both
    produce identical files from identical rows.
    """
    os.makedirs(target, exist_ok=True)
    csv_path = os.path.join(target, f"{study}_results.csv")
    write_csv(csv_path, fieldnames, rows)
    manifest_path = os.path.join(target, f"{study}_manifest.json")
    manifest = {
        "study": study,
        "seed": seed,
        "params": jsonable(params),
        "versions": versions,
        "rows": len(rows),
        "summary": jsonable(summary),
        "wall_time_s": wall_time_s,
        "outputs": [os.path.abspath(csv_path), os.path.abspath(manifest_path)],
    }
    with open(manifest_path, "w") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return manifest


def run_study(config, out_dir=None, jobs=1):
    """Execute one study and write its CSV and manifest.

    Returns the manifest dict. The CSV bytes are a pure function of the
    config and seed; the manifest additionally records wall time, which
    is allowed to vary between runs.
    """
    target = out_dir or config.out_dir or "."
    fieldnames, rows, summary = execute(config, jobs=jobs)
    wall = summary.pop("wall_time_s", None)
    return write_outputs(target, config.study, config.seed, config.params,
                         fieldnames, rows, summary, _versions(), wall)


def execute(config, jobs=1):
    """Run one study in memory: returns (fieldnames, rows, summary)."""
    runner = _RUNNERS[config.study]
    merged = dict(_PARAM_DEFAULTS[config.study])
    merged.update(config.params)
    start = time.perf_counter()
    fieldnames, rows, summary = runner(merged, config.seed, max(1, int(jobs)))
    summary = dict(summary)
    summary["wall_time_s"] = time.perf_counter() - start
    return fieldnames, rows, summary


# ---------------------------------------------------------------------------
# shared input construction
# ---------------------------------------------------------------------------


def _selective_channel(n_tones, taps, seed, stream):
    """Random frequency-selective SISO channel on the standard grid."""
    rng = numerics.substream(seed, stream)
    grid = channel.ToneGrid(f0=2.4e9, delta_f=1e6, n_tones=n_tones, bandwidth_fw=1e6)
    delays = rng.exponential(1e-7, taps)
    gains = np.sqrt(rng.exponential(1.0 / taps, taps))
    phases = rng.uniform(0.0, 2.0 * np.pi, (1, 1, taps)).reshape(1, 1, 1, taps)
    phases = np.broadcast_to(phases, (1, 1, n_tones, taps)).copy()
    profile = channel.MultipathProfile(delays=delays, gains=gains, phases=phases)
    return channel.response_from_multipath(profile, grid, n_tx=1, n_rx=1)


def _map_ordered(fn, items, jobs):
    """Apply fn over items, optionally threaded, preserving input order."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# the studies
# ---------------------------------------------------------------------------


def _run_waveform(params, seed, jobs):
    model = EhTaylorModel()
    power = float(params["power_w"])
    ch = _selective_channel(int(params["n_tones"]), int(params["taps"]), seed, 0)
    strategies = {
        "optimized": waveform.optimize_allocation(ch, model, power),
        "smf_beta1": waveform.smf_allocation(ch, 1.0, power),
        "smf_beta3": waveform.smf_allocation(ch, 3.0, power),
        "uniform": waveform.smf_allocation(ch, 0.0, power),
        "single_tone": waveform.smf_allocation(ch, np.inf, power),
    }
    rows = []
    for tone, x in enumerate(strategies["optimized"].x[0]):
        rows.append({
            "record": "tone",
            "strategy": "optimized",
            "tone_index": tone,
            "amp2_v2": float(np.abs(x) ** 2),
            "phase_rad": float(np.angle(x)),
        })
    gains = ch.siso_gains()
    summary = {}
    for name, signal in strategies.items():
        received = rectenna.ReceivedSignal.deterministic(signal.x[0] * gains)
        report = rectenna.harvest(model, received)
        rows.append({
            "record": "strategy",
            "strategy": name,
            "v_out_v": report.v_out,
            "p_dc_w": report.p_dc_r,
        })
        summary[name + "_v_out_v"] = report.v_out
    fields = ["record", "strategy", "tone_index", "amp2_v2", "phase_rad",
              "v_out_v", "p_dc_w"]
    return fields, rows, summary


def _run_irs(params, seed, jobs):
    l_total = int(params["l_total"])
    sizes = [int(g) for g in params["group_sizes"]]
    trials = int(params["trials"])
    gains = irs.gain_study(l_total, sizes, trials, seed=seed)
    rows = [
        {"group_size": g, "trials": trials, "mean_gain": gains[g]}
        for g in sizes
    ]
    return ["group_size", "trials", "mean_gain"], rows, dict(
        (f"gain_l{g}", v) for g, v in gains.items()
    )


def _run_combining(params, seed, jobs):
    model = EhTaylorModel()
    power = float(params["power_w"])
    n_tx = int(params["n_tx"])
    grid = channel.ToneGrid(f0=2.4e9, delta_f=1e6, n_tones=1, bandwidth_fw=1e6)

    def one(trial_and_q):
        trial, q = trial_and_q
        ch = channel.rayleigh_iid(n_tx, q, grid, seed=numerics.substream(seed, trial))
        _, dc_report = combining.optimize_dc_combining(model, ch, power)
        _, _, rf_report = combining.optimize_rf_combining(model, ch, power)
        return {
            "trial": trial,
            "n_rx": q,
            "p_dc_dc_w": dc_report.p_dc_r,
            "p_dc_rf_w": rf_report.p_dc_r,
            "rf_over_dc": rf_report.p_dc_r / dc_report.p_dc_r,
        }

    items = []
    trial = 0
    for q in params["n_rx"]:
        for _ in range(int(params["trials"])):
            items.append((trial, int(q)))
            trial += 1
    rows = _map_ordered(one, items, jobs)
    wins = sum(1 for r in rows if r["p_dc_rf_w"] >= r["p_dc_dc_w"])
    return (
        ["trial", "n_rx", "p_dc_dc_w", "p_dc_rf_w", "rf_over_dc"],
        rows,
        {"rf_never_worse_fraction": wins / len(rows)},
    )


def _run_re_region(params, seed, jobs):
    model = EhTaylorModel()
    power = float(params["power_w"])
    noise = float(params["noise_w"])
    gain = float(params["channel_gain"])
    rows = []
    for family in params["families"]:
        points = rate_energy.re_sweep_ideal(model, family, power, gain, noise)
        for point in points:
            rows.append({
                "family": family,
                "param": _render_param(point.param),
                "rate_bit": point.rate,
                "energy_w": point.energy,
            })
    summary = {"families": ",".join(params["families"]), "points": len(rows)}
    return ["family", "param", "rate_bit", "energy_w"], rows, summary


def _render_param(param):
    if isinstance(param, tuple):
        return ";".join(format(float(p), ".12g") for p in param)
    if param is None:
        return ""
    return format(float(param), ".12g")


def _run_modulation(params, seed, jobs):
    model = EhTaylorModel()
    power = float(params["power_w"])
    noise = float(params["noise_w"])
    amplifier = None
    if params["amplifier"] == "linear":
        amplifier = LinearHpa()
    elif params["amplifier"] == "rapp":
        amplifier = RappHpa(gain=1.0, a_s=float(params["a_s_v"]), beta=10.0)
    elif params["amplifier"] is not None:
        raise ConfigError(f"unknown amplifier {params['amplifier']!r}")
    rows = []
    summary = {}
    for lam in params["tradeoffs"]:
        result = learning.train_modulation(
            model,
            int(params["s_count"]),
            power,
            noise,
            float(lam),
            batch=int(params["batch"]),
            iters=int(params["iters"]),
            seed=seed,
            amplifier=amplifier,
        )
        for idx, point in enumerate(result.constellation.points):
            rows.append({
                "record": "point",
                "tradeoff_w_inv": float(lam),
                "point_index": idx,
                "re_v": float(np.real(point)),
                "im_v": float(np.imag(point)),
            })
        rows.append({
            "record": "summary",
            "tradeoff_w_inv": float(lam),
            "rate_bit": result.rate,
            "p_dc_w": result.p_dc,
        })
        summary[f"p_dc_w_at_{_render(float(lam))}"] = result.p_dc
    fields = ["record", "tradeoff_w_inv", "point_index", "re_v", "im_v",
              "rate_bit", "p_dc_w"]
    return fields, rows, summary


def _mec_scenario_blocks(params, seed):
    """Explicit scenario dicts, or deterministically drawn random ones."""
    if params.get("scenarios"):
        return list(params["scenarios"])
    blocks = []
    for i in range(int(params["n_scenarios"])):
        rng = numerics.substream(seed, 1000 + i)
        n = int(rng.integers(1, 9))
        tail = np.concatenate([[1.0], np.sort(rng.random(n - 1))[::-1]])
        switch_cap = 1e-28
        deadline = float(10.0 ** rng.uniform(-3.0, -1.0))
        probe = mec.MecScenario(
            deadline=deadline, tail_probs=tuple(tail), switch_cap=switch_cap,
            p_dc=1.0, bits=1.0, bandwidth=1.0, gain=1.0, noise_var=1.0)
        floor, ceiling = mec.local_regime_thresholds(probe)
        blocks.append({
            "deadline": deadline,
            "tail_probs": [float(p) for p in tail],
            "switch_cap": switch_cap,
            "p_dc": float(10.0 ** rng.uniform(np.log10(floor * 0.5),
                                              np.log10(ceiling * 2.0))),
            "bits": float(10.0 ** rng.uniform(2.0, 4.0)),
            "bandwidth": float(10.0 ** rng.uniform(5.0, 7.0)),
            "gain": float(10.0 ** rng.uniform(-4.0, -1.0)),
            "noise_var": float(10.0 ** rng.uniform(-12.0, -9.0)),
        })
    return blocks


def _mec_scenario(block, index):
    try:
        return mec.MecScenario(
            deadline=block["deadline"],
            tail_probs=tuple(block["tail_probs"]),
            switch_cap=block["switch_cap"],
            p_dc=block["p_dc"],
            bits=block["bits"],
            bandwidth=block["bandwidth"],
            gain=block["gain"],
            noise_var=block["noise_var"],
        )
    except KeyError as exc:
        raise ConfigError(f"mec scenario {index} missing field {exc.args[0]!r}")


def _run_mec(params, seed, jobs):
    blocks = _mec_scenario_blocks(params, seed)
    scenarios = [_mec_scenario(b, i) for i, b in enumerate(blocks)]

    def one(pair):
        idx, scenario = pair
        policy = mec.select_mode(scenario)
        freqs = ""
        if policy.frequencies is not None:
            freqs = ";".join(format(f, ".12g") for f in policy.frequencies)
        return {
            "scenario_id": idx,
            "mode": policy.mode,
            "t_star_s": policy.t_star,
            "savings_j": policy.savings,
            "frequencies_hz": freqs,
        }

    rows = _map_ordered(one, list(enumerate(scenarios)), jobs)
    modes = {}
    for row in rows:
        modes[row["mode"]] = modes.get(row["mode"], 0) + 1
    return (
        ["scenario_id", "mode", "t_star_s", "savings_j", "frequencies_hz"],
        rows,
        {f"n_{mode}": count for mode, count in modes.items()},
    )


def _sensing_scenario(params):
    block = params["scenario"]
    try:
        return sensing.SensingScenario(
            utility_weight=tuple(block["utility_weight"]),
            utility_scale=tuple(block["utility_scale"]),
            gain=tuple(block["gain"]),
            sense_rate=tuple(block["sense_rate"]),
            sense_energy=tuple(block["sense_energy"]),
            report_energy=tuple(block["report_energy"]),
            clock_rate=tuple(block["clock_rate"]),
            switch_cap=tuple(block["switch_cap"]),
            compress_exp=tuple(block["compress_exp"]),
            compress_ratio=tuple(block["compress_ratio"]),
            round_time=block["round_time"],
            charge_time=block["charge_time"],
            power_budget=block["power_budget"],
            bandwidth=block["bandwidth"],
            noise_var=block["noise_var"],
            rfdc_eff=block["rfdc_eff"],
            energy_price=block["energy_price"],
            ratio_cap=block["ratio_cap"],
        )
    except KeyError as exc:
        raise ConfigError(f"sensing scenario missing field {exc.args[0]!r}")


def _run_sensing(params, seed, jobs):
    scenario = _sensing_scenario(params)
    try:
        if params["tune"]:
            scenario, policy = sensing.tune_compression(scenario)
        else:
            policy = sensing.optimize(scenario)
        multiplier, reward_value = policy.multiplier, policy.operator_reward
        per_sensor = zip(policy.scheduled, policy.powers, policy.bits, policy.durations)
    except DegenerateError:
        multiplier, reward_value = None, 0.0
        per_sensor = [(False, 0.0, 0.0, 0.0)] * scenario.n_sensors
    rows = []
    for n, (flag, p_n, ell, t_n) in enumerate(per_sensor):
        rows.append({
            "sensor_id": n,
            "scheduled": flag,
            "p_n_w": p_n,
            "ell_bit": ell,
            "t_n_s": t_n,
            "compress_ratio": scenario.compress_ratio[n],
            "lambda_star": multiplier,
            "reward_util": reward_value,
        })
    fields = ["sensor_id", "scheduled", "p_n_w", "ell_bit", "t_n_s",
              "compress_ratio", "lambda_star", "reward_util"]
    return fields, rows, {"lambda_star": multiplier, "reward_util": reward_value}


def _run_diversity(params, seed, jobs):
    model = EhTaylorModel()
    report = beamforming.transmit_diversity_eval(
        model,
        int(params["n_tx"]),
        int(params["trials"]),
        int(params["phase_slots"]),
        float(params["power_w"]),
        seed=seed,
    )
    row = {
        "n_tx": int(params["n_tx"]),
        "trials": report.trials,
        "v_out_sweep_v": report.v_out_sweep,
        "v_out_single_v": report.v_out_single,
        "se_v_sweep_v": report.se_v_sweep,
        "se_v_single_v": report.se_v_single,
        "p_dc_sweep_w": report.p_dc_sweep,
        "p_dc_single_w": report.p_dc_single,
        "p_rf_sweep_w": report.p_rf_sweep,
        "p_rf_single_w": report.p_rf_single,
    }
    summary = {
        "v_out_gain": report.v_out_sweep / report.v_out_single - 1.0,
    }
    return list(row.keys()), [row], summary


_CANONICAL_SENSING = {
    "utility_weight": [2.0, 1.5, 1.0],
    "utility_scale": [1.0, 1.0, 1.0],
    "gain": [2e-6, 1e-6, 5e-7],
    "sense_rate": [1e6, 1e6, 1e6],
    "sense_energy": [5e-12, 5e-12, 5e-12],
    "report_energy": [5e-12, 5e-12, 5e-12],
    "clock_rate": [1e8, 1e8, 1e8],
    "switch_cap": [1e-29, 1e-29, 1e-29],
    "compress_exp": [2.0, 2.0, 2.0],
    "compress_ratio": [2.0, 2.0, 2.0],
    "round_time": 1.0,
    "charge_time": 1.0,
    "power_budget": 3.0,
    "bandwidth": 1e6,
    "noise_var": 1e-11,
    "rfdc_eff": 0.5,
    "energy_price": 0.5,
    "ratio_cap": 4.0,
}

_PARAM_DEFAULTS = {
    "waveform": {"n_tones": 8, "taps": 3, "power_w": 1.0},
    "irs": {"l_total": 256, "group_sizes": [2, 4, 8, 256], "trials": 500},
    "combining": {"trials": 50, "n_rx": [2, 4], "n_tx": 2, "power_w": 1.0},
    "re_region": {
        "power_w": 1.0,
        "noise_w": 0.01,
        "channel_gain": 1.0,
        "families": ["asym_gaussian", "on_off", "mixture"],
    },
    "modulation": {
        "s_count": 16,
        "power_w": 1e-4,
        "noise_w": 1e-6,
        "tradeoffs": [0.0, 1e-2],
        "batch": 256,
        "iters": 600,
        "amplifier": None,
        "a_s_v": 4.47e-3,
    },
    "mec": {"n_scenarios": 100, "scenarios": None},
    "sensing": {"scenario": _CANONICAL_SENSING, "tune": False},
    "diversity": {"n_tx": 2, "trials": 2000, "phase_slots": 8, "power_w": 1.0},
}

_RUNNERS = {
    "waveform": _run_waveform,
    "irs": _run_irs,
    "combining": _run_combining,
    "re_region": _run_re_region,
    "modulation": _run_modulation,
    "mec": _run_mec,
    "sensing": _run_sensing,
    "diversity": _run_diversity,
}
