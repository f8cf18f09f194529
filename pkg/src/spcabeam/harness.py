"""Reproducible experiment harness.

One declarative JSON config describes one experiment: the network, the
outer-loop options, the trial count and base seed, and optionally one sweep
axis.  Running it produces an artifact directory:

    manifest.json            config echo + sha256, seeds, package version
    trials.csv               one row per trial (final WSR, iterations, ...)
    aggregate.csv            mean/stdev summary (one row per sweep value)
    trajectories/trial_NNNN.csv   per-iteration trajectory
    timings.json             wall-clock diagnostics (not reproducible)

All CSV content is a pure function of (config, seeds); wall times live in
the JSON sidecar so reruns with the same config and seed are byte-identical
on the CSV side.  Per-trial seeds derive from the base seed through the
documented stream-splitting in :mod:`spcabeam.rng`.
"""

from __future__ import annotations

import concurrent.futures
import csv
import hashlib
import io
import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__, rng as rng_mod
from .driver import RunOptions, RunResult, run
from .errors import ConfigurationError, SubproblemError
from .ipm import SolverSettings
from .network import NetworkConfig, drop_network, generate_channels

MANIFEST_SCHEMA = "spcabeam-manifest/1"
TRIALS_SCHEMA = "spcabeam-trials-csv/1"
AGGREGATE_SCHEMA = "spcabeam-aggregate-csv/1"
TRAJECTORY_SCHEMA = "spcabeam-trajectory-csv/1"

SWEEP_AXES = ("p_max_dbw", "epsilon")


def dbw_to_watts(dbw: float) -> float:
    return 10.0 ** (dbw / 10.0)


@dataclass
class ExperimentConfig:
    name: str
    network: NetworkConfig
    p_max_dbw: float
    options: RunOptions
    trials: int
    base_seed: int
    sweep_axis: str | None = None
    sweep_values: list[float] = field(default_factory=list)
    raw: dict = field(default_factory=dict)

    @property
    def config_hash(self) -> str:
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def _require(doc: dict, key: str, context: str):
    if key not in doc:
        raise ConfigurationError(f"missing key {key!r} in {context}")
    return doc[key]


def parse_config(doc: dict) -> ExperimentConfig:
    """Validate and materialize a config document (see README for keys)."""
    net = _require(doc, "network", "config")
    cells = _require(net, "cells", "network")
    users = _require(net, "users_per_cell", "network")
    p_max_dbw = float(_require(net, "p_max_dbw", "network"))
    weights = net.get("weights", "equal")
    if weights == "equal":
        wmat = np.ones((cells, users))
    else:
        wmat = np.asarray(weights, dtype=float)
    network = NetworkConfig(
        cells=cells,
        users_per_cell=users,
        subcarriers=_require(net, "subcarriers", "network"),
        antennas=_require(net, "antennas", "network"),
        p_max=dbw_to_watts(p_max_dbw),
        inter_bs_distance=float(_require(net, "inter_bs_distance_m", "network")),
        annulus_inner=float(_require(net, "annulus_inner_m", "network")),
        annulus_outer=float(_require(net, "annulus_outer_m", "network")),
        weights=wmat,
    )
    spca = doc.get("spca", {})
    solver = doc.get("solver", {})
    options = RunOptions(
        epsilon=float(spca.get("epsilon", 1e-4)),
        tol=float(spca.get("tol", 1e-4)),
        max_iterations=int(spca.get("max_iterations", 50)),
        method=spca.get("method", "tree"),
        weight_margin=float(spca.get("weight_margin", 0.01)),
        solver=solver.get("name", "ipm"),
        solver_settings=SolverSettings(
            max_iterations=int(solver.get("max_iterations", 100)),
            feas_tol=float(solver.get("feas_tol", 1e-8)),
            gap_tol=float(solver.get("gap_tol", 1e-8)),
        ),
    )
    options.check()
    sweep = doc.get("sweep")
    axis = None
    values: list[float] = []
    if sweep:
        axis = _require(sweep, "axis", "sweep")
        if axis not in SWEEP_AXES:
            raise ConfigurationError(
                f"sweep axis {axis!r} not supported; choose from {SWEEP_AXES}")
        values = [float(v) for v in _require(sweep, "values", "sweep")]
        if not values:
            raise ConfigurationError("sweep.values must be nonempty")
    return ExperimentConfig(
        name=doc.get("name", "experiment"),
        network=network,
        p_max_dbw=p_max_dbw,
        options=options,
        trials=int(doc.get("trials", 1)),
        base_seed=int(doc.get("base_seed", 0)),
        sweep_axis=axis,
        sweep_values=values,
        raw=doc,
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(
            f"config {path} is not valid JSON: line {exc.lineno}, "
            f"column {exc.colno}: {exc.msg}") from None
    return parse_config(doc)


# -- single trial ---------------------------------------------------------------


@dataclass
class TrialRecord:
    trial: int
    seed: int
    status: str                 # "ok" or "failed"
    wsr_initial: float
    wsr_final: float
    iterations: int
    termination: str
    solver_iterations: int
    powers: np.ndarray
    wall_time: float
    error: str = ""
    result: RunResult | None = None


def run_trial(config: ExperimentConfig, trial: int,
              keep_result: bool = False) -> TrialRecord:
    seed = rng_mod.trial_seed(config.base_seed, trial)
    t0 = time.perf_counter()
    scenario = drop_network(config.network, seed)
    channels = generate_channels(scenario, seed)
    try:
        result = run(scenario, channels, config.options)
    except SubproblemError as exc:
        return TrialRecord(
            trial=trial, seed=seed, status="failed", wsr_initial=np.nan,
            wsr_final=np.nan, iterations=0, termination="error",
            solver_iterations=0, powers=np.full(config.network.cells, np.nan),
            wall_time=time.perf_counter() - t0, error=str(exc))
    return TrialRecord(
        trial=trial, seed=seed, status="ok",
        wsr_initial=result.trajectory[0].wsr, wsr_final=result.wsr,
        iterations=result.iterations, termination=result.termination,
        solver_iterations=sum(p.solver_iterations for p in result.trajectory),
        powers=result.trajectory[-1].powers,
        wall_time=time.perf_counter() - t0,
        result=result if keep_result else None)


# -- aggregation ----------------------------------------------------------------


@dataclass
class Aggregate:
    trials: int
    failures: int
    mean_wsr: float
    std_wsr: float
    mean_iterations: float

    @staticmethod
    def from_records(records: list[TrialRecord]) -> "Aggregate":
        ordered = sorted(records, key=lambda r: r.trial)
        ok = [r for r in ordered if r.status == "ok"]
        wsr = np.array([r.wsr_final for r in ok])
        iters = np.array([r.iterations for r in ok])
        return Aggregate(
            trials=len(ordered),
            failures=len(ordered) - len(ok),
            mean_wsr=float(wsr.mean()) if len(ok) else np.nan,
            std_wsr=float(wsr.std()) if len(ok) else np.nan,
            mean_iterations=float(iters.mean()) if len(ok) else np.nan)


def monte_carlo(config: ExperimentConfig, workers: int = 1,
                keep_results: bool = False
                ) -> tuple[list[TrialRecord], Aggregate]:
    """Run all trials (optionally in a process pool) and fold the aggregate.

    Records are folded in trial order regardless of completion order, so the
    aggregate is invariant to scheduling.
    """
    if config.trials < 1:
        raise ConfigurationError(f"trials must be >= 1, got {config.trials}")
    if workers <= 1:
        records = [run_trial(config, t, keep_results)
                   for t in range(config.trials)]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as ex:
            futures = {ex.submit(run_trial, config, t, keep_results): t
                       for t in range(config.trials)}
            records = [f.result() for f in
                       concurrent.futures.as_completed(futures)]
    records.sort(key=lambda r: r.trial)
    return records, Aggregate.from_records(records)


# -- CSV / artifact output -------------------------------------------------------


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


def trials_csv(records: list[TrialRecord], cells: int) -> str:
    header = (["trial", "seed", "status", "wsr_initial", "wsr_final",
               "iterations", "termination", "solver_iterations"]
              + [f"power_bs{m}" for m in range(cells)] + ["error"])
    rows = []
    for r in sorted(records, key=lambda rec: rec.trial):
        rows.append([r.trial, r.seed, r.status, _fmt(r.wsr_initial),
                     _fmt(r.wsr_final), r.iterations, r.termination,
                     r.solver_iterations]
                    + [_fmt(float(p)) for p in r.powers] + [r.error])
    return _csv_text(header, rows)


def trajectory_csv(result: RunResult, cells: int) -> str:
    header = (["iteration", "wsr"] + [f"power_bs{m}" for m in range(cells)]
              + ["solver_iterations", "solver_status", "max_im_gain"])
    rows = []
    for p in result.trajectory:
        rows.append([p.iteration, _fmt(p.wsr)]
                    + [_fmt(float(x)) for x in p.powers]
                    + [p.solver_iterations, p.solver_status,
                       _fmt(p.max_im_gain)])
    return _csv_text(header, rows)


def aggregate_csv(rows: list[tuple[str, Aggregate]], axis_name: str) -> str:
    header = [axis_name, "trials", "failures", "mean_wsr", "std_wsr",
              "mean_iterations"]
    out = []
    for label, agg in rows:
        out.append([label, agg.trials, agg.failures, _fmt(agg.mean_wsr),
                    _fmt(agg.std_wsr), _fmt(agg.mean_iterations)])
    return _csv_text(header, out)


def _apply_sweep_value(config: ExperimentConfig, value: float
                       ) -> ExperimentConfig:
    import copy
    out = copy.deepcopy(config)
    if config.sweep_axis == "p_max_dbw":
        out.network.p_max = np.full(config.network.cells, dbw_to_watts(value))
        out.p_max_dbw = value
    elif config.sweep_axis == "epsilon":
        out.options.epsilon = value
    return out


def run_experiment(config: ExperimentConfig, out_dir, workers: int = 1) -> dict:
    """Execute the experiment and write the artifact directory.

    Returns a summary dict (paths and aggregates).
    """
    os.makedirs(out_dir, exist_ok=True)
    traj_dir = os.path.join(out_dir, "trajectories")
    os.makedirs(traj_dir, exist_ok=True)

    points = config.sweep_values if config.sweep_axis else [None]
    agg_rows: list[tuple[str, Aggregate]] = []
    timings: dict = {}
    all_trials_text = []
    for value in points:
        sub = _apply_sweep_value(config, value) if value is not None else config
        records, agg = monte_carlo(sub, workers=workers, keep_results=True)
        label = _fmt(float(value)) if value is not None else "all"
        agg_rows.append((label, agg))
        for r in records:
            if r.result is not None:
                stem = (f"trial_{r.trial:04d}" if value is None
                        else f"{config.sweep_axis}_{label}_trial_{r.trial:04d}")
                path = os.path.join(traj_dir, stem + ".csv")
                with open(path, "w", encoding="utf-8", newline="") as fh:
                    fh.write(trajectory_csv(r.result, sub.network.cells))
            timings.setdefault(label, {})[str(r.trial)] = r.wall_time
        all_trials_text.append((label, trials_csv(records, sub.network.cells)))

    if config.sweep_axis:
        for label, text in all_trials_text:
            path = os.path.join(out_dir,
                                f"trials_{config.sweep_axis}_{label}.csv")
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
    else:
        with open(os.path.join(out_dir, "trials.csv"), "w",
                  encoding="utf-8", newline="") as fh:
            fh.write(all_trials_text[0][1])

    axis_name = config.sweep_axis or "sweep"
    with open(os.path.join(out_dir, "aggregate.csv"), "w",
              encoding="utf-8", newline="") as fh:
        fh.write(aggregate_csv(agg_rows, axis_name))

    manifest = {
        "schema": MANIFEST_SCHEMA,
        "name": config.name,
        "config": config.raw,
        "config_sha256": config.config_hash,
        "base_seed": config.base_seed,
        "trials": config.trials,
        "package_version": __version__,
        "csv_schemas": {
            "trials": TRIALS_SCHEMA,
            "aggregate": AGGREGATE_SCHEMA,
            "trajectory": TRAJECTORY_SCHEMA,
        },
    }
    with open(os.path.join(out_dir, "manifest.json"), "w",
              encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1)
    with open(os.path.join(out_dir, "timings.json"), "w",
              encoding="utf-8") as fh:
        json.dump({"note": "wall-clock diagnostics; not reproducible",
                   "seconds": timings}, fh, indent=1)
    return {
        "out_dir": str(out_dir),
        "aggregates": {label: agg for label, agg in agg_rows},
    }


def replay_from_manifest(manifest_path, out_dir, workers: int = 1) -> dict:
    """Re-run an experiment from its manifest alone."""
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    if manifest.get("schema") != MANIFEST_SCHEMA:
        raise ConfigurationError(
            f"unexpected manifest schema {manifest.get('schema')!r}")
    config = parse_config(manifest["config"])
    return run_experiment(config, out_dir, workers=workers)
