"""Seeded Monte Carlo experiments, aggregation and CSV/JSON output.

Run ``i`` draws everything from ``numpy.random.SeedSequence([base_seed, i])``
(PCG64 generators).  Its four spawned children feed, in order, the user
draw, the orientation draw, the channel draw (each user-AP link then gets its
own grandchild keyed by ``(k, b)``) and the annealer.  Sweep points reuse the
same per-run seeds, so every point sees the same users and bodies.
"""

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from . import __version__
from .channel import sample_channels
from .errors import ConfigurationError, EnumerationLimitError
from .params import SystemParams
from .venue import default_scenario_dict, realize_blockage, scenario_from_dict

SCHEMES = ("noma", "oma", "both")
ORACLES = (None, "schedule", "antenna", "full")
SWEEP_AXES = ("none", "p_total", "M_AP", "B")
CSV_HEADER = ("run", "scheme", "sweep_value", "sum_rate", "feasible", "seed")
# SystemParams fields owned by top-level experiment keys
_TOP_LEVEL_PARAMS = ("ap_antennas", "rf_chains", "total_power_dbm", "rate_min")


@dataclass
class ExperimentConfig:
    """Everything that determines an experiment's output bytes.

    ``scenario`` is a scenario dict, a path to a scenario JSON file, or None
    for the built-in lecture hall.  ``aps`` keeps the first B APs of the
    scenario (None keeps all).  ``system`` overrides any other
    :class:`SystemParams` field.
    """

    scenario: object = None
    users: int = 20
    aps: int = None
    rf_chains: int = 4
    ap_antennas: int = 36
    total_power_dbm: float = 30.0
    rate_min: float = 0.25
    scheme: str = "noma"
    runs: int = 10
    base_seed: int = 0
    oracle: str = None
    sweep_axis: str = "none"
    sweep_values: list = field(default_factory=list)
    out: str = "results"
    workers: int = 1
    blockage: bool = True
    system: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigurationError([f"{k}: unknown field" for k in unknown])
        cfg = cls(**data)
        cfg.sweep_values = list(cfg.sweep_values)
        cfg.system = dict(cfg.system)
        return cfg

    def to_dict(self):
        return asdict(self)

    def resolved(self):
        """Copy with the scenario inlined, so the dict alone reproduces the run."""
        scen = self.scenario
        if scen is None:
            scen = default_scenario_dict()
        elif isinstance(scen, (str, os.PathLike)):
            try:
                with open(scen) as fh:
                    scen = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigurationError(f"scenario: cannot read {scen!r}: {exc}") from None
        return replace(self, scenario=dict(scen), sweep_values=list(self.sweep_values),
                       system=dict(self.system))

    def validate(self):
        errs = []

        def need(cond, msg):
            if not cond:
                errs.append(msg)

        need(isinstance(self.runs, int) and self.runs >= 1, "runs: must be an integer >= 1")
        need(isinstance(self.users, int) and self.users >= 1, "users: must be an integer >= 1")
        need(isinstance(self.rf_chains, int) and self.rf_chains >= 1,
             "rf_chains: must be an integer >= 1")
        need(isinstance(self.ap_antennas, int) and self.ap_antennas >= 6
             and self.ap_antennas % 6 == 0, "ap_antennas: must be a positive multiple of 6")
        need(self.aps is None or (isinstance(self.aps, int) and self.aps >= 1),
             "aps: must be null or an integer >= 1")
        need(self.scheme in SCHEMES, f"scheme: must be one of {', '.join(SCHEMES)}")
        need(self.oracle in ORACLES, "oracle: must be null, schedule, antenna or full")
        need(self.sweep_axis in SWEEP_AXES, f"sweep_axis: must be one of {', '.join(SWEEP_AXES)}")
        need(isinstance(self.base_seed, int) and 0 <= self.base_seed < 2 ** 64,
             "base_seed: must be an integer in [0, 2**64)")
        need(isinstance(self.workers, int) and self.workers >= 1, "workers: must be >= 1")
        need(self.rate_min >= 0, "rate_min: must be >= 0")
        if self.sweep_axis != "none" and not self.sweep_values:
            errs.append("sweep_values: required when sweep_axis is set")
        for i, v in enumerate(self.sweep_values):
            if self.sweep_axis in ("M_AP", "B") and not (float(v).is_integer() and v >= 1):
                errs.append(f"sweep_values[{i}]: {self.sweep_axis} values must be positive integers")
            if self.sweep_axis == "M_AP" and float(v).is_integer() and int(v) % 6:
                errs.append(f"sweep_values[{i}]: M_AP must be a multiple of 6")
        bad = sorted(set(self.system) - {f.name for f in fields(SystemParams)})
        errs.extend(f"system.{k}: unknown parameter" for k in bad)
        errs.extend(f"system.{k}: set it through the top-level key" for k in self.system
                    if k in _TOP_LEVEL_PARAMS)
        if not errs:
            try:
                self.params().validate()
            except ConfigurationError as exc:
                errs.extend(f"system.{p}" for p in exc.problems)
            try:
                scen = scenario_from_dict(self.resolved().scenario)
            except ConfigurationError as exc:
                errs.extend(f"scenario.{p}" for p in exc.problems)
            else:
                b_values = [self.aps or scen.num_aps]
                if self.sweep_axis == "B":
                    b_values += [int(v) for v in self.sweep_values]
                if max(b_values) > scen.num_aps:
                    errs.append(f"aps: scenario has only {scen.num_aps} APs")
                if self.users > scen.num_seats:
                    errs.append(f"users: scenario has only {scen.num_seats} seats")
        if errs:
            raise ConfigurationError(errs)
        return self

    def params(self, sweep_value=None):
        kw = dict(self.system)
        kw.update(ap_antennas=self.ap_antennas, rf_chains=self.rf_chains,
                  total_power_dbm=self.total_power_dbm, rate_min=self.rate_min)
        if self.sweep_axis == "p_total" and sweep_value is not None:
            kw["total_power_dbm"] = float(sweep_value)
        if self.sweep_axis == "M_AP" and sweep_value is not None:
            kw["ap_antennas"] = int(sweep_value)
        return SystemParams(**kw)

    def num_aps(self, scenario, sweep_value=None):
        if self.sweep_axis == "B" and sweep_value is not None:
            return int(sweep_value)
        return self.aps or scenario.num_aps


@dataclass
class ResultRow:
    run: int
    scheme: str
    sweep_value: object
    sum_rate: float
    feasible: bool
    seed: int
    rates: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    traces: dict = field(default_factory=dict)


@dataclass
class RunResult:
    config: ExperimentConfig
    rows: list

    def summary(self):
        """Mean, standard error and infeasible fraction per (scheme, sweep value),
        both over all runs and over the unflagged ones."""
        groups = {}
        for r in self.rows:
            groups.setdefault((r.scheme, r.sweep_value), []).append(r)
        out = []
        for (scheme, sv), rows in groups.items():
            vals = np.array([r.sum_rate for r in rows])
            ok = np.array([r.sum_rate for r in rows if r.feasible])
            out.append({"scheme": scheme, "sweep_value": sv, "runs": len(rows),
                        "mean": _mean(vals), "stderr": _stderr(vals),
                        "infeasible_fraction": 1.0 - len(ok) / len(rows),
                        "feasible_runs": len(ok), "mean_feasible": _mean(ok),
                        "stderr_feasible": _stderr(ok)})
        return out

    @property
    def all_infeasible(self):
        return bool(self.rows) and not any(r.feasible for r in self.rows)


def _mean(v):
    return float(math.fsum(v) / len(v)) if len(v) else None


def _stderr(v):
    return float(np.std(v, ddof=1) / math.sqrt(len(v))) if len(v) > 1 else 0.0


def run_seed(base_seed, run):
    return np.random.SeedSequence([base_seed, run])


def seed_value(seq):
    """64-bit integer identifying a run's seed sequence (written to the CSV)."""
    return int(seq.generate_state(1, np.uint64)[0])


def _run_one(task):
    cfg_dict, sweep_value, run = task
    cfg = ExperimentConfig.from_dict(cfg_dict)
    return run_single(cfg, sweep_value, run)


@dataclass
class Realization:
    """One seeded draw: parameters, channels and the annealer's generator."""

    params: SystemParams
    chan: object
    sa_seed: object  # SeedSequence for the annealer
    seed: int

    def sa_rng(self):
        return np.random.Generator(np.random.PCG64(self.sa_seed))


def realize(cfg, sweep_value, run):
    """Users, body orientations and channels of run ``run`` at one sweep point."""
    params = cfg.params(sweep_value)
    scenario = scenario_from_dict(cfg.scenario)
    B = cfg.num_aps(scenario, sweep_value)
    aps = [replace(ap, antenna_count=params.ap_antennas, rf_chain_count=params.rf_chains)
           for ap in scenario.aps[:B]]
    scenario = scenario.with_aps(aps)
    seq = run_seed(cfg.base_seed, run)
    s_users, s_orient, s_chan, s_sa = seq.spawn(4)
    users = sorted(int(u) for u in np.random.Generator(np.random.PCG64(s_users)).choice(
        scenario.num_seats, cfg.users, replace=False))
    blockage = realize_blockage(scenario, np.random.Generator(np.random.PCG64(s_orient)),
                                users, cfg.blockage)
    chan = sample_channels(scenario, users, blockage, s_chan, params)
    return Realization(params, chan, s_sa, seed_value(seq))


def run_single(cfg, sweep_value, run):
    """All rows of one (sweep value, run) pair; schemes share one realization."""
    from . import oracle as orc
    from .antenna import sa_allocate
    from .pipeline import run_noma, run_oma
    from .scheduling import mwcs

    real = realize(cfg, sweep_value, run)
    params, chan, seed = real.params, real.chan, real.seed
    sa_rng = real.sa_rng()
    N = params.rf_chains
    sv = "" if cfg.sweep_axis == "none" else sweep_value
    rows = []

    def row(scheme, res=None, value=None, feasible=True, traces=None):
        if res is not None:
            rows.append(ResultRow(run, scheme, sv, float(res.sum_rate), bool(res.feasible), seed,
                                  [float(x) for x in res.rates], dict(res.timings),
                                  res.traces))
        else:
            rows.append(ResultRow(run, scheme, sv, float(value), feasible, seed,
                                  traces=traces or {}))

    sched_res = mwcs(chan, params, N)
    if cfg.scheme in ("noma", "both") or cfg.oracle == "full":
        noma = run_noma(chan, params, N, sa_rng, sched_res.schedule)
        noma.traces["mwcs"] = sched_res.trace
        noma.traces["mwcs_accepted"] = sched_res.accepted
        if cfg.scheme in ("noma", "both"):
            row("noma", noma)
    if cfg.scheme in ("oma", "both"):
        row("oma", run_oma(chan, params, N, sched_res.schedule))
    try:
        if cfg.oracle == "schedule":
            row("mwcs_stage1", value=sched_res.sum_rate)
            row("oracle_schedule", value=orc.exhaustive_schedule_opt(chan, params, N).value)
        elif cfg.oracle == "antenna":
            sa = sa_allocate(chan, sched_res.schedule, params,
                             real.sa_rng())
            row("sa_stage2", value=sa.sum_rate)
            row("oracle_antenna",
                value=orc.exhaustive_antenna_opt(chan, sched_res.schedule, params).value)
        elif cfg.oracle == "full":
            if cfg.scheme == "oma":
                row("noma", noma)
            row("oracle_full", value=orc.full_exhaustive(chan, params, N).value)
    except EnumerationLimitError as exc:
        raise RuntimeError(f"oracle '{cfg.oracle}' refused: {exc}") from None
    return rows


def run_experiment(config):
    """Execute every (sweep value, run) pair, in parallel when ``workers > 1``.

    Rows come back ordered by sweep value, run index and scheme, whatever the
    completion order.
    """
    cfg = config.resolved().validate()
    values = cfg.sweep_values if cfg.sweep_axis != "none" else [None]
    tasks = [(cfg.to_dict(), v, i) for v in values for i in range(cfg.runs)]
    if cfg.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            chunks = list(pool.map(_run_one, tasks))
    else:
        chunks = [_run_one(t) for t in tasks]
    return RunResult(cfg, [r for chunk in chunks for r in chunk])


def _fmt(x):
    return format(x, ".17g") if isinstance(x, float) else str(x)


def emit_results(result, out_dir):
    """Write ``results.csv``, ``metadata.json`` and ``traces.json`` into ``out_dir``."""
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "results.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in result.rows:
            w.writerow([r.run, r.scheme, _fmt(r.sweep_value), _fmt(r.sum_rate),
                        int(r.feasible), r.seed])
    cfg = result.config.to_dict()
    meta = {"package": "mmnoma", "version": __version__,
            "seed_derivation": "numpy SeedSequence([base_seed, run]) -> PCG64; "
                               "children: users, orientations, channels, annealer",
            "config": cfg, "system_params": result.config.params().to_dict(),
            "summary": result.summary(),
            "all_runs_infeasible": result.all_infeasible}
    with open(os.path.join(out_dir, "metadata.json"), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    traces = [{"run": r.run, "scheme": r.scheme, "sweep_value": r.sweep_value,
               "rates": r.rates, "traces": _jsonable(r.traces)} for r in result.rows]
    with open(os.path.join(out_dir, "traces.json"), "w") as fh:
        json.dump(traces, fh, sort_keys=True)
        fh.write("\n")
    return [os.path.join(out_dir, n) for n in ("results.csv", "metadata.json", "traces.json")]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj
