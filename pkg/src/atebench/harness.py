"""Experiment harness: configuration, seeding, execution, summaries, plots.

A run is described by a JSON plan: a master seed, shared run sizes (number
of processes, replicates, sample sizes, estimator ids), and a list of
scenarios, each a prior template whose ``b``/``eta``/``rho`` entries may be
fixed numbers or uniform ranges drawn per process.  Every random draw in the
pipeline is seeded from the run coordinates — ``(master seed, scenario,
process index, replicate, stage)`` — so any record can be regenerated in
isolation and parallel execution is byte-for-byte identical to serial
execution (timing fields aside).

Outputs under the chosen directory:

- ``dgps/<scenario>/dgp_XXXX.json``  sampled processes (full float precision)
- ``estimates.jsonl``                one record per (replicate, estimator)
- ``summary/per_dgp.csv``            per-process bias/coverage/MSE
- ``summary/coverage.csv``           coverage median + IQR per estimator
- ``summary/reliability.csv``        |bias| exceedance curves on shared grids
- ``summary/*_by_positivity.csv``    the same, split by overlap stratum
- ``report/*.svg``, ``report/index.html``  rendered reliability curves
"""

from __future__ import annotations

import csv
import json
import multiprocessing
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .datagen import sample_dataset
from .estimators import REGISTRY, estimate
from .estimators.ate import EstimatorError
from .mechanisms import (
    Dgp,
    DgpProvenance,
    DgpTruth,
    FeasibilityExhausted,
    OutcomeMechanism,
    TreatmentMechanism,
    sample_dgp,
)
from .metrics import (
    coverage_table,
    dgp_metrics,
    positivity_stratum,
    reliability_curve,
    threshold_grid,
)
from .universe import PriorConfig, enumerate_support

ESTIMATES_NAME = "estimates.jsonl"

_MASK64 = (1 << 64) - 1
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


class ConfigError(Exception):
    """The run plan is malformed."""


def derive_seed(master_seed: int, scenario: str, dgp: int, rep: int, stage: str) -> int:
    """64-bit seed from run coordinates: FNV-1a, then a splitmix64 finalizer.

    The finalizer decorrelates the structured FNV outputs of neighboring
    coordinates; the result feeds ``numpy.random.default_rng`` directly.
    """
    data = f"{master_seed}|{scenario}|{dgp}|{rep}|{stage}".encode()
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    z = h
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


# ---------------------------------------------------------------------------
# run plan


@dataclass(frozen=True)
class HyperSpec:
    """A scenario hyperparameter: either fixed or uniform on an interval."""

    fixed: float | None = None
    low: float = 0.0
    high: float = 0.0

    @classmethod
    def parse(cls, value, name: str) -> "HyperSpec":
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return cls(fixed=float(value))
        if isinstance(value, dict):
            if value.get("dist") != "uniform":
                raise ConfigError(f"{name}: only 'uniform' distributions are supported")
            try:
                low, high = float(value["low"]), float(value["high"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"{name}: uniform spec needs numeric low/high") from exc
            if not low < high:
                raise ConfigError(f"{name}: need low < high")
            return cls(low=low, high=high)
        raise ConfigError(f"{name}: expected a number or a distribution object")

    def draw(self, rng: np.random.Generator) -> float:
        if self.fixed is not None:
            return self.fixed
        return float(rng.uniform(self.low, self.high))


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise ConfigError(f"{where}: missing key {key!r}")
    return d[key]


@dataclass(frozen=True)
class ScenarioSpec:
    """One prior template; hyperparameters are drawn per process."""

    name: str
    u: int
    h: int
    c: int
    k: int
    hte: bool
    q: float
    tol: float
    b: HyperSpec
    eta: HyperSpec
    rho: HyperSpec
    burn_in: int | None = None
    thin: int | None = None

    @classmethod
    def parse(cls, d: dict, *, burn_in: int | None = None,
              thin: int | None = None) -> "ScenarioSpec":
        name = d.get("name")
        if not isinstance(name, str) or not name:
            raise ConfigError("every scenario needs a non-empty 'name'")
        if not all(ch.isalnum() or ch in "-_" for ch in name):
            raise ConfigError(f"scenario name {name!r} must be [A-Za-z0-9_-]")
        where = f"scenario {name!r}"
        try:
            u = int(_require(d, "u", where))
            h = int(_require(d, "h", where))
            c = int(_require(d, "c", where))
            k = int(_require(d, "k", where))
            hte = bool(_require(d, "hte", where))
            q = float(_require(d, "q", where))
            tol = float(d.get("tol", 0.01))
            if "burn_in" in d:
                burn_in = int(d["burn_in"])
            if "thin" in d:
                thin = int(d["thin"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{where}: bad field value ({exc})") from exc
        return cls(
            name=name, u=u, h=h, c=c, k=k, hte=hte, q=q, tol=tol,
            b=HyperSpec.parse(_require(d, "b", where), f"{name}.b"),
            eta=HyperSpec.parse(_require(d, "eta", where), f"{name}.eta"),
            rho=HyperSpec.parse(_require(d, "rho", where), f"{name}.rho"),
            burn_in=burn_in, thin=thin,
        )

    def config_for(self, master_seed: int, index: int) -> PriorConfig:
        """Prior configuration for process ``index``: hypers drawn b, eta, rho."""
        rng = np.random.default_rng(derive_seed(master_seed, self.name, index, 0, "hyper"))
        b = self.b.draw(rng)
        eta = self.eta.draw(rng)
        rho = self.rho.draw(rng)
        try:
            return PriorConfig(
                u=self.u, h=self.h, c=self.c, k=self.k, hte=self.hte,
                q=self.q, b=b, tol=self.tol, eta=eta, rho=rho,
            )
        except ValueError as exc:
            raise ConfigError(f"scenario {self.name!r}: {exc}") from exc


@dataclass(frozen=True)
class RunPlan:
    """A full experiment: scenarios crossed with shared run sizes."""

    master_seed: int
    scenarios: tuple
    n_dgps: int
    n_reps: int
    sample_sizes: tuple
    estimators: tuple
    output_dir: str | None = None

    @classmethod
    def parse(cls, d: dict) -> "RunPlan":
        if not isinstance(d, dict):
            raise ConfigError("plan must be a JSON object")
        try:
            master_seed = int(d["master_seed"])  # ints or decimal strings
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError("plan needs an integer 'master_seed'") from exc
        try:
            n_dgps = int(_require(d, "n_dgps", "plan"))
            n_reps = int(_require(d, "n_reps", "plan"))
            sample_sizes = tuple(int(n) for n in _require(d, "sample_sizes", "plan"))
            estimators = tuple(_require(d, "estimators", "plan"))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"plan: bad field value ({exc})") from exc
        if n_dgps < 1 or n_reps < 1 or not sample_sizes or any(n < 1 for n in sample_sizes):
            raise ConfigError("plan: counts and sample sizes must be positive")
        unknown = [e for e in estimators if e not in REGISTRY]
        if unknown or not estimators:
            raise ConfigError(
                f"plan: unknown estimators {unknown}; known: {sorted(REGISTRY)}"
            )
        burn_in = None if d.get("burn_in") is None else int(d["burn_in"])
        thin = None if d.get("thin") is None else int(d["thin"])
        raw = d.get("scenarios")
        if not isinstance(raw, list) or not raw:
            raise ConfigError("plan needs a non-empty 'scenarios' list")
        scenarios = tuple(
            ScenarioSpec.parse(s, burn_in=burn_in, thin=thin) for s in raw
        )
        names = [s.name for s in scenarios]
        if len(set(names)) != len(names):
            raise ConfigError("scenario names must be unique")
        output_dir = d.get("output_dir")
        if output_dir is not None and not isinstance(output_dir, str):
            raise ConfigError("output_dir must be a string path")
        return cls(
            master_seed=master_seed, scenarios=scenarios, n_dgps=n_dgps,
            n_reps=n_reps, sample_sizes=sample_sizes, estimators=estimators,
            output_dir=output_dir,
        )

    @classmethod
    def load(cls, path) -> "RunPlan":
        try:
            with open(path) as fh:
                d = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read plan: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"plan is not valid JSON: {exc}") from exc
        return cls.parse(d)


# ---------------------------------------------------------------------------
# process documents

_SUPPORT_CACHE: dict = {}


def _cached_support(u: int, h: int, c: int):
    key = (u, h, c)
    if key not in _SUPPORT_CACHE:
        _SUPPORT_CACHE[key] = enumerate_support(u, h, c)
    return _SUPPORT_CACHE[key]


def _config_dict(cfg: PriorConfig) -> dict:
    return {
        "u": cfg.u, "h": cfg.h, "c": cfg.c, "k": cfg.k, "hte": cfg.hte,
        "q": cfg.q, "b": cfg.b, "tol": cfg.tol, "eta": cfg.eta, "rho": cfg.rho,
    }


def _opt_list(arr):
    return None if arr is None else np.asarray(arr).tolist()


def _opt_array(values):
    return None if values is None else np.asarray(values, dtype=np.float64)


def dgp_to_dict(dgp: Dgp, scenario: str, index: int) -> dict:
    return {
        "scenario": scenario,
        "index": index,
        "config": _config_dict(dgp.config),
        "pmf": dgp.pmf.tolist(),
        "treatment": {
            "alpha": dgp.treatment.alpha.tolist(),
            "functions": _opt_list(dgp.treatment.functions),
            "g_table": dgp.treatment.g_table.tolist(),
            "p_treat": dgp.treatment.p_treat,
        },
        "outcome": {
            "lambda_coeffs": dgp.outcome.lambda_coeffs.tolist(),
            "beta_coeffs": dgp.outcome.beta_coeffs.tolist(),
            "functions_h": _opt_list(dgp.outcome.functions_h),
            "functions_w": _opt_list(dgp.outcome.functions_w),
            "m_table": dgp.outcome.m_table.tolist(),
            "hte": dgp.outcome.hte,
        },
        "truth": {
            "ate": dgp.truth.ate,
            "confounding_bias": dgp.truth.confounding_bias,
            "positivity_index": dgp.truth.positivity_index,
            "ey1": dgp.truth.ey1,
            "ey0": dgp.truth.ey0,
        },
        "provenance": {
            "iterations": dgp.provenance.iterations,
            "seeds": dict(dgp.provenance.seeds),
        },
    }


def dgp_from_dict(d: dict) -> Dgp:
    cfg = PriorConfig(**d["config"])
    support = _cached_support(cfg.u, cfg.h, cfg.c)
    tr, oc = d["treatment"], d["outcome"]
    treatment = TreatmentMechanism(
        alpha=np.asarray(tr["alpha"], dtype=np.float64),
        g_table=np.asarray(tr["g_table"], dtype=np.float64),
        p_treat=float(tr["p_treat"]),
        functions=_opt_array(tr["functions"]),
    )
    outcome = OutcomeMechanism(
        lambda_coeffs=np.asarray(oc["lambda_coeffs"], dtype=np.float64),
        beta_coeffs=np.asarray(oc["beta_coeffs"], dtype=np.float64),
        m_table=np.asarray(oc["m_table"], dtype=np.float64),
        hte=bool(oc["hte"]),
        functions_h=_opt_array(oc["functions_h"]),
        functions_w=_opt_array(oc["functions_w"]),
    )
    prov = d.get("provenance", {})
    return Dgp(
        config=cfg,
        support=support,
        pmf=np.asarray(d["pmf"], dtype=np.float64),
        treatment=treatment,
        outcome=outcome,
        truth=DgpTruth(**d["truth"]),
        provenance=DgpProvenance(
            iterations=int(prov.get("iterations", 1)),
            seeds=dict(prov.get("seeds", {})),
        ),
    )


def dgp_path(out, scenario: str, index: int) -> Path:
    return Path(out) / "dgps" / scenario / f"dgp_{index:04d}.json"


# ---------------------------------------------------------------------------
# stage 1: sample processes


def run_sample_dgps(plan: RunPlan, out, *, resume: bool = False) -> tuple:
    """Sample every scenario's processes to JSON documents.

    A process whose bias constraint stays infeasible through the whole
    attempt budget is recorded as a failure document (same path, with
    ``"failed": true`` and the exhaustion details) instead of aborting the
    run; later stages skip those slots.  Returns ``(n_sampled, n_failed)``.
    """
    n_sampled = n_failed = 0
    for scenario in plan.scenarios:
        dest = Path(out) / "dgps" / scenario.name
        dest.mkdir(parents=True, exist_ok=True)
        for j in range(plan.n_dgps):
            path = dgp_path(out, scenario.name, j)
            if resume and path.exists():
                continue
            config = scenario.config_for(plan.master_seed, j)
            seeds = {
                "hyper": derive_seed(plan.master_seed, scenario.name, j, 0, "hyper"),
                "dgp": derive_seed(plan.master_seed, scenario.name, j, 0, "dgp"),
            }
            rng = np.random.default_rng(seeds["dgp"])
            try:
                dgp = sample_dgp(
                    config, rng, burn_in=scenario.burn_in, thin=scenario.thin
                )
            except FeasibilityExhausted as exc:
                doc = {
                    "scenario": scenario.name,
                    "index": j,
                    "failed": True,
                    "error": f"FeasibilityExhausted: {exc.attempts} attempts",
                    "config": _config_dict(config),
                    "provenance": {"iterations": exc.attempts, "seeds": seeds},
                }
                n_failed += 1
            else:
                dgp.provenance.seeds.update(seeds)
                doc = dgp_to_dict(dgp, scenario.name, j)
                n_sampled += 1
            tmp = path.with_suffix(".json.tmp")
            with open(tmp, "w") as fh:
                json.dump(doc, fh)
            tmp.replace(path)
    return n_sampled, n_failed


# ---------------------------------------------------------------------------
# stage 2: simulate and estimate


def _record_key(rec: dict) -> tuple:
    return (rec["scenario"], rec["dgp_id"], rec["rep"], rec["n"], rec["estimator_id"])


def _json_safe(value):
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def _run_task(task) -> list:
    """One unit of work: a (process, replicate, size) cell for some estimators."""
    master_seed, scenario, dgp_dict, index, rep, n, estimators = task
    dgp = dgp_from_dict(dgp_dict)
    data_rng = np.random.default_rng(
        derive_seed(master_seed, scenario, index, rep, f"data:{n}")
    )
    dataset = sample_dataset(dgp, n, data_rng)
    records = []
    for name in estimators:
        rng = np.random.default_rng(
            derive_seed(master_seed, scenario, index, rep, f"est:{name}:{n}")
        )
        started = time.perf_counter()
        try:
            result = estimate(name, dataset, rng)
            records.append({
                "scenario": scenario, "dgp_id": index, "rep": rep, "n": n,
                "estimator_id": name,
                "point": result.point, "se": result.se,
                "ci_low": result.ci_low, "ci_high": result.ci_high,
                "wall_seconds": time.perf_counter() - started,
                "diagnostics": _json_safe(result.diagnostics),
                "error": None,
            })
        except (EstimatorError, FloatingPointError, np.linalg.LinAlgError) as exc:
            records.append({
                "scenario": scenario, "dgp_id": index, "rep": rep, "n": n,
                "estimator_id": name,
                "point": None, "se": None, "ci_low": None, "ci_high": None,
                "wall_seconds": time.perf_counter() - started,
                "diagnostics": {},
                "error": f"{type(exc).__name__}: {exc}",
            })
    return records


def _load_done(path: Path) -> set:
    done = set()
    if path.exists():
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if line:
                    done.add(_record_key(json.loads(line)))
    return done


def _load_dgp_doc(out, scenario: str, index: int) -> dict:
    path = dgp_path(out, scenario, index)
    if not path.exists():
        raise ConfigError(f"missing process document {path}; run sample-dgps first")
    with open(path) as fh:
        return json.load(fh)


def _build_tasks(plan: RunPlan, out, done: set) -> list:
    tasks = []
    for scenario in plan.scenarios:
        for j in range(plan.n_dgps):
            doc = _load_dgp_doc(out, scenario.name, j)
            if doc.get("failed"):
                continue
            for rep in range(plan.n_reps):
                for n in plan.sample_sizes:
                    missing = tuple(
                        e for e in plan.estimators
                        if (scenario.name, j, rep, n, e) not in done
                    )
                    if missing:
                        tasks.append(
                            (plan.master_seed, scenario.name, doc, j, rep, n, missing)
                        )
    return tasks


def run_simulate(plan: RunPlan, out, *, workers: int = 1, resume: bool = False) -> tuple:
    """Simulate datasets and run estimators; returns (n_ok, n_failed).

    Tasks are dispatched in a fixed order and results written in that same
    order, so the estimates file does not depend on the worker count.
    """
    est_path = Path(out) / ESTIMATES_NAME
    done = _load_done(est_path) if resume else set()
    tasks = _build_tasks(plan, out, done)
    n_ok = n_failed = 0
    mode = "a" if resume else "w"
    with open(est_path, mode) as fh:
        if workers > 1 and tasks:
            with multiprocessing.Pool(workers) as pool:
                results = pool.imap(_run_task, tasks)
                for records in results:
                    for rec in records:
                        fh.write(json.dumps(rec) + "\n")
                        n_ok += rec["error"] is None
                        n_failed += rec["error"] is not None
        else:
            for task in tasks:
                for rec in _run_task(task):
                    fh.write(json.dumps(rec) + "\n")
                    n_ok += rec["error"] is None
                    n_failed += rec["error"] is not None
    return n_ok, n_failed


# ---------------------------------------------------------------------------
# stage 3: summaries


def _load_records(out) -> list:
    path = Path(out) / ESTIMATES_NAME
    if not path.exists():
        raise ConfigError(f"no estimates at {path}; run simulate first")
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def _write_csv(path: Path, header: list, rows: list) -> Path:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def run_summarize(plan: RunPlan, out) -> dict:
    """Reduce the estimates into per-process and cross-process tables."""
    records = _load_records(out)
    by_cell: dict = {}
    for rec in records:
        key = (rec["scenario"], rec["dgp_id"], rec["n"], rec["estimator_id"])
        by_cell.setdefault(key, []).append(rec)

    truths: dict = {}
    pos_index: dict = {}
    for scenario in plan.scenarios:
        for j in range(plan.n_dgps):
            doc = _load_dgp_doc(out, scenario.name, j)
            if doc.get("failed"):
                continue
            truths[(scenario.name, j)] = doc["truth"]["ate"]
            pos_index[(scenario.name, j)] = doc["truth"]["positivity_index"]

    summary_dir = Path(out) / "summary"
    summary_dir.mkdir(parents=True, exist_ok=True)

    def stratum_of(scenario: str, dgp_id: int) -> str:
        return positivity_stratum(pos_index[(scenario, dgp_id)]).label

    per_dgp_rows = []
    by_group: dict = {}  # (scenario, n) -> [DgpMetrics]
    for key in sorted(by_cell):
        scenario, j, n, estimator = key
        cell = by_cell[key]
        ok = [r for r in cell if r["error"] is None]
        truth = truths[(scenario, j)]
        metrics = dgp_metrics(
            np.array([r["point"] for r in ok], dtype=np.float64),
            np.array([r["ci_low"] for r in ok], dtype=np.float64),
            np.array([r["ci_high"] for r in ok], dtype=np.float64),
            np.array([r["se"] for r in ok], dtype=np.float64),
            truth,
            dgp_id=j, estimator_id=estimator, n=n,
            n_failures=len(cell) - len(ok),
        )
        per_dgp_rows.append([
            scenario, j, n, estimator, truth, pos_index[(scenario, j)],
            stratum_of(scenario, j),
            metrics.n_reps, metrics.n_failures, metrics.bias, metrics.mean_point,
            metrics.sd_point, metrics.mse, metrics.coverage, metrics.mean_se,
        ])
        if metrics.n_reps:
            by_group.setdefault((scenario, n), []).append(metrics)

    paths = {}
    paths["per_dgp"] = _write_csv(
        summary_dir / "per_dgp.csv",
        ["scenario", "dgp_id", "n", "estimator_id", "truth", "positivity_index",
         "stratum", "n_reps", "n_failures", "bias", "mean_point", "sd_point",
         "mse", "coverage", "mean_se"],
        per_dgp_rows,
    )

    # coverage tables: per scenario, plus the positivity-stratified variant
    cov_rows = []
    cov_strat_rows = []
    scenario_names = sorted({s for (s, _) in by_group})
    for scenario in scenario_names:
        pooled = [m for (s, _), ms in by_group.items() if s == scenario for m in ms]
        for est, n, count, median, q25, q75 in coverage_table(pooled):
            cov_rows.append([scenario, n, est, count, median, q25, q75])
        for stratum in sorted({stratum_of(scenario, m.dgp_id) for m in pooled}):
            subset = [m for m in pooled if stratum_of(scenario, m.dgp_id) == stratum]
            for est, n, count, median, q25, q75 in coverage_table(subset):
                cov_strat_rows.append(
                    [scenario, stratum, n, est, count, median, q25, q75]
                )
    paths["coverage"] = _write_csv(
        summary_dir / "coverage.csv",
        ["scenario", "n", "estimator_id", "n_dgps", "median", "q25", "q75"],
        cov_rows,
    )
    paths["coverage_by_positivity"] = _write_csv(
        summary_dir / "coverage_by_positivity.csv",
        ["scenario", "stratum", "n", "estimator_id", "n_dgps", "median", "q25", "q75"],
        cov_strat_rows,
    )

    # reliability curves: one shared threshold grid per (scenario, n) so the
    # estimators' curves (and the stratified splits) are comparable
    rel_rows = []
    rel_strat_rows = []
    for (scenario, n) in sorted(by_group):
        group = by_group[(scenario, n)]
        grid = threshold_grid(np.array([m.bias for m in group]))
        for est in sorted({m.estimator_id for m in group}):
            ms = [m for m in group if m.estimator_id == est]
            curve = reliability_curve(ms, grid)
            for thr, ex in zip(curve.thresholds, curve.exceedance):
                rel_rows.append([scenario, est, n, float(thr), float(ex)])
            for stratum in sorted({stratum_of(scenario, m.dgp_id) for m in ms}):
                sub = [m for m in ms if stratum_of(scenario, m.dgp_id) == stratum]
                sub_curve = reliability_curve(sub, grid)
                for thr, ex in zip(sub_curve.thresholds, sub_curve.exceedance):
                    rel_strat_rows.append(
                        [scenario, stratum, est, n, float(thr), float(ex)]
                    )
    paths["reliability"] = _write_csv(
        summary_dir / "reliability.csv",
        ["scenario", "estimator_id", "n", "threshold", "exceedance"],
        rel_rows,
    )
    paths["reliability_by_positivity"] = _write_csv(
        summary_dir / "reliability_by_positivity.csv",
        ["scenario", "stratum", "estimator_id", "n", "threshold", "exceedance"],
        rel_strat_rows,
    )
    return paths


# ---------------------------------------------------------------------------
# stage 4: report

_PALETTE = ("#1b6ca8", "#c0392b", "#27ae60", "#8e44ad", "#d35400", "#16a085")


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def step_curve_svg(series, title: str, xlabel: str, ylabel: str) -> str:
    """Render step curves (threshold, exceedance) as a standalone SVG string."""
    width, height = 640, 420
    ml, mr, mt, mb = 70, 20, 42, 56
    pw, ph = width - ml - mr, height - mt - mb
    xmax = max((float(x[-1]) for _, x, _ in series if len(x)), default=1.0)
    if xmax <= 0:
        xmax = 1.0

    def sx(x):
        return ml + pw * (x / xmax)

    def sy(y):
        return mt + ph * (1.0 - y)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{ml + pw / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="#888"/>',
    ]
    for i in range(5):
        yv = i / 4
        parts.append(
            f'<line x1="{ml}" y1="{_fmt(sy(yv))}" x2="{ml + pw}" y2="{_fmt(sy(yv))}" '
            f'stroke="#ddd" stroke-width="0.5"/>'
        )
        parts.append(
            f'<text x="{ml - 8}" y="{_fmt(sy(yv) + 4)}" text-anchor="end">{yv:g}</text>'
        )
        xv = xmax * i / 4
        parts.append(
            f'<text x="{_fmt(sx(xv))}" y="{mt + ph + 18}" text-anchor="middle">{xv:.3g}</text>'
        )
    parts.append(
        f'<text x="{ml + pw / 2}" y="{height - 14}" text-anchor="middle">{xlabel}</text>'
    )
    parts.append(
        f'<text x="18" y="{mt + ph / 2}" text-anchor="middle" '
        f'transform="rotate(-90 18 {mt + ph / 2})">{ylabel}</text>'
    )
    for idx, (label, xs, ys) in enumerate(series):
        color = _PALETTE[idx % len(_PALETTE)]
        pts = []
        for i in range(len(xs)):
            pts.append(f"{_fmt(sx(float(xs[i])))},{_fmt(sy(float(ys[i])))}")
            if i + 1 < len(xs):
                pts.append(f"{_fmt(sx(float(xs[i + 1])))},{_fmt(sy(float(ys[i])))}")
        parts.append(
            f'<polyline points="{" ".join(pts)}" fill="none" stroke="{color}" '
            f'stroke-width="1.6"/>'
        )
        ly = mt + 16 + 16 * idx
        parts.append(
            f'<line x1="{ml + pw - 150}" y1="{ly}" x2="{ml + pw - 122}" y2="{ly}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        parts.append(f'<text x="{ml + pw - 116}" y="{ly + 4}">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts)


def run_report(plan: RunPlan, out) -> list:
    """Render reliability curves per (scenario, size) plus an index page."""
    rel_path = Path(out) / "summary" / "reliability.csv"
    if not rel_path.exists():
        raise ConfigError(f"no summary at {rel_path}; run summarize first")
    curves: dict = {}
    with open(rel_path) as fh:
        for row in csv.DictReader(fh):
            key = (row["scenario"], int(row["n"]))
            curves.setdefault(key, {}).setdefault(row["estimator_id"], []).append(
                (float(row["threshold"]), float(row["exceedance"]))
            )
    report_dir = Path(out) / "report"
    report_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for (scenario, n) in sorted(curves):
        series = []
        for estimator in sorted(curves[(scenario, n)]):
            pts = curves[(scenario, n)][estimator]
            xs = np.array([p[0] for p in pts])
            ys = np.array([p[1] for p in pts])
            series.append((estimator, xs, ys))
        svg = step_curve_svg(
            series,
            title=f"{scenario}, n={n}: share of processes with |bias| above threshold",
            xlabel="bias threshold",
            ylabel="P(|bias| > threshold)",
        )
        path = report_dir / f"reliability_{scenario}_n{n}.svg"
        path.write_text(svg)
        written.append(path)
    index = ["<html><head><title>reliability report</title></head><body>",
             "<h1>Reliability curves</h1>"]
    for path in written:
        index.append(f'<div><h2>{path.stem}</h2><img src="{path.name}"/></div>')
    index.append("</body></html>")
    index_path = report_dir / "index.html"
    index_path.write_text("\n".join(index))
    written.append(index_path)
    return written


def run_all(plan: RunPlan, out, *, workers: int = 1, resume: bool = False) -> tuple:
    """sample-dgps, simulate, summarize, report; returns (n_ok, n_failed)."""
    run_sample_dgps(plan, out, resume=resume)
    n_ok, n_failed = run_simulate(plan, out, workers=workers, resume=resume)
    run_summarize(plan, out)
    run_report(plan, out)
    return n_ok, n_failed
