"""Seeded experiment runner: simulate, fit, post-process, score, persist.

Output layout under ``output_dir``::

    record.json                      config snapshot, per-seed rows, aggregates
    <method>/seed_<s>/truth.csv      full-matrix CSV of the true weights
    <method>/seed_<s>/b_raw.csv      raw optimizer solution
    <method>/seed_<s>/b_post.csv     thresholded, acyclic estimate
    <method>/seed_<s>/trace.csv      optimization checkpoints
    <method>/seed_<s>/metrics.json   MetricsReport without wall time
    <method>/seed_<s>/timing.json    wall time of the fit
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import graphs, metrics, optim, postproc, sem
from .errors import GolemError
from .scores import ScoreConfig

log = logging.getLogger(__name__)

METHODS = (
    "GOLEM-EV",
    "GOLEM-NV",
    "GOLEM-EV-L1",
    "GOLEM-EV-Plain",
    "GOLEM-NV-L1",
    "GOLEM-NV-Plain",
    "NOTEARS-L1",
    "NOTEARS",
)
METRIC_NAMES = (
    "shd",
    "shd_c",
    "sid",
    "tpr",
    "shd_norm",
    "shd_c_norm",
    "sid_norm",
    "n_edges_est",
    "h_raw",
    "wall_time_s",
)
WORKERS_ENV = "GOLEM_BENCH_WORKERS"
HARNESS_ITERATIONS = 10_000
FULL_ITERATIONS = 100_000


@dataclass(frozen=True)
class GraphSettings:
    model: str = "ER"
    d: int = 10
    k: int = 1
    weight_low: float = 0.5
    weight_high: float = 2.0
    weight_scale: float = 1.0

    def spec(self, seed: int) -> graphs.GraphSpec:
        return graphs.GraphSpec(self.model, self.d, self.k, self.weight_low, self.weight_high, self.weight_scale, seed)

    @property
    def label(self) -> str:
        return f"{self.model}{self.k}"


@dataclass(frozen=True)
class MethodOverride:
    lambda1: float | None = None
    lambda2: float | None = None
    learning_rate: float | None = None
    iterations: int | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    graph: GraphSettings = GraphSettings()
    noise: str = "gaussian_ev"
    noise_variance: float = 1.0
    n: int = 1000
    methods: tuple[str, ...] = ("GOLEM-EV",)
    overrides: dict = field(default_factory=dict)  # method name -> MethodOverride
    omega: float = 0.3
    n_seeds: int = 12
    base_seed: int = 0
    iterations: int = HARNESS_ITERATIONS
    learning_rate: float = 1e-3
    output_dir: str = "runs/experiment"

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ValueError(f"unknown methods {unknown}; choose from {METHODS}")
        if self.n_seeds < 1:
            raise ValueError("n_seeds must be >= 1")
        if self.noise not in sem.NOISE_KINDS:
            raise ValueError(f"unknown noise {self.noise!r}")
        ov = {}
        for name, o in dict(self.overrides).items():
            if name not in METHODS:
                raise ValueError(f"override for unknown method {name!r}")
            ov[name] = o if isinstance(o, MethodOverride) else MethodOverride(**o)
        object.__setattr__(self, "overrides", ov)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["methods"] = list(self.methods)
        out["overrides"] = {k: asdict(v) for k, v in self.overrides.items()}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        data = dict(data)
        names = {f.name for f in fields(cls)}
        extra = set(data) - names
        if extra:
            raise ValueError(f"unknown config fields: {sorted(extra)}")
        if "graph" in data and not isinstance(data["graph"], GraphSettings):
            data["graph"] = GraphSettings(**data["graph"])
        return cls(**data)


def load_config(path) -> ExperimentConfig:
    """Read an ExperimentConfig from JSON or YAML (by file suffix)."""
    text = Path(path).read_text()
    if Path(path).suffix.lower() in (".yaml", ".yml"):
        import yaml

        data = yaml.safe_load(text)
    else:
        data = json.loads(text)
    return ExperimentConfig.from_dict(data or {})


# ---------------------------------------------------------------------------
# Methods


def method_settings(method: str, cfg: ExperimentConfig):
    """Score configs and optimizer config for one method, after overrides."""
    ov = cfg.overrides.get(method, MethodOverride())
    ocfg = optim.OptimizerConfig(
        learning_rate=ov.learning_rate or cfg.learning_rate,
        iterations=ov.iterations or cfg.iterations,
        log_every=max(1, (ov.iterations or cfg.iterations) // 20),
    )
    if method.startswith("NOTEARS"):
        lam = 0.1 if method == "NOTEARS-L1" else 0.0
        if method == "NOTEARS-L1" and ov.lambda1 is not None:
            lam = ov.lambda1
        return optim.AugLagConfig(lambda1=lam), ocfg

    def pick(default: ScoreConfig) -> ScoreConfig:
        l1 = default.lambda1 if ov.lambda1 is None else ov.lambda1
        l2 = default.lambda2 if ov.lambda2 is None else ov.lambda2
        if method.endswith("-L1"):
            l2 = 0.0
        elif method.endswith("-Plain"):
            l1 = l2 = 0.0
        return replace(default, lambda1=l1, lambda2=l2)

    ev = pick(ScoreConfig.golem_ev())
    if method.startswith("GOLEM-EV"):
        return ev, ocfg
    return (ev, pick(ScoreConfig.golem_nv())), ocfg


def fit_method(method: str, x, cfg: ExperimentConfig):
    """Fit one method on centered data; returns ``(b_raw, trace)``."""
    settings, ocfg = method_settings(method, cfg)
    if method.startswith("NOTEARS"):
        return optim.fit_notears(x, settings, ocfg)
    if method.startswith("GOLEM-EV"):
        return optim.fit_golem(x, settings, ocfg)
    # NV variants start from the EV variant with the same penalty ablation.
    ev_cfg, nv_cfg = settings
    return optim.fit_golem_nv_warmstart(x, ocfg, ev_cfg=ev_cfg, nv_cfg=nv_cfg)


# ---------------------------------------------------------------------------
# Simulation per seed


def _int_seed(base_seed: int, component: str, s: int) -> int:
    return int(sem.seed_for(base_seed, component, s).generate_state(1, np.uint64)[0])


def simulate_seed(cfg: ExperimentConfig, s: int):
    """Truth graph, noise spec and centered data for absolute seed ``s``."""
    spec = cfg.graph.spec(_int_seed(cfg.base_seed, "graph", s))
    truth = graphs.generate(spec)
    if cfg.noise == "gaussian_nv":
        noise = sem.NoiseSpec.gaussian_nv(spec.d, sem.rng_for(cfg.base_seed, "sigma", s))
    else:
        noise = sem.NoiseSpec(cfg.noise, variance=cfg.noise_variance)
    x = sem.sample(truth, noise, cfg.n, sem.rng_for(cfg.base_seed, "data", s))
    return truth, noise, sem.center_columns(x)


def _run_one(method: str, truth, x, cfg: ExperimentConfig, out: Path, seed: int) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    graphs.write_matrix(truth, out / "truth.csv")
    row = {"method": method, "seed": seed, "status": "ok", "error": None, "dir": str(out)}
    t0 = time.perf_counter()
    try:
        b_raw, trace = fit_method(method, x, cfg)
    except (GolemError, np.linalg.LinAlgError, FloatingPointError) as exc:
        log.warning("%s seed %d failed: %s", method, seed, exc)
        row.update(status="failed", error=f"{type(exc).__name__}: {exc}", metrics=None)
        trace = getattr(exc, "trace", None)
        if trace is not None:
            trace.to_csv(out / "trace.csv")
        return row
    wall = time.perf_counter() - t0
    b_post = postproc.postprocess(b_raw, postproc.PostprocConfig(cfg.omega))
    rep = metrics.evaluate(b_post, truth, b_raw=b_raw, wall_time_s=wall)
    graphs.write_matrix(b_raw, out / "b_raw.csv")
    graphs.write_matrix(b_post, out / "b_post.csv")
    trace.to_csv(out / "trace.csv")
    (out / "metrics.json").write_text(rep.to_json(include_timing=False) + "\n")
    (out / "timing.json").write_text(json.dumps({"wall_time_s": wall}) + "\n")
    row["metrics"] = rep.to_dict()
    row["converged"] = trace.converged
    return row


def _task(args) -> dict:
    cfg, method, s = args
    truth, _, x = simulate_seed(cfg, s)
    return _run_one(method, truth, x, cfg, Path(cfg.output_dir) / method / f"seed_{s}", s)


# ---------------------------------------------------------------------------
# Records


@dataclass
class RunRecord:
    config: dict
    rows: list
    aggregates: dict = field(default_factory=dict)
    partial: bool = False
    kind: str = "simulation"

    def __post_init__(self):
        if not self.aggregates:
            self.aggregates = aggregate(self.rows)
        self.partial = any(r["status"] != "ok" for r in self.rows)

    def experiment_config(self) -> ExperimentConfig:
        return ExperimentConfig.from_dict(self.config)

    def save(self, directory) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / "record.json"
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")
        return path


def aggregate(rows) -> dict:
    """Mean and standard error per (method, metric) over successful rows."""
    out = {}
    for method in sorted({r["method"] for r in rows}):
        ok = [r["metrics"] for r in rows if r["method"] == method and r["status"] == "ok"]
        stats = {}
        for m in METRIC_NAMES:
            vals = np.array([row[m] for row in ok], dtype=float)
            if vals.size == 0:
                stats[m] = {"mean": None, "stderr": None, "n": 0}
                continue
            se = float(vals.std(ddof=1) / np.sqrt(vals.size)) if vals.size > 1 else 0.0
            stats[m] = {"mean": float(vals.mean()), "stderr": se, "n": int(vals.size)}
        out[method] = stats
    return out


def load_record(directory) -> RunRecord:
    """Load ``record.json``; aggregates are checked against the per-seed rows."""
    data = json.loads((Path(directory) / "record.json").read_text())
    stored = data.pop("aggregates")
    data.pop("partial", None)
    rec = RunRecord(**data)
    for method, stats in stored.items():
        for m, st in stats.items():
            new = rec.aggregates[method][m]
            if st["n"] != new["n"] or (st["mean"] is not None and not math.isclose(st["mean"], new["mean"], rel_tol=1e-12, abs_tol=1e-12)):
                raise ValueError(f"record aggregate for {method}/{m} does not match its per-seed rows")
    return rec


def _workers(workers) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    return max(1, int(workers))


def run_experiment(cfg: ExperimentConfig, workers: int | None = None) -> RunRecord:
    """Run every (seed, method) pair of ``cfg`` and persist results.

    Failures of single fits are recorded in the returned record, which is
    then flagged ``partial``.
    """
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    tasks = [(cfg, m, s) for s in range(cfg.base_seed, cfg.base_seed + cfg.n_seeds) for m in cfg.methods]
    n_workers = _workers(workers)
    if n_workers == 1:
        rows = [_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            rows = list(pool.map(_task, tasks))
    rows.sort(key=lambda r: (METHODS.index(r["method"]), r["seed"]))
    record = RunRecord(config=cfg.to_dict(), rows=rows)
    record.save(out)
    return record


def run_real_data(csv_path, truth_path, methods=("GOLEM-NV", "GOLEM-EV", "NOTEARS-L1"), cfg: ExperimentConfig | None = None) -> RunRecord:
    """Fit ``methods`` on observational data and score them against a truth edge list."""
    x = sem.read_data(csv_path)
    d = x.shape[1]
    truth = graphs.read_edge_list(truth_path, d=d)
    if not graphs.is_dag(truth):
        raise ValueError(f"{truth_path}: truth graph has a cycle")
    x = sem.center_columns(x)
    cfg = cfg or ExperimentConfig()
    cfg = replace(cfg, methods=tuple(methods), n=x.shape[0], n_seeds=1, graph=replace(cfg.graph, model="ER", d=d))
    out = Path(cfg.output_dir)
    rows = [_run_one(m, truth, x, cfg, out / m / "real", 0) for m in cfg.methods]
    snapshot = cfg.to_dict()
    snapshot["data"] = str(csv_path)
    snapshot["truth"] = str(truth_path)
    record = RunRecord(config=snapshot, rows=rows, kind="real")
    record.save(out)
    return record


# ---------------------------------------------------------------------------
# Tables

LONG_FIELDS = ("method", "graph_type", "d", "noise", "n", "seed", "metric", "value")
AGG_FIELDS = ("method", "graph_type", "d", "noise", "n", "metric", "mean", "stderr", "n_seeds", "partial")


def _context(record: RunRecord) -> dict:
    c = record.config
    graph_type = "real" if record.kind == "real" else f"{c['graph']['model']}{c['graph']['k']}"
    return {"graph_type": graph_type, "d": c["graph"]["d"], "noise": "real" if record.kind == "real" else c["noise"], "n": c["n"]}


def table_rows(record: RunRecord) -> tuple[list[dict], list[dict]]:
    ctx = _context(record)
    long = []
    for r in record.rows:
        if r["status"] != "ok":
            continue
        for m in METRIC_NAMES:
            long.append({"method": r["method"], **ctx, "seed": r["seed"], "metric": m, "value": r["metrics"][m]})
    agg = []
    for method, stats in record.aggregates.items():
        part = any(r["status"] != "ok" for r in record.rows if r["method"] == method)
        for m in METRIC_NAMES:
            st = stats[m]
            agg.append({"method": method, **ctx, "metric": m, "mean": st["mean"], "stderr": st["stderr"], "n_seeds": st["n"], "partial": part})
    return long, agg


def emit_tables(record: RunRecord, fmt: str = "csv", directory=None) -> list[Path]:
    """Write ``long.<fmt>`` and ``aggregate.<fmt>``; returns the written paths."""
    if fmt not in ("csv", "json"):
        raise ValueError("format must be 'csv' or 'json'")
    directory = Path(directory or record.config["output_dir"])
    directory.mkdir(parents=True, exist_ok=True)
    long, agg = table_rows(record)
    paths = []
    for name, rows, cols in (("long", long, LONG_FIELDS), ("aggregate", agg, AGG_FIELDS)):
        path = directory / f"{name}.{fmt}"
        if fmt == "json":
            path.write_text(json.dumps(rows, indent=2) + "\n")
        else:
            with open(path, "w", newline="") as fh:
                w = csv.DictWriter(fh, fieldnames=cols)
                w.writeheader()
                for row in rows:
                    w.writerow({k: ("" if v is None else repr(v) if isinstance(v, float) else v) for k, v in row.items()})
        paths.append(path)
    return paths


def read_table(path) -> list[dict]:
    """Read a table written by :func:`emit_tables` back into typed rows."""
    path = Path(path)
    if path.suffix == ".json":
        return json.loads(path.read_text())
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            typed = {}
            for k, v in row.items():
                if k in ("method", "graph_type", "noise", "metric"):
                    typed[k] = v
                elif k == "partial":
                    typed[k] = v == "True"
                elif v == "":
                    typed[k] = None
                elif k in ("d", "n", "seed", "n_seeds"):
                    typed[k] = int(v)
                else:
                    try:
                        typed[k] = int(v)
                    except ValueError:
                        typed[k] = float(v)
            out.append(typed)
    return out
