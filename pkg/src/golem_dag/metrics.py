"""Structure-recovery metrics between an estimated DAG and the ground truth."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import NotADagError, NumericOverflowError, UndefinedMetricError
from .graphs import adjacency, ancestors, d_separated, descendants, is_dag, to_cpdag
from .scores import dag_penalty


def _pair(est, truth):
    est, truth = adjacency(est), adjacency(truth)
    if est.shape != truth.shape:
        raise ValueError(f"dimension mismatch: {est.shape} vs {truth.shape}")
    return est, truth


def _require_dags(*graphs):
    for g in graphs:
        if not is_dag(g):
            raise NotADagError("metric needs acyclic graphs")


def shd(est, truth) -> int:
    """Edge additions, deletions and reversals (each costing 1) between two DAGs."""
    est, truth = _pair(est, truth)
    _require_dags(est, truth)
    # Per unordered pair the state is none / forward / backward; count mismatches.
    diff = (est != truth) | (est.T != truth.T)
    return int(np.triu(diff, k=1).sum())


def shd_cpdag(est, truth) -> int:
    """SHD between the CPDAGs; any differing mark on a node pair counts 1."""
    est, truth = _pair(est, truth)
    ce, ct = to_cpdag(est), to_cpdag(truth)
    d = est.shape[0]
    return sum(ce.mark(i, j) != ct.mark(i, j) for i in range(d) for j in range(i + 1, d))


def tpr(est, truth) -> float:
    est, truth = _pair(est, truth)
    n_true = int(truth.sum())
    if n_true == 0:
        raise UndefinedMetricError("TPR is undefined for a truth graph without edges")
    return float((est & truth).sum() / n_true)


def adjustment_is_valid(truth, i: int, j: int, z) -> bool:
    """Whether adjusting for ``z`` gives the true ``p(x_j | do(x_i))`` in ``truth``.

    Uses the complete adjustment criterion: ``z`` must avoid descendants of
    every node on a directed ``i -> j`` path (other than ``i``), and must
    d-separate ``i`` from ``j`` once the first edge of each such path is cut.
    """
    adj = adjacency(truth)
    z = set(z)
    if j in z:
        # The set claims i has no effect on j; right iff j is not downstream of i.
        return j not in descendants(adj, i)
    de_i = descendants(adj, i)
    on_causal = de_i & ancestors(adj, [j])  # includes j when reachable
    if on_causal:
        forbidden = set()
        for w in on_causal:
            forbidden |= descendants(adj, w) | {w}
        if z & forbidden:
            return False
        adj = adj.copy()
        for w in on_causal:
            adj[i, w] = False
    return d_separated(adj, i, j, z)


def sid(est, truth) -> int:
    """Ordered pairs ``(i, j)`` whose interventional distribution is wrong when
    adjusting for the estimated parents of ``i``."""
    est, truth = _pair(est, truth)
    _require_dags(est, truth)
    d = est.shape[0]
    wrong = 0
    for i in range(d):
        z = set(np.flatnonzero(est[:, i]).tolist())
        for j in range(d):
            if j != i and not adjustment_is_valid(truth, i, j, z):
                wrong += 1
    return wrong


@dataclass(frozen=True)
class MetricsReport:
    d: int
    shd: int
    shd_c: int
    sid: int
    tpr: float
    shd_norm: float
    shd_c_norm: float
    sid_norm: float
    n_edges_est: int
    h_raw: float
    wall_time_s: float = 0.0

    def to_dict(self, include_timing: bool = True) -> dict:
        out = asdict(self)
        if not include_timing:
            out.pop("wall_time_s")
        return out

    def to_json(self, include_timing: bool = True) -> str:
        return json.dumps(self.to_dict(include_timing), indent=2, sort_keys=True)

    def to_csv_row(self, include_timing: bool = True) -> str:
        row = self.to_dict(include_timing)
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(row), lineterminator="\n")
        w.writeheader()
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
        return buf.getvalue()

    @classmethod
    def from_dict(cls, data: dict) -> MetricsReport:
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in names})


def evaluate(est, truth, b_raw=None, wall_time_s: float = 0.0) -> MetricsReport:
    """All metrics for one estimate; ``h_raw`` is h of the unprocessed solution."""
    d = np.asarray(truth).shape[0]
    s, sc, si = shd(est, truth), shd_cpdag(est, truth), sid(est, truth)
    h_raw = 0.0
    if b_raw is not None:
        try:
            h_raw = dag_penalty(b_raw)
        except NumericOverflowError:
            h_raw = float("inf")
    return MetricsReport(
        d=d,
        shd=s,
        shd_c=sc,
        sid=si,
        tpr=tpr(est, truth),
        shd_norm=s / d,
        shd_c_norm=sc / d,
        sid_norm=si / d,
        n_edges_est=int(adjacency(est).sum()),
        h_raw=h_raw,
        wall_time_s=float(wall_time_s),
    )
