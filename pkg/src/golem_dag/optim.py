"""First-order fitting of the penalized scores (GOLEM) and the NOTEARS baseline.

Both methods share one full-batch Adam loop. The diagonal of ``B`` is pinned
to zero throughout, so no self-loops can appear.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, GolemError
from .numlin import as_square, expm_unchecked
from .scores import ScoreConfig, ScoreObjective, Variant, dag_penalty

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OptimizerConfig:
    learning_rate: float = 1e-3
    iterations: int = 100_000
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    log_every: int = 1000

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1):
            raise ValueError("Adam betas must lie in [0, 1)")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.log_every < 1:
            raise ValueError("log_every must be >= 1")


@dataclass
class TraceRecord:
    iteration: int
    total: float
    data_term: float
    l1_term: float
    h: float
    grad_max: float


TRACE_FIELDS = ("iteration", "total", "data_term", "l1_term", "h", "grad_max")


@dataclass
class OptimTrace:
    records: list[TraceRecord] = field(default_factory=list)
    iterations: int = 0
    converged: bool = True

    def append(self, rec: TraceRecord) -> None:
        if self.records and rec.iteration <= self.records[-1].iteration:
            raise ValueError("trace iterations must be strictly increasing")
        self.records.append(rec)

    def extend(self, other: OptimTrace) -> OptimTrace:
        """Concatenate ``other`` after this trace, shifting its iteration numbers."""
        out = OptimTrace(list(self.records), self.iterations + other.iterations, self.converged and other.converged)
        for r in other.records:
            shifted = TraceRecord(r.iteration + self.iterations, r.total, r.data_term, r.l1_term, r.h, r.grad_max)
            if out.records and shifted.iteration <= out.records[-1].iteration:
                continue  # the restart point duplicates the previous final record
            out.records.append(shifted)
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TRACE_FIELDS)
            for r in self.records:
                w.writerow([r.iteration] + [repr(float(getattr(r, k))) for k in TRACE_FIELDS[1:]])

    @classmethod
    def from_csv(cls, path) -> OptimTrace:
        tr = cls()
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                tr.append(TraceRecord(int(row["iteration"]), *(float(row[k]) for k in TRACE_FIELDS[1:])))
        tr.iterations = tr.records[-1].iteration if tr.records else 0
        return tr


class Adam:
    """Adam with bias correction; parameters and moments are dense arrays."""

    def __init__(self, shape, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = np.zeros(shape)
        self.v = np.zeros(shape)
        self.t = 0

    @classmethod
    def from_config(cls, shape, ocfg: OptimizerConfig) -> Adam:
        return cls(shape, ocfg.learning_rate, ocfg.adam_beta1, ocfg.adam_beta2, ocfg.adam_eps)

    def step(self, params, grad) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1**self.t)
        v_hat = self.v / (1.0 - self.beta2**self.t)
        return params - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def _record(it, value, grad) -> TraceRecord:
    return TraceRecord(it, value.total, value.data_term, value.l1_term, value.dag_term, float(np.abs(grad).max()))


def _start(init, d) -> np.ndarray:
    if init is None:
        return np.zeros((d, d))
    b = np.array(as_square(init, "init"), dtype=np.float64)
    if b.shape != (d, d):
        raise ValueError(f"init has shape {b.shape}, expected {(d, d)}")
    np.fill_diagonal(b, 0.0)
    return b


def _adam_loop(grad_fn, value_fn, b, ocfg: OptimizerConfig, iterations: int, trace: OptimTrace, offset=0):
    """Run ``iterations`` Adam steps from ``b``; returns the final iterate.

    Checkpoints (start, every ``log_every`` steps, end) go to ``trace`` with
    iteration numbers shifted by ``offset``.
    """
    adam = Adam.from_config(b.shape, ocfg)
    for it in range(iterations + 1):
        try:
            with np.errstate(over="raise", invalid="raise", divide="raise"):
                g = grad_fn(b)
        except (GolemError, FloatingPointError, np.linalg.LinAlgError) as exc:
            raise DivergenceError(f"gradient evaluation failed at iteration {offset + it}: {exc}", trace) from exc
        if not np.all(np.isfinite(g)):
            raise DivergenceError(f"non-finite gradient at iteration {offset + it}", trace)
        if it % ocfg.log_every == 0 or it == iterations:
            try:
                val = value_fn(b)
            except (GolemError, FloatingPointError) as exc:
                raise DivergenceError(f"score evaluation failed at iteration {offset + it}: {exc}", trace) from exc
            if not np.isfinite(val.total):
                raise DivergenceError(f"non-finite score at iteration {offset + it}", trace)
            if not trace.records or trace.records[-1].iteration < offset + it:
                trace.append(_record(offset + it, val, g))
        if it == iterations:
            break
        b = adam.step(b, g)
        np.fill_diagonal(b, 0.0)
    trace.iterations = max(trace.iterations, offset + iterations)
    return b


def fit_golem(x, cfg: ScoreConfig, ocfg: OptimizerConfig = OptimizerConfig(), init=None):
    """Minimize the penalized EV or NV likelihood score with Adam.

    Returns the raw (unthresholded) weight matrix and the optimization trace.
    """
    if cfg.variant not in (Variant.EV, Variant.NV):
        raise ValueError("fit_golem supports the EV and NV likelihood variants only")
    obj = ScoreObjective.from_data(x, cfg)
    b = _start(init, obj.d)
    trace = OptimTrace()
    b = _adam_loop(obj.gradient, obj.value, b, ocfg, ocfg.iterations, trace)
    log.debug("fit_golem %s done: %s", cfg.variant.value, trace.records[-1])
    return b, trace


def fit_golem_nv_warmstart(x, ocfg: OptimizerConfig = OptimizerConfig(), ev_cfg=None, nv_cfg=None):
    """GOLEM-NV started from the GOLEM-EV solution.

    The returned trace covers both stages; NV iteration numbers follow on
    from the EV stage.
    """
    ev_cfg = ScoreConfig.golem_ev() if ev_cfg is None else ev_cfg
    nv_cfg = ScoreConfig.golem_nv() if nv_cfg is None else nv_cfg
    b_ev, tr_ev = fit_golem(x, ev_cfg, ocfg)
    b_nv, tr_nv = fit_golem(x, nv_cfg, ocfg, init=b_ev)
    return b_nv, tr_ev.extend(tr_nv)


@dataclass(frozen=True)
class AugLagConfig:
    """Augmented-Lagrangian schedule for the hard-constrained baseline.

    ``enforce_dag=False`` drops the acyclicity terms entirely and solves one
    unconstrained subproblem.
    """

    lambda1: float = 0.1
    initial_rho: float = 1.0
    rho_multiplier: float = 10.0
    max_rho: float = 1e16
    progress_ratio: float = 0.25
    alpha_init: float = 0.0
    h_tol: float = 1e-8
    max_outer: int = 100
    subproblem_iterations: int = 3000
    subproblem_tol: float = 1e-7
    enforce_dag: bool = True

    def __post_init__(self):
        if self.rho_multiplier <= 1:
            raise ValueError("rho_multiplier must exceed 1")
        if not 0 < self.progress_ratio < 1:
            raise ValueError("progress_ratio must lie in (0, 1)")
        if self.lambda1 < 0 or self.initial_rho <= 0:
            raise ValueError("need lambda1 >= 0 and initial_rho > 0")


class _AugLagObjective:
    def __init__(self, base: ScoreObjective, rho: float, alpha: float, dag_terms: bool):
        self.base, self.rho, self.alpha, self.dag_terms = base, rho, alpha, dag_terms

    def gradient(self, b):
        g = self.base.gradient(b)
        if self.dag_terms:
            e = expm_unchecked(b * b)
            h = np.trace(e) - b.shape[0]
            g += (2.0 * (self.rho * h + self.alpha)) * e.T * b
            np.fill_diagonal(g, 0.0)
        return g

    def value(self, b):
        return self.base.value(b)


def _solve_subproblem(obj: _AugLagObjective, b, ocfg, alcfg, trace, offset):
    """Adam on one augmented-Lagrangian subproblem, with a step-size stop rule."""
    adam = Adam.from_config(b.shape, ocfg)
    window = 100
    ref = b
    it = 0
    for it in range(1, alcfg.subproblem_iterations + 1):
        try:
            with np.errstate(over="raise", invalid="raise", divide="raise"):
                g = obj.gradient(b)
        except (GolemError, FloatingPointError, np.linalg.LinAlgError) as exc:
            raise DivergenceError(f"gradient evaluation failed at iteration {offset + it}: {exc}", trace) from exc
        if not np.all(np.isfinite(g)):
            raise DivergenceError(f"non-finite gradient at iteration {offset + it}", trace)
        b = adam.step(b, g)
        np.fill_diagonal(b, 0.0)
        if it % window == 0:
            if np.abs(b - ref).max() < alcfg.subproblem_tol:
                break
            ref = b
    g = obj.gradient(b)
    trace.append(_record(offset + it, obj.value(b), g))
    return b, it


def fit_notears(x, alcfg: AugLagConfig = AugLagConfig(), ocfg: OptimizerConfig = OptimizerConfig(), init=None):
    """Least squares + l1 under the constraint ``h(B) = 0`` by augmented Lagrangian.

    Each subproblem minimizes ``LS + lambda1 |B|_1 + rho/2 h^2 + alpha h``
    with Adam. When ``h`` fails to shrink by ``progress_ratio`` the
    subproblem is re-solved from the last accepted iterate with ``rho``
    multiplied; otherwise the multiplier is updated as ``alpha += rho h``.
    The trace's ``converged`` flag is False if ``rho`` hit ``max_rho``
    before ``h < h_tol``.
    """
    base = ScoreObjective.from_data(x, ScoreConfig(Variant.LS, alcfg.lambda1, 0.0))
    b = _start(init, base.d)
    trace = OptimTrace()
    g0 = base.gradient(b)
    trace.append(_record(0, base.value(b), g0))
    used = 0

    if not alcfg.enforce_dag:
        obj = _AugLagObjective(base, 0.0, 0.0, dag_terms=False)
        b, n_it = _solve_subproblem(obj, b, ocfg, alcfg, trace, used)
        trace.iterations = used + n_it
        return b, trace

    rho, alpha = alcfg.initial_rho, alcfg.alpha_init
    h = np.inf
    converged = False
    for _ in range(alcfg.max_outer):
        h_new = h
        b_new = b
        while rho <= alcfg.max_rho:
            obj = _AugLagObjective(base, rho, alpha, dag_terms=True)
            b_new, n_it = _solve_subproblem(obj, b, ocfg, alcfg, trace, used)
            used += n_it
            h_new = dag_penalty(b_new)
            if h_new > alcfg.progress_ratio * h:
                rho *= alcfg.rho_multiplier
            else:
                break
        b, h = b_new, h_new
        alpha += rho * h
        if h <= alcfg.h_tol:
            converged = True
        elif rho > alcfg.max_rho:
            break
    trace.iterations = used
    trace.converged = converged
    if not converged:
        log.warning("NOTEARS stopped with h=%.3e at rho=%.1e without reaching h_tol", h, rho)
    return b, trace
