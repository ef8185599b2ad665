"""Rounding a continuous solution into a DAG: thresholding, then cycle breaking."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import is_dag


@dataclass(frozen=True)
class PostprocConfig:
    omega: float = 0.3

    def __post_init__(self):
        if self.omega < 0:
            raise ValueError("omega must be non-negative")


def threshold(b, cfg: PostprocConfig = PostprocConfig()) -> np.ndarray:
    """Zero every entry with ``|b_ij| < omega``."""
    b = np.array(b, dtype=np.float64)
    b[np.abs(b) < cfg.omega] = 0.0
    return b


def dagify(b, removed: list | None = None) -> np.ndarray:
    """Remove the globally weakest edge until the graph is acyclic.

    Ties on ``|weight|`` break by ``(source, target)``. Equivalent to raising
    the threshold until the result is a DAG. If ``removed`` is given, the
    dropped ``(source, target, weight)`` triples are appended to it in order.
    """
    b = np.array(b, dtype=np.float64)
    if is_dag(b):
        return b
    src, dst = np.nonzero(b)
    order = sorted(zip(np.abs(b[src, dst]).tolist(), src.tolist(), dst.tolist()))
    for _, s, t in order:
        if removed is not None:
            removed.append((s, t, float(b[s, t])))
        b[s, t] = 0.0
        if is_dag(b):
            break
    return b


def postprocess(b, cfg: PostprocConfig = PostprocConfig()) -> np.ndarray:
    return dagify(threshold(b, cfg))
