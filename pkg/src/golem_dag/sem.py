"""Sampling from linear SEMs ``X = B^T X + N`` and data-matrix helpers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NotADagError, SingularMatrixError
from .graphs import topological_order

NOISE_KINDS = ("gaussian_ev", "gaussian_nv", "exponential", "gumbel")

# Substream tags used to derive independent generators from one base seed.
STREAM_TAGS = {"graph": 0, "sigma": 1, "data": 2}


def seed_for(base_seed: int, component: str, index: int = 0) -> np.random.SeedSequence:
    """Independent, reproducible seed for one ``(component, index)`` stream."""
    return np.random.SeedSequence([int(base_seed) & (2**64 - 1), STREAM_TAGS[component], int(index)])


def rng_for(base_seed: int, component: str, index: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed_for(base_seed, component, index)))


@dataclass(frozen=True)
class NoiseSpec:
    """Exogenous noise family.

    ``scales`` holds per-node standard deviations for ``gaussian_nv``; use
    :meth:`gaussian_nv` to draw them. ``variance`` applies to ``gaussian_ev``.
    """

    kind: str
    variance: float = 1.0
    scales: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")
        if self.variance <= 0:
            raise ValueError("variance must be positive")
        if self.kind == "gaussian_nv" and not self.scales:
            raise ValueError("gaussian_nv needs realized per-node scales")
        if any(s <= 0 for s in self.scales):
            raise ValueError("noise scales must be positive")

    @classmethod
    def gaussian_nv(cls, d: int, rng, low: float = 1.0, high: float = 2.0) -> NoiseSpec:
        """Draw sigma_i ~ U[low, high] once and freeze them into the spec."""
        rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
        return cls("gaussian_nv", scales=tuple(rng.uniform(low, high, size=d).tolist()))

    def draw(self, n: int, d: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "gaussian_ev":
            return rng.normal(0.0, np.sqrt(self.variance), size=(n, d))
        if self.kind == "gaussian_nv":
            if len(self.scales) != d:
                raise ValueError(f"noise has {len(self.scales)} scales but graph has {d} nodes")
            return rng.normal(size=(n, d)) * np.asarray(self.scales)
        if self.kind == "exponential":
            return rng.exponential(1.0, size=(n, d))
        return rng.gumbel(0.0, 1.0, size=(n, d))


def sample(b, noise: NoiseSpec, n: int, seed=0) -> np.ndarray:
    """Draw ``n`` rows from the linear SEM with weights ``b``.

    Columns are filled in topological order, ``X[:, i] = X @ b[:, i] + N[:, i]``.
    Noise is not recentred.
    """
    b = np.asarray(b, dtype=np.float64)
    if n < 1:
        raise ValueError("n must be >= 1")
    order = topological_order(b)
    if order is None:
        raise NotADagError("can only simulate from an acyclic graph")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    d = b.shape[0]
    x = noise.draw(n, d, rng)
    for i in order:
        parents = np.flatnonzero(b[:, i])
        if parents.size:
            x[:, i] += x[:, parents] @ b[parents, i]
    return x


def sample_dense(b, noise_matrix) -> np.ndarray:
    """Reference path ``X = N (I - B)^{-1}`` by dense inversion."""
    b = np.asarray(b, dtype=np.float64)
    try:
        inv = np.linalg.inv(np.eye(b.shape[0]) - b)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError("I - B is singular") from exc
    return np.asarray(noise_matrix) @ inv


def center_columns(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return x - x.mean(axis=0, keepdims=True)


def population_data(sigma) -> np.ndarray:
    """A centered ``2d x d`` data matrix whose second-moment matrix ``X^T X / n`` is ``sigma``.

    Lets the empirical scores and fitters run directly on a population covariance.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    lower = np.linalg.cholesky(sigma)
    root = np.sqrt(sigma.shape[0]) * lower.T
    return np.vstack([root, -root])


def read_data(path) -> np.ndarray:
    """Read an ``n x d`` numeric CSV. A non-numeric first row is skipped as a header."""
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty data file")
    rows = []
    width = None
    for lineno, line in enumerate(lines, start=1):
        cells = line.split(",")
        try:
            vals = [float(c) for c in cells]
        except ValueError:
            if lineno == 1:
                continue
            bad = next(k for k, c in enumerate(cells, start=1) if not _is_float(c))
            raise ValueError(f"{path}: row {lineno}, column {bad}: not a number: {cells[bad - 1]!r}")
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise ValueError(f"{path}: row {lineno} has {len(vals)} columns, expected {width}")
        rows.append(vals)
    x = np.asarray(rows, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        r, c = np.argwhere(~np.isfinite(x))[0]
        raise ValueError(f"{path}: non-finite value at data row {r + 1}, column {c + 1}")
    return x


def _is_float(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def write_data(x, path) -> None:
    np.savetxt(path, np.asarray(x, dtype=np.float64), delimiter=",", fmt="%.17g")
