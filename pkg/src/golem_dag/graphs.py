"""Weighted directed graphs, random DAG generators, CPDAGs and d-separation.

A graph over ``d`` nodes is a ``(d, d)`` float array ``b`` in which
``b[j, i] != 0`` encodes the edge ``j -> i`` with that weight.
"""

from __future__ import annotations

import csv
import warnings
from collections import deque
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable

import numpy as np

from .errors import NotADagError
from .numlin import as_square


def as_graph(b, name="b") -> np.ndarray:
    """Validate a weighted adjacency matrix (square, finite, zero diagonal)."""
    arr = as_square(b, name)
    if np.any(np.diag(arr) != 0):
        raise ValueError(f"{name} has self-loops (nonzero diagonal)")
    return arr


def adjacency(b) -> np.ndarray:
    """Boolean edge pattern of ``b``."""
    return np.asarray(b) != 0


def edges(b) -> list[tuple[int, int]]:
    """Sorted list of ``(source, target)`` pairs."""
    src, dst = np.nonzero(adjacency(b))
    return sorted(zip(src.tolist(), dst.tolist()))


def topological_order(b) -> list[int] | None:
    """Kahn ordering of the nonzero pattern, or ``None`` if there is a cycle."""
    adj = adjacency(b)
    d = adj.shape[0]
    indeg = adj.sum(axis=0).astype(int)
    queue = deque(i for i in range(d) if indeg[i] == 0)
    order = []
    while queue:
        u = queue.popleft()
        order.append(u)
        for v in np.flatnonzero(adj[u]):
            indeg[v] -= 1
            if indeg[v] == 0:
                queue.append(int(v))
    return order if len(order) == d else None


def is_dag(b) -> bool:
    return topological_order(b) is not None


def descendants(adj, i: int) -> set[int]:
    """Nodes reachable from ``i`` by a directed path of length >= 1."""
    adj = np.asarray(adj, dtype=bool)
    seen = set()
    stack = [i]
    while stack:
        u = stack.pop()
        for v in np.flatnonzero(adj[u]).tolist():
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


def ancestors(adj, nodes: Iterable[int]) -> set[int]:
    """``nodes`` together with every node having a directed path into them."""
    adj = np.asarray(adj, dtype=bool)
    seen = set(nodes)
    stack = list(seen)
    while stack:
        u = stack.pop()
        for p in np.flatnonzero(adj[:, u]).tolist():
            if p not in seen:
                seen.add(p)
                stack.append(p)
    return seen


# ---------------------------------------------------------------------------
# Random generation


@dataclass(frozen=True)
class GraphSpec:
    model: str  # "ER" or "SF"
    d: int
    k: int = 1
    weight_low: float = 0.5
    weight_high: float = 2.0
    weight_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.model not in ("ER", "SF"):
            raise ValueError(f"unknown graph model {self.model!r}")
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 0 < self.weight_low < self.weight_high:
            raise ValueError("need 0 < weight_low < weight_high")
        if self.weight_scale <= 0:
            raise ValueError("weight_scale must be positive")


def _draw_weights(mask, spec: GraphSpec, rng) -> np.ndarray:
    # Magnitude U[low, high] with a fair random sign, i.e. uniform on the union.
    mag = rng.uniform(spec.weight_low, spec.weight_high, size=mask.shape)
    sign = np.where(rng.random(size=mask.shape) < 0.5, -1.0, 1.0)
    return np.where(mask, spec.weight_scale * sign * mag, 0.0)


def generate_er(spec: GraphSpec, rng=None) -> np.ndarray:
    """Erdos-Renyi DAG with ``k * d`` expected edges.

    A random permutation fixes the causal order, and every order-respecting
    pair gets an edge with probability ``2e / (d^2 - d)``.
    """
    if spec.model != "ER":
        raise ValueError("generate_er needs an ER spec")
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    d = spec.d
    if d == 1:
        return np.zeros((1, 1))
    p = 2.0 * spec.k * d / (d * d - d)
    if p > 1.0:
        warnings.warn(f"ER edge probability {p:.3f} > 1 clamped to 1", RuntimeWarning, stacklevel=2)
        p = 1.0
    upper = np.triu(rng.random((d, d)) < p, k=1)
    perm = rng.permutation(d)
    mask = np.zeros((d, d), dtype=bool)
    # Node perm[a] precedes perm[b] whenever a < b.
    mask[np.ix_(perm, perm)] = upper
    return _draw_weights(mask, spec, rng)


def generate_sf(spec: GraphSpec, rng=None) -> np.ndarray:
    """Scale-free DAG from Barabasi-Albert preferential attachment.

    Growth starts with ``k`` isolated nodes; the first arrival links to all of
    them and each later arrival picks ``k`` distinct earlier nodes with
    probability proportional to their degree. Edges point from the new node to
    the older one, giving ``k * (d - k)`` edges. Node labels are shuffled.
    """
    if spec.model != "SF":
        raise ValueError("generate_sf needs an SF spec")
    d, k = spec.d, spec.k
    if k > d - 1:
        raise ValueError("SF graphs need k <= d - 1")
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    mask = np.zeros((d, d), dtype=bool)
    degree = np.zeros(d)
    for new in range(k, d):
        if new == k:
            targets = np.arange(k)
        else:
            prob = degree[:new] / degree[:new].sum()
            targets = rng.choice(new, size=k, replace=False, p=prob)
        mask[new, targets] = True
        degree[targets] += 1
        degree[new] += k
    perm = rng.permutation(d)
    mask = mask[np.ix_(perm, perm)]
    return _draw_weights(mask, spec, rng)


def generate(spec: GraphSpec, rng=None) -> np.ndarray:
    return generate_er(spec, rng) if spec.model == "ER" else generate_sf(spec, rng)


# ---------------------------------------------------------------------------
# CPDAG


@dataclass(frozen=True)
class Cpdag:
    d: int
    directed_edges: frozenset  # of (i, j) meaning i -> j
    undirected_edges: frozenset  # of frozenset({i, j})

    def __post_init__(self):
        skel_dir = {frozenset(e) for e in self.directed_edges}
        if skel_dir & set(self.undirected_edges):
            raise ValueError("a pair is both directed and undirected")
        if any(i == j for i, j in self.directed_edges) or any(len(e) != 2 for e in self.undirected_edges):
            raise ValueError("self-loops are not allowed")

    def mark(self, i: int, j: int) -> str:
        """Edge mark between ``i`` and ``j``: '', '->', '<-' or '--'."""
        if (i, j) in self.directed_edges:
            return "->"
        if (j, i) in self.directed_edges:
            return "<-"
        if frozenset((i, j)) in self.undirected_edges:
            return "--"
        return ""


def v_structures(b) -> set[tuple[int, int, int]]:
    """Triples ``(a, c, b)`` with ``a -> c <- b``, ``a < b`` and ``a, b`` non-adjacent."""
    adj = adjacency(b)
    skel = adj | adj.T
    out = set()
    for c in range(adj.shape[0]):
        for a, bb in combinations(np.flatnonzero(adj[:, c]).tolist(), 2):
            if not skel[a, bb]:
                out.add((a, c, bb))
    return out


def _meek_closure(directed: np.ndarray, undirected: np.ndarray) -> None:
    """Apply Meek rules R1-R4 in place until no undirected edge can be oriented."""
    d = directed.shape[0]

    def adjacent(x, y):
        return directed[x, y] or directed[y, x] or undirected[x, y]

    def orient(x, y):
        undirected[x, y] = undirected[y, x] = False
        directed[x, y] = True

    changed = True
    while changed:
        changed = False
        for x in range(d):
            for y in range(d):
                if not undirected[x, y]:
                    continue
                # R1: z -> x -- y, z and y non-adjacent => x -> y
                if any(directed[z, x] and not adjacent(z, y) for z in range(d) if z != y):
                    orient(x, y)
                    changed = True
                    continue
                # R2: x -> z -> y and x -- y => x -> y
                if any(directed[x, z] and directed[z, y] for z in range(d)):
                    orient(x, y)
                    changed = True
                    continue
                # R3: x -- z1 -> y, x -- z2 -> y, z1, z2 non-adjacent => x -> y
                zs = [z for z in range(d) if undirected[x, z] and directed[z, y]]
                if any(not adjacent(z1, z2) for z1, z2 in combinations(zs, 2)):
                    orient(x, y)
                    changed = True
                    continue
                # R4: x -- w -> z -> y with x adjacent to z, w and y non-adjacent => x -> y
                hit = False
                for z in range(d):
                    if not (directed[z, y] and adjacent(x, z)):
                        continue
                    for w in range(d):
                        if undirected[x, w] and directed[w, z] and not adjacent(w, y):
                            hit = True
                            break
                    if hit:
                        break
                if hit:
                    orient(x, y)
                    changed = True


def to_cpdag(b) -> Cpdag:
    """CPDAG of the Markov equivalence class of a DAG.

    Keeps v-structure arrows, leaves other skeleton edges undirected, then
    closes the orientation under Meek's rules.
    """
    if not is_dag(b):
        raise NotADagError("to_cpdag needs an acyclic graph")
    adj = adjacency(b)
    d = adj.shape[0]
    directed = np.zeros((d, d), dtype=bool)
    for a, c, bb in v_structures(b):
        directed[a, c] = directed[bb, c] = True
    undirected = (adj | adj.T) & ~(directed | directed.T)
    _meek_closure(directed, undirected)
    dir_edges = frozenset(zip(*(x.tolist() for x in np.nonzero(directed))))
    und_edges = frozenset(frozenset((i, j)) for i, j in zip(*np.nonzero(np.triu(undirected))))
    return Cpdag(d, dir_edges, frozenset(frozenset(map(int, e)) for e in und_edges))


# ---------------------------------------------------------------------------
# d-separation


def d_separated(b, i: int, j: int, z: Iterable[int] = ()) -> bool:
    """Bayes-ball test of whether ``i`` and ``j`` are d-separated given ``z``."""
    adj = adjacency(b)
    z = set(z)
    if i == j or i in z or j in z:
        raise ValueError("need i != j and i, j not in the conditioning set")
    if not is_dag(adj):
        raise NotADagError("d-separation needs an acyclic graph")
    anc_z = ancestors(adj, z)

    # State (node, arrived_from_child): True means the ball travels upward.
    visited = set()
    queue = deque([(i, True)])
    while queue:
        node, up = queue.popleft()
        if (node, up) in visited:
            continue
        visited.add((node, up))
        if node == j:
            return False
        if up:
            if node not in z:
                queue.extend((p, True) for p in np.flatnonzero(adj[:, node]).tolist())
                queue.extend((c, False) for c in np.flatnonzero(adj[node]).tolist())
        else:
            if node not in z:
                queue.extend((c, False) for c in np.flatnonzero(adj[node]).tolist())
            if node in anc_z:
                # Collider (or its ancestor-of-evidence) is active: bounce back up.
                queue.extend((p, True) for p in np.flatnonzero(adj[:, node]).tolist())
    return True


# ---------------------------------------------------------------------------
# Serialization


def write_edge_list(b, path) -> None:
    """Write ``source,target,weight`` rows (0-indexed, no header)."""
    b = np.asarray(b)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for s, t in edges(b):
            w.writerow([s, t, repr(float(b[s, t]))])


def read_edge_list(path, d: int | None = None) -> np.ndarray:
    """Read an edge list; a missing weight column means weight 1.

    A leading non-numeric row is treated as a header. ``d`` defaults to
    one more than the largest node index.
    """
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip():
                continue
            try:
                s, t = int(row[0]), int(row[1])
                w = float(row[2]) if len(row) > 2 and row[2].strip() else 1.0
            except (ValueError, IndexError) as exc:
                if lineno == 1 and not rows:
                    continue
                raise ValueError(f"{path}: line {lineno}: cannot parse edge {row!r}") from exc
            rows.append((s, t, w))
    size = d if d is not None else (max(max(s, t) for s, t, _ in rows) + 1 if rows else 0)
    b = np.zeros((size, size))
    for s, t, w in rows:
        if s == t:
            raise ValueError(f"{path}: self-loop on node {s}")
        b[s, t] = w
    return b


def write_matrix(b, path) -> None:
    np.savetxt(path, np.asarray(b, dtype=np.float64), delimiter=",", fmt="%.17g")


def read_matrix(path) -> np.ndarray:
    return np.atleast_2d(np.loadtxt(path, delimiter=",", dtype=np.float64))


__all__ = [
    "Cpdag",
    "GraphSpec",
    "adjacency",
    "ancestors",
    "as_graph",
    "d_separated",
    "descendants",
    "edges",
    "generate",
    "generate_er",
    "generate_sf",
    "is_dag",
    "read_edge_list",
    "read_matrix",
    "to_cpdag",
    "topological_order",
    "v_structures",
    "write_edge_list",
    "write_matrix",
]
