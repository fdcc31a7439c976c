"""Weighted Erdos-Renyi instances and two-stage BFS neighbourhood exploration.

Vertices are labelled ``0 .. n-1``; the two distinguished endpoints are
``0`` (the source) and ``n - 1`` (the target).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import ModelConstants
from .distributions import WeightDistribution
from ._kernels import build_csr
from .errors import InvalidParameter


@dataclass(eq=False)
class WeightedGraph:
    """Undirected simple graph in CSR form.

    Edges are kept as ``u < v`` triples sorted by ``(u, v)``. Every edge is
    also stored as two arcs; ``rev[a]`` is the index of the opposite arc.
    Neighbour lists are sorted by label.
    """

    n: int
    seed: int
    edges_u: np.ndarray
    edges_v: np.ndarray
    edges_w: np.ndarray
    indptr: np.ndarray = field(init=False, repr=False)
    heads: np.ndarray = field(init=False, repr=False)
    tails: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)
    rev: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        u = np.asarray(self.edges_u, dtype=np.int64)
        v = np.asarray(self.edges_v, dtype=np.int64)
        w = np.asarray(self.edges_w, dtype=np.float64)
        if np.any(u == v):
            raise InvalidParameter("self-loops are not allowed")
        if np.any(u > v):
            u, v = np.minimum(u, v), np.maximum(u, v)
        if u.size > 1 and not np.all((u[1:] > u[:-1]) | ((u[1:] == u[:-1]) & (v[1:] > v[:-1]))):
            order = np.lexsort((v, u))
            u, v, w = u[order], v[order], w[order]
            if np.any((u[1:] == u[:-1]) & (v[1:] == v[:-1])):
                raise InvalidParameter("parallel edges are not allowed")
        self.edges_u, self.edges_v, self.edges_w = u, v, w
        self.indptr, self.heads, self.tails, self.weights, self.rev = build_csr(self.n, u, v, w)

    @property
    def m(self) -> int:
        return int(self.edges_u.size)

    @property
    def source(self) -> int:
        return 0

    @property
    def target(self) -> int:
        return self.n - 1

    def neighbors(self, v: int):
        """``(labels, weights)`` of the arcs leaving ``v``, ascending by label."""
        lo, hi = self.indptr[v], self.indptr[v + 1]
        return self.heads[lo:hi], self.weights[lo:hi]

    def degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    def edge_weight(self, u: int, v: int) -> float:
        labels, ws = self.neighbors(u)
        i = np.searchsorted(labels, v)
        if i == labels.size or labels[i] != v:
            raise KeyError((u, v))
        return float(ws[i])

    def same_as(self, other: "WeightedGraph") -> bool:
        return (
            self.n == other.n
            and self.seed == other.seed
            and self.edges_u.tobytes() == other.edges_u.tobytes()
            and self.edges_v.tobytes() == other.edges_v.tobytes()
            and self.edges_w.tobytes() == other.edges_w.tobytes()
        )

    @classmethod
    def from_edges(cls, n: int, edges, seed: int = 0) -> "WeightedGraph":
        """Build from ``(u, v, w)`` triples, e.g. for hand-made test graphs."""
        edges = list(edges)
        if not edges:
            z = np.zeros(0)
            return cls(n, seed, z.astype(np.int64), z.astype(np.int64), z)
        u, v, w = zip(*edges)
        lo = np.minimum(u, v)
        hi = np.maximum(u, v)
        return cls(n, seed, lo, hi, np.asarray(w, dtype=float))

    def dump(self, path) -> None:
        """Text dump: header ``n m seed``, then one ``u v w`` line per edge."""
        with open(path, "w") as fh:
            fh.write(f"{self.n} {self.m} {self.seed}\n")
            for a, b, c in zip(self.edges_u.tolist(), self.edges_v.tolist(), self.edges_w.tolist()):
                fh.write(f"{a} {b} {c:.17g}\n")

    @classmethod
    def load(cls, path) -> "WeightedGraph":
        with open(path) as fh:
            n, m, seed = (int(t) for t in fh.readline().split())
            rows = [line.split() for line in fh if line.strip()]
        if len(rows) != m:
            raise ValueError(f"expected {m} edges, found {len(rows)}")
        u = np.array([int(r[0]) for r in rows], dtype=np.int64)
        v = np.array([int(r[1]) for r in rows], dtype=np.int64)
        w = np.array([float(r[2]) for r in rows], dtype=np.float64)
        return cls(n, seed, u, v, w)


def _pair_offsets(n: int) -> np.ndarray:
    i = np.arange(n, dtype=np.int64)
    return i * n - i * (i + 1) // 2


def generate(n: int, lam: float, dist: WeightDistribution, seed: int) -> WeightedGraph:
    """G(n, lam/n) with i.i.d. weights, by geometric skips over the pair list."""
    if n < 2:
        raise InvalidParameter("n must be at least 2")
    if not 0 < lam < n:
        raise InvalidParameter("need 0 < lambda < n")
    rng = np.random.default_rng(seed)
    p = lam / n
    total = n * (n - 1) // 2
    chunk = int(lam * (n - 1) / 2 * 1.1) + 64
    picks = []
    last = -1
    while True:
        gaps = rng.geometric(p, chunk)
        pos = last + np.cumsum(gaps)
        if pos[-1] >= total:
            picks.append(pos[pos < total])
            break
        picks.append(pos)
        last = int(pos[-1])
    k = np.concatenate(picks)
    off = _pair_offsets(n)
    i = np.searchsorted(off, k, side="right") - 1
    j = k - off[i] + i + 1
    w = np.asarray(dist.sample(rng, k.size), dtype=np.float64)
    return WeightedGraph(n, int(seed), i, j, w)


def default_radius(n: int) -> int:
    if n < 3:
        raise InvalidParameter("n must be at least 3")
    return max(2, int(math.ceil(math.log(n) ** 0.4)))


@dataclass
class BFSTree:
    """Rooted ordered tree revealed by a BFS stage."""

    root: int
    order: list = field(default_factory=list)  # BFS order, children ascending
    parent: dict = field(default_factory=dict)
    edge_weight: dict = field(default_factory=dict)  # weight of edge to parent
    depth: dict = field(default_factory=dict)
    path_weight: dict = field(default_factory=dict)  # weight of the root path

    def __len__(self):
        return len(self.order)

    def children(self, v):
        return [u for u in self.order if self.parent.get(u) == v]

    def path_to_root(self, v):
        out = [v]
        while out[-1] != self.root:
            out.append(self.parent[out[-1]])
        return out


@dataclass
class NeighborhoodForest:
    radius: int
    tree_from_1: BFSTree
    tree_from_n: BFSTree
    boundary_1: list
    boundary_n: list
    g1_holds: bool
    W_r: float
    Wt_r: float
    ball_sizes: tuple = (0, 0)


def _bfs(g: WeightedGraph, root: int, radius: int, blocked) -> BFSTree:
    tree = BFSTree(root)
    tree.order.append(root)
    tree.depth[root] = 0
    tree.path_weight[root] = 0.0
    seen = {root}
    level = [root]
    for d in range(radius):
        nxt = []
        for w in sorted(level):
            labels, ws = g.neighbors(w)
            for x, wx in zip(labels.tolist(), ws.tolist()):
                if x in seen or x in blocked:
                    continue
                seen.add(x)
                nxt.append(x)
                tree.order.append(x)
                tree.parent[x] = w
                tree.edge_weight[x] = wx
                tree.depth[x] = d + 1
                tree.path_weight[x] = tree.path_weight[w] + wx
        level = nxt
    return tree


def ball(g: WeightedGraph, root: int, radius: int) -> set:
    seen = {root}
    level = [root]
    for _ in range(radius):
        nxt = []
        for w in level:
            for x in g.neighbors(w)[0].tolist():
                if x not in seen:
                    seen.add(x)
                    nxt.append(x)
        level = nxt
    return seen


def explore(g: WeightedGraph, radius: int, consts: ModelConstants) -> NeighborhoodForest:
    """Two-stage BFS from the source, then from the target avoiding stage-one vertices.

    ``g1_holds`` requires both radius-``radius`` balls to be trees of at most
    ``(2 lam)^radius`` vertices each and their union to induce a forest of
    exactly two trees. Only adjacency lists of vertices within distance
    ``radius`` of the endpoints are read.
    """
    if radius < 1:
        raise InvalidParameter("radius must be at least 1")
    s, t = g.source, g.target
    tree1 = _bfs(g, s, radius, blocked=())
    stage1 = set(tree1.order)
    tree_n = _bfs(g, t, radius, blocked=stage1 - {t})

    ball_n = ball(g, t, radius)
    union = stage1 | ball_n
    g1 = not (stage1 & ball_n)
    cap = (2.0 * consts.lam) ** radius
    if len(stage1) > cap or len(ball_n) > cap:
        g1 = False
    if g1:
        induced = 0
        for v in union:
            induced += sum(1 for x in g.neighbors(v)[0].tolist() if x in union)
        # two trees on |union| vertices have exactly |union| - 2 edges
        g1 = induced // 2 == len(union) - 2

    boundary_1 = [(v, tree1.path_weight[v]) for v in tree1.order if tree1.depth[v] == radius]
    boundary_n = [(v, tree_n.path_weight[v]) for v in tree_n.order if tree_n.depth[v] == radius]
    if g1:
        a = consts.alpha
        W = math.fsum(math.exp(-a * pw) for _, pw in boundary_1)
        Wt = math.fsum(math.exp(-a * pw) for _, pw in boundary_n)
    else:
        W = Wt = 0.0
    return NeighborhoodForest(radius, tree1, tree_n, boundary_1, boundary_n, g1, W, Wt, (len(stage1), len(ball_n)))
