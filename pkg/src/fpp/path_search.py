"""Exact enumeration of near-minimal simple paths and good-event certificates.

Pruning uses minima over non-backtracking walks (see ``_kernels``), which
lower-bound the weight of every simple path and are far tighter than plain
walk minima when the weight law puts mass near or below zero.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels as K
from .constants import ModelConstants
from .errors import BudgetExceeded, InvalidParameter, InvalidWindow
from .graph import NeighborhoodForest, WeightedGraph
from .renewal import Window, hop_cap as default_hop_cap

HOLDS = "holds"
VIOLATED = "violated"
UNVERIFIED = "unverified"

HOP_HARD_CAP = 400
DEFAULT_BUDGET = 10**8
WITNESS_BUDGET = 10**6


def _max_pops(g) -> int:
    return 64 * g.heads.size + 1024


def _slack(t: float) -> float:
    return 1e-9 * max(1.0, abs(t))


def walk_lower_bounds(g: WeightedGraph, target: int, hop_cap: int) -> np.ndarray:
    """``d[k][v]``: min weight of a walk (repeats allowed) from v to target with at most k edges.

    Walks end at their first visit to the target, which keeps the table a
    lower bound for simple paths while pinning ``d[k][target] = 0``.
    """
    if hop_cap < 1:
        raise InvalidParameter("hop_cap must be at least 1")
    return K.plain_walk_table(g.indptr, g.heads, g.weights, int(target), int(hop_cap))


def nb_bounds_to_target(g: WeightedGraph, hop_cap: int, source: Optional[int] = None, target: Optional[int] = None):
    """``A[k][a]``: min NB-walk weight from arc ``a`` to the target within k arcs."""
    s = g.source if source is None else source
    t = g.target if target is None else target
    return K.nb_to_target(g.indptr, g.heads, g.rev, g.weights, int(s), int(t), int(hop_cap))


def continuation_bounds(g: WeightedGraph, weights: Optional[np.ndarray] = None):
    """``(C, converged)`` with ``C[a]`` the min NB-walk weight starting with arc ``a``."""
    w = g.weights if weights is None else weights
    return K.nb_continuation_min(g.indptr, g.heads, g.rev, w, _max_pops(g))


def negative_floor(C: np.ndarray) -> float:
    """Lower bound on the weight of every NB walk, capped at 0."""
    return min(0.0, float(C.min())) if C.size else 0.0


def pruning_bounds(
    g: WeightedGraph,
    hop_cap: int,
    threshold: float,
    continuation: Optional[tuple] = None,
) -> np.ndarray:
    """Admissible per-arc lower bounds on the remaining weight to the target.

    Settles backward NB labels from the target only up to about half the
    threshold; arcs further out get the certified floor instead, which is
    enough to prune from the source side. Falls back to the hop-layered table
    when a negative NB cycle blocks convergence.
    """
    C, ok = continuation_bounds(g) if continuation is None else continuation
    if ok:
        cutoff = 0.5 * threshold + 2.0
        B, ok = K.nb_to_target_cut(
            g.indptr, g.heads, g.rev, g.weights, g.source, g.target, cutoff, negative_floor(C), _max_pops(g)
        )
        if ok:
            return B
    return nb_bounds_to_target(g, hop_cap)


def _bound_slice(A, r, lo, hi):
    return A[lo:hi] if A.ndim == 1 else A[r, lo:hi]


@dataclass
class ExtremalPointProcess:
    n: int
    window: Window
    threshold: float  # raw weight threshold ln(n)/alpha + x_hi
    hop_cap: int
    points: list  # (raw_weight, hops) of paths inside the window
    rescaled: list  # (x, h) for the same paths
    paths: list  # vertex sequences for the same paths
    enumerated: list  # (raw_weight, hops, vertex tuple) of every path found
    min_pair: Optional[tuple]  # rescaled (X*, H*) over the enumerated set
    nodes_expanded: int = 0

    @property
    def count(self) -> int:
        return len(self.points)


def rescale(consts: ModelConstants, ln_n: float, raw: float, hops: int) -> tuple[float, float]:
    return (raw - ln_n / consts.alpha, (hops - consts.gamma * ln_n) / math.sqrt(consts.beta * ln_n))


def unscale(consts: ModelConstants, ln_n: float, x: float, h: float) -> tuple[float, float]:
    return (x + ln_n / consts.alpha, h * math.sqrt(consts.beta * ln_n) + consts.gamma * ln_n)


def _hop_bound(consts: ModelConstants, ln_n: float, h: float) -> float:
    """Largest hop count with rescaled coordinate <= h (unclamped)."""
    if math.isinf(h):
        return h
    return math.floor(consts.gamma * ln_n + h * math.sqrt(consts.beta * ln_n))


def in_window(consts: ModelConstants, ln_n: float, window: Window, raw: float, hops: int) -> bool:
    """Window membership decided on raw quantities so thresholds are bit-exact."""
    L = ln_n / consts.alpha
    if not raw <= L + window.x_hi:
        return False
    if window.x_lo != -math.inf and not raw > L + window.x_lo:
        return False
    return _hop_bound(consts, ln_n, window.h_lo) < hops <= _hop_bound(consts, ln_n, window.h_hi)


def _enumerate(g: WeightedGraph, A: np.ndarray, threshold: float, hop_cap: int, budget: int):
    """All simple source->target paths with weight <= threshold and <= hop_cap arcs.

    Returns ``(found, nodes)`` with ``found`` a list of (weight, hops, vertices).
    """
    s, t = g.source, g.target
    indptr = g.indptr
    heads = g.heads
    weights = g.weights
    found: list = []
    visited = bytearray(g.n)
    visited[s] = 1
    path = [s]
    nodes = 0
    cut = threshold + _slack(threshold)
    if s == t:
        return found, nodes

    def rec(v, partial, depth):
        nonlocal nodes
        nodes += 1
        if nodes > budget:
            raise BudgetExceeded(
                f"node budget {budget} exceeded", partial=list(found), nodes=nodes
            )
        r = hop_cap - depth
        lo, hi = int(indptr[v]), int(indptr[v + 1])
        if lo == hi:
            return
        bounds = _bound_slice(A, r, lo, hi)
        ok = np.nonzero(partial + bounds <= cut)[0]
        for i in ok.tolist():
            a = lo + i
            x = int(heads[a])
            if visited[x]:
                continue
            wx = partial + float(weights[a])
            if x == t:
                if wx <= threshold:
                    found.append((wx, depth + 1, tuple(path) + (x,)))
                continue
            if r == 1:
                continue
            visited[x] = 1
            path.append(x)
            rec(x, wx, depth + 1)
            path.pop()
            visited[x] = 0

    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 4 * hop_cap + 100))
    try:
        rec(s, 0.0, 0)
    finally:
        sys.setrecursionlimit(old)
    return found, nodes


def _lex_min(found):
    return min(found, key=lambda f: (f[0], f[1], f[2]))


def enumerate_extremal(
    g: WeightedGraph,
    consts: ModelConstants,
    window: Window,
    hop_cap: Optional[int] = None,
    budget: int = DEFAULT_BUDGET,
    bounds: Optional[np.ndarray] = None,
) -> ExtremalPointProcess:
    """Exact branch-and-bound enumeration of the pre-limit extremal process in ``window``.

    Every simple path from the source to the target with raw weight at most
    ``ln(n)/alpha + window.x_hi`` and at most ``hop_cap`` hops is found;
    those also inside the full window become points.
    """
    if not math.isfinite(window.x_hi):
        raise InvalidWindow("enumeration needs a finite x_hi")
    ln_n = math.log(g.n)
    if hop_cap is None:
        hop_cap = default_hop_cap(consts, ln_n)
    if not 1 <= hop_cap <= HOP_HARD_CAP:
        raise InvalidParameter(f"hop_cap must lie in [1, {HOP_HARD_CAP}]")
    threshold = ln_n / consts.alpha + window.x_hi
    A = pruning_bounds(g, hop_cap, threshold) if bounds is None else bounds
    found, nodes = _enumerate(g, A, threshold, hop_cap, budget)
    found.sort(key=lambda f: (f[0], f[1], f[2]))
    pts, resc, paths = [], [], []
    for wt, hops, p in found:
        if in_window(consts, ln_n, window, wt, hops):
            pts.append((wt, hops))
            resc.append(rescale(consts, ln_n, wt, hops))
            paths.append(p)
    mp = None
    if found:
        wt, hops, _ = found[0]
        mp = rescale(consts, ln_n, wt, hops)
    return ExtremalPointProcess(g.n, window, threshold, hop_cap, pts, resc, paths, found, mp, nodes)


def minimum_path(
    g: WeightedGraph,
    consts: ModelConstants,
    hop_cap: Optional[int] = None,
    budget: int = DEFAULT_BUDGET,
    start_threshold: Optional[float] = None,
    continuation: Optional[tuple] = None,
):
    """Lexicographically minimal (weight, hops, vertices) simple path with <= hop_cap hops.

    Enumerates below a threshold that grows in doubling steps until a path
    turns up. Returns ``(weight, hops, vertices, nodes)`` or ``None`` when no
    source-target path within the hop cap exists.
    """
    ln_n = math.log(g.n)
    if hop_cap is None:
        hop_cap = default_hop_cap(consts, ln_n)
    hd = K.hop_distance(g.indptr, g.heads, g.source, g.target)
    if hd < 0 or hd > hop_cap:
        return None
    if continuation is None:
        continuation = continuation_bounds(g)
    thr = ln_n / consts.alpha if start_threshold is None else start_threshold
    step = 1.0
    nodes_total = 0
    for _ in range(64):
        A = pruning_bounds(g, hop_cap, thr, continuation)
        found, nodes = _enumerate(g, A, thr, hop_cap, budget - nodes_total)
        nodes_total += nodes
        if found:
            wt, hops, p = _lex_min(found)
            return wt, hops, p, nodes_total
        thr += step
        step *= 2.0
    return None


@dataclass
class GoodEventReport:
    g1: str
    g2: str
    g3: str
    details: dict = field(default_factory=dict)

    @property
    def g_all(self) -> bool:
        return self.g1 == HOLDS and self.g2 == HOLDS and self.g3 == HOLDS


def _witness_search(g, weights, start_vertices, C, limit, min_hops, budget, strict=False):
    """DFS for a simple path with total ``weights`` <= limit (strict < when
    ``strict``) and at least ``min_hops`` arcs. ``C`` must be a converged NB
    continuation bound for ``weights`` (all ``-inf`` disables pruning).
    Returns (path or None, exhausted).

    Uses an explicit stack: unpruned searches can run far deeper than the
    interpreter's recursion allows.
    """
    indptr, heads = g.indptr, g.heads
    bound = limit + _slack(limit)
    nodes = 0
    visited = bytearray(g.n)
    for s in start_vertices:
        s = int(s)
        path = [s]
        partial = [0.0]
        cursor = [int(indptr[s])]
        visited[s] = 1
        while path:
            v = path[-1]
            a = cursor[-1]
            if a >= indptr[v + 1]:
                visited[v] = 0
                path.pop()
                partial.pop()
                cursor.pop()
                continue
            cursor[-1] = a + 1
            if partial[-1] + C[a] > bound:
                continue
            x = int(heads[a])
            if visited[x]:
                continue
            wx = partial[-1] + float(weights[a])
            if len(path) >= min_hops and (wx < limit if strict else wx <= limit):
                return path + [x], False
            nodes += 1
            if nodes > budget:
                return None, False
            visited[x] = 1
            path.append(x)
            partial.append(wx)
            cursor.append(int(indptr[x]))
    return None, True


def path_weight(g: WeightedGraph, path) -> float:
    total = 0.0
    for a, b in zip(path[:-1], path[1:]):
        total += g.edge_weight(a, b)
    return total


def _nb_prefixes(g: WeightedGraph, start: int, length: int, weights):
    """(last arc, weight) of every NB walk from ``start`` with exactly ``length`` arcs."""
    indptr, heads, rev = g.indptr, g.heads, g.rev
    out = []
    stack = [(int(a), float(weights[a]), 1) for a in range(indptr[start], indptr[start + 1])]
    while stack:
        a, wsum, k = stack.pop()
        if k == length:
            out.append((a, wsum))
            continue
        v = int(heads[a])
        back = int(rev[a])
        for b in range(int(indptr[v]), int(indptr[v + 1])):
            if b != back:
                stack.append((b, wsum + float(weights[b]), k + 1))
    return out


def _nb_succ_min(g: WeightedGraph, a: int, C) -> float:
    v = int(g.heads[a])
    lo, hi = int(g.indptr[v]), int(g.indptr[v + 1])
    back = int(g.rev[a])
    best = math.inf
    for b in range(lo, hi):
        if b != back and C[b] < best:
            best = float(C[b])
    return best


def _check_g2(g, consts, radius, budget):
    """Every path from either endpoint with at least ``radius`` hops must have
    ``X(p) >= (s*/2) H(p)``, i.e. nonnegative weight under ``w - s*/2``."""
    shift = consts.s_star / 2.0
    w2 = g.weights - shift
    C2, ok = continuation_bounds(g, w2)
    info = {}
    if not ok:
        # a negative NB cycle defeats the certificate; fall back to an unpruned search
        hit, exhausted = _witness_search(
            g, w2, [g.source, g.target], np.full(C2.size, -np.inf), 0.0, radius, budget, strict=True
        )
        if hit is not None and path_weight(g, hit) < shift * (len(hit) - 1):
            info["g2_witness"] = hit
            return VIOLATED, info
        return (HOLDS if exhausted else UNVERIFIED), info
    worst = math.inf
    for s in (g.source, g.target):
        for a, wsum in _nb_prefixes(g, s, radius, w2):
            worst = min(worst, wsum + min(0.0, _nb_succ_min(g, a, C2)))
    info["g2_min_shifted"] = worst
    if worst >= 0:
        return HOLDS, info
    hit, exhausted = _witness_search(g, w2, [g.source, g.target], C2, 0.0, radius, budget, strict=True)
    if hit is not None:
        x = path_weight(g, hit)
        if x < shift * (len(hit) - 1):
            info["g2_witness"] = hit
            return VIOLATED, info
        return UNVERIFIED, info
    return (HOLDS if exhausted else UNVERIFIED), info


def _check_g3(g, consts, budget, continuation=None):
    """No path anywhere may weigh at most ``-ln(n)/alpha'``."""
    ln_n = math.log(g.n)
    tau = -ln_n / consts.alpha_prime
    C, ok = continuation_bounds(g) if continuation is None else continuation
    low = float(C.min()) if C.size else math.inf
    info = {"g3_min_bound": low, "g3_threshold": tau}
    if not ok:
        hit, exhausted = _witness_search(g, g.weights, range(g.n), np.full(C.size, -np.inf), tau, 1, budget)
        if hit is not None and path_weight(g, hit) <= tau:
            info["g3_witness"] = hit
            return VIOLATED, info
        return (HOLDS if exhausted else UNVERIFIED), info
    if low > tau:
        return HOLDS, info
    starts = sorted({int(v) for v in g.tails[C <= tau + _slack(tau)]})
    hit, exhausted = _witness_search(g, g.weights, starts, C, tau, 1, budget)
    if hit is not None and path_weight(g, hit) <= tau:
        info["g3_witness"] = hit
        return VIOLATED, info
    return (HOLDS if exhausted else UNVERIFIED), info


def check_good_events(
    g: WeightedGraph,
    consts: ModelConstants,
    forest: NeighborhoodForest,
    hop_cap: Optional[int] = None,
    witness_budget: int = WITNESS_BUDGET,
    continuation: Optional[tuple] = None,
) -> GoodEventReport:
    """Three-valued verdicts for the three good events.

    G2 and G3 are certified over simple paths of every length through
    non-backtracking walk minima; ``violated`` is reported only together with
    an explicit simple-path witness.
    """
    g1 = HOLDS if forest.g1_holds else VIOLATED
    g2, d2 = _check_g2(g, consts, forest.radius, witness_budget)
    g3, d3 = _check_g3(g, consts, witness_budget, continuation)
    details = {**d2, **d3}
    if hop_cap is not None:
        details["hop_cap"] = hop_cap
    return GoodEventReport(g1, g2, g3, details)


def tail_certified(g: WeightedGraph, hop_cap: int, threshold: float, bounds: Optional[np.ndarray] = None) -> bool:
    """True when no simple source-target path with more than ``hop_cap`` hops
    weighs at most ``threshold``, so the hop cap loses nothing in the window."""
    if bounds is None or bounds.ndim != 1:
        bounds = pruning_bounds(g, hop_cap, threshold)
    if bounds.ndim != 1:
        return False
    status = K.tail_walks(
        g.indptr, g.heads, g.rev, g.weights, g.source, g.target, bounds, hop_cap + 1, threshold, 4 * HOP_HARD_CAP
    )
    return status == 0
