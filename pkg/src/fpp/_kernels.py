"""Compiled relaxation kernels over the arcs of a CSR graph.

A non-backtracking (NB) walk never uses an edge and then immediately its
reverse. Every simple path is an NB walk, so minima over NB walks are valid
lower bounds for simple paths, and they are much tighter than plain walk
minima: a plain walk can bounce back and forth on one light edge.

Arc ``a`` goes ``tails[a] -> heads[a]``; arcs leaving ``v`` occupy
``indptr[v]:indptr[v+1]`` and ``rev[a]`` is the opposite arc.
"""

import numpy as np
from numba import njit

INF = np.inf


@njit(cache=True)
def plain_walk_table(indptr, heads, weights, target, hop_cap):
    """``d[k, v]``: min weight of a walk from v to target with at most k edges
    that stops at its first visit to the target (so ``d[k, target] = 0``)."""
    n = indptr.size - 1
    d = np.full((hop_cap + 1, n), INF)
    d[:, target] = 0.0
    for k in range(1, hop_cap + 1):
        for v in range(n):
            if v == target:
                continue
            best = d[k - 1, v]
            for a in range(indptr[v], indptr[v + 1]):
                c = weights[a] + d[k - 1, heads[a]]
                if c < best:
                    best = c
            d[k, v] = best
    return d


@njit(cache=True)
def nb_to_target(indptr, heads, rev, weights, source, target, hop_cap):
    """``A[k, a]``: min weight of an NB walk that starts with arc ``a`` and
    reaches ``target`` (first visit) within ``k`` arcs, never entering ``source``.
    """
    n = indptr.size - 1
    m = heads.size
    A = np.full((hop_cap + 1, m), INF)
    for k in range(1, hop_cap + 1):
        prev = A[k - 1]
        cur = A[k]
        for v in range(n):
            lo = indptr[v]
            hi = indptr[v + 1]
            if v == target:
                for b in range(lo, hi):
                    a = rev[b]
                    cur[a] = weights[a]
                continue
            if v == source:
                continue
            best1 = INF
            best2 = INF
            who1 = -1
            if k > 1:
                for b in range(lo, hi):
                    x = prev[b]
                    if x < best1:
                        best2 = best1
                        best1 = x
                        who1 = heads[b]
                    elif x < best2:
                        best2 = x
            for b in range(lo, hi):
                a = rev[b]
                u = heads[b]
                s = best2 if u == who1 else best1
                if s < INF:
                    cur[a] = weights[a] + s
    return A


@njit(cache=True)
def _pred_pass(indptr, heads, rev, weights, F, out, relax):
    """One NB extension step; with ``relax`` the result is min(F, extension)
    and is written in place. Returns True if any value decreased."""
    n = indptr.size - 1
    changed = False
    for u in range(n):
        lo = indptr[u]
        hi = indptr[u + 1]
        best1 = INF
        best2 = INF
        who1 = -1
        for b in range(lo, hi):
            x = F[rev[b]]
            if x < best1:
                best2 = best1
                best1 = x
                who1 = heads[b]
            elif x < best2:
                best2 = x
        for a in range(lo, hi):
            s = best2 if heads[a] == who1 else best1
            c = weights[a] + s
            if relax:
                if c < out[a]:
                    out[a] = c
                    changed = True
            else:
                out[a] = c
    return changed


@njit(cache=True)
def _push(keys, ids, size, key, item):
    if size == keys.size:
        nk = np.empty(2 * size, dtype=keys.dtype)
        ni = np.empty(2 * size, dtype=ids.dtype)
        nk[:size] = keys
        ni[:size] = ids
        keys = nk
        ids = ni
    i = size
    while i > 0:
        p = (i - 1) >> 1
        if keys[p] <= key:
            break
        keys[i] = keys[p]
        ids[i] = ids[p]
        i = p
    keys[i] = key
    ids[i] = item
    return keys, ids, size + 1


@njit(cache=True)
def _pop(keys, ids, size):
    key = keys[0]
    item = ids[0]
    size -= 1
    lk = keys[size]
    li = ids[size]
    i = 0
    while True:
        c = 2 * i + 1
        if c >= size:
            break
        if c + 1 < size and keys[c + 1] < keys[c]:
            c += 1
        if keys[c] >= lk:
            break
        keys[i] = keys[c]
        ids[i] = ids[c]
        i = c
    if size > 0:
        keys[i] = lk
        ids[i] = li
    return key, item, size


@njit(cache=True)
def _spfa_forward(indptr, heads, rev, weights, F, max_pops):
    """Label-correcting relaxation F[a] <- min(F[a], w[a] + F[c]) over NB
    predecessors c of a, seeded with every finite arc and processed in
    increasing label order (Dijkstra with re-insertion, so negative weights
    are fine). Returns the converged flag."""
    m = heads.size
    keys = np.empty(1024)
    ids = np.empty(1024, dtype=np.int64)
    size = 0
    for a in range(m):
        if F[a] < INF:
            keys, ids, size = _push(keys, ids, size, F[a], a)
    pops = 0
    while size > 0:
        fc, c, size = _pop(keys, ids, size)
        if fc > F[c]:
            continue
        pops += 1
        if pops > max_pops:
            return False
        x = heads[rev[c]]  # tail of c
        u = heads[c]
        for a in range(indptr[u], indptr[u + 1]):
            if heads[a] == x:
                continue
            cand = weights[a] + fc
            if cand < F[a]:
                F[a] = cand
                keys, ids, size = _push(keys, ids, size, cand, a)
    return True


@njit(cache=True)
def nb_forward_min(indptr, heads, tails, rev, weights, source, min_arcs, max_pops):
    """Min weight of NB walks with at least ``min_arcs`` arcs, ending with each arc.

    ``source < 0`` lets walks start anywhere. Returns ``(F, converged)``;
    ``F`` is only a valid lower bound when ``converged`` is True (a negative
    NB cycle makes the relaxation run past ``max_pops``).
    """
    m = heads.size
    F = np.empty(m)
    for a in range(m):
        if source < 0 or tails[a] == source:
            F[a] = weights[a]
        else:
            F[a] = INF
    G = np.empty(m)
    for _ in range(1, min_arcs):
        _pred_pass(indptr, heads, rev, weights, F, G, False)
        F, G = G, F
    ok = _spfa_forward(indptr, heads, rev, weights, F, max_pops)
    return F, ok


@njit(cache=True)
def _spfa_backward(indptr, heads, rev, weights, B, blocked_src, blocked_mid, only_negative, max_pops):
    """Relax B[a] <- min(B[a], w[a] + B[b]) over NB successors b of a, in
    increasing label order with re-insertion.

    Arcs entering ``blocked_src`` and arcs whose head is ``blocked_mid`` are
    never extended backwards. With ``only_negative`` only negative successor
    values propagate (continuation semantics)."""
    m = heads.size
    keys = np.empty(1024)
    ids = np.empty(1024, dtype=np.int64)
    size = 0
    for a in range(m):
        if B[a] < INF and not (only_negative and not B[a] < 0.0):
            keys, ids, size = _push(keys, ids, size, B[a], a)
    pops = 0
    while size > 0:
        fb, b, size = _pop(keys, ids, size)
        if fb > B[b]:
            continue
        pops += 1
        if pops > max_pops:
            return False
        x = heads[rev[b]]  # tail of b
        y = heads[b]
        if x == blocked_src or x == blocked_mid:
            continue
        for c in range(indptr[x], indptr[x + 1]):
            u = heads[c]
            if u == y:
                continue
            a = rev[c]  # u -> x
            cand = weights[a] + fb
            if cand < B[a]:
                B[a] = cand
                if not (only_negative and not cand < 0.0):
                    keys, ids, size = _push(keys, ids, size, cand, a)
    return True


@njit(cache=True)
def nb_to_target_any(indptr, heads, rev, weights, source, target, max_pops):
    """``B[a]``: min weight of an NB walk of any length starting with arc ``a``
    that stops at its first visit of ``target`` and never enters ``source``."""
    m = heads.size
    B = np.full(m, INF)
    for a in range(m):
        if heads[a] == target:
            B[a] = weights[a]
    ok = _spfa_backward(indptr, heads, rev, weights, B, source, target, False, max_pops)
    return B, ok


@njit(cache=True)
def nb_continuation_min(indptr, heads, rev, weights, max_pops):
    """``C[a]``: min weight of an NB walk of any length >= 1 starting with arc ``a``.

    Returns ``(C, converged)``; only a valid lower bound when converged.
    """
    C = weights.copy()
    ok = _spfa_backward(indptr, heads, rev, weights, C, -1, -1, True, max_pops)
    return C, ok


@njit(cache=True)
def hop_distance(indptr, heads, source, target):
    """Unweighted graph distance, -1 when disconnected."""
    n = indptr.size - 1
    dist = np.full(n, -1, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    dist[source] = 0
    queue[0] = source
    head = 0
    tail = 1
    while head < tail:
        v = queue[head]
        head += 1
        if v == target:
            return dist[v]
        for a in range(indptr[v], indptr[v + 1]):
            x = heads[a]
            if dist[x] < 0:
                dist[x] = dist[v] + 1
                queue[tail] = x
                tail += 1
    return -1


@njit(cache=True)
def nb_to_target_cut(indptr, heads, rev, weights, source, target, cutoff, neg_floor, max_pops):
    """Cut-off version of ``nb_to_target_any``.

    Labels are settled in increasing order until the smallest open label
    exceeds ``cutoff``. ``neg_floor`` must lower-bound the weight of every NB
    walk (or be 0 when no walk is negative); then every later label is at
    least ``stop + neg_floor`` and ``min(B, stop + neg_floor)`` is an
    admissible bound for every arc. Returns ``(bound, converged)``.
    """
    m = heads.size
    B = np.full(m, INF)
    keys = np.empty(1024)
    ids = np.empty(1024, dtype=np.int64)
    size = 0
    for a in range(m):
        if heads[a] == target:
            B[a] = weights[a]
            keys, ids, size = _push(keys, ids, size, B[a], a)
    pops = 0
    stop = INF
    while size > 0:
        if keys[0] > cutoff:
            stop = keys[0]
            break
        fb, b, size = _pop(keys, ids, size)
        if fb > B[b]:
            continue
        pops += 1
        if pops > max_pops:
            return B, False
        x = heads[rev[b]]
        y = heads[b]
        if x == source or x == target:
            continue
        for c in range(indptr[x], indptr[x + 1]):
            u = heads[c]
            if u == y:
                continue
            a = rev[c]
            cand = weights[a] + fb
            if cand < B[a]:
                B[a] = cand
                keys, ids, size = _push(keys, ids, size, cand, a)
    if stop < INF:
        floor = stop + neg_floor
        for a in range(m):
            if B[a] > floor:
                B[a] = floor
    return B, True


@njit(cache=True)
def tail_walks(indptr, heads, rev, weights, source, target, bound, min_arcs, threshold, max_layers):
    """Search for an NB walk source -> target (first visit, never re-entering
    the source) with at least ``min_arcs`` arcs and weight <= threshold.

    Layered min-plus DP over arcs, dropping any arc whose label plus the
    admissible remaining ``bound`` exceeds the threshold. Returns 0 when no
    such walk exists, 1 when one does, 2 when the layer cap was reached.
    """
    m = heads.size
    cut = threshold + 1e-9 * max(1.0, abs(threshold))
    cur_val = np.full(m, INF)
    nxt_val = np.full(m, INF)
    cur = np.empty(m, dtype=np.int64)
    nxt = np.empty(m, dtype=np.int64)
    nc = 0
    for a in range(indptr[source], indptr[source + 1]):
        v = heads[a]
        if v == target:
            if min_arcs <= 1 and weights[a] <= threshold:
                return 1
            continue
        if weights[a] + _rest(indptr, heads, bound, a, v, source) <= cut:
            cur_val[a] = weights[a]
            cur[nc] = a
            nc += 1
    layer = 1
    while nc > 0:
        if layer >= max_layers:
            return 2
        nn = 0
        for i in range(nc):
            c = cur[i]
            fc = cur_val[c]
            x = heads[rev[c]]
            u = heads[c]
            for a in range(indptr[u], indptr[u + 1]):
                v = heads[a]
                if v == x or v == source:
                    continue
                cand = fc + weights[a]
                if v == target:
                    if layer + 1 >= min_arcs and cand <= threshold:
                        return 1
                    continue
                if cand + _rest(indptr, heads, bound, a, v, source) > cut:
                    continue
                if nxt_val[a] == INF:
                    nxt[nn] = a
                    nn += 1
                if cand < nxt_val[a]:
                    nxt_val[a] = cand
        for i in range(nc):
            cur_val[cur[i]] = INF
        cur, nxt = nxt, cur
        cur_val, nxt_val = nxt_val, cur_val
        nc = nn
        layer += 1
    return 0


@njit(cache=True)
def _rest(indptr, heads, bound, a, v, source):
    """Lower bound on the remaining weight after arc ``a`` (head ``v``).

    Also admits the reversal of ``a``, which only loosens the bound."""
    best = INF
    for b in range(indptr[v], indptr[v + 1]):
        y = heads[b]
        if y == source:
            continue
        if bound[b] < best:
            best = bound[b]
    return best


@njit(cache=True)
def build_csr(n, u, v, w):
    """CSR arcs from edges sorted by (u, v) with u < v; neighbour lists come
    out ascending because smaller neighbours (reverse arcs) are placed first."""
    m = u.size
    deg = np.zeros(n + 1, dtype=np.int64)
    for e in range(m):
        deg[u[e] + 1] += 1
        deg[v[e] + 1] += 1
    indptr = np.cumsum(deg)
    fill = indptr[:-1].copy()
    heads = np.empty(2 * m, dtype=np.int64)
    tails = np.empty(2 * m, dtype=np.int64)
    weights = np.empty(2 * m)
    rev = np.empty(2 * m, dtype=np.int64)
    fwd = np.empty(m, dtype=np.int64)
    for e in range(m):
        a = fill[v[e]]
        fill[v[e]] += 1
        heads[a] = u[e]
        tails[a] = v[e]
        weights[a] = w[e]
        fwd[e] = a
    for e in range(m):
        a = fill[u[e]]
        fill[u[e]] += 1
        heads[a] = v[e]
        tails[a] = u[e]
        weights[a] = w[e]
        rev[a] = fwd[e]
        rev[fwd[e]] = a
    return indptr, heads, tails, weights, rev
