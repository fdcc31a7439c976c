"""Chen-Stein Poisson approximation with a global indicator, and exact small-case oracles.

For Bernoulli variables ``X_i`` with dissociating neighbourhoods ``N_i`` and
a further Bernoulli ``chi``::

    d_TV(chi * sum X_i, Poi(sum p_i))
        <= 2 P(chi = 0) + sum_i sum_{j in N_i + {i}} p_i p_j
           + sum_i sum_{j in N_i} E[X_i X_j chi]
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidFamily, InvalidParameter, SizeError

MAX_EXACT = 12


@dataclass
class DependencyFamily:
    p: np.ndarray
    neighborhoods: list  # list of sets, one per index
    pair_terms: dict  # (i, j) -> E[X_i X_j chi] for j in N_i
    chi_zero_prob: float = 0.0
    lambda_cs: float = field(init=False)

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        self.neighborhoods = [set(int(j) for j in nb) for nb in self.neighborhoods]
        if len(self.neighborhoods) != self.p.size:
            raise InvalidFamily("one neighbourhood per index is required")
        tol = 1e-12
        if np.any(self.p < -tol) or np.any(self.p > 1 + tol):
            raise InvalidFamily("success probabilities must lie in [0, 1]")
        for i, nb in enumerate(self.neighborhoods):
            if i in nb:
                raise InvalidFamily(f"index {i} lies in its own neighbourhood")
            if any(j < 0 or j >= self.p.size for j in nb):
                raise InvalidFamily(f"neighbourhood of {i} names an unknown index")
        for (i, j), v in self.pair_terms.items():
            if v < -tol or v > min(self.p[i], self.p[j]) + tol:
                raise InvalidFamily(f"pair term ({i}, {j}) = {v} outside [0, min(p_i, p_j)]")
        if not -tol <= self.chi_zero_prob <= 1 + tol:
            raise InvalidFamily("P(chi = 0) must lie in [0, 1]")
        self.lambda_cs = float(self.p.sum())

    @property
    def size(self) -> int:
        return int(self.p.size)


def poisson_pmf(lambda_cs: float, k: int) -> float:
    """``e^{-l} l^k / k!`` evaluated in log space."""
    if lambda_cs < 0:
        raise InvalidParameter("Poisson mean must be nonnegative")
    if k < 0:
        return 0.0
    if lambda_cs == 0:
        return 1.0 if k == 0 else 0.0
    return math.exp(k * math.log(lambda_cs) - lambda_cs - math.lgamma(k + 1))


def stein_bound(fam: DependencyFamily) -> float:
    total = 2.0 * fam.chi_zero_prob
    p = fam.p
    for i, nb in enumerate(fam.neighborhoods):
        total += p[i] * p[i]
        for j in nb:
            total += p[i] * p[j]
            try:
                total += fam.pair_terms[(i, j)]
            except KeyError:
                raise InvalidFamily(f"missing pair term for neighbour ({i}, {j})") from None
    return float(total)


def family_from_joint(joint: np.ndarray, neighborhoods=None) -> DependencyFamily:
    """Marginals, pair terms and P(chi = 0) read off an explicit joint pmf.

    ``joint`` has shape ``(2,) * (m + 1)``; the last axis is chi. Without
    ``neighborhoods`` every index neighbours every other one, which is always
    a valid (if loose) choice.
    """
    joint = np.asarray(joint, dtype=float)
    m = joint.ndim - 1
    if neighborhoods is None:
        neighborhoods = [set(range(m)) - {i} for i in range(m)]
    p = np.empty(m)
    for i in range(m):
        axes = tuple(a for a in range(m + 1) if a != i)
        p[i] = joint.sum(axis=axes)[1]
    pair_terms = {}
    for i, nb in enumerate(neighborhoods):
        for j in nb:
            idx = [slice(None)] * (m + 1)
            idx[i] = 1
            idx[j] = 1
            idx[m] = 1
            pair_terms[(i, int(j))] = float(joint[tuple(idx)].sum())
    chi0 = float(joint[..., 0].sum())
    return DependencyFamily(p, neighborhoods, pair_terms, chi0)


def exact_tv_small(joint: np.ndarray, neighborhoods=None) -> tuple[float, float]:
    """(exact d_TV(chi * Y, Poi(sum p_i)), Stein bound) by full enumeration."""
    joint = np.asarray(joint, dtype=float)
    m = joint.ndim - 1
    if m > MAX_EXACT:
        raise SizeError(f"exact enumeration supports at most {MAX_EXACT} variables, got {m}")
    if joint.shape != (2,) * (m + 1):
        raise InvalidParameter("joint pmf must have shape (2,) * (m + 1)")
    if np.any(joint < 0) or abs(joint.sum() - 1.0) > 1e-12:
        raise InvalidParameter("joint pmf must be nonnegative and sum to 1")
    fam = family_from_joint(joint, neighborhoods)
    law = np.zeros(m + 1)
    for bits in itertools.product((0, 1), repeat=m + 1):
        pr = joint[bits]
        if pr:
            law[sum(bits[:m]) * bits[m]] += pr
    lam = fam.lambda_cs
    pi = np.array([poisson_pmf(lam, k) for k in range(m + 1)])
    tail = max(0.0, 1.0 - pi.sum())
    tv = 0.5 * (float(np.abs(law - pi).sum()) + tail)
    return float(tv), stein_bound(fam)


def random_dissociated_joint(rng: np.random.Generator, m: int, latents: int = None):
    """Joint pmf of a random family with valid dissociating neighbourhoods.

    Each ``X_i`` is a random boolean function of a random subset ``S_i`` of
    independent latent bits, so ``X_i`` is independent of every ``X_j`` with
    disjoint subset; ``N_i`` collects the overlapping ones. ``chi`` is a
    random function of all latents plus its own coin, hence correlated with
    the X's. Returns ``(joint, neighborhoods)``.
    """
    L = latents if latents is not None else int(rng.integers(1, 9))
    q = rng.uniform(0.02, 0.98, L)
    subsets = []
    for _ in range(m):
        k = int(rng.integers(1, min(3, L) + 1))
        subsets.append(tuple(sorted(rng.choice(L, size=k, replace=False).tolist())))
    tables = [rng.random(2 ** len(s)) < rng.uniform(0.05, 0.6) for s in subsets]
    chi_table = rng.uniform(0.0, 1.0, 2**L) ** rng.uniform(0.02, 0.5)
    joint = np.zeros((2,) * (m + 1))
    for z in itertools.product((0, 1), repeat=L):
        pz = 1.0
        for b, qb in zip(z, q):
            pz *= qb if b else 1.0 - qb
        xs = []
        for s, t in zip(subsets, tables):
            key = 0
            for b in s:
                key = 2 * key + z[b]
            xs.append(int(t[key]))
        zkey = int("".join(map(str, z)), 2) if L else 0
        pc = float(chi_table[zkey])
        joint[tuple(xs) + (1,)] += pz * pc
        joint[tuple(xs) + (0,)] += pz * (1.0 - pc)
    joint /= joint.sum()
    nbs = [{j for j in range(m) if j != i and set(subsets[i]) & set(subsets[j])} for i in range(m)]
    return joint, nbs


@dataclass
class SweepResult:
    families: int
    violations: int
    worst_slack: float  # min over families of bound - exact TV


def soundness_sweep(rng: np.random.Generator, families: int = 1000, max_m: int = 10) -> SweepResult:
    worst = math.inf
    bad = 0
    for _ in range(families):
        m = int(rng.integers(0, max_m + 1))
        joint, nbs = random_dissociated_joint(rng, m)
        tv, bound = exact_tv_small(joint, nbs)
        worst = min(worst, bound - tv)
        if tv > bound + 1e-12:
            bad += 1
    return SweepResult(families, bad, worst)
