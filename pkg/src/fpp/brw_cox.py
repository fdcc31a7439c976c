"""Branching random walk, its additive martingale, and the limiting Cox process."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import ndtri

from .distributions import WeightDistribution
from .errors import InvalidParameter, InvalidWindow, ResourceError
from .renewal import IntensityMeasure, Window, intensity_mass, normal_cdf

POPULATION_CAP = 10**7
DEFAULT_DEPTH = 16


@dataclass(frozen=True)
class WSample:
    depth: int
    value: float
    extinct: bool
    population: int


def simulate_W(
    lam: float,
    dist: WeightDistribution,
    alpha: float,
    depth: int,
    rng: np.random.Generator,
    history: bool = False,
):
    """``sum_{|u| = depth} exp(-alpha V(u))`` for a Poisson(lam) BRW.

    Grows whole generations at once. With ``history`` also returns the list
    of martingale values at depths ``0..depth``.
    """
    if depth < 0:
        raise InvalidParameter("depth must be nonnegative")
    pos = np.zeros(1)
    trail = [1.0]
    for _ in range(depth):
        if pos.size == 0:
            trail.append(0.0)
            continue
        kids = rng.poisson(lam, pos.size)
        total = int(kids.sum())
        if total > POPULATION_CAP:
            raise ResourceError(f"population {total} exceeds the cap {POPULATION_CAP}; lower the depth")
        pos = np.repeat(pos, kids) + np.asarray(dist.sample(rng, total), dtype=float).reshape(total)
        if history:
            trail.append(float(np.exp(-alpha * pos).sum()))
    value = float(np.exp(-alpha * pos).sum()) if pos.size else 0.0
    out = WSample(depth, value, pos.size == 0, int(pos.size))
    return (out, trail) if history else out


def one_step_pair(lam, dist, alpha, depth, rng) -> tuple[float, float]:
    """``(W_depth, W_{depth+1})`` computed on the same tree."""
    sample, trail = simulate_W(lam, dist, alpha, depth + 1, rng, history=True)
    return trail[depth], trail[depth + 1]


def generation_sizes(lam: float, depth: int, rng: np.random.Generator) -> int:
    """Size of generation ``depth`` of a Poisson(lam) Galton-Watson tree.

    Uses ``Z_{k+1} ~ Poisson(lam Z_k)``, which never materializes the tree.
    """
    z = 1
    for _ in range(depth):
        if z == 0:
            return 0
        z = int(rng.poisson(lam * z))
    return z


def extinction_probability(lam: float, tol: float = 1e-12) -> float:
    """Root in (0, 1) of ``q = exp(lam (q - 1))`` by damped fixed-point iteration.

    Iterates from q = 0, which climbs monotonically to the smaller root, and
    stops when the residual divided by ``1 - lam q`` (the local error scale)
    drops below ``tol``.
    """
    if not lam > 1:
        raise InvalidParameter("lambda must exceed 1")
    q = 0.0
    damp = 0.9
    for _ in range(10**8):
        f = math.exp(lam * (q - 1.0))
        resid = f - q
        if abs(resid) <= tol * max(1.0 - lam * f, 1e-300):
            return f
        q = q + damp * resid
    return q


@dataclass
class CoxSample:
    w_pair: tuple
    window: Window
    count: int
    points: list = field(default_factory=list)
    min_pair: Optional[tuple] = None


def _sample_x(alpha: float, x_lo: float, x_hi: float, u: np.ndarray) -> np.ndarray:
    """Inverse transform for the density proportional to ``exp(alpha x)`` on (x_lo, x_hi]."""
    if x_lo == -math.inf:
        return x_hi + np.log(u) / alpha
    span = x_hi - x_lo
    # x = x_hi + log(1 - u (1 - e^{-alpha span})) / alpha
    return x_hi + np.log1p(-u * -np.expm1(-alpha * span)) / alpha


def _sample_h(h_lo: float, h_hi: float, u: np.ndarray) -> np.ndarray:
    a, b = normal_cdf(h_lo), normal_cdf(h_hi)
    return ndtri(a + u * (b - a))


def sample_cox(im: IntensityMeasure, w_pair, window: Window, rng: np.random.Generator) -> CoxSample:
    """One draw of the Cox process restricted to ``window`` given (W, W~)."""
    mass = intensity_mass(im, window)
    if not math.isfinite(mass):
        raise InvalidWindow("window has infinite intensity mass")
    w, wt = float(w_pair[0]), float(w_pair[1])
    mu = w * wt * mass
    count = int(rng.poisson(mu)) if mu > 0 else 0
    if count == 0:
        return CoxSample((w, wt), window, 0)
    alpha = im.constants.alpha
    xs = _sample_x(alpha, window.x_lo, window.x_hi, rng.random(count))
    hs = _sample_h(window.h_lo, window.h_hi, rng.random(count))
    pts = list(zip(xs.tolist(), hs.tolist()))
    return CoxSample((w, wt), window, count, pts, min(pts))


@dataclass
class LimitMinSamples:
    x_star: np.ndarray
    h_star: np.ndarray
    empty: bool


def limit_min_law(im: IntensityMeasure, w_samples: Sequence, rng: np.random.Generator) -> LimitMinSamples:
    """(X*, H*) of the Cox process for each pair with ``W W~ > 0``.

    ``P(X* > x) = exp(-c gamma e^{alpha x})`` with ``c = W W~`` gives
    ``X* = ln(E / (c gamma)) / alpha`` for E ~ Exp(1); H* is standard normal.
    """
    c = np.array([float(a) * float(b) for a, b in w_samples], dtype=float)
    c = c[c > 0]
    if c.size == 0:
        return LimitMinSamples(np.zeros(0), np.zeros(0), True)
    k = im.constants
    e = rng.exponential(1.0, c.size)
    x = np.log(e / (c * k.gamma)) / k.alpha
    h = rng.standard_normal(c.size)
    return LimitMinSamples(x, h, False)


def _poisson_pmf_vec(mu: np.ndarray, k: int) -> np.ndarray:
    out = np.zeros_like(mu)
    pos = mu > 0
    out[~pos] = 1.0 if k == 0 else 0.0
    m = mu[pos]
    out[pos] = np.exp(k * np.log(m) - m - math.lgamma(k + 1))
    return out


def mixed_poisson_pmf(im: IntensityMeasure, window: Window, w_samples: Sequence, k: int) -> float:
    """Average over the pairs of the Poisson(W W~ Lambda(window)) pmf at k."""
    if k < 0:
        raise InvalidParameter("k must be nonnegative")
    mass = intensity_mass(im, window)
    if not math.isfinite(mass):
        raise InvalidWindow("window has infinite intensity mass")
    c = np.array([float(a) * float(b) for a, b in w_samples], dtype=float)
    if c.size == 0:
        raise InvalidParameter("need at least one w pair")
    return float(_poisson_pmf_vec(c * mass, int(k)).mean())


def sample_w_pairs(lam, dist, alpha, count, rng, depth: int = DEFAULT_DEPTH) -> list:
    """Independent (W, W~) proxies taken at a fixed depth."""
    return [
        (simulate_W(lam, dist, alpha, depth, rng).value, simulate_W(lam, dist, alpha, depth, rng).value)
        for _ in range(count)
    ]
