"""Scaling constants of the model.

Given a weight law and the mean degree ``lambda > 1`` this module finds the
tilt ``alpha`` solving ``lambda * exp(psi(alpha)) = 1`` on the decreasing
branch of ``psi``, and derives the hopcount drift ``gamma``, the hopcount
variance ``beta``, the linear growth floor ``s_star`` and an auxiliary tilt
``alpha_prime > alpha``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .distributions import WeightDistribution
from .errors import InvalidModel, InvalidParameter, NoSolution

EPS = 1e-8
T_TOL = 1e-12
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _upper_probe(dist: WeightDistribution, lo: float) -> float:
    """A point above ``lo`` that is still inside the domain."""
    hi = dist.domain[1]
    if math.isinf(hi):
        return lo + 1.0
    return 0.5 * (lo + hi)


def psi_minimizer(dist: WeightDistribution, start: float = 0.0):
    """Minimizer of psi on ``(start, sup D)``, or ``None`` when psi keeps decreasing.

    Uses bisection on psi', which is increasing by convexity.
    """
    hi_dom = dist.domain[1]
    lo = start
    if dist.psi(lo + EPS).d1 >= 0:
        return lo
    hi = _upper_probe(dist, lo)
    for _ in range(200):
        d1 = dist.psi(hi).d1
        if d1 >= 0:
            break
        lo = hi
        if math.isinf(hi_dom):
            hi = 2.0 * hi + 1.0
            if hi > 1e8:
                return None
        else:
            hi = 0.5 * (hi + hi_dom)
            if hi_dom - hi < 1e-12:
                return None
    else:
        return None
    while hi - lo > T_TOL * max(1.0, abs(hi)):
        mid = 0.5 * (lo + hi)
        if dist.psi(mid).d1 < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solve_alpha(dist: WeightDistribution, lam: float) -> float:
    """Root of ``psi(t) + ln(lam) = 0`` on the branch where psi' < 0."""
    if not lam > 1:
        raise InvalidParameter("lambda must exceed 1")
    target = -math.log(lam)

    def f(t):
        return dist.psi(t).value - target

    lo = EPS
    if not dist.in_domain(lo):
        raise NoSolution("0 is not inside the domain of psi")
    t_min = psi_minimizer(dist, 0.0)
    if t_min is not None:
        hi = t_min
        if f(hi) >= 0:
            raise NoSolution(
                f"min of psi + ln(lambda) on (0, sup D) is {f(hi):.6g} > 0", min_value=f(hi)
            )
    else:
        # psi decreasing on the whole positive domain: walk out until it drops below -ln(lam)
        hi = _upper_probe(dist, lo)
        best = f(hi)
        for _ in range(200):
            val = f(hi)
            best = min(best, val)
            if val < 0:
                break
            if math.isinf(dist.domain[1]):
                hi = 2.0 * hi + 1.0
            else:
                hi = 0.5 * (hi + dist.domain[1])
        else:
            raise NoSolution("psi + ln(lambda) stays positive on the domain", min_value=best)
    if f(lo) <= 0:
        raise NoSolution("psi + ln(lambda) is already nonpositive at 0+", min_value=f(lo))
    while hi - lo > T_TOL:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    t = 0.5 * (lo + hi)
    # Newton polish; stays inside the bracket or is discarded
    for _ in range(3):
        p = dist.psi(t)
        step = (p.value - target) / p.d1
        cand = t - step
        if not (lo - T_TOL <= cand <= hi + T_TOL):
            break
        t = cand
    p = dist.psi(t)
    if not p.d1 < 0:
        raise NoSolution("root found on the increasing branch of psi", min_value=p.value - target)
    return t


def derive_gamma_beta(dist: WeightDistribution, alpha: float) -> tuple[float, float]:
    p = dist.psi(alpha)
    if not p.d1 < 0:
        raise InvalidParameter(f"psi'(alpha) = {p.d1} must be negative")
    slope = abs(p.d1)
    return 1.0 / (alpha * slope), p.d2 / (alpha * slope ** 3)


def _golden_min(f, a: float, b: float, tol: float = 1e-10):
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol * max(1.0, abs(a) + abs(b)):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def compute_s_star(dist: WeightDistribution, lam: float, alpha: float, grid_points: int = 2048):
    """``-inf_{t > alpha} (psi(t) + ln lam) / t`` via log grid plus golden section."""
    log_lam = math.log(lam)

    def objective(t):
        return (dist.psi(t).value + log_lam) / t

    hi_dom = dist.domain[1]
    t_hi = alpha * 1e6 if math.isinf(hi_dom) else alpha + (hi_dom - alpha) * (1 - 1e-9)
    grid = alpha * np.exp(np.linspace(math.log1p(1e-9), math.log(t_hi / alpha), grid_points))
    values = np.array([objective(t) for t in grid])
    i = int(np.argmin(values))
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, grid_points - 1)]
    _, fmin = _golden_min(objective, a, b)
    fmin = min(fmin, float(values[i]))
    s_star = -float(fmin)
    if not s_star > 0:
        raise InvalidModel(f"s* = {s_star} is not positive; check the solver inputs")
    return s_star


def choose_alpha_prime(dist: WeightDistribution, alpha: float) -> float:
    """A tilt above alpha with ``psi(a') < psi(alpha)`` and ``psi'(a') < 0``.

    Midpoint between alpha and the minimizer of psi when one exists; otherwise
    ``alpha + 1`` pulled back inside the domain.
    """
    t_min = psi_minimizer(dist, alpha)
    hi = dist.domain[1]
    if t_min is not None and t_min > alpha:
        ap = 0.5 * (alpha + t_min)
    else:
        ap = alpha + 1.0
        if ap >= hi:
            ap = 0.5 * (alpha + hi)
    pa, pp = dist.psi(alpha), dist.psi(ap)
    if not (pp.value < pa.value and pp.d1 < 0):
        raise InvalidModel(f"no admissible alpha' found above alpha = {alpha}")
    return ap


@dataclass(frozen=True)
class ModelConstants:
    lam: float
    alpha: float
    gamma: float
    beta: float
    s_star: float
    alpha_prime: float
    psi_d1: float
    psi_d2: float

    @classmethod
    def from_distribution(cls, dist: WeightDistribution, lam: float) -> "ModelConstants":
        alpha = solve_alpha(dist, lam)
        gamma, beta = derive_gamma_beta(dist, alpha)
        p = dist.psi(alpha)
        return cls(
            lam=float(lam),
            alpha=alpha,
            gamma=gamma,
            beta=beta,
            s_star=compute_s_star(dist, lam, alpha),
            alpha_prime=choose_alpha_prime(dist, alpha),
            psi_d1=p.d1,
            psi_d2=p.d2,
        )

    @property
    def drift(self) -> float:
        """Mean step of the tilted walk, ``|psi'(alpha)|``."""
        return abs(self.psi_d1)

    def as_dict(self) -> dict:
        return asdict(self)
