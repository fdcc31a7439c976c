"""Renewal function, limiting intensity and the hop cutoff.

``V(x) = sum_{k>=1} lam^k P(S_k <= x)`` is estimated through the tilted walk
``S^`` whose step law has density ``lam * exp(-alpha x)`` relative to ``X``:
``lam^k P(S_k <= x) = E[exp(alpha S^_k) 1{S^_k <= x}]``. The tilted walk has
positive drift ``|psi'(alpha)|`` so each trajectory contributes only finitely
many terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import ModelConstants
from .distributions import WeightDistribution
from .errors import InvalidParameter, InvalidWindow

INF = math.inf


# Hart (1968) rational approximation, algorithm 5666;
# absolute error well below 1e-10 on the real line.
_P = (0.0352624965998911, 0.700383064443688, 6.37396220353165, 33.912866078383,
      112.079291497871, 221.213596169931, 220.206867912376)
_Q = (0.0883883476483184, 1.75566716318264, 16.064177579207, 86.7807322029461,
      296.564248779674, 637.333633378831, 793.826512519948, 440.413735824752)
_SQRT2PI = 2.506628274631


def normal_cdf(h: float) -> float:
    """Standard normal cdf; exact 0 and 1 at the infinities."""
    if h == INF:
        return 1.0
    if h == -INF:
        return 0.0
    z = abs(h)
    if z > 37.0:
        tail = 0.0
    else:
        e = math.exp(-0.5 * z * z)
        if z < 7.07106781186547:
            num = 0.0
            for c in _P:
                num = num * z + c
            den = 0.0
            for c in _Q:
                den = den * z + c
            tail = e * num / den
        else:
            b = z + 0.65
            b = z + 4.0 / b
            b = z + 3.0 / b
            b = z + 2.0 / b
            b = z + 1.0 / b
            tail = e / b / _SQRT2PI
    return 1.0 - tail if h > 0 else tail


@dataclass(frozen=True)
class Window:
    """Half-open rectangle ``(x_lo, x_hi] x (h_lo, h_hi]`` in rescaled coordinates."""

    x_hi: float
    x_lo: float = -INF
    h_lo: float = -INF
    h_hi: float = INF

    def __post_init__(self):
        if not self.x_lo <= self.x_hi:
            raise InvalidWindow("need x_lo <= x_hi")
        if not self.h_lo <= self.h_hi:
            raise InvalidWindow("need h_lo <= h_hi")
        if self.x_lo == INF or self.x_hi == -INF:
            raise InvalidWindow("x bounds must lie in {-inf} U R")

    def contains(self, x: float, h: float) -> bool:
        return self.x_lo < x <= self.x_hi and self.h_lo < h <= self.h_hi

    def with_x_hi(self, x_hi: float) -> "Window":
        return Window(x_hi=x_hi, x_lo=self.x_lo, h_lo=self.h_lo, h_hi=self.h_hi)


@dataclass(frozen=True)
class IntensityMeasure:
    """``gamma * alpha e^{alpha x} dx  (x)  standard normal density dh``."""

    constants: ModelConstants

    def mass(self, w: Window) -> float:
        return intensity_mass(self, w)

    def x_mass(self, x: float) -> float:
        """Mass of the full slice ``(-inf, x] x R``."""
        c = self.constants
        return c.gamma * math.exp(c.alpha * x)


def _exp_alpha(alpha: float, x: float) -> float:
    if x == -INF:
        return 0.0
    return math.exp(alpha * x)


def intensity_mass(im: IntensityMeasure, w: Window) -> float:
    c = im.constants
    if w.x_hi == INF:
        return INF
    ex = _exp_alpha(c.alpha, w.x_hi) - _exp_alpha(c.alpha, w.x_lo)
    ph = normal_cdf(w.h_hi) - normal_cdf(w.h_lo)
    return c.gamma * ex * ph


def hop_cap(consts: ModelConstants, ln_n: float) -> int:
    """Hard hop cap ``ceil(2 gamma ln n)``; also the value of ``k_n(+inf)``."""
    return int(math.ceil(2.0 * consts.gamma * ln_n))


def hop_cutoff(consts: ModelConstants, ln_n: float, h: float) -> int:
    """``floor(gamma ln n + h sqrt(beta ln n))`` clamped at 0."""
    if h == INF:
        return hop_cap(consts, ln_n)
    if h == -INF:
        return 0
    k = math.floor(consts.gamma * ln_n + h * math.sqrt(consts.beta * ln_n))
    return max(int(k), 0)


def k_n(consts: ModelConstants, n: int, h: float) -> int:
    if n < 2:
        raise InvalidParameter("n must be at least 2")
    return hop_cutoff(consts, math.log(n), h)


@dataclass(frozen=True)
class RenewalEstimate:
    x: float
    value: float
    stderr: float
    truncation_flag: bool
    paths_used: int
    # value and stderr multiplied by exp(-alpha x)
    scaled_value: float
    scaled_stderr: float


def estimate_V(
    consts: ModelConstants,
    dist: WeightDistribution,
    x: float,
    replications: int,
    rng: np.random.Generator,
    max_steps: int | None = None,
) -> RenewalEstimate:
    """Monte Carlo renewal function from independent tilted-walk trajectories.

    Each trajectory is stopped once it sits more than ``20/alpha`` above ``x``
    or after ``K_max = 10 * ceil((x_+ + B) / drift)`` steps; ``max_steps`` caps
    the sum at a fixed number of steps (used for hop-restricted sums).
    """
    if replications < 1:
        raise InvalidParameter("replications must be positive")
    alpha = consts.alpha
    if x == -INF:
        return RenewalEstimate(x, 0.0, 0.0, False, replications, 0.0, 0.0)
    band = 20.0 / alpha
    k_max = 10 * int(math.ceil((max(x, 0.0) + band) / consts.drift))
    steps = k_max if max_steps is None else min(k_max, int(max_steps))
    acc = np.zeros(replications)
    pos = np.zeros(replications)
    idx = np.arange(replications)
    for _ in range(steps):
        if idx.size == 0:
            break
        pos += dist.tilted_sample(alpha, rng, idx.size)
        below = pos <= x
        if below.any():
            acc[idx[below]] += np.exp(alpha * (pos[below] - x))
        alive = pos - x <= band
        if not alive.all():
            idx = idx[alive]
            pos = pos[alive]
    truncated = bool(idx.size) and (max_steps is None or max_steps > k_max)
    mean = float(acc.mean())
    se = float(acc.std(ddof=1) / math.sqrt(replications)) if replications > 1 else 0.0
    scale = math.exp(alpha * x)
    return RenewalEstimate(x, mean * scale, se * scale, truncated, replications, mean, se)


def ratio_check(
    consts: ModelConstants,
    dist: WeightDistribution,
    ln_n: float,
    x: float,
    h: float,
    replications: int,
    rng: np.random.Generator,
) -> float:
    """``sum_{k<=k_n(h)} lam^k P(S_k <= ln(n)/alpha + x) / (n Lambda((-inf,x] x (-inf,h]))``.

    Computed entirely on the tilted walk; should approach 1 as ``ln_n`` grows.
    """
    if ln_n < 1.0:
        raise InvalidParameter("ln_n must be at least 1")
    im = IntensityMeasure(consts)
    lam_mass = intensity_mass(im, Window(x_hi=x, h_hi=h))
    if lam_mass == 0:
        raise InvalidWindow("window has zero intensity mass")
    level = ln_n / consts.alpha + x
    k = hop_cutoff(consts, ln_n, h)
    if k == 0:
        return 0.0
    est = estimate_V(consts, dist, level, replications, rng, max_steps=k)
    # n * gamma e^{alpha x} Phi(h) = e^{alpha * level} * gamma * Phi(h)
    return est.scaled_value / (consts.gamma * normal_cdf(h))
