"""Signed edge-weight laws.

Every law carries an exact sampler, its log-Laplace transform
``psi(t) = ln E[exp(-t X)]`` with the first two derivatives in closed form,
and a sampler for the exponentially tilted law with density proportional to
``exp(-alpha x)`` times the density of ``X``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import InvalidParameter

INF = math.inf


class PsiValue(NamedTuple):
    value: float
    d1: float
    d2: float

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)


OUTSIDE_DOMAIN = PsiValue(INF, math.nan, math.nan)


class WeightDistribution:
    """Base class; subclasses implement ``_psi``, ``sample`` and ``domain``."""

    kind = "custom"

    @property
    def domain(self) -> tuple[float, float]:
        """Open interval ``(lo, hi)`` on which psi is finite."""
        raise NotImplementedError

    @property
    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    def in_domain(self, t: float) -> bool:
        lo, hi = self.domain
        return lo < t < hi

    def psi(self, t: float) -> PsiValue:
        if not self.in_domain(t):
            return OUTSIDE_DOMAIN
        v, d1, d2 = self._psi(float(t))
        return PsiValue(float(v), float(d1), float(d2))

    def _psi(self, t: float) -> tuple[float, float, float]:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size=None):
        raise NotImplementedError

    @property
    def mean(self) -> float:
        return -self.psi(0.0).d1

    @property
    def variance(self) -> float:
        return self.psi(0.0).d2

    def tilted_sample(self, alpha: float, rng: np.random.Generator, size=None):
        self._check_tilt(alpha)
        if alpha == 0:
            return self.sample(rng, size)
        return self._tilted(alpha, rng, size)

    def _check_tilt(self, alpha: float) -> None:
        if not self.in_domain(alpha):
            raise InvalidParameter(f"tilt {alpha!r} outside the interior of the domain {self.domain}")

    def _tilted(self, alpha, rng, size):
        samples, _ = rejection_tilt(self, alpha, rng, size)
        return samples

    def arithmetic_span(self) -> Optional[float]:
        return None

    def spec(self) -> str:
        raise NotImplementedError

    def __str__(self) -> str:
        return self.spec()


def _fmt(x: float) -> str:
    return repr(float(x))


@dataclass(frozen=True)
class Exponential(WeightDistribution):
    rate: float = 1.0
    kind = "exponential"

    def __post_init__(self):
        if not self.rate > 0:
            raise InvalidParameter("exponential rate must be positive")

    @property
    def domain(self):
        return (-self.rate, INF)

    @property
    def support(self):
        return (0.0, INF)

    def _psi(self, t):
        s = self.rate + t
        return (math.log(self.rate) - math.log(s), -1.0 / s, 1.0 / (s * s))

    def sample(self, rng, size=None):
        return rng.exponential(1.0 / self.rate, size)

    def _tilted(self, alpha, rng, size):
        return rng.exponential(1.0 / (self.rate + alpha), size)

    def spec(self):
        return f"exponential({_fmt(self.rate)})"


@dataclass(frozen=True)
class ShiftedExponential(WeightDistribution):
    rate: float = 1.0
    shift: float = 0.0
    kind = "shifted_exponential"

    def __post_init__(self):
        if not self.rate > 0:
            raise InvalidParameter("exponential rate must be positive")

    @property
    def domain(self):
        return (-self.rate, INF)

    @property
    def support(self):
        return (self.shift, INF)

    def _psi(self, t):
        s = self.rate + t
        return (
            -t * self.shift + math.log(self.rate) - math.log(s),
            -self.shift - 1.0 / s,
            1.0 / (s * s),
        )

    def sample(self, rng, size=None):
        return self.shift + rng.exponential(1.0 / self.rate, size)

    def _tilted(self, alpha, rng, size):
        return self.shift + rng.exponential(1.0 / (self.rate + alpha), size)

    def spec(self):
        return f"shifted_exponential({_fmt(self.rate)},{_fmt(self.shift)})"


@dataclass(frozen=True)
class Gaussian(WeightDistribution):
    mu: float = 0.0
    var: float = 1.0
    kind = "gaussian"

    def __post_init__(self):
        if not self.var > 0:
            raise InvalidParameter("gaussian variance must be positive")

    @property
    def domain(self):
        return (-INF, INF)

    @property
    def support(self):
        return (-INF, INF)

    def _psi(self, t):
        return (-self.mu * t + 0.5 * self.var * t * t, -self.mu + self.var * t, self.var)

    def sample(self, rng, size=None):
        return rng.normal(self.mu, math.sqrt(self.var), size)

    def _tilted(self, alpha, rng, size):
        return rng.normal(self.mu - alpha * self.var, math.sqrt(self.var), size)

    def spec(self):
        return f"gaussian({_fmt(self.mu)},{_fmt(self.var)})"


# ln((1 - e^{-u}) / u) and its derivatives; series near u = 0 avoid cancellation.
def _unif_g(u):
    if abs(u) < 0.05:
        u2 = u * u
        return -0.5 * u + u2 / 24.0 - u2 * u2 / 2880.0 + u2 ** 3 / 181440.0
    a = abs(u)
    return max(-u, 0.0) + math.log(-math.expm1(-a)) - math.log(a)


def _unif_g1(u):
    if abs(u) < 0.05:
        return -0.5 + u / 12.0 - u ** 3 / 720.0 + u ** 5 / 30240.0
    if u > 700:
        return -1.0 / u
    return 1.0 / math.expm1(u) - 1.0 / u


def _unif_g2(u):
    if abs(u) < 0.05:
        u2 = u * u
        return 1.0 / 12.0 - u2 / 240.0 + u2 * u2 / 6048.0
    if abs(u) > 700:
        return 1.0 / (u * u)
    s = math.sinh(0.5 * u)
    return 1.0 / (u * u) - 1.0 / (4.0 * s * s)


@dataclass(frozen=True)
class Uniform(WeightDistribution):
    lo: float = 0.0
    hi: float = 1.0
    kind = "uniform"

    def __post_init__(self):
        if not self.hi > self.lo:
            raise InvalidParameter("uniform needs lo < hi")

    @property
    def domain(self):
        return (-INF, INF)

    @property
    def support(self):
        return (self.lo, self.hi)

    def _psi(self, t):
        width = self.hi - self.lo
        u = t * width
        return (
            -t * self.lo + _unif_g(u),
            -self.lo + width * _unif_g1(u),
            width * width * _unif_g2(u),
        )

    def sample(self, rng, size=None):
        return rng.uniform(self.lo, self.hi, size)

    def _tilted(self, alpha, rng, size):
        # inverse transform of the truncated exponential on [lo, hi]
        width = self.hi - self.lo
        u = rng.random(size)
        return self.lo - np.log1p(u * np.expm1(-alpha * width)) / alpha

    def spec(self):
        return f"uniform({_fmt(self.lo)},{_fmt(self.hi)})"


class CustomDistribution(WeightDistribution):
    """User-supplied law.

    ``psi_fn(t)`` must return the exact triple ``(psi, psi', psi'')`` on the
    open interval ``domain``. Tilting falls back to rejection sampling, which
    needs a finite lower (``alpha > 0``) or upper (``alpha < 0``) support end.
    """

    kind = "custom"

    def __init__(self, sampler: Callable, psi_fn: Callable, domain, support=(-INF, INF), name="custom"):
        self._sampler = sampler
        self._psi_fn = psi_fn
        self._domain = (float(domain[0]), float(domain[1]))
        self._support = (float(support[0]), float(support[1]))
        self.name = name

    @property
    def domain(self):
        return self._domain

    @property
    def support(self):
        return self._support

    def _psi(self, t):
        return tuple(float(v) for v in self._psi_fn(t))

    def sample(self, rng, size=None):
        return self._sampler(rng, size)

    def spec(self):
        return self.name


def rejection_tilt(dist: WeightDistribution, alpha: float, rng, size=None):
    """Tilted draws by rejection from the untilted sampler.

    Returns ``(samples, envelope)`` where ``envelope`` is the expected number of
    proposals per accepted draw.
    """
    lo, hi = dist.support
    edge = lo if alpha > 0 else hi
    if not math.isfinite(edge):
        raise InvalidParameter("rejection tilt needs a finite support end on the tilted side")
    envelope = math.exp(-alpha * edge - dist.psi(alpha).value)
    count = 1 if size is None else int(np.prod(size))
    out = np.empty(0)
    while out.size < count:
        need = count - out.size
        proposals = np.asarray(dist.sample(rng, int(need * envelope * 1.2) + 16), dtype=float)
        keep = rng.random(proposals.size) < np.exp(-alpha * (proposals - edge))
        out = np.concatenate([out, proposals[keep]])
    out = out[:count]
    if size is None:
        return float(out[0]), envelope
    return out.reshape(size), envelope


def mc_psi_check(dist: WeightDistribution, t: float, samples: int, rng) -> tuple[float, float]:
    """Monte Carlo estimate of ``E[exp(-tX)]`` with its standard error.

    Only a cross-check of the closed form; never used for solving.
    """
    x = np.asarray(dist.sample(rng, samples))
    v = np.exp(-t * x)
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(samples))


# thin functional aliases
def sample(dist: WeightDistribution, rng, size=None):
    return dist.sample(rng, size)


def psi(dist: WeightDistribution, t: float) -> PsiValue:
    return dist.psi(t)


def tilted_sample(dist: WeightDistribution, alpha: float, rng, size=None):
    return dist.tilted_sample(alpha, rng, size)


def arithmetic_span(dist: WeightDistribution) -> Optional[float]:
    return dist.arithmetic_span()


_NUM = r"[+-]?(?:\d+\.?\d*|\.\d+)"
_SPEC_RE = re.compile(rf"^\s*([a-z_]+)\s*\(\s*({_NUM})\s*(?:,\s*({_NUM})\s*)?\)\s*$")

_KINDS = {
    "exponential": (Exponential, 1),
    "gaussian": (Gaussian, 2),
    "uniform": (Uniform, 2),
    "shifted_exponential": (ShiftedExponential, 2),
}


def parse_distribution(text: str) -> WeightDistribution:
    """Parse ``kind(p1[,p2])``, e.g. ``gaussian(2.0,1.0)``.

    Case-insensitive; parameters are plain decimal numbers (no exponents).
    """
    m = _SPEC_RE.match(text.lower())
    if not m:
        raise InvalidParameter(f"cannot parse distribution spec {text!r}")
    kind, a, b = m.groups()
    if kind not in _KINDS:
        raise InvalidParameter(f"unknown distribution kind {kind!r}")
    cls, arity = _KINDS[kind]
    params = [float(a)] + ([float(b)] if b is not None else [])
    if len(params) != arity:
        raise InvalidParameter(f"{kind} takes {arity} parameter(s), got {len(params)}")
    return cls(*params)
