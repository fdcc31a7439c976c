"""Seeded Monte Carlo experiments on graph instances and their comparison with the limit laws."""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.special import ndtri

from . import path_search as ps
from .constants import ModelConstants
from .distributions import WeightDistribution, parse_distribution
from .errors import BudgetExceeded, ConfigError, FPPError, InvalidParameter, InvalidWindow
from .graph import NeighborhoodForest, default_radius, explore, generate
from .renewal import IntensityMeasure, Window, hop_cap as default_hop_cap, hop_cutoff, intensity_mass

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def trial_seed(master_seed: int, trial_index: int) -> int:
    """Per-trial seed; depends only on (master_seed, trial_index)."""
    return splitmix64(splitmix64(master_seed & MASK64) ^ (trial_index & MASK64))


# ---------------------------------------------------------------- config


@dataclass
class ExperimentConfig:
    n: int
    lam: float
    dist: str
    window: Window
    trials: int = 1
    master_seed: int = 0
    radius_override: Optional[int] = None
    hop_cap_override: Optional[int] = None
    output: Optional[str] = None
    format: str = "csv"
    plot_spec: bool = False
    workers: Optional[int] = None
    budget: int = ps.DEFAULT_BUDGET

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if not math.isfinite(self.window.x_hi):
            raise ConfigError("window x_hi must be finite")
        if self.n < 3:
            raise ConfigError("n must be at least 3")
        if self.format not in ("csv", "jsonl"):
            raise ConfigError("format must be csv or jsonl")
        try:
            parse_distribution(self.dist)
        except InvalidParameter as exc:
            raise ConfigError(str(exc)) from None

    @property
    def distribution(self) -> WeightDistribution:
        return parse_distribution(self.dist)

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        """Flat ``key = value`` lines; ``#`` starts a comment."""
        raw = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            raw[key.lower()] = value
        return cls.from_mapping(raw)

    @classmethod
    def from_mapping(cls, raw: dict) -> "ExperimentConfig":
        known = {
            "n", "lambda", "dist", "x_hi", "x_lo", "h_lo", "h_hi", "trials", "master_seed",
            "radius", "hop_cap", "output", "format", "plot_spec", "workers", "budget",
        }
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        for key in ("n", "lambda", "dist", "x_hi"):
            if key not in raw:
                raise ConfigError(f"missing config key {key!r}")

        def num(key, conv, default=None):
            if key not in raw or raw[key] in ("", "none"):
                return default
            try:
                return conv(raw[key])
            except ValueError:
                raise ConfigError(f"bad value for {key}: {raw[key]!r}") from None

        try:
            window = Window(
                x_hi=num("x_hi", float),
                x_lo=num("x_lo", float, -math.inf),
                h_lo=num("h_lo", float, -math.inf),
                h_hi=num("h_hi", float, math.inf),
            )
        except InvalidWindow as exc:
            raise ConfigError(str(exc)) from None
        return cls(
            n=num("n", int),
            lam=num("lambda", float),
            dist=raw["dist"],
            window=window,
            trials=num("trials", int, 1),
            master_seed=num("master_seed", int, 0),
            radius_override=num("radius", int),
            hop_cap_override=num("hop_cap", int),
            output=raw.get("output") or None,
            format=raw.get("format", "csv"),
            plot_spec=raw.get("plot_spec", "false").lower() in ("1", "true", "yes"),
            workers=num("workers", int),
            budget=num("budget", int, ps.DEFAULT_BUDGET),
        )

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_text(fh.read())


# ---------------------------------------------------------------- records


@dataclass
class TrialRecord:
    trial_index: int
    seed: int
    g1: str
    g2: str
    g3: str
    g_all: bool
    W_r: float
    Wt_r: float
    count_in_window: int
    X_star: Optional[float]
    H_star: Optional[float]
    conditional_intensity_approx: float
    nodes_expanded: int
    budget_exceeded: bool = False
    unverified_tail: bool = False
    # wall-clock time is informative only; it never enters comparisons or
    # (by default) emitted files, which keeps outputs bit-reproducible
    runtime_ms: float = field(default=0.0, compare=False)


RECORD_FIELDS = [f.name for f in fields(TrialRecord)]
EMIT_FIELDS = [f for f in RECORD_FIELDS if f != "runtime_ms"]
_INT_FIELDS = {"trial_index", "seed", "count_in_window", "nodes_expanded"}
_BOOL_FIELDS = {"g_all", "budget_exceeded", "unverified_tail"}
_STR_FIELDS = {"g1", "g2", "g3"}


def run_trial(cfg: ExperimentConfig, consts: ModelConstants, dist: WeightDistribution, index: int) -> TrialRecord:
    t0 = time.perf_counter()
    seed = trial_seed(cfg.master_seed, index)
    n = cfg.n
    ln_n = math.log(n)
    g = generate(n, cfg.lam, dist, seed)
    radius = cfg.radius_override or default_radius(n)
    cap = cfg.hop_cap_override or default_hop_cap(consts, ln_n)
    forest = explore(g, radius, consts)
    cont = ps.continuation_bounds(g)
    threshold = ln_n / consts.alpha + cfg.window.x_hi
    bounds = ps.pruning_bounds(g, cap, threshold, cont)

    exceeded = False
    count = 0
    nodes = 0
    x_star = h_star = None
    try:
        proc = ps.enumerate_extremal(g, consts, cfg.window, cap, cfg.budget, bounds=bounds)
        count = proc.count
        nodes = proc.nodes_expanded
        if proc.min_pair is not None:
            x_star, h_star = proc.min_pair
        else:
            best = ps.minimum_path(
                g, consts, cap, cfg.budget - nodes, start_threshold=threshold + 1.0, continuation=cont
            )
            if best is not None:
                x_star, h_star = ps.rescale(consts, ln_n, best[0], best[1])
                nodes += best[3]
    except BudgetExceeded as exc:
        exceeded = True
        nodes = exc.nodes
        count = 0
        x_star = h_star = None

    report = ps.check_good_events(g, consts, forest, cap, continuation=cont)
    tail_ok = ps.tail_certified(g, cap, threshold, bounds)
    lam_r = intensity_mass(IntensityMeasure(consts), cfg.window)
    return TrialRecord(
        trial_index=index,
        seed=seed,
        g1=report.g1,
        g2=report.g2,
        g3=report.g3,
        g_all=report.g_all,
        W_r=forest.W_r,
        Wt_r=forest.Wt_r,
        count_in_window=count,
        X_star=x_star,
        H_star=h_star,
        conditional_intensity_approx=forest.W_r * forest.Wt_r * lam_r,
        nodes_expanded=nodes,
        budget_exceeded=exceeded,
        unverified_tail=not tail_ok,
        runtime_ms=1000.0 * (time.perf_counter() - t0),
    )


def _run_chunk(args):
    cfg, indices = args
    dist = cfg.distribution
    consts = ModelConstants.from_distribution(dist, cfg.lam)
    return [run_trial(cfg, consts, dist, i) for i in indices]


def run_trials(cfg: ExperimentConfig, workers: Optional[int] = None, indices: Optional[Sequence[int]] = None) -> list:
    """All trials of ``cfg``, ordered by trial index.

    Each trial draws only from its own seed, so the result is the same for
    any worker count and any execution order.
    """
    idx = list(range(cfg.trials)) if indices is None else list(indices)
    w = workers or cfg.workers or os.cpu_count() or 1
    w = max(1, min(w, len(idx)))
    if w == 1:
        records = _run_chunk((cfg, idx))
    else:
        size = max(1, math.ceil(len(idx) / (4 * w)))
        chunks = [(cfg, idx[i:i + size]) for i in range(0, len(idx), size)]
        with ProcessPoolExecutor(max_workers=w) as pool:
            records = [r for part in pool.map(_run_chunk, chunks) for r in part]
    records.sort(key=lambda r: r.trial_index)
    return records


# ---------------------------------------------------------------- intensity


@dataclass
class IntensityResult:
    value: float
    g1_failed: bool


def _walk_sum(consts, dist, ln_n, window, ys, reps, rng):
    """``(1/n) sum_l lam^l P(S_l in x-range shifted by -y)`` for each y, over
    the hop range of the window, from shared tilted trajectories."""
    alpha = consts.alpha
    k_hi = hop_cutoff(consts, ln_n, window.h_hi)
    k_lo = 1 if window.h_lo == -math.inf else max(1, hop_cutoff(consts, ln_n, window.h_lo))
    if k_hi < 2:
        return np.zeros(len(ys))
    steps = dist.tilted_sample(alpha, rng, (reps, k_hi))
    paths = np.cumsum(steps, axis=1)[:, max(k_lo, 1):]  # l = k_lo + 1 .. k_hi, and l >= 2
    L = ln_n / alpha
    out = np.empty(len(ys))
    for i, y in enumerate(ys):
        rel = paths - (L + window.x_hi - y)
        val = np.where(rel <= 0, np.exp(alpha * (paths - L)), 0.0)
        if window.x_lo != -math.inf:
            val = np.where(paths - (L + window.x_lo - y) <= 0, 0.0, val)
        out[i] = val.sum(axis=1).mean()
    return out


def conditional_intensity(
    forest: NeighborhoodForest,
    consts: ModelConstants,
    window: Window,
    mode: str = "approx",
    mc_reps: int = 2000,
    rng: Optional[np.random.Generator] = None,
    dist: Optional[WeightDistribution] = None,
    n: Optional[int] = None,
) -> IntensityResult:
    """Mean number of window paths given the explored neighbourhoods.

    ``approx`` is ``W_r Wt_r Lambda(window)``. ``mc`` sums, over boundary
    pairs (u, v) with ``y = X([1,u]) + X([v,n])``, the hop-restricted walk
    renewal sum ``(1/n) sum_l lam^l P(S_l <= ln(n)/alpha + x - y)``
    estimated on tilted trajectories shared by all pairs.
    """
    if not forest.g1_holds:
        return IntensityResult(0.0, True)
    if mode == "approx":
        return IntensityResult(forest.W_r * forest.Wt_r * intensity_mass(IntensityMeasure(consts), window), False)
    if mode != "mc":
        raise InvalidParameter("mode must be 'approx' or 'mc'")
    if dist is None or n is None or rng is None:
        raise InvalidParameter("mc mode needs dist, n and rng")
    ys = [a + b for _, a in forest.boundary_1 for _, b in forest.boundary_n]
    if not ys:
        return IntensityResult(0.0, False)
    vals = _walk_sum(consts, dist, math.log(n), window, ys, mc_reps, rng)
    return IntensityResult(float(vals.sum()), False)


# ---------------------------------------------------------------- comparisons


def gated_counts(records: Sequence[TrialRecord], unverified: str = "drop") -> np.ndarray:
    """``1{G} * count`` per usable record.

    Budget-exceeded trials are always dropped. ``unverified`` decides how a
    trial whose only non-holding verdicts are ``unverified`` is treated:
    ``"drop"`` removes it, ``"holds"`` counts it as if all events held.
    """
    out = []
    for r in records:
        if r.budget_exceeded:
            continue
        verdicts = (r.g1, r.g2, r.g3)
        if ps.VIOLATED in verdicts:
            out.append(0)
            continue
        if ps.UNVERIFIED in verdicts:
            if unverified == "drop":
                continue
            if unverified != "holds":
                raise InvalidParameter("unverified must be 'drop' or 'holds'")
        out.append(r.count_in_window)
    return np.asarray(out, dtype=np.int64)


def _pmf_values(limit_pmf: Union[Callable, Sequence], K: int) -> np.ndarray:
    if callable(limit_pmf):
        return np.array([limit_pmf(k) for k in range(K + 1)], dtype=float)
    arr = np.zeros(K + 1)
    src = np.asarray(limit_pmf, dtype=float)[: K + 1]
    arr[: src.size] = src
    return arr


def tv_counts(counts: np.ndarray, limit_pmf, K: Optional[int] = None) -> float:
    counts = np.asarray(counts, dtype=np.int64)
    if K is None:
        K = int(counts.max()) + 5 if counts.size else 5
    emp = np.bincount(counts, minlength=K + 1)[: K + 1] / max(counts.size, 1)
    return 0.5 * float(np.abs(emp - _pmf_values(limit_pmf, K)).sum())


def compare_counts(records: Sequence[TrialRecord], limit_pmf, unverified: str = "drop") -> float:
    """TV distance on {0..K} between gated counts and the limit pmf, K = max + 5."""
    if len(records) < 100:
        raise InvalidParameter("need at least 100 records")
    return tv_counts(gated_counts(records, unverified), limit_pmf)


KS_C = {0.10: 1.224, 0.05: 1.358, 0.01: 1.628, 0.001: 1.949}


def ks_critical(level: float, n1: int, n2: Optional[int] = None) -> float:
    c = KS_C[level]
    if n2 is None:
        return c / math.sqrt(n1)
    return c * math.sqrt((n1 + n2) / (n1 * n2))


def ks_statistic(sample_a, cdf_or_sample_b) -> float:
    """Exact sup distance between the empirical cdf of ``sample_a`` and a cdf
    (callable) or the empirical cdf of a second sample."""
    a = np.sort(np.asarray(sample_a, dtype=float))
    if a.size == 0:
        raise InvalidParameter("empty sample")
    if a.size < 20:
        raise InvalidParameter("need at least 20 observations")
    n = a.size
    if callable(cdf_or_sample_b):
        F = np.asarray([cdf_or_sample_b(x) for x in a], dtype=float)
        i = np.arange(1, n + 1)
        return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))
    b = np.sort(np.asarray(cdf_or_sample_b, dtype=float))
    if b.size == 0:
        raise InvalidParameter("empty sample")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / n
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


# ---------------------------------------------------------------- output


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def _parse_value(name: str, text: str):
    if text == "" or text == "null":
        return None
    if name in _INT_FIELDS:
        return int(text)
    if name in _BOOL_FIELDS:
        return text == "true"
    if name in _STR_FIELDS:
        return text
    return float(text)


def _json_value(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, str):
        return json.dumps(v)
    return _fmt(v)


def format_records(records: Sequence[TrialRecord], fmt: str = "csv", include_runtime: bool = False) -> str:
    names = RECORD_FIELDS if include_runtime else EMIT_FIELDS
    lines = []
    if fmt == "csv":
        lines.append(",".join(names))
        for r in records:
            lines.append(",".join(_fmt(getattr(r, k)) for k in names))
    elif fmt == "jsonl":
        for r in records:
            body = ", ".join(f"{json.dumps(k)}: {_json_value(getattr(r, k))}" for k in names)
            lines.append("{" + body + "}")
    else:
        raise InvalidParameter("format must be csv or jsonl")
    return "\n".join(lines) + "\n"


def parse_records(text: str, fmt: str = "csv") -> list:
    out = []
    if fmt == "csv":
        rows = text.splitlines()
        if not rows:
            return out
        names = rows[0].split(",")
        for row in rows[1:]:
            if not row:
                continue
            vals = row.split(",")
            out.append(TrialRecord(**{k: _parse_value(k, v) for k, v in zip(names, vals)}))
    elif fmt == "jsonl":
        for row in text.splitlines():
            if not row.strip():
                continue
            d = json.loads(row)
            out.append(TrialRecord(**{k: (_parse_value(k, _fmt(v)) if v is not None else None) for k, v in d.items()}))
    else:
        raise InvalidParameter("format must be csv or jsonl")
    return out


def load_records(path, fmt: Optional[str] = None) -> list:
    fmt = fmt or ("jsonl" if str(path).endswith(".jsonl") else "csv")
    with open(path) as fh:
        return parse_records(fh.read(), fmt)


def plot_data(records: Sequence[TrialRecord], x_limit_cdf: Optional[Callable] = None) -> dict:
    """Columnar data for a count histogram, the X* cdf and an H* QQ plot."""
    counts = gated_counts(records, "holds")
    hist = np.bincount(counts) if counts.size else np.zeros(1, dtype=np.int64)
    xs = np.sort([r.X_star for r in records if r.X_star is not None])
    hs = np.sort([r.H_star for r in records if r.H_star is not None])
    q = ndtri((np.arange(1, hs.size + 1) - 0.5) / hs.size) if hs.size else np.zeros(0)
    spec = {
        "count_histogram": {"x": list(range(hist.size)), "y": hist.tolist(),
                            "x_label": "gated count in window", "y_label": "trials"},
        "x_star_cdf": {"x": xs.tolist(), "empirical": ((np.arange(xs.size) + 1) / max(xs.size, 1)).tolist(),
                       "x_label": "rescaled minimal weight", "y_label": "cdf"},
        "h_star_qq": {"theoretical": q.tolist(), "sample": hs.tolist(),
                      "x_label": "standard normal quantile", "y_label": "rescaled hopcount"},
    }
    if x_limit_cdf is not None:
        spec["x_star_cdf"]["limit"] = [float(x_limit_cdf(x)) for x in xs]
    return spec


def emit_outputs(
    records: Sequence[TrialRecord],
    path,
    fmt: str = "csv",
    plot_spec: bool = False,
    include_runtime: bool = False,
    x_limit_cdf: Optional[Callable] = None,
) -> list:
    """Write the records (and optionally a ``.plot.json`` companion); returns written paths."""
    text = format_records(records, fmt, include_runtime)
    written = []
    try:
        with open(path, "w") as fh:
            fh.write(text)
        written.append(str(path))
        if plot_spec:
            ppath = f"{path}.plot.json"
            with open(ppath, "w") as fh:
                json.dump(plot_data(records, x_limit_cdf), fh, indent=1, sort_keys=True)
                fh.write("\n")
            written.append(ppath)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {exc.filename or path}: {exc.strerror}") from exc
    return written


def read_wpairs(path) -> list:
    pairs = []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                a, b = line.split()[:2]
                pairs.append((float(a), float(b)))
    return pairs


def write_wpairs(pairs, path) -> None:
    with open(path, "w") as fh:
        for a, b in pairs:
            fh.write(f"{a:.17g} {b:.17g}\n")


def graph_w_pairs(records: Sequence[TrialRecord]) -> list:
    """Graph-measured ``(W_r, Wt_r)`` pairs, an alternative to tree-sampled pairs."""
    return [(r.W_r, r.Wt_r) for r in records if not r.budget_exceeded]


def reference_pmf(consts: ModelConstants, window: Window, w_pairs: Sequence, K: int) -> np.ndarray:
    """Mixed-Poisson pmf on {0..K} averaged over the supplied (W, W~) pairs."""
    from .brw_cox import mixed_poisson_pmf

    im = IntensityMeasure(consts)
    return np.array([mixed_poisson_pmf(im, window, w_pairs, k) for k in range(K + 1)])


def budget_failure_rate(records: Sequence[TrialRecord]) -> float:
    if not records:
        return 0.0
    return sum(r.budget_exceeded for r in records) / len(records)


__all__ = [
    "ExperimentConfig", "TrialRecord", "run_trials", "run_trial", "conditional_intensity",
    "compare_counts", "gated_counts", "ks_statistic", "ks_critical", "emit_outputs",
    "parse_records", "format_records", "trial_seed", "FPPError",
]
