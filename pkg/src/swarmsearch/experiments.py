"""Batch orchestration: replicate batches, sigma optimization, baseline
normalization, parameter sweeps, and the supporting statistics.

Replicate seeds are derived deterministically from (base seed, instance
index, replicate index), so batches are reproducible and may run serially or
in parallel with identical output.  Aggregation is a fold in replicate-index
order.  Batches whose censoring rate exceeds CENSORING_LIMIT are rejected
(strict mode) or flagged invalid (sweeps); censored arms can never win a
sigma search.
"""

from __future__ import annotations

import dataclasses
import hashlib
import itertools
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import metrics as mt
from .engine import EventLog, SimConfig, run_simulation
from .geometry import derive_seed

CENSORING_LIMIT = 0.001  # max fraction of censored agents for a valid batch


class CensoringError(RuntimeError):
    """A batch exceeded the acceptable censoring rate."""

    def __init__(self, stats: "BatchStats"):
        self.stats = stats
        super().__init__(
            f"batch censoring rate {stats.censoring_rate:.5f} exceeds "
            f"{CENSORING_LIMIT} ({stats.censored_agents} of "
            f"{stats.total_agents} agents)")


@dataclass
class ReplicateResult:
    """Per-replicate scalars feeding the batch aggregate."""

    seed: int
    s_avg: float  # seconds; nan when the replicate is censored
    first_find: float  # seconds; nan when nothing was found
    sum_times: float  # per-agent searching-time sum (seconds), complete reps
    sum_sq_times: float
    censored: int
    f_count: int
    c_comp_star: float  # nan unless components were recorded
    c_prop: float  # nan unless derivable
    lock_transitions: int
    n_ticks: int


@dataclass
class BatchStats:
    """Aggregated statistics over the replicates of one instance."""

    config: SimConfig
    replicates: int
    base_seed: int
    instance_index: int
    s_avg_values: np.ndarray  # (replicates,) seconds, nan for censored reps
    first_find_values: np.ndarray
    f_count_values: np.ndarray
    c_comp_star_values: np.ndarray
    c_prop_values: np.ndarray
    n_ticks_values: np.ndarray
    censored_agents: int
    total_agents: int
    lock_transitions: int
    pooled_sum: float
    pooled_sum_sq: float
    pooled_count: int

    @property
    def complete_replicates(self) -> int:
        return int(np.sum(~np.isnan(self.s_avg_values)))

    @property
    def censoring_rate(self) -> float:
        return self.censored_agents / self.total_agents

    @property
    def valid(self) -> bool:
        return self.censoring_rate <= CENSORING_LIMIT

    @property
    def s_avg_mean(self) -> float:
        return float(np.nanmean(self.s_avg_values))

    @property
    def s_avg_std(self) -> float:
        vals = self.s_avg_values[~np.isnan(self.s_avg_values)]
        if len(vals) < 2:
            return math.nan
        return float(np.std(vals, ddof=1))

    @property
    def pooled_agent_std(self) -> float:
        """Std of searching time pooled over every agent of every complete
        replicate (the across-individuals variability)."""
        if self.pooled_count < 2:
            return math.nan
        mean = self.pooled_sum / self.pooled_count
        var = (self.pooled_sum_sq - self.pooled_count * mean * mean) / (
            self.pooled_count - 1)
        return math.sqrt(max(var, 0.0))

    @property
    def first_find_mean(self) -> float:
        return float(np.nanmean(self.first_find_values))

    @property
    def f_count_mean(self) -> float:
        return float(np.nanmean(self.f_count_values))

    @property
    def c_comp_star_mean(self) -> float:
        return float(np.nanmean(self.c_comp_star_values))

    @property
    def c_prop_mean(self) -> float:
        return float(np.nanmean(self.c_prop_values))

    @property
    def g_size_mean(self) -> float:
        c = self.c_comp_star_mean
        return self.config.n / c if c and not math.isnan(c) else math.nan

    def summary_row(self) -> dict:
        return {
            "replicates": self.replicates,
            "complete_replicates": self.complete_replicates,
            "s_avg_mean": self.s_avg_mean,
            "s_avg_std": self.s_avg_std,
            "pooled_agent_std": self.pooled_agent_std,
            "first_find_mean": self.first_find_mean,
            "f_count_mean": self.f_count_mean,
            "c_comp_star_mean": self.c_comp_star_mean,
            "c_prop_mean": self.c_prop_mean,
            "g_size_mean": self.g_size_mean,
            "censoring_rate": self.censoring_rate,
            "lock_transitions": self.lock_transitions,
        }


def _replicate_config(config: SimConfig, base_seed: int, instance_index: int,
                      rep: int) -> SimConfig:
    return config.replace(seed=derive_seed(base_seed, instance_index, rep))


def run_replicate(config: SimConfig) -> ReplicateResult:
    """One seeded replicate reduced to its aggregate scalars."""
    log = run_simulation(config)
    censored = len(log.censored_ids())
    c_f = config.c_f
    if config.targets_enabled:
        found = log.arrival_ticks[log.arrival_ticks >= 0].astype(np.float64)
        first = float(found.min()) / c_f if len(found) else math.nan
        if censored == 0:
            times = log.arrival_ticks.astype(np.float64) / c_f
            s_avg = float(times.mean())
            sum_t = float(times.sum())
            sum_sq = float(np.sum(times * times))
            f_count = mt.direct_find_count(log)
        else:
            s_avg = math.nan
            sum_t = 0.0
            sum_sq = 0.0
            f_count = 0
    else:
        first = math.nan
        s_avg = math.nan
        sum_t = 0.0
        sum_sq = 0.0
        f_count = 0
    c_star = math.nan
    c_prop = math.nan
    if log.component_counts is not None:
        c_star = mt.avg_components(log)
        if config.targets_enabled and censored == 0 and f_count > 0:
            c_prop = mt.convergence_proportion(c_star, f_count)
    return ReplicateResult(seed=config.seed, s_avg=s_avg, first_find=first,
                           sum_times=sum_t, sum_sq_times=sum_sq,
                           censored=censored, f_count=f_count,
                           c_comp_star=c_star, c_prop=c_prop,
                           lock_transitions=log.lock_transitions,
                           n_ticks=log.n_ticks)


def _worker(args) -> ReplicateResult:
    return run_replicate(args)


def run_batch(config: SimConfig, replicates: int, base_seed: int,
              instance_index: int = 0, jobs: int = 1,
              strict_censoring: bool = True,
              cache_dir: Optional[str] = None) -> BatchStats:
    """Run independent seeded replicates and aggregate their statistics.

    Replicate i runs with seed derive_seed(base_seed, instance_index, i);
    parallel execution (jobs > 1) changes nothing in the output.  With
    strict_censoring, a batch whose censoring rate exceeds CENSORING_LIMIT
    raises CensoringError (the offending stats ride along on the exception).
    """
    if replicates < 1:
        raise ValueError(f"replicates must be >= 1, got {replicates}")
    cached = _cache_load(config, replicates, base_seed, instance_index, cache_dir)
    if cached is not None:
        stats = cached
    else:
        configs = [_replicate_config(config, base_seed, instance_index, k)
                   for k in range(replicates)]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_worker, configs,
                                        chunksize=max(1, replicates // (jobs * 8))))
        else:
            results = [run_replicate(c) for c in configs]
        stats = _aggregate(config, replicates, base_seed, instance_index, results)
        _cache_store(stats, cache_dir)
    if strict_censoring and not stats.valid:
        raise CensoringError(stats)
    return stats


def _aggregate(config: SimConfig, replicates: int, base_seed: int,
               instance_index: int,
               results: Sequence[ReplicateResult]) -> BatchStats:
    return BatchStats(
        config=config,
        replicates=replicates,
        base_seed=base_seed,
        instance_index=instance_index,
        s_avg_values=np.array([r.s_avg for r in results]),
        first_find_values=np.array([r.first_find for r in results]),
        f_count_values=np.array([float(r.f_count) for r in results]),
        c_comp_star_values=np.array([r.c_comp_star for r in results]),
        c_prop_values=np.array([r.c_prop for r in results]),
        n_ticks_values=np.array([r.n_ticks for r in results], np.int64),
        censored_agents=sum(r.censored for r in results),
        total_agents=config.n * replicates,
        lock_transitions=sum(r.lock_transitions for r in results),
        pooled_sum=sum(r.sum_times for r in results),
        pooled_sum_sq=sum(r.sum_sq_times for r in results),
        pooled_count=sum(config.n for r in results if r.censored == 0),
    )


# ---------------------------------------------------------------------------
# Disk cache (optional): keyed by config, seeds, and the code fingerprint.
# ---------------------------------------------------------------------------

_FINGERPRINT: Optional[str] = None


def code_fingerprint() -> str:
    """Hash of the numerically load-bearing sources; salts the batch cache."""
    global _FINGERPRINT
    if _FINGERPRINT is None:
        from . import _kernels, behavior, engine, geometry, spatial
        h = hashlib.sha256()
        for mod in (_kernels, geometry, spatial, behavior, engine):
            with open(mod.__file__, "rb") as fh:
                h.update(fh.read())
        _FINGERPRINT = h.hexdigest()[:16]
    return _FINGERPRINT


def _batch_key(config: SimConfig, replicates: int, base_seed: int,
               instance_index: int) -> str:
    payload = json.dumps({
        "config": {k: v for k, v in dataclasses.asdict(config).items()
                   if k != "seed"},
        "replicates": replicates,
        "base_seed": base_seed,
        "instance_index": instance_index,
        "fingerprint": code_fingerprint(),
    }, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:24]


def _cache_load(config, replicates, base_seed, instance_index,
                cache_dir) -> Optional[BatchStats]:
    if not cache_dir:
        return None
    path = os.path.join(cache_dir,
                        _batch_key(config, replicates, base_seed,
                                   instance_index) + ".npz")
    if not os.path.exists(path):
        return None
    data = np.load(path)
    return BatchStats(
        config=config, replicates=replicates, base_seed=base_seed,
        instance_index=instance_index,
        s_avg_values=data["s_avg"], first_find_values=data["first_find"],
        f_count_values=data["f_count"], c_comp_star_values=data["c_comp"],
        c_prop_values=data["c_prop"], n_ticks_values=data["n_ticks"],
        censored_agents=int(data["censored"]),
        total_agents=int(data["total_agents"]),
        lock_transitions=int(data["lock_transitions"]),
        pooled_sum=float(data["pooled_sum"]),
        pooled_sum_sq=float(data["pooled_sum_sq"]),
        pooled_count=int(data["pooled_count"]))


def _cache_store(stats: BatchStats, cache_dir) -> None:
    if not cache_dir:
        return
    os.makedirs(cache_dir, exist_ok=True)
    key = _batch_key(stats.config, stats.replicates, stats.base_seed,
                     stats.instance_index)
    path = os.path.join(cache_dir, key + ".npz")
    tmp = os.path.join(cache_dir, key + f".{os.getpid()}.tmp.npz")
    np.savez(tmp,
             s_avg=stats.s_avg_values, first_find=stats.first_find_values,
             f_count=stats.f_count_values, c_comp=stats.c_comp_star_values,
             c_prop=stats.c_prop_values, n_ticks=stats.n_ticks_values,
             censored=stats.censored_agents, total_agents=stats.total_agents,
             lock_transitions=stats.lock_transitions,
             pooled_sum=stats.pooled_sum, pooled_sum_sq=stats.pooled_sum_sq,
             pooled_count=stats.pooled_count)
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# Sigma optimization and sweeps.
# ---------------------------------------------------------------------------

NONSOCIAL_SIGMA_GRID = tuple(list(range(0, 11)) + [15, 20, 30, 50])
SOCIAL_SIGMA_GRID = (3, 10, 20, 30, 50)


def sigma_sweep(config: SimConfig, sigma_grid: Sequence[float],
                replicates: int, base_seed: int, jobs: int = 1,
                cache_dir: Optional[str] = None,
                instance_base: int = 0) -> list[tuple[float, BatchStats]]:
    """Batch statistics for each sigma in the grid (ascending)."""
    out = []
    for k, sigma in enumerate(sorted(sigma_grid)):
        stats = run_batch(config.replace(sigma=float(sigma)), replicates,
                          base_seed, instance_index=instance_base + k,
                          jobs=jobs, strict_censoring=False,
                          cache_dir=cache_dir)
        out.append((float(sigma), stats))
    return out


def best_sigma(config: SimConfig, sigma_grid: Sequence[float],
               replicates: int, base_seed: int, jobs: int = 1,
               cache_dir: Optional[str] = None,
               instance_base: int = 0) -> tuple[float, float]:
    """Grid value minimizing mean searching time; ties break toward smaller
    sigma.  Arms whose censoring exceeds the limit cannot win."""
    table = sigma_sweep(config, sigma_grid, replicates, base_seed, jobs,
                        cache_dir, instance_base)
    best = None
    for sigma, stats in table:  # ascending, strict < keeps the smaller sigma
        if not stats.valid:
            continue
        if best is None or stats.s_avg_mean < best[1]:
            best = (sigma, stats.s_avg_mean)
    if best is None:
        raise CensoringError(table[0][1])
    return best


@dataclass
class SweepSpec:
    """A grid of instances around a base configuration."""

    base: SimConfig
    axes: dict[str, list]
    replicates: int
    base_seed: int

    def __post_init__(self) -> None:
        if self.replicates < 1:
            raise ValueError(f"replicates must be >= 1, got {self.replicates}")
        valid = {f.name for f in dataclasses.fields(SimConfig)}
        for key in self.axes:
            if key not in valid:
                raise ValueError(f"unknown sweep axis: {key!r}")

    def instances(self) -> list[dict]:
        """Cartesian product of the axes, honoring r1_frac <= r2_frac."""
        keys = list(self.axes)
        combos = []
        for values in itertools.product(*(self.axes[k] for k in keys)):
            params = dict(zip(keys, values))
            r1 = params.get("r1_frac", self.base.r1_frac)
            r2 = params.get("r2_frac", self.base.r2_frac)
            if r1 > r2:
                continue
            combos.append(params)
        return combos


@dataclass
class InstanceResult:
    params: dict
    stats: BatchStats
    normalized: Optional[float] = None


@dataclass
class SweepResult:
    """Per-instance aggregates for a sweep, in instance order."""

    spec: SweepSpec
    rows: list[InstanceResult]

    def by_params(self, **match) -> list[InstanceResult]:
        out = []
        for row in self.rows:
            if all(row.params.get(k) == v for k, v in match.items()):
                out.append(row)
        return out


def run_sweep(spec: SweepSpec, jobs: int = 1,
              cache_dir: Optional[str] = None) -> SweepResult:
    """Run every instance of the sweep; censored instances are kept, flagged
    through their stats rather than failing the whole sweep."""
    rows = []
    for idx, params in enumerate(spec.instances()):
        config = spec.base.replace(**params)
        stats = run_batch(config, spec.replicates, spec.base_seed,
                          instance_index=idx, jobs=jobs,
                          strict_censoring=False, cache_dir=cache_dir)
        rows.append(InstanceResult(params=params, stats=stats))
    return SweepResult(spec=spec, rows=rows)


def normalized_curve(per_rho: dict[float, BatchStats],
                     baseline: BatchStats) -> dict[float, float]:
    """Each instance's mean searching time divided by the baseline's.

    The baseline is the best non-social instance; per_rho holds, for each
    social weight, the best-over-sigma batch.  The baseline instance maps to
    exactly 1.0.
    """
    base = baseline.s_avg_mean
    if not (base > 0):
        raise ValueError("baseline has no usable mean searching time")
    return {rho: stats.s_avg_mean / base for rho, stats in sorted(per_rho.items())}


def improvement_factor(baseline: BatchStats, social: BatchStats) -> float:
    """Baseline mean searching time over the social instance's."""
    return baseline.s_avg_mean / social.s_avg_mean


# ---------------------------------------------------------------------------
# Statistics (closed-form, no external statistics dependency).
# ---------------------------------------------------------------------------


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (Lentz's method)."""
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 3e-16:
            break
    return h


def betainc_regularized(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_sf(t: float, df: float) -> float:
    """Survival function P(T > t) of Student's t with df degrees of freedom."""
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    p_two = betainc_regularized(df / 2.0, 0.5, df / (df + t * t))
    if t >= 0:
        return 0.5 * p_two
    return 1.0 - 0.5 * p_two


def pearson_r(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float]:
    """Sample Pearson correlation and two-sided p-value via the t transform."""
    x = np.asarray(xs, np.float64)
    y = np.asarray(ys, np.float64)
    if len(x) != len(y):
        raise ValueError("series must have equal length")
    n = len(x)
    if n < 3:
        raise ValueError(f"need at least 3 pairs, got {n}")
    xd = x - x.mean()
    yd = y - y.mean()
    sx = float(np.sqrt(np.sum(xd * xd)))
    sy = float(np.sqrt(np.sum(yd * yd)))
    if sx == 0.0 or sy == 0.0:
        raise ValueError("correlation is undefined for a constant series")
    r = float(np.sum(xd * yd)) / (sx * sy)
    r = max(-1.0, min(1.0, r))
    df = n - 2
    if 1.0 - r * r < 1e-15:
        return r, 0.0
    t = r * math.sqrt(df / (1.0 - r * r))
    return r, 2.0 * t_sf(abs(t), df)


def welch_t(sample_a: Sequence[float],
            sample_b: Sequence[float]) -> tuple[float, float]:
    """Welch's two-sample t statistic and two-sided p-value."""
    a = np.asarray(sample_a, np.float64)
    b = np.asarray(sample_b, np.float64)
    if len(a) < 2 or len(b) < 2:
        raise ValueError("both samples need at least 2 observations")
    va = float(np.var(a, ddof=1))
    vb = float(np.var(b, ddof=1))
    if va <= 0.0 and vb <= 0.0:
        raise ValueError("both samples are degenerate (zero variance)")
    na, nb = len(a), len(b)
    se2 = va / na + vb / nb
    t = (float(a.mean()) - float(b.mean())) / math.sqrt(se2)
    df = se2 * se2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
    return t, 2.0 * t_sf(abs(t), df)
