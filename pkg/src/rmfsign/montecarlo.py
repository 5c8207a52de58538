"""Ensemble experiments over independent seeds.

Sample ``i`` uses the seed ``sample_seed(base_seed, i)``. Samples are split
into fixed-size batches whose boundaries do not depend on the worker count;
batches run on a thread pool and are reassembled by index, so every
statistic is a pure function of the configuration.

Analytic comparisons use the variance and covariance of the model truncated
at the run's prime limit, not the t -> 0 limits: at desk-scale P the prime
tail is too large to ignore.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from . import _kernels as K
from .analytic import (
    LIMIT_VARIANCE,
    TGrid,
    leading_covariance_approx,
    r_covariance,
    r_weights,
    truncated_prime_power_sum,
)
from .census import sign_changes
from .errors import ConfigurationError
from .sampler import SignOracle, parse_seed, sample_seed
from .sieve import SieveEngine, default_engine
from .transforms import TruncationSpec

MIN_STAT_SAMPLES = 100
BATCH = 256
SIGMA_BAND = 3.0


@dataclass(frozen=True)
class EnsembleConfig:
    base_seed: int
    n_samples: int
    t_grid: TGrid
    spec: TruncationSpec
    x_checkpoints: tuple[int, ...] = ()
    workers: int = 1
    mode: str = "random"

    def __post_init__(self):
        object.__setattr__(self, "base_seed", parse_seed(self.base_seed))
        if int(self.n_samples) != self.n_samples or self.n_samples < 1:
            raise ConfigurationError(f"n_samples must be a positive integer, got {self.n_samples}")
        if self.workers < 1:
            raise ConfigurationError(f"workers must be >= 1, got {self.workers}")
        object.__setattr__(self, "x_checkpoints", tuple(sorted(int(x) for x in self.x_checkpoints)))
        if any(x < 1 for x in self.x_checkpoints):
            raise ConfigurationError("checkpoints must be >= 1")

    def oracle(self, index: int) -> SignOracle:
        if self.mode != "random":
            return SignOracle(0, self.mode)
        return SignOracle(sample_seed(self.base_seed, index), "random")

    def keys(self) -> np.ndarray:
        return np.array([self.oracle(i).key for i in range(self.n_samples)], dtype=np.uint64)

    def require_statistics(self) -> None:
        if self.n_samples < MIN_STAT_SAMPLES:
            raise ConfigurationError(
                f"statistical summaries need n_samples >= {MIN_STAT_SAMPLES}, got {self.n_samples}"
            )


def _mode_code(config: EnsembleConfig) -> int:
    return config.oracle(0).mode_code


def prime_sum_matrix(
    config: EnsembleConfig, weights: np.ndarray, engine: SieveEngine | None = None
) -> np.ndarray:
    """out[i, k] = sum_{p<=P} f_i(p) weights[p, k] for every sample i."""
    engine = engine or default_engine()
    primes = engine.primes_upto(config.spec.prime_limit)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    keys = config.keys()
    mode = _mode_code(config)
    batches = [keys[i : i + BATCH] for i in range(0, len(keys), BATCH)]

    def run(batch):
        return K.signed_weight_sums(batch, primes, weights, mode)

    if config.workers > 1 and len(batches) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            parts = list(pool.map(run, batches))
    else:
        parts = [run(b) for b in batches]
    return np.concatenate(parts, axis=0)


def ks_distance(samples: np.ndarray, sigma: float) -> float:
    """sup_x |F_n(x) - Phi(x / sigma)| for a centred normal reference."""
    x = np.sort(np.asarray(samples, dtype=np.float64))
    n = x.size
    cdf = ndtr(x / sigma)
    upper = np.arange(1, n + 1) / n - cdf
    lower = cdf - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))


def _skewness(x: np.ndarray) -> float:
    d = x - x.mean()
    m2 = float(np.mean(d * d))
    return float(np.mean(d**3)) / m2**1.5 if m2 > 0 else 0.0


@dataclass
class EnsembleStats:
    t_grid: TGrid
    prime_limit: int
    n_samples: int
    mean: np.ndarray
    variance: np.ndarray
    skewness: np.ndarray
    covariance: np.ndarray
    var_trunc: np.ndarray
    ks: np.ndarray
    tail_threshold: np.ndarray
    tail_frequency: np.ndarray
    chebyshev_bound: np.ndarray
    samples: np.ndarray = field(repr=False)
    tail_samples: np.ndarray = field(repr=False)

    def rows(self) -> list[dict]:
        out = []
        for k, t in enumerate(self.t_grid):
            out.append(
                {
                    "t": t,
                    "P": self.prime_limit,
                    "n_samples": self.n_samples,
                    "mean": float(self.mean[k]),
                    "var_empirical": float(self.variance[k]),
                    "var_analytic_trunc": float(self.var_trunc[k]),
                    "ks": float(self.ks[k]),
                    "tail_freq": float(self.tail_frequency[k]),
                    "chebyshev_bound": float(self.chebyshev_bound[k]),
                }
            )
        return out

    def to_dict(self) -> dict:
        return {
            "rows": self.rows(),
            "skewness": self.skewness.tolist(),
            "covariance": self.covariance.tolist(),
            "var_limit": LIMIT_VARIANCE,
        }


def chebyshev_bound(t: float, prime_limit: int, engine: SieveEngine | None = None) -> float:
    """Var / threshold^2 for the event sum f(p) p^(-1/2-t) < -log(1/t), truncated at P."""
    var = truncated_prime_power_sum(1.0 + 2.0 * t, prime_limit, engine).value
    return var / math.log(1.0 / t) ** 2


def ensemble_r(config: EnsembleConfig, engine: SieveEngine | None = None) -> EnsembleStats:
    """Sample R(t) and the plain prime sum for every t in the grid, then summarise."""
    config.require_statistics()
    engine = engine or default_engine()
    config.spec.check(engine)
    primes = engine.primes_upto(config.spec.prime_limit)
    ts = list(config.t_grid)
    lp = np.log(primes.astype(np.float64))
    cols = [r_weights(t, primes) for t in ts] + [np.exp(-(0.5 + t) * lp) for t in ts]
    weights = np.stack(cols, axis=1)
    sums = prime_sum_matrix(config, weights, engine)
    k = len(ts)
    r, plain = sums[:, :k], sums[:, k:]

    cov = np.atleast_2d(np.cov(r, rowvar=False, ddof=1))
    var_trunc = np.array([math.fsum(w * w) for w in cols[:k]])
    thresholds = np.array([-math.log(1.0 / t) for t in ts])
    return EnsembleStats(
        t_grid=config.t_grid,
        prime_limit=config.spec.prime_limit,
        n_samples=config.n_samples,
        mean=r.mean(axis=0),
        variance=np.diag(cov).copy(),
        skewness=np.array([_skewness(r[:, j]) for j in range(k)]),
        covariance=cov,
        var_trunc=var_trunc,
        ks=np.array([ks_distance(r[:, j], math.sqrt(var_trunc[j])) for j in range(k)]),
        tail_threshold=thresholds,
        tail_frequency=(plain < thresholds).mean(axis=0),
        chebyshev_bound=np.array([chebyshev_bound(t, config.spec.prime_limit, engine) for t in ts]),
        samples=r,
        tail_samples=plain,
    )


def decorrelation_check(
    config: EnsembleConfig, stats: EnsembleStats | None = None, engine: SieveEngine | None = None
) -> list[dict]:
    """Empirical covariance of R(t_i), R(t_{i+1}) against the truncated analytic value."""
    config.require_statistics()
    engine = engine or default_engine()
    if stats is None:
        stats = ensemble_r(config, engine)
    primes = engine.primes_upto(config.spec.prime_limit)
    ts = list(config.t_grid)
    rows = []
    for i in range(len(ts) - 1):
        t1, t2 = ts[i], ts[i + 1]
        x, y = stats.samples[:, i], stats.samples[:, i + 1]
        prod = (x - x.mean()) * (y - y.mean())
        se = float(prod.std(ddof=1) / math.sqrt(len(prod)))
        emp = float(stats.covariance[i, i + 1])
        trunc = math.fsum(r_weights(t1, primes) * r_weights(t2, primes))
        z = (emp - trunc) / se
        exact = r_covariance(t1, t2).value if max(t1, t2) <= 0.25 else math.nan
        rows.append(
            {
                "t1": t1,
                "t2": t2,
                "P": config.spec.prime_limit,
                "n_samples": config.n_samples,
                "cov_empirical": emp,
                "cov_analytic_trunc": trunc,
                "standard_error": se,
                "z": z,
                "within_band": bool(abs(z) <= SIGMA_BAND),
                "corr_empirical": emp / math.sqrt(stats.covariance[i, i] * stats.covariance[i + 1, i + 1]),
                "cov_exact": exact,
                "leading_approx": leading_covariance_approx(t1, t2),
            }
        )
    return rows


@dataclass
class TailResult:
    t: float
    threshold: float
    frequency: float
    chebyshev_bound: float
    band: float
    n_samples: int

    @property
    def within_bound(self) -> bool:
        return self.frequency <= self.chebyshev_bound + self.band


def tail_probability(config: EnsembleConfig, t: float, engine: SieveEngine | None = None) -> TailResult:
    """Frequency of sum_{p<=P} f(p) p^(-1/2-t) < -log(1/t) and its Chebyshev bound."""
    t = float(t)
    if not 0.0 < t < 1.0:
        raise ConfigurationError(f"tail_probability needs 0 < t < 1, got {t}")
    engine = engine or default_engine()
    config.spec.check(engine)
    primes = engine.primes_upto(config.spec.prime_limit)
    mags = np.exp(-(0.5 + t) * np.log(primes.astype(np.float64))).reshape(-1, 1)
    sums = prime_sum_matrix(config, mags, engine)[:, 0]
    threshold = -math.log(1.0 / t)
    freq = float((sums < threshold).mean())
    n = config.n_samples
    return TailResult(
        t=t,
        threshold=threshold,
        frequency=freq,
        chebyshev_bound=chebyshev_bound(t, config.spec.prime_limit, engine),
        band=SIGMA_BAND * math.sqrt(freq * (1.0 - freq) / n),
        n_samples=n,
    )


@dataclass
class CensusHistogram:
    checkpoints: list[int]
    counts: np.ndarray = field(repr=False)  # (n_samples, n_checkpoints)

    def rows(self) -> list[dict]:
        out = []
        n = self.counts.shape[0]
        for j, x in enumerate(self.checkpoints):
            c = self.counts[:, j]
            out.append(
                {
                    "checkpoint_x": x,
                    "n_samples": n,
                    "median": float(np.median(c)),
                    "mean": float(c.mean()),
                    "max": int(c.max()),
                    "frac_ge1": float((c >= 1).mean()),
                    "frac_ge2": float((c >= 2).mean()),
                    "frac_ge5": float((c >= 5).mean()),
                }
            )
        return out

    def histogram(self, j: int) -> dict[int, int]:
        values, freq = np.unique(self.counts[:, j], return_counts=True)
        return {int(v): int(f) for v, f in zip(values, freq)}

    def to_dict(self) -> dict:
        return {
            "rows": self.rows(),
            "histograms": {str(x): self.histogram(j) for j, x in enumerate(self.checkpoints)},
        }


def ensemble_census(config: EnsembleConfig, engine: SieveEngine | None = None) -> CensusHistogram:
    """Sign-change counts of S_x up to each checkpoint, for every sample."""
    if not config.x_checkpoints:
        raise ConfigurationError("ensemble_census needs at least one checkpoint")
    engine = engine or default_engine()
    cps = list(config.x_checkpoints)
    x_max = cps[-1]

    def run(i: int) -> list[int]:
        report = sign_changes(config.oracle(i), x_max, checkpoints=cps, engine=engine)
        return [row["crossings_so_far"] for row in report.checkpoints]

    idx = range(config.n_samples)
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            counts = list(pool.map(run, idx))
    else:
        counts = [run(i) for i in idx]
    return CensusHistogram(cps, np.array(counts, dtype=np.int64).reshape(config.n_samples, len(cps)))
