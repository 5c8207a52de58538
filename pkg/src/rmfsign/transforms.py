"""Sample-dependent functionals of f at finite truncation.

For a truncation X the transform is the exact integral

    F_X(t) = int_1^X S_x x^(-1-t) dx = sum_{n<X} S_n (n^-t - (n+1)^-t) / t,

evaluated step by step (S_x is constant on [n, n+1)), and summation by parts
gives F_X(t) = (D_X(t) - X^-t S_X) / t with D_X the truncated Dirichlet series
sum_{n<=X} f(n) n^(-1/2-t). The two sides are computed along independent
routes so that comparing them is a real check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .analytic import EPS, TGrid, prime_power_tail, r_weights
from .errors import ConfigurationError, DomainError, ResourceError
from .sampler import SignOracle, iter_value_blocks, prime_signs
from .sieve import SieveEngine, default_engine


@dataclass(frozen=True)
class TruncationSpec:
    """Truncation points: ``x_limit`` for sums over n, ``prime_limit`` for sums over p."""

    x_limit: int
    prime_limit: int

    def __post_init__(self):
        for name in ("x_limit", "prime_limit"):
            v = getattr(self, name)
            if int(v) != v or v < 2:
                raise ConfigurationError(f"{name} must be an integer >= 2, got {v}")
            object.__setattr__(self, name, int(v))

    def check(self, engine: SieveEngine) -> None:
        top = max(self.x_limit, self.prime_limit)
        if top > engine.max_n:
            raise ResourceError(f"truncation {top} exceeds sieve capacity {engine.max_n}")


def _check_t(t: float) -> float:
    t = float(t)
    if not t > 0.0:
        raise DomainError(f"t must be > 0, got {t}")
    return t


@dataclass
class TransformScan:
    """Outputs of one pass over n <= X for several values of t."""

    x_limit: int
    s_x: float
    dirichlet: dict[float, float]
    laplace: dict[float, float]

    def identity_rhs(self, t: float) -> float:
        return (self.dirichlet[t] - self.x_limit**-t * self.s_x) / t

    def identity_residual(self, t: float) -> float:
        lap = self.laplace[t]
        return abs(lap - self.identity_rhs(t)) / abs(lap)

    def truncation_indicator(self, t: float) -> float:
        """X^-t |S_X| / |F(t)|: share of the transform still carried past X."""
        return self.x_limit**-t * abs(self.s_x) / abs(self.laplace[t])


def transform_scan(
    oracle: SignOracle,
    ts,
    spec: TruncationSpec,
    engine: SieveEngine | None = None,
    workers: int = 1,
) -> TransformScan:
    """Compute S_X, D_X(t) and F_X(t) for every t in ``ts`` in one pass over f."""
    engine = engine or default_engine()
    spec.check(engine)
    ts = sorted({_check_t(t) for t in ts})
    x = spec.x_limit
    s_state = np.zeros(3)
    d_states = {t: np.zeros(3) for t in ts}
    lap_parts: dict[float, list[float]] = {t: [] for t in ts}
    for lo, vals in iter_value_blocks(oracle, x, engine=engine, workers=workers):
        partial, _ = K.compensated_prefix(vals, lo, 0.5, s_state)
        # unit steps [n, n+1) with n < X
        steps = min(len(vals), x - lo)
        m = np.arange(lo, lo + steps, dtype=np.float64)
        log_m, log_ratio = np.log(m), np.log1p(1.0 / m)
        for t in ts:
            K.compensated_prefix(vals, lo, 0.5 + t, d_states[t])
            if steps:
                # n^-t - (n+1)^-t without cancellation
                step = np.exp(-t * log_m) * -np.expm1(-t * log_ratio) / t
                lap_parts[t].append(K.compensated_sum(partial[:steps] * step))
    s_x = float(s_state[0] + s_state[1])
    dirichlet = {t: float(st[0] + st[1]) for t, st in d_states.items()}
    laplace = {t: math.fsum(parts) for t, parts in lap_parts.items()}
    return TransformScan(x, s_x, dirichlet, laplace)


def dirichlet_sum(
    oracle: SignOracle, t: float, spec: TruncationSpec, engine: SieveEngine | None = None, workers: int = 1
) -> float:
    """sum_{n<=X} f(n) n^(-1/2-t) with compensated summation."""
    t = _check_t(t)
    engine = engine or default_engine()
    spec.check(engine)
    state = np.zeros(3)
    for lo, vals in iter_value_blocks(oracle, spec.x_limit, engine=engine, workers=workers):
        K.compensated_prefix(vals, lo, 0.5 + t, state)
    return float(state[0] + state[1])


def laplace_transform(
    oracle: SignOracle, t: float, spec: TruncationSpec, engine: SieveEngine | None = None, workers: int = 1
) -> float:
    """int_1^X S_x x^(-1-t) dx, exact per unit step."""
    t = _check_t(t)
    return transform_scan(oracle, [t], spec, engine, workers).laplace[t]


def verify_identity(
    oracle: SignOracle, t: float, spec: TruncationSpec, engine: SieveEngine | None = None, workers: int = 1
) -> dict:
    """Compare F_X(t) with (D_X(t) - X^-t S_X)/t; returns one report row."""
    t = _check_t(t)
    scan = transform_scan(oracle, [t], spec, engine, workers)
    return {
        "t": t,
        "x_limit": spec.x_limit,
        "laplace": scan.laplace[t],
        "dirichlet": scan.dirichlet[t],
        "S_X": scan.s_x,
        "identity_rhs": scan.identity_rhs(t),
        "residual": scan.identity_residual(t),
    }


# --- Euler product -------------------------------------------------------------


def _prime_terms(oracle: SignOracle, t: float, prime_limit: int, engine: SieveEngine):
    primes = engine.primes_upto(prime_limit)
    signs = prime_signs(oracle, primes).astype(np.float64)
    mags = np.exp(-(0.5 + t) * np.log(primes.astype(np.float64)))
    return primes, signs, mags


def euler_product_log(
    oracle: SignOracle, t: float, spec: TruncationSpec, engine: SieveEngine | None = None
) -> float:
    """sum_{p<=P} -log(1 - f(p) p^(-1/2-t)); p^(-1/2-t) < 1 so no factor is singular."""
    t = _check_t(t)
    engine = engine or default_engine()
    spec.check(engine)
    _, signs, mags = _prime_terms(oracle, t, spec.prime_limit, engine)
    return math.fsum(-np.log1p(-signs * mags))


def euler_expansion_residue(
    oracle: SignOracle, t: float, spec: TruncationSpec, engine: SieveEngine | None = None
) -> dict:
    """Second-order expansion of the Euler log-sum and the cubic remainder bound.

    log-sum = sum f(p) p^-s + (1/2) sum p^-2s + residue with
    |residue| <= sum p^-3s / (3 (1 - 2^-s)), s = 1/2 + t.
    """
    t = _check_t(t)
    engine = engine or default_engine()
    spec.check(engine)
    _, signs, mags = _prime_terms(oracle, t, spec.prime_limit, engine)
    s = 0.5 + t
    log_sum = math.fsum(-np.log1p(-signs * mags))
    linear = math.fsum(signs * mags)
    quadratic = 0.5 * math.fsum(mags * mags)
    residue = log_sum - linear - quadratic
    bound = math.fsum(mags**3) / (3.0 * (1.0 - 2.0**-s))
    rounding = 8.0 * EPS * (abs(log_sum) + float(mags.sum()))
    return {
        "log_sum": log_sum,
        "linear": linear,
        "quadratic": quadratic,
        "residue": residue,
        "residue_bound": bound + rounding,
    }


def _prime_tail_upper(s: float, prime_limit: int, engine: SieveEngine) -> float:
    """Upper bound on sum_{p > P} p^-s for s > 1."""
    crude = prime_limit ** (1.0 - s) / (s - 1.0)
    if prime_limit < 599:
        return crude
    count = len(engine.primes_upto(prime_limit))
    tail = prime_power_tail(s, prime_limit, count)
    return min(crude, tail.value + tail.tail_bound)


def euler_vs_dirichlet(
    oracle: SignOracle, t: float, spec: TruncationSpec, engine: SieveEngine | None = None, workers: int = 1
) -> dict:
    """Truncated Euler product against truncated Dirichlet series.

    A bound on their difference exists only where both converge absolutely
    (1/2 + t > 1); otherwise ``bound`` is ``inf`` and the row is informative only.
    """
    t = _check_t(t)
    engine = engine or default_engine()
    log_sum = euler_product_log(oracle, t, spec, engine)
    product = math.exp(log_sum)
    dsum = dirichlet_sum(oracle, t, spec, engine, workers)
    s = 0.5 + t
    if s > 1.0:
        d_tail = spec.x_limit ** (1.0 - s) / (s - 1.0)
        p_tail = _prime_tail_upper(s, spec.prime_limit, engine)
        tau = p_tail / (1.0 - spec.prime_limit**-s)
        bound = product * math.expm1(tau) + d_tail + 8.0 * EPS * (product + abs(dsum))
    else:
        bound = math.inf
    return {
        "t": t,
        "prime_limit": spec.prime_limit,
        "x_limit": spec.x_limit,
        "log_product": log_sum,
        "product": product,
        "dirichlet": dsum,
        "difference": product - dsum,
        "bound": bound,
        "within_bound": bool(abs(product - dsum) <= bound) if math.isfinite(bound) else None,
    }


# --- prime statistic R(t) --------------------------------------------------------


def r_statistic(
    oracle: SignOracle, t: float, spec: TruncationSpec, engine: SieveEngine | None = None
) -> float:
    """R(t) = sum_{p<=P} f(p) (p^(-1/2-t) - p^(-1/2-2t))."""
    t = float(t)
    if not 0.0 < t < 0.5:
        raise DomainError(f"r_statistic needs 0 < t < 1/2, got {t}")
    engine = engine or default_engine()
    spec.check(engine)
    primes = engine.primes_upto(spec.prime_limit)
    return r_statistic_over(oracle, t, primes)


def r_statistic_over(oracle: SignOracle, t: float, primes: np.ndarray) -> float:
    """R(t) restricted to the given primes."""
    primes = np.ascontiguousarray(primes, dtype=np.int64)
    weights = r_weights(t, primes).reshape(-1, 1)
    keys = np.array([oracle.key], dtype=np.uint64)
    return float(K.signed_weight_sums(keys, primes, weights, oracle.mode_code)[0, 0])


def r_max_term(t: float, prime_limit: int, engine: SieveEngine | None = None) -> float:
    """max over p <= P of p^(-1/2-t) - p^(-1/2-2t)."""
    primes = (engine or default_engine()).primes_upto(prime_limit)
    return float(r_weights(t, primes).max())


# --- contrapositive diagnostic ------------------------------------------------------

TRUNCATION_LIMIT = 0.1


def f_ratio_scan(
    oracle: SignOracle,
    grid: TGrid,
    spec: TruncationSpec,
    engine: SieveEngine | None = None,
    workers: int = 1,
) -> list[dict]:
    """For each t: F(t), F(2t), whether F(t) > F(2t)/2, and truncation adequacy."""
    ts = list(grid)
    scan = transform_scan(oracle, ts + [2.0 * t for t in ts], spec, engine, workers)
    rows = []
    for t in ts:
        ft, f2t = scan.laplace[t], scan.laplace[2.0 * t]
        ind = scan.truncation_indicator(t)
        rows.append(
            {
                "t": t,
                "x_limit": spec.x_limit,
                "F_t": ft,
                "F_2t": f2t,
                "flag": bool(ft > 0.5 * f2t),
                "truncation_indicator": ind,
                "truncation_limited": bool(ind > TRUNCATION_LIMIT),
            }
        )
    return rows
