"""Deterministic analytic quantities with explicit error bounds.

Prime sums sum_p p^-s are never summed directly here for small t: the
Moebius / log-zeta expansion of the prime zeta function costs microseconds at
any s > 1, whereas direct summation would need primes up to about e^(1/t).
Direct truncated sums (at a run's prime limit) are provided separately for
comparisons against Monte Carlo estimates.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.special import exp1

from .errors import ConfigurationError, DomainError
from .sieve import SieveEngine, default_engine

EPS = 2.0**-52
S_MIN = 1.0 + 1e-6


@dataclass(frozen=True)
class AnalyticValue:
    """A real value with an absolute error bound."""

    value: float
    tail_bound: float

    def __post_init__(self):
        if not (math.isfinite(self.tail_bound) and self.tail_bound >= 0.0):
            raise ValueError(f"tail_bound must be finite and >= 0, got {self.tail_bound}")

    def __float__(self) -> float:
        return self.value

    def contains(self, x: float, extra: float = 0.0) -> bool:
        return abs(self.value - x) <= self.tail_bound + extra


# --- Euler-Maclaurin zeta ---------------------------------------------------


@lru_cache(maxsize=None)
def _bernoulli_even(count: int) -> tuple[Fraction, ...]:
    """B_2, B_4, ..., B_{2*count} (Akiyama-Tanigawa)."""
    top = 2 * count
    a = [Fraction(0)] * (top + 1)
    bern = []
    for m in range(top + 1):
        a[m] = Fraction(1, m + 1)
        for j in range(m, 0, -1):
            a[j - 1] = j * (a[j - 1] - a[j])
        bern.append(a[0])
    return tuple(bern[2 * k] for k in range(1, count + 1))


@lru_cache(maxsize=None)
def _em_coefficients(count: int) -> tuple[float, ...]:
    """B_{2k} / (2k)! as floats, k = 1..count."""
    return tuple(float(b / math.factorial(2 * k)) for k, b in enumerate(_bernoulli_even(count), start=1))


def _zeta_minus_one(s: float, n_direct: int, n_terms: int) -> tuple[float, float]:
    """zeta(s) - 1 with Euler-Maclaurin at cutoff ``n_direct`` and ``n_terms`` corrections.

    For real s > 1 the remainder is bounded by the first omitted correction.
    """
    n = float(n_direct)
    head = math.fsum(k**-s for k in range(2, n_direct))
    n_pow = n**-s
    parts = [head, n * n_pow / (s - 1.0), 0.5 * n_pow]
    coeffs = _em_coefficients(n_terms + 1)
    rising = s  # s (s+1) ... (s + 2k - 2)
    power = n_pow / n  # n^(-s-1)
    last = 0.0
    for k in range(1, n_terms + 2):
        term = coeffs[k - 1] * rising * power
        if k <= n_terms:
            parts.append(term)
        else:
            last = abs(term)
        rising *= (s + 2 * k - 1) * (s + 2 * k)
        power /= n * n
    value = math.fsum(parts)
    # accumulated floating error: a few ulps of each of the larger parts
    rounding = 4.0 * EPS * (abs(head) + abs(parts[1]) + abs(value)) + 2.0 * n_direct * EPS * abs(head) * 1e-3
    return value, last + rounding


EM_CUTOFF = 32
EM_TERMS = 12


def zeta(s: float) -> AnalyticValue:
    """Riemann zeta at real s > 1 via Euler-Maclaurin summation."""
    s = float(s)
    if not s >= S_MIN:
        raise DomainError(f"zeta needs s > 1 + 1e-6, got {s}")
    zm1, err = _zeta_minus_one(s, EM_CUTOFF, EM_TERMS)
    return AnalyticValue(1.0 + zm1, err + EPS * (1.0 + zm1))


def zeta_minus_one(s: float) -> AnalyticValue:
    """zeta(s) - 1, accurate in relative terms even for large s."""
    s = float(s)
    if not s >= S_MIN:
        raise DomainError(f"zeta needs s > 1 + 1e-6, got {s}")
    zm1, err = _zeta_minus_one(s, EM_CUTOFF, EM_TERMS)
    return AnalyticValue(zm1, err)


# --- prime zeta -------------------------------------------------------------


@lru_cache(maxsize=None)
def mobius(k: int) -> int:
    if k < 1:
        raise ValueError(k)
    result = 1
    m = k
    d = 2
    while d * d <= m:
        if m % d == 0:
            m //= d
            if m % d == 0:
                return 0
            result = -result
        d += 1
    if m > 1:
        result = -result
    return result


PRIME_ZETA_CUTOFF = 1e-15


def _log_zeta_series(s: float, k_start: int) -> AnalyticValue:
    """sum_{k >= k_start} mu(k)/k log zeta(k s), stopped once |log zeta(ks)|/k < 1e-15."""
    terms = []
    err = 0.0
    k = k_start
    while True:
        zm1 = zeta_minus_one(k * s)
        size = math.log1p(zm1.value) / k
        mu = mobius(k)
        if mu:
            terms.append(mu * size)
            # |d log(1+x)| <= dx / (1+x)
            err += zm1.tail_bound / (1.0 + zm1.value) / k + EPS * abs(size)
        if abs(size) < PRIME_ZETA_CUTOFF:
            break
        k += 1
    # remainder: log zeta(js) <= zeta(js) - 1 <= 2^(-js) (1 + 2/(js - 1))
    ks = (k + 1) * s
    remainder = 2.0**-ks * (1.0 + 2.0 / (ks - 1.0)) / (k + 1) / (1.0 - 2.0**-s)
    return AnalyticValue(math.fsum(terms), err + remainder)


def prime_zeta(s: float) -> AnalyticValue:
    """P(s) = sum_p p^-s = sum_{k>=1} mu(k)/k log zeta(k s), for real s > 1."""
    s = float(s)
    if not s >= S_MIN:
        raise DomainError(f"prime_zeta needs s > 1 + 1e-6, got {s}")
    return _log_zeta_series(s, 1)


def mertens_constant() -> AnalyticValue:
    """c0 = lim_{t->0} (P(1+t) - log(1/t)) = sum_{k>=2} mu(k)/k log zeta(k)."""
    return _log_zeta_series(1.0, 2)


def mertens_deviation(t: float) -> AnalyticValue:
    """P(1+t) - log(1/t), which tends to c0 as t -> 0."""
    t = float(t)
    if not 0.0 < t < 0.5:
        raise DomainError(f"mertens_deviation needs 0 < t < 1/2, got {t}")
    p = prime_zeta(1.0 + t)
    lg = math.log(1.0 / t)
    return AnalyticValue(p.value - lg, p.tail_bound + EPS * (abs(p.value) + lg))


# --- variance and covariance of R(t) ----------------------------------------


def r_covariance(t1: float, t2: float) -> AnalyticValue:
    """sum_p (p^(-1/2-t1) - p^(-1/2-2t1)) (p^(-1/2-t2) - p^(-1/2-2t2)) over all primes."""
    t1, t2 = float(t1), float(t2)
    for t in (t1, t2):
        if not 0.0 < t <= 0.25:
            raise DomainError(f"r_covariance needs t in (0, 1/4], got {t}")
    # symmetric in (t1, t2) bit for bit: each argument is a commutative sum
    a = prime_zeta(1.0 + (t1 + t2))
    b = prime_zeta(1.0 + (t1 + 2.0 * t2))
    c = prime_zeta(1.0 + (2.0 * t1 + t2))
    d = prime_zeta(1.0 + (2.0 * t1 + 2.0 * t2))
    value = (a.value + d.value) - (b.value + c.value)
    bound = a.tail_bound + b.tail_bound + c.tail_bound + d.tail_bound
    bound += 4.0 * EPS * (abs(a.value) + abs(b.value) + abs(c.value) + abs(d.value))
    return AnalyticValue(value, bound)


def r_variance(t: float) -> AnalyticValue:
    """P(1+2t) - 2 P(1+3t) + P(1+4t); tends to log(9/8) as t -> 0."""
    t = float(t)
    if not 0.0 < t <= 0.25:
        raise DomainError(f"r_variance needs 0 < t <= 1/4, got {t}")
    return r_covariance(t, t)


def leading_variance_approx(t: float) -> float:
    """log(1/2t) + log(1/4t) - 2 log(1/3t), the leading-order variance."""
    return math.log(1.0 / (2.0 * t)) + math.log(1.0 / (4.0 * t)) - 2.0 * math.log(1.0 / (3.0 * t))


def leading_covariance_approx(t1: float, t2: float) -> float:
    """Leading-order covariance of R(t1), R(t2) for t2 < t1."""
    return math.log((t1 + 2.0 * t2) / (t1 + t2)) + math.log((2.0 * t1 + t2) / (2.0 * t1 + 2.0 * t2))


LIMIT_VARIANCE = math.log(9.0 / 8.0)


# --- t grids -----------------------------------------------------------------


def t_sequence(i: int) -> float:
    """t_i = 2^(-2^i)."""
    if int(i) != i or i < 1:
        raise DomainError(f"t_sequence needs an integer i >= 1, got {i}")
    if i > 5:
        raise DomainError(f"t_sequence is capped at i <= 5 in double precision, got {i}")
    return 2.0 ** -(2 ** int(i))


@dataclass(frozen=True)
class TGrid:
    """Strictly decreasing evaluation points in (0, 1/2); each t is paired with 2t."""

    entries: tuple[float, ...]

    def __post_init__(self):
        entries = tuple(float(t) for t in self.entries)
        if not entries:
            raise ConfigurationError("t grid is empty")
        if any(not 0.0 < t < 0.5 for t in entries):
            raise ConfigurationError(f"t grid entries must lie in (0, 1/2): {entries}")
        if any(a <= b for a, b in zip(entries, entries[1:])):
            raise ConfigurationError(f"t grid must be strictly decreasing: {entries}")
        object.__setattr__(self, "entries", entries)

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def pairing(self) -> list[tuple[float, float]]:
        return [(t, 2.0 * t) for t in self.entries]

    def consecutive_pairs(self) -> list[tuple[float, float]]:
        return list(zip(self.entries, self.entries[1:]))

    @classmethod
    def from_sequence(cls, i_lo: int, i_hi: int) -> TGrid:
        return cls(tuple(t_sequence(i) for i in range(i_lo, i_hi + 1)))

    @classmethod
    def parse(cls, text: str) -> TGrid:
        """``"2^-2^i:i=1..4"`` or a comma list such as ``"0.25,0.0625,2^-8"``."""
        text = text.replace(" ", "")
        m = re.fullmatch(r"2\^-2\^i:i=(\d+)\.\.(\d+)", text)
        if m:
            return cls.from_sequence(int(m.group(1)), int(m.group(2)))
        values = [parse_real(tok) for tok in text.split(",") if tok]
        return cls(tuple(sorted(values, reverse=True)))


def parse_real(tok: str) -> float:
    m = re.fullmatch(r"2\^(-?\d+)", tok)
    if m:
        return 2.0 ** int(m.group(1))
    try:
        return float(tok)
    except ValueError:
        raise ConfigurationError(f"cannot parse t value {tok!r}") from None


# --- direct truncated prime sums and their tails -------------------------------

# Dusart: x/log x (1 + 1/log x) <= pi(x) for x >= 599, pi(x) <= x/log x (1 + 1.2762/log x) for x > 1
_PI_LOWER = 1.0
_PI_UPPER = 1.2762


def prime_power_tail(s: float, prime_limit: int, prime_count: int) -> AnalyticValue:
    """Two-sided estimate of sum_{p > P} p^-s from explicit prime counting bounds.

    Uses sum_{p>P} p^-s = -pi(P) P^-s + s int_P^inf pi(x) x^(-s-1) dx and
    integrates the bounds on pi(x) exactly via the exponential integral.
    """
    if prime_limit < 599:
        raise DomainError("prime tail bounds need prime_limit >= 599")
    if not s > 1.0:
        raise DomainError(f"prime tail needs s > 1, got {s}")
    lg = math.log(prime_limit)
    a = s - 1.0
    e1 = float(exp1(a * lg))
    i1 = e1  # int_P^inf x^-s / log x dx
    i2 = math.exp(-a * lg) / lg - a * e1  # int_P^inf x^-s / log^2 x dx
    boundary = prime_count * prime_limit**-s
    lower = -boundary + s * (i1 + _PI_LOWER * i2)
    upper = -boundary + s * (i1 + _PI_UPPER * i2)
    lower = max(lower, 0.0)
    return AnalyticValue(0.5 * (lower + upper), 0.5 * (upper - lower))


def _primes(prime_limit: int, engine: SieveEngine | None) -> np.ndarray:
    return (engine or default_engine()).primes_upto(prime_limit)


def _fsum_bound(values: np.ndarray) -> float:
    # each term's own rounding (a few ulps) plus the correctly rounded fsum
    return 4.0 * EPS * float(np.abs(values).sum())


def truncated_prime_power_sum(s: float, prime_limit: int, engine: SieveEngine | None = None) -> AnalyticValue:
    """sum_{p <= P} p^-s by direct summation."""
    primes = _primes(prime_limit, engine).astype(np.float64)
    vals = primes**-s
    return AnalyticValue(math.fsum(vals), _fsum_bound(vals))


def direct_prime_zeta(s: float, prime_limit: int, engine: SieveEngine | None = None) -> AnalyticValue:
    """sum_{p <= P} p^-s plus the estimated tail beyond P (independent route to P(s))."""
    primes = _primes(prime_limit, engine)
    head = truncated_prime_power_sum(s, prime_limit, engine)
    tail = prime_power_tail(s, prime_limit, len(primes))
    return AnalyticValue(head.value + tail.value, head.tail_bound + tail.tail_bound)


def r_weights(t: float, primes: np.ndarray) -> np.ndarray:
    """p^(-1/2-t) - p^(-1/2-2t), computed without cancellation."""
    lp = np.log(primes.astype(np.float64))
    return -np.exp(-(0.5 + t) * lp) * np.expm1(-t * lp)


def truncated_r_covariance(t1: float, t2: float, prime_limit: int, engine: SieveEngine | None = None) -> AnalyticValue:
    """Covariance of R(t1), R(t2) for the model truncated at primes <= P."""
    primes = _primes(prime_limit, engine)
    vals = r_weights(t1, primes) * r_weights(t2, primes)
    return AnalyticValue(math.fsum(vals), _fsum_bound(vals))


def truncated_r_variance(t: float, prime_limit: int, engine: SieveEngine | None = None) -> AnalyticValue:
    return truncated_r_covariance(t, t, prime_limit, engine)


def r_variance_tail(t: float, prime_limit: int, prime_count: int) -> AnalyticValue:
    """Bound on sum_{p>P} (p^(-1/2-t) - p^(-1/2-2t))^2, which lies in [0, sum_{p>P} p^(-1-2t)]."""
    upper = prime_power_tail(1.0 + 2.0 * t, prime_limit, prime_count)
    hi = upper.value + upper.tail_bound
    return AnalyticValue(0.5 * hi, 0.5 * hi)
