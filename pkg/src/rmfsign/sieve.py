"""Segmented sieve of Eratosthenes: primes and smallest-prime-factor tables.

Everything here works on inclusive integer ranges ``[lo, hi]`` and is
segmented so that arbitrarily long ranges are processed in fixed-size
blocks. Base primes up to ``isqrt(max_n)`` are computed lazily and cached;
after that the engine is read-only, so concurrent block requests are safe.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ResourceError

DEFAULT_BLOCK_SIZE = 1 << 20
DEFAULT_MAX_N = 10**10
# largest single table (spf_block / value_block) handed back to callers
DEFAULT_BLOCK_BUDGET = 1 << 26


@dataclass(frozen=True)
class PrimeRange:
    """Inclusive range ``lo <= n <= hi`` of positive integers."""

    lo: int
    hi: int

    def __post_init__(self):
        if int(self.lo) != self.lo or int(self.hi) != self.hi:
            raise ConfigurationError(f"range bounds must be integers: {self}")
        if self.lo < 1:
            raise ConfigurationError(f"range lower bound must be >= 1, got {self.lo}")
        if self.hi < self.lo:
            raise ConfigurationError(f"empty range [{self.lo}, {self.hi}]")

    def __len__(self) -> int:
        return self.hi - self.lo + 1

    def blocks(self, block_size: int):
        """Split into consecutive sub-ranges of at most ``block_size`` integers."""
        lo = self.lo
        while lo <= self.hi:
            hi = min(lo + block_size - 1, self.hi)
            yield PrimeRange(lo, hi)
            lo = hi + 1


@dataclass(frozen=True)
class SpfBlock:
    """Smallest prime factors ``spf[i]`` of ``base + i``; ``spf`` of 1 is 1."""

    base: int
    spf: np.ndarray

    def __len__(self) -> int:
        return len(self.spf)

    def __getitem__(self, n: int) -> int:
        i = n - self.base
        if not 0 <= i < len(self.spf):
            raise IndexError(f"{n} outside block [{self.base}, {self.base + len(self.spf) - 1}]")
        return int(self.spf[i])

    def as_dict(self) -> dict[int, int]:
        return {self.base + i: int(v) for i, v in enumerate(self.spf)}


def simple_sieve(limit: int) -> np.ndarray:
    """All primes ``<= limit`` with a monolithic sieve (int64 array)."""
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if flags[p]:
            flags[p * p :: p] = False
    return np.flatnonzero(flags).astype(np.int64)


class SieveEngine:
    """Segmented prime and spf generation up to ``max_n``.

    Parameters
    ----------
    block_size : int
        Length of the segments used internally.
    max_n : int
        Capacity; requests touching integers above it raise ``ResourceError``.
    block_budget : int
        Largest table returned by a single :meth:`spf_block` call.
    """

    def __init__(
        self,
        block_size: int = DEFAULT_BLOCK_SIZE,
        max_n: int = DEFAULT_MAX_N,
        block_budget: int = DEFAULT_BLOCK_BUDGET,
    ):
        if block_size < 16:
            raise ConfigurationError("block_size must be >= 16")
        self.block_size = int(block_size)
        self.max_n = int(max_n)
        self.block_budget = int(block_budget)
        self._base = np.zeros(0, dtype=np.int64)
        self._base_limit = 1
        self._lock = threading.Lock()

    def _check(self, rng: PrimeRange) -> None:
        if rng.hi > self.max_n:
            raise ResourceError(f"range upper bound {rng.hi} exceeds sieve capacity {self.max_n}")

    def base_primes(self, hi: int) -> np.ndarray:
        """Primes up to ``isqrt(hi)``, extending the cache when needed."""
        need = math.isqrt(hi)
        if need > self._base_limit:
            with self._lock:
                if need > self._base_limit:
                    # overshoot so nearby requests reuse the cache
                    limit = max(need, 2 * self._base_limit, 1024)
                    self._base = simple_sieve(limit)
                    self._base_limit = limit
        base = self._base
        return base[: np.searchsorted(base, need, side="right")]

    def _segment_flags(self, lo: int, hi: int) -> np.ndarray:
        flags = np.ones(hi - lo + 1, dtype=bool)
        for p in self.base_primes(hi):
            p = int(p)
            start = max(p * p, -(-lo // p) * p)
            if start > hi:
                continue
            flags[start - lo :: p] = False
        if lo <= 1:
            flags[: 2 - lo] = False
        return flags

    def primes_in_range(self, rng: PrimeRange) -> np.ndarray:
        """Ascending int64 array of the primes in ``rng``."""
        self._check(rng)
        parts = []
        for blk in rng.blocks(self.block_size):
            flags = self._segment_flags(blk.lo, blk.hi)
            parts.append(np.flatnonzero(flags).astype(np.int64) + blk.lo)
        if not parts:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate(parts)

    def primes_upto(self, limit: int) -> np.ndarray:
        if limit < 2:
            return np.zeros(0, dtype=np.int64)
        return self.primes_in_range(PrimeRange(1, limit))

    def spf_block(self, rng: PrimeRange) -> SpfBlock:
        """Smallest-prime-factor table for every integer in ``rng``."""
        self._check(rng)
        if len(rng) > self.block_budget:
            raise ResourceError(f"block of {len(rng)} entries exceeds budget {self.block_budget}")
        lo, hi = rng.lo, rng.hi
        spf = np.zeros(hi - lo + 1, dtype=np.int64)
        for p in self.base_primes(hi):
            p = int(p)
            start = max(p * p, -(-lo // p) * p)
            if start > hi:
                continue
            view = spf[start - lo :: p]
            view[view == 0] = p
        unset = spf == 0
        spf[unset] = np.arange(lo, hi + 1, dtype=np.int64)[unset]
        return SpfBlock(lo, spf)


_default_engine: SieveEngine | None = None


def default_engine() -> SieveEngine:
    global _default_engine
    if _default_engine is None:
        _default_engine = SieveEngine()
    return _default_engine


def primes_in_range(rng: PrimeRange, engine: SieveEngine | None = None) -> np.ndarray:
    return (engine or default_engine()).primes_in_range(rng)


def primes_upto(limit: int, engine: SieveEngine | None = None) -> np.ndarray:
    return (engine or default_engine()).primes_upto(limit)


def spf_block(rng: PrimeRange, engine: SieveEngine | None = None) -> SpfBlock:
    return (engine or default_engine()).spf_block(rng)


def is_prime(n: int) -> bool:
    """Deterministic trial-division primality check for moderate ``n``."""
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    for d in range(3, math.isqrt(n) + 1, 2):
        if n % d == 0:
            return False
    return True
