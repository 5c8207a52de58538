"""Random completely multiplicative functions f: N -> {+1, -1}.

The sign at a prime is a pure function of ``(seed, mode, p)``: the low bit
of a splitmix64-style permutation of ``p * golden + key(seed)``. Nothing is
stored, so any thread can evaluate any prime's sign and a published seed
reproduces a run bit for bit.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import ConfigurationError, ContractViolation, ResourceError
from .sieve import PrimeRange, SieveEngine, default_engine, is_prime

MODES = {"random": K.MODE_RANDOM, "all_plus": K.MODE_ALL_PLUS, "all_minus": K.MODE_ALL_MINUS}


def parse_seed(text: str | int) -> int:
    """Accept a decimal or ``0x``-prefixed hex seed; must fit in 64 bits."""
    if isinstance(text, (int, np.integer)):
        value = int(text)
    else:
        s = str(text).strip().lower()
        try:
            value = int(s, 16) if s.startswith("0x") else int(s, 10)
        except ValueError:
            raise ConfigurationError(f"seed must be a decimal or 0x-hex integer, got {text!r}") from None
    if not 0 <= value < 1 << 64:
        raise ConfigurationError(f"seed must be in [0, 2**64), got {value}")
    return value


def sample_seed(base_seed: int, index: int) -> int:
    """Seed of the ``index``-th ensemble member; depends only on (base_seed, index)."""
    return K.mix64_py(K.mix64_py(base_seed ^ 0xD1B54A32D192ED03) + index * K.GOLDEN)


@dataclass(frozen=True)
class SignOracle:
    """Seed-addressed assignment of signs to primes.

    ``mode="all_plus"`` gives f = 1; ``mode="all_minus"`` gives the
    Liouville function. In those modes the seed is ignored.
    """

    seed: int = 0
    mode: str = "random"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown mode {self.mode!r}; expected one of {sorted(MODES)}")
        object.__setattr__(self, "seed", parse_seed(self.seed))

    @property
    def mode_code(self) -> int:
        return MODES[self.mode]

    @property
    def key(self) -> np.uint64:
        return np.uint64(K.prime_key_py(self.seed))


def prime_sign(oracle: SignOracle, p: int) -> int:
    """f(p) for a prime ``p``."""
    p = int(p)
    if not is_prime(p):
        raise ContractViolation(f"{p} is not prime")
    return K.sign_py(int(oracle.key), p, oracle.mode_code)


def prime_signs(oracle: SignOracle, primes: np.ndarray) -> np.ndarray:
    """Vectorised f(p) over an array of primes (not re-checked for primality)."""
    primes = np.ascontiguousarray(primes, dtype=np.int64)
    return K.prime_signs(oracle.key, primes, oracle.mode_code)


def value(oracle: SignOracle, n: int, engine: SieveEngine | None = None) -> int:
    """f(n) = prod f(p)^a over n = prod p^a, with f(1) = 1."""
    n = int(n)
    if n < 1:
        raise ConfigurationError(f"value() needs n >= 1, got {n}")
    engine = engine or default_engine()
    if n > engine.max_n:
        raise ResourceError(f"{n} exceeds sieve capacity {engine.max_n}")
    key = int(oracle.key)
    mode = oracle.mode_code
    sign = 1
    m = n
    for p in engine.base_primes(n):
        p = int(p)
        if p * p > m:
            break
        while m % p == 0:
            m //= p
            sign *= K.sign_py(key, p, mode)
    if m > 1:
        sign *= K.sign_py(key, m, mode)
    return sign


def value_block(
    oracle: SignOracle,
    rng: PrimeRange,
    engine: SieveEngine | None = None,
    workers: int = 1,
) -> np.ndarray:
    """int8 array of f(n) for every n in ``rng``.

    The range is cut into the engine's blocks; with ``workers > 1`` blocks are
    evaluated on a thread pool and concatenated in order.
    """
    engine = engine or default_engine()
    if rng.hi > engine.max_n:
        raise ResourceError(f"range upper bound {rng.hi} exceeds sieve capacity {engine.max_n}")
    if len(rng) > engine.block_budget:
        raise ResourceError(f"block of {len(rng)} entries exceeds budget {engine.block_budget}")
    blocks = list(rng.blocks(engine.block_size))
    base = engine.base_primes(rng.hi)
    key, mode = oracle.key, oracle.mode_code

    def run(b: PrimeRange) -> np.ndarray:
        return K.value_block(b.lo, b.hi, base, key, mode)

    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]
    return np.concatenate(parts)


def iter_value_blocks(oracle: SignOracle, x_limit: int, engine: SieveEngine | None = None, workers: int = 1):
    """Yield ``(lo, f-values)`` for consecutive blocks covering ``[1, x_limit]``.

    Blocks are produced in ascending order. With ``workers > 1`` up to
    ``workers`` blocks are computed ahead concurrently.
    """
    engine = engine or default_engine()
    rng = PrimeRange(1, x_limit)
    if x_limit > engine.max_n:
        raise ResourceError(f"x_limit {x_limit} exceeds sieve capacity {engine.max_n}")
    base = engine.base_primes(x_limit)
    key, mode = oracle.key, oracle.mode_code
    blocks = list(rng.blocks(engine.block_size))

    def run(b: PrimeRange) -> np.ndarray:
        return K.value_block(b.lo, b.hi, base, key, mode)

    if workers <= 1 or len(blocks) == 1:
        for b in blocks:
            yield b.lo, run(b)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for start in range(0, len(blocks), workers):
            chunk = blocks[start : start + workers]
            for b, vals in zip(chunk, pool.map(run, chunk)):
                yield b.lo, vals


def sign_mean(oracle: SignOracle, prime_limit: int, engine: SieveEngine | None = None) -> float:
    """Average of f(p) over primes p <= prime_limit."""
    primes = (engine or default_engine()).primes_upto(prime_limit)
    if primes.size == 0:
        return math.nan
    return float(prime_signs(oracle, primes).astype(np.float64).mean())
