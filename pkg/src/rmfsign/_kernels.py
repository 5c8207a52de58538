"""Compiled inner loops.

All arithmetic on hashes is unsigned 64-bit with wrap-around. Kernels release
the GIL so callers can fan blocks out over threads; none of them depends on
how the work is split, which keeps results bit-identical for any worker count.
"""

import numpy as np
from numba import njit

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
PRIME_SALT = 0x5851F42D4C957F2D

MODE_RANDOM = 0
MODE_ALL_PLUS = 1
MODE_ALL_MINUS = 2


def mix64_py(z: int) -> int:
    """splitmix64 finalizer (a bijection on 64-bit words), pure Python."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


def prime_key_py(seed: int) -> int:
    return mix64_py(seed ^ PRIME_SALT)


def sign_py(key: int, p: int, mode: int) -> int:
    if mode == MODE_ALL_PLUS:
        return 1
    if mode == MODE_ALL_MINUS:
        return -1
    h = mix64_py(p * GOLDEN + key)
    return 1 - 2 * (h & 1)


@njit(cache=True, nogil=True)
def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
    return z ^ (z >> np.uint64(31))


@njit(cache=True, nogil=True)
def _sign(key, p, mode):
    if mode == MODE_ALL_PLUS:
        return 1
    if mode == MODE_ALL_MINUS:
        return -1
    h = _mix64(np.uint64(p) * np.uint64(GOLDEN) + key)
    return 1 - 2 * np.int64(h & np.uint64(1))


@njit(cache=True, nogil=True)
def prime_signs(key, primes, mode):
    out = np.empty(primes.shape[0], dtype=np.int8)
    for i in range(primes.shape[0]):
        out[i] = _sign(key, primes[i], mode)
    return out


@njit(cache=True, nogil=True)
def value_block(lo, hi, base_primes, key, mode):
    """f(n) for lo <= n <= hi by dividing out every base prime p <= sqrt(hi).

    Whatever is left after removing base primes is 1 or a single prime.
    """
    length = hi - lo + 1
    rem = np.empty(length, dtype=np.int64)
    out = np.ones(length, dtype=np.int8)
    for i in range(length):
        rem[i] = lo + i
    for j in range(base_primes.shape[0]):
        p = base_primes[j]
        if p * p > hi:
            break
        sp = _sign(key, p, mode)
        start = ((lo + p - 1) // p) * p
        for m in range(start, hi + 1, p):
            i = m - lo
            r = rem[i] // p
            e = 1
            while r % p == 0:
                r //= p
                e += 1
            rem[i] = r
            if sp < 0 and (e & 1) == 1:
                out[i] = -out[i]
    for i in range(length):
        if rem[i] > 1:
            out[i] = out[i] * _sign(key, rem[i], mode)
    return out


@njit(cache=True, nogil=True)
def compensated_prefix(values, n0, exponent, state):
    """Running Neumaier sums of values[i] * (n0 + i) ** -exponent.

    ``state`` holds (sum, compensation, sum of |terms|) and is updated in place.
    Returns the compensated partial sums and their rounding bounds
    u (2 A + 3 |S|) + 4 n u^2 A, with A the running sum of |terms|.
    """
    u = 2.0**-53
    length = values.shape[0]
    partial = np.empty(length, dtype=np.float64)
    bound = np.empty(length, dtype=np.float64)
    s = state[0]
    c = state[1]
    a = state[2]
    sqrt_path = exponent == 0.5
    for i in range(length):
        n = np.float64(n0 + i)
        if sqrt_path:
            w = 1.0 / np.sqrt(n)
        else:
            w = n ** (-exponent)
        x = values[i] * w
        t = s + x
        if abs(s) >= abs(x):
            c += (s - t) + x
        else:
            c += (x - t) + s
        s = t
        a += abs(x)
        total = s + c
        partial[i] = total
        bound[i] = u * (2.0 * a + 3.0 * abs(total)) + 4.0 * n * u * u * a
    state[0] = s
    state[1] = c
    state[2] = a
    return partial, bound


@njit(cache=True, nogil=True)
def compensated_sum(values):
    s = 0.0
    c = 0.0
    for i in range(values.shape[0]):
        x = values[i]
        t = s + x
        if abs(s) >= abs(x):
            c += (s - t) + x
        else:
            c += (x - t) + s
        s = t
    return s + c


@njit(cache=True, nogil=True)
def signed_weight_sums(keys, primes, weights, mode):
    """out[i, k] = sum_j sign(keys[i], primes[j]) * weights[j, k] (Neumaier)."""
    n = keys.shape[0]
    m = primes.shape[0]
    ncol = weights.shape[1]
    out = np.empty((n, ncol), dtype=np.float64)
    s = np.empty(ncol, dtype=np.float64)
    c = np.empty(ncol, dtype=np.float64)
    for i in range(n):
        s[:] = 0.0
        c[:] = 0.0
        key = keys[i]
        for j in range(m):
            sg = _sign(key, primes[j], mode)
            for k in range(ncol):
                x = sg * weights[j, k]
                t = s[k] + x
                if abs(s[k]) >= abs(x):
                    c[k] += (s[k] - t) + x
                else:
                    c[k] += (x - t) + s[k]
                s[k] = t
        for k in range(ncol):
            out[i, k] = s[k] + c[k]
    return out


@njit(cache=True, nogil=True)
def mix_many(values):
    out = np.empty(values.shape[0], dtype=np.uint64)
    for i in range(values.shape[0]):
        out[i] = _mix64(values[i])
    return out
