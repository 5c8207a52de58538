"""Partial sums S_x = sum_{n<=x} f(n) n^(-a) and their sign changes.

S_x is a step function of real x, constant on [n, n+1), so scanning the
integers loses nothing. Sums are accumulated with Neumaier compensation and
every reported value comes with a worst-case rounding bound covering the
rounding of each term (<= 2u relative), the compensated accumulation
(2u|S| + 4 n u^2 sum|x|) and the final ``s + c`` addition.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels as K
from .errors import ConfigurationError
from .sampler import SignOracle, iter_value_blocks
from .sieve import SieveEngine

NEAR_ZERO_TOL = 1e-12


def default_checkpoints(x_limit: int) -> list[int]:
    """Geometric checkpoints 10^3, 10^4, ... below x_limit, plus x_limit."""
    out = []
    x = 1000
    while x < x_limit:
        out.append(x)
        x *= 10
    out.append(x_limit)
    return out


def _validate(x_limit: int, exponent: float) -> None:
    if int(x_limit) != x_limit or x_limit < 1:
        raise ConfigurationError(f"x_limit must be an integer >= 1, got {x_limit}")
    if not 0.0 < exponent <= 1.0:
        raise ConfigurationError(f"exponent must lie in (0, 1], got {exponent}")


def iter_partial_sum_blocks(
    oracle: SignOracle,
    x_limit: int,
    exponent: float = 0.5,
    engine: SieveEngine | None = None,
    workers: int = 1,
):
    """Yield ``(n, S_n, bound_n)`` arrays block by block, n ascending from 1."""
    _validate(x_limit, exponent)
    yield from _blocks(oracle, x_limit, exponent, engine, workers)


def _blocks(oracle, x_limit, exponent, engine, workers):
    # no exponent range check: Dirichlet sums use exponents above 1
    state = np.zeros(3, dtype=np.float64)
    for lo, vals in iter_value_blocks(oracle, x_limit, engine=engine, workers=workers):
        partial, bound = K.compensated_prefix(vals, lo, float(exponent), state)
        yield np.arange(lo, lo + len(vals), dtype=np.int64), partial, bound


def partial_sums_stream(
    oracle: SignOracle,
    x_limit: int,
    exponent: float = 0.5,
    engine: SieveEngine | None = None,
    workers: int = 1,
):
    """Stream ``(n, S_n)`` for n = 1..x_limit."""
    for n, partial, _ in iter_partial_sum_blocks(oracle, x_limit, exponent, engine, workers):
        yield from zip(n.tolist(), partial.tolist())


def partial_sums(
    oracle: SignOracle,
    x_limit: int,
    exponent: float = 0.5,
    engine: SieveEngine | None = None,
    workers: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """All partial sums S_1..S_x as one array, with their rounding bounds."""
    parts = list(iter_partial_sum_blocks(oracle, x_limit, exponent, engine, workers))
    return np.concatenate([p[1] for p in parts]), np.concatenate([p[2] for p in parts])


@dataclass
class CensusReport:
    x_limit: int
    exponent: float
    crossings: list[int]
    final_sum: float
    running_min: float
    running_max: float
    near_zero_events: list[tuple[int, float]]
    rounding_bound: float
    # crossings where |S| on either side does not clear the rounding bound
    ambiguous_crossings: list[int] = field(default_factory=list)
    checkpoints: list[dict] = field(default_factory=list)

    def crossing_count(self, upto: int | None = None) -> int:
        if upto is None:
            return len(self.crossings)
        return int(np.searchsorted(np.asarray(self.crossings, dtype=np.int64), upto, side="right"))

    def to_dict(self) -> dict:
        return asdict(self)


def sign_changes(
    oracle: SignOracle,
    x_limit: int,
    exponent: float = 0.5,
    checkpoints: list[int] | None = None,
    engine: SieveEngine | None = None,
    workers: int = 1,
    near_zero_tol: float = NEAR_ZERO_TOL,
) -> CensusReport:
    """Scan S_1..S_x and record every n with S_{n-1} * S_n < 0."""
    _validate(x_limit, exponent)
    cps = sorted(set(checkpoints)) if checkpoints else default_checkpoints(x_limit)
    if cps[0] < 1 or cps[-1] > x_limit:
        raise ConfigurationError(f"checkpoints must lie in [1, {x_limit}]")
    crossings: list[np.ndarray] = []
    ambiguous: list[np.ndarray] = []
    near: list[tuple[int, float]] = []
    rows: list[dict] = []
    prev_s, prev_b = 0.0, 0.0
    lo_run, hi_run, bound_run = np.inf, -np.inf, 0.0
    n_cross = 0
    ci = 0
    last = 0.0
    for n, partial, bound in iter_partial_sum_blocks(oracle, x_limit, exponent, engine, workers):
        before = np.concatenate(([prev_s], partial[:-1]))
        before_b = np.concatenate(([prev_b], bound[:-1]))
        hit = np.flatnonzero(before * partial < 0.0)
        if hit.size:
            crossings.append(n[hit])
            unclear = (np.abs(before[hit]) <= before_b[hit]) | (np.abs(partial[hit]) <= bound[hit])
            ambiguous.append(n[hit][unclear])
        small = np.flatnonzero(np.abs(partial) < near_zero_tol)
        near.extend(zip(n[small].tolist(), np.abs(partial[small]).tolist()))
        lo_n = int(n[0])
        while ci < len(cps) and cps[ci] <= n[-1]:
            k = cps[ci] - lo_n + 1
            lo_cp = min(lo_run, float(partial[:k].min()))
            hi_cp = max(hi_run, float(partial[:k].max()))
            b_cp = max(bound_run, float(bound[:k].max()))
            rows.append(
                {
                    "checkpoint_x": int(cps[ci]),
                    "S_x": float(partial[k - 1]),
                    "crossings_so_far": n_cross + int(np.count_nonzero(hit < k)),
                    "min": lo_cp,
                    "max": hi_cp,
                    "rounding_bound": b_cp,
                }
            )
            ci += 1
        n_cross += hit.size
        lo_run = min(lo_run, float(partial.min()))
        hi_run = max(hi_run, float(partial.max()))
        bound_run = max(bound_run, float(bound.max()))
        prev_s, prev_b = float(partial[-1]), float(bound[-1])
        last = prev_s
    cross = np.concatenate(crossings).tolist() if crossings else []
    amb = np.concatenate(ambiguous).tolist() if ambiguous else []
    return CensusReport(
        x_limit=int(x_limit),
        exponent=float(exponent),
        crossings=cross,
        final_sum=last,
        running_min=lo_run,
        running_max=hi_run,
        near_zero_events=near,
        rounding_bound=bound_run,
        ambiguous_crossings=amb,
        checkpoints=rows,
    )
