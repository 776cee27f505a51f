"""Monte Carlo reliability on surrogates or exact responses, and finite-difference perforation sensitivities.

Samples are drawn in fixed-size blocks; block b of a run with seed s always
comes from the same substream, and per-block tallies are reduced in block
order. Estimates are therefore identical for any number of worker threads.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

from .pdd import PddSurrogate, evaluate_many
from .randvars import BLOCK_SIZE, RandomVector


class Direction(str, enum.Enum):
    ABOVE = "above"
    BELOW = "below"


class Combine(str, enum.Enum):
    SINGLE = "single"
    UNION = "union"
    INTERSECTION = "intersection"


@dataclass(frozen=True)
class LimitState:
    """Failure when the response is at or beyond ``threshold`` in ``direction``."""

    threshold: float
    direction: Direction = Direction.ABOVE

    def __post_init__(self):
        object.__setattr__(self, "direction", Direction(self.direction))
        if not math.isfinite(self.threshold):
            raise ValueError("threshold must be finite")

    def fails(self, y: np.ndarray) -> np.ndarray:
        return y >= self.threshold if self.direction is Direction.ABOVE else y <= self.threshold


@dataclass(frozen=True)
class FailureSpec:
    responses: tuple
    limit_states: tuple
    combine: Combine = Combine.SINGLE

    def __post_init__(self):
        object.__setattr__(self, "responses", tuple(self.responses))
        object.__setattr__(self, "limit_states", tuple(self.limit_states))
        object.__setattr__(self, "combine", Combine(self.combine))
        if not self.responses:
            raise ValueError("a failure spec needs at least one response")
        if len(self.responses) != len(self.limit_states):
            raise ValueError("one limit state per response is required")
        if self.combine is Combine.SINGLE and len(self.responses) != 1:
            raise ValueError("combine='single' takes exactly one response")

    @classmethod
    def single(cls, response, threshold: float, direction: Direction | str = Direction.ABOVE):
        return cls((response,), (LimitState(threshold, Direction(direction)),))

    def indicator_from_values(self, values: Sequence[np.ndarray]) -> np.ndarray:
        flags = [ls.fails(v) for ls, v in zip(self.limit_states, values)]
        if self.combine is Combine.INTERSECTION:
            return np.logical_and.reduce(flags)
        return np.logical_or.reduce(flags)


@dataclass(frozen=True)
class McsResult:
    estimate: float
    L: int
    seed: int
    n_fail: int

    @property
    def stderr(self) -> float:
        p = self.estimate
        return math.sqrt(max(p * (1.0 - p), 0.0) / self.L)

    def to_dict(self) -> dict:
        return {**asdict(self), "stderr": self.stderr}


@dataclass(frozen=True)
class FdResult:
    """Finite-difference perforation sensitivity of a failure probability."""

    estimate: float
    stderr: float
    pf: float
    pf_perturbed: float
    rho: float
    n: int
    L: int
    seed: int

    def to_dict(self) -> dict:
        return asdict(self)


def _evaluate(responses, x: np.ndarray) -> list[np.ndarray]:
    if all(isinstance(r, PddSurrogate) for r in responses):
        return evaluate_many(responses, x)
    return [np.asarray(r(x), dtype=float) for r in responses]


def _blocks(L: int) -> list[tuple[int, int]]:
    return [(b, min(BLOCK_SIZE, L - b * BLOCK_SIZE)) for b in range(-(-L // BLOCK_SIZE))]


def map_blocks(rv: RandomVector, L: int, seed: int, fn: Callable[[np.ndarray], np.ndarray],
               workers: int = 1) -> np.ndarray:
    """Apply ``fn`` to every sample block and sum the returned arrays in block order."""
    if L < 1:
        raise ValueError(f"sample size must be at least 1, got {L}")

    def run(block):
        b, n = block
        return np.asarray(fn(rv.sample_block(seed, b, n)))

    blocks = _blocks(int(L))
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]
    total = parts[0].copy()
    for p in parts[1:]:
        total = total + p
    return total


def failure_probability(spec: FailureSpec, rv: RandomVector, L: int = 1_000_000, seed: int = 0,
                        workers: int = 1) -> McsResult:
    def tally(x):
        return np.array([np.count_nonzero(spec.indicator_from_values(_evaluate(spec.responses, x)))])

    n_fail = int(map_blocks(rv, L, seed, tally, workers)[0])
    return McsResult(n_fail / L, int(L), int(seed), n_fail)


def _fd(pair, spec: FailureSpec, rv, rho, n, L, seed, workers) -> FdResult:
    """``pair(x)`` returns (intact responses, perforated responses) on the same rows."""
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    scale = rho**n

    def tally(x):
        values, perturbed = pair(x)
        base = spec.indicator_from_values(values)
        pert = spec.indicator_from_values(perturbed)
        d = pert.astype(np.int64) - base.astype(np.int64)
        return np.array([np.count_nonzero(base), np.count_nonzero(pert), int(np.sum(d)), int(np.sum(d * d))])

    n_base, n_pert, s1, s2 = (int(v) for v in map_blocks(rv, L, seed, tally, workers))
    mean = s1 / L
    var = (s2 - L * mean * mean) / (L - 1) if L > 1 else 0.0
    return FdResult(mean / scale, math.sqrt(max(var, 0.0) / L) / scale, n_base / L, n_pert / L,
                    float(rho), int(n), int(L), int(seed))


def dt_failure_probability(y, z, limit_states, rv: RandomVector, rho: float = 0.05, n: int = 2,
                           L: int = 1_000_000, seed: int = 0, combine: Combine | str = Combine.SINGLE,
                           workers: int = 1) -> FdResult:
    """(P_F(y + rho^n z) - P_F(y)) / rho^n with both indicators on the same samples.

    ``y`` and ``z`` are a surrogate pair or equal-length sequences of pairs;
    ``limit_states`` is a LimitState or one per pair.
    """
    ys = list(y) if isinstance(y, (list, tuple)) else [y]
    zs = list(z) if isinstance(z, (list, tuple)) else [z]
    lss = list(limit_states) if isinstance(limit_states, (list, tuple)) else [limit_states]
    if not len(ys) == len(zs) == len(lss):
        raise ValueError("need one derivative surrogate and one limit state per response")
    spec = FailureSpec(tuple(ys), tuple(lss), combine)
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    scale = rho**n
    k = len(ys)

    def pair(x):
        vals = _evaluate(ys + zs, x)
        return vals[:k], [vals[i] + scale * vals[k + i] for i in range(k)]

    return _fd(pair, spec, rv, rho, n, L, seed, workers)


def crude_mcs_fd(y_exact: Callable, y_ring_exact: Callable, rv: RandomVector, rho: float,
                 limit_state: LimitState, L: int = 10_000_000, seed: int = 0, n: int = 2,
                 workers: int = 1) -> FdResult:
    """Same estimator as :func:`dt_failure_probability` with exact intact/perforated responses.

    ``y_exact(X)`` and ``y_ring_exact(X, rho)`` act on sample rows.
    """
    spec = FailureSpec((y_exact,), (limit_state,))

    def pair(x):
        return [np.asarray(y_exact(x), dtype=float)], [np.asarray(y_ring_exact(x, rho), dtype=float)]

    return _fd(pair, spec, rv, rho, n, L, seed, workers)


def cdf_curve(response, rv: RandomVector, L: int, seed: int, grid, workers: int = 1) -> list[tuple[float, float]]:
    """Empirical CDF of ``response`` samples on ``grid``; pairs (y, F(y))."""
    grid = np.asarray(grid, dtype=float)

    def tally(x):
        v = np.sort(_evaluate([response], x)[0])
        return np.searchsorted(v, grid, side="right").astype(np.int64)

    counts = map_blocks(rv, L, seed, tally, workers)
    return [(float(g), int(c) / L) for g, c in zip(grid, counts)]
