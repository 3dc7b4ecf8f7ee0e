"""Exact law of the longest run in a binary sequence with a fixed number of ones.

All counts are Python integers and all probabilities are
:class:`fractions.Fraction`, so nothing here overflows or rounds.
Conversion to ``float`` is left to the caller.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb
from numbers import Integral
from typing import Sequence

import numpy as np

from .errors import PreconditionError

__all__ = [
    "CONVENTIONS",
    "CriticalValueRecord",
    "RunLengthDistribution",
    "count_constrained",
    "critical_value",
    "longest_run",
    "null_distribution",
    "p_value",
]

CONVENTIONS = ("below", "nearest")


def longest_run(seq: Sequence[int] | np.ndarray) -> int:
    """Length of the longest block of identical consecutive symbols.

    Parameters
    ----------
    seq : sequence of {0, 1}
        Binary sequence, in order.

    Returns
    -------
    int
        Maximal run length of either symbol, in ``[1, len(seq)]``.
    """
    bits = np.asarray(seq)
    if bits.ndim != 1 or bits.size == 0:
        raise PreconditionError("longest_run needs a nonempty 1-d sequence")
    if not np.isin(bits, (0, 1)).all():
        raise PreconditionError("sequence must contain only 0 and 1")
    # positions where a run ends, bracketed by the virtual ends of the sequence
    ends = np.flatnonzero(bits[1:] != bits[:-1])
    bounds = np.concatenate(([-1], ends, [bits.size - 1]))
    return int(np.diff(bounds).max())


def _check_int(name, value, lo=None):
    if not isinstance(value, Integral) or isinstance(value, bool):
        raise PreconditionError(f"{name} must be an integer, got {value!r}")
    if lo is not None and value < lo:
        raise PreconditionError(f"{name} must be >= {lo}, got {value}")
    return int(value)


@lru_cache(maxsize=None)
def _count(n: int, k: int, x: int) -> int:
    zeros = n - k
    if x == 0:
        return 0
    if x >= max(k, zeros):
        return comb(n, k)

    # Runs are appended whole. For a ones and b zeros (all runs <= x), row a
    # of end1 / end0 counts sequences whose final run is ones / zeros,
    # vectorised over b. The empty sequence seeds both at (0, 0).
    #   end1[a, b] = sum_{l=1..x} end0[a - l, b]
    #   end0[a, b] = sum_{l=1..x} end1[a, b - l]
    blank = np.zeros(zeros + 1, dtype=object)
    blank[:] = 0
    # prefix[a] = sum of end0 rows < a; only the last x + 1 prefixes are needed
    prefix = deque([blank], maxlen=x + 1)
    b = np.arange(zeros + 1)
    lag = np.maximum(b - x, 0)
    csum = np.empty(zeros + 2, dtype=object)
    csum[0] = 0
    for a in range(k + 1):
        end1 = prefix[-1] - prefix[0]
        end1[0] = 1 if a == 0 else end1[0]
        np.cumsum(end1, out=csum[1:])
        end0 = csum[b] - csum[lag]
        end0[0] = 1 if a == 0 else 0
        prefix.append(prefix[-1] + end0)
    return int(end1[zeros] + end0[zeros])


def count_constrained(n: int, k: int, x: int) -> int:
    """Number of binary sequences of length `n` with `k` ones and no run longer than `x`.

    Both the runs of ones and the runs of zeros are bounded by `x`.

    Parameters
    ----------
    n : int
        Sequence length, ``n >= 1``.
    k : int
        Number of ones, ``0 <= k <= n``.
    x : int
        Maximal allowed run length, ``x >= 0``.

    Returns
    -------
    int
        Exact count.
    """
    n = _check_int("n", n, 1)
    k = _check_int("k", k, 0)
    x = _check_int("x", x, 0)
    if k > n:
        raise PreconditionError(f"k must not exceed n, got k={k}, n={n}")
    return _count(n, k, x)


@dataclass(frozen=True)
class RunLengthDistribution:
    """Exact null law of the longest run for sequences of length `n` with `k` ones.

    ``count(x)`` is the number of such sequences whose longest run is at
    most ``x``, and every probability is ``count(x) / denominator`` with
    ``denominator == C(n, k)``. Counts are computed on first use and
    cached, so building the object is free and a critical value only pays
    for the values of ``x`` it inspects.
    """

    n: int
    k: int
    denominator: int

    def count(self, x: int) -> int:
        if x < 0:
            return 0
        return _count(self.n, self.k, min(x, self.n))

    @property
    def counts(self) -> tuple[int, ...]:
        """``count(x)`` for ``x = 0..n``."""
        return tuple(self.count(x) for x in range(self.n + 1))

    def cdf(self, x: int) -> Fraction:
        """P(L <= x)."""
        return Fraction(self.count(x), self.denominator)

    def pmf(self, x: int) -> Fraction:
        """P(L = x)."""
        return self.cdf(x) - self.cdf(x - 1)

    def sf(self, x: int) -> Fraction:
        """P(L > x)."""
        return 1 - self.cdf(x)

    @property
    def cdf_table(self) -> dict[int, tuple[int, int]]:
        """Map ``x -> (numerator, denominator)`` for ``x = 0..n``, unreduced."""
        return {x: (c, self.denominator) for x, c in enumerate(self.counts)}

    @property
    def max_run(self) -> int:
        """Largest longest-run value with positive probability."""
        return max(self.k, self.n - self.k)


@lru_cache(maxsize=None)
def _null_distribution(n: int) -> RunLengthDistribution:
    k = n // 2
    return RunLengthDistribution(n=n, k=k, denominator=comb(n, k))


def null_distribution(n: int) -> RunLengthDistribution:
    """Exact distribution of the longest run when exactly ``n // 2`` of `n` symbols are ones.

    Results are cached per process; the returned object is immutable.
    """
    n = _check_int("n", n, 2)
    return _null_distribution(n)


@dataclass(frozen=True)
class CriticalValueRecord:
    """Critical value of the longest-run test and its exact attained level.

    The test rejects when the statistic exceeds `critical_value`;
    `attained_level` is the exact null probability of that event.
    `degenerate` marks the case where no positive level was selected,
    so the test can never reject.
    """

    n: int
    target_level: float
    critical_value: int
    attained_level: Fraction
    convention: str = "below"
    degenerate: bool = False

    @property
    def attained_level_float(self) -> float:
        return float(self.attained_level)


def critical_value(n: int, target_level: float, convention: str = "below") -> CriticalValueRecord:
    """Critical value for the exact longest-run test at a target level.

    Parameters
    ----------
    n : int
        Sample size, ``n >= 2``.
    target_level : float
        Nominal level in ``(0, 1)``.
    convention : {"below", "nearest"}
        ``"below"`` picks the largest attained level not exceeding the target
        (conservative). ``"nearest"`` picks the attained level closest to the
        target, ties going to the smaller level.

    Returns
    -------
    CriticalValueRecord
        With the smallest critical value realising the selected level.
    """
    dist = null_distribution(n)
    n = dist.n
    if not 0 < target_level < 1:
        raise PreconditionError(f"target_level must lie in (0, 1), got {target_level}")
    if convention not in CONVENTIONS:
        raise PreconditionError(f"convention must be one of {CONVENTIONS}, got {convention!r}")

    target = Fraction(target_level)
    # P(L > c) decreases strictly in c up to max_run, where it reaches 0.
    # Each new c costs a full count, so search outward from ~log2(n), where
    # the longest run of a random sequence concentrates.
    crit = min(dist.max_run, n.bit_length() - 1)
    if dist.sf(crit) <= target:
        while crit > 0 and dist.sf(crit - 1) <= target:
            crit -= 1
    else:
        while dist.sf(crit) > target:
            crit += 1
    if convention == "nearest" and crit > 0:
        above, below = dist.sf(crit - 1), dist.sf(crit)
        if above - target < target - below:
            crit -= 1
    attained = dist.sf(crit)
    return CriticalValueRecord(
        n=dist.n,
        target_level=float(target_level),
        critical_value=crit,
        attained_level=attained,
        convention=convention,
        degenerate=attained == 0,
    )


def p_value(n: int, observed: int) -> Fraction:
    """Exact null probability P(L >= observed).

    Values of `observed` above `n` are impossible and give 0.
    """
    dist = null_distribution(n)
    observed = _check_int("observed", observed, 1)
    return 1 - dist.cdf(observed - 1)
