"""Exact binomial/hypergeometric factors shared by every encoder.

All probabilities are formed as ratios of exact integers and converted to
floats at the very end; with at most 64 packets nothing overflows and no
log-domain tricks are needed.
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
import math

import numpy as np

MAX_PACKETS = 64


class ConfigurationError(ValueError):
    """Raised when a parameter lies outside the supported range."""


def binomial(n: int, k: int) -> int:
    """C(n, k) in exact integer arithmetic; 0 when k is out of [0, n]."""
    if n < 0:
        raise ConfigurationError(f"binomial: n must be non-negative, got {n}")
    if n > MAX_PACKETS:
        raise ConfigurationError(f"binomial: n={n} exceeds supported maximum {MAX_PACKETS}")
    if k < 0 or k > n:
        return 0
    return math.comb(n, k)


def _check_hdm(h, d, m):
    if not 1 <= m <= MAX_PACKETS:
        raise ConfigurationError(f"packet count m={m} outside [1, {MAX_PACKETS}]")
    if not 0 <= h <= m:
        raise ConfigurationError(f"held count h={h} outside [0, {m}]")
    if not 1 <= d <= m:
        raise ConfigurationError(f"degree d={d} outside [1, {m}]")


def recovery_fraction(h: int, d: int, m: int) -> Fraction:
    """Exact probability that a random d-subset of m packets hits exactly one
    of the m - h packets a user is missing."""
    _check_hdm(h, d, m)
    return Fraction(binomial(h, d - 1) * (m - h), binomial(m, d))


def recovery_prob(h: int, d: int, m: int) -> float:
    return float(recovery_fraction(h, d, m))


def posterior_reception_mean(h: int, m: int) -> float:
    """Posterior mean of the per-packet reception probability.

    Under a uniform prior on the erasure rate, observing h receptions out
    of m transmissions gives a Beta(h + 1, m - h + 1) posterior on 1 - eps,
    whose mean is (h + 1) / (m + 2).
    """
    if m < 0 or not 0 <= h <= m:
        raise ConfigurationError(f"need 0 <= h <= m, got h={h}, m={m}")
    return (h + 1) / (m + 2)


@lru_cache(maxsize=None)
def recovery_table(m: int) -> np.ndarray:
    """Array T of shape (m + 1, m + 1) with T[d, h] = recovery_prob(h, d, m).

    Row 0 is all zeros (degree 0 is not a code). Read-only.
    """
    table = np.zeros((m + 1, m + 1))
    for d in range(1, m + 1):
        for h in range(m + 1):
            table[d, h] = recovery_prob(h, d, m)
    table.flags.writeable = False
    return table


@lru_cache(maxsize=None)
def posterior_table(m: int) -> np.ndarray:
    """Vector of (h + 1) / (m + 2) for h = 0..m. Read-only."""
    vec = np.array([posterior_reception_mean(h, m) for h in range(m + 1)])
    vec.flags.writeable = False
    return vec


@dataclass(frozen=True, eq=False)
class PiMatrix:
    """Precomputed first-packet gain factors.

    ``entries`` has shape (m, m); row ``d - 1`` holds degree ``d`` and
    column ``j`` the initial reception count. Index with ``pi[d, j]`` using
    the 1-based degree.
    """

    m: int
    entries: np.ndarray

    def __getitem__(self, key):
        d, j = key
        if not 1 <= d <= self.m:
            raise IndexError(f"degree {d} outside [1, {self.m}]")
        return self.entries[d - 1, j]


@lru_cache(maxsize=None)
def build_pi_matrix(m: int) -> PiMatrix:
    if not 1 <= m <= MAX_PACKETS:
        raise ConfigurationError(f"packet count m={m} outside [1, {MAX_PACKETS}]")
    entries = np.zeros((m, m))
    for d in range(1, m + 1):
        for j in range(m):
            num = binomial(j, d - 1) * (m - j) * (j + 1)
            den = binomial(m, d) * (m + 2)
            entries[d - 1, j] = num / den
    entries.flags.writeable = False
    return PiMatrix(m, entries)
