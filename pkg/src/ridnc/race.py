"""RACE degree planning from one-shot sampled feedback.

The first coded packet's degree comes from a single matrix-vector product
of the precomputed gain matrix with the feedback histogram. Later packets
are planned by propagating a belief matrix of (initial count, current
count) mass without asking users for more feedback.
"""

from dataclasses import dataclass

import numpy as np

from ridnc.channel import CodedPacket
from ridnc.combinatorics import (
    ConfigurationError,
    PiMatrix,
    posterior_table,
    recovery_table,
)


class OpCounter:
    """Tally of element-level work (multiply-adds, comparisons) performed."""

    def __init__(self):
        self.ops = 0

    def add(self, n):
        self.ops += int(n)


def _count(counter, n):
    if counter is not None:
        counter.add(n)


@dataclass(frozen=True, eq=False)
class FeedbackHistogram:
    """``counts[j]`` sampled users reported holding ``j`` packets, j = 0..M."""

    m: int
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(eq=False)
class BeliefMatrix:
    """``d[i, j]``: expected number of sampled users that held ``i`` packets
    after the initial phase and hold ``j`` now. Shape (M + 1, M + 1)."""

    m: int
    d: np.ndarray

    def row_sums(self) -> np.ndarray:
        return self.d.sum(axis=1)

    def copy(self) -> "BeliefMatrix":
        return BeliefMatrix(self.m, self.d.copy())


@dataclass(frozen=True)
class DegreePlan:
    degrees: tuple

    def __len__(self):
        return len(self.degrees)


def _validated_counts(reports, m):
    counts = [c for _, c in reports]
    for c in counts:
        if not 0 <= c <= m:
            raise ConfigurationError(f"malformed feedback: held count {c} outside [0, {m}]")
    return counts


def histogram_from_feedback(reports, m: int) -> FeedbackHistogram:
    counts = np.zeros(m + 1, dtype=np.int64)
    for c in _validated_counts(reports, m):
        counts[c] += 1
    return FeedbackHistogram(m, counts)


def expected_gain_first(pi: PiMatrix, v: FeedbackHistogram, counter=None) -> np.ndarray:
    """Expected recoveries among sampled users for degrees 1..M (index d - 1).

    Users reporting all M packets are dropped; they cannot gain anything.
    """
    if pi.m != v.m:
        raise ConfigurationError(f"dimension mismatch: Pi has M={pi.m}, histogram M={v.m}")
    _count(counter, pi.m * pi.m)
    return pi.entries @ v.counts[: pi.m]


def _argmax_first(gains, counter=None):
    # same as a strict '>' scan: argmax keeps the first (smallest) degree on
    # ties, and an all-zero gain vector falls back to degree 1
    _count(counter, len(gains))
    best = int(np.argmax(gains))
    return best + 1 if gains[best] > 0.0 else 1


def estimate_degree_first(pi: PiMatrix, v: FeedbackHistogram, counter=None) -> int:
    return _argmax_first(expected_gain_first(pi, v, counter), counter)


def belief_from_feedback(reports, m: int) -> BeliefMatrix:
    d = np.zeros((m + 1, m + 1))
    for c in _validated_counts(reports, m):
        d[c, c] += 1.0
    return BeliefMatrix(m, d)


def _transfer(d_mat: BeliefMatrix, degree: int) -> np.ndarray:
    """Mass expected to move from cell (j, k) to (j, k + 1) for one packet."""
    m = d_mat.m
    weights = recovery_table(m)[degree][None, :] * posterior_table(m)[:, None]
    # weights[:, m] is already zero since recovery_prob(m, ., m) = 0
    return weights * d_mat.d


def belief_expected_gain(d_mat: BeliefMatrix, degree: int, counter=None):
    """Expected recoveries for one coded packet of ``degree`` and the belief
    after that packet. Returns ``(gain, updated)``; ``d_mat`` is unchanged."""
    m = d_mat.m
    if not 1 <= degree <= m:
        raise ConfigurationError(f"degree {degree} outside [1, {m}]")
    _count(counter, m * (m + 1) // 2)
    moved = _transfer(d_mat, degree)
    updated = d_mat.d - moved
    updated[:, 1:] += moved[:, :-1]
    return float(moved.sum()), BeliefMatrix(m, updated)


def _gains_all_degrees(d_mat: BeliefMatrix) -> np.ndarray:
    # gain(d) = sum_{j,k} R[d, k] * P[j] * D[j, k]  =  R @ (P @ D)
    m = d_mat.m
    weighted = posterior_table(m) @ d_mat.d
    return recovery_table(m)[1:] @ weighted


def plan_degrees(d_mat: BeliefMatrix, r: int, counter=None) -> DegreePlan:
    """Plan ``r`` code degrees by greedy expected gain on the belief matrix."""
    if r < 1:
        raise ConfigurationError(f"coded-packet budget must be >= 1, got {r}")
    m = d_mat.m
    belief = d_mat.copy()
    degrees = []
    for _ in range(r):
        _count(counter, m * m * (m + 1) // 2)
        gains = _gains_all_degrees(belief)
        best = _argmax_first(gains, counter)
        if gains[best - 1] > 0.0:
            _, belief = belief_expected_gain(belief, best)
        degrees.append(best)
    return DegreePlan(tuple(degrees))


def build_coded_packet(degree: int, m: int, rng: np.random.Generator) -> CodedPacket:
    """A uniformly random ``degree``-subset of the ``m`` packet indices."""
    if not 1 <= degree <= m:
        raise ConfigurationError(f"degree {degree} outside [1, {m}]")
    return CodedPacket(tuple(rng.permutation(m)[:degree]))
