"""Comparison encoders: genie-aided optimal RIDNC, the CrowdWiFi greedy
XOR encoder, and an exhaustive search over all codes for small M."""

from dataclasses import dataclass

import numpy as np

from ridnc.channel import CodedPacket, ErasureProfile, ReceptionState
from ridnc.combinatorics import ConfigurationError, recovery_table
from ridnc.race import OpCounter, _argmax_first, _count

__all__ = [
    "OpCounter",
    "OracleResult",
    "WantMatrix",
    "brute_force_best_code",
    "crowdwifi_encode",
    "decodable_count",
    "known_rates_gains",
    "optimal_ridnc_degree",
    "optimal_ridnc_gains",
]

ORACLE_MAX_PACKETS = 20


@dataclass(eq=False)
class WantMatrix:
    """Missing-packet bitmaps of the users that fed back.

    ``missing[i, p]`` is True iff user ``users[i]`` wants packet ``p``.
    """

    users: np.ndarray
    missing: np.ndarray

    @classmethod
    def from_state(cls, state: ReceptionState, users=None) -> "WantMatrix":
        if users is None:
            users = np.arange(state.n)
        users = np.asarray(users, dtype=int).reshape(-1)
        return cls(users, ~state.has[users])

    @property
    def m(self) -> int:
        return self.missing.shape[1]


@dataclass(frozen=True)
class OracleResult:
    best_set: CodedPacket
    best_count: float


def _weights(state, profile, include_reception):
    if include_reception:
        if profile is None:
            raise ConfigurationError("reception weighting needs an erasure profile")
        return 1.0 - profile.rates
    return np.ones(state.n)


def optimal_ridnc_gains(state: ReceptionState, profile: ErasureProfile,
                        include_reception: bool = True) -> np.ndarray:
    """Expected recoveries of a random degree-d code for d = 1..M, given the
    true state and (optionally) the true coded-packet reception rates."""
    w = _weights(state, profile, include_reception)
    held = state.held_counts()
    per_held = np.bincount(held, weights=w, minlength=state.m + 1)
    return recovery_table(state.m)[1:] @ per_held


def optimal_ridnc_degree(state: ReceptionState, profile: ErasureProfile,
                         include_reception: bool = True) -> int:
    return _argmax_first(optimal_ridnc_gains(state, profile, include_reception))


def known_rates_gains(profile: ErasureProfile, m: int, include_reception: bool = False) -> np.ndarray:
    """First-packet expected recoveries when only the erasure rates are known:
    sum_i d * eps_i * (1 - eps_i)^(d - 1), times (1 - eps_i) if the coded
    packet's own reception is accounted for."""
    eps = profile.rates
    d = np.arange(1, m + 1)[:, None]
    per_user = d * eps[None, :] * (1.0 - eps[None, :]) ** (d - 1)
    if include_reception:
        per_user = per_user * (1.0 - eps[None, :])
    return per_user.sum(axis=1)


def decodable_count(wants, packet: CodedPacket) -> int:
    missing = wants.missing if isinstance(wants, WantMatrix) else np.asarray(wants, dtype=bool)
    if missing.size == 0:
        return 0
    return int((missing[:, list(packet.indices)].sum(axis=1) == 1).sum())


def crowdwifi_encode(wants, counter: OpCounter = None) -> CodedPacket:
    """Greedy XOR code over the sampled want bitmaps.

    Starts from the most wanted packet and keeps XORing in the packet that
    makes the code instantly decodable by the most sampled users, as long
    as that count strictly increases. Ties go to the lowest packet index.
    """
    missing = wants.missing if isinstance(wants, WantMatrix) else np.asarray(wants, dtype=bool)
    f, m = missing.shape
    if f == 0 or not missing.any():
        return CodedPacket((0,))
    w = missing.astype(np.int16)

    _count(counter, f * m)
    scores = w.sum(axis=0)
    first = int(scores.argmax())
    code = [first]
    in_code = np.zeros(m, dtype=bool)
    in_code[first] = True
    best = int(scores[first])
    hits = w[:, first].copy()  # missing packets of each user inside the code

    while len(code) < m:
        _count(counter, f * m)
        cand = ((hits[:, None] + w) == 1).sum(axis=0)
        cand[in_code] = -1
        p = int(cand.argmax())
        if cand[p] <= best:
            break
        best = int(cand[p])
        code.append(p)
        in_code[p] = True
        hits += w[:, p]
    return CodedPacket(tuple(code))


def _popcount(x):
    return np.bitwise_count(x)


def _subset_tuple(mask):
    return tuple(i for i in range(mask.bit_length()) if mask >> i & 1)


def brute_force_best_code(state, profile: ErasureProfile = None, mode: str = "expected") -> OracleResult:
    """Best single code by exhaustive search over all 2^M - 1 index sets.

    ``state`` may be a ReceptionState or a WantMatrix. In ``expected`` mode a
    user's decode counts with weight 1 - eps (the coded packet must also
    arrive); in ``optimistic`` mode every decode counts 1. Ties go to the
    smallest set, then the lexicographically smallest index tuple.
    """
    if isinstance(state, WantMatrix):
        missing, users = state.missing, state.users
    else:
        missing, users = ~state.has, np.arange(state.n)
    n, m = missing.shape
    if m > ORACLE_MAX_PACKETS:
        raise ConfigurationError(f"exhaustive search limited to M <= {ORACLE_MAX_PACKETS}, got {m}")
    if mode == "expected":
        if profile is None:
            raise ConfigurationError("expected mode needs an erasure profile")
        w = 1.0 - profile.rates[users]
    elif mode == "optimistic":
        w = np.ones(n)
    else:
        raise ConfigurationError(f"unknown oracle mode {mode!r}")

    bits = np.int64(1) << np.arange(m, dtype=np.int64)
    user_masks = (missing.astype(np.int64) * bits).sum(axis=1)
    masks, inverse = np.unique(user_masks, return_inverse=True)
    mask_w = np.bincount(inverse.reshape(-1), weights=w, minlength=masks.size)

    subsets = np.arange(1, 1 << m, dtype=np.int64)
    scores = np.zeros(subsets.size)
    for mask, weight in zip(masks, mask_w):
        if mask == 0 or weight == 0.0:
            continue
        scores += weight * (_popcount(subsets & mask) == 1)

    top = scores.max()
    tied = subsets[scores == top]
    sizes = _popcount(tied)
    tied = tied[sizes == sizes.min()]
    best = min(_subset_tuple(int(s)) for s in tied)
    return OracleResult(CodedPacket(best), float(top))
