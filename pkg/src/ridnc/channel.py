"""Packet-erasure broadcast channel with instant (XOR) decoding at receivers.

Packets are tracked symbolically: a receiver holds a boolean row over the
M packet indices and a coded packet is just the set of indices XORed
together. A receiver decodes a coded packet iff it arrives and exactly one
of its indices is missing; otherwise the packet is dropped.
"""

from dataclasses import dataclass

import numpy as np

from ridnc.combinatorics import ConfigurationError


@dataclass(frozen=True, eq=False)
class ErasureProfile:
    rates: np.ndarray

    def __post_init__(self):
        rates = np.asarray(self.rates, dtype=float)
        if rates.ndim != 1:
            raise ConfigurationError("erasure rates must be a 1-d vector")
        if rates.size and (rates.min() < 0.0 or rates.max() > 1.0):
            raise ConfigurationError("erasure rates must lie in [0, 1]")
        object.__setattr__(self, "rates", rates)

    @property
    def n(self) -> int:
        return self.rates.size

    @classmethod
    def constant(cls, n: int, eps: float) -> "ErasureProfile":
        return cls(np.full(n, float(eps)))


@dataclass(eq=False)
class ReceptionState:
    """``has[u, p]`` is True iff user ``u`` currently holds packet ``p``."""

    has: np.ndarray

    def __post_init__(self):
        self.has = np.asarray(self.has, dtype=bool)
        if self.has.ndim != 2:
            raise ConfigurationError("reception state must be an N x M matrix")

    @property
    def n(self) -> int:
        return self.has.shape[0]

    @property
    def m(self) -> int:
        return self.has.shape[1]

    def held_counts(self) -> np.ndarray:
        return self.has.sum(axis=1)

    def popcount(self) -> int:
        return int(self.has.sum())

    def missing(self) -> np.ndarray:
        return ~self.has

    def copy(self) -> "ReceptionState":
        return ReceptionState(self.has.copy())


@dataclass(frozen=True)
class CodedPacket:
    indices: tuple

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if not idx:
            raise ConfigurationError("a coded packet needs at least one index")
        if len(set(idx)) != len(idx):
            raise ConfigurationError(f"duplicate indices in coded packet {idx}")
        if min(idx) < 0:
            raise ConfigurationError(f"negative packet index in {idx}")
        object.__setattr__(self, "indices", tuple(sorted(idx)))

    @property
    def degree(self) -> int:
        return len(self.indices)


def sample_erasure_profile(n: int, eps_max: float, rng: np.random.Generator) -> ErasureProfile:
    """Independent rates drawn uniformly from (0, eps_max)."""
    if not 0.0 < eps_max <= 1.0:
        raise ConfigurationError(f"eps_max must lie in (0, 1], got {eps_max}")
    if n < 0:
        raise ConfigurationError(f"user count must be non-negative, got {n}")
    return ErasureProfile(rng.uniform(0.0, eps_max, size=n))


def run_initial_phase(profile: ErasureProfile, m: int, rng: np.random.Generator) -> ReceptionState:
    if m < 1:
        raise ConfigurationError(f"packet count must be >= 1, got {m}")
    draws = rng.random((profile.n, m))
    return ReceptionState(draws >= profile.rates[:, None])


def deliver_coded(state: ReceptionState, packet: CodedPacket, profile: ErasureProfile,
                  rng: np.random.Generator):
    """Broadcast one coded packet.

    Returns ``(new_state, recovered)``. The input state is left untouched.
    Exactly one uniform draw per user is consumed, so paired runs that
    deliver different codes still see the same reception pattern.
    """
    idx = np.asarray(packet.indices)
    if idx.max() >= state.m:
        raise ConfigurationError(f"coded packet {packet.indices} exceeds M={state.m}")
    arrived = rng.random(state.n) >= profile.rates
    sub_missing = ~state.has[:, idx]
    decodes = arrived & (sub_missing.sum(axis=1) == 1)
    new = state.copy()
    users = np.flatnonzero(decodes)
    if users.size:
        cols = idx[sub_missing[users].argmax(axis=1)]
        new.has[users, cols] = True
    return new, int(users.size)


def collect_feedback_by_id(state: ReceptionState, selected, profile: ErasureProfile,
                           rng: np.random.Generator):
    """Ask the users in ``selected`` (in order) for their held-packet count.

    Each reply is lost independently with the user's erasure rate and is
    not re-requested. Returns a list of ``(user_id, held_count)``.
    """
    selected = np.asarray(selected, dtype=int).reshape(-1)
    if selected.size == 0:
        return []
    if selected.min() < 0 or selected.max() >= state.n:
        raise ConfigurationError("selected user id outside [0, N)")
    delivered = rng.random(selected.size) >= profile.rates[selected]
    users = selected[delivered]
    counts = state.has[users].sum(axis=1)
    return [(int(u), int(c)) for u, c in zip(users, counts)]


def collect_feedback_by_prob(state: ReceptionState, p: float, profile: ErasureProfile,
                             rng: np.random.Generator):
    """Every user opts in with probability ``p``; replies are then lossy."""
    if not 0.0 <= p <= 1.0:
        raise ConfigurationError(f"reply probability must lie in [0, 1], got {p}")
    opt_in = rng.random(state.n) < p
    return collect_feedback_by_id(state, np.flatnonzero(opt_in), profile, rng)
