"""Scenario runner: simulate broadcasts, run an encoder, aggregate gains.

Every replication seeds its own generators from ``(base_seed, rep)``, with
independent streams for the channel, the feedback round, the encoder's own
randomness and coded-packet delivery. Two encoders run on the same config
and replication therefore see identical erasure rates, initial losses,
feedback samples and per-round reception draws.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
import logging
import time

import numpy as np

from ridnc.baselines import (
    ORACLE_MAX_PACKETS,
    WantMatrix,
    brute_force_best_code,
    crowdwifi_encode,
    optimal_ridnc_degree,
)
from ridnc.channel import (
    ErasureProfile,
    collect_feedback_by_id,
    collect_feedback_by_prob,
    deliver_coded,
    run_initial_phase,
    sample_erasure_profile,
)
from ridnc.combinatorics import MAX_PACKETS, ConfigurationError, build_pi_matrix
from ridnc.race import (
    OpCounter,
    belief_from_feedback,
    build_coded_packet,
    estimate_degree_first,
    histogram_from_feedback,
    plan_degrees,
)

log = logging.getLogger(__name__)

ENCODERS = ("race", "optimal-ridnc", "crowdwifi", "oracle")
FEEDBACK_MODES = ("by-id", "by-prob")
ORACLE_MODES = ("expected", "optimistic")
SWEEP_AXES = ("n_users", "feedback_count", "feedback_prob")


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulated experiment.

    ``feedback`` is a user count for ``by-id`` (``None`` asks every user) or
    a reply probability for ``by-prob``. ``eps_fixed`` overrides the sampled
    erasure rates with a constant. Wall-clock timing is off unless
    ``measure_time`` is set, so that reports are reproducible byte for byte.
    """

    n_users: int
    m_packets: int
    eps_max: float
    coded_budget: int = 1
    feedback_mode: str = "by-id"
    feedback: float = None
    encoder: str = "race"
    replications: int = 1000
    base_seed: int = 0
    oracle_mode: str = "expected"
    include_reception: bool = True
    eps_fixed: float = None
    measure_time: bool = False
    workers: int = 1
    scenario: str = "run"

    def check(self):
        def bad(name, why):
            raise ConfigurationError(f"{name}={getattr(self, name)!r}: {why}")

        for name in ("n_users", "m_packets", "coded_budget", "replications", "workers"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool) or value < 1:
                bad(name, "must be a positive integer")
        if self.m_packets > MAX_PACKETS:
            bad("m_packets", f"must be <= {MAX_PACKETS}")
        if not isinstance(self.eps_max, (int, float)) or not 0.0 < self.eps_max <= 1.0:
            bad("eps_max", "must lie in (0, 1]")
        if self.eps_fixed is not None and not 0.0 <= self.eps_fixed <= 1.0:
            bad("eps_fixed", "must lie in [0, 1]")
        if self.feedback_mode not in FEEDBACK_MODES:
            bad("feedback_mode", f"must be one of {', '.join(FEEDBACK_MODES)}")
        if self.feedback_mode == "by-id":
            if self.feedback is not None:
                f = self.feedback
                if isinstance(f, bool) or not float(f).is_integer() or not 0 <= f <= self.n_users:
                    bad("feedback", "by-id feedback must be a whole user count in [0, n_users]")
        else:
            if self.feedback is None or not 0.0 <= self.feedback <= 1.0:
                bad("feedback", "by-prob feedback must be a probability in [0, 1]")
        if self.encoder not in ENCODERS:
            bad("encoder", f"must be one of {', '.join(ENCODERS)}")
        if self.oracle_mode not in ORACLE_MODES:
            bad("oracle_mode", f"must be one of {', '.join(ORACLE_MODES)}")
        if self.encoder == "oracle" and self.m_packets > ORACLE_MAX_PACKETS:
            bad("m_packets", f"oracle encoder needs m_packets <= {ORACLE_MAX_PACKETS}")
        if not isinstance(self.base_seed, (int, np.integer)) or self.base_seed < 0:
            bad("base_seed", "must be a non-negative integer")
        return self

    @property
    def feedback_value(self):
        """The ``feedback`` column: request count, or probability."""
        if self.feedback_mode == "by-id":
            return self.n_users if self.feedback is None else int(self.feedback)
        return float(self.feedback)


@dataclass
class GainReport:
    """Aggregate outcome of one scenario. The first thirteen fields are the
    serialized columns; the rest are in-memory diagnostics."""

    scenario: str
    encoder: str
    n_users: int
    m_packets: int
    eps_max: float
    coded_budget: int
    feedback: float
    replications: int
    seed: int
    gain_percent: float
    recovered_total: int
    encoder_ns_mean: float
    encoder_ops_mean: float
    gain_stderr: float = field(default=0.0, compare=False)
    feedback_received: float = field(default=0.0, compare=False)
    per_round_degrees: list = field(default_factory=list, compare=False)

    @property
    def users_total(self) -> int:
        return self.n_users * self.replications


REPORT_COLUMNS = tuple(f.name for f in fields(GainReport))[:13]


@dataclass
class _Outcome:
    recovered: int
    feedback_received: int
    degrees: list
    encoder_ns: int
    encoder_ops: int


class _Replication:
    """Channel realization shared by every encoder/feedback setting that is
    run on the same ``(base_seed, rep)``."""

    def __init__(self, cfg: ScenarioConfig, rep: int):
        seq = np.random.SeedSequence(cfg.base_seed, spawn_key=(rep,))
        chan_seq, self.fb_seq, self.enc_seq, self.dlv_seq = seq.spawn(4)
        chan = np.random.default_rng(chan_seq)
        if cfg.eps_fixed is None:
            self.profile = sample_erasure_profile(cfg.n_users, cfg.eps_max, chan)
        else:
            self.profile = ErasureProfile.constant(cfg.n_users, cfg.eps_fixed)
        self.state = run_initial_phase(self.profile, cfg.m_packets, chan)

    def feedback(self, cfg):
        rng = np.random.default_rng(self.fb_seq)
        if cfg.feedback_mode == "by-prob":
            return collect_feedback_by_prob(self.state, cfg.feedback, self.profile, rng)
        # a prefix of one fixed permutation, so smaller samples nest in larger ones
        order = rng.permutation(self.state.n)
        return collect_feedback_by_id(self.state, order[: cfg.feedback_value], self.profile, rng)

    def run(self, cfg: ScenarioConfig) -> _Outcome:
        reports = self.feedback(cfg)
        enc_rng = np.random.default_rng(self.enc_seq)
        dlv_rng = np.random.default_rng(self.dlv_seq)
        return _ENCODER_RUNS[cfg.encoder](self, cfg, reports, enc_rng, dlv_rng)


def _clock(cfg):
    return time.perf_counter_ns() if cfg.measure_time else 0


def _run_race(repl, cfg, reports, enc_rng, dlv_rng):
    m = cfg.m_packets
    counter = OpCounter()
    t0 = _clock(cfg)
    belief = belief_from_feedback(reports, m)
    plan = plan_degrees(belief, cfg.coded_budget, counter)
    codes = [build_coded_packet(d, m, enc_rng) for d in plan.degrees]
    elapsed = _clock(cfg) - t0
    state, recovered = repl.state, 0
    for code in codes:
        state, got = deliver_coded(state, code, repl.profile, dlv_rng)
        recovered += got
    return _Outcome(recovered, len(reports), list(plan.degrees), elapsed, counter.ops)


def _run_optimal(repl, cfg, reports, enc_rng, dlv_rng):
    m = cfg.m_packets
    state, recovered, degrees, elapsed, ops = repl.state, 0, [], 0, 0
    for _ in range(cfg.coded_budget):
        t0 = _clock(cfg)
        d = optimal_ridnc_degree(state, repl.profile, cfg.include_reception)
        code = build_coded_packet(d, m, enc_rng)
        elapsed += _clock(cfg) - t0
        ops += state.n * m + m * (m + 1)
        state, got = deliver_coded(state, code, repl.profile, dlv_rng)
        recovered += got
        degrees.append(d)
    return _Outcome(recovered, len(reports), degrees, elapsed, ops)


def _run_crowdwifi(repl, cfg, reports, enc_rng, dlv_rng):
    # The encoder only sees the sampled users' want bitmaps. Between rounds it
    # assumes every sampled user able to decode its last code did so.
    wants = WantMatrix.from_state(repl.state, [u for u, _ in reports])
    missing = wants.missing.copy()
    counter = OpCounter()
    state, recovered, degrees, elapsed = repl.state, 0, [], 0
    for _ in range(cfg.coded_budget):
        t0 = _clock(cfg)
        code = crowdwifi_encode(missing, counter)
        elapsed += _clock(cfg) - t0
        idx = list(code.indices)
        sub = missing[:, idx]
        fixable = np.flatnonzero(sub.sum(axis=1) == 1)
        missing[fixable, np.asarray(idx)[sub[fixable].argmax(axis=1)]] = False
        state, got = deliver_coded(state, code, repl.profile, dlv_rng)
        recovered += got
        degrees.append(code.degree)
    return _Outcome(recovered, len(reports), degrees, elapsed, counter.ops)


def _run_oracle(repl, cfg, reports, enc_rng, dlv_rng):
    state, recovered, degrees, elapsed, ops = repl.state, 0, [], 0, 0
    for _ in range(cfg.coded_budget):
        t0 = _clock(cfg)
        best = brute_force_best_code(state, repl.profile, cfg.oracle_mode)
        elapsed += _clock(cfg) - t0
        ops += state.n * ((1 << cfg.m_packets) - 1)
        state, got = deliver_coded(state, best.best_set, repl.profile, dlv_rng)
        recovered += got
        degrees.append(best.best_set.degree)
    return _Outcome(recovered, len(reports), degrees, elapsed, ops)


_ENCODER_RUNS = {
    "race": _run_race,
    "optimal-ridnc": _run_optimal,
    "crowdwifi": _run_crowdwifi,
    "oracle": _run_oracle,
}


def _run_reps(cfg, reps):
    return [_Replication(cfg, rep).run(cfg) for rep in reps]


def _summarize(cfg, outcomes) -> GainReport:
    reps = len(outcomes)
    recovered = np.array([o.recovered for o in outcomes], dtype=np.int64)
    per_rep_gain = 100.0 * recovered / cfg.n_users
    total = int(recovered.sum())
    stderr = float(per_rep_gain.std(ddof=1) / np.sqrt(reps)) if reps > 1 else 0.0
    r = cfg.coded_budget
    degrees = np.array([o.degrees for o in outcomes], dtype=float).mean(axis=0).tolist()
    return GainReport(
        scenario=cfg.scenario,
        encoder=cfg.encoder,
        n_users=cfg.n_users,
        m_packets=cfg.m_packets,
        eps_max=cfg.eps_max,
        coded_budget=r,
        feedback=cfg.feedback_value,
        replications=reps,
        seed=cfg.base_seed,
        gain_percent=100.0 * total / (cfg.n_users * reps),
        recovered_total=total,
        encoder_ns_mean=float(np.mean([o.encoder_ns for o in outcomes])) / r,
        encoder_ops_mean=float(np.mean([o.encoder_ops for o in outcomes])) / r,
        gain_stderr=stderr,
        feedback_received=float(np.mean([o.feedback_received for o in outcomes])),
        per_round_degrees=degrees,
    )


def run_scenario(cfg: ScenarioConfig) -> GainReport:
    cfg.check()
    reps = range(cfg.replications)
    if cfg.workers > 1:
        chunks = [list(reps[i :: cfg.workers]) for i in range(cfg.workers)]
        with ProcessPoolExecutor(cfg.workers) as pool:
            parts = list(pool.map(_run_reps, [cfg] * len(chunks), chunks))
        by_rep = {rep: o for chunk, part in zip(chunks, parts) for rep, o in zip(chunk, part)}
        outcomes = [by_rep[rep] for rep in reps]
    else:
        outcomes = _run_reps(cfg, reps)
    return _summarize(cfg, outcomes)


def _axis_config(cfg, axis, value):
    if axis == "n_users":
        return replace(cfg, n_users=int(value))
    if axis == "feedback_count":
        return replace(cfg, feedback_mode="by-id", feedback=int(value))
    if axis == "feedback_prob":
        return replace(cfg, feedback_mode="by-prob", feedback=float(value))
    raise ConfigurationError(f"unknown sweep axis {axis!r}; expected one of {', '.join(SWEEP_AXES)}")


def sweep(cfg: ScenarioConfig, axis: str, values) -> list:
    """One report per axis value; all points share ``cfg.base_seed``."""
    configs = [_axis_config(cfg, axis, v).check() for v in values]
    if axis == "n_users":
        return [run_scenario(c) for c in configs]
    return feedback_curves(cfg, [cfg.encoder], configs)[cfg.encoder]


def feedback_curves(cfg: ScenarioConfig, encoders, configs) -> dict:
    """Run several encoders over configs differing only in feedback settings.

    Equivalent to calling ``run_scenario`` on every (encoder, config) pair,
    but each replication's channel is simulated once and shared.
    """
    for c in configs:
        if (c.n_users, c.m_packets, c.eps_max, c.eps_fixed, c.base_seed, c.replications) != (
            cfg.n_users, cfg.m_packets, cfg.eps_max, cfg.eps_fixed, cfg.base_seed, cfg.replications
        ):
            raise ConfigurationError("feedback_curves configs must share the channel settings")
    runs = {(e, i): [] for e in encoders for i in range(len(configs))}
    for rep in range(cfg.replications):
        repl = _Replication(cfg, rep)
        for i, c in enumerate(configs):
            for e in encoders:
                runs[e, i].append(repl.run(replace(c, encoder=e)))
    return {
        e: [_summarize(replace(c, encoder=e), runs[e, i]) for i, c in enumerate(configs)]
        for e in encoders
    }


def find_cross_point(cfg: ScenarioConfig, max_feedback: int, block: int = 16) -> int:
    """Smallest by-id feedback count F >= 1 at which CrowdWiFi's mean gain
    reaches RACE's at the same F, or ``max_feedback + 1`` if it never does.

    Counts are scanned in ascending blocks so the search can stop early
    while still sharing each replication's channel across a block.
    """
    cfg = replace(cfg, feedback_mode="by-id").check()
    start = 1
    while start <= max_feedback:
        values = range(start, min(start + block, max_feedback + 1))
        configs = [replace(cfg, feedback=f) for f in values]
        curves = feedback_curves(cfg, ["race", "crowdwifi"], configs)
        for f, race, crowd in zip(values, curves["race"], curves["crowdwifi"]):
            log.debug("F=%d race=%.3f crowdwifi=%.3f", f, race.gain_percent, crowd.gain_percent)
            if crowd.recovered_total >= race.recovered_total:
                return f
        start += block
    return max_feedback + 1


@dataclass
class SpeedupRow:
    feedback: int
    race_ns: float
    crowdwifi_ns: float
    runtime_ratio: float
    race_ops: float
    crowdwifi_ops: float


SPEEDUP_COLUMNS = tuple(f.name for f in fields(SpeedupRow))


def _best_ns(fn, loops, repeats=5):
    best = None
    for _ in range(repeats):
        t0 = time.perf_counter_ns()
        for _ in range(loops):
            fn()
        ns = (time.perf_counter_ns() - t0) / loops
        best = ns if best is None else min(best, ns)
    return best


def measure_speedup(cfg: ScenarioConfig, feedback_counts, loops: int = 20) -> list:
    """CrowdWiFi encode time over RACE degree-estimation time, per coded packet.

    Both encoders get the same feedback sample. Feedback transport, report
    ingestion and the one-off Pi precomputation are outside the timed region.
    """
    cfg = replace(cfg, feedback_mode="by-id").check()
    pi = build_pi_matrix(cfg.m_packets)
    rows = []
    for f in feedback_counts:
        if f < 1:
            raise ConfigurationError("speedup is undefined without feedback (F must be >= 1)")
        c = replace(cfg, feedback=int(f)).check()
        race_ns, crowd_ns, race_ops, crowd_ops = [], [], [], []
        for rep in range(c.replications):
            repl = _Replication(c, rep)
            reports = repl.feedback(c)
            hist = histogram_from_feedback(reports, c.m_packets)
            belief = belief_from_feedback(reports, c.m_packets)
            missing = WantMatrix.from_state(repl.state, [u for u, _ in reports]).missing

            if c.coded_budget == 1:
                def race_fn(counter=None):
                    return estimate_degree_first(pi, hist, counter)
            else:
                def race_fn(counter=None):
                    return plan_degrees(belief, c.coded_budget, counter)

            def crowd_fn(counter=None):
                return crowdwifi_encode(missing, counter)

            rc, cc = OpCounter(), OpCounter()
            race_fn(rc)
            crowd_fn(cc)
            race_ops.append(rc.ops / c.coded_budget)
            crowd_ops.append(cc.ops)
            race_ns.append(_best_ns(race_fn, loops) / c.coded_budget)
            crowd_ns.append(_best_ns(crowd_fn, loops))
        rn, cn = float(np.mean(race_ns)), float(np.mean(crowd_ns))
        rows.append(SpeedupRow(int(f), rn, cn, cn / rn, float(np.mean(race_ops)), float(np.mean(crowd_ops))))
    return rows
