"""The commit/unveil protocol: session state machine, the sender's
mismatch counting and intercept-frequency estimate, and the closed-form
security quantities with their Monte-Carlo experiments.

Commit: the sender draws a codeword c from the parity-b half of an agreed
(n,k,d) code, encodes each bit as a dual-rail photon and measures what
comes back; the receiver, per photon, either bypasses or intercepts (with
probability f) and resends.  Each intercepted photon is flagged in the
sender's check with probability epsilon, so she estimates the intercept
frequency as n'/(epsilon*n) and aborts when it reaches 1 - d/n.  Unveil:
she announces (b, c); the receiver checks codeword membership, the parity,
and agreement with every bit he learned while intercepting.

The high-trial experiments draw all randomness up front with numpy
generators (seed-split into fixed blocks, so results do not depend on the
thread count) and feed it to the counting kernels in `kernels`.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import codes as codes_mod
from . import kernels, optics, strategies
from .codes import LinearCode, parity, string_from_bits
from .optics import BeamSplitterParams, DetectionEvent, expected_event
from .strategies import BlindGuessOnTime, InterceptRecord, ResendStrategy
from .util import block_seed_sequences, block_slices

BYPASS = "bypass"
INTERCEPT = "intercept"

CONTINUE = "continue"
ABORT_CHEATING_BOB = "abort_cheating_bob"

ACCEPT = "accept"
REJECT_NOT_CODEWORD = "reject_not_codeword"
REJECT_PARITY = "reject_parity"
REJECT_INTERCEPT_MISMATCH = "reject_intercept_mismatch"


@dataclass(frozen=True)
class ProtocolParams:
    """Session parameters agreed before the commit phase.

    epsilon defaults to the closed-form strategy-family minimum at this R
    (the estimator must be computable by both parties up front).
    """

    code: LinearCode
    r: np.ndarray
    R: float
    f: float
    epsilon: float = None  # type: ignore[assignment]
    seed: int = 0
    symmetric_ok: bool = False

    def __post_init__(self):
        r = np.asarray(self.r, dtype=np.uint8)
        object.__setattr__(self, "r", r)
        if r.shape != (self.code.n,):
            raise ValueError(f"r must have length n={self.code.n}")
        if not r.any():
            raise ValueError("r must be nonzero")
        if not self.code.k < self.code.n:
            raise ValueError("protocol requires k < n")
        if not self.code.d < self.code.n:
            raise ValueError("protocol requires d < n")
        if not 0.0 <= self.f <= 1.0:
            raise ValueError("f must lie in [0,1]")
        if self.epsilon is None:
            object.__setattr__(self, "epsilon", strategies.protocol_epsilon(self.bs))
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in (0,1]")

    @property
    def bs(self) -> BeamSplitterParams:
        return BeamSplitterParams(R=self.R, symmetric_ok=self.symmetric_ok)

    @property
    def n(self) -> int:
        return self.code.n

    @property
    def threshold(self) -> float:
        """Abort bound on the estimated intercept frequency: 1 - d/n.
        Estimates at or above it count as cheating (the check is strict)."""
        return 1.0 - self.code.d / self.code.n


# --- policies ---------------------------------------------------------------

@dataclass(frozen=True)
class HonestAlice:
    bit: int


@dataclass(frozen=True)
class MidpointCheatAlice:
    """Commits a non-codeword halfway between a minimum-distance codeword
    pair, deferring the real choice to the unveil phase."""


@dataclass(frozen=True)
class FbsProbeAlice:
    """Commits honestly while (externally) probing the receiver's mode with
    one interference probe per photon; see the counterfactual module."""

    bit: int | None = None


AlicePolicy = HonestAlice | MidpointCheatAlice | FbsProbeAlice


@dataclass(frozen=True)
class HonestBob:
    f: float
    strategy: ResendStrategy = field(default_factory=BlindGuessOnTime)


@dataclass(frozen=True)
class FullInterceptBob:
    strategy: ResendStrategy = field(default_factory=BlindGuessOnTime)


@dataclass(frozen=True)
class PartialInterceptBob:
    m: int
    strategy: ResendStrategy = field(default_factory=BlindGuessOnTime)


BobPolicy = HonestBob | FullInterceptBob | PartialInterceptBob


@dataclass(frozen=True)
class Announcement:
    """The unveil message: claimed bit and codeword (possibly dishonest)."""

    b: int
    c: np.ndarray


@dataclass
class SessionTranscript:
    params: ProtocolParams
    committed_b: int | None
    codeword: np.ndarray           # the word actually encoded and sent
    modes: list[str]
    bob_records: list[InterceptRecord | None]
    alice_events: list[DetectionEvent]
    n_mismatch: int
    f_estimate: float
    alice_verdict: str
    cheat_target: np.ndarray | None = None


def _bob_modes(bob: BobPolicy, n: int, rng: np.random.Generator) -> list[str]:
    if isinstance(bob, HonestBob):
        return [INTERCEPT if rng.random() < bob.f else BYPASS for _ in range(n)]
    if isinstance(bob, FullInterceptBob):
        return [INTERCEPT] * n
    if isinstance(bob, PartialInterceptBob):
        if not 0 <= bob.m <= n:
            raise ValueError("intercept count m must lie in 0..n")
        chosen = set(rng.permutation(n)[: bob.m].tolist())
        return [INTERCEPT if i in chosen else BYPASS for i in range(n)]
    raise TypeError(f"unknown receiver policy {bob!r}")


def binding_pair(code: LinearCode, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(committed midpoint word, unveil target codeword) for the cheat.

    The pair is the zero codeword and a minimum-weight codeword, preferring
    one whose parity against r is 1 so the two endpoints commit opposite
    bits.  The target is the endpoint at distance ceil(d/2) from the
    midpoint.
    """
    words = code.codewords()
    weights = words.sum(axis=1)
    min_idx = np.flatnonzero(weights == code.d)
    pick = min_idx[0]
    for i in min_idx:
        if parity(words[i], r) == 1:
            pick = i
            break
    c_a = np.zeros(code.n, dtype=np.uint8)
    c_b = words[pick]
    mid = codes_mod.midpoint_word(c_a, c_b)
    return mid, c_a  # dist(mid, c_a) = ceil(d/2)


def run_commit(
    alice: AlicePolicy,
    bob: BobPolicy,
    params: ProtocolParams,
    rng: np.random.Generator,
) -> SessionTranscript:
    """Execute the commit phase photon by photon through the exact optics."""
    code, r, bs = params.code, params.r, params.bs
    cheat_target = None
    if isinstance(alice, (HonestAlice, FbsProbeAlice)):
        bit = alice.bit
        if bit is None:
            bit = int(rng.integers(2))
        word = codes_mod.sample_codeword(code, r, bit, rng)
        committed_b: int | None = bit
    elif isinstance(alice, MidpointCheatAlice):
        word, cheat_target = binding_pair(code, r)
        committed_b = None
    else:
        raise TypeError(f"unknown sender policy {alice!r}")

    strategy = getattr(bob, "strategy", None)
    modes = _bob_modes(bob, code.n, rng)
    honest_dists = {b: optics.detection_distribution(optics.encode(b, bs), bs) for b in (0, 1)}

    records: list[InterceptRecord | None] = []
    events: list[DetectionEvent] = []
    n_mismatch = 0
    for i in range(code.n):
        bit_i = int(word[i])
        if modes[i] == BYPASS:
            records.append(None)
            event = _sample_from(honest_dists[bit_i], rng)
        else:
            rec = strategies.apply_strategy(strategy, optics.encode(bit_i, bs), bs, rng)
            records.append(rec)
            event = optics.sample_detection(rec.resent, bs, rng)
        events.append(event)
        if event != expected_event(bit_i):
            n_mismatch += 1

    f_estimate = n_mismatch / (params.epsilon * code.n)
    verdict = CONTINUE if f_estimate < params.threshold else ABORT_CHEATING_BOB
    return SessionTranscript(
        params=params,
        committed_b=committed_b,
        codeword=word,
        modes=modes,
        bob_records=records,
        alice_events=events,
        n_mismatch=n_mismatch,
        f_estimate=f_estimate,
        alice_verdict=verdict,
        cheat_target=cheat_target,
    )


def _sample_from(dist: dict[DetectionEvent, float], rng) -> DetectionEvent:
    events = sorted(dist, key=lambda ev: (ev.detector is None, ev.detector, ev.bin))
    u = rng.random()
    acc = 0.0
    for ev in events:
        acc += dist[ev]
        if u < acc:
            return ev
    return events[-1]


def honest_announcement(transcript: SessionTranscript) -> Announcement:
    if transcript.committed_b is None:
        raise ValueError("cheating sender has no honest announcement")
    return Announcement(b=transcript.committed_b, c=transcript.codeword)


def run_unveil(transcript: SessionTranscript, announcement: Announcement) -> str:
    """The receiver's acceptance checks, in order: codeword membership,
    parity against r, agreement with every intercepted bit he learned."""
    code, r = transcript.params.code, transcript.params.r
    c = np.asarray(announcement.c, dtype=np.uint8)
    if c.shape != (code.n,):
        raise ValueError(f"announced codeword must have length {code.n}")
    if not code.contains(c):
        return REJECT_NOT_CODEWORD
    if parity(c, r) != announcement.b:
        return REJECT_PARITY
    for i, rec in enumerate(transcript.bob_records):
        if rec is not None and rec.learned_bit is not None:
            if rec.learned_bit != int(c[i]):
                return REJECT_INTERCEPT_MISMATCH
    return ACCEPT


# --- closed forms ------------------------------------------------------------

def intercept_posterior(f: float, epsilon: float) -> float:
    """Probability that a silently-passed position was in fact intercepted:
    (f - eps*f) / (1 - eps*f)."""
    if not 0.0 <= f <= 1.0 or not 0.0 <= epsilon <= 1.0:
        raise ValueError("f and epsilon must lie in [0,1]")
    if epsilon * f >= 1.0:
        raise ValueError("epsilon*f must be < 1")
    return (f - epsilon * f) / (1.0 - epsilon * f)


def escape_probability(p: float, flips: int) -> float:
    """(1-p)^flips: chance of altering `flips` silent positions unnoticed."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0,1]")
    if flips < 0:
        raise ValueError("flips must be >= 0")
    return (1.0 - p) ** flips


# --- Monte-Carlo experiments --------------------------------------------------

def _run_blocks(worker, trials: int, seed: int, threads: int):
    seqs = block_seed_sequences(seed, trials)
    slices = list(block_slices(trials))
    jobs = [(np.random.default_rng(sq), hi - lo) for sq, (lo, hi) in zip(seqs, slices)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda j: worker(*j), jobs))
    else:
        results = [worker(*j) for j in jobs]
    return results


def run_binding_experiment(
    params: ProtocolParams,
    trials: int,
    rng: np.random.Generator | None = None,
    threads: int = 1,
) -> dict:
    """The midpoint cheat, Monte Carlo.

    The cheater commits the midpoint of a minimum-distance codeword pair
    and unveils the endpoint ceil(d/2) flips away.  The receiver, playing
    honestly with intercept probability f, learns every intercepted bit
    exactly and flags each intercepted photon with probability epsilon
    (true of the default blind-guess resend).  The cheat is accepted iff
    no flipped position was intercepted; the closed-form prediction for
    the accept rate among trials where the cheater saw no mismatch on the
    flipped positions is (1-p)^flips with p the intercept posterior.
    """
    del rng  # randomness is derived from params.seed via fixed blocks
    mid, target = binding_pair(params.code, params.r)
    flip_idx = np.flatnonzero(mid != target).astype(np.int64)
    f, eps, n = params.f, params.epsilon, params.n
    threshold = params.threshold

    def worker(g: np.random.Generator, m: int):
        u_mode = g.random((m, n))
        u_mis = g.random((m, n))
        return kernels.binding_counts(u_mode, u_mis, f, eps, flip_idx, threshold)

    counts = sum(_run_blocks(worker, trials, params.seed, threads))
    proceed, proceed_accept, accept, abort = (int(x) for x in counts)
    p = intercept_posterior(f, eps)
    predicted = escape_probability(p, len(flip_idx))
    rate = proceed_accept / proceed if proceed else float("nan")
    # 3-sigma binomial half-width around the prediction, for reporting only
    sigma = math.sqrt(predicted * (1 - predicted) / proceed) if proceed else float("nan")
    return {
        "trials": trials,
        "committed_word": string_from_bits(mid),
        "target_codeword": string_from_bits(target),
        "flips": int(len(flip_idx)),
        "f": f,
        "epsilon": eps,
        "intercept_posterior": p,
        "predicted_escape": predicted,
        "proceed_trials": proceed,
        "accept_rate_among_proceed": rate,
        "accept_rate_unconditioned": accept / trials,
        "abort_frequency": abort / trials,
        "three_sigma": 3 * sigma,
    }


def run_concealing_experiment(
    params: ProtocolParams,
    m: int,
    trials: int,
    rng: np.random.Generator | None = None,
    threads: int = 1,
) -> dict:
    """Receiver intercepting exactly m random positions per session.

    Reports the sender's abort frequency and the receiver's exact parity
    posterior (codeword counting over his m learned bits), averaged over
    sessions with a uniformly random committed bit and codeword.
    """
    del rng
    code, r = params.code, params.r
    if not 0 <= m <= code.n:
        raise ValueError("m must lie in 0..n")
    words = code.codewords()
    parities = codes_mod.coset_parities(code, r)
    idx_by_parity = [np.flatnonzero(parities == b) for b in (0, 1)]
    if any(len(ix) == 0 for ix in idx_by_parity):
        raise ValueError("committed subset empty; choose different r")
    eps, n, threshold = params.epsilon, code.n, params.threshold

    def worker(g: np.random.Generator, count: int):
        b = g.integers(2, size=count)
        pick0 = g.integers(len(idx_by_parity[0]), size=count)
        pick1 = g.integers(len(idx_by_parity[1]), size=count)
        cw_idx = np.where(b == 1, idx_by_parity[1][pick1], idx_by_parity[0][pick0])
        order = np.argsort(g.random((count, n)), axis=1, kind="stable")
        intercept = np.zeros((count, n), dtype=bool)
        rows = np.repeat(np.arange(count), m)
        intercept[rows, order[:, :m].ravel()] = True
        u_mis = g.random((count, n))
        return kernels.concealing_stats(
            words, parities, cw_idx.astype(np.int64), intercept, u_mis, eps, threshold
        )

    stats = sum(_run_blocks(worker, trials, params.seed, threads))
    return {
        "trials": trials,
        "m": m,
        "f_effective": m / n,
        "epsilon": eps,
        "abort_frequency": float(stats[0]) / trials,
        "mean_posterior_true_bit": float(stats[1]) / trials,
        "mean_max_posterior": float(stats[2]) / trials,
    }


def sample_intercept_posterior(
    f: float, epsilon: float, samples: int, rng: np.random.Generator
) -> dict:
    """Monte-Carlo oracle for the intercept posterior: the empirical
    frequency of interception among positions that showed no mismatch."""
    u_mode = rng.random(samples)
    u_mis = rng.random(samples)
    intercept = u_mode < f
    silent = ~(intercept & (u_mis < epsilon))
    n_silent = int(silent.sum())
    hits = int((intercept & silent).sum())
    predicted = intercept_posterior(f, epsilon)
    sigma = math.sqrt(predicted * (1 - predicted) / n_silent) if n_silent else float("nan")
    return {
        "samples": samples,
        "silent_positions": n_silent,
        "empirical_posterior": hits / n_silent if n_silent else float("nan"),
        "predicted_posterior": predicted,
        "three_sigma": 3 * sigma,
    }


def efficiency_metrics(params: ProtocolParams, s_over_n: float = 10.0) -> dict:
    """Photon-count and duration comparison against the predecessor scheme
    that needed s >> n sending slots (duration in mode-switch time units)."""
    n, f = params.n, params.f
    s = s_over_n * n
    return {
        "n": n,
        "f": f,
        "s_over_n": s_over_n,
        "photons_current": n * f,
        "photons_prior": s * f,
        "duration_current": float(n),
        "duration_prior": float(s),
        "photon_ratio": s_over_n,
        "duration_ratio": s_over_n,
    }


# --- serialization ------------------------------------------------------------

def event_to_dict(ev: DetectionEvent) -> dict:
    return {"detector": ev.detector, "bin": ev.bin}


def transcript_to_dict(transcript: SessionTranscript) -> dict:
    p = transcript.params
    return {
        "params": {
            "n": p.code.n,
            "k": p.code.k,
            "d": p.code.d,
            "r": string_from_bits(p.r),
            "R": p.R,
            "f": p.f,
            "epsilon": p.epsilon,
            "seed": p.seed,
        },
        "committed_b": transcript.committed_b,
        "codeword": string_from_bits(transcript.codeword),
        "modes": transcript.modes,
        "learned_bits": [
            None if rec is None else rec.learned_bit for rec in transcript.bob_records
        ],
        "events": [event_to_dict(ev) for ev in transcript.alice_events],
        "n_mismatch": transcript.n_mismatch,
        "f_estimate": transcript.f_estimate,
        "alice_verdict": transcript.alice_verdict,
        "cheat_target": None
        if transcript.cheat_target is None
        else string_from_bits(transcript.cheat_target),
    }
