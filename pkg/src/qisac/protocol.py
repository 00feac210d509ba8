"""The six-step integrated sensing/communication protocol and the two-step baseline.

A run is a pure function of (config, message): one ``numpy`` generator
seeded from the config drives every random choice in a fixed stage order,
so identical inputs give byte-identical transcripts.

Stages of the integrated protocol:

1. pair generation and role assignment,
2. first checking round (product-basis measurements on a random subset),
3. encode-and-sense on the message pairs with the single/multi-pass split,
4. second checking round (random frame operators, Bell measurement),
5. final measurement with a randomly chosen observable per pair,
6. bit decoding by detector parity.

The two-step baseline reuses the same machinery with all four frame
operators as dense-coding encoders and Bell-measurement decoding.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .channel import (
    Adversary,
    BASIS_VECTORS,
    CHECK_BASES,
    DOUBLE_CNOT_FIRST,
    DOUBLE_CNOT_SECOND,
    collective_pauli_weights,
    depolarize,
    joint_outcome_probs,
    pauli_channel,
)
from .linalg import embed, partial_trace, projector, tensor
from .states import (
    BellState,
    FRAME_TAGS,
    FRAME_TO_BELL,
    bell,
    detector_distribution,
    encoding_unitary,
    pauli_frame_unitary,
    phase_unitary,
)

DEFAULT_QBER_THRESHOLD_1 = 0.079
# Round 2 compares full Bell states after both qubits traversed the channel,
# where honest depolarizing noise with check QBER e produces a mismatch rate
# of 3e(1-e); the default admits exactly the noise the round-1 threshold does.
DEFAULT_QBER_THRESHOLD_2 = 3.0 * 0.079 * (1.0 - 0.079)
TRIPWIRE_SIGMA = 5.0


@dataclass(frozen=True)
class ProtocolConfig:
    """Run parameters of one protocol execution."""

    m: int
    p_e: float
    theta_true: float
    n_passes: int = 1
    p_o: float = 0.5
    single_pass_fraction: float = 0.1
    noise_e: float = 0.0
    adversary: Adversary = field(default_factory=Adversary.none)
    qber_threshold_1: float = DEFAULT_QBER_THRESHOLD_1
    qber_threshold_2: float = DEFAULT_QBER_THRESHOLD_2
    guard_delta: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m!r}")
        if not 0.0 < self.p_e < 1.0:
            raise ValueError(f"p_e must be in (0, 1), got {self.p_e!r}")
        if not np.isfinite(self.theta_true):
            raise ValueError(f"theta_true must be finite, got {self.theta_true!r}")
        if self.n_passes < 1:
            raise ValueError(f"n_passes must be >= 1, got {self.n_passes!r}")
        if not 0.0 <= self.p_o <= 1.0:
            raise ValueError(f"p_o must be in [0, 1], got {self.p_o!r}")
        if not 0.0 <= self.single_pass_fraction <= 1.0:
            raise ValueError(
                f"single_pass_fraction must be in [0, 1], got {self.single_pass_fraction!r}")
        if not 0.0 <= self.noise_e <= 0.5:
            raise ValueError(f"noise_e must be in [0, 1/2], got {self.noise_e!r}")
        for name in ("qber_threshold_1", "qber_threshold_2"):
            thr = getattr(self, name)
            if not 0.0 <= thr <= 0.5:
                raise ValueError(f"{name} must be in [0, 1/2], got {thr!r}")

    def partition(self) -> tuple[int, int, int]:
        """(check1, check2, message) pair counts; remainders go to message pairs."""
        # epsilon guards against 0.2 * 320 / 2 evaluating to 31.999...
        n_check = int(np.floor((1.0 - self.p_e) * self.m / 2.0 + 1e-9))
        return n_check, n_check, self.m - 2 * n_check

    def as_dict(self) -> dict:
        out = {
            "m": self.m, "p_e": self.p_e, "theta_true": self.theta_true,
            "n_passes": self.n_passes, "p_o": self.p_o,
            "single_pass_fraction": self.single_pass_fraction,
            "noise_e": self.noise_e,
            "adversary": self.adversary.kind,
            "qber_threshold_1": self.qber_threshold_1,
            "qber_threshold_2": self.qber_threshold_2,
            "guard_delta": self.guard_delta, "seed": self.seed,
        }
        if self.adversary.kind == "collective":
            out["adversary_lambdas"] = list(self.adversary.lambdas)
        if self.adversary.kind == "intercept_resend":
            out["adversary_intercepts"] = self.adversary.intercept_count
        return out


@dataclass
class PairRecord:
    """What happened to one EPR pair."""

    index: int
    role: str
    passes: int = 0
    observable: str = ""
    detector: int = 0
    decoded_bit: int = -1
    true_bit: int = -1
    basis: str = ""
    frame: str = ""
    alice: int = 0
    bob: int = 0

    def to_line(self) -> str:
        return f"{self.index},{self.role},{self.passes},{self.observable or '-'}," \
               f"{self.detector},{self.decoded_bit}"


@dataclass(frozen=True)
class Round1Result:
    eps_x: float
    eps_y: float
    eps_z: float
    pooled: float
    n_checked: int
    passed: bool
    tripwire: bool


@dataclass(frozen=True)
class Round2Result:
    qber: float
    n_checked: int
    passed: bool


@dataclass
class Transcript:
    """Complete record of one protocol run."""

    config: dict
    records: list
    eps_x: float = 0.0
    eps_y: float = 0.0
    eps_z: float = 0.0
    qber1_pooled: float = 0.0
    qber2: float | None = None
    aborted: bool = False
    abort_stage: int = 0
    tripwire: bool = False
    counts: dict = field(default_factory=dict)
    decoded_bits: list = field(default_factory=list)
    n_check1: int = 0
    n_check2: int = 0
    n_message: int = 0

    def record_lines(self) -> list[str]:
        return [r.to_line() for r in self.records]

    def summary_dict(self) -> dict:
        return {
            "config": self.config,
            "eps_x": self.eps_x, "eps_y": self.eps_y, "eps_z": self.eps_z,
            "qber1_pooled": self.qber1_pooled,
            "qber2": self.qber2,
            "aborted": self.aborted,
            "abort_stage": self.abort_stage,
            "tripwire": self.tripwire,
            "n_check1": self.n_check1, "n_check2": self.n_check2,
            "n_message": self.n_message,
            "counts": {f"{obs}_{group}": [int(x) for x in arr]
                       for (obs, group), arr in sorted(self.counts.items())},
        }

    def write_records(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("index,role,passes,observable,detector,bit\n")
            for line in self.record_lines():
                fh.write(line + "\n")

    def write_summary(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.summary_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def decode_bit(observable: str, detector: int) -> int:
    """Detector parity decoding: detectors 3 and 4 carry bit 0, 1 and 2 bit 1."""
    if observable not in ("O1", "O2"):
        raise ValueError(f"unknown observable {observable!r}")
    if detector not in (1, 2, 3, 4):
        raise ValueError(f"detector must be 1..4, got {detector!r}")
    return 0 if detector >= 3 else 1


def round1_check(samples, threshold: float,
                 tripwire_sigma: float = TRIPWIRE_SIGMA) -> Round1Result:
    """Evaluate the first checking round from (basis, alice, bob) outcome triples.

    An error is a pair of *equal* outcomes (ideal pairs anti-correlate in
    every basis).  Besides the pooled-QBER threshold, the round aborts when
    the x/y error rates exceed the z rate by more than ``tripwire_sigma``
    standard errors of the basis difference, the signature of the
    double-CNOT attack.  The difference eps_xy - eps_z over ~n/3 samples
    per basis fluctuates with variance 6 p(1-p)/n, not the pooled p(1-p)/n.
    """
    errors = {b: 0 for b in CHECK_BASES}
    totals = {b: 0 for b in CHECK_BASES}
    for basis, alice, bob in samples:
        totals[basis] += 1
        if alice == bob:
            errors[basis] += 1
    n = sum(totals.values())
    eps = {b: (errors[b] / totals[b] if totals[b] else 0.0) for b in CHECK_BASES}
    pooled = (sum(errors.values()) / n) if n else 0.0
    se_diff = np.sqrt(6.0 * pooled * (1.0 - pooled) / n) if n else 0.0
    tripwire = bool(max(eps["x"], eps["y"]) > eps["z"] + tripwire_sigma * se_diff)
    passed = pooled <= threshold and not tripwire
    return Round1Result(eps_x=eps["x"], eps_y=eps["y"], eps_z=eps["z"],
                        pooled=pooled, n_checked=n, passed=passed, tripwire=tripwire)


def round2_check(n_errors: int, n_samples: int, threshold: float) -> Round2Result:
    """Evaluate the second checking round from Bell-measurement mismatches."""
    qber = (n_errors / n_samples) if n_samples else 0.0
    return Round2Result(qber=qber, n_checked=n_samples, passed=qber <= threshold)


# ---------------------------------------------------------------------------
# Pair-state evolution helpers
# ---------------------------------------------------------------------------

_BELL_PROJECTORS = [projector(bell(lbl)) for lbl in BellState]


def _transit1_common(config: ProtocolConfig):
    """Shared pair state after the first transmission (dims list, density matrix)."""
    rho = depolarize(projector(bell(BellState.PSI_MINUS)), 2.0 * config.noise_e, qubit=1)
    adv = config.adversary
    if adv.kind == "collective":
        rho = pauli_channel(rho, collective_pauli_weights(adv.lambdas), qubit=1)
        return [2, 2], rho
    if adv.kind == "double_cnot":
        eve0 = projector(np.array([1, 0], dtype=complex))
        joint = tensor(rho, eve0)
        joint = DOUBLE_CNOT_FIRST @ joint @ DOUBLE_CNOT_FIRST.conj().T
        return [2, 2, 2], joint
    return [2, 2], rho


def _intercept_collapse(rho: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Eve measures qubit B in a random check basis and resends the eigenstate."""
    basis = CHECK_BASES[rng.integers(3)]
    vecs = BASIS_VECTORS[basis]
    proj_plus = embed(projector(vecs[0]), [2, 2], 1)
    p_plus = float(np.trace(proj_plus @ rho).real)
    pick = 0 if rng.random() < p_plus else 1
    proj_pick = embed(projector(vecs[pick]), [2, 2], 1)
    collapsed = proj_pick @ rho @ proj_pick
    return collapsed / np.trace(collapsed).real


def _transit2(rho: np.ndarray, dims: list[int], op_a: np.ndarray,
              config: ProtocolConfig) -> tuple[np.ndarray, list[int]]:
    """Apply Alice's operation on qubit A, then the return-channel effects."""
    full = embed(op_a, dims, 0)
    rho = full @ rho @ full.conj().T
    rho = depolarize(rho, 2.0 * config.noise_e, qubit=0, dims=dims)
    adv = config.adversary
    if adv.kind == "collective":
        rho = pauli_channel(rho, collective_pauli_weights(adv.lambdas), qubit=0, dims=dims)
    elif adv.kind == "double_cnot":
        rho = DOUBLE_CNOT_SECOND @ rho @ DOUBLE_CNOT_SECOND.conj().T
    return rho, dims


def _to_pair(rho: np.ndarray, dims: list[int]) -> np.ndarray:
    """Reduce to the AB pair, tracing out any eavesdropper register."""
    if len(dims) == 2:
        return rho
    return partial_trace(rho, dims, keep=[0, 1])


def _bell_probs(rho_ab: np.ndarray) -> np.ndarray:
    probs = np.array([np.trace(p @ rho_ab).real for p in _BELL_PROJECTORS])
    probs = np.clip(probs, 0.0, None)
    return probs / probs.sum()


def _sample4(probs: np.ndarray, rng: np.random.Generator) -> int:
    return int(rng.choice(4, p=probs / probs.sum()))


# ---------------------------------------------------------------------------
# Protocol runs
# ---------------------------------------------------------------------------

def _assign_roles(config: ProtocolConfig, rng: np.random.Generator):
    n1, n2, _ = config.partition()
    perm = rng.permutation(config.m)
    check1 = set(int(i) for i in perm[:n1])
    check2 = set(int(i) for i in perm[n1:n1 + n2])
    return check1, check2


def _intercept_states(config: ProtocolConfig, rng: np.random.Generator,
                      rho_common: np.ndarray) -> dict[int, np.ndarray]:
    """Pair-specific transit-1 states for intercepted positions, in index order."""
    adv = config.adversary
    if adv.kind != "intercept_resend" or adv.intercept_count == 0:
        return {}
    k = min(adv.intercept_count, config.m)
    positions = sorted(int(i) for i in rng.choice(config.m, size=k, replace=False))
    return {i: _intercept_collapse(rho_common, rng) for i in positions}


def run_qisac(config: ProtocolConfig, message) -> Transcript:
    """Execute the full integrated protocol and return its transcript."""
    message = [int(b) for b in message]
    n1, n2, nm = config.partition()
    if len(message) != nm:
        raise ValueError(f"message must have {nm} bits for this partition, got {len(message)}")
    if any(b not in (0, 1) for b in message):
        raise ValueError("message bits must be 0 or 1")

    rng = np.random.default_rng(config.seed)
    check1_set, check2_set = _assign_roles(config, rng)
    dims1, rho_common = _transit1_common(config)
    special = _intercept_states(config, rng, rho_common)

    records = [PairRecord(index=i, role="message") for i in range(config.m)]
    for i in check1_set:
        records[i].role = "check1"
    for i in check2_set:
        records[i].role = "check2"

    transcript = Transcript(config=config.as_dict(), records=records,
                            n_check1=n1, n_check2=n2, n_message=nm)

    def pair_state(i: int) -> np.ndarray:
        return special.get(i, rho_common)

    # Stage: first checking round.
    samples = []
    for i in sorted(check1_set):
        basis = CHECK_BASES[rng.integers(3)]
        probs = joint_outcome_probs(_to_pair(pair_state(i), dims1), basis)
        pick = _sample4(probs.reshape(-1), rng)
        alice = +1 if pick // 2 == 0 else -1
        bob = +1 if pick % 2 == 0 else -1
        rec = records[i]
        rec.basis, rec.alice, rec.bob = basis, alice, bob
        samples.append((basis, alice, bob))
    r1 = round1_check(samples, config.qber_threshold_1)
    transcript.eps_x, transcript.eps_y, transcript.eps_z = r1.eps_x, r1.eps_y, r1.eps_z
    transcript.qber1_pooled = r1.pooled
    transcript.tripwire = r1.tripwire
    if not r1.passed:
        transcript.aborted = True
        transcript.abort_stage = 1
        return transcript

    # Stage: second checking round (random frame operators, no sensing).
    frame_cache: dict[str, np.ndarray] = {}
    n_err2 = 0
    for i in sorted(check2_set):
        tag = FRAME_TAGS[rng.integers(4)]
        rec = records[i]
        rec.frame = tag
        if i in special or tag not in frame_cache:
            rho2, dims2 = _transit2(pair_state(i), dims1, pauli_frame_unitary(tag), config)
            probs = _bell_probs(_to_pair(rho2, dims2))
            if i not in special:
                frame_cache[tag] = probs
        else:
            probs = frame_cache[tag]
        outcome = _sample4(probs, rng)
        rec.observable = "BELL"
        rec.detector = outcome + 1
        rec.decoded_bit = outcome
        if outcome != int(FRAME_TO_BELL[tag]):
            n_err2 += 1
    r2 = round2_check(n_err2, n2, config.qber_threshold_2)
    transcript.qber2 = r2.qber
    if not r2.passed:
        transcript.aborted = True
        transcript.abort_stage = 2
        return transcript

    # Stage: encode, sense, transmit and measure the message pairs.
    message_idx = sorted(set(range(config.m)) - check1_set - check2_set)
    n_single = int(np.floor(config.single_pass_fraction * nm))
    single_positions = set(
        int(i) for i in rng.choice(np.array(message_idx), size=n_single, replace=False)
    ) if n_single else set()

    sense_phase = config.theta_true + config.guard_delta
    dist_cache: dict[tuple[int, int, str], np.ndarray] = {}

    def message_dist(i: int, bit: int, passes: int, obs: str) -> np.ndarray:
        key = (bit, passes, obs)
        if i not in special and key in dist_cache:
            return dist_cache[key]
        op = phase_unitary(passes * sense_phase) @ encoding_unitary(bit)
        rho2, dims2 = _transit2(pair_state(i), dims1, op, config)
        dist = detector_distribution(_to_pair(rho2, dims2), obs)
        if i not in special:
            dist_cache[key] = dist
        return dist

    counts = {(obs, group): np.zeros(4, dtype=np.int64)
              for obs in ("O1", "O2") for group in ("single", "multi")}
    decoded = []
    for j, i in enumerate(message_idx):
        bit = message[j]
        passes = 1 if i in single_positions else config.n_passes
        obs = "O1" if rng.random() < config.p_o else "O2"
        dist = message_dist(i, bit, passes, obs)
        detector = _sample4(dist, rng) + 1
        bit_hat = decode_bit(obs, detector)
        rec = records[i]
        rec.passes = passes
        rec.observable = obs
        rec.detector = detector
        rec.decoded_bit = bit_hat
        rec.true_bit = bit
        group = "single" if i in single_positions else "multi"
        counts[(obs, group)][detector - 1] += 1
        decoded.append(bit_hat)

    transcript.counts = {k: v for k, v in counts.items() if v.sum() > 0}
    transcript.decoded_bits = decoded
    return transcript


def run_twostep_baseline(config: ProtocolConfig, symbols) -> Transcript:
    """Dense-coding two-step baseline: two bits per pair, Bell-measurement decoding.

    ``symbols`` are integers 0..3 (the two-bit messages); the second-round
    sample pairs carry random frame operators exactly as in the integrated
    protocol, and no pair senses a phase.
    """
    symbols = [int(s) for s in symbols]
    n1, n2, nm = config.partition()
    if len(symbols) != nm:
        raise ValueError(f"message must have {nm} symbols for this partition, got {len(symbols)}")
    if any(s not in (0, 1, 2, 3) for s in symbols):
        raise ValueError("symbols must be in 0..3")

    rng = np.random.default_rng(config.seed)
    check1_set, check2_set = _assign_roles(config, rng)
    dims1, rho_common = _transit1_common(config)
    special = _intercept_states(config, rng, rho_common)

    records = [PairRecord(index=i, role="message") for i in range(config.m)]
    for i in check1_set:
        records[i].role = "check1"
    for i in check2_set:
        records[i].role = "check2"
    transcript = Transcript(config=config.as_dict(), records=records,
                            n_check1=n1, n_check2=n2, n_message=nm)

    def pair_state(i: int) -> np.ndarray:
        return special.get(i, rho_common)

    samples = []
    for i in sorted(check1_set):
        basis = CHECK_BASES[rng.integers(3)]
        probs = joint_outcome_probs(_to_pair(pair_state(i), dims1), basis)
        pick = _sample4(probs.reshape(-1), rng)
        alice = +1 if pick // 2 == 0 else -1
        bob = +1 if pick % 2 == 0 else -1
        rec = records[i]
        rec.basis, rec.alice, rec.bob = basis, alice, bob
        samples.append((basis, alice, bob))
    r1 = round1_check(samples, config.qber_threshold_1)
    transcript.eps_x, transcript.eps_y, transcript.eps_z = r1.eps_x, r1.eps_y, r1.eps_z
    transcript.qber1_pooled = r1.pooled
    transcript.tripwire = r1.tripwire
    if not r1.passed:
        transcript.aborted = True
        transcript.abort_stage = 1
        return transcript

    frame_cache: dict[str, np.ndarray] = {}

    def bell_dist(i: int, tag: str) -> np.ndarray:
        if i not in special and tag in frame_cache:
            return frame_cache[tag]
        rho2, dims2 = _transit2(pair_state(i), dims1, pauli_frame_unitary(tag), config)
        probs = _bell_probs(_to_pair(rho2, dims2))
        if i not in special:
            frame_cache[tag] = probs
        return probs

    n_err2 = 0
    for i in sorted(check2_set):
        tag = FRAME_TAGS[rng.integers(4)]
        outcome = _sample4(bell_dist(i, tag), rng)
        rec = records[i]
        rec.frame = tag
        rec.observable = "BELL"
        rec.detector = outcome + 1
        rec.decoded_bit = outcome
        if outcome != int(FRAME_TO_BELL[tag]):
            n_err2 += 1
    r2 = round2_check(n_err2, n2, config.qber_threshold_2)
    transcript.qber2 = r2.qber
    if not r2.passed:
        transcript.aborted = True
        transcript.abort_stage = 2
        return transcript

    message_idx = sorted(set(range(config.m)) - check1_set - check2_set)
    outcome_counts = np.zeros(4, dtype=np.int64)
    decoded = []
    for j, i in enumerate(message_idx):
        tag = FRAME_TAGS[symbols[j]]
        outcome = _sample4(bell_dist(i, tag), rng)
        rec = records[i]
        rec.frame = tag
        rec.observable = "BELL"
        rec.detector = outcome + 1
        rec.decoded_bit = outcome
        rec.true_bit = symbols[j]
        outcome_counts[outcome] += 1
        decoded.append(outcome)
    transcript.counts = {("BELL", "message"): outcome_counts}
    transcript.decoded_bits = decoded
    return transcript
