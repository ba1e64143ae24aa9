"""Alice/Bob state machine for the EPR-encrypted quantum dialogue.

One run is Step 1 (share N EPR pairs) followed by ``rounds`` repetitions of
Steps 2-5 that reuse the same key:

2. Alice prepares P_i in |m_i⟩ and encrypts it with CNOT(A_i -> P_i).
3. Bob decrypts with CNOT(B_i -> P_i), reads m_i in Z, re-prepares P_i and
   applies U_{k_i}.
4. Alice applies U_{r_i}, measures in Z and announces a_i = m_i ⊕ k_i ⊕ r_i.
5. Both rotate their key halves by R(θ).

Every quantum transmission carries decoys that are checked before the
protocol moves on; a failed check aborts the run.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .adversary import AttackModel, Eavesdropper
from .quantum import (
    PHI_PLUS,
    BASES,
    STATE_LABELS,
    Gate,
    Qubit,
    Register,
    Z_BASIS,
    basis_of,
    cnot,
    fresh_qubit,
    label_bit,
    mixed_fidelity,
    reduced_density,
)
from .stats import trial_rng

TRANSCRIPT_SCHEMA = "qdialogue.transcript"
TRANSCRIPT_VERSION = 1

ROLE_PAYLOAD = "payload"
ROLE_DECOY = "decoy"

PUBLIC = "public"
QUANTUM = "quantum"
LOCAL = "local"

DEFAULT_THETA = math.pi / 8
_ANGLE_TOL = 1e-9


@dataclass(frozen=True)
class DecoyPolicy:
    """How many decoys go into each transmission and when to abort.

    ``count`` fixes the number of decoys; otherwise it is
    ``max(minimum, ceil(fraction * N))``.  ``check=False`` turns decoys off
    entirely.
    """

    fraction: float = 0.25
    minimum: int = 8
    count: int | None = None
    threshold: float = 0.0
    check: bool = True

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("error threshold must lie in [0, 1]")
        if self.fraction < 0 or self.minimum < 0:
            raise ValueError("decoy fraction and minimum must be non-negative")
        if self.count is not None and self.count < 0:
            raise ValueError("decoy count must be non-negative")
        if self.check and self.decoys_for(1) < 1:
            raise ValueError("decoy checking is enabled but the policy yields no decoys")

    @classmethod
    def disabled(cls) -> "DecoyPolicy":
        return cls(count=0, check=False)

    def decoys_for(self, n_payload: int) -> int:
        if not self.check:
            return 0
        if self.count is not None:
            return self.count
        return max(self.minimum, math.ceil(self.fraction * n_payload))

    @classmethod
    def from_dict(cls, data: dict) -> "DecoyPolicy":
        unknown = set(data) - {"fraction", "minimum", "count", "threshold", "check"}
        if unknown:
            raise ValueError(f"unknown decoy policy fields: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return {
            "fraction": self.fraction,
            "minimum": self.minimum,
            "count": self.count,
            "threshold": self.threshold,
            "check": self.check,
        }


@dataclass(frozen=True)
class SecretMessage:
    bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise ValueError("message bits must be 0 or 1")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "SecretMessage":
        return cls(tuple(int(b) for b in rng.integers(0, 2, size=n)))

    def __len__(self):
        return len(self.bits)

    def __iter__(self):
        return iter(self.bits)

    def __getitem__(self, i):
        return self.bits[i]


@dataclass
class QuantumKey:
    """Shared EPR pairs: Alice holds ``alice[i]``, Bob holds ``bob[i]``."""

    alice: list[Qubit]
    bob: list[Qubit]
    alice_rotations: list[float] = field(default_factory=list)
    bob_rotations: list[float] = field(default_factory=list)
    round_counter: int = 0

    def __len__(self):
        return len(self.alice)

    def pair_fidelity(self, i: int) -> float:
        """Overlap of pair i with |Φ+⟩. Simulator-only diagnostic."""
        rho = reduced_density([self.alice[i], self.bob[i]])
        return mixed_fidelity(rho, PHI_PLUS)

    def fidelities(self) -> list[float]:
        return [self.pair_fidelity(i) for i in range(len(self))]


@dataclass(frozen=True)
class DecoyRecord:
    position: int
    label: str

    @property
    def basis(self) -> str:
        return basis_of(self.label).label


@dataclass(frozen=True)
class PhotonEntry:
    qubit: Qubit
    role: str


@dataclass
class PhotonSequence:
    entries: list[PhotonEntry]
    decoy_records: list[DecoyRecord] = field(default_factory=list)

    @classmethod
    def from_payload(cls, qubits: Sequence[Qubit]) -> "PhotonSequence":
        return cls([PhotonEntry(q, ROLE_PAYLOAD) for q in qubits])

    def __len__(self):
        return len(self.entries)

    def qubits(self) -> list[Qubit]:
        return [e.qubit for e in self.entries]

    def payload(self) -> list[Qubit]:
        return [e.qubit for e in self.entries if e.role == ROLE_PAYLOAD]

    def replaced(self, replacements: dict[int, Qubit]) -> "PhotonSequence":
        """Copy with the qubits at some positions swapped out."""
        if not replacements:
            return self
        entries = [
            PhotonEntry(replacements.get(i, e.qubit), e.role) for i, e in enumerate(self.entries)
        ]
        return PhotonSequence(entries, list(self.decoy_records))

    def strip_decoys(self) -> "PhotonSequence":
        return PhotonSequence.from_payload(self.payload())

    def validate(self, n_payload: int) -> None:
        positions = [r.position for r in self.decoy_records]
        if len(set(positions)) != len(positions):
            raise ValueError("decoy positions are not distinct")
        if any(not 0 <= p < len(self.entries) for p in positions):
            raise ValueError("decoy position out of bounds")
        if any(self.entries[p].role != ROLE_DECOY for p in positions):
            raise ValueError("decoy record points at a payload photon")
        if len(self.payload()) != n_payload:
            raise ValueError(f"expected {n_payload} payload photons, got {len(self.payload())}")


@dataclass
class TravelingPhotonRecord:
    index: int
    m: int
    bob_measured_m: int | None = None
    announced: int | None = None


@dataclass(frozen=True)
class Event:
    seq: int
    round: int
    step: str
    kind: str
    visibility: str
    data: dict

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "round": self.round,
            "step": self.step,
            "kind": self.kind,
            "visibility": self.visibility,
            "data": self.data,
        }


_STEP_ORDER = {"step1": 1, "step2": 2, "step3": 3, "step4": 4, "step5": 5}


@dataclass
class Transcript:
    config: dict
    seed: int | None = None
    events: list[Event] = field(default_factory=list)
    decoded_alice: list[list[int]] = field(default_factory=list)
    decoded_bob: list[list[int]] = field(default_factory=list)
    aborted: bool = False
    abort_step: str | None = None
    abort_round: int | None = None
    listeners: list[Callable[[Event], None]] = field(default_factory=list, repr=False)

    def record(self, round_index: int, step: str, kind: str, visibility: str = LOCAL, **data) -> Event:
        if self.events:
            last = self.events[-1]
            if (round_index, _STEP_ORDER[step]) < (last.round, _STEP_ORDER[last.step]):
                raise RuntimeError(f"event {kind} at {step} would break step ordering")
        event = Event(len(self.events), round_index, step, kind, visibility, data)
        self.events.append(event)
        if visibility == PUBLIC:
            for listener in self.listeners:
                listener(event)
        return event

    def abort(self, round_index: int, step: str, reason: str) -> None:
        self.record(round_index, step, "abort", PUBLIC, reason=reason)
        self.aborted = True
        self.abort_step = step
        self.abort_round = round_index
        self.decoded_alice.clear()
        self.decoded_bob.clear()

    def events_of(self, kind: str) -> list[Event]:
        return [e for e in self.events if e.kind == kind]

    def public_events(self) -> list[Event]:
        return [e for e in self.events if e.visibility == PUBLIC]

    @property
    def n_rounds(self) -> int:
        return max((e.round for e in self.events), default=0)

    def messages(self, kind: str) -> list[list[int]]:
        """True message bits per round: ``kind`` is 'alice' (r) or 'bob' (k)."""
        return [e.data["bits"] for e in self.events_of("encode") if e.data["party"] == kind]

    def photon_records(self, round_index: int) -> list[TravelingPhotonRecord]:
        prep = [e for e in self.events_of("prepare_traveling") if e.round == round_index]
        if not prep:
            return []
        records = [TravelingPhotonRecord(i, m) for i, m in enumerate(prep[0].data["m"])]
        for e in self.events:
            if e.round != round_index:
                continue
            if e.kind == "decrypt_measure":
                for rec, b in zip(records, e.data["bob_measured_m"]):
                    rec.bob_measured_m = b
            elif e.kind == "announce":
                for rec, a in zip(records, e.data["outcomes"]):
                    rec.announced = a
        return records

    def to_dict(self) -> dict:
        rounds: list[list[dict]] = [[] for _ in range(self.n_rounds + 1)]
        for e in self.events:
            rounds[e.round].append(e.to_dict())
        return {
            "schema": TRANSCRIPT_SCHEMA,
            "version": TRANSCRIPT_VERSION,
            "config": self.config,
            "seed": self.seed,
            "rounds": rounds,
            "decoded_alice": self.decoded_alice,
            "decoded_bob": self.decoded_bob,
            "aborted": self.aborted,
            "abort_step": self.abort_step,
            "abort_round": self.abort_round,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    @classmethod
    def from_dict(cls, data: dict) -> "Transcript":
        if data.get("schema") != TRANSCRIPT_SCHEMA:
            raise ValueError("not a transcript document")
        if data.get("version") != TRANSCRIPT_VERSION:
            raise ValueError(f"unsupported transcript version {data.get('version')}")
        events = [
            Event(e["seq"], e["round"], e["step"], e["kind"], e["visibility"], e["data"])
            for rnd in data["rounds"]
            for e in rnd
        ]
        return cls(
            config=data["config"],
            seed=data["seed"],
            events=events,
            decoded_alice=data["decoded_alice"],
            decoded_bob=data["decoded_bob"],
            aborted=data["aborted"],
            abort_step=data["abort_step"],
            abort_round=data.get("abort_round"),
        )

    @classmethod
    def from_json(cls, text: str) -> "Transcript":
        return cls.from_dict(json.loads(text))


class IdealChannel:
    """Noiseless channel with nobody listening."""

    def transmit(self, seq: PhotonSequence, step: str, round_index: int, rng: np.random.Generator):
        return seq

    def observe(self, event: Event) -> None:
        pass


# -- decoys -----------------------------------------------------------------


def insert_decoys(seq: PhotonSequence, policy: DecoyPolicy, rng: np.random.Generator, tag: str = "") -> PhotonSequence:
    """Mix uniformly random BB84 decoys into random distinct positions."""
    payload = seq.payload()
    d = policy.decoys_for(len(payload))
    if d == 0:
        return seq
    total = len(payload) + d
    positions = sorted(int(p) for p in rng.choice(total, size=d, replace=False))
    labels = [STATE_LABELS[int(j)] for j in rng.integers(0, 4, size=d)]
    decoy_at = dict(zip(positions, labels))
    entries, records = [], []
    it = iter(payload)
    for pos in range(total):
        if pos in decoy_at:
            label = decoy_at[pos]
            entries.append(PhotonEntry(fresh_qubit(f"D{tag}.{pos}", label), ROLE_DECOY))
            records.append(DecoyRecord(pos, label))
        else:
            entries.append(PhotonEntry(next(it), ROLE_PAYLOAD))
    return PhotonSequence(entries, records)


def measure_decoys(seq: PhotonSequence, reveal: Sequence[tuple[int, str]], rng: np.random.Generator) -> list[int]:
    """Receiver measures each revealed position in the announced basis."""
    outcomes = []
    for position, basis in reveal:
        q = seq.entries[position].qubit
        outcomes.append(q.measure(BASES[basis], rng))
        q.discard()
    return outcomes


def check_decoys(records: Sequence[DecoyRecord], outcomes: Sequence[int]) -> float:
    """Fraction of decoys whose outcome disagrees with the prepared state."""
    if len(records) != len(outcomes):
        raise ValueError(f"{len(records)} decoy records but {len(outcomes)} outcomes")
    if not records:
        return 0.0
    mismatches = sum(label_bit(r.label) != o for r, o in zip(records, outcomes))
    return mismatches / len(records)


def _transmit(
    payload: Sequence[Qubit],
    policy: DecoyPolicy,
    channel,
    rng: np.random.Generator,
    transcript: Transcript,
    round_index: int,
    step: str,
    sender: str,
    receiver: str,
) -> PhotonSequence | None:
    """Send payload with decoys, run the check, return the receiver's copy.

    Returns ``None`` (and marks the transcript aborted) if the check fails.
    """
    sent = insert_decoys(PhotonSequence.from_payload(payload), policy, rng, tag=f"{step}.{round_index}")
    sent.validate(len(payload))
    transcript.record(
        round_index, step, "transmit", QUANTUM,
        sender=sender, photons=len(sent), payload=len(payload), decoys=len(sent.decoy_records),
    )
    received = channel.transmit(sent, step, round_index, rng)
    if not sent.decoy_records:
        return received
    transcript.record(round_index, step, "receipt", PUBLIC, party=receiver, bits=1)
    reveal = [(r.position, r.basis) for r in sent.decoy_records]
    position_bits = max(1, (len(sent) - 1).bit_length())
    transcript.record(
        round_index, step, "decoy_reveal", PUBLIC, party=sender,
        positions=[p for p, _ in reveal], bases=[b for _, b in reveal],
        bits=len(reveal) * (position_bits + 1),
    )
    outcomes = measure_decoys(received, reveal, rng)
    transcript.record(
        round_index, step, "decoy_outcomes", PUBLIC, party=receiver, outcomes=outcomes, bits=len(outcomes),
    )
    rate = check_decoys(sent.decoy_records, outcomes)
    errors = round(rate * len(outcomes))
    passed = rate <= policy.threshold
    transcript.record(
        round_index, step, "decoy_check", LOCAL,
        errors=errors, count=len(outcomes), error_rate=rate, threshold=policy.threshold, passed=passed,
    )
    if not passed:
        transcript.abort(round_index, step, f"decoy error rate {rate:.4f} exceeds {policy.threshold}")
        return None
    return received


# -- protocol steps -----------------------------------------------------------


def step1_distribute_key(
    n: int,
    policy: DecoyPolicy,
    channel,
    rng: np.random.Generator,
    transcript: Transcript | None = None,
) -> tuple[QuantumKey | None, Transcript]:
    """Alice makes N EPR pairs, keeps S_A and sends S_B through the decoy check."""
    if n < 1:
        raise ValueError("N must be >= 1")
    transcript = transcript if transcript is not None else Transcript(config={})
    regs = [Register.epr(f"A{i}", f"B{i}") for i in range(n)]
    alice = [r.qubits[0] for r in regs]
    transcript.record(0, "step1", "prepare_key", LOCAL, pairs=n, qubits=2 * n)
    received = _transmit([r.qubits[1] for r in regs], policy, channel, rng, transcript, 0, "step1", "alice", "bob")
    if received is None:
        return None, transcript
    return QuantumKey(alice, received.payload()), transcript


def step2_alice_encrypt(
    key: QuantumKey,
    messages_m: Sequence[int],
    policy: DecoyPolicy,
    channel,
    rng: np.random.Generator,
    transcript: Transcript,
    round_index: int = 1,
) -> PhotonSequence | None:
    """Encrypt |m_i⟩ with CNOT(A_i -> P_i) and send it to Bob."""
    if len(messages_m) != len(key):
        raise ValueError("one initial bit per key pair required")
    transcript.record(
        round_index, "step2", "prepare_traveling", LOCAL, m=[int(m) for m in messages_m], qubits=len(key),
    )
    photons = []
    for i, (a, m) in enumerate(zip(key.alice, messages_m)):
        p = fresh_qubit(f"P{i}.{round_index}", int(m))
        cnot(a, p)
        photons.append(p)
    transcript.record(round_index, "step2", "encrypt", LOCAL)
    return _transmit(photons, policy, channel, rng, transcript, round_index, "step2", "alice", "bob")


def step3_bob_decrypt_encode(
    key: QuantumKey,
    received: PhotonSequence,
    bob_secret: SecretMessage,
    policy: DecoyPolicy,
    channel,
    rng: np.random.Generator,
    transcript: Transcript,
    round_index: int = 1,
) -> tuple[list[int], PhotonSequence] | None:
    """Decrypt, read m_i, re-prepare P_i, encode k_i and send back to Alice.

    Returns Bob's measured initial bits and Alice's received sequence.
    """
    payload = received.strip_decoys().payload()
    if len(payload) != len(key) or len(bob_secret) != len(key):
        raise ValueError("sequence and message length must match the key")
    measured, regenerated = [], []
    for b, p in zip(key.bob, payload):
        cnot(b, p)
        m = p.measure(Z_BASIS, rng)
        p.discard()
        measured.append(m)
    transcript.record(round_index, "step3", "decrypt_measure", LOCAL, bob_measured_m=measured)
    for i, (m, k) in enumerate(zip(measured, bob_secret)):
        q = fresh_qubit(f"Q{i}.{round_index}", m)
        q.apply(Gate.unitary_for_bit(k))
        regenerated.append(q)
    transcript.record(round_index, "step3", "regenerate", LOCAL, qubits=len(regenerated))
    transcript.record(round_index, "step3", "encode", LOCAL, party="bob", bits=list(bob_secret))
    back = _transmit(regenerated, policy, channel, rng, transcript, round_index, "step3", "bob", "alice")
    if back is None:
        return None
    return measured, back


def step4_alice_encode_announce(
    alice_secret: SecretMessage,
    received: PhotonSequence,
    transcript: Transcript,
    rng: np.random.Generator,
    round_index: int = 1,
) -> list[int]:
    """Apply U_{r_i}, measure in Z and publish the outcomes."""
    payload = received.strip_decoys().payload()
    if len(payload) != len(alice_secret):
        raise ValueError("sequence length must match Alice's message")
    transcript.record(round_index, "step4", "encode", LOCAL, party="alice", bits=list(alice_secret))
    outcomes = []
    for p, r in zip(payload, alice_secret):
        p.apply(Gate.unitary_for_bit(r))
        outcomes.append(p.measure(Z_BASIS, rng))
        p.discard()
    transcript.record(round_index, "step4", "announce", PUBLIC, outcomes=outcomes, bits=len(outcomes))
    return outcomes


def decode_counterpart_bit(m: int, own_op: int, announced: int) -> int:
    """Counterpart's bit from the initial bit, one's own bit and the announcement."""
    return announced ^ m ^ own_op


def theta_warning(theta: float) -> str | None:
    """Why a rotation angle is a poor choice, or ``None`` if it is fine."""
    quarter = theta / (math.pi / 4)
    nearest = round(quarter)
    if abs(quarter - nearest) * (math.pi / 4) > _ANGLE_TOL:
        return None
    if nearest % 2:
        return "theta_1: angle is k*pi +/- pi/4, which lets an ancilla attack go unnoticed"
    return "trivial: angle is a multiple of pi/2, so the rotation does not disturb an ancilla attack"


def step5_rotate_key(
    key: QuantumKey,
    theta: float,
    transcript: Transcript | None = None,
    round_index: int = 1,
) -> QuantumKey:
    """Rotate both halves of every pair by R(θ); |Φ+⟩ is left invariant."""
    for a, b in zip(key.alice, key.bob):
        a.rotate(theta)
        b.rotate(theta)
    key.alice_rotations.append(theta)
    key.bob_rotations.append(theta)
    key.round_counter += 1
    if transcript is not None:
        # the schedule comes from the shared config and is treated as known to Eve
        transcript.record(round_index, "step5", "rotate", PUBLIC, theta=theta)
        warning = theta_warning(theta)
        if warning is not None:
            transcript.record(round_index, "step5", "security_warning", LOCAL, theta=theta, reason=warning)
    return key


# -- full run -------------------------------------------------------------------


@dataclass(frozen=True)
class DialogueConfig:
    n: int = 8
    rounds: int = 1
    policy: DecoyPolicy = field(default_factory=DecoyPolicy)
    theta: float | tuple[float, ...] = DEFAULT_THETA
    attack: AttackModel = field(default_factory=AttackModel)
    # optional fixed inputs, one tuple of N bits per round
    alice_messages: tuple[tuple[int, ...], ...] | None = None
    bob_messages: tuple[tuple[int, ...], ...] | None = None
    initial_bits: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("N must be >= 1")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if not isinstance(self.theta, (int, float)):
            object.__setattr__(self, "theta", tuple(float(t) for t in self.theta))
            if len(self.theta) != self.rounds:
                raise ValueError("theta schedule needs one angle per round")
        for name in ("alice_messages", "bob_messages", "initial_bits"):
            value = getattr(self, name)
            if value is None:
                continue
            value = tuple(tuple(int(b) for b in row) for row in value)
            if len(value) != self.rounds or any(len(row) != self.n for row in value):
                raise ValueError(f"{name} must have {self.rounds} rows of {self.n} bits")
            object.__setattr__(self, name, value)

    def theta_for(self, round_index: int) -> float:
        if isinstance(self.theta, tuple):
            return self.theta[round_index - 1]
        return float(self.theta)

    def with_attack(self, attack: AttackModel) -> "DialogueConfig":
        return replace(self, attack=attack)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "rounds": self.rounds,
            "decoy": self.policy.to_dict(),
            "theta": list(self.theta) if isinstance(self.theta, tuple) else self.theta,
            "attack": self.attack.to_dict(),
            "alice_messages": None if self.alice_messages is None else [list(r) for r in self.alice_messages],
            "bob_messages": None if self.bob_messages is None else [list(r) for r in self.bob_messages],
            "initial_bits": None if self.initial_bits is None else [list(r) for r in self.initial_bits],
        }


@dataclass
class DialogueRun:
    """A finished run plus the live objects behind it (for diagnostics)."""

    transcript: Transcript
    key: QuantumKey | None
    channel: object


def execute(config: DialogueConfig, rng: np.random.Generator | int, channel=None) -> DialogueRun:
    seed = None
    if not isinstance(rng, np.random.Generator):
        seed = int(rng)
        rng = trial_rng(seed)
    if channel is None:
        channel = Eavesdropper(config.attack) if config.attack.kind != "none" else IdealChannel()
    transcript = Transcript(config=config.to_dict(), seed=seed, listeners=[channel.observe])
    policy = config.policy

    key, _ = step1_distribute_key(config.n, policy, channel, rng, transcript)
    if key is None:
        return DialogueRun(transcript, None, channel)

    for rnd in range(1, config.rounds + 1):
        m_bits = (
            config.initial_bits[rnd - 1]
            if config.initial_bits is not None
            else tuple(int(b) for b in rng.integers(0, 2, size=config.n))
        )
        r_msg = SecretMessage(config.alice_messages[rnd - 1]) if config.alice_messages else SecretMessage.random(config.n, rng)
        k_msg = SecretMessage(config.bob_messages[rnd - 1]) if config.bob_messages else SecretMessage.random(config.n, rng)

        to_bob = step2_alice_encrypt(key, m_bits, policy, channel, rng, transcript, rnd)
        if to_bob is None:
            break
        result = step3_bob_decrypt_encode(key, to_bob, k_msg, policy, channel, rng, transcript, rnd)
        if result is None:
            break
        bob_m, to_alice = result
        announced = step4_alice_encode_announce(r_msg, to_alice, transcript, rng, rnd)
        alice_reads = [decode_counterpart_bit(m, r, a) for m, r, a in zip(m_bits, r_msg, announced)]
        bob_reads = [decode_counterpart_bit(m, k, a) for m, k, a in zip(bob_m, k_msg, announced)]
        transcript.decoded_alice.append(alice_reads)
        transcript.decoded_bob.append(bob_reads)
        transcript.record(
            rnd, "step4", "decode", LOCAL,
            alice_read_k=alice_reads, bob_read_r=bob_reads, secret_bits=2 * config.n,
        )
        step5_rotate_key(key, config.theta_for(rnd), transcript, rnd)

    return DialogueRun(transcript, key, channel)


def run_dialogue(config: DialogueConfig, rng: np.random.Generator | int, channel=None) -> Transcript:
    """Run Step 1 once and Steps 2-5 for every round.

    ``rng`` may be a Generator or an integer master seed (recorded in the
    transcript).
    """
    return execute(config, rng, channel).transcript
