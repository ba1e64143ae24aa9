"""Eavesdropper models acting on in-flight photon sequences.

Eve only ever sees a transmission as an ordered list of qubits. She is never
told which entries are decoys, so every attack below treats all positions the
same way.

Attack kinds
------------
``intercept_resend``
    Measure each photon (always in Z, or in a random Z/X basis) and forward a
    fresh photon prepared in the observed state.
``entangle_ancilla``
    Append a fresh ancilla |0⟩ per photon and apply CNOT(photon -> ancilla).
    Attacking the key distribution this way leaves each key pair in a GHZ
    state with Eve's ancilla.  With ``track_rotation`` Eve also keeps riding
    the key in later rounds: she follows the public rotation schedule and,
    on every ciphertext, either decrypts/copies/re-encrypts with her ancilla
    (accumulated angle an even multiple of π/4) or applies a parity
    correction in the conjugate basis (odd multiple).  At accumulated angles
    that are not multiples of π/4 she uses the nearest one, which is what
    makes her visible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .quantum import H, X_BASIS, Z_BASIS, Qubit, cnot, fresh_qubit, shannon_entropy
from .stats import trial_rng, wilson_interval

if TYPE_CHECKING:
    from .protocol import DialogueConfig, PhotonSequence

ATTACK_KINDS = ("none", "intercept_resend", "entangle_ancilla")
TARGET_STEPS = ("step1", "step2", "step3")
BASIS_STRATEGIES = ("always_Z", "random_ZX")

# (r, k) ordering used by every posterior vector
RK_PAIRS = ((0, 0), (0, 1), (1, 0), (1, 1))


@dataclass(frozen=True)
class AttackModel:
    kind: str = "none"
    target_step: str = "step1"
    basis_strategy: str = "random_ZX"
    track_rotation: bool = False

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ValueError(f"unknown attack kind {self.kind!r}")
        if self.target_step not in TARGET_STEPS:
            raise ValueError(f"unknown target step {self.target_step!r}")
        if self.basis_strategy not in BASIS_STRATEGIES:
            raise ValueError(f"unknown basis strategy {self.basis_strategy!r}")
        if self.kind == "entangle_ancilla" and self.target_step == "step3":
            raise ValueError("entangle_ancilla targets key-bearing photons (step1 or step2)")
        if self.track_rotation and not (self.kind == "entangle_ancilla" and self.target_step == "step1"):
            raise ValueError("track_rotation needs an entangle_ancilla attack on step1")

    @classmethod
    def from_dict(cls, data: dict) -> "AttackModel":
        unknown = set(data) - {"kind", "target_step", "basis_strategy", "track_rotation"}
        if unknown:
            raise ValueError(f"unknown attack fields: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "target_step": self.target_step,
            "basis_strategy": self.basis_strategy,
            "track_rotation": self.track_rotation,
        }


@dataclass
class EveKnowledge:
    public_events: list[dict] = field(default_factory=list)
    # (round, payload index) -> probability vector over RK_PAIRS
    posteriors: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)
    captured: list[dict] = field(default_factory=list)
    # (round, transmission position) -> Eve's estimate of the initial bit m
    m_guesses: dict[tuple[int, int], int] = field(default_factory=dict)

    def entropy(self, key: tuple[int, int]) -> float:
        return shannon_entropy(self.posteriors[key])


def eve_posterior(announced: int, knows_m: bool = False, m: int | None = None) -> np.ndarray:
    """Eve's distribution over (r, k) after hearing one announced outcome.

    Since a = m ⊕ r ⊕ k, knowing m pins r ⊕ k down and leaves two equally
    likely pairs; without m every pair is equally likely.
    """
    if announced not in (0, 1):
        raise ValueError("announced outcome must be a bit")
    if not knows_m:
        return np.full(4, 0.25)
    if m not in (0, 1):
        raise ValueError("m must be a bit when knows_m is set")
    parity = announced ^ m
    return np.array([0.5 if r ^ k == parity else 0.0 for r, k in RK_PAIRS])


def _nearest_quarter_turns(theta: float) -> int:
    return int(round(theta / (math.pi / 4))) % 4


def attack_transmission(
    seq: "PhotonSequence",
    model: AttackModel,
    rng: np.random.Generator,
    knowledge: EveKnowledge | None = None,
    registry: list[Qubit] | None = None,
    tag: str = "",
) -> tuple["PhotonSequence", EveKnowledge]:
    """Apply one attack to every photon of a transmission.

    ``registry`` collects the ancillas created by ``entangle_ancilla`` in
    transmission order.
    """
    knowledge = knowledge if knowledge is not None else EveKnowledge()
    if model.kind == "none":
        return seq, knowledge

    replacements = {}
    for position, qubit in enumerate(seq.qubits()):
        if model.kind == "intercept_resend":
            if model.basis_strategy == "always_Z" or rng.random() < 0.5:
                basis = Z_BASIS
            else:
                basis = X_BASIS
            outcome = qubit.measure(basis, rng)
            qubit.discard()
            replacements[position] = fresh_qubit(qubit.name, basis.outcome_label(outcome))
            knowledge.captured.append(
                {"tag": tag, "position": position, "basis": basis.label, "outcome": outcome}
            )
        else:
            ancilla = qubit.register.add(f"E{tag}.{position}")
            cnot(qubit, ancilla)
            if registry is not None:
                registry.append(ancilla)
    return seq.replaced(replacements), knowledge


class Eavesdropper:
    """A channel that runs one :class:`AttackModel` during a dialogue."""

    def __init__(self, model: AttackModel):
        self.model = model
        self.knowledge = EveKnowledge()
        self.key_ancillas: list[Qubit] = []
        self.round_ancillas: list[Qubit] = []
        self.accumulated_theta = 0.0
        self._rng: np.random.Generator | None = None

    def transmit(self, seq: "PhotonSequence", step: str, round_index: int, rng: np.random.Generator):
        model = self.model
        self._rng = rng
        if model.kind == "none":
            return seq
        tag = f"{step}.{round_index}"
        if step == model.target_step:
            registry = self.key_ancillas if step == "step1" else self.round_ancillas
            seq, _ = attack_transmission(seq, model, rng, self.knowledge, registry, tag)
            return seq
        if model.track_rotation and step == "step2":
            self._ride_key(seq, round_index, rng)
        return seq

    def _ride_key(self, seq: "PhotonSequence", round_index: int, rng: np.random.Generator) -> None:
        quarter = _nearest_quarter_turns(self.accumulated_theta)
        for position, photon in enumerate(seq.qubits()):
            if position >= len(self.key_ancillas):
                break
            anc = self.key_ancillas[position]
            if quarter % 2 == 0:
                # the ancilla mirrors the key bit: decrypt, copy m, re-encrypt
                cnot(anc, photon)
                copy = photon.register.add(f"C{round_index}.{position}")
                cnot(photon, copy)
                cnot(anc, photon)
                bit = copy.measure(Z_BASIS, rng)
                copy.discard()
                self.knowledge.m_guesses[(round_index, position)] = bit ^ (quarter == 2)
            else:
                # the ancilla holds the parity of the key pair in the X basis
                anc.apply(H)
                cnot(anc, photon)
                anc.apply(H)

    def observe(self, event) -> None:
        record = event.to_dict()
        self.knowledge.public_events.append(record)
        if event.kind == "rotate":
            self.accumulated_theta += event.data["theta"]
        elif event.kind == "announce":
            r = event.round
            for i, a in enumerate(event.data["outcomes"]):
                m = self.knowledge.m_guesses.get((r, i))
                self.knowledge.posteriors[(r, i)] = eve_posterior(a, m is not None, m)
            # per-round ancillas carry nothing useful past the announcement
            for anc in self.round_ancillas:
                bit = anc.measure(Z_BASIS, self._rng)
                anc.discard()
                self.knowledge.captured.append({"tag": f"ancilla.{r}", "outcome": bit})
            self.round_ancillas.clear()


@dataclass(frozen=True)
class DetectionEstimate:
    per_decoy_rate: float
    per_decoy_ci: tuple[float, float]
    decoys: int
    errors: int
    abort_rate: float
    abort_ci: tuple[float, float]
    trials: int
    aborts: int


def estimate_detection_probability(
    model: AttackModel,
    config: "DialogueConfig",
    trials: int,
    seed: int,
) -> DetectionEstimate:
    """Monte Carlo detection statistics over independently seeded runs.

    The per-decoy rate counts only the decoy checks of the attacked step, so
    untouched transmissions do not dilute it.
    """
    from .protocol import run_dialogue

    if trials < 1:
        raise ValueError("trials must be >= 1")
    config = config.with_attack(model)
    errors = decoys = aborts = 0
    for t in range(trials):
        transcript = run_dialogue(config, trial_rng(seed, t))
        aborts += transcript.aborted
        for ev in transcript.events_of("decoy_check"):
            if model.kind == "none" or ev.step == model.target_step:
                errors += ev.data["errors"]
                decoys += ev.data["count"]
    if decoys == 0:
        raise ValueError("no decoys were checked; enable decoy checking")
    return DetectionEstimate(
        per_decoy_rate=errors / decoys,
        per_decoy_ci=wilson_interval(errors, decoys),
        decoys=decoys,
        errors=errors,
        abort_rate=aborts / trials,
        abort_ci=wilson_interval(aborts, trials),
        trials=trials,
        aborts=aborts,
    )
