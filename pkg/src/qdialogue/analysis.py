"""Leakage, efficiency and θ-sweep analysis plus report serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .adversary import AttackModel
from .protocol import DecoyPolicy, DialogueConfig, Transcript, run_dialogue
from .quantum import shannon_entropy
from .stats import binomial_sigma, trial_rng, wilson_interval

REPORT_SCHEMA = "qdialogue.report"
REPORT_VERSION = 1
SWEEP_COLUMNS = ("theta", "metric_decoy", "metric_dialogue", "trials", "ci_low", "ci_high")
EFFICIENCY_COLUMNS = (
    "source", "n", "rounds", "include_decoys", "strict", "b_s", "q_t", "b_t", "eta",
    "initial_quantum_resource", "quantum_measurement",
)
TRANSCRIPT_COLUMNS = ("seed", "n", "rounds", "aborted", "abort_step", "alice_bit_errors", "bob_bit_errors")

# secret bits carried by a pair of (r, k)
SECRET_BITS_PER_PHOTON = 2


def leakage_bits(posterior: Sequence[float]) -> float:
    """Bits of (r, k) given away: 2 minus Eve's posterior entropy."""
    if len(posterior) != 4:
        raise ValueError("posterior must have four entries, one per (r, k) pair")
    return SECRET_BITS_PER_PHOTON - shannon_entropy(posterior)


# -- efficiency -------------------------------------------------------------


@dataclass(frozen=True)
class EfficiencyReport:
    """Resources per traveling photon; ``eta = b_s / (q_t + b_t)`` exactly."""

    b_s: Fraction
    q_t: Fraction
    b_t: Fraction
    eta: Fraction
    rounds: float
    include_decoys: bool = False
    strict: bool = False
    n: int | None = None
    source: str = "formula"

    def __post_init__(self):
        if self.eta != self.b_s / (self.q_t + self.b_t):
            raise ValueError("eta is inconsistent with b_s, q_t and b_t")
        if not 0 < self.eta <= 1:
            raise ValueError(f"eta {self.eta} outside (0, 1]")

    def same_values(self, other: "EfficiencyReport") -> bool:
        return (self.b_s, self.q_t, self.b_t, self.eta) == (other.b_s, other.q_t, other.b_t, other.eta)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "rounds": "inf" if math.isinf(self.rounds) else int(self.rounds),
            "include_decoys": self.include_decoys,
            "strict": self.strict,
            "source": self.source,
            "b_s": str(self.b_s),
            "q_t": str(self.q_t),
            "b_t": str(self.b_t),
            "eta": str(self.eta),
            "eta_float": float(self.eta),
        }


def _position_bits(n: int, d: int) -> int:
    return max(1, (n + d - 1).bit_length())


def efficiency(
    n: int,
    rounds: float,
    include_decoys: bool = False,
    policy: DecoyPolicy | None = None,
    strict: bool = False,
) -> EfficiencyReport:
    """Closed-form efficiency of a run with ``rounds`` reuses of one key.

    Per traveling photon the dialogue moves 2 secret bits for 1 announced bit
    and 1 traveling qubit, plus the 2 key qubits spread over all rounds.
    ``rounds`` may be ``math.inf`` for the full-reuse limit.  Decoys and the
    check-procedure chatter are only counted when asked for.
    """
    if n < 1 or rounds < 1:
        raise ValueError("n and rounds must be >= 1")
    infinite = math.isinf(rounds)
    if not infinite and rounds != int(rounds):
        raise ValueError("rounds must be an integer or math.inf")
    policy = policy if policy is not None else DecoyPolicy()
    d = policy.decoys_for(n)

    key_share = Fraction(0) if infinite else Fraction(2, int(rounds))
    # transmissions per round: step 1 once, then steps 2 and 3 every round
    t_per_round = Fraction(2) if infinite else Fraction(1 + 2 * int(rounds), int(rounds))
    per_photon_transmissions = t_per_round / n

    b_s = Fraction(SECRET_BITS_PER_PHOTON)
    q_t = 1 + key_share
    b_t = Fraction(1)
    if include_decoys:
        q_t += per_photon_transmissions * d
    if strict:
        q_t += 1  # Bob's re-prepared photon
        if d:
            b_t += per_photon_transmissions * (1 + d * (_position_bits(n, d) + 1) + d)
    return EfficiencyReport(
        b_s=b_s, q_t=q_t, b_t=b_t, eta=b_s / (q_t + b_t), rounds=rounds,
        include_decoys=include_decoys, strict=strict, n=n, source="formula",
    )


def audit_efficiency(transcript: Transcript, include_decoys: bool = False, strict: bool = False) -> EfficiencyReport:
    """Efficiency from literally counting the qubits and bits in a transcript."""
    if transcript.aborted:
        raise ValueError("cannot audit an aborted run")
    totals = {"key": 0, "traveling": 0, "regenerated": 0, "decoys": 0,
              "announce": 0, "check_bits": 0, "secret": 0}
    for e in transcript.events:
        if e.kind == "prepare_key":
            totals["key"] += e.data["qubits"]
        elif e.kind == "prepare_traveling":
            totals["traveling"] += e.data["qubits"]
        elif e.kind == "regenerate":
            totals["regenerated"] += e.data["qubits"]
        elif e.kind == "transmit":
            totals["decoys"] += e.data["decoys"]
        elif e.kind == "announce":
            totals["announce"] += e.data["bits"]
        elif e.kind in ("receipt", "decoy_reveal", "decoy_outcomes"):
            totals["check_bits"] += e.data["bits"]
        elif e.kind == "decode":
            totals["secret"] += e.data["secret_bits"]
    photons = totals["traveling"]
    if photons == 0:
        raise ValueError("transcript contains no traveling photons")
    qubits = totals["key"] + totals["traveling"]
    bits = totals["announce"]
    if include_decoys:
        qubits += totals["decoys"]
    if strict:
        qubits += totals["regenerated"]
        bits += totals["check_bits"]
    b_s = Fraction(totals["secret"], photons)
    q_t = Fraction(qubits, photons)
    b_t = Fraction(bits, photons)
    return EfficiencyReport(
        b_s=b_s, q_t=q_t, b_t=b_t, eta=b_s / (q_t + b_t), rounds=transcript.n_rounds,
        include_decoys=include_decoys, strict=strict, n=transcript.config.get("n"), source="audit",
    )


# -- theta sweep ---------------------------------------------------------------


def ancilla_attack() -> AttackModel:
    """Key-entangling Eve who keeps riding the key across rounds."""
    return AttackModel(kind="entangle_ancilla", target_step="step1", track_rotation=True)


@dataclass(frozen=True)
class SweepPoint:
    theta: float
    metric_decoy: float
    metric_dialogue: float
    trials: int
    ci_low: float
    ci_high: float
    decoys: int
    decoy_errors: int
    dialogue_bits: int
    bit_errors: int
    aborts: int

    @property
    def disturbance(self) -> float:
        return max(self.metric_decoy, self.metric_dialogue)

    @property
    def sigma(self) -> float:
        n = self.decoys if self.metric_decoy >= self.metric_dialogue and self.decoys else self.dialogue_bits
        return binomial_sigma(self.disturbance, n) if n else 0.0


@dataclass
class ThetaSweepResult:
    points: list[SweepPoint]
    attack: AttackModel
    n: int
    rounds: int
    seed: int
    policy: DecoyPolicy = field(default_factory=DecoyPolicy.disabled)

    def __post_init__(self):
        self.points = sorted(self.points, key=lambda p: p.theta)

    @property
    def thetas(self) -> list[float]:
        return [p.theta for p in self.points]

    def at(self, theta: float, tol: float = 1e-12) -> SweepPoint:
        for p in self.points:
            if abs(p.theta - theta) <= tol:
                return p
        raise KeyError(theta)

    def csv_rows(self) -> list[list]:
        return [
            [repr(p.theta), repr(p.metric_decoy), repr(p.metric_dialogue), p.trials, repr(p.ci_low), repr(p.ci_high)]
            for p in self.points
        ]

    def to_csv(self) -> str:
        return _csv_text(SWEEP_COLUMNS, self.csv_rows())

    def to_dict(self) -> dict:
        return {
            "attack": self.attack.to_dict(),
            "n": self.n,
            "rounds": self.rounds,
            "seed": self.seed,
            "decoy": self.policy.to_dict(),
            "points": [
                {
                    "theta": p.theta,
                    "metric_decoy": p.metric_decoy,
                    "metric_dialogue": p.metric_dialogue,
                    "disturbance": p.disturbance,
                    "trials": p.trials,
                    "ci_low": p.ci_low,
                    "ci_high": p.ci_high,
                    "decoys": p.decoys,
                    "decoy_errors": p.decoy_errors,
                    "dialogue_bits": p.dialogue_bits,
                    "bit_errors": p.bit_errors,
                    "aborts": p.aborts,
                }
                for p in self.points
            ],
        }


def dialogue_bit_errors(transcript: Transcript) -> tuple[int, int]:
    """(wrong decoded bits, total decoded bits) over both directions."""
    errors = bits = 0
    for decoded, truth in (
        (transcript.decoded_alice, transcript.messages("bob")),
        (transcript.decoded_bob, transcript.messages("alice")),
    ):
        for got, want in zip(decoded, truth):
            errors += sum(g != w for g, w in zip(got, want))
            bits += len(got)
    return errors, bits


def sweep_point(theta: float, config: DialogueConfig, trials: int, seed: int, stream: int) -> SweepPoint:
    decoys = decoy_errors = bits = bit_errors = aborts = 0
    for t in range(trials):
        transcript = run_dialogue(config, trial_rng(seed, stream, t))
        aborts += transcript.aborted
        for ev in transcript.events_of("decoy_check"):
            decoys += ev.data["count"]
            decoy_errors += ev.data["errors"]
        e, b = dialogue_bit_errors(transcript)
        bit_errors += e
        bits += b
    metric_decoy = decoy_errors / decoys if decoys else 0.0
    metric_dialogue = bit_errors / bits if bits else 0.0
    if decoys and metric_decoy >= metric_dialogue:
        ci = wilson_interval(decoy_errors, decoys)
    elif bits:
        ci = wilson_interval(bit_errors, bits)
    else:
        ci = (0.0, 1.0)
    return SweepPoint(
        theta=theta, metric_decoy=metric_decoy, metric_dialogue=metric_dialogue, trials=trials,
        ci_low=ci[0], ci_high=ci[1], decoys=decoys, decoy_errors=decoy_errors,
        dialogue_bits=bits, bit_errors=bit_errors, aborts=aborts,
    )


def theta_sweep(
    thetas: Iterable[float],
    trials: int,
    seed: int,
    attack: AttackModel | None = None,
    n: int = 1,
    rounds: int = 2,
    policy: DecoyPolicy | None = None,
) -> ThetaSweepResult:
    """Disturbance caused by an attack as a function of the key rotation angle.

    Each θ runs ``trials`` independent ``rounds``-round dialogues with a
    constant rotation θ.  Decoys are off by default so that the numbers
    isolate what the rotation alone reveals.
    """
    if trials < 100:
        raise ValueError("theta_sweep needs at least 100 trials per angle")
    thetas = [float(t) for t in thetas]
    if not thetas:
        raise ValueError("no angles given")
    attack = attack if attack is not None else ancilla_attack()
    policy = policy if policy is not None else DecoyPolicy.disabled()
    points = []
    for stream, theta in enumerate(thetas):
        config = DialogueConfig(n=n, rounds=rounds, policy=policy, theta=theta, attack=attack)
        points.append(sweep_point(theta, config, trials, seed, stream))
    return ThetaSweepResult(points, attack, n, rounds, seed, policy)


# -- reports ------------------------------------------------------------------

# arity of every measurement the protocol performs, by event kind
_MEASUREMENT_ARITY = {"decoy_outcomes": 1, "decrypt_measure": 1, "announce": 1}


def quantum_measurement_class(transcripts: Sequence[Transcript] = ()) -> str:
    kinds = {e.kind for t in transcripts for e in t.events if e.kind in _MEASUREMENT_ARITY}
    kinds = kinds or set(_MEASUREMENT_ARITY)
    if max(_MEASUREMENT_ARITY[k] for k in kinds) == 1:
        return "single-photon measurements"
    return "multi-photon measurements"


def initial_resource_class(report: EfficiencyReport) -> str:
    """Describe the quantum resource; a reused key is amortized away."""
    if report.include_decoys:
        return "single photons plus decoys and amortized Bell states"
    if report.rounds > 1:
        return "Nearly single photons"
    return "single photons and Bell states"


def summary_row(report: EfficiencyReport, transcripts: Sequence[Transcript] = ()) -> dict:
    return {
        "protocol": "proposed",
        "initial_quantum_resource": initial_resource_class(report),
        "quantum_measurement": quantum_measurement_class(transcripts),
        "efficiency": float(report.eta),
        "efficiency_exact": str(report.eta),
    }


def transcript_summary(t: Transcript) -> dict:
    errors = [0, 0]
    for idx, (decoded, truth) in enumerate(
        ((t.decoded_alice, t.messages("bob")), (t.decoded_bob, t.messages("alice")))
    ):
        for got, want in zip(decoded, truth):
            errors[idx] += sum(g != w for g, w in zip(got, want))
    return {
        "seed": t.seed,
        "n": t.config.get("n"),
        "rounds": t.config.get("rounds"),
        "aborted": t.aborted,
        "abort_step": t.abort_step,
        "alice_bit_errors": errors[0],
        "bob_bit_errors": errors[1],
    }


def _csv_text(columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    return buf.getvalue()


def emit_report(
    transcripts: Sequence[Transcript] = (),
    sweeps: Sequence[ThetaSweepResult] = (),
    efficiency_reports: Sequence[EfficiencyReport] = (),
    fmt: str = "json",
    path: str | Path | None = None,
) -> str:
    """Serialize results deterministically; optionally write them to ``path``.

    CSV holds a single table, so exactly one kind of input must be given:
    sweeps use ``SWEEP_COLUMNS``, efficiency reports ``EFFICIENCY_COLUMNS``
    and transcripts ``TRANSCRIPT_COLUMNS``.
    """
    transcripts, sweeps, efficiency_reports = list(transcripts), list(sweeps), list(efficiency_reports)
    if not (transcripts or sweeps or efficiency_reports):
        raise ValueError("nothing to report")
    if fmt == "json":
        doc = {
            "schema": REPORT_SCHEMA,
            "version": REPORT_VERSION,
            "transcripts": [transcript_summary(t) for t in transcripts],
            "sweeps": [s.to_dict() for s in sweeps],
            "efficiency": [r.to_dict() for r in efficiency_reports],
            "summary": [summary_row(r, transcripts) for r in efficiency_reports],
        }
        text = json.dumps(doc, sort_keys=True, indent=1) + "\n"
    elif fmt == "csv":
        kinds = sum(bool(x) for x in (transcripts, sweeps, efficiency_reports))
        if kinds != 1:
            raise ValueError("CSV output takes exactly one kind of input; use json for mixed reports")
        if sweeps:
            text = _csv_text(SWEEP_COLUMNS, [row for s in sweeps for row in s.csv_rows()])
        elif efficiency_reports:
            rows = []
            for r in efficiency_reports:
                row = summary_row(r, transcripts)
                rows.append([
                    r.source, r.n, "inf" if math.isinf(r.rounds) else int(r.rounds), r.include_decoys, r.strict,
                    str(r.b_s), str(r.q_t), str(r.b_t), repr(float(r.eta)),
                    row["initial_quantum_resource"], row["quantum_measurement"],
                ])
            text = _csv_text(EFFICIENCY_COLUMNS, rows)
        else:
            summaries = [transcript_summary(t) for t in transcripts]
            text = _csv_text(TRANSCRIPT_COLUMNS, [[s[c] for c in TRANSCRIPT_COLUMNS] for s in summaries])
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if path is not None:
        Path(path).write_text(text)
    return text
