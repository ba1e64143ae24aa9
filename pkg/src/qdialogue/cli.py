"""Command-line front end.

Exit codes
----------
0  success
2  usage or configuration error (bad flag, malformed or unknown config field)
3  protocol abort (a decoy check failed; the step is printed to stderr)
4  I/O failure (config unreadable, output unwritable)
5  internal self-check failure (efficiency audit disagrees with the formula,
   or an unattacked key lost fidelity in keygen-check)
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any

from .adversary import AttackModel, Eavesdropper
from .analysis import ancilla_attack, audit_efficiency, efficiency, emit_report, theta_sweep
from .protocol import (
    DEFAULT_THETA,
    DecoyPolicy,
    DialogueConfig,
    IdealChannel,
    Transcript,
    run_dialogue,
    step1_distribute_key,
    step5_rotate_key,
)
from .stats import trial_rng

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_ABORT = 3
EXIT_IO = 4
EXIT_SELF_CHECK = 5

KEY_FIDELITY_TOL = 1e-9

_ANGLE = re.compile(r"^([+-]?(?:\d+(?:\.\d*)?|\.\d+)?)\s*\*?\s*pi\s*(?:/\s*(\d+(?:\.\d*)?))?$")


class ConfigError(ValueError):
    pass


def parse_angle(value: Any) -> float:
    """Accept a number or a string such as ``"pi/8"``, ``"3*pi/8"``, ``"-pi/4"``."""
    if isinstance(value, bool):
        raise ConfigError(f"not an angle: {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        text = value.strip().lower()
        try:
            return float(text)
        except ValueError:
            pass
        match = _ANGLE.match(text)
        if match:
            coeff = match.group(1)
            if coeff in ("", "+", "-"):
                coeff += "1"
            denom = float(match.group(2)) if match.group(2) else 1.0
            if denom == 0:
                raise ConfigError(f"zero denominator in angle {value!r}")
            return float(coeff) * math.pi / denom
    raise ConfigError(f"not an angle: {value!r}")


def _positive_int(name: str, value: Any) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ConfigError(f"{name} must be a positive integer, got {value!r}")
    return value


@dataclass
class RunConfig:
    """Everything a subcommand needs.  ``None`` means "use the command default"."""

    n: int | None = None
    rounds: int | str | None = None
    decoy: dict | None = None
    theta: Any = None
    attack: dict | None = None
    seed: int = 0
    trials: int | None = None
    out: str | None = None
    format: str = "json"
    include_decoys: bool = False
    strict: bool = False

    def __post_init__(self):
        if self.n is not None:
            _positive_int("n", self.n)
        if self.rounds is not None and self.rounds != "inf":
            _positive_int("rounds", self.rounds)
        if self.trials is not None:
            _positive_int("trials", self.trials)
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.format not in ("json", "csv"):
            raise ConfigError(f"format must be json or csv, got {self.format!r}")
        for name in ("include_decoys", "strict"):
            if not isinstance(getattr(self, name), bool):
                raise ConfigError(f"{name} must be true or false")
        for name in ("decoy", "attack"):
            value = getattr(self, name)
            if value is not None and not isinstance(value, dict):
                raise ConfigError(f"{name} must be an object")
        try:
            self.decoy_policy(DecoyPolicy())
            self.attack_model(AttackModel())
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path: str | None, overrides: dict) -> "RunConfig":
        data: dict = {}
        if path is not None:
            text = Path(path).read_text()  # OSError is the caller's I/O failure
            try:
                data = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from exc
            if not isinstance(data, dict):
                raise ConfigError(f"{path}: config must be a JSON object")
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        for key, value in overrides.items():
            if key in ("decoy", "attack") and value is not None:
                data[key] = {**(data.get(key) or {}), **value}
            elif value is not None:
                data[key] = value
        return cls.from_dict(data)

    def decoy_policy(self, default: DecoyPolicy) -> DecoyPolicy:
        if self.decoy is None:
            return default
        if self.decoy.get("check") is False and "count" not in self.decoy:
            return DecoyPolicy.from_dict({**self.decoy, "count": 0})
        return DecoyPolicy.from_dict(self.decoy)

    def attack_model(self, default: AttackModel) -> AttackModel:
        if self.attack is None:
            return default
        return AttackModel.from_dict(self.attack)

    def angles(self) -> list[float] | float | None:
        if self.theta is None or self.theta == "random":
            return self.theta
        if isinstance(self.theta, list):
            return [parse_angle(t) for t in self.theta]
        return parse_angle(self.theta)

    def to_dict(self) -> dict:
        return asdict(self)


# -- output ---------------------------------------------------------------------


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _finite_rounds(cfg: RunConfig, default: int) -> int:
    if cfg.rounds == "inf":
        raise ConfigError("rounds=inf is only meaningful for the efficiency command")
    return cfg.rounds if cfg.rounds is not None else default


# -- commands -------------------------------------------------------------------


def dialogue_config(cfg: RunConfig) -> DialogueConfig:
    rounds = _finite_rounds(cfg, 1)
    theta = cfg.angles()
    if theta == "random":
        rng = trial_rng(cfg.seed, 1)
        theta = tuple(float(t) for t in rng.uniform(0, 2 * math.pi, size=rounds))
    elif theta is None:
        theta = DEFAULT_THETA
    elif isinstance(theta, list):
        theta = tuple(theta)
    return DialogueConfig(
        n=cfg.n or 8,
        rounds=rounds,
        policy=cfg.decoy_policy(DecoyPolicy()),
        theta=theta,
        attack=cfg.attack_model(AttackModel()),
    )


def cmd_dialogue(cfg: RunConfig) -> int:
    try:
        config = dialogue_config(cfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    transcript = run_dialogue(config, cfg.seed)
    if cfg.format == "json":
        text = transcript.to_json()
    else:
        text = emit_report(transcripts=[transcript], fmt="csv")
    _write(text, cfg.out)
    if transcript.aborted:
        print(
            f"protocol aborted at {transcript.abort_step} (round {transcript.abort_round})",
            file=sys.stderr,
        )
        return EXIT_ABORT
    return EXIT_OK


def cmd_attack_sweep(cfg: RunConfig) -> int:
    thetas = cfg.angles()
    if not isinstance(thetas, list) or len(thetas) < 2:
        raise ConfigError("attack-sweep needs at least two theta values")
    trials = cfg.trials or 1000
    if trials < 100:
        raise ConfigError("attack-sweep needs at least 100 trials per angle")
    try:
        result = theta_sweep(
            thetas,
            trials=trials,
            seed=cfg.seed,
            attack=cfg.attack_model(ancilla_attack()),
            n=cfg.n or 1,
            rounds=_finite_rounds(cfg, 2),
            policy=cfg.decoy_policy(DecoyPolicy.disabled()),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    _write(emit_report(sweeps=[result], fmt=cfg.format), cfg.out)
    return EXIT_OK


def cmd_efficiency(cfg: RunConfig) -> int:
    n = cfg.n or 8
    policy = cfg.decoy_policy(DecoyPolicy())
    if cfg.attack is not None and cfg.attack_model(AttackModel()).kind != "none":
        raise ConfigError("efficiency is measured on an unattacked run")
    reports = []
    if cfg.rounds == "inf":
        reports.append(efficiency(n, math.inf, cfg.include_decoys, policy, cfg.strict))
    else:
        rounds = cfg.rounds or 1
        formula = efficiency(n, rounds, cfg.include_decoys, policy, cfg.strict)
        config = DialogueConfig(n=n, rounds=rounds, policy=policy, theta=DEFAULT_THETA if cfg.theta is None else parse_angle(cfg.theta))
        transcript = run_dialogue(config, cfg.seed)
        if transcript.aborted:
            print(f"protocol aborted at {transcript.abort_step}", file=sys.stderr)
            return EXIT_ABORT
        audit = audit_efficiency(transcript, cfg.include_decoys, cfg.strict)
        if not formula.same_values(audit):
            print(f"efficiency self-check failed: formula {formula.eta} vs audit {audit.eta}", file=sys.stderr)
            return EXIT_SELF_CHECK
        reports += [formula, audit]
    _write(emit_report(efficiency_reports=reports, fmt=cfg.format), cfg.out)
    return EXIT_OK


def cmd_keygen_check(cfg: RunConfig) -> int:
    """Distribute keys, rotate them for every round and check pair fidelities."""
    n = cfg.n or 8
    rounds = _finite_rounds(cfg, 100)
    trials = cfg.trials or 1
    theta = cfg.angles() if cfg.theta is not None else "random"
    if isinstance(theta, list) and len(theta) != rounds:
        raise ConfigError("theta schedule needs one angle per round")
    policy = cfg.decoy_policy(DecoyPolicy())
    attack = cfg.attack_model(AttackModel())
    rows = []
    for t in range(trials):
        rng = trial_rng(cfg.seed, t)
        channel = Eavesdropper(attack) if attack.kind != "none" else IdealChannel()
        key, transcript = step1_distribute_key(n, policy, channel, rng, Transcript(config={}))
        if key is None:
            rows.append({"trial": t, "aborted": True, "abort_step": transcript.abort_step, "min_fidelity": None})
            continue
        schedule = theta if isinstance(theta, list) else [theta] * rounds
        for rnd, angle in enumerate(schedule, start=1):
            if angle == "random":
                angle = float(rng.uniform(0, 2 * math.pi))
            step5_rotate_key(key, angle, transcript, rnd)
        fids = key.fidelities()
        rows.append({"trial": t, "aborted": False, "abort_step": None, "min_fidelity": min(fids)})
    completed = [r for r in rows if not r["aborted"]]
    passed = all(r["min_fidelity"] >= 1 - KEY_FIDELITY_TOL for r in completed)
    if cfg.format == "json":
        text = json.dumps(
            {
                "schema": "qdialogue.keygen",
                "version": 1,
                "n": n,
                "rounds": rounds,
                "seed": cfg.seed,
                "attack": attack.to_dict(),
                "tolerance": KEY_FIDELITY_TOL,
                "passed": passed,
                "trials": rows,
            },
            sort_keys=True,
            indent=1,
        ) + "\n"
    else:
        lines = ["trial,aborted,abort_step,min_fidelity"]
        for r in rows:
            mf = "" if r["min_fidelity"] is None else repr(r["min_fidelity"])
            lines.append(f"{r['trial']},{r['aborted']},{r['abort_step'] or ''},{mf}")
        text = "\n".join(lines) + "\n"
    _write(text, cfg.out)
    if not completed:
        print("every key distribution aborted", file=sys.stderr)
        return EXIT_ABORT
    if not passed and attack.kind == "none":
        print("key fidelity check failed", file=sys.stderr)
        return EXIT_SELF_CHECK
    return EXIT_OK


COMMANDS = {
    "dialogue": cmd_dialogue,
    "attack-sweep": cmd_attack_sweep,
    "efficiency": cmd_efficiency,
    "keygen-check": cmd_keygen_check,
}


# -- argument parsing ----------------------------------------------------------------


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _rounds(text: str) -> int | str:
    return "inf" if text in ("inf", "infinity") else int(text)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run config; flags override it")
    common.add_argument("--seed", type=_u64, metavar="U64")
    common.add_argument("--trials", type=int, metavar="N")
    common.add_argument("--out", metavar="PATH", help="output file (stdout if omitted)")
    common.add_argument("--format", choices=("json", "csv"))
    common.add_argument("--n", type=int, metavar="N", help="payload bits per party")
    common.add_argument("--rounds", type=_rounds, help="key reuse count ('inf' for efficiency)")
    common.add_argument(
        "--theta", action="append", metavar="ANGLE",
        help="rotation angle, e.g. 0.3 or 3*pi/8; repeat for a list; 'random' for keygen-check",
    )
    common.add_argument("--attack", choices=("none", "intercept_resend", "entangle_ancilla"))
    common.add_argument("--target-step", choices=("step1", "step2", "step3"))
    common.add_argument("--basis-strategy", choices=("always_Z", "random_ZX"))
    common.add_argument("--track-rotation", action="store_true", default=None)
    common.add_argument("--decoys", type=int, metavar="COUNT", help="decoys per transmission")
    common.add_argument("--threshold", type=float, help="tolerated decoy error rate")
    common.add_argument("--no-decoys", action="store_true", default=None)
    common.add_argument("--include-decoys", action="store_true", default=None)
    common.add_argument("--strict", action="store_true", default=None)

    parser = argparse.ArgumentParser(prog="qdialogue", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("dialogue", parents=[common], help="run one dialogue and write its transcript")
    sub.add_parser("attack-sweep", parents=[common], help="disturbance versus rotation angle (CSV)")
    sub.add_parser("efficiency", parents=[common], help="formula and audited efficiency")
    sub.add_parser("keygen-check", parents=[common], help="key fidelity after repeated rotation")
    return parser


def overrides_from_args(args: argparse.Namespace) -> dict:
    decoy = {}
    if args.decoys is not None:
        decoy["count"] = args.decoys
    if args.threshold is not None:
        decoy["threshold"] = args.threshold
    if args.no_decoys:
        decoy.update(count=0, check=False)
    attack = {}
    if args.attack is not None:
        attack["kind"] = args.attack
    if args.target_step is not None:
        attack["target_step"] = args.target_step
    if args.basis_strategy is not None:
        attack["basis_strategy"] = args.basis_strategy
    if args.track_rotation:
        attack["track_rotation"] = True
    theta = args.theta
    if theta is not None and len(theta) == 1:
        theta = theta[0]
    return {
        "n": args.n,
        "rounds": args.rounds,
        "decoy": decoy or None,
        "theta": theta,
        "attack": attack or None,
        "seed": args.seed,
        "trials": args.trials,
        "out": args.out,
        "format": args.format,
        "include_decoys": args.include_decoys,
        "strict": args.strict,
    }


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        cfg = RunConfig.load(args.config, overrides_from_args(args))
        if args.command == "attack-sweep" and isinstance(cfg.theta, str) and cfg.theta != "random":
            raise ConfigError("attack-sweep needs at least two theta values")
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
