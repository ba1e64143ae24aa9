"""Simulator for the EPR-encrypted quantum dialogue protocol."""

from .adversary import AttackModel, Eavesdropper, EveKnowledge, eve_posterior
from .protocol import DecoyPolicy, DialogueConfig, QuantumKey, Transcript, run_dialogue

__version__ = "0.1.0"

__all__ = [
    "AttackModel",
    "DecoyPolicy",
    "DialogueConfig",
    "Eavesdropper",
    "EveKnowledge",
    "QuantumKey",
    "Transcript",
    "eve_posterior",
    "run_dialogue",
]
