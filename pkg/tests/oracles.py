"""Independent reference computations used to cross-check the package.

Nothing here imports the package's simulator: gates are built as full
Kronecker-product matrices and probabilities are enumerated exactly.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np

S = 1 / np.sqrt(2)
KET = {
    "0": np.array([1, 0], dtype=complex),
    "1": np.array([0, 1], dtype=complex),
    "+": np.array([S, S], dtype=complex),
    "-": np.array([S, -S], dtype=complex),
}
I2 = np.eye(2, dtype=complex)
X2 = np.array([[0, 1], [1, 0]], dtype=complex)
P0 = np.diag([1, 0]).astype(complex)
P1 = np.diag([0, 1]).astype(complex)


def kron_all(*ops):
    out = np.ones((1, 1), dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


def ket(bits: str) -> np.ndarray:
    return kron_all(*[KET[b].reshape(2, 1) for b in bits]).reshape(-1)


def single(op, target: int, n: int) -> np.ndarray:
    return kron_all(*[op if i == target else I2 for i in range(n)])


def cnot_matrix(control: int, target: int, n: int) -> np.ndarray:
    a = kron_all(*[P0 if i == control else I2 for i in range(n)])
    b = kron_all(*[P1 if i == control else (X2 if i == target else I2) for i in range(n)])
    return a + b


def rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s], [-s, c]], dtype=complex)


def ghz_ciphertext(m: int) -> np.ndarray:
    """Key pair plus traveling photon after encryption, qubit order (A, B, P)."""
    mb = 1 - m
    return (ket(f"00{m}") + ket(f"11{mb}")) * S


def dialogue_outcome(m: int, r: int, k: int) -> int:
    """Alice's announced Z outcome for one photon, from matrices alone."""
    # A, B, P with the key in |Φ+⟩ and P in |m⟩
    psi = np.kron((ket("00") + ket("11")) * S, KET[str(m)])
    psi = cnot_matrix(0, 2, 3) @ psi
    psi = cnot_matrix(1, 2, 3) @ psi
    # P is now a product |m⟩; Bob's Z measurement is deterministic
    p_one = np.linalg.norm(single(P1, 2, 3) @ psi) ** 2
    measured = int(round(p_one))
    new_p = KET[str(measured)]
    if k:
        new_p = X2 @ new_p
    if r:
        new_p = X2 @ new_p
    return int(round(abs(new_p[1]) ** 2))


# -- exact intercept-resend enumeration ------------------------------------------

_BASIS_STATES = {"Z": ("0", "1"), "X": ("+", "-")}


def _overlap_sq(a: str, b: str) -> Fraction:
    """|⟨a|b⟩|² for BB84 labels, exactly."""
    same_basis = (a in "01") == (b in "01")
    if not same_basis:
        return Fraction(1, 2)
    return Fraction(1) if a == b else Fraction(0)


def intercept_resend_error(strategy: str) -> Fraction:
    """Per-decoy error probability, enumerating every branch exactly."""
    eve_bases = {"always_Z": {"Z": Fraction(1)}, "random_ZX": {"Z": Fraction(1, 2), "X": Fraction(1, 2)}}[strategy]
    total = Fraction(0)
    for decoy in ("0", "1", "+", "-"):
        p_decoy = Fraction(1, 4)
        check_basis = "Z" if decoy in "01" else "X"
        for eb, p_eb in eve_bases.items():
            for resent in _BASIS_STATES[eb]:
                p_out = _overlap_sq(resent, decoy)
                for bob_label in _BASIS_STATES[check_basis]:
                    if bob_label == decoy:
                        continue
                    total += p_decoy * p_eb * p_out * _overlap_sq(bob_label, resent)
    return total


def all_mrk():
    return list(itertools.product((0, 1), repeat=3))


# -- hand count of resources --------------------------------------------------


def hand_efficiency(n: int, rounds: int) -> Fraction:
    """Count one key of 2N qubits, N photons and N announced bits per round."""
    secret = 2 * n * rounds
    qubits = 2 * n + n * rounds
    bits = n * rounds
    return Fraction(secret, qubits + bits)
