"""Dense statevector engine for small qubit registers.

Qubit 0 is the leftmost tensor factor (most significant bit of the basis
index), so ``prepare(2, ["0", "-"])`` has amplitudes ``(1/√2, -1/√2, 0, 0)``.

Two layers live here:

* pure functions on immutable :class:`StateVector` values (``prepare``,
  ``apply_single``, ``apply_cnot``, ``measure`` ...);
* a thin mutable :class:`Register` / :class:`Qubit` layer used by the
  protocol, which tracks named qubits that may be joined into one register
  when they interact and split off again after being measured.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

NORM_TOL = 1e-9
EXACT_TOL = 1e-12
MAX_REGISTER_QUBITS = 12

_SQRT1_2 = 1 / math.sqrt(2)

_LABEL_VECTORS = {
    "0": np.array([1, 0], dtype=complex),
    "1": np.array([0, 1], dtype=complex),
    "+": np.array([_SQRT1_2, _SQRT1_2], dtype=complex),
    "-": np.array([_SQRT1_2, -_SQRT1_2], dtype=complex),
}
# "−" (U+2212) is accepted as an alias so labels can be copied from notation.
_LABEL_ALIASES = {"−": "-", 0: "0", 1: "1"}

STATE_LABELS = ("0", "1", "+", "-")


def _canonical_label(label) -> str:
    label = _LABEL_ALIASES.get(label, label)
    if label not in _LABEL_VECTORS:
        raise ValueError(f"unknown state label {label!r}; expected one of {STATE_LABELS}")
    return label


def label_vector(label) -> np.ndarray:
    """Single-qubit amplitudes for a label in {0, 1, +, -}."""
    return _LABEL_VECTORS[_canonical_label(label)].copy()


@dataclass(frozen=True)
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        n = amps.size.bit_length() - 1
        if amps.size < 2 or amps.size != 1 << n:
            raise ValueError(f"amplitude count {amps.size} is not 2**n for n >= 1")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm² = {norm})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def num_qubits(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    @property
    def norm(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    @classmethod
    def _trusted(cls, amps: np.ndarray) -> "StateVector":
        """Wrap amplitudes produced by a unitary or a renormalization."""
        obj = object.__new__(cls)
        amps.setflags(write=False)
        object.__setattr__(obj, "amplitudes", amps)
        return obj

    def tensor(self, other: "StateVector") -> "StateVector":
        return StateVector._trusted(np.kron(self.amplitudes, other.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def __len__(self):
        return self.amplitudes.size


@dataclass(frozen=True)
class DensityMatrix:
    entries: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.entries, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError("density matrix must be square")
        if not np.allclose(rho, rho.conj().T, atol=EXACT_TOL, rtol=0):
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(rho).real - 1.0) > NORM_TOL:
            raise ValueError("density matrix trace is not 1")
        if np.linalg.eigvalsh(rho).min() < -NORM_TOL:
            raise ValueError("density matrix has a negative eigenvalue")
        rho.setflags(write=False)
        object.__setattr__(self, "entries", rho)

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def maximally_mixed(cls, dimension: int = 2) -> "DensityMatrix":
        return cls(np.eye(dimension, dtype=complex) / dimension)

    @classmethod
    def from_state(cls, state: StateVector) -> "DensityMatrix":
        a = state.amplitudes
        return cls(np.outer(a, a.conj()))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def distance(self, other: "DensityMatrix") -> float:
        """Largest absolute entry-wise difference."""
        return float(np.max(np.abs(self.entries - other.entries)))


@dataclass(frozen=True)
class Gate:
    label: str
    matrix: np.ndarray = field(repr=False)
    theta: float | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape not in ((2, 2), (4, 4)):
            raise ValueError(f"gate matrix must be 2x2 or 4x4, got {m.shape}")
        if not np.allclose(m.conj().T @ m, np.eye(m.shape[0]), atol=EXACT_TOL, rtol=0):
            raise ValueError(f"gate {self.label} is not unitary")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def num_qubits(self) -> int:
        return 1 if self.matrix.shape == (2, 2) else 2

    @classmethod
    def rotation(cls, theta: float) -> "Gate":
        """R(θ) = [[cos θ, sin θ], [-sin θ, cos θ]]."""
        return _rotation_gate(float(theta))

    @classmethod
    def unitary_for_bit(cls, bit: int) -> "Gate":
        """The bit encoding: 0 -> I, 1 -> X."""
        if bit not in (0, 1):
            raise ValueError(f"encoding bit must be 0 or 1, got {bit!r}")
        return X if bit else I


@functools.lru_cache(maxsize=256)
def _rotation_gate(theta: float) -> Gate:
    c, s = math.cos(theta), math.sin(theta)
    return Gate("R", np.array([[c, s], [-s, c]]), theta=theta)


I = Gate("I", np.eye(2))
X = Gate("X", np.array([[0, 1], [1, 0]]))
H = Gate("H", np.array([[1, 1], [1, -1]]) * _SQRT1_2)
CNOT = Gate("CNOT", np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]))


@dataclass(frozen=True)
class Basis:
    label: str
    states: tuple[np.ndarray, np.ndarray] = field(repr=False)

    def outcome_label(self, bit: int) -> str:
        return ("0", "1")[bit] if self.label == "Z" else ("+", "-")[bit]


Z_BASIS = Basis("Z", (label_vector("0"), label_vector("1")))
X_BASIS = Basis("X", (label_vector("+"), label_vector("-")))
BASES = {"Z": Z_BASIS, "X": X_BASIS}


def basis_of(label) -> Basis:
    """Basis in which a state label is an eigenstate."""
    return Z_BASIS if _canonical_label(label) in ("0", "1") else X_BASIS


def label_bit(label) -> int:
    """Eigenvalue index of a state label within its own basis."""
    return 0 if _canonical_label(label) in ("0", "+") else 1


def _check_index(state: StateVector, index: int) -> None:
    if not 0 <= index < state.num_qubits:
        raise ValueError(f"qubit index {index} out of range for {state.num_qubits} qubits")


def prepare(num_qubits: int, labels: Sequence) -> StateVector:
    """Product state of single-qubit labels from {0, 1, +, -}."""
    if num_qubits < 1:
        raise ValueError("num_qubits must be >= 1")
    if len(labels) != num_qubits:
        raise ValueError(f"expected {num_qubits} labels, got {len(labels)}")
    if num_qubits == 1:
        return StateVector(label_vector(labels[0]))
    amps = np.ones(1, dtype=complex)
    for label in labels:
        amps = np.kron(amps, label_vector(label))
    return StateVector(amps)


PHI_PLUS = StateVector(np.array([_SQRT1_2, 0, 0, _SQRT1_2], dtype=complex))


def prepare_epr(num_pairs: int) -> list[StateVector]:
    """``num_pairs`` independent copies of |Φ+⟩ = (|00⟩ + |11⟩)/√2."""
    if num_pairs < 1:
        raise ValueError("num_pairs must be >= 1")
    return [PHI_PLUS for _ in range(num_pairs)]


def _apply_matrix(amps: np.ndarray, n: int, matrix: np.ndarray, target: int) -> np.ndarray:
    psi = amps.reshape(1 << target, 2, 1 << (n - target - 1))
    return (matrix @ psi).reshape(-1)


def apply_single(state: StateVector, gate: Gate, target: int) -> StateVector:
    if gate.num_qubits != 1:
        raise ValueError(f"{gate.label} is not a single-qubit gate")
    _check_index(state, target)
    return StateVector._trusted(_apply_matrix(state.amplitudes, state.num_qubits, gate.matrix, target))


def apply_cnot(state: StateVector, control: int, target: int) -> StateVector:
    _check_index(state, control)
    _check_index(state, target)
    if control == target:
        raise ValueError("control and target must differ")
    n = state.num_qubits
    psi = state.amplitudes.reshape([2] * n).copy()
    sel = [slice(None)] * n
    sel[control] = 1
    sel = tuple(sel)
    # dropping the control axis shifts later axes down by one
    axis = target if target < control else target - 1
    psi[sel] = np.flip(psi[sel], axis=axis)
    return StateVector._trusted(psi.reshape(-1))


def apply_rotation(state: StateVector, theta: float, target: int) -> StateVector:
    return apply_single(state, Gate.rotation(theta), target)


def outcome_probabilities(state: StateVector, target: int, basis: Basis = Z_BASIS) -> np.ndarray:
    _check_index(state, target)
    n = state.num_qubits
    psi = state.amplitudes
    if basis.label == "X":
        psi = _apply_matrix(psi, n, H.matrix, target)
    p = np.abs(psi.reshape([2] * n)) ** 2
    probs = p.sum(axis=tuple(i for i in range(n) if i != target))
    return probs / probs.sum()


def project(state: StateVector, target: int, basis: Basis, outcome: int) -> StateVector:
    """Post-measurement state for a given outcome (renormalized)."""
    _check_index(state, target)
    n = state.num_qubits
    vec = basis.states[outcome]
    projector = np.outer(vec, vec.conj())
    amps = _apply_matrix(state.amplitudes, n, projector, target)
    norm = math.sqrt(float(np.vdot(amps, amps).real))
    if norm < 1e-15:
        raise ValueError(f"outcome {outcome} has zero probability")
    return StateVector._trusted(amps / norm)


def measure(state: StateVector, target: int, basis: Basis, rng: np.random.Generator) -> tuple[int, StateVector]:
    """Projective measurement of one qubit; Born-rule outcome from ``rng``."""
    probs = outcome_probabilities(state, target, basis)
    outcome = int(rng.random() < probs[1])
    return outcome, project(state, target, basis, outcome)


def partial_trace(state: StateVector, keep: Iterable[int]) -> DensityMatrix:
    """Reduced density matrix on ``keep`` (in the given order)."""
    keep = list(keep)
    if not keep:
        raise ValueError("keep must name at least one qubit")
    if len(set(keep)) != len(keep):
        raise ValueError("keep contains duplicates")
    for q in keep:
        _check_index(state, q)
    n = state.num_qubits
    rest = [q for q in range(n) if q not in keep]
    psi = np.transpose(state.amplitudes.reshape([2] * n), keep + rest)
    psi = psi.reshape(1 << len(keep), 1 << len(rest))
    rho = psi @ psi.conj().T
    # symmetrize away rounding so the Hermitian check is exact
    return DensityMatrix((rho + rho.conj().T) / 2)


def fidelity(a: StateVector, b: StateVector) -> float:
    """|⟨a|b⟩|²."""
    if a.num_qubits != b.num_qubits:
        raise ValueError(f"dimension mismatch: {a.num_qubits} vs {b.num_qubits} qubits")
    return min(1.0, float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2))


def mixed_fidelity(rho: DensityMatrix, psi: StateVector) -> float:
    """⟨ψ|ρ|ψ⟩, the fidelity of a mixed state with a pure one."""
    if rho.dimension != len(psi):
        raise ValueError("dimension mismatch")
    a = psi.amplitudes
    return float(np.vdot(a, rho.entries @ a).real)


def shannon_entropy(probabilities: Iterable[float]) -> float:
    """Entropy in bits, with 0·log 0 taken as 0."""
    p = [float(x) for x in probabilities]
    if any(x < 0 for x in p):
        raise ValueError("probabilities must be non-negative")
    if abs(math.fsum(p) - 1.0) > 1e-9:
        raise ValueError(f"probabilities sum to {math.fsum(p)}, not 1")
    return math.fsum(-x * math.log2(x) for x in p if x > 0) + 0.0


# -- named-qubit registers -------------------------------------------------

_register_ids = itertools.count()


class Qubit:
    """Handle to one named qubit; follows its register through joins."""

    __slots__ = ("name", "register")

    def __init__(self, name: str, register: "Register"):
        self.name = name
        self.register = register

    def __repr__(self):
        return f"Qubit({self.name!r})"

    @property
    def index(self) -> int:
        return self.register.index(self)

    def apply(self, gate: Gate) -> None:
        self.register.apply(gate, self)

    def rotate(self, theta: float) -> None:
        self.register.apply(Gate.rotation(theta), self)

    def measure(self, basis: Basis, rng: np.random.Generator) -> int:
        return self.register.measure(self, basis, rng)

    def discard(self) -> None:
        self.register.discard(self)

    def density(self) -> DensityMatrix:
        return partial_trace(self.register.state, [self.index])


class Register:
    """Mutable owner of a StateVector whose qubits carry names.

    Each protocol index lives in its own register; registers are only joined
    when a two-qubit gate spans them.
    """

    def __init__(self, state: StateVector, names: Sequence[str]):
        if len(names) != state.num_qubits:
            raise ValueError("one name per qubit required")
        self.state = state
        self.qubits = [Qubit(name, self) for name in names]
        self.uid = next(_register_ids)

    @classmethod
    def from_labels(cls, names: Sequence[str], labels: Sequence) -> "Register":
        return cls(prepare(len(labels), labels), names)

    @classmethod
    def epr(cls, name_a: str, name_b: str) -> "Register":
        return cls(PHI_PLUS, [name_a, name_b])

    def __repr__(self):
        return f"Register({[q.name for q in self.qubits]})"

    def __getitem__(self, name: str) -> Qubit:
        for q in self.qubits:
            if q.name == name:
                return q
        raise KeyError(name)

    def index(self, qubit: Qubit) -> int:
        for i, q in enumerate(self.qubits):
            if q is qubit:
                return i
        raise ValueError(f"{qubit!r} is not in {self!r}")

    def apply(self, gate: Gate, qubit: Qubit) -> None:
        self.state = apply_single(self.state, gate, self.index(qubit))

    def cnot(self, control: Qubit, target: Qubit) -> None:
        self.state = apply_cnot(self.state, self.index(control), self.index(target))

    def measure(self, qubit: Qubit, basis: Basis, rng: np.random.Generator) -> int:
        outcome, self.state = measure(self.state, self.index(qubit), basis, rng)
        return outcome

    def add(self, name: str, label="0") -> Qubit:
        """Append a fresh qubit prepared in ``label``."""
        if len(self.qubits) >= MAX_REGISTER_QUBITS:
            raise RuntimeError(f"register would exceed {MAX_REGISTER_QUBITS} qubits")
        self.state = self.state.tensor(prepare(1, [label]))
        q = Qubit(name, self)
        self.qubits.append(q)
        return q

    def absorb(self, other: "Register") -> None:
        """Tensor ``other`` onto the end of this register."""
        if other is self:
            return
        if len(self.qubits) + len(other.qubits) > MAX_REGISTER_QUBITS:
            raise RuntimeError(f"joined register would exceed {MAX_REGISTER_QUBITS} qubits")
        self.state = self.state.tensor(other.state)
        for q in other.qubits:
            q.register = self
        self.qubits.extend(other.qubits)
        other.qubits = []

    def discard(self, qubit: Qubit) -> None:
        """Remove a qubit that is in a pure product state with the rest.

        Call only after measuring it (or on a qubit never entangled).
        """
        idx = self.index(qubit)
        n = len(self.qubits)
        # rows: the discarded qubit's two levels; columns: everything else
        m = np.moveaxis(self.state.amplitudes.reshape([2] * n), idx, 0).reshape(2, -1)
        col = int(np.argmax(np.abs(m).sum(axis=0)))
        vec = m[:, col] / np.linalg.norm(m[:, col])
        rest = vec.conj() @ m
        if abs(np.vdot(rest, rest).real - 1.0) > 1e-9:
            raise ValueError(f"{qubit!r} is entangled with its register; measure it first")
        if n == 1:
            self.qubits = []
            return
        self.state = StateVector(rest / np.linalg.norm(rest))
        del self.qubits[idx]
        # the handle keeps its (now isolated) single-qubit state
        detached = Register(StateVector(vec), [qubit.name])
        detached.qubits = [qubit]
        qubit.register = detached

    def reduced(self, qubits: Sequence[Qubit]) -> DensityMatrix:
        return partial_trace(self.state, [self.index(q) for q in qubits])


def fresh_qubit(name: str, label="0") -> Qubit:
    return Register.from_labels([name], [label]).qubits[0]


def cnot(control: Qubit, target: Qubit) -> None:
    """CNOT between two handles, joining their registers when needed."""
    if control is target:
        raise ValueError("control and target must differ")
    if control.register is not target.register:
        control.register.absorb(target.register)
    control.register.cnot(control, target)


def reduced_density(qubits: Sequence[Qubit]) -> DensityMatrix:
    """Joint reduced state of handles that may sit in different registers."""
    groups: dict[int, list[Qubit]] = {}
    regs: dict[int, Register] = {}
    for q in qubits:
        groups.setdefault(q.register.uid, []).append(q)
        regs[q.register.uid] = q.register
    rho = np.ones((1, 1), dtype=complex)
    order: list[Qubit] = []
    for uid, members in groups.items():
        rho = np.kron(rho, regs[uid].reduced(members).entries)
        order.extend(members)
    # permute factors back into the requested order
    k = len(order)
    perm = [order.index(q) for q in qubits]
    t = rho.reshape([2] * (2 * k))
    t = np.transpose(t, perm + [p + k for p in perm])
    return DensityMatrix(t.reshape(1 << k, 1 << k))
