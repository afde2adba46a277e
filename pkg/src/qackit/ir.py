"""Gate-level intermediate representation for QAC circuits.

A circuit is an ordered list of layers over ``num_qubits`` wires, with an
optional tuple of designated target wires.  The gate set is:

* ``OneQubit``  -- arbitrary 2x2 unitary on one wire,
* ``Toffoli``   -- generalized Toffoli: ``|x, b> -> |x, b ^ AND(x)>``,
* ``Or``        -- ``|x, b> -> |x, b ^ OR(x)>``,
* ``RTensor``   -- reflection ``I - 2|chi><chi|`` about a mono-product state.

Size, depth, and topology count multi-qubit gates only; one-qubit gates may
be interleaved freely and never contribute to the metrics.

Gate supports within a layer must be pairwise disjoint, with one deliberate
exception: two classically controlled gates (Toffoli/Or) may share wires that
are controls of *both*.  Such gates commute, and a restricted-fanout stage
(one control copied onto k-1 fresh wires) only fits in a single layer under
this convention.  ``validate`` enforces exactly this rule.

Circuits and gates are immutable after construction; every function here is
pure and safe to share across threads.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

ATOL = 1e-12

QubitId = int

Topology = frozenset[tuple[frozenset[int], int]]


@dataclass(frozen=True)
class LocalState:
    """One-qubit state ``amp0|0> + amp1|1>``; must be unit norm within 1e-12."""

    amp0: complex
    amp1: complex

    def vec(self) -> np.ndarray:
        return np.array([self.amp0, self.amp1], dtype=np.complex128)

    def norm_error(self) -> float:
        return abs(abs(self.amp0) ** 2 + abs(self.amp1) ** 2 - 1.0)

    def complement(self) -> "LocalState":
        """The orthogonal state, with phase fixed as (-conj(amp1), conj(amp0))."""
        a0 = complex(self.amp0)
        a1 = complex(self.amp1)
        return LocalState(-a1.conjugate(), a0.conjugate())

    def one_probability(self) -> float:
        return float(abs(self.amp1) ** 2)


KET0 = LocalState(1.0, 0.0)
KET1 = LocalState(0.0, 1.0)
PLUS = LocalState(2 ** -0.5, 2 ** -0.5)
MINUS = LocalState(2 ** -0.5, -(2 ** -0.5))


def _as_matrix(matrix) -> np.ndarray:
    m = np.asarray(matrix, dtype=np.complex128).reshape(2, 2).copy()
    m.setflags(write=False)
    return m


@dataclass(frozen=True, eq=False)
class OneQubit:
    qubit: QubitId
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", _as_matrix(self.matrix))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, OneQubit)
            and self.qubit == other.qubit
            and bool(np.array_equal(self.matrix, other.matrix))
        )


@dataclass(frozen=True)
class Toffoli:
    controls: tuple[QubitId, ...]
    target: QubitId

    def __post_init__(self):
        controls = tuple(self.controls)
        if not controls:
            raise ValueError("Toffoli needs at least one control; use an X gate instead")
        if len(set(controls)) != len(controls):
            raise ValueError("Toffoli controls must be distinct")
        if self.target in controls:
            raise ValueError("Toffoli target must not be a control")
        object.__setattr__(self, "controls", controls)


@dataclass(frozen=True)
class Or:
    controls: tuple[QubitId, ...]
    target: QubitId

    def __post_init__(self):
        controls = tuple(self.controls)
        if not controls:
            raise ValueError("Or needs at least one control")
        if len(set(controls)) != len(controls):
            raise ValueError("Or controls must be distinct")
        if self.target in controls:
            raise ValueError("Or target must not be a control")
        object.__setattr__(self, "controls", controls)


@dataclass(frozen=True)
class RTensor:
    """Reflection about the product of per-wire states; factors sorted by wire."""

    factors: tuple[tuple[QubitId, LocalState], ...]

    def __post_init__(self):
        factors = tuple((int(q), s) for q, s in self.factors)
        if not factors:
            raise ValueError("RTensor needs at least one factor")
        qubits = [q for q, _ in factors]
        if len(set(qubits)) != len(qubits):
            raise ValueError("RTensor factor qubits must be distinct")
        object.__setattr__(self, "factors", tuple(sorted(factors, key=lambda f: f[0])))

    @property
    def qubits(self) -> tuple[QubitId, ...]:
        return tuple(q for q, _ in self.factors)

    @property
    def states(self) -> tuple[LocalState, ...]:
        return tuple(s for _, s in self.factors)


Gate = Union[OneQubit, Toffoli, Or, RTensor]

X_MATRIX = np.array([[0, 1], [1, 0]], dtype=np.complex128)
H_MATRIX = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
Z_MATRIX = np.array([[1, 0], [0, -1]], dtype=np.complex128)
I_MATRIX = np.eye(2, dtype=np.complex128)


def x_gate(q: QubitId) -> OneQubit:
    return OneQubit(q, X_MATRIX)


def h_gate(q: QubitId) -> OneQubit:
    return OneQubit(q, H_MATRIX)


def z_gate(q: QubitId) -> OneQubit:
    return OneQubit(q, Z_MATRIX)


def toffoli(controls: Sequence[QubitId], target: QubitId) -> Gate:
    """Toffoli with degenerate zero-control case normalized to a OneQubit X."""
    controls = tuple(controls)
    if not controls:
        return x_gate(target)
    return Toffoli(controls, target)


def cnot(control: QubitId, target: QubitId) -> Toffoli:
    return Toffoli((control,), target)


def rtensor(factors: dict[QubitId, LocalState] | Iterable[tuple[QubitId, LocalState]]) -> RTensor:
    if isinstance(factors, dict):
        factors = factors.items()
    return RTensor(tuple(factors))


def cz(a: QubitId, b: QubitId) -> RTensor:
    """Controlled Z as the reflection about |11>."""
    return rtensor({a: KET1, b: KET1})


def support(g: Gate) -> tuple[QubitId, ...]:
    if isinstance(g, OneQubit):
        return (g.qubit,)
    if isinstance(g, (Toffoli, Or)):
        return tuple(sorted(g.controls + (g.target,)))
    return g.qubits


def is_multi_qubit(g: Gate) -> bool:
    return len(support(g)) >= 2


@dataclass(frozen=True)
class Layer:
    gates: tuple[Gate, ...]

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))


def layer(*gates: Gate) -> Layer:
    """Layer with the canonical intra-layer order: ascending minimum wire."""
    return Layer(tuple(sorted(gates, key=lambda g: min(support(g)))))


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    layers: tuple[Layer, ...]
    targets: tuple[QubitId, ...] | None = None

    def __post_init__(self):
        if self.num_qubits <= 0:
            raise ValueError("num_qubits must be positive")
        object.__setattr__(self, "layers", tuple(self.layers))
        if self.targets is not None:
            object.__setattr__(self, "targets", tuple(self.targets))

    def gates(self) -> Iterable[Gate]:
        for lay in self.layers:
            yield from lay.gates


def circuit(
    num_qubits: int,
    layers: Iterable[Iterable[Gate] | Layer],
    targets: Sequence[QubitId] | None = None,
) -> Circuit:
    built = []
    for lay in layers:
        built.append(lay if isinstance(lay, Layer) else layer(*lay))
    return Circuit(num_qubits, tuple(built), tuple(targets) if targets is not None else None)


def size(c: Circuit) -> int:
    """Number of multi-qubit gates."""
    return sum(1 for g in c.gates() if is_multi_qubit(g))


def depth(c: Circuit) -> int:
    """Number of layers containing at least one multi-qubit gate."""
    return sum(1 for lay in c.layers if any(is_multi_qubit(g) for g in lay.gates))


def topology(c: Circuit) -> Topology:
    """Set of (support, k) pairs, k indexing only multi-qubit layers."""
    entries = set()
    k = -1
    for lay in c.layers:
        multis = [g for g in lay.gates if is_multi_qubit(g)]
        if not multis:
            continue
        k += 1
        for g in multis:
            entries.add((frozenset(support(g)), k))
    return frozenset(entries)


def _unitarity_error(m: np.ndarray) -> float:
    return float(np.max(np.abs(m.conj().T @ m - np.eye(2))))


def _classical_controls(g: Gate) -> frozenset[int]:
    if isinstance(g, (Toffoli, Or)):
        return frozenset(g.controls)
    return frozenset()


def validate(c: Circuit) -> list[str]:
    """Return all invariant violations; an empty list means the circuit is valid."""
    problems: list[str] = []
    for k, lay in enumerate(c.layers):
        for j, g in enumerate(lay.gates):
            where = f"layer {k}, gate {j}"
            for q in support(g):
                if not 0 <= q < c.num_qubits:
                    problems.append(f"{where}: qubit {q} out of range")
            if isinstance(g, OneQubit) and _unitarity_error(g.matrix) > ATOL:
                problems.append(f"{where}: non-unitary matrix")
            if isinstance(g, RTensor):
                for q, s in g.factors:
                    if s.norm_error() > ATOL:
                        problems.append(f"{where}: non-normalized local state on qubit {q}")
        for j1 in range(len(lay.gates)):
            for j2 in range(j1 + 1, len(lay.gates)):
                g1, g2 = lay.gates[j1], lay.gates[j2]
                shared = set(support(g1)) & set(support(g2))
                if not shared:
                    continue
                if shared <= (_classical_controls(g1) & _classical_controls(g2)):
                    continue  # commuting classical controls may be shared
                problems.append(
                    f"layer {k}: overlapping supports on qubits {sorted(shared)}"
                )
    if c.targets is not None:
        if len(set(c.targets)) != len(c.targets):
            problems.append("duplicate target qubits")
        for q in c.targets:
            if not 0 <= q < c.num_qubits:
                problems.append(f"target qubit {q} out of range")
    return problems


def is_valid(c: Circuit) -> bool:
    return not validate(c)


def gates_equal(a: Gate, b: Gate) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, OneQubit):
        return a == b
    return a == b


def circuits_equal(a: Circuit, b: Circuit) -> bool:
    """Exact structural equality (used for serialization round-trips)."""
    if a.num_qubits != b.num_qubits or a.targets != b.targets:
        return False
    if len(a.layers) != len(b.layers):
        return False
    for la, lb in zip(a.layers, b.layers):
        if len(la.gates) != len(lb.gates):
            return False
        if not all(gates_equal(ga, gb) for ga, gb in zip(la.gates, lb.gates)):
            return False
    return True
