"""Dense state-vector oracle.

Amplitude indexing puts qubit 0 at the most significant bit of the basis
index, so ``|q0 q1 q2>`` has index ``4*q0 + 2*q1 + q2``.  Gate application is
exact up to floating point; every operation returns a fresh value.  The
practical cap is 24 qubits (2^24 complex doubles).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ir import Circuit, Gate, LocalState, OneQubit, Or, RTensor, Toffoli, support

MAX_QUBITS = 24
NORM_ATOL = 1e-10


@dataclass(frozen=True, eq=False)
class StateVector:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1).copy()
        if self.num_qubits < 1 or self.num_qubits > MAX_QUBITS:
            raise ValueError(f"num_qubits must be in [1, {MAX_QUBITS}]")
        if amps.shape[0] != 1 << self.num_qubits:
            raise ValueError("amplitude count must be 2**num_qubits")
        if abs(np.linalg.norm(amps) - 1.0) > NORM_ATOL:
            raise ValueError("state vector must be unit norm")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)


def zero_state(num_qubits: int) -> StateVector:
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(num_qubits, amps)


def basis_state(num_qubits: int, bits: str | int) -> StateVector:
    if isinstance(bits, str):
        if len(bits) != num_qubits:
            raise ValueError("bit string length must equal num_qubits")
        index = int(bits, 2) if num_qubits else 0
    else:
        index = int(bits)
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    amps[index] = 1.0
    return StateVector(num_qubits, amps)


def product_state(factors: list[LocalState]) -> StateVector:
    amps = np.array([1.0], dtype=np.complex128)
    for f in factors:
        amps = np.kron(amps, f.vec())
    return StateVector(len(factors), amps)


def _bit_shift(num_qubits: int, q: int) -> int:
    return num_qubits - 1 - q


def _apply_one_qubit(amps: np.ndarray, m: int, g: OneQubit) -> np.ndarray:
    s = _bit_shift(m, g.qubit)
    idx = np.arange(1 << m)
    i0 = idx[(idx >> s) & 1 == 0]
    i1 = i0 | (1 << s)
    out = amps.copy()
    a0, a1 = amps[i0], amps[i1]
    u = g.matrix
    out[i0] = u[0, 0] * a0 + u[0, 1] * a1
    out[i1] = u[1, 0] * a0 + u[1, 1] * a1
    return out


def _control_mask_indices(m: int, controls, value: int) -> np.ndarray:
    idx = np.arange(1 << m)
    mask = np.ones(1 << m, dtype=bool)
    for c in controls:
        bit = (idx >> _bit_shift(m, c)) & 1
        mask &= bit == value
    return idx[mask]


def _apply_toffoli(amps: np.ndarray, m: int, g: Toffoli) -> np.ndarray:
    active = _control_mask_indices(m, g.controls, 1)
    tbit = 1 << _bit_shift(m, g.target)
    lo = active[(active & tbit) == 0]
    hi = lo | tbit
    out = amps.copy()
    out[lo], out[hi] = amps[hi], amps[lo]
    return out


def _apply_or(amps: np.ndarray, m: int, g: Or) -> np.ndarray:
    idx = np.arange(1 << m)
    any_set = np.zeros(1 << m, dtype=bool)
    for c in g.controls:
        any_set |= ((idx >> _bit_shift(m, c)) & 1) == 1
    tbit = 1 << _bit_shift(m, g.target)
    active = idx[any_set & ((idx & tbit) == 0)]
    hi = active | tbit
    out = amps.copy()
    out[active], out[hi] = amps[hi], amps[active]
    return out


def _apply_rtensor(amps: np.ndarray, m: int, g: RTensor) -> np.ndarray:
    qs = g.qubits
    k = len(qs)
    base = _control_mask_indices(m, qs, 0)
    offsets = np.zeros(1 << k, dtype=np.int64)
    for pat in range(1 << k):
        off = 0
        for j in range(k):
            if (pat >> (k - 1 - j)) & 1:
                off |= 1 << _bit_shift(m, qs[j])
        offsets[pat] = off
    chi = np.array([1.0], dtype=np.complex128)
    for _, st in g.factors:
        chi = np.kron(chi, st.vec())
    sel = offsets[:, None] + base[None, :]
    gathered = amps[sel]
    overlap = np.tensordot(chi.conj(), gathered, axes=(0, 0))
    gathered = gathered - 2.0 * chi.reshape((-1,) + (1,) * overlap.ndim) * overlap[None, ...]
    out = amps.copy()
    out[sel] = gathered
    return out


def _apply_gate_raw(amps: np.ndarray, m: int, g: Gate) -> np.ndarray:
    for q in support(g):
        if not 0 <= q < m:
            raise ValueError(f"gate support {support(g)} out of range for {m} qubits")
    if isinstance(g, OneQubit):
        return _apply_one_qubit(amps, m, g)
    if isinstance(g, Toffoli):
        return _apply_toffoli(amps, m, g)
    if isinstance(g, Or):
        return _apply_or(amps, m, g)
    if isinstance(g, RTensor):
        return _apply_rtensor(amps, m, g)
    raise TypeError(f"unknown gate {type(g)!r}")


def apply_gate(state: StateVector, g: Gate) -> StateVector:
    return StateVector(state.num_qubits, _apply_gate_raw(state.amplitudes, state.num_qubits, g))


def run(c: Circuit, state: StateVector) -> StateVector:
    if c.num_qubits != state.num_qubits:
        raise ValueError("circuit and state qubit counts differ")
    amps = state.amplitudes
    for lay in c.layers:
        for g in lay.gates:
            amps = _apply_gate_raw(amps, c.num_qubits, g)
    return StateVector(c.num_qubits, amps)


def unitary(c: Circuit, max_qubits: int = 12) -> np.ndarray:
    """Dense matrix of the circuit; column j is the image of basis state j."""
    if c.num_qubits > max_qubits:
        raise ValueError(f"dense unitary capped at {max_qubits} qubits")
    dim = 1 << c.num_qubits
    mat = np.eye(dim, dtype=np.complex128)
    for lay in c.layers:
        for g in lay.gates:
            mat = _apply_gate_raw(mat, c.num_qubits, g)
    return mat


def fidelity(a: StateVector, b: StateVector) -> float:
    if a.num_qubits != b.num_qubits:
        raise ValueError("dimension mismatch")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def phase_dependent_fidelity(a: StateVector, b: StateVector) -> float:
    """1 - ||a - b||^2.  Never exceeds fidelity, and is phase sensitive."""
    if a.num_qubits != b.num_qubits:
        raise ValueError("dimension mismatch")
    return float(1.0 - np.linalg.norm(a.amplitudes - b.amplitudes) ** 2)


@dataclass(frozen=True)
class MeasurementDistribution:
    qubits: tuple[int, ...]
    probs: dict[str, float]

    def total(self) -> float:
        return float(sum(self.probs.values()))

    def prob(self, bits: str) -> float:
        return self.probs.get(bits, 0.0)


def measurement_distribution(state: StateVector, qubits) -> MeasurementDistribution:
    qubits = tuple(qubits)
    m = state.num_qubits
    if len(set(qubits)) != len(qubits):
        raise ValueError("qubits must be distinct")
    for q in qubits:
        if not 0 <= q < m:
            raise ValueError(f"qubit {q} out of range")
    probs = (np.abs(state.amplitudes) ** 2).reshape([2] * m)
    drop = tuple(ax for ax in range(m) if ax not in qubits)
    if drop:
        probs = probs.sum(axis=drop)
    kept = [q for q in range(m) if q in qubits]
    probs = np.transpose(probs, [kept.index(q) for q in qubits]).reshape(-1)
    k = len(qubits)
    table: dict[str, float] = {}
    for i, p in enumerate(probs):
        p = float(p)
        if -1e-12 <= p < 0.0:
            p = 0.0
        if p > 0.0:
            table[format(i, f"0{k}b")] = p
    return MeasurementDistribution(qubits, table)


def measure_in_basis(
    state: StateVector, qubit: int, basis_state_: LocalState
) -> list[tuple[float, StateVector | None]]:
    """Project onto ``basis_state_`` and its canonical orthogonal complement.

    Returns the two branches as (probability, collapsed state); a branch of
    probability ~0 carries ``None`` instead of a state.
    """
    m = state.num_qubits
    if not 0 <= qubit < m:
        raise ValueError(f"qubit {qubit} out of range")
    branches: list[tuple[float, StateVector | None]] = []
    shift = _bit_shift(m, qubit)
    idx = np.arange(1 << m)
    i0 = idx[(idx >> shift) & 1 == 0]
    i1 = i0 | (1 << shift)
    for vec in (basis_state_, basis_state_.complement()):
        v = vec.vec()
        coeff = v[0].conjugate() * state.amplitudes[i0] + v[1].conjugate() * state.amplitudes[i1]
        p = float(np.linalg.norm(coeff) ** 2)
        if p < 1e-15:
            branches.append((0.0, None))
            continue
        out = np.zeros_like(state.amplitudes)
        scale = 1.0 / np.sqrt(p)
        out[i0] = v[0] * coeff * scale
        out[i1] = v[1] * coeff * scale
        branches.append((p, StateVector(m, out)))
    return branches


@dataclass(frozen=True)
class NekomataReport:
    """All-zeros/all-ones target probabilities and the best nekomata fidelity."""

    all_zeros_prob: float
    all_ones_prob: float
    fidelity: float


def best_nekomata_fidelity(state: StateVector, targets) -> NekomataReport:
    """Exact maximum fidelity of ``state`` with any nekomata on ``targets``.

    The optimum over states of the form ``(|0..0, a> + |1..1, b>)/sqrt(2)``
    equals ``((sqrt(p) + sqrt(q))/sqrt(2))^2`` where p and q are the all-zeros
    and all-ones probabilities of the target wires.
    """
    targets = tuple(targets)
    if not targets:
        raise ValueError("need at least one target")
    m = state.num_qubits
    amps = state.amplitudes.reshape([2] * m)
    sel0 = tuple(0 if q in targets else slice(None) for q in range(m))
    sel1 = tuple(1 if q in targets else slice(None) for q in range(m))
    p = float(np.linalg.norm(amps[sel0]) ** 2)
    q = float(np.linalg.norm(amps[sel1]) ** 2)
    fid = 0.5 * (np.sqrt(p) + np.sqrt(q)) ** 2
    return NekomataReport(p, q, float(fid))
