from __future__ import annotations

import numpy as np
import pytest

from qackit import (
    KET0,
    KET1,
    LocalState,
    PLUS,
    RTensor,
    Toffoli,
    apply_gate,
    basis_state,
    best_nekomata_fidelity,
    circuit,
    cnot,
    fidelity,
    h_gate,
    measure_in_basis,
    measurement_distribution,
    phase_dependent_fidelity,
    product_state,
    rtensor,
    run,
    zero_state,
)
from qackit.statevec import StateVector, unitary

from conftest import haar_local, haar_state, random_qac_circuit
from qackit.rng import substream


def cat(n: int) -> StateVector:
    amps = np.zeros(1 << n, dtype=complex)
    amps[0] = amps[-1] = 2**-0.5
    return StateVector(n, amps)


def test_toffoli_definition():
    out = apply_gate(basis_state(3, "110"), Toffoli((0, 1), 2))
    assert np.argmax(np.abs(out.amplitudes)) == int("111", 2)


def test_reflection_about_one_is_z():
    g = rtensor({0: KET1})
    s0 = apply_gate(basis_state(1, "0"), g)
    s1 = apply_gate(basis_state(1, "1"), g)
    assert np.allclose(s0.amplitudes, [1, 0])
    assert np.allclose(s1.amplitudes, [0, -1])


def test_reflection_about_plus_plus():
    g = rtensor({0: PLUS, 1: PLUS})
    out = apply_gate(basis_state(2, "00"), g)
    assert np.allclose(out.amplitudes, [0.5, -0.5, -0.5, -0.5], atol=1e-12)


def test_run_parity_circuit():
    c = circuit(4, [[cnot(1, 0)], [cnot(2, 0)], [cnot(3, 0)]])
    out = run(c, basis_state(4, "0111"))
    assert np.argmax(np.abs(out.amplitudes)) == int("1111", 2)


def test_run_empty_and_hh():
    s = basis_state(2, "10")
    assert np.array_equal(run(circuit(2, []), s).amplitudes, s.amplitudes)
    c = circuit(2, [[h_gate(0)], [h_gate(0)]])
    assert np.max(np.abs(run(c, s).amplitudes - s.amplitudes)) < 1e-12


def test_fidelity_examples():
    assert fidelity(cat(2), cat(2)) == pytest.approx(1.0)
    assert fidelity(basis_state(2, "00"), basis_state(2, "11")) == 0.0
    assert fidelity(basis_state(2, "00"), cat(2)) == pytest.approx(0.5)


def test_phase_dependent_fidelity_examples():
    psi = StateVector(2, haar_state(4, substream(1)))
    assert phase_dependent_fidelity(psi, psi) == pytest.approx(1.0)
    neg = StateVector(2, -psi.amplitudes)
    assert phase_dependent_fidelity(psi, neg) == pytest.approx(-3.0)
    assert fidelity(psi, neg) == pytest.approx(1.0)
    plus = product_state([PLUS])
    assert phase_dependent_fidelity(basis_state(1, "0"), plus) == pytest.approx(2**0.5 - 1)


def test_phase_dependent_never_exceeds_fidelity():
    rng = substream(2)
    for _ in range(200):
        a = StateVector(3, haar_state(8, rng))
        b = StateVector(3, haar_state(8, rng))
        assert phase_dependent_fidelity(a, b) <= fidelity(a, b) + 1e-12


def test_measurement_distribution_cat3():
    dist = measurement_distribution(cat(3), (0, 1, 2))
    assert set(dist.probs) == {"000", "111"}
    assert dist.probs["000"] == pytest.approx(0.5)
    assert dist.probs["111"] == pytest.approx(0.5)


def test_measurement_distribution_plus_and_reflection():
    dist = measurement_distribution(product_state([PLUS]), (0,))
    assert dist.probs["0"] == pytest.approx(0.5)
    out = apply_gate(basis_state(2, "00"), rtensor({0: PLUS, 1: PLUS}))
    dist2 = measurement_distribution(out, (0, 1))
    for key in ("00", "01", "10", "11"):
        assert dist2.probs[key] == pytest.approx(0.25)


def test_measurement_distribution_qubit_order():
    s = run(circuit(2, [[h_gate(0)]]), basis_state(2, "01"))
    assert measurement_distribution(s, (1, 0)).probs["10"] == pytest.approx(0.5)


def test_measure_in_basis_examples():
    branches = measure_in_basis(basis_state(1, "0"), 0, KET0)
    assert branches[0][0] == pytest.approx(1.0)
    assert branches[1][0] == 0.0 and branches[1][1] is None
    branches = measure_in_basis(product_state([PLUS]), 0, KET0)
    assert branches[0][0] == pytest.approx(0.5)
    assert branches[1][0] == pytest.approx(0.5)


def test_measurement_commutes_with_trailing_reflection():
    # measuring one wire of R_{delta x chi} psi in the delta basis matches
    # measuring psi first, then applying R_chi on the delta branch
    rng = substream(3)
    for _ in range(25):
        m = int(rng.integers(3, 5))
        wire = int(rng.integers(0, m))
        delta = haar_local(rng)
        others = [q for q in range(m) if q != wire]
        chi = {q: haar_local(rng) for q in rng.choice(others, size=int(rng.integers(1, m - 1)), replace=False)}
        psi = StateVector(m, haar_state(1 << m, rng))
        after = apply_gate(psi, rtensor({wire: delta, **chi}))
        got = measure_in_basis(after, wire, delta)
        base = measure_in_basis(psi, wire, delta)
        expect = [
            (base[0][0], apply_gate(base[0][1], rtensor(chi)) if base[0][1] else None),
            base[1],
        ]
        for (pa, sa), (pb, sb) in zip(got, expect):
            assert pa == pytest.approx(pb, abs=1e-10)
            if sa is not None:
                assert np.max(np.abs(sa.amplitudes - sb.amplitudes)) < 1e-10


def test_best_nekomata_fidelity_examples():
    rep = best_nekomata_fidelity(cat(2), (0, 1))
    assert rep.fidelity == pytest.approx(1.0)
    assert rep.all_zeros_prob == pytest.approx(0.5)
    rep2 = best_nekomata_fidelity(basis_state(2, "00"), (0, 1))
    assert rep2.fidelity == pytest.approx(0.5)
    amps = np.zeros(4, dtype=complex)
    amps[0] = np.sqrt(0.9)
    amps[3] = np.sqrt(0.1)
    rep3 = best_nekomata_fidelity(StateVector(2, amps), (0, 1))
    assert rep3.fidelity == pytest.approx(0.8)


def test_best_nekomata_fidelity_matches_phase_scan():
    # brute-force the best 2-nekomata (|00> e^{i phi} + |11>)/sqrt(2) and
    # compare with the closed form
    amps = np.zeros(4, dtype=complex)
    amps[0] = np.sqrt(0.9)
    amps[3] = np.sqrt(0.1) * np.exp(0.7j)
    state = StateVector(2, amps)
    best = 0.0
    for phi in np.linspace(0, 2 * np.pi, 4001):
        nu = np.zeros(4, dtype=complex)
        nu[0] = np.exp(1j * phi) * 2**-0.5
        nu[3] = 2**-0.5
        best = max(best, abs(np.vdot(nu, amps)) ** 2)
    rep = best_nekomata_fidelity(state, (0, 1))
    assert rep.fidelity == pytest.approx(best, abs=1e-6)


def test_best_nekomata_upper_bound_random():
    rng = substream(4)
    for _ in range(200):
        m = int(rng.integers(2, 5))
        state = StateVector(m, haar_state(1 << m, rng))
        n_targets = int(rng.integers(1, m + 1))
        targets = tuple(int(q) for q in rng.choice(m, size=n_targets, replace=False))
        rep = best_nekomata_fidelity(state, targets)
        assert rep.fidelity <= 0.5 + np.sqrt(min(rep.all_zeros_prob, rep.all_ones_prob)) + 1e-12
        assert (rep.fidelity > 1 - 1e-9) == (
            abs(rep.all_zeros_prob - 0.5) < 1e-9 and abs(rep.all_ones_prob - 0.5) < 1e-9
        )


def test_controlled_target_probability_state():
    # states with p = 1/2 exactly and q >= 1/2 - (2/3)eps have best fidelity >= 1 - eps
    rng = substream(5)
    for _ in range(50):
        eps = float(rng.random() * 0.4 + 0.05)
        q = 0.5 - (2.0 / 3.0) * eps * float(rng.random())
        amps = np.zeros(8, dtype=complex)
        amps[0] = np.sqrt(0.5)
        amps[7] = np.sqrt(q)
        amps[3] = np.sqrt(0.5 - q)  # junk outside both target sectors
        rep = best_nekomata_fidelity(StateVector(3, amps), (0, 1))
        assert abs(rep.all_zeros_prob - 0.5) < 1e-12
        assert rep.fidelity >= 1 - eps - 1e-12


def test_norm_preservation_random_gates():
    rng = substream(6)
    for _ in range(60):
        c = random_qac_circuit(rng, max_qubits=5, max_depth=3)
        state = StateVector(c.num_qubits, haar_state(1 << c.num_qubits, rng))
        out = run(c, state)
        assert abs(np.linalg.norm(out.amplitudes) - 1.0) < 1e-12


def test_unitary_matches_run():
    rng = substream(7)
    c = random_qac_circuit(rng, max_qubits=4, max_depth=3)
    u = unitary(c)
    assert np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) < 1e-10
    for idx in range(1 << c.num_qubits):
        out = run(c, basis_state(c.num_qubits, idx))
        assert np.max(np.abs(u[:, idx] - out.amplitudes)) < 1e-12


def test_dimension_mismatch_errors():
    with pytest.raises(ValueError):
        fidelity(zero_state(2), zero_state(3))
    with pytest.raises(ValueError):
        run(circuit(3, []), zero_state(2))
    with pytest.raises(ValueError):
        measurement_distribution(zero_state(2), (5,))
