from __future__ import annotations

import numpy as np
import pytest

from qackit import (
    KET1,
    PLUS,
    Or,
    RTensor,
    Toffoli,
    apply_gate,
    build_depth2_nekomata,
    build_tau_tree,
    circuit,
    classical_read_bound,
    cnot,
    exact_rtensor_distribution,
    factorized_sample_batch,
    factorized_sample_gate,
    fanout_tree,
    h_gate,
    hamming_stats,
    influences,
    measurement_distribution,
    run,
    run_classical,
    rtensor,
    sample_mostly_classical,
    sample_mostly_classical_batch,
    sample_rtensor,
    solve_bias,
    x_gate,
    zero_state,
)
from qackit.ir import LocalState
from qackit.rng import substream

from conftest import (
    counts_from_rows,
    haar_local,
    random_mostly_classical_circuit,
    tv_distance,
)


# ---------------------------------------------------------------------------
# exact per-gate law


def test_exact_distribution_z_and_cz():
    assert exact_rtensor_distribution(rtensor({0: KET1})).probs == {"0": 1.0}
    assert exact_rtensor_distribution(rtensor({0: KET1, 1: KET1})).probs == {"00": 1.0}


def test_exact_distribution_plus_plus():
    dist = exact_rtensor_distribution(rtensor({0: PLUS, 1: PLUS}))
    for key in ("00", "01", "10", "11"):
        assert dist.probs[key] == pytest.approx(0.25)


def test_exact_distribution_matches_oracle():
    rng = substream(31)
    for _ in range(60):
        k = int(rng.integers(1, 7))
        g = rtensor({q: haar_local(rng) for q in range(k)})
        dist = exact_rtensor_distribution(g)
        oracle = measurement_distribution(apply_gate(zero_state(k), g), range(k))
        keys = set(dist.probs) | set(oracle.probs)
        for y in keys:
            assert dist.probs.get(y, 0.0) == pytest.approx(oracle.probs.get(y, 0.0), abs=1e-10)
        assert sum(dist.probs.values()) == pytest.approx(1.0, abs=1e-12)


def test_exact_distribution_elides_zero_factors():
    g = rtensor({0: LocalState(1.0, 0.0), 1: PLUS})
    dist = exact_rtensor_distribution(g)
    assert dist.kept == (1,)
    assert all(y[0] == "0" for y in dist.probs)
    oracle = measurement_distribution(apply_gate(zero_state(2), g), (0, 1))
    for y, p in oracle.probs.items():
        assert dist.probs.get(y, 0.0) == pytest.approx(p, abs=1e-12)


def test_exact_distribution_arity_cap():
    g = rtensor({q: PLUS for q in range(21)})
    with pytest.raises(ValueError, match="enumeration"):
        exact_rtensor_distribution(g)


# ---------------------------------------------------------------------------
# direct gate sampler


def test_sample_rtensor_cz_always_zero():
    rng = substream(32)
    g = rtensor({0: KET1, 1: KET1})
    assert all(sample_rtensor(g, rng) == "00" for _ in range(50))


def test_sample_rtensor_plus_plus_tv():
    rng = substream(33)
    g = rtensor({0: PLUS, 1: PLUS})
    counts: dict[str, int] = {}
    trials = 20000
    for _ in range(trials):
        y = sample_rtensor(g, rng)
        counts[y] = counts.get(y, 0) + 1
    assert tv_distance(counts, exact_rtensor_distribution(g).probs, trials) < 0.02


def test_sample_rtensor_rejection_branch():
    # prod(1 - p) > 1/4 exercises the inverse-transform path
    weak = LocalState(np.sqrt(0.8), np.sqrt(0.2))
    g = rtensor({0: weak, 1: weak})
    rng = substream(34)
    trials = 30000
    counts: dict[str, int] = {}
    for _ in range(trials):
        y = sample_rtensor(g, rng)
        counts[y] = counts.get(y, 0) + 1
    assert tv_distance(counts, exact_rtensor_distribution(g).probs, trials) < 0.02


def test_sample_rtensor_nice_boundary():
    # prod(1 - p) = 1/4 exactly: convex-combination path
    p = 0.5
    g = rtensor({0: LocalState(np.sqrt(1 - p), np.sqrt(p)), 1: LocalState(np.sqrt(1 - p), np.sqrt(p))})
    rng = substream(35)
    trials = 30000
    counts: dict[str, int] = {}
    for _ in range(trials):
        y = sample_rtensor(g, rng)
        counts[y] = counts.get(y, 0) + 1
    exact = exact_rtensor_distribution(g).probs
    zeros_freq = counts.get("00", 0) / trials
    sigma = np.sqrt(exact["00"] * (1 - exact["00"]) / trials)
    assert abs(zeros_freq - exact["00"]) <= 3 * sigma + 1e-9


# ---------------------------------------------------------------------------
# classical evaluation


def test_run_classical_examples():
    assert run_classical(circuit(3, [[Toffoli((0, 1), 2)]]), "110") == "111"
    assert run_classical(circuit(3, [[Or((0, 1), 2)]]), "010") == "011"
    assert run_classical(fanout_tree(8, 2), "10000000") == "11111111"


def test_run_classical_matches_statevector():
    c = fanout_tree(8, 2)
    out = run(c, zero_state(8))  # all-zeros basis input stays put
    assert np.argmax(np.abs(out.amplitudes)) == 0
    out = run(c, __import__("qackit").basis_state(8, "10000000"))
    assert np.argmax(np.abs(out.amplitudes)) == (1 << 8) - 1


def test_run_classical_rejects_quantum_gates():
    with pytest.raises(ValueError, match="not purely classical"):
        run_classical(circuit(1, [[h_gate(0)]]), "0")


# ---------------------------------------------------------------------------
# mostly-classical circuit sampling


def test_sample_deterministic_circuit():
    c = circuit(2, [[rtensor({0: KET1, 1: KET1})], [cnot(0, 1)]], targets=(0, 1))
    rng = substream(36)
    for _ in range(20):
        assert sample_mostly_classical(c, rng) == "00"


def test_sample_grid_zeros_frequency():
    bias = solve_bias(2, 3)
    c = build_depth2_nekomata(2, 3, bias)
    rng = substream(37)
    trials = 100_000
    rows = sample_mostly_classical_batch(c, trials, rng)
    zeros = float(np.mean(~rows.any(axis=1)))
    sigma = np.sqrt(0.25 / trials)
    assert abs(zeros - 0.5) <= 3 * sigma


def test_sample_cat_distribution():
    c = circuit(4, [[h_gate(0)]] + [list(lay.gates) for lay in fanout_tree(4, 2).layers], targets=(0, 1, 2, 3))
    rng = substream(38)
    trials = 50_000
    rows = sample_mostly_classical_batch(c, trials, rng)
    counts = counts_from_rows(rows)
    assert set(counts) == {"0000", "1111"}
    assert abs(counts["0000"] / trials - 0.5) <= 3 * np.sqrt(0.25 / trials)


def test_sample_matches_oracle_random_circuits():
    rng = substream(39)
    for _ in range(8):
        c = random_mostly_classical_circuit(rng, max_qubits=8, max_targets=4)
        trials = 40_000
        rows = sample_mostly_classical_batch(c, trials, substream(40, _))
        exact = measurement_distribution(run(c, zero_state(c.num_qubits)), c.targets)
        assert tv_distance(counts_from_rows(rows), exact.probs, trials) < 0.02


def test_sample_rejects_non_classical():
    c = circuit(2, [[cnot(0, 1)], [h_gate(0)]])
    with pytest.raises(ValueError, match="mostly classical"):
        sample_mostly_classical(c, substream(41))


# ---------------------------------------------------------------------------
# influence sets


def test_influences_single_cnot():
    c = circuit(2, [[cnot(0, 1)]])
    infl = influences(c)
    assert infl.sets[0] == frozenset({0, 1})
    assert infl.sets[1] == frozenset({1})


def test_influences_identity():
    c = circuit(3, [])
    infl = influences(c)
    assert all(infl.sets[q] == frozenset({q}) for q in range(3))


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_influences_fanout_tree(d):
    c = fanout_tree(1 << d, 2)
    infl = influences(c)
    assert infl.sets[0] == frozenset(range(1 << d))


def test_influences_exact_subset_of_structural():
    rng = substream(42)
    for _ in range(10):
        m = int(rng.integers(3, 8))
        layers = []
        for _ in range(int(rng.integers(1, 4))):
            wires = list(rng.permutation(m))
            gates = []
            while len(wires) >= 2 and rng.random() < 0.8:
                k = int(rng.integers(2, min(3, len(wires)) + 1))
                chosen, wires = wires[:k], wires[k:]
                gates.append(Toffoli(tuple(int(q) for q in chosen[:-1]), int(chosen[-1])))
            if gates:
                layers.append(gates)
        if not layers:
            continue
        c = circuit(m, layers)
        exact = influences(c, mode="exact")
        structural = influences(c, mode="structural")
        d = sum(1 for lay in c.layers if lay.gates)
        for q in range(m):
            assert exact.sets[q] <= structural.sets[q]
            assert len(structural.sets[q]) <= 1 << d


def test_influences_requires_classical():
    with pytest.raises(ValueError):
        influences(circuit(1, [[h_gate(0)]]))


# ---------------------------------------------------------------------------
# factorized sampler


def test_factorized_single_qubit_reduces_to_bernoulli():
    g = rtensor({0: PLUS})
    rng = substream(43)
    draws = [factorized_sample_gate(g, None, rng)[0] for _ in range(5000)]
    freq = draws.count("1") / 5000
    # P(1) = 4 p (1 - p) = 1 at p = 1/2
    assert freq == pytest.approx(1.0)


def test_factorized_all_ones_factors_output_zero():
    g = rtensor({0: KET1, 1: KET1})
    rng = substream(44)
    for _ in range(20):
        bits, trace = factorized_sample_gate(g, None, rng)
        assert bits == "00" and trace.b == 0


def test_factorized_trace_has_single_highlighted_path():
    rng = substream(45)
    g = rtensor({q: haar_local(rng) for q in range(4)})
    tree = build_tau_tree(g)
    bits, trace = factorized_sample_gate(g, tree, rng)
    by_parent = {parent: child for _, parent, child in trace.highlighted_edges}
    node = tree.root
    path = 0
    while tree.node(node).factor is None:
        assert node in by_parent
        node = by_parent[node]
        path += 1
    assert tree.node(node).factor == trace.chosen_factor
    assert path >= 1


def test_factorized_matches_exact_law():
    rng = substream(46)
    g = rtensor({0: PLUS, 1: PLUS})
    trials = 50_000
    rows = factorized_sample_batch(g, trials, rng)
    assert tv_distance(counts_from_rows(rows), exact_rtensor_distribution(g).probs, trials) < 0.02


def test_factorized_single_draw_matches_exact_law():
    rng = substream(47)
    g = rtensor({q: haar_local(rng) for q in range(3)})
    if any(s.one_probability() == 0.0 for s in g.states):
        pytest.skip("zero-probability factor drawn")
    trials = 8_000
    tree = build_tau_tree(g)
    singles: dict[str, int] = {}
    r1 = substream(48, 0)
    for _ in range(trials):
        y, _ = factorized_sample_gate(g, tree, r1)
        singles[y] = singles.get(y, 0) + 1
    assert tv_distance(singles, exact_rtensor_distribution(g).probs, trials) < 0.03


def test_factorized_requires_nonzero_factors():
    g = rtensor({0: LocalState(1.0, 0.0), 1: PLUS})
    with pytest.raises(ValueError, match="elide"):
        factorized_sample_gate(g, None, substream(49))


def test_tau_tree_from_circuit_influences():
    # factors feeding a fanout tree: influence sets padded to the read bound
    tree_circ = fanout_tree(4, 2)
    g = rtensor({0: PLUS, 1: PLUS, 2: PLUS, 3: PLUS})
    tree = build_tau_tree(g, classical=tree_circ, targets=(0, 1, 2, 3))
    assert set(tree.factor_leaves) == {0, 1, 2, 3}
    depths = {tree.node(n).depth for n in tree.factor_leaves.values()}
    assert all(d >= 1 for d in depths)


# ---------------------------------------------------------------------------
# hamming statistics


def test_hamming_stats_deterministic_circuit():
    c = circuit(2, [[x_gate(0)], [cnot(0, 1)]], targets=(0, 1))
    stats = hamming_stats(c, 2000, substream(50))
    assert stats.variance == 0.0
    assert stats.mean == 2.0


def test_hamming_read_bound():
    c = circuit(4, [[h_gate(q) for q in range(4)]], targets=(0, 1, 2, 3))
    assert classical_read_bound(c) == 1
    coin = circuit(
        4,
        [[h_gate(0)]] + [list(lay.gates) for lay in fanout_tree(4, 2).layers],
        targets=(0, 1, 2, 3),
    )
    assert classical_read_bound(coin) == 4


def test_hamming_tails_independent_bits():
    n = 100
    c = circuit(n, [[h_gate(q) for q in range(n)]], targets=tuple(range(n)))
    stats = hamming_stats(c, 20_000, substream(51))
    assert stats.read_r == 1
    for entry in stats.tails:
        slack = 3 * np.sqrt(max(entry.bound * (1 - entry.bound), 1e-12) / stats.trials)
        assert entry.upper_tail <= entry.bound + slack
        assert entry.lower_tail <= entry.bound + slack


def test_first_layer_classical_gates_give_zeros():
    # Toffoli/OR in the first layer act on all-zeros input and stay zero
    c = circuit(3, [[Toffoli((0,), 1)], [cnot(1, 2)]], targets=(0, 1, 2))
    rng = substream(52)
    for _ in range(10):
        assert sample_mostly_classical(c, rng) == "000"


def test_factorized_chosen_factor_matches_analytic_weights():
    # P(J = j) equals the integral of p_j prod_{i!=j}(1 - p_i t) over [0,1),
    # normalized by 1 - prod(1 - p_i)
    from qackit.sampling import _min_rank_polynomials, _one_probs

    rng = substream(53)
    g = rtensor({q: haar_local(rng) for q in range(3)})
    p = _one_probs(g)
    if np.any(p == 0.0):
        pytest.skip("zero-probability factor drawn")
    _, _, weights = _min_rank_polynomials(p)
    assert weights.sum() == pytest.approx(1.0 - np.prod(1.0 - p), abs=1e-12)
    counts = np.zeros(3)
    trials = 20_000
    r = substream(54)
    tree = build_tau_tree(g)
    for _ in range(trials):
        _, trace = factorized_sample_gate(g, tree, r)
        counts[trace.chosen_factor] += 1
    expected = weights / weights.sum()
    for j in range(3):
        sigma = np.sqrt(expected[j] * (1 - expected[j]) / trials)
        assert abs(counts[j] / trials - expected[j]) <= 4 * sigma + 1e-3


def test_factorized_min_value_matches_conditional_cdf():
    # empirical law of M given J against the exact polynomial CDF
    from qackit.sampling import _cdf_eval, _min_rank_polynomials, _one_probs

    rng = substream(55)
    g = rtensor({q: haar_local(rng) for q in range(2)})
    p = _one_probs(g)
    if np.any(p == 0.0):
        pytest.skip("zero-probability factor drawn")
    _, anti, weights = _min_rank_polynomials(p)
    trials = 10_000
    r = substream(56)
    values = {0: [], 1: []}
    tree = build_tau_tree(g)
    for _ in range(trials):
        _, trace = factorized_sample_gate(g, tree, r)
        values[trace.chosen_factor].append(trace.min_value)
    for j in (0, 1):
        sample = np.sort(np.array(values[j]))
        if sample.size < 500:
            continue
        grid = np.linspace(0.05, 0.95, 10)
        cdf_exact = _cdf_eval(anti[j], grid) / weights[j]
        cdf_emp = np.searchsorted(sample, grid) / sample.size
        assert np.max(np.abs(cdf_emp - cdf_exact)) < 0.05


def test_factorized_law_invariant_under_tree_shape():
    # the tree only factorizes the choice of J; the output law must not
    # depend on which influence sets shaped it
    rng = substream(57)
    g = rtensor({q: haar_local(rng) for q in range(4)})
    if any(s.one_probability() == 0.0 for s in g.states):
        pytest.skip("zero-probability factor drawn")
    classical = fanout_tree(4, 2)
    shaped = build_tau_tree(g, classical=classical, targets=(0, 1, 2, 3))
    trials = 15_000
    a: dict[str, int] = {}
    b: dict[str, int] = {}
    r1, r2 = substream(58, 0), substream(58, 1)
    for _ in range(trials):
        y1, _ = factorized_sample_gate(g, None, r1)
        y2, _ = factorized_sample_gate(g, shaped, r2)
        a[y1] = a.get(y1, 0) + 1
        b[y2] = b.get(y2, 0) + 1
    exact = exact_rtensor_distribution(g).probs
    assert tv_distance(a, exact, trials) < 0.03
    assert tv_distance(b, exact, trials) < 0.03


def test_hamming_stats_read_override():
    c = circuit(4, [[h_gate(q) for q in range(4)]], targets=(0, 1, 2, 3))
    stats = hamming_stats(c, 1000, substream(59), read_r=4)
    assert stats.read_r == 4
