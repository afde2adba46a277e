"""Efficient classical sampling of standard-basis measurements of
mostly-classical circuits.

The key fact: measuring ``R_chi |0..0>`` for a product state ``chi`` with
one-wire probabilities ``p_j = |<1|chi_j>|^2`` yields all-zeros with
probability ``(1 - 2 prod_j (1 - p_j))^2`` and any other string ``y`` with
probability ``4 prod_j (1 - p_j) * prod_j p_j^{y_j} (1-p_j)^{1-y_j}``.
Standard-basis measurements commute with classical gates, so a
mostly-classical circuit is sampled by drawing each first-layer gate's output
bits and pushing them through the classical part.

``factorized_sample_gate`` draws the same per-gate law through an explicit
factorization: a Bernoulli coin B, a highlighted root-to-leaf path in a
binary tree over influence sets choosing the minimal-rank factor J, the
conditional minimum M, and per-factor survival thresholds S.  The tree walk
is how the law decomposes into read-bounded pieces; here it is implemented
at desk scale with exact polynomial integrals for the conditional laws.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ir import Circuit, Gate, Layer, OneQubit, Or, RTensor, Toffoli, X_MATRIX, is_multi_qubit
from .nekomata import classify

ENUMERATION_CAP = 20
FACTORIZED_ARITY_CAP = 12


# ---------------------------------------------------------------------------
# exact per-gate law


@dataclass(frozen=True)
class GateOutputDistribution:
    """Exact standard-basis law of a reflection applied to all-zeros.

    ``qubits`` orders the output bits; ``kept`` marks the factor positions
    with nonzero one-probability (the others output 0 always), and ``p``
    holds those probabilities.  ``probs`` is the full law over bitstrings.
    """

    qubits: tuple[int, ...]
    kept: tuple[int, ...]
    p: tuple[float, ...]
    all_zeros_prob: float
    probs: dict[str, float]

    def nonzero_conditional(self) -> dict[str, float]:
        mass = 1.0 - self.all_zeros_prob
        if mass <= 0.0:
            return {}
        zeros = "0" * len(self.qubits)
        return {y: pr / mass for y, pr in self.probs.items() if y != zeros and pr > 0.0}


def _one_probs(g: RTensor) -> np.ndarray:
    return np.array([st.one_probability() for st in g.states])


def exact_rtensor_distribution(g: RTensor) -> GateOutputDistribution:
    k = len(g.factors)
    if k > ENUMERATION_CAP:
        raise ValueError(f"arity {k} too large for full enumeration")
    p_all = _one_probs(g)
    kept = tuple(int(i) for i in np.flatnonzero(p_all > 0.0))
    p = p_all[list(kept)]
    prod_q = float(np.prod(1.0 - p)) if len(p) else 1.0
    all_zeros = (1.0 - 2.0 * prod_q) ** 2
    probs: dict[str, float] = {}
    for pattern in range(1 << len(kept)):
        bits = ["0"] * k
        pr = 4.0 * prod_q
        for j, pos in enumerate(kept):
            if (pattern >> (len(kept) - 1 - j)) & 1:
                bits[pos] = "1"
                pr *= p[j]
            else:
                pr *= 1.0 - p[j]
        if pattern == 0:
            pr = all_zeros
        if pr > 0.0:
            probs["".join(bits)] = probs.get("".join(bits), 0.0) + float(pr)
    return GateOutputDistribution(g.qubits, kept, tuple(float(x) for x in p), float(all_zeros), probs)


def _sample_rtensor_bits(p: np.ndarray, trials: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``trials`` outputs (over the nonzero-probability factors only)."""
    k = len(p)
    out = np.zeros((trials, k), dtype=np.uint8)
    if k == 0:
        return out
    prod_q = float(np.prod(1.0 - p))
    if prod_q <= 0.25:
        # convex combination: all-zeros with prob 1 - 4 prod_q, else independent draws
        active = rng.random(trials) < 4.0 * prod_q
        draws = rng.random((trials, k)) < p
        out[active] = draws[active]
        return out
    # inverse transform on the exact law, rejecting all-zero conditional draws
    zeros = rng.random(trials) < (1.0 - 2.0 * prod_q) ** 2
    pending = np.flatnonzero(~zeros)
    while pending.size:
        draws = rng.random((pending.size, k)) < p
        hit = draws.any(axis=1)
        out[pending[hit]] = draws[hit]
        pending = pending[~hit]
    return out


def sample_rtensor(g: RTensor, rng: np.random.Generator) -> str:
    """One draw from the exact measurement law of ``R_chi |0..0>``."""
    p_all = _one_probs(g)
    kept = np.flatnonzero(p_all > 0.0)
    row = _sample_rtensor_bits(p_all[kept], 1, rng)[0]
    bits = np.zeros(len(g.factors), dtype=np.uint8)
    bits[kept] = row
    return "".join("1" if b else "0" for b in bits)


# ---------------------------------------------------------------------------
# classical evaluation


def _classical_step(bits: np.ndarray, g: Gate) -> None:
    if isinstance(g, Toffoli):
        acc = bits[:, g.controls[0]].copy()
        for c in g.controls[1:]:
            acc &= bits[:, c]
        bits[:, g.target] ^= acc
    elif isinstance(g, Or):
        acc = bits[:, g.controls[0]].copy()
        for c in g.controls[1:]:
            acc |= bits[:, c]
        bits[:, g.target] ^= acc
    elif isinstance(g, OneQubit) and np.max(np.abs(g.matrix - X_MATRIX)) <= 1e-12:
        bits[:, g.qubit] ^= 1
    else:
        raise ValueError(f"non-classical gate {type(g).__name__} in classical evaluation")


def _eval_classical(layers, bits: np.ndarray) -> np.ndarray:
    for lay in layers:
        for g in lay.gates:
            _classical_step(bits, g)
    return bits


def run_classical(c: Circuit, x: str) -> str:
    """Evaluate a purely classical circuit on a bitstring."""
    if len(x) != c.num_qubits:
        raise ValueError("input length must equal num_qubits")
    if not classify(c).purely_classical:
        raise ValueError("circuit is not purely classical")
    bits = np.array([[1 if ch == "1" else 0 for ch in x]], dtype=np.uint8)
    bits = _eval_classical(c.layers, bits)
    return "".join("1" if b else "0" for b in bits[0])


def _sample_first_layer(lay: Layer, num_qubits: int, trials: int, rng: np.random.Generator) -> np.ndarray:
    bits = np.zeros((trials, num_qubits), dtype=np.uint8)
    for g in lay.gates:
        if isinstance(g, RTensor):
            p_all = _one_probs(g)
            kept = np.flatnonzero(p_all > 0.0)
            draws = _sample_rtensor_bits(p_all[kept], trials, rng)
            qs = np.array(g.qubits)[kept]
            if qs.size:
                bits[:, qs] = draws
        elif isinstance(g, OneQubit):
            p1 = float(abs(g.matrix[1, 0]) ** 2)
            bits[:, g.qubit] = rng.random(trials) < p1
        elif isinstance(g, (Toffoli, Or)):
            pass  # classical gate on all-zeros input leaves zeros
        else:
            raise ValueError(f"unsupported first-layer gate {type(g).__name__}")
    return bits


def sample_mostly_classical_batch(c: Circuit, trials: int, rng: np.random.Generator) -> np.ndarray:
    """(trials, n_targets) samples of the target measurement of C|0..0>."""
    result = classify(c)
    if not result.mostly_classical:
        raise ValueError("circuit is not mostly classical")
    if not c.layers:
        base = np.zeros((trials, c.num_qubits), dtype=np.uint8)
    else:
        base = _sample_first_layer(c.layers[0], c.num_qubits, trials, rng)
        base = _eval_classical(c.layers[1:], base)
    targets = c.targets if c.targets is not None else tuple(range(c.num_qubits))
    return base[:, list(targets)]


def sample_mostly_classical(c: Circuit, rng: np.random.Generator) -> str:
    row = sample_mostly_classical_batch(c, 1, rng)[0]
    return "".join("1" if b else "0" for b in row)


# ---------------------------------------------------------------------------
# influence sets


@dataclass(frozen=True)
class InfluenceMap:
    """Per-input sets of output wires the input can change."""

    mode: str  # "exact" or "structural"
    sets: dict[int, frozenset[int]]

    def bound(self) -> int:
        return max((len(s) for s in self.sets.values()), default=0)


def _structural_sets(c: Circuit) -> dict[int, frozenset[int]]:
    deps: list[set[int]] = [{q} for q in range(c.num_qubits)]
    for lay in c.layers:
        for g in lay.gates:
            if isinstance(g, (Toffoli, Or)):
                for ctrl in g.controls:
                    deps[g.target] |= deps[ctrl]
    sets: dict[int, frozenset[int]] = {q: frozenset() for q in range(c.num_qubits)}
    for wire, srcs in enumerate(deps):
        for s in srcs:
            sets[s] = sets[s] | {wire}
    return sets


def influences(c: Circuit, mode: str = "exact", width_cap: int = 24) -> InfluenceMap:
    """Influence sets of a purely classical circuit.

    Exact mode toggles each input over all assignments of the inputs feeding
    its structural light cone; structural mode is the connectivity
    over-approximation (always a superset of the exact sets).
    """
    if not classify(c).purely_classical:
        raise ValueError("circuit is not purely classical")
    structural = _structural_sets(c)
    if mode == "structural":
        return InfluenceMap("structural", structural)
    if mode != "exact":
        raise ValueError("mode must be 'exact' or 'structural'")
    if c.num_qubits > width_cap:
        raise ValueError(f"width {c.num_qubits} too large for the brute-force oracle")
    # backward cones: inputs that can reach each output
    reach: dict[int, set[int]] = {q: set() for q in range(c.num_qubits)}
    for src, outs in structural.items():
        for w in outs:
            reach[w].add(src)
    sets: dict[int, frozenset[int]] = {}
    for j in range(c.num_qubits):
        cone_inputs = sorted(set().union(*(reach[w] for w in structural[j])) | {j})
        free = [q for q in cone_inputs if q != j]
        if len(free) > 22:
            raise ValueError("light cone too wide for exhaustive toggling")
        count = 1 << len(free)
        bits = np.zeros((2 * count, c.num_qubits), dtype=np.uint8)
        if free:
            assign = ((np.arange(count)[:, None] >> np.arange(len(free))[None, :]) & 1).astype(np.uint8)
            bits[:count, free] = assign
            bits[count:, free] = assign
        bits[count:, j] = 1
        outs = _eval_classical(c.layers, bits)
        diff = outs[:count] != outs[count:]
        sets[j] = frozenset(int(w) for w in np.flatnonzero(diff.any(axis=0)))
    return InfluenceMap("exact", sets)


# ---------------------------------------------------------------------------
# factorized gate sampler


@dataclass(frozen=True)
class TauNode:
    node_id: int
    depth: int
    children: tuple[int, ...]
    label: str
    factor: int | None = None  # factor position for factor leaves


@dataclass(frozen=True)
class TauTree:
    """Binary tree over distinct influence sets with factor nodes below the
    set leaves; used to pick the minimal-rank factor hierarchically."""

    nodes: tuple[TauNode, ...]
    root: int
    factor_leaves: dict[int, int]  # factor position -> node id

    def node(self, node_id: int) -> TauNode:
        return self.nodes[node_id]


def build_tau_tree(
    g: RTensor,
    classical: Circuit | None = None,
    targets: tuple[int, ...] | None = None,
    read_bound: int | None = None,
) -> TauTree:
    """Tree for ``factorized_sample_gate``.

    Each factor wire is assigned the set of targets it influences through the
    classical part, padded with the lowest-index targets up to the read
    bound; identical sets share a leaf.  Without a classical part each factor
    keys its own singleton set.
    """
    k = len(g.factors)
    if classical is None:
        leaf_sets = [(f"{{{q}}}", (j,)) for j, q in enumerate(g.qubits)]
        groups = {key: list(members) for key, members in leaf_sets}
    else:
        infl = influences(classical, mode="structural").sets
        if targets is None:
            targets = classical.targets if classical.targets is not None else tuple(
                range(classical.num_qubits)
            )
        bound = read_bound if read_bound is not None else max(
            1, 1 << sum(1 for lay in classical.layers if any(is_multi_qubit(x) for x in lay.gates))
        )
        groups = {}
        for j, q in enumerate(g.qubits):
            infl_targets = sorted(set(infl.get(q, frozenset())) & set(targets))
            padded = list(infl_targets)
            for t in sorted(targets):
                if len(padded) >= min(bound, len(targets)):
                    break
                if t not in padded:
                    padded.append(t)
            key = "{" + ",".join(str(t) for t in sorted(padded)) + "}"
            groups.setdefault(key, []).append(j)
    keys = sorted(groups)
    nodes: list[TauNode] = []

    def _build(keys_slice: list[str], depth: int) -> int:
        node_id = len(nodes)
        nodes.append(TauNode(node_id, depth, (), "", None))
        if len(keys_slice) == 1:
            key = keys_slice[0]
            child_ids = []
            for j in groups[key]:
                fid = len(nodes)
                nodes.append(TauNode(fid, depth + 1, (), f"factor:{j}", j))
                child_ids.append(fid)
            nodes[node_id] = TauNode(node_id, depth, tuple(child_ids), f"set:{key}", None)
            return node_id
        half = (len(keys_slice) + 1) // 2
        left = _build(keys_slice[:half], depth + 1)
        right = _build(keys_slice[half:], depth + 1)
        nodes[node_id] = TauNode(node_id, depth, (left, right), "internal", None)
        return node_id

    root = _build(keys, 0)
    factor_leaves = {n.factor: n.node_id for n in nodes if n.factor is not None}
    return TauTree(tuple(nodes), root, factor_leaves)


def _min_rank_polynomials(p: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-factor densities for the minimum of the rank variables.

    Factor j has rank 1 with probability 1-p_j and uniform on [0,1) with
    probability p_j.  The density of {rank_j is the strict minimum, value t}
    is ``p_j * prod_{i != j} (1 - p_i t)``, a polynomial in t; the exact
    antiderivative gives both the selection weights and the conditional CDF.
    """
    k = len(p)
    coeffs = np.zeros((k, k))
    for j in range(k):
        poly = np.array([p[j]])
        for i in range(k):
            if i != j:
                poly = np.convolve(poly, np.array([1.0, -p[i]]))
        coeffs[j, : len(poly)] = poly
    anti = coeffs / np.arange(1, k + 1)  # antiderivative coefficients for t^1..t^k
    weights = anti.sum(axis=1)  # integral over [0, 1)
    return coeffs, anti, weights


def _cdf_eval(anti_row: np.ndarray, t: np.ndarray) -> np.ndarray:
    total = np.zeros_like(t)
    power = t.copy()
    for a in anti_row:
        total += a * power
        power = power * t
    return total


@dataclass(frozen=True)
class SamplerTrace:
    """Record of the factorized randomness behind one draw."""

    b: int
    highlighted_edges: tuple[tuple[int, int, int], ...]  # (level, parent, child)
    chosen_factor: int
    min_value: float
    survival_thresholds: dict[int, float]
    survival_probs: dict[int, float]


def _subtree_masses(tree: TauTree, weights: np.ndarray) -> np.ndarray:
    masses = np.zeros(len(tree.nodes))
    order = sorted(tree.nodes, key=lambda n: -n.depth)
    for n in order:
        if n.factor is not None:
            masses[n.node_id] = weights[n.factor]
        else:
            masses[n.node_id] = sum(masses[ch] for ch in n.children)
    return masses


def _invert_cdf(anti_row: np.ndarray, weight: float, u: np.ndarray) -> np.ndarray:
    lo = np.zeros_like(u)
    hi = np.ones_like(u)
    target = u * weight
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        below = _cdf_eval(anti_row, mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def _invert_cdf_scalar(anti_row: np.ndarray, weight: float, u: float) -> float:
    lo, hi = 0.0, 1.0
    target = u * weight
    coeffs = anti_row.tolist()
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        total = 0.0
        power = mid
        for a in coeffs:
            total += a * power
            power *= mid
        if total < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def factorized_sample_gate(
    g: RTensor, tree: TauTree | None, rng: np.random.Generator
) -> tuple[str, SamplerTrace]:
    """One draw from the gate's measurement law via the factorized procedure,
    with the full randomness trace.  Output is distributed identically to
    ``exact_rtensor_distribution(g)``."""
    k = len(g.factors)
    if k > FACTORIZED_ARITY_CAP:
        raise ValueError(f"arity {k} over the factorized sampler cap")
    p_all = _one_probs(g)
    if np.any(p_all == 0.0):
        raise ValueError("elide zero-probability factors before factorized sampling")
    if k == 1:
        pr = 4.0 * p_all[0] * (1.0 - p_all[0])
        bit = int(rng.random() < pr)
        trace = SamplerTrace(bit, (), 0, 0.0, {}, {})
        return ("1" if bit else "0"), trace
    if tree is None:
        tree = build_tau_tree(g)
    p = p_all
    prod_q = float(np.prod(1.0 - p))
    b = int(rng.random() < 4.0 * prod_q - 4.0 * prod_q**2)
    coeffs, anti, weights = _min_rank_polynomials(p)
    masses = _subtree_masses(tree, weights)
    # highlight one edge out of every node with mass, independently
    highlights: dict[int, int] = {}
    edges: list[tuple[int, int, int]] = []
    for n in tree.nodes:
        if n.factor is not None or not n.children or masses[n.node_id] <= 0.0:
            continue
        total = sum(masses[ch] for ch in n.children)
        draw = rng.random() * total
        acc = 0.0
        chosen = n.children[-1]
        for ch in n.children:
            acc += masses[ch]
            if draw < acc:
                chosen = ch
                break
        highlights[n.node_id] = chosen
        edges.append((n.depth, n.node_id, chosen))
    node = tree.root
    while tree.node(node).factor is None:
        node = highlights[node]
    j_star = tree.node(node).factor
    m_val = _invert_cdf_scalar(anti[j_star], weights[j_star], rng.random())
    thresholds = {}
    survival = {}
    bits = ["0"] * k
    if b:
        bits[j_star] = "1"
    for j in range(k):
        if j == j_star:
            continue
        s = float(rng.random())
        surv = p[j] * (1.0 - m_val) / (1.0 - p[j] * m_val)
        thresholds[j] = s
        survival[j] = surv
        if b and s <= surv:
            bits[j] = "1"
    trace = SamplerTrace(b, tuple(edges), int(j_star), m_val, thresholds, survival)
    return "".join(bits), trace


def factorized_sample_batch(
    g: RTensor, trials: int, rng: np.random.Generator, tree: TauTree | None = None
) -> np.ndarray:
    """Vectorized factorized sampler (no traces); same law as the single-draw
    form, drawing J directly from the leaf weights."""
    k = len(g.factors)
    if k > FACTORIZED_ARITY_CAP:
        raise ValueError(f"arity {k} over the factorized sampler cap")
    p = _one_probs(g)
    if np.any(p == 0.0):
        raise ValueError("elide zero-probability factors before factorized sampling")
    if k == 1:
        pr = 4.0 * p[0] * (1.0 - p[0])
        return (rng.random((trials, 1)) < pr).astype(np.uint8)
    prod_q = float(np.prod(1.0 - p))
    b = rng.random(trials) < 4.0 * prod_q - 4.0 * prod_q**2
    _, anti, weights = _min_rank_polynomials(p)
    cum = np.cumsum(weights)
    j_star = np.searchsorted(cum / cum[-1], rng.random(trials), side="right").clip(0, k - 1)
    u = rng.random(trials)
    m_val = np.empty(trials)
    for j in range(k):
        mask = j_star == j
        if mask.any():
            m_val[mask] = _invert_cdf(anti[j], weights[j], u[mask])
    s = rng.random((trials, k))
    surv = p[None, :] * (1.0 - m_val[:, None]) / (1.0 - p[None, :] * m_val[:, None])
    out = (s <= surv) | (np.arange(k)[None, :] == j_star[:, None])
    out &= b[:, None]
    return out.astype(np.uint8)


# ---------------------------------------------------------------------------
# concentration statistics


@dataclass(frozen=True)
class TailEntry:
    epsilon: float
    upper_tail: float
    lower_tail: float
    bound: float


@dataclass(frozen=True)
class HammingStats:
    trials: int
    num_targets: int
    read_r: int
    mean: float
    variance: float
    tails: tuple[TailEntry, ...]


def classical_read_bound(c: Circuit) -> int:
    """2^(depth of the classical part): the read parameter for target bits as
    functions of independent first-layer output bits.  Valid for circuits
    with disjoint layer supports past the first layer."""
    result = classify(c)
    layers = c.layers if result.purely_classical else c.layers[1:]
    d = sum(1 for lay in layers if any(is_multi_qubit(g) for g in lay.gates))
    return 1 << d


def hamming_stats(
    c: Circuit,
    trials: int,
    rng: np.random.Generator,
    epsilons: tuple[float, ...] = (0.05, 0.1, 0.2),
    read_r: int | None = None,
) -> HammingStats:
    """Monte-Carlo Hamming-weight statistics of the target measurement, with
    tails compared against ``exp(-2 eps^2 n / r)``."""
    samples = sample_mostly_classical_batch(c, trials, rng)
    n = samples.shape[1]
    weights = samples.sum(axis=1)
    mean = float(weights.mean())
    variance = float(weights.var())
    r = read_r if read_r is not None else classical_read_bound(c)
    tails = []
    for eps in epsilons:
        bound = math.exp(-2.0 * eps * eps * n / r)
        upper = float(np.mean(weights >= mean + eps * n))
        lower = float(np.mean(weights <= mean - eps * n))
        tails.append(TailEntry(eps, upper, lower, bound))
    return HammingStats(trials, n, r, mean, variance, tuple(tails))
