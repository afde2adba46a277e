"""qackit: a gate-level toolkit for low-depth QAC circuits.

Circuit IR and structural metrics, compiler-style rewrites (reflection
normal form, OR expansion, Hadamard conjugation), fanout trees and
parity/cat/nekomata constructions, an exact dense state-vector oracle,
classical samplers for mostly-classical circuits, and numerical checks of
the quantitative facts behind the constructions.
"""
from .ir import (
    Circuit,
    Gate,
    KET0,
    KET1,
    Layer,
    LocalState,
    MINUS,
    OneQubit,
    Or,
    PLUS,
    RTensor,
    Toffoli,
    circuit,
    circuits_equal,
    cnot,
    cz,
    depth,
    h_gate,
    is_valid,
    layer,
    rtensor,
    size,
    support,
    toffoli,
    topology,
    validate,
    x_gate,
    z_gate,
)
from .serial import CircuitFormatError, deserialize, serialize
from .statevec import (
    MeasurementDistribution,
    NekomataReport,
    StateVector,
    apply_gate,
    basis_state,
    best_nekomata_fidelity,
    fidelity,
    measure_in_basis,
    measurement_distribution,
    phase_dependent_fidelity,
    product_state,
    run,
    unitary,
    zero_state,
)
from .transforms import (
    ReferenceUnitary,
    cat_from_restricted_fanout,
    conjugate_by_hadamards,
    dagger,
    expand_or,
    fanout_tree,
    fanout_unitary,
    or_cz_collapse_check,
    parity_from_nekomata,
    parity_unitary,
    permute_qubits,
    synthesize_rtensor,
    to_rtensor_normal_form,
)
from .nekomata import (
    ClassificationResult,
    GridParams,
    ImpurityBound,
    build_depth2_nekomata,
    build_depthd_nekomata,
    choose_columns,
    classify,
    impurity_bound,
    solve_bias,
)
from .sampling import (
    GateOutputDistribution,
    HammingStats,
    InfluenceMap,
    SamplerTrace,
    TauTree,
    build_tau_tree,
    classical_read_bound,
    exact_rtensor_distribution,
    factorized_sample_batch,
    factorized_sample_gate,
    hamming_stats,
    influences,
    run_classical,
    sample_mostly_classical,
    sample_mostly_classical_batch,
    sample_rtensor,
)
from .analysis import (
    ChainBoundReport,
    Depth2Construction,
    Graph,
    IndependentSetResult,
    InterpolationResult,
    ProjectionChain,
    ReductionResult,
    angular_distance,
    angular_triangle_check,
    chain_product_value,
    check_cos_exp_inequality,
    check_projection_chain_bound,
    construction_success,
    generalized_markov_threshold,
    half_plus_min_bound_holds,
    is_independent,
    optimal_interpolation,
    permutation_independent_set,
    reduce_depth2_construction,
)
from .rng import substream

__version__ = "0.1.0"
