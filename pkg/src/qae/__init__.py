"""Lowest eigenvalue of a real symmetric matrix by iterated QUBO annealing."""
from qae.config import ConfigError, RunConfig, load_config, parse_config
from qae.core import (
    ConvergenceTrace,
    EigenResult,
    NumericalError,
    RepeatRecord,
    ResultRecord,
    exact_diagonalize,
    extract_subqubo,
    fine_structure_splitting,
    priority_list,
    rayleigh_quotient,
    run_qae,
    select_subspace,
)
from qae.embedding import (
    Embedding,
    EmbeddingError,
    TopologyGraph,
    build_topology,
    chain_strength,
    embed,
    embed_apply,
    unembed,
)
from qae.encoding import EncodingState, QuboModel, build_qubo, decode_sample, functional, qubo_energy, sigma_for_iteration
from qae.matrix_io import SymmetricMatrix, generate_ci_like_matrix, load_matrix, read_trace, write_matrix, write_trace
from qae.samplers import AnnealSchedule, SampleSet, brute_force, simulated_anneal, steepest_descent

__all__ = [name for name in dir() if not name.startswith("_")]
