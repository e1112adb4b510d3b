import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import all_assignments, random_qubo
from qae.embedding import (
    Embedding,
    EmbeddingError,
    TopologyError,
    TopologyGraph,
    build_topology,
    chain_strength,
    check_embedding,
    embed,
    embed_apply,
    grid_like_graph,
    unembed,
    unembed_samples,
)
from qae.encoding import QuboModel
from qae.samplers import AnnealSchedule, brute_force, simulated_anneal


def dense_model(rng, n):
    return random_qubo(rng, n)


def aligned(emb, logical):
    """Hardware assignment with every chain set to its logical bit."""
    nodes = emb.hardware_nodes()
    index = {node: i for i, node in enumerate(nodes)}
    x = np.zeros(len(nodes), dtype=np.int8)
    for v, chain in emb.chains.items():
        for node in chain:
            x[index[node]] = logical[v]
    return x


def test_complete_topology_edge_count():
    assert len(build_topology("complete", 4).edges) == 6


def test_grid_like_degree_bound():
    topo = build_topology("grid-like", 16)
    assert topo.max_degree() <= 6
    assert topo.num_nodes == 2 * 4 * 16 * 16


def test_topologies_are_deterministic():
    for kind in ("complete", "grid-like"):
        assert build_topology(kind, 5) == build_topology(kind, 5)


def test_topology_rejects_small_or_unknown():
    with pytest.raises(TopologyError):
        build_topology("complete", 3, num_vars=4)
    with pytest.raises(TopologyError):
        build_topology("grid-like", 1, num_vars=9)
    with pytest.raises(TopologyError):
        build_topology("ring", 4)


def test_topology_rejects_disconnected_graph():
    import networkx as nx

    with pytest.raises(TopologyError):
        TopologyGraph.from_networkx("x", nx.empty_graph(3))


def test_grid_like_graph_has_no_self_loops():
    G = grid_like_graph(3)
    assert all(u != v for u, v in G.edges)


def test_complete_embedding_is_identity(rng):
    m = dense_model(rng, 6)
    emb = embed(m, build_topology("complete", 6))
    assert all(len(c) == 1 for c in emb.chains.values())


@pytest.mark.parametrize("n", [4, 12, 30])
def test_grid_embedding_satisfies_invariants(rng, n):
    m = dense_model(rng, n)
    topo = build_topology("grid-like", None, n)
    emb = embed(m, topo, seed=1)
    assert check_embedding(m, topo, emb) == []
    assert any(len(c) > 1 for c in emb.chains.values()) or n <= 4


def test_embedding_is_deterministic(rng):
    m = dense_model(rng, 10)
    topo = build_topology("grid-like", None, 10)
    assert embed(m, topo, seed=3).chains == embed(m, topo, seed=3).chains


def test_checker_rejects_overlapping_chains():
    m = QuboModel([0.0, 0.0], [[0, 1.0], [0, 0]])
    topo = build_topology("complete", 3)
    problems = check_embedding(m, topo, Embedding({0: (0, 1), 1: (1, 2)}))
    assert any("shared" in p for p in problems)


def test_checker_rejects_disconnected_chain():
    m = QuboModel([0.0, 0.0], [[0, 0.0], [0, 0]])
    topo = build_topology("grid-like", 1)
    # two vertical qubits of one cell are not adjacent
    problems = check_embedding(m, topo, Embedding({0: (0, 1), 1: (4,)}))
    assert any("not connected" in p for p in problems)


def test_checker_rejects_missing_coupling_edge():
    m = QuboModel([0.0, 0.0], [[0, 1.0], [0, 0]])
    topo = build_topology("grid-like", 1)
    assert any("no edge" in p for p in check_embedding(m, topo, Embedding({0: (0,), 1: (1,)})))


def test_embedding_too_large_fails():
    m = QuboModel(np.zeros(9), np.triu(np.ones((9, 9)), 1))
    with pytest.raises(EmbeddingError):
        embed(m, build_topology("grid-like", 1))


def test_chain_strength_examples():
    assert chain_strength(QuboModel([0, 0, 0], [[0, 2.0, 0], [0, 0, -2.0], [0, 0, 0]]), 0.75) == pytest.approx(1.5)
    assert chain_strength(QuboModel([0, 0], [[0, -3.5], [0, 0]]), 1.0) == pytest.approx(3.5)


def test_chain_strength_fallback_without_couplings():
    assert chain_strength(QuboModel([1.0, -4.0], np.zeros((2, 2))), 0.5) == 2.0


@given(st.floats(1e-3, 1e3), st.integers(0, 2**31))
def test_chain_strength_is_homogeneous(t, seed):
    m = dense_model(np.random.default_rng(seed), 5)
    scaled = QuboModel(m.linear, m.quadratic * t)
    assert chain_strength(scaled, 0.9) == pytest.approx(t * chain_strength(m, 0.9), rel=1e-12)


def test_embed_apply_identity_on_complete(rng):
    m = dense_model(rng, 7)
    emb = embed(m, build_topology("complete", 7))
    hw = embed_apply(m, emb, 1.0, build_topology("complete", 7))
    assert np.array_equal(hw.linear, m.linear) and np.array_equal(hw.quadratic, m.quadratic)


def test_two_node_chain_penalty():
    m = QuboModel([0.0], [[0.0]])
    topo = build_topology("complete", 2)
    hw = embed_apply(m, Embedding({0: (0, 1)}), 0.7, topo)
    energies = {tuple(x): hw.energy(x) for x in all_assignments(2)}
    assert energies[(0, 0)] == 0.0 and energies[(1, 1)] == 0.0
    assert energies[(0, 1)] == pytest.approx(0.7) and energies[(1, 0)] == pytest.approx(0.7)


@settings(max_examples=10, deadline=None)
@given(st.integers(2, 10), st.integers(0, 2**31))
def test_aligned_optimum_matches_logical_optimum(n, seed):
    rng = np.random.default_rng(seed)
    m = dense_model(rng, n)
    topo = build_topology("grid-like", None, n)
    emb = embed(m, topo, seed=seed)
    hw = embed_apply(m, emb, chain_strength(m, 0.9), topo)
    X = all_assignments(n)
    hw_energies = hw.energies(np.array([aligned(emb, x) for x in X]))
    assert np.allclose(hw_energies, m.energies(X), atol=1e-12)
    assert hw_energies.min() == pytest.approx(brute_force(m).first[1], abs=1e-12)


def test_unembed_aligned_sample_recovers_optimum(rng):
    m = dense_model(rng, 8)
    topo = build_topology("grid-like", None, 8)
    emb = embed(m, topo, seed=0)
    best = brute_force(m).first[0]
    logical, frac = unembed(aligned(emb, best), emb)
    assert frac == 0.0 and np.array_equal(logical, best)


def test_majority_vote_and_ties():
    emb = Embedding({0: (0, 1, 2), 1: (3, 4)})
    logical, frac = unembed([1, 1, 0, 0, 1], emb)
    assert logical.tolist() == [1, 1]  # 2 of 3 votes; 1-1 tie goes to 1
    assert frac == 1.0
    logical, frac = unembed([0, 0, 0, 1, 1], emb)
    assert logical.tolist() == [0, 1] and frac == 0.0


def test_unembed_samples_fraction_per_row():
    emb = Embedding({0: (0, 1), 1: (2,)})
    _, frac = unembed_samples(np.array([[0, 1, 1], [1, 1, 0]]), emb)
    assert frac.tolist() == [0.5, 0.0]


def test_stronger_chains_break_less(rng):
    m = dense_model(rng, 8)
    topo = build_topology("grid-like", None, 8)
    emb = embed(m, topo, seed=0)
    base = chain_strength(m, 1.0)
    means = []
    for factor in (0.5, 1.0, 2.0):
        hw = embed_apply(m, emb, factor * base, topo)
        fr = []
        for seed in range(20):
            s = simulated_anneal(hw, 20, AnnealSchedule(sweeps=50), seed=seed)
            _, broken = unembed_samples(s.assignments, emb)
            fr.append(np.average(broken, weights=s.counts))
        means.append(np.mean(fr))
    assert means[0] >= means[1] >= means[2]
