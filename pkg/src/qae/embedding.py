"""Limited-connectivity topologies, greedy minor embedding and chain handling."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import minorminer
import networkx as nx
import numpy as np

from qae.encoding import QuboModel

CELL = 4  # qubits per side of a grid-like unit cell


class EmbeddingError(RuntimeError):
    pass


class TopologyError(ValueError):
    pass


@dataclass(frozen=True)
class TopologyGraph:
    """Hardware graph: integer nodes, undirected edges, adjacency lists."""

    kind: str
    nodes: tuple[int, ...]
    edges: frozenset
    adjacency: tuple[tuple[int, ...], ...]

    @classmethod
    def from_networkx(cls, kind: str, G: nx.Graph) -> "TopologyGraph":
        G = nx.convert_node_labels_to_integers(G, ordering="sorted")
        if nx.number_of_selfloops(G):
            raise TopologyError("topology has self-loops")
        if G.number_of_nodes() and not nx.is_connected(G):
            raise TopologyError("topology is not connected")
        nodes = tuple(sorted(G.nodes))
        adjacency = tuple(tuple(sorted(G.neighbors(v))) for v in nodes)
        edges = frozenset((min(u, v), max(u, v)) for u, v in G.edges)
        return cls(kind, nodes, edges, adjacency)

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self.edges

    def max_degree(self) -> int:
        return max((len(a) for a in self.adjacency), default=0)

    def to_networkx(self) -> nx.Graph:
        G = nx.Graph()
        G.add_nodes_from(self.nodes)
        G.add_edges_from(self.edges)
        return G


def grid_like_graph(m: int) -> nx.Graph:
    """``m x m`` grid of bipartite unit cells with degree at most 6.

    Each cell holds ``CELL`` vertical and ``CELL`` horizontal qubits fully
    coupled across the two sides. Vertical qubits also couple to the same
    qubit in the cells above and below, horizontal qubits to the cells left
    and right.
    """
    G = nx.Graph()
    for r in range(m):
        for c in range(m):
            for k in range(CELL):
                G.add_node(("v", r, c, k))
                G.add_node(("h", r, c, k))
            for i in range(CELL):
                for j in range(CELL):
                    G.add_edge(("v", r, c, i), ("h", r, c, j))
            for k in range(CELL):
                if r + 1 < m:
                    G.add_edge(("v", r, c, k), ("v", r + 1, c, k))
                if c + 1 < m:
                    G.add_edge(("h", r, c, k), ("h", r, c + 1, k))
    return G


def grid_like_side(num_vars: int) -> int:
    """Cell-grid side large enough for a dense model of ``num_vars`` variables."""
    return max(1, math.ceil(num_vars / CELL)) + 1


def build_topology(kind: str, size: int | None = None, num_vars: int | None = None) -> TopologyGraph:
    """Build a hardware graph.

    Args:
        kind: ``"complete"`` for a clique, ``"grid-like"`` for the cell lattice.
        size: Node count for ``complete``; cell-grid side for ``grid-like``.
            ``None`` sizes the graph for ``num_vars`` logical variables.
        num_vars: Variables of the largest model to be embedded; the topology
            must hold at least that many nodes.

    Raises:
        TopologyError: unknown kind, or a size too small for ``num_vars``.
    """
    if kind == "complete":
        n = size if size is not None else num_vars
        if n is None or n < 1:
            raise TopologyError("complete topology needs a positive size")
        if num_vars is not None and n < num_vars:
            raise TopologyError(f"complete topology of {n} nodes cannot hold {num_vars} variables")
        return TopologyGraph.from_networkx(kind, nx.complete_graph(n))
    if kind == "grid-like":
        m = size if size is not None else grid_like_side(num_vars or 1)
        if m < 1:
            raise TopologyError("grid-like topology needs a positive side")
        if num_vars is not None and 2 * CELL * m * m < num_vars:
            raise TopologyError(f"grid-like topology with side {m} cannot hold {num_vars} variables")
        return TopologyGraph.from_networkx(kind, grid_like_graph(m))
    raise TopologyError(f"unknown topology kind {kind!r}")


@dataclass(frozen=True)
class Embedding:
    """Logical variable -> chain of hardware nodes."""

    chains: dict

    def __len__(self) -> int:
        return len(self.chains)

    def chain_lengths(self) -> list[int]:
        return [len(self.chains[v]) for v in sorted(self.chains)]

    def hardware_nodes(self) -> list[int]:
        return sorted(n for chain in self.chains.values() for n in chain)


def check_embedding(model: QuboModel, topo: TopologyGraph, emb: Embedding) -> list[str]:
    """Return a list of invariant violations (empty when the embedding is valid)."""
    problems = []
    owner = {}
    graph = topo.to_networkx()
    for v in range(model.num_vars):
        chain = emb.chains.get(v)
        if not chain:
            problems.append(f"variable {v} has no chain")
            continue
        for node in chain:
            if node not in owner and 0 <= node < topo.num_nodes:
                owner[node] = v
            elif node in owner:
                problems.append(f"node {node} is shared by chains {owner[node]} and {v}")
            else:
                problems.append(f"node {node} is not in the topology")
        sub = graph.subgraph(chain)
        if sub.number_of_nodes() == len(chain) and not nx.is_connected(sub):
            problems.append(f"chain of variable {v} is not connected")
    if problems:
        return problems
    for u, v, _ in model.pairs():
        if not any(topo.has_edge(a, b) for a in emb.chains[u] for b in emb.chains[v]):
            problems.append(f"no edge joins the chains of {u} and {v}")
    return problems


def embed(model: QuboModel, topo: TopologyGraph, seed: int = 0, tries: int = 10) -> Embedding:
    """Minor-embed the model's coupling graph into ``topo``.

    On a large enough complete topology every variable gets its own node.
    Otherwise chains come from :func:`minorminer.find_embedding`, which roots
    each chain and grows it along weighted shortest paths to the chains of its
    neighbours, then reroutes chains until none overlap. A fixed ``seed`` makes
    the result reproducible. The returned embedding is checked against every
    invariant before it is handed out.

    Raises:
        EmbeddingError: no valid embedding was found within ``tries`` attempts.
    """
    n = model.num_vars
    if topo.num_nodes < n:
        raise EmbeddingError(f"{n} variables do not fit on {topo.num_nodes} nodes")
    if topo.kind == "complete":
        emb = Embedding({v: (v,) for v in range(n)})
    else:
        source = [(u, v) for u, v, _ in model.pairs()]
        # isolated variables still need a chain; give each a free node afterwards
        found = minorminer.find_embedding(
            source, sorted(topo.edges), random_seed=int(seed) % 2**31, tries=tries
        ) if source else {}
        if source and not found:
            raise EmbeddingError(f"no embedding of {n} variables found on {topo.num_nodes} nodes")
        used = {node for chain in found.values() for node in chain}
        free = [node for node in topo.nodes if node not in used]
        chains = {}
        for v in range(n):
            if v in found:
                chains[v] = tuple(sorted(found[v]))
            elif free:
                chains[v] = (free.pop(0),)
            else:
                raise EmbeddingError(f"no free node left for isolated variable {v}")
        emb = Embedding(chains)
    problems = check_embedding(model, topo, emb)
    if problems:
        raise EmbeddingError(problems[0])
    return emb


def chain_strength(model: QuboModel, factor: float = 0.9) -> float:
    """``factor`` times the RMS of the model's quadratic biases.

    A model without couplings falls back to ``factor * max|linear|``.
    """
    if factor <= 0:
        raise ValueError("factor must be positive")
    q = model.quadratic_biases()
    if q.size:
        return factor * float(np.sqrt(np.mean(q ** 2)))
    return factor * float(np.max(np.abs(model.linear), initial=0.0))


def embed_apply(model: QuboModel, emb: Embedding, strength: float, topo: TopologyGraph | None = None) -> QuboModel:
    """Hardware-level QUBO over the nodes used by ``emb``, relabelled ``0..N-1``.

    Linear biases are split evenly along each chain; each logical coupling sits
    on one connecting hardware edge; every intra-chain tree edge carries a
    ``-2*strength`` coupling with ``+strength`` on both endpoints, so an aligned
    chain costs nothing and a broken one at least ``strength``.
    """
    nodes = emb.hardware_nodes()
    index = {node: i for i, node in enumerate(nodes)}
    N = len(nodes)
    linear = np.zeros(N)
    quad = np.zeros((N, N))
    adjacency = topo.adjacency if topo is not None else None
    for v, chain in emb.chains.items():
        share = model.linear[v] / len(chain)
        for node in chain:
            linear[index[node]] += share
        for a, b in _chain_edges(chain, adjacency):
            i, j = sorted((index[a], index[b]))
            quad[i, j] += -2.0 * strength
            linear[i] += strength
            linear[j] += strength
    for u, v, bias in model.pairs():
        a, b = _connecting_edge(emb.chains[u], emb.chains[v], adjacency)
        i, j = sorted((index[a], index[b]))
        quad[i, j] += bias
    return QuboModel(linear, quad, model.offset)


def _chain_edges(chain, adjacency):
    """Spanning-tree edges of a chain."""
    chain = sorted(chain)
    if len(chain) < 2:
        return []
    members = set(chain)
    seen = {chain[0]}
    edges = []
    queue = deque([chain[0]])
    while queue:
        x = queue.popleft()
        for nb in _neighbours(x, members, adjacency):
            if nb not in seen:
                seen.add(nb)
                edges.append((x, nb))
                queue.append(nb)
    if len(seen) != len(chain):
        raise EmbeddingError("chain is not connected in the topology")
    return edges


def _neighbours(x, members, adjacency):
    if adjacency is None:
        raise EmbeddingError("topology adjacency required for multi-node chains")
    return [nb for nb in adjacency[x] if nb in members]


def _connecting_edge(chain_u, chain_v, adjacency):
    if adjacency is None:
        if len(chain_u) == 1 and len(chain_v) == 1:
            return chain_u[0], chain_v[0]
        raise EmbeddingError("topology adjacency required for multi-node chains")
    members = set(chain_v)
    for a in sorted(chain_u):
        for b in adjacency[a]:
            if b in members:
                return a, b
    raise EmbeddingError("no hardware edge joins the two chains")


def unembed_samples(samples: np.ndarray, emb: Embedding) -> tuple[np.ndarray, np.ndarray]:
    """Majority vote per chain (ties -> 1).

    Sample columns follow ``emb.hardware_nodes()``, the same relabelling
    :func:`embed_apply` uses.

    Returns:
        Logical samples and the fraction of broken chains for each sample.
    """
    samples = np.asarray(samples)
    nodes = emb.hardware_nodes()
    index = {node: i for i, node in enumerate(nodes)}
    n_logical = len(emb.chains)
    logical = np.zeros((samples.shape[0], n_logical), dtype=np.int8)
    broken = np.zeros(samples.shape[0])
    for v in range(n_logical):
        cols = [index[node] for node in emb.chains[v]]
        votes = samples[:, cols].sum(axis=1)
        logical[:, v] = (2 * votes >= len(cols)).astype(np.int8)
        broken += (votes != 0) & (votes != len(cols))
    return logical, broken / max(n_logical, 1)


def unembed(sample, emb: Embedding) -> tuple[np.ndarray, float]:
    logical, broken = unembed_samples(np.asarray(sample).reshape(1, -1), emb)
    return logical[0], float(broken[0])
