"""Stochastic shortest path family.

Instances are graphs whose edges carry independent Weibull weight laws.
Configurations are concrete weighted graphs; the exact oracle is Dijkstra
with lexicographic tie-breaking on the node sequence.
"""

import heapq
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as gamma_fn

from . import core
from .errors import (DimensionError, DomainError, FeasibilityError,
                     NoSolutionError, ParseError)
from .rng import new_rng

FAMILY = "ssp"
SENSE = core.MINIMIZE
ALPHA = 1.0

EXP_WEIGHT_LO = 1.0
EXP_WEIGHT_HI = 1e5


@dataclass
class Graph:
    node_count: int
    edges: list  # list of (u, v) pairs
    directed: bool = False
    _adj: list = field(default=None, repr=False, compare=False)
    _edge_ids: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        seen = set()
        for u, v in self.edges:
            if not (0 <= u < self.node_count and 0 <= v < self.node_count):
                raise DomainError(f"edge ({u},{v}) out of node range")
            if u == v:
                raise DomainError(f"self-loop at node {u}")
            key = (u, v) if self.directed else (min(u, v), max(u, v))
            if key in seen:
                raise DomainError(f"duplicate edge ({u},{v})")
            seen.add(key)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def adjacency(self):
        """List of (neighbor, edge index) per node, neighbors ascending."""
        if self._adj is None:
            adj = [[] for _ in range(self.node_count)]
            for i, (u, v) in enumerate(self.edges):
                adj[u].append((v, i))
                if not self.directed:
                    adj[v].append((u, i))
            for lst in adj:
                lst.sort()
            self._adj = adj
        return self._adj

    def edge_id(self, u, v) -> int:
        if self._edge_ids is None:
            ids = {}
            for i, (a, b) in enumerate(self.edges):
                ids[(a, b)] = i
                if not self.directed:
                    ids[(b, a)] = i
            self._edge_ids = ids
        try:
            return self._edge_ids[(u, v)]
        except KeyError:
            raise FeasibilityError(f"no edge between {u} and {v}") from None


@dataclass
class WeibullEdgeLaw:
    """Per-edge (shape, scale) parameters, each an integer in {1..10}."""

    shape: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        self.shape = np.asarray(self.shape, dtype=int)
        self.scale = np.asarray(self.scale, dtype=int)
        if self.shape.shape != self.scale.shape:
            raise DimensionError("shape/scale length mismatch")
        for name, arr in (("shape", self.shape), ("scale", self.scale)):
            if np.any((arr < 1) | (arr > 10)):
                raise DomainError(f"Weibull {name} parameters must lie in 1..10")

    def expected_weights(self) -> np.ndarray:
        return self.scale * gamma_fn(1.0 + 1.0 / self.shape)


@dataclass
class SspInstance:
    graph: Graph
    law: WeibullEdgeLaw

    def __post_init__(self):
        if self.law.shape.size != self.graph.edge_count:
            raise DimensionError("edge law length does not match edge count")


def validate_path(graph: Graph, x, path):
    u, v = x
    if not path or path[0] != u or path[-1] != v:
        raise FeasibilityError(f"path does not join {u} to {v}")
    if len(set(path)) != len(path):
        raise FeasibilityError("path revisits a node")
    for a, b in zip(path, path[1:]):
        graph.edge_id(a, b)  # raises if missing


def path_length(graph: Graph, edge_weights, path) -> float:
    return float(sum(edge_weights[graph.edge_id(a, b)]
                     for a, b in zip(path, path[1:])))


def dijkstra_oracle(graph: Graph, edge_weights, x):
    """Minimum-weight path, ties broken by lexicographic node sequence.

    Labels (dist, path) are totally ordered and extension is monotone, so
    the classic settle-on-first-pop argument applies unchanged.
    """
    edge_weights = np.asarray(edge_weights, dtype=float)
    if np.any(edge_weights < 0):
        raise DomainError("negative edge weight")
    u, v = x
    if not (0 <= u < graph.node_count and 0 <= v < graph.node_count):
        raise DomainError(f"input ({u},{v}) out of node range")
    if u == v:
        raise DomainError("source equals destination")
    adj = graph.adjacency()
    best = {}  # node -> settled (dist, path)
    heap = [(0.0, (u,))]
    while heap:
        dist, path = heapq.heappop(heap)
        node = path[-1]
        if node in best:
            continue
        best[node] = (dist, path)
        if node == v:
            return path
        for nbr, eid in adj[node]:
            if nbr in best or nbr in path:
                continue
            heapq.heappush(heap, (dist + edge_weights[eid], path + (nbr,)))
    raise NoSolutionError(f"node {v} is unreachable from {u}")


def aggregate_edge_weights(sample: core.ConfigurationSample,
                           weights) -> np.ndarray:
    """Per-edge weight sum_i w_i * c_i(e); one Dijkstra then predicts."""
    weights = np.asarray(weights, dtype=float)
    mat = config_matrix(sample)
    if weights.shape != (mat.shape[0],):
        raise DimensionError("weight vector length does not match sample K")
    return weights @ mat


def config_matrix(sample: core.ConfigurationSample) -> np.ndarray:
    """(K, |E|) matrix of configuration edge weights, cached on the sample."""
    mat = sample._cache.get("ssp_matrix")
    if mat is None:
        mat = np.stack([c.payload for c in sample.configs])
        sample._cache["ssp_matrix"] = mat
    return mat


def sample_config(instance: SspInstance, dist_spec: dict,
                  rng_seed: int) -> np.ndarray:
    """One weighted-graph configuration under the named distribution."""
    rng = new_rng(rng_seed)
    n_edges = instance.graph.edge_count
    name = dist_spec["name"]
    if name == "phi_exp":
        raw = rng.exponential(1.0, n_edges)
        lo, hi = raw.min(), raw.max()
        if hi == lo:
            return np.full(n_edges, EXP_WEIGHT_LO)
        return EXP_WEIGHT_LO + (raw - lo) / (hi - lo) * (EXP_WEIGHT_HI - EXP_WEIGHT_LO)
    if name == "phi_norm":
        # |N(0,1)| mapped to positive weights; intentionally low diversity
        return np.abs(rng.standard_normal(n_edges)) * 1e3 + 1.0
    if name == "phi_true":
        law = instance.law
        return law.scale * rng.weibull(law.shape)
    raise DomainError(f"unknown ssp distribution {name!r}")


def expected_path_length(instance: SspInstance, path) -> float:
    """Exact expected length of a path (linearity of expectation)."""
    return path_length(instance.graph, instance.law.expected_weights(), path)


def parse_dimacs(stream):
    """Parse a DIMACS shortest-path file into (Graph, default arc weights).

    Node ids are 1-based in the format and mapped to 0-based here. The graph
    is directed (one arc per 'a' line).
    """
    node_count = None
    edges = []
    weights = []
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if not line or line.startswith("c"):
            continue
        fields = line.split()
        if fields[0] == "p":
            if node_count is not None:
                raise ParseError("duplicate problem line", lineno)
            if len(fields) != 4 or fields[1] != "sp":
                raise ParseError("malformed problem line", lineno)
            try:
                node_count = int(fields[2])
                int(fields[3])
            except ValueError:
                raise ParseError("non-integer field in problem line", lineno)
        elif fields[0] == "a":
            if node_count is None:
                raise ParseError("arc before problem line", lineno)
            if len(fields) != 4:
                raise ParseError("malformed arc line", lineno)
            try:
                u, v, w = int(fields[1]), int(fields[2]), int(fields[3])
            except ValueError:
                raise ParseError("non-integer field in arc line", lineno)
            if not (1 <= u <= node_count and 1 <= v <= node_count):
                raise ParseError(f"node id out of range in arc ({u},{v})", lineno)
            edges.append((u - 1, v - 1))
            weights.append(w)
        else:
            raise ParseError(f"unknown record type {fields[0]!r}", lineno)
    if node_count is None:
        raise ParseError("missing problem line")
    return Graph(node_count, edges, directed=True), np.array(weights, dtype=float)


def base_baseline(graph: Graph, x, rng_seed: int):
    """Dijkstra on uniform-[0,1] random edge weights."""
    rng = new_rng(rng_seed, "ssp_base")
    return dijkstra_oracle(graph, rng.uniform(0.0, 1.0, graph.edge_count), x)


def kronecker_graph(levels: int = 6, target_edges: int = 160,
                    seed: int = 7) -> Graph:
    """Small Kronecker-style expander on 2**levels nodes, made connected."""
    n = 2 ** levels
    rng = new_rng(seed, "kron")
    # R-MAT quadrant probabilities, renormalized cumulative
    probs = np.array([0.45, 0.2, 0.2, 0.15])
    cum = np.cumsum(probs / probs.sum())
    edges = set()
    attempts = 0
    while len(edges) < target_edges - n // 4 and attempts < 100 * target_edges:
        attempts += 1
        u = v = 0
        for _ in range(levels):
            q = int(np.searchsorted(cum, rng.uniform()))
            u = 2 * u + (q >> 1)
            v = 2 * v + (q & 1)
        if u != v:
            edges.add((min(u, v), max(u, v)))
    # stitch everything into one component with a sparse ring
    for i in range(0, n, 4):
        j = (i + 4) % n
        if i != j:
            edges.add((min(i, j), max(i, j)))
        edges.add((i, i + 1))
        edges.add((i + 1, i + 2))
        edges.add((i + 2, i + 3))
    return Graph(n, sorted(edges), directed=False)


def default_instance(seed: int = 7) -> SspInstance:
    """The 64-node desk-scale instance with a fixed Weibull edge law."""
    graph = kronecker_graph(seed=seed)
    rng = new_rng(seed, "ssp_law")
    shape = rng.integers(1, 11, graph.edge_count)
    scale = rng.integers(1, 11, graph.edge_count)
    return SspInstance(graph, WeibullEdgeLaw(shape, scale))


def make_problem(instance: SspInstance) -> core.ProblemInstance:
    graph = instance.graph

    def objective(x, y, payload):
        validate_path(graph, x, y)
        return path_length(graph, payload, y)

    def features(x, y, sample):
        validate_path(graph, x, y)
        eids = [graph.edge_id(a, b) for a, b in zip(y, y[1:])]
        return config_matrix(sample)[:, eids].sum(axis=1)

    def oracle(x, sample, weights):
        return dijkstra_oracle(graph, aggregate_edge_weights(sample, weights), x)

    return core.ProblemInstance(
        problem_id=FAMILY,
        sense=SENSE,
        alpha=ALPHA,
        objective_evaluator=objective,
        oracle=oracle,
        encode=tuple,
        validate=lambda x, y: validate_path(graph, x, y),
        feature_evaluator=features,
    )


def true_value(instance: SspInstance, x, y) -> float:
    """F(x, y, phi_true): exact expected path length."""
    return expected_path_length(instance, y)


def baseline(instance: SspInstance, x, rng_seed: int):
    return base_baseline(instance.graph, x, rng_seed)


def encode(y):
    return tuple(y)
