"""Stochastic maximum coverage family.

Instances are bipartite graphs whose edges appear independently with
per-edge probabilities. Configurations are edge subsets; the oracle is the
(1 - 1/e)-approximate greedy over the weighted sum of per-configuration
coverage counts, implemented on packed bitsets.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import core
from .errors import DimensionError, DomainError, FeasibilityError
from .rng import new_rng

FAMILY = "ssc"
SENSE = core.MAXIMIZE
ALPHA = 1.0 - 1.0 / math.e

UNI_KEEP_PROB = 0.1

# popcount lookup for uint8 arrays (portable across numpy versions)
_POPCOUNT = np.array([bin(i).count("1") for i in range(256)], dtype=np.uint16)


def _popcount(arr: np.ndarray) -> np.ndarray:
    return _POPCOUNT[arr]


@dataclass
class CoverGraph:
    left_count: int
    right_count: int
    edges: list  # list of (l, r)
    _prob_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        seen = set()
        for l, r in self.edges:
            if not (0 <= l < self.left_count and 0 <= r < self.right_count):
                raise DomainError(f"edge ({l},{r}) out of range")
            if (l, r) in seen:
                raise DomainError(f"duplicate edge ({l},{r})")
            seen.add((l, r))

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def edge_array(self) -> np.ndarray:
        arr = self._prob_cache.get("edge_array")
        if arr is None:
            arr = np.asarray(self.edges, dtype=int).reshape(-1, 2)
            self._prob_cache["edge_array"] = arr
        return arr


@dataclass
class EdgeProbLaw:
    probs: np.ndarray  # appearance probability per edge, each in (0, 1)

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        if np.any((self.probs <= 0) | (self.probs >= 1)):
            raise DomainError("edge probabilities must lie in (0, 1)")


@dataclass
class SscInstance:
    graph: CoverGraph
    law: EdgeProbLaw
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.law.probs.size != self.graph.edge_count:
            raise DimensionError("edge law length does not match edge count")

    def prob_matrix(self) -> np.ndarray:
        """Dense (L, R) matrix of appearance probabilities (0 off-edges)."""
        mat = self._cache.get("prob_matrix")
        if mat is None:
            mat = np.zeros((self.graph.left_count, self.graph.right_count))
            ea = self.graph.edge_array()
            mat[ea[:, 0], ea[:, 1]] = self.law.probs
            self._cache["prob_matrix"] = mat
        return mat


def validate_solution(graph: CoverGraph, x, y):
    rstar, k = x
    if len(rstar) == 0:
        raise FeasibilityError("target set is empty")
    if any(not 0 <= r < graph.right_count for r in rstar):
        raise FeasibilityError("target node out of range")
    if len(y) > k:
        raise FeasibilityError(f"solution size {len(y)} exceeds budget {k}")
    if any(not 0 <= v < graph.left_count for v in y):
        raise FeasibilityError("chosen node out of range")
    if len(set(y)) != len(y):
        raise FeasibilityError("solution repeats a node")


def coverage_value(graph: CoverGraph, config_mask, x, y) -> int:
    """Number of target elements adjacent to the chosen set in the config."""
    rstar, _k = x
    chosen = set(y)
    target = set(rstar)
    covered = set()
    ea = graph.edge_array()
    mask = np.asarray(config_mask, dtype=bool)
    for l, r in ea[mask]:
        if l in chosen and r in target:
            covered.add(r)
    return len(covered)


def _packed_neighbors(graph: CoverGraph, sample: core.ConfigurationSample, x):
    """(K, L, W) packed bitsets of per-config neighbors inside the target set."""
    rstar, _k = x
    rstar = tuple(sorted(rstar))
    key = ("ssc_packed", rstar)
    cached = sample._cache.get(key)
    if cached is not None:
        return cached
    rpos = np.full(graph.right_count, -1, dtype=int)
    rpos[list(rstar)] = np.arange(len(rstar))
    ea = graph.edge_array()
    k_cfg = sample.k
    dense = np.zeros((k_cfg, graph.left_count, len(rstar)), dtype=bool)
    relevant = rpos[ea[:, 1]] >= 0
    ls = ea[relevant, 0]
    rs = rpos[ea[relevant, 1]]
    for i, cfg in enumerate(sample.configs):
        present = np.asarray(cfg.payload, dtype=bool)[relevant]
        dense[i, ls[present], rs[present]] = True
    packed = np.packbits(dense, axis=2)
    sample._cache[key] = packed
    return packed


def greedy_oracle(graph: CoverGraph, sample: core.ConfigurationSample,
                  weights, x):
    """Budgeted greedy on the weighted multi-configuration coverage.

    Each round adds the left node with the largest marginal gain, ties broken
    by smallest node id; stops early once all gains are zero.
    """
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (sample.k,):
        raise DimensionError("weight vector length does not match sample K")
    if np.any(weights < 0):
        raise DomainError("weights must be nonnegative")
    rstar, budget = x
    packed = _packed_neighbors(graph, sample, x)
    covered = np.zeros((sample.k, packed.shape[2]), dtype=np.uint8)
    chosen = []
    for _ in range(min(budget, graph.left_count)):
        avail = packed & ~covered[:, None, :]
        counts = _popcount(avail).sum(axis=2)  # (K, L)
        gains = weights @ counts
        if chosen:
            gains[np.asarray(chosen)] = -1.0
        best = int(np.argmax(gains))  # first max = smallest id
        if gains[best] <= 0:
            break
        chosen.append(best)
        covered |= packed[:, best, :]
    return tuple(sorted(chosen))


def expected_coverage(instance: SscInstance, x, y) -> float:
    """Exact expected coverage under independent edge appearances."""
    rstar, _k = x
    rstar = sorted(rstar)
    pm = instance.prob_matrix()
    if len(y) == 0:
        return 0.0
    sub = pm[np.ix_(sorted(y), rstar)]
    return float(np.sum(1.0 - np.prod(1.0 - sub, axis=0)))


def greedy_expected(instance: SscInstance, x):
    """Greedy label generation directly on the exact expected coverage."""
    rstar, budget = x
    rstar = np.asarray(sorted(rstar), dtype=int)
    pm = instance.prob_matrix()[:, rstar]  # (L, |R*|)
    miss = np.ones(len(rstar))  # probability each target is still uncovered
    chosen = []
    mask = np.ones(instance.graph.left_count, dtype=bool)
    for _ in range(min(budget, instance.graph.left_count)):
        gains = (pm * miss[None, :]).sum(axis=1)
        gains[~mask] = -1.0
        best = int(np.argmax(gains))
        if gains[best] <= 0:
            break
        chosen.append(best)
        mask[best] = False
        miss = miss * (1.0 - pm[best])
    return tuple(sorted(chosen))


def sample_config(instance: SscInstance, dist_spec: dict,
                  rng_seed: int) -> np.ndarray:
    """One present-edge mask under the named distribution."""
    rng = new_rng(rng_seed)
    n_edges = instance.graph.edge_count
    name = dist_spec["name"]
    if name == "phi_uni":
        return rng.uniform(size=n_edges) < UNI_KEEP_PROB
    if name == "phi_true":
        return rng.uniform(size=n_edges) < instance.law.probs
    raise DomainError(f"unknown ssc distribution {name!r}")


def rand_baseline(graph: CoverGraph, x, rng_seed: int):
    """Uniform k-subset of the left nodes."""
    _rstar, k = x
    if k > graph.left_count:
        raise DomainError(f"budget {k} exceeds |L|={graph.left_count}")
    rng = new_rng(rng_seed, "ssc_rand")
    return tuple(sorted(rng.choice(graph.left_count, size=k, replace=False)))


def default_instance(seed: int = 11, left: int = 200, right: int = 500) -> SscInstance:
    """Desk-scale bipartite instance with heterogeneous left degrees."""
    rng = new_rng(seed, "ssc_graph")
    edges = []
    seen = set()
    for l in range(left):
        # heavy-tailed degrees: a few hub nodes, many sparse ones
        degree = 2 + int(58 * rng.uniform() ** 4)
        targets = rng.choice(right, size=min(degree, right), replace=False)
        for r in targets:
            if (l, int(r)) not in seen:
                seen.add((l, int(r)))
                edges.append((l, int(r)))
    graph = CoverGraph(left, right, edges)
    law_rng = new_rng(seed, "ssc_law")
    a = law_rng.integers(1, 11, graph.edge_count)
    b = law_rng.integers(1, 11, graph.edge_count)
    return SscInstance(graph, EdgeProbLaw(a / (a + b)))


def make_problem(instance: SscInstance) -> core.ProblemInstance:
    graph = instance.graph

    def objective(x, y, payload):
        validate_solution(graph, x, y)
        return float(coverage_value(graph, payload, x, y))

    def features(x, y, sample):
        validate_solution(graph, x, y)
        if len(y) == 0:
            return np.zeros(sample.k)
        packed = _packed_neighbors(graph, sample, x)
        union = np.bitwise_or.reduce(packed[:, sorted(y), :], axis=1)
        return _popcount(union).sum(axis=1).astype(float)

    def oracle(x, sample, weights):
        return greedy_oracle(graph, sample, weights, x)

    return core.ProblemInstance(
        problem_id=FAMILY,
        sense=SENSE,
        alpha=ALPHA,
        objective_evaluator=objective,
        oracle=oracle,
        encode=lambda y: tuple(sorted(y)),
        validate=lambda x, y: validate_solution(graph, x, y),
        feature_evaluator=features,
    )


def true_value(instance: SscInstance, x, y) -> float:
    return expected_coverage(instance, x, y)


def baseline(instance: SscInstance, x, rng_seed: int):
    return rand_baseline(instance.graph, x, rng_seed)


def encode(y):
    return tuple(sorted(y))
