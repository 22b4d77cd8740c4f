"""Stochastic minimum-weight bipartite matching family.

Instances are complete bipartite graphs with per-edge Gaussian weight laws
(sigma fixed at 0.3 * mu). The exact oracle is a minimum-cost assignment
with lexicographically smallest assignment vector among the optima.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import core
from .errors import DimensionError, DomainError, FeasibilityError
from .rng import new_rng

FAMILY = "sbm"
SENSE = core.MINIMIZE
ALPHA = 1.0

WEIGHT_FLOOR = 1e-6  # keeps sampled costs positive (objective must be >= 0)


@dataclass
class MatchGraph:
    n: int
    mu: np.ndarray  # (n, n), entries in [1, 10]

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float)
        if self.n < 1:
            raise DomainError("n must be >= 1")
        if self.mu.shape != (self.n, self.n):
            raise DimensionError(f"mu must be {self.n}x{self.n}")
        if np.any((self.mu < 1.0) | (self.mu > 10.0)):
            raise DomainError("mu entries must lie in [1, 10]")

    @property
    def sigma(self) -> np.ndarray:
        return 0.3 * self.mu


@dataclass
class SbmInstance:
    graph: MatchGraph


def validate_matching(graph: MatchGraph, x, y):
    """y maps sorted(L*) position-wise onto a permutation of R*."""
    lstar, rstar = x
    if len(lstar) != len(rstar) or len(lstar) < 1:
        raise FeasibilityError("input sides must be nonempty and equal-sized")
    if len(set(lstar)) != len(lstar) or len(set(rstar)) != len(rstar):
        raise FeasibilityError("input sides contain duplicates")
    if any(not 0 <= v < graph.n for v in list(lstar) + list(rstar)):
        raise FeasibilityError("input node out of range")
    if len(y) != len(lstar):
        raise FeasibilityError("matching size does not equal |L*|")
    if sorted(y) != sorted(rstar):
        raise FeasibilityError("matching image is not exactly R*")


def hungarian_oracle(costs: np.ndarray):
    """Minimum-cost perfect matching on a square cost matrix.

    Returns column indices assigned to rows 0..n-1, lexicographically
    smallest among all optimal assignments. The optimum value comes from
    scipy; lexicographic refinement fixes rows in order, testing candidate
    columns ascending against the optimal value of the residual problem.
    """
    costs = np.asarray(costs, dtype=float)
    if costs.ndim != 2 or costs.shape[0] != costs.shape[1]:
        raise DomainError("cost matrix must be square")
    if not np.all(np.isfinite(costs)):
        raise DomainError("cost matrix must be finite")
    n = costs.shape[0]
    rows, cols = linear_sum_assignment(costs)
    best = float(costs[rows, cols].sum())
    tol = 1e-9 * max(1.0, abs(best))
    avail = list(range(n))
    assignment = []
    prefix = 0.0
    for i in range(n):
        for j in avail:
            rest_rows = list(range(i + 1, n))
            rest_cols = [c for c in avail if c != j]
            if rest_rows:
                sub = costs[np.ix_(rest_rows, rest_cols)]
                r, c = linear_sum_assignment(sub)
                rest = float(sub[r, c].sum())
            else:
                rest = 0.0
            if prefix + costs[i, j] + rest <= best + tol:
                assignment.append(j)
                prefix += costs[i, j]
                avail.remove(j)
                break
        else:  # pragma: no cover - defensive, cannot happen for finite costs
            raise DomainError("no consistent assignment found")
    return tuple(assignment)


def matching_cost(costs: np.ndarray, assignment) -> float:
    return float(costs[np.arange(len(assignment)), list(assignment)].sum())


def config_tensor(sample: core.ConfigurationSample) -> np.ndarray:
    """(K, n, n) stack of configuration weight matrices, cached."""
    t = sample._cache.get("sbm_tensor")
    if t is None:
        t = np.stack([c.payload for c in sample.configs])
        sample._cache["sbm_tensor"] = t
    return t


def sample_config(instance: SbmInstance, dist_spec: dict,
                  rng_seed: int) -> np.ndarray:
    """One weight-matrix configuration under the named distribution."""
    rng = new_rng(rng_seed)
    g = instance.graph
    name = dist_spec["name"]
    if name == "phi_uni":
        return rng.uniform(1.0, 10.0, (g.n, g.n))
    if name == "phi_q":
        q = float(dist_spec["q"])
        if not q > 0:
            raise DomainError("q must be > 0")
        lo = g.mu - q * g.mu
        hi = g.mu + q * g.mu
        return np.maximum(rng.uniform(lo, hi), WEIGHT_FLOOR)
    if name == "phi_true":
        return np.maximum(rng.normal(g.mu, g.sigma), WEIGHT_FLOOR)
    raise DomainError(f"unknown sbm distribution {name!r}")


def expected_matching_cost(instance: SbmInstance, x, y) -> float:
    """Exact expectation: the sum of mu over matched edges."""
    lstar, _rstar = x
    lsorted = sorted(lstar)
    return float(sum(instance.graph.mu[l, r] for l, r in zip(lsorted, y)))


def rand_baseline(x, rng_seed: int):
    """Uniform random bijection onto R*."""
    _lstar, rstar = x
    rng = new_rng(rng_seed, "sbm_rand")
    perm = rng.permutation(len(rstar))
    rsorted = sorted(rstar)
    return tuple(rsorted[p] for p in perm)


def default_instance(seed: int = 13, n: int = 32) -> SbmInstance:
    rng = new_rng(seed, "sbm_mu")
    return SbmInstance(MatchGraph(n, rng.uniform(1.0, 10.0, (n, n))))


def make_problem(instance: SbmInstance) -> core.ProblemInstance:
    graph = instance.graph

    def objective(x, y, payload):
        validate_matching(graph, x, y)
        lsorted = sorted(x[0])
        return float(sum(payload[l, r] for l, r in zip(lsorted, y)))

    def features(x, y, sample):
        validate_matching(graph, x, y)
        lsorted = sorted(x[0])
        t = config_tensor(sample)
        return t[:, lsorted, list(y)].sum(axis=1)

    def oracle(x, sample, weights):
        weights = np.asarray(weights, dtype=float)
        t = config_tensor(sample)
        if weights.shape != (t.shape[0],):
            raise DimensionError("weight vector length does not match sample K")
        agg = np.tensordot(weights, t, axes=1)
        lsorted = sorted(x[0])
        rsorted = sorted(x[1])
        sub = agg[np.ix_(lsorted, rsorted)]
        cols = hungarian_oracle(sub)
        return tuple(rsorted[c] for c in cols)

    return core.ProblemInstance(
        problem_id=FAMILY,
        sense=SENSE,
        alpha=ALPHA,
        objective_evaluator=objective,
        oracle=oracle,
        encode=tuple,
        validate=lambda x, y: validate_matching(graph, x, y),
        feature_evaluator=features,
    )


def true_value(instance: SbmInstance, x, y) -> float:
    return expected_matching_cost(instance, x, y)


def baseline(instance: SbmInstance, x, rng_seed: int):
    return rand_baseline(x, rng_seed)


def encode(y):
    return tuple(y)
