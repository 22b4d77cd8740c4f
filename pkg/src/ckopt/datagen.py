"""Instance construction and input-solution pair generation.

Labels are produced by each family's exact (or guaranteed-approximate)
optimizer applied to the exact expected objective, so that they carry the
oracle's approximation guarantee by construction.
"""

from dataclasses import dataclass

import numpy as np

from . import sbm, ssc, ssp
from .errors import DomainError, NoSolutionError
from .rng import new_rng, sub_seed
from .trainer import TrainingPair

RETRY_CAP = 200


@dataclass(frozen=True)
class PowerLawSpec:
    exponent: float = 2.5
    scale: float = 200.0
    min_value: int = 2
    max_value: int = 10 ** 9

    def __post_init__(self):
        if not self.exponent > 0 or not self.scale > 0:
            raise DomainError("exponent and scale must be > 0")
        if self.min_value > self.max_value:
            raise DomainError("min_value must be <= max_value")


@dataclass(frozen=True)
class PoolSpec:
    dist_spec: dict
    pool_size: int = 10_000
    master_seed: int = 0

    def __post_init__(self):
        if self.pool_size < 1:
            raise DomainError("pool_size must be >= 1")


def sample_powerlaw_size(spec: PowerLawSpec, rng) -> int:
    """clamp(floor(scale * U**(1/a)), min, max), density a*x^(a-1) on [0, scale]."""
    if isinstance(rng, (int, np.integer)):
        rng = new_rng(rng, "powerlaw")
    u = 1.0 - rng.uniform()  # uniform on (0, 1]
    raw = int(np.floor(spec.scale * u ** (1.0 / spec.exponent)))
    return min(max(raw, spec.min_value), spec.max_value)


def gen_ssp_instance(graph: ssp.Graph, rng_seed: int) -> ssp.WeibullEdgeLaw:
    """Independent uniform Weibull (shape, scale) in {1..10}^2 per edge."""
    rng = new_rng(rng_seed, "ssp_law")
    shape = rng.integers(1, 11, graph.edge_count)
    scale = rng.integers(1, 11, graph.edge_count)
    return ssp.WeibullEdgeLaw(shape, scale)


def gen_ssc_instance(graph: ssc.CoverGraph, rng_seed: int) -> ssc.EdgeProbLaw:
    """p_e = a / (a + b) with a, b uniform integers in {1..10}."""
    rng = new_rng(rng_seed, "ssc_law")
    a = rng.integers(1, 11, graph.edge_count)
    b = rng.integers(1, 11, graph.edge_count)
    return ssc.EdgeProbLaw(a / (a + b))


def gen_sbm_instance(n: int, rng_seed: int) -> sbm.MatchGraph:
    """mu uniform on [1, 10]; sigma fixed at 0.3 * mu."""
    if n < 1:
        raise DomainError("n must be >= 1")
    rng = new_rng(rng_seed, "sbm_mu")
    return sbm.MatchGraph(n, rng.uniform(1.0, 10.0, (n, n)))


def gen_pairs(family, instance, n_pairs: int, spec: PowerLawSpec,
              rng_seed: int):
    """n_pairs distinct inputs labeled on the exact expected objective."""
    gen = {"ssp": _gen_ssp_pairs, "ssc": _gen_ssc_pairs,
           "sbm": _gen_sbm_pairs}.get(family.FAMILY)
    if gen is None:
        raise DomainError(f"unknown family {family.FAMILY!r}")
    return gen(instance, n_pairs, spec, rng_seed)


def _gen_ssp_pairs(instance, n_pairs, spec, rng_seed):
    rng = new_rng(rng_seed, "pairs")
    graph = instance.graph
    exp_weights = instance.law.expected_weights()
    pairs, seen = [], set()
    for _ in range(n_pairs):
        for _attempt in range(RETRY_CAP):
            u, v = rng.choice(graph.node_count, size=2, replace=False)
            x = (int(u), int(v))
            if x in seen:
                continue
            try:
                y = ssp.dijkstra_oracle(graph, exp_weights, x)
            except NoSolutionError:
                continue
            seen.add(x)
            pairs.append(TrainingPair(x, y))
            break
        else:
            raise NoSolutionError(
                f"could not draw a reachable distinct input after {RETRY_CAP} tries")
    return pairs


def _gen_ssc_pairs(instance, n_pairs, spec, rng_seed):
    rng = new_rng(rng_seed, "pairs")
    graph = instance.graph
    pairs, seen = [], set()
    for _ in range(n_pairs):
        for _attempt in range(RETRY_CAP):
            size = min(sample_powerlaw_size(spec, rng), graph.right_count)
            rstar = tuple(sorted(rng.choice(graph.right_count, size=size,
                                            replace=False).tolist()))
            k = max(1, int(0.1 * len(rstar)))
            x = (rstar, k)
            if x in seen:
                continue
            seen.add(x)
            pairs.append(TrainingPair(x, ssc.greedy_expected(instance, x)))
            break
        else:
            raise DomainError(f"could not draw a distinct input after {RETRY_CAP} tries")
    return pairs


def _gen_sbm_pairs(instance, n_pairs, spec, rng_seed):
    rng = new_rng(rng_seed, "pairs")
    n = instance.graph.n
    pairs, seen = [], set()
    for _ in range(n_pairs):
        for _attempt in range(RETRY_CAP):
            size = min(sample_powerlaw_size(spec, rng), n)
            lstar = tuple(sorted(rng.choice(n, size=size, replace=False).tolist()))
            rstar = tuple(sorted(rng.choice(n, size=size, replace=False).tolist()))
            x = (lstar, rstar)
            if x in seen:
                continue
            seen.add(x)
            sub = instance.graph.mu[np.ix_(list(lstar), list(rstar))]
            cols = sbm.hungarian_oracle(sub)
            y = tuple(rstar[c] for c in cols)
            pairs.append(TrainingPair(x, y))
            break
        else:
            raise DomainError(f"could not draw a distinct input after {RETRY_CAP} tries")
    return pairs


def pool_sub_seeds(spec: PoolSpec):
    """Stable per-configuration stream seeds for a pool."""
    return [sub_seed(spec.master_seed, "config", i) for i in range(spec.pool_size)]
