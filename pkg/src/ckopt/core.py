"""Problem-agnostic types and operations.

A problem family plugs in here by providing a :class:`ProblemInstance`: an
objective f(x, y, c) over concrete configurations c, an approximation oracle
for positive affine combinations of those objectives, and canonical solution
encodings. Everything else (feature vectors, scores, margins, the weight
perturbation step, prediction) is generic.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

from .errors import DimensionError, DomainError
from .rng import new_rng, sub_seed

MINIMIZE = "min"
MAXIMIZE = "max"


@dataclass(frozen=True)
class Configuration:
    """One concrete realization of the uncertain system."""

    config_id: int
    payload: Any
    provenance: tuple  # (distribution name, stream seed)


@dataclass
class ConfigurationSample:
    """An ordered list of K sampled configurations plus its provenance."""

    configs: list
    dist_spec: dict
    master_seed: int
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def k(self) -> int:
        return len(self.configs)

    def payloads(self):
        return [c.payload for c in self.configs]


@dataclass
class ScoreModel:
    """A trained predictor: weights over a configuration sample."""

    sample: ConfigurationSample
    weights: np.ndarray
    alpha: float
    sense: str

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (self.sample.k,):
            raise DimensionError(
                f"weight vector has length {self.weights.size}, "
                f"sample has K={self.sample.k}"
            )


@dataclass
class ProblemInstance:
    """Binds a problem family's objective, oracle and encodings.

    objective_evaluator(x, y, payload) -> float
        Nonnegative objective value of solution y for input x under one
        configuration payload.
    oracle(x, sample, weights) -> solution
        An alpha-approximate optimizer of the weighted score, with
        deterministic tie-breaking (smallest lexicographic encoding).
    feature_evaluator(x, y, sample) -> ndarray, optional
        Vectorized fast path; must agree with the per-configuration loop.
    encode(y) -> hashable
        Canonical solution encoding used for equality and tie-breaking.
    validate(x, y)
        Raises FeasibilityError on an invalid pair.
    """

    problem_id: str
    sense: str
    alpha: float
    objective_evaluator: Callable
    oracle: Callable
    encode: Callable = staticmethod(lambda y: y)
    validate: Callable = staticmethod(lambda x, y: None)
    feature_evaluator: Optional[Callable] = None

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise DomainError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.sense not in (MINIMIZE, MAXIMIZE):
            raise DomainError(f"unknown sense {self.sense!r}")


@dataclass(frozen=True)
class RequiredKParams:
    """Inputs of the sample-size formula for the configuration count."""

    a_low: float   # lower bound of the objective
    b_high: float  # upper bound of the objective
    c_ratio: float  # sup of true/empirical density ratio
    eps: float
    delta1: float
    delta2: float
    y_size: int    # size of the output space

    def __post_init__(self):
        if not self.a_low > 0:
            raise DomainError("a_low must be > 0")
        if not self.b_high >= self.a_low:
            raise DomainError("b_high must be >= a_low")
        if not self.c_ratio >= 1:
            raise DomainError("c_ratio must be >= 1")
        if not self.eps > 0:
            raise DomainError("eps must be > 0")
        if not 0 < self.delta1 <= 1:
            raise DomainError("delta1 must lie in (0, 1]")
        if not 0 < self.delta2 <= 1:
            raise DomainError("delta2 must lie in (0, 1]")
        if not self.y_size >= 1:
            raise DomainError("y_size must be >= 1")


def build_sample(family, instance, dist_spec: dict, master_seed: int,
                 k: int) -> ConfigurationSample:
    """Sample K configurations with independent derived sub-seeds.

    Regenerable bit-exactly from (dist_spec, master_seed, k).
    """
    if k < 1:
        raise DomainError("sample size K must be >= 1")
    configs = []
    for i in range(k):
        seed_i = sub_seed(master_seed, "config", i)
        payload = family.sample_config(instance, dist_spec, seed_i)
        configs.append(Configuration(i, payload, (dist_spec["name"], seed_i)))
    return ConfigurationSample(configs, dist_spec, master_seed)


def kernel_features(problem: ProblemInstance, x, y,
                    sample: ConfigurationSample) -> np.ndarray:
    """The vector (f(x,y,c_1), ..., f(x,y,c_K))."""
    if sample.k < 1:
        raise DimensionError("empty configuration sample")
    problem.validate(x, y)
    if problem.feature_evaluator is not None:
        feats = np.asarray(problem.feature_evaluator(x, y, sample), dtype=float)
    else:
        feats = np.array(
            [problem.objective_evaluator(x, y, c.payload) for c in sample.configs],
            dtype=float,
        )
    return feats


def score(weights: np.ndarray, features: np.ndarray) -> float:
    """Weighted affine combination of per-configuration objective values."""
    weights = np.asarray(weights, dtype=float)
    features = np.asarray(features, dtype=float)
    if weights.shape != features.shape:
        raise DimensionError(
            f"weights have shape {weights.shape}, features {features.shape}"
        )
    return float(weights @ features)


def model_score(problem: ProblemInstance, model: ScoreModel, x, y) -> float:
    """Score of solution y for input x under a trained model."""
    return score(model.weights, kernel_features(problem, x, y, model.sample))


def margin(problem: ProblemInstance, model: ScoreModel, x, y1, y2) -> float:
    """alpha * score(y1) - score(y2); zero for y1 == y2 when alpha == 1."""
    s1 = model_score(problem, model, x, y1)
    s2 = model_score(problem, model, x, y2)
    return model.alpha * s1 - s2


def in_relaxed_margin(problem: ProblemInstance, model: ScoreModel, x, y_ref, y,
                      margin_factor: float) -> bool:
    """Whether y scores within margin_factor of the reference solution.

    The comparison margin_factor * score(y_ref) - score(y) <= 0 covers both
    senses: for minimization it reads score(y) >= margin_factor * score(y_ref).
    """
    if not margin_factor > 0:
        raise DomainError("margin_factor must be > 0")
    s_ref = model_score(problem, model, x, y_ref)
    s_y = model_score(problem, model, x, y)
    return margin_factor * s_ref - s_y <= 0


def compute_beta(seed_weights: np.ndarray, m: int, alpha: float) -> float:
    """Scale applied to the seed vector before Gaussian perturbation.

    (4 / (min_p |w_p| * alpha^2)) * sqrt(2 * ln(2mK / ||w||^2)).
    """
    w = np.asarray(seed_weights, dtype=float)
    if w.size == 0:
        raise DimensionError("empty weight vector")
    if m < 1:
        raise DomainError("m must be >= 1")
    if not 0 < alpha <= 1:
        raise DomainError("alpha must lie in (0, 1]")
    abs_w = np.abs(w)
    if np.any(abs_w == 0):
        raise DomainError("seed weights must all be nonzero")
    sq_norm = float(w @ w)
    log_arg = 2.0 * m * w.size / sq_norm
    if log_arg <= 1.0:
        raise DomainError(
            f"log argument 2mK/||w||^2 = {log_arg} must exceed 1"
        )
    return 4.0 / (float(abs_w.min()) * alpha ** 2) * math.sqrt(2.0 * math.log(log_arg))


def required_k(params: RequiredKParams) -> int:
    """Smallest configuration count guaranteeing the approximation bound."""
    lead = (2.0 * params.c_ratio ** 2 * params.b_high ** 2
            / (params.eps ** 2 * params.delta2 ** 2 * params.a_low ** 2))
    tail = max(0.5, math.log(params.y_size) + math.log(1.0 / params.delta1))
    return math.ceil(lead * tail)


def perturb_weights(seed_weights: np.ndarray, beta: float,
                    rng_seed: int) -> np.ndarray:
    """Draw an isotropic unit-variance Gaussian centered at beta * weights."""
    w = np.asarray(seed_weights, dtype=float)
    if not math.isfinite(beta):
        raise DomainError("beta must be finite")
    rng = new_rng(rng_seed, "perturb")
    return beta * w + rng.standard_normal(w.size)


def predict(problem: ProblemInstance, model: ScoreModel, x):
    """Oracle-backed optimizer of the model score for input x."""
    if np.any(model.weights < 0):
        raise DomainError("model weights must be nonnegative for prediction")
    return problem.oracle(x, model.sample, model.weights)
