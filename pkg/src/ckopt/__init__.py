"""Learning input-solution regressors for stochastic combinatorial
optimization via random-configuration kernels and large-margin training."""

from .core import (MAXIMIZE, MINIMIZE, Configuration, ConfigurationSample,
                   ProblemInstance, RequiredKParams, ScoreModel, build_sample,
                   compute_beta, in_relaxed_margin, kernel_features, margin,
                   model_score, perturb_weights, predict, required_k, score)
from .trainer import (TrainerParams, TrainingPair, TrainOutcome,
                      train_one_slack)

__all__ = [
    "MAXIMIZE", "MINIMIZE", "Configuration", "ConfigurationSample",
    "ProblemInstance", "RequiredKParams", "ScoreModel", "build_sample",
    "compute_beta", "in_relaxed_margin", "kernel_features", "margin",
    "model_score", "perturb_weights", "predict", "required_k", "score",
    "TrainerParams", "TrainingPair", "TrainOutcome", "train_one_slack",
]

__version__ = "0.1.0"
