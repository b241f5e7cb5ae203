"""Boosting partition-linear models with strictly proper losses."""
from .losses import ProperLoss, make_loss, weight, pointwise_risk, population_surrogate, LOSS_NAMES
from .datasets import Dataset, LsDatasetSpec, make_clean, make_noisy, bayes_posterior
from .booster import run, solve_alpha, BoostState

__all__ = [
    "ProperLoss", "make_loss", "weight", "pointwise_risk", "population_surrogate", "LOSS_NAMES",
    "Dataset", "LsDatasetSpec", "make_clean", "make_noisy", "bayes_posterior",
    "run", "solve_alpha", "BoostState",
]
