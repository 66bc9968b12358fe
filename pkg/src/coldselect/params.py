"""Hyperparameters for the full selection pipeline."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import BudgetExceedsPool, ParamsInvalid


@dataclass(frozen=True)
class HyperParams:
    """Every knob of the pipeline in one immutable bundle.

    k_support: per-class support set size for the prior.
    rho: RBF kernel sharpness for uncertainty propagation.
    beta: centroid-distance weight in the per-cluster objective.
    gamma: weight of the margin penalty against nearby selections.
    budget: number of samples to select (= number of clusters).
    seed: RNG seed for the k-means++ initialization.
    knn_size: pool-level neighbor count for propagation.
    cknn_size: neighbor count over the selected set for the penalty.
    margin: squared-distance margin below which the penalty activates.
    iterations: maximum number of rewrite rounds.
    """

    k_support: int
    rho: float
    beta: float
    gamma: float
    budget: int
    seed: int
    knn_size: int = 50
    cknn_size: int = 10
    margin: float = 0.5
    iterations: int = 2

    def __post_init__(self):
        if self.budget < 1:
            raise ParamsInvalid(f"budget must be >= 1, got {self.budget}")
        if self.k_support < 1:
            raise ParamsInvalid(f"k_support must be >= 1, got {self.k_support}")
        if self.knn_size < 1:
            raise ParamsInvalid(f"knn_size must be >= 1, got {self.knn_size}")
        if self.cknn_size < 1:
            raise ParamsInvalid(f"cknn_size must be >= 1, got {self.cknn_size}")
        if not self.rho > 0:
            raise ParamsInvalid(f"rho must be > 0, got {self.rho}")
        if self.beta < 0:
            raise ParamsInvalid(f"beta must be >= 0, got {self.beta}")
        if self.gamma < 0:
            raise ParamsInvalid(f"gamma must be >= 0, got {self.gamma}")
        if self.margin < 0:
            raise ParamsInvalid(f"margin must be >= 0, got {self.margin}")
        if self.iterations < 0:
            raise ParamsInvalid(f"iterations must be >= 0, got {self.iterations}")

    def check_pool(self, n: int) -> None:
        """Validate constraints that need the pool size."""
        if self.budget > n:
            raise BudgetExceedsPool(f"budget {self.budget} exceeds pool size {n}")
