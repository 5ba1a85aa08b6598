"""Run configuration shared by the sampling, optimization, and CLI layers."""

from dataclasses import dataclass


@dataclass
class RunConfig:
    """All hyperparameters of one embedding run.

    Defaults follow the standard recipe: 10 nearest neighbors with 5
    sampled triplets each plus 5 random triplets per point (55 per point
    total), weight transform gamma=500 / delta=1e-4, and 400 full-batch
    iterations with the momentum bump at iteration 250.
    """

    m_neighbors: int = 10
    m_prime: int = 5
    r_random: int = 5
    gamma: float = 500.0
    delta: float = 1e-4
    out_dims: int = 2
    iters: int = 400
    momentum_switch_iter: int = 250
    seed: int = 0
    pre_reduce_dims: int = 100
    knn_trees: int = 20
    knn_search_factor: int = 3
    exact_knn: bool = False
    init_scale: float = 0.01

    def validate(self):
        """Raise ValueError on any out-of-range hyperparameter."""
        counts = (
            "m_neighbors",
            "m_prime",
            "r_random",
            "out_dims",
            "iters",
            "momentum_switch_iter",
            "pre_reduce_dims",
            "knn_trees",
            "knn_search_factor",
        )
        for name in counts:
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a count >= 1, got {value!r}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma!r}")
        if not self.delta > 0:
            raise ValueError(f"delta must be > 0, got {self.delta!r}")
        if not self.init_scale > 0:
            raise ValueError(f"init_scale must be > 0, got {self.init_scale!r}")
        if self.seed < 0:
            raise ValueError(f"seed must be a nonnegative integer, got {self.seed!r}")

    @property
    def triplets_per_point(self) -> int:
        return self.m_neighbors * self.m_prime + self.r_random
