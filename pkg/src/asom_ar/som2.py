"""Pattern-space SOM: the second map that turns resampled action patterns
into the activity map read by the output layer."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .som import (
    DECAY_PER_SAMPLE,
    DecaySchedule,
    GridShape,
    NeuronGrid,
    SomParams,
    activation,
    native_distance,
    train_som,
)


@dataclass(frozen=True)
class Som2Config:
    shape: GridShape = GridShape(40, 40)
    sigma: float = 1e3
    softmax_exponent: float = 10.0
    epochs: int = 1500
    alpha: DecaySchedule = field(default_factory=lambda: DecaySchedule(0.1, 0.99, 0.01))
    rho: DecaySchedule = field(default_factory=lambda: DecaySchedule(30.0, 0.999, 1.0))
    decay_per: str = DECAY_PER_SAMPLE

    def params(self, seed: int) -> SomParams:
        return SomParams(self.sigma, self.softmax_exponent, self.alpha, self.rho,
                         self.epochs, seed, self.decay_per)


def train_som2(patterns, cfg: Som2Config, seed: int) -> NeuronGrid:
    rows = [np.asarray(p, dtype=float) for p in patterns]
    if not rows:
        raise ValueError("no patterns to train on")
    dims = {r.shape for r in rows}
    if len(dims) != 1 or len(next(iter(dims))) != 1:
        raise ValueError(f"patterns must be vectors of one length, got shapes {sorted(dims)}")
    return train_som(np.stack(rows), cfg.shape, cfg.params(seed))


def pattern_activity(grid: NeuronGrid, pattern, sigma: float, softmax_exponent: float) -> np.ndarray:
    """Flattened (row-major) soft-max activity map for one pattern vector."""
    return activation(native_distance(grid, pattern), sigma, softmax_exponent).ravel()
