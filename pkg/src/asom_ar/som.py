"""Self-organizing map primitives.

Distance fields, exponential soft-max activation, winner selection,
Gaussian neighbourhood learning and the parameter decay schedules shared
by the associative layer and the pattern-space SOM.

Grids store weights as a ``(rows * cols, dim)`` array in row-major neuron
order, so neuron ``(i, j)`` lives at row ``i * cols + j``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Sequence

import numpy as np

from . import _kernels

DECAY_PER_SAMPLE = "sample"
DECAY_PER_EPOCH = "epoch"
DECAY_MODES = (DECAY_PER_SAMPLE, DECAY_PER_EPOCH)


@dataclass(frozen=True)
class GridShape:
    rows: int
    cols: int

    def __post_init__(self):
        if int(self.rows) < 1 or int(self.cols) < 1:
            raise ValueError(f"grid shape must be at least 1x1, got {self.rows}x{self.cols}")

    @property
    def size(self) -> int:
        return self.rows * self.cols

    @classmethod
    def square(cls, neurons: int) -> "GridShape":
        """Square grid holding exactly ``neurons`` cells (900 -> 30x30)."""
        side = math.isqrt(neurons)
        if side * side != neurons:
            raise ValueError(f"{neurons} neurons do not form a square grid")
        return cls(side, side)

    def coords(self) -> np.ndarray:
        """Integer location vectors ``(i, j)`` of every neuron, row-major."""
        ii, jj = np.divmod(np.arange(self.size), self.cols)
        return np.stack([ii, jj], axis=1).astype(float)


@dataclass
class NeuronGrid:
    shape: GridShape
    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.ascontiguousarray(self.weights, dtype=float)
        if self.weights.ndim != 2 or self.weights.shape[0] != self.shape.size:
            raise ValueError(
                f"weights must be ({self.shape.size}, dim), got {self.weights.shape}")

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    def copy(self) -> "NeuronGrid":
        return NeuronGrid(self.shape, self.weights.copy())

    def neuron(self, coord: tuple[int, int]) -> np.ndarray:
        i, j = coord
        return self.weights[i * self.shape.cols + j]


@dataclass(frozen=True)
class DecaySchedule:
    """``X <- X + X_d * (X_f - X)``, starting at ``initial``."""

    initial: float
    decay_rate: float
    final: float
    current: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.decay_rate <= 1.0:
            raise ValueError(f"decay rate must lie in [0, 1], got {self.decay_rate}")
        if self.current is None:
            object.__setattr__(self, "current", float(self.initial))

    @property
    def value(self) -> float:
        return self.current

    def step(self) -> "DecaySchedule":
        return replace(self, current=decay_step(self.current, self.decay_rate, self.final))

    def closed_form(self, t: int) -> float:
        """Value after ``t`` steps from ``initial``."""
        return self.final + (self.initial - self.final) * (1.0 - self.decay_rate) ** t

    def reset(self) -> "DecaySchedule":
        return replace(self, current=float(self.initial))

    def values(self) -> Iterator[float]:
        x = float(self.initial)
        while True:
            yield x
            x = decay_step(x, self.decay_rate, self.final)


def decay_step(current: float, decay_rate: float, final: float) -> float:
    nxt = current + decay_rate * (final - current)
    # clamp: never overshoot the final value
    if (current - final) * (nxt - final) < 0:
        return final
    return nxt


@dataclass(frozen=True)
class SomParams:
    sigma: float = 1e3
    softmax_exponent: float = 10.0
    alpha: DecaySchedule = field(default_factory=lambda: DecaySchedule(0.1, 0.99, 0.01))
    rho: DecaySchedule = field(default_factory=lambda: DecaySchedule(30.0, 0.999, 1.0))
    epochs: int = 1500
    seed: int = 0
    decay_per: str = DECAY_PER_SAMPLE

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.softmax_exponent < 1:
            raise ValueError("softmax exponent must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.decay_per not in DECAY_MODES:
            raise ValueError(f"decay_per must be one of {DECAY_MODES}")


def init_grid(shape: GridShape, dim: int, seed: int | np.random.Generator) -> NeuronGrid:
    """Uniform ``[0, 1)`` weights, reproducible from ``seed``."""
    if int(dim) < 1:
        raise ValueError("dim must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return NeuronGrid(shape, rng.random((shape.size, int(dim))))


def _sq_distances(weights: np.ndarray, x: np.ndarray) -> np.ndarray:
    return _kernels.sq_distances(weights, _kernels.contiguous(x), np.empty(weights.shape[0]))


def _check_vector(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != dim:
        raise ValueError(f"expected a vector of length {dim}, got shape {x.shape}")
    return x


def native_distance(grid: NeuronGrid, x: Sequence[float]) -> np.ndarray:
    """Squared Euclidean distance from ``x`` to every neuron, as a rows x cols field."""
    x = _check_vector(x, grid.dim)
    return _sq_distances(grid.weights, x).reshape(grid.shape.rows, grid.shape.cols)


def activation(z: np.ndarray, sigma: float, s_exp: float) -> np.ndarray:
    """Soft-max activity ``exp(-z/sigma)**s_exp`` normalised by its maximum.

    Evaluated in the log domain, so the peak is exactly 1 even when the raw
    exponentials would underflow.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    z = np.asarray(z, dtype=float)
    if z.size == 0 or not np.all(np.isfinite(z)):
        raise ValueError("distance field must be non-empty and finite")
    return np.exp(-(z - z.min()) * (s_exp / sigma))


def winner(y: np.ndarray) -> tuple[int, int]:
    """Coordinate of the maximal cell; ties go to the first cell in row-major order."""
    y = np.asarray(y)
    if y.size == 0:
        raise ValueError("empty activity map")
    i, j = np.unravel_index(int(np.argmax(y)), y.shape)
    return int(i), int(j)


def neighborhood(win: tuple[int, int], rho: float, shape: GridShape) -> np.ndarray:
    """Gaussian coefficients ``exp(-|d_w - d_ij|^2 / (2 rho^2))`` over the grid."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    ii, jj = np.ogrid[0:shape.rows, 0:shape.cols]
    d2 = (ii - win[0]) ** 2 + (jj - win[1]) ** 2
    return np.exp(-d2 / (2.0 * rho * rho))


def _gaussian(loc: np.ndarray, center: np.ndarray, rho: float) -> np.ndarray:
    d = loc - center
    return np.exp(-np.einsum("ij,ij->i", d, d) / (2.0 * rho * rho))


def _update_inplace(weights: np.ndarray, x: np.ndarray, g: np.ndarray, alpha: float) -> None:
    _kernels.move_towards(weights, _kernels.contiguous(x), alpha * g)


def update_native(grid: NeuronGrid, x: Sequence[float], win: tuple[int, int],
                  alpha: float, rho: float) -> NeuronGrid:
    """One Kohonen step towards ``x``; returns a new grid."""
    x = _check_vector(x, grid.dim)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    out = grid.copy()
    g = neighborhood(win, rho, grid.shape).ravel()
    _update_inplace(out.weights, x, g, alpha)
    return out


def quantization_error(grid: NeuronGrid, data: np.ndarray) -> float:
    """Mean Euclidean distance from each sample to its best-matching neuron."""
    data = np.atleast_2d(np.asarray(data, dtype=float))
    d2 = (np.einsum("ij,ij->i", data, data)[:, None]
          - 2.0 * data @ grid.weights.T
          + np.einsum("ij,ij->i", grid.weights, grid.weights)[None, :])
    return float(np.mean(np.sqrt(np.maximum(d2.min(axis=1), 0.0))))


def train_som(data, shape: GridShape, params: SomParams,
              grid: NeuronGrid | None = None) -> NeuronGrid:
    """Train a SOM on ``data`` (n_samples x dim).

    Each epoch presents every sample once in an order drawn from the seeded
    generator. Alpha and rho are stepped after every sample or after every
    epoch depending on ``params.decay_per``.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[0] == 0:
        raise ValueError("training data must be a non-empty (n, dim) array")
    init_seq, order_seq = np.random.SeedSequence(params.seed).spawn(2)
    if grid is None:
        grid = init_grid(shape, data.shape[1], np.random.default_rng(init_seq))
    else:
        grid = grid.copy()
    if grid.dim != data.shape[1]:
        raise ValueError(f"data dim {data.shape[1]} != grid dim {grid.dim}")

    rng = np.random.default_rng(order_seq)
    a_sched, r_sched = params.alpha, params.rho
    alpha, rho = float(a_sched.initial), float(r_sched.initial)
    w = grid.weights
    loc = grid.shape.coords()
    per_sample = params.decay_per == DECAY_PER_SAMPLE
    for _ in range(params.epochs):
        for idx in rng.permutation(data.shape[0]):
            x = data[idx]
            y = activation(_sq_distances(w, x), params.sigma, params.softmax_exponent)
            g = _gaussian(loc, loc[int(np.argmax(y))], rho)
            _update_inplace(w, x, g, alpha)
            if per_sample:
                alpha = decay_step(alpha, a_sched.decay_rate, a_sched.final)
                rho = decay_step(rho, r_sched.decay_rate, r_sched.final)
        if not per_sample:
            alpha = decay_step(alpha, a_sched.decay_rate, a_sched.final)
            rho = decay_step(rho, r_sched.decay_rate, r_sched.final)
    return grid
