"""Associative SOM layer.

Each neuron carries a native weight vector plus one weight vector per
external input. External activity is an exponential of the Euclidean
distance to the external input; the total activity averages native and
external activity and picks the winner. External weights learn to make the
external activity reproduce the native one, which lets the layer keep
producing activity after native input stops (internal simulation).

In this package the only external input is the layer's own total activity
from the previous frame, flattened row-major.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .som import (
    DECAY_MODES,
    DECAY_PER_SAMPLE,
    DecaySchedule,
    GridShape,
    NeuronGrid,
    _gaussian,
    _sq_distances,
    _update_inplace,
    activation,
    decay_step,
    init_grid,
)

logger = logging.getLogger(__name__)

FEEDBACK_TOTAL = "total"
FEEDBACK_NATIVE = "native"
FEEDBACK_MODES = (FEEDBACK_TOTAL, FEEDBACK_NATIVE)
# bank learning rules: "delta" moves each bank vector along (x_e - w),
# "outer" adds the scaled input x_e itself
BANK_DELTA = "delta"
BANK_OUTER = "outer"
BANK_RULES = (BANK_DELTA, BANK_OUTER)


@dataclass
class ExternalBank:
    shape: GridShape
    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.ascontiguousarray(self.weights, dtype=float)
        if self.weights.ndim != 2 or self.weights.shape[0] != self.shape.size:
            raise ValueError(f"bank weights must be ({self.shape.size}, m), got {self.weights.shape}")

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    def copy(self) -> "ExternalBank":
        return ExternalBank(self.shape, self.weights.copy())


@dataclass
class AssociativeGrid:
    native: NeuronGrid
    externals: list[ExternalBank]
    sigma: float
    softmax_exponent: float

    def __post_init__(self):
        for bank in self.externals:
            if bank.shape != self.native.shape:
                raise ValueError("external banks must share the native grid shape")

    @property
    def shape(self) -> GridShape:
        return self.native.shape

    def copy(self) -> "AssociativeGrid":
        return AssociativeGrid(self.native.copy(), [b.copy() for b in self.externals],
                               self.sigma, self.softmax_exponent)


@dataclass
class AsomStepInput:
    native: np.ndarray | None
    externals: list[np.ndarray]

    @property
    def simulated(self) -> bool:
        return self.native is None


@dataclass(frozen=True)
class Learning:
    alpha: float
    rho: float
    beta: float
    bank_rule: str = BANK_DELTA


@dataclass(frozen=True)
class AsomParams:
    """Hyperparameters of the associative layer.

    ``sigma`` scales both native and external activity; the default suits
    torso-normalised skeleton coordinates. ``constant_beta`` holds beta at its
    initial value instead of running its decay schedule. ``feedback`` picks
    the delayed total or native activity as external input, and
    ``normalize_feedback`` rescales it to a peak of 1 before it is fed back.
    ``bank_rule`` selects the external-weight update (see ``update_external``).
    """

    sigma: float = 1.0
    softmax_exponent: float = 10.0
    alpha: DecaySchedule = field(default_factory=lambda: DecaySchedule(0.1, 0.99, 0.01))
    rho: DecaySchedule = field(default_factory=lambda: DecaySchedule(30.0, 0.999, 1.0))
    beta: DecaySchedule = field(default_factory=lambda: DecaySchedule(0.35, 1.0, 0.01))
    epochs: int = 300
    seed: int = 0
    decay_per: str = DECAY_PER_SAMPLE
    constant_beta: bool = True
    feedback: str = FEEDBACK_TOTAL
    normalize_feedback: bool = True
    bank_rule: str = BANK_DELTA

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.softmax_exponent < 1:
            raise ValueError("softmax exponent must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.decay_per not in DECAY_MODES:
            raise ValueError(f"decay_per must be one of {DECAY_MODES}")
        if self.feedback not in FEEDBACK_MODES:
            raise ValueError(f"unknown feedback source {self.feedback!r}")
        if self.bank_rule not in BANK_RULES:
            raise ValueError(f"unknown bank rule {self.bank_rule!r}")

    def options(self) -> "RunOptions":
        return RunOptions(self.feedback, self.normalize_feedback)


@dataclass(frozen=True)
class RunOptions:
    """How delayed activity is turned into the next external input."""

    feedback: str = FEEDBACK_TOTAL
    normalize_feedback: bool = True

    def next_input(self, native_y, total_y) -> np.ndarray:
        prev = native_y if self.feedback == FEEDBACK_NATIVE and native_y is not None else total_y
        if self.normalize_feedback:
            peak = prev.max()
            if peak > 0:
                prev = prev / peak
        return prev


@dataclass
class AsomTraining:
    grid: AssociativeGrid
    skipped_sequences: int = 0


def external_activity(bank: ExternalBank, x_e, sigma: float) -> np.ndarray:
    """``exp(-|x_e - w|^2 / sigma)`` per neuron as a rows x cols map."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    x_e = np.asarray(x_e, dtype=float)
    if x_e.ndim != 1 or x_e.shape[0] != bank.dim:
        raise ValueError(f"external input must have length {bank.dim}, got {x_e.shape}")
    d = _sq_distances(bank.weights, x_e)
    return np.exp(-d / sigma).reshape(bank.shape.rows, bank.shape.cols)


def total_activity(native_y: np.ndarray | None, external_ys: Sequence[np.ndarray]) -> np.ndarray:
    """Mean of the native map (when present) and all external maps."""
    maps = ([] if native_y is None else [native_y]) + list(external_ys)
    if not maps:
        raise ValueError("total activity needs at least one contributing map")
    shape = np.shape(maps[0])
    if any(np.shape(m) != shape for m in maps):
        raise ValueError("activity maps must share one shape")
    return np.sum(maps, axis=0) / len(maps)


def _bank_update_inplace(weights, x_e, diff, beta, rule):
    x_e = _kernels.contiguous(x_e)
    if rule == BANK_DELTA:
        _kernels.move_towards(weights, x_e, beta * diff)
    else:
        _kernels.add_outer(weights, x_e, beta * diff)


def update_external(bank: ExternalBank, x_e, native_y: np.ndarray, external_y: np.ndarray,
                    beta: float, rule: str = BANK_OUTER) -> ExternalBank:
    """Associative update of one bank; returns a new bank.

    ``rule="outer"``: ``w += beta * x_e * (y_native - y_external)``.
    ``rule="delta"``: ``w += beta * (y_native - y_external) * (x_e - w)``,
    which always moves ``w`` towards ``x_e`` when the external activity is too
    low and away from it when too high, so it agrees with the distance-based
    external activity. The outer form only lowers the distance when
    ``x_e . (x_e - w) > 0``.
    """
    if rule not in BANK_RULES:
        raise ValueError(f"unknown bank rule {rule!r}")
    x_e = np.asarray(x_e, dtype=float)
    if x_e.ndim != 1 or x_e.shape[0] != bank.dim:
        raise ValueError(f"external input must have length {bank.dim}, got {x_e.shape}")
    if beta < 0:
        raise ValueError("beta must be >= 0")
    diff = np.ravel(native_y) - np.ravel(external_y)
    if diff.shape[0] != bank.shape.size:
        raise ValueError("activity maps do not match the bank shape")
    out = bank.copy()
    _bank_update_inplace(out.weights, x_e, diff, beta, rule)
    return out


def init_asom(shape: GridShape, native_dim: int, external_dims: Sequence[int],
              sigma: float, softmax_exponent: float, seed) -> AssociativeGrid:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    native = init_grid(shape, native_dim, rng)
    banks = [ExternalBank(shape, rng.random((shape.size, int(m)))) for m in external_dims]
    return AssociativeGrid(native, banks, sigma, softmax_exponent)


def _native_activity(grid: AssociativeGrid, x_n: np.ndarray) -> np.ndarray:
    x_n = np.asarray(x_n, dtype=float)
    if x_n.ndim != 1 or x_n.shape[0] != grid.native.dim:
        raise ValueError(f"native input must have length {grid.native.dim}, got {x_n.shape}")
    z = _sq_distances(grid.native.weights, x_n)
    return activation(z, grid.sigma, grid.softmax_exponent)


def _step_inplace(grid: AssociativeGrid, x_n, x_es: Sequence[np.ndarray],
                  learning: Learning | None, loc: np.ndarray | None = None):
    """Core step on flat per-neuron vectors. Mutates ``grid`` when learning.

    Returns ``(native_y, total_y, winner_index)``; ``native_y`` is None on a
    simulation step.
    """
    if len(x_es) != len(grid.externals):
        raise ValueError(f"expected {len(grid.externals)} external inputs, got {len(x_es)}")
    y_n = None if x_n is None else _native_activity(grid, x_n)
    ys = []
    for bank, x_e in zip(grid.externals, x_es):
        if x_e.shape[0] != bank.dim:
            raise ValueError(f"external input must have length {bank.dim}, got {x_e.shape}")
        ys.append(np.exp(-_sq_distances(bank.weights, x_e) / grid.sigma))
    total = total_activity(y_n, ys)
    win = int(np.argmax(total))
    if learning is not None:
        if y_n is None:
            raise ValueError("learning requires native input")
        if loc is None:
            loc = grid.shape.coords()
        g = _gaussian(loc, loc[win], learning.rho)
        _update_inplace(grid.native.weights, x_n, g, learning.alpha)
        if learning.beta:
            for bank, x_e, y_e in zip(grid.externals, x_es, ys):
                _bank_update_inplace(bank.weights, x_e, y_n - y_e, learning.beta,
                                     learning.bank_rule)
    return y_n, total, win


def asom_step(grid: AssociativeGrid, step: AsomStepInput,
              learning: Learning | None = None) -> tuple[np.ndarray, tuple[int, int]]:
    """One frame: native activity (if any), external activities, total activity, winner.

    With ``learning`` the grid is updated in place: native weights by the
    Kohonen rule around the total-activity winner, banks by the associative
    rule. Returns the total activity map and the winner coordinate.
    """
    x_es = [np.asarray(x, dtype=float) for x in step.externals]
    _, total, win = _step_inplace(grid, step.native, x_es, learning)
    cols = grid.shape.cols
    return total.reshape(grid.shape.rows, cols), divmod(win, cols)


def _self_feedback_dims(grid_shape: GridShape) -> list[int]:
    return [grid_shape.size]


def train_asom(sequences: Sequence[np.ndarray], shape: GridShape,
               params: AsomParams) -> AsomTraining:
    """Train on frame sequences with one-frame-delayed self-association.

    Frames of a sequence are presented in order; the external input at frame
    ``t`` is the activity of frame ``t - 1`` (zeros at ``t = 0``). Sequence
    order is reshuffled every epoch from the seeded generator.
    """
    seqs = [np.asarray(s, dtype=float) for s in sequences]
    if not seqs:
        raise ValueError("no training sequences")
    usable = [s for s in seqs if s.ndim == 2 and s.shape[0] > 0]
    skipped = len(seqs) - len(usable)
    if skipped:
        logger.warning("skipped %d empty sequences", skipped)
    if not usable:
        raise ValueError("all training sequences are empty")
    dim = usable[0].shape[1]
    if any(s.shape[1] != dim for s in usable):
        raise ValueError("all frames must share one native dimension")

    init_seq, order_seq = np.random.SeedSequence(params.seed).spawn(2)
    grid = init_asom(shape, dim, _self_feedback_dims(shape), params.sigma,
                     params.softmax_exponent, np.random.default_rng(init_seq))
    rng = np.random.default_rng(order_seq)
    loc = shape.coords()
    m = shape.size
    a_s, r_s, b_s = params.alpha, params.rho, params.beta
    alpha, rho, beta = float(a_s.initial), float(r_s.initial), float(b_s.initial)
    per_sample = params.decay_per == DECAY_PER_SAMPLE
    opts = params.options()

    def step_schedules():
        nonlocal alpha, rho, beta
        alpha = decay_step(alpha, a_s.decay_rate, a_s.final)
        rho = decay_step(rho, r_s.decay_rate, r_s.final)
        if not params.constant_beta:
            beta = decay_step(beta, b_s.decay_rate, b_s.final)

    for _ in range(params.epochs):
        for si in rng.permutation(len(usable)):
            prev = np.zeros(m)
            for x_n in usable[si]:
                y_n, total, _ = _step_inplace(
                    grid, x_n, [prev], Learning(alpha, rho, beta, params.bank_rule), loc)
                prev = opts.next_input(y_n, total)
                if per_sample:
                    step_schedules()
        if not per_sample:
            step_schedules()
    return AsomTraining(grid, skipped)


def native_frame_count(n_frames: int, simulate_from: float) -> int:
    """Frames that keep native input: ``ceil((1 - simulate_from) * T)``."""
    if not 0.0 <= simulate_from <= 1.0:
        raise ValueError("simulate_from must lie in [0, 1]")
    # rounding guards ceil against representation error, e.g. (1 - 0.35) * 20
    return min(n_frames, math.ceil(round((1.0 - simulate_from) * n_frames, 9)))


def run_sequence(grid: AssociativeGrid, frames, simulate_from: float = 0.0,
                 zero_native: bool = False, options: RunOptions = RunOptions(),
                 n_native: int | None = None) -> list[tuple[np.ndarray, tuple[int, int]]]:
    """Inference over one sequence, optionally finishing by internal simulation.

    The first ``ceil((1 - simulate_from) * T)`` frames receive native input
    (``n_native`` overrides the count); the rest are driven only by the
    delayed activity through the external bank. With ``zero_native`` the
    withheld frames are fed as zero vectors instead of being dropped from
    the total activity. ``options`` must match the ones used in training.
    No weights change.
    """
    frames = np.asarray(frames, dtype=float)
    if frames.ndim != 2 or frames.shape[0] == 0:
        raise ValueError("frames must be a non-empty (T, dim) array")
    T = frames.shape[0]
    keep = native_frame_count(T, simulate_from) if n_native is None else int(n_native)
    rows, cols = grid.shape.rows, grid.shape.cols
    zero = np.zeros(frames.shape[1])
    prev = np.zeros(grid.shape.size)
    out = []
    for t in range(T):
        if t < keep:
            x_n = frames[t]
        else:
            x_n = zero if zero_native else None
        y_n, total, win = _step_inplace(grid, x_n, [prev], None)
        prev = options.next_input(y_n, total)
        out.append((total.reshape(rows, cols), divmod(win, cols)))
    return out


def winner_path(steps) -> list[tuple[int, int]]:
    return [w for _, w in steps]
