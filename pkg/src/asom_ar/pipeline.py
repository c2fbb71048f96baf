"""Staged training, fold selection, evaluation and the simulation sweep.

Stages run in order and each is frozen before the next one starts:
associative layer on preprocessed frames, winner traces to fixed-length
patterns, pattern SOM, output layer.
"""
from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .asom import AssociativeGrid, RunOptions, run_sequence, train_asom, winner_path
from .classifier import OutputLayer, init_output, predict, train_output
from .config import N_FOLDS, RunConfig
from .datasets import CvSplit, Dataset
from .patterns import extract_pattern, flatten_normalize, kmax, resample
from .skeleton import PreprocessConfig, SkeletonSequence, preprocess
from .som import NeuronGrid
from .som2 import pattern_activity, train_som2

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
DEFAULT_FRACTIONS = tuple(round(0.05 * k, 2) for k in range(11))
MAX_DEFAULT_FRACTION = 0.5


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ModelBundle:
    """Everything needed to classify a raw skeleton sequence."""

    preprocess: PreprocessConfig
    asom: AssociativeGrid
    k_max: int
    som2: NeuronGrid
    output: OutputLayer
    classes: tuple[str, ...]
    config: RunConfig
    fold: int
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        _freeze(self.asom.native.weights)
        for b in self.asom.externals:
            _freeze(b.weights)
        _freeze(self.som2.weights)
        _freeze(self.output.weights)
        check_chain(self)

    @property
    def options(self) -> RunOptions:
        return RunOptions(self.config.asom_feedback, self.config.asom_normalize_feedback)


def check_chain(m: ModelBundle) -> None:
    """Stage dimensions must chain: 3k -> A-SOM grid -> 2 K_max -> SOM grid -> classes."""
    problems = []
    if m.asom.native.dim != m.preprocess.native_dim():
        problems.append(f"A-SOM native dim {m.asom.native.dim} != 3k = {m.preprocess.native_dim()}")
    for b in m.asom.externals:
        if b.dim != m.asom.shape.size:
            problems.append(f"external bank dim {b.dim} != A-SOM size {m.asom.shape.size}")
    if m.som2.dim != 2 * m.k_max:
        problems.append(f"SOM dim {m.som2.dim} != 2 K_max = {2 * m.k_max}")
    if m.output.dim != m.som2.shape.size:
        problems.append(f"output input dim {m.output.dim} != SOM size {m.som2.shape.size}")
    if m.output.n_classes != len(m.classes):
        problems.append(f"output classes {m.output.n_classes} != {len(m.classes)} class names")
    if problems:
        raise ValueError("inconsistent model: " + "; ".join(problems))


@dataclass
class FoldResult:
    fold: int
    accuracy: float | None
    bundle: ModelBundle | None = None
    error: str | None = None


@dataclass
class TrainResult:
    bundle: ModelBundle
    folds: list[FoldResult]

    @property
    def fold_accuracies(self) -> list[float | None]:
        return [f.accuracy for f in self.folds]


@dataclass
class EvalReport:
    accuracy: float
    confusion: np.ndarray  # rows: true class, cols: predicted class
    recall: np.ndarray  # nan for classes absent from the evaluated set
    simulate_fraction: float
    predictions: list[int] = field(default_factory=list)
    labels: list[int] = field(default_factory=list)


def preprocess_dataset(sequences: Sequence[SkeletonSequence], cfg: PreprocessConfig) -> list[np.ndarray]:
    return [preprocess(s, cfg) for s in sequences]


def _seed_int(ss: np.random.SeedSequence) -> int:
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def fold_seeds(run_seed: int, fold: int) -> tuple[int, int, int]:
    """Independent (A-SOM, SOM, output) seeds for one fold, derived from the run seed."""
    child = np.random.SeedSequence(run_seed).spawn(N_FOLDS)[fold]
    return tuple(_seed_int(s) for s in child.spawn(3))


def _trace(grid: AssociativeGrid, frames: np.ndarray, fraction: float, zero_native: bool,
           options: RunOptions) -> list[tuple[int, int]]:
    return winner_path(run_sequence(grid, frames, fraction, zero_native=zero_native,
                                    options=options))


def _pattern_vector(grid: AssociativeGrid, winners, k_max: int) -> np.ndarray:
    return flatten_normalize(resample(extract_pattern(winners), k_max), grid.shape)


def classifier_input(m: ModelBundle, frames: np.ndarray, fraction: float = 0.0) -> np.ndarray:
    """Preprocessed frames -> pattern SOM activity (the output-layer input)."""
    winners = _trace(m.asom, frames, fraction, m.config.asom_zero_native, m.options)
    vec = _pattern_vector(m.asom, winners, m.k_max)
    return pattern_activity(m.som2, vec, m.config.som_sigma, m.config.som_softmax_exp)


def train_fold(frames: Sequence[np.ndarray], labels: Sequence[int], classes: Sequence[str],
               train_idx: Sequence[int], val_idx: Sequence[int], cfg: RunConfig,
               fold: int) -> FoldResult:
    """Train every stage on ``train_idx`` and score on ``val_idx``.

    Failures are caught and recorded so one bad fold does not end the run.
    """
    try:
        s_asom, s_som, s_out = fold_seeds(cfg.run_seed, fold)
        train_frames = [frames[i] for i in train_idx]
        grid = train_asom(train_frames, cfg.asom_shape(), cfg.asom_params(s_asom)).grid
        opts = RunOptions(cfg.asom_feedback, cfg.asom_normalize_feedback)
        pats = [extract_pattern(_trace(grid, f, 0.0, cfg.asom_zero_native, opts))
                for f in train_frames]
        k = kmax(pats)
        vecs = [flatten_normalize(resample(p, k), grid.shape) for p in pats]
        som = train_som2(vecs, cfg.som2(), s_som)
        xs = np.stack([pattern_activity(som, v, cfg.som_sigma, cfg.som_softmax_exp) for v in vecs])
        y = np.asarray([labels[i] for i in train_idx], dtype=int)
        rng = np.random.default_rng(s_out)
        layer = init_output(len(classes), som.shape.size, rng, cfg.output_gamma)
        layer = train_output(layer, xs, y, epochs=cfg.output_epochs,
                             patience=cfg.output_patience or None, sign=cfg.output_sign,
                             seed=rng)
        bundle = ModelBundle(cfg.preprocess(), grid, k, som, layer, tuple(classes), cfg, fold)
        val = [frames[i] for i in val_idx]
        preds = [predict(bundle.output, classifier_input(bundle, f)) for f in val]
        acc = float(np.mean([p == labels[i] for p, i in zip(preds, val_idx)]))
        return FoldResult(fold, acc, bundle)
    except (ValueError, FloatingPointError, ArithmeticError) as exc:
        logger.warning("fold %d failed: %s", fold, exc)
        return FoldResult(fold, None, None, f"{type(exc).__name__}: {exc}")


def _run_fold(args):
    return train_fold(*args)


def train_full(ds: Dataset, split: CvSplit, cfg: RunConfig,
               frames: Sequence[np.ndarray] | None = None) -> TrainResult:
    """Train one model per fold and keep the best on validation accuracy.

    Ties go to the lower fold index. ``cfg.run_jobs > 1`` trains folds in
    separate processes; every fold derives its seeds from the run seed and
    its index, so the result does not depend on the job count.
    """
    if len(split.folds) != N_FOLDS:
        raise ValueError(f"split must have {N_FOLDS} folds, got {len(split.folds)}")
    if sorted(split.all_indices()) != list(range(len(ds))):
        raise ValueError("split does not partition the dataset")
    if frames is None:
        frames = preprocess_dataset(ds.sequences, cfg.preprocess())
    labels = [int(v) for v in ds.labels]
    jobs = [(frames, labels, ds.classes, split.train_indices(k), split.validation_indices(k),
             cfg, k) for k in range(N_FOLDS)]
    if cfg.run_jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.run_jobs) as pool:
            results = list(pool.map(_run_fold, jobs))
    else:
        results = [_run_fold(j) for j in jobs]
    ok = [r for r in results if r.accuracy is not None]
    if not ok:
        reasons = "; ".join(f"fold {r.fold}: {r.error}" for r in results)
        raise RuntimeError(f"every fold failed: {reasons}")
    best = max(ok, key=lambda r: (r.accuracy, -r.fold))
    return TrainResult(best.bundle, results)


def evaluate(m: ModelBundle, sequences: Sequence[SkeletonSequence], simulate_fraction: float = 0.0,
             allow_large: bool = False, frames: Sequence[np.ndarray] | None = None) -> EvalReport:
    """Classify ``sequences`` with the last ``simulate_fraction`` of each
    sequence generated by internal simulation."""
    if not sequences:
        raise ValueError("no sequences to evaluate")
    limit = 1.0 if allow_large else MAX_DEFAULT_FRACTION
    if not 0.0 <= simulate_fraction <= limit:
        raise ValueError(f"simulate fraction must lie in [0, {limit}]")
    if frames is None:
        frames = preprocess_dataset(sequences, m.preprocess)
    labels = [int(s.label) for s in sequences]
    if any(not 0 <= y < len(m.classes) for y in labels):
        raise ValueError("sequence label outside the model's classes")
    preds = [predict(m.output, classifier_input(m, f, simulate_fraction)) for f in frames]
    return make_report(labels, preds, len(m.classes), simulate_fraction)


def make_report(labels: Sequence[int], preds: Sequence[int], n_classes: int,
                fraction: float) -> EvalReport:
    conf = np.zeros((n_classes, n_classes), dtype=np.int64)
    for t, p in zip(labels, preds):
        conf[t, p] += 1
    support = conf.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        recall = np.where(support > 0, np.diag(conf) / support, np.nan)
    acc = float(np.trace(conf) / conf.sum())
    return EvalReport(acc, conf, recall, float(fraction), list(preds), list(labels))


def sweep_simulation(m: ModelBundle, sequences: Sequence[SkeletonSequence],
                     fractions: Sequence[float] = DEFAULT_FRACTIONS,
                     allow_large: bool = False) -> list[EvalReport]:
    frames = preprocess_dataset(sequences, m.preprocess)
    return [evaluate(m, sequences, f, allow_large, frames=frames) for f in fractions]


# --- reports ------------------------------------------------------------------

def sweep_csv(reports: Sequence[EvalReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["fraction", "accuracy", "error"])
    for r in reports:
        w.writerow([f"{r.simulate_fraction:.2f}", f"{r.accuracy:.6f}", f"{1.0 - r.accuracy:.6f}"])
    return buf.getvalue()


def confusion_csv(r: EvalReport, classes: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["true\\predicted", *classes])
    for name, row in zip(classes, r.confusion):
        w.writerow([name, *map(int, row)])
    return buf.getvalue()


def report_text(r: EvalReport, classes: Sequence[str]) -> str:
    lines = [f"simulated fraction: {r.simulate_fraction:.2f}",
             f"sequences: {int(r.confusion.sum())}",
             f"accuracy: {r.accuracy:.4f}",
             "per-class recall:"]
    width = max(len(c) for c in classes)
    for name, rec, n in zip(classes, r.recall, r.confusion.sum(axis=1)):
        val = "   n/a" if np.isnan(rec) else f"{rec:.4f}"
        lines.append(f"  {name:<{width}}  {val}  (n={int(n)})")
    return "\n".join(lines) + "\n"


def folds_csv(result: TrainResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["fold", "validation_accuracy", "selected", "error"])
    for f in result.folds:
        acc = "" if f.accuracy is None else f"{f.accuracy:.6f}"
        w.writerow([f.fold, acc, int(f.fold == result.bundle.fold), f.error or ""])
    return buf.getvalue()
