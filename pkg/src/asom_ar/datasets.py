"""Dataset adapters, canonical interchange format and the train/validation/test split.

MSR Action3D layout: one text file per sequence named ``aAA_sSS_eEE[_skeleton|_skeleton3D].txt``
holding 20 rows of ``x y z confidence`` per frame.

Florence 3D Actions layout: one text file, one frame per row,
``video_id actor_id category_id`` followed by 15 * 3 coordinates.

Canonical layout: JSON lines; a header record followed by one record per
sequence.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .skeleton import FLORENCE15, MSR20, SkeletonSequence, get_schema

logger = logging.getLogger(__name__)

CANONICAL_FORMAT = "asom-skeleton"
CANONICAL_VERSION = 1
N_FOLDS = 10
TEST_FRACTION = 0.25

# File action ids a01..a20 of MSR Action3D, in order.
MSR_ACTIONS = (
    "high arm wave", "horizontal arm wave", "hammer", "hand catch", "forward punch",
    "high throw", "draw x", "draw tick", "draw circle", "hand clap",
    "two hand wave", "side boxing", "bend", "forward kick", "side kick",
    "jogging", "tennis swing", "tennis serve", "golf swing", "pick up and throw",
)
# The ten whole-body actions of the MSR(1) subset, matched by name.
MSR1_ACTIONS = (
    "hand clap", "two hand wave", "side boxing", "bend", "forward kick",
    "side kick", "jogging", "tennis serve", "golf swing", "pick up and throw",
)
FLORENCE_ACTIONS = (
    "wave", "drink from a bottle", "answer phone", "clap hands", "tight lace",
    "sit down", "stand up", "read watch", "bow",
)

_MSR_NAME = re.compile(r"a(\d+)_s(\d+)_e(\d+)(?:_skeleton(?:3D)?)?\.txt$", re.IGNORECASE)


class FormatError(ValueError):
    """Input file does not follow the documented layout."""


@dataclass
class Dataset:
    sequences: list[SkeletonSequence]
    classes: list[str]
    schema: str
    load_errors: list[tuple[str, str]] = field(default_factory=list)

    def __post_init__(self):
        for s in self.sequences:
            if not 0 <= s.label < len(self.classes):
                raise ValueError(f"label {s.label} out of range for {len(self.classes)} classes")

    def __len__(self) -> int:
        return len(self.sequences)

    @property
    def labels(self) -> np.ndarray:
        return np.array([s.label for s in self.sequences], dtype=int)

    def subset(self, indices: Iterable[int]) -> "Dataset":
        return Dataset([self.sequences[i] for i in indices], list(self.classes), self.schema)


# --- MSR Action3D -------------------------------------------------------------

def parse_msr_name(path: str | Path) -> tuple[int, int, int]:
    m = _MSR_NAME.search(Path(path).name)
    if not m:
        raise FormatError(f"not an MSR sequence file name: {Path(path).name}")
    return int(m.group(1)), int(m.group(2)), int(m.group(3))


def read_msr_file(path: str | Path) -> np.ndarray:
    """Frames ``(T, 20, 3)`` from one MSR skeleton file; confidence is dropped."""
    text = Path(path).read_text()
    rows = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not rows:
        raise FormatError(f"{path}: empty file")
    if any(len(r) != 4 for r in rows):
        raise FormatError(f"{path}: every row needs 4 values (x y z confidence)")
    if len(rows) % len(MSR20):
        raise FormatError(f"{path}: {len(rows)} rows is not a multiple of {len(MSR20)}")
    try:
        arr = np.array(rows, dtype=float)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    return arr[:, :3].reshape(-1, len(MSR20), 3)


def load_msr(path: str | Path, subset: str = "msr2") -> Dataset:
    """Read every MSR sequence file under ``path``.

    ``subset="msr1"`` keeps the ten whole-body actions, ``"msr2"`` all twenty.
    Files that cannot be read or parsed are skipped and listed in
    ``load_errors``.
    """
    if subset == "msr1":
        classes = list(MSR1_ACTIONS)
    elif subset == "msr2":
        classes = list(MSR_ACTIONS)
    else:
        raise ValueError(f"unknown MSR subset {subset!r}")
    root = Path(path)
    if not root.is_dir():
        raise FileNotFoundError(f"MSR directory not found: {root}")
    seqs, errors = [], []
    for f in sorted(root.iterdir()):
        if not _MSR_NAME.search(f.name):
            continue
        action, subject, event = parse_msr_name(f)
        if not 1 <= action <= len(MSR_ACTIONS):
            errors.append((f.name, f"action id {action} out of range"))
            continue
        name = MSR_ACTIONS[action - 1]
        if name not in classes:
            continue
        try:
            frames = read_msr_file(f)
            seqs.append(SkeletonSequence(frames, classes.index(name), subject, event,
                                         schema=MSR20.name, name=f.stem))
        except (OSError, ValueError) as exc:
            errors.append((f.name, str(exc)))
    for fname, why in errors:
        logger.warning("skipped %s: %s", fname, why)
    return Dataset(seqs, classes, MSR20.name, errors)


def write_msr_file(path: str | Path, frames: np.ndarray, confidence: float = 1.0) -> None:
    frames = np.asarray(frames, dtype=float).reshape(-1, 3)
    with open(path, "w") as fh:
        for x, y, z in frames:
            fh.write(f"{float(x)!r} {float(y)!r} {float(z)!r} {float(confidence)!r}\n")


# --- Florence 3D Actions --------------------------------------------------------

def load_florence(path: str | Path) -> Dataset:
    """Group world-coordinate rows by video id into sequences (9 classes)."""
    n_vals = 3 + 3 * len(FLORENCE15)
    groups: dict[int, list] = {}
    meta: dict[int, tuple[int, int]] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != n_vals:
                raise FormatError(f"{path}:{lineno}: expected {n_vals} values, got {len(parts)}")
            try:
                video, actor, category = (int(float(p)) for p in parts[:3])
                coords = np.array(parts[3:], dtype=float).reshape(len(FLORENCE15), 3)
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
            if not 1 <= category <= len(FLORENCE_ACTIONS):
                raise FormatError(f"{path}:{lineno}: category {category} outside 1..{len(FLORENCE_ACTIONS)}")
            if video in meta and meta[video] != (actor, category):
                raise FormatError(f"{path}:{lineno}: video {video} changes actor or category")
            meta[video] = (actor, category)
            groups.setdefault(video, []).append(coords)
    seqs = []
    repeats: Counter = Counter()
    for video in sorted(groups):
        actor, category = meta[video]
        repeats[(actor, category)] += 1
        seqs.append(SkeletonSequence(np.stack(groups[video]), category - 1, actor,
                                     repeats[(actor, category)], schema=FLORENCE15.name,
                                     name=f"video{video:03d}"))
    return Dataset(seqs, list(FLORENCE_ACTIONS), FLORENCE15.name)


def write_florence_file(path: str | Path, rows: Iterable[tuple[int, int, int, np.ndarray]]) -> None:
    with open(path, "w") as fh:
        for video, actor, category, frame in rows:
            vals = " ".join(repr(float(v)) for v in np.asarray(frame, dtype=float).ravel())
            fh.write(f"{video} {actor} {category} {vals}\n")


# --- canonical JSON lines ---------------------------------------------------------

def save_canonical(ds: Dataset, path: str | Path) -> None:
    with open(path, "w") as fh:
        header = {"format": CANONICAL_FORMAT, "version": CANONICAL_VERSION,
                  "schema": ds.schema, "classes": list(ds.classes), "count": len(ds)}
        fh.write(json.dumps(header) + "\n")
        for s in ds.sequences:
            rec = {"name": s.name, "label": s.label, "subject": s.subject, "event": s.event,
                   "schema": s.schema, "frames": s.frames.tolist()}
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")


def load_canonical(path: str | Path) -> Dataset:
    with open(path) as fh:
        first = fh.readline()
        if not first.strip():
            raise FormatError(f"{path}: missing header record")
        header = json.loads(first)
        if header.get("format") != CANONICAL_FORMAT:
            raise FormatError(f"{path}: not a {CANONICAL_FORMAT} file")
        if header.get("version") != CANONICAL_VERSION:
            raise FormatError(f"{path}: unsupported version {header.get('version')!r}, "
                              f"expected {CANONICAL_VERSION}")
        schema = header["schema"]
        get_schema(schema)
        seqs = []
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            seqs.append(SkeletonSequence(np.array(rec["frames"], dtype=float), int(rec["label"]),
                                         int(rec.get("subject", 0)), int(rec.get("event", 0)),
                                         schema=rec.get("schema", schema), name=rec.get("name", "")))
    if "count" in header and header["count"] != len(seqs):
        raise FormatError(f"{path}: header announces {header['count']} sequences, found {len(seqs)}")
    return Dataset(seqs, list(header["classes"]), schema)


def load_dataset(path: str | Path, adapter: str) -> Dataset:
    if adapter in ("msr1", "msr2"):
        return load_msr(path, adapter)
    if adapter == "florence":
        return load_florence(path)
    if adapter == "canonical":
        return load_canonical(path)
    raise ValueError(f"unknown adapter {adapter!r}")


def manifest_csv(ds: Dataset) -> str:
    """Sequence counts per (class, subject), plus per-class totals."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["class_id", "class_name", "subject", "sequences"])
    counts = Counter((s.label, s.subject) for s in ds.sequences)
    for (label, subject), n in sorted(counts.items()):
        w.writerow([label, ds.classes[label], subject, n])
    for label, n in sorted(Counter(s.label for s in ds.sequences).items()):
        w.writerow([label, ds.classes[label], "all", n])
    return buf.getvalue()


# --- split --------------------------------------------------------------------

@dataclass(frozen=True)
class CvSplit:
    test: tuple[int, ...]
    folds: tuple[tuple[int, ...], ...]
    seed: int

    def train_indices(self, fold: int) -> list[int]:
        return sorted(i for k, f in enumerate(self.folds) if k != fold for i in f)

    def validation_indices(self, fold: int) -> list[int]:
        return sorted(self.folds[fold])

    def all_indices(self) -> list[int]:
        return sorted(self.test + tuple(i for f in self.folds for i in f))


def split_cv(ds_or_n: Dataset | int, seed: int, stratify: bool = False,
             labels: Sequence[int] | None = None) -> CvSplit:
    """Hold out 25% (rounded down) for testing and deal the rest into 10 folds.

    Unstratified: one seeded permutation, the first ``floor(n / 4)`` indices
    form the test set. Stratified: classes are interleaved proportionally
    before the cut so every part keeps roughly the class mix.
    """
    if isinstance(ds_or_n, Dataset):
        n = len(ds_or_n)
        labels = ds_or_n.labels if labels is None else labels
    else:
        n = int(ds_or_n)
    if n < 14:
        raise ValueError(f"need at least 14 sequences for a 25%/10-fold split, got {n}")
    rng = np.random.default_rng(seed)
    if stratify:
        if labels is None:
            raise ValueError("stratified split needs labels")
        labels = np.asarray(labels)
        keys = np.empty(n)
        for c in np.unique(labels):
            idx = np.flatnonzero(labels == c)
            order = rng.permutation(len(idx))
            keys[idx[order]] = (np.arange(len(idx)) + rng.random()) / len(idx)
        perm = np.lexsort((rng.random(n), keys))
    else:
        perm = rng.permutation(n)
    n_test = int(np.floor(TEST_FRACTION * n))
    test = tuple(sorted(int(i) for i in perm[:n_test]))
    rest = perm[n_test:]
    folds = tuple(tuple(sorted(int(i) for i in rest[k::N_FOLDS])) for k in range(N_FOLDS))
    return CvSplit(test, folds, seed)
