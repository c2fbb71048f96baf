"""Ordered vector representation of winner traces.

A winner trace becomes a pattern by collapsing consecutive repeats; the
pattern is then resampled by walking its polyline in equal arc-length
steps, so every action ends up with the same number of points.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .som import GridShape


@dataclass
class PatternVector:
    points: np.ndarray  # (N, 2), consecutive rows distinct
    source_label: int | None = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if len(self.points) == 0:
            raise ValueError("a pattern needs at least one point")

    def __len__(self) -> int:
        return len(self.points)

    @property
    def length(self) -> float:
        return polyline_length(self.points)


@dataclass
class ResampledPattern:
    points: np.ndarray  # (k_max, 2)
    spacing: float

    @property
    def k_max(self) -> int:
        return len(self.points)


def polyline_length(points: np.ndarray) -> float:
    points = np.asarray(points, dtype=float)
    if len(points) < 2:
        return 0.0
    return float(np.sum(np.linalg.norm(np.diff(points, axis=0), axis=1)))


def extract_pattern(winners: Sequence[Sequence[int]], label: int | None = None) -> PatternVector:
    """Collapse consecutive duplicate winners, keeping order."""
    pts = np.asarray(winners, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError("empty winner list")
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = np.any(pts[1:] != pts[:-1], axis=1)
    return PatternVector(pts[keep], label)


def kmax(patterns: Iterable[PatternVector]) -> int:
    lengths = [len(p) for p in patterns]
    if not lengths:
        raise ValueError("no patterns")
    return max(lengths)


def optimal_spacing(p: PatternVector, k_max: int) -> float:
    """Polyline length divided by ``k_max``."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    return p.length / k_max


def resample(p: PatternVector, k_max: int) -> ResampledPattern:
    """``k_max`` points at arc lengths ``0, d, 2d, ...`` along the pattern polyline.

    Steps that run past a vertex carry the remainder into the next segment
    and the vertex itself is not emitted. Positions beyond the end of the
    polyline are clamped to its last point.
    """
    d_v = optimal_spacing(p, k_max)
    pts = p.points
    if len(pts) == 1 or d_v == 0.0:
        return ResampledPattern(np.repeat(pts[:1], k_max, axis=0), d_v)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    s = np.arange(k_max) * d_v
    idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg) - 1)
    seg_len = seg[idx]
    # zero-length segments only occur in hand-built patterns with repeats
    frac = np.divide(s - cum[idx], seg_len, out=np.zeros_like(s), where=seg_len > 0)
    out = pts[idx] + np.clip(frac, 0.0, 1.0)[:, None] * (pts[idx + 1] - pts[idx])
    out[s >= cum[-1]] = pts[-1]
    return ResampledPattern(out, d_v)


def flatten_normalize(r: ResampledPattern, shape: GridShape) -> np.ndarray:
    """Interleave (row, col) pairs scaled to [0, 1] by the grid extent."""
    pts = np.asarray(r.points, dtype=float)
    if np.any(pts < 0) or np.any(pts[:, 0] > shape.rows - 1) or np.any(pts[:, 1] > shape.cols - 1):
        raise ValueError("pattern point outside the grid")
    scale = np.array([max(shape.rows - 1, 1), max(shape.cols - 1, 1)], dtype=float)
    return (pts / scale).ravel()


def pattern_features(winners, k_max: int, shape: GridShape) -> np.ndarray:
    """Winner trace -> dedup -> resample -> flattened SOM input."""
    return flatten_normalize(resample(extract_pattern(winners), k_max), shape)


# --- export -----------------------------------------------------------------

CSV_HEADER = ("sequence_id", "point_index", "x", "y", "simulated_flag")


def patterns_to_csv(rows: Iterable[tuple[str, PatternVector | ResampledPattern | np.ndarray, bool]]) -> str:
    """CSV text for ``(sequence_id, pattern, simulated)`` triples."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for seq_id, pat, simulated in rows:
        pts = getattr(pat, "points", pat)
        for k, (x, y) in enumerate(np.asarray(pts, dtype=float).reshape(-1, 2)):
            writer.writerow([seq_id, k, repr(float(x)), repr(float(y)), int(bool(simulated))])
    return buf.getvalue()


def read_patterns_csv(text: str) -> dict[tuple[str, bool], np.ndarray]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_HEADER:
        raise ValueError(f"unexpected pattern CSV header {reader.fieldnames}")
    acc: dict[tuple[str, bool], list] = {}
    for row in reader:
        key = (row["sequence_id"], row["simulated_flag"] == "1")
        acc.setdefault(key, []).append((int(row["point_index"]), float(row["x"]), float(row["y"])))
    return {k: np.array([(x, y) for _, x, y in sorted(v)]) for k, v in acc.items()}


def patterns_to_svg(original: np.ndarray, simulated: np.ndarray | None, shape: GridShape,
                    title: str = "", cell: float = 12.0) -> str:
    """Overlay of the original (solid) and simulated (dashed) pattern on the grid."""
    w = shape.cols * cell
    h = shape.rows * cell

    def poly(pts, style):
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        # point = (row, col): x on the page follows the column
        coords = " ".join(f"{(c + 0.5) * cell:.2f},{(r + 0.5) * cell:.2f}" for r, c in pts)
        return f'  <polyline points="{coords}" fill="none" {style}/>\n'

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:g}" height="{h + 18:g}" '
        f'viewBox="0 -18 {w:g} {h + 18:g}">\n',
        f'  <rect x="0" y="0" width="{w:g}" height="{h:g}" fill="white" stroke="#888"/>\n',
    ]
    if title:
        parts.append(f'  <text x="2" y="-5" font-size="11" font-family="sans-serif">{_xml_escape(title)}</text>\n')
    parts.append(poly(original, 'stroke="#1f77b4" stroke-width="2"'))
    if simulated is not None:
        parts.append(poly(simulated, 'stroke="#d62728" stroke-width="2" stroke-dasharray="4 3"'))
    parts.append("</svg>\n")
    return "".join(parts)


def _xml_escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
