import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from asom_ar.patterns import (
    CSV_HEADER,
    PatternVector,
    extract_pattern,
    flatten_normalize,
    kmax,
    optimal_spacing,
    patterns_to_csv,
    patterns_to_svg,
    polyline_length,
    read_patterns_csv,
    resample,
)
from asom_ar.som import GridShape

coords = st.tuples(st.integers(0, 29), st.integers(0, 29))
traces = st.lists(coords, min_size=1, max_size=40)


def walk(poly, d, k):
    """Reference resampler: step ``d`` along the polyline, carrying the
    leftover distance past each vertex. Returns points and arc positions."""
    poly = np.asarray(poly, float)
    pts, pos = [poly[0]], [0.0]
    cur, n, travelled, need = poly[0], 0, 0.0, d
    while len(pts) < k:
        if n >= len(poly) - 1 or d == 0:
            pts.append(poly[-1])
            pos.append(None)
            continue
        gap = float(np.linalg.norm(poly[n + 1] - cur))
        if gap >= need:
            cur = cur + (need / gap) * (poly[n + 1] - cur)
            travelled += need
            pts.append(cur)
            pos.append(travelled)
            need = d
        else:
            need -= gap
            travelled += gap
            cur = poly[n + 1]
            n += 1
    return np.array(pts), pos


def dist_to_polyline(poly, p):
    poly = np.asarray(poly, float)
    best = np.linalg.norm(poly[0] - p)
    for a, b in zip(poly[:-1], poly[1:]):
        ab = b - a
        t = np.clip(np.dot(p - a, ab) / np.dot(ab, ab), 0, 1)
        best = min(best, np.linalg.norm(a + t * ab - p))
    return best


# --- extraction ---------------------------------------------------------------------

def test_extract_collapses_repeats():
    p = extract_pattern([(1, 1), (1, 1), (2, 3)])
    assert p.points.tolist() == [[1, 1], [2, 3]]


def test_extract_all_identical():
    assert len(extract_pattern([(4, 4)] * 5)) == 1


def test_extract_without_repeats_is_unchanged():
    w = [(0, 0), (0, 1), (0, 0), (2, 2)]
    assert extract_pattern(w).points.tolist() == [list(c) for c in w]


def test_extract_rejects_empty():
    with pytest.raises(ValueError):
        extract_pattern([])


@given(traces)
def test_extract_is_idempotent(w):
    once = extract_pattern(w)
    twice = extract_pattern(once.points)
    assert np.array_equal(once.points, twice.points)
    assert np.all(np.any(np.diff(once.points, axis=0) != 0, axis=1))


# --- K_max and spacing ---------------------------------------------------------------

def test_kmax():
    pats = [PatternVector(np.zeros((n, 2)) + np.arange(n)[:, None]) for n in (3, 7, 5)]
    assert kmax(pats) == 7
    assert kmax([PatternVector(np.arange(8.0).reshape(4, 2))]) == 4
    with pytest.raises(ValueError):
        kmax([])


def test_worked_example_spacing_and_points():
    p = PatternVector([(0, 0), (3, 0), (3, 4)])
    # length 3 + 4 = 7, split into 4 steps
    assert optimal_spacing(p, 4) == 1.75
    r = resample(p, 4)
    expected = [(0, 0), (1.75, 0), (3, 0.5), (3, 2.25)]
    assert np.allclose(r.points, expected, atol=1e-12)
    assert r.spacing == 1.75


def test_spacing_rejects_bad_kmax():
    with pytest.raises(ValueError):
        optimal_spacing(PatternVector([(0, 0)]), 0)


def test_single_point_repeats():
    r = resample(PatternVector([(2, 5)]), 6)
    assert r.points.shape == (6, 2) and np.all(r.points == [2, 5])


def test_hand_built_repeats_are_safe():
    r = resample(PatternVector([(0, 0), (0, 0), (0, 4)]), 4)
    assert np.allclose(r.points, [(0, 0), (0, 1), (0, 2), (0, 3)])


@given(traces, st.integers(1, 60))
def test_resample_cardinality_on_polyline_and_spacing(w, k):
    p = extract_pattern(w)
    r = resample(p, k)
    assert r.points.shape == (k, 2)
    if len(p) == 1:
        assert np.all(r.points == p.points[0])
        return
    ref, pos = walk(p.points, r.spacing, k)
    length = polyline_length(p.points)
    for i, pt in enumerate(r.points):
        assert dist_to_polyline(p.points, pt) < 1e-9
        target = i * r.spacing
        if target < length - 1e-9:
            # arc-length spacing: the i-th point sits i * d_v along the walk
            assert abs(pos[i] - target) < 1e-9
            assert np.allclose(pt, ref[i], atol=1e-9)
        elif target > length + 1e-9:
            assert np.array_equal(pt, p.points[-1])


def test_endpoint_is_not_reached():
    p = PatternVector([(0, 0), (0, 10)])
    r = resample(p, 5)
    assert r.points[-1].tolist() == [0, 8]


# --- flattening -------------------------------------------------------------------------

def test_flatten_corners():
    shape = GridShape(30, 30)
    from asom_ar.patterns import ResampledPattern
    assert flatten_normalize(ResampledPattern(np.array([[0.0, 0.0]]), 0.0), shape).tolist() == [0, 0]
    assert flatten_normalize(ResampledPattern(np.array([[29.0, 29.0]]), 0.0), shape).tolist() == [1, 1]


def test_flatten_length_and_bounds():
    r = resample(PatternVector([(0, 0), (5, 9)]), 4)
    v = flatten_normalize(r, GridShape(10, 10))
    assert v.shape == (8,)
    assert v.min() >= 0 and v.max() <= 1


def test_flatten_rejects_points_outside_grid():
    from asom_ar.patterns import ResampledPattern
    with pytest.raises(ValueError):
        flatten_normalize(ResampledPattern(np.array([[3.0, 12.0]]), 0.0), GridShape(10, 10))


# --- export ------------------------------------------------------------------------------

def test_csv_round_trip():
    a = resample(PatternVector([(0, 0), (3, 0), (3, 4)]), 4)
    b = resample(PatternVector([(1, 1), (2, 2)]), 4)
    text = patterns_to_csv([("s1", a, False), ("s1", b, True)])
    assert text.splitlines()[0] == ",".join(CSV_HEADER)
    back = read_patterns_csv(text)
    assert np.array_equal(back[("s1", False)], a.points)
    assert np.array_equal(back[("s1", True)], b.points)


def test_csv_rejects_wrong_header():
    with pytest.raises(ValueError):
        read_patterns_csv("a,b\n1,2\n")


def test_svg_contains_both_polylines():
    svg = patterns_to_svg(np.array([[0, 0], [2, 3]]), np.array([[0, 0], [1, 1]]),
                          GridShape(5, 5), title="wave <50%>")
    assert svg.startswith("<svg") and svg.count("<polyline") == 2
    assert "&lt;50%&gt;" in svg
