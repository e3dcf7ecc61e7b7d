import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hcrkit.errors import DataError
from hcrkit.features import (
    DIMENSIONS,
    EXTRACTORS,
    Direction,
    FeatureVector,
    Segment,
    Zone,
    bucket_angle,
    classify_direction,
    count_intersections,
    encode_count,
    extract,
    extract_geometric,
    extract_gradient,
    extract_hybrid,
    extract_proposed,
    extract_segments,
    global_features,
    line_segments,
    normalized_length,
    partition_zones,
    split_lengths,
)
from hcrkit.imaging import GlyphGenConfig, generate_glyphs
from hcrkit.preprocess import preprocess


def _canvas(h, w):
    return np.zeros((h, w), dtype=bool)


def _plus(size=9):
    m = _canvas(size, size)
    c = size // 2
    m[c, 1:size - 1] = True
    m[1:size - 1, c] = True
    return m


def _tee(size=9):
    m = _canvas(size, size)
    m[1, 1:size - 1] = True
    m[1:size - 1, size // 2] = True
    return m


def _ell():
    m = _canvas(10, 10)
    m[1:9, 1] = True
    m[8, 1:9] = True
    return m


# zoning

def test_partition_exact_division():
    grid = partition_zones(9, 9, 3, 3)
    assert len(grid.zones) == 9
    assert all(z.w == 3 and z.h == 3 for z in grid.zones)
    assert grid.zones[1] == Zone(3, 0, 3, 3)


def test_partition_larger_parts_first():
    assert split_lengths(10, 3) == [4, 3, 3]
    assert [z.w for z in partition_zones(10, 3, 1, 3).zones] == [4, 3, 3]


def test_partition_rejects_tiny_images():
    with pytest.raises(ValueError):
        partition_zones(2, 9, 3, 3)
    with pytest.raises(ValueError):
        partition_zones(9, 9, 0, 3)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.data())
def test_partition_covers_image_without_overlap(rows, cols, data):
    w = data.draw(st.integers(cols, 60))
    h = data.draw(st.integers(rows, 60))
    cover = np.zeros((h, w), dtype=int)
    for z in partition_zones(w, h, rows, cols).zones:
        z.view(cover)[...] += 1
    assert (cover == 1).all()


# segments and directions

def test_horizontal_run_is_one_segment():
    m = _canvas(5, 14)
    m[2, 2:12] = True
    segs = extract_segments(m)
    assert len(segs) == 1 and segs[0].kind == "path" and len(segs[0]) == 10


def test_ell_is_one_segment_split_into_h_and_v():
    segs = extract_segments(_ell())
    assert len(segs) == 1 and len(segs[0]) == 15
    assert sorted(s.direction.value for s in line_segments(_ell())) == ["H", "V"]


def test_plus_has_four_arms():
    segs = line_segments(_plus())
    assert len(segs) == 4
    assert sorted(s.direction.value for s in segs) == ["H", "H", "V", "V"]


def test_short_spurs_are_dropped():
    m = _canvas(5, 5)
    m[2, 1:3] = True
    assert extract_segments(m) == []


def test_ring_is_a_loop():
    m = _canvas(9, 9)
    m[2, 2:7] = m[6, 2:7] = True
    m[2:7, 2] = m[2:7, 6] = True
    (seg,) = line_segments(m)
    assert seg.kind == "loop" and len(seg) == 16 and seg.direction is Direction.H


def test_elongated_loop_takes_its_axis():
    m = _canvas(20, 9)
    m[2, 3:6] = m[17, 3:6] = True
    m[2:18, 2] = m[2:18, 6] = True
    m[2, 2] = m[2, 6] = m[17, 2] = m[17, 6] = False
    (seg,) = line_segments(m)
    assert seg.kind == "loop" and seg.direction is Direction.V


@pytest.mark.parametrize("end, expected", [
    ((9, 0), Direction.H),
    ((0, 9), Direction.V),
    ((9, 9), Direction.LD),
])
def test_classify_from_origin(end, expected):
    assert classify_direction(Segment(((0, 0), end))) is expected


def test_classify_right_diagonal():
    assert classify_direction(Segment(((0, 9), (9, 0)))) is Direction.RD


def test_bucket_boundaries_go_to_non_diagonal():
    assert bucket_angle(22.5) is Direction.H
    assert bucket_angle(-22.5) is Direction.H
    assert bucket_angle(67.5) is Direction.V
    assert bucket_angle(-67.5) is Direction.V
    assert bucket_angle(-45.0) is Direction.RD
    assert bucket_angle(45.0) is Direction.LD


def test_diagonal_strokes():
    m = _canvas(13, 13)
    for i in range(11):
        m[1 + i, 1 + i] = True
        m[11 - i, 1 + i] = True
    dirs = sorted(s.direction.value for s in line_segments(m))
    assert dirs == ["LD", "LD", "RD", "RD"]


# encodings

def test_encode_count_values():
    assert encode_count(0) == 1.0
    assert encode_count(3) == pytest.approx(0.4, abs=1e-12)
    assert encode_count(10) == -1.0
    assert encode_count(12) == -1.0
    vals = [encode_count(n) for n in range(11)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        encode_count(-1)


def test_normalized_length_values():
    assert normalized_length(12, 400) == pytest.approx(0.03, abs=1e-12)
    assert normalized_length(0, 400) == 0.0
    assert normalized_length(400, 400) == 1.0
    assert normalized_length(500, 400) == 1.0
    with pytest.raises(ValueError):
        normalized_length(1, 0)


# intersections

def test_intersections():
    line = _canvas(9, 9)
    line[4, 1:8] = True
    whole = Zone(0, 0, 9, 9)
    assert count_intersections(line, whole) == 0
    assert count_intersections(_plus(), whole) == 1
    assert count_intersections(_tee(), whole) == 1
    assert count_intersections(_ell(), Zone(0, 0, 10, 10)) == 0
    assert count_intersections(_plus(), Zone(0, 0, 4, 4)) == 0


# global features

def test_global_point_mass():
    m = _canvas(5, 5)
    m[2, 2] = True
    offset, moment, objects, spread = global_features(m)
    assert offset == 0 and moment == 0
    assert objects == pytest.approx(0.8) and spread == pytest.approx(1 / 25)


def test_global_full_and_two_blobs():
    assert global_features(np.ones((4, 6), dtype=bool))[3] == 1.0
    m = _canvas(6, 6)
    m[0:2, 0:2] = m[4:6, 4:6] = True
    assert global_features(m)[2] == pytest.approx(0.6)
    with pytest.raises(ValueError):
        global_features(_canvas(3, 3))


# vectors

def test_dimensions_on_glyphs(glyphs):
    for img, _ in glyphs.samples:
        pre = preprocess(img)
        for name in EXTRACTORS:
            fv = extract(pre, name)
            assert len(fv) == DIMENSIONS[name]
            assert np.all(np.isfinite(fv.values))


def test_empty_zone_block():
    m = _canvas(9, 9)
    m[0, 0:3] = True
    vec = extract_geometric(m, m).values.reshape(9, 9)
    for zone in range(1, 9):
        np.testing.assert_array_equal(vec[zone], [1, 1, 1, 1, 0, 0, 0, 0, 0])
    assert vec[0][0] == pytest.approx(0.8)


def test_vertical_bar_features():
    m = _canvas(12, 3)
    m[:, 1] = True
    vec = extract_proposed(m, m).values[:81].reshape(9, 9)
    crossed = vec[[1, 4, 7]]
    assert (crossed[:, 1] < 1).any()
    assert (crossed[:, [4, 6, 7]] == 0).all()
    assert (crossed[:, 5] > 0).all()


def test_geometric_is_prefix_of_proposed(glyphs):
    for img, _ in glyphs.samples[:6]:
        pre = preprocess(img)
        np.testing.assert_array_equal(extract(pre, "geometric").values,
                                      extract(pre, "proposed").values[:81])


def test_hybrid_horizontal_line_and_plus():
    line = _canvas(9, 9)
    line[4, :] = True
    assert (extract_hybrid(line, line).values.reshape(9, 10)[:, 9] == 1).all()
    plus = _plus()
    inter = extract_hybrid(plus, plus).values.reshape(9, 10)[:, 9]
    assert np.isclose(inter, 0.8).sum() == 1 and inter[4] == pytest.approx(0.8)


def test_gradient_constant_and_step():
    gray = np.full((9, 9), 100, dtype=np.uint8)
    mask = np.ones((9, 9), dtype=bool)
    assert not extract_gradient(gray, mask).values.any()
    gray[:, 4:] = 200
    hist = extract_gradient(gray, mask).values.reshape(9, 8)
    for zone in range(9):
        norm = np.linalg.norm(hist[zone])
        assert norm == pytest.approx(1.0) or norm == 0
        if norm:
            assert hist[zone, 0] == pytest.approx(1.0)
    assert np.linalg.norm(hist[1]) == pytest.approx(1.0)


def test_gradient_step_other_way_uses_bin_four():
    gray = np.full((9, 9), 200, dtype=np.uint8)
    gray[:, 4:] = 50
    hist = extract_gradient(gray, np.ones((9, 9), dtype=bool)).values.reshape(9, 8)
    assert hist[1, 4] == pytest.approx(1.0)


def test_value_ranges(glyphs):
    for img, _ in glyphs.samples:
        v = extract(preprocess(img), "proposed").values
        assert v.min() >= -1 and v.max() <= 1
        g = extract(preprocess(img), "gradient").values
        assert g.min() >= 0 and g.max() <= 1


def test_feature_vector_validation():
    with pytest.raises(ValueError):
        FeatureVector("proposed", np.zeros(10))
    with pytest.raises(ValueError):
        FeatureVector("nope", np.zeros(10))
    with pytest.raises(ValueError):
        FeatureVector("geometric", np.full(81, np.nan))
    with pytest.raises(DataError):
        extract_proposed(_canvas(9, 9), _canvas(9, 8))


def test_features_ignore_canvas_placement():
    ds = generate_glyphs(GlyphGenConfig(canvas=40), "KR")
    for img, _ in ds.samples:
        shifted = np.full_like(img, 255)
        shifted[3:, 5:] = img[:-3, :-5]
        if (img[-3:] < 128).any() or (img[:, -5:] < 128).any():
            continue
        for name in EXTRACTORS:
            np.testing.assert_allclose(extract(preprocess(img), name).values,
                                       extract(preprocess(shifted), name).values)
