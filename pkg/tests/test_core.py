import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hsmatch.core import (GroundTruth, ScoreMap, SpectralCube, TargetPriorSet,
                          normalize_cube, normalize_priors)


def test_cube_shape_checks():
    with pytest.raises(ValueError):
        SpectralCube(2, 2, np.zeros((3, 2)))
    with pytest.raises(ValueError):
        SpectralCube(1, 1, np.array([[np.nan]]))
    c = SpectralCube(2, 1, [[1.0, 2.0], [3.0, 4.0]])
    assert c.bands == 2 and c.n_pixels == 2
    assert not c.data.flags.writeable


def test_image_round_trip(rng):
    img = rng.normal(size=(3, 4, 5))
    c = SpectralCube.from_image(img)
    assert (c.width, c.height, c.bands) == (4, 3, 5)
    np.testing.assert_array_equal(c.to_image(), img)
    np.testing.assert_array_equal(c.pixel(2, 1), img[2, 1])


def test_minmax_hand_values():
    c = SpectralCube(3, 1, [[2.0, 5.0], [4.0, 5.0], [6.0, 5.0]])
    out = normalize_cube(c, "per-band-minmax")
    np.testing.assert_array_equal(out.data[:, 0], [0.0, 0.5, 1.0])
    # constant band
    np.testing.assert_array_equal(out.data[:, 1], [0.0, 0.0, 0.0])


def test_mode_none_is_identity(cube):
    assert normalize_cube(cube, "none") is cube


def test_unknown_mode(cube):
    with pytest.raises(ValueError):
        normalize_cube(cube, "zscore")


finite = st.floats(-1e6, 1e6, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 12), st.integers(1, 5)), elements=finite))
def test_minmax_range_and_idempotence(data):
    c = SpectralCube(data.shape[0], 1, data)
    once = normalize_cube(c)
    assert np.all(once.data >= 0.0) and np.all(once.data <= 1.0)
    lo, hi = data.min(0), data.max(0)
    for b in range(data.shape[1]):
        if hi[b] > lo[b]:
            assert once.data[data[:, b] == lo[b], b].max() == 0.0
            assert once.data[data[:, b] == hi[b], b].min() == 1.0
        else:
            assert np.all(once.data[:, b] == 0.0)
    twice = normalize_cube(once)
    assert np.max(np.abs(twice.data - once.data)) <= 1e-12


def test_priors_use_cube_ranges():
    c = SpectralCube(2, 1, [[0.0, 10.0], [2.0, 30.0]])
    p = normalize_priors(TargetPriorSet([[1.0, 20.0]]), c, "per-band-minmax")
    np.testing.assert_allclose(p.spectra, [[0.5, 0.5]])


def test_score_map_and_truth():
    with pytest.raises(ValueError):
        ScoreMap(2, 2, [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        ScoreMap(1, 1, [np.inf])
    s = ScoreMap(2, 1, [0.1, 0.2])
    assert s.larger_is_target
    t = GroundTruth(2, 2, [0, 255, 0, 1])
    np.testing.assert_array_equal(t.labels, [0, 1, 0, 1])
    assert t.n_targets == 2
