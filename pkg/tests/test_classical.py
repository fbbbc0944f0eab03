import numpy as np
import pytest

from hsmatch import classical
from hsmatch.core import SpectralCube, TargetPriorSet

from conftest import random_cube


def cube_of(rows):
    rows = np.asarray(rows, dtype=float)
    return SpectralCube(len(rows), 1, rows)


def test_autocorrelation_hand_values():
    np.testing.assert_allclose(classical.autocorrelation(cube_of([[1, 0], [0, 1]]), 0).R,
                               [[0.5, 0], [0, 0.5]])
    np.testing.assert_allclose(classical.autocorrelation(cube_of([[1, 1]]), 0).R,
                               [[1, 1], [1, 1]])
    a = classical.autocorrelation(cube_of([[1, 1]]), 1e-6)
    np.testing.assert_allclose(a.R, [[1 + 1e-6, 1], [1, 1 + 1e-6]], rtol=0, atol=1e-15)
    assert a.ridge == 1e-6


def test_autocorrelation_matches_brute_force(rng):
    c = random_cube(rng, 7, 9, 6)
    brute = sum(np.outer(h, h) for h in c.data) / c.n_pixels
    a = classical.autocorrelation(c, 0)
    np.testing.assert_allclose(a.R, brute, atol=1e-13)
    np.testing.assert_array_equal(a.R, a.R.T)


def test_default_ridge(rng):
    c = random_cube(rng)
    R0 = classical.autocorrelation(c, 0).R
    a = classical.autocorrelation(c, "auto")
    assert a.ridge == pytest.approx(1e-6 * np.trace(R0) / c.bands)
    np.linalg.cholesky(a.R)


def test_cem_hand_filter():
    # R = 0.5 I for the two unit pixels; third pixel appended twice with its
    # mirror keeps R diagonal
    c = cube_of([[1, 0], [0, 1]])
    acorr = classical.autocorrelation(c, 0)
    probe = cube_of([[1, 0], [0, 1], [0.5, 0.5]])
    s = classical.cem_score(probe, [1, 0], acorr=acorr).scores
    np.testing.assert_allclose(s, [1.0, 0.0, 0.5], atol=1e-15)


def test_cem_unit_response_random(rng):
    for _ in range(10):
        c = random_cube(rng, 8, 8, int(rng.integers(2, 30)))
        i = int(rng.integers(c.n_pixels))
        s = classical.cem_score(c, c.data[i], ridge="auto").scores
        assert abs(s[i] - 1.0) < 1e-9


def test_cem_invariant_to_pixel_duplication(rng):
    c = random_cube(rng, 5, 4, 6)
    d = rng.uniform(size=6)
    dup = SpectralCube(5, 8, np.vstack([c.data, c.data]))
    a = classical.cem_score(c, d, ridge=0).scores
    b = classical.cem_score(dup, d, ridge=0).scores
    np.testing.assert_allclose(b[:20], a, atol=1e-12)


def test_singular_without_ridge():
    c = cube_of([[1, 1], [2, 2]])
    with pytest.raises(classical.ConditioningError, match="ridge"):
        classical.cem_score(c, [1, 0], ridge=0)
    classical.cem_score(c, [1, 0], ridge=1e-6)


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        classical.autocorrelation(np.array([[1.0, np.nan]]), 0)


def test_cem_ensemble(rng):
    c = random_cube(rng)
    d1, d2 = rng.uniform(size=(2, c.bands))
    one = classical.cem_ensemble(c, TargetPriorSet([d1]))
    np.testing.assert_allclose(one.scores, classical.cem_score(c, d1).scores, atol=1e-12)
    both = classical.cem_ensemble(c, TargetPriorSet([d1, d2])).scores
    manual = (classical.cem_score(c, d1).scores + classical.cem_score(c, d2).scores) / 2
    np.testing.assert_allclose(both, manual, atol=1e-12)
    swapped = classical.cem_ensemble(c, TargetPriorSet([d2, d1])).scores
    np.testing.assert_allclose(swapped, both, atol=1e-12)


def test_ace_examples():
    c = cube_of([[1, 0], [0, 1], [2, 0], [0, 3]])
    s = classical.ace_score(c, [1, 0], ridge=0).scores
    # R is diagonal, so (0, y) is orthogonal to R^-1 d
    np.testing.assert_allclose(s, [1.0, 0.0, 1.0, 0.0], atol=1e-12)


def test_ace_properties(rng):
    c = random_cube(rng, 6, 6, 5)
    d = rng.uniform(size=5)
    s = classical.ace_score(c, d).scores
    assert np.all((s >= 0) & (s <= 1))
    scaled = SpectralCube(6, 6, c.data)  # same R, probe scaled pixels against it
    acorr = classical.autocorrelation(c)
    probe = SpectralCube(6, 6, 3.7 * c.data)
    s2 = classical.ace_score(probe, d, acorr=acorr).scores
    np.testing.assert_allclose(s2, classical.ace_score(scaled, d, acorr=acorr).scores, atol=1e-9)


def test_ace_zero_pixel_scores_zero():
    c = cube_of([[1, 0], [0, 1], [0, 0]])
    s = classical.ace_score(c, [1, 1], ridge=0).scores
    assert s[2] == 0.0


def test_spd_solve_accuracy(rng):
    for B in (2, 10, 50, 200):
        A = rng.normal(size=(B + 5, B))
        a = classical.Autocorrelation(A.T @ A / (B + 5) + 1e-3 * np.eye(B))
        d = rng.normal(size=B)
        x = a.solve(d)
        assert np.max(np.abs(a.R @ x - d)) / np.max(np.abs(d)) < 1e-10
