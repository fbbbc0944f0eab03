import numpy as np
import pytest

from hsmatch import embednet, matchdet
from hsmatch.core import SpectralCube, TargetPriorSet

from conftest import random_cube


@pytest.fixture
def params():
    return embednet.init_params(8, seed=5, hidden=32, embed_dim=16)


def test_single_pixel_field(params, rng):
    x = rng.uniform(size=8)
    f = matchdet.embed_cube(params, SpectralCube(1, 1, x[None]))
    assert f.embeddings.shape == (1, 16)
    np.testing.assert_allclose(f.embeddings[0], embednet.encoder_forward(params, x),
                               atol=1e-15)


def test_duplicate_pixels_embed_identically(params, rng):
    x = rng.uniform(size=8)
    f = matchdet.embed_cube(params, SpectralCube(3, 1, np.tile(x, (3, 1))))
    np.testing.assert_array_equal(f.embeddings[0], f.embeddings[1])
    np.testing.assert_array_equal(f.embeddings[0], f.embeddings[2])


def test_field_rows_unit_norm(params, rng):
    f = matchdet.embed_cube(params, random_cube(rng, 9, 7, 8))
    np.testing.assert_allclose(np.linalg.norm(f.embeddings, axis=1), 1.0, atol=1e-9)


def test_thread_count_does_not_change_result(params, rng, monkeypatch):
    monkeypatch.setattr(matchdet, "CHUNK_ROWS", 16)
    X = rng.uniform(size=(100, 8))
    one = matchdet.embed_spectra(params, X, threads=1)
    four = matchdet.embed_spectra(params, X, threads=4)
    np.testing.assert_array_equal(one, four)


def test_mean_distance_hand_values():
    E = np.array([[0.0, 0.0]])
    P = np.array([[1.0, 0.0], [0.0, 3.0]])
    np.testing.assert_allclose(matchdet.mean_prior_distance(E, P), [2.0])


def test_self_match_scores_maximum(params, rng):
    cube = random_cube(rng, 6, 5, 8)
    prior = TargetPriorSet(cube.data[7:8])
    smap = matchdet.ensemble_similarity(matchdet.embed_cube(params, cube), prior, params)
    assert abs(smap.scores[7]) < 1e-12
    assert smap.scores[7] >= smap.scores.max() - 1e-12
    assert (smap.scores <= 0).all() and (smap.scores >= -2).all()


def test_single_prior_is_negated_distance(params, rng):
    cube = random_cube(rng, 4, 4, 8)
    d = rng.uniform(size=8)
    f = matchdet.embed_cube(params, cube)
    smap = matchdet.ensemble_similarity(f, TargetPriorSet(d[None]), params)
    e = embednet.encoder_forward(params, d)
    np.testing.assert_array_equal(smap.scores, -np.sqrt(((f.embeddings - e) ** 2).sum(1)))


def test_prior_order_irrelevant(params, rng):
    cube = random_cube(rng, 4, 4, 8)
    f = matchdet.embed_cube(params, cube)
    P = rng.uniform(size=(5, 8))
    a = matchdet.ensemble_similarity(f, TargetPriorSet(P), params).scores
    b = matchdet.ensemble_similarity(f, TargetPriorSet(P[::-1]), params).scores
    np.testing.assert_allclose(a, b, atol=1e-14)


def test_band_mismatch(params, rng):
    with pytest.raises(ValueError):
        matchdet.embed_cube(params, random_cube(rng, 2, 2, 9))
