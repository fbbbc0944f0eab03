"""Feature-space ensemble detector.

Every pixel and every prior target is mapped through the trained encoder;
a pixel's score is the negated mean Euclidean distance from its embedding
to the prior embeddings, so larger scores are more target-like and a pixel
matching a lone prior scores the maximum, 0.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import ScoreMap, SpectralCube, TargetPriorSet
from .embednet import EncoderParams, encoder_forward

# fixed chunking keeps results identical for any worker count
CHUNK_ROWS = 2048


@dataclass(frozen=True)
class EmbeddingField:
    width: int
    height: int
    embeddings: np.ndarray


def embed_spectra(params: EncoderParams, X, threads: int = 1) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != params.bands:
        raise ValueError(f"spectra have {X.shape[1]} bands, encoder expects {params.bands}")
    chunks = [X[s:s + CHUNK_ROWS] for s in range(0, len(X), CHUNK_ROWS)]
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda c: encoder_forward(params, c), chunks))
    else:
        parts = [encoder_forward(params, c) for c in chunks]
    return np.vstack(parts)


def embed_cube(params: EncoderParams, cube: SpectralCube, threads: int = 1) -> EmbeddingField:
    return EmbeddingField(cube.width, cube.height, embed_spectra(params, cube.data, threads))


def mean_prior_distance(embeddings, prior_embeddings) -> np.ndarray:
    E = np.atleast_2d(embeddings)
    P = np.atleast_2d(prior_embeddings)
    if E.shape[1] != P.shape[1]:
        raise ValueError("embedding dimensions differ")
    total = np.zeros(len(E))
    for p in P:
        diff = E - p
        total += np.sqrt((diff * diff).sum(axis=1))
    return total / len(P)


def ensemble_similarity(field: EmbeddingField, priors: TargetPriorSet,
                        params: EncoderParams) -> ScoreMap:
    """Score map of ``-(1/N_t) * sum_i ||f(h) - f(h_ti)||``."""
    prior_emb = encoder_forward(params, priors.spectra)
    dist = mean_prior_distance(field.embeddings, prior_emb)
    return ScoreMap(field.width, field.height, -dist)
