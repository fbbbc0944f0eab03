"""Synthetic pretext data: random convex mixtures of cluster centers.

Mixing weights are a temperature softmax of uniform draws::

    alpha_i = exp(z_i / T) / sum_j exp(z_j / T),   z_i ~ U[0, 1]

and a generated spectrum is ``alpha @ C``. Its label is the index of the
dominant weight (lowest index on ties).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MixBatch:
    spectra: np.ndarray
    weights: np.ndarray
    labels: np.ndarray
    temperature: float


def softmax_weights(z, temperature: float) -> np.ndarray:
    """Row-wise temperature softmax, stabilized by subtracting the row max."""
    if not temperature > 0:
        raise ValueError(f"temperature must be > 0, got {temperature}")
    z = np.asarray(z, dtype=np.float64)
    s = z / temperature
    s = s - s.max(axis=-1, keepdims=True)
    e = np.exp(s)
    return e / e.sum(axis=-1, keepdims=True)


def sample_mix_weights(K: int, temperature: float, rng, size=None) -> np.ndarray:
    """Draw one weight vector (or ``size`` rows of them)."""
    if K < 1:
        raise ValueError("K must be >= 1")
    if not temperature > 0:
        raise ValueError(f"temperature must be > 0, got {temperature}")
    shape = (K,) if size is None else (size, K)
    return softmax_weights(rng.uniform(0.0, 1.0, size=shape), temperature)


def mix(centers, weights, noise_sigma: float = 0.0, rng=None) -> MixBatch:
    """Combine ``centers`` with given weight rows; labels are row argmaxes."""
    C = np.asarray(centers, dtype=np.float64)
    W = np.atleast_2d(np.asarray(weights, dtype=np.float64))
    if W.shape[1] != C.shape[0]:
        raise ValueError(f"{W.shape[1]} weights per row for {C.shape[0]} centers")
    spectra = W @ C
    if noise_sigma > 0:
        spectra = spectra + rng.normal(0.0, noise_sigma, size=spectra.shape)
    return MixBatch(spectra, W, np.argmax(W, axis=1), float("nan"))


def generate_mix_batch(centers, count: int, temperature: float, rng,
                       noise_sigma: float = 0.0) -> MixBatch:
    C = np.asarray(centers, dtype=np.float64)
    K = C.shape[0]
    if K < 2:
        raise ValueError("need at least 2 centers to mix")
    if count < 1:
        raise ValueError("count must be >= 1")
    W = sample_mix_weights(K, temperature, rng, size=count)
    b = mix(C, W, noise_sigma, rng)
    return MixBatch(b.spectra, b.weights, b.labels, float(temperature))


def write_mix_batch_csv(batch: MixBatch, path) -> None:
    with open(path, "w") as fh:
        for y, a, h in zip(batch.labels, batch.weights, batch.spectra):
            fh.write(",".join([str(int(y))] + [repr(float(v)) for v in a]
                              + [repr(float(v)) for v in h]) + "\n")
