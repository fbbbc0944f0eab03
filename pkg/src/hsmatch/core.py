"""Shared data containers and spectrum normalization.

All containers hold float64 numpy arrays that are marked read-only on
construction, so instances can be passed between stages without copies.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

NORMALIZATION_MODES = ("none", "per-band-minmax")


def _frozen(arr, dtype=np.float64):
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class SpectralCube:
    """An image of ``width * height`` pixels by ``bands`` spectral channels.

    ``data`` is an ``(N, B)`` matrix; row ``i`` is the pixel at spatial
    position ``(i // width, i % width)``.
    """

    width: int
    height: int
    data: np.ndarray

    def __post_init__(self):
        data = _frozen(self.data)
        if data.ndim != 2:
            raise ValueError(f"cube data must be 2-D (N, B), got shape {data.shape}")
        if self.width < 1 or self.height < 1:
            raise ValueError("cube width and height must be >= 1")
        if data.shape[0] != self.width * self.height:
            raise ValueError(
                f"cube has {data.shape[0]} pixels, expected {self.width}x{self.height}"
            )
        if data.shape[1] < 1:
            raise ValueError("cube needs at least one band")
        if not np.all(np.isfinite(data)):
            raise ValueError("cube contains non-finite values")
        object.__setattr__(self, "data", data)

    @property
    def bands(self) -> int:
        return self.data.shape[1]

    @property
    def n_pixels(self) -> int:
        return self.data.shape[0]

    @classmethod
    def from_image(cls, image) -> "SpectralCube":
        """Build from a ``(height, width, bands)`` array."""
        image = np.asarray(image, dtype=np.float64)
        h, w, b = image.shape
        return cls(width=w, height=h, data=image.reshape(h * w, b))

    def to_image(self) -> np.ndarray:
        return self.data.reshape(self.height, self.width, self.bands)

    def pixel(self, row: int, col: int) -> np.ndarray:
        return self.data[row * self.width + col]


@dataclass(frozen=True)
class TargetPriorSet:
    """The given target spectra, one per row."""

    spectra: np.ndarray

    def __post_init__(self):
        spectra = _frozen(np.atleast_2d(self.spectra))
        if spectra.ndim != 2 or spectra.shape[0] < 1:
            raise ValueError("need at least one prior spectrum")
        if not np.all(np.isfinite(spectra)):
            raise ValueError("prior spectra contain non-finite values")
        object.__setattr__(self, "spectra", spectra)

    @property
    def count(self) -> int:
        return self.spectra.shape[0]

    def __len__(self):
        return self.count

    def __iter__(self):
        return iter(self.spectra)


@dataclass(frozen=True)
class ScoreMap:
    """Per-pixel detection scores; larger always means more target-like."""

    width: int
    height: int
    scores: np.ndarray
    larger_is_target: bool = field(default=True, init=False)

    def __post_init__(self):
        scores = _frozen(np.ravel(self.scores))
        if scores.size != self.width * self.height:
            raise ValueError(
                f"score map has {scores.size} values, expected {self.width}x{self.height}"
            )
        if not np.all(np.isfinite(scores)):
            raise ValueError("score map contains non-finite values")
        object.__setattr__(self, "scores", scores)

    def to_image(self) -> np.ndarray:
        return self.scores.reshape(self.height, self.width)


@dataclass(frozen=True)
class GroundTruth:
    """Binary target mask, 1 = target, 0 = background."""

    width: int
    height: int
    labels: np.ndarray

    def __post_init__(self):
        labels = np.ravel(np.asarray(self.labels))
        if labels.size != self.width * self.height:
            raise ValueError(
                f"mask has {labels.size} values, expected {self.width}x{self.height}"
            )
        labels = _frozen(labels != 0, dtype=np.int8)
        object.__setattr__(self, "labels", labels)

    @property
    def n_targets(self) -> int:
        return int(self.labels.sum())


def band_range(cube: SpectralCube) -> tuple[np.ndarray, np.ndarray]:
    """Per-band minimum and maximum of a cube."""
    return cube.data.min(axis=0), cube.data.max(axis=0)


def apply_minmax(values, lo, hi) -> np.ndarray:
    """Map ``values`` with the band ranges ``lo``/``hi``; constant bands go to 0."""
    values = np.asarray(values, dtype=np.float64)
    span = hi - lo
    safe = np.where(span > 0, span, 1.0)
    out = (values - lo) / safe
    return np.where(span > 0, out, 0.0)


def normalize_cube(cube: SpectralCube, mode: str = "per-band-minmax") -> SpectralCube:
    if mode == "none":
        return cube
    if mode != "per-band-minmax":
        raise ValueError(f"unknown normalization mode {mode!r}")
    lo, hi = band_range(cube)
    out = apply_minmax(cube.data, lo, hi)
    # exact endpoints, independent of rounding in the division
    span = hi - lo
    nz = span > 0
    out[:, nz] = np.where(cube.data[:, nz] == hi[nz], 1.0, out[:, nz])
    out[:, nz] = np.where(cube.data[:, nz] == lo[nz], 0.0, out[:, nz])
    return SpectralCube(cube.width, cube.height, out)


def normalize_priors(priors: TargetPriorSet, cube: SpectralCube, mode: str) -> TargetPriorSet:
    """Normalize prior spectra with the band ranges of the (raw) cube."""
    if mode == "none":
        return priors
    lo, hi = band_range(cube)
    return TargetPriorSet(apply_minmax(priors.spectra, lo, hi))
