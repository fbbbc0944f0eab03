"""Synthetic linear-mixture scenes with implanted targets and a confuser."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import GroundTruth, SpectralCube, TargetPriorSet


@dataclass(frozen=True)
class SceneSpec:
    """Parameters of a synthetic scene.

    ``noise`` is the Gaussian noise standard deviation relative to the mean
    clean signal level. With ``confuser_correlation`` set, one of the
    non-target endmembers is replaced by a curve with that Pearson
    correlation to the target; it is kept out of the background mixtures
    and implanted only in ``confusers`` pixels, at the target abundance
    range. ``dirichlet`` is the concentration of the background abundances;
    values below 1 favour near-pure pixels.
    """

    width: int = 64
    height: int = 64
    bands: int = 50
    endmembers: int = 8
    target_index: int = 0
    targets: int = 40
    abundance: tuple = (0.6, 1.0)
    confuser_correlation: float | None = 0.95
    confusers: int = 40
    noise: float = 0.02
    dirichlet: float = 0.3
    n_priors: int = 10
    smoothing: int = 5
    seed: int = 0

    def __post_init__(self):
        n = self.width * self.height
        if self.width < 1 or self.height < 1 or self.bands < 1:
            raise ValueError("scene dimensions must be >= 1")
        if self.endmembers < 2:
            raise ValueError("need at least 2 endmembers")
        if self.confuser_correlation is not None and self.endmembers < 3:
            raise ValueError("a confuser needs at least 3 endmembers")
        if not 0 <= self.target_index < self.endmembers:
            raise ValueError("target_index out of range")
        if not 1 <= self.targets < n / 10:
            raise ValueError(f"targets must be in [1, N/10) = [1, {n / 10:g})")
        lo, hi = self.abundance
        if not 0 < lo <= hi <= 1:
            raise ValueError("abundance range must lie in (0, 1]")
        if self.noise < 0:
            raise ValueError("noise must be >= 0")
        if self.confuser_correlation is not None:
            if not -1 < self.confuser_correlation < 1:
                raise ValueError("confuser correlation must lie in (-1, 1)")
            if not 0 <= self.confusers < n / 10 or self.targets + self.confusers > n:
                raise ValueError("confusers must be in [0, N/10)")
        if self.n_priors < 1:
            raise ValueError("n_priors must be >= 1")


@dataclass(frozen=True)
class Scene:
    cube: SpectralCube
    truth: GroundTruth
    priors: TargetPriorSet
    endmembers: np.ndarray
    abundances: np.ndarray
    confuser_index: int | None


def _smooth_curve(rng, bands, width):
    walk = np.cumsum(rng.normal(0.0, 1.0, bands + 2 * width))
    kernel = np.ones(width) / width
    curve = np.convolve(walk, kernel, mode="same")[width:width + bands]
    return curve


def random_endmembers(rng, count, bands, smoothing=5) -> np.ndarray:
    """Positive, band-correlated curves: box-smoothed random walks."""
    E = np.empty((count, bands))
    for i in range(count):
        c = _smooth_curve(rng, bands, smoothing)
        c = c - c.min()
        c = c / (c.max() if c.max() > 0 else 1.0)
        E[i] = 0.2 + 0.8 * c
    return E


def correlated_curve(rng, reference, correlation, smoothing=5) -> np.ndarray:
    """Positive curve with the given Pearson correlation to ``reference``."""
    bands = reference.size
    t = reference - reference.mean()
    t_hat = t / np.linalg.norm(t)
    u = _smooth_curve(rng, bands, smoothing)
    u = u - u.mean()
    u = u - (u @ t_hat) * t_hat
    u_hat = u / np.linalg.norm(u)
    c = correlation * t_hat + np.sqrt(1.0 - correlation**2) * u_hat
    c = c * np.linalg.norm(t) + reference.mean()
    # shifting keeps the correlation exact while enforcing positivity
    if c.min() < 0.05:
        c = c + (0.05 - c.min())
    return c


def generate_scene(spec: SceneSpec) -> Scene:
    rng = np.random.default_rng(spec.seed)
    n = spec.width * spec.height
    E = random_endmembers(rng, spec.endmembers, spec.bands, spec.smoothing)
    bg_idx = [i for i in range(spec.endmembers) if i != spec.target_index]
    confuser = None
    if spec.confuser_correlation is not None:
        confuser = bg_idx.pop(0)
        E[confuser] = correlated_curve(rng, E[spec.target_index], spec.confuser_correlation,
                                       spec.smoothing)

    A = np.zeros((n, spec.endmembers))
    A[:, bg_idx] = rng.dirichlet(np.full(len(bg_idx), spec.dirichlet), size=n)
    n_conf = spec.confusers if confuser is not None else 0
    planted = rng.choice(n, size=spec.targets + n_conf, replace=False)
    targets = np.sort(planted[:spec.targets])
    lo, hi = spec.abundance

    def implant(pixels, member):
        a = rng.uniform(lo, hi, size=len(pixels)) if hi > lo else np.full(len(pixels), hi)
        A[pixels] *= (1.0 - a)[:, None]
        A[pixels, member] = a

    implant(targets, spec.target_index)
    if n_conf:
        implant(np.sort(planted[spec.targets:]), confuser)

    clean = A @ E
    sigma = spec.noise * float(clean.mean())
    data = clean + (rng.normal(0.0, sigma, size=clean.shape) if sigma > 0 else 0.0)
    priors = E[spec.target_index] + (
        rng.normal(0.0, sigma, size=(spec.n_priors, spec.bands)) if sigma > 0
        else np.zeros((spec.n_priors, spec.bands)))

    labels = np.zeros(n, dtype=np.int8)
    labels[targets] = 1
    return Scene(
        cube=SpectralCube(spec.width, spec.height, data),
        truth=GroundTruth(spec.width, spec.height, labels),
        priors=TargetPriorSet(priors),
        endmembers=E,
        abundances=A,
        confuser_index=confuser,
    )
