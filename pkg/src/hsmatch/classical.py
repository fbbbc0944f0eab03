"""Classical statistical detectors: CEM, ensemble CEM and ACE.

CEM filter for a target ``d`` over a scene with autocorrelation ``R``::

    D(h) = h^T R^-1 d / (d^T R^-1 d)

``R^-1 d`` always comes from a Cholesky solve, never an explicit inverse.
ACE uses the standard form ``(h^T R^-1 d)^2 / ((d^T R^-1 d)(h^T R^-1 h))``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .core import ScoreMap, SpectralCube, TargetPriorSet

# rows per block when accumulating R or scoring; fixed so results do not
# depend on how blocks are distributed over workers
BLOCK_ROWS = 4096


class ConditioningError(np.linalg.LinAlgError):
    """Raised when the autocorrelation matrix cannot be factorized."""


@dataclass(frozen=True)
class Autocorrelation:
    R: np.ndarray
    ridge: float = 0.0

    @property
    def bands(self):
        return self.R.shape[0]

    def cho_factor(self):
        try:
            return linalg.cho_factor(self.R, lower=True, check_finite=False)
        except linalg.LinAlgError as exc:
            raise ConditioningError(
                "autocorrelation matrix is not positive definite; "
                "pass a positive ridge (e.g. ridge='auto')"
            ) from exc

    def solve(self, rhs) -> np.ndarray:
        """Solve ``R x = rhs`` for one vector or for the columns of a matrix."""
        x = linalg.cho_solve(self.cho_factor(), np.asarray(rhs, dtype=np.float64),
                             check_finite=False)
        if not np.all(np.isfinite(x)):
            raise ConditioningError("non-finite solution; pass a positive ridge")
        return x


def _check_finite(a):
    if not np.all(np.isfinite(a)):
        raise ValueError("input contains non-finite values")


def default_ridge(R: np.ndarray) -> float:
    """``1e-6 * trace(R) / B``."""
    return 1e-6 * float(np.trace(R)) / R.shape[0]


def autocorrelation(cube, ridge="auto") -> Autocorrelation:
    """``(1/N) sum h h^T + ridge * I``.

    ``cube`` may be a :class:`SpectralCube` or an ``(N, B)`` array.
    ``ridge='auto'`` uses :func:`default_ridge`.
    """
    X = cube.data if isinstance(cube, SpectralCube) else np.asarray(cube, dtype=np.float64)
    _check_finite(X)
    n, b = X.shape
    R = np.zeros((b, b))
    for start in range(0, n, BLOCK_ROWS):
        blk = X[start:start + BLOCK_ROWS]
        R += blk.T @ blk
    R /= n
    R = 0.5 * (R + R.T)
    if ridge == "auto":
        ridge = default_ridge(R)
    ridge = float(ridge)
    if ridge < 0:
        raise ValueError("ridge must be >= 0")
    if ridge:
        R[np.diag_indices(b)] += ridge
    return Autocorrelation(R, ridge)


def _as_acorr(cube, ridge, acorr):
    return acorr if acorr is not None else autocorrelation(cube, ridge)


def _check_target(d, bands):
    d = np.asarray(d, dtype=np.float64).ravel()
    if d.size != bands:
        raise ValueError(f"target has {d.size} bands, cube has {bands}")
    _check_finite(d)
    return d


def cem_filter(acorr: Autocorrelation, d) -> np.ndarray:
    """The CEM weight vector ``w = R^-1 d / (d^T R^-1 d)``."""
    d = _check_target(d, acorr.bands)
    Rd = acorr.solve(d)
    denom = float(d @ Rd)
    if not denom > 0:
        raise ConditioningError("d^T R^-1 d is not positive")
    return Rd / denom


def cem_score(cube: SpectralCube, d, ridge="auto", acorr=None) -> ScoreMap:
    acorr = _as_acorr(cube, ridge, acorr)
    w = cem_filter(acorr, d)
    return ScoreMap(cube.width, cube.height, cube.data @ w)


def cem_ensemble(cube: SpectralCube, priors: TargetPriorSet, ridge="auto",
                 acorr=None) -> ScoreMap:
    """Mean of the CEM maps of every prior spectrum."""
    acorr = _as_acorr(cube, ridge, acorr)
    W = np.stack([cem_filter(acorr, d) for d in priors.spectra], axis=1)
    # per-pixel mean of the individual maps, summed in prior order
    scores = (cube.data @ W).mean(axis=1)
    return ScoreMap(cube.width, cube.height, scores)


def ace_score(cube: SpectralCube, d, ridge="auto", acorr=None) -> ScoreMap:
    acorr = _as_acorr(cube, ridge, acorr)
    d = _check_target(d, acorr.bands)
    Rd = acorr.solve(d)
    dRd = float(d @ Rd)
    if not dRd > 0:
        raise ConditioningError("d^T R^-1 d is not positive")
    X = cube.data
    num = (X @ Rd) ** 2
    # h^T R^-1 h row by row via a triangular solve on L^T h
    c, lower = acorr.cho_factor()
    hRh = np.empty(X.shape[0])
    for start in range(0, X.shape[0], BLOCK_ROWS):
        blk = X[start:start + BLOCK_ROWS]
        y = linalg.solve_triangular(c, blk.T, lower=lower, check_finite=False)
        hRh[start:start + BLOCK_ROWS] = np.einsum("ij,ij->j", y, y)
    denom = dRd * hRh
    safe = np.where(denom > 0, denom, 1.0)
    scores = np.where(denom > 0, num / safe, 0.0)
    return ScoreMap(cube.width, cube.height, np.clip(scores, 0.0, 1.0))
