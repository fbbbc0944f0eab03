"""Coarse target/background split of pre-detector scores, plus k-means
sub-categorization of each side."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import ScoreMap, SpectralCube


@dataclass(frozen=True)
class PartitionResult:
    target_indices: np.ndarray
    background_indices: np.ndarray
    threshold: float
    fraction: float


@dataclass
class Clustering:
    centers: np.ndarray
    assignments: np.ndarray
    objective: float
    iterations_run: int
    # J after the initial assignment and after every Lloyd update, including
    # the polish that follows a Hartigan transfer
    history: list = field(default_factory=list)


@dataclass(frozen=True)
class SubcategoryCenters:
    """Concatenated target and background cluster centers, target first."""

    centers: np.ndarray
    is_target: np.ndarray
    # sub-category index of every pixel in the cube
    pixel_labels: np.ndarray
    target_clustering: Clustering
    background_clustering: Clustering

    @property
    def n_target(self):
        return int(self.is_target.sum())

    @property
    def K(self):
        return self.centers.shape[0]


def quantile_split(scores: ScoreMap | np.ndarray, fraction: float = 0.01) -> PartitionResult:
    """Take the ``ceil(fraction * N)`` highest scores as the pseudo target set.

    Ties are broken towards the lower pixel index.
    """
    s = np.ravel(scores.scores if isinstance(scores, ScoreMap) else scores)
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")
    n = s.size
    if n < 2:
        raise ValueError("need at least 2 pixels to split")
    n_t = min(max(math.ceil(fraction * n), 1), n - 1)
    # stable sort on -s keeps lower indices first inside tied groups
    order = np.argsort(-s, kind="stable")
    tgt = np.sort(order[:n_t])
    bkg = np.sort(order[n_t:])
    return PartitionResult(tgt, bkg, float(s[order[n_t - 1]]), float(fraction))


def _sqdist(X, C):
    """Squared Euclidean distances between rows of X and rows of C."""
    out = np.empty((len(X), len(C)))
    step = max(1, 2**20 // max(1, C.size))
    for s in range(0, len(X), step):
        diff = X[s:s + step, None, :] - C[None, :, :]
        out[s:s + step] = np.einsum("ikb,ikb->ik", diff, diff)
    return out


def _assign(X, C):
    d = _sqdist(X, C)
    a = np.argmin(d, axis=1)  # argmin returns the lowest index on ties
    return a, d[np.arange(len(X)), a]


def objective(points, centers, assignments) -> float:
    """Sum of squared distances of every point to its assigned center."""
    diff = np.asarray(points) - np.asarray(centers)[assignments]
    return float((diff * diff).sum())


def kmeans_pp_init(X, K, rng, return_indices=False):
    M = len(X)
    idx = [int(rng.integers(M))]
    closest = ((X - X[idx[0]]) ** 2).sum(1)
    for _ in range(1, K):
        total = closest.sum()
        if total <= 0:
            # every point already sits on a center; take the first unused one
            unused = np.setdiff1d(np.arange(M), idx)
            nxt = int(unused[0])
        else:
            nxt = int(rng.choice(M, p=closest / total))
        idx.append(nxt)
        closest = np.minimum(closest, ((X - X[nxt]) ** 2).sum(1))
    if return_indices:
        return X[idx].copy(), idx
    return X[idx].copy()


def _repair_empty(X, C, a, d):
    """Give every empty cluster the point farthest from its own center."""
    K = len(C)
    for k in range(K):
        if np.any(a == k):
            continue
        counts = np.bincount(a, minlength=K)
        movable = counts[a] > 1
        cand = np.where(movable, d, -1.0)
        far = int(np.argmax(cand))
        a[far] = k
        C[k] = X[far]
        d[far] = 0.0
    return a


def _hartigan(X, a, K, max_sweeps=100):
    """Single-point transfers that strictly lower the objective.

    Moving ``x`` from cluster ``i`` to ``j`` changes J by
    ``n_j/(n_j+1) |x-c_j|^2 - n_i/(n_i-1) |x-c_i|^2``. Stops when no move
    helps; the result is also a fixed point of Lloyd's algorithm.
    """
    a = a.copy()
    counts = np.bincount(a, minlength=K).astype(np.float64)
    sums = np.zeros((K, X.shape[1]))
    np.add.at(sums, a, X)
    moved_any = False
    for _ in range(max_sweeps):
        moved = False
        for i in range(len(X)):
            src = a[i]
            if counts[src] <= 1:
                continue
            C = sums / counts[:, None]
            d = ((C - X[i]) ** 2).sum(axis=1)
            gain_out = counts[src] / (counts[src] - 1) * d[src]
            cost_in = counts / (counts + 1) * d
            cost_in[src] = np.inf
            dst = int(np.argmin(cost_in))
            if cost_in[dst] < gain_out * (1 - 1e-12):
                sums[src] -= X[i]
                counts[src] -= 1
                sums[dst] += X[i]
                counts[dst] += 1
                a[i] = dst
                moved = moved_any = True
        if not moved:
            break
    return a, sums / counts[:, None], moved_any


def _lloyd(X, C, max_iter, tol):
    a, d = _assign(X, C)
    a = _repair_empty(X, C, a, d)
    J = objective(X, C, a)
    history = [J]
    it = 0
    for it in range(1, max_iter + 1):
        K = len(C)
        newC = np.empty_like(C)
        for k in range(K):
            newC[k] = X[a == k].mean(axis=0)
        na, nd = _assign(X, newC)
        na = _repair_empty(X, newC, na, nd)
        nJ = objective(X, newC, na)
        if nJ > J:
            # numerical noise on an already converged solution
            break
        C, a = newC, na
        improvement = J - nJ
        J = nJ
        history.append(J)
        if improvement < tol:
            break
    ha, hC, moved = _hartigan(X, a, len(C))
    if moved:
        hJ = objective(X, hC, ha)
        if hJ < J:
            # Lloyd polish so centers and assignments are mutually consistent
            C, a, J, extra, more = _lloyd(X, hC, max_iter, tol)
            history.extend(more)
            it += extra
    return C, a, J, it, history


def kmeans(points, K: int, seed: int = 0, max_iter: int = 100, tol: float = 1e-10,
           restarts: int = 5) -> Clustering:
    """Lloyd's algorithm from k-means++ seeds, best of ``restarts`` runs.

    Restarts use distinct seed sets when the data allow it. Each run ends
    with Hartigan single-point transfers, which escape Lloyd fixed points
    that are not locally optimal under single moves. The objective is
    non-increasing over iterations within each run; the per-iteration values
    of the winning run are kept in ``history``.
    """
    X = np.asarray(points, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    M = len(X)
    if K < 1:
        raise ValueError("K must be >= 1")
    if M < K:
        raise ValueError(f"cannot form {K} clusters from {M} points")
    rng = np.random.default_rng(seed)
    best = None
    tried = set()
    for _ in range(max(restarts, 1)):
        # a repeated seed set would only reproduce an earlier run
        for _ in range(20):
            C0, idx = kmeans_pp_init(X, K, rng, return_indices=True)
            key = frozenset(idx)
            if key not in tried:
                break
        tried.add(key)
        C, a, J, it, hist = _lloyd(X, C0, max_iter, tol)
        if best is None or J < best.objective:
            best = Clustering(C, a, J, it, hist)
    return best


def subcategory_centers(cube: SpectralCube, part: PartitionResult, k_target: int = 2,
                        k_background: int = 5, seed: int = 0, max_iter: int = 100,
                        restarts: int = 5) -> SubcategoryCenters:
    """Cluster the pseudo target and background sets independently."""
    X = cube.data
    if len(part.target_indices) < k_target:
        raise ValueError(
            f"pseudo target set has {len(part.target_indices)} pixels, K_t={k_target}")
    if len(part.background_indices) < k_background:
        raise ValueError(
            f"pseudo background set has {len(part.background_indices)} pixels, "
            f"K_b={k_background}")
    ct = kmeans(X[part.target_indices], k_target, seed=seed, max_iter=max_iter,
                restarts=restarts)
    cb = kmeans(X[part.background_indices], k_background, seed=seed + 1,
                max_iter=max_iter, restarts=restarts)
    labels = np.empty(cube.n_pixels, dtype=np.int64)
    labels[part.target_indices] = ct.assignments
    labels[part.background_indices] = cb.assignments + k_target
    return SubcategoryCenters(
        centers=np.vstack([ct.centers, cb.centers]),
        is_target=np.r_[np.ones(k_target, bool), np.zeros(k_background, bool)],
        pixel_labels=labels,
        target_clustering=ct,
        background_clustering=cb,
    )


def write_centers_csv(sub: SubcategoryCenters, path) -> None:
    with open(path, "w") as fh:
        for tag, c in zip(sub.is_target, sub.centers):
            fh.write(("target" if tag else "background") + ","
                     + ",".join(repr(float(v)) for v in c) + "\n")
