"""Spectral embedding network with hand-written backpropagation.

Architecture for an input spectrum of ``B`` bands::

    conv1d (1 -> C channels, width k, stride 1, zero padding) -> ReLU
    flatten (C*B) -> linear (hidden) -> ReLU -> linear (embedding)
    -> L2 normalization

An optional K-way linear head on top of the embedding is used only by the
pretext classification task.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

log = logging.getLogger(__name__)

NORM_EPS = 1e-12
ENCODER_KEYS = ("conv_w", "conv_b", "w1", "b1", "w2", "b2")
HEAD_KEYS = ("head_w", "head_b")


class TrainingDiverged(RuntimeError):
    def __init__(self, stage, epoch):
        super().__init__(f"{stage} loss became non-finite at epoch {epoch}")
        self.stage = stage
        self.epoch = epoch


@dataclass
class EncoderParams:
    bands: int
    conv_w: np.ndarray  # (channels, kernel)
    conv_b: np.ndarray  # (channels,)
    w1: np.ndarray      # (channels * bands, hidden)
    b1: np.ndarray
    w2: np.ndarray      # (hidden, embed)
    b2: np.ndarray
    head_w: np.ndarray | None = None  # (embed, K)
    head_b: np.ndarray | None = None

    def __post_init__(self):
        C, k = self.conv_w.shape
        if k % 2 != 1:
            raise ValueError("conv kernel width must be odd")
        if self.w1.shape[0] != C * self.bands:
            raise ValueError("linear-1 input size does not match conv output")
        if self.w2.shape[0] != self.w1.shape[1]:
            raise ValueError("linear-2 input size does not match hidden size")
        if self.head_w is not None and self.head_w.shape[0] != self.w2.shape[1]:
            raise ValueError("head input size does not match embedding size")

    @property
    def channels(self):
        return self.conv_w.shape[0]

    @property
    def kernel(self):
        return self.conv_w.shape[1]

    @property
    def hidden(self):
        return self.w1.shape[1]

    @property
    def embed_dim(self):
        return self.w2.shape[1]

    @property
    def has_head(self):
        return self.head_w is not None

    def keys(self):
        return ENCODER_KEYS + (HEAD_KEYS if self.has_head else ())

    def arrays(self) -> dict:
        return {k: getattr(self, k) for k in self.keys()}

    def copy(self) -> "EncoderParams":
        return replace(self, **{k: v.copy() for k, v in self.arrays().items()})

    def without_head(self) -> "EncoderParams":
        return replace(self, head_w=None, head_b=None)

    def n_params(self):
        return sum(v.size for v in self.arrays().values())


def _glorot(rng, fan_in, fan_out, shape):
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=shape)


def init_params(bands: int, seed: int = 0, channels: int = 8, kernel: int = 3,
                hidden: int = 128, embed_dim: int = 64) -> EncoderParams:
    rng = np.random.default_rng(seed)
    return EncoderParams(
        bands=bands,
        conv_w=_glorot(rng, kernel, channels * kernel, (channels, kernel)),
        conv_b=np.zeros(channels),
        w1=_glorot(rng, channels * bands, hidden, (channels * bands, hidden)),
        b1=np.zeros(hidden),
        w2=_glorot(rng, hidden, embed_dim, (hidden, embed_dim)),
        b2=np.zeros(embed_dim),
    )


def add_head(params: EncoderParams, n_classes: int, seed: int = 0) -> EncoderParams:
    rng = np.random.default_rng(seed)
    E = params.embed_dim
    return replace(params, head_w=_glorot(rng, E, n_classes, (E, n_classes)),
                   head_b=np.zeros(n_classes))


# --------------------------------------------------------------------------
# forward / backward


@dataclass
class _Cache:
    patches: np.ndarray
    z0: np.ndarray
    flat: np.ndarray
    z1: np.ndarray
    a1: np.ndarray
    u: np.ndarray
    norm: np.ndarray
    emb: np.ndarray


def _forward(params: EncoderParams, X, dtype=np.float64):
    X = np.atleast_2d(np.asarray(X, dtype=dtype))
    if X.shape[1] != params.bands:
        raise ValueError(f"input has {X.shape[1]} bands, encoder expects {params.bands}")
    if dtype is np.float64:
        q = params
    else:
        q = replace(params, **{k: v.astype(dtype) for k, v in params.arrays().items()})
    n = X.shape[0]
    pad = q.kernel // 2
    Xp = np.pad(X, ((0, 0), (pad, pad)))
    patches = sliding_window_view(Xp, q.kernel, axis=1)  # (n, B, k)
    z0 = np.einsum("nbk,ck->ncb", patches, q.conv_w) + q.conv_b[None, :, None]
    flat = np.maximum(z0, 0).reshape(n, -1)
    z1 = flat @ q.w1 + q.b1
    a1 = np.maximum(z1, 0)
    u = a1 @ q.w2 + q.b2
    norm = np.sqrt((u * u).sum(axis=1))
    dead = norm < NORM_EPS
    emb = u / np.where(dead, 1.0, norm)[:, None]
    if dead.any():
        emb[dead] = 0.0
        emb[dead, 0] = 1.0
    return emb, _Cache(patches, z0, flat, z1, a1, u, norm, emb)


def _backward(params: EncoderParams, cache: _Cache, d_emb) -> dict:
    """Gradients of the encoder parameters given dL/d(embedding)."""
    e, norm = cache.emb, cache.norm
    dead = norm < NORM_EPS
    du = (d_emb - e * (e * d_emb).sum(axis=1, keepdims=True)) / np.where(dead, 1.0, norm)[:, None]
    du[dead] = 0.0
    g = {"w2": cache.a1.T @ du, "b2": du.sum(axis=0)}
    dz1 = (du @ params.w2.T) * (cache.z1 > 0)
    g["w1"] = cache.flat.T @ dz1
    g["b1"] = dz1.sum(axis=0)
    dz0 = (dz1 @ params.w1.T).reshape(cache.z0.shape) * (cache.z0 > 0)
    g["conv_w"] = np.einsum("ncb,nbk->ck", dz0, cache.patches)
    g["conv_b"] = dz0.sum(axis=(0, 2))
    return g


def encoder_forward(params: EncoderParams, spectrum) -> np.ndarray:
    """Embed one spectrum (1-D input) or a batch of spectra (rows)."""
    x = np.asarray(spectrum, dtype=np.float64)
    emb, _ = _forward(params, x)
    return emb[0] if x.ndim == 1 else emb


def encoder_preactivation(params: EncoderParams, X) -> np.ndarray:
    """Output of linear-2 before L2 normalization."""
    return _forward(params, X)[1].u


# --------------------------------------------------------------------------
# losses


def _log_softmax(logits):
    m = logits.max(axis=1, keepdims=True)
    s = logits - m
    return s - np.log(np.exp(s).sum(axis=1, keepdims=True))


def cross_entropy(params: EncoderParams, X, labels):
    """Mean softmax cross-entropy of the pretext head, with gradients.

    Returns ``(loss, grads, logits)``.
    """
    if not params.has_head:
        raise ValueError("params carry no pretext head")
    labels = np.asarray(labels)
    emb, cache = _forward(params, X)
    logits = emb @ params.head_w + params.head_b
    logp = _log_softmax(logits)
    n = len(labels)
    loss = -logp[np.arange(n), labels].mean()
    dlogits = np.exp(logp)
    dlogits[np.arange(n), labels] -= 1.0
    dlogits /= n
    grads = _backward(params, cache, dlogits @ params.head_w.T)
    grads["head_w"] = emb.T @ dlogits
    grads["head_b"] = dlogits.sum(axis=0)
    return float(loss), grads, logits


def cross_entropy_value(params: EncoderParams, X, labels, dtype=np.longdouble):
    """Loss-only cross-entropy, by default in extended precision."""
    labels = np.asarray(labels)
    emb, _ = _forward(params, X, dtype)
    logits = emb @ params.head_w.astype(dtype) + params.head_b.astype(dtype)
    return -_log_softmax(logits)[np.arange(len(labels)), labels].mean()


def npair_loss(anchor, positive, negatives):
    """``log(1 + sum_i exp(f.f_i - f.f+))`` for one tuplet.

    Returns ``(loss, d_anchor, d_positive, d_negatives)``.
    """
    f = np.asarray(anchor, dtype=np.float64)
    fp = np.asarray(positive, dtype=np.float64)
    fn = np.atleast_2d(np.asarray(negatives, dtype=np.float64))
    if fn.shape[0] < 1:
        raise ValueError("need at least one negative")
    if f.shape != fp.shape or fn.shape[1] != f.shape[0]:
        raise ValueError("embedding dimensions differ")
    diffs = fn @ f - f @ fp
    # log(exp(0) + sum exp(diffs)) with max subtraction
    m = max(0.0, float(diffs.max()))
    ex = np.exp(diffs - m)
    denom = np.exp(-m) + ex.sum()
    loss = m + np.log(denom)
    p = ex / denom
    d_f = p @ fn - p.sum() * fp
    d_fp = -p.sum() * f
    d_fn = p[:, None] * f[None, :]
    return float(loss), d_f, d_fp, d_fn


def npair_set_loss(A, P):
    """Multi-class N-pair loss over ``N`` (anchor, positive) rows.

    For anchor ``i`` the negatives are the positives of every other class, so
    the per-anchor loss is ``logsumexp_j(A_i.P_j) - A_i.P_i``. Returns
    ``(mean loss, per-anchor losses, dA, dP)``.
    """
    S = A @ P.T
    N = S.shape[0]
    m = S.max(axis=1, keepdims=True)
    lse = m[:, 0] + np.log(np.exp(S - m).sum(axis=1))
    per = lse - np.diag(S)
    prob = np.exp(S - lse[:, None])
    dS = (prob - np.eye(N)) / N
    return float(per.mean()), per, dS @ P, dS.T @ A


@dataclass
class NPairBatch:
    """Indices (into the training pixels) of one tuplet set."""

    classes: np.ndarray
    anchors: np.ndarray
    positives: np.ndarray

    @property
    def N(self):
        return len(self.classes)


def npair_objective(params: EncoderParams, X, batches):
    """Mean N-pair loss over tuplet sets with encoder gradients.

    Returns ``(loss, grads, per-anchor losses per set)``.
    """
    idx = np.concatenate([np.r_[b.anchors, b.positives] for b in batches])
    emb, cache = _forward(params, X[idx])
    d_emb = np.zeros_like(emb)
    total, pers, off = 0.0, [], 0
    for b in batches:
        N = b.N
        A, P = emb[off:off + N], emb[off + N:off + 2 * N]
        loss, per, dA, dP = npair_set_loss(A, P)
        total += loss
        pers.append(per)
        d_emb[off:off + N] = dA
        d_emb[off + N:off + 2 * N] = dP
        off += 2 * N
    nb = len(batches)
    grads = _backward(params, cache, d_emb / nb)
    return total / nb, grads, pers


def npair_value(params: EncoderParams, X, batches, dtype=np.longdouble):
    """Loss-only counterpart of :func:`npair_objective`."""
    total = 0
    for b in batches:
        emb, _ = _forward(params, np.asarray(X)[np.r_[b.anchors, b.positives]], dtype)
        A, P = emb[:b.N], emb[b.N:]
        S = A @ P.T
        m = S.max(axis=1, keepdims=True)
        lse = m[:, 0] + np.log(np.exp(S - m).sum(axis=1))
        total = total + (lse - np.diagonal(S)).mean()
    return total / len(batches)


# --------------------------------------------------------------------------
# training


@dataclass
class SgdConfig:
    learning_rate: float = 1e-4
    batch_size: int = 128
    epochs: int = 10
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ValueError("learning rate must be >= 0")
        if self.batch_size < 2:
            raise ValueError("batch size must be >= 2")


def sgd_step(params: EncoderParams, grads: dict, lr: float) -> None:
    """In-place ``p <- p - lr * g`` for every parameter array."""
    for k in params.keys():
        getattr(params, k)[...] -= lr * grads[k]


@dataclass
class TrainTrace:
    loss: list = field(default_factory=list)
    accuracy: list = field(default_factory=list)


def pretext_train(params: EncoderParams, centers, sgd: SgdConfig, temperature: float = 0.5,
                  batches_per_epoch: int = 20, mix_noise: float = 0.0):
    """Classify the dominant center of freshly generated mixtures.

    Returns ``(trained params with head, TrainTrace)``; input params are not
    modified.
    """
    from .mixgen import generate_mix_batch

    centers = np.asarray(centers, dtype=np.float64)
    K = centers.shape[0]
    if K < 2:
        raise ValueError("pretext training needs at least 2 centers")
    p = params.copy()
    if not p.has_head or p.head_w.shape[1] != K:
        p = add_head(p, K, seed=sgd.seed + 1)
    rng = np.random.default_rng(sgd.seed)
    trace = TrainTrace()
    for epoch in range(sgd.epochs):
        losses, correct, seen = [], 0, 0
        for _ in range(batches_per_epoch):
            batch = generate_mix_batch(centers, sgd.batch_size, temperature, rng,
                                       noise_sigma=mix_noise)
            loss, grads, logits = cross_entropy(p, batch.spectra, batch.labels)
            if not np.isfinite(loss):
                raise TrainingDiverged("pretext", epoch)
            sgd_step(p, grads, sgd.learning_rate)
            losses.append(loss)
            correct += int((logits.argmax(axis=1) == batch.labels).sum())
            seen += len(batch.labels)
        trace.loss.append(float(np.mean(losses)))
        trace.accuracy.append(correct / seen)
        log.debug("pretext epoch %d loss %.5f acc %.3f", epoch, trace.loss[-1],
                  trace.accuracy[-1])
    return p, trace


def pretext_accuracy(params: EncoderParams, X, labels) -> float:
    emb = encoder_forward(params, X)
    logits = emb @ params.head_w + params.head_b
    return float((logits.argmax(axis=1) == np.asarray(labels)).mean())


def build_npair_batch(groups: dict, N: int, rng, params: EncoderParams | None = None,
                      X=None, hard_mining: bool = False, confusion=None,
                      n_candidates: int = 4) -> NPairBatch:
    """Sample one tuplet set of ``N`` classes.

    ``groups`` maps class label to an array of sample indices into ``X``.
    With ``hard_mining`` the positive is the candidate (out of
    ``n_candidates``) farthest from the anchor in embedding space, and classes
    are drawn with probability proportional to ``confusion`` when given.
    """
    eligible = sorted(c for c, idx in groups.items() if len(idx) >= 2)
    if len(eligible) < N:
        raise ValueError(f"need {N} classes with >= 2 samples, have {len(eligible)}")
    eligible = np.asarray(eligible)
    prob = None
    if hard_mining and confusion is not None:
        w = np.array([confusion.get(int(c), 0.0) for c in eligible], dtype=np.float64)
        w = np.maximum(w, 0.0) + 1e-6
        prob = w / w.sum()
    classes = np.sort(rng.choice(eligible, size=N, replace=False, p=prob))
    if not hard_mining:
        pairs = [rng.choice(np.asarray(groups[int(c)]), size=2, replace=False) for c in classes]
        anchors = np.array([p[0] for p in pairs], dtype=np.int64)
        positives = np.array([p[1] for p in pairs], dtype=np.int64)
        return NPairBatch(classes, anchors, positives)
    if params is None or X is None:
        raise ValueError("hard mining needs params and data")
    picks = []
    for c in classes:
        members = np.asarray(groups[int(c)])
        picks.append(rng.choice(members, size=min(len(members), n_candidates + 1),
                                replace=False))
    emb = encoder_forward(params, X[np.concatenate(picks)])
    anchors = np.empty(N, dtype=np.int64)
    positives = np.empty(N, dtype=np.int64)
    off = 0
    for i, pick in enumerate(picks):
        e = emb[off:off + len(pick)]
        off += len(pick)
        dist = np.sqrt(((e[1:] - e[0]) ** 2).sum(axis=1))
        anchors[i], positives[i] = pick[0], pick[1 + int(np.argmax(dist))]
    return NPairBatch(classes, anchors, positives)


def group_by_label(labels) -> dict:
    labels = np.asarray(labels)
    return {int(c): np.flatnonzero(labels == c) for c in np.unique(labels)}


def npair_train(params: EncoderParams, X, labels, sgd: SgdConfig, n_classes: int | None = None,
                tuplets_per_step: int | None = None, steps_per_epoch: int = 20,
                hard_mining: bool = True, confusion_decay: float = 0.9):
    """Metric-learning stage over pseudo-labelled pixels.

    ``labels`` gives the sub-category of every row of ``X``. Each SGD step
    uses ``tuplets_per_step`` tuplet sets of ``n_classes`` classes (default:
    all eligible classes, and enough sets to fill ``sgd.batch_size``
    samples). Returns ``(params, TrainTrace)``; the head is carried through
    untouched.
    """
    X = np.asarray(X, dtype=np.float64)
    groups = group_by_label(labels)
    eligible = [c for c, idx in groups.items() if len(idx) >= 2]
    N = len(eligible) if n_classes is None else n_classes
    if N < 2:
        raise ValueError("N-pair training needs at least 2 classes")
    if tuplets_per_step is None:
        tuplets_per_step = max(1, sgd.batch_size // (2 * N))
    p = params.copy()
    rng = np.random.default_rng(sgd.seed)
    trace = TrainTrace()
    confusion = {int(c): 0.0 for c in eligible}
    for epoch in range(sgd.epochs):
        losses = []
        conf = confusion if epoch > 0 else None
        for _ in range(steps_per_epoch):
            batches = [build_npair_batch(groups, N, rng, p, X, hard_mining, conf)
                       for _ in range(tuplets_per_step)]
            loss, grads, pers = npair_objective(p, X, batches)
            if not np.isfinite(loss):
                raise TrainingDiverged("npair", epoch)
            grads = {k: grads.get(k, 0.0) for k in p.keys()}
            sgd_step(p, grads, sgd.learning_rate)
            losses.append(loss)
            for b, per in zip(batches, pers):
                for c, l in zip(b.classes, per):
                    c = int(c)
                    confusion[c] = confusion_decay * confusion[c] + (1 - confusion_decay) * l
        trace.loss.append(float(np.mean(losses)))
        log.debug("npair epoch %d loss %.5f", epoch, trace.loss[-1])
    return p, trace


# --------------------------------------------------------------------------
# gradient checking


@dataclass
class GradCheckReport:
    max_rel_error: float
    checked: int
    skipped_kinks: int


def activation_pattern(params: EncoderParams, X) -> np.ndarray:
    """Concatenated ReLU on/off masks of both rectified layers."""
    _, c = _forward(params, X)
    return np.concatenate([(c.z0 > 0).ravel(), (c.z1 > 0).ravel()])


def grad_check_report(params: EncoderParams, loss_fn, step: float = 1e-4,
                      max_params: int = 10_000, seed: int = 0,
                      kink_fn=None, value_fn=None) -> GradCheckReport:
    """Compare analytic gradients against central differences.

    ``loss_fn(params)`` must return ``(loss, grads)`` with ``grads`` keyed
    like ``params.arrays()``. When the model has more than ``max_params``
    parameters a seeded random subset of about that size is checked, drawn
    per layer so every parameter array is represented. If
    ``kink_fn(params)`` is given it must return the activation pattern; any
    coordinate whose +/- step changes that pattern straddles a ReLU kink,
    where the finite difference is meaningless, and is skipped. ``value_fn``
    optionally supplies the loss used for the differences (e.g. an
    extended-precision evaluation); it defaults to ``loss_fn(params)[0]``.
    """
    if value_fn is None:
        value_fn = lambda q: loss_fn(q)[0]  # noqa: E731
    p = params.copy()
    _, grads = loss_fn(p)
    base = kink_fn(p) if kink_fn is not None else None
    arrays = p.arrays()
    total = sum(v.size for v in arrays.values())
    if total <= max_params:
        coords = [(k, i) for k, v in arrays.items() for i in range(v.size)]
    else:
        # stratify by layer so that small arrays are always covered
        rng = np.random.default_rng(seed)
        share = max(1, max_params // len(arrays))
        coords = []
        for k, v in arrays.items():
            idx = range(v.size) if v.size <= share else np.sort(
                rng.choice(v.size, size=share, replace=False))
            coords.extend((k, int(i)) for i in idx)
    worst, checked, skipped = 0.0, 0, 0
    for k, i in coords:
        flat = arrays[k].reshape(-1)
        orig = flat[i]
        flat[i] = orig + step
        lp = value_fn(p)
        kinked = base is not None and not np.array_equal(kink_fn(p), base)
        flat[i] = orig - step
        lm = value_fn(p)
        kinked = kinked or (base is not None and not np.array_equal(kink_fn(p), base))
        flat[i] = orig
        if kinked:
            skipped += 1
            continue
        fd = float((lp - lm) / (2 * step))
        g = float(np.asarray(grads[k]).reshape(-1)[i])
        worst = max(worst, abs(g - fd) / max(abs(g), abs(fd), 1e-8))
        checked += 1
    return GradCheckReport(worst, checked, skipped)


def grad_check(params: EncoderParams, loss_fn, step: float = 1e-4, max_params: int = 10_000,
               seed: int = 0, kink_fn=None, value_fn=None) -> float:
    """Largest relative error ``|g - fd| / max(|g|, |fd|, 1e-8)``."""
    return grad_check_report(params, loss_fn, step, max_params, seed, kink_fn,
                             value_fn).max_rel_error


def gradient_suite(seeds=range(20), bands: int = 16, n_samples: int = 6, n_classes: int = 3,
                   step: float = 1e-4, max_params: int = 300):
    """Check both training losses on freshly initialized encoders.

    For every seed, a full-size encoder (plus pretext head) gets random
    biases so no unit sits exactly at a kink, and random inputs drawn from
    [0, 1]. Returns a list of ``(loss_name, seed, GradCheckReport)``.
    """
    out = []
    for seed in seeds:
        rng = np.random.default_rng(seed)
        p = add_head(init_params(bands, seed=seed), n_classes, seed=seed)
        for b in (p.conv_b, p.b1, p.b2, p.head_b):
            b[:] = rng.normal(0.0, 0.1, b.shape)
        X = rng.uniform(0.0, 1.0, (n_samples, bands))
        y = rng.integers(0, n_classes, n_samples)
        kinks = lambda q: activation_pattern(q, X)  # noqa: E731
        ce = grad_check_report(p, lambda q: cross_entropy(q, X, y)[:2], step, max_params,
                               seed, kinks, lambda q: cross_entropy_value(q, X, y))
        out.append(("cross_entropy", seed, ce))
        groups = {c: np.arange(2 * c, 2 * c + 2) for c in range(n_samples // 2)}
        batch = [build_npair_batch(groups, len(groups), rng)]
        enc = p.without_head()
        npr = grad_check_report(enc, lambda q: npair_objective(q, X, batch)[:2], step,
                                max_params, seed, kinks, lambda q: npair_value(q, X, batch))
        out.append(("npair", seed, npr))
    return out


# --------------------------------------------------------------------------
# checkpoints

MAGIC = b"HSMATCH\x00"
VERSION = 1


def save_checkpoint(params: EncoderParams, path) -> None:
    """Flat little-endian binary checkpoint.

    Layout: magic (8 bytes), version (u32), bands (u32), array count (u32),
    then per array: name length (u16), UTF-8 name, ndim (u32), dims (u32
    each); finally every array's float64 values in the same order.
    """
    arrays = params.arrays()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<III", VERSION, params.bands, len(arrays)))
        for name, a in arrays.items():
            nb = name.encode()
            fh.write(struct.pack("<H", len(nb)) + nb)
            fh.write(struct.pack("<I", a.ndim) + struct.pack(f"<{a.ndim}I", *a.shape))
        for a in arrays.values():
            fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def load_checkpoint(path) -> EncoderParams:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:8] != MAGIC:
        raise ValueError(f"{path}: not an encoder checkpoint")
    version, bands, count = struct.unpack_from("<III", raw, 8)
    if version != VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    off = 20
    specs = []
    for _ in range(count):
        (ln,) = struct.unpack_from("<H", raw, off)
        off += 2
        name = raw[off:off + ln].decode()
        off += ln
        (ndim,) = struct.unpack_from("<I", raw, off)
        off += 4
        shape = struct.unpack_from(f"<{ndim}I", raw, off)
        off += 4 * ndim
        specs.append((name, shape))
    arrays = {}
    for name, shape in specs:
        n = int(np.prod(shape))
        arrays[name] = np.frombuffer(raw, dtype="<f8", count=n, offset=off).reshape(shape).astype(np.float64)
        off += 8 * n
    if off != len(raw):
        raise ValueError(f"{path}: checkpoint size mismatch")
    return EncoderParams(bands=bands, **arrays)
