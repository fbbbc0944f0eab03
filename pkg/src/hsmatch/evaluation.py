"""ROC curves, AUC and detector comparison tables."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import GroundTruth, ScoreMap


@dataclass(frozen=True)
class RocCurve:
    pfa: np.ndarray
    pd: np.ndarray
    thresholds: np.ndarray
    auc: float


def _inputs(scores, truth):
    s = np.ravel(scores.scores if isinstance(scores, ScoreMap) else scores).astype(np.float64)
    y = np.ravel(truth.labels if isinstance(truth, GroundTruth) else truth) != 0
    if s.size != y.size:
        raise ValueError(f"{s.size} scores but {y.size} labels")
    n_pos = int(y.sum())
    if n_pos == 0 or n_pos == y.size:
        raise ValueError("ground truth needs at least one target and one background pixel")
    return s, y


def roc_curve(scores, truth) -> RocCurve:
    """Sweep a threshold over every distinct score (``score >= t`` detects).

    Tied scores cross the threshold together, so the trapezoid over a tied
    group gives the half-credit the pairwise statistic assigns to ties.
    """
    s, y = _inputs(scores, truth)
    order = np.argsort(-s, kind="stable")
    s_sorted, y_sorted = s[order], y[order]
    tp = np.cumsum(y_sorted)
    fp = np.cumsum(~y_sorted)
    # last index of each run of equal scores
    last = np.r_[np.flatnonzero(np.diff(s_sorted) != 0), s.size - 1]
    tp_k = np.r_[0, tp[last]]
    fp_k = np.r_[0, fp[last]]
    pd = tp_k / tp[-1]
    pfa = fp_k / fp[-1]
    thresholds = np.r_[np.inf, s_sorted[last]]
    # trapezoids on integer counts, divided once, so a perfect split is exactly 1
    twice_area = int(np.sum(np.diff(fp_k) * (tp_k[1:] + tp_k[:-1])))
    auc = twice_area / (2.0 * tp[-1] * fp[-1])
    return RocCurve(pfa, pd, thresholds, auc)


def auc_pairwise(scores, truth) -> float:
    """Mann-Whitney statistic: P(target > background) + 0.5 P(tie)."""
    s, y = _inputs(scores, truth)
    pos, neg = s[y], np.sort(s[~y])
    below = np.searchsorted(neg, pos, side="left")
    at_or_below = np.searchsorted(neg, pos, side="right")
    wins = below.sum() + 0.5 * (at_or_below - below).sum()
    return float(wins / (pos.size * neg.size))


def write_roc_csv(curve: RocCurve, path) -> None:
    with open(path, "w") as fh:
        fh.write("pfa,pd\n")
        for a, b in zip(curve.pfa, curve.pd):
            fh.write(f"{float(a)!r},{float(b)!r}\n")


def comparison_table(results: dict) -> str:
    """Plain-text AUC table; ``results`` maps detector -> {scene: auc}."""
    scenes = []
    for row in results.values():
        scenes.extend(s for s in row if s not in scenes)
    width = max([len("Method")] + [len(m) for m in results])
    colw = max([8] + [len(s) for s in scenes])
    lines = ["Method".ljust(width) + "".join(f"  {s:>{colw}}" for s in scenes)]
    lines.append("-" * len(lines[0]))
    for method, row in results.items():
        cells = "".join(
            f"  {row[s]:>{colw}.4f}" if s in row else f"  {'-':>{colw}}" for s in scenes)
        lines.append(method.ljust(width) + cells)
    return "\n".join(lines) + "\n"
