"""Evaluation metrics: UAR, PCC, empirical CDFs, rank-based AUROC.

All metrics are exact computations on arrays; AUROC uses midranks so it
agrees with pairwise enumeration including ties.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import MetricError


def accuracy(predictions: np.ndarray, labels: np.ndarray) -> float:
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.shape != labels.shape:
        raise MetricError("predictions and labels must have equal length")
    return float(np.mean(predictions == labels))


def uar(predictions: np.ndarray, labels: np.ndarray, num_classes: int | None = None) -> float:
    """Unweighted average recall: mean of per-class recalls.

    Every class in [0, num_classes) must appear in ``labels``.
    """
    predictions = np.asarray(predictions, dtype=int)
    labels = np.asarray(labels, dtype=int)
    if predictions.shape != labels.shape:
        raise MetricError("predictions and labels must have equal length")
    if labels.size == 0:
        raise MetricError("uar needs at least one sample")
    if num_classes is None:
        num_classes = int(labels.max()) + 1
    counts = np.bincount(labels, minlength=num_classes)
    if np.any(counts[:num_classes] == 0):
        missing = [int(k) for k in np.flatnonzero(counts[:num_classes] == 0)]
        raise MetricError(f"uar: no samples for classes {missing}")
    recalls = [
        float(np.mean(predictions[labels == k] == k)) for k in range(num_classes)
    ]
    return float(np.mean(recalls))


def pcc(x: np.ndarray, y: np.ndarray) -> float:
    """Pearson correlation; raises MetricError on zero variance."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise MetricError("pcc needs two equal-length vectors with >= 2 entries")
    if np.ptp(x) == 0.0 or np.ptp(y) == 0.0:
        raise MetricError("pcc undefined: zero variance input")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = np.sqrt(np.sum(xc * xc))
    sy = np.sqrt(np.sum(yc * yc))
    if sx == 0.0 or sy == 0.0:
        raise MetricError("pcc undefined: zero variance input")
    r = float(np.sum(xc * yc) / (sx * sy))
    return min(1.0, max(-1.0, r))


def _midranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values), dtype=float)
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def auroc(scores_positive: np.ndarray, scores_negative: np.ndarray) -> float:
    """P(random positive scores above random negative), ties count half.

    Computed from midranks (Mann-Whitney U); exact, including ties.
    """
    pos = np.asarray(scores_positive, dtype=float)
    neg = np.asarray(scores_negative, dtype=float)
    if pos.size == 0 or neg.size == 0:
        raise MetricError("auroc needs nonempty groups")
    ranks = _midranks(np.concatenate([pos, neg]))
    rank_sum = float(ranks[: pos.size].sum())
    u = rank_sum - pos.size * (pos.size + 1) / 2.0
    return u / (pos.size * neg.size)


def auroc_pairwise(scores_positive: np.ndarray, scores_negative: np.ndarray) -> float:
    """Brute-force pairwise enumeration; the oracle for the rank version."""
    pos = np.asarray(scores_positive, dtype=float)
    neg = np.asarray(scores_negative, dtype=float)
    if pos.size == 0 or neg.size == 0:
        raise MetricError("auroc needs nonempty groups")
    wins = (pos[:, None] > neg[None, :]).sum()
    ties = (pos[:, None] == neg[None, :]).sum()
    return float((wins + 0.5 * ties) / (pos.size * neg.size))


def spearman(x: np.ndarray, y: np.ndarray) -> float:
    """Rank correlation via Pearson on midranks."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return pcc(_midranks(x), _midranks(y))


@dataclass
class CdfCurve:
    """Right-continuous empirical CDF points for one group of values."""

    group: str
    values: np.ndarray      # sorted ascending
    cum_fracs: np.ndarray   # i/n for i in 1..n

    def at(self, x: float) -> float:
        """Fraction of values <= x."""
        return float(np.searchsorted(self.values, x, side="right")) / len(self.values)


def empirical_cdf(values: np.ndarray, group: str = "") -> CdfCurve:
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise MetricError("empirical_cdf needs a nonempty sample")
    ordered = np.sort(values)
    n = ordered.size
    return CdfCurve(group=group, values=ordered, cum_fracs=np.arange(1, n + 1) / n)
