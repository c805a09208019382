"""Classification and sparsity metrics: F1 score and the Gini index.

The Gini index measures how concentrated a weight vector is: 0 for a
perfectly uniform magnitude profile, approaching 1 as all mass collects
on a single coordinate. Magnitudes are sorted ascending and weighted by
their rank, so the sign pattern of the weights is irrelevant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["ConfusionCounts", "f1_score", "gini_index", "gini_index_mtl"]


@dataclass(frozen=True)
class ConfusionCounts:
    """2x2 confusion table for 0/1 labels (class 1 is "positive")."""

    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        for name in ("tp", "fp", "tn", "fn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    @classmethod
    def from_labels(cls, y_true, y_pred) -> "ConfusionCounts":
        yt, yp = _checked_label_pair(y_true, y_pred)
        return cls(
            tp=int(np.sum((yt == 1) & (yp == 1))),
            fp=int(np.sum((yt == 0) & (yp == 1))),
            tn=int(np.sum((yt == 0) & (yp == 0))),
            fn=int(np.sum((yt == 1) & (yp == 0))),
        )

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def _checked_label_pair(y_true, y_pred):
    yt = np.asarray(y_true)
    yp = np.asarray(y_pred)
    if yt.ndim != 1 or yp.ndim != 1 or yt.shape != yp.shape:
        raise ValueError(f"label vectors must be 1-D and equal length, got {yt.shape} and {yp.shape}")
    if yt.size == 0:
        raise ValueError("label vectors are empty")
    for name, arr in (("y_true", yt), ("y_pred", yp)):
        if not np.all(np.isin(arr, (0, 1))):
            raise ValueError(f"{name} must contain only 0 and 1")
    return yt.astype(np.int64), yp.astype(np.int64)


def f1_score(y_true, y_pred) -> float:
    """``2*tp / (2*tp + fp + fn)``.

    When there are no positives anywhere (tp = fp = fn = 0, i.e. a perfect
    all-negative prediction) the score is defined as 1.0.
    """
    c = ConfusionCounts.from_labels(y_true, y_pred)
    denom = 2 * c.tp + c.fp + c.fn
    if denom == 0:
        return 1.0
    return 2.0 * c.tp / denom


def gini_index(weights) -> float:
    """Sparsity of a weight vector, in [0, 1).

    Magnitudes are sorted ascending; with ``a`` the sorted |w| and ``s``
    their sum, the index is ``1 - 2 * sum_j (a_j / s) * ((M - j + 1/2) / M)``
    for 1-based j. The zero vector maps to 0 by convention.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("gini_index expects a non-empty 1-D vector")
    if not np.all(np.isfinite(w)):
        raise ValueError("gini_index requires finite input")
    a = np.sort(np.abs(w))
    s = float(a.sum())
    if s == 0.0:
        return 0.0
    m = a.size
    rank = np.arange(1, m + 1, dtype=float)
    coef = (m - rank + 0.5) / m
    return 1.0 - 2.0 * float(a @ coef) / s


def gini_index_mtl(weights) -> list[float]:
    """Per-task Gini indices, one per weight column."""
    arr = np.asarray(getattr(weights, "values", weights), dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError("gini_index_mtl expects a (n_features, n_tasks) matrix")
    return [gini_index(arr[:, l]) for l in range(arr.shape[1])]
