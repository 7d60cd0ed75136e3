"""Overlap and classification metrics.

Undefined metrics (zero denominator) are ``None``, never 0 or NaN, so that
aggregates over many cases are not silently biased.
"""
from __future__ import annotations

import csv
import math
import statistics
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (
    EmptyCountsError,
    LengthMismatchError,
    ShapeMismatchError,
    UnknownLabelError,
    ZeroReferenceError,
)
from .fatseg import Label

METRIC_NAMES = (
    "accuracy", "precision", "recall", "specificity", "fdr",
    "npv", "f1", "balanced_accuracy", "mcc",
)


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def swapped(self) -> "ConfusionCounts":
        """Counts with the other class taken as positive."""
        return ConfusionCounts(tp=self.tn, fp=self.fn, fn=self.fp, tn=self.tp)


@dataclass(frozen=True)
class OverlapReport:
    dice: float
    jaccard: float
    intersection: int
    size_a: int
    size_b: int
    union: int
    both_empty: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def overlap(a, b) -> OverlapReport:
    """Dice and Jaccard between two masks (anything nonzero is foreground)."""
    a = np.asarray(getattr(a, "data", a)) != 0
    b = np.asarray(getattr(b, "data", b)) != 0
    if a.shape != b.shape:
        raise ShapeMismatchError(f"mask shapes differ: {a.shape} vs {b.shape}")
    inter = int(np.count_nonzero(a & b))
    na, nb = int(np.count_nonzero(a)), int(np.count_nonzero(b))
    union = na + nb - inter
    if union == 0:
        return OverlapReport(1.0, 1.0, 0, 0, 0, 0, both_empty=True)
    return OverlapReport(2 * inter / (na + nb), inter / union, inter, na, nb, union)


def _div(num: float, den: float) -> Optional[float]:
    return num / den if den else None


def classification_metrics(c: ConfusionCounts) -> dict[str, Optional[float]]:
    if c.total == 0:
        raise EmptyCountsError("no cases to score")
    tp, fp, fn, tn = c.tp, c.fp, c.fn, c.tn
    precision = _div(tp, tp + fp)
    recall = _div(tp, tp + fn)
    specificity = _div(tn, tn + fp)
    denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    return {
        "accuracy": (tp + tn) / c.total,
        "precision": precision,
        "recall": recall,
        "specificity": specificity,
        "fdr": _div(fp, tp + fp),
        "npv": _div(tn, tn + fn),
        "f1": _div(2 * tp, 2 * tp + fp + fn),
        "balanced_accuracy": (recall + specificity) / 2 if recall is not None and specificity is not None else None,
        "mcc": (tp * tn - fp * fn) / math.sqrt(denom) if denom else None,
    }


def relative_error(measured: float, reference: float) -> float:
    if reference == 0:
        raise ZeroReferenceError("reference value is zero")
    return abs(measured - reference) / abs(reference)


def _label(x) -> Label:
    try:
        return Label(str(x).strip().upper())
    except ValueError:
        raise UnknownLabelError(f"unknown label {x!r}; expected CD or ITB") from None


def batch_classify_eval(predictions: Sequence, truth: Sequence, positive=Label.CD) -> ConfusionCounts:
    if len(predictions) != len(truth):
        raise LengthMismatchError(f"{len(predictions)} predictions vs {len(truth)} truth labels")
    pos = _label(positive)
    tp = fp = fn = tn = 0
    for p, t in zip(predictions, truth):
        p_pos, t_pos = _label(p) == pos, _label(t) == pos
        if p_pos and t_pos:
            tp += 1
        elif p_pos:
            fp += 1
        elif t_pos:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp, fp, fn, tn)


def read_label_csv(path) -> dict[str, Label]:
    """``case_id,label`` rows; a header row is optional."""
    out: dict[str, Label] = {}
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip():
                continue
            if len(row) != 2:
                raise UnknownLabelError(f"{path}:{lineno}: expected 'case_id,label'")
            case, label = row[0].strip(), row[1].strip()
            if lineno == 1 and label.lower() == "label":
                continue
            try:
                out[case] = _label(label)
            except UnknownLabelError as exc:
                raise UnknownLabelError(f"{path}:{lineno}: {exc}") from None
    return out


def summarize(values: Sequence[float], digits: int = 2) -> dict:
    """Mean and sample std, plus a ``"0.82±0.23"`` display string."""
    vals = [v for v in values if v is not None]
    if not vals:
        return {"mean": None, "std": None, "n": 0, "display": "n/a"}
    mean = statistics.fmean(vals)
    std = statistics.stdev(vals) if len(vals) > 1 else 0.0
    return {"mean": mean, "std": std, "n": len(vals), "display": f"{mean:.{digits}f}±{std:.{digits}f}"}
