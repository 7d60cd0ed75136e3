"""Combine the fat ratio with pulmonary-TB evidence into Crohn/TB scores."""
from __future__ import annotations

import csv
import heapq
import math
from fractions import Fraction
from dataclasses import asdict, dataclass, field

from .errors import EmptySeriesError, FatRatioError, InvalidStrideError, NonFiniteError, OutOfRangeError
from .fatseg import RATIO_THRESHOLD, Label

PTB_THRESHOLD = 0.5
TOP_K = 3


@dataclass(frozen=True)
class PtbSeries:
    probs: tuple[float, ...] = ()
    stride: int = 10

    def __post_init__(self):
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))
        for p in self.probs:
            if not 0.0 <= p <= 1.0:
                raise OutOfRangeError(f"probability {p} outside [0, 1]")
        if self.stride < 1:
            raise InvalidStrideError(f"stride must be >= 1, got {self.stride}")


@dataclass(frozen=True)
class ScoringParams:
    a: float = 1.0
    b: float = 1.0
    ratio_threshold: float = RATIO_THRESHOLD
    ptb_threshold: float = PTB_THRESHOLD

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.a, self.b, self.ratio_threshold, self.ptb_threshold)):
            raise NonFiniteError("scoring parameters must be finite")


@dataclass(frozen=True)
class DiagnosisResult:
    score_crohn: float
    score_tb: float
    p_ptb: float
    ptb_positive: bool
    label: Label
    fat_ratio: float = field(default=float("nan"))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["label"] = self.label.value
        return d


def select_slices(n_slices: int, stride: int = 10) -> list[int]:
    if stride < 1:
        raise InvalidStrideError(f"stride must be >= 1, got {stride}")
    return list(range(0, max(n_slices, 0), stride))


def aggregate_ptb(s: PtbSeries, strict: bool = False) -> float:
    """P(PTB): mean of the three largest per-slice probabilities.

    Shorter series average everything they have unless ``strict`` is set.
    """
    if not s.probs:
        raise EmptySeriesError("no slice probabilities")
    if strict and len(s.probs) < TOP_K:
        raise EmptySeriesError(f"strict mode needs at least {TOP_K} probabilities, got {len(s.probs)}")
    top = heapq.nlargest(TOP_K, s.probs)
    # exact mean, rounded once: stays within [min(top), max(top)]
    return float(sum(map(Fraction, top)) / len(top))


def classify_ptb(p_ptb: float, threshold: float = PTB_THRESHOLD) -> bool:
    if not (math.isfinite(p_ptb) and 0.0 <= p_ptb <= 1.0):
        raise OutOfRangeError(f"P(PTB) {p_ptb} outside [0, 1]")
    return p_ptb > threshold


def compute_scores(fat_ratio: float, p_ptb: float, params: ScoringParams = ScoringParams()) -> DiagnosisResult:
    if not (math.isfinite(fat_ratio) and math.isfinite(p_ptb)):
        raise NonFiniteError("fat ratio and P(PTB) must be finite")
    ptb_positive = classify_ptb(p_ptb, params.ptb_threshold)
    score_crohn = fat_ratio - params.ratio_threshold
    score_tb = params.a * (params.ratio_threshold - fat_ratio) + params.b * p_ptb
    # ties go to CD, matching the inclusive ratio rule
    label = Label.CD if score_crohn >= score_tb else Label.ITB
    return DiagnosisResult(score_crohn, score_tb, p_ptb, ptb_positive, label, fat_ratio)


class PtbCsvError(FatRatioError, ValueError):
    pass


def read_ptb_csv(path, stride: int = 1) -> PtbSeries:
    """Read ``slice_index,prob`` rows and keep every ``stride``-th slice.

    A header row is allowed. Slices are kept when ``slice_index % stride == 0``,
    which matches :func:`select_slices` whether or not the producer already
    strided.
    """
    if stride < 1:
        raise InvalidStrideError(f"stride must be >= 1, got {stride}")
    probs = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip():
                continue
            if len(row) != 2:
                raise PtbCsvError(f"{path}:{lineno}: expected 'slice_index,prob', got {len(row)} fields")
            try:
                idx, p = int(row[0]), float(row[1])
            except ValueError:
                if lineno == 1:
                    continue
                raise PtbCsvError(f"{path}:{lineno}: cannot parse {row!r}") from None
            if idx < 0 or not 0.0 <= p <= 1.0:
                raise PtbCsvError(f"{path}:{lineno}: index must be >= 0 and prob in [0, 1]")
            if idx % stride == 0:
                probs.append(p)
    return PtbSeries(tuple(probs), stride)
