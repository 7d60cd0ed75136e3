import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fatratio.errors import EmptyCountsError, LengthMismatchError, ShapeMismatchError, UnknownLabelError, ZeroReferenceError
from fatratio.fatseg import Label
from fatratio.metrics import (
    METRIC_NAMES,
    ConfusionCounts,
    batch_classify_eval,
    classification_metrics,
    overlap,
    read_label_csv,
    relative_error,
    summarize,
)
from oracles import metrics_by_enumeration


def test_identical_masks():
    a = np.zeros((5, 5), np.uint8)
    a[1:3, 1:4] = 255
    r = overlap(a, a)
    assert r.dice == 1.0 and r.jaccard == 1.0


def test_disjoint_masks():
    a = np.zeros((4, 4), np.uint8)
    b = a.copy()
    a[0, 0] = b[3, 3] = 255
    r = overlap(a, b)
    assert r.dice == 0.0 and r.jaccard == 0.0


def test_partial_overlap():
    a = np.zeros((1, 6), np.uint8)
    b = a.copy()
    a[0, 0:4] = 255
    b[0, 2:6] = 255
    r = overlap(a, b)
    assert (r.size_a, r.size_b, r.intersection) == (4, 4, 2)
    assert r.dice == 0.5
    assert r.jaccard == pytest.approx(1 / 3, abs=1e-15)


def test_both_empty():
    r = overlap(np.zeros((3, 3)), np.zeros((3, 3)))
    assert r.dice == 1.0 and r.both_empty


def test_shape_mismatch():
    with pytest.raises(ShapeMismatchError):
        overlap(np.zeros((3, 3)), np.zeros((3, 4)))


@settings(max_examples=100, deadline=None)
@given(arrays(np.bool_, (6, 7)), arrays(np.bool_, (6, 7)))
def test_overlap_symmetric(a, b):
    r1, r2 = overlap(a, b), overlap(b, a)
    assert r1.dice == r2.dice and r1.jaccard == r2.jaccard
    assert 0.0 <= r1.jaccard <= r1.dice <= 1.0


def test_perfect_classifier():
    m = classification_metrics(ConfusionCounts(tp=5, tn=5))
    assert m["fdr"] == 0.0
    assert all(m[k] == 1.0 for k in METRIC_NAMES if k != "fdr")


def test_fixture_counts():
    m = classification_metrics(ConfusionCounts(tp=2, fp=1, fn=1, tn=6))
    assert m["accuracy"] == pytest.approx(0.8, abs=1e-15)
    assert m["precision"] == pytest.approx(2 / 3, abs=1e-15)
    assert m["recall"] == pytest.approx(2 / 3, abs=1e-15)
    assert m["specificity"] == pytest.approx(6 / 7, abs=1e-15)
    assert m["fdr"] == pytest.approx(1 / 3, abs=1e-15)
    assert m["npv"] == pytest.approx(6 / 7, abs=1e-15)
    assert m["f1"] == pytest.approx(2 / 3, abs=1e-15)
    assert m["balanced_accuracy"] == pytest.approx(float(Fraction(1, 2) * (Fraction(2, 3) + Fraction(6, 7))), abs=1e-15)
    assert m["mcc"] == pytest.approx(11 / 21, abs=1e-15)


def test_zero_denominator_policy():
    m = classification_metrics(ConfusionCounts(tp=0, fp=0, fn=3, tn=7))
    assert m["precision"] is None and m["fdr"] is None
    assert m["recall"] == 0.0
    assert m["mcc"] is None


def test_empty_counts():
    with pytest.raises(EmptyCountsError):
        classification_metrics(ConfusionCounts())


def test_negative_counts():
    with pytest.raises(ValueError):
        ConfusionCounts(tp=-1)


counts = st.builds(ConfusionCounts, *(st.integers(0, 30) for _ in range(4))).filter(lambda c: c.total > 0)


@settings(max_examples=300, deadline=None)
@given(counts)
def test_metrics_match_enumeration(c):
    got = classification_metrics(c)
    want = metrics_by_enumeration(c.tp, c.fp, c.fn, c.tn)
    for k in METRIC_NAMES:
        if want[k] is None:
            assert got[k] is None, k
        else:
            assert got[k] == pytest.approx(want[k], abs=1e-12), k


@settings(max_examples=200, deadline=None)
@given(counts)
def test_label_swap(c):
    m, s = classification_metrics(c), classification_metrics(c.swapped())
    if m["mcc"] is not None:
        assert s["mcc"] == pytest.approx(m["mcc"], abs=1e-12)
    assert s["precision"] == m["npv"] and s["recall"] == m["specificity"]


@pytest.mark.parametrize("measured,ref,expected", [(0.56, 0.50, 0.12), (0.7, 0.7, 0.0), (0.0, 0.63, 1.0)])
def test_relative_error(measured, ref, expected):
    assert relative_error(measured, ref) == pytest.approx(expected, abs=1e-12)


def test_relative_error_zero_reference():
    with pytest.raises(ZeroReferenceError):
        relative_error(1.0, 0.0)


def test_batch_eval_trivial():
    truth = ["CD"] * 4
    assert batch_classify_eval(truth, truth) == ConfusionCounts(tp=4)
    truth = ["CD", "ITB", "CD"]
    flipped = ["ITB", "CD", "ITB"]
    c = batch_classify_eval(flipped, truth)
    assert c.tp == 0 and c.tn == 0 and c.fp == 1 and c.fn == 2


def test_batch_eval_random(rng):
    for _ in range(50):
        pred = rng.choice(["CD", "ITB"], 20).tolist()
        truth = rng.choice(["CD", "ITB"], 20).tolist()
        tally = {"tp": 0, "fp": 0, "fn": 0, "tn": 0}
        for p, t in zip(pred, truth):
            key = ("t" if p == t else "f") + ("p" if p == "CD" else "n")
            tally[key] += 1
        assert batch_classify_eval(pred, truth) == ConfusionCounts(**tally)


def test_batch_eval_positive_itb():
    c = batch_classify_eval([Label.ITB, Label.CD], ["itb", "itb"], positive="ITB")
    assert c == ConfusionCounts(tp=1, fn=1)


def test_batch_eval_errors():
    with pytest.raises(LengthMismatchError):
        batch_classify_eval(["CD"], [])
    with pytest.raises(UnknownLabelError):
        batch_classify_eval(["UC"], ["CD"])


def test_read_label_csv(tmp_path):
    p = tmp_path / "labels.csv"
    p.write_text("case_id,label\na,CD\nb,itb\n\n")
    assert read_label_csv(p) == {"a": Label.CD, "b": Label.ITB}
    p.write_text("a,CD\nb,XX\n")
    with pytest.raises(UnknownLabelError, match=":2:"):
        read_label_csv(p)


def test_summarize():
    s = summarize([0.5, 1.0, None, 1.5])
    assert s["n"] == 3 and s["mean"] == 1.0 and s["std"] == 0.5
    assert s["display"] == "1.00±0.50"
    assert summarize([])["display"] == "n/a"
    assert math.isclose(summarize([2.0])["std"], 0.0)
