import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from toposynth.metrics import (ConfusionMatrix, MetricsInputError, accumulate, aggregate, compute_metrics,
                               report_csv, report_json, report_text)


def test_tally():
    cm = accumulate([0, 0, 1, 1], [0, 1, 1, 1])
    assert cm.counts[0, 0] == 1 and cm.counts[0, 1] == 1 and cm.counts[1, 1] == 2 and cm.total == 4
    assert accumulate([], []).total == 0
    gt = [0, 1, 2, 3, 3]
    assert np.array_equal(accumulate(gt, gt).counts, np.diag(np.bincount(gt, minlength=4)))


def test_input_errors():
    with pytest.raises(MetricsInputError, match="length"):
        accumulate([0, 1], [0])
    with pytest.raises(MetricsInputError, match="row 2"):
        accumulate([0, 1, 7], [0, 1, 1])


def test_hand_case():
    r = compute_metrics(accumulate([0, 0, 1, 1], [0, 1, 1, 1]))
    assert r.per_class[0].iou == pytest.approx(oracles.HAND_IOU[0])
    assert r.per_class[1].iou == pytest.approx(oracles.HAND_IOU[1], abs=1e-3)
    assert r.oa == oracles.HAND_OA
    assert (r.per_class[0].acc, r.per_class[1].acc) == oracles.HAND_ACC
    assert r.absent == [2, 3]


def test_clean_miss():
    gt = [1] * 100 + [2] * 100
    pred = [1] * 100 + [3] * 100
    r = compute_metrics(accumulate(gt, pred))
    assert r.per_class[1].iou == 100.0 and r.per_class[2].iou == 0.0
    assert r.miou == 50.0
    # averaging over every class seen anywhere counts the stray class too
    assert compute_metrics(accumulate(gt, pred), miou_over="union").miou == pytest.approx(100 / 3)


def test_perfect():
    r = compute_metrics(accumulate([0, 1, 2, 3, 1], [0, 1, 2, 3, 1]))
    assert r.oa == r.miou == r.macc == 100.0


labels = st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=200)


@settings(max_examples=100)
@given(labels)
def test_properties(pairs):
    gt, pred = map(list, zip(*pairs))
    r = compute_metrics(accumulate(gt, pred))
    for k, m in r.per_class.items():
        assert m.iou == oracles.set_iou(gt, pred, k) or m.iou == pytest.approx(oracles.set_iou(gt, pred, k))
        if m.acc is not None:
            assert m.iou <= m.acc + 1e-12
    recalls = [m.acc for m in r.per_class.values() if m.acc is not None]
    assert min(recalls) - 1e-9 <= r.oa <= max(recalls) + 1e-9
    for v in [r.miou, r.macc, r.oa]:
        assert 0 <= v <= 100
    perm = np.random.default_rng(len(pairs)).permutation(len(gt))
    r2 = compute_metrics(accumulate(np.array(gt)[perm], np.array(pred)[perm]))
    assert (r2.miou, r2.macc, r2.oa) == (r.miou, r.macc, r.oa)


def test_micro_vs_macro():
    a = accumulate([0, 0, 0, 0], [0, 0, 0, 1])
    b = accumulate([1, 1], [1, 0])
    micro = aggregate([a, b])
    assert micro.oa == compute_metrics(a + b).oa == pytest.approx(100 * 4 / 6)
    macro = aggregate([a, b], macro=True)
    assert macro.oa == pytest.approx((75 + 50) / 2)
    with pytest.raises(MetricsInputError):
        aggregate([])


def test_reports():
    r = aggregate([accumulate([0, 1, 1], [0, 1, 1])])
    text = report_text(r)
    assert text.splitlines()[0].split() == ["Genus", "IoU", "Acc"]
    assert "mIoU" in text and "100.00" in text
    csv_lines = report_csv(r).splitlines()
    assert csv_lines[0] == "Genus,IoU,Acc" and "mIoU,mAcc,OA" in csv_lines
    data = json.loads(report_json(r))
    assert data["miou"] == 100.0 and data["absent"] == [2, 3]


def test_matrix_add():
    z = ConfusionMatrix.zeros()
    a = accumulate([0], [1])
    assert (z + a).total == 1
