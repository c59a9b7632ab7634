"""Per-point genus segmentation scores: confusion matrices, IoU, recall, mIoU, mAcc, OA."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

N_CLASSES = 4


class MetricsInputError(ValueError):
    pass


@dataclass
class ConfusionMatrix:
    counts: np.ndarray  # rows ground truth, columns prediction

    @classmethod
    def zeros(cls, n_classes: int = N_CLASSES) -> ConfusionMatrix:
        return cls(np.zeros((n_classes, n_classes), dtype=np.int64))

    @property
    def n_classes(self) -> int:
        return len(self.counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __add__(self, other: ConfusionMatrix) -> ConfusionMatrix:
        return ConfusionMatrix(self.counts + other.counts)


def accumulate(gt, pred, n_classes: int = N_CLASSES, cm: ConfusionMatrix | None = None) -> ConfusionMatrix:
    gt = np.asarray(gt, dtype=np.int64).reshape(-1)
    pred = np.asarray(pred, dtype=np.int64).reshape(-1)
    if len(gt) != len(pred):
        raise MetricsInputError(f"length mismatch: {len(gt)} ground-truth vs {len(pred)} predicted labels")
    for name, arr in (("ground-truth", gt), ("predicted", pred)):
        bad = np.flatnonzero((arr < 0) | (arr >= n_classes))
        if len(bad):
            raise MetricsInputError(f"{name} label {arr[bad[0]]} at row {bad[0]} outside [0, {n_classes})")
    out = ConfusionMatrix.zeros(n_classes) if cm is None else ConfusionMatrix(cm.counts.copy())
    np.add.at(out.counts, (gt, pred), 1)
    return out


@dataclass
class ClassMetrics:
    iou: float | None
    acc: float | None
    in_gt: bool
    in_pred: bool


@dataclass
class MetricsReport:
    per_class: dict[int, ClassMetrics]
    miou: float
    macc: float
    oa: float
    absent: list[int] = field(default_factory=list)
    miou_over: str = "gt"

    def to_dict(self) -> dict:
        return {
            "per_class": {str(k): {"iou": v.iou, "acc": v.acc} for k, v in self.per_class.items()},
            "miou": self.miou, "macc": self.macc, "oa": self.oa,
            "absent": list(self.absent), "miou_over": self.miou_over,
        }


def compute_metrics(cm: ConfusionMatrix, miou_over: str = "gt") -> MetricsReport:
    """Scores in percent.

    mAcc averages recall over classes present in the ground truth. mIoU does
    the same by default (``miou_over="gt"``), so a class that only shows up
    as a wrong prediction lowers the IoU of the classes it steals from but
    is not averaged in itself; ``miou_over="union"`` also averages classes
    that appear only in predictions.
    """
    if miou_over not in ("gt", "union"):
        raise ValueError("miou_over must be 'gt' or 'union'")
    c = cm.counts.astype(np.float64)
    tp = np.diag(c)
    gt_n = c.sum(axis=1)
    pred_n = c.sum(axis=0)
    per, absent = {}, []
    for k in range(cm.n_classes):
        union = gt_n[k] + pred_n[k] - tp[k]
        in_gt, in_pred = bool(gt_n[k] > 0), bool(pred_n[k] > 0)
        if not (in_gt or in_pred):
            absent.append(k)
        per[k] = ClassMetrics(
            iou=float(100.0 * tp[k] / union) if union > 0 else None,
            acc=float(100.0 * tp[k] / gt_n[k]) if in_gt else None,
            in_gt=in_gt, in_pred=in_pred,
        )
    iou_set = [m.iou for m in per.values() if (m.in_gt if miou_over == "gt" else m.iou is not None)]
    acc_set = [m.acc for m in per.values() if m.acc is not None]
    total = c.sum()
    return MetricsReport(
        per_class=per,
        miou=float(np.mean(iou_set)) if iou_set else 0.0,
        macc=float(np.mean(acc_set)) if acc_set else 0.0,
        oa=float(100.0 * tp.sum() / total) if total > 0 else 0.0,
        absent=absent,
        miou_over=miou_over,
    )


def aggregate(matrices: list[ConfusionMatrix], macro: bool = False, miou_over: str = "gt") -> MetricsReport:
    """Micro: sum the matrices then score. Macro: score each scene, then average."""
    if not matrices:
        raise MetricsInputError("at least one scene is required")
    if not macro:
        total = matrices[0]
        for m in matrices[1:]:
            total = total + m
        return compute_metrics(total, miou_over)
    reports = [compute_metrics(m, miou_over) for m in matrices]
    k = matrices[0].n_classes
    per = {}
    for cls in range(k):
        ious = [r.per_class[cls].iou for r in reports if r.per_class[cls].iou is not None]
        accs = [r.per_class[cls].acc for r in reports if r.per_class[cls].acc is not None]
        per[cls] = ClassMetrics(float(np.mean(ious)) if ious else None, float(np.mean(accs)) if accs else None,
                                any(r.per_class[cls].in_gt for r in reports),
                                any(r.per_class[cls].in_pred for r in reports))
    return MetricsReport(
        per_class=per,
        miou=float(np.mean([r.miou for r in reports])),
        macc=float(np.mean([r.macc for r in reports])),
        oa=float(np.mean([r.oa for r in reports])),
        absent=[c for c in range(k) if not (per[c].in_gt or per[c].in_pred)],
        miou_over=miou_over,
    )


# ---------------------------------------------------------------------------
# report emission

def _fmt(v: float | None) -> str:
    return "-" if v is None else f"{v:.2f}"


def report_text(r: MetricsReport) -> str:
    lines = [f"{'Genus':>5}  {'IoU':>7}  {'Acc':>7}"]
    for k, m in r.per_class.items():
        lines.append(f"{k:>5}  {_fmt(m.iou):>7}  {_fmt(m.acc):>7}")
    lines.append("")
    lines.append(f"{'mIoU':>7}  {'mAcc':>7}  {'OA':>7}")
    lines.append(f"{_fmt(r.miou):>7}  {_fmt(r.macc):>7}  {_fmt(r.oa):>7}")
    return "\n".join(lines) + "\n"


def report_json(r: MetricsReport) -> str:
    return json.dumps(r.to_dict(), indent=2)


def report_csv(r: MetricsReport) -> str:
    """Per-genus table, a blank line, then the summary table."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["Genus", "IoU", "Acc"])
    for k, m in r.per_class.items():
        w.writerow([k, "" if m.iou is None else f"{m.iou:.6f}", "" if m.acc is None else f"{m.acc:.6f}"])
    buf.write("\n")
    w.writerow(["mIoU", "mAcc", "OA"])
    w.writerow([f"{r.miou:.6f}", f"{r.macc:.6f}", f"{r.oa:.6f}"])
    return buf.getvalue()
