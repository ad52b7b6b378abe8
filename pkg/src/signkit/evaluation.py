"""Detection post-processing and scoring: NMS, greedy matching, AP, mAP.

Matching protocol: within one image and class, detections are visited in
descending score order and each one greedily claims the unmatched ground
truth with the highest IoU, provided that IoU clears the threshold
(default 0.7).  Claimed ground truths cannot be matched again; leftover
detections are false positives and leftover ground truths false negatives.

AP integrates the precision-recall curve.  The default is all-point
interpolation (precision at each recall is replaced by the maximum
precision at any recall at least as large); the classic 11-point average
is available as a mode.  mAP averages AP over the classes present in the
ground truth.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .annotations import AnnotationTable
from .errors import ParseError, SchemaError, ValidationError
from .geometry import Box, boxes_to_array, iou, iou_matrix

logger = logging.getLogger(__name__)

DEFAULT_IOU_THRESHOLD = 0.7
DEFAULT_MAX_OUT = 300
AP_MODES = ("allpoint", "11point")

PREDICTION_COLUMNS = ("image_id", "class", "score", "xmin", "ymin", "xmax", "ymax")


@dataclass(frozen=True)
class DetectionRecord:
    """One scored, classified box prediction for one image."""

    image_id: str
    class_name: str
    score: float
    box: Box

    def __post_init__(self) -> None:
        if not (0.0 <= self.score <= 1.0):
            raise ValidationError(f"score must be in [0, 1], got {self.score}")


def nms(
    dets: list[DetectionRecord],
    iou_threshold: float = DEFAULT_IOU_THRESHOLD,
    max_out: int = DEFAULT_MAX_OUT,
) -> list[DetectionRecord]:
    """Greedy non-max suppression over one image's detections.

    Repeatedly keeps the highest-scoring remaining record and discards every
    remaining record whose IoU with it exceeds the threshold, stopping after
    ``max_out`` keeps.  Score ties break by smaller xmin, then smaller ymin,
    then input order.
    """
    if not dets:
        return []
    if len({d.image_id for d in dets}) > 1:
        raise ValidationError("nms expects records from a single image")
    order = sorted(
        range(len(dets)),
        key=lambda i: (-dets[i].score, dets[i].box.xmin, dets[i].box.ymin, i),
    )
    overlaps = iou_matrix(boxes_to_array(d.box for d in dets), boxes_to_array(d.box for d in dets))
    suppressed = np.zeros(len(dets), dtype=bool)
    keep: list[int] = []
    for i in order:
        if suppressed[i]:
            continue
        keep.append(i)
        if len(keep) >= max_out:
            break
        suppressed |= overlaps[i] > iou_threshold
    return [dets[i] for i in keep]


def match_detections(
    dets: list[DetectionRecord],
    gt_boxes: list[Box],
    iou_threshold: float = DEFAULT_IOU_THRESHOLD,
) -> list[bool]:
    """TP/FP flags for one image's single-class detections, in descending score order.

    IoU ties between candidate ground truths go to the earlier ground truth.
    """
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
    claimed = [False] * len(gt_boxes)
    flags: list[bool] = []
    for i in order:
        best_iou = 0.0
        best_j = -1
        for j, gt in enumerate(gt_boxes):
            if claimed[j]:
                continue
            value = iou(dets[i].box, gt)
            if value > best_iou:
                best_iou = value
                best_j = j
        if best_j >= 0 and best_iou >= iou_threshold:
            claimed[best_j] = True
            flags.append(True)
        else:
            flags.append(False)
    return flags


def precision_recall(flags: list[bool], n_gt: int) -> list[tuple[float, float]]:
    """(recall, precision) after each detection, flags already in score order."""
    points = []
    tp = 0
    for i, flag in enumerate(flags, start=1):
        tp += int(flag)
        recall = tp / n_gt if n_gt else 0.0
        points.append((recall, tp / i))
    return points


def average_precision(flags: list[bool], n_gt: int, mode: str = "allpoint") -> float:
    """Area under the precision-recall curve for one class.

    Conventions for empty inputs: no ground truth and no detections is a
    vacuous 1.0; detections against zero ground truth score 0.0; no
    detections against existing ground truth score 0.0.
    """
    if mode not in AP_MODES:
        raise ValidationError(f"unknown AP mode {mode!r}; expected one of {AP_MODES}")
    if n_gt == 0:
        return 1.0 if not flags else 0.0
    if not flags:
        return 0.0
    points = precision_recall(flags, n_gt)
    recalls = np.array([r for r, _ in points])
    precisions = np.array([p for _, p in points])
    if mode == "11point":
        total = 0.0
        for t in np.linspace(0.0, 1.0, 11):
            mask = recalls >= t - 1e-12
            total += float(precisions[mask].max()) if mask.any() else 0.0
        return total / 11.0
    mrec = np.concatenate(([0.0], recalls, [1.0]))
    mpre = np.concatenate(([0.0], precisions, [0.0]))
    for i in range(mpre.size - 2, -1, -1):
        mpre[i] = max(mpre[i], mpre[i + 1])
    steps = np.nonzero(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[steps + 1] - mrec[steps]) * mpre[steps + 1]))


@dataclass(frozen=True)
class ClassEval:
    ap: float
    n_gt: int
    tp: int
    fp: int
    fn: int
    curve: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class EvalReport:
    """Per-class AP plus the mean over classes present in the ground truth."""

    map: float
    iou_threshold: float
    ap_mode: str
    per_class: dict[str, ClassEval]

    def to_dict(self) -> dict:
        return {
            "map": self.map,
            "iou_threshold": self.iou_threshold,
            "ap_mode": self.ap_mode,
            "classes": {
                name: {
                    "ap": ce.ap,
                    "n_gt": ce.n_gt,
                    "tp": ce.tp,
                    "fp": ce.fp,
                    "fn": ce.fn,
                    "curve": [list(point) for point in ce.curve],
                }
                for name, ce in self.per_class.items()
            },
        }


def evaluate(
    dets: list[DetectionRecord],
    gts: AnnotationTable,
    iou_threshold: float = DEFAULT_IOU_THRESHOLD,
    ap_mode: str = "allpoint",
) -> EvalReport:
    """Score detections against a ground-truth table.

    Detections are matched per image, then pooled per class in global score
    order (ties by image id, then input order) to build one curve per class.
    A prediction that names an unknown image id is a hard error.
    """
    known = {row.image_id for row in gts.rows}
    unknown = sorted({d.image_id for d in dets} - known)
    if unknown:
        raise ValidationError(f"predictions reference unknown image id(s): {', '.join(unknown)}")

    gt_index: dict[tuple[str, str], list[Box]] = {}
    for row in gts.rows:
        for class_name, box in row.objects:
            gt_index.setdefault((row.image_id, class_name), []).append(box)

    per_class: dict[str, ClassEval] = {}
    for class_name in gts.class_names:
        n_gt = sum(len(v) for (_, c), v in gt_index.items() if c == class_name)
        class_dets = [d for d in dets if d.class_name == class_name]
        pooled: list[tuple[float, str, int, bool]] = []
        for image_id in sorted({d.image_id for d in class_dets}):
            image_dets = [d for d in class_dets if d.image_id == image_id]
            flags = match_detections(
                image_dets, gt_index.get((image_id, class_name), []), iou_threshold
            )
            ranked = sorted(range(len(image_dets)), key=lambda i: (-image_dets[i].score, i))
            for flag, i in zip(flags, ranked):
                pooled.append((image_dets[i].score, image_id, i, flag))
        pooled.sort(key=lambda item: (-item[0], item[1], item[2]))
        flags = [flag for _, _, _, flag in pooled]
        tp = sum(flags)
        per_class[class_name] = ClassEval(
            ap=average_precision(flags, n_gt, ap_mode),
            n_gt=n_gt,
            tp=tp,
            fp=len(flags) - tp,
            fn=n_gt - tp,
            curve=tuple(precision_recall(flags, n_gt)),
        )

    mean_ap = (
        sum(ce.ap for ce in per_class.values()) / len(per_class) if per_class else 0.0
    )
    return EvalReport(
        map=mean_ap, iou_threshold=iou_threshold, ap_mode=ap_mode, per_class=per_class
    )


def read_predictions(path) -> list[DetectionRecord]:
    """Read a predictions CSV: image_id, class, score, xmin, ymin, xmax, ymax."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(reader, None)
        if header is None:
            raise SchemaError("predictions CSV is empty: header row required")
        missing = [name for name in PREDICTION_COLUMNS if name not in header]
        if missing:
            raise SchemaError(f"predictions CSV missing column(s): {', '.join(missing)}")
        col = {name: header.index(name) for name in header}
        records: list[DetectionRecord] = []
        for line_no, cells in enumerate(reader, start=2):
            if not cells:
                continue
            try:
                values = [float(cells[col[name]]) for name in ("score", "xmin", "ymin", "xmax", "ymax")]
            except ValueError as err:
                raise ParseError(f"line {line_no}: {err}") from None
            try:
                records.append(
                    DetectionRecord(
                        image_id=cells[col["image_id"]].strip(),
                        class_name=cells[col["class"]].strip(),
                        score=values[0],
                        box=Box(values[1], values[2], values[3], values[4]),
                    )
                )
            except ValidationError as err:
                raise ValidationError(f"line {line_no}: {err}") from None
        return records


def write_predictions(dets: list[DetectionRecord], path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PREDICTION_COLUMNS)
        for d in dets:
            writer.writerow(
                [d.image_id, d.class_name, d.score, d.box.xmin, d.box.ymin, d.box.xmax, d.box.ymax]
            )


def write_report(report: EvalReport, path, extra: dict | None = None) -> None:
    doc = report.to_dict()
    if extra:
        doc.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
