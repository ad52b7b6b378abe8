"""Anchor grid generation and ground-truth coverage scoring.

Two generation modes exist because paired specs and classic cross-product
specs mean different things by "scale":

* ``height_scale`` — ratios and scales are index-paired; pair (x, s) makes
  one anchor of width s*x and height s per lattice point.
* ``area`` — full cross product; for scale s and ratio r (width:height),
  the anchor is s*sqrt(r) wide and s/sqrt(r) tall, preserving area s^2.

Anchor centers sit at (i + 0.5) * stride on each axis, one per feature-map
cell.  Anchors are clipped to the image; anything clipped to zero area is
dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .annotations import AnnotationTable
from .aras import AnchorSpec
from .errors import ValidationError
from .geometry import Box, boxes_to_array, iou_matrix

DEFAULT_STRIDE = 16
DEFAULT_IOU_THRESHOLD = 0.7

# classic baseline hyperparameters: 3 area scales x 3 width:height ratios
DEFAULT_AREA_SCALES = (128.0, 256.0, 512.0)
DEFAULT_AREA_RATIOS = (1.0, 0.5, 2.0)

MODES = ("height_scale", "area")


@dataclass(frozen=True)
class AnchorGrid:
    image_width: int
    image_height: int
    stride: int
    per_location: int
    boxes: tuple[Box, ...]

    @property
    def n_anchors(self) -> int:
        return len(self.boxes)

    def as_array(self) -> np.ndarray:
        return boxes_to_array(self.boxes)


def default_spec() -> AnchorSpec:
    """The stock cross-product spec: scales (128, 256, 512), ratios 1:1, 1:2, 2:1."""
    return AnchorSpec(ratios=DEFAULT_AREA_RATIOS, scales=DEFAULT_AREA_SCALES, k=None)


def _shapes(spec: AnchorSpec, mode: str) -> list[tuple[float, float]]:
    """(width, height) of each anchor placed at one lattice point."""
    if mode == "height_scale":
        if len(spec.ratios) != len(spec.scales):
            raise ValidationError(
                "height_scale mode needs index-paired ratios and scales, "
                f"got {len(spec.ratios)} ratios and {len(spec.scales)} scales"
            )
        return [(s * x, s) for x, s in zip(spec.ratios, spec.scales)]
    if mode == "area":
        return [(s * math.sqrt(r), s / math.sqrt(r)) for s in spec.scales for r in spec.ratios]
    raise ValidationError(f"unknown anchor mode {mode!r}; expected one of {MODES}")


def generate_anchors(
    spec: AnchorSpec,
    image_size: tuple[int, int],
    stride: int = DEFAULT_STRIDE,
    mode: str = "height_scale",
) -> AnchorGrid:
    """Tile the image with anchors of the spec's shapes at every lattice point."""
    image_w, image_h = image_size
    if stride < 1:
        raise ValidationError(f"stride must be >= 1, got {stride}")
    if image_w < 1 or image_h < 1:
        raise ValidationError(f"image size must be positive, got {image_w}x{image_h}")
    shapes = _shapes(spec, mode)
    boxes: list[Box] = []
    for iy in range(image_h // stride):
        cy = (iy + 0.5) * stride
        for ix in range(image_w // stride):
            cx = (ix + 0.5) * stride
            for w, h in shapes:
                xmin = max(0.0, cx - w / 2)
                ymin = max(0.0, cy - h / 2)
                xmax = min(float(image_w), cx + w / 2)
                ymax = min(float(image_h), cy + h / 2)
                if xmax - xmin <= 0 or ymax - ymin <= 0:
                    continue
                boxes.append(Box(xmin, ymin, xmax, ymax))
    return AnchorGrid(
        image_width=image_w,
        image_height=image_h,
        stride=stride,
        per_location=len(shapes),
        boxes=tuple(boxes),
    )


@dataclass(frozen=True)
class CoverageReport:
    """How well an anchor set covers a table's ground truth boxes."""

    recall_at_iou: float
    mean_best_iou: float
    threshold: float
    n_gt: int
    n_anchors: int

    def to_dict(self) -> dict:
        return {
            "recall_at_iou": self.recall_at_iou,
            "mean_best_iou": self.mean_best_iou,
            "threshold": self.threshold,
            "n_gt": self.n_gt,
            "n_anchors": self.n_anchors,
        }


def coverage_recall(
    grid: AnchorGrid, table: AnnotationTable, iou_threshold: float = DEFAULT_IOU_THRESHOLD
) -> CoverageReport:
    """Best-anchor IoU per ground-truth box: recall at the threshold plus the mean.

    The grid and the table must share the same pixel frame.
    """
    gt_boxes = [box for row in table.rows for box in row.boxes]
    if not gt_boxes:
        raise ValidationError("annotation table contains no boxes to cover")
    if grid.n_anchors == 0:
        best = np.zeros(len(gt_boxes))
    else:
        best = iou_matrix(boxes_to_array(gt_boxes), grid.as_array()).max(axis=1)
    return CoverageReport(
        recall_at_iou=float((best >= iou_threshold).mean()),
        mean_best_iou=float(best.mean()),
        threshold=iou_threshold,
        n_gt=len(gt_boxes),
        n_anchors=grid.n_anchors,
    )
