"""Axis-aligned box arithmetic used by every other module.

Coordinate convention: continuous coordinates with inclusive min edges and
exclusive max edges, so an integer-coordinate box (x0, y0, x1, y1) covers
exactly the pixel centers x0..x1-1 / y0..y1-1.  Zero-area boxes are rejected
at construction; corrupt annotations should fail loudly at ingest, not get
silently patched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle with strictly positive area.

    All coordinates are finite, non-negative reals with xmin < xmax and
    ymin < ymax.
    """

    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self) -> None:
        for name in ("xmin", "ymin", "xmax", "ymax"):
            value = float(getattr(self, name))
            if not math.isfinite(value) or value < 0:
                raise ValidationError(
                    f"box coordinate {name}={getattr(self, name)!r} must be a finite non-negative real"
                )
            object.__setattr__(self, name, value)
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise ValidationError(
                f"degenerate box ({self.xmin}, {self.ymin}, {self.xmax}, {self.ymax}): "
                "requires xmin < xmax and ymin < ymax"
            )

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    @property
    def area(self) -> float:
        return self.width * self.height

    def contains(self, other: "Box") -> bool:
        """True if `other` lies entirely inside this box."""
        return (
            self.xmin <= other.xmin
            and self.ymin <= other.ymin
            and self.xmax >= other.xmax
            and self.ymax >= other.ymax
        )


def intersection_area(a: Box, b: Box) -> float:
    """Area of the overlap of two boxes; 0.0 when they are disjoint or touch."""
    w = min(a.xmax, b.xmax) - max(a.xmin, b.xmin)
    h = min(a.ymax, b.ymax) - max(a.ymin, b.ymin)
    if w <= 0 or h <= 0:
        return 0.0
    return w * h


def iou(a: Box, b: Box) -> float:
    """Intersection over union of two boxes, in [0, 1]."""
    inter = intersection_area(a, b)
    if inter == 0.0:
        return 0.0
    return inter / (a.area + b.area - inter)


def expand(box: Box, margin: float, width: float, height: float) -> Box:
    """Move every edge of `box` outward by `margin`, clamped to the frame.

    The box must already lie inside the (width, height) frame, which
    guarantees the clamped result is still a valid box.
    """
    if margin < 0:
        raise ValidationError(f"margin must be non-negative, got {margin}")
    if width <= 0 or height <= 0:
        raise ValidationError(f"frame bounds must be positive, got {width}x{height}")
    return Box(
        max(0.0, box.xmin - margin),
        max(0.0, box.ymin - margin),
        min(float(width), box.xmax + margin),
        min(float(height), box.ymax + margin),
    )


def rescale(box: Box, sx: float, sy: float) -> Box:
    """Scale box coordinates componentwise by (sx, sy); factors must be > 0."""
    if sx <= 0 or sy <= 0:
        raise ValidationError(f"scale factors must be positive, got sx={sx}, sy={sy}")
    return Box(box.xmin * sx, box.ymin * sy, box.xmax * sx, box.ymax * sy)


def boxes_to_array(boxes: Iterable[Box]) -> np.ndarray:
    """Pack boxes into an (n, 4) float64 array of (xmin, ymin, xmax, ymax)."""
    arr = np.array([(b.xmin, b.ymin, b.xmax, b.ymax) for b in boxes], dtype=np.float64)
    return arr.reshape(-1, 4)


def iou_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise IoU between two (n, 4) / (m, 4) box arrays, as an (n, m) matrix.

    Matches `iou` elementwise for valid boxes.
    """
    a = np.asarray(a, dtype=np.float64).reshape(-1, 4)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 4)
    iw = np.minimum(a[:, None, 2], b[None, :, 2]) - np.maximum(a[:, None, 0], b[None, :, 0])
    ih = np.minimum(a[:, None, 3], b[None, :, 3]) - np.maximum(a[:, None, 1], b[None, :, 1])
    inter = np.clip(iw, 0.0, None) * np.clip(ih, 0.0, None)
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    union = area_a[:, None] + area_b[None, :] - inter
    out = np.zeros_like(inter)
    np.divide(inter, union, out=out, where=inter > 0)
    return out
