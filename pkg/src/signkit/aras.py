"""ARAS: anchor ratio and anchor scale selection from ground-truth box shapes.

Widths and heights of all ground-truth boxes are clustered independently
with 1-D K-means (K clusters each).  Width and height centers are sorted
ascending and paired by index; each pair yields an aspect ratio
``width_center / height_center`` (kept in X:1 form) with the height center
as the matching anchor scale.  A final pair built from the dataset maxima
(``max_width / max_height`` ratio, ``max_height`` scale) covers the large
outliers K-means absorbs poorly, giving K+1 ratios and K+1 scales overall.
An anchor with scale s and ratio x is s*x wide and s tall.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

from .annotations import AnnotationTable
from .clustering import kmeans_1d
from .errors import SchemaError, ValidationError

logger = logging.getLogger(__name__)

DEFAULT_K = 3


@dataclass(frozen=True)
class AnchorProvenance:
    """Raw clustering outputs behind a derived spec, for auditing."""

    width_centers: tuple[float, ...]
    height_centers: tuple[float, ...]
    w_max: float
    h_max: float


@dataclass(frozen=True)
class AnchorSpec:
    """Anchor ratios (X in X:1) and scales (pixel heights).

    Specs derived here are index-paired with ``k + 1`` entries on each side.
    Cross-product style specs (classic area semantics) carry ``k=None`` and
    may have differing lengths.
    """

    ratios: tuple[float, ...]
    scales: tuple[float, ...]
    k: int | None = None
    provenance: AnchorProvenance | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "ratios", tuple(float(r) for r in self.ratios))
        object.__setattr__(self, "scales", tuple(float(s) for s in self.scales))
        if not self.ratios or not self.scales:
            raise ValidationError("anchor spec needs at least one ratio and one scale")
        if any(r <= 0 for r in self.ratios) or any(s <= 0 for s in self.scales):
            raise ValidationError("anchor ratios and scales must be strictly positive")
        if self.k is not None:
            if len(self.ratios) != self.k + 1 or len(self.scales) != self.k + 1:
                raise ValidationError(
                    f"paired spec with k={self.k} requires {self.k + 1} ratios and scales, "
                    f"got {len(self.ratios)} and {len(self.scales)}"
                )

    @property
    def paired(self) -> bool:
        return self.k is not None

    def describe(self) -> str:
        """Human-readable summary, ratios to 2 decimals and scales to integers."""
        ratios = ", ".join(f"{r:.2f}:1" for r in self.ratios)
        scales = ", ".join(f"{s:.0f}" for s in self.scales)
        return f"ratios ({ratios}), scales ({scales})"


def collect_dims(table: AnnotationTable) -> tuple[list[float], list[float]]:
    """Widths and heights of every ground-truth box, one entry per box."""
    widths: list[float] = []
    heights: list[float] = []
    for row in table.rows:
        for _, box in row.objects:
            widths.append(box.width)
            heights.append(box.height)
    if not widths:
        raise ValidationError("annotation table contains no boxes")
    return widths, heights


def _pad(centers: tuple[float, ...], k: int) -> list[float]:
    # degenerate clustering yields fewer centers; repeat the largest to keep k entries
    padded = list(centers)
    while len(padded) < k:
        padded.append(padded[-1])
    return padded


def derive_spec(table: AnnotationTable, k: int = DEFAULT_K, seed: int = 0) -> AnchorSpec:
    """Derive a k+1 pair anchor spec from a table's box shapes."""
    widths, heights = collect_dims(table)
    wc = kmeans_1d(widths, k, seed)
    hc = kmeans_1d(heights, k, seed)
    if wc.reduced or hc.reduced:
        logger.warning(
            "degenerate clustering: %d width / %d height centers for k=%d; repeating centers",
            wc.k_effective,
            hc.k_effective,
            k,
        )
    width_centers = _pad(wc.centers, k)
    height_centers = _pad(hc.centers, k)
    w_max = max(widths)
    h_max = max(heights)
    ratios = [w / h for w, h in zip(width_centers, height_centers)] + [w_max / h_max]
    scales = height_centers + [h_max]
    return AnchorSpec(
        ratios=tuple(ratios),
        scales=tuple(scales),
        k=k,
        provenance=AnchorProvenance(
            width_centers=tuple(width_centers),
            height_centers=tuple(height_centers),
            w_max=w_max,
            h_max=h_max,
        ),
    )


def spec_to_dict(spec: AnchorSpec) -> dict:
    doc: dict = {"k": spec.k, "ratios": list(spec.ratios), "scales": list(spec.scales)}
    if spec.provenance is not None:
        doc["provenance"] = {
            "wc": list(spec.provenance.width_centers),
            "hc": list(spec.provenance.height_centers),
            "w_max": spec.provenance.w_max,
            "h_max": spec.provenance.h_max,
        }
    return doc


def spec_from_dict(doc: dict) -> AnchorSpec:
    try:
        ratios = tuple(float(r) for r in doc["ratios"])
        scales = tuple(float(s) for s in doc["scales"])
    except (KeyError, TypeError, ValueError) as err:
        raise SchemaError(f"anchor spec document missing or invalid ratios/scales: {err}") from None
    provenance = None
    if isinstance(doc.get("provenance"), dict):
        p = doc["provenance"]
        try:
            provenance = AnchorProvenance(
                width_centers=tuple(float(v) for v in p["wc"]),
                height_centers=tuple(float(v) for v in p["hc"]),
                w_max=float(p["w_max"]),
                h_max=float(p["h_max"]),
            )
        except (KeyError, TypeError, ValueError) as err:
            raise SchemaError(f"anchor spec provenance is invalid: {err}") from None
    k = doc.get("k")
    return AnchorSpec(ratios=ratios, scales=scales, k=None if k is None else int(k), provenance=provenance)


def write_spec(spec: AnchorSpec, path, extra: dict | None = None) -> None:
    doc = spec_to_dict(spec)
    if extra:
        doc.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_spec(path) -> AnchorSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return spec_from_dict(json.load(fh))
