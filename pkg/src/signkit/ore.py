"""Patch mining: labeled object crops and overlap-free background windows.

Positives: every ground-truth box, expanded by a safety margin (default 10
pixels, clamped to the frame), cropped and resized to 224x224.

Negatives: 224x224 sliding windows on a stride lattice (plus a final
edge-aligned row/column) that have exactly zero intersection area with
every margin-expanded ground-truth box of the image.  Touching edges is
allowed; any positive overlap area disqualifies the window.

The corpus builder enumerates candidate boxes dataset-wide without touching
pixels, applies per-label quotas with seeded uniform subsampling, and only
then loads images to cut and write the selected patches, so stride-1 runs
stay tractable.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .annotations import AnnotationTable, ImageAnnotation
from .errors import SchemaError, ValidationError
from .geometry import Box, expand
from .imaging import PixelImage, crop, ensure_rgb, load_image, resize_area, save_png

logger = logging.getLogger(__name__)

PATCH_SIZE = 224
DEFAULT_WINDOW = 224
DEFAULT_STRIDE = 112
DEFAULT_MARGIN = 10

POSITIVE_LABEL = "signboard"
NEGATIVE_LABEL = "non-signboard"

MANIFEST_COLUMNS = ("path", "image_id", "label", "xmin", "ymin", "xmax", "ymax")


@dataclass(frozen=True, eq=False)
class PatchSample:
    """One 224x224x3 training patch and the frame region it came from."""

    source_image_id: str
    label: str
    origin_box: Box
    pixels: PixelImage

    def __post_init__(self) -> None:
        if self.label not in (POSITIVE_LABEL, NEGATIVE_LABEL):
            raise ValidationError(f"unknown patch label {self.label!r}")
        if (
            self.pixels.width != PATCH_SIZE
            or self.pixels.height != PATCH_SIZE
            or self.pixels.channels != 3
        ):
            raise ValidationError(
                f"patch must be {PATCH_SIZE}x{PATCH_SIZE}x3, got "
                f"{self.pixels.width}x{self.pixels.height}x{self.pixels.channels}"
            )


@dataclass(frozen=True)
class PatchEntry:
    path: str
    image_id: str
    label: str
    box: Box


@dataclass(frozen=True)
class PatchManifest:
    """Index of an extracted patch corpus plus the seed that produced it."""

    entries: tuple[PatchEntry, ...]
    seed: int

    @property
    def counts(self) -> dict[str, int]:
        out = {POSITIVE_LABEL: 0, NEGATIVE_LABEL: 0}
        for entry in self.entries:
            out[entry.label] = out.get(entry.label, 0) + 1
        return out


def positive_boxes(ann: ImageAnnotation, margin: float = DEFAULT_MARGIN) -> list[Box]:
    """Margin-expanded ground-truth boxes, clamped to the image frame."""
    return [
        expand(box, margin, ann.image_width, ann.image_height) for box in ann.boxes
    ]


def _lattice(length: int, window: int, stride: int) -> list[int]:
    positions = list(range(0, length - window + 1, stride))
    if positions[-1] != length - window:
        positions.append(length - window)
    return positions


def negative_boxes(
    ann: ImageAnnotation,
    window: int = DEFAULT_WINDOW,
    stride: int = DEFAULT_STRIDE,
    margin: float = DEFAULT_MARGIN,
) -> list[Box]:
    """Window boxes on the stride lattice with zero overlap against expanded GT.

    Windows are enumerated row-major (y outer, x inner).  The window must fit
    inside the image.
    """
    if stride < 1:
        raise ValidationError(f"stride must be >= 1, got {stride}")
    if window > ann.image_width or window > ann.image_height:
        raise ValidationError(
            f"window {window} exceeds image {ann.image_width}x{ann.image_height}"
        )
    xs = np.array(_lattice(ann.image_width, window, stride), dtype=np.float64)
    ys = np.array(_lattice(ann.image_height, window, stride), dtype=np.float64)
    gx, gy = np.meshgrid(xs, ys)  # row-major: y varies along rows
    wx = gx.ravel()
    wy = gy.ravel()
    keep = np.ones(wx.size, dtype=bool)
    for gt in positive_boxes(ann, margin):
        overlap = (
            (wx < gt.xmax)
            & (wx + window > gt.xmin)
            & (wy < gt.ymax)
            & (wy + window > gt.ymin)
        )
        keep &= ~overlap
    return [
        Box(float(x), float(y), float(x) + window, float(y) + window)
        for x, y in zip(wx[keep], wy[keep])
    ]


def _cut_patch(img: PixelImage, box: Box) -> PixelImage:
    patch = crop(ensure_rgb(img), box)
    if patch.width != PATCH_SIZE or patch.height != PATCH_SIZE:
        patch = resize_area(patch, PATCH_SIZE, PATCH_SIZE)
    return patch


def extract_positives(
    img: PixelImage, ann: ImageAnnotation, margin: float = DEFAULT_MARGIN
) -> list[PatchSample]:
    """One signboard patch per ground-truth box of the image."""
    return [
        PatchSample(ann.image_id, POSITIVE_LABEL, box, _cut_patch(img, box))
        for box in positive_boxes(ann, margin)
    ]


def extract_negatives(
    img: PixelImage,
    ann: ImageAnnotation,
    window: int = DEFAULT_WINDOW,
    stride: int = DEFAULT_STRIDE,
    margin: float = DEFAULT_MARGIN,
) -> list[PatchSample]:
    """One background patch per accepted sliding window of the image."""
    return [
        PatchSample(ann.image_id, NEGATIVE_LABEL, box, _cut_patch(img, box))
        for box in negative_boxes(ann, window=window, stride=stride, margin=margin)
    ]


def _resolve_image(image_root: Path, ann: ImageAnnotation) -> Path | None:
    candidates = [image_root / ann.file_path, image_root / Path(ann.file_path).name]
    for path in candidates:
        if path.is_file():
            return path
    return None


def _take(candidates: list, quota: int, rng: np.random.Generator) -> list:
    if len(candidates) <= quota:
        return list(candidates)
    picked = sorted(rng.choice(len(candidates), size=quota, replace=False))
    return [candidates[i] for i in picked]


def build_corpus(
    table: AnnotationTable,
    image_root,
    out_dir,
    total: int = 20000,
    seed: int = 0,
    window: int = DEFAULT_WINDOW,
    stride: int = DEFAULT_STRIDE,
    margin: float = DEFAULT_MARGIN,
    extra_sidecar: dict | None = None,
) -> PatchManifest:
    """Mine a corpus of `total` patches, balanced 50/50 across labels.

    When one label cannot fill its half, the other label's surplus tops the
    corpus up and the imbalance is logged.  Patches land in
    ``out_dir/patches/``, the index in ``out_dir/patch_manifest.csv`` with a
    JSON sidecar.  Fixed (table, seed, parameters) reproduce the output
    byte for byte.
    """
    if total < 0:
        raise ValidationError(f"total must be >= 0, got {total}")
    if seed < 0:
        raise ValidationError(f"seed must be non-negative, got {seed}")
    image_root = Path(image_root)
    out_dir = Path(out_dir)

    rows = sorted(table.rows, key=lambda ann: ann.image_id)
    by_id = {ann.image_id: ann for ann in rows}
    skipped: list[str] = []
    resolved: dict[str, Path] = {}
    pos_candidates: list[tuple[str, Box]] = []
    neg_candidates: list[tuple[str, Box]] = []
    for ann in rows:
        path = _resolve_image(image_root, ann)
        if path is None:
            skipped.append(ann.image_id)
            logger.warning("no image file for %s (looked under %s)", ann.image_id, image_root)
            continue
        resolved[ann.image_id] = path
        pos_candidates.extend((ann.image_id, box) for box in positive_boxes(ann, margin))
        neg_candidates.extend(
            (ann.image_id, box)
            for box in negative_boxes(ann, window=window, stride=stride, margin=margin)
        )

    rng = np.random.default_rng(seed)
    pos_quota = total // 2
    neg_quota = total - pos_quota
    n_pos = min(len(pos_candidates), pos_quota)
    n_neg = min(len(neg_candidates), total - n_pos)
    n_pos = min(len(pos_candidates), total - n_neg)
    if n_pos != pos_quota or n_neg != neg_quota:
        logger.warning(
            "imbalanced corpus: %d %s + %d %s of %d requested",
            n_pos, POSITIVE_LABEL, n_neg, NEGATIVE_LABEL, total,
        )
    selected = [(image_id, POSITIVE_LABEL, box) for image_id, box in _take(pos_candidates, n_pos, rng)]
    selected += [(image_id, NEGATIVE_LABEL, box) for image_id, box in _take(neg_candidates, n_neg, rng)]
    selected.sort(key=lambda item: item[0])  # group by image; stable keeps label/lattice order

    entries: list[PatchEntry] = []
    counters: dict[tuple[str, str], int] = {}
    current_id: str | None = None
    current_img: PixelImage | None = None
    for image_id, label, box in selected:
        if image_id != current_id:
            raw = load_image(resolved[image_id])
            ann = by_id[image_id]
            if raw.width != ann.image_width or raw.height != ann.image_height:
                raw = resize_area(raw, ann.image_width, ann.image_height)
            current_img = ensure_rgb(raw)
            current_id = image_id
        index = counters.get((image_id, label), 0)
        counters[(image_id, label)] = index + 1
        rel_path = f"patches/{image_id}_{label}_{index}.png"
        save_png(_cut_patch(current_img, box), out_dir / rel_path)
        entries.append(PatchEntry(path=rel_path, image_id=image_id, label=label, box=box))

    manifest = PatchManifest(entries=tuple(entries), seed=seed)
    write_manifest(manifest, out_dir / "patch_manifest.csv")
    sidecar = {
        "seed": seed,
        "requested_total": total,
        "counts": manifest.counts,
        "window": window,
        "stride": stride,
        "margin": margin,
        "skipped_images": skipped,
    }
    if extra_sidecar:
        sidecar.update(extra_sidecar)
    with open(out_dir / "patch_manifest.json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def write_manifest(manifest: PatchManifest, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_COLUMNS)
        for e in manifest.entries:
            writer.writerow(
                [e.path, e.image_id, e.label, e.box.xmin, e.box.ymin, e.box.xmax, e.box.ymax]
            )


def read_manifest(path, seed: int = 0) -> PatchManifest:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != list(MANIFEST_COLUMNS):
            raise SchemaError(
                f"patch manifest header must be exactly {','.join(MANIFEST_COLUMNS)}"
            )
        entries = [
            PatchEntry(
                path=cells[0],
                image_id=cells[1],
                label=cells[2],
                box=Box(float(cells[3]), float(cells[4]), float(cells[5]), float(cells[6])),
            )
            for cells in reader
            if cells
        ]
    return PatchManifest(entries=tuple(entries), seed=seed)
