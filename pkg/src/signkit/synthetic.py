"""Synthetic annotated scenes for validating the pipeline at desk scale.

The planted dataset draws boxes tightly around three shape clusters
(60x30, 150x50, 300x75) plus a single 500x100 outlier that owns the
dataset maxima.  Recovering ratios near (2, 3, 4, 5) and scales near
(30, 50, 75, 100) from it is the standard end-to-end sanity check.
"""

from __future__ import annotations

import zlib
from pathlib import Path

import numpy as np

from .annotations import AnnotationTable, ImageAnnotation
from .geometry import Box
from .imaging import PixelImage, save_png

PLANTED_DIMS = ((60.0, 30.0), (150.0, 50.0), (300.0, 75.0))
PLANTED_OUTLIER = (500.0, 100.0)
PLANTED_RATIOS = (2.0, 3.0, 4.0, 5.0)
PLANTED_SCALES = (30.0, 50.0, 75.0, 100.0)

CLASS_NAME = "signboard"


def _place(rng: np.random.Generator, w: float, h: float, frame_w: int, frame_h: int) -> Box:
    x = rng.uniform(0.0, frame_w - w)
    y = rng.uniform(0.0, frame_h - h)
    return Box(x, y, x + w, y + h)


def planted_table(
    seed: int = 0,
    per_cluster: int = 50,
    frame: tuple[int, int] = (1000, 600),
    jitter: float = 0.02,
    boxes_per_image: int = 5,
) -> AnnotationTable:
    """Annotation table with three planted shape clusters and one max outlier."""
    frame_w, frame_h = frame
    rng = np.random.default_rng(seed)
    dims: list[tuple[float, float]] = []
    for base_w, base_h in PLANTED_DIMS:
        for _ in range(per_cluster):
            dims.append(
                (
                    base_w * (1.0 + rng.uniform(-jitter, jitter)),
                    base_h * (1.0 + rng.uniform(-jitter, jitter)),
                )
            )
    dims.append(PLANTED_OUTLIER)  # exact, so the dataset maxima are known

    rows: list[ImageAnnotation] = []
    for start in range(0, len(dims), boxes_per_image):
        chunk = dims[start : start + boxes_per_image]
        image_id = f"synth_{start // boxes_per_image:04d}"
        objects = [
            (CLASS_NAME, _place(rng, w, h, frame_w, frame_h)) for w, h in chunk
        ]
        rows.append(
            ImageAnnotation(
                image_id=image_id,
                file_path=f"{image_id}.png",
                image_width=frame_w,
                image_height=frame_h,
                objects=objects,
            )
        )
    return AnnotationTable(rows=rows)


def random_scene(
    rng: np.random.Generator,
    image_id: str,
    frame_w: int,
    frame_h: int,
    max_boxes: int = 4,
) -> ImageAnnotation:
    """A single image annotation with a random number of random boxes."""
    objects = []
    for _ in range(int(rng.integers(0, max_boxes + 1))):
        w = float(rng.uniform(20, frame_w * 0.6))
        h = float(rng.uniform(20, frame_h * 0.6))
        objects.append((CLASS_NAME, _place(rng, w, h, frame_w, frame_h)))
    return ImageAnnotation(
        image_id=image_id,
        file_path=f"{image_id}.png",
        image_width=frame_w,
        image_height=frame_h,
        objects=objects,
    )


def render_image(ann: ImageAnnotation, seed: int = 0) -> PixelImage:
    """Flat background with filled rectangles at the annotated boxes."""
    rng = np.random.default_rng([seed, zlib.crc32(ann.image_id.encode("utf-8"))])
    background = rng.integers(100, 180, size=3, dtype=np.uint8)
    arr = np.tile(background, (ann.image_height, ann.image_width, 1)).astype(np.uint8)
    for _, box in ann.objects:
        color = rng.integers(0, 255, size=3, dtype=np.uint8)
        x0, y0 = int(round(box.xmin)), int(round(box.ymin))
        x1, y1 = int(round(box.xmax)), int(round(box.ymax))
        arr[y0:y1, x0:x1] = color
    return PixelImage(arr)


def _voc_document(ann: ImageAnnotation) -> str:
    parts = [
        "<annotation>",
        "  <folder>images</folder>",
        f"  <filename>{ann.file_path}</filename>",
        "  <size>",
        f"    <width>{ann.image_width}</width>",
        f"    <height>{ann.image_height}</height>",
        "    <depth>3</depth>",
        "  </size>",
        "  <segmented>0</segmented>",
    ]
    for class_name, box in ann.objects:
        parts += [
            "  <object>",
            f"    <name>{class_name}</name>",
            "    <pose>Unspecified</pose>",
            "    <truncated>0</truncated>",
            "    <difficult>0</difficult>",
            "    <bndbox>",
            f"      <xmin>{int(round(box.xmin))}</xmin>",
            f"      <ymin>{int(round(box.ymin))}</ymin>",
            f"      <xmax>{int(round(box.xmax))}</xmax>",
            f"      <ymax>{int(round(box.ymax))}</ymax>",
            "    </bndbox>",
            "  </object>",
        ]
    parts.append("</annotation>")
    return "\n".join(parts) + "\n"


def write_voc_dataset(table: AnnotationTable, root, render: bool = True, seed: int = 0) -> None:
    """Materialize a table as VOC XML files (and PNG images) under `root`."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    for ann in table.rows:
        (root / f"{ann.image_id}.xml").write_text(_voc_document(ann), encoding="utf-8")
        if render:
            save_png(render_image(ann, seed=seed), root / ann.file_path)
