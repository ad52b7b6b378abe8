"""Ground-truth labeling artifacts: Pascal VOC XML files and the flat CSV table.

The CSV manifest is one row per ground-truth box:

    image_id, file_path, xmin, xmax, ymin, ymax, width, height, class

where ``width``/``height`` are the dimensions of the image frame the box
coordinates live in.  ``height`` is optional on read (600 is assumed when
absent, matching the canonical 1000x600 frame); the writer always emits it.
Lines starting with ``#`` are skipped, which is where provenance comments go.

Only these VOC elements are consulted: annotation/filename,
annotation/size/{width,height}, and each object's name and
bndbox/{xmin,ymin,xmax,ymax}.  Everything else is ignored.
"""

from __future__ import annotations

import csv
import io
import logging
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ParseError, SchemaError, ValidationError
from .geometry import Box, rescale

logger = logging.getLogger(__name__)

CANONICAL_WIDTH = 1000
CANONICAL_HEIGHT = 600

CSV_COLUMNS = ("image_id", "file_path", "xmin", "xmax", "ymin", "ymax", "width", "height", "class")
_REQUIRED_COLUMNS = ("image_id", "file_path", "xmin", "xmax", "ymin", "ymax", "width", "class")


@dataclass
class ImageAnnotation:
    """All ground-truth boxes of one image, in that image's pixel frame."""

    image_id: str
    file_path: str
    image_width: int
    image_height: int
    objects: list[tuple[str, Box]] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.image_id:
            raise ValidationError("image_id must be non-empty")
        if self.image_width < 1 or self.image_height < 1:
            raise ValidationError(
                f"{self.image_id}: image dimensions must be >= 1, "
                f"got {self.image_width}x{self.image_height}"
            )
        for index, (class_name, box) in enumerate(self.objects):
            if not class_name:
                raise ValidationError(f"{self.image_id}: object {index} has an empty class name")
            if box.xmax > self.image_width or box.ymax > self.image_height:
                raise ValidationError(
                    f"{self.image_id}: object {index} box "
                    f"({box.xmin}, {box.ymin}, {box.xmax}, {box.ymax}) exceeds "
                    f"image bounds {self.image_width}x{self.image_height}"
                )

    @property
    def boxes(self) -> list[Box]:
        return [box for _, box in self.objects]


@dataclass
class AnnotationTable:
    """Ordered collection of per-image annotations with unique image ids."""

    rows: list[ImageAnnotation] = field(default_factory=list)

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for row in self.rows:
            if row.image_id in seen:
                raise ValidationError(f"duplicate image_id {row.image_id!r} in table")
            seen.add(row.image_id)

    @property
    def class_names(self) -> list[str]:
        """Class vocabulary in order of first appearance."""
        names: list[str] = []
        for row in self.rows:
            for class_name, _ in row.objects:
                if class_name not in names:
                    names.append(class_name)
        return names

    @property
    def n_images(self) -> int:
        return len(self.rows)

    @property
    def n_boxes(self) -> int:
        return sum(len(row.objects) for row in self.rows)


def _byte_offset(data: bytes, line: int, column: int) -> int:
    lines = data.split(b"\n")
    return sum(len(text) + 1 for text in lines[: line - 1]) + column


def _text(elem: ET.Element, path: str, source: str) -> str:
    child = elem.find(path)
    if child is None or child.text is None or not child.text.strip():
        raise SchemaError(f"{source}: missing required element {path!r}")
    return child.text.strip()


def _number(elem: ET.Element, path: str, source: str) -> float:
    text = _text(elem, path, source)
    try:
        return float(text)
    except ValueError:
        raise SchemaError(f"{source}: element {path!r} is not numeric: {text!r}") from None


def _parse_voc(data: bytes | str, source: str) -> tuple[ImageAnnotation, list[str]]:
    """Parse one VOC document; returns the annotation plus per-box error messages.

    Boxes that violate geometry or bounds invariants are dropped and
    reported in the error list rather than aborting the whole file.
    """
    raw = data.encode("utf-8") if isinstance(data, str) else bytes(data)
    try:
        root = ET.fromstring(raw)
    except ET.ParseError as err:
        line, column = err.position
        offset = _byte_offset(raw, line, column)
        raise ParseError(
            f"{source}: malformed XML at line {line}, column {column} (byte offset {offset})"
        ) from None

    filename = _text(root, "filename", source)
    image_width = int(_number(root, "size/width", source))
    image_height = int(_number(root, "size/height", source))
    image_id = Path(filename).stem

    objects: list[tuple[str, Box]] = []
    box_errors: list[str] = []
    for index, obj in enumerate(root.findall("object")):
        class_name = _text(obj, "name", source)
        coords = {name: _number(obj, f"bndbox/{name}", source) for name in ("xmin", "ymin", "xmax", "ymax")}
        try:
            box = Box(coords["xmin"], coords["ymin"], coords["xmax"], coords["ymax"])
            if box.xmax > image_width or box.ymax > image_height:
                raise ValidationError(
                    f"{image_id}: object {index} box exceeds image bounds "
                    f"{image_width}x{image_height}"
                )
        except ValidationError as err:
            box_errors.append(f"{source}: object {index}: {err}")
            continue
        objects.append((class_name, box))

    ann = ImageAnnotation(
        image_id=image_id,
        file_path=filename,
        image_width=image_width,
        image_height=image_height,
        objects=objects,
    )
    return ann, box_errors


def parse_voc_xml(data: bytes | str, source: str = "<xml>") -> ImageAnnotation:
    """Parse one Pascal VOC document; any invalid box aborts with an error."""
    ann, box_errors = _parse_voc(data, source)
    if box_errors:
        raise ValidationError(box_errors[0])
    return ann


def _open_text(stream_or_path, mode: str):
    if isinstance(stream_or_path, (str, Path)):
        return open(stream_or_path, mode, encoding="utf-8", newline="")
    return stream_or_path


def read_csv(stream_or_path) -> AnnotationTable:
    """Read an annotation table from CSV (path or text stream)."""
    stream = _open_text(stream_or_path, "r")
    close = stream is not stream_or_path
    try:
        filtered = (line for line in stream if not line.startswith("#"))
        reader = csv.reader(filtered)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("CSV is empty: header row required") from None
        missing = [name for name in _REQUIRED_COLUMNS if name not in header]
        if missing:
            raise SchemaError(f"CSV header missing column(s): {', '.join(missing)}")
        col = {name: header.index(name) for name in header}
        has_height = "height" in col

        order: list[str] = []
        frames: dict[str, tuple[str, int, int]] = {}
        grouped: dict[str, list[tuple[str, Box]]] = {}
        for line_no, cells in enumerate(reader, start=2):
            if not cells:
                continue
            if len(cells) < len(header):
                raise ParseError(f"line {line_no}: expected {len(header)} cells, got {len(cells)}")

            def cell(name: str) -> str:
                return cells[col[name]].strip()

            def number(name: str) -> float:
                try:
                    return float(cell(name))
                except ValueError:
                    raise ParseError(
                        f"line {line_no}: column {name!r} is not numeric: {cell(name)!r}"
                    ) from None

            image_id = cell("image_id")
            width = int(number("width"))
            height = int(number("height")) if has_height else CANONICAL_HEIGHT
            frame = (cell("file_path"), width, height)
            if image_id not in frames:
                frames[image_id] = frame
                grouped[image_id] = []
                order.append(image_id)
            elif frames[image_id] != frame:
                raise ValidationError(
                    f"line {line_no}: image {image_id!r} repeats with a different "
                    "file path or frame size"
                )
            try:
                box = Box(number("xmin"), number("ymin"), number("xmax"), number("ymax"))
            except ValidationError as err:
                raise ValidationError(f"line {line_no}: {err}") from None
            grouped[image_id].append((cell("class"), box))

        rows = [
            ImageAnnotation(
                image_id=image_id,
                file_path=frames[image_id][0],
                image_width=frames[image_id][1],
                image_height=frames[image_id][2],
                objects=grouped[image_id],
            )
            for image_id in order
        ]
        return AnnotationTable(rows=rows)
    finally:
        if close:
            stream.close()


def write_csv(table: AnnotationTable, stream_or_path, comment: str | None = None) -> None:
    """Write a table as CSV (LF line endings, fixed column order).

    Images with zero boxes produce no rows; the per-box format cannot
    represent them.
    """
    stream = _open_text(stream_or_path, "w")
    close = stream is not stream_or_path
    try:
        if comment:
            stream.write(f"# {comment}\n")
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in table.rows:
            for class_name, box in row.objects:
                writer.writerow(
                    [
                        row.image_id,
                        row.file_path,
                        box.xmin,
                        box.xmax,
                        box.ymin,
                        box.ymax,
                        row.image_width,
                        row.image_height,
                        class_name,
                    ]
                )
    finally:
        if close:
            stream.close()


def csv_string(table: AnnotationTable, comment: str | None = None) -> str:
    buf = io.StringIO()
    write_csv(table, buf, comment=comment)
    return buf.getvalue()


def rescale_annotation(
    ann: ImageAnnotation, width: int = CANONICAL_WIDTH, height: int = CANONICAL_HEIGHT
) -> tuple[ImageAnnotation, list[str]]:
    """Rescale one image's boxes into a (width, height) frame.

    Returns the rescaled annotation and messages for boxes that collapsed
    under extreme downscaling (those are dropped).  Far edges are clamped to
    the frame to absorb float round-up.
    """
    sx = width / ann.image_width
    sy = height / ann.image_height
    objects: list[tuple[str, Box]] = []
    dropped: list[str] = []
    for index, (class_name, box) in enumerate(ann.objects):
        try:
            scaled = rescale(box, sx, sy)
            scaled = Box(scaled.xmin, scaled.ymin, min(scaled.xmax, width), min(scaled.ymax, height))
        except ValidationError as err:
            dropped.append(f"{ann.image_id}: object {index} collapsed under rescale: {err}")
            continue
        objects.append((class_name, scaled))
    rescaled = ImageAnnotation(
        image_id=ann.image_id,
        file_path=ann.file_path,
        image_width=width,
        image_height=height,
        objects=objects,
    )
    return rescaled, dropped


def rescale_table(
    table: AnnotationTable, width: int = CANONICAL_WIDTH, height: int = CANONICAL_HEIGHT
) -> AnnotationTable:
    """Rescale every image of a table into the (width, height) frame."""
    rows = []
    for ann in table.rows:
        rescaled, dropped = rescale_annotation(ann, width, height)
        if dropped:
            raise ValidationError(dropped[0])
        rows.append(rescaled)
    return AnnotationTable(rows=rows)


@dataclass(frozen=True)
class IngestReport:
    """Counts and messages summarising one directory ingest."""

    files_found: int
    files_parsed: int
    files_failed: int
    boxes_accepted: int
    boxes_rejected: int
    messages: tuple[str, ...]


@dataclass(frozen=True)
class IngestResult:
    table: AnnotationTable
    report: IngestReport


def ingest_dataset(
    root,
    width: int = CANONICAL_WIDTH,
    height: int = CANONICAL_HEIGHT,
    jobs: int = 1,
) -> IngestResult:
    """Parse every VOC XML under `root` and rescale boxes into the canonical frame.

    Unreadable or malformed files are skipped and counted; invalid boxes are
    dropped and counted; a duplicate image id across files is a hard error.
    Rows come back sorted by image_id, so results do not depend on directory
    enumeration order.
    """
    root = Path(root)
    paths = sorted(p for p in root.rglob("*.xml") if p.is_file())
    messages: list[str] = []
    files_failed = 0
    boxes_rejected = 0
    rows: list[ImageAnnotation] = []

    def parse_one(path: Path):
        return _parse_voc(path.read_bytes(), source=str(path.relative_to(root)))

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_catching(parse_one), paths))
    else:
        outcomes = [_catching(parse_one)(path) for path in paths]

    for path, outcome in zip(paths, outcomes):
        if isinstance(outcome, Exception):
            files_failed += 1
            messages.append(f"{path.relative_to(root)}: {outcome}")
            logger.warning("skipping %s: %s", path.relative_to(root), outcome)
            continue
        ann, box_errors = outcome
        boxes_rejected += len(box_errors)
        messages.extend(box_errors)
        rescaled, dropped = rescale_annotation(ann, width, height)
        boxes_rejected += len(dropped)
        messages.extend(dropped)
        rows.append(rescaled)

    rows.sort(key=lambda ann: ann.image_id)
    table = AnnotationTable(rows=rows)  # raises on duplicate image ids
    report = IngestReport(
        files_found=len(paths),
        files_parsed=len(rows),
        files_failed=files_failed,
        boxes_accepted=table.n_boxes,
        boxes_rejected=boxes_rejected,
        messages=tuple(messages),
    )
    return IngestResult(table=table, report=report)


def _catching(fn):
    def wrapped(path):
        try:
            return fn(path)
        except (ParseError, SchemaError, ValidationError, OSError) as err:
            return err

    return wrapped
