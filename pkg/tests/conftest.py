import numpy as np
import pytest
from hypothesis import strategies as st

from signkit.annotations import AnnotationTable, ImageAnnotation
from signkit.geometry import Box


@st.composite
def int_boxes(draw, size: int = 64) -> Box:
    xmin = draw(st.integers(0, size - 1))
    xmax = draw(st.integers(xmin + 1, size))
    ymin = draw(st.integers(0, size - 1))
    ymax = draw(st.integers(ymin + 1, size))
    return Box(xmin, ymin, xmax, ymax)


@st.composite
def annotation_tables(draw) -> AnnotationTable:
    n_images = draw(st.integers(1, 4))
    rows = []
    for i in range(n_images):
        width = draw(st.integers(50, 2000))
        height = draw(st.integers(50, 1200))
        objects = []
        for _ in range(draw(st.integers(1, 5))):
            xmin = draw(st.integers(0, width - 2))
            xmax = draw(st.integers(xmin + 1, width))
            ymin = draw(st.integers(0, height - 2))
            ymax = draw(st.integers(ymin + 1, height))
            name = draw(st.sampled_from(["signboard", "banner", "door"]))
            objects.append((name, Box(xmin, ymin, xmax, ymax)))
        rows.append(
            ImageAnnotation(
                image_id=f"img{i:03d}",
                file_path=f"img{i:03d}.jpg",
                image_width=width,
                image_height=height,
                objects=objects,
            )
        )
    return AnnotationTable(rows=rows)


VOC_ONE_OBJECT = """<annotation>
  <folder>images</folder>
  <filename>street_001.jpg</filename>
  <path>/data/images/street_001.jpg</path>
  <source><database>Unknown</database></source>
  <size><width>1000</width><height>600</height><depth>3</depth></size>
  <segmented>0</segmented>
  <object>
    <name>signboard</name>
    <pose>Unspecified</pose>
    <truncated>0</truncated>
    <difficult>0</difficult>
    <bndbox><xmin>48</xmin><ymin>59</ymin><xmax>420</xmax><ymax>180</ymax></bndbox>
  </object>
</annotation>
"""

VOC_NO_OBJECTS = """<annotation>
  <filename>street_002.jpg</filename>
  <size><width>800</width><height>600</height><depth>3</depth></size>
</annotation>
"""


def make_voc(image_id: str, width: int, height: int, boxes) -> str:
    objects = "".join(
        "  <object><name>{}</name><bndbox>"
        "<xmin>{}</xmin><ymin>{}</ymin><xmax>{}</xmax><ymax>{}</ymax>"
        "</bndbox></object>\n".format(name, x0, y0, x1, y1)
        for name, (x0, y0, x1, y1) in boxes
    )
    return (
        "<annotation>\n"
        f"  <filename>{image_id}.jpg</filename>\n"
        f"  <size><width>{width}</width><height>{height}</height><depth>3</depth></size>\n"
        f"{objects}"
        "</annotation>\n"
    )


@pytest.fixture
def voc_dir(tmp_path):
    """Five hand-written VOC files: 7 boxes total, one file with none."""
    root = tmp_path / "voc"
    root.mkdir()
    (root / "street_001.xml").write_text(VOC_ONE_OBJECT)
    (root / "street_002.xml").write_text(VOC_NO_OBJECTS)
    (root / "a.xml").write_text(
        make_voc("a", 1000, 600, [("signboard", (10, 10, 200, 100)), ("signboard", (300, 50, 450, 120))])
    )
    (root / "b.xml").write_text(
        make_voc("b", 2000, 1200, [("signboard", (100, 100, 300, 300)), ("banner", (500, 500, 900, 700))])
    )
    (root / "c.xml").write_text(make_voc("c", 640, 480, [("signboard", (0, 0, 640, 480))]))
    return root


def constant_image(width: int, height: int, value, channels: int = 3) -> np.ndarray:
    return np.full((height, width, channels), value, dtype=np.uint8)
