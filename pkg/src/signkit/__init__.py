"""signkit: dataset engineering and evaluation toolkit for box detectors.

Pipeline stages: annotation ingest (VOC XML -> canonical CSV manifest),
anchor ratio/scale selection from box-shape clustering, patch-corpus mining
for classifier pretraining, anchor coverage scoring, and detection
evaluation (NMS, AP, mAP).
"""

from .annotations import (
    AnnotationTable,
    ImageAnnotation,
    ingest_dataset,
    parse_voc_xml,
    read_csv,
    rescale_table,
    write_csv,
)
from .aras import AnchorSpec, collect_dims, derive_spec
from .anchors import AnchorGrid, coverage_recall, default_spec, generate_anchors
from .clustering import ClusterResult, kmeans_1d
from .errors import ParseError, SchemaError, ToolkitError, ValidationError
from .evaluation import (
    DetectionRecord,
    EvalReport,
    average_precision,
    evaluate,
    match_detections,
    nms,
)
from .geometry import Box, expand, intersection_area, iou, rescale
from .imaging import FeatureTensor, PixelImage, crop, normalize, resize_area, standardize, to_gray
from .ore import PatchManifest, PatchSample, build_corpus, extract_negatives, extract_positives

__version__ = "0.1.0"

__all__ = [
    "AnnotationTable",
    "ImageAnnotation",
    "ingest_dataset",
    "parse_voc_xml",
    "read_csv",
    "rescale_table",
    "write_csv",
    "AnchorSpec",
    "collect_dims",
    "derive_spec",
    "AnchorGrid",
    "coverage_recall",
    "default_spec",
    "generate_anchors",
    "ClusterResult",
    "kmeans_1d",
    "ParseError",
    "SchemaError",
    "ToolkitError",
    "ValidationError",
    "DetectionRecord",
    "EvalReport",
    "average_precision",
    "evaluate",
    "match_detections",
    "nms",
    "Box",
    "expand",
    "intersection_area",
    "iou",
    "rescale",
    "FeatureTensor",
    "PixelImage",
    "crop",
    "normalize",
    "resize_area",
    "standardize",
    "to_gray",
    "PatchManifest",
    "PatchSample",
    "build_corpus",
    "extract_negatives",
    "extract_positives",
    "__version__",
]
