"""Command-line pipeline: ingest -> aras -> ore -> coverage, plus eval.

Each stage reads the previous stage's file artifacts, so stages can be
re-run, tested, and consumed independently.  Option precedence is
command-line flags over config file (a flat JSON object) over built-in
defaults.  Every JSON artifact carries a ``run`` block with the tool
version, a hash of the algorithmic options, and the seed; reruns with
identical inputs and seed are byte-identical.

Exit codes: 0 success (warnings allowed), 1 invalid input, 2 internal error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from . import __version__
from .annotations import (
    CANONICAL_HEIGHT,
    CANONICAL_WIDTH,
    ingest_dataset,
    read_csv,
    rescale_table,
    write_csv,
)
from .aras import derive_spec, read_spec, write_spec
from .anchors import coverage_recall, default_spec, generate_anchors
from .errors import ToolkitError, ValidationError
from .evaluation import evaluate, read_predictions, write_report
from .ore import build_corpus

logger = logging.getLogger(__name__)

ENV_OUT_DIR = "SIGNKIT_OUT_DIR"


@dataclass
class RunConfig:
    """Resolved options for one command invocation; defaults are the stock values."""

    root: str | None = None
    manifest: str | None = None
    images: str | None = None
    out: str | None = None
    frame_width: int = CANONICAL_WIDTH
    frame_height: int = CANONICAL_HEIGHT
    k: int = 3
    seed: int = 0
    margin: float = 10.0
    window: int = 224
    ore_stride: int = 112
    anchor_stride: int = 16
    total: int = 20000
    mode: str = "height_scale"
    iou: float = 0.7
    max_out: int = 300
    ap_mode: str = "allpoint"
    jobs: int = 1

    # fields that never influence artifact contents, excluded from the config hash
    _PATH_FIELDS = ("root", "manifest", "images", "out", "jobs")

    def hash(self) -> str:
        payload = {
            key: value
            for key, value in asdict(self).items()
            if key not in self._PATH_FIELDS
        }
        blob = json.dumps(payload, sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:16]

    def run_block(self) -> dict:
        return {"tool_version": __version__, "config_hash": self.hash(), "seed": self.seed}


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    file_values: dict = {}
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            file_values = json.load(fh)
        if not isinstance(file_values, dict):
            raise ValidationError("config file must be a flat JSON object")
    valid = {f.name for f in fields(RunConfig)}
    for key, value in file_values.items():
        if key not in valid:
            raise ValidationError(f"unknown config key {key!r}")
        setattr(cfg, key, value)
    for key in valid:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            setattr(cfg, key, flag_value)
    if cfg.out is None:
        cfg.out = os.environ.get(ENV_OUT_DIR)
    return cfg


def _out_dir(cfg: RunConfig) -> Path:
    if not cfg.out:
        raise ValidationError(f"no output location: pass --out or set {ENV_OUT_DIR}")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, doc: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _parse_frame(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise ValidationError(f"frame must look like 1000x600, got {text!r}") from None


def cmd_ingest(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    if args.frame:
        cfg.frame_width, cfg.frame_height = _parse_frame(args.frame)
    if not cfg.root:
        raise ValidationError("ingest requires --root")
    out = _out_dir(cfg)
    result = ingest_dataset(cfg.root, cfg.frame_width, cfg.frame_height, jobs=cfg.jobs)
    write_csv(result.table, out / "manifest.csv", comment=f"config_hash={cfg.hash()}")
    summary = {
        "files_found": result.report.files_found,
        "files_parsed": result.report.files_parsed,
        "files_failed": result.report.files_failed,
        "boxes_accepted": result.report.boxes_accepted,
        "boxes_rejected": result.report.boxes_rejected,
        "messages": list(result.report.messages),
        "frame": [cfg.frame_width, cfg.frame_height],
        "run": cfg.run_block(),
    }
    _write_json(out / "ingest_summary.json", summary)
    if result.report.files_failed or result.report.boxes_rejected:
        logger.warning(
            "ingest finished with %d failed file(s), %d rejected box(es)",
            result.report.files_failed,
            result.report.boxes_rejected,
        )
    if result.table.n_images == 0:
        logger.warning("ingest produced an empty table (no parsable XML under %s)", cfg.root)
    logger.info(
        "ingested %d image(s), %d box(es) -> %s",
        result.table.n_images,
        result.table.n_boxes,
        out / "manifest.csv",
    )
    return 0


def cmd_aras(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    if not cfg.manifest:
        raise ValidationError("aras requires --manifest")
    out = _out_dir(cfg)
    table = read_csv(cfg.manifest)
    if args.rescale:
        table = rescale_table(table, cfg.frame_width, cfg.frame_height)
    spec = derive_spec(table, k=cfg.k, seed=cfg.seed)
    write_spec(spec, out / "anchor_spec.json", extra={"run": cfg.run_block()})
    logger.info("derived %s -> %s", spec.describe(), out / "anchor_spec.json")
    return 0


def cmd_ore(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    if not cfg.manifest:
        raise ValidationError("ore requires --manifest")
    if not cfg.images:
        raise ValidationError("ore requires --images")
    out = _out_dir(cfg)
    table = read_csv(cfg.manifest)
    manifest = build_corpus(
        table,
        cfg.images,
        out,
        total=cfg.total,
        seed=cfg.seed,
        window=cfg.window,
        stride=cfg.ore_stride,
        margin=cfg.margin,
        extra_sidecar={"run": cfg.run_block()},
    )
    logger.info(
        "wrote %d patch(es) (%s) -> %s",
        len(manifest.entries),
        ", ".join(f"{k}={v}" for k, v in sorted(manifest.counts.items())),
        out / "patch_manifest.csv",
    )
    return 0


def cmd_coverage(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    if not cfg.manifest:
        raise ValidationError("coverage requires --manifest")
    if not args.spec:
        raise ValidationError("coverage requires --spec (a JSON file or 'default')")
    out = _out_dir(cfg)
    table = read_csv(cfg.manifest)
    spec = default_spec() if args.spec == "default" else read_spec(args.spec)
    grid = generate_anchors(
        spec, (cfg.frame_width, cfg.frame_height), stride=cfg.anchor_stride, mode=cfg.mode
    )
    report = coverage_recall(grid, table, iou_threshold=cfg.iou)
    doc = report.to_dict()
    doc["mode"] = cfg.mode
    doc["stride"] = cfg.anchor_stride
    doc["run"] = cfg.run_block()
    _write_json(out / "coverage.json", doc)
    logger.info(
        "coverage recall@%.2f = %.4f (mean best IoU %.4f) -> %s",
        report.threshold,
        report.recall_at_iou,
        report.mean_best_iou,
        out / "coverage.json",
    )
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    if not args.gt:
        raise ValidationError("eval requires --gt")
    if not args.preds:
        raise ValidationError("eval requires --preds")
    out = _out_dir(cfg)
    table = read_csv(args.gt)
    dets = read_predictions(args.preds)
    report = evaluate(dets, table, iou_threshold=cfg.iou, ap_mode=cfg.ap_mode)
    write_report(report, out / "eval_report.json", extra={"run": cfg.run_block()})
    logger.info("mAP@%.2f = %.4f -> %s", cfg.iou, report.map, out / "eval_report.json")
    return 0


class _Parser(argparse.ArgumentParser):
    # invalid flags are input errors: exit 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ToolkitError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="signkit", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"signkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, out_help: str) -> None:
        p.add_argument("--config", help="flat JSON file of option defaults")
        p.add_argument("--out", help=out_help)
        p.add_argument("--seed", type=int, help="random seed (default 0)")
        p.add_argument("--jobs", type=int, help="worker pool size (default 1)")

    p = sub.add_parser("ingest", help="parse a VOC XML tree into a canonical-frame manifest")
    p.add_argument("--root", help="directory containing VOC XML files")
    p.add_argument("--frame", help="canonical frame WxH (default 1000x600)")
    common(p, "output directory for manifest.csv and ingest_summary.json")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("aras", help="derive anchor ratios and scales from a manifest")
    p.add_argument("--manifest", help="annotation manifest CSV")
    p.add_argument("--k", type=int, help="cluster count (default 3)")
    p.add_argument(
        "--rescale",
        action="store_true",
        help="rescale manifest boxes into the canonical frame first",
    )
    common(p, "output directory for anchor_spec.json")
    p.set_defaults(func=cmd_aras)

    p = sub.add_parser("ore", help="mine a labeled patch corpus from a manifest")
    p.add_argument("--manifest", help="annotation manifest CSV")
    p.add_argument("--images", help="directory holding the source images")
    p.add_argument("--total", type=int, help="corpus size (default 20000)")
    p.add_argument("--window", type=int, help="sliding window size (default 224)")
    p.add_argument("--ore-stride", dest="ore_stride", type=int, help="window stride (default 112; 1 = every position)")
    p.add_argument("--margin", type=float, help="bounding-box safety margin (default 10)")
    common(p, "output directory for patches/ and patch_manifest.csv")
    p.set_defaults(func=cmd_ore)

    p = sub.add_parser("coverage", help="score how well an anchor grid covers ground truth")
    p.add_argument("--manifest", help="annotation manifest CSV")
    p.add_argument("--spec", help="anchor spec JSON, or 'default' for the stock 128/256/512 grid")
    p.add_argument("--stride", dest="anchor_stride", type=int, help="anchor lattice stride (default 16)")
    p.add_argument("--mode", choices=("height_scale", "area"), help="anchor semantics (default height_scale)")
    p.add_argument("--iou", type=float, help="coverage IoU threshold (default 0.7)")
    common(p, "output directory for coverage.json")
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("eval", help="score detections against ground truth (AP / mAP)")
    p.add_argument("--gt", help="ground-truth manifest CSV")
    p.add_argument("--preds", help="predictions CSV")
    p.add_argument("--iou", type=float, help="match IoU threshold (default 0.7)")
    p.add_argument("--ap-mode", dest="ap_mode", choices=("allpoint", "11point"), help="AP integration mode")
    common(p, "output directory for eval_report.json")
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s"
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (ToolkitError, OSError, json.JSONDecodeError) as err:
        logger.error("%s", err)
        return 1
    except Exception:  # noqa: BLE001 - anything unexpected is an internal error
        logger.exception("internal error")
        return 2


if __name__ == "__main__":
    sys.exit(main())
