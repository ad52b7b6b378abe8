#!/usr/bin/env python3
"""Generate the planted synthetic VOC dataset (XML + PNG) for pipeline runs.

Example:
    python scripts/make_synthetic_dataset.py --out data/synth --seed 5
"""

import argparse

from signkit.synthetic import planted_table, write_voc_dataset


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--per-cluster", type=int, default=50, help="boxes per planted shape cluster")
    parser.add_argument("--no-images", action="store_true", help="write only the XML annotations")
    args = parser.parse_args()

    table = planted_table(seed=args.seed, per_cluster=args.per_cluster)
    write_voc_dataset(table, args.out, render=not args.no_images, seed=args.seed)
    print(f"wrote {table.n_images} image(s), {table.n_boxes} box(es) to {args.out}")


if __name__ == "__main__":
    main()
