#!/usr/bin/env python3
"""Convert an MNIST CSV (784 pixel columns, label last) into IDX files.

Per class, the first --train rows go to the training split and the last
--test rows to the test split.
"""
import argparse
import gzip
import struct
from pathlib import Path

import numpy as np


def write_idx_images(path, images):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        f.write(images.astype(np.uint8).tobytes())


def write_idx_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(labels.astype(np.uint8).tobytes())


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("csv", help="MNIST CSV, optionally gzipped")
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data"))
    ap.add_argument("--train", type=int, default=400)
    ap.add_argument("--test", type=int, default=100)
    args = ap.parse_args()

    opener = gzip.open if args.csv.endswith(".gz") else open
    with opener(args.csv, "rt") as f:
        data = np.loadtxt(f, delimiter=",")
    pixels = data[:, :-1]
    labels = data[:, -1].astype(int)

    train_idx, test_idx = [], []
    for c in range(10):
        rows = np.flatnonzero(labels == c)
        if len(rows) < args.train + args.test:
            raise SystemExit(f"class {c}: {len(rows)} rows, need {args.train + args.test}")
        train_idx.extend(rows[: args.train])
        test_idx.extend(rows[len(rows) - args.test:])

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, idx in (("train", train_idx), ("t10k", test_idx)):
        idx = np.array(idx)
        write_idx_images(out / f"{name}-images-idx3-ubyte", pixels[idx])
        write_idx_labels(out / f"{name}-labels-idx1-ubyte", labels[idx])
        print(f"{name}: {len(idx)} samples -> {out}")


if __name__ == "__main__":
    main()
