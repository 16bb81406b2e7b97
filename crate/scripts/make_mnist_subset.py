#!/usr/bin/env python3
"""Convert the 10,000 MNIST digits shipped in the npm `mnist` package (v1.1.0)
into gzipped IDX files: 8,000 training and 2,000 test images.

Usage: make_mnist_subset.py <path/to/npm/package> <output dir>

Pixels are stored in the package as round(p / 255, 3), which is invertible
for p in 0..255, so the original 8-bit values are recovered exactly.
"""
import gzip
import json
import os
import struct
import sys

import numpy as np

SEED = 20240611
N_TRAIN = 8000


def write_idx(path, magic, dims, payload):
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(struct.pack(">I", magic))
        for d in dims:
            f.write(struct.pack(">I", d))
        f.write(payload)


def main():
    pkg, out = sys.argv[1], sys.argv[2]
    images, labels = [], []
    for digit in range(10):
        with open(os.path.join(pkg, "src", "digits", f"{digit}.json")) as f:
            data = np.asarray(json.load(f)["data"], dtype=np.float64).reshape(-1, 784)
        px = np.rint(data * 255.0).astype(np.uint8)
        assert np.array_equal(np.round(px / 255.0, 3), data), "non-invertible pixel encoding"
        images.append(px)
        labels += [digit] * len(px)
    images = np.concatenate(images)
    labels = np.asarray(labels, dtype=np.uint8)
    order = np.random.default_rng(SEED).permutation(len(labels))
    images, labels = images[order], labels[order]
    os.makedirs(out, exist_ok=True)
    for split, sl in (("train", slice(0, N_TRAIN)), ("t10k", slice(N_TRAIN, None))):
        x, y = images[sl], labels[sl]
        write_idx(os.path.join(out, f"{split}-images-idx3-ubyte.gz"), 0x803, (len(x), 28, 28), x.tobytes())
        write_idx(os.path.join(out, f"{split}-labels-idx1-ubyte.gz"), 0x801, (len(y),), y.tobytes())
        print(split, len(y), np.bincount(y, minlength=10).tolist())


if __name__ == "__main__":
    main()
