#!/usr/bin/env python3
"""Build a desk-scale MNIST subset in IDX format from the npm `mnist` package.

The npm package (https://www.npmjs.com/package/mnist) ships 10000 real MNIST
digits as JSON arrays of pixel intensities in [0, 1] rounded to 3 decimals.
This script rescales them to uint8, splits every 5th sample of each digit into
the test set, shuffles each split with a fixed seed and writes gzip-compressed
IDX files.

    npm pack mnist && tar xzf mnist-*.tgz
    python3 tools/make_desk_mnist.py package/src/digits data/mnist
"""
import argparse
import gzip
import json
import pathlib
import struct

import numpy as np


def write_idx(path, magic, dims, payload):
    header = struct.pack(">I", magic) + b"".join(struct.pack(">I", d) for d in dims)
    # mtime=0 keeps the archives byte-identical across rebuilds
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(header)
        f.write(payload.tobytes())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("digits_dir")
    ap.add_argument("out_dir")
    ap.add_argument("--test-every", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    train_x, train_y, test_x, test_y = [], [], [], []
    for digit in range(10):
        raw = json.loads(pathlib.Path(args.digits_dir, f"{digit}.json").read_text())["data"]
        pixels = np.rint(np.asarray(raw, dtype=np.float64) * 255.0).clip(0, 255).astype(np.uint8)
        images = pixels[: len(pixels) // 784 * 784].reshape(-1, 784)
        for i, img in enumerate(images):
            if i % args.test_every == args.test_every - 1:
                test_x.append(img)
                test_y.append(digit)
            else:
                train_x.append(img)
                train_y.append(digit)

    rng = np.random.default_rng(args.seed)
    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, xs, ys in (("train", train_x, train_y), ("t10k", test_x, test_y)):
        order = rng.permutation(len(xs))
        x = np.stack(xs)[order]
        y = np.asarray(ys, dtype=np.uint8)[order]
        write_idx(out / f"{name}-images-idx3-ubyte.gz", 0x803, (len(x), 28, 28), x)
        write_idx(out / f"{name}-labels-idx1-ubyte.gz", 0x801, (len(y),), y)
        print(f"{name}: {len(x)} samples, class counts {np.bincount(y, minlength=10).tolist()}")


if __name__ == "__main__":
    main()
