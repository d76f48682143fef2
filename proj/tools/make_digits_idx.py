#!/usr/bin/env python3
"""Writes the handwritten-digits fixture used by the image-stream tests.

Source: scikit-learn's bundled copy of the UCI optical-recognition digits
(1797 images, 8x8, 10 classes, pixel values 0..16). Pixels are rescaled to
bytes with round(v * 255 / 16). Every fifth sample of each class (by position
within the class) goes to the test split, the rest to train.

Outputs, in the target directory:
  digits-train-images-idx3-ubyte, digits-train-labels-idx1-ubyte,
  digits-test-images-idx3-ubyte,  digits-test-labels-idx1-ubyte,
  digits-reference.txt   (summary computed here, read by the C++ tests)
"""
import argparse
import pathlib
import struct

import numpy as np
from sklearn.datasets import load_digits


def write_images(path, images):
    n, rows, cols = images.shape
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, n, rows, cols))
        f.write(images.astype(np.uint8).tobytes())


def write_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(np.asarray(labels, dtype=np.uint8).tobytes())


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("out_dir", type=pathlib.Path)
    args = parser.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)

    digits = load_digits()
    images = np.rint(digits.images * 255.0 / 16.0).astype(np.uint8)
    labels = digits.target.astype(np.uint8)

    test_mask = np.zeros(len(labels), dtype=bool)
    for c in range(10):
        idx = np.flatnonzero(labels == c)
        test_mask[idx[::5]] = True

    splits = {"train": ~test_mask, "test": test_mask}
    lines = []
    for name, mask in splits.items():
        write_images(args.out_dir / f"digits-{name}-images-idx3-ubyte", images[mask])
        write_labels(args.out_dir / f"digits-{name}-labels-idx1-ubyte", labels[mask])
        sub = images[mask]
        lines.append(f"{name}.count {mask.sum()}")
        lines.append(f"{name}.rows {sub.shape[1]}")
        lines.append(f"{name}.cols {sub.shape[2]}")
        lines.append(f"{name}.pixel_sum {int(sub.astype(np.int64).sum())}")
        lines.append(f"{name}.first_label {int(labels[mask][0])}")
        hist = np.bincount(labels[mask], minlength=10)
        lines.append(f"{name}.class_counts " + " ".join(str(int(h)) for h in hist))
    (args.out_dir / "digits-reference.txt").write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
