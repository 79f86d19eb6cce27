#!/usr/bin/env python3
"""Write the 5000-image MNIST subset shipped inside the mlxtend wheel as IDX files.

    pip download mlxtend --no-deps -d /tmp/whl
    python3 tools/make_mnist_subset.py /tmp/whl/mlxtend-*.whl data/mnist5k

Produces train-{images-idx3,labels-idx1}-ubyte (3000 images) and
t10k-{images-idx3,labels-idx1}-ubyte (2000 images). The split is a fixed
permutation, so reruns are byte-identical.
"""
import gzip
import random
import struct
import sys
import zipfile
from pathlib import Path

MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"
N_TRAIN = 3000


def write_idx(out_dir, prefix, rows):
    images = bytearray(struct.pack(">IIII", 0x00000803, len(rows), 28, 28))
    labels = bytearray(struct.pack(">II", 0x00000801, len(rows)))
    for pixels, label in rows:
        images.extend(pixels)
        labels.append(label)
    (out_dir / f"{prefix}-images-idx3-ubyte").write_bytes(images)
    (out_dir / f"{prefix}-labels-idx1-ubyte").write_bytes(labels)


def main():
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    wheel, out_dir = Path(sys.argv[1]), Path(sys.argv[2])
    out_dir.mkdir(parents=True, exist_ok=True)
    text = gzip.decompress(zipfile.ZipFile(wheel).read(MEMBER)).decode()
    rows = []
    for line in text.splitlines():
        values = [int(float(v)) for v in line.split(",")]
        rows.append((bytes(values[:-1]), values[-1]))
    random.Random(20240101).shuffle(rows)
    write_idx(out_dir, "train", rows[:N_TRAIN])
    write_idx(out_dir, "t10k", rows[N_TRAIN:])


if __name__ == "__main__":
    main()
