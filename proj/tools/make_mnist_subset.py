#!/usr/bin/env python3
"""Cut the bundled MNIST subset out of the original IDX files.

Writes the first N training digits (default 10000) and the full 10k test
set, unchanged apart from the count field of the training headers, then
packs them as data/mnist-subset.tar.gz with a reproducible tar layout.

usage: make_mnist_subset.py MNIST_DIR OUT_TARBALL [N]
"""
import io
import os
import struct
import sys
import tarfile


def read(path):
    with open(path, "rb") as f:
        return f.read()


def cut_images(blob, count):
    magic, total, rows, cols = struct.unpack(">IIII", blob[:16])
    assert magic == 0x00000803 and count <= total
    return struct.pack(">IIII", magic, count, rows, cols) + blob[16:16 + count * rows * cols]


def cut_labels(blob, count):
    magic, total = struct.unpack(">II", blob[:8])
    assert magic == 0x00000801 and count <= total
    return struct.pack(">II", magic, count) + blob[8:8 + count]


def main():
    src, out = sys.argv[1], sys.argv[2]
    count = int(sys.argv[3]) if len(sys.argv) > 3 else 10000
    files = {
        "train-images-idx3-ubyte": cut_images(read(os.path.join(src, "train-images-idx3-ubyte")), count),
        "train-labels-idx1-ubyte": cut_labels(read(os.path.join(src, "train-labels-idx1-ubyte")), count),
        "t10k-images-idx3-ubyte": read(os.path.join(src, "t10k-images-idx3-ubyte")),
        "t10k-labels-idx1-ubyte": read(os.path.join(src, "t10k-labels-idx1-ubyte")),
    }
    with tarfile.open(out, "w:gz") as tar:
        for name in sorted(files):
            info = tarfile.TarInfo("mnist/" + name)
            info.size = len(files[name])
            info.mode = 0o644
            tar.addfile(info, io.BytesIO(files[name]))


if __name__ == "__main__":
    main()
