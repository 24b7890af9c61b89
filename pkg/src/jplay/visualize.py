"""Export projection rows as 8-bit grayscale PGM images."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .data import atomic_write
from .errors import ParameterError


def scale_row(row):
    """Min-max scale to 0..255 (rounded); a constant row maps to all zeros."""
    row = np.asarray(row, dtype=float)
    lo, hi = row.min(), row.max()
    if hi == lo:
        return np.zeros(row.shape, dtype=np.uint8)
    return np.rint((row - lo) * (255.0 / (hi - lo))).astype(np.uint8)


def pgm_bytes(img):
    """Binary (P5) PGM encoding of a 2-D uint8 array."""
    img = np.asarray(img, dtype=np.uint8)
    h, w = img.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + img.tobytes(order="C")


def export_rows(matrix, height, width, out_dir, prefix):
    """Write every row of ``matrix`` as ``<prefix>_<index>.pgm``.

    Rows are reshaped row-major into ``height x width``. Returns the paths.
    """
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    if height * width != matrix.shape[1]:
        raise ParameterError(f"image size {height}x{width} does not match {matrix.shape[1]} features")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, row in enumerate(matrix):
        path = out_dir / f"{prefix}_{i:03d}.pgm"
        atomic_write(path, pgm_bytes(scale_row(row).reshape(height, width)))
        paths.append(path)
    return paths
