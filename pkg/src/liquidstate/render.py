"""Portable graymap (PGM) output for pressure heatmaps, spike matrices and rasters."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from liquidstate.frames import ADC_MAX


def write_pgm(path, image: np.ndarray, maxval: int = 255) -> None:
    """Write a 2-D uint8 array as binary PGM (P5)."""
    image = np.asarray(image)
    if image.ndim != 2:
        raise ValueError("PGM images are two-dimensional")
    data = np.clip(image, 0, maxval).astype(np.uint8)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{data.shape[1]} {data.shape[0]}\n{maxval}\n".encode("ascii"))
        fh.write(data.tobytes())


def read_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while raw[pos : pos + 1].isspace():
            pos += 1
        start = pos
        while not raw[pos : pos + 1].isspace():
            pos += 1
        tokens.append(raw[start:pos].decode("ascii"))
    if tokens[0] != "P5":
        raise ValueError("not a binary PGM file")
    w, h = int(tokens[1]), int(tokens[2])
    return np.frombuffer(raw[pos + 1 : pos + 1 + w * h], dtype=np.uint8).reshape(h, w)


def heatmap(values: np.ndarray, cell: int = 8) -> np.ndarray:
    """Pressure map scaled to 0-255, each sensor drawn as a ``cell`` x ``cell`` block."""
    img = np.asarray(values, dtype=np.float64) / ADC_MAX * 255.0
    return np.kron(np.rint(img), np.ones((cell, cell))).astype(np.uint8)


def binary_image(bits: np.ndarray, cell: int = 1) -> np.ndarray:
    """Black marks (0) on white (255) for ones in a binary matrix."""
    img = np.where(np.asarray(bits) > 0, 0, 255).astype(np.uint8)
    return np.kron(img, np.ones((cell, cell), dtype=np.uint8)) if cell > 1 else img
