"""Binary PPM (P6) writer for basin label slices."""

from __future__ import annotations

import numpy as np

from .ergodic import TORUS0, TORUS1, UNDECIDED

PALETTE = {
    TORUS0: (30, 90, 200),
    TORUS1: (200, 60, 30),
    UNDECIDED: (128, 128, 128),
}


def ppm_bytes(labels: np.ndarray, palette: dict = PALETTE) -> bytes:
    """Encode a 2D label array as binary PPM, rows top to bottom."""
    labels = np.asarray(labels)
    if labels.ndim != 2 or labels.size == 0:
        raise ValueError("labels must be a nonempty 2D array")
    h, w = labels.shape
    lut = np.zeros((max(palette) + 1, 3), dtype=np.uint8)
    for k, rgb in palette.items():
        lut[k] = rgb
    if labels.min() < 0 or labels.max() > max(palette):
        raise ValueError("label value outside the palette")
    rgb = lut[labels]
    return f"P6\n{w} {h}\n255\n".encode("ascii") + rgb.tobytes()


def write_ppm(labels: np.ndarray, path: str, palette: dict = PALETTE) -> None:
    data = ppm_bytes(labels, palette)
    with open(path, "wb") as fh:
        fh.write(data)
