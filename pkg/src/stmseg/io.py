"""Raster input and label-map output.

Grayscale PNG/PGM/TIFF files are read through Pillow; 16-bit data is
min-max rescaled to ``[0, 255]`` (rounded to 1/256, about the 16-bit step)
and the rescaling is reported.  ``.npy`` files are read unchanged.
"""
import json
import os

import numpy as np
from PIL import Image

from .errors import ImageIOError, InvalidInputError

_QUANTUM = 2.0**-8
_16BIT_MODES = {"I;16", "I;16B", "I;16L", "I;16N", "I"}

# Colours for the companion preview of a label map.
PALETTE = np.array([
    [230, 25, 75], [60, 180, 75], [255, 225, 25], [0, 130, 200], [245, 130, 48],
    [145, 30, 180], [70, 240, 240], [240, 50, 230], [210, 245, 60], [250, 190, 190],
], dtype=np.uint8)


def load_image(path):
    """Read a single-channel raster.

    Returns
    -------
    image : ndarray of float64
    info : dict
        ``bit_depth``, and for 16-bit input the ``scale`` and ``offset`` with
        ``image = (raw - offset) * scale``.
    """
    if str(path).endswith(".npy"):
        try:
            arr = np.load(path, allow_pickle=False)
        except (OSError, ValueError) as exc:
            raise ImageIOError(f"{path}: cannot read array: {exc}") from exc
        if arr.ndim != 2:
            raise ImageIOError(f"{path}: expected a 2D array, got shape {arr.shape}")
        return arr.astype(np.float64), {"bit_depth": None, "scale": 1.0, "offset": 0.0}
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            raw = np.array(im)
    except (OSError, ValueError) as exc:
        raise ImageIOError(f"{path}: cannot read image: {exc}") from exc
    if raw.ndim != 2:
        raise ImageIOError(f"{path}: expected a single-channel image, got mode {mode}")
    if mode in ("L", "P", "1"):
        return raw.astype(np.float64), {"bit_depth": 8, "scale": 1.0, "offset": 0.0}
    if mode in _16BIT_MODES:
        raw = raw.astype(np.float64)
        lo, hi = float(raw.min()), float(raw.max())
        scale = 255.0 / (hi - lo) if hi > lo else 1.0
        image = np.round((raw - lo) * scale / _QUANTUM) * _QUANTUM
        return image, {"bit_depth": 16, "scale": scale, "offset": lo}
    raise ImageIOError(f"{path}: unsupported image mode {mode}")


def _stem(path):
    root, ext = os.path.splitext(str(path))
    return root if ext.lower() == ".png" else str(path)


def save_label_map(path, labels, color=True, metadata=None):
    """Write labels as an 8-bit PNG of raw ids plus a JSON sidecar.

    With ``color`` a palette preview is written next to it as
    ``<stem>.color.png``.  Returns the list of files written.
    """
    labels = np.asarray(labels)
    if labels.ndim != 2 or labels.size == 0:
        raise InvalidInputError("label map must be a non-empty 2D array")
    if labels.min() < 0 or labels.max() > 255 or not np.all(labels == np.round(labels)):
        raise InvalidInputError("labels must be integers in [0, 255]")
    stem = _stem(path)
    written = []
    try:
        Image.fromarray(labels.astype(np.uint8), mode="L").save(stem + ".png")
        written.append(stem + ".png")
        if color:
            rgb = PALETTE[labels.astype(np.int64) % len(PALETTE)]
            Image.fromarray(rgb, mode="RGB").save(stem + ".color.png")
            written.append(stem + ".color.png")
        sidecar = {"height": int(labels.shape[0]), "width": int(labels.shape[1]),
                   "labels": sorted(int(v) for v in np.unique(labels))}
        sidecar.update(metadata or {})
        with open(stem + ".json", "w") as fh:
            json.dump(sidecar, fh, indent=2)
        written.append(stem + ".json")
    except OSError as exc:
        raise ImageIOError(f"{path}: cannot write label map: {exc}") from exc
    return written


def load_label_map(path):
    try:
        with Image.open(path) as im:
            arr = np.array(im)
    except OSError as exc:
        raise ImageIOError(f"{path}: cannot read label map: {exc}") from exc
    if arr.ndim != 2:
        raise ImageIOError(f"{path}: label map must be single-channel")
    return arr.astype(np.int64)


def save_gray(path, image):
    """8-bit preview of a float image, clipped to ``[0, 255]``."""
    img = np.clip(np.round(np.asarray(image, dtype=np.float64)), 0, 255).astype(np.uint8)
    try:
        Image.fromarray(img, mode="L").save(path)
    except OSError as exc:
        raise ImageIOError(f"{path}: cannot write image: {exc}") from exc
