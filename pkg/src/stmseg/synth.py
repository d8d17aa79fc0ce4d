"""Synthetic scenes with known cartoon and texture labels.

All images are rounded to multiples of 1/256 so that the cartoon/texture
split reproduces them exactly.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.optimize import linear_sum_assignment

from .errors import InvalidInputError

QUADRANT_VALUES = (10.0, 80.0, 160.0, 240.0)
_QUANTUM = 2.0**-8


@dataclass(frozen=True)
class SyntheticScene:
    image: np.ndarray
    cartoon_truth: np.ndarray
    texture_truth: np.ndarray


def _quantize(img):
    return np.round(img / _QUANTUM) * _QUANTUM


def _grid(size):
    if size < 4:
        raise InvalidInputError(f"scene size must be >= 4, got {size}")
    return np.mgrid[0:size, 0:size].astype(np.float64)


def quadrant_labels(size):
    y, x = _grid(size)
    return ((x >= size // 2).astype(np.int64) + 2 * (y >= size // 2)).astype(np.int64)


def band_labels(size, n_bands):
    """Vertical bands of equal width, labelled left to right."""
    _, x = _grid(size)
    return np.minimum((x * n_bands // size).astype(np.int64), n_bands - 1)


def stripe_field(size, angle_deg, period, amplitude=1.0, phase=0.0):
    """``amplitude * sin(2 pi (x cos a + y sin a) / period + phase)``; ``a`` is the
    direction of the stripes' normal (x along columns, y along rows)."""
    if not period > 0:
        raise InvalidInputError(f"period must be positive, got {period}")
    y, x = _grid(size)
    a = math.radians(angle_deg)
    return amplitude * np.sin(2 * np.pi * (x * math.cos(a) + y * math.sin(a)) / period + phase)


def four_quadrant(size=128, values=QUADRANT_VALUES):
    if len(values) != 4:
        raise InvalidInputError("four_quadrant needs exactly four values")
    labels = quadrant_labels(size)
    image = _quantize(np.asarray(values, dtype=np.float64)[labels])
    return SyntheticScene(image, labels, np.zeros_like(labels))


def ramp_bias(size=128, values=QUADRANT_VALUES, amplitude=40.0, direction="x"):
    """Four quadrants plus a linear ramp rising by ``amplitude`` across the image."""
    scene = four_quadrant(size, values)
    y, x = _grid(size)
    ramps = {"x": x / (size - 1), "y": y / (size - 1),
             "diagonal": (x + y) / (2 * (size - 1))}
    if direction not in ramps:
        raise InvalidInputError(f"unknown ramp direction {direction!r}")
    image = _quantize(scene.image + amplitude * ramps[direction])
    return SyntheticScene(image, scene.cartoon_truth, scene.texture_truth)


def stripes(size=128, angles=(0.0, 60.0), periods=(6.0, 10.0), amplitude=1.0):
    """Side-by-side vertical bands, band ``i`` filled with stripes ``angles[i], periods[i]``."""
    if len(angles) != len(periods) or not angles:
        raise InvalidInputError("angles and periods must be non-empty and of equal length")
    labels = band_labels(size, len(angles))
    image = np.zeros((size, size))
    for i, (a, p) in enumerate(zip(angles, periods)):
        image = np.where(labels == i, stripe_field(size, a, p, amplitude), image)
    return SyntheticScene(_quantize(image), np.zeros_like(labels), labels)


def composite(size=128, values=QUADRANT_VALUES, angles=(0.0, 60.0), periods=(6.0, 10.0),
              amplitude=14.0, noise_std=0.0, seed=0):
    """Quadrants + stripe bands + optional Gaussian noise."""
    if noise_std < 0:
        raise InvalidInputError("noise_std must be non-negative")
    base = four_quadrant(size, values)
    tex = stripes(size, angles, periods, amplitude)
    image = base.image + tex.image
    if noise_std > 0:
        image = image + np.random.default_rng(seed).normal(0.0, noise_std, image.shape)
    return SyntheticScene(_quantize(image), base.cartoon_truth, tex.texture_truth)


SCENES = {"four-quadrant": four_quadrant, "ramp-bias": ramp_bias,
          "stripes": stripes, "composite": composite}


def synth_generate(kind, seed=0, **params):
    """Dispatch to one of the scene builders by name (see ``SCENES``)."""
    if kind not in SCENES:
        raise InvalidInputError(f"unknown scene kind {kind!r}; choose from {sorted(SCENES)}")
    if kind == "composite":
        params.setdefault("seed", seed)
    return SCENES[kind](**params)


def matched_labels(labels, truth):
    """Relabel ``labels`` onto ``truth``'s ids by maximum-overlap matching.

    Labels left without a partner are mapped to -1.
    """
    labels = np.asarray(labels)
    truth = np.asarray(truth)
    if labels.shape != truth.shape:
        raise InvalidInputError("label maps differ in size")
    a, ia = np.unique(labels, return_inverse=True)
    b, ib = np.unique(truth, return_inverse=True)
    counts = np.zeros((a.size, b.size), dtype=np.int64)
    np.add.at(counts, (ia.ravel(), ib.ravel()), 1)
    rows, cols = linear_sum_assignment(-counts)
    lut = np.full(a.size, -1, dtype=np.int64)
    lut[rows] = b[cols]
    return lut[ia].reshape(labels.shape)


def label_accuracy(labels, truth):
    """Fraction of pixels agreeing with ``truth`` under the best relabeling."""
    return float(np.mean(matched_labels(labels, truth) == np.asarray(truth)))


def isolated_errors(labels, truth, max_size=25):
    """Mislabeled pixels lying in small error patches.

    After the best relabeling, the error mask is split into 8-connected
    components; pixels of components with at most ``max_size`` pixels are
    counted.  Large components (a wrongly assigned region) are not.
    """
    err = matched_labels(labels, truth) != np.asarray(truth)
    comp, n = ndimage.label(err, structure=np.ones((3, 3)))
    if n == 0:
        return 0
    sizes = np.bincount(comp.ravel())[1:]
    return int(sizes[sizes <= max_size].sum())
