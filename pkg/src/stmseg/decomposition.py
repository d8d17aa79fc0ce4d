"""Cartoon + texture split driven by the local total variation reduction rate.

The cartoon ``u`` is a per-pixel blend of the image and its Meyer-type
low-pass version: where filtering removes most of the local variation the
pixel is treated as texture and the low-pass value is taken, elsewhere the
original value is kept.  The texture is always ``v = f - u``.
"""
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .imagecore import as_image, fft2, frequency_magnitude, gradient_magnitude, ifft2


@dataclass(frozen=True)
class DecompositionParams:
    sigma: float = 3.0
    a1: float = 0.25
    a2: float = 0.50
    ltv_floor: float = 1e-8

    def __post_init__(self):
        if not self.sigma > 0:
            raise InvalidParameterError(f"sigma must be positive, got {self.sigma}")
        if not 0 < self.a1 < self.a2 < 1:
            raise InvalidParameterError(
                f"need 0 < a1 < a2 < 1, got a1={self.a1}, a2={self.a2}")
        if not self.ltv_floor > 0:
            raise InvalidParameterError("ltv_floor must be positive")


@dataclass(frozen=True)
class Decomposition:
    cartoon: np.ndarray
    texture: np.ndarray


def meyer_lowpass_response(shape, sigma):
    """Transfer function ``1 / (1 + (2*pi*sigma*|xi|)**4)`` on a DFT grid."""
    xi = frequency_magnitude(shape)
    return 1.0 / (1.0 + (2.0 * np.pi * sigma * xi) ** 4)


def _mirror_extend(f):
    top = np.concatenate([f, f[:, ::-1]], axis=1)
    return np.concatenate([top, top[::-1, :]], axis=0)


def lowpass_meyer(f, sigma):
    """Apply the Meyer low-pass filter ``L_sigma``.

    The image is mirrored to twice its size before the Fourier product so
    the implicit periodization does not bleed opposite borders into each
    other.
    """
    f = as_image(f)
    if not sigma > 0:
        raise InvalidParameterError(f"sigma must be positive, got {sigma}")
    ext = _mirror_extend(f)
    out = ifft2(fft2(ext) * meyer_lowpass_response(ext.shape, sigma))
    return out[: f.shape[0], : f.shape[1]]


def local_total_variation(f, sigma):
    return lowpass_meyer(gradient_magnitude(f, scheme="forward"), sigma)


def ltv_reduction(f, params):
    """Relative drop of local total variation under low-pass filtering, in [0, 1]."""
    f = as_image(f)
    ltv = local_total_variation(f, params.sigma)
    ltv_smooth = local_total_variation(lowpass_meyer(f, params.sigma), params.sigma)
    rate = np.zeros_like(f)
    ok = ltv >= params.ltv_floor
    rate[ok] = (ltv[ok] - ltv_smooth[ok]) / ltv[ok]
    return np.clip(rate, 0.0, 1.0)


def soft_threshold_weight(x, a1=0.25, a2=0.50):
    """Piecewise-linear ramp: 0 below ``a1``, 1 above ``a2``. Works on arrays."""
    if not a1 < a2:
        raise InvalidParameterError(f"need a1 < a2, got {a1}, {a2}")
    w = np.clip((np.asarray(x, dtype=np.float64) - a1) / (a2 - a1), 0.0, 1.0)
    return float(w) if w.ndim == 0 else w


def _lowest_bit(values):
    """Largest power of two dividing each entry (inf where the entry is 0)."""
    mant, expo = np.frexp(np.abs(values))
    ints = (mant * 2.0**53).astype(np.int64)
    low = ints & -ints
    out = np.ldexp(low.astype(np.float64), expo - 53)
    return np.where(values == 0, np.inf, out)


def _exact_split(f, cartoon):
    """Return ``(u, f - u)`` with ``u`` adjusted so that ``u + v == f`` in floating point.

    Where the plain difference does not add back to ``f``, ``u`` is rounded
    to the finest power-of-two quantum ``q`` that keeps ``|u|/q`` and
    ``|f - u|/q`` at most 2**53.  If ``q`` divides ``f`` at that pixel (always the case for
    integer and other coarse dyadic gray levels), ``v = f - u`` and ``u + v``
    are then computed without rounding.  The change to ``u`` is below
    ``2**-52`` relative.  Pixels where ``f`` has bits finer than ``q`` cannot
    be split exactly and keep the plain difference.
    """
    u = cartoon
    v = f - u
    bad = (u + v) != f
    if np.any(bad):
        fb, ub = f[bad], u[bad]
        span = np.maximum(np.abs(ub), np.abs(fb - ub))
        _, expo = np.frexp(span)
        q = np.ldexp(1.0, expo - 53)
        ok = q <= _lowest_bit(fb)
        snapped = np.where(ok, np.round(ub / q) * q, ub)
        u = u.copy()
        u[bad] = snapped
        v = f - u
    return u, v


def _blend(f, lowpass, weight):
    cartoon, texture = _exact_split(f, weight * lowpass + (1.0 - weight) * f)
    return Decomposition(cartoon=cartoon, texture=texture)


def decompose(f, params=None):
    """Nonlinear cartoon + texture decomposition.

    Parameters
    ----------
    f : array_like
        Grayscale image.
    params : DecompositionParams, optional
        Defaults to ``sigma=3, a1=0.25, a2=0.5``.

    Returns
    -------
    Decomposition
        ``cartoon + texture`` reproduces ``f`` exactly in floating point.
    """
    params = params or DecompositionParams()
    f = as_image(f)
    weight = soft_threshold_weight(ltv_reduction(f, params), params.a1, params.a2)
    return _blend(f, lowpass_meyer(f, params.sigma), weight)


def decompose_linear(f, sigma=3.0):
    f = as_image(f)
    return _blend(f, lowpass_meyer(f, sigma), np.ones_like(f))
