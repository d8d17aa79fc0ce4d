"""Shared numerical substrate: Fourier pair, frequency grids, Gaussian kernels,
symmetric-boundary convolution, gradients and the ``n*p``-th entry percentile.

Images are plain 2D ``float64`` numpy arrays indexed ``[row, col]``.  Spectra
are complex arrays with the DC bin at ``[0, 0]`` (numpy's unshifted layout).
"""
import math

import numpy as np
from scipy import ndimage

from .errors import InvalidInputError, InvalidParameterError

# Guards ceil() against products such as 100 * 0.92 == 92.00000000000001.
_CEIL_DECIMALS = 9


def safe_ceil(x):
    """Ceiling that ignores floating-point noise below 1e-9."""
    return int(math.ceil(round(float(x), _CEIL_DECIMALS)))


def as_image(img, name="image"):
    """Validate and convert to a finite 2D float64 array."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidInputError(f"{name} must be 2D, got shape {arr.shape}")
    if arr.size == 0:
        raise InvalidInputError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains NaN or Inf")
    return arr


def fft2(img):
    """Unnormalized forward 2D DFT."""
    arr = np.asarray(img)
    if arr.ndim != 2 or arr.size == 0:
        raise InvalidInputError(f"fft2 needs a non-empty 2D grid, got shape {arr.shape}")
    return np.fft.fft2(arr)


def ifft2(spec, real=True):
    """Inverse of :func:`fft2` (carries the ``1/(N*M)`` factor).

    With ``real=True`` the imaginary residue is discarded.
    """
    spec = np.asarray(spec)
    if spec.ndim != 2 or spec.size == 0:
        raise InvalidInputError(f"ifft2 needs a non-empty 2D grid, got shape {spec.shape}")
    out = np.fft.ifft2(spec)
    return out.real if real else out


def frequency_grid(shape):
    """Cycles-per-pixel coordinates ``(xi_x, xi_y)`` of every DFT bin.

    ``xi_x`` varies along columns and ``xi_y`` along rows; both lie in
    ``[-1/2, 1/2)``.  Only ``|xi|`` and the line through the bin are ever used,
    so the sign convention of the Nyquist bin is immaterial.
    """
    rows, cols = shape
    xi_y = np.fft.fftfreq(rows)[:, None]
    xi_x = np.fft.fftfreq(cols)[None, :]
    return np.broadcast_to(xi_x, shape), np.broadcast_to(xi_y, shape)


def frequency_magnitude(shape):
    xi_x, xi_y = frequency_grid(shape)
    return np.hypot(xi_x, xi_y)


def gaussian_kernel(std, truncation=3.0):
    """Sampled 2D Gaussian of radius ``ceil(truncation*std)``, summing to 1."""
    if not std > 0:
        raise InvalidParameterError(f"std must be positive, got {std}")
    if truncation < 1:
        raise InvalidParameterError(f"truncation must be >= 1, got {truncation}")
    radius = max(1, safe_ceil(truncation * std))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-0.5 * (x / std) ** 2)
    g /= g.sum()
    kernel = np.outer(g, g)
    return kernel / kernel.sum()


def convolve(img, kernel, boundary="symmetric"):
    """2D convolution with mirror padding (``d c b a | a b c d``)."""
    if boundary != "symmetric":
        raise InvalidParameterError(f"unsupported boundary mode {boundary!r}")
    img = as_image(img)
    kernel = np.asarray(kernel, dtype=np.float64)
    if kernel.ndim != 2 or kernel.shape[0] % 2 == 0 or kernel.shape[1] % 2 == 0:
        raise InvalidParameterError("kernel must be 2D with odd side lengths")
    # scipy's "reflect" is the half-sample symmetric extension.
    return ndimage.convolve(img, kernel, mode="reflect")


def gaussian_blur(img, std, truncation=3.0):
    """Convolution with :func:`gaussian_kernel`, computed separably.

    Identical weights to ``convolve(img, gaussian_kernel(std, truncation))``
    because the normalized 2D kernel is the outer product of the normalized
    1D one.
    """
    img = as_image(img)
    radius = max(1, safe_ceil(truncation * std))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-0.5 * (x / std) ** 2)
    g /= g.sum()
    out = ndimage.convolve1d(img, g, axis=0, mode="reflect")
    return ndimage.convolve1d(out, g, axis=1, mode="reflect")


def gradient_magnitude(img, scheme="central"):
    """Pointwise ``sqrt(Dx**2 + Dy**2)``.

    ``scheme="central"`` uses central differences inside and one-sided ones
    on the border.  ``scheme="forward"`` uses forward differences, with a
    backward difference on the last row/column; unlike the central stencil
    it responds to period-2 oscillations.
    """
    img = as_image(img)
    if min(img.shape) < 2:
        raise InvalidInputError(f"gradient needs both sides >= 2, got {img.shape}")
    if scheme == "central":
        dy, dx = np.gradient(img)
    elif scheme == "forward":
        dx = np.empty_like(img)
        dy = np.empty_like(img)
        dx[:, :-1] = img[:, 1:] - img[:, :-1]
        dx[:, -1] = img[:, -1] - img[:, -2]
        dy[:-1, :] = img[1:, :] - img[:-1, :]
        dy[-1, :] = img[-1, :] - img[-2, :]
    else:
        raise InvalidParameterError(f"unknown gradient scheme {scheme!r}")
    return np.hypot(dx, dy)


def percentile_value(values, p):
    """Entry ``ceil(n*p)`` (1-based, clamped to ``[1, n]``) of the sorted values."""
    vals = np.asarray(values, dtype=np.float64).ravel()
    if vals.size == 0:
        raise InvalidInputError("percentile of an empty list")
    if not 0 < p < 1:
        raise InvalidParameterError(f"p must lie in (0, 1), got {p}")
    idx = min(max(safe_ceil(vals.size * p), 1), vals.size)
    return float(np.partition(vals, idx - 1)[idx - 1])
