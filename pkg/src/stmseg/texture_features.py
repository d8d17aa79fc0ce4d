"""Per-pixel local energy of curvelet detail subbands, stacked into a feature matrix."""
import json
import math
import os
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import InvalidInputError, InvalidParameterError
from .imagecore import as_image, safe_ceil


@dataclass(frozen=True)
class FeatureMatrix:
    """``data[i, j]``: energy of subband ``columns[j]`` at pixel ``i`` (row-major)."""
    data: np.ndarray
    columns: tuple
    radii: tuple
    shape: tuple

    def save(self, path_stem):
        """Write ``<stem>.f64`` (row-major little-endian float64) and ``<stem>.json``."""
        np.ascontiguousarray(self.data, dtype="<f8").tofile(path_stem + ".f64")
        manifest = {"rows": int(self.data.shape[0]), "cols": int(self.data.shape[1]),
                    "image_shape": list(self.shape), "dtype": "float64-le",
                    "columns": [list(c) if isinstance(c, tuple) else c for c in self.columns],
                    "radii": list(self.radii), "file": os.path.basename(path_stem) + ".f64"}
        with open(path_stem + ".json", "w") as fh:
            json.dump(manifest, fh, indent=2)

    @classmethod
    def load(cls, path_stem):
        with open(path_stem + ".json") as fh:
            manifest = json.load(fh)
        data = np.fromfile(path_stem + ".f64", dtype="<f8")
        data = data.reshape(manifest["rows"], manifest["cols"])
        columns = tuple(tuple(c) if isinstance(c, list) else c for c in manifest["columns"])
        return cls(data=data, columns=columns, radii=tuple(manifest["radii"]),
                   shape=tuple(manifest["image_shape"]))


def window_radius(omega):
    """Half-width ``ceil(pi / omega)`` (at least 1) of the energy window."""
    if not omega > 0:
        raise InvalidParameterError(f"omega must be positive, got {omega}")
    return max(1, safe_ceil(math.pi / omega))


def local_energy(subband, r):
    """L2 norm over the ``(2r+1)^2`` window around each pixel, divided by the
    window's pixel count.  Borders use symmetric padding."""
    subband = as_image(subband, "subband")
    if int(r) != r or r < 1:
        raise InvalidParameterError(f"radius must be an integer >= 1, got {r}")
    size = 2 * int(r) + 1
    area = size * size
    box_sum = ndimage.uniform_filter(subband**2, size=size, mode="reflect") * area
    return np.sqrt(np.maximum(box_sum, 0.0)) / area


def feature_matrix(coeffs, part, include_approx=False):
    """One column per detail subband ``(m, n)``, radius from the wedge's inner scale.

    With ``include_approx`` the low-pass band is appended as a last column
    (labelled ``"approx"``) using the radius of ``omega_1``.
    """
    if len(coeffs.details) != len(coeffs.labels):
        raise InvalidInputError("coefficient labels do not match the subbands")
    if not coeffs.details and not include_approx:
        raise InvalidInputError("no detail subbands to build features from")
    cols, labels, radii = [], [], []
    for (m, n), band in zip(coeffs.labels, coeffs.details):
        r = window_radius(part.scales[m][n])
        cols.append(local_energy(band, r).ravel())
        labels.append((m, n))
        radii.append(r)
    if include_approx:
        r = window_radius(part.first_scale)
        cols.append(local_energy(coeffs.approx, r).ravel())
        labels.append("approx")
        radii.append(r)
    shape = np.shape(coeffs.approx)
    return FeatureMatrix(data=np.column_stack(cols), columns=tuple(labels),
                         radii=tuple(radii), shape=tuple(shape))
