"""Meyer-type empirical curvelet filter bank built on a detected partition.

Every window is a real multiplier on the Cartesian DFT grid.  The low-pass
window is radial; each detail window is the product of a radial window
(between two consecutive scales of its sector) and an angular window (between
two consecutive angles).  Transitions use ``cos/sin(pi/2 * B(t))`` with the
degree-7 polynomial ``B``, so squared windows sum to one at every frequency
and the analysis/synthesis pair is a tight frame.
"""
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, InvalidParameterError
from .imagecore import as_image, fft2, frequency_grid, ifft2
from .spectral_partition import (GAMMA_FRACTION, DetectionParams, SpectrumPartition,
                                 detect_spectrum_partition)

ANGLE_FRACTION = 0.45


def transition_B(t):
    """``35t^4 - 84t^5 + 70t^6 - 20t^7`` on ``[0, 1]``, clamped to 0 and 1 outside."""
    t = np.clip(np.asarray(t, dtype=np.float64), 0.0, 1.0)
    out = t**4 * (35 - 84 * t + 70 * t**2 - 20 * t**3)
    return float(out) if out.ndim == 0 else out


def _rise(x, edge, half_width):
    # sin(pi/2 B(.)) rising from 0 at edge - half_width to 1 at edge + half_width.
    return np.sin(0.5 * np.pi * transition_B((x - edge + half_width) / (2 * half_width)))


def _fall(x, edge, half_width):
    return np.cos(0.5 * np.pi * transition_B((x - edge + half_width) / (2 * half_width)))


def _lowpass(w, omega1, gamma):
    w = np.abs(np.asarray(w, dtype=np.float64))
    return _fall(w, omega1, gamma * omega1)


def _band(w, lo, hi, gamma):
    """Radial window between ``lo`` and ``hi``; ``hi=None`` means open-ended."""
    w = np.abs(np.asarray(w, dtype=np.float64))
    out = _rise(w, lo, gamma * lo)
    if hi is not None:
        out = out * _fall(w, hi, gamma * hi)
    return out


def gamma_bound(boundaries, upper=math.pi):
    """Smallest ``(b - a) / (b + a)`` over consecutive boundaries, ``upper`` closing the list."""
    edges = list(boundaries) + ([upper] if upper is not None else [])
    if len(edges) < 2:
        return math.inf
    return min((b - a) / (b + a) for a, b in zip(edges[:-1], edges[1:]))


def build_1d_filterbank(boundaries, gamma, omega):
    """Empirical wavelet windows ``[phi_1, psi_1, ..., psi_{N-1}]`` sampled at ``omega``.

    Parameters
    ----------
    boundaries : sequence of float
        ``0 < omega_1 < ... < omega_{N-1} <= pi``.
    gamma : float
        Transition ratio; must satisfy the non-overlap bound.
    omega : array_like
        Frequencies (rad/sample) to evaluate at; only ``|omega|`` matters.
    """
    bounds = [float(b) for b in boundaries]
    if not bounds or bounds[0] <= 0 or bounds[-1] > math.pi or np.any(np.diff(bounds) <= 0):
        raise InvalidParameterError("boundaries must increase strictly within (0, pi]")
    if not 0 < gamma < gamma_bound(bounds, upper=None) or gamma >= 1:
        raise InvalidParameterError(f"gamma={gamma} lets transition bands overlap")
    omega = np.asarray(omega, dtype=np.float64)
    windows = [_lowpass(omega, bounds[0], gamma)]
    for n, lo in enumerate(bounds):
        hi = bounds[n + 1] if n + 1 < len(bounds) else None
        windows.append(_band(omega, lo, hi, gamma))
    return windows


@dataclass(frozen=True)
class TransitionSpec:
    gamma: float
    delta_theta: float

    @classmethod
    def auto(cls, part):
        """Widest admissible transitions, scaled back by fixed safety fractions."""
        gamma = GAMMA_FRACTION * min(gamma_bound(row) for row in part.scales)
        widths = [hi - lo for lo, hi in map(part.sector_bounds, range(part.n_sectors))]
        return cls(gamma=gamma, delta_theta=ANGLE_FRACTION * min(widths))

    def validate(self, part):
        bound = min(gamma_bound(row) for row in part.scales)
        if not 0 < self.gamma <= bound:
            raise InvalidParameterError(
                f"gamma={self.gamma} outside (0, {bound:.6g}]: radial transitions overlap")
        if part.n_sectors > 1:
            widths = [hi - lo for lo, hi in map(part.sector_bounds, range(part.n_sectors))]
            if not 0 < self.delta_theta <= 0.5 * min(widths):
                raise InvalidParameterError(
                    f"delta_theta={self.delta_theta} exceeds half the narrowest sector")


def radial_window(omega_mag, m, n, part, gamma):
    """Radial window of wedge ``n`` (0-based) in sector ``m``; the outermost is open-ended."""
    row = part.scales[m]
    lo = row[n]
    hi = row[n + 1] if n + 1 < len(row) else None
    return _band(omega_mag, lo, hi, gamma)


def angular_window(theta, m, part, delta_theta):
    """Angular window of sector ``m``, ``pi``-periodic in ``theta``.

    Equals one for a single sector.
    """
    theta = np.asarray(theta, dtype=np.float64)
    if part.n_sectors == 1:
        out = np.ones_like(theta)
        return float(out) if out.ndim == 0 else out
    lo, hi = part.sector_bounds(m)
    # Unwrap into [lo - delta_theta, lo - delta_theta + pi).
    t = lo - delta_theta + np.mod(theta - lo + delta_theta, np.pi)
    rise = _rise(t, lo, delta_theta)
    fall = np.where(t >= hi - delta_theta, _fall(t, hi, delta_theta), 1.0)
    out = np.where(t <= hi + delta_theta, rise * fall, 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class CurveletFilterBank:
    lowpass: np.ndarray
    wedges: tuple
    labels: tuple
    partition: SpectrumPartition
    transition: TransitionSpec

    @property
    def shape(self):
        return self.lowpass.shape

    def squared_sum(self):
        return self.lowpass**2 + sum(w**2 for w in self.wedges)


@dataclass(frozen=True)
class CoefficientSet:
    approx: np.ndarray
    details: tuple
    labels: tuple


def polar_frequency_grid(shape):
    """``(|omega|, theta)`` of every DFT bin; ``|omega| = pi`` on the Nyquist
    lines and ``theta = atan2(omega_y, omega_x) mod pi``."""
    xi_x, xi_y = frequency_grid(shape)
    wx, wy = 2 * np.pi * xi_x, 2 * np.pi * xi_y
    return np.hypot(wx, wy), np.mod(np.arctan2(wy, wx), np.pi)


def _hermitian(w):
    # Window at -k (index negation); equals w except on Nyquist lines.
    mirror = np.roll(w[::-1, ::-1], 1, axis=(0, 1))
    return np.sqrt(0.5 * (w**2 + mirror**2))


def build_filter_bank(part, shape, transition=None):
    """Sample the low-pass and every wedge window on the DFT grid of ``shape``.

    ``transition`` defaults to :meth:`TransitionSpec.auto`.  Each window is
    replaced by ``sqrt((W(k)^2 + W(-k)^2) / 2)``, which only changes the
    Nyquist lines, so every window is even and real images give real
    coefficients without breaking the squared partition of unity.

    Raises
    ------
    InvalidParameterError
        If a radial transition is narrower than one frequency bin.
    """
    rows, cols = shape
    if rows < 2 or cols < 2:
        raise InvalidInputError(f"filter bank needs both sides >= 2, got {shape}")
    transition = transition or TransitionSpec.auto(part)
    transition.validate(part)
    bin_width = 2 * math.pi / max(rows, cols)
    narrowest = 2 * transition.gamma * part.first_scale
    if narrowest < bin_width:
        raise InvalidParameterError(
            f"partition too fine for a {rows}x{cols} grid: radial transition "
            f"{narrowest:.4g} rad/px is narrower than one bin ({bin_width:.4g})")
    rmag, theta = polar_frequency_grid(shape)
    lowpass = _hermitian(_lowpass(rmag, part.first_scale, transition.gamma))
    wedges, labels = [], []
    for m in range(part.n_sectors):
        ang = angular_window(theta, m, part, transition.delta_theta)
        for n in range(len(part.scales[m])):
            wedges.append(_hermitian(radial_window(rmag, m, n, part, transition.gamma) * ang))
            labels.append((m, n))
    return CurveletFilterBank(lowpass=lowpass, wedges=tuple(wedges), labels=tuple(labels),
                              partition=part, transition=transition)


def ect_forward(v, bank):
    """Filter ``v`` with every window: ``ifft2(fft2(v) * W)`` (windows are real)."""
    v = as_image(v, "v")
    if v.shape != bank.shape:
        raise InvalidInputError(f"image shape {v.shape} does not match bank {bank.shape}")
    spec = fft2(v)
    approx = ifft2(spec * bank.lowpass)
    details = tuple(ifft2(spec * w) for w in bank.wedges)
    return CoefficientSet(approx=approx, details=details, labels=bank.labels)


def ect_inverse(coeffs, bank):
    """Synthesis: ``ifft2(sum_k fft2(c_k) * W_k)``; exact inverse of :func:`ect_forward`."""
    if (len(coeffs.details) != len(bank.wedges) or tuple(coeffs.labels) != bank.labels
            or np.shape(coeffs.approx) != bank.shape):
        raise InvalidInputError("coefficients were not produced by this filter bank")
    total = fft2(coeffs.approx) * bank.lowpass
    for band, w in zip(coeffs.details, bank.wedges):
        if np.shape(band) != bank.shape:
            raise InvalidInputError("coefficient band shape does not match the bank")
        total = total + fft2(band) * w
    return ifft2(total)


def modified_ect(v, params=None):
    """Detect the partition of ``v``'s spectrum, build its bank and analyse ``v``.

    Returns
    -------
    (SpectrumPartition, CurveletFilterBank, CoefficientSet)
    """
    v = as_image(v, "v")
    part, _ = detect_spectrum_partition(v, params or DetectionParams())
    bank = build_filter_bank(part, v.shape)
    return part, bank, ect_forward(v, bank)


def save_coefficients(coeffs, bank, directory):
    """Write each band as raw little-endian float64 plus ``manifest.json``."""
    os.makedirs(directory, exist_ok=True)
    rows, cols = bank.shape
    bands = [("approx", None, coeffs.approx)]
    bands += [(f"detail_m{m}_n{n}", (m, n), band)
              for (m, n), band in zip(coeffs.labels, coeffs.details)]
    entries = []
    for name, label, band in bands:
        fname = name + ".f64"
        np.ascontiguousarray(band, dtype="<f8").tofile(os.path.join(directory, fname))
        entries.append({"file": fname, "wedge": list(label) if label else None})
    manifest = {"rows": rows, "cols": cols, "dtype": "float64-le", "order": "row-major",
                "partition": bank.partition.to_dict(), "gamma": bank.transition.gamma,
                "delta_theta": bank.transition.delta_theta, "bands": entries}
    with open(os.path.join(directory, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)


def load_coefficients(directory):
    """Read a directory written by :func:`save_coefficients`.

    Returns
    -------
    (CoefficientSet, dict)
        The coefficients and the parsed manifest.
    """
    with open(os.path.join(directory, "manifest.json")) as fh:
        manifest = json.load(fh)
    shape = (manifest["rows"], manifest["cols"])

    def read(entry):
        data = np.fromfile(os.path.join(directory, entry["file"]), dtype="<f8")
        if data.size != shape[0] * shape[1]:
            raise InvalidInputError(f"{entry['file']}: wrong size")
        return data.reshape(shape)

    entries = manifest["bands"]
    details = tuple(read(e) for e in entries[1:])
    labels = tuple(tuple(e["wedge"]) for e in entries[1:])
    return CoefficientSet(approx=read(entries[0]), details=details, labels=labels), manifest
