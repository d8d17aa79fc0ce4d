"""Empirical partition of the Fourier plane into polar wedges.

The texture spectrum is resampled on a polar grid, hard-thresholded at a
percentile of its magnitudes, and 1D boundary detection (Gaussian scale space
plus Otsu on minimum lifetimes) is run first on the angular profile and then
on the radial profile of every angular sector.  Wedges whose thresholded
mass per unit area is small are merged into their inner neighbour.

Conventions: angles live on ``[0, pi)`` (the spectrum of a real image is
symmetric under ``xi -> -xi``); radii are in radians per pixel, so the
Nyquist circle is ``r = pi``.  Sector ``m`` spans ``[theta_m, theta_{m+1})``
with the last one wrapping to ``theta_1 + pi``.  In sector ``m`` the scale
list ``omega_1 < ... < omega_Ns`` bounds the wedges ``[omega_n,
omega_{n+1})``, the last of which runs out to ``pi``; ``omega_1`` is common
to all sectors and bounds the low-pass disk.
"""
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import InvalidInputError, InvalidParameterError
from .imagecore import as_image, percentile_value, safe_ceil

# Radius given to omega_1 when the spectrum shows no radial structure at all.
DEFAULT_FIRST_SCALE = math.pi / 4
# Radial transitions are gamma * omega wide on each side of a boundary, with
# gamma this fraction of its admissibility bound (shared with the filter bank).
GAMMA_FRACTION = 0.9


@dataclass(frozen=True)
class DetectionParams:
    p: float = 0.92
    eta: float = 0.1
    scale_space_step: float = 1.0
    max_scale_space_levels: int | None = None

    def __post_init__(self):
        if not 0 < self.p < 1:
            raise InvalidParameterError(f"percentile p must lie in (0, 1), got {self.p}")
        if not 0 < self.eta < 1:
            raise InvalidParameterError(f"eta must lie in (0, 1), got {self.eta}")
        if not self.scale_space_step > 0:
            raise InvalidParameterError("scale_space_step must be positive")
        if self.max_scale_space_levels is not None and self.max_scale_space_levels < 1:
            raise InvalidParameterError("max_scale_space_levels must be >= 1")


@dataclass(frozen=True)
class PolarSpectrum:
    """Magnitudes on a ``(theta, r)`` grid; ``data[i, j]`` sits at
    ``(theta_axis[i], radius_axis[j])``."""
    data: np.ndarray
    theta_axis: np.ndarray
    radius_axis: np.ndarray

    @property
    def n_theta_samples(self):
        return self.data.shape[0]

    @property
    def n_radius_samples(self):
        return self.data.shape[1]


@dataclass(frozen=True)
class SpectrumPartition:
    thetas: tuple
    scales: tuple
    tau: float | None = None
    eta: float | None = None

    def __post_init__(self):
        thetas = tuple(float(t) for t in self.thetas)
        scales = tuple(tuple(float(s) for s in row) for row in self.scales)
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "scales", scales)
        if not thetas:
            raise InvalidInputError("partition needs at least one angle")
        if len(scales) != len(thetas):
            raise InvalidInputError("need one scale list per angular sector")
        if any(not 0 <= t < math.pi for t in thetas) or np.any(np.diff(thetas) <= 0):
            raise InvalidInputError("thetas must be strictly increasing in [0, pi)")
        for row in scales:
            if not row:
                raise InvalidInputError("every sector needs at least one scale")
            if any(not 0 < s < math.pi for s in row) or np.any(np.diff(row) <= 0):
                raise InvalidInputError("scales must be strictly increasing in (0, pi)")
        if len({row[0] for row in scales}) != 1:
            raise InvalidInputError("all sectors must share the first scale")

    @property
    def n_sectors(self):
        return len(self.thetas)

    @property
    def first_scale(self):
        return self.scales[0][0]

    def sector_bounds(self, m):
        """``(theta_m, theta_{m+1})``, the last sector ending at ``theta_1 + pi``."""
        lo = self.thetas[m]
        hi = self.thetas[m + 1] if m + 1 < self.n_sectors else self.thetas[0] + math.pi
        return lo, hi

    def wedge_bounds(self, m, n):
        """Radial limits of wedge ``n`` (0-based) in sector ``m``."""
        row = self.scales[m]
        return row[n], row[n + 1] if n + 1 < len(row) else math.pi

    def wedges(self):
        """``(m, n)`` for every detail wedge, sector-major."""
        return [(m, n) for m, row in enumerate(self.scales) for n in range(len(row))]

    def to_dict(self):
        return {"thetas": list(self.thetas), "scales": [list(r) for r in self.scales],
                "tau": self.tau, "eta": self.eta}

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, doc):
        try:
            return cls(thetas=doc["thetas"], scales=doc["scales"],
                       tau=doc.get("tau"), eta=doc.get("eta"))
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"malformed partition document: {exc}") from exc

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def pseudo_polar(v):
    """Spectrum magnitude of ``v`` resampled on a polar grid.

    The mean-free image is zero-padded to a ``2S x 2S`` square
    (``S = max(N, M)``) and its centred FFT magnitude is sampled bilinearly at
    ``2S`` angles over ``[0, pi)`` and ``S`` radii over ``[0, pi]``.  The
    ``r = 0`` row holds ``|sum(v)|``, the DC magnitude of ``v`` itself.
    """
    v = as_image(v, "v")
    size = max(v.shape)
    pad = np.zeros((2 * size, 2 * size))
    pad[: v.shape[0], : v.shape[1]] = v - v.mean()
    mag = np.abs(np.fft.fftshift(np.fft.fft2(pad)))
    n_theta, n_r = 2 * size, size
    theta = np.arange(n_theta) * (math.pi / n_theta)
    radius = np.linspace(0.0, math.pi, n_r)
    # Radius pi is the Nyquist bin, `size` samples from the centre.
    k = radius * size / math.pi
    rows = size + np.sin(theta)[:, None] * k[None, :]
    cols = size + np.cos(theta)[:, None] * k[None, :]
    data = ndimage.map_coordinates(mag, [rows, cols], order=1, mode="grid-wrap")
    data = np.maximum(data, 0.0)
    data[:, 0] = abs(float(v.sum()))
    return PolarSpectrum(data=data, theta_axis=theta, radius_axis=radius)


def hard_threshold(spec, tau):
    """Zero every magnitude ``<= tau``; survivors are kept unchanged."""
    if tau < 0:
        raise InvalidParameterError(f"tau must be non-negative, got {tau}")
    data = np.where(spec.data > tau, spec.data, 0.0)
    return PolarSpectrum(data=data, theta_axis=spec.theta_axis, radius_axis=spec.radius_axis)


def marginal_profile(spec, axis, indices=None):
    """Mean magnitude along the collapsed axis.

    ``axis="angle"`` averages over radii and returns one value per angle;
    ``axis="radius"`` averages over angles.  ``indices`` optionally restricts
    the collapsed axis (radius indices for "angle", angle indices for
    "radius").
    """
    if axis == "angle":
        data = spec.data
    elif axis == "radius":
        data = spec.data.T
    else:
        raise InvalidParameterError(f"axis must be 'angle' or 'radius', got {axis!r}")
    if indices is not None:
        indices = np.asarray(indices, dtype=np.int64)
        if indices.size == 0:
            raise InvalidInputError("empty restriction for marginal profile")
        data = data[:, indices]
    return data.mean(axis=1)


def _local_minima(y, cyclic):
    """Centres of strict local-minimum runs (plateaus collapse to their middle)."""
    n = len(y)
    change = np.flatnonzero(np.diff(y) != 0) + 1
    starts = np.concatenate([[0], change])
    ends = np.concatenate([change, [n]])
    vals = y[starts]
    nrun = len(starts)
    if nrun < 3 and not (cyclic and nrun == 2):
        return []
    if cyclic and nrun > 1 and vals[0] == vals[-1]:
        # Merge the run that wraps around the end of the profile.
        starts = starts[1:]
        ends = np.concatenate([ends[1:-1], [ends[0] + n]])
        vals = vals[1:]
        nrun -= 1
    out = []
    for i in range(nrun):
        if cyclic:
            left, right = vals[i - 1], vals[(i + 1) % nrun]
        else:
            if i == 0 or i == nrun - 1:
                continue
            left, right = vals[i - 1], vals[i + 1]
        if vals[i] < left and vals[i] < right:
            out.append(((starts[i] + ends[i] - 1) // 2) % n)
    return sorted(out)


def _distance(a, b, n, cyclic):
    d = abs(a - b)
    return min(d, n - d) if cyclic else d


def otsu_threshold(values):
    """Otsu split of a 1D sample: the ``t`` maximizing between-class variance.

    Classes are ``values <= t`` and ``values > t``; candidates are the
    distinct values except the largest.  Ties go to the smallest ``t``.
    Returns None when fewer than two distinct values are present.
    """
    vals = np.asarray(values, dtype=np.float64)
    levels = np.unique(vals)
    if levels.size < 2:
        return None
    best, best_t = -1.0, None
    total = vals.size
    for t in levels[:-1]:
        low, high = vals[vals <= t], vals[vals > t]
        w0, w1 = low.size / total, high.size / total
        score = w0 * w1 * (low.mean() - high.mean()) ** 2
        # Relative margin so exact ties that differ by rounding keep the smaller t.
        if score > best + 1e-12 * abs(best):
            best, best_t = score, float(t)
    return best_t


def scale_space_lifetimes(profile, params=None, cyclic=False):
    """Minima of ``profile`` with the number of scale-space levels each survives.

    Level ``l`` is the profile smoothed by a Gaussian of std
    ``l * scale_space_step`` (level 0 is the raw profile).  Minima only
    merge away as smoothing grows, so the next level's minima are matched
    greedily (closest pairs first, one-to-one) to the live tracks; tracks left
    without a match end.

    Returns
    -------
    positions : list of int
        Minimum positions at level 0.
    lifetimes : list of int
    n_levels : int
    """
    params = params or DetectionParams()
    y = np.asarray(profile, dtype=np.float64)
    if y.ndim != 1 or y.size < 3:
        raise InvalidInputError("profile must be 1D with at least 3 samples")
    n = y.size
    n_levels = safe_ceil(n / 8) + 1
    if params.max_scale_space_levels is not None:
        n_levels = min(n_levels, params.max_scale_space_levels)
    mode = "wrap" if cyclic else "nearest"
    start = _local_minima(y, cyclic)
    current = list(start)
    lifetimes = [1] * len(start)
    alive = list(range(len(start)))
    for level in range(1, n_levels):
        smooth = ndimage.gaussian_filter1d(y, level * params.scale_space_step, mode=mode)
        minima = _local_minima(smooth, cyclic)
        pairs = sorted((_distance(current[t], q, n, cyclic), t, q)
                       for t in alive for q in minima)
        taken_t, taken_q = set(), set()
        for dist, t, q in pairs:
            if t in taken_t or q in taken_q:
                continue
            taken_t.add(t)
            taken_q.add(q)
            current[t] = q
            lifetimes[t] += 1
        alive = [t for t in alive if t in taken_t]
        if not alive:
            break
    return start, lifetimes, n_levels


def detect_boundaries_1d(profile, params=None, cyclic=False):
    """Persistent minima of a 1D spectrum profile, as sorted sample indices.

    Minimum lifetimes across the scale space are split by Otsu's method and
    the long-lived class is kept.  If all lifetimes are equal, the minima are
    kept only when they survive every level.
    """
    positions, lifetimes, n_levels = scale_space_lifetimes(profile, params, cyclic)
    if not positions:
        return []
    t = otsu_threshold(lifetimes)
    if t is None:
        keep = [p for p, life in zip(positions, lifetimes) if life == n_levels]
    else:
        keep = [p for p, life in zip(positions, lifetimes) if life > t]
    return sorted(keep)


def _sector_indices(theta_axis, lo, hi):
    offset = np.mod(theta_axis - lo, math.pi)
    return np.flatnonzero(offset < hi - lo)


def _gap_ratio(a, b):
    return (b - a) / (b + a)


def resolvable_scales(row, grid_size):
    """Thin a scale list until every radial transition spans a frequency bin.

    The bank's transition around ``omega_n`` is ``2 * gamma * omega_n`` wide
    with ``gamma = GAMMA_FRACTION * min gap ratio``; on an ``S``-point grid a
    bin is ``2 pi / S``.  While the smallest ratio ``(b - a) / (b + a)`` over
    consecutive boundaries (``pi`` closing the list) is too small, the outer
    boundary of that pair is dropped, or the inner one when the outer is
    ``pi``.  ``omega_1`` is never dropped.
    """
    row = list(row)
    bin_width = 2 * math.pi / grid_size
    need = bin_width / (2 * GAMMA_FRACTION * row[0])
    while len(row) > 1:
        edges = row + [math.pi]
        ratios = [_gap_ratio(a, b) for a, b in zip(edges[:-1], edges[1:])]
        i = int(np.argmin(ratios))
        if ratios[i] >= need:
            break
        del row[i + 1 if i + 1 < len(row) else i]
    return row


def detect_partition(spec, params=None, tau=None):
    """Angles first, then scales inside each angular sector.

    Radii within one bin of the original image grid (``2 pi / S``) count
    as DC.  Sectors with no radial boundary get only the shared
    ``omega_1``; with no radial boundary anywhere ``omega_1`` defaults to
    ``pi / 4``.  Scale lists are then thinned by :func:`resolvable_scales`.
    """
    params = params or DetectionParams()
    grid_size = spec.n_radius_samples
    dc_reach = np.flatnonzero(spec.radius_axis < 2 * math.pi / grid_size)
    angle_profile = marginal_profile(spec, "angle")
    idx = detect_boundaries_1d(angle_profile, params, cyclic=True)
    thetas = [float(spec.theta_axis[i]) for i in idx] or [0.0]
    n_sec = len(thetas)
    raw_scales = []
    for m in range(n_sec):
        lo = thetas[m]
        hi = thetas[m + 1] if m + 1 < n_sec else thetas[0] + math.pi
        rows = _sector_indices(spec.theta_axis, lo, hi)
        radial = marginal_profile(spec, "radius", rows).copy()
        # DC is always a spectral mode, so the first valley bounds the disk.
        radial[dc_reach] = radial.max()
        found = detect_boundaries_1d(radial, params, cyclic=False)
        raw_scales.append([float(spec.radius_axis[i]) for i in found
                           if 0 < spec.radius_axis[i] < math.pi])
    firsts = [row[0] for row in raw_scales if row]
    omega1 = min(firsts) if firsts else DEFAULT_FIRST_SCALE
    scales = [resolvable_scales([omega1] + [s for s in row[1:] if s > omega1], grid_size)
              for row in raw_scales]
    return SpectrumPartition(thetas=thetas, scales=scales, tau=tau, eta=params.eta)


def wedge_density(spec, part):
    """Thresholded mass per unit (radius x angle) area of every detail wedge.

    Returns one array per sector, entry ``n`` for wedge ``[omega_n,
    omega_{n+1})`` (the outermost wedge includes ``r = pi``).
    """
    out = []
    r = spec.radius_axis
    for m in range(part.n_sectors):
        lo, hi = part.sector_bounds(m)
        rows = _sector_indices(spec.theta_axis, lo, hi)
        sector = spec.data[rows]
        dens = []
        for n in range(len(part.scales[m])):
            r_lo, r_hi = part.wedge_bounds(m, n)
            last = n + 1 == len(part.scales[m])
            cols = (r >= r_lo) & ((r <= r_hi) if last else (r < r_hi))
            mass = float(sector[:, cols].sum())
            dens.append(mass / ((r_hi - r_lo) * (hi - lo)))
        out.append(np.array(dens))
    return out


def merge_partition(part, densities, eta=0.1):
    """Drop the inner boundary of every sparse wedge, merging it inward.

    For each sector and ``j = Ns, ..., 3`` (1-based), ``omega_{j-1}`` is
    removed when wedge ``j-1`` has density ``< eta * max density``.  The
    innermost detail wedge and ``omega_1`` are never touched.
    """
    if not 0 < eta < 1:
        raise InvalidParameterError(f"eta must lie in (0, 1), got {eta}")
    if len(densities) != part.n_sectors:
        raise InvalidInputError("densities do not match the partition")
    peak = max((float(np.max(d)) for d in densities if len(d)), default=0.0)
    scales = []
    for row, dens in zip(part.scales, densities):
        if len(dens) != len(row):
            raise InvalidInputError("densities do not match the partition")
        row = list(row)
        for j in range(len(row), 2, -1):
            if dens[j - 2] < eta * peak:
                del row[j - 2]
        scales.append(row)
    return SpectrumPartition(thetas=part.thetas, scales=scales, tau=part.tau, eta=eta)


def detect_spectrum_partition(v, params=None):
    """Pseudo-polar spectrum, percentile threshold, detection and merging.

    Returns
    -------
    SpectrumPartition
        Merged partition, with the threshold ``tau`` recorded.
    PolarSpectrum
        The thresholded polar spectrum the partition was detected on.
    """
    params = params or DetectionParams()
    spec = pseudo_polar(v)
    tau = percentile_value(spec.data, params.p)
    spec = hard_threshold(spec, tau)
    part = detect_partition(spec, params, tau=tau)
    part = merge_partition(part, wedge_density(spec, part), params.eta)
    return part, spec
