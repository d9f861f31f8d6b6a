"""Spectral symbols of translation-invariant kernels and their variance functionals.

A symbol is the frequency-domain description of a lattice kernel.  Two
representations are supported: indicator functions of finite interval unions
(kept in exact interval arithmetic) and tabulated curves with linear
interpolation.  Admissible symbols take values in [0, 1]; symbols supported
inside the lattice band [-1/2, 1/2] can be turned into circulant kernels.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import MalformedSpectral

BAND_HALF_WIDTH = 0.5
TAB_QUAD_POINTS = 4096


class IntervalUnion:
    """Indicator symbol of a union of disjoint closed intervals.

    Intervals may lie anywhere on the line; membership of the lattice band
    [-1/2, 1/2] is reported by :func:`validate_spectral` and enforced only
    when a kernel is built.
    """

    kind = "interval_union"
    is_indicator = True

    def __init__(self, intervals):
        ivs = [(float(a), float(b)) for a, b in intervals]
        ivs.sort()
        for a, b in ivs:
            if not (np.isfinite(a) and np.isfinite(b)):
                raise MalformedSpectral("interval endpoints must be finite")
            if b <= a:
                raise MalformedSpectral(f"empty or inverted interval [{a}, {b}]")
        for (_, b0), (a1, _) in zip(ivs, ivs[1:]):
            if a1 < b0:
                raise MalformedSpectral(f"intervals overlap near {a1}")
        self.intervals = tuple(ivs)
        self._profile = None

    @property
    def mass(self) -> float:
        return float(sum(b - a for a, b in self.intervals))

    def in_band(self) -> bool:
        return all(a >= -BAND_HALF_WIDTH and b <= BAND_HALF_WIDTH
                   for a, b in self.intervals)

    def value(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for a, b in self.intervals:
            out[(t >= a) & (t <= b)] = 1.0
        return out

    def scaled(self, factor: float) -> "IntervalUnion":
        return IntervalUnion([(a * factor, b * factor) for a, b in self.intervals])

    def is_even(self) -> bool:
        mirrored = sorted((-b, -a) for a, b in self.intervals)
        return all(ma == a and mb == b
                   for (ma, mb), (a, b) in zip(mirrored, self.intervals))

    def overlap_with_shift(self, lam: float) -> float:
        """Length of B intersected with B + lam, by merging sorted endpoint lists."""
        total = 0.0
        shifted = [(a + lam, b + lam) for a, b in self.intervals]
        i = j = 0
        base = self.intervals
        while i < len(base) and j < len(shifted):
            lo = max(base[i][0], shifted[j][0])
            hi = min(base[i][1], shifted[j][1])
            if hi > lo:
                total += hi - lo
            if base[i][1] < shifted[j][1]:
                i += 1
            else:
                j += 1
        return total

    def _overlap_profile(self):
        """Piecewise-linear overlap length r(lam) tabulated at every kink.

        r is the autocorrelation of the indicator, hence piecewise linear with
        kinks only at differences of interval endpoints; linear interpolation
        of this table reproduces r exactly.
        """
        if self._profile is not None:
            return self._profile
        a = np.array([iv[0] for iv in self.intervals])
        b = np.array([iv[1] for iv in self.intervals])
        pts = np.concatenate([a, b])
        kinks = np.unique(np.abs(np.subtract.outer(pts, pts).ravel()))
        values = np.empty_like(kinks)
        chunk = 2048
        for lo in range(0, len(kinks), chunk):
            lam = kinks[lo:lo + chunk]
            start = np.maximum(a[:, None, None], a[None, :, None] + lam[None, None, :])
            stop = np.minimum(b[:, None, None], b[None, :, None] + lam[None, None, :])
            values[lo:lo + chunk] = np.clip(stop - start, 0.0, None).sum(axis=(0, 1))
        self._profile = (kinks, values)
        return self._profile


class Tabulated:
    """Symbol given by samples on a frequency grid, linearly interpolated.

    The symbol is zero outside the grid hull.  Integrals of the curve and of
    its square are evaluated exactly for the piecewise-linear interpolant.
    """

    kind = "tabulated"
    is_indicator = False

    def __init__(self, grid, values):
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape or len(grid) < 2:
            raise MalformedSpectral("tabulated symbol needs matching 1-d grid and values")
        if not np.all(np.isfinite(grid)) or not np.all(np.isfinite(values)):
            raise MalformedSpectral("tabulated symbol contains non-finite entries")
        if np.any(np.diff(grid) <= 0):
            raise MalformedSpectral("tabulated grid must be strictly increasing")
        self.grid = grid
        self.values = values

    @property
    def mass(self) -> float:
        h = np.diff(self.grid)
        v0, v1 = self.values[:-1], self.values[1:]
        return float(np.sum(h * (v0 + v1) / 2.0))

    def mass_sq(self) -> float:
        h = np.diff(self.grid)
        v0, v1 = self.values[:-1], self.values[1:]
        return float(np.sum(h * (v0 * v0 + v0 * v1 + v1 * v1) / 3.0))

    def in_band(self) -> bool:
        support = self.values != 0.0
        if not support.any():
            return True
        lo = self.grid[support.argmax()]
        hi = self.grid[len(support) - 1 - support[::-1].argmax()]
        return lo >= -BAND_HALF_WIDTH and hi <= BAND_HALF_WIDTH

    def value(self, t):
        t = np.asarray(t, dtype=float)
        return np.interp(t, self.grid, self.values, left=0.0, right=0.0)

    def is_even(self) -> bool:
        return (np.array_equal(self.grid, -self.grid[::-1])
                and np.array_equal(self.values, self.values[::-1]))


SpectralFunction = IntervalUnion | Tabulated


def sine(rho: float = 0.5) -> IntervalUnion:
    """Band indicator of width rho centered at zero (density-rho sine kernel)."""
    if not 0 < rho <= 1:
        raise MalformedSpectral("sine symbol needs 0 < rho <= 1")
    return IntervalUnion([(-rho / 2.0, rho / 2.0)])


def triangle() -> Tabulated:
    """Tent symbol max(0, 1 - |2t|); three nodes represent it exactly."""
    return Tabulated([-0.5, 0.0, 0.5], [0.0, 1.0, 0.0])


def flat(value: float) -> Tabulated:
    """Constant symbol on the full band (independent Bernoulli field)."""
    return Tabulated([-0.5, 0.5], [value, value])


def scaled_beta_union(beta: float, n_max: int = 64) -> IntervalUnion:
    """Union of intervals [n, n + n^-beta], n = 1..n_max, rescaled into [0, 1/2].

    The affine rescale preserves the small-shift power law of the overlap
    functional, so the exponent 1 - 1/beta survives truncation.
    """
    if beta <= 1:
        raise MalformedSpectral("beta union needs beta > 1")
    if n_max < 2:
        raise MalformedSpectral("beta union needs n_max >= 2")
    n = np.arange(1, n_max + 1, dtype=float)
    left = n
    right = n + n ** (-beta)
    scale = BAND_HALF_WIDTH / (right[-1] - left[0])
    return IntervalUnion([((l - 1.0) * scale, (r - 1.0) * scale)
                          for l, r in zip(left, right)])


def two_intervals() -> IntervalUnion:
    """Symmetric pair of band intervals, each of length 1/4."""
    return IntervalUnion([(-0.375, -0.125), (0.125, 0.375)])


def from_csv(path) -> Tabulated:
    """Load a tabulated symbol from a two-column CSV (frequency, value)."""
    grid, values = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            if len(row) < 2:
                raise MalformedSpectral(f"{path}: expected two columns, got {row!r}")
            grid.append(float(row[0]))
            values.append(float(row[1]))
    if len(grid) < 2:
        raise MalformedSpectral(f"{path}: too few rows for a tabulated symbol")
    return Tabulated(grid, values)


NAMED_FAMILIES = {
    "sine": sine,
    "triangle": triangle,
    "flat": flat,
    "scaled_beta_union": scaled_beta_union,
    "two_intervals": two_intervals,
}


def named(family: str, **kwargs) -> SpectralFunction:
    if family not in NAMED_FAMILIES:
        raise MalformedSpectral(
            f"unknown named symbol {family!r}; choose from {sorted(NAMED_FAMILIES)}")
    return NAMED_FAMILIES[family](**kwargs)


@dataclass(frozen=True)
class ValidationReport:
    kind: str
    min_value: float
    max_value: float
    total_mass: float
    sigma2: float
    in_band: bool
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "min_value": self.min_value,
            "max_value": self.max_value,
            "total_mass": self.total_mass,
            "sigma2": self.sigma2,
            "in_band": self.in_band,
            "violations": list(self.violations),
            "ok": self.ok,
        }


def validate_spectral(s: SpectralFunction) -> ValidationReport:
    """Range-check a symbol and report its mass and variance density at zero."""
    violations = []
    if isinstance(s, IntervalUnion):
        vmin, vmax = (0.0, 1.0) if s.intervals else (0.0, 0.0)
    else:
        vmin = float(s.values.min())
        vmax = float(s.values.max())
        if vmin < 0.0:
            violations.append(f"symbol dips below 0 (min {vmin:.6g})")
        if vmax > 1.0:
            violations.append(f"symbol exceeds 1 (max {vmax:.6g})")
    return ValidationReport(
        kind=s.kind,
        min_value=vmin,
        max_value=vmax,
        total_mass=s.mass,
        sigma2=sigma2(s),
        in_band=s.in_band(),
        violations=tuple(violations),
    )


def sigma2(s: SpectralFunction) -> float:
    """Integral of (symbol - symbol^2); zero exactly for indicator symbols."""
    if isinstance(s, IntervalUnion):
        return 0.0
    return s.mass - s.mass_sq()


def m_lambda(s: SpectralFunction, lam):
    """Variance spectral density: mass minus overlap of the symbol with its shift.

    Scalars use exact interval arithmetic for interval unions; array input is
    evaluated through a precomputed kink table (interval case) or quadrature
    (tabulated case).  Always even in lam and equal to sigma2 at lam = 0.
    """
    scalar = np.isscalar(lam) or np.asarray(lam).ndim == 0
    if isinstance(s, IntervalUnion):
        if scalar:
            return max(s.mass - s.overlap_with_shift(float(lam)), 0.0)
        overlap = _union_overlap(s, np.asarray(lam, dtype=float))
        return np.maximum(s.mass - overlap, 0.0)
    return _m_lambda_tabulated(s, lam, scalar)


def m_lambda_torus(s: SpectralFunction, lam):
    """Variance spectral density of the lattice field: shifts wrap around the
    frequency band, so a full-band symbol has zero density everywhere."""
    scalar = np.isscalar(lam) or np.asarray(lam).ndim == 0
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    lam = lam - np.round(lam)
    if isinstance(s, IntervalUnion):
        overlap = (_union_overlap(s, lam) + _union_overlap(s, lam - 1.0)
                   + _union_overlap(s, lam + 1.0))
        m = np.maximum(s.mass - overlap, 0.0)
    else:
        m = _m_lambda_tabulated(s, lam, scalar=False, wrap=True)
    return float(m[0]) if scalar else m


def _union_overlap(s: IntervalUnion, lam: np.ndarray) -> np.ndarray:
    kinks, values = s._overlap_profile()
    return np.interp(np.abs(lam), kinks, values, left=values[0], right=0.0)


def _m_lambda_tabulated(s: Tabulated, lam, scalar: bool, wrap: bool = False):
    lams = np.atleast_1d(np.asarray(lam, dtype=float))
    n = max(TAB_QUAD_POINTS, 8 * len(s.grid))
    k = np.linspace(s.grid[0], s.grid[-1], n + 1)
    vk = s.value(k)
    offsets = (0.0, -1.0, 1.0) if wrap else (0.0,)
    out = np.zeros(len(lams))
    chunk = max(1, (1 << 22) // (n + 1))
    for lo in range(0, len(lams), chunk):
        shifts = lams[lo:lo + chunk]
        acc = 0.0
        for offset in offsets:
            vshift = np.interp(k[None, :] - (shifts[:, None] + offset),
                               s.grid, s.values, left=0.0, right=0.0)
            acc = acc + np.trapezoid(vk[None, :] * vshift, k, axis=1)
        out[lo:lo + chunk] = acc
    m = np.maximum(s.mass - out, 0.0)
    return float(m[0]) if scalar else m
