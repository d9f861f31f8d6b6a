"""Exact moments and cumulants of linear statistics, plus desk-scale oracles.

The cumulant engine expands each order over all compositions of n, weighting
traces of products of diagonal-scaled kernel matrices.  Two independent
oracles cross-check it: the log-determinant characteristic function (Taylor
coefficients by finite differences) and, for small lattices, exhaustive
enumeration of the subset distribution.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb, factorial

import numpy as np

from .errors import (DuplicateSites, MissingFourier, NumericallySingular,
                     OrderTooLarge, TooManySites)
from .kernels import MatrixKernel
from .spectral import SpectralFunction, m_lambda_torus
from .testfuncs import TestFunction

MAX_CUMULANT_ORDER = 8
BRUTE_FORCE_LIMIT = 12
EIG_ONE_CLIP = 1e-12
SUPPORT_TRIM = 1e-14


def rho_n(kernel: MatrixKernel, sites) -> float:
    """Joint occupancy density of distinct sites: determinant of the minor."""
    sites = list(sites)
    if len(set(sites)) != len(sites):
        raise DuplicateSites(f"sites {sites} contain repeats")
    idx = np.asarray(sites)
    minor = kernel.block(idx, idx)
    return float(np.linalg.det(minor).real)


def _site_values(kernel: MatrixKernel, f: TestFunction, L: float):
    return f.values_on_sites(kernel.coords, L)


def _support_indices(fv):
    """Sites whose weight is non-negligible relative to the largest one.

    Dropping weights below 1e-14 of the maximum changes every trace by less
    than n_sites * 1e-14 in relative terms, and keeps window sizes bounded
    for rapidly decaying functions.
    """
    top = np.abs(fv).max() if len(fv) else 0.0
    if top == 0.0:
        return np.empty(0, dtype=int)
    return np.nonzero(np.abs(fv) > SUPPORT_TRIM * top)[0]


def mean_Sf(kernel: MatrixKernel, f: TestFunction, L: float) -> float:
    """Expected linear statistic: weighted sum of the kernel diagonal."""
    fv = _site_values(kernel, f, L)
    return float(np.dot(fv, kernel.diagonal()))


def var_Sf(kernel: MatrixKernel, f: TestFunction, L: float) -> float:
    """Variance of the linear statistic from diagonal and pair terms.

    Circulant kernels use the torus autocorrelation of the site weights, so
    the pair sum costs O(n log n); dense kernels use the double sum over the
    support window.
    """
    fv = _site_values(kernel, f, L)
    if kernel.structure_tag == "circulant":
        gen = kernel.generating_row()
        diag_term = float(gen[0].real) * float(np.dot(fv, fv))
        spec = np.fft.rfft(fv)
        autocorr = np.fft.irfft(spec * spec.conj(), n=kernel.n_sites)
        pair_term = float(np.dot(np.abs(gen) ** 2, autocorr))
        return diag_term - pair_term
    idx = _support_indices(fv)
    if len(idx) == 0:
        return 0.0
    w = fv[idx]
    block = kernel.block(idx, idx)
    diag_term = float(np.dot(w * w, block.diagonal().real))
    pair_term = float(w @ (np.abs(block) ** 2) @ w)
    return diag_term - pair_term


def var_spectral(s: SpectralFunction, f: TestFunction, L: float,
                 n_quad: int = 1 << 16, allow_numeric: bool = True) -> float:
    """Variance through the frequency domain: L * integral |fhat|^2 m(k/L).

    The density m is evaluated on the frequency torus, matching the lattice
    field the variance belongs to.  Uses the analytic transform when the
    family has one, otherwise a discrete transform of the sampled function
    (refused when ``allow_numeric`` is off).
    """
    n_quad = max(int(n_quad), 4096)
    if f.has_analytic_fourier:
        kmax = _band_limit(f, L)
        k = np.linspace(-kmax, kmax, n_quad + 1)
        weight = f.fourier_abs2(k)
    else:
        if not allow_numeric:
            raise MissingFourier(
                f"family {f.family!r} has no closed-form transform")
        k, weight = _numeric_fourier_abs2(f, n_quad)
        band = np.abs(k) <= L / 2.0
        k, weight = k[band], weight[band]
    integrand = weight * m_lambda_torus(s, k / float(L))
    return float(L) * float(np.trapezoid(integrand, k))


def _band_limit(f: TestFunction, L: float) -> float:
    if f.family == "gaussian":
        return min(6.0 / f.width, L / 2.0)
    return L / 2.0


def _numeric_fourier_abs2(f: TestFunction, n_quad: int):
    lo, hi = f.support()
    span = hi - lo
    n = 1 << 15
    pad = 8
    x = lo + span * np.arange(n) / n
    fx = f(x)
    dx = span / n
    spectrum = np.fft.rfft(fx, n=pad * n) * dx
    k = np.fft.rfftfreq(pad * n, d=dx)
    abs2 = np.abs(spectrum) ** 2
    k_full = np.concatenate([-k[:0:-1], k])
    abs2_full = np.concatenate([abs2[:0:-1], abs2])
    keep = len(k_full)
    if keep > n_quad + 1:
        step = keep // (n_quad + 1) + 1
        k_full = k_full[::step]
        abs2_full = abs2_full[::step]
    return k_full, abs2_full


@dataclass(frozen=True)
class CumulantTable:
    """Cumulants C_1..C_n of a linear statistic with normalized high orders.

    ``normalized`` carries the cumulants of the exactly standardized
    statistic: 0, 1, then C_n / C_2^(n/2) for n >= 3.
    """

    values: tuple[float, ...]

    @property
    def n_max(self) -> int:
        return len(self.values)

    def value(self, order: int) -> float:
        return self.values[order - 1]

    @property
    def normalized(self) -> tuple[float, ...]:
        var = self.values[1] if self.n_max >= 2 else 0.0
        out = [0.0, 1.0]
        for n in range(3, self.n_max + 1):
            out.append(self.values[n - 1] / var ** (n / 2.0))
        return tuple(out[: self.n_max])


@lru_cache(maxsize=None)
def _compositions(n: int):
    """All ordered tuples of positive integers summing to n (2^(n-1) of them)."""
    if n == 0:
        return ((),)
    out = []
    for first in range(1, n + 1):
        for rest in _compositions(n - first):
            out.append((first,) + rest)
    return tuple(out)


def cumulant_table(kernel: MatrixKernel, f: TestFunction, L: float,
                   n_max: int = 4) -> CumulantTable:
    """Cumulants of S_f through order n_max by composition-weighted traces.

    Each composition (n_1, ..., n_m) of n contributes
    (-1)^(m-1)/m * n!/(n_1! ... n_m!) * Tr(f^{n_1} K f^{n_2} K ... f^{n_m} K),
    with the diagonal powers of f acting as matrix scalings.  Partial products
    are cached across compositions sharing a prefix.
    """
    if n_max > MAX_CUMULANT_ORDER:
        raise OrderTooLarge(f"order {n_max} exceeds {MAX_CUMULANT_ORDER}")
    if n_max < 1:
        raise ValueError("need n_max >= 1")
    fv = _site_values(kernel, f, L)
    idx = _support_indices(fv)
    if len(idx) == 0:
        return CumulantTable(values=(0.0,) * n_max)
    w = fv[idx]
    block = np.asarray(kernel.block(idx, idx))
    scaled = {p: (w ** p)[:, None] * block for p in range(1, n_max + 1)}
    diag_traces = {p: float(np.dot(w ** p, block.diagonal().real))
                   for p in range(1, n_max + 1)}
    products = {}

    def product_for(prefix):
        if prefix in products:
            return products[prefix]
        if len(prefix) == 1:
            mat = scaled[prefix[0]]
        else:
            mat = product_for(prefix[:-1]) @ scaled[prefix[-1]]
        products[prefix] = mat
        return mat

    values = []
    for n in range(1, n_max + 1):
        total = 0.0
        for comp in _compositions(n):
            m = len(comp)
            if m == 1:
                trace = diag_traces[comp[0]]
            else:
                head = product_for(comp[:-1])
                trace = float(np.einsum("ij,ji->", head, scaled[comp[-1]]).real)
            coeff = ((-1) ** (m - 1)) / m * factorial(n)
            for part in comp:
                coeff /= factorial(part)
            total += coeff * trace
        values.append(total)
    return CumulantTable(values=tuple(values))


def charfn_logdet(kernel: MatrixKernel, f: TestFunction, L: float,
                  t: float) -> complex:
    """log det(Id + (e^{itf} - 1) K); the cumulant generating data at real t.

    A determinant whose magnitude falls below the numerical noise floor of
    the O(1)-scaled matrix means t is too large for the principal log branch
    to be trusted, and is reported as singular.
    """
    if t == 0.0:
        return 0.0 + 0.0j
    fv = _site_values(kernel, f, L)
    idx = _support_indices(fv)
    if len(idx) == 0:
        return 0.0 + 0.0j
    w = fv[idx]
    block = np.asarray(kernel.block(idx, idx))
    mult = np.expm1(1j * t * w)
    mat = np.eye(len(idx), dtype=complex) + mult[:, None] * block
    sign, logabs = np.linalg.slogdet(mat)
    if (sign == 0 or not np.isfinite(logabs)
            or logabs < np.log(1e-13 * len(idx))):
        raise NumericallySingular(
            f"determinant underflow at t={t}; reduce the evaluation point")
    return complex(logabs + 1j * np.angle(sign))


# step size and Richardson depth per derivative order; high orders need wide
# steps to keep double-precision cancellation noise under the truncation error
_FD_PLAN = {1: (1e-3, 1), 2: (1e-3, 1), 3: (5e-2, 2), 4: (6e-2, 2)}


def cumulants_via_logdet(kernel: MatrixKernel, f: TestFunction, L: float,
                         n_max: int = 4) -> tuple[float, ...]:
    """Cumulants from central finite differences of the log characteristic data.

    Order n uses the standard central stencil for the n-th derivative with
    Richardson extrapolation; each extrapolation level cancels the next h^2
    truncation term.  This is an oracle path independent of the trace
    expansion: it only ever evaluates log-determinants.
    """
    if n_max > 4:
        raise OrderTooLarge("log-determinant probe is calibrated for n <= 4")

    def g(t):
        return charfn_logdet(kernel, f, L, t)

    def derivative(order, h):
        if order == 1:
            return (g(h) - g(-h)) / (2 * h)
        if order == 2:
            return (g(h) - 2 * g(0.0) + g(-h)) / h ** 2
        if order == 3:
            return (g(2 * h) - 2 * g(h) + 2 * g(-h) - g(-2 * h)) / (2 * h ** 3)
        return (g(2 * h) - 4 * g(h) + 6 * g(0.0) - 4 * g(-h) + g(-2 * h)) / h ** 4

    out = []
    for order in range(1, n_max + 1):
        h, levels = _FD_PLAN[order]
        if levels == 1:
            value = (4.0 * derivative(order, h / 2) - derivative(order, h)) / 3.0
        else:
            d1 = derivative(order, h)
            d2 = derivative(order, h / 2)
            d3 = derivative(order, h / 4)
            r1 = (4.0 * d2 - d1) / 3.0
            r2 = (4.0 * d3 - d2) / 3.0
            value = (16.0 * r2 - r1) / 15.0
        out.append(float((value / 1j ** order).real))
    return tuple(out)


@dataclass(frozen=True)
class BruteForceDistribution:
    """Exhaustive subset law of a small kernel through its L-ensemble form."""

    n_sites: int
    probs: np.ndarray          # indexed by occupancy bitmask
    clip_applied: float        # largest eigenvalue shift used to avoid 1
    had_eigenvalue_at_one: bool

    @property
    def total(self) -> float:
        return float(self.probs.sum())

    def prob_of(self, sites) -> float:
        mask = 0
        for s in sites:
            mask |= 1 << int(s)
        return float(self.probs[mask])

    def statistic_values(self, f_values) -> np.ndarray:
        """S_f evaluated on every subset, by bit-prefix recursion."""
        f_values = np.asarray(f_values, dtype=float)
        vals = np.zeros(1 << self.n_sites)
        for mask in range(1, 1 << self.n_sites):
            low = mask & -mask
            vals[mask] = vals[mask ^ low] + f_values[low.bit_length() - 1]
        return vals

    def raw_moments(self, f_values, n_max: int) -> tuple[float, ...]:
        vals = self.statistic_values(f_values)
        return tuple(float(np.dot(self.probs, vals ** r))
                     for r in range(1, n_max + 1))

    def cumulants(self, f_values, n_max: int) -> tuple[float, ...]:
        return raw_moments_to_cumulants(self.raw_moments(f_values, n_max))

    def mean(self, f_values) -> float:
        return self.raw_moments(f_values, 1)[0]

    def variance(self, f_values) -> float:
        m1, m2 = self.raw_moments(f_values, 2)
        return m2 - m1 * m1


def brute_force_distribution(kernel: MatrixKernel) -> BruteForceDistribution:
    """Full probability mass function over all site subsets (n_sites <= 12)."""
    n = kernel.n_sites
    if n > BRUTE_FORCE_LIMIT:
        raise TooManySites(f"{n} sites would enumerate 2^{n} subsets")
    w, v = kernel.eig()
    at_one = bool(np.any(w > 1.0 - EIG_ONE_CLIP))
    clipped = np.clip(w, 0.0, 1.0 - EIG_ONE_CLIP)
    clip_applied = float(np.abs(w - clipped).max())
    lmat = (v * (clipped / (1.0 - clipped))) @ v.conj().T
    lmat = (lmat + lmat.conj().T) / 2.0
    det_id_plus_l = float(np.prod(1.0 / (1.0 - clipped)))
    probs = np.empty(1 << n)
    for mask in range(1 << n):
        sites = [i for i in range(n) if mask >> i & 1]
        if not sites:
            probs[mask] = 1.0
            continue
        sub = lmat[np.ix_(sites, sites)]
        probs[mask] = np.linalg.det(sub).real
    probs /= det_id_plus_l
    return BruteForceDistribution(n_sites=n, probs=probs,
                                  clip_applied=clip_applied,
                                  had_eigenvalue_at_one=at_one)


def cumulants_to_moments(cumulants, kind: str = "raw") -> tuple[float, ...]:
    """Moments from cumulants by the standard recursive convolution.

    ``kind='raw'`` keeps the first cumulant as the mean; ``kind='central'``
    zeroes it, so the second moment equals C_2.
    """
    kappa = [float(c) for c in cumulants]
    if kind == "central":
        kappa = [0.0] + kappa[1:]
    elif kind != "raw":
        raise ValueError("kind must be 'raw' or 'central'")
    moments = [1.0]
    for n in range(1, len(kappa) + 1):
        total = 0.0
        for j in range(1, n + 1):
            total += comb(n - 1, j - 1) * kappa[j - 1] * moments[n - j]
        moments.append(total)
    return tuple(moments[1:])


def raw_moments_to_cumulants(moments) -> tuple[float, ...]:
    """Inverse of :func:`cumulants_to_moments` for raw moments."""
    m = [1.0] + [float(x) for x in moments]
    kappa = []
    for n in range(1, len(m)):
        total = m[n]
        for j in range(1, n):
            total -= comb(n - 1, j - 1) * kappa[j - 1] * m[n - j]
        kappa.append(total)
    return tuple(kappa)
