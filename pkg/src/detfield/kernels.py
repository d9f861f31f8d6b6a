"""Finite Hermitian correlation kernels on the periodic unit-spacing lattice.

Circulant kernels are built by sampling a spectral symbol on the discrete
frequency grid, so their eigenvalues are exactly the symbol samples and
admissibility holds by construction.  Dense kernels (and perturbed ones) are
validated through a full eigendecomposition against the range [0, 1].
"""

from __future__ import annotations

import hashlib

import numpy as np

from .errors import AdmissibilityLost, EnvelopeViolated, MalformedSpectral
from .spectral import SpectralFunction, validate_spectral

TOL_EIG = 1e-9
ENTRIES_LIMIT = 8192


class MatrixKernel:
    """Hermitian kernel matrix on lattice sites with cached spectral data.

    Instances are immutable in practice: nothing mutates entries after
    construction, so kernels are safe to share across workers.
    """

    def __init__(self, *, structure_tag, coords, gen=None, spectral_samples=None,
                 entries=None, eig=None, lattice_spacing=1.0):
        self.structure_tag = structure_tag
        self.coords = np.asarray(coords)
        self.n_sites = len(self.coords)
        self.lattice_spacing = float(lattice_spacing)
        self._gen = gen
        self.spectral_samples = spectral_samples
        self._entries = entries
        self._eig = eig
        self.roundtrip_error = 0.0
        if structure_tag == "circulant":
            self.eigenvalues = np.asarray(spectral_samples, dtype=float)
        else:
            self.eigenvalues = self.eig()[0]

    @classmethod
    def from_dense(cls, entries, coords=None, lattice_spacing=1.0):
        entries = np.asarray(entries)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError("kernel entries must form a square matrix")
        if not np.array_equal(entries, entries.conj().T):
            raise ValueError("kernel entries must be exactly Hermitian")
        n = entries.shape[0]
        if coords is None:
            coords = np.arange(n) - n // 2
        kern = cls(structure_tag="dense", coords=coords, entries=entries,
                   lattice_spacing=lattice_spacing)
        w = kern.eigenvalues
        if w[0] < -TOL_EIG or w[-1] > 1.0 + TOL_EIG:
            raise AdmissibilityLost(
                f"eigenvalues [{w[0]:.3e}, {w[-1]:.3e}] leave [0, 1] beyond {TOL_EIG}")
        return kern

    @property
    def kernel_id(self) -> str:
        payload = self._gen if self._gen is not None else self._entries
        digest = hashlib.sha1(np.ascontiguousarray(payload).tobytes()).hexdigest()[:12]
        return f"{self.structure_tag}-n{self.n_sites}-{digest}"

    @property
    def is_complex(self) -> bool:
        ref = self._gen if self._gen is not None else self._entries
        return np.iscomplexobj(ref)

    def diagonal(self):
        if self.structure_tag == "circulant":
            return np.full(self.n_sites, float(self._gen[0].real))
        return self._entries.diagonal().real.copy()

    def generating_row(self):
        """First column a(d) of the circulant, d = 0..n_sites-1."""
        if self._gen is None:
            raise ValueError("only circulant kernels have a generating row")
        return self._gen

    def block(self, rows, cols):
        rows = np.asarray(rows)
        cols = np.asarray(cols)
        if self.structure_tag == "circulant":
            idx = np.subtract.outer(rows, cols) % self.n_sites
            return self._gen[idx]
        return self._entries[np.ix_(rows, cols)]

    @property
    def entries(self):
        if self._entries is None:
            if self.n_sites > ENTRIES_LIMIT:
                raise MemoryError(
                    f"refusing to materialize a {self.n_sites}^2 kernel; "
                    "use block()/restrict() instead")
            idx = np.arange(self.n_sites)
            self._entries = self._gen[np.subtract.outer(idx, idx) % self.n_sites]
        return self._entries

    def restrict(self, site_indices) -> "MatrixKernel":
        """Kernel of the field restricted to a subset of sites (again admissible)."""
        site_indices = np.asarray(site_indices)
        sub = self.block(site_indices, site_indices)
        # principal submatrices of an exactly Hermitian matrix stay exactly Hermitian
        return MatrixKernel.from_dense(sub, coords=self.coords[site_indices],
                                       lattice_spacing=self.lattice_spacing)

    def eig(self):
        """Eigenvalues (ascending) and eigenvectors; cached after first use."""
        if self._eig is None:
            w, v = np.linalg.eigh(self.entries)
            self._eig = (w, v)
        return self._eig

    def trace(self) -> float:
        return float(self.diagonal().sum())


def build_circulant(s: SpectralFunction, n_sites: int) -> MatrixKernel:
    """Circulant kernel whose eigenvalues are the symbol at the DFT frequencies.

    For even n the frequency set equals {j/n - 1/2 : j = 0..n-1} exactly; odd
    n uses the native DFT grid, the only one a circulant can diagonalize.
    The generating row is the inverse discrete transform of the samples; an
    even symbol yields a real symmetric matrix.
    """
    if n_sites < 2:
        raise ValueError("need at least two lattice sites")
    report = validate_spectral(s)
    if not report.ok:
        raise AdmissibilityLost("; ".join(report.violations))
    if not report.in_band:
        raise MalformedSpectral("symbol support must lie within [-1/2, 1/2] "
                                "to build a unit-spacing lattice kernel")
    n = int(n_sites)
    t = np.fft.fftfreq(n)
    samples = np.asarray(s.value(t), dtype=float)
    mirror = (n - np.arange(n)) % n
    if s.is_even():
        # an even symbol takes equal values at t and -t; averaging the two
        # evaluations removes sub-ulp interpolation asymmetry
        samples = (samples + samples[mirror]) / 2.0
    gen = np.fft.ifft(samples)
    if np.array_equal(samples, samples[mirror]):
        gen = gen.real
        gen = (gen + gen[mirror]) / 2.0
    else:
        gen = (gen + gen[mirror].conj()) / 2.0
        gen[0] = gen[0].real
    kern = MatrixKernel(structure_tag="circulant",
                        coords=np.arange(n) - n // 2,
                        gen=gen, spectral_samples=samples)
    kern.roundtrip_error = float(np.abs(np.fft.fft(gen) - samples).max())
    return kern


class PerturbationEnvelope:
    """Dense perturbation R bounded entrywise by a decreasing envelope Q.

    Q is tabulated on a nonnegative radius grid and interpolated linearly;
    beyond the grid it is taken to be zero.  The bound reads
    ``|R(x, y)| <= Q(|x| + |y|)`` over site coordinates.
    """

    def __init__(self, q_grid, q_values, r):
        q_grid = np.asarray(q_grid, dtype=float)
        q_values = np.asarray(q_values, dtype=float)
        if q_grid.ndim != 1 or q_grid.shape != q_values.shape or len(q_grid) < 2:
            raise ValueError("envelope needs matching 1-d radius grid and values")
        if q_grid[0] < 0 or np.any(np.diff(q_grid) <= 0):
            raise ValueError("envelope radius grid must be nonnegative, increasing")
        if np.any(q_values < 0) or not np.all(np.isfinite(q_values)):
            raise ValueError("envelope values must be finite and nonnegative")
        if np.any(np.diff(q_values) > 1e-12):
            raise ValueError("envelope must be nonincreasing")
        self.q_grid = q_grid
        self.q_values = q_values
        r = np.asarray(r)
        if not np.array_equal(r, r.conj().T):
            raise ValueError("perturbation matrix must be exactly Hermitian")
        self.r = r

    def q_at(self, radius):
        return np.interp(radius, self.q_grid, self.q_values, right=0.0)

    def check(self, coords):
        radius = np.abs(coords)[:, None] + np.abs(coords)[None, :]
        bound = self.q_at(radius)
        excess = np.abs(self.r) - bound
        worst = float(excess.max())
        if worst > 1e-15:
            i, j = np.unravel_index(int(excess.argmax()), excess.shape)
            raise EnvelopeViolated(
                f"|R| exceeds Q(|x|+|y|) by {worst:.3e} at sites ({i}, {j})")


def rank_one_envelope(coords, eps: float, decay: float = 0.5) -> PerturbationEnvelope:
    """Exponentially decaying rank-one perturbation eps * v v^T with its envelope."""
    coords = np.asarray(coords, dtype=float)
    v = np.exp(-decay * np.abs(coords))
    r = eps * np.outer(v, v)
    rmax = 2.0 * np.abs(coords).max() + 1.0
    q_grid = np.linspace(0.0, rmax, 1024)
    q_values = abs(eps) * np.exp(-decay * q_grid)
    return PerturbationEnvelope(q_grid, q_values, r)


def perturb(base: MatrixKernel, env: PerturbationEnvelope) -> MatrixKernel:
    """Dense kernel base + R, revalidated against the admissible range."""
    if env.r.shape != (base.n_sites, base.n_sites):
        raise ValueError("perturbation shape does not match the kernel")
    env.check(base.coords)
    entries = base.entries + env.r
    return MatrixKernel.from_dense(entries, coords=base.coords,
                                   lattice_spacing=base.lattice_spacing)
