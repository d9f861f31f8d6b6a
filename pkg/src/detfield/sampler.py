"""Exact configuration sampling for admissible kernels.

Sampling is the standard two-phase scheme: independent Bernoulli selection of
eigenvectors by eigenvalue, then sequential conditional placement of one point
per selected vector.  The basis update after each placement is a Householder
column rotation, which keeps the basis orthonormal to machine precision; the
norm-drift guard re-orthonormalizes only if drift exceeds 1e-8.

RNG contract: Philox with the 64-bit base seed as key; sample i reads from
counter i * 2^64 (the sample index folded into the second counter word), so
streams are disjoint blocks and results do not depend on worker scheduling.
A failed sample retries once from counter i * 2^64 + 2^128 before raising.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.linalg import blas as _blas

from .errors import DegenerateProjection
from .kernels import MatrixKernel

REORTH_EVERY = 32
DRIFT_TOL = 1e-8


@dataclass(frozen=True)
class Configuration:
    """One sampled point configuration: sorted occupied site indices."""

    occupied_sites: tuple[int, ...]
    kernel_id: str
    seed: int

    def __post_init__(self):
        sites = self.occupied_sites
        if any(b <= a for a, b in zip(sites, sites[1:])):
            raise ValueError("occupied sites must be sorted and distinct")

    def to_csv_line(self) -> str:
        joined = ",".join(str(s) for s in self.occupied_sites)
        head = f"{self.seed},{len(self.occupied_sites)}"
        return f"{head},{joined}" if joined else head

    @classmethod
    def from_csv_line(cls, line: str, kernel_id: str = "") -> "Configuration":
        parts = line.strip().split(",")
        seed, count = int(parts[0]), int(parts[1])
        sites = tuple(int(p) for p in parts[2:])
        if len(sites) != count:
            raise ValueError(f"site count {count} does not match row {line!r}")
        return cls(occupied_sites=sites, kernel_id=kernel_id, seed=seed)


def stream_for(base_seed: int, index: int, retry: int = 0) -> np.random.Generator:
    counter = (int(index) << 64) + (int(retry) << 128)
    return np.random.Generator(np.random.Philox(key=int(base_seed), counter=counter))


def sample(kernel: MatrixKernel, seed: int, index: int = 0) -> Configuration:
    """Draw one configuration whose law has determinant correlation minors."""
    w, v = kernel.eig()
    occupied = draw_occupied(w, v, seed, index)
    return Configuration(occupied_sites=tuple(sorted(int(s) for s in occupied)),
                         kernel_id=kernel.kernel_id, seed=int(seed))


def draw_occupied(w, v, seed: int, index: int) -> list:
    """One draw from the eigendecomposition; retries once on rank loss."""
    try:
        return _draw_once(w, v, stream_for(seed, index))
    except DegenerateProjection:
        return _draw_once(w, v, stream_for(seed, index, retry=1))


def _draw_once(w, v, rng):
    selected = rng.random(len(w)) < w
    return _project_sample(v[:, selected], rng)


def _project_sample(basis, rng):
    """Sequential placement for a projection kernel given orthonormal columns.

    Each step rotates the active columns by a Householder reflection so the
    chosen row's mass sits in the leading column, which is then dropped; the
    reflection is applied in place as a BLAS rank-1 update.
    """
    n, k = basis.shape
    if k == 0:
        return []
    if np.iscomplexobj(basis):
        v = np.asfortranarray(basis, dtype=np.complex128)
        ger = _blas.zgerc
    else:
        v = np.asfortranarray(basis, dtype=np.float64)
        ger = _blas.dger
    p = np.einsum("ij,ij->i", v, v.conj()).real
    occupied = []
    lead = 0
    for step in range(k):
        remaining = k - step
        p = np.clip(p, 0.0, None)
        total = p.sum()
        if not np.isfinite(total) or total <= 0.0:
            raise DegenerateProjection("conditional mass vanished mid-sample")
        u = rng.random()
        site = int(np.searchsorted(np.cumsum(p), u * total, side="left"))
        site = min(site, n - 1)
        occupied.append(site)
        active = v[:, lead:]
        y = np.array(active[site, :], copy=True)
        np.conjugate(y, out=y)
        norm = np.linalg.norm(y)
        if norm == 0.0:
            raise DegenerateProjection("selected a zero-mass site")
        phase = y[0] / abs(y[0]) if abs(y[0]) > 0 else 1.0
        y[0] += phase * norm
        beta = 2.0 / np.vdot(y, y).real
        tmp = active @ y
        updated = ger(-beta, tmp, y, a=active, overwrite_a=1)
        if updated is not active:
            v[:, lead:] = updated
        col = v[:, lead]
        p = p - (col * col.conj()).real
        lead += 1
        if (step + 1) % REORTH_EVERY == 0 and lead < k:
            drift = abs(np.clip(p, 0.0, None).sum() - (remaining - 1))
            if drift > DRIFT_TOL * max(1.0, remaining - 1.0):
                q, _ = np.linalg.qr(v[:, lead:])
                v[:, lead:] = q
                p = np.einsum("ij,ij->i", q, q.conj()).real
    return occupied


def sample_batch(kernel: MatrixKernel, n_samples: int, base_seed: int,
                 start_index: int = 0, workers: int = 0) -> list[Configuration]:
    """Independent configurations; sample i uses the stream for (seed, i).

    Output order is by sample index and identical for any worker count.
    """
    if n_samples < 0:
        raise ValueError("n_samples must be nonnegative")
    indices = range(start_index, start_index + n_samples)
    if workers and workers > 1 and n_samples >= 4:
        chunks = _split(indices, workers)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(_batch_worker,
                             [(kernel, base_seed, list(c)) for c in chunks])
            out = [cfg for part in parts for cfg in part]
        return out
    return [sample(kernel, base_seed, index=i) for i in indices]


def _batch_worker(args):
    kernel, base_seed, indices = args
    return [sample(kernel, base_seed, index=i) for i in indices]


def _split(indices, parts):
    indices = list(indices)
    size = max(1, (len(indices) + parts - 1) // parts)
    return [indices[i:i + size] for i in range(0, len(indices), size)]


def sample_count_batch(kernel: MatrixKernel, n_samples: int, base_seed: int,
                       start_index: int = 0) -> np.ndarray:
    """Total point counts only, through the eigenvalue Bernoulli cardinality law.

    The count of a configuration equals the number of Bernoulli-selected
    eigenvectors, so this reproduces bit-for-bit the counts of
    :func:`sample_batch` while skipping the placement phase.
    """
    w = kernel.eig()[0]
    counts = np.empty(n_samples, dtype=np.int64)
    for i in range(n_samples):
        rng = stream_for(base_seed, start_index + i)
        counts[i] = int((rng.random(len(w)) < w).sum())
    return counts


def empirical_correlations(configs, sites, order: int):
    """Fraction of configurations occupying all given sites, with its binomial SE."""
    sites = tuple(int(s) for s in sites)
    if order > 3:
        raise ValueError("joint occupancy estimates support order <= 3")
    if len(set(sites)) != len(sites) or len(sites) != order:
        raise ValueError("sites must be distinct and match the requested order")
    hits = 0
    for cfg in configs:
        occ = set(cfg.occupied_sites)
        if all(s in occ for s in sites):
            hits += 1
    n = len(configs)
    p_hat = hits / n
    stderr = float(np.sqrt(p_hat * (1.0 - p_hat) / n))
    return p_hat, stderr
