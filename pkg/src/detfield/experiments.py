"""Scaling experiments confronting exact formulas and samples with limit laws.

Each experiment cell (one dilation L) is independent: it builds the lattice
kernel, computes exact statistics, draws Monte Carlo samples through
deterministic per-sample streams, and records normality diagnostics.  Cells
are merged by L index, so worker parallelism never changes the output.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sp_stats

from .errors import MZero, SigmaZero, VarianceTooSmall
from .exact import cumulant_table, mean_Sf, var_Sf, var_spectral, _support_indices
from .kernels import MatrixKernel, build_circulant, perturb, rank_one_envelope
from .sampler import draw_occupied, sample_count_batch
from .spectral import (IntervalUnion, SpectralFunction, m_lambda,
                       m_lambda_torus, sigma2)
from .testfuncs import TestFunction

VAR_FLOOR_FOR_NORMALIZATION = 1e-6
VERDICT_VAR_FLOOR = 4.0
SUPPORT_MARGIN = 2.0          # free lattice units of L on each side of the support
LOG_LAW_REFERENCE = 1.0 / math.pi ** 2


@dataclass
class ExperimentSpec:
    """Declarative description of one scaling experiment."""

    spectral: SpectralFunction
    statistic: TestFunction
    L_grid: tuple[float, ...]
    n_samples: int = 10000
    base_seed: int = 12345
    window_factor: float = 16.0
    cumulant_orders: int = 4
    perturbation_kind: str = "none"       # none | rank_one
    perturbation_eps: float = 0.0
    perturbation_decay: float = 0.5
    variance_route: str = "auto"          # auto | lattice | spectral
    lambda_grid: tuple[float, ...] | None = None
    explicit_n_sites: int | None = None   # validate-kernel / sample subcommands

    def n_sites(self, L: float) -> int:
        return int(math.ceil(self.window_factor * L))

    def validate(self) -> list[str]:
        problems = []
        grid = self.L_grid
        if not grid:
            problems.append("grid.L: needs at least one dilation")
        elif any(b <= a for a, b in zip(grid, grid[1:])):
            problems.append("grid.L: dilations must be strictly increasing")
        if self.n_samples < 0:
            problems.append("mc.n_samples: must be nonnegative")
        if not 0 <= self.base_seed < 2 ** 64:
            problems.append("mc.base_seed: must fit in 64 bits")
        if self.window_factor <= 0:
            problems.append("kernel.window_factor: must be positive")
        if self.cumulant_orders < 2 or self.cumulant_orders > 8:
            problems.append("cumulants.n_max: supported range is 2..8")
        if self.perturbation_kind not in ("none", "rank_one"):
            problems.append("perturbation.kind: must be 'none' or 'rank_one'")
        if self.variance_route not in ("auto", "lattice", "spectral"):
            problems.append("grid.variance_route: must be auto, lattice or spectral")
        lo, hi = self.statistic.effective_support()
        for L in grid or ():
            n = self.n_sites(L)
            cmin, cmax = -(n // 2), n - 1 - n // 2
            if (lo - SUPPORT_MARGIN) * L < cmin or (hi + SUPPORT_MARGIN) * L > cmax:
                problems.append(
                    f"grid.L: scaled support [{lo}, {hi}] at L={L} does not fit "
                    f"the {n}-site lattice with margin {2 * SUPPORT_MARGIN}")
                break
        return problems


@dataclass
class ExperimentRow:
    L: float
    n_sites: int
    exact_mean: float
    exact_var: float
    c3_norm: float
    c4_norm: float
    emp_mean: float = math.nan
    emp_var: float = math.nan
    emp_skew: float = math.nan
    emp_kurt: float = math.nan
    ks_dist: float = math.nan
    n_samples: int = 0
    seed: int = 0
    mean_gate_ok: bool = True
    var_gate_ok: bool = True
    centering: float = math.nan
    centering_discrepancy: float = math.nan
    emp_var_white: float = math.nan

    def as_dict(self) -> dict:
        out = {}
        for key, value in self.__dict__.items():
            if isinstance(value, float) and math.isnan(value):
                value = None
            out[key] = value
        return out


@dataclass
class VerdictRecord:
    status: str                 # PASS | INCONCLUSIVE
    reasons: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return {"status": self.status, "reasons": list(self.reasons)}


@dataclass
class CltResult:
    rows: list[ExperimentRow]
    verdict: VerdictRecord
    var_floor_met: bool
    samples_at_largest_L: np.ndarray
    normalized_at_largest_L: np.ndarray
    meta: dict = field(default_factory=dict)


def _build_kernel(spec: ExperimentSpec, L: float) -> tuple[MatrixKernel, float]:
    """Kernel for one cell plus the translation-invariant diagonal value."""
    base = build_circulant(spec.spectral, spec.n_sites(L))
    a0 = float(base.generating_row()[0].real)
    if spec.perturbation_kind == "rank_one" and spec.perturbation_eps != 0.0:
        env = rank_one_envelope(base.coords, spec.perturbation_eps,
                                spec.perturbation_decay)
        return perturb(base, env), a0
    return base, a0


def _window_kernel(kernel: MatrixKernel, f: TestFunction, L: float):
    """Kernel restricted to the support window of the scaled statistic.

    Restriction preserves the joint occupancy law on the window, so sampling
    the restricted kernel samples the statistic exactly.
    """
    fv = f.values_on_sites(kernel.coords, L)
    idx = _support_indices(fv)
    return kernel.restrict(idx), fv[idx]


_POOL_STATE: dict = {}


def _pool_init(eig, fv, base_seed):
    _POOL_STATE["eig"] = eig
    _POOL_STATE["fv"] = fv
    _POOL_STATE["seed"] = base_seed


def _pool_chunk(bounds):
    start, stop = bounds
    w, v = _POOL_STATE["eig"]
    fv = _POOL_STATE["fv"]
    seed = _POOL_STATE["seed"]
    out = np.empty(stop - start)
    for i in range(start, stop):
        occ = draw_occupied(w, v, seed, i)
        out[i - start] = fv[occ].sum()
    return out


def _statistic_samples(window: MatrixKernel, fv_window, n_samples: int,
                       base_seed: int, workers: int = 0) -> np.ndarray:
    """Monte Carlo draws of the statistic on the support window.

    When the weights are constant over the window the statistic is a pure
    count, which follows the eigenvalue Bernoulli cardinality law; that path
    reproduces the counts of full placement sampling bit-for-bit.
    """
    if n_samples == 0:
        return np.empty(0)
    fv_window = np.asarray(fv_window, dtype=float)
    if np.all(fv_window == fv_window[0]):
        counts = sample_count_batch(window, n_samples, base_seed)
        return fv_window[0] * counts
    eig = window.eig()
    if workers and workers > 1 and n_samples >= 4:
        size = (n_samples + workers - 1) // workers
        bounds = [(i, min(i + size, n_samples)) for i in range(0, n_samples, size)]
        with ProcessPoolExecutor(
                max_workers=workers, initializer=_pool_init,
                initargs=(eig, fv_window, base_seed)) as pool:
            parts = list(pool.map(_pool_chunk, bounds))
        return np.concatenate(parts)
    _pool_init(eig, fv_window, base_seed)
    return np.concatenate([_pool_chunk((0, n_samples))])


def _empirical_block(svals, exact_mean, exact_var):
    z = (svals - exact_mean) / math.sqrt(exact_var)
    return {
        "emp_mean": float(svals.mean()),
        "emp_var": float(svals.var(ddof=1)),
        "emp_skew": float(sp_stats.skew(z)),
        "emp_kurt": float(sp_stats.kurtosis(z)),
        "ks_dist": float(sp_stats.kstest(z, "norm").statistic),
    }


def _gates(row: ExperimentRow):
    se_mean = math.sqrt(row.exact_var / row.n_samples)
    row.mean_gate_ok = abs(row.emp_mean - row.exact_mean) < 5.0 * se_mean
    se_var = row.exact_var * math.sqrt(2.0 / row.n_samples)
    row.var_gate_ok = abs(row.emp_var - row.exact_var) < 5.0 * se_var


def run_clt(spec: ExperimentSpec, workers: int = 0) -> CltResult:
    """Exact statistics, sampling, and normality diagnostics per dilation."""
    _require_valid(spec)
    rows = []
    trajectories = {order: [] for order in range(3, spec.cumulant_orders + 1)}
    last_svals = np.empty(0)
    last_norm = np.empty(0)
    for L in spec.L_grid:
        kernel, _ = _build_kernel(spec, L)
        row = _exact_cell(spec, kernel, L, trajectories)
        if spec.n_samples > 0:
            window, fv_window = _window_kernel(kernel, spec.statistic, L)
            svals = _statistic_samples(window, fv_window, spec.n_samples,
                                       spec.base_seed, workers)
            row.n_samples = spec.n_samples
            row.seed = spec.base_seed
            stats_block = _empirical_block(svals, row.exact_mean, row.exact_var)
            for key, value in stats_block.items():
                setattr(row, key, value)
            _gates(row)
            if L == spec.L_grid[-1]:
                last_svals = svals
                last_norm = (svals - row.exact_mean) / math.sqrt(row.exact_var)
        rows.append(row)
    final_var = rows[-1].exact_var
    verdict = clt_verdict(trajectories)
    return CltResult(rows=rows, verdict=verdict,
                     var_floor_met=final_var >= VERDICT_VAR_FLOOR,
                     samples_at_largest_L=last_svals,
                     normalized_at_largest_L=last_norm,
                     meta={"base_seed": spec.base_seed,
                           "final_exact_var": final_var})


def _exact_cell(spec, kernel, L, trajectories) -> ExperimentRow:
    exact_mean = mean_Sf(kernel, spec.statistic, L)
    exact_var = var_Sf(kernel, spec.statistic, L)
    if exact_var < VAR_FLOOR_FOR_NORMALIZATION:
        raise VarianceTooSmall(
            f"exact variance {exact_var:.3e} at L={L} cannot normalize")
    table = cumulant_table(kernel, spec.statistic, L, spec.cumulant_orders)
    normalized = table.normalized
    for order in trajectories:
        trajectories[order].append(normalized[order - 1])
    c3 = normalized[2] if spec.cumulant_orders >= 3 else math.nan
    c4 = normalized[3] if spec.cumulant_orders >= 4 else math.nan
    return ExperimentRow(L=L, n_sites=kernel.n_sites, exact_mean=exact_mean,
                         exact_var=exact_var, c3_norm=c3, c4_norm=c4)


def clt_verdict(trajectories: dict, final_threshold: float = 0.1) -> VerdictRecord:
    """Cumulant-decay verdict: PASS when every tracked normalized cumulant
    shrinks over the top half of the grid and ends below the threshold.

    Never claims failure of a limit law; anything short of clean decay is
    INCONCLUSIVE at desk scale.
    """
    reasons = []
    for order, values in sorted(trajectories.items()):
        mags = [abs(v) for v in values]
        if len(mags) < 3:
            reasons.append(f"order {order}: needs at least 3 grid points")
            continue
        tail = mags[len(mags) // 2:]
        if any(b > a * (1 + 1e-9) + 1e-15 for a, b in zip(tail, tail[1:])):
            reasons.append(f"order {order}: magnitude not decreasing on top half")
        if mags[-1] >= final_threshold:
            reasons.append(f"order {order}: final magnitude {mags[-1]:.3g} "
                           f">= {final_threshold}")
    status = "PASS" if not reasons else "INCONCLUSIVE"
    return VerdictRecord(status=status, reasons=tuple(reasons))


@dataclass
class FitReport:
    slope: float
    intercept: float
    rel_residual: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class VarianceScanResult:
    rows: list[tuple[float, int, float]]       # (L, n_sites, exact var)
    log_fit: FitReport
    power_fit: FitReport
    preferred: str                             # "log" | "power"
    route: str
    meta: dict = field(default_factory=dict)


def _fit(x, y) -> FitReport:
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    spread = y - y.mean()
    denom = float(np.sqrt(np.mean(spread ** 2)))
    rel = float(np.sqrt(np.mean(resid ** 2))) / denom if denom > 0 else math.inf
    return FitReport(slope=float(slope), intercept=float(intercept),
                     rel_residual=rel)


def variance_scan(spec: ExperimentSpec) -> VarianceScanResult:
    """Exact variance growth over the dilation grid with two candidate laws.

    The variance is computed on the built lattice by default; interval-union
    symbols whose thinnest interval cannot be resolved by the lattice
    frequency grid switch to the frequency-domain quadrature route.
    """
    _require_valid(spec)
    if len(spec.L_grid) < 5:
        raise ValueError("variance scan needs at least 5 grid points")
    route = spec.variance_route
    if route == "auto":
        route = "spectral" if _needs_spectral_route(spec) else "lattice"
    rows = []
    for L in spec.L_grid:
        n = spec.n_sites(L)
        if route == "lattice":
            kernel, _ = _build_kernel(spec, L)
            var = var_Sf(kernel, spec.statistic, L)
        else:
            var = var_spectral(spec.spectral, spec.statistic, L)
        rows.append((L, n, var))
    count = len(rows)
    start = count - max(3, math.ceil(2 * count / 3))
    tail = rows[start:]
    Ls = np.array([r[0] for r in tail], dtype=float)
    vars_ = np.array([r[2] for r in tail], dtype=float)
    log_fit = _fit(np.log(Ls), vars_)
    if np.any(vars_ <= 0):
        power_fit = FitReport(math.nan, math.nan, math.inf)
    else:
        power_fit = _fit(np.log(Ls), np.log(vars_))
    preferred = "log" if log_fit.rel_residual <= power_fit.rel_residual else "power"
    return VarianceScanResult(
        rows=rows, log_fit=log_fit, power_fit=power_fit, preferred=preferred,
        route=route,
        meta={"fit_window_start": start,
              "log_law_reference": LOG_LAW_REFERENCE,
              "growth_exponent": power_fit.slope})


def _needs_spectral_route(spec: ExperimentSpec) -> bool:
    if not isinstance(spec.spectral, IntervalUnion):
        return False
    min_len = min(b - a for a, b in spec.spectral.intervals)
    finest = spec.n_sites(max(spec.L_grid))
    return min_len * finest < 64.0


@dataclass
class MScanResult:
    lambdas: np.ndarray
    m_values: np.ndarray
    alpha_hat: float
    intercept: float
    ratio_2x: np.ndarray
    meta: dict = field(default_factory=dict)


def m_scan(s: SpectralFunction, lambda_grid) -> MScanResult:
    """Power-law probe of the variance spectral density near the origin.

    Fits log m against log lambda and reports, per grid point, the
    slow-variation ratio of the residual factor at doubled argument.
    In-band symbols are probed with the lattice (torus) density; unions
    reaching outside the band fall back to the line convention.
    """
    lam = np.asarray(lambda_grid, dtype=float)
    if len(lam) < 8:
        raise ValueError("lambda grid needs at least 8 points")
    if np.any(lam <= 0):
        raise ValueError("lambda grid must be positive")
    if np.any(np.diff(lam) >= 0):
        raise ValueError("lambda grid must decrease toward zero")
    density = m_lambda_torus if s.in_band() else m_lambda
    m_vals = np.asarray(density(s, lam), dtype=float)
    if np.all(m_vals <= 1e-15 * (s.mass + 1.0)):
        raise MZero("variance spectral density vanishes on the probe grid")
    asc = np.argsort(lam)
    slope, intercept = np.polyfit(np.log(lam[asc]), np.log(m_vals[asc]), 1)
    m_doubled = np.asarray(density(s, 2.0 * lam), dtype=float)
    ratio = m_doubled / (2.0 ** slope * m_vals)
    return MScanResult(lambdas=lam, m_values=m_vals, alpha_hat=float(slope),
                       intercept=float(intercept), ratio_2x=ratio,
                       meta={"mass": s.mass})


@dataclass
class WhiteNoiseResult:
    rows: list[ExperimentRow]
    sigma2: float
    integral_f: float
    integral_f_sq: float
    samples_at_largest_L: np.ndarray
    white_normalized_at_largest_L: np.ndarray
    meta: dict = field(default_factory=dict)


def theorem2_run(spec: ExperimentSpec, workers: int = 0) -> WhiteNoiseResult:
    """White-noise scaling run: analytic centering and sigma sqrt(L) scaling.

    The statistic is centered at a0 * L * integral(f) (not the exact mean)
    and scaled by sigma * sqrt(L); the recorded centering discrepancy grows
    at most like sqrt(L).  Shape diagnostics (KS, skewness, kurtosis) use the
    exact normalization to isolate distributional shape.
    """
    _require_valid(spec)
    var0 = sigma2(spec.spectral)
    if var0 <= VAR_FLOOR_FOR_NORMALIZATION:
        raise SigmaZero(
            f"sigma^2 = {var0:.3e}; indicator-type symbols degenerate here")
    sigma = math.sqrt(var0)
    int_f = spec.statistic.integral()
    int_f2 = spec.statistic.integral_sq()
    rows = []
    last_svals = np.empty(0)
    last_white = np.empty(0)
    trajectories = {order: [] for order in range(3, spec.cumulant_orders + 1)}
    for L in spec.L_grid:
        kernel, a0 = _build_kernel(spec, L)
        row = _exact_cell(spec, kernel, L, trajectories)
        row.centering = a0 * L * int_f
        row.centering_discrepancy = abs(row.exact_mean - row.centering)
        if spec.n_samples > 0:
            window, fv_window = _window_kernel(kernel, spec.statistic, L)
            svals = _statistic_samples(window, fv_window, spec.n_samples,
                                       spec.base_seed, workers)
            row.n_samples = spec.n_samples
            row.seed = spec.base_seed
            for key, value in _empirical_block(svals, row.exact_mean,
                                               row.exact_var).items():
                setattr(row, key, value)
            _gates(row)
            white = (svals - row.centering) / (sigma * math.sqrt(L))
            row.emp_var_white = float(white.var(ddof=1))
            if L == spec.L_grid[-1]:
                last_svals = svals
                last_white = white
        rows.append(row)
    return WhiteNoiseResult(rows=rows, sigma2=var0, integral_f=int_f,
                            integral_f_sq=int_f2,
                            samples_at_largest_L=last_svals,
                            white_normalized_at_largest_L=last_white,
                            meta={"base_seed": spec.base_seed})


def _require_valid(spec: ExperimentSpec):
    problems = spec.validate()
    if problems:
        raise ValueError("; ".join(problems))
