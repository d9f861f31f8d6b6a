"""Configuration-driven command line front end.

Subcommands: validate-kernel, exact-stats, sample, clt-run, variance-scan,
m-scan, theorem2-run.  Every run writes CSV artifacts plus a JSON summary
carrying fits, verdicts, seeds, and the config hash; errors are mirrored into
the summary.  Exit codes: 0 success, 1 config error, 2 kernel admissibility
failure, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import parse_config
from .errors import (AdmissibilityLost, DegenerateProjection, EnvelopeViolated,
                     MalformedSpectral, MZero, NumericallySingular, ParseError,
                     SigmaZero, TooManySites, ValidationError, VarianceTooSmall)
from .experiments import (LOG_LAW_REFERENCE, m_scan, run_clt, theorem2_run,
                          variance_scan)
from .kernels import build_circulant
from .reporting import config_hash, write_csv, write_json
from .sampler import sample_batch
from .spectral import validate_spectral

SUBCOMMANDS = ("validate-kernel", "exact-stats", "sample", "clt-run",
               "variance-scan", "m-scan", "theorem2-run")

CONFIG_EXIT = 1
ADMISSIBILITY_EXIT = 2
NUMERICAL_EXIT = 3

_ADMISSIBILITY_ERRORS = (AdmissibilityLost, MalformedSpectral, EnvelopeViolated)
_NUMERICAL_ERRORS = (NumericallySingular, DegenerateProjection, VarianceTooSmall,
                     SigmaZero, MZero, TooManySites)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="detfield",
        description="Determinantal point field laboratory")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="experiment config file")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--seed", type=int, default=None,
                        help="override mc.base_seed everywhere")
    parser.add_argument("--workers", type=int, default=0,
                        help="worker processes for Monte Carlo cells")
    parser.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="csv writes CSV artifacts plus a JSON summary; "
                             "json writes the summary only")
    args = parser.parse_args(argv)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary_path = out_dir / f"{args.subcommand.replace('-', '_')}_summary.json"

    try:
        config_text = Path(args.config).read_text()
    except OSError as exc:
        write_json(summary_path, {"error": str(exc), "exit_code": CONFIG_EXIT})
        print(f"error: {exc}", file=sys.stderr)
        return CONFIG_EXIT

    meta = {
        "config_sha256": config_hash(config_text),
        "version": f"detfield {__version__}",
        "subcommand": args.subcommand,
    }
    try:
        spec = parse_config(config_text)
        if args.seed is not None:
            if not 0 <= args.seed < 2 ** 64:
                raise ValidationError(["--seed: must fit in 64 bits"])
            spec.base_seed = int(args.seed)
        meta["seed"] = spec.base_seed
        payload = _dispatch(args, spec, meta, out_dir)
    except (ParseError, ValidationError) as exc:
        _fail(summary_path, meta, exc.messages, CONFIG_EXIT)
        return CONFIG_EXIT
    except _ADMISSIBILITY_ERRORS as exc:
        _fail(summary_path, meta, [str(exc)], ADMISSIBILITY_EXIT)
        return ADMISSIBILITY_EXIT
    except _NUMERICAL_ERRORS as exc:
        _fail(summary_path, meta, [str(exc)], NUMERICAL_EXIT)
        return NUMERICAL_EXIT

    payload.update(meta)
    write_json(summary_path, payload)
    return 0


def _fail(summary_path, meta, messages, code):
    payload = dict(meta)
    payload["errors"] = list(messages)
    payload["exit_code"] = code
    write_json(summary_path, payload)
    for message in messages:
        print(f"error: {message}", file=sys.stderr)


def _dispatch(args, spec, meta, out_dir) -> dict:
    workers = max(0, args.workers)
    name = args.subcommand
    if name == "validate-kernel":
        return _run_validate(spec)
    if name == "exact-stats":
        return _run_exact(spec, meta, out_dir, args)
    if name == "sample":
        return _run_sample(spec, meta, out_dir, args, workers)
    if name == "clt-run":
        return _run_clt(spec, meta, out_dir, args, workers)
    if name == "variance-scan":
        return _run_variance(spec, meta, out_dir, args)
    if name == "m-scan":
        return _run_mscan(spec, meta, out_dir, args)
    return _run_theorem2(spec, meta, out_dir, args, workers)


def _sites_for(spec) -> int:
    if spec.explicit_n_sites:
        return spec.explicit_n_sites
    base = max(spec.L_grid) if spec.L_grid else 16.0
    return spec.n_sites(base)


def _run_validate(spec) -> dict:
    report = validate_spectral(spec.spectral)
    if report.violations:
        raise AdmissibilityLost("; ".join(report.violations))
    kernel = build_circulant(spec.spectral, _sites_for(spec))
    return {
        "spectral_report": report.as_dict(),
        "kernel": {
            "n_sites": kernel.n_sites,
            "structure": kernel.structure_tag,
            "eig_min": float(kernel.eigenvalues.min()),
            "eig_max": float(kernel.eigenvalues.max()),
            "roundtrip_error": kernel.roundtrip_error,
            "diagonal_value": float(kernel.diagonal()[0]),
        },
    }


def _clt_row(row):
    return [row.L, row.n_sites, row.exact_mean, row.exact_var, row.c3_norm,
            row.c4_norm, row.emp_mean, row.emp_var, row.emp_skew, row.emp_kurt,
            row.ks_dist, row.n_samples, row.seed]


def _write_samples(out_dir, stem, meta, svals, zvals, fmt):
    if fmt != "csv" or len(svals) == 0:
        return None
    rows = [[i, float(s), float(z)]
            for i, (s, z) in enumerate(zip(svals, zvals))]
    path = out_dir / f"{stem}_samples.csv"
    write_csv(path, "samples-v1", rows, meta)
    return str(path)


def _run_clt(spec, meta, out_dir, args, workers) -> dict:
    result = run_clt(spec, workers=workers)
    if args.format == "csv":
        write_csv(out_dir / "clt_run.csv", "clt-run-v1",
                  [_clt_row(r) for r in result.rows], meta)
    samples_file = _write_samples(out_dir, "clt_run", meta,
                                  result.samples_at_largest_L,
                                  result.normalized_at_largest_L, args.format)
    return {
        "rows": [r.as_dict() for r in result.rows],
        "verdict": result.verdict.as_dict(),
        "var_floor_met": result.var_floor_met,
        "samples_csv": samples_file,
        "meta": result.meta,
    }


def _run_theorem2(spec, meta, out_dir, args, workers) -> dict:
    result = theorem2_run(spec, workers=workers)
    if args.format == "csv":
        rows = [_clt_row(r) + [r.centering, r.centering_discrepancy,
                               r.emp_var_white] for r in result.rows]
        write_csv(out_dir / "theorem2_run.csv", "theorem2-run-v1", rows, meta)
    samples_file = _write_samples(out_dir, "theorem2_run", meta,
                                  result.samples_at_largest_L,
                                  result.white_normalized_at_largest_L,
                                  args.format)
    return {
        "rows": [r.as_dict() for r in result.rows],
        "sigma2": result.sigma2,
        "integral_f": result.integral_f,
        "integral_f_sq": result.integral_f_sq,
        "white_noise_variance_target": result.integral_f_sq,
        "samples_csv": samples_file,
        "meta": result.meta,
    }


def _run_exact(spec, meta, out_dir, args) -> dict:
    silent = spec.__class__(**{**spec.__dict__, "n_samples": 0})
    result = run_clt(silent)
    rows = [[r.L, r.n_sites, r.exact_mean, r.exact_var, r.c3_norm, r.c4_norm]
            for r in result.rows]
    if args.format == "csv":
        write_csv(out_dir / "exact_stats.csv", "exact-stats-v1", rows, meta)
    return {"rows": [r.as_dict() for r in result.rows],
            "verdict": result.verdict.as_dict()}


SAMPLE_SITES_LIMIT = 4096


def _run_sample(spec, meta, out_dir, args, workers) -> dict:
    n_sites = _sites_for(spec)
    if n_sites > SAMPLE_SITES_LIMIT:
        raise ValidationError(
            [f"kernel.n_sites: full-lattice sampling caps at "
             f"{SAMPLE_SITES_LIMIT} sites, got {n_sites}; set kernel.n_sites "
             f"or shrink grid.L"])
    kernel = build_circulant(spec.spectral, n_sites)
    configs = sample_batch(kernel, spec.n_samples, spec.base_seed,
                           workers=workers)
    lines = [f"# schema=configurations-v1",
             f"# version=detfield {__version__}",
             f"# config_sha256={meta['config_sha256']}",
             f"# seed={spec.base_seed}",
             f"# kernel_id={kernel.kernel_id}"]
    lines += [cfg.to_csv_line() for cfg in configs]
    path = out_dir / "samples.csv"
    path.write_text("\n".join(lines) + "\n")
    mean_count = (float(np.mean([len(c.occupied_sites) for c in configs]))
                  if configs else 0.0)
    return {"n_samples": len(configs), "n_sites": kernel.n_sites,
            "kernel_id": kernel.kernel_id, "mean_count": mean_count,
            "expected_count": float(kernel.eigenvalues.sum()),
            "samples_csv": str(path)}


def _run_variance(spec, meta, out_dir, args) -> dict:
    result = variance_scan(spec)
    extra = {
        "fit_var_vs_logL_slope": result.log_fit.slope,
        "fit_logvar_vs_logL_slope": result.power_fit.slope,
        "preferred_fit": result.preferred,
        "reference_log_slope": LOG_LAW_REFERENCE,
        "route": result.route,
    }
    if args.format == "csv":
        write_csv(out_dir / "variance_scan.csv", "variance-scan-v1",
                  [[L, n, v] for (L, n, v) in result.rows], meta, extra)
    return {
        "rows": [{"L": L, "n_sites": n, "exact_var": v}
                 for (L, n, v) in result.rows],
        "log_fit": result.log_fit.as_dict(),
        "power_fit": result.power_fit.as_dict(),
        "preferred": result.preferred,
        "route": result.route,
        "reference_log_slope": LOG_LAW_REFERENCE,
        "growth_exponent": result.power_fit.slope,
    }


def _default_lambda_grid(spec):
    if spec.lambda_grid:
        return spec.lambda_grid
    return tuple(np.geomspace(1e-2, 1e-4, 16))


def _run_mscan(spec, meta, out_dir, args) -> dict:
    grid = _default_lambda_grid(spec)
    result = m_scan(spec.spectral, grid)
    extra = {"alpha_hat": result.alpha_hat, "intercept": result.intercept}
    rows = [[float(l), float(m), float(r)]
            for l, m, r in zip(result.lambdas, result.m_values, result.ratio_2x)]
    if args.format == "csv":
        write_csv(out_dir / "m_scan.csv", "m-scan-v1", rows, meta, extra)
    return {
        "alpha_hat": result.alpha_hat,
        "intercept": result.intercept,
        "lambda_grid": [float(x) for x in result.lambdas],
        "m_values": [float(x) for x in result.m_values],
        "phi_ratio_2x": [float(x) for x in result.ratio_2x],
    }


if __name__ == "__main__":
    sys.exit(main())
