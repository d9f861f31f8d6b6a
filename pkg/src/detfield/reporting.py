"""Deterministic CSV/JSON artifact writers with provenance headers.

Every output embeds the schema name, tool version, config hash, and seed as
``# key=value`` comment lines.  Floats are printed with 17 significant
digits, so identical runs produce byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from . import __version__

SCHEMAS = {
    "clt-run-v1": ["L", "n_sites", "exact_mean", "exact_var", "c3_norm",
                   "c4_norm", "emp_mean", "emp_var", "emp_skew", "emp_kurt",
                   "ks_dist", "n_samples", "seed"],
    "theorem2-run-v1": ["L", "n_sites", "exact_mean", "exact_var", "c3_norm",
                        "c4_norm", "emp_mean", "emp_var", "emp_skew",
                        "emp_kurt", "ks_dist", "n_samples", "seed",
                        "centering", "centering_discrepancy", "emp_var_white"],
    "exact-stats-v1": ["L", "n_sites", "exact_mean", "exact_var", "c3_norm",
                       "c4_norm"],
    "variance-scan-v1": ["L", "n_sites", "exact_var"],
    "m-scan-v1": ["lambda", "m_value", "phi_ratio_2x"],
    "samples-v1": ["sample_index", "s_raw", "s_norm"],
    "configurations-v1": ["seed", "site_count", "sites..."],
}


def config_hash(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def format_cell(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def write_csv(path, schema: str, rows, meta: dict, extra_header: dict | None = None):
    """Write rows under the named schema with a provenance comment header."""
    columns = SCHEMAS[schema]
    lines = [f"# schema={schema}",
             f"# version=detfield {__version__}"]
    for key in ("config_sha256", "seed"):
        if key in meta:
            lines.append(f"# {key}={meta[key]}")
    for key, value in (extra_header or {}).items():
        lines.append(f"# {key}={format_cell(value)}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(format_cell(v) for v in row))
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def write_json(path, payload: dict):
    path = Path(path)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def read_contract_csv(path):
    """Read a contract CSV back into (meta dict, column names, list of rows)."""
    meta, columns, rows = {}, None, []
    for raw in Path(path).read_text().splitlines():
        if raw.startswith("#"):
            body = raw[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                meta[key.strip()] = value.strip()
            continue
        if not raw.strip():
            continue
        if columns is None:
            columns = raw.split(",")
        else:
            rows.append(raw.split(","))
    return meta, columns or [], rows
