"""Reader for the detfield CSV contract.

Files carry ``# key=value`` provenance comments (including ``schema=``),
then a column-header row and data rows.  Statistics in the headers (fitted
slopes, exponents) are consumed as-is; nothing is recomputed here.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


class ContractError(Exception):
    """Base error for unusable input files."""


class SchemaMismatch(ContractError):
    """File schema is missing or does not match the requested plot kind."""


class EmptyData(ContractError):
    """File parses but contains no data rows."""


KIND_SCHEMAS = {
    "histogram": "samples-v1",
    "qq": "samples-v1",
    "growth": "variance-scan-v1",
    "m_curve": "m-scan-v1",
}


def read_csv(path):
    """Parse a contract CSV into (meta, columns dict of float arrays)."""
    path = Path(path)
    meta: dict[str, str] = {}
    header: list[str] | None = None
    rows: list[list[str]] = []
    for raw in path.read_text().splitlines():
        if raw.startswith("#"):
            body = raw[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                meta[key.strip()] = value.strip()
            continue
        if not raw.strip():
            continue
        if header is None:
            header = raw.split(",")
        else:
            rows.append(raw.split(","))
    if "schema" not in meta:
        raise SchemaMismatch(f"{path}: no schema header line")
    if header is None or not rows:
        raise EmptyData(f"{path}: no data rows")
    columns = {}
    for j, name in enumerate(header):
        try:
            columns[name] = np.array([float(r[j]) for r in rows])
        except (ValueError, IndexError) as exc:
            raise ContractError(f"{path}: column {name!r} unreadable: {exc}")
    return meta, columns


def check_kind(meta: dict, kind: str, path) -> None:
    expected = KIND_SCHEMAS[kind]
    if meta.get("schema") != expected:
        raise SchemaMismatch(
            f"{path}: plot kind {kind!r} needs schema {expected!r}, "
            f"file carries {meta.get('schema')!r}")
