"""Flat key-value experiment configuration with dotted keys.

The format is one ``key = value`` pair per line, ``#`` comments, and dotted
key groups (kernel.*, statistic.*, grid.*, mc.*, cumulants.*, perturbation.*).
Values are Python literals, a few call forms (``named(...)``, ``intervals(...)``,
``logspace(...)``), or a bare path to a two-column CSV for tabulated symbols.
Chosen over nested formats so experiment provenance diffs line by line.
"""

from __future__ import annotations

import ast

import numpy as np

from . import spectral, testfuncs
from .errors import MalformedSpectral, ParseError, ValidationError
from .experiments import ExperimentSpec

KNOWN_KEYS = {
    "kernel.spectral", "kernel.window_factor", "kernel.n_sites",
    "statistic.family", "statistic.a", "statistic.b",
    "statistic.center", "statistic.width", "statistic.steps",
    "grid.L", "grid.lambdas", "grid.variance_route",
    "mc.n_samples", "mc.base_seed",
    "cumulants.n_max",
    "perturbation.kind", "perturbation.eps", "perturbation.decay",
}


def parse_config(text: str) -> ExperimentSpec:
    """Parse config text into a validated experiment spec.

    Raises :class:`ParseError` for unreadable lines and
    :class:`ValidationError` (naming the offending keys) for readable but
    invalid experiments.
    """
    pairs, lines = _read_pairs(text)
    spec, problems = _build_spec(pairs, lines)
    if problems:
        raise ValidationError(problems)
    more = spec.validate()
    if more:
        raise ValidationError(more)
    return spec


def _read_pairs(text: str):
    pairs: dict = {}
    lines: dict = {}
    errors = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected 'key = value', got {line!r}")
            continue
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in KNOWN_KEYS:
            errors.append(f"line {lineno}: unknown key {key!r}")
            continue
        if key in pairs:
            errors.append(f"line {lineno}: duplicate key {key!r}")
            continue
        try:
            pairs[key] = _parse_value(value)
        except ParseError as exc:
            errors.append(f"line {lineno}: {key}: {exc.messages[0]}")
        lines[key] = lineno
    if errors:
        raise ParseError(errors)
    return pairs, lines


class _Call:
    def __init__(self, name, args, kwargs):
        self.name = name
        self.args = args
        self.kwargs = kwargs


def _parse_value(value: str):
    try:
        return ast.literal_eval(value)
    except (ValueError, SyntaxError):
        pass
    try:
        node = ast.parse(value, mode="eval").body
    except SyntaxError:
        return value  # bare string, e.g. a file path
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
        try:
            args = [ast.literal_eval(a) for a in node.args]
            kwargs = {kw.arg: ast.literal_eval(kw.value) for kw in node.keywords}
        except (ValueError, SyntaxError):
            raise ParseError(f"arguments of {node.func.id}(...) must be literals")
        return _Call(node.func.id, args, kwargs)
    return value


def _build_spec(pairs: dict, lines: dict):
    problems = []

    def complain(key, message):
        where = f" (line {lines[key]})" if key in lines else ""
        problems.append(f"{key}: {message}{where}")

    spec_value = pairs.get("kernel.spectral")
    spectral_fn = None
    if spec_value is None:
        complain("kernel.spectral", "is required")
    else:
        try:
            spectral_fn = _spectral_from_value(spec_value)
        except (MalformedSpectral, ParseError, OSError, TypeError) as exc:
            complain("kernel.spectral", str(exc))

    statistic = None
    try:
        statistic = _statistic_from_pairs(pairs)
    except (ValueError, TypeError) as exc:
        complain("statistic.family", str(exc))

    grid = pairs.get("grid.L", ())
    if isinstance(grid, (int, float)):
        grid = (grid,)
    try:
        grid = tuple(float(x) for x in grid)
    except (TypeError, ValueError):
        complain("grid.L", "must be a list of dilations")
        grid = ()

    lambdas = pairs.get("grid.lambdas")
    if isinstance(lambdas, _Call):
        if lambdas.name != "logspace" or len(lambdas.args) != 3:
            complain("grid.lambdas", "call form must be logspace(hi, lo, count)")
            lambdas = None
        else:
            hi, lo, count = lambdas.args
            lambdas = tuple(np.geomspace(float(hi), float(lo), int(count)))
    elif lambdas is not None:
        try:
            lambdas = tuple(float(x) for x in lambdas)
        except (TypeError, ValueError):
            complain("grid.lambdas", "must be a list or logspace(hi, lo, count)")
            lambdas = None

    def numeric(key, default, kind=float, minimum=None):
        value = pairs.get(key, default)
        try:
            value = kind(value)
        except (TypeError, ValueError):
            complain(key, f"must be a {kind.__name__}")
            return default
        if minimum is not None and value < minimum:
            complain(key, f"must be at least {minimum}")
            return default
        return value

    spec = None
    if not problems and spectral_fn is not None and statistic is not None:
        spec = ExperimentSpec(
            spectral=spectral_fn,
            statistic=statistic,
            L_grid=grid,
            n_samples=numeric("mc.n_samples", 10000, int, 0),
            base_seed=numeric("mc.base_seed", 12345, int, 0),
            window_factor=numeric("kernel.window_factor", 16.0, float, 1.0),
            cumulant_orders=numeric("cumulants.n_max", 4, int, 2),
            perturbation_kind=str(pairs.get("perturbation.kind", "none")),
            perturbation_eps=numeric("perturbation.eps", 0.0),
            perturbation_decay=numeric("perturbation.decay", 0.5),
            variance_route=str(pairs.get("grid.variance_route", "auto")),
            lambda_grid=lambdas,
            explicit_n_sites=(int(pairs["kernel.n_sites"])
                              if "kernel.n_sites" in pairs else None),
        )
    return spec, problems


def _spectral_from_value(value):
    if isinstance(value, _Call):
        if value.name == "named":
            if not value.args:
                raise ParseError("named(...) needs a family name")
            return spectral.named(str(value.args[0]), **value.kwargs)
        if value.name == "intervals":
            if len(value.args) != 1:
                raise ParseError("intervals(...) takes one list of [a, b] pairs")
            return spectral.IntervalUnion(value.args[0])
        raise ParseError(f"unknown spectral form {value.name!r}")
    if isinstance(value, str):
        return spectral.from_csv(value)
    if isinstance(value, (list, tuple)):
        return spectral.IntervalUnion(value)
    raise ParseError(f"cannot interpret {value!r} as a spectral symbol")


def _statistic_from_pairs(pairs: dict):
    family = pairs.get("statistic.family", "indicator")
    if family == "indicator":
        return testfuncs.indicator(pairs.get("statistic.a", 0.0),
                                   pairs.get("statistic.b", 1.0))
    if family == "gaussian":
        return testfuncs.gaussian(pairs.get("statistic.center", 0.0),
                                  pairs.get("statistic.width", 1.0))
    if family == "bump":
        return testfuncs.bump(pairs.get("statistic.center", 0.0),
                              pairs.get("statistic.width", 1.0))
    if family == "step_combo":
        steps = pairs.get("statistic.steps")
        if not steps:
            raise ValueError("step_combo needs statistic.steps = [[alpha, a, b], ...]")
        return testfuncs.step_combo(steps)
    raise ValueError(f"unknown statistic family {family!r}")
