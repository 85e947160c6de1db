"""Domain config files: TOML schema, loading, writing, fingerprinting.

Schema (version key required)::

    confmod_config = 1
    interval_outer = [a, b]
    interval_inner = [c, d]

    [outer.upper]            # likewise outer.lower, inner.upper, inner.lower
    kind = "samples"         # piecewise linear through points
    points = [[x0, y0], [x1, y1], ...]
    # or
    kind = "builtin"
    name = "polynomial"      # params.coeffs = [c0, c1, ...]  (ascending)
    # or
    name = "semicircle-arc"  # params.center = [x0, y0], params.radius = r,
                             # params.side = "upper" | "lower"

    [solver]                 # optional, all keys optional
    grid = { h0 = 0.0625, levels = 3, gap_cells = 16, aspect = 0 }
    cg = { tol = 1e-10, max_iters = 0 }
    truncation = { box_factor = 8.0 }

Unknown keys anywhere are errors, so typos fail loudly instead of being
silently ignored.
"""

from __future__ import annotations

import hashlib
import json
import sys
from pathlib import Path
from typing import Any, Mapping

from .errors import ConfigError
from .geometry import BoundaryFunction, ChannelDomain, validate_domain

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SCHEMA_VERSION = 1

_TOP_KEYS = {"confmod_config", "interval_outer", "interval_inner", "outer", "inner", "solver"}
_CURVE_KEYS = {"kind", "points", "name", "params"}
_SOLVER_KEYS = {"grid", "cg", "truncation"}
_GRID_KEYS = {"h0", "levels", "gap_cells", "aspect"}
_CG_KEYS = {"tol", "max_iters"}
_TRUNC_KEYS = {"box_factor"}


def _check_keys(table: Mapping, allowed: set[str], where: str) -> None:
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown} in {where}")


def _interval(raw: Any, key: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a [lo, hi] pair of numbers") from None
    if not lo < hi:
        raise ConfigError(f"{key} must satisfy lo < hi, got [{lo}, {hi}]")
    return lo, hi


def _curve(raw: Any, lo: float, hi: float, where: str) -> BoundaryFunction:
    if not isinstance(raw, Mapping):
        raise ConfigError(f"{where} must be a table")
    _check_keys(raw, _CURVE_KEYS, where)
    kind = raw.get("kind")
    if kind == "samples":
        points = raw.get("points")
        if points is None:
            raise ConfigError(f"{where}: samples kind requires a points list")
        try:
            f = BoundaryFunction.from_samples(points)
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from None
        if abs(f.lo - lo) > 1e-9 or abs(f.hi - hi) > 1e-9:
            raise ConfigError(f"{where}: sample points span [{f.lo}, {f.hi}] "
                              f"but the declared interval is [{lo}, {hi}]")
        return f
    if kind == "builtin":
        name = raw.get("name")
        params = raw.get("params", {})
        if not isinstance(params, Mapping):
            raise ConfigError(f"{where}: params must be a table")
        try:
            if name == "polynomial":
                _check_keys(params, {"coeffs"}, f"{where}.params")
                return BoundaryFunction.polynomial(params["coeffs"], lo, hi)
            if name == "semicircle-arc":
                _check_keys(params, {"center", "radius", "side"}, f"{where}.params")
                cx, cy = (float(v) for v in params["center"])
                return BoundaryFunction.semicircle(cx, cy, float(params["radius"]),
                                                  params["side"], lo, hi)
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"{where}: bad builtin parameters: {exc}") from None
        raise ConfigError(f"{where}: unknown builtin name {name!r}")
    raise ConfigError(f"{where}: kind must be 'samples' or 'builtin', got {kind!r}")


def parse_domain_mapping(data: Mapping) -> tuple[ChannelDomain, dict]:
    """Build and validate a domain from an already-parsed config mapping.

    Returns (domain, solver options dict); the options dict uses flat keys
    like "h0", "levels", "cg_tol" ready for SolverOptions construction.
    """
    _check_keys(data, _TOP_KEYS, "config")
    version = data.get("confmod_config")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"confmod_config = {SCHEMA_VERSION} required, got {version!r}")
    for key in ("interval_outer", "interval_inner", "outer", "inner"):
        if key not in data:
            raise ConfigError(f"missing required key {key}")
    a, b = _interval(data["interval_outer"], "interval_outer")
    c, d = _interval(data["interval_inner"], "interval_inner")
    for side in ("outer", "inner"):
        if not isinstance(data[side], Mapping):
            raise ConfigError(f"{side} must be a table with 'upper' and 'lower'")
        _check_keys(data[side], {"upper", "lower"}, side)
        for part in ("upper", "lower"):
            if part not in data[side]:
                raise ConfigError(f"missing required table {side}.{part}")

    dom = ChannelDomain(
        outer_upper=_curve(data["outer"]["upper"], a, b, "outer.upper"),
        outer_lower=_curve(data["outer"]["lower"], a, b, "outer.lower"),
        inner_upper=_curve(data["inner"]["upper"], c, d, "inner.upper"),
        inner_lower=_curve(data["inner"]["lower"], c, d, "inner.lower"),
    )
    validate_domain(dom)
    return dom, _solver_options(data.get("solver", {}))


def _solver_options(raw: Mapping) -> dict:
    if not isinstance(raw, Mapping):
        raise ConfigError("solver must be a table")
    _check_keys(raw, _SOLVER_KEYS, "solver")
    opts: dict = {}
    grid = raw.get("grid", {})
    _check_keys(grid, _GRID_KEYS, "solver.grid")
    if "h0" in grid:
        opts["h0"] = float(grid["h0"])
    if "levels" in grid:
        opts["levels"] = int(grid["levels"])
    if "gap_cells" in grid:
        opts["gap_cells"] = int(grid["gap_cells"])
    if "aspect" in grid and int(grid["aspect"]) != 0:
        opts["aspect"] = int(grid["aspect"])
    cg = raw.get("cg", {})
    _check_keys(cg, _CG_KEYS, "solver.cg")
    if "tol" in cg:
        opts["cg_tol"] = float(cg["tol"])
    if "max_iters" in cg and int(cg["max_iters"]) != 0:
        opts["cg_max_iters"] = int(cg["max_iters"])
    trunc = raw.get("truncation", {})
    _check_keys(trunc, _TRUNC_KEYS, "solver.truncation")
    if "box_factor" in trunc:
        opts["box_factor"] = float(trunc["box_factor"])
    return opts


def load_domain(path: str | Path) -> tuple[ChannelDomain, dict]:
    """Load a domain config file; returns (domain, solver option overrides)."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid TOML: {exc}") from None
    return parse_domain_mapping(data)


# ---------------------------------------------------------------------------
# serialization

def _curve_dict(f: BoundaryFunction) -> dict:
    if f.kind == "polynomial":
        return {"kind": "builtin", "name": "polynomial",
                "params": {"coeffs": list(f.params)}}
    if f.kind == "semicircle-arc":
        x0, y0, rx, ry, sign = f.params
        if rx != ry:
            # A stretched arc is elliptical and has no config spelling; fall
            # back to its sample rendering.
            return {"kind": "samples",
                    "points": [[float(a), float(b)] for a, b in zip(f.x, f.y)]}
        return {"kind": "builtin", "name": "semicircle-arc",
                "params": {"center": [x0, y0], "radius": rx,
                           "side": "upper" if sign > 0 else "lower"}}
    return {"kind": "samples",
            "points": [[float(a), float(b)] for a, b in zip(f.x, f.y)]}


def to_config_dict(dom: ChannelDomain) -> dict:
    a, b = dom.interval_outer
    c, d = dom.interval_inner
    return {
        "confmod_config": SCHEMA_VERSION,
        "interval_outer": [a, b],
        "interval_inner": [c, d],
        "outer": {"upper": _curve_dict(dom.outer_upper),
                  "lower": _curve_dict(dom.outer_lower)},
        "inner": {"upper": _curve_dict(dom.inner_upper),
                  "lower": _curve_dict(dom.inner_lower)},
    }


def domain_fingerprint(dom: ChannelDomain) -> str:
    """Stable content hash of the domain, for report provenance."""
    payload = json.dumps(to_config_dict(dom), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(float(v)) if isinstance(v, float) else str(v)
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v)} to TOML")


def dump_domain(dom: ChannelDomain, path: str | Path) -> None:
    """Write a domain as a config file (row-per-point for sample curves)."""
    cfg = to_config_dict(dom)
    lines = [f"confmod_config = {cfg['confmod_config']}",
             f"interval_outer = {_toml_value(cfg['interval_outer'])}",
             f"interval_inner = {_toml_value(cfg['interval_inner'])}"]
    for side in ("outer", "inner"):
        for part in ("upper", "lower"):
            curve = cfg[side][part]
            lines.append("")
            lines.append(f"[{side}.{part}]")
            lines.append(f'kind = {_toml_value(curve["kind"])}')
            if curve["kind"] == "builtin":
                lines.append(f'name = {_toml_value(curve["name"])}')
                for key, val in curve["params"].items():
                    lines.append(f"params.{key} = {_toml_value(val)}")
            else:
                lines.append("points = [")
                for x, y in curve["points"]:
                    lines.append(f"    [{x!r}, {y!r}],")
                lines.append("]")
    Path(path).write_text("\n".join(lines) + "\n")
