"""Run configuration: a strict TOML document, validated into a RunConfig.

A document looks like::

    command = "sweep"          # or give only  recipe = "fig2a"
    [system]
    family = "H"
    variant = "CES"
    [params]
    axis = "b"
    values = [0.0, 0.5, 1.0]
    levels = [1, 2, 3]
    [output]
    format = "csv"

Unknown keys anywhere are errors. Parse errors carry the line number,
validation errors name the offending field.
"""
from dataclasses import dataclass, field, fields
import math
import re

import numpy as np
import tomli
import tomli_w

from .errors import ConfigError, SwkbLabError
from .systems import SystemSpec, build_system

COMMANDS = ("swkb", "sweep", "residual", "domain", "poles", "qhj", "spectrum", "verify")
FORMATS = ("csv", "json")
# singularity and contour reports are nested; everything else is a flat table
JSON_DEFAULT = ("poles", "qhj")

_SYSTEM_KEYS = {f.name for f in fields(SystemSpec)}
_OUTPUT_KEYS = {"path", "format"}
_TOP_KEYS = {"command", "recipe", "system", "params", "output"}


def _float(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _floats(v):
    return isinstance(v, list) and all(_float(x) for x in v)


def _ints(v):
    return isinstance(v, list) and all(_int(x) for x in v)


def _pair(v):
    return _floats(v) and len(v) == 2 and v[0] < v[1]


def _rect(v):
    return _floats(v) and len(v) == 4 and v[0] < v[1] and v[2] < v[3]


# name -> (check, default, description of the expected type)
_P = {
    "levels": (_ints, [1], "list of integers >= 0"),
    "multi_bracket": (lambda v: isinstance(v, bool), False, "boolean"),
    "axis": (lambda v: v in ("b", "beta", "n"), "b", "one of 'b', 'beta', 'n'"),
    "values": (_floats, None, "list of numbers"),
    "start": (_float, None, "number"),
    "stop": (_float, None, "number"),
    "num": (lambda v: _int(v) and v >= 1, None, "integer >= 1"),
    "n": (lambda v: _int(v) and v >= 0, 1, "integer >= 0"),
    "K": (lambda v: _int(v) and v >= 0, 10, "integer >= 0"),
    "b_range": (_pair, [-2.0, 4.0], "[lo, hi] with lo < hi"),
    "beta_range": (_pair, [-1.12837916709551, 1.12837916709551], "[lo, hi] with lo < hi"),
    "num_b": (lambda v: _int(v) and v >= 2, 60, "integer >= 2"),
    "num_beta": (lambda v: _int(v) and v >= 2, 60, "integer >= 2"),
    "region": (_rect, [-2.0, 2.0, -2.0, 2.0], "[x0, x1, y0, y1] with x0 < x1, y0 < y1"),
    "resolution": (lambda v: _ints(v) and len(v) == 2 and min(v) >= 1, [8, 8], "[nx, ny]"),
    "target": (lambda v: v in ("qmf", "integrand", "both"), "qmf", "one of 'qmf', 'integrand', 'both'"),
    "b_values": (_floats, None, "list of numbers"),
    "height": (lambda v: _float(v) and v > 0, 0.1, "number > 0"),
    "margin": (lambda v: _float(v) and v > 0, 0.1, "number > 0"),
    "radii": (lambda v: _floats(v) and all(r > 0 for r in v), [], "list of numbers > 0"),
    "e_hi": (lambda v: _float(v) and v > 0, None, "number > 0"),
}

COMMAND_PARAMS = {
    "swkb": ("levels", "multi_bracket"),
    "sweep": ("axis", "values", "start", "stop", "num", "levels", "multi_bracket"),
    "residual": ("n", "K", "axis", "values", "start", "stop", "num"),
    "domain": ("levels", "b_range", "beta_range", "num_b", "num_beta"),
    "poles": ("n", "region", "resolution", "target", "b_values"),
    "qhj": ("levels", "height", "margin", "radii"),
    "spectrum": ("levels", "e_hi"),
    "verify": (),
}
# per-command defaults that differ from the shared table
_COMMAND_DEFAULTS = {
    "swkb": {"levels": [1, 2, 3, 4, 5]},
    "spectrum": {"levels": [1, 2, 3, 4]},
    "residual": {"axis": None},
}

_BETA_MAX = 2 / math.sqrt(math.pi)


@dataclass
class RunConfig:
    command: str
    system: SystemSpec
    params: dict = field(default_factory=dict)
    output_path: str = None
    output_format: str = None
    recipe: str = None

    @property
    def format(self):
        if self.output_format:
            return self.output_format
        return "json" if self.command in JSON_DEFAULT else "csv"


# figure recipes ----------------------------------------------------------------

_CESH = {"family": "H", "variant": "CES"}
_FIG1_B = [-0.5, 0.0, 0.1, 3.5, 4.0, 4.1]


def _open_grid(lo, hi, num):
    """num points strictly inside (lo, hi)."""
    return [float(v) for v in np.linspace(lo, hi, num + 2)[1:-1]]


RECIPES = {
    # QMF pole structure of the first excited CES-H state for a ladder of b
    "fig1-series": {
        "command": "poles",
        "system": dict(_CESH),
        "params": {"n": 1, "region": [-3.0, 3.0, -3.0, 3.0], "resolution": [6, 6], "target": "qmf", "b_values": _FIG1_B},
    },
    "fig2a": {
        "command": "sweep",
        "system": dict(_CESH),
        "params": {"axis": "b", "values": [float(v) for v in np.linspace(-2.0, 4.0, 121)[1:]], "levels": [1, 2, 3]},
    },
    "fig2b": {
        "command": "sweep",
        "system": dict(_CESH),
        "params": {"axis": "beta", "values": _open_grid(-_BETA_MAX, _BETA_MAX, 111), "levels": [1, 2, 3]},
    },
    # singularities of the SWKB integrand for the same b ladder
    "fig3": {
        "command": "poles",
        "system": dict(_CESH),
        "params": {"n": 1, "region": [-3.0, 3.0, -3.0, 3.0], "resolution": [6, 6], "target": "integrand", "b_values": _FIG1_B},
    },
    "fig5": {
        "command": "domain",
        "system": dict(_CESH),
        "params": {"levels": [1, 2, 3], "b_range": [-1.99, 4.0], "beta_range": [-1.128, 1.128], "num_b": 60, "num_beta": 60},
    },
    "fig6a": {
        "command": "residual",
        "system": dict(_CESH),
        "params": {"n": 1, "K": 0, "axis": "b", "values": [float(v) for v in np.linspace(-2.0, 4.0, 121)[1:]]},
    },
    "fig6b": {
        "command": "residual",
        "system": dict(_CESH),
        "params": {"n": 1, "K": 0, "axis": "beta", "values": _open_grid(-_BETA_MAX, _BETA_MAX, 111)},
    },
    "fig7a": {
        "command": "residual",
        "system": dict(_CESH),
        "params": {"n": 1, "K": 3, "axis": "b", "values": [float(v) for v in np.linspace(-2.0, 4.0, 121)[1:]]},
    },
    "fig7b": {
        "command": "residual",
        "system": dict(_CESH),
        "params": {"n": 1, "K": 3, "axis": "beta", "values": _open_grid(-_BETA_MAX, _BETA_MAX, 111)},
    },
    "fig8": {
        "command": "poles",
        "system": {"family": "H", "variant": "KA", "d": 1},
        "params": {"n": 1, "region": [-2.0, 2.0, -2.0, 2.0], "resolution": [8, 8], "target": "both"},
    },
    "fig9": {
        "command": "sweep",
        "system": {"family": "H", "variant": "KA", "d": 1},
        "params": {"axis": "n", "values": [float(v) for v in range(9)]},
    },
}


# parsing -----------------------------------------------------------------------


def _line_of(text, section, key):
    """1-based line of ``key = ...`` inside ``[section]`` (top level if None)."""
    current = None
    pat = re.compile(r"^\s*(\"?)" + re.escape(key) + r"\1\s*=") if key else None
    for i, line in enumerate(text.splitlines(), 1):
        head = re.match(r"^\s*\[([^\]]+)\]", line)
        if head:
            current = head.group(1).strip()
            if current == section and key is None:
                return i
            continue
        if current == section and key is not None and pat.match(line):
            return i
    return None


def _strict(text, section, table, allowed):
    for key in table:
        if key not in allowed:
            where = f"[{section}]" if section else "top level"
            raise ConfigError(
                f"unknown key {key!r} in {where}", line=_line_of(text, section, key), field=f"{section}.{key}" if section else key
            )


def _expand_axis(params, command):
    """Turn start/stop/num into an explicit values list."""
    have = [params.get(k) is not None for k in ("start", "stop", "num")]
    if any(have):
        if not all(have):
            raise ConfigError("start, stop and num must be given together", field="params.start")
        if params.get("values") is not None:
            raise ConfigError("give either values or start/stop/num, not both", field="params.values")
        params["values"] = [float(v) for v in np.linspace(params["start"], params["stop"], params["num"])]
    for k in ("start", "stop", "num"):
        params.pop(k, None)
    if command == "sweep" and not params.get("values"):
        raise ConfigError("sweep needs params.values (or start/stop/num)", field="params.values")
    if command == "residual" and params.get("axis") and not params.get("values"):
        raise ConfigError("residual with an axis needs params.values", field="params.values")


def _validate_params(text, command, given):
    allowed = COMMAND_PARAMS[command]
    _strict(text, "params", given, allowed)
    params = {}
    for name in allowed:
        check, default, expect = _P[name]
        default = _COMMAND_DEFAULTS.get(command, {}).get(name, default)
        if name in given:
            value = given[name]
            if not check(value):
                raise ConfigError(
                    f"params.{name} must be {expect}, got {value!r}", line=_line_of(text, "params", name), field=f"params.{name}"
                )
            if isinstance(value, list):
                value = [float(v) if isinstance(v, float) else v for v in value]
            elif _float(value) and not _int(value):
                value = float(value)
        else:
            value = list(default) if isinstance(default, list) else default
        params[name] = value
    if "levels" in params and any(v < 0 for v in params["levels"]):
        raise ConfigError("params.levels must be >= 0", field="params.levels")
    _expand_axis(params, command)
    return {k: v for k, v in params.items() if v is not None}


def _system_spec(text, table):
    _strict(text, "system", table, _SYSTEM_KEYS)
    if "family" not in table:
        raise ConfigError("system.family is required", field="system.family")
    kwargs = {}
    for key, value in table.items():
        if key in ("family", "variant", "u_prefactor"):
            if not isinstance(value, str):
                raise ConfigError(f"system.{key} must be a string", line=_line_of(text, "system", key), field=f"system.{key}")
        elif key == "d":
            if not _int(value):
                raise ConfigError("system.d must be an integer", line=_line_of(text, "system", key), field="system.d")
        elif not _float(value):
            raise ConfigError(f"system.{key} must be a number", line=_line_of(text, "system", key), field=f"system.{key}")
        else:
            value = float(value)
        kwargs[key] = value
    return SystemSpec(**kwargs)


_CONSTRAINT_FIELD = re.compile(r"\b(beta|b|g|h|d|hbar|omega|family|variant|u_prefactor)\b")


def _check_system(text, spec):
    try:
        build_system(spec)
    except SwkbLabError as exc:
        m = _CONSTRAINT_FIELD.search(str(exc))
        key = m.group(1) if m else None
        raise ConfigError(
            f"invalid system: {exc}", line=_line_of(text, "system", key) if key else None, field=f"system.{key}" if key else "system"
        ) from exc


def parse_config(text: str) -> RunConfig:
    """Parse and validate a TOML run configuration."""
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        if line is None:
            m = re.search(r"line (\d+)", str(exc))
            line = int(m.group(1)) if m else None
        raise ConfigError(f"parse error: {exc}", line=line) from exc
    _strict(text, None, doc, _TOP_KEYS)
    for section in ("system", "params", "output"):
        if section in doc and not isinstance(doc[section], dict):
            raise ConfigError(f"{section} must be a table", line=_line_of(text, None, section), field=section)

    recipe = doc.get("recipe")
    base = {}
    if recipe is not None:
        if recipe not in RECIPES:
            raise ConfigError(
                f"unknown recipe {recipe!r}; known: {', '.join(RECIPES)}", line=_line_of(text, None, "recipe"), field="recipe"
            )
        base = RECIPES[recipe]
    command = doc.get("command", base.get("command"))
    if command is None:
        raise ConfigError("command is required (or a recipe)", field="command")
    if command not in COMMANDS:
        raise ConfigError(f"command must be one of {COMMANDS}, got {command!r}", line=_line_of(text, None, "command"), field="command")
    if base and command != base["command"]:
        raise ConfigError(f"recipe {recipe} runs {base['command']!r}, not {command!r}", field="command")

    system_table = dict(base.get("system", {}))
    system_table.update(doc.get("system", {}))
    if command == "verify" and not system_table:
        system_table = {"family": "H"}
    spec = _system_spec(text, system_table)
    _check_system(text, spec)

    given = dict(base.get("params", {}))
    given.update(doc.get("params", {}))
    params = _validate_params(text, command, given)

    out = doc.get("output", {})
    _strict(text, "output", out, _OUTPUT_KEYS)
    fmt = out.get("format")
    if fmt is not None and fmt not in FORMATS:
        raise ConfigError(f"output.format must be one of {FORMATS}", line=_line_of(text, "output", "format"), field="output.format")
    path = out.get("path")
    if path is not None and not isinstance(path, str):
        raise ConfigError("output.path must be a string", line=_line_of(text, "output", "path"), field="output.path")
    return RunConfig(command, spec, params, path, fmt, recipe)


def recipe_config(name: str) -> RunConfig:
    return parse_config(f'recipe = "{name}"\n')


def dump_config(config: RunConfig) -> str:
    """Serialise a RunConfig; parse_config(dump_config(c)) == c."""
    doc = {"command": config.command}
    if config.recipe is not None:
        doc["recipe"] = config.recipe
    system = {f.name: getattr(config.system, f.name) for f in fields(SystemSpec)}
    doc["system"] = {k: v for k, v in system.items() if v is not None}
    doc["params"] = dict(config.params)
    out = {}
    if config.output_path is not None:
        out["path"] = config.output_path
    if config.output_format is not None:
        out["format"] = config.output_format
    if out:
        doc["output"] = out
    return tomli_w.dumps(doc)
