"""Flat ``key = value`` scenario files.

One setting per line, ``#`` starts a comment.  Keys are ``block.name``;
list values are comma separated; numbers may be arithmetic expressions in
``pi``, ``sqrt``, ``cos``, ``sin`` (e.g. ``system.omega = -2*cos(pi/5)``).
Missing keys take per-scenario defaults, and ``auto`` asks the runner to
derive the value from the geometry.

Example::

    scenario = gate
    bic.R = 4
    bic.gbar = 0.1
    bic.n = 1
    sampling.t_max = 100
"""

from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass, field

AUTO = "auto"
SCENARIOS = ("scatter-single", "scatter-two", "bic-evolve", "gate")


class ConfigError(ValueError):
    pass


# key -> (kind, scenarios using it)
_ALL = SCENARIOS
SCHEMA = {
    "scenario": ("str", _ALL),
    "system.L": ("int", _ALL),
    "system.J": ("float", _ALL),
    "system.omega": ("floats", ("scatter-single", "scatter-two", "bic-evolve")),
    "system.gbar": ("floats", ("scatter-single", "scatter-two", "bic-evolve")),
    "system.sites": ("ints", ("scatter-single", "scatter-two", "bic-evolve")),
    "pulse.photons": ("int", ("scatter-single",)),
    "pulse.k0": ("floats", ("scatter-single", "scatter-two")),
    "pulse.sigma": ("float", ("scatter-single", "scatter-two")),
    "pulse.x0": ("float", ("scatter-single", "scatter-two")),
    "bic.R": ("int", ("bic-evolve", "gate")),
    "bic.parity": ("str", ("bic-evolve", "gate")),
    "bic.n": ("int", ("bic-evolve", "gate")),
    "bic.gbar": ("float", ("gate",)),
    "layout.gap": ("int", ("gate",)),
    "layout.wall": ("int", ("gate",)),
    "schedule.t_on": ("float", ("gate",)),
    "schedule.t_off": ("float", ("gate",)),
    "schedule.delta": ("float", ("gate",)),
    "schedule.targets": ("ints", ("gate",)),
    "scatter.R": ("int", ("scatter-two",)),
    "scatter.buffer": ("int", ("scatter-two",)),
    "scatter.t_meas": ("float", ("scatter-two",)),
    "scatter.k_points": ("int", ("scatter-two",)),
    "sampling.t_max": ("float", ("scatter-single", "bic-evolve", "gate")),
    "sampling.dt": ("float", ("scatter-single", "bic-evolve", "gate")),
    "sampling.density_dt": ("float", ("bic-evolve",)),
    "propagator.krylov_dim": ("int", _ALL),
    "propagator.tol": ("float", _ALL),
    "propagator.max_substeps": ("int", _ALL),
    "run.threads": ("int", _ALL),
    "output.dir": ("str", _ALL),
}

REQUIRED = ("scenario",)

_COMMON = {
    "system.J": 1.0,
    "propagator.krylov_dim": 30,
    "propagator.tol": 1e-8,
    "propagator.max_substeps": 100_000,
    "run.threads": 1,
    "output.dir": "out",
}

DEFAULTS = {
    "scatter-single": {
        "system.L": 99,
        "system.omega": [math.sqrt(2)],
        "system.gbar": [1.0],
        "system.sites": [49],
        "pulse.photons": 1,
        "pulse.k0": [3 * math.pi / 4],
        "pulse.sigma": 5.0,
        "pulse.x0": AUTO,
        "sampling.t_max": 40.0,
        "sampling.dt": 0.1,
    },
    "scatter-two": {
        "system.L": AUTO,
        "system.omega": [0.4, 0.8],
        "system.gbar": [0.4, 0.2],
        "system.sites": AUTO,
        "pulse.k0": [0.5 * math.pi],
        "pulse.sigma": 20.0,
        "pulse.x0": AUTO,
        "scatter.R": 5,
        "scatter.buffer": 10,
        "scatter.t_meas": AUTO,
        "scatter.k_points": 500,
    },
    "bic-evolve": {
        "system.L": 300,
        "system.omega": AUTO,
        "system.gbar": [0.5, 0.5],
        "system.sites": [150, 155],
        "bic.R": AUTO,
        "bic.parity": "even",
        "bic.n": 1,
        "sampling.t_max": 200.0,
        "sampling.dt": 0.5,
        "sampling.density_dt": 1.0,
    },
    "gate": {
        "system.L": AUTO,
        "bic.R": 4,
        "bic.parity": "odd",
        "bic.n": 1,
        "bic.gbar": 0.1,
        "layout.gap": 40,
        "layout.wall": 150,
        "schedule.t_on": 10.0,
        "schedule.t_off": 70.0,
        "schedule.delta": math.pi / 60,
        "schedule.targets": [0, 1],
        "sampling.t_max": 100.0,
        "sampling.dt": 0.5,
    },
}

_FUNCS = {"sqrt": math.sqrt, "cos": math.cos, "sin": math.sin, "exp": math.exp}
_CONSTS = {"pi": math.pi, "e": math.e}
_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}


def _eval_number(text):
    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return node.value
        if isinstance(node, ast.Name) and node.id in _CONSTS:
            return _CONSTS[node.id]
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            val = ev(node.operand)
            return -val if isinstance(node.op, ast.USub) else val
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if (
            isinstance(node, ast.Call)
            and isinstance(node.func, ast.Name)
            and node.func.id in _FUNCS
            and len(node.args) == 1
            and not node.keywords
        ):
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise ValueError(f"unsupported expression {text!r}")

    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError:
        raise ValueError(f"cannot parse {text!r}") from None
    return ev(tree)


def _convert(kind, text):
    text = text.strip()
    if text == AUTO and kind != "str":
        return AUTO
    if kind == "str":
        return text
    if kind in ("int", "ints"):
        items = [s for s in text.split(",")] if kind == "ints" else [text]
        out = []
        for s in items:
            val = _eval_number(s)
            if isinstance(val, float):
                if not val.is_integer():
                    raise ValueError(f"expected an integer, got {s.strip()!r}")
                val = int(val)
            out.append(val)
        return out if kind == "ints" else out[0]
    if kind == "float":
        return float(_eval_number(text))
    if kind == "floats":
        return [float(_eval_number(s)) for s in text.split(",")]
    raise AssertionError(kind)


def parse_lines(raw):
    """``{key: (value_text, line_number)}`` from config text."""
    entries = {}
    for lineno, line in enumerate(raw.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line.strip()!r}")
        key, value = (s.strip() for s in body.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: missing key")
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key {key!r} (first set on line {entries[key][1]})")
        entries[key] = (value, lineno)
    return entries


@dataclass
class ScenarioConfig:
    scenario: str
    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    def block(self, name):
        prefix = name + "."
        return {k[len(prefix):]: v for k, v in self.values.items() if k.startswith(prefix)}

    def to_text(self):
        lines = [f"scenario = {self.scenario}"]
        for key in sorted(self.values):
            if key != "scenario":
                lines.append(f"{key} = {_format(self.values[key])}")
        return "\n".join(lines) + "\n"

    def flat(self):
        return dict(self.values)

    def with_overrides(self, overrides):
        vals = dict(self.values)
        for key, val in overrides.items():
            if key not in SCHEMA:
                raise ConfigError(f"unknown key {key!r}")
            vals[key] = val
        return resolve(self.scenario, vals)


def _format(val):
    if isinstance(val, list):
        return ", ".join(_format(v) for v in val)
    if isinstance(val, float):
        return repr(val)
    return str(val)


def validate_config(raw):
    """Parse, type-check and default-fill a scenario file."""
    entries = parse_lines(raw)
    missing = [k for k in REQUIRED if k not in entries]
    if missing:
        raise ConfigError(
            f"missing required key(s): {', '.join(missing)} "
            f"(scenario is one of {', '.join(SCENARIOS)})"
        )
    scenario = entries["scenario"][0]
    if scenario not in SCENARIOS:
        raise ConfigError(f"line {entries['scenario'][1]}: unknown scenario {scenario!r}; choose from {', '.join(SCENARIOS)}")
    vals = {}
    for key, (text, lineno) in entries.items():
        if key not in SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        kind, used_by = SCHEMA[key]
        if scenario not in used_by:
            raise ConfigError(f"line {lineno}: key {key!r} is not used by scenario {scenario!r}")
        try:
            vals[key] = _convert(kind, text)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {key}: {exc}") from None
    return resolve(scenario, vals)


def resolve(scenario, vals):
    merged = {"scenario": scenario}
    merged.update(_COMMON)
    merged.update(DEFAULTS[scenario])
    merged.update(vals)
    merged["scenario"] = scenario
    _check_ranges(merged)
    return ScenarioConfig(scenario, merged)


def _check_ranges(v):
    def bad(key, why):
        raise ConfigError(f"{key}: {why} (got {v[key]!r})")

    for key in ("sampling.t_max", "sampling.dt", "sampling.density_dt", "pulse.sigma", "propagator.tol"):
        if key in v and v[key] != AUTO and not v[key] > 0:
            bad(key, "must be positive")
    if v.get("propagator.krylov_dim", 2) < 2:
        bad("propagator.krylov_dim", "must be at least 2")
    if v.get("run.threads", 1) < 1:
        bad("run.threads", "must be at least 1")
    if "pulse.photons" in v and not 1 <= v["pulse.photons"] <= 4:
        bad("pulse.photons", "must be between 1 and 4")
    if "bic.parity" in v and v["bic.parity"] not in ("even", "odd"):
        bad("bic.parity", "must be 'even' or 'odd'")
    if v["scenario"] == "gate" and v["bic.parity"] != "odd":
        bad("bic.parity", "the gate encodes logical one in the odd state")
    lists = [k for k in ("system.omega", "system.gbar", "system.sites") if isinstance(v.get(k), list)]
    lengths = {len(v[k]) for k in lists}
    if len(lengths) > 1:
        raise ConfigError(f"{', '.join(lists)} must have one entry per qubit")
    want = {"scatter-single": 1, "scatter-two": 2, "bic-evolve": 2}.get(v["scenario"])
    if want and lengths and lengths != {want}:
        raise ConfigError(f"scenario {v['scenario']!r} needs exactly {want} qubit(s)")


_GATE_SETS = {
    "fig3-set1": (4, 0.1, 1),
    "fig3-set2": (4, 0.5, 1),
    "fig3-set3": (7, 0.5, 1),
    "fig3-set4": (7, 0.5, 3),
}

PRESETS = {
    "fig1a": (
        "Single emitter hit by an m-photon Gaussian pulse (use --photons)",
        "scenario = scatter-single\n",
    ),
    "fig1a-small": (
        "Reduced lattice L=61 for the three-photon property check",
        "scenario = scatter-single\nsystem.L = 61\nsystem.sites = 40\npulse.photons = 3\nsampling.t_max = 30\n",
    ),
    "fig1b": (
        "Two-emitter reflection of a sigma=20 single-photon pulse, k0 sweep",
        "scenario = scatter-two\n"
        "pulse.k0 = 0.3*pi, 0.35*pi, 0.4*pi, 0.45*pi, 0.5*pi, 0.55*pi, 0.6*pi, 0.65*pi, 0.7*pi\n",
    ),
    "fig2": (
        "Doubly excited emitter pair at the even bound-state condition",
        "scenario = bic-evolve\n",
    ),
}
for _name, (_R, _g, _n) in _GATE_SETS.items():
    PRESETS[_name] = (
        f"Phase gate with R={_R}, gbar={_g}, n_o={_n}",
        f"scenario = gate\nbic.R = {_R}\nbic.gbar = {_g}\nbic.n = {_n}\n",
    )


def preset(name):
    try:
        return validate_config(PRESETS[name][1])
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}") from None


def load(path):
    with open(path) as fh:
        return validate_config(fh.read())
