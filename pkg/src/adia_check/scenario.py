"""
Scenario configs and CSV reports.

A scenario file is INI-style: ``[model]``, ``[grid]``, ``[integrator]``,
``[diagnostics]``, ``[output]`` and, for ensembles, ``[ensemble]`` plus one
``[ensemble.N]`` section per member. Numeric values accept simple arithmetic
with ``pi``, e.g. ``tau = 2*pi*10``.
"""

import ast
import configparser
import math
import operator
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from . import diagnostics as dg
from .errors import AdiaCheckError, ConfigError, EnsembleMemberError
from .hamiltonians import Constant, Counterexample, LandauZener, RotatingField, Tabulated
from .propagation import IntegratorConfig, TimeGrid

CSV_VERSION_LINE = "# adia-check csv v1"
ENSEMBLE_COLUMNS = ("f0_ensemble", "q_ensemble")

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_NAMES = {"pi": math.pi, "e": math.e}


def parse_number(text, path=None):
    """Evaluate a numeric literal or a small arithmetic expression over ``pi``/``e``."""

    def walk(node):
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            value = walk(node.operand)
            return -value if isinstance(node.op, ast.USub) else value
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](walk(node.left), walk(node.right))
        raise ValueError

    try:
        value = walk(ast.parse(str(text).strip(), mode="eval"))
    except (SyntaxError, ValueError, ZeroDivisionError, OverflowError):
        raise ConfigError(f"not a number: {text!r}", path) from None
    if not math.isfinite(value):
        raise ConfigError(f"not finite: {text!r}", path)
    return value


@dataclass
class ScenarioConfig:
    grid: TimeGrid
    model: Optional[object] = None
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    diagnostics: Tuple[str, ...] = dg.ALL_DIAGNOSTICS
    branch: str = "+"
    ensemble: Optional[dg.EnsembleSpec] = None
    per_member: bool = False
    output: Optional[Path] = None

    def __post_init__(self):
        if (self.model is None) == (self.ensemble is None):
            raise ConfigError("give exactly one of [model] or [ensemble.N] sections", "model")
        if self.model is not None and "q_analytic" in self.diagnostics:
            if not hasattr(self.model, "rotation"):
                raise ConfigError(
                    f"q_analytic needs a theta/n model, not {self.model.kind}", "diagnostics.include"
                )


@dataclass
class CsvReport:
    header: List[str]
    rows: List[List[str]]

    def to_text(self):
        lines = [CSV_VERSION_LINE, ",".join(self.header)]
        lines.extend(",".join(row) for row in self.rows)
        return "\n".join(lines) + "\n"

    def column(self, name):
        """Column ``name`` as floats, ``nan`` for empty fields."""
        i = self.header.index(name)
        return np.array([float(r[i]) if r[i] else np.nan for r in self.rows])

    def write(self, path):
        Path(path).write_text(self.to_text())


def format_value(x):
    if x is None:
        return ""
    return format(float(x), ".12g")


# ---------------------------------------------------------------------------
# config parsing


def _get(section, key, path_prefix, default=None, required=False):
    if key in section:
        return section[key]
    if required:
        raise ConfigError("missing required key", f"{path_prefix}.{key}")
    return default


def _num(section, key, prefix, default=None, required=False):
    raw = _get(section, key, prefix, default, required)
    return None if raw is None else parse_number(raw, f"{prefix}.{key}")


def _model_from_section(section, prefix, base_dir):
    kind = _get(section, "type", prefix, required=True).strip().lower()
    try:
        if kind == "counterexample":
            return Counterexample(
                _num(section, "omega0", prefix, required=True), _num(section, "tau", prefix, required=True)
            )
        if kind == "rotating_field":
            return RotatingField(
                _num(section, "omega0", prefix, required=True), _num(section, "tau", prefix, required=True)
            )
        if kind == "landau_zener":
            return LandauZener(
                _num(section, "rabi", prefix, required=True),
                _num(section, "sweep_rate", prefix, required=True),
            )
        if kind == "constant":
            raw = _get(section, "r", prefix, required=True).replace(",", " ").split()
            if len(raw) != 3:
                raise ConfigError("expected three components", f"{prefix}.r")
            return Constant(tuple(parse_number(x, f"{prefix}.r") for x in raw))
        if kind == "tabulated":
            path = Path(_get(section, "path", prefix, required=True))
            if not path.is_absolute():
                path = base_dir / path
            return Tabulated.from_file(path, tau=_num(section, "tau", prefix))
    except ConfigError:
        raise
    except AdiaCheckError as exc:
        raise ConfigError(str(exc), prefix) from None
    raise ConfigError(f"unknown model type {kind!r}", f"{prefix}.type")


def _check_keys(section, allowed, prefix):
    extra = set(section) - set(allowed) - set(section.parser.defaults())
    if extra:
        raise ConfigError(f"unknown keys {sorted(extra)}", prefix)


_MODEL_KEYS = ("type", "omega0", "tau", "rabi", "sweep_rate", "r", "path")


def parse_config(text, base_dir=Path(".")):
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None

    if "grid" not in parser:
        raise ConfigError("missing section", "grid")
    g = parser["grid"]
    _check_keys(g, ("t0", "t1", "steps"), "grid")
    steps = _num(g, "steps", "grid", required=True)
    if steps != int(steps):
        raise ConfigError("must be an integer", "grid.steps")
    try:
        grid = TimeGrid(_num(g, "t0", "grid", required=True), _num(g, "t1", "grid", required=True), int(steps))
    except AdiaCheckError as exc:
        raise ConfigError(str(exc), "grid") from None

    integrator = IntegratorConfig()
    if "integrator" in parser:
        s = parser["integrator"]
        _check_keys(s, ("method", "rel_tol", "abs_tol", "max_unitarity_drift", "substeps"), "integrator")
        kwargs = {}
        if "method" in s:
            kwargs["method"] = s["method"].strip()
        for key in ("rel_tol", "abs_tol", "max_unitarity_drift"):
            if key in s:
                kwargs[key] = _num(s, key, "integrator")
        if "substeps" in s:
            sub = _num(s, "substeps", "integrator")
            if sub != int(sub):
                raise ConfigError("must be an integer", "integrator.substeps")
            kwargs["substeps"] = int(sub)
        try:
            integrator = IntegratorConfig(**kwargs)
        except AdiaCheckError as exc:
            raise ConfigError(str(exc), "integrator") from None

    include, branch = dg.ALL_DIAGNOSTICS, "+"
    if "diagnostics" in parser:
        s = parser["diagnostics"]
        _check_keys(s, ("include", "branch"), "diagnostics")
        if "include" in s:
            include = tuple(x.strip() for x in s["include"].split(",") if x.strip())
            unknown = set(include) - set(dg.ALL_DIAGNOSTICS)
            if unknown:
                raise ConfigError(f"unknown diagnostics {sorted(unknown)}", "diagnostics.include")
        branch = s.get("branch", "+").strip()
        if branch not in ("+", "-"):
            raise ConfigError("must be '+' or '-'", "diagnostics.branch")

    model = None
    if "model" in parser:
        _check_keys(parser["model"], _MODEL_KEYS, "model")
        model = _model_from_section(parser["model"], "model", base_dir)

    members = []
    member_sections = sorted(
        (name for name in parser.sections() if name.startswith("ensemble.")),
        key=lambda name: _member_index(name),
    )
    for name in member_sections:
        s = parser[name]
        _check_keys(s, _MODEL_KEYS + ("weight",), name)
        weight = _num(s, "weight", name, required=True)
        members.append(dg.EnsembleMember(weight, _model_from_section(s, name, base_dir)))
    ensemble = None
    if members:
        try:
            ensemble = dg.EnsembleSpec(members)
        except AdiaCheckError as exc:
            raise ConfigError(str(exc), "ensemble") from None
    per_member = False
    if "ensemble" in parser:
        _check_keys(parser["ensemble"], ("per_member",), "ensemble")
        try:
            per_member = parser["ensemble"].getboolean("per_member", False)
        except ValueError:
            raise ConfigError("must be a boolean", "ensemble.per_member") from None

    output = None
    if "output" in parser:
        _check_keys(parser["output"], ("path",), "output")
        if "path" in parser["output"]:
            output = Path(parser["output"]["path"])
            if not output.is_absolute():
                output = base_dir / output

    return ScenarioConfig(
        grid=grid,
        model=model,
        integrator=integrator,
        diagnostics=include,
        branch=branch,
        ensemble=ensemble,
        per_member=per_member,
        output=output,
    )


def _member_index(name):
    suffix = name.split(".", 1)[1]
    if not suffix.isdigit():
        raise ConfigError("ensemble member sections must be named [ensemble.N]", name)
    return int(suffix)


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text, base_dir=path.parent)


# ---------------------------------------------------------------------------
# running


def _rows(columns, header):
    n = len(columns["t"])
    return [[format_value(None if columns[c] is None else columns[c][i]) for c in header] for i in range(n)]


def _t_over_tau(times, model):
    tau = getattr(model, "tau", None)
    return None if tau is None else np.asarray(times) / tau


def run_scenario(config):
    """Run a pure-state or ensemble scenario and return its CSV report."""
    if config.ensemble is not None:
        return run_ensemble(config)
    cols = dg.evaluate(
        config.model, config.grid, config.integrator, include=config.diagnostics, branch=config.branch
    )
    cols["t_over_tau"] = _t_over_tau(cols["t"], config.model)
    header = list(dg.REPORT_COLUMNS)
    return CsvReport(header, _rows(cols, header))


def run_ensemble(config):
    """Ensemble report: the fixed columns followed by ``f0_ensemble, q_ensemble``.

    Per-member diagnostics are left empty in the fixed columns; ``unitarity_error``
    holds the worst member. With ``per_member`` set, ``f0_m<i>, q_m<i>``
    columns are appended.
    """
    spec = config.ensemble
    if spec is None:
        raise ConfigError("ensemble run needs [ensemble.N] sections", "ensemble")
    grid = config.grid
    trajectories = dg.propagate_ensemble(spec, grid, config.integrator)
    times = grid.times
    member_f0 = np.empty((len(spec.members), len(times)))
    member_q = np.empty_like(member_f0)
    for a, traj in enumerate(trajectories):
        try:
            p0 = dg.instantaneous_projector(traj.frames[0], config.branch)
            for i in range(len(times)):
                pt = dg.instantaneous_projector(traj.frames[i], config.branch)
                member_f0[a, i] = float(np.trace(p0 @ pt).real)
                member_q[a, i] = dg.survival_q(traj, i, config.branch)
        except AdiaCheckError as exc:
            raise EnsembleMemberError(a, exc) from exc

    cols = dict.fromkeys(dg.REPORT_COLUMNS)
    cols["t"] = times
    cols["t_over_tau"] = _t_over_tau(times, spec.members[0].model)
    cols["unitarity_error"] = np.max([traj.unitarity_errors for traj in trajectories], axis=0)
    # fixed member order keeps the weighted sum deterministic
    cols["f0_ensemble"] = sum(m.weight * member_f0[a] for a, m in enumerate(spec.members))
    cols["q_ensemble"] = sum(m.weight * member_q[a] for a, m in enumerate(spec.members))
    header = list(dg.REPORT_COLUMNS) + list(ENSEMBLE_COLUMNS)
    if config.per_member:
        for a in range(len(spec.members)):
            cols[f"f0_m{a}"] = member_f0[a]
            cols[f"q_m{a}"] = member_q[a]
            header += [f"f0_m{a}", f"q_m{a}"]
    return CsvReport(header, _rows(cols, header))


# ---------------------------------------------------------------------------
# canned scenarios

FIG1_OMEGA0 = 1.0
FIG1_TAU = 2 * math.pi * 10


def fig1_config(steps=4000):
    """Fidelity against the ``H + i[dP/dt, P]`` evolution over one period, omega0 = 1, tau = 20 pi."""
    return ScenarioConfig(
        grid=TimeGrid(0.0, FIG1_TAU, steps),
        model=Counterexample(FIG1_OMEGA0, FIG1_TAU),
        diagnostics=("avron_fidelity",),
    )


def cmd_fig1(steps=4000):
    return run_scenario(fig1_config(steps))


def lzt_substeps(rabi, sweep_rate, window, steps, max_phase_step=0.005):
    """Substeps per output interval so that ``max |R| dt <= max_phase_step``."""
    r_max = math.hypot(rabi, 0.5 * sweep_rate * window)
    dt = 2 * window / steps
    return max(1, math.ceil(r_max * dt / max_phase_step))


def lzt_config(omega, sweep, window, steps=2000, max_phase_step=0.005):
    if window <= 0:
        raise ConfigError("window must be positive", "lzt.window")
    try:
        model = LandauZener(omega, sweep)
    except AdiaCheckError as exc:
        raise ConfigError(str(exc), "lzt") from None
    return ScenarioConfig(
        grid=TimeGrid(-window, window, steps),
        model=model,
        integrator=IntegratorConfig(substeps=lzt_substeps(omega, sweep, window, steps, max_phase_step)),
        diagnostics=("q", "f0", "f1", "prediction_check"),
    )


def cmd_lzt(omega, sweep, window, steps=2000):
    """Landau-Zener sweep over ``[-window, window]``; the last row holds ``Q(T)``."""
    return run_scenario(lzt_config(omega, sweep, window, steps))


def landau_zener_adiabatic_probability(omega, sweep):
    """``1 - exp(-2 pi omega^2 / |sweep|)``: asymptotic probability of staying adiabatic."""
    if sweep == 0:
        return 1.0
    return 1.0 - math.exp(-2 * math.pi * omega**2 / abs(sweep))


def cmd_ensemble(config):
    if config.ensemble is None:
        raise ConfigError("ensemble command needs [ensemble.N] sections", "ensemble")
    return run_ensemble(config)
