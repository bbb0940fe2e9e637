"""Scenario configuration files: strict TOML schema with per-mode defaults.

A file only needs the keys that differ from the mode's defaults; unknown
keys or blocks are rejected outright rather than silently ignored, and
value-level problems are collected and reported together.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .errors import ParseError, ValidationError
from .potentials import VARIANTS, ObstacleSpec

MODES = ("cubic", "mpc", "compare", "potential-grid")

_THETA_END = 0.40  # terminal polar angle of the default boundary run
_THETA_TARGET = 2.6  # polar angle of the default control target


@dataclass(frozen=True)
class BoundaryBlock:
    start: tuple = (0.0, 0.0, -1.0)
    start_velocity: tuple = (2.8, 0.0, 0.0)
    end: tuple = (math.sin(_THETA_END), 0.0, math.cos(_THETA_END))
    end_velocity: object = (0.0, 0.0, 0.0)  # 3-tuple or the string "free"


@dataclass(frozen=True)
class ObstacleBlock:
    variant: str = "axial"
    tau: float = 30.0
    d_radius: float = 0.35
    sharpness: int = 6
    centers: tuple = ((0.0, 0.0, 1.0),)

    def to_spec(self) -> ObstacleSpec:
        return ObstacleSpec(
            tau=self.tau,
            d_radius=self.d_radius,
            sharpness=self.sharpness,
            centers=[list(c) for c in self.centers],
            variant=self.variant,
        )


@dataclass(frozen=True)
class DiscretizationBlock:
    total_time: float = 1.0
    steps: int = 100
    horizon_steps: int = 10
    sample_h: float = 0.05
    total_steps: int = 40


@dataclass(frozen=True)
class MpcBlock:
    terminal_weight: float = 25.0
    target: tuple = (math.sin(_THETA_TARGET), 0.0, math.cos(_THETA_TARGET))
    perturbations: tuple = ()  # of (step, axis-3-tuple, angle)


@dataclass(frozen=True)
class GridBlock:
    theta_points: int = 181
    phi_points: int = 361


@dataclass(frozen=True)
class OutputBlock:
    directory: str = "out"


@dataclass(frozen=True)
class ScenarioConfig:
    mode: str
    boundary: Optional[BoundaryBlock] = None
    obstacle: Optional[ObstacleBlock] = None
    discretization: Optional[DiscretizationBlock] = None
    mpc: Optional[MpcBlock] = None
    grid: Optional[GridBlock] = None
    output: OutputBlock = field(default_factory=OutputBlock)


# blocks each mode must (and may only) carry, besides [output]
_MODE_BLOCKS = {
    "cubic": ("boundary", "obstacle", "discretization"),
    "compare": ("boundary", "obstacle", "discretization"),
    "mpc": ("boundary", "obstacle", "discretization", "mpc"),
    "potential-grid": ("obstacle", "grid"),
}

# keys relevant within [boundary] / [discretization] per mode
_BOUNDARY_KEYS = {
    "cubic": ("start", "start_velocity", "end", "end_velocity"),
    "compare": ("start", "start_velocity", "end", "end_velocity"),
    "mpc": ("start", "start_velocity"),
}
_DISCRETIZATION_KEYS = {
    "cubic": ("total_time", "steps"),
    "compare": ("total_time", "steps"),
    "mpc": ("horizon_steps", "sample_h", "total_steps"),
}


def _as_vec3(value, where: str) -> tuple:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 3
        or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in value)
    ):
        raise ParseError(f"{where}: expected a list of three numbers")
    return tuple(float(x) for x in value)


def _as_number(value, where: str) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ParseError(f"{where}: expected a number")
    return float(value)


def _as_int(value, where: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise ParseError(f"{where}: expected an integer")
    return value


def _reject_unknown(table: dict, allowed, where: str) -> None:
    for key in table:
        if key not in allowed:
            raise ParseError(f"{where}: unknown key {key!r}")


def _parse_boundary(table: dict, mode: str) -> BoundaryBlock:
    keys = _BOUNDARY_KEYS[mode]
    _reject_unknown(table, keys, "[boundary]")
    block = BoundaryBlock()
    kwargs = {}
    if "start" in table:
        kwargs["start"] = _as_vec3(table["start"], "[boundary].start")
    if "start_velocity" in table:
        kwargs["start_velocity"] = _as_vec3(table["start_velocity"], "[boundary].start_velocity")
    if mode == "mpc":
        kwargs.setdefault("start_velocity", (0.0, 0.0, 0.0))
    if "end" in table:
        kwargs["end"] = _as_vec3(table["end"], "[boundary].end")
    if "end_velocity" in table:
        v = table["end_velocity"]
        if v == "free":
            kwargs["end_velocity"] = "free"
        else:
            kwargs["end_velocity"] = _as_vec3(v, "[boundary].end_velocity")
    return replace(block, **kwargs)


def _parse_obstacle(table: dict, base: ObstacleBlock) -> ObstacleBlock:
    allowed = ("variant", "tau", "d_radius", "sharpness", "centers")
    _reject_unknown(table, allowed, "[obstacle]")
    kwargs = {}
    if "variant" in table:
        if table["variant"] not in VARIANTS:
            raise ParseError(f"[obstacle].variant: unknown variant {table['variant']!r}")
        kwargs["variant"] = table["variant"]
    if "tau" in table:
        kwargs["tau"] = _as_number(table["tau"], "[obstacle].tau")
    if "d_radius" in table:
        kwargs["d_radius"] = _as_number(table["d_radius"], "[obstacle].d_radius")
    if "sharpness" in table:
        kwargs["sharpness"] = _as_int(table["sharpness"], "[obstacle].sharpness")
    if "centers" in table:
        if not isinstance(table["centers"], list) or not table["centers"]:
            raise ParseError("[obstacle].centers: expected a nonempty list of 3-vectors")
        kwargs["centers"] = tuple(
            _as_vec3(c, f"[obstacle].centers[{i}]") for i, c in enumerate(table["centers"])
        )
    return replace(base, **kwargs)


def _parse_discretization(table: dict, mode: str) -> DiscretizationBlock:
    keys = _DISCRETIZATION_KEYS[mode]
    _reject_unknown(table, keys, "[discretization]")
    kwargs = {}
    if "total_time" in table:
        kwargs["total_time"] = _as_number(table["total_time"], "[discretization].total_time")
    if "steps" in table:
        kwargs["steps"] = _as_int(table["steps"], "[discretization].steps")
    if "horizon_steps" in table:
        kwargs["horizon_steps"] = _as_int(table["horizon_steps"], "[discretization].horizon_steps")
    if "sample_h" in table:
        kwargs["sample_h"] = _as_number(table["sample_h"], "[discretization].sample_h")
    if "total_steps" in table:
        kwargs["total_steps"] = _as_int(table["total_steps"], "[discretization].total_steps")
    return replace(DiscretizationBlock(), **kwargs)


def _parse_mpc(table: dict) -> MpcBlock:
    allowed = ("terminal_weight", "target", "perturbations")
    _reject_unknown(table, allowed, "[mpc]")
    kwargs = {}
    if "terminal_weight" in table:
        kwargs["terminal_weight"] = _as_number(table["terminal_weight"], "[mpc].terminal_weight")
    if "target" in table:
        kwargs["target"] = _as_vec3(table["target"], "[mpc].target")
    if "perturbations" in table:
        if not isinstance(table["perturbations"], list):
            raise ParseError("[mpc].perturbations: expected an array of tables")
        events = []
        for i, entry in enumerate(table["perturbations"]):
            where = f"[[mpc.perturbations]][{i}]"
            if not isinstance(entry, dict):
                raise ParseError(f"{where}: expected a table")
            _reject_unknown(entry, ("step", "axis", "angle"), where)
            for need in ("step", "axis", "angle"):
                if need not in entry:
                    raise ParseError(f"{where}: missing key {need!r}")
            events.append(
                (
                    _as_int(entry["step"], f"{where}.step"),
                    _as_vec3(entry["axis"], f"{where}.axis"),
                    _as_number(entry["angle"], f"{where}.angle"),
                )
            )
        kwargs["perturbations"] = tuple(events)
    return replace(MpcBlock(), **kwargs)


def _parse_grid(table: dict) -> GridBlock:
    _reject_unknown(table, ("theta_points", "phi_points"), "[grid]")
    kwargs = {}
    if "theta_points" in table:
        kwargs["theta_points"] = _as_int(table["theta_points"], "[grid].theta_points")
    if "phi_points" in table:
        kwargs["phi_points"] = _as_int(table["phi_points"], "[grid].phi_points")
    return replace(GridBlock(), **kwargs)


def _parse_output(table: dict) -> OutputBlock:
    _reject_unknown(table, ("directory",), "[output]")
    if "directory" in table:
        if not isinstance(table["directory"], str):
            raise ParseError("[output].directory: expected a string")
        return OutputBlock(directory=table["directory"])
    return OutputBlock()


def _grid_defaults_for_mode(mode: str) -> ObstacleBlock:
    if mode == "potential-grid":
        # landscape-rendering defaults use the soft unit-strength barrier
        return ObstacleBlock(variant="point", tau=1.0, d_radius=0.393, sharpness=2)
    return ObstacleBlock()


def _validate(cfg: ScenarioConfig) -> None:
    problems = []
    if cfg.obstacle is not None:
        try:
            cfg.obstacle.to_spec()
        except ValueError as exc:
            problems.append(f"[obstacle]: {exc}")
    if cfg.boundary is not None:
        for name in ("start", "end"):
            vec = getattr(cfg.boundary, name)
            if sum(x * x for x in vec) < 1e-24:
                problems.append(f"[boundary].{name}: zero vector cannot be normalized")
    if cfg.discretization is not None:
        d = cfg.discretization
        if cfg.mode in ("cubic", "compare"):
            if d.total_time <= 0:
                problems.append("[discretization].total_time: must be positive")
            if d.steps < 5:
                problems.append("[discretization].steps: must be at least 5")
        if cfg.mode == "mpc":
            if d.horizon_steps < 5:
                problems.append("[discretization].horizon_steps: must be at least 5")
            if d.sample_h <= 0:
                problems.append("[discretization].sample_h: must be positive")
            if d.total_steps < 1:
                problems.append("[discretization].total_steps: must be positive")
    if cfg.mpc is not None:
        if cfg.mpc.terminal_weight <= 0:
            problems.append("[mpc].terminal_weight: must be positive")
        for i, (step, axis, _angle) in enumerate(cfg.mpc.perturbations):
            if step < 0 or (cfg.discretization and step >= cfg.discretization.total_steps):
                problems.append(f"[[mpc.perturbations]][{i}].step: outside the run")
            if sum(x * x for x in axis) == 0.0:
                problems.append(f"[[mpc.perturbations]][{i}].axis: must be nonzero")
    if cfg.grid is not None:
        if cfg.grid.theta_points < 2 or cfg.grid.phi_points < 2:
            problems.append("[grid]: lattice needs at least 2 points per axis")
    directory = cfg.output.directory
    probe = directory
    while probe and not os.path.exists(probe):
        probe = os.path.dirname(probe)
    anchor = probe if probe else "."
    if not os.path.isdir(anchor) or not os.access(anchor, os.W_OK):
        problems.append(f"[output].directory: {directory!r} is not writable")
    if problems:
        raise ValidationError("; ".join(problems))


def parse_config(path, mode: Optional[str] = None) -> ScenarioConfig:
    """Load, default-fill, and validate a scenario file.

    ``mode`` (usually supplied by the CLI subcommand) may be omitted when
    the file itself carries a ``mode`` key; if both are present they must
    agree.
    """
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc

    file_mode = data.pop("mode", None)
    if file_mode is not None and file_mode not in MODES:
        raise ParseError(f"mode: unknown mode {file_mode!r}")
    if mode is not None and file_mode is not None and mode != file_mode:
        raise ValidationError(f"mode {file_mode!r} in file conflicts with requested {mode!r}")
    mode = mode or file_mode
    if mode is None:
        raise ValidationError("no mode given (pass one or set 'mode' in the file)")

    required = _MODE_BLOCKS[mode]
    _reject_unknown(data, required + ("output",), "top level")

    cfg = ScenarioConfig(
        mode=mode,
        boundary=_parse_boundary(data.get("boundary", {}), mode) if "boundary" in required else None,
        obstacle=(
            _parse_obstacle(data.get("obstacle", {}), _grid_defaults_for_mode(mode))
            if "obstacle" in required
            else None
        ),
        discretization=(
            _parse_discretization(data.get("discretization", {}), mode)
            if "discretization" in required
            else None
        ),
        mpc=_parse_mpc(data.get("mpc", {})) if "mpc" in required else None,
        grid=_parse_grid(data.get("grid", {})) if "grid" in required else None,
        output=_parse_output(data.get("output", {})),
    )
    _validate(cfg)
    return cfg


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return '"' + value + '"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    raise TypeError(f"cannot format {value!r}")


def emit_config(cfg: ScenarioConfig) -> str:
    """Render a config back to TOML text; re-parsing reproduces it."""
    lines = [f'mode = "{cfg.mode}"', ""]
    if cfg.boundary is not None:
        lines.append("[boundary]")
        lines.append(f"start = {_fmt(list(cfg.boundary.start))}")
        lines.append(f"start_velocity = {_fmt(list(cfg.boundary.start_velocity))}")
        if cfg.mode in ("cubic", "compare"):
            lines.append(f"end = {_fmt(list(cfg.boundary.end))}")
            ev = cfg.boundary.end_velocity
            lines.append(f"end_velocity = {_fmt(ev if isinstance(ev, str) else list(ev))}")
        lines.append("")
    if cfg.obstacle is not None:
        lines.append("[obstacle]")
        lines.append(f'variant = "{cfg.obstacle.variant}"')
        lines.append(f"tau = {_fmt(cfg.obstacle.tau)}")
        lines.append(f"d_radius = {_fmt(cfg.obstacle.d_radius)}")
        lines.append(f"sharpness = {cfg.obstacle.sharpness}")
        lines.append(f"centers = {_fmt([list(c) for c in cfg.obstacle.centers])}")
        lines.append("")
    if cfg.discretization is not None:
        lines.append("[discretization]")
        if cfg.mode in ("cubic", "compare"):
            lines.append(f"total_time = {_fmt(cfg.discretization.total_time)}")
            lines.append(f"steps = {cfg.discretization.steps}")
        else:
            lines.append(f"horizon_steps = {cfg.discretization.horizon_steps}")
            lines.append(f"sample_h = {_fmt(cfg.discretization.sample_h)}")
            lines.append(f"total_steps = {cfg.discretization.total_steps}")
        lines.append("")
    if cfg.mpc is not None:
        lines.append("[mpc]")
        lines.append(f"terminal_weight = {_fmt(cfg.mpc.terminal_weight)}")
        lines.append(f"target = {_fmt(list(cfg.mpc.target))}")
        lines.append("")
        for step, axis, angle in cfg.mpc.perturbations:
            lines.append("[[mpc.perturbations]]")
            lines.append(f"step = {step}")
            lines.append(f"axis = {_fmt(list(axis))}")
            lines.append(f"angle = {_fmt(angle)}")
            lines.append("")
    if cfg.grid is not None:
        lines.append("[grid]")
        lines.append(f"theta_points = {cfg.grid.theta_points}")
        lines.append(f"phi_points = {cfg.grid.phi_points}")
        lines.append("")
    lines.append("[output]")
    lines.append(f'directory = "{cfg.output.directory}"')
    lines.append("")
    return "\n".join(lines)
