"""Run configuration: a flat TOML file with dotted keys.

Example::

    potential.mass = 1.0
    potential.coeffs = [[3, "-1/3"], [4, "1/4"]]   # N(s) = sum a_k s^k
    grid.r_max = 30.0
    grid.n = 3000
    q = 0.05
    solver.delta = 1e-4
    sweep.deltas = [0.01, 0.02, 0.04, 0.08, 0.16]  # relative to the certified bound
    dynamics.t_final = 50.0
    output.dir = "out"

Every recognised key is listed in ``SCHEMA``; unknown keys are errors.
Relative file paths are resolved against the config file's directory.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import tomli

from .errors import ConfigError
from .grid import RadialGrid
from .potential import Potential, parse_coefficient
from .solver import InitSpec, SolverConfig

# key -> (kind, default)
SCHEMA: dict[str, tuple[str, object]] = {
    "potential.mass": ("float", 1.0),
    "potential.coeffs": ("coeffs", [[3, "-1/3"], [4, "1/4"]]),
    "grid.r_max": ("float", 30.0),
    "grid.n": ("int", 3000),
    "q": ("float", 0.0),
    "solver.delta": ("float", None),
    "solver.charge_target": ("float", None),
    "solver.max_iters": ("int", 20000),
    "solver.step_init": ("float", 1.0),
    "solver.grad_tol": ("float", 1e-10),
    "solver.collapse_tol": ("float", 1e-6),
    "solver.init": ("str", "auto"),
    "solver.init_amplitude": ("float", None),
    "solver.init_width": ("float", None),
    "solver.init_radius": ("float", None),
    "solver.init_file": ("path", None),
    "sweep.deltas": ("floats", [0.01, 0.02, 0.04, 0.08, 0.16]),
    "sweep.relative": ("bool", True),
    "sweep.warm_start": ("bool", True),
    "sweep.residual_tol": ("float", 1e-6),
    "certify.ladder": ("floats", [2.0, 4.0, 8.0, 16.0, 32.0]),
    "certify.ramps": ("floats", [1.0, 2.0, 4.0, 8.0, 16.0]),
    "dynamics.dt": ("float", None),
    "dynamics.t_final": ("float", 50.0),
    "dynamics.cfl_safety": ("float", 0.5),
    "dynamics.snapshot_stride": ("int", 200),
    "dynamics.perturbation": ("float", 0.01),
    "dynamics.amplitude": ("float", None),
    "dynamics.width": ("float", 2.0),
    "dynamics.init_file": ("path", None),
    "output.dir": ("str", "out"),
}


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _convert(key: str, kind: str, value, base: Path):
    def bad(msg):
        return ConfigError(f"key {key!r}: {msg} (got {value!r})")

    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float, str)):
            raise bad("expected a number")
        try:
            return parse_coefficient(value)
        except (ValueError, ZeroDivisionError):
            raise bad("expected a number") from None
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise bad("expected an integer")
        return value
    if kind == "bool":
        if not isinstance(value, bool):
            raise bad("expected true or false")
        return value
    if kind == "str":
        if not isinstance(value, str):
            raise bad("expected a string")
        return value
    if kind == "path":
        if not isinstance(value, str):
            raise bad("expected a file path")
        path = (base / value).resolve()
        if not path.is_file():
            raise bad("file does not exist")
        return str(path)
    if kind == "floats":
        if not isinstance(value, list) or not value:
            raise bad("expected a non-empty list of numbers")
        return [_convert(key, "float", v, base) for v in value]
    if kind == "coeffs":
        if not isinstance(value, list):
            raise bad("expected a list of [exponent, coefficient] pairs")
        pairs = []
        for item in value:
            if not (isinstance(item, list) and len(item) == 2):
                raise bad("expected [exponent, coefficient] pairs")
            pairs.append((_convert(key, "float", item[0], base),
                          _convert(key, "float", item[1], base)))
        return pairs
    raise AssertionError(kind)


@dataclass
class SweepSettings:
    deltas: list[float]
    relative: bool
    warm_start: bool
    residual_tol: float


@dataclass
class DynamicsSettings:
    dt: float | None
    t_final: float
    cfl_safety: float
    snapshot_stride: int
    perturbation: float
    amplitude: float | None
    width: float
    init_file: str | None


@dataclass
class RunConfig:
    potential: Potential
    grid: RadialGrid
    q: float
    solver: SolverConfig
    sweep: SweepSettings
    dynamics: DynamicsSettings
    ladder: list[float]
    ramps: list[float]
    out_dir: str
    values: dict = field(default_factory=dict)
    text: str = ""

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()

    def require_single_target(self):
        if (self.solver.delta is None) == (self.solver.charge_target is None):
            raise ConfigError("set exactly one of solver.delta and solver.charge_target")


def parse_config(text: str, base: str | Path = ".") -> RunConfig:
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"parse error: {exc}") from None
    flat = _flatten(raw)
    unknown = sorted(set(flat) - set(SCHEMA))
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(unknown)}")
    base = Path(base)
    v = {}
    for key, (kind, default) in SCHEMA.items():
        v[key] = _convert(key, kind, flat[key], base) if key in flat else default
    v["potential.coeffs"] = [tuple(parse_coefficient(x) for x in pair)
                             for pair in v["potential.coeffs"]]

    try:
        potential = Potential(v["potential.mass"], tuple(v["potential.coeffs"]))
        grid = RadialGrid(v["grid.r_max"], v["grid.n"])
        init = InitSpec(kind=v["solver.init"], amplitude=v["solver.init_amplitude"],
                        width=v["solver.init_width"], radius=v["solver.init_radius"],
                        path=v["solver.init_file"])
        if init.kind not in ("auto", "gaussian", "plateau", "file"):
            raise ValueError(f"solver.init must be auto, gaussian, plateau or file, got {init.kind!r}")
        if init.kind == "file" and init.path is None:
            raise ValueError("solver.init = \"file\" needs solver.init_file")
        solver = SolverConfig(
            delta=v["solver.delta"], q=v["q"], r_max=grid.r_max, n=grid.n,
            max_iters=v["solver.max_iters"], step_init=v["solver.step_init"],
            grad_tol=v["solver.grad_tol"], collapse_tol=v["solver.collapse_tol"],
            init=init, charge_target=v["solver.charge_target"])
        deltas = v["sweep.deltas"]
        if any(d <= 0 for d in deltas):
            raise ValueError("sweep.deltas must be positive")
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None

    return RunConfig(
        potential=potential, grid=grid, q=v["q"], solver=solver,
        sweep=SweepSettings(deltas, v["sweep.relative"], v["sweep.warm_start"],
                            v["sweep.residual_tol"]),
        dynamics=DynamicsSettings(v["dynamics.dt"], v["dynamics.t_final"],
                                  v["dynamics.cfl_safety"], v["dynamics.snapshot_stride"],
                                  v["dynamics.perturbation"], v["dynamics.amplitude"],
                                  v["dynamics.width"], v["dynamics.init_file"]),
        ladder=v["certify.ladder"], ramps=v["certify.ramps"], out_dir=v["output.dir"],
        values=v, text=text)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config(text, path.parent)
