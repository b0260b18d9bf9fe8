"""Scenario configuration: YAML schema, validation and model construction.

Every section and key has a documented default (see ``DEFAULTS`` and
docs/formats.md). Unknown keys are errors; all violations are collected
before :class:`ConfigError` is raised.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from . import profiles
from . import radiation as rad
from .coupler import Iterate, Model, PicardConfig, regularize_vacuum
from .grid import AngularFrequencyQuadrature, FluidState, PhysicalParams, SpatialGrid, validate_parameters
from .hydro import BoundaryConfig

DEFAULTS = {
    "grid": {"cells": None, "lengths": None, "max_cells": 1 << 20},
    "quadrature": {"n_polar": 2, "n_azimuth": 4, "n_groups": 1, "v_min": 0.5, "v_max": 2.0},
    "physics": {"mu": 1.0, "lambda": 0.0, "kappa": 1.0, "R": 1.0, "c_v": 1.5, "gamma": 5.0 / 3.0,
                "c_light": 10.0, "strict_blowup": False},
    "coefficients": {"model": "constant", "sigma": 0.0, "D1": 1.0, "D2": 1.0, "v0": 1.0, "table": None,
                     "scattering": 0.0, "scattering_out": None, "emission": None, "heating_sign": -1.0},
    "boundary": {"velocity": "dirichlet", "temperature": "neumann", "intensity": "transparency"},
    "initial": {"density": {"type": "constant", "value": 1.0}, "velocity": {"type": "zero"},
                "temperature": {"type": "constant", "value": 1.0}, "intensity": {"type": "zero"},
                "checkpoint": None},
    "time": {"dt": 1e-3, "t_end": 0.0, "transport_substeps": "auto", "transport_cfl": 0.9, "advect_cfl": 1.0,
             "max_halvings": 0, "check_tangency": True},
    "picard": {"tol_lambda": 1e-10, "max_iters": 20, "epsilon_weight": 1.0, "delta_vacuum": 0.0},
    "diagnostics": {"blowup_threshold": None, "bkm_q": 6.0, "eps_vac": 1e-10, "running_max": False,
                    "alpha": 1e6, "beta": 1e6},
    "numerics": {"linear_rtol": 1e-10, "workers": 1},
    "output": {"diagnostics_csv": None, "checkpoint": None, "checkpoint_every": 0},
}

# expected kind of each key: "int", "float", "bool", "str", "list", "dict", optionally "?"-suffixed (nullable)
KINDS = {
    "grid": {"cells": "list", "lengths": "list?", "max_cells": "int"},
    "quadrature": {"n_polar": "int", "n_azimuth": "int", "n_groups": "int", "v_min": "float", "v_max": "float"},
    "physics": {"mu": "float", "lambda": "float", "kappa": "float", "R": "float", "c_v": "float",
                "gamma": "float", "c_light": "float", "strict_blowup": "bool"},
    "coefficients": {"model": "str", "sigma": "float", "D1": "float", "D2": "float", "v0": "float", "table": "str?",
                     "scattering": "float", "scattering_out": "float?", "emission": "dict?", "heating_sign": "float"},
    "boundary": {"velocity": "str", "temperature": "str", "intensity": "str"},
    "initial": {"density": "dict", "velocity": "dict", "temperature": "dict", "intensity": "dict",
                "checkpoint": "str?"},
    "time": {"dt": "float", "t_end": "float", "transport_substeps": "any", "transport_cfl": "float",
             "advect_cfl": "float", "max_halvings": "int", "check_tangency": "bool"},
    "picard": {"tol_lambda": "float", "max_iters": "int", "epsilon_weight": "float", "delta_vacuum": "float"},
    "diagnostics": {"blowup_threshold": "float?", "bkm_q": "float", "eps_vac": "float", "running_max": "bool",
                    "alpha": "float", "beta": "float"},
    "numerics": {"linear_rtol": "float", "workers": "int"},
    "output": {"diagnostics_csv": "str?", "checkpoint": "str?", "checkpoint_every": "int"},
}

MODELS = ("constant", "compton", "tabulated")


class ConfigError(ValueError):
    def __init__(self, errors: list[str], source: str = "<config>"):
        self.errors = list(errors)
        self.source = source
        super().__init__(f"{source}: " + "; ".join(self.errors))


def _kind_ok(value, kind: str) -> bool:
    nullable = kind.endswith("?")
    kind = kind.rstrip("?")
    if value is None:
        return nullable
    if kind == "any":
        return True
    if kind == "bool":
        return isinstance(value, bool)
    if kind == "int":
        return isinstance(value, int) and not isinstance(value, bool)
    if kind == "float":
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if kind == "str":
        return isinstance(value, str)
    if kind == "list":
        return isinstance(value, list)
    if kind == "dict":
        return isinstance(value, dict)
    raise AssertionError(kind)


@dataclass
class ScenarioConfig:
    """Fully defaulted, validated configuration."""

    data: dict
    base_dir: Path = Path(".")

    def __getitem__(self, section: str) -> dict:
        return self.data[section]

    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)

    def resolve(self, path: str | None) -> Path | None:
        """Input paths are relative to the config file."""
        if path is None:
            return None
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p

    # -- typed views ---------------------------------------------------------

    @property
    def grid(self) -> SpatialGrid:
        g = self.data["grid"]
        lengths = g["lengths"] if g["lengths"] is not None else [1.0] * len(g["cells"])
        return SpatialGrid(tuple(g["cells"]), tuple(float(x) for x in lengths), g["max_cells"])

    @property
    def quadrature(self) -> AngularFrequencyQuadrature:
        q = self.data["quadrature"]
        return AngularFrequencyQuadrature.build(q["n_polar"], q["n_azimuth"], q["n_groups"], q["v_min"], q["v_max"])

    @property
    def params(self) -> PhysicalParams:
        ph = self.data["physics"]
        return PhysicalParams(mu=ph["mu"], lam=ph["lambda"], kappa=ph["kappa"], R=ph["R"], c_v=ph["c_v"],
                              gamma=ph["gamma"], c_light=ph["c_light"])

    @property
    def picard(self) -> PicardConfig:
        return PicardConfig(**self.data["picard"])

    @property
    def boundary(self) -> BoundaryConfig:
        b = self.data["boundary"]
        return BoundaryConfig(b["velocity"], b["temperature"], b["intensity"])


def validate(raw: dict, source: str = "<config>", base_dir: Path = Path(".")) -> ScenarioConfig:
    """Merge ``raw`` over the defaults and check every constraint."""
    errors: list[str] = []
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(["top level must be a mapping of sections"], source)
    data = copy.deepcopy(DEFAULTS)
    for section, body in raw.items():
        if section not in DEFAULTS:
            errors.append(f"unknown section {section!r}")
            continue
        if body is None:
            continue
        if not isinstance(body, dict):
            errors.append(f"section {section!r} must be a mapping")
            continue
        for key, value in body.items():
            if key not in DEFAULTS[section]:
                errors.append(f"unknown key {section}.{key!r}")
                continue
            if not _kind_ok(value, KINDS[section][key]):
                errors.append(f"{section}.{key}: expected {KINDS[section][key].rstrip('?')}, got {value!r}")
                continue
            data[section][key] = value
    cfg = ScenarioConfig(data, base_dir)
    errors += _semantic_errors(cfg)
    if errors:
        raise ConfigError(errors, source)
    return cfg


def _semantic_errors(cfg: ScenarioConfig) -> list[str]:
    errors = []
    d = cfg.data
    grid = None
    if d["grid"]["cells"] is None:
        errors.append("grid.cells is required")
    else:
        try:
            if not all(isinstance(n, int) and not isinstance(n, bool) for n in d["grid"]["cells"]):
                raise ValueError("cell counts must be integers")
            grid = cfg.grid
        except (ValueError, TypeError) as exc:
            errors.append(f"grid: {exc}")
    quad = None
    try:
        quad = cfg.quadrature
    except ValueError as exc:
        errors.append(f"quadrature: {exc}")
    ph = d["physics"]
    report = validate_parameters(cfg.params, ph["strict_blowup"])
    errors += [f"physics: constraint {msg} violated" for msg in report.failures()]

    co = d["coefficients"]
    if co["model"] not in MODELS:
        errors.append(f"coefficients.model must be one of {MODELS}, got {co['model']!r}")
    if co["model"] == "compton" and not (co["D1"] > 0 and co["D2"] > 0 and co["v0"] > 0):
        errors.append("coefficients: compton model needs D1, D2, v0 > 0")
    if co["model"] == "tabulated" and co["table"] is None:
        errors.append("coefficients.table is required for the tabulated model")
    if co["model"] == "constant" and co["sigma"] < 0:
        errors.append("coefficients.sigma must be >= 0")
    if co["scattering"] < 0 or (co["scattering_out"] is not None and co["scattering_out"] < 0):
        errors.append("coefficients: scattering kernels must be >= 0")
    if co["heating_sign"] not in (-1, 1, -1.0, 1.0):
        errors.append("coefficients.heating_sign must be -1 or +1")
    if co["emission"] is not None:
        errors += _profile_errors("coefficients.emission", co["emission"], "scalar", grid)

    try:
        cfg.boundary
    except ValueError as exc:
        errors.append(f"boundary: {exc}")

    ini = d["initial"]
    for key, kind in (("density", "scalar"), ("velocity", "velocity"), ("temperature", "scalar"),
                      ("intensity", "intensity")):
        errors += _profile_errors(f"initial.{key}", ini[key], kind, grid, quad)

    t = d["time"]
    if not t["dt"] > 0:
        errors.append("time.dt must be > 0")
    if not t["t_end"] >= 0:
        errors.append("time.t_end must be >= 0")
    sub = t["transport_substeps"]
    if not (sub == "auto" or (isinstance(sub, int) and not isinstance(sub, bool) and sub >= 1)):
        errors.append("time.transport_substeps must be 'auto' or an integer >= 1")
    for key in ("transport_cfl", "advect_cfl"):
        if not t[key] > 0:
            errors.append(f"time.{key} must be > 0")
    if t["max_halvings"] < 0:
        errors.append("time.max_halvings must be >= 0")
    try:
        cfg.picard
    except ValueError as exc:
        errors.append(f"picard: {exc}")
    dg = d["diagnostics"]
    if dg["bkm_q"] < 1:
        errors.append("diagnostics.bkm_q must be >= 1")
    if not dg["eps_vac"] > 0:
        errors.append("diagnostics.eps_vac must be > 0")
    if not d["numerics"]["linear_rtol"] > 0:
        errors.append("numerics.linear_rtol must be > 0")
    if d["numerics"]["workers"] < 1:
        errors.append("numerics.workers must be >= 1")
    if d["output"]["checkpoint_every"] < 0:
        errors.append("output.checkpoint_every must be >= 0")
    return errors


def _profile_errors(where: str, spec: dict, kind: str, grid, quad=None) -> list[str]:
    if grid is None:
        return []
    try:
        if kind == "scalar":
            f = profiles.scalar_field(spec, grid)
            if where in ("initial.density", "initial.temperature") and np.any(f < 0):
                return [f"{where}: profile takes negative values"]
            if where == "coefficients.emission" and np.any(f < 0):
                return [f"{where}: emission must be nonnegative"]
        elif kind == "velocity":
            profiles.velocity_field(spec, grid)
        elif quad is not None:
            profiles.intensity_field(spec, grid, quad)
    except (ValueError, TypeError, KeyError, IndexError) as exc:
        return [f"{where}: {exc}"]
    return []


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    return loads(path.read_text(), str(path), path.parent)


def loads(text: str, source: str = "<config>", base_dir: Path = Path(".")) -> ScenarioConfig:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}: " if mark is not None else ""
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError([f"parse error at {where}{problem}"], source) from None
    return validate(raw, source, base_dir)


def dumps(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)


# ---------------------------------------------------------------------------
# model construction
# ---------------------------------------------------------------------------


def build_coefficients(cfg: ScenarioConfig, grid: SpatialGrid, quad: AngularFrequencyQuadrature) -> rad.CoefficientModel:
    co = cfg["coefficients"]
    emission = profiles.emission_function(co["emission"], grid)
    out = co["scattering_out"]
    if co["model"] == "constant":
        return rad.constant_model(co["sigma"], co["scattering"], out, emission)
    kernels = dict(sbar_s=rad.constant_kernel(co["scattering"]),
                   sbar_s_prime=None if out is None else rad.constant_kernel(out), emission=emission)
    if co["model"] == "compton":
        return rad.ComptonCoefficients(D1=co["D1"], D2=co["D2"], v0=co["v0"], **kernels)
    return rad.TabulatedCoefficients.from_csv(cfg.resolve(co["table"]), quad.n_groups, quad.n_ordinates, **kernels)


def build_model(cfg: ScenarioConfig) -> Model:
    grid, quad = cfg.grid, cfg.quadrature
    params = cfg.params
    setup = rad.RadiationSetup(grid, quad, build_coefficients(cfg, grid, quad), params.c_light)
    t = cfg["time"]
    return Model(setup, params, cfg.boundary, heating_sign=float(cfg["coefficients"]["heating_sign"]),
                 transport_substeps=t["transport_substeps"], transport_cfl=t["transport_cfl"],
                 advect_cfl=t["advect_cfl"], check_tangency=t["check_tangency"],
                 workers=cfg["numerics"]["workers"], linear_rtol=cfg["numerics"]["linear_rtol"])


def initial_data(cfg: ScenarioConfig, model: Model) -> tuple[Iterate, float]:
    """Initial iterate and start time (from profiles or a checkpoint).

    The vacuum regularization shift ``picard.delta_vacuum`` is applied here.
    """
    from .checkpoint import read_checkpoint

    grid, quad = model.grid, model.setup.quad
    ini = cfg["initial"]
    if ini["checkpoint"] is not None:
        state, I = read_checkpoint(cfg.resolve(ini["checkpoint"]))
        if state.rho.shape != grid.shape or I.shape[:2] != (quad.n_groups, quad.n_ordinates):
            raise ConfigError([f"initial.checkpoint: discretization {state.rho.shape}/{I.shape[:2]} does not match "
                               f"the configured grid {grid.shape} and quadrature ({quad.n_groups}, {quad.n_ordinates})"])
        it, t0 = Iterate.from_state(state, I), state.time
    else:
        rho = profiles.scalar_field(ini["density"], grid)
        state = FluidState(rho, profiles.velocity_field(ini["velocity"], grid),
                           profiles.scalar_field(ini["temperature"], grid), 0.0)
        it, t0 = Iterate.from_state(state, profiles.intensity_field(ini["intensity"], grid, quad)), 0.0
    delta = cfg["picard"]["delta_vacuum"]
    if delta > 0:
        it = Iterate(it.I, regularize_vacuum(it.rho, delta), it.u, it.theta)
    if not math.isfinite(float(np.sum(it.rho))):
        raise ConfigError(["initial density is not finite"])
    return it, t0
