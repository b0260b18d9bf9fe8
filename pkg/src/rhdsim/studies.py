"""Desk-scale verification studies shared by ``rhdsim verify`` and the test suite.

Each study returns a :class:`StudyResult` with a pass flag, the measured
numbers and one summary line. Studies are deterministic: random scenarios
come from a seeded generator.
"""

from __future__ import annotations

import copy
import math
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from . import diagnostics as diag
from . import hydro
from . import operators as ops
from . import radiation as rad
from .config import validate
from .coupler import Iterate
from .grid import AngularFrequencyQuadrature, PhysicalParams, SpatialGrid

SCENARIO_DIR = Path(__file__).resolve().parent / "scenarios"


@dataclass
class StudyResult:
    name: str
    passed: bool
    summary: str
    values: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.summary}"


def reference_config(**overrides) -> dict:
    """The smooth 1D reference scenario as a raw dict, with section overrides.

    ``overrides`` maps a section name to a dict merged into that section.
    """
    import yaml

    raw = yaml.safe_load((SCENARIO_DIR / "reference_1d.yaml").read_text())
    for section, values in overrides.items():
        raw.setdefault(section, {}).update(values)
    return raw


def _run(raw: dict, **kw):
    from .simulation import run_simulation

    return run_simulation(validate(copy.deepcopy(raw)), **kw)


def order(errors, factor: float = 2.0) -> list[float]:
    """Observed convergence orders between successive refinements."""
    return [math.log(errors[k] / errors[k + 1]) / math.log(factor) for k in range(len(errors) - 1)]


# ---------------------------------------------------------------------------
# 1. intensity positivity
# ---------------------------------------------------------------------------


def random_scenario(rng: np.random.Generator) -> dict:
    """A small valid scenario with random coefficients and initial data."""
    dim = 1 if rng.random() < 0.75 else 2
    cells = [int(rng.integers(16, 41))] if dim == 1 else [int(rng.integers(8, 13))] * 2
    n_groups = int(rng.integers(1, 3))
    shape = {"type": "wall_vanishing", "value": 1.0, "power": float(rng.choice([1.0, 2.0]))}
    if rng.random() < 0.5:
        intensity = {"type": "isotropic", "value": float(rng.uniform(0, 2)), "shape": shape}
    else:
        intensity = {"type": "beam", "value": float(rng.uniform(0, 5)), "ordinate": int(rng.integers(0, 8)),
                     "shape": shape}
    if rng.random() < 0.3:
        density = {"type": "gaussian", "amplitude": 1.0, "width": float(rng.uniform(0.15, 0.4)),
                   "floor": float(rng.uniform(0.0, 0.3)), "power": 2.0}
    else:
        density = {"type": "cosine", "value": 1.0, "amplitude": float(rng.uniform(0, 0.5)), "modes": [1] * dim}
    mu = float(rng.uniform(0.1, 2.0))
    return {
        "grid": {"cells": cells},
        "quadrature": {"n_polar": 2, "n_azimuth": 4, "n_groups": n_groups},
        "physics": {"mu": mu, "lambda": float(rng.uniform(-0.5, 1.0)) * mu, "kappa": float(rng.uniform(0.1, 2.0)),
                    "c_light": float(rng.uniform(1.0, 20.0))},
        "coefficients": {"model": "constant", "sigma": float(rng.uniform(0, 5)),
                         "scattering": float(rng.uniform(0, 2)),
                         "emission": {"type": "wall_vanishing", "value": float(rng.uniform(0, 1)), "power": 2.0}},
        "boundary": {"velocity": str(rng.choice(["dirichlet", "navier_slip"]))},
        "initial": {"density": density,
                    "velocity": {"type": "sine_mode", "amplitude": float(rng.uniform(-0.5, 0.5)),
                                 "component": 0, "modes": [1] * dim},
                    "temperature": {"type": "cosine", "value": 1.0, "amplitude": float(rng.uniform(0, 0.5)),
                                    "modes": [1] * dim},
                    "intensity": intensity},
        "time": {"dt": float(rng.uniform(5e-4, 5e-3)), "t_end": 0.0},
        "picard": {"tol_lambda": 1e-12, "max_iters": 3},
    }


def study_positivity(n_scenarios: int = 200, steps: int = 20, seed: int = 20240601, tol: float = 1e-12) -> StudyResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    worst_clamp = 0.0
    failures = []
    for k in range(n_scenarios):
        raw = random_scenario(rng)
        raw["time"]["t_end"] = steps * raw["time"]["dt"]
        res = _run(raw)
        if res.status != "completed":
            failures.append(f"scenario {k}: {res.status} ({res.error})")
            continue
        for rec in res.records:
            scale = max(rec["I_max"], 1e-300)
            worst = min(worst, rec["I_min"] / scale)
            worst_clamp = max(worst_clamp, rec["transport_clamp"] / scale)
    passed = not failures and worst >= -tol and worst_clamp <= tol
    summary = (f"{n_scenarios} scenarios x {steps} steps, min I / max I = {worst:.3g}, "
               f"largest clamp / max I = {worst_clamp:.3g}")
    if failures:
        summary += f", {len(failures)} runs failed: {failures[0]}"
    return StudyResult("positivity", passed, summary,
                       {"min_ratio": worst, "clamp_ratio": worst_clamp, "failures": failures})


# ---------------------------------------------------------------------------
# 2. transport oracle
# ---------------------------------------------------------------------------


def _transport_error(n: int, H0: float, F0: float, c: float, T: float, cfl: float):
    grid = SpatialGrid((n,), (1.0,))
    quad = AngularFrequencyQuadrature.build(2, 4, 1)
    x = grid.mesh()[0]
    dt = cfl * grid.spacing[0] / c
    steps = int(round(T / dt))

    def profile(y):
        return 1.0 + 0.5 * np.sin(2 * np.pi * y)

    I = np.broadcast_to(profile(x), (1, quad.n_ordinates, n)).copy()
    H = np.full(I.shape, H0)
    F = np.full(I.shape, F0)
    for _ in range(steps):
        I = rad.sweep(I, H, F, grid, quad, c, dt, 1, cfl, periodic=True).intensity
    t = steps * dt
    decay = math.exp(-c * H0 * t)
    exact = np.stack([profile(x - c * quad.ordinates[m, 0] * t) * decay + F0 / H0 * (1 - decay)
                      for m in range(quad.n_ordinates)])[None]
    return float(np.abs(I - exact).max() / np.abs(exact).max()), dt


def _uniform_ray_error(dt: float, H0: float, F0: float, c: float, T: float):
    # spatially uniform data: the sweep reduces to the ray ODE dI/dt = c (F - H I)
    grid = SpatialGrid((8,), (1.0,))
    quad = AngularFrequencyQuadrature.build(2, 4, 1)
    I = np.full((1, quad.n_ordinates, 8), 0.3)
    H = np.full(I.shape, H0)
    F = np.full(I.shape, F0)
    steps = int(round(T / dt))
    for _ in range(steps):
        I = rad.sweep(I, H, F, grid, quad, c, dt, 1, cfl_max=1e9, periodic=True).intensity
    ode = solve_ivp(lambda t, y: c * (F0 - H0 * y), (0.0, steps * dt), [0.3], rtol=1e-12, atol=1e-14)
    ref = float(ode.y[0, -1])
    return float(np.abs(I - ref).max() / abs(ref))


def study_transport(n: int = 1024, H0: float = 2.0, F0: float = 1.0, c: float = 1.0, T: float = 0.25,
                    cfl: float = 0.5) -> StudyResult:
    e1, dt = _transport_error(n, H0, F0, c, T, cfl)
    e2, _ = _transport_error(2 * n, H0, F0, c, T, cfl)
    u1 = _uniform_ray_error(0.02, H0, F0, c, 0.5)
    u2 = _uniform_ray_error(0.01, H0, F0, c, 0.5)
    factor, ufactor = e1 / e2, u1 / u2
    passed = e1 <= 1e-3 and factor >= 1.8 and u1 <= 1e-3 and ufactor >= 1.8
    summary = (f"advected profile: rel error {e1:.3g} (dt={dt:.3g}, CFL {cfl}), {e2:.3g} at dt/2, "
               f"factor {factor:.3f}; ray ODE: {u1:.3g} -> {u2:.3g}, factor {ufactor:.3f}")
    return StudyResult("transport-oracle", passed, summary,
                       {"error": e1, "error_half": e2, "factor": factor, "ode_error": u1, "ode_factor": ufactor})


# ---------------------------------------------------------------------------
# 3. density flow map
# ---------------------------------------------------------------------------


def _flow_map_error(n: int, alpha: float, dt: float, T: float) -> float:
    grid = SpatialGrid((n,), (1.0,))
    x = grid.mesh()[0]

    def rho0(y):
        return 1.0 + 0.5 * np.exp(-((y - 0.4) / 0.15) ** 2)

    w = grid.zeros(3)
    w[0] = alpha * x
    rho = rho0(x)
    steps = int(round(T / dt))
    for _ in range(steps):
        rho = hydro.advect_density(rho, w, grid, dt, check_tangency=False)
    t = steps * dt
    exact = rho0(x * math.exp(-alpha * t)) * math.exp(-alpha * t)
    return float(np.sqrt(np.mean((rho - exact) ** 2)))


def study_flow_map(cells=(32, 64, 128, 256), alpha: float = 1.0, dt: float = 1e-4, T: float = 0.1) -> StudyResult:
    errs = [_flow_map_error(n, alpha, dt, T) for n in cells]
    orders = order(errs)
    passed = min(orders) >= 1.8
    summary = "L2 errors " + ", ".join(f"{n}:{e:.3g}" for n, e in zip(cells, errs)) + \
        f"; orders {', '.join(f'{o:.2f}' for o in orders)}"
    return StudyResult("density-flow-map", passed, summary, {"errors": errs, "orders": orders})


# ---------------------------------------------------------------------------
# 4. mass conservation
# ---------------------------------------------------------------------------


def _mass_drift(dt: float, steps: int) -> float:
    res = _run(reference_config(time={"dt": dt, "t_end": steps * dt}))
    m = np.array([r["mass"] for r in res.records])
    return float((m[-1] - m[0]) / m[0])


def study_mass(dt: float = 1e-3, steps: int = 100) -> StudyResult:
    d1 = _mass_drift(dt, steps)
    d2 = _mass_drift(dt / 2, steps)
    factor = abs(d1) / abs(d2) if d2 != 0 else math.inf
    passed = abs(d1) <= 1e-6 and factor >= 1.8
    summary = f"relative drift over {steps} steps: {d1:.3g} at dt={dt}, {d2:.3g} at dt/2, factor {factor:.3f}"
    return StudyResult("mass-conservation", passed, summary, {"drift": d1, "drift_half": d2, "factor": factor})


# ---------------------------------------------------------------------------
# 5. Picard contraction
# ---------------------------------------------------------------------------


def _picard_ratios(dt: float, t_end: float):
    res = _run(reference_config(time={"dt": dt, "t_end": t_end}))
    ratios = [q for rep in res.reports for q in rep.ratios]
    iters = [rep.iterations for rep in res.reports]
    return ratios, iters


def study_picard(dt: float = 1e-3, t_end: float = 0.01) -> StudyResult:
    r1, it1 = _picard_ratios(dt, t_end)
    r2, it2 = _picard_ratios(dt / 2, t_end)
    m1, m2 = float(np.median(r1)), float(np.median(r2))
    worst = max(max(r1), max(r2))
    passed = worst < 1 and m2 < m1
    summary = (f"dt={dt}: median ratio {m1:.3g} (max {max(r1):.3g}, {max(it1)} iterations/step); "
               f"dt/2: median {m2:.3g} (max {max(r2):.3g}, {max(it2)} iterations/step)")
    return StudyResult("picard-contraction", passed, summary,
                       {"ratios": r1, "ratios_half": r2, "median": m1, "median_half": m2})


# ---------------------------------------------------------------------------
# 6. vacuum regularization
# ---------------------------------------------------------------------------


def vacuum_bump_config(delta: float, t_end: float = 0.1, cells: int = 64, dt: float = 1e-3) -> dict:
    import yaml

    raw = yaml.safe_load((SCENARIO_DIR / "vacuum_bump_1d.yaml").read_text())
    raw["grid"]["cells"] = [cells]
    raw["time"].update(dt=dt, t_end=t_end)
    raw["picard"]["delta_vacuum"] = delta
    return raw


def _final_state(raw: dict) -> np.ndarray:
    res = _run(raw, keep_records=False)
    if res.status != "completed":
        raise RuntimeError(f"vacuum run ended with {res.status}: {res.error}")
    it = res.iterate
    return np.concatenate([it.rho.ravel(), it.u.ravel(), it.theta.ravel(), it.I.ravel()])


def study_delta(deltas=(1e-2, 1e-3, 1e-4), t_end: float = 0.1) -> StudyResult:
    seq = list(deltas) + [deltas[-1] / 10]
    finals = [_final_state(vacuum_bump_config(d, t_end)) for d in seq]
    h = 1.0 / 64
    gaps = [float(np.sqrt(h * np.sum((finals[k] - finals[k + 1]) ** 2))) for k in range(len(deltas))]
    passed = all(gaps[k + 1] < gaps[k] for k in range(len(gaps) - 1))
    summary = "||s_d - s_d/10||_2: " + ", ".join(f"d={d:g}: {g:.3g}" for d, g in zip(deltas, gaps))
    return StudyResult("delta-regularization", passed, summary, {"gaps": gaps})


# ---------------------------------------------------------------------------
# 7. compatibility classifier
# ---------------------------------------------------------------------------


def compatibility_fixture(kind: str, n: int):
    """Initial data and radiation setup of one of the three classifier fixtures.

    ``smooth``: positive density, smooth velocity, temperature and
    radiation. ``forced``: a density bump with a vacuum exterior and a
    velocity bump inside the vacuum. ``zero``: the same vacuum density with
    zero velocity, constant temperature, no radiation and no emission.
    """
    grid = SpatialGrid((n,), (1.0,))
    quad = AngularFrequencyQuadrature.build(2, 4, 1)
    x = grid.mesh()[0]
    p = PhysicalParams()
    u = grid.zeros(3)
    I = np.zeros((1, quad.n_ordinates, n))
    theta = np.ones(n)
    bump = np.maximum(0.0, np.exp(-((x - 0.3) / 0.15) ** 2) - 0.2) ** 2
    if kind == "smooth":
        rho = 1.0 + 0.3 * np.cos(np.pi * x)
        u[0] = 0.2 * np.sin(np.pi * x)
        theta = 1.0 + 0.1 * np.cos(2 * np.pi * x)
        I[:] = 0.5 * np.sin(np.pi * x) ** 2
        coeffs = rad.constant_model(1.0, 0.2)
    elif kind == "forced":
        rho = bump
        u[0] = np.where((x > 0.6) & (x < 0.9), np.sin(np.pi * (x - 0.6) / 0.3) ** 2, 0.0)
        coeffs = rad.constant_model(1.0)
    elif kind == "zero":
        rho = bump
        coeffs = rad.constant_model(1.0)
    else:
        raise ValueError(f"unknown fixture {kind!r}")
    setup = rad.RadiationSetup(grid, quad, coeffs, p.c_light)
    return Iterate(I, rho, u, theta), setup, p


def classify_fixture(kind: str, n: int) -> diag.CompatibilityReport:
    data, setup, p = compatibility_fixture(kind, n)
    fine = compatibility_fixture(kind, 2 * n)
    return diag.check_compatibility(data, setup, p, refined=fine[:2])


def study_compatibility(n: int = 128) -> StudyResult:
    expected = {"smooth": "compatible", "forced": "incompatible", "zero": "compatible"}
    got, parts = {}, []
    ok = True
    for kind, want in expected.items():
        coarse = classify_fixture(kind, n).classification
        fine = classify_fixture(kind, 2 * n).classification
        got[kind] = (coarse, fine)
        ok &= coarse == want and fine == want
        parts.append(f"{kind}: {coarse}/{fine} (want {want})")
    return StudyResult("compatibility-classifier", ok, "; ".join(parts), {"classes": got})


# ---------------------------------------------------------------------------
# 8. gradient decomposition identity
# ---------------------------------------------------------------------------


def decomposition_fields(grid: SpatialGrid):
    x, y = grid.mesh()
    pi = np.pi
    fields = []
    u = grid.zeros(3)
    u[0], u[1], u[2] = 2 + np.sin(pi * x), np.cos(pi * y), 0.5 * x * y
    fields.append(u)
    u = grid.zeros(3)
    u[0], u[1], u[2] = np.cos(2 * pi * x) * np.sin(pi * y), 1.5 + x**2, np.exp(-x - y)
    fields.append(u)
    u = grid.zeros(3)
    u[0], u[1], u[2] = 1.0 + 0 * x, np.sin(2 * pi * (x + y)), np.cos(pi * x * y)
    fields.append(u)
    return fields


def study_gradient_decomposition(cells=(16, 32, 64, 128)) -> StudyResult:
    norms = []
    for n in cells:
        grid = SpatialGrid((n, n), (1.0, 1.0))
        norms.append([ops.lp_norm(ops.gradient_decomposition_residual(u, grid), grid, 2)
                      for u in decomposition_fields(grid)])
    norms = np.array(norms)
    orders = [order(norms[:, k]) for k in range(norms.shape[1])]
    worst = min(min(o) for o in orders)
    passed = worst >= 1.0
    summary = "; ".join(f"field {k}: residuals {norms[0, k]:.2g}->{norms[-1, k]:.2g}, min order {min(o):.2f}"
                        for k, o in enumerate(orders))
    return StudyResult("gradient-decomposition", passed, summary, {"norms": norms.tolist(), "orders": orders})


# ---------------------------------------------------------------------------
# 9. parabolic eigenmodes
# ---------------------------------------------------------------------------


def heat_decay_rate(n: int, dt: float, steps: int = 20, p: PhysicalParams = PhysicalParams()) -> float:
    grid = SpatialGrid((n,), (1.0,))
    x = grid.mesh()[0]
    theta = np.cos(np.pi * x)
    rho = np.ones(n)
    zero = grid.zeros(3)
    chars = hydro.trace_characteristics(zero, grid, dt)
    amp0 = float(np.sum(theta * np.cos(np.pi * x)))
    for _ in range(steps):
        theta = hydro.temperature_step(theta, rho, zero, zero, np.zeros(n), dt, p, grid, chars)
    amp = float(np.sum(theta * np.cos(np.pi * x)))
    return -math.log(amp / amp0) / (steps * dt)


def lame_decay_rate(n: int, dt: float, steps: int = 20, p: PhysicalParams = PhysicalParams()) -> float:
    grid = SpatialGrid((n,), (1.0,))
    x = grid.mesh()[0]
    u = grid.zeros(3)
    u[0] = np.sin(np.pi * x)
    rho = np.ones(n)
    zero = grid.zeros(3)
    chars = hydro.trace_characteristics(zero, grid, dt)
    bc = hydro.BoundaryConfig("dirichlet")
    amp0 = float(np.sum(u[0] * np.sin(np.pi * x)))
    for _ in range(steps):
        u = hydro.momentum_step(u, rho, zero, np.zeros(n), zero, dt, p, grid, bc, chars)
    amp = float(np.sum(u[0] * np.sin(np.pi * x)))
    return -math.log(amp / amp0) / (steps * dt)


def study_eigenmodes(n: int = 128, dt: float = 5e-4) -> StudyResult:
    p = PhysicalParams()
    heat_exact = p.kappa / p.c_v * np.pi**2
    lame_exact = (p.lam + 2 * p.mu) * np.pi**2
    rel = {
        "heat": abs(heat_decay_rate(n, dt, p=p) / heat_exact - 1),
        "lame": abs(lame_decay_rate(n, dt, p=p) / lame_exact - 1),
        "heat_fine": abs(heat_decay_rate(2 * n, dt / 2, steps=40, p=p) / heat_exact - 1),
        "lame_fine": abs(lame_decay_rate(2 * n, dt / 2, steps=40, p=p) / lame_exact - 1),
    }
    passed = rel["heat"] <= 0.02 and rel["lame"] <= 0.02 and rel["heat_fine"] <= 0.005 and rel["lame_fine"] <= 0.005
    summary = (f"{n} cells: heat {rel['heat']:.3%}, Lame {rel['lame']:.3%}; "
               f"{2 * n} cells, dt/2: heat {rel['heat_fine']:.3%}, Lame {rel['lame_fine']:.3%}")
    return StudyResult("eigenmodes", passed, summary, rel)


# ---------------------------------------------------------------------------
# 10. Navier-slip invariants
# ---------------------------------------------------------------------------


def _slip_step(n: int, dt: float = 1e-3, p: PhysicalParams = PhysicalParams(mu=1.0, lam=0.5)):
    grid = SpatialGrid((n, n, n), (1.0, 1.0, 1.0))
    x, y, z = grid.mesh()
    pi = np.pi
    # gradient of phi = cos(pi x) cos(pi y) cos(pi z): curl-free, normal part vanishes on the walls
    u = grid.zeros(3)
    u[0] = -pi * np.sin(pi * x) * np.cos(pi * y) * np.cos(pi * z)
    u[1] = -pi * np.cos(pi * x) * np.sin(pi * y) * np.cos(pi * z)
    u[2] = -pi * np.cos(pi * x) * np.cos(pi * y) * np.sin(pi * z)
    rho = 1.0 + 0.2 * np.cos(pi * x) * np.cos(pi * y) * np.cos(pi * z)
    zero = grid.zeros(3)
    chars = hydro.trace_characteristics(zero, grid, dt)
    bc = hydro.BoundaryConfig("navier_slip")
    u = hydro.momentum_step(u, rho, zero, np.zeros(grid.shape), zero, dt, p, grid, bc, chars)
    faces = ops.face_normal_velocity(u, grid, "navier_slip")
    un = max(float(np.max(np.abs(f))) for f in faces) / float(np.max(np.abs(u)))
    om = ops.curl(u, grid)
    curl_n = 0.0
    for a in range(3):
        lo, hi = ops.wall_values(om[a], grid, a)
        curl_n = max(curl_n, float(np.max(np.abs(lo))), float(np.max(np.abs(hi))))
    return un, curl_n


def study_navier_slip(cells=(8, 16, 32)) -> StudyResult:
    res = [_slip_step(n) for n in cells]
    un = max(r[0] for r in res)
    curl = [r[1] for r in res]
    orders = order(curl)
    passed = un <= 1e-10 and min(orders) >= 1.0
    summary = (f"max |u.n| / |u|_inf = {un:.3g}; wall |curl u . n|: "
               + ", ".join(f"{n}^3:{c:.3g}" for n, c in zip(cells, curl))
               + f"; orders {', '.join(f'{o:.2f}' for o in orders)}")
    return StudyResult("navier-slip", passed, summary, {"un": un, "curl_n": curl, "orders": orders})


# ---------------------------------------------------------------------------
# 11. blow-up monitor
# ---------------------------------------------------------------------------


def study_blowup() -> StudyResult:
    # threshold semantics on a fixed state: trips iff composite > threshold
    grid = SpatialGrid((32,), (1.0,))
    quad = AngularFrequencyQuadrature.build(2, 4, 1)
    setup = rad.RadiationSetup(grid, quad, rad.constant_model(1.0), 10.0)
    x = grid.mesh()[0]
    I = np.broadcast_to(np.sin(np.pi * x) ** 2, (1, 8, 32)).copy()
    rho, theta, u = 1.0 + 0.5 * x, 2.0 - x, grid.zeros(3)
    p = PhysicalParams()
    comp = diag.blowup_monitor(I, rho, u, theta, setup, p).composite
    at = diag.blowup_monitor(I, rho, u, theta, setup, p, threshold=comp).tripped
    below = diag.blowup_monitor(I, rho, u, theta, setup, p, threshold=math.nextafter(comp, 0)).tripped
    semantics = (not at) and below

    # forced compression through the command line
    from .cli import main

    with tempfile.TemporaryDirectory() as tmp:
        import yaml

        raw = yaml.safe_load((SCENARIO_DIR / "compression_1d.yaml").read_text())
        ck = Path(tmp) / "final.ckpt"
        csv_path = Path(tmp) / "diag.csv"
        raw["output"] = {"checkpoint": str(ck), "diagnostics_csv": str(csv_path)}
        cfg_path = Path(tmp) / "compression.yaml"
        cfg_path.write_text(yaml.safe_dump(raw))
        code = main(["run", str(cfg_path), "--quiet"])
        rows = csv_path.read_text().splitlines()
        header = rows[0].split(",")
        last = dict(zip(header, rows[-1].split(",")))
        rho0 = dict(zip(header, rows[1].split(",")))
        has_ck = ck.exists()
    growth = float(last["rho_max"]) / float(rho0["rho_max"])
    t_stop = float(last["time"])
    halted = t_stop < raw["time"]["t_end"]
    passed = semantics and code == 2 and has_ck and halted and last["tripped"] == "1" and growth > 1
    summary = (f"threshold semantics {'ok' if semantics else 'broken'}; compression run: exit {code}, "
               f"rho_max grew x{growth:.3f}, halted at t={t_stop:g} of {raw['time']['t_end']:g}, "
               f"checkpoint {'written' if has_ck else 'missing'}")
    return StudyResult("blowup-monitor", passed, summary,
                       {"exit_code": code, "growth": growth, "checkpoint": has_ck, "semantics": semantics})


# ---------------------------------------------------------------------------
# 12. determinism
# ---------------------------------------------------------------------------


def study_determinism(t_end: float = 0.005) -> StudyResult:
    from .simulation import run_simulation

    blobs = {}
    with tempfile.TemporaryDirectory() as tmp:
        for label, workers in (("a", 1), ("b", 1), ("c", 4), ("d", 4)):
            raw = reference_config(time={"t_end": t_end}, numerics={"workers": workers})
            path = Path(tmp) / f"{label}.csv"
            run_simulation(validate(raw), csv_path=path, keep_records=False)
            blobs[label] = path.read_bytes()
    same_serial = blobs["a"] == blobs["b"]
    same_threads = blobs["c"] == blobs["d"]
    cross = blobs["a"] == blobs["c"]
    passed = same_serial and same_threads and cross
    summary = (f"serial runs identical: {same_serial}; 4-worker runs identical: {same_threads}; "
               f"serial == 4 workers: {cross} ({len(blobs['a'])} bytes)")
    return StudyResult("determinism", passed, summary, {"serial": same_serial, "threads": same_threads, "cross": cross})


# ---------------------------------------------------------------------------
# 13. energy ledger
# ---------------------------------------------------------------------------


def _energy_residual(cells: int, dt: float, t_end: float) -> float:
    res = _run(reference_config(grid={"cells": [cells]}, time={"dt": dt, "t_end": t_end}))
    return float(np.mean([abs(r["energy_residual"]) for r in res.records[1:]]))


def study_energy(cells: int = 128, dt: float = 1e-3, t_end: float = 0.02) -> StudyResult:
    r1 = _energy_residual(cells, dt, t_end)
    r2 = _energy_residual(2 * cells, dt / 2, t_end)
    factor = r1 / r2
    passed = factor >= 1.8
    summary = (f"mean |residual| {r1:.3g} at ({cells} cells, dt={dt}), {r2:.3g} at ({2 * cells}, dt/2), "
               f"factor {factor:.3f}")
    return StudyResult("energy-ledger", passed, summary, {"residual": r1, "residual_half": r2, "factor": factor})


STUDIES: dict[str, Callable[[], StudyResult]] = {
    "positivity": study_positivity,
    "transport-oracle": study_transport,
    "density-flow-map": study_flow_map,
    "mass-conservation": study_mass,
    "picard-contraction": study_picard,
    "delta-regularization": study_delta,
    "compatibility-classifier": study_compatibility,
    "gradient-decomposition": study_gradient_decomposition,
    "eigenmodes": study_eigenmodes,
    "navier-slip": study_navier_slip,
    "blowup-monitor": study_blowup,
    "determinism": study_determinism,
    "energy-ledger": study_energy,
}
