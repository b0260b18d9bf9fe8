"""Command-line front end: ``rhdsim run | check | verify | inspect``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure (including
a tripped blow-up threshold or a failed study), 3 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time

import numpy as np

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3


def _cmd_run(args) -> int:
    from .config import load_config, validate
    from .simulation import run_simulation

    cfg = load_config(args.config)
    if args.t_end is not None:
        raw = cfg.to_dict()
        raw["time"]["t_end"] = args.t_end
        cfg = validate(raw, args.config, cfg.base_dir)
    res = run_simulation(cfg, csv_path=args.csv, checkpoint_path=args.checkpoint, keep_records=False)
    if not args.quiet:
        print(f"status {res.status}: {res.steps} steps, t = {res.time:.6g}")
        if res.error:
            print(f"error: {res.error}")
        if res.checkpoint:
            print(f"checkpoint: {res.checkpoint}")
    return EXIT_OK if res.status == "completed" else EXIT_NUMERICAL


def _cmd_check(args) -> int:
    from . import diagnostics as diag
    from . import radiation as rad
    from .config import build_model, initial_data, load_config, validate

    cfg = load_config(args.config)
    model = build_model(cfg)
    data, _ = initial_data(cfg, model)
    p, dcfg = model.params, cfg["diagnostics"]
    refined = None
    if cfg["initial"]["checkpoint"] is None:
        raw = cfg.to_dict()
        raw["grid"]["cells"] = [2 * n for n in raw["grid"]["cells"]]
        fine_cfg = validate(raw, args.config, cfg.base_dir)
        fine_model = build_model(fine_cfg)
        refined = (initial_data(fine_cfg, fine_model)[0], fine_model.setup)
    rep = diag.check_compatibility(data, model.setup, p, dcfg["eps_vac"], refined=refined,
                                   heating_sign=model.heating_sign)
    print("compatibility")
    print(f"  classification      {rep.classification}")
    print(f"  |R1/sqrt(rho0)|_2   {rep.g1_norm:.6g}")
    print(f"  |R2/sqrt(rho0)|_2   {rep.g2_norm:.6g}")
    print(f"  vacuum cells        {rep.vacuum_cells}")
    print(f"  vacuum residual max {rep.vacuum_residual_max:.6g} (tolerance {rep.tol_vac:.3g})")
    if rep.growth is not None:
        print(f"  refinement growth   {rep.growth:.6g}")

    co = rad.validate_coefficients(model.setup.coeffs, model.setup.quad, dcfg["alpha"], dcfg["beta"],
                                   rho_samples=(float(data.rho.min()), float(data.rho.max())),
                                   theta_samples=(max(float(data.theta.min()), rad.THETA_FLOOR),
                                                  float(data.theta.max())))
    print("coefficients")
    for k, v in co.values.items():
        print(f"  {k:<26}{v:.6g}")
    for c in co.checks:
        print(f"  [{'ok' if c.passed else 'VIOLATED'}] {c.name} {c.detail}".rstrip())

    mask = data.rho < dcfg["eps_vac"]
    ell = diag.vacuum_elliptic_check(model.grid, mask, p, model.bc.velocity_mode)
    print("vacuum elliptic system")
    print(f"  vacuum cells        {ell['cells']}")
    print(f"  smallest eigenvalue {ell['min_eigen_estimate']:.6g} (Lame {ell['lame']:.6g}, heat {ell['heat']:.6g})")
    print(f"  only zero solution  {ell['unique_zero']}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    from .studies import STUDIES

    if args.list:
        for name in STUDIES:
            print(name)
        return EXIT_OK
    names = args.suite or list(STUDIES)
    unknown = [n for n in names if n not in STUDIES]
    if unknown:
        print(f"unknown suite(s): {', '.join(unknown)}; choose from {', '.join(STUDIES)}", file=sys.stderr)
        return EXIT_CONFIG
    failed = 0
    for name in names:
        t0 = time.perf_counter()
        res = STUDIES[name]()
        print(f"{res.line()} ({time.perf_counter() - t0:.1f} s)", flush=True)
        if name == "picard-contraction":
            for label, key in (("dt", "ratios"), ("dt/2", "ratios_half")):
                r = np.asarray(res.values[key])
                print(f"  ratios at {label}: " + " ".join(f"{x:.3g}" for x in r[: min(len(r), 12)])
                      + (" ..." if len(r) > 12 else ""))
        failed += not res.passed
    print(f"{len(names) - failed}/{len(names)} passed")
    return EXIT_OK if failed == 0 else EXIT_NUMERICAL


def _cmd_inspect(args) -> int:
    from .checkpoint import read_checkpoint, read_header

    h = read_header(args.checkpoint)
    state, I = read_checkpoint(args.checkpoint)
    print(f"checkpoint {args.checkpoint}")
    print(f"  version {h.version}, dim {h.dim}, cells {list(h.cells)}, lengths {list(h.lengths)}")
    print(f"  groups {h.n_groups}, ordinates {h.n_ordinates}, time {h.time!r}")
    for name, arr in (("rho", state.rho), ("u", state.u), ("theta", state.theta), ("I", I)):
        print(f"  {name:<6} min {arr.min():.6g}  max {arr.max():.6g}  mean {arr.mean():.6g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rhdsim", description="Radiation hydrodynamics on a box with walls.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate a scenario and stream diagnostics")
    r.add_argument("config")
    r.add_argument("--csv", help="diagnostics CSV path (overrides output.diagnostics_csv)")
    r.add_argument("--checkpoint", help="final checkpoint path (overrides output.checkpoint)")
    r.add_argument("--t-end", type=float, help="override time.t_end")
    r.add_argument("--quiet", action="store_true", help="print nothing on success")
    r.set_defaults(func=_cmd_run)

    c = sub.add_parser("check", help="report on the initial data and coefficients without time stepping")
    c.add_argument("config")
    c.set_defaults(func=_cmd_check)

    v = sub.add_parser("verify", help="run verification studies and print pass/fail lines")
    v.add_argument("suite", nargs="*", help="study names (default: all)")
    v.add_argument("--list", action="store_true", help="list the available studies")
    v.set_defaults(func=_cmd_verify)

    i = sub.add_parser("inspect", help="summarize a checkpoint file")
    i.add_argument("checkpoint")
    i.set_defaults(func=_cmd_inspect)
    return ap


def main(argv=None) -> int:
    from .config import ConfigError
    from .simulation import NUMERICAL_ERRORS

    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error in {exc.source}:", file=sys.stderr)
        for e in exc.errors:
            print(f"  - {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERICAL_ERRORS as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
