"""Command-line front end: order checks, stability scans, runs, sweeps.

Exit codes: 0 on success, 2 for configuration problems, 3 when a
simulation diverged.  All CSV output is deterministic for a fixed
configuration (floats via repr, rows in configuration order).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import butcher, harness, order_analysis, stability
from .dg import DGField
from .models import UnphysicalStateError
from .sl_solver import DivergenceError, run

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3


class ConfigError(Exception):
    pass


def parse_grid(spec: str) -> np.ndarray:
    """Parse a grid spec: value | lo:hi:n | inf, comma-separated mixes allowed."""
    out = []
    for token in spec.split(","):
        token = token.strip()
        if not token:
            continue
        if token == "inf":
            out.append(np.array([np.inf]))
        elif ":" in token:
            parts = token.split(":")
            if len(parts) != 3:
                raise ConfigError(f"bad range {token!r}, expected lo:hi:n")
            lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
            if n < 1:
                raise ConfigError(f"bad range {token!r}: need n >= 1")
            out.append(np.linspace(lo, hi, n))
        else:
            out.append(np.array([float(token)]))
    if not out:
        raise ConfigError(f"empty grid spec {spec!r}")
    return np.concatenate(out)


def parse_float_list(spec: str) -> tuple[float, ...]:
    vals = tuple(float(tok) for tok in spec.split(",") if tok.strip())
    if not vals:
        raise ConfigError(f"empty list {spec!r}")
    return vals


def read_config_file(path: str) -> dict[str, str]:
    """Plain `key = value` config file; '#' starts a comment."""
    entries: dict[str, str] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"malformed config line {raw!r} (expected 'key = value')")
        key, value = line.split("=", 1)
        entries[key.strip()] = value.strip()
    return entries


def _write(path: str, text: str):
    Path(path).write_text(text, newline="\n")


# ---------------------------------------------------------------------------
# order-check
# ---------------------------------------------------------------------------

def cmd_order_check(args) -> int:
    t = butcher.resolve_tableau(args.tableau)
    problems = butcher.validate_tableau(t)
    if problems:
        raise ConfigError(f"tableau {t.name!r} failed validation: {problems}")
    so, kc, lc = order_analysis.coefficient_table(t)
    report = order_analysis.order_report(t, tol=args.tol)

    cols = [("c", kc.c), ("d", kc.d), ("g", kc.g), ("h", kc.h),
            ("C", lc.C), ("D", lc.D), ("B", lc.B), ("G", lc.G), ("H", lc.H),
            ("B*", lc.Bstar), ("B**", lc.Bstarstar), ("B***", lc.Bstarstarstar)]
    print(f"tableau {t.name} ({t.s} stages)")
    header = "stage" + "".join(f"{name:>14}" for name, _ in cols)
    print(header)
    for k in range(t.s):
        print(f"{k + 1:5d}" + "".join(f"{vals[k]:14.6g}" for _, vals in cols))
    suffix = lambda order: "+" if order == 3 else ""
    print(f"kinetic order: {report.kinetic_order}{suffix(report.kinetic_order)}")
    print(f"fluid order: {report.fluid_order}{suffix(report.fluid_order)}")
    print(f"G_s = {float(lc.G[-1])!r}")
    print("condition residuals:")
    for name, value in report.residuals.items():
        print(f"  {name:12s} {value: .3e}")
    ident = order_analysis.max_identity_residual(so)
    print(f"max cross-identity residual over stages: {ident:.3e}")

    if args.csv:
        header_row = ["stage"] + [name for name, _ in cols]
        rows = [[k + 1] + [float(vals[k]) for _, vals in cols] for k in range(t.s)]
        _write(args.csv, harness.rows_to_csv(rows, header_row))
    return EXIT_OK


# ---------------------------------------------------------------------------
# stability-scan
# ---------------------------------------------------------------------------

def cmd_stability_scan(args) -> int:
    t = butcher.resolve_tableau(args.tableau)
    b_grid = parse_grid(args.b)
    kdt_grid = parse_grid(args.kdt)
    xi_grid = parse_grid(args.xi)
    if np.any(b_grid < 0) or np.any(b_grid > 1):
        raise ConfigError("b values must lie in [0, 1]")
    if np.any(kdt_grid < 0) or np.any(xi_grid < 0):
        raise ConfigError("k_dt and xi values must be nonnegative")
    result = stability.scan(t, b_grid, kdt_grid, xi_grid)
    rho_max, b_at, kdt_at, xi_at = result.max_point()
    print(f"tableau {t.name}: {result.rho.size} grid points")
    print(f"max spectral radius {rho_max!r} at b = {b_at!r}, "
          f"k_dt = {kdt_at!r}, xi = {xi_at!r}")
    if args.out:
        rows = []
        for i, b in enumerate(b_grid):
            for j, kdt in enumerate(kdt_grid):
                for l, xi in enumerate(xi_grid):
                    rows.append((float(b), float(kdt), float(xi),
                                 float(result.lam_small[i, j, l]),
                                 float(result.lam_large[i, j, l]),
                                 float(result.rho[i, j, l])))
        header = ("b", "k_dt", "xi", "lambda1_abs", "lambda2_abs", "rho")
        _write(args.out, harness.rows_to_csv(rows, header))
        print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

_SIM_DEFAULTS = {"model": "linear", "tableau": "DIRK3-B10", "b": None,
                 "eps": "1e-2", "cfl": "0.5", "nx": "160", "p": "2",
                 "nv": "100", "vmax": "15", "T": None, "out": None}


def _merged_options(args, keys) -> dict[str, str | None]:
    base = dict(_SIM_DEFAULTS)
    if args.config:
        file_opts = read_config_file(args.config)
        unknown = set(file_opts) - set(keys)
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}; "
                              f"expected a subset of {sorted(keys)}")
        base.update(file_opts)
    for key in keys:
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            base[key] = flag_val
    return base


def cmd_simulate(args) -> int:
    opts = _merged_options(args, _SIM_DEFAULTS.keys())
    example_map = {"linear": "5.1", "nonlinear": "5.2", "bgk": "5.3"}
    model_name = opts["model"]
    if model_name not in example_map:
        raise ConfigError(f"unknown model {model_name!r}; expected linear, nonlinear or bgk")
    t_final = None if opts["T"] is None else float(opts["T"])
    cfg, f0 = harness.build_case(
        example_map[model_name], opts["tableau"], float(opts["eps"]), float(opts["cfl"]),
        n_elements=int(opts["nx"]), degree=int(opts["p"]), n_v=int(opts["nv"]),
        v_max=float(opts["vmax"]), t_final=t_final, legacy_update=args.legacy_update)
    if opts["b"] is not None:
        # rebuild with a custom coupling; only meaningful for two-velocity models
        from .models import make_model
        cfg.model = make_model(model_name, b=float(opts["b"]))
        u0 = cfg.model.moments(f0.values)
        f0 = DGField(mesh=cfg.mesh, values=cfg.model.equilibrium(u0))

    result = run(cfg, f0, diagnostics_every=args.diag_every)
    drift = np.abs(result.invariants[-1] - result.invariants[0])
    scale = np.maximum(np.abs(result.invariants[0]), 1e-300)
    print(f"completed {result.n_steps} steps to T = {cfg.t_final!r} "
          f"(dt = {cfg.dt!r})")
    for name, rel in zip(cfg.model.invariant_names, drift / scale):
        print(f"  {name} drift (relative): {rel:.3e}")
    print(f"  distance from equilibrium: {float(result.equilibrium_distance[-1])!r}")

    if opts["out"]:
        prefix = opts["out"]
        _write_snapshot(prefix, cfg, result)
        print(f"wrote {prefix}_distribution.csv, {prefix}_macro.csv, "
              f"{prefix}_diagnostics.csv")
    return EXIT_OK


def _write_snapshot(prefix, cfg, result):
    x = cfg.mesh.node_coords(cfg.degree).ravel()
    vset = cfg.model.velocity_set
    dist_rows = []
    for vi, v in enumerate(vset.v):
        fv = result.final.values[vi].ravel()
        dist_rows.extend((float(xx), float(v), float(val)) for xx, val in zip(x, fv))
    _write(f"{prefix}_distribution.csv",
           harness.rows_to_csv(dist_rows, ("x", "v", "f")))

    U = result.macro.values
    if cfg.model.n_invariants == 3:
        rho = U[0].ravel()
        u = (U[1] / U[0]).ravel()
        T = (2.0 * U[2] / U[0] - (U[1] / U[0]) ** 2).ravel()
        macro_rows = list(zip(map(float, x), map(float, rho), map(float, u), map(float, T)))
        macro_header = ("x", "rho", "u", "T")
    else:
        macro_rows = list(zip(map(float, x), map(float, U[0].ravel())))
        macro_header = ("x", "U")
    _write(f"{prefix}_macro.csv", harness.rows_to_csv(macro_rows, macro_header))

    diag_header = ("step", "t") + cfg.model.invariant_names + ("equilibrium_distance",)
    diag_rows = []
    for i, t in enumerate(result.times):
        diag_rows.append((i, float(t)) + tuple(map(float, result.invariants[i]))
                         + (float(result.equilibrium_distance[i]),))
    _write(f"{prefix}_diagnostics.csv", harness.rows_to_csv(diag_rows, diag_header))


# ---------------------------------------------------------------------------
# convergence
# ---------------------------------------------------------------------------

_DESK_CFLS = {"5.1": (0.1, 0.2, 0.4, 0.8),
              "5.2": (0.1, 0.2, 0.4, 0.8),
              "5.3": (0.5, 1.0, 2.0, 4.0)}
_PAPER_CFLS = {"5.1": (0.1, 0.2, 0.4, 0.8),
               "5.2": (0.1, 0.2, 0.4, 0.8),
               "5.3": (1.0, 2.0, 4.0, 8.0, 16.0)}


def cmd_convergence(args) -> int:
    example = harness.normalize_example(args.example)
    if args.cfls is not None:
        cfls = parse_float_list(args.cfls)
    else:
        cfls = _PAPER_CFLS[example] if args.paper_scale else _DESK_CFLS[example]
    nx = args.nx if args.nx is not None else (640 if args.paper_scale else 160)
    study = harness.ConvergenceStudy(
        example=example,
        tableaus=tuple(tok.strip() for tok in args.tableaus.split(",") if tok.strip()),
        eps_values=parse_float_list(args.eps),
        cfl_values=cfls,
        ref_cfl=args.ref_cfl,
        n_elements=nx,
        degree=args.p,
        n_v=args.nv,
        v_max=args.vmax,
        t_final=args.T,
        error_on=args.error_on,
        jobs=args.jobs,
    )
    try:
        study = study.resolved()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    result = harness.run_convergence(study)
    print(f"example {study.example}: {len(result.rows)} runs "
          f"(reference CFL {study.ref_cfl!r}, N_x = {study.n_elements})")
    for (tab, eps), slope in result.slopes.items():
        print(f"  {tab:12s} eps = {eps:<8g} slope = {slope:.4f}")
    if args.out:
        _write(args.out, harness.study_csv(result))
        print(f"wrote {len(result.rows)} rows to {args.out}")
    if args.slopes_out:
        _write(args.slopes_out, harness.slopes_csv(result))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sldirk",
        description="Semi-Lagrangian DIRK toolkit: order conditions, Von Neumann "
                    "stability scans, kinetic relaxation runs and convergence sweeps.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("order-check", help="per-stage order-condition coefficients "
                                           "and kinetic/fluid order verdicts")
    p.add_argument("tableau", help="catalog tableau name or tableau file path")
    p.add_argument("--tol", type=float, default=order_analysis.DEFAULT_ORDER_TOL,
                   help="residual tolerance for the order verdict (default %(default)g)")
    p.add_argument("--csv", help="write the per-stage coefficient table to this CSV file")
    p.set_defaults(func=cmd_order_check)

    p = sub.add_parser("stability-scan", help="spectral radii of the one-step "
                                              "amplification matrix over a parameter grid")
    p.add_argument("--tableau", required=True, help="catalog tableau name or file path")
    p.add_argument("--b", default="0:1:101", help="coupling grid: value, lo:hi:n or list "
                                                  "(default %(default)s)")
    p.add_argument("--kdt", default="0:6.283185307179586:401",
                   help="k*dt grid (default [0, 2 pi] with 401 points)")
    p.add_argument("--xi", default="0:10:101,inf",
                   help="dt/eps grid; 'inf' selects the stiff-limit projection "
                        "(default %(default)s)")
    p.add_argument("--out", help="CSV output path (columns b, k_dt, xi, "
                                 "lambda1_abs, lambda2_abs, rho)")
    p.set_defaults(func=cmd_stability_scan)

    p = sub.add_parser("simulate", help="advance one configuration and write snapshots")
    p.add_argument("--config", help="plain-text key = value config file; "
                                    "command-line flags override file entries")
    p.add_argument("--model", choices=("linear", "nonlinear", "bgk"),
                   help="kinetic model (default linear)")
    p.add_argument("--tableau", help="time integrator (default DIRK3-B10)")
    p.add_argument("--b", help="two-velocity coupling constant")
    p.add_argument("--eps", help="relaxation time (default 1e-2)")
    p.add_argument("--cfl", help="CFL number dt * a / dx (default 0.5)")
    p.add_argument("--nx", help="number of mesh elements (default 160)")
    p.add_argument("--p", help="polynomial degree per element, 0-4 (default 2)")
    p.add_argument("--nv", help="velocity grid points for the gas model (default 100)")
    p.add_argument("--vmax", help="velocity domain half-width for the gas model (default 15)")
    p.add_argument("--T", help="final time (default: per-model benchmark value)")
    p.add_argument("--out", help="output prefix for the snapshot CSVs")
    p.add_argument("--legacy-update", action="store_true",
                   help="use the plain prediction-correction weight dt instead of "
                        "a_kk * dt in the implicit stage solve (comparison only)")
    p.add_argument("--diag-every", type=int, default=1,
                   help="record diagnostics every N steps (0: endpoints only)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("convergence", help="temporal convergence sweep against a "
                                           "small-CFL reference")
    p.add_argument("--example", required=True,
                   help="benchmark preset: 5.1/linear, 5.2/nonlinear, 5.3/bgk")
    p.add_argument("--tableaus", default="DIRK3-B2,DIRK3-B10",
                   help="comma-separated tableau names (default %(default)s)")
    p.add_argument("--eps", default="1e-2,1e-6",
                   help="comma-separated relaxation times (default %(default)s)")
    p.add_argument("--cfls", help="comma-separated CFL values "
                                  "(default: desk-scale preset per example)")
    p.add_argument("--ref-cfl", type=float, help="reference CFL (default 0.001, "
                                                 "0.01 for the gas model)")
    p.add_argument("--nx", type=int, help="mesh elements (default 160; 640 with "
                                          "--paper-scale)")
    p.add_argument("--p", type=int, default=2, help="polynomial degree (default %(default)s)")
    p.add_argument("--nv", type=int, default=100, help="velocity points (default %(default)s)")
    p.add_argument("--vmax", type=float, default=15.0,
                   help="velocity half-width (default %(default)s)")
    p.add_argument("--T", type=float, help="final time override")
    p.add_argument("--error-on", choices=("U", "f"), default="U",
                   help="measure the L1 error on the moments or on the full "
                        "distribution (default %(default)s)")
    p.add_argument("--jobs", type=int, default=1,
                   help="worker processes for independent sweep jobs (default %(default)s)")
    p.add_argument("--paper-scale", action="store_true",
                   help="full-size settings: 640 elements and wider CFL range "
                        "(slow; desk-scale defaults reproduce the slopes)")
    p.add_argument("--out", help="CSV output path for the error rows")
    p.add_argument("--slopes-out", help="CSV output path for the fitted slopes")
    p.set_defaults(func=cmd_convergence)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DivergenceError, UnphysicalStateError) as exc:
        print(f"run diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
