"""Command line front door: reproducible experiments, file outputs.

Commands
--------
classify            endpoint classification sweep and aggregate verdict
geodesics           geodesic fan / single trajectory with hit times
evolve              fibre or plane evolution experiments
verify-deficiency   deficiency eigenfunction family residuals

Configuration may come from flags, from an INI-style file passed with
--config (sections named after the commands, plus an optional
[profile] section), or both; flags win.  Every output embeds the fully
resolved configuration.  Exit codes: 0 success/definite verdict,
2 usage error, 3 numeric failure, 4 inconclusive classification.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .errors import (
    GrushinError,
    InconclusiveClassification,
    NumericError,
    ProtocolError,
    UsageError,
)
from .evolution import (
    BoundaryCondition,
    FibreGrid,
    PlaneWavefunction,
    TRANSFORMED,
    bc_sensitivity,
    evolve_plane,
    gaussian_packet,
    choose_outer_wall,
)
from .geodesics import GeodesicInitialData, geodesic_fan, hit_time_quadrature, integrate_geodesic, write_fan
from .profiles import FibrePotential, GrushinProfile, builtin_profile, load_profile, power_law
from .weyl import (
    Mode,
    aggregate_verdict,
    classify_by_inequality,
    classify_sweep,
    verify_deficiency_family,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_INCONCLUSIVE = 4


def _write_json(path, document):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(document, fh, sort_keys=True, indent=2, default=_jsonable)
        fh.write("\n")
    return path


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "value"):
        return obj.value
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return str(obj)


def _write_csv(path, header_cols, rows, config):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# config: " + json.dumps(config, sort_keys=True, default=_jsonable) + "\n")
        fh.write(",".join(header_cols) + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.16e}" if isinstance(v, float) else str(v) for v in row) + "\n")
    return path


def _load_config_file(path):
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise UsageError(f"config file not found: {path}")
    return parser


def _fill_from_config(args, section):
    """Copy file values into argparse Namespace slots left at None."""
    if args.config is None:
        return
    parser = _load_config_file(args.config)
    if not parser.has_section(section):
        return
    for key, raw in parser.items(section):
        attr = key.replace("-", "_")
        if hasattr(args, attr) and getattr(args, attr) is None:
            setattr(args, attr, raw)


def _resolve_profile(args) -> GrushinProfile:
    given = [
        args.alpha is not None,
        getattr(args, "profile_file", None) is not None,
        getattr(args, "profile", None) is not None,
    ]
    if sum(given) > 1:
        raise UsageError("give exactly one of --alpha, --profile, --profile-file")
    if args.alpha is not None:
        return power_law(float(args.alpha))
    if getattr(args, "profile_file", None):
        return load_profile(args.profile_file)
    if getattr(args, "profile", None):
        return builtin_profile(args.profile)
    if args.config is not None:
        parser = _load_config_file(args.config)
        if parser.has_section("profile"):
            from .profiles import parse_profile_config

            body = "\n".join(f"{k} = {v}" for k, v in parser.items("profile"))
            return parse_profile_config(body)
    raise UsageError("no profile given: use --alpha, --profile, --profile-file or a config file")


def _outdir(args) -> str:
    out = args.output_dir or "."
    os.makedirs(out, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# classify
# ---------------------------------------------------------------------------

def _cmd_classify(args) -> int:
    _fill_from_config(args, "classify")
    profile = _resolve_profile(args)
    mode = Mode(args.mode or "plane")
    jobs = int(args.jobs or 1)

    if mode is Mode.CYLINDER:
        k_max = int(args.k_max or 5)
        xi_values = [float(k) for k in range(-k_max, k_max + 1)]
        grid_info = {"kind": "integer modes", "k_max": k_max}
    else:
        lo = float(args.xi_min if args.xi_min is not None else -5.0)
        hi = float(args.xi_max if args.xi_max is not None else 5.0)
        step = float(args.xi_step if args.xi_step is not None else 0.25)
        n = int(round((hi - lo) / step)) + 1
        xi_values = [lo + i * step for i in range(n)]
        grid_info = {"kind": "uniform", "xi_min": lo, "xi_max": hi, "xi_step": step}

    method = args.method or "auto"
    reports = classify_sweep(profile, xi_values, mode=mode, method=method, jobs=jobs)
    verdict = aggregate_verdict(reports, mode, grid_info=grid_info)

    inequality = {"verdict": "skipped"}
    try:
        ineq, info = classify_by_inequality(profile, np.geomspace(1e-4, 1e2, 400))
        inequality = {"verdict": ineq.value, **info}
    except UsageError as exc:
        inequality = {"verdict": "skipped", "reason": str(exc)}

    config = {
        "command": "classify",
        "mode": mode.value,
        "profile": profile.name,
        "alpha": profile.alpha,
        "method": method,
        "grid": grid_info,
        "jobs": jobs,
    }
    document = {
        "config": config,
        "profile": profile.name,
        "alpha": profile.alpha,
        "mode": mode.value,
        "fibres": [
            {
                "xi": r.xi,
                "endpoint_zero": r.endpoint_zero.value,
                "endpoint_infinity": r.endpoint_infinity.value,
                "deficiency": r.deficiency,
                "method": r.method.value,
            }
            for r in sorted(reports, key=lambda r: r.xi)
        ],
        "verdict": verdict.verdict.value,
        "failing_fibres": verdict.failing_fibres,
        "total_deficiency": verdict.total_deficiency.value,
        "caveat": verdict.caveat,
        "grid": verdict.grid,
        "inequality_check": inequality,
    }
    path = _write_json(os.path.join(_outdir(args), "verdict.json"), document)
    print(f"{profile.name} [{mode.value}]: {verdict.verdict.value}"
          f" (failing: {verdict.failing_fibres}; deficiency: {verdict.total_deficiency.value})")
    print(f"wrote {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# geodesics
# ---------------------------------------------------------------------------

def _cmd_geodesics(args) -> int:
    _fill_from_config(args, "geodesics")
    if args.alpha is None:
        raise UsageError("geodesics requires --alpha")
    alpha = float(args.alpha)
    t_max = float(args.t_max if args.t_max is not None else 10.0)
    tol = float(args.tol if args.tol is not None else 1e-12)
    x0 = float(args.x0 if args.x0 is not None else 1.0)
    y0 = float(args.y0 if args.y0 is not None else 0.0)
    jobs = int(args.jobs or 1)
    out = _outdir(args)

    config = {
        "command": "geodesics",
        "alpha": alpha,
        "t_max": t_max,
        "tol": tol,
        "x0": x0,
        "y0": y0,
        "jobs": jobs,
    }
    if args.theta is not None:
        init = GeodesicInitialData(x0=x0, y0=y0, theta=float(args.theta), alpha=alpha)
        trajs = [integrate_geodesic(init, (-t_max, t_max), tol)]
        config["theta"] = float(args.theta)
    else:
        n_angles = int(args.angles or 16)
        config["angles"] = n_angles
        trajs = geodesic_fan(alpha, n_angles, (-t_max, t_max), x0=x0, y0=y0, tol=tol, jobs=jobs)

    if alpha > 0:
        for traj in trajs:
            try:
                expected = hit_time_quadrature(traj.init)
            except UsageError:
                expected = None
            traj.meta["quadrature_hit_time"] = expected
    mpath = write_fan(trajs, out, config)
    hits = [t.hit_time_plus for t in trajs]
    print(f"alpha={alpha:g}: {len(trajs)} trajectories, "
          f"{sum(h is not None for h in hits)} forward boundary hits")
    print(f"wrote {mpath}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# evolve
# ---------------------------------------------------------------------------

def _parse_float_list(raw, name):
    try:
        return [float(tok) for tok in str(raw).replace(" ", "").split(",") if tok]
    except ValueError as exc:
        raise UsageError(f"malformed {name}: {raw!r}") from exc


def _cmd_evolve(args) -> int:
    _fill_from_config(args, "evolve")
    protocol = args.protocol or "sensitivity"
    if protocol == "sensitivity":
        return _evolve_sensitivity(args)
    if protocol in ("plane", "cylinder"):
        return _evolve_plane(args, protocol)
    raise UsageError(f"unknown evolve protocol {protocol!r}")


def _evolve_sensitivity(args) -> int:
    if args.alpha is None:
        raise UsageError("evolve --protocol sensitivity requires --alpha")
    alpha = float(args.alpha)
    xi = float(args.xi if args.xi is not None else 0.5)
    t_final = float(args.t_final if args.t_final is not None else 1.0)
    dt = float(args.dt if args.dt is not None else 1e-3)
    beta = float(args.beta if args.beta is not None else 1.0)
    refine = int(args.refine or 1)
    eps_grid = _parse_float_list(args.eps_grid or "1e-1,1e-2,1e-3", "--eps-grid")
    out = _outdir(args)

    result = bc_sensitivity(
        alpha, xi, t_final, eps_grid, beta=beta, dt=dt, refine=refine
    )
    config = {
        "command": "evolve",
        "protocol": "sensitivity",
        "alpha": alpha,
        "xi": xi,
        "t_final": t_final,
        "dt": dt,
        "beta": beta,
        "refine": refine,
        "eps_grid": eps_grid,
        **result.config,
    }
    rows = [(eps, D, wall) for (eps, D), wall in zip(result.rows, result.wall_mass)]
    cpath = _write_csv(os.path.join(out, "bc_sensitivity.csv"),
                       ["eps", "D", "wall_mass"], rows, config)
    document = {
        "config": config,
        "rows": [{"eps": e, "D": d} for e, d in result.rows],
        "trend": result.trend,
        "ratio_end_to_start": result.ratio_end_to_start,
        "norm_drift": result.norm_drift,
    }
    jpath = _write_json(os.path.join(out, "bc_sensitivity.json"), document)
    print(f"alpha={alpha:g} xi={xi:g}: D trend {result.trend}, "
          f"D({result.rows[-1][0]:g})/D({result.rows[0][0]:g}) = {result.ratio_end_to_start:.3e}")
    print(f"wrote {cpath}\nwrote {jpath}")
    return EXIT_OK


def _standard_plane_data(grid: FibreGrid, geometry: str, ny: int, sigma_xi: float,
                         y_span: float):
    """Separable standard data in transformed coordinates: the fibre
    Gaussian times a normalised xi envelope."""
    if ny % 2 == 0:
        raise UsageError("--ny must be odd so the xi grid is symmetric")
    y0 = 0.0
    if geometry == "cylinder":
        axis = np.arange(-(ny // 2), ny // 2 + 1, dtype=float)
    else:
        dy = y_span / ny
        axis = np.sort(2.0 * math.pi * np.fft.fftfreq(ny, d=dy))
        y0 = -y_span / 2.0  # centre the back-transformed packet in the window
    g = gaussian_packet(grid)
    env = np.exp(-(axis**2) / (2.0 * sigma_xi**2))
    values = np.outer(g, env).astype(complex)
    psi = PlaneWavefunction(values=values, x=grid.nodes, axis=axis,
                            representation=TRANSFORMED, geometry=geometry, y0=y0)
    nrm = psi.norm()
    return PlaneWavefunction(values=values / nrm, x=grid.nodes, axis=axis,
                             representation=TRANSFORMED, geometry=geometry, y0=y0)


def _evolve_plane(args, geometry) -> int:
    if args.alpha is None:
        raise UsageError(f"evolve --protocol {geometry} requires --alpha")
    alpha = float(args.alpha)
    profile = power_law(alpha)
    t_final = float(args.t_final if args.t_final is not None else 1.0)
    dt = float(args.dt if args.dt is not None else 2e-3)
    eps = float(args.eps if args.eps is not None else 0.01)
    # 45 modes with the default envelope keep the spectrum-edge mass below 1e-8
    ny = int(args.ny or 45)
    sigma_xi = float(args.sigma_xi if args.sigma_xi is not None else 2.0)
    y_span = float(args.y_span if args.y_span is not None else 16.0)
    bc_kind = args.bc or "dirichlet"
    bc = (BoundaryCondition.robin(float(args.beta if args.beta is not None else 1.0))
          if bc_kind == "robin" else BoundaryCondition.dirichlet())
    jobs = int(args.jobs or 1)
    out = _outdir(args)

    xi_edge = float(ny // 2) if geometry == "cylinder" else float(
        np.max(np.abs(2.0 * math.pi * np.fft.fftfreq(ny, d=y_span / ny)))
    )
    # the wall must leave room for the most-spreading fibre (xi = 0); the
    # spacing must resolve the stiffest one (the spectral edge)
    pot_zero = FibrePotential(xi=0.0, profile=profile)
    pot_edge = FibrePotential(xi=xi_edge, profile=profile)
    L = float(args.outer_wall) if args.outer_wall is not None else choose_outer_wall(pot_zero)
    grid = FibreGrid.resolved(eps, L, pot_edge)

    psi0 = _standard_plane_data(grid, geometry, ny, sigma_xi, y_span)
    result = evolve_plane(psi0, profile, t_final, grid, bc, dt=dt, jobs=jobs,
                          record_norms=True)

    config = {
        "command": "evolve",
        "protocol": geometry,
        "alpha": alpha,
        "t_final": t_final,
        "dt": dt,
        "eps": eps,
        "outer_wall": L,
        "n_x": grid.n,
        "ny": ny,
        "sigma_xi": sigma_xi,
        "y_span": y_span,
        "bc": bc.label(),
        "jobs": jobs,
        "spectrum_edge_mass": result.spectrum_edge_mass,
    }

    rows = list(zip([float(v) for v in psi0.axis], [float(v) for v in result.fibre_norms]))
    npath = _write_csv(os.path.join(out, "fibre_norms.csv"), ["xi", "norm"], rows, config)
    trace_rows = [(k * dt, float(v)) for k, v in enumerate(result.norm_trace)]
    _write_csv(os.path.join(out, "norm_trace.csv"), ["t", "norm"], trace_rows, config)

    from .evolution import to_original

    original = to_original(result.final, profile)
    density = np.abs(original.values) ** 2
    if args.raster:
        rpath = os.path.join(out, "density.f32")
        density.astype(np.float32).tofile(rpath)
        _write_json(os.path.join(out, "density.json"), {
            "config": config,
            "file": "density.f32",
            "dtype": "float32",
            "order": "C",
            "shape": [int(density.shape[0]), int(density.shape[1])],
            "x0": float(original.x[0]),
            "dx": float(original.x[1] - original.x[0]),
            "y0": float(original.axis[0]),
            "dy": float(original.axis[1] - original.axis[0]),
        })
        spath = rpath
    else:
        triplets = []
        for i, xv in enumerate(original.x):
            for j, yv in enumerate(original.axis):
                triplets.append((float(xv), float(yv), float(density[i, j])))
        spath = _write_csv(os.path.join(out, "density.csv"), ["x", "y", "density"],
                           triplets, config)

    document = {
        "config": config,
        "norm_before": result.norm_before,
        "norm_after": result.norm_after,
        "norm_drift": result.norm_drift,
        "boundary_mass_below_0.05": float(
            grid.spacing * result.final._dxi()
            * np.sum(np.abs(result.final.values[grid.nodes < 0.05, :]) ** 2)
        ),
    }
    jpath = _write_json(os.path.join(out, "evolution.json"), document)
    print(f"alpha={alpha:g} [{geometry}]: norm drift {result.norm_drift:.3e}")
    print(f"wrote {npath}\nwrote {spath}\nwrote {jpath}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify-deficiency
# ---------------------------------------------------------------------------

def _cmd_verify_deficiency(args) -> int:
    _fill_from_config(args, "verify-deficiency")
    if args.alpha is None:
        raise UsageError("verify-deficiency requires --alpha")
    alpha = float(args.alpha)
    interval = _parse_float_list(args.interval or "0,1", "--interval")
    if len(interval) != 2:
        raise UsageError("--interval needs two comma-separated numbers")
    other = None
    if args.other_interval is not None:
        other = _parse_float_list(args.other_interval, "--other-interval")
        if len(other) != 2:
            raise UsageError("--other-interval needs two comma-separated numbers")
    samples = int(args.samples or 16)
    out = _outdir(args)

    report = verify_deficiency_family(alpha, tuple(interval), samples,
                                      tuple(other) if other else None)
    config = {
        "command": "verify-deficiency",
        "alpha": alpha,
        "interval": interval,
        "other_interval": other,
        "samples": samples,
    }
    document = {
        "config": config,
        "max_residual": report.max_residual,
        "max_norm_error": report.max_norm_error,
        "max_cross_inner_product": report.max_cross_inner,
        "family_norm_sq": report.family_norm_sq,
        "contradiction": report.contradiction,
        "grid": report.grid,
        "xi_values": [float(v) for v in report.xi_values],
    }
    path = _write_json(os.path.join(out, "deficiency_family.json"), document)
    status = "CONTRADICTION" if report.contradiction else "ok"
    print(f"alpha={alpha:g} J={interval}: max residual {report.max_residual:.3e} [{status}]")
    print(f"wrote {path}")
    return EXIT_NUMERIC if report.contradiction else EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="grushinlab",
        description="confinement experiments on Grushin-type geometries",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="INI config file; flags override its values")
        p.add_argument("--output-dir", help="directory for output files (default .)")
        p.add_argument("--jobs", help="parallel workers for independent sweeps")
        p.add_argument("--alpha", help="power-law exponent")

    p = sub.add_parser("classify", help="fibre classification and aggregate verdict")
    common(p)
    p.add_argument("--profile", help="builtin custom profile name")
    p.add_argument("--profile-file", help="profile config file")
    p.add_argument("--mode", choices=["plane", "cylinder"])
    p.add_argument("--method", choices=["auto", "analytic", "numeric"])
    p.add_argument("--xi-min")
    p.add_argument("--xi-max")
    p.add_argument("--xi-step")
    p.add_argument("--k-max")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("geodesics", help="geodesic fan with boundary hit times")
    common(p)
    p.add_argument("--angles", help="number of fan angles")
    p.add_argument("--theta", help="single launch angle instead of a fan")
    p.add_argument("--t-max")
    p.add_argument("--tol")
    p.add_argument("--x0")
    p.add_argument("--y0")
    p.set_defaults(func=_cmd_geodesics)

    p = sub.add_parser("evolve", help="fibre/plane Schroedinger evolution")
    common(p)
    p.add_argument("--protocol", choices=["sensitivity", "plane", "cylinder"])
    p.add_argument("--xi")
    p.add_argument("--t-final")
    p.add_argument("--dt")
    p.add_argument("--beta", default=None, help="Robin parameter (default 1)")
    p.add_argument("--eps-grid", help="comma list of decreasing cutoffs")
    p.add_argument("--refine", help="uniform spacing refinement factor")
    p.add_argument("--eps")
    p.add_argument("--outer-wall")
    p.add_argument("--ny")
    p.add_argument("--sigma-xi")
    p.add_argument("--y-span")
    p.add_argument("--bc", choices=["dirichlet", "robin"])
    p.add_argument("--raster", action="store_true", help="write float32 raster snapshot")
    p.set_defaults(func=_cmd_evolve)

    p = sub.add_parser("verify-deficiency", help="deficiency eigenfunction family")
    common(p)
    p.add_argument("--interval", help="xi interval a,b (default 0,1)")
    p.add_argument("--other-interval", help="disjoint interval for orthogonality")
    p.add_argument("--samples")
    p.set_defaults(func=_cmd_verify_deficiency)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InconclusiveClassification as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except (NumericError, ProtocolError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except GrushinError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
