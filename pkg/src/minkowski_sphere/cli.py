"""Command-line entry point: ``minkowski-sphere <command> ...``.

Commands write CSV tables to ``--out`` and a JSON summary to stdout. Errors
go to stderr as JSON; exit codes are 0 ok, 2 configuration error, 3 numeric
failure, 4 curvature mismatch.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from collections import Counter

import numpy as np

from . import __version__
from .curvature import build_profile, curvatures_at
from .errors import ConfigError, CurvatureMismatch, MinkowskiError, NumericFailure
from .estimator import DEFAULT_SCHEDULE, CurveOracle, SampledOracle, recover_curvatures
from .intrinsic import dijkstra_distance, intrinsic_distance, sample_arc, verify_natural_isometry
from .invariants import check_invariants
from .io import dump_json, format_csv, read_csv, write_text
from .norm import Norm2D, norm_constants, norm_from_spec
from .reconstruct import (GridFunction, integrate_sphere, profile_coefficients,
                          random_well_conditioned, round_trip_error, tingley_check)
from .sphere_param import build_natural_curve

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_MISMATCH = 0, 2, 3, 4

DEFAULT_TOLS = {
    "rho": 1e-2,         # estimator rho error / curvature match
    "tau": 5e-2,         # estimator tau error relative to max|tau| / curvature match
    "tau_abs": 1e-3,     # absolute tau error when the reference tau vanishes (max|tau| < 1e-6)
    "int_tau": 1e-4,     # |integral of tau-hat| / L
    "psi": 1e-3,         # max|psi'| on the Euclidean oracle
    "round_trip": 1e-5,
    "closure": 1e-6,
    "halving": 12.0,
    "map": 1e-3,
    "sphere": 1e-4,
    "intrinsic": 1e-4,
    "dijkstra": 1e-9,
    "hilbert": 1e-8,
}


# ---------------------------------------------------------------- parsing helpers

def _float_list(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _matrix(text: str) -> np.ndarray:
    try:
        A = np.asarray(json.loads(text), dtype=float)
    except (json.JSONDecodeError, ValueError, TypeError):
        raise argparse.ArgumentTypeError(f"expected a JSON 2x2 matrix, got {text!r}")
    if A.shape != (2, 2):
        raise argparse.ArgumentTypeError("map must be 2x2")
    return A


def _tolerances(items) -> dict:
    tols = dict(DEFAULT_TOLS)
    for item in items or []:
        for part in item.split(","):
            key, sep, val = part.partition("=")
            if not sep or key.strip() not in tols:
                raise ConfigError(f"--tol: unknown or malformed entry {part!r} "
                                  f"(keys: {', '.join(sorted(tols))})")
            try:
                tols[key.strip()] = float(val)
            except ValueError:
                raise ConfigError(f"--tol: {key} needs a number, got {val!r}")
    return tols


def _positive_int(name, value, minimum=1) -> int:
    if value < minimum:
        raise ConfigError(f"--{name} must be >= {minimum}, got {value}")
    return value


def _svg_setup():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    plt.rcParams["svg.hashsalt"] = "minkowski-sphere"
    return plt


def _save_svg(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})


# ---------------------------------------------------------------- commands

def cmd_curvature(args, tols) -> int:
    _positive_int("grid", args.grid, 256)
    summaries = []
    for spec in args.norm:
        t0 = time.perf_counter()
        norm = norm_from_spec(spec)
        curve = build_natural_curve(norm)
        prof, sup = build_profile(norm, args.grid, curve=curve)
        elapsed = time.perf_counter() - t0
        const = sup.constants
        summary = {
            "norm": spec,
            "grid": args.grid,
            "L": curve.L,
            "c": const.c,
            "C": const.C,
            "rho_min": float(prof.rho.min()),
            "rho_max": float(prof.rho.max()),
            "tau_max_abs": float(np.abs(prof.tau).max()),
            "excluded_bands": prof.excluded,
            "violations": prof.violations + sup.violations,
            "hilbert_deviation": {
                "rho": float(np.abs(prof.rho - 1).max()),
                "tau": float(np.abs(prof.tau).max()),
                "L": abs(curve.L - np.pi),
                "ok": bool(max(np.abs(prof.rho - 1).max(), np.abs(prof.tau).max(),
                               abs(curve.L - np.pi)) <= tols["hilbert"]),
            },
        }
        if args.invariants:
            checks = check_invariants(norm, args.grid, args.seed)
            summary["invariants"] = [c.to_dict() for c in checks]
            summary["invariant_violations"] = sum(not c.ok for c in checks)
        if args.timing:
            summary["seconds"] = elapsed
        summaries.append(summary)
        if args.out and len(args.norm) == 1:
            meta = {"norm": norm.spec, "c": const.c, "C": const.C, "L": curve.L,
                    "grid": args.grid, "excluded_bands": prof.excluded}
            rows = zip(prof.s_grid, prof.rho, prof.tau, sup.Rho, sup.Tau, sup.psi, sup.phi)
            write_text(format_csv(["s", "rho", "tau", "Rho", "Tau", "psi", "phi"], rows, meta),
                       args.out)
        if args.svg and len(args.norm) == 1:
            plt = _svg_setup()
            fig, ax = plt.subplots(figsize=(7, 3.5))
            ax.plot(prof.s_grid, prof.rho, ".", ms=2, label="rho")
            ax.plot(prof.s_grid, prof.tau, ".", ms=2, label="tau")
            ax.set_xlabel("s")
            ax.legend()
            _save_svg(fig, args.svg)
            plt.close(fig)
    if args.out and len(args.norm) > 1:
        raise ConfigError("--out needs a single --norm")
    write_text(dump_json(summaries[0] if len(summaries) == 1 else summaries), None)
    if args.invariants and any(s["invariant_violations"] for s in summaries):
        return EXIT_NUMERIC
    return EXIT_OK


def _mixed_error(est, ref, rel_above=0.1):
    """Relative error where |ref| > rel_above, absolute elsewhere."""
    err = np.abs(est - ref)
    return np.where(np.abs(ref) > rel_above, err / np.abs(ref), err)


def cmd_estimate(args, tols) -> int:
    _positive_int("grid", args.grid, 8)
    t0 = time.perf_counter()
    norm = norm_from_spec(args.norm)
    curve = None
    if args.samples:
        oracle = SampledOracle.from_csv(args.samples, norm, args.half_length)
    else:
        curve = build_natural_curve(norm)
        oracle = CurveOracle(curve)
    res = recover_curvatures(oracle, args.grid, args.eps, table_size=args.table)
    elapsed = time.perf_counter() - t0
    L = res.L
    h = L / res.s_grid.size
    rp = np.array([k.value == "rho_positive" for k in res.classes])
    unc = 1 + (res.psi_prime_hat[rp] - 1) / 3
    summary = {
        "norm": args.norm,
        "oracle": "samples" if args.samples else "curve",
        "L": L,
        "grid": int(res.s_grid.size),
        "eps": list(args.eps),
        "classes": dict(sorted(Counter(k.value for k in res.classes).items())),
        "int_rho_hat": float(res.rho_hat.sum() * h),
        "int_tau_hat_over_L": float(res.tau_hat.sum() * h / L),
        "psi_closure": res.psi_closure,
        "psi_prime_max_abs": float(np.abs(res.psi_prime_hat).max()),
        "psi_prime_uncorrected_max_abs": float(np.abs(unc).max()) if unc.size else None,
    }
    checks = {
        "int_rho_positive": summary["int_rho_hat"] > 0,
        "int_tau_small": abs(summary["int_tau_hat_over_L"]) <= tols["int_tau"],
    }
    ref_curve = curve or build_natural_curve(norm)
    if abs(ref_curve.L - L) <= 1e-6 * L:
        rho_ref, tau_ref = curvatures_at(ref_curve, res.s_grid)
        rho_err = _mixed_error(res.rho_hat, rho_ref)
        tau_scale = float(np.abs(tau_ref).max())
        tau_err = float(np.abs(res.tau_hat - tau_ref).max())
        summary["comparison"] = {
            "max_rho_error": float(rho_err.max()),
            "max_tau_error": tau_err,
            "max_abs_tau_ref": tau_scale,
            "tau_error_ratio": tau_err / tau_scale if tau_scale > 1e-6 else None,
        }
        checks["rho_error"] = float(rho_err.max()) <= tols["rho"]
        if tau_scale > 1e-6:
            checks["tau_error"] = tau_err <= tols["tau"] * tau_scale
        else:
            checks["tau_error"] = tau_err <= tols["tau_abs"]
    else:
        rho_ref = tau_ref = None
    summary["checks"] = checks
    if args.timing:
        summary["seconds"] = elapsed
    if args.out:
        cols = ["s", "rho_hat", "class", "psi_prime_hat", "tau_hat"]
        rows = [[s, r, k.value, pp, t] for s, r, k, pp, t in
                zip(res.s_grid, res.rho_hat, res.classes, res.psi_prime_hat, res.tau_hat)]
        if rho_ref is not None:
            cols += ["rho_ref", "tau_ref"]
            rows = [row + [a, b] for row, a, b in zip(rows, rho_ref, tau_ref)]
        meta = {"norm": args.norm, "L": L, "eps": list(args.eps)}
        write_text(format_csv(cols, rows, meta), args.out)
    if args.svg:
        plt = _svg_setup()
        fig, ax = plt.subplots(figsize=(7, 3.5))
        ax.plot(res.s_grid, res.rho_hat, label="rho_hat")
        ax.plot(res.s_grid, res.tau_hat, label="tau_hat")
        if rho_ref is not None:
            ax.plot(res.s_grid, rho_ref, "k:", lw=0.8, label="rho (Cramer)")
            ax.plot(res.s_grid, tau_ref, "k--", lw=0.8, label="tau (Cramer)")
        ax.set_xlabel("s")
        ax.legend()
        _save_svg(fig, args.svg)
        plt.close(fig)
    write_text(dump_json(summary), None)
    return EXIT_OK


def _load_profile(path):
    meta, cols, arr = read_csv(path)
    for c in ("s", "rho", "tau"):
        if c not in cols:
            raise ConfigError(f"{path}: missing column {c!r}")
    if "L" not in meta:
        raise ConfigError(f"{path}: metadata line '# L=...' is required")
    L = float(meta["L"])
    s = arr[:, cols.index("s")]
    first = s < L
    rho = GridFunction.build(s[first], arr[first, cols.index("rho")], L)
    tau = GridFunction.build(s[first], arr[first, cols.index("tau")], L)
    return meta, rho, tau, L


def cmd_reconstruct(args, tols) -> int:
    t0 = time.perf_counter()
    norm = curve = None
    if args.profile:
        meta, rho, tau, L = _load_profile(args.profile)
        spec = args.norm or meta.get("norm")
        if spec is not None:
            norm = norm_from_spec(spec if isinstance(spec, (str, dict)) else str(spec))
            curve = build_natural_curve(norm)
    elif args.norm:
        norm = norm_from_spec(args.norm)
        curve = build_natural_curve(norm)
        prof, _ = build_profile(norm, args.grid, curve=curve)
        rho, tau = profile_coefficients(prof)
        L = curve.L
    else:
        raise ConfigError("reconstruct needs --profile or --norm")
    if curve is not None:
        r0, r0p = curve.frame(0.0)
    else:
        r0, r0p = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    if args.tau_shift:
        base_tau = tau
        tau = lambda s: base_tau(s) + args.tau_shift  # noqa: E731
    s_max = 2 * L
    step = args.step * L
    rec = integrate_sphere(rho, tau, r0, r0p, s_max, step, L=L, norm=norm)
    summary = {
        "L": L,
        "step": rec.step,
        "steps": int(rec.s_grid.size - 1),
        "antipodal_residual": rec.antipodal_residual,
        "periodic_residual": rec.periodic_residual,
    }
    checks = {"closure": max(rec.antipodal_residual, rec.periodic_residual) <= tols["closure"]}
    if curve is not None:
        err = round_trip_error(curve, rec)
        summary["round_trip_error"] = err
        checks["round_trip"] = err <= tols["round_trip"]
        if args.halving:
            rec2 = integrate_sphere(rho, tau, r0, r0p, s_max, rec.step / 2, L=L, norm=norm)
            err2 = round_trip_error(curve, rec2)
            summary["round_trip_error_half_step"] = err2
            summary["halving_ratio"] = err / err2 if err2 > 0 else float("inf")
            checks["halving"] = summary["halving_ratio"] >= tols["halving"]
    summary["checks"] = checks
    if args.timing:
        summary["seconds"] = time.perf_counter() - t0
    if args.out:
        rows = np.column_stack([rec.s_grid, rec.r, rec.r_prime])
        write_text(format_csv(["s", "r1", "r2", "r1_prime", "r2_prime"], rows,
                              {"L": L, "step": rec.step}), args.out)
    if args.svg:
        plt = _svg_setup()
        fig, ax = plt.subplots(figsize=(4.5, 4.5))
        if curve is not None:
            true = curve.r(rec.s_grid)
            ax.plot(true[:, 0], true[:, 1], "k-", lw=2.5, alpha=0.3, label="true sphere")
        ax.plot(rec.r[:, 0], rec.r[:, 1], "-", lw=0.8, label="reconstructed")
        ax.set_aspect("equal")
        ax.legend(loc="upper right", fontsize="small")
        _save_svg(fig, args.svg)
        plt.close(fig)
    write_text(dump_json(summary), None)
    return EXIT_OK


def cmd_tingley(args, tols) -> int:
    X = norm_from_spec(args.norm_x)
    ref = None
    if args.norm_y and args.map is not None:
        raise ConfigError("give either --norm-y or --map, not both")
    if args.norm_y:
        Y = norm_from_spec(args.norm_y)
        e1 = np.asarray(args.e1 if args.e1 else Y.basis.e1, dtype=float)
        e2 = np.asarray(args.e2 if args.e2 else Y.basis.e2, dtype=float)
        e1, e2 = e1 / Y(e1), e2 / Y(e2)
    else:
        A = args.map if args.map is not None else random_well_conditioned(
            np.random.default_rng(args.seed))
        Y = X.linear_image(A)
        e1, e2 = A @ X.basis.e1, A @ X.basis.e2
        ref = A
    report = tingley_check(X, Y, e1, e2, grid_size=args.grid, rho_tol=tols["rho"],
                           tau_tol=tols["tau"], reference_map=ref)
    out = report.to_dict()
    checks = {"sphere_residual": report.max_sphere_residual <= tols["sphere"]}
    if ref is not None:
        out["condition_number"] = float(np.linalg.cond(ref))
        checks["map"] = report.reference_deviation <= tols["map"]
    if args.control:
        Yc = norm_from_spec(args.control)
        try:
            tingley_check(X, Yc, Yc.basis.e1, Yc.basis.e2, grid_size=args.grid,
                          rho_tol=tols["rho"], tau_tol=tols["tau"])
            out["negative_control"] = {"norm": args.control, "mismatch_raised": False}
        except CurvatureMismatch as exc:
            out["negative_control"] = {"norm": args.control, "mismatch_raised": True,
                                       "rho_gap": exc.rho_gap, "tau_gap": exc.tau_gap,
                                       "message": str(exc)}
        checks["negative_control"] = out["negative_control"]["mismatch_raised"]
    out["checks"] = checks
    write_text(dump_json(out), args.out)
    return EXIT_OK


def cmd_intrinsic(args, tols) -> int:
    rng = np.random.default_rng(args.seed)
    results, rows = [], []
    for spec in args.norm:
        norm = norm_from_spec(spec)
        curve = build_natural_curve(norm)
        L = curve.L
        worst = 0.0
        for _ in range(_positive_int("pairs", args.pairs)):
            a = rng.uniform(0, 2 * L)
            b = a + rng.uniform(-L, L)
            chk = verify_natural_isometry(curve, a, b, args.levels)
            worst = max(worst, chk.residual)
            rows.append([spec, a, b, chk.distances[-1], chk.residual])
        entry = {"norm": spec, "L": L, "pairs": args.pairs, "levels": args.levels,
                 "max_residual": worst, "ok": worst <= tols["intrinsic"]}
        if args.dijkstra:
            gap = 0.0
            for n in (250, 1000, 1999):
                a = rng.uniform(0, 2 * L)
                arc = sample_arc(curve, a, a + rng.uniform(0.1, 1.0) * L, n)
                gap = max(gap, abs(dijkstra_distance(arc, 0, n) - intrinsic_distance(arc, 0, n).d_eps))
            entry["dijkstra_max_gap"] = gap
            entry["dijkstra_ok"] = gap <= tols["dijkstra"]
        results.append(entry)
    if args.out:
        write_text(format_csv(["norm", "a", "b", "intrinsic", "residual"], rows,
                              {"levels": args.levels, "seed": args.seed}), args.out)
    write_text(dump_json(results[0] if len(results) == 1 else results), None)
    return EXIT_OK


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="minkowski-sphere",
                                description="Curvatures, metric recovery and isometry tests "
                                            "for unit spheres of planar normed spaces.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", help="output CSV (or JSON for tingley) path")
        sp.add_argument("--svg", help="write a static SVG plot to this path")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--tol", action="append", metavar="KEY=VAL",
                        help=f"override a tolerance; keys: {', '.join(sorted(DEFAULT_TOLS))}")
        sp.add_argument("--timing", action="store_true",
                        help="include wall-clock seconds in the summary (breaks byte-reproducibility)")

    sp = sub.add_parser("curvature", help="tabulate rho, tau, Rho, Tau, psi, phi")
    sp.add_argument("--norm", action="append", required=True,
                    help="norm spec: euclidean, lp:P, radial-example, @file.json or inline JSON; repeatable")
    sp.add_argument("--grid", type=int, default=1024)
    sp.add_argument("--invariants", action="store_true", help="also run the invariant audit")
    common(sp)
    sp.set_defaults(func=cmd_curvature)

    sp = sub.add_parser("estimate", help="recover rho, psi', tau from distances only")
    sp.add_argument("--norm", required=True)
    sp.add_argument("--samples", help="CSV of s,r1,r2 samples for a file-backed oracle")
    sp.add_argument("--half-length", type=float, help="L for --samples (located if omitted)")
    sp.add_argument("--grid", type=int, default=256)
    sp.add_argument("--table", type=int, default=1024, help="rho-hat table size for helper integrals")
    sp.add_argument("--eps", type=_float_list, default=list(DEFAULT_SCHEDULE),
                    help="comma-separated decreasing geometric schedule")
    common(sp)
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("reconstruct", help="integrate the curvature ODE back to a sphere")
    sp.add_argument("--profile", help="profile CSV written by 'curvature --out'")
    sp.add_argument("--norm", help="norm spec (builds the profile, and is the round-trip reference)")
    sp.add_argument("--grid", type=int, default=4096)
    sp.add_argument("--step", type=float, default=1e-4, help="RK4 step as a fraction of L")
    sp.add_argument("--halving", action="store_true", help="also integrate at half the step")
    sp.add_argument("--tau-shift", type=float, default=0.0,
                    help="add a constant to tau (breaks closure; negative control)")
    common(sp)
    sp.set_defaults(func=cmd_reconstruct)

    sp = sub.add_parser("tingley", help="extend a sphere isometry to a linear map")
    sp.add_argument("--norm-x", required=True)
    sp.add_argument("--norm-y")
    sp.add_argument("--map", type=_matrix, help='ground-truth map, e.g. "[[1.2,0.3],[0.1,0.9]]"')
    sp.add_argument("--e1", type=_float_list, help="image of e1 in Y (with --norm-y)")
    sp.add_argument("--e2", type=_float_list, help="image of e2 in Y (with --norm-y)")
    sp.add_argument("--control", help="also run X against this norm and expect a mismatch")
    sp.add_argument("--grid", type=int, default=1024)
    common(sp)
    sp.set_defaults(func=cmd_tingley)

    sp = sub.add_parser("intrinsic", help="eps-chain distances versus arc length")
    sp.add_argument("--norm", action="append", required=True)
    sp.add_argument("--pairs", type=int, default=64)
    sp.add_argument("--levels", type=int, default=6)
    sp.add_argument("--dijkstra", action="store_true", help="cross-check against graph search")
    common(sp)
    sp.set_defaults(func=cmd_intrinsic)
    return p


def _error(exc: Exception, code: int) -> int:
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    if isinstance(exc, CurvatureMismatch):
        payload.update(rho_gap=exc.rho_gap, tau_gap=exc.tau_gap)
    sys.stderr.write(dump_json(payload))
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        tols = _tolerances(args.tol)
        return args.func(args, tols)
    except ConfigError as exc:
        return _error(exc, EXIT_CONFIG)
    except CurvatureMismatch as exc:
        return _error(exc, EXIT_MISMATCH)
    except NumericFailure as exc:
        return _error(exc, EXIT_NUMERIC)
    except MinkowskiError as exc:
        return _error(exc, EXIT_NUMERIC)


if __name__ == "__main__":
    sys.exit(main())
