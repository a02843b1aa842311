"""Command-line interface: ``quadocc <command> [options]``.

Every command writes its files to ``--out`` (default ``$QUADOCC_OUT/<command>``
or ``./quadocc_out/<command>``): a ``manifest.json`` with all effective
settings, one or more CSV tables and a ``summary.json``.  The summary is also
printed on standard output.  Exit status is 0 on success, 1 on a runtime or
check failure and 2 on a usage error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import kl_spectral as kls
from . import moment_oracle as mo
from . import pde_solver as pde
from . import special_functions as sf
from . import stochastic_sim as ss
from .errors import DomainError, IllConditionedError, PreconditionError
from .params import Params
from .regions import Region

ENV_OUT = "QUADOCC_OUT"


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, Region):
        return obj.value
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _dump(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def _write_json(path: Path, obj):
    path.write_text(_dump(obj))


def _write_csv(path: Path, header, rows):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def _out_dir(args) -> Path:
    if args.out:
        d = Path(args.out)
    else:
        d = Path(os.environ.get(ENV_OUT, "quadocc_out")) / args.command
    d.mkdir(parents=True, exist_ok=True)
    return d


def _manifest(out: Path, args, extra=None):
    settings = {k: v for k, v in vars(args).items() if k not in ("func", "out")}
    doc = {"command": args.command, "version": __version__, "settings": settings}
    if extra:
        doc.update(extra)
    _write_json(out / "manifest.json", doc)


def _finish(out: Path, summary) -> None:
    _write_json(out / "summary.json", summary)
    sys.stdout.write(_dump(summary))


def _floats(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _region(text):
    try:
        return Region.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _moment_summary(emp):
    out = {}
    for k, name in ((1, "mean"), (2, "m2"), (3, "m3")):
        v, se = emp.moment(k)
        out[name] = v
        out[name + "_se" if k > 1 else "se"] = se
    return out


def cmd_simulate(args) -> int:
    cfg = ss.SimConfig(args.paths, args.steps, args.seed, args.region, counting=args.counting)
    out = _out_dir(args)
    _manifest(out, args, {"seed": args.seed})
    samples = ss.simulate(cfg, workers=args.workers)
    _write_csv(out / "samples.csv", ["t_occupation"], ([t] for t in samples.samples))
    emp = ss.EmpiricalDistribution.from_samples(samples)
    summary = {"config": cfg.to_dict(), **_moment_summary(emp)}
    if cfg.region is Region.HALF_PLANE:
        d, p = emp.ks(mo.arcsine_cdf)
        summary["ks_arcsine"] = {"statistic": d, "pvalue": p,
                                 "p_quarter": float(emp.cdf(0.25))}
    if args.alpha is not None:
        est, se = ss.feynman_kac_estimate(samples, args.alpha, args.lam)
        summary["feynman_kac"] = {"alpha": args.alpha, "lambda": args.lam, "estimate": est,
                                  "se": se}
    if cfg.region is Region.OPPOSITE_QUADRANTS and cfg.start == (0.0, 0.0):
        summary["symmetry_ks"] = ss.symmetry_check(samples)
    _finish(out, summary)
    return 0


def cmd_pde(args) -> int:
    params = Params(args.alpha, args.lam)
    grid = pde.GridSpec(args.L, args.n)
    out = _out_dir(args)
    _manifest(out, args)
    field = pde.solve(params, grid, args.tol, boundary_kind=args.boundary)
    x = grid.coords
    xx, yy = np.meshgrid(x, x, indexing="ij")
    _write_csv(out / "field.csv", ["x", "y", "u"],
               zip(xx.ravel(), yy.ravel(), field.values.ravel()))
    prof = pde.axis_profile(field)
    _write_csv(out / "axis_profile.csv", ["y", "u", "derivative_jump"],
               zip(prof.y, prof.values, np.append(prof.derivative_jump, np.nan)))
    summary = {"u_origin": pde.u_origin(field), "grid": {"L": grid.L, "n": grid.n, "h": grid.h},
               "params": {"alpha": params.alpha, "lambda": params.lam},
               "boundary": field.boundary_kind.value, "residual": field.residual,
               "iterations": field.iterations, "symmetry_residual": pde.symmetry_residual(field)}
    if args.richardson_levels > 1:
        rich = pde.richardson_origin(params, args.L, args.n, args.richardson_levels, args.tol,
                                     boundary_kind=args.boundary)
        summary["richardson"] = {"value": rich.value, "error_estimate": rich.error_estimate,
                                 "order": rich.order, "values": rich.values, "n": rich.n_values}
    _finish(out, summary)
    return 0


def identity_rows(y_grid, z_grid, a_grid, tol):
    """Rows (name, args, lhs, rhs, residual, converged, status) of the identity suite."""
    rows = []

    def add(name, arg, rep, informational=False):
        if informational:
            status = "INFO"
        else:
            ok = rep.converged and abs(rep.residual) <= tol
            status = "PASS" if ok else "FAIL"
        rows.append((name, arg, rep.lhs, rep.rhs, rep.residual, rep.converged, status))

    for y in y_grid:
        add("kl_cosh", f"y={y:g}", sf.kl_identity_cosh(y, tol=tol, strict=False))
        for z in z_grid:
            add("kl_sine", f"z={z:g};y={y:g}", sf.kl_identity_sine(z, y, tol=tol, strict=False))
        for a in a_grid:
            add("kl_nu_sine", f"a={a:g};y={y:g}", sf.kl_identity_nu_sine(a, y, tol=tol, strict=False))
    for y in y_grid:
        add("kl_tanh_probe", f"y={y:g}", sf.kl_tanh_probe(y, strict=False), informational=True)
    return rows


def cmd_verify_identities(args) -> int:
    out = _out_dir(args)
    _manifest(out, args)
    rows = identity_rows(args.y_grid, args.z_grid, args.a_grid, args.tolerance)
    header = ["identity", "arguments", "lhs", "rhs", "residual", "converged", "status"]
    _write_csv(out / "identities.csv", header, rows)
    sys.stdout.write("\t".join(header) + "\n")
    for r in rows:
        sys.stdout.write("\t".join([r[0], r[1], f"{r[2]:.15g}", f"{r[3]:.15g}", f"{r[4]:.3e}",
                                    str(r[5]), r[6]]) + "\n")
    failed = [r for r in rows if r[6] == "FAIL"]
    summary = {"tolerance": args.tolerance, "checked": sum(r[6] != "INFO" for r in rows),
               "failed": len(failed), "informational": sum(r[6] == "INFO" for r in rows)}
    _write_json(out / "summary.json", summary)
    if failed:
        sys.stderr.write(f"{len(failed)} identities failed at tolerance {args.tolerance:g}\n")
        return 1
    return 0


def _cross_routes(params, sol, args):
    mc_cfg = ss.SimConfig(args.mc_paths, args.mc_steps, args.seed, Region.OPPOSITE_QUADRANTS)
    est, se = ss.feynman_kac_estimate(ss.simulate(mc_cfg), params.alpha, params.lam)
    rich = pde.richardson_origin(params, 8.0, args.pde_n, 2, 1e-11)
    try:
        spec = kls.u_origin_estimate(sol, [0.4, 0.2, 0.1, 0.05])
        u_spec, spec_err = spec.value, spec.error_estimate
    except Exception as exc:  # reported, not fatal: the fit carries no guarantee
        u_spec, spec_err = float("nan"), str(exc)
    return {"u_spectral": u_spec, "u_spectral_error": spec_err,
            "u_pde": rich.value, "u_pde_error": rich.error_estimate,
            "u_mc": est, "u_mc_se": se}


def cmd_pasting_fit(args) -> int:
    params = Params(args.alpha, args.lam)
    r_grid = kls.default_r_grid(args.r_points, args.r_min, args.r_max)
    out = _out_dir(args)
    _manifest(out, args)
    measure, report = kls.fit_measure(params, args.basis_size, r_grid, args.reg, form=args.form)
    _write_json(out / "measure.json", measure.to_document())
    _write_csv(out / "residuals.csv", ["r", "residual"], zip(report.r_grid, report.residuals))
    summary = {"params": {"alpha": params.alpha, "lambda": params.lam},
               "fit": {k: v for k, v in report.to_dict().items()
                       if k not in ("r_grid", "residuals", "singular_values")},
               "max_abs_coefficient": float(np.abs(measure.coefficients).max())}
    if args.compare:
        summary["compare"] = _cross_routes(params, kls.SpectralSolution(params, measure), args)
    _finish(out, summary)
    return 0


def cmd_moments(args) -> int:
    out = _out_dir(args)
    _manifest(out, args)
    results = [mo.moment(k, args.region) for k in args.orders]
    rows = [[r.order, r.region.value, r.value, r.quadrature_error] for r in results]
    header = ["order", "region", "value", "quadrature_error"]
    summary = {"region": args.region.value,
               "moments": [dict(zip(header, row)) for row in rows]}
    if args.mc_check:
        cfg = ss.SimConfig(args.paths, args.steps, args.seed, args.region)
        emp = ss.EmpiricalDistribution.from_samples(ss.simulate(cfg))
        for row, res in zip(rows, results):
            m, se = emp.moment(res.order)
            row += [m, se, (m - res.value) / se]
        header += ["mc_value", "mc_se", "z"]
        summary["moments"] = [dict(zip(header, row)) for row in rows]
        summary["max_abs_z"] = max(abs(row[-1]) for row in rows)
    _write_csv(out / "moments.csv", header, rows)
    _finish(out, summary)
    if args.mc_check and summary["max_abs_z"] >= 3.0:
        sys.stderr.write(f"Monte Carlo disagrees with the oracle: max |z| = {summary['max_abs_z']:.2f}\n")
        return 1
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _positive(kind):
    def conv(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid value {text!r}")
        if not v > 0:
            raise argparse.ArgumentTypeError(f"{text} must be positive")
        return v
    return conv


def _nonneg(text):
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"{text} must be nonnegative")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quadocc",
                                description="Quadrant occupation time laboratory.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", help=f"output directory (default ${ENV_OUT}/<command>)")

    s = sub.add_parser("simulate", help="Monte Carlo occupation times")
    s.add_argument("--region", type=_region, default=Region.OPPOSITE_QUADRANTS)
    s.add_argument("--paths", type=_positive(int), default=100_000)
    s.add_argument("--steps", type=_positive(int), default=10_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--alpha", type=_positive(float))
    s.add_argument("--lambda", dest="lam", type=_nonneg, default=0.0)
    s.add_argument("--counting", choices=ss.COUNTING, default="bridge")
    s.add_argument("--workers", type=_positive(int), default=1)
    common(s)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("pde", help="finite-difference solution of the Helmholtz problem")
    s.add_argument("--alpha", type=_positive(float), required=True)
    s.add_argument("--lambda", dest="lam", type=_nonneg, default=0.0)
    s.add_argument("--L", type=_positive(float), default=8.0)
    s.add_argument("--n", type=_positive(int), default=513)
    s.add_argument("--tol", type=_positive(float), default=1e-10)
    s.add_argument("--boundary", choices=[k.value for k in pde.BoundaryKind], default="constant")
    s.add_argument("--richardson-levels", type=int, default=1)
    common(s)
    s.set_defaults(func=cmd_pde)

    s = sub.add_parser("verify-identities", help="check the Bessel/KL identities")
    s.add_argument("--y-grid", type=_floats, default=[0.1, 0.5, 1.0, 2.0, 5.0])
    s.add_argument("--z-grid", type=_floats, default=[0.1, 0.5, 1.0])
    s.add_argument("--a-grid", type=_floats, default=[0.1, 0.5, 1.0])
    s.add_argument("--tolerance", type=_positive(float), default=1e-3)
    common(s)
    s.set_defaults(func=cmd_verify_identities)

    s = sub.add_parser("pasting-fit", help="least-squares fit of the spectral measure")
    s.add_argument("--alpha", type=_positive(float), required=True)
    s.add_argument("--lambda", dest="lam", type=_nonneg, default=0.0)
    s.add_argument("--basis-size", type=_positive(int), default=8)
    s.add_argument("--r-min", type=_positive(float), default=0.05)
    s.add_argument("--r-max", type=_positive(float), default=8.0)
    s.add_argument("--r-points", type=_positive(int), default=40)
    s.add_argument("--reg", type=_nonneg, default=1e-8)
    s.add_argument("--form", choices=kls.FORMS, default="minus")
    s.add_argument("--compare", action="store_true", help="add spectral/PDE/Monte Carlo U(0,0)")
    s.add_argument("--mc-paths", type=_positive(int), default=20_000)
    s.add_argument("--mc-steps", type=_positive(int), default=2_000)
    s.add_argument("--pde-n", type=_positive(int), default=257)
    s.add_argument("--seed", type=int, default=0)
    common(s)
    s.set_defaults(func=cmd_pasting_fit)

    s = sub.add_parser("moments", help="oracle moments of the occupation time")
    s.add_argument("--region", type=_region, default=Region.OPPOSITE_QUADRANTS)
    s.add_argument("--orders", type=_ints, default=[1, 2, 3])
    s.add_argument("--mc-check", action="store_true")
    s.add_argument("--paths", type=_positive(int), default=20_000)
    s.add_argument("--steps", type=_positive(int), default=2_000)
    s.add_argument("--seed", type=int, default=0)
    common(s)
    s.set_defaults(func=cmd_moments)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return int(args.func(args))
    except IllConditionedError as exc:
        sys.stderr.write(f"error: {exc} (try --reg > 0)\n")
        return 1
    except (DomainError, PreconditionError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except Exception as exc:  # runtime failure of a numerical route
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
