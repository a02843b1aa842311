"""Acceptance criteria at full size.

Each test records one PASS/FAIL line, printed at the end of the session and
immediately (visible with ``-s``), and then asserts the same verdict.
"""
import math
import time

import numpy as np
import pytest

from quadrant_occupation import cli
from quadrant_occupation import kl_spectral as kls
from quadrant_occupation import pde_solver as pde
from quadrant_occupation import special_functions as sf
from quadrant_occupation import stochastic_sim as ss
from quadrant_occupation.moment_oracle import arcsine_cdf, ks_threshold, moment
from quadrant_occupation.params import Params
from quadrant_occupation.regions import Region

pytestmark = pytest.mark.slow

N_PATHS, N_STEPS = 100_000, 10_000
REGIONS = [Region.OPPOSITE_QUADRANTS, Region.HALF_PLANE, Region.SINGLE_QUADRANT]


def verdict(log, name, checks, elapsed=None):
    """``checks`` maps a label to (ok, text)."""
    passed = all(ok for ok, _ in checks.values())
    parts = [f"{k}={'ok' if ok else 'NO'} ({text})" for k, (ok, text) in checks.items()]
    if elapsed is not None:
        parts.append(f"runtime {elapsed:.0f}s")
    detail = "; ".join(parts)
    log.append((name, passed, detail))
    print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
    assert passed, detail


@pytest.fixture(scope="module")
def planar_run():
    t0 = time.perf_counter()
    out = ss.simulate_regions(ss.SimConfig(N_PATHS, N_STEPS, seed=2024), REGIONS)
    return out, time.perf_counter() - t0


def test_criterion_1_arcsine_control(acceptance_log):
    t0 = time.perf_counter()
    s = ss.simulate(ss.SimConfig(N_PATHS, N_STEPS, seed=1, region="half-plane"))
    emp = ss.EmpiricalDistribution.from_samples(s)
    d, _ = emp.ks(arcsine_cdf)
    thr = ks_threshold(emp.n, 0.01)
    p = float(emp.cdf(0.25))
    elapsed = time.perf_counter() - t0
    verdict(acceptance_log, "criterion 1 (arcsine control)", {
        "ks": (d < thr, f"D={d:.5f} < {thr:.5f}"),
        "P(T<=1/4)": (abs(p - 1 / 3) < 0.01, f"{p:.4f} vs 1/3"),
        "time": (elapsed <= 120, f"{elapsed:.0f}s <= 120s"),
    }, elapsed)


def test_criterion_2_moments(acceptance_log, planar_run):
    runs, sim_time = planar_run
    t0 = time.perf_counter()
    checks = {}
    exact = {Region.OPPOSITE_QUADRANTS: 0.5, Region.HALF_PLANE: 0.5, Region.SINGLE_QUADRANT: 0.25}
    for region in REGIONS:
        emp = ss.EmpiricalDistribution.from_samples(runs[region])
        first = moment(1, region).value
        checks[f"{region.value} k=1 exact"] = (first == exact[region], f"{first!r}")
        for k in (1, 2, 3):
            m, se = emp.moment(k)
            ref = moment(k, region).value
            z = (m - ref) / se
            checks[f"{region.value} k={k}"] = (abs(z) < 3, f"z={z:+.2f}")
    elapsed = sim_time + time.perf_counter() - t0
    checks["time"] = (elapsed <= 300, f"{elapsed:.0f}s <= 300s")
    verdict(acceptance_log, "criterion 2 (moment agreement)", checks, elapsed)


def test_criterion_3_identities(acceptance_log):
    t0 = time.perf_counter()
    ys, zs = (0.1, 0.5, 1.0, 2.0, 5.0), (0.1, 0.5, 1.0)
    worst = {"cosh": 0.0, "sine": 0.0, "nu_sine": 0.0}
    converged = True
    for y in ys:
        reps = {"cosh": [sf.kl_identity_cosh(y, strict=False)],
                "sine": [sf.kl_identity_sine(z, y, strict=False) for z in zs],
                "nu_sine": [sf.kl_identity_nu_sine(a, y, strict=False) for a in zs]}
        for key, rs in reps.items():
            worst[key] = max(worst[key], *(abs(r.residual) for r in rs))
            converged &= all(r.converged for r in rs)
    orders = []
    hs = np.array([1e-2, 1e-3, 1e-4])
    for nu, x in [(0.0, 2.0), (2.0, 1.0), (5.0, 0.5), (1.0, 10.0), (12.0, 3.0)]:
        r = np.abs([sf.bessel_ode_residual(nu, x, h) for h in hs])
        orders.append(np.polyfit(np.log(hs), np.log(r), 1)[0])
    elapsed = time.perf_counter() - t0
    checks = {f"{k} max residual": (v < 1e-3, f"{v:.2e}") for k, v in worst.items()}
    checks["converged"] = (converged, str(converged))
    checks["ode order"] = (min(orders) >= 1.9, f"min {min(orders):.3f}")
    checks["time"] = (elapsed <= 60, f"{elapsed:.0f}s <= 60s")
    verdict(acceptance_log, "criterion 3 (Bessel/KL identities)", checks, elapsed)


def test_criterion_4_cross_route(acceptance_log, planar_run):
    runs, sim_time = planar_run
    t0 = time.perf_counter()
    params = Params(1.0, 1.0)
    rich = pde.richardson_origin(params, 8.0, 257, 3, 1e-11)
    mc, se = ss.feynman_kac_estimate(runs[Region.OPPOSITE_QUADRANTS], 1.0, 1.0)
    elapsed = sim_time + time.perf_counter() - t0
    gap = abs(rich.value - mc)
    bound = max(2 * se, 2 * rich.error_estimate)
    verdict(acceptance_log, "criterion 4 (PDE vs Monte Carlo U(0,0))", {
        "agreement": (gap < bound, f"PDE {rich.value:.6f} (+-{rich.error_estimate:.1e}) "
                                   f"MC {mc:.6f} (se {se:.1e}) gap {gap:.1e} < {bound:.1e}"),
        "bounds": (0.5 <= rich.value <= 1 and 0.5 <= mc <= 1, "both in [1/2, 1]"),
        "time": (elapsed <= 300, f"{elapsed:.0f}s <= 300s"),
    }, elapsed)


def test_criterion_5_zero_lambda(acceptance_log):
    alpha = 1.0
    params = Params(alpha, 0.0)
    field = pde.solve(params, pde.GridSpec(8.0, 129))
    z = np.linspace(0, 10, 101)
    atoms = kls.AtomicMeasure([0.5, 2.0], [1.0, -1.0])
    measure, report = kls.fit_measure(params, 8)
    max_coef = float(np.abs(measure.coefficients).max())
    sol = kls.SpectralSolution(params, kls.zero_lambda_density(alpha))
    pts = [(0.3, 0.2), (1.0, math.pi / 4), (2.0, 1.0), (0.5, 2.5)]
    v_err = max(abs(kls.v_eval(r, t, sol) - 1 / alpha) for r, t in pts)
    verdict(acceptance_log, "criterion 5 (lambda = 0 degenerate case)", {
        "pde": (bool(np.all(field.values == 1 / alpha)), "field == 1/alpha bitwise"),
        "phi": (bool(np.array_equal(kls.phi(z, params), z)), "identity"),
        "pushforward": (kls.pushforward(atoms, params) is atoms, "identity"),
        # mu = 0 does not solve the pasting equation at lambda = 0, so a faithful
        # fit cannot return vanishing coefficients
        "fit coefficients": (max_coef < 1e-6, f"max |c| = {max_coef:.3g}, residual "
                                             f"{report.residual_norm_after:.3g}"),
        "v_eval": (v_err < 1e-3, f"coth measure, max |V - 1/alpha| = {v_err:.1e}"),
    })


def test_criterion_6_pasting_machinery(acceptance_log):
    params = Params(1.0, 1.0)
    measures = [kls.AtomicMeasure([0.3, 1.2, 2.5], [1.0, -0.4, 0.2]),
                kls.BumpMeasure.nested(8, np.linspace(1.0, -1.0, 8))]
    cont = max(abs(kls.continuity_residual(r, kls.SpectralSolution(params, m)))
               for m in measures for r in (0.1, 1.0, 10.0))
    a, b = measures[1], kls.BumpMeasure.nested(8, np.cos(np.arange(8.0)))
    comb = kls.BumpMeasure.nested(8, 2.0 * a.coefficients - 0.5 * b.coefficients)
    lin = 0.0
    for r in (0.2, 1.0, 4.0):
        la = kls.pasting_sides(r, kls.SpectralSolution(params, a))[0]
        lb = kls.pasting_sides(r, kls.SpectralSolution(params, b))[0]
        lc = kls.pasting_sides(r, kls.SpectralSolution(params, comb))[0]
        lin = max(lin, abs(lc - (2 * la - 0.5 * lb)) / max(1.0, abs(lc)))
    norms = [kls.fit_measure(params, n)[1].residual_norm_after for n in (4, 8, 16, 32)]
    monotone = all(x >= y for x, y in zip(norms, norms[1:]))
    verdict(acceptance_log, "criterion 6 (pasting machinery)", {
        "continuity": (cont < 1e-12, f"max {cont:.1e}"),
        "linearity": (lin < 1e-12, f"max rel {lin:.1e}"),
        "nested fit": (monotone, " >= ".join(f"{x:.4g}" for x in norms)),
    })


def test_criterion_7_tanh_probe_report(acceptance_log, tmp_path, capsys):
    code = cli.main(["verify-identities", "--y-grid", "0.5,1,2", "--out", str(tmp_path)])
    text = (tmp_path / "identities.csv").read_text()
    probe = [line for line in text.splitlines() if line.startswith("kl_tanh_probe")]
    printed = capsys.readouterr().out
    ok = (len(probe) == 3 and all(line.endswith("INFO") for line in probe)
          and printed.count("kl_tanh_probe") == 3)
    values = ", ".join(line.split(",")[1] + " residual " + line.split(",")[4] for line in probe)
    verdict(acceptance_log, "criterion 7 (tanh probe reported)", {
        "report": (ok, values),
        "suite exit code": (code == 0, str(code)),
    })


DETERMINISM_RUNS = {
    "simulate": (["simulate", "--paths", "500", "--steps", "500", "--alpha", "1", "--lambda", "1"],
                 ["samples.csv", "summary.json"]),
    "pde": (["pde", "--alpha", "1", "--lambda", "1", "--n", "65"],
            ["field.csv", "axis_profile.csv", "summary.json"]),
    "verify-identities": (["verify-identities", "--y-grid", "0.5,2"], ["identities.csv"]),
    "pasting-fit": (["pasting-fit", "--alpha", "1", "--lambda", "1", "--basis-size", "4",
                     "--r-points", "8"], ["measure.json", "residuals.csv", "summary.json"]),
    "moments": (["moments", "--mc-check", "--paths", "500", "--steps", "200"],
                ["moments.csv", "summary.json"]),
}


def test_criterion_8_determinism(acceptance_log, tmp_path, capsys):
    checks = {}
    for name, (argv, files) in DETERMINISM_RUNS.items():
        codes = [cli.main([*argv, "--out", str(tmp_path / name / str(i))]) for i in (0, 1)]
        same = all((tmp_path / name / "0" / f).read_bytes() == (tmp_path / name / "1" / f).read_bytes()
                   for f in files + ["manifest.json"])
        checks[name] = (same and codes == [0, 0], f"{len(files) + 1} files, exit {codes}")
    capsys.readouterr()
    verdict(acceptance_log, "criterion 8 (determinism)", checks)
