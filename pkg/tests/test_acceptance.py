"""The eleven acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line (printed in the terminal summary)
before asserting, so a red criterion still reports its measured numbers.
"""
import math
import time

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from conftest import ACCEPTANCE, solved
from nlpot.experiments import measure_estimate, preset, run_experiment

pytestmark = pytest.mark.slow


def record(k: int, ok: bool, detail: str) -> None:
    ok = bool(ok)
    ACCEPTANCE[k] = (ok, detail)
    print(f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}")
    assert ok, detail


def run(name: str):
    start = time.perf_counter()
    res = run_experiment(preset(name))
    return res, time.perf_counter() - start


def ratio(values) -> float:
    return max(values) / min(values)


def test_criterion_1_closed_form_potentials():
    res, secs = run("closed-form")
    rows = res["result"]["rows"]
    worst = max(r["rel_error"] for r in rows)
    change = max(r["doubling_change"] for r in rows)
    kinds = " ".join(r["case"] for r in rows)
    ok = worst <= 0.01 and change < 0.005 and secs < 1.0
    ok &= all(k in kinds for k in ("riesz", "wolff", "caloric", "uniform"))
    record(1, ok, f"max rel error {worst:.2e}, max doubling change {change:.2e}, {secs:.2f} s")


def test_criterion_2_poisson_linear_bounds():
    res, _ = run("poisson-n3")
    r = res["result"]
    rows = r["rows"]
    radii = [row["r"] for row in rows]
    decade = max(radii) / min(radii)
    ok = r["u_ratio_spread"] < 0.05 and r["grad_ratio_spread"] < 0.05 and decade >= 9.5
    mean_u = np.mean([row["u_ratio"] for row in rows])
    mean_g = np.mean([row["grad_ratio"] for row in rows])
    record(
        2,
        ok,
        f"u ratio spread {r['u_ratio_spread']:.2%}, grad ratio spread {r['grad_ratio_spread']:.2%} over r x{decade:.1f}; "
        f"means {mean_u:.5f}, {mean_g:.5f} vs 1/(4 pi) = {1 / (4 * math.pi):.5f}",
    )


def _refinement_detail(ref) -> str:
    return f"c_max per grid {ref['grids']} = [{', '.join(f'{c:.4f}' for c in ref['c_max'])}]"


def test_criterion_3_disk_p2():
    res, secs = run("thm2-disk")
    ref = res["result"]["refinement"]
    c = ref["c_max"][-2:]
    npts = [len(rep["points"]) for rep in ref["reports"]]
    ok = res["passed"] and all(math.isfinite(x) and x > 0 for x in c) and ratio(c) < 2
    ok &= ref["grids"][-2:] == [64, 128] and all(k == 20 for k in npts) and res["config"]["R"] == 0.2 and secs < 30
    record(3, ok, f"{_refinement_detail(ref)}, ratio {ratio(c):.3f}, {secs:.1f} s")


def test_criterion_4_disk_p3():
    # radial oracle of -div(|Du| Du) = 1: |Du(r)| = (r / 2)^(1/2)
    sol = solved("disk", 128, p=3.0)
    lhs = measure_estimate(sol, "grad-p", [[0.5, 0.0]]).lhs[0]
    err = abs(lhs - 0.5) / 0.5
    res, _ = run("thm1-disk-p3")
    ref = res["result"]["refinement"]
    c = ref["c_max"][-2:]
    ok = err <= 0.02 and res["passed"] and all(math.isfinite(x) for x in c) and ratio(c) < 2
    record(4, ok, f"|Du(0.5)| = {lhs:.5f} vs 0.5 (error {err:.2%}); {_refinement_detail(ref)}")


def radial_fundamental(p: float, r: float) -> float:
    """u(r) for -div(|Du|^(p-2) Du) = delta_0 in the unit ball of R^3, u = 0 on the sphere.

    Flux balance gives u' = -(4 pi r^2)^(-1/(p-1)); integrate inward from r = 1.
    """
    sol = solve_ivp(lambda t, y: [-(4 * math.pi * t * t) ** (-1 / (p - 1))], (1.0, r), [0.0], rtol=1e-11, atol=1e-13)
    return float(sol.y[0, -1])


def test_criterion_5_zero_order_dirac():
    p = 2.5
    exact = radial_fundamental(p, 0.5)
    sol = solved("dirac", 64, p=p, n=3)
    lhs = measure_estimate(sol, "km-zero", [[0.5, 0.0, 0.0]]).lhs[0]
    err = abs(lhs - exact) / exact
    res, _ = run("km-zero-dirac")
    ref = res["result"]["refinement"]
    c = ref["c_max"]
    stable = len(c) >= 3 and all(ratio(c[i : i + 2]) < 2 for i in range(len(c) - 1))
    ok = err <= 0.05 and res["passed"] and stable and all(math.isfinite(x) for x in c)
    record(5, ok, f"u(0.5) = {lhs:.5f} vs ODE {exact:.5f} (error {err:.2%}); {_refinement_detail(ref)}")


def test_criterion_6_wolff_riesz_domination():
    res, secs = run("riesz-dom")
    r = res["result"]
    counts = [len(r[k]["report"]["points"]) for k in ("dirac", "two-atom")]
    finite = all(math.isfinite(r[k]["c_max"]) and r[k]["c_max"] > 0 for k in ("dirac", "two-atom"))
    # c is the smallest constant making wolff <= c * havin_mazja at every point
    dominated = all(
        lhs <= r[k]["c_max"] * rhs * (1 + 1e-12)
        for k in ("dirac", "two-atom")
        for lhs, rhs in zip(r[k]["report"]["lhs"], r[k]["report"]["rhs"]["havin_mazja"])
    )
    spread = r["scaling_sweep"]["spread"]
    ok = finite and dominated and counts == [50, 50] and spread < 0.10
    record(
        6,
        ok,
        f"c_max dirac {r['dirac']['c_max']:.4g}, two-atom {r['two-atom']['c_max']:.4g}; sweep spread {spread:.2%}; {secs:.0f} s",
    )


def test_criterion_7_mapping():
    res, _ = run("mapping")
    r = res["result"]
    slope_err = abs(r["slope"] - (-0.5))
    ok = slope_err <= 0.05 and r["exponent_rel_error"] <= 0.10
    record(7, ok, f"slope {r['slope']:.4f} (target -0.5), critical exponent error {r['exponent_rel_error']:.2%}")


def test_criterion_8_nonlocal_caccioppoli_sweep():
    res, secs = run("thm4-sweep")
    r = res["result"]
    rows = [row for grid_rows in r["rows"].values() for row in grid_rows]
    sigmas = sorted({row["sigma"] for row in rows})
    finite = all(math.isfinite(row["c"]) for row in rows)
    zero_top = all(row["lhs"] == 0.0 for row in rows if row["quantile"] == "max")
    grids = sorted(r["c_max"], key=int)
    a, b = r["c_max"][grids[-2]], r["c_max"][grids[-1]]
    worst = max(max(a[k], b[k]) / min(a[k], b[k]) for k in a)
    ok = sigmas == [0.1, 0.25, 0.4] and finite and zero_top and worst < 2 and secs < 120
    record(8, ok, f"worst c ratio {grids[-2]}->{grids[-1]}: {worst:.3f}; top-level lhs all 0: {zero_top}; {secs:.1f} s")


def test_criterion_9_degiorgi():
    res, _ = run("thm5-degiorgi")
    r = res["result"]
    ok = len(r["c"]) == 20 and all(math.isfinite(c) for c in r["c"]) and r["constant_field_c"] == 1.0
    record(9, ok, f"c_max {r['c_max']:.4g} over {len(r['c'])} points; constant field c = {r['constant_field_c']!r}")


def test_criterion_10_heat_kernel():
    res, _ = run("thm3-heat")
    r = res["result"]
    x, t = 0.5, 0.04
    phi = math.exp(-x * x / (4 * t)) / math.sqrt(4 * math.pi * t)
    dphi = x / (2 * t) * phi
    eu, eg = abs(r["u"][-1] - phi) / phi, abs(r["grad"][-1] - dphi) / dphi
    stable = all(ratio(r[k][-2:]) < 2 for k in ("grad_c_max", "zero_c_max"))
    ok = eu <= 0.05 and eg <= 0.05 and stable and r["causality"] is True
    record(
        10,
        ok,
        f"u error {eu:.2%}, grad error {eg:.2%}; c ratios {ratio(r['grad_c_max'][-2:]):.3f}, "
        f"{ratio(r['zero_c_max'][-2:]):.3f}; causality {r['causality']}",
    )


def test_criterion_11_negative_controls():
    res, _ = run("negative-controls")
    r = res["result"]
    jump, dip, study = r["jump_coefficient"], r["negative_dip"], r["unconverged_refinement"]
    ok = not jump["passed"] and jump["witness"] and not dip["passed"] and dip["witness"]
    ok = bool(ok) and not study["passed"] and not any(study["converged"])
    record(11, ok, f"rejected: {jump['violations']} / {dip['violations']}; refinement reason: {study['reason']}")
