"""Property-based checks of the invariants listed for each module."""
import json
import math

import numpy as np
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from nlpot.experiments import PRESETS, ExperimentConfig, preset
from nlpot.field import Grid, ScalarField, ball_average, gradient
from nlpot.fractional import abs_truncate, gagliardo_seminorm
from nlpot.io import to_json
from nlpot.measure import RadonMeasure, ball_mass, restrict
from nlpot.parabolic import time_level
from nlpot.potential import riesz_global, truncated_riesz, wolff
from nlpot.verify import VerificationReport

BOX = ([-1.0, -1.0], [1.0, 1.0])
coord = st.floats(-1.0, 1.0, allow_nan=False)
point = st.tuples(coord, coord)
weight = st.floats(-5.0, 5.0, allow_nan=False).filter(lambda w: abs(w) > 1e-6)
atoms = st.lists(st.tuples(point, weight), min_size=1, max_size=8)
positive_atoms = st.lists(st.tuples(point, st.floats(0.01, 5.0)), min_size=1, max_size=8)
radius = st.floats(0.0, 3.0, allow_nan=False)

GRID = Grid.box(*BOX, 12)
fields = st.lists(st.floats(-10.0, 10.0, allow_nan=False), min_size=GRID.size, max_size=GRID.size).map(
    lambda v: ScalarField(GRID, np.array(v).reshape(GRID.shape))
)
SMALL = Grid.box([0.0, 0.0], [1.0, 1.0], 6)
small_fields = st.lists(st.floats(-10.0, 10.0, allow_nan=False), min_size=SMALL.size, max_size=SMALL.size).map(
    lambda v: ScalarField(SMALL, np.array(v).reshape(SMALL.shape))
)


def measure(items, density=None):
    pos = [p for p, _ in items]
    w = [m for _, m in items]
    mu = RadonMeasure.from_atoms(pos, w, *BOX)
    if density is not None:
        mu = mu + RadonMeasure.from_density(density, *BOX)
    return mu


@given(atoms, atoms, point, radius)
def test_ball_mass_is_additive(a, b, x0, rho):
    dens = np.linspace(-1.0, 2.0, 16).reshape(4, 4)
    m1, m2 = measure(a, dens), measure(b, dens)
    for mode in ("signed", "total"):
        both = ball_mass(m1, x0, rho, mode) + ball_mass(m2, x0, rho, mode)
        assert math.isclose(ball_mass(m1 + m2, x0, rho, mode), both, rel_tol=1e-12, abs_tol=1e-12)


@given(atoms, point, st.lists(radius, min_size=2, max_size=6))
def test_total_mass_is_monotone_in_radius(a, x0, radii):
    mu = measure(a, np.abs(np.sin(np.arange(36.0))).reshape(6, 6))
    masses = [ball_mass(mu, x0, r, "total") for r in sorted(radii)]
    assert all(m2 >= m1 for m1, m2 in zip(masses, masses[1:]))


@given(atoms, point, st.floats(0.05, 2.5))
def test_restrict_then_total_matches_ball_mass(a, x0, rho):
    mu = measure(a, np.cos(np.arange(25.0)).reshape(5, 5))
    r = restrict(mu, x0, rho)
    assert math.isclose(r.total_mass("total"), ball_mass(mu, x0, rho, "total"), rel_tol=1e-12, abs_tol=1e-12)
    assert r.total_variation() <= mu.total_variation() + 1e-12


@given(atoms, point, st.lists(st.floats(0.01, 2.0), min_size=2, max_size=5))
@settings(max_examples=40)
def test_potentials_are_monotone_in_radius(a, x0, radii):
    mu = measure(a)
    radii = sorted(radii)
    for fn in (lambda R: truncated_riesz(mu, 1.0, x0, R), lambda R: wolff(mu, 0.4, 2.5, x0, R)):
        vals = [fn(R) for R in radii]
        assert all(v2 >= v1 for v1, v2 in zip(vals, vals[1:]))


@given(atoms, point, st.floats(0.1, 2.0), st.sampled_from([0.25, 0.5, 1.0]))
@settings(max_examples=40)
def test_wolff_p2_equals_riesz_of_double_order(a, x0, R, beta):
    mu = measure(a)
    w, r = wolff(mu, beta, 2.0, x0, R), truncated_riesz(mu, 2 * beta, x0, R)
    assert (w == r == math.inf) or math.isclose(w, r, rel_tol=1e-10, abs_tol=1e-300)


@given(positive_atoms, point, st.floats(0.1, 2.0), st.sampled_from([0.5, 1.0, 1.5]))
@settings(max_examples=40)
def test_truncated_riesz_dominated_by_restricted_global(a, x0, R, beta):
    # int_d^R rho^(beta-n-1) d rho <= d^(beta-n) / (n - beta) for each atom at distance d
    # atoms inside the quadrature cutoff give the +inf sentinel, covered elsewhere
    assume(min(math.dist(p, x0) for p, _ in a) > 1e-6 * R)
    mu = measure(a)
    trunc = truncated_riesz(mu, beta, x0, R)
    glob = riesz_global(restrict(mu, x0, R), beta, x0)
    if math.isinf(glob):
        return
    assert trunc <= glob / (2 - beta) * (1 + 1e-2) + 1e-12


# radii above h / sqrt(2) always contain a node
@given(fields, fields, point, st.floats(0.15, 0.5), st.floats(1.0, 4.0))
@settings(suppress_health_check=[HealthCheck.too_slow])
def test_ball_average_monotone_under_domination(w1, w2, x0, R, q):
    x0 = np.clip(x0, -1 + R, 1 - R)
    lo = ScalarField(GRID, np.minimum(np.abs(w1.values), np.abs(w2.values)))
    hi = ScalarField(GRID, np.maximum(np.abs(w1.values), np.abs(w2.values)))
    assert ball_average(lo, x0, R, q) <= ball_average(hi, x0, R, q) * (1 + 1e-12) + 1e-300


@given(fields, point, st.floats(0.15, 0.5), st.floats(1.0, 3.0), st.floats(1.0, 3.0))
@settings(suppress_health_check=[HealthCheck.too_slow])
def test_jensen_between_exponents(w, x0, R, q1, q2):
    x0 = np.clip(x0, -1 + R, 1 - R)
    q1, q2 = sorted((q1, q2))
    assert ball_average(w, x0, R, q1) <= ball_average(w, x0, R, q2) * (1 + 1e-12) + 1e-300


@given(st.floats(-100.0, 100.0, allow_nan=False))
def test_gradient_of_constant_is_zero(c):
    du = gradient(ScalarField(GRID, np.full(GRID.shape, c)))
    assert np.all(du.values == 0.0)


@given(small_fields, st.floats(-5.0, 5.0, allow_nan=False), st.floats(0.05, 0.95))
@settings(suppress_health_check=[HealthCheck.too_slow])
def test_seminorm_homogeneous_and_symmetric(w, lam, alpha):
    base = gagliardo_seminorm(w, alpha)
    scaled = gagliardo_seminorm(w.with_values(lam * w.values), alpha)
    assert math.isclose(scaled, abs(lam) * base, rel_tol=1e-12, abs_tol=1e-9)
    assert math.isclose(gagliardo_seminorm(w.with_values(-w.values), alpha), base, rel_tol=1e-13, abs_tol=0.0)


@given(small_fields, st.floats(0.0, 10.0), st.floats(0.0, 10.0), st.floats(0.05, 0.95))
@settings(suppress_health_check=[HealthCheck.too_slow])
def test_seminorm_decreases_with_level(w, k1, k2, alpha):
    k1, k2 = sorted((k1, k2))
    a = gagliardo_seminorm(abs_truncate(w, k1), alpha)
    b = gagliardo_seminorm(abs_truncate(w, k2), alpha)
    assert b <= a * (1 + 1e-12) + 1e-12


@given(st.lists(st.tuples(st.floats(0.0, 10.0), st.floats(0.0, 10.0), st.floats(0.0, 10.0)), max_size=10))
def test_report_constant_bounds_lhs(rows):
    rep = VerificationReport("x")
    for i, (lhs, a, b) in enumerate(rows):
        rep.add([float(i)], lhs, average=a, potential=b)
    for lhs, c, a, b in zip(rep.lhs, rep.c, rep.rhs["average"] if rows else [], rep.rhs["potential"] if rows else []):
        assert c >= 0
        if math.isfinite(c):
            assert lhs <= c * (a + b) * (1 + 1e-12) + 1e-300


@given(st.floats(-1.0, 0.2, allow_nan=False))
def test_time_level_never_precedes_the_mass(t):
    grid = Grid.spacetime([-1.0], [1.0], 10, -1.0, 0.2)
    k = int(time_level(grid, t))
    assert grid.times()[k] >= t - 1e-9 * grid.dt or k == 1


@given(st.sampled_from(sorted(PRESETS)))
def test_experiment_config_round_trips(name):
    cfg = preset(name)
    again = ExperimentConfig.from_dict(json.loads(to_json(cfg.to_dict())))
    assert again == cfg
