import math

import numpy as np
import pytest

from conftest import solved
from nlpot.coefficients import Dip, PiecewiseInTime
from nlpot.experiments import backward_causality_check
from nlpot.field import Grid
from nlpot.measure import RadonMeasure
from nlpot.parabolic import ParabolicVectorField, check_parabolic_structure, solve_parabolic, time_level

BOX = ([-3.0, -1.0], [3.0, 0.2])


def heat_kernel(x, t):
    return np.exp(-x * x / (4 * t)) / np.sqrt(4 * math.pi * t)


def test_zero_measure_gives_zero():
    grid = Grid.spacetime([-3.0], [3.0], 30, -1.0, 0.2)
    u = solve_parabolic(ParabolicVectorField(), RadonMeasure.zero(*BOX, time=True), grid)
    assert np.all(u.values == 0.0)


def test_heat_kernel_value_and_gradient():
    sol = solved("heat", 300)
    phi = heat_kernel(0.5, 0.04)
    assert phi == pytest.approx(0.2957, abs=1e-4)
    assert sol.u.at([0.5, 0.04]) == pytest.approx(phi, rel=0.05)
    assert abs(sol.Du.at([0.5, 0.04])[0]) == pytest.approx(0.5 / 0.08 * phi, rel=0.05)


def test_heat_kernel_error_decreases_under_refinement():
    errs = []
    for cells in (60, 120):
        sol = solved("heat", cells)
        g = sol.grid
        x = g.space().points()[:, 0]
        t = g.times()
        sel = t >= 0.04
        exact = heat_kernel(x[:, None], t[None, sel])
        errs.append(np.max(np.abs(sol.u.values[:, sel] - exact)))
    assert errs[1] < errs[0]


def test_positive_source_gives_non_negative_solution():
    sol = solved("heat", 150)
    assert np.all(sol.u.values >= 0.0)


def test_solution_vanishes_before_the_source():
    sol = solved("heat", 150)
    assert np.all(sol.u.values[:, sol.grid.times() < -1e-12] == 0.0)


def test_backward_causality_is_exact():
    assert backward_causality_check(60)


def test_time_level_rounds_up():
    grid = Grid.spacetime([-1.0], [1.0], 10, 0.0, 1.0, dt=0.1)
    np.testing.assert_array_equal(time_level(grid, [0.1, 0.15, 0.2]), [1, 2, 2])


def test_solver_input_checks():
    grid = Grid.spacetime([-3.0], [3.0], 30, -1.0, 0.2)
    with pytest.raises(ValueError):
        solve_parabolic(ParabolicVectorField(), RadonMeasure.dirac([0.0], [-3.0], [3.0]), grid)
    with pytest.raises(ValueError):
        solve_parabolic(ParabolicVectorField(), RadonMeasure.zero(*BOX, time=True), grid.space())


def test_time_dependent_coefficient_solves():
    grid = Grid.spacetime([-3.0], [3.0], 60, -1.0, 0.2)
    a = ParabolicVectorField(kappa=PiecewiseInTime((1.0, 2.0), (0.1,)))
    u = solve_parabolic(a, RadonMeasure.dirac([0.0, 0.0], *BOX, time=True), grid)
    assert np.all(np.isfinite(u.values)) and u.values.max() > 0


def test_structure_constant_coefficient_passes():
    assert check_parabolic_structure(ParabolicVectorField(), 1000).passed


def test_structure_time_discontinuous_coefficient_passes():
    a = ParabolicVectorField(kappa=PiecewiseInTime((1.0, 3.0), (-0.5,)))
    assert check_parabolic_structure(a, 1000).passed


def test_structure_negative_dip_fails_with_witness():
    rep = check_parabolic_structure(ParabolicVectorField(kappa=Dip(1.0, 2.0)), 1000)
    assert not rep.passed
    assert rep.witness is not None and rep.witness["condition"] in rep.violations


def test_structure_check_needs_enough_samples():
    with pytest.raises(ValueError):
        check_parabolic_structure(ParabolicVectorField(), 10)
