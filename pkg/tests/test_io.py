import json

import numpy as np
import pytest

from nlpot import io
from nlpot.field import Grid, ScalarField, VectorField
from nlpot.measure import RadonMeasure


def test_measure_round_trip_with_density(tmp_path):
    mu = RadonMeasure.from_atoms([[0.1, -0.2], [0.4, 0.3]], [1.5, -0.5], [-1, -1], [1, 1])
    mu = mu + RadonMeasure.from_density(np.arange(12.0).reshape(3, 4), [-1, -1], [1, 1])
    io.write_measure(tmp_path / "m.json", mu)
    assert (tmp_path / "m.density.txt").exists()
    back = io.read_measure(tmp_path / "m.json")
    np.testing.assert_array_equal(back.positions, mu.positions)
    np.testing.assert_array_equal(back.weights, mu.weights)
    np.testing.assert_array_equal(back.density.values, mu.density.values)
    for x0, rho in [((0, 0), 0.5), ((0.3, 0.1), 1.2)]:
        assert back.ball_mass(x0, rho, "total") == mu.ball_mass(x0, rho, "total")


def test_spacetime_measure_round_trip(tmp_path):
    mu = RadonMeasure.from_atoms([[0.0, -0.5]], [2.0], [-3.0, -1.0], [3.0, 0.2], time=True)
    io.write_measure(tmp_path / "h.json", mu)
    back = io.read_measure(tmp_path / "h.json")
    assert back.time and back.n == 1
    np.testing.assert_array_equal(back.positions, mu.positions)


def test_field_round_trip_is_exact(tmp_path):
    g = Grid.box([-1, 0], [1, 2], 8)
    rng = np.random.default_rng(3)
    u = ScalarField(g, rng.normal(size=g.shape))
    io.write_field(tmp_path / "u.txt", u)
    back = io.read_field(tmp_path / "u.txt")
    assert (back.grid.lo, back.grid.spacing, back.grid.shape) == (g.lo, g.spacing, g.shape)
    np.testing.assert_array_equal(back.values, u.values)

    du = VectorField(g, rng.normal(size=(2,) + g.shape))
    io.write_field(tmp_path / "du.txt", du)
    back = io.read_field(tmp_path / "du.txt")
    assert isinstance(back, VectorField)
    np.testing.assert_array_equal(back.values, du.values)


def test_field_file_keeps_infinite_values(tmp_path):
    g = Grid.box([0, 0], [1, 1], 2)
    vals = np.zeros(g.shape)
    vals[1, 1] = np.inf
    io.write_field(tmp_path / "u.txt", ScalarField(g, vals, allow_inf=True))
    assert np.isinf(io.read_field(tmp_path / "u.txt").values[1, 1])


def test_missing_header_is_format_error(tmp_path):
    f = tmp_path / "d.txt"
    f.write_text("1\n2\n")
    with pytest.raises(io.FormatError, match="header"):
        io.read_density(f)


def test_bad_header_json_is_format_error(tmp_path):
    f = tmp_path / "d.txt"
    f.write_text("# {shape: [2]}\n1\n2\n")
    with pytest.raises(io.FormatError):
        io.read_field(f)


def test_value_count_mismatch_is_format_error(tmp_path):
    f = tmp_path / "d.txt"
    f.write_text('# {"shape": [2, 2], "lo": [0, 0], "spacing": [1, 1]}\n1\n2\n3\n')
    with pytest.raises(io.FormatError, match="3 values"):
        io.read_density(f)


def test_measure_file_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(io.FormatError, match="JSON"):
        io.read_measure(bad)
    with pytest.raises(io.FormatError, match="lacks"):
        io.measure_from_spec({"box": {"lo": [0], "hi": [1]}})
    with pytest.raises(io.FormatError):
        io.measure_from_spec({"dimension": 2, "box": {"lo": [0, 0], "hi": [1, 1]}, "atoms": [[0.5, 0.5, 1.0, 2.0, 3.0]]})
    # FormatError is a ValueError so the CLI maps it to the config exit code
    assert issubclass(io.FormatError, ValueError)


def test_points_file_accepts_commas_and_comments(tmp_path):
    f = tmp_path / "p.txt"
    f.write_text("# x y\n0.1, 0.2\n0.3 0.4\n")
    np.testing.assert_array_equal(io.read_points(f), [[0.1, 0.2], [0.3, 0.4]])
    f.write_text("0.1 0.2\n0.3\n")
    with pytest.raises(io.FormatError):
        io.read_points(f)


def test_to_json_is_deterministic_and_strict():
    obj = {"b": np.float64(np.inf), "a": [np.nan, -np.inf, np.int64(3), np.bool_(True)], "c": np.arange(2.0)}
    text = io.to_json(obj)
    assert text == io.to_json(dict(reversed(list(obj.items()))))
    assert json.loads(text) == {"a": ["nan", "-inf", 3, True], "b": "inf", "c": [0.0, 1.0]}
    assert "Infinity" not in text and "NaN" not in text


def test_csv_keeps_full_precision(tmp_path):
    io.write_csv(tmp_path / "t.csv", ["x", "y"], [[0.1, "a"], [1 / 3, 2]])
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "x,y"
    assert float(lines[2].split(",")[0]) == 1 / 3
