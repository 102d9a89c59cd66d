import csv
import json

import numpy as np
import pytest

from nlpot import io
from nlpot.cli import main
from nlpot.experiments import PRESETS


def dump(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def dirac2(tmp_path):
    return dump(tmp_path / "dirac.json", {"dimension": 2, "box": {"lo": [-1, -1], "hi": [1, 1]}, "atoms": [[0, 0, 1.0]]})


@pytest.fixture
def heat1(tmp_path):
    return dump(tmp_path / "heat.json", {"dimension": 1, "time": True, "box": {"lo": [-3, -1], "hi": [3, 0.2]}, "atoms": [[0, 0, 1.0]]})


def test_potential_prints_profile(dirac2, capsys):
    assert main(["potential", "--kind", "riesz", "--beta", "1", "--point", "0.5,0", "--radius", "0.25,1", "--measure", dirac2]) == 0
    rows = [line.split(",") for line in capsys.readouterr().out.split()]
    assert float(rows[0][1]) == 0.0
    # one atom at distance 1/2 with n - beta = 1: 1/r - 1/R
    assert float(rows[1][1]) == pytest.approx(1.0, rel=1e-3)


def test_potential_csv_and_havin_mazja(dirac2, tmp_path):
    out = tmp_path / "w.csv"
    assert main(["potential", "--kind", "wolff", "--p", "2", "--beta", "0.5", "--point", "0.5,0", "--measure", dirac2, "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["R", "value"] and len(rows) == 2
    out = tmp_path / "hm.csv"
    assert main(["potential", "--kind", "havin-mazja", "--point", "0.5,0", "--measure", dirac2, "--inner-cells", "8", "--out", str(out)]) == 0
    assert float(list(csv.reader(out.open()))[1][0]) > 0


def test_caloric_needs_time_coordinate(heat1):
    assert main(["potential", "--kind", "caloric", "--beta", "2", "--point", "0", "--measure", heat1]) == 2


def test_solve_writes_field_and_gradient(dirac2, tmp_path):
    u, du = tmp_path / "u.txt", tmp_path / "du.txt"
    assert main(["solve", "--measure", dirac2, "--grid", "16", "--ball", "0,0,1", "--out", str(u), "--grad-out", str(du)]) == 0
    field = io.read_field(u)
    assert field.values.shape == (17, 17) and field.values[8, 8] > 0
    assert io.read_field(du).ncomp == 2


def test_solve_rejects_spacetime_measure(heat1, tmp_path):
    assert main(["solve", "--measure", heat1, "--out", str(tmp_path / "u.txt")]) == 2


def test_solve_parabolic(heat1, tmp_path):
    u = tmp_path / "uh.txt"
    assert main(["solve-parabolic", "--measure", heat1, "--grid", "30", "--out", str(u)]) == 0
    field = io.read_field(u)
    times = field.grid.times()
    assert np.all(field.values[:, times < -1e-12] == 0.0)
    assert field.values[:, -1].max() > 0


def test_caccioppoli_reports_per_sigma_and_level(dirac2, tmp_path):
    u = tmp_path / "u.txt"
    main(["solve", "--measure", dirac2, "--grid", "16", "--ball", "0,0,1", "--out", str(u)])
    out = tmp_path / "c.json"
    args = ["caccioppoli", "--sigma", "0.2,0.3", "--levels", "0,0.1", "--ball", "0.3,0.2,0.3", "--field", str(u)]
    assert main(args + ["--measure", dirac2, "--out", str(out)]) == 0
    assert len(json.loads(out.read_text())["reports"]) == 4
    assert main(args[:-4] + ["--ball", "0.3,0.3", "--field", str(u), "--measure", dirac2]) == 2


def test_verify_problem_json_csv_svg(tmp_path):
    out = tmp_path / "v.json"
    assert main(["verify", "--estimate", "grad-2", "--problem", "disk", "--grid", "32", "--points", "sweep:5:0.4", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert len(rep["lhs"]) == 5
    csv_out, svg = tmp_path / "v.csv", tmp_path / "v.svg"
    args = ["verify", "--estimate", "grad-2", "--problem", "disk", "--grid", "32", "--points", "sweep:5:0.4"]
    assert main(args + ["--out", str(csv_out), "--svg", str(svg)]) == 0
    rows = list(csv.reader(csv_out.open()))
    assert rows[0][0] == "point" and rows[0][-1] == "c" and len(rows) == 6
    assert svg.read_text().lstrip().startswith("<?xml")


def test_verify_from_files_with_points_file(dirac2, tmp_path):
    u = tmp_path / "u.txt"
    main(["solve", "--measure", dirac2, "--grid", "16", "--ball", "0,0,1", "--out", str(u)])
    pts = tmp_path / "pts.txt"
    pts.write_text("0.3,0.1\n-0.2 0.25\n")
    out = tmp_path / "v.json"
    assert main(["verify", "--estimate", "grad-2", "--field", str(u), "--measure", dirac2, "--ball", "0,0,1", "--points", str(pts), "--out", str(out)]) == 0
    assert len(json.loads(out.read_text())["points"]) == 2
    assert main(["verify", "--estimate", "grad-2", "--field", str(u)]) == 2


def test_verify_mapping_rejects_coarse_grid(capsys):
    assert main(["verify", "--estimate", "mapping", "--grid", "32", "--q", "1.2"]) == 2


def test_preset_list_and_dump(tmp_path, capsys):
    assert main(["preset", "--list"]) == 0
    assert capsys.readouterr().out.split() == sorted(PRESETS)
    out = tmp_path / "p.json"
    assert main(["preset", "thm2-dirac-n3", "--out", str(out)]) == 0
    exp = json.loads(out.read_text())["experiments"][0]
    assert exp["problem"] == "dirac" and exp["estimate"] == "grad-2" and exp["grids"]
    assert main(["preset", "no-such-preset"]) == 2


def test_run_empty_config_succeeds(tmp_path, capsys):
    assert main(["run", dump(tmp_path / "e.json", {"experiments": []})]) == 0


@pytest.mark.parametrize(
    "content",
    [
        "{not json",
        json.dumps({"experiments": [{"name": "x", "kind": "refinement", "bogus": 1}]}),
        json.dumps({"experiments": ["no-such-preset"]}),
        json.dumps({"experiments": [{"name": "x", "kind": "unknown-kind"}]}),
        json.dumps({"experiments": [{"name": "x", "kind": "refinement", "grids": [16]}]}),
        json.dumps({"experiments": 5}),
    ],
)
def test_run_bad_config_is_exit_2(tmp_path, content):
    cfg = tmp_path / "c.json"
    cfg.write_text(content)
    assert main(["run", str(cfg)]) == 2


def test_missing_and_malformed_files_are_exit_2(tmp_path):
    assert main(["run", str(tmp_path / "absent.json")]) == 2
    bad = tmp_path / "m.json"
    bad.write_text(json.dumps({"dimension": 2, "box": {"lo": [0, 0], "hi": [1, 1]}, "atoms": [[0.5, 1.0, 2.0, 3.0]]}))
    assert main(["solve", "--measure", str(bad), "--out", str(tmp_path / "u.txt")]) == 2


REFINE = {"name": "unconverged", "kind": "refinement", "problem": "disk", "estimate": "grad-p", "grids": [16, 32]}


def test_failed_experiment_is_exit_1(tmp_path, capsys):
    cfg = dump(tmp_path / "f.json", {"experiments": [dict(REFINE, params={"p": 3.0, "max_iter": 1, "strict": False})]})
    assert main(["run", cfg]) == 1
    assert "FAIL unconverged" in capsys.readouterr().out


def test_solver_breakdown_is_exit_3(tmp_path):
    cfg = dump(tmp_path / "f.json", {"experiments": [dict(REFINE, params={"p": 3.0, "max_iter": 1})]})
    assert main(["run", cfg]) == 3


def test_run_report_is_deterministic(tmp_path, capsys):
    cfg = dump(tmp_path / "c.json", {"experiments": ["closed-form", "thm5-degiorgi"]})
    outs = []
    for i in range(2):
        out, timing = tmp_path / f"r{i}.json", tmp_path / f"t{i}.json"
        assert main(["run", cfg, "--out", str(out), "--timing", str(timing), "--csv", str(tmp_path / f"r{i}.csv")]) == 0
        outs.append(out.read_bytes())
        assert set(json.loads(timing.read_text())) == {"closed-form", "thm5-degiorgi"}
    assert outs[0] == outs[1]
    assert b"seconds" not in outs[0]
    assert list(csv.reader((tmp_path / "r0.csv").open()))[1:] == [["closed-form", "1"], ["thm5-degiorgi", "1"]]


def test_run_preset_with_refinement_plot(tmp_path):
    out, svg = tmp_path / "r.json", tmp_path / "r.svg"
    assert main(["run", dump(tmp_path / "c.json", ["thm2-dirac-n3"]), "--out", str(out), "--svg", str(svg)]) == 0
    res = json.loads(out.read_text())["experiments"][0]["result"]
    assert len(res["refinement"]["c_max"]) == 2
    assert svg.exists()


def test_module_entry_point():
    import subprocess
    import sys

    proc = subprocess.run([sys.executable, "-m", "nlpot", "preset", "--list"], capture_output=True, text=True)
    assert proc.returncode == 0 and "closed-form" in proc.stdout
