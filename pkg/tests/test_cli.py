import csv
import json

import pytest

from posylasso.cli import main
from posylasso.model import load_model

GRID_YAML = "grids:\n  - [0, 0.5, 1, 2]\n  - [-2, 0, 1.5, 3.2]\n  - [-1, 0, 1, 3]\n"


@pytest.fixture
def files(tmp_path):
    data = tmp_path / "data.csv"
    grid = tmp_path / "grid.yaml"
    grid.write_text(GRID_YAML)
    assert main(["gen-example1", "--m", "40", "--seed", "2", "--out", str(data)]) == 0
    return tmp_path, data, grid


def run(capsys, argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr()


def test_fit_eval_eliminate(files, capsys):
    tmp, data, grid = files
    model, trace, fig = tmp / "m.json", tmp / "t.csv", tmp / "fit.png"
    code, out = run(capsys, ["fit", "--data", data, "--grid", grid, "--gamma", "1e-3",
                             "--rel-tol", "1e-3", "--out", model, "--trace", trace, "--figure", fig])
    assert code == 0, out.err
    assert "converged: True" in out.out
    assert len(load_model(model)) > 0
    assert fig.stat().st_size > 0
    with trace.open() as fh:
        rows = list(csv.DictReader(fh))
    assert rows[0].keys() >= {"epoch", "primal", "dual", "gap"}
    assert all(float(r["dual"]) <= float(r["primal"]) + 1e-10 for r in rows)

    code, out = run(capsys, ["eval", "--model", model, "--data", data])
    assert code == 0 and out.out.startswith("RE: ")

    sel = tmp / "sel.json"
    code, out = run(capsys, ["eliminate", "--data", data, "--grid", grid, "--gamma", "1e-3",
                             "--out", sel])
    doc = json.loads(sel.read_text())
    assert code == 0 and doc["original_n"] == 64
    assert len(doc["kept"]) + len(doc["eliminated"]) == 64


def test_unconverged_exit_code(files, capsys):
    tmp, data, grid = files
    base = ["fit", "--data", data, "--grid", grid, "--gamma", "1e-4", "--tol", "1e-12",
            "--max-epochs", "1", "--out", tmp / "m.json"]
    assert run(capsys, base)[0] == 3
    assert run(capsys, base + ["--allow-unconverged"])[0] == 0


def test_sweep_and_loo(files, capsys):
    tmp, data, grid = files
    out = tmp / "pareto.csv"
    code, _ = run(capsys, ["sweep", "--data", data, "--grid", grid, "--gamma-min", "1e-4",
                           "--gamma-max", "1", "--count", "3", "--rel-tol", "1e-3",
                           "--max-epochs", "2000", "--jobs", "2", "--out", out])
    assert code == 0
    assert out.read_text().splitlines()[0] == "gamma,cardinality,relative_error,gap,converged,wall_time_s"
    assert out.with_suffix(".png").exists()

    loo = tmp / "loo.csv"
    code, o = run(capsys, ["loo", "--data", data, "--grid", grid, "--gamma", "1e-2",
                           "--weights", "uniform", "--margin", "0.2", "--rel-tol", "1e-3",
                           "--max-epochs", "2000", "--out", loo, "--no-figure"])
    assert code == 0 and "AE:" in o.out and loo.exists()


def test_error_exit_codes(files, capsys, tmp_path):
    tmp, data, grid = files
    with pytest.raises(SystemExit) as exc:
        main(["fit", "--data", str(data)])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["fit", "--data", str(data), "--grid", str(grid), "--gamma", "1", "--sigma", "-1"])
    assert exc.value.code == 1

    bad = tmp_path / "bad.csv"
    bad.write_text("w_1,w_2,w_3,y\n1,0,1,2\n")
    assert run(capsys, ["fit", "--data", bad, "--grid", grid, "--gamma", "1e-3"])[0] == 2
    assert run(capsys, ["fit", "--data", data, "--grid", tmp_path / "nope.yaml",
                        "--gamma", "1e-3"])[0] == 1
    assert run(capsys, ["fit", "--data", data, "--grid", grid, "--gamma", "-1"])[0] == 1
    assert run(capsys, ["eval", "--model", tmp_path / "missing.json", "--data", data])[0] == 2
