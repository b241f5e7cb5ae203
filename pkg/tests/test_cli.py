import subprocess
import sys

import pytest

from properboost.cli import main, parse_gamma_grid
from properboost.losses import ConfigError


def test_gamma_grid():
    g = parse_gamma_grid("0.001:0.5:40")
    assert len(g) == 40 and g[0] == pytest.approx(0.001) and g[-1] == pytest.approx(0.5)
    for bad in ("1:2", "a:b:c", "0:1:3", "0.5:0.1:3"):
        with pytest.raises(ConfigError):
            parse_gamma_grid(bad)


def test_sweep_writes_csv_and_svg(tmp_path):
    out, svg = tmp_path / "r.csv", tmp_path / "a.svg"
    code = main(["sweep", "--loss", "square", "--model", "dt,ls", "--gamma-grid", "0.01:0.4:3",
                 "--eta", "0.25,0.1", "--out", str(out), "--svg", f"accuracy:{svg}"])
    assert code == 0
    assert len(out.read_text().splitlines()) == 1 + 2 * 3 * 2
    assert svg.read_text().startswith("<svg")


def test_sweep_is_deterministic(tmp_path):
    args = ["sweep", "--loss", "asym1,log", "--model", "ls,knn", "--gamma-grid", "0.005:0.3:4", "--N", "2,3"]
    main(args + ["--out", str(tmp_path / "a.csv")])
    main(args + ["--out", str(tmp_path / "b.csv")])
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_tolerance_flags(tmp_path):
    code = main(["sweep", "--loss", "log", "--gamma-grid", "0.1:0.1:1", "--tol-alpha", "1e-10",
                 "--tol-resid", "1e-9", "--iters", "3", "--out", str(tmp_path / "r.csv")])
    assert code == 0


@pytest.mark.parametrize(
    "argv",
    [
        ["sweep", "--loss", "hinge", "--out", "x.csv"],
        ["sweep", "--model", "svm", "--out", "x.csv"],
        ["sweep", "--eta", "0.7", "--out", "x.csv"],
        ["sweep", "--gamma-grid", "0:1:3", "--out", "x.csv"],
        ["sweep", "--svg", "pie:x.svg", "--gamma-grid", "0.1:0.1:1", "--out", "x.csv"],
        ["bound", "--model", "ls", "--loss", "square", "--epsilon", "0.1", "--theta", "5", "--gamma-wl", "0.1"],
        ["bound", "--model", "ls", "--loss", "square", "--epsilon", "2", "--gamma-wl", "0.1"],
        ["ideal", "--loss", "log", "--gamma", "-1", "--N", "3"],
    ],
)
def test_config_errors_exit_2(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 2


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "--eta", "0.25", "--N", "3", "--out", "x.csv"])
    assert exc.value.code == 2


def test_unwritable_output_exit_2(tmp_path):
    assert main(["sweep", "--gamma-grid", "0.1:0.1:1", "--out", str(tmp_path / "no" / "r.csv")]) == 2


def test_numeric_failure_exit_3(monkeypatch):
    from properboost import experiments

    def boom(*a, **k):
        raise experiments.NumericFailure("no convergence")

    monkeypatch.setattr("properboost.cli.ideal_linear_minimizer", boom)
    assert main(["ideal", "--loss", "log", "--gamma", "0.1", "--N", "3"]) == 3


def test_ideal_and_bound_output(capsys):
    assert main(["ideal", "--loss", "square", "--gamma", "0.01", "--N", "2", "--K", "5"]) == 0
    assert "clean_accuracy=0.5" in capsys.readouterr().out
    assert main(["bound", "--model", "knn", "--loss", "log", "--epsilon", "0.5", "--gamma-wl", "0.5",
                 "--m", "16", "--k-rec", "4"]) == 0
    assert float(capsys.readouterr().out) > 0


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "properboost", "bound", "--model", "dt", "--loss", "square",
                        "--epsilon", "0.01", "--gamma-wl", "0.001"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip() == "inf"
