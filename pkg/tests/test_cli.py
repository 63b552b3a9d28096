import csv
import json

import numpy as np
import pytest

from diffcopula.cli import (
    EXIT_CONFIG,
    EXIT_DATA,
    EXIT_IO,
    EXIT_OK,
    main,
    read_series,
)
from diffcopula.errors import DataError


def run(tmp_path, *args):
    return main([*args, "--out-dir", str(tmp_path)])


def test_simulate_rows_and_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(a, "simulate", "--model", "OU-SKST", "--n", "2202", "--seed", "3") == EXIT_OK
    assert run(b, "simulate", "--model", "OU-SKST", "--n", "2202", "--seed", "3") == EXIT_OK
    text = (a / "simulated.csv").read_bytes()
    assert text == (b / "simulated.csv").read_bytes()
    with open(a / "simulated.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["index", "time", "value"] and len(rows) == 2203 + 1
    echo = json.loads((a / "simulate_config.json").read_text())
    assert echo["seed"] == 3 and echo["delta"] > 0


def test_fit_round_trip(tmp_path):
    assert run(tmp_path, "simulate", "--model", "OU-SKST", "--n", "1500", "--seed", "8") == EXIT_OK
    data = tmp_path / "simulated.csv"
    assert run(tmp_path, "fit", "--model", "OU-SKST", "--input", str(data), "--seed", "1") == EXIT_OK
    rep = json.loads((tmp_path / "fit_report.json").read_text())
    assert rep["fit"]["estimator"] == "PMLE" and rep["fit"]["params"]["kappa"] > 0
    assert np.isfinite(rep["LL"])


def test_fit_parametric_do(tmp_path):
    assert run(tmp_path, "fit", "--model", "DO", "--n", "1500", "--seed", "2") == EXIT_OK
    rep = json.loads((tmp_path / "fit_report.json").read_text())
    assert set(rep["fit"]["params"]) == {"kappa", "alpha", "sigma2"}


def test_malformed_csv_names_line(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("date,value\n2001-01-02,1.0\n2001-01-03,oops\n2001-01-04,2.0\n")
    with pytest.raises(DataError, match="line 3"):
        read_series(p)
    assert run(tmp_path, "fit", "--input", str(p)) == EXIT_DATA


def test_read_series_headerless(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("1.5\n2.5\n\n3.5\n")
    assert list(read_series(p)) == [1.5, 2.5, 3.5]


def test_lr_report_and_determinism(tmp_path):
    args = ("lr-test", "--model", "DO", "--n", "500", "--B", "5", "--seed", "4")
    assert run(tmp_path / "a", *args) == EXIT_OK
    assert run(tmp_path / "b", *args) == EXIT_OK
    a = json.loads((tmp_path / "a" / "lr_report.json").read_text())
    b = json.loads((tmp_path / "b" / "lr_report.json").read_text())
    assert set(a["table"]) == {"LR", "CV_{0.05}", "CV_{0.01}", "p-value"}
    assert a["bandwidth"] > 0 and a["bandwidth_factor"] == 1.5
    assert a["table"] == b["table"]


def test_mc_rows(tmp_path):
    args = ("mc", "--model", "CIR-SKST", "--R", "2", "--seed", "1", "--sample-sizes", "300",
            "--kappa-factors", "10", "20")
    assert run(tmp_path, *args) == EXIT_OK
    with open(tmp_path / "mc_table.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    # 2 scenarios x 2 estimators x 2 parameters
    assert len(rows) == 8
    assert {r["param"] for r in rows} == {"kappa", "alpha"}


def test_export_functions(tmp_path):
    assert run(tmp_path, "export", "--model", "OU-SKST", "--n", "2202", "--seed", "5") == EXIT_OK
    arr = np.loadtxt(tmp_path / "functions.csv", delimiter=",", skiprows=1)
    assert arr.shape == (41, 5)
    assert np.all(arr[:, 2] > 0)


def test_export_oracle_identity(tmp_path):
    # [TRIVIAL] true UPD and true marginal give back the UPD drift and diffusion
    args = ("export", "--model", "OU", "--theta", "2.0", "--n", "500", "--seed", "5",
            "--oracle-marginal")
    assert run(tmp_path, *args) == EXIT_OK
    arr = np.loadtxt(tmp_path / "functions.csv", delimiter=",", skiprows=1)
    np.testing.assert_allclose(arr[:, 1], arr[:, 3], atol=1e-8)
    np.testing.assert_allclose(arr[:, 2], arr[:, 4], atol=1e-8)


@pytest.mark.parametrize("args", [
    ("fit", "--model", "GBM"),
    ("fit", "--estimator", "OLS"),
    ("mc", "--model", "OU-SKST", "--R", "5"),
    ("lr-test", "--model", "DO", "--B", "5"),
    ("mc", "--model", "OU-SKST", "--R", "1", "--seed", "1"),
    ("fit", "--delta", "-1"),
    ("fit", "--input", "/no/such/file.csv"),
    ("lr-test", "--model", "OU", "--seed", "1"),
])
def test_config_errors(tmp_path, args):
    assert run(tmp_path, *args) == EXIT_CONFIG


def test_config_file_and_unknown_keys(tmp_path):
    good = tmp_path / "c.yaml"
    good.write_text("model: DO\nn: 300\nseed: 2\n")
    assert main(["simulate", "--config", str(good), "--out-dir", str(tmp_path)]) == EXIT_OK
    echo = json.loads((tmp_path / "simulate_config.json").read_text())
    assert echo["model"] == "DO" and echo["n"] == 300
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"modle": "DO"}))
    assert main(["simulate", "--config", str(bad), "--out-dir", str(tmp_path)]) == EXIT_CONFIG


def test_degenerate_data_exit(tmp_path):
    p = tmp_path / "flat.csv"
    p.write_text("value\n" + "1.0\n" * 50)
    assert run(tmp_path, "fit", "--input", str(p)) == EXIT_DATA


def test_io_error_exit(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["simulate", "--n", "10", "--out-dir", str(blocker / "sub")]) == EXIT_IO
