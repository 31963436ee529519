import json
import subprocess
import sys

import numpy as np
import pytest

from cavityqnd.bloch import quasi_momentum_grid, solve_bands
from cavityqnd.cli import RunConfig, build_configs, main
from cavityqnd.errors import ParameterError

SMALL_MEASURE = ["--set", "p0=3.75", "--set", "dx_packet=5", "--set", "x0=-75",
                 "--set", "U=0.7", "--set", "L=70", "--set", "t_f=60", "--set", "nbar=0.05",
                 "--set", "max_atoms=5"]


def read_csv(path):
    with open(path) as f:
        header = f.readline().strip().split(",")
    return header, np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def test_bands_fig1(tmp_path):
    assert main(["bands", "--preset", "fig1", "--out", str(tmp_path)]) == 0
    header, data = read_csv(tmp_path / "bands.csv")
    assert header == ["q", "E_1", "E_2", "E_3"]
    q = quasi_momentum_grid(512)
    ref = solve_bands(0.5, q, n_bands=3)
    assert data[:, 0] == pytest.approx(q, abs=0)
    assert np.array_equal(data[:, 1:].T, ref.energies)
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["config"]["U"] == 0.5 and m["seed"] == 0 and m["outputs"] == ["bands.csv"]
    assert m["version"] and m["wall_time_s"] >= 0 and m["rng"] == "numpy.random.Philox"


def test_csv_has_17_significant_digits(tmp_path):
    main(["bands", "--set", "U=0.3", "--set", "q_points=8", "--out", str(tmp_path)])
    line = (tmp_path / "bands.csv").read_text().splitlines()[2]
    assert max(len(v.replace("-", "").replace(".", "").lstrip("0")) for v in line.split(",")) == 17


def test_manifest_replays_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["--preset", "fig2", "--set", "x_points=801", "--set", "t_points=21",
                 "--out", str(a)]) == 0
    assert main(["--config", str(a / "manifest.json"), "--out", str(b)]) == 0
    for name in ("density.csv", "components.csv", "entropy.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_preset_plus_override_equals_handwritten():
    cfg = build_configs(None, preset_id="fig2", overrides=["t_f=100"])[0][1]
    hand = RunConfig.from_dict({"subcommand": "semianalytic", "p0": 2.58, "dp": 2.58 / 50,
                                "U": 0.7, "nbar": 4.0, "t_f": 100})
    assert cfg.to_dict() == hand.to_dict()


def test_fig5_preset_has_three_runs():
    runs = build_configs("measure", preset_id="fig5")
    assert [sub for sub, _ in runs] == ["fig5a", "fig5b", "fig5c"]
    assert [c.sim["L"] for _, c in runs] == [1400.0, 600.0, 200.0]


def test_config_errors(tmp_path, capsys):
    assert main(["measure", "--set", "p0=3.75", "--out", str(tmp_path)]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "config" and "L" in err["message"]
    assert main(["bands", "--set", "U=1", "--set", "bogus=3", "--out", str(tmp_path)]) == 2
    assert "bogus" in capsys.readouterr().err
    assert main(["bands", "--preset", "fig2", "--out", str(tmp_path)]) == 2
    with pytest.raises(ParameterError):
        RunConfig.from_dict({"subcommand": "nope"})


def test_numerical_error_exit_code(tmp_path, capsys):
    code = main(["--preset", "fig2", "--set", "x_points=20", "--out", str(tmp_path)])
    assert code == 3
    assert json.loads(capsys.readouterr().err)["error"] == "numerical"


def test_io_error_exit_code(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["bands", "--preset", "fig1", "--out", str(blocker / "sub")]) == 4


def test_qfunction_coherent(tmp_path):
    assert main(["qfunction", "--set", "nbar=4", "--out", str(tmp_path)]) == 0
    header, data = read_csv(tmp_path / "qfunction.csv")
    assert header == ["re", "im", "Q"] and data.shape == (201 * 201, 3)
    i = np.argmax(data[:, 2])
    assert data[i, :2] == pytest.approx([2.0, 0.0], abs=1e-12)


def test_measure_same_seed_byte_identical(tmp_path):
    args = ["measure", *SMALL_MEASURE, "--set", f"cache_dir={tmp_path / 'cache'}"]
    assert main(args + ["--seed", "5", "--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--seed", "5", "--out", str(tmp_path / "b")]) == 0
    for name in ("cascades.csv", "summary.csv", "components.csv", "snapshots.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    header, rows = read_csv(tmp_path / "a" / "cascades.csv")
    assert rows.shape[0] >= 1
    assert header[:3] == ["cascade", "j", "x_r"] and header[-2:] == ["max_n", "collapsed"]


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "cavityqnd", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "--preset" in r.stdout
