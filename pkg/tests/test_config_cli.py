import csv
import json

import numpy as np
import pytest

from anisomhd.cli import main
from anisomhd.config import ConfigError, RunConfig, config_from_dict, load_config


def _run(args, tmp_path, capsys=None):
    return main(list(args) + ["--out", str(tmp_path)])


def test_defaults_and_roundtrip():
    cfg = load_config()
    assert cfg == RunConfig()
    assert config_from_dict(cfg.to_dict()) == cfg


def test_precedence(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text("seed = 5\n[physics]\nmu = 0.5\neta = 0.25\n")
    cfg = load_config(path, ["physics.mu=2.0"])
    assert (cfg.seed, cfg.physics.mu, cfg.physics.eta) == (5, 2.0, 0.25)


@pytest.mark.parametrize("text,key", [("[solver]\nbogus = 1\n", "solver.bogus"),
                                      ("[nosuch]\nx = 1\n", "nosuch"),
                                      ("[physics]\nmu = \"x\"\n", "physics.mu")])
def test_bad_keys_rejected(tmp_path, text, key):
    path = tmp_path / "c.toml"
    path.write_text(text)
    with pytest.raises(ConfigError) as info:
        load_config(path)
    assert info.value.key == key


def test_seed_range():
    with pytest.raises(ConfigError):
        load_config(None, ["seed=-1"])


def test_cli_config_error_is_json(tmp_path, capsys):
    code = _run(["solve", "--set", "solver.bogus=1"], tmp_path)
    assert code == 2
    err = json.loads(capsys.readouterr().err)
    assert err["key"] == "solver.bogus" and err["error"] == "ConfigError"


def test_cli_module_error_is_json(tmp_path, capsys):
    code = _run(["fit-decay"], tmp_path)
    assert code == 1
    assert "fit.input" in json.loads(capsys.readouterr().err)["message"]


def _kernel_rows(path):
    with open(path / "kernels.csv") as fh:
        return list(csv.DictReader(fh))


def test_analyze_kernels(tmp_path):
    assert _run(["analyze-kernels", "--set", "kernels.xi_min=-1", "--set", "kernels.xi_max=1"], tmp_path) == 0
    rows = _kernel_rows(tmp_path)
    assert len(rows) == 27
    row = next(r for r in rows if (r["xi1"], r["xi2"], r["xi3"]) == ("1", "0", "0"))
    assert float(row["lambda1_re"]) == -1 and float(row["lambda2_re"]) == -1
    assert float(row["Q1_re_t1"]) == pytest.approx(np.exp(-1), rel=1e-14)
    assert float(row["Q2_re_t1"]) == 0 and float(row["Q2_im_t1"]) == 0
    meta = json.loads((tmp_path / "metadata.json").read_text())
    assert meta["config"]["kernels"]["xi_min"] == -1


def test_outputs_byte_identical(tmp_path):
    args = ["analyze-kernels", "--set", "kernels.xi_max=2", "--seed", "7"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert _run(args, a) == 0 and _run(args, b) == 0
    for name in ("kernels.csv", "metadata.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_fit_decay_synthetic(tmp_path):
    t = np.geomspace(1, 1000, 40)
    data = tmp_path / "series.csv"
    rows = ["t,sq,lin"] + [f"{x:.17g},{(1 + x) ** -0.5:.17g},{(1 + x) ** -1.25:.17g}" for x in t]
    data.write_text("\n".join(rows) + "\n")
    assert _run(["fit-decay", "--set", f'fit.input="{data}"'], tmp_path) == 0
    fits = {f["quantity"]: f for f in json.loads((tmp_path / "decay_fits.json").read_text())}
    assert fits["sq"]["exponent"] == pytest.approx(-0.5, abs=1e-12)
    assert fits["lin"]["exponent"] == pytest.approx(-1.25, abs=1e-12)


def test_solve_then_energies(tmp_path):
    solve = ["solve", "--set", "grid.n1=8", "--set", "grid.n2=8", "--set", "grid.n3=8",
             "--set", "solver.T=0.2", "--set", "solver.dt=0.05", "--set", "solver.output_every=1",
             "--set", "solver.delta=0.01"]
    assert _run(solve, tmp_path / "s") == 0
    for name in ("diagnostics.csv", "run.json", "final.bin", "metadata.json"):
        assert (tmp_path / "s" / name).exists()
    diag = tmp_path / "s" / "diagnostics.csv"
    assert _run(["energies", "--set", f'energy.input="{diag}"'], tmp_path / "e") == 0
    ledger = json.loads((tmp_path / "e" / "energy_ledger.json").read_text())
    assert ledger["E0"] >= ledger["E0_sup_term"] > 0
    assert ledger["time"] == pytest.approx(0.2)
    assert _run(solve, tmp_path / "s2") == 0
    assert diag.read_bytes() == (tmp_path / "s2" / "diagnostics.csv").read_bytes()
