import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from datamarket.cli import ConfigError, main, market_from_config, market_to_config

from conftest import two_firm_market


def write_config(tmp_path, m, name="market.json"):
    path = tmp_path / name
    path.write_text(json.dumps(market_to_config(m), indent=2))
    return path


# ---------------------------------------------------------------------------
# config documents
# ---------------------------------------------------------------------------

def test_config_roundtrip():
    m = two_firm_market(0.37, alphas=(1.2, 0.9), delta=0.25, etas=(1.0, 1.0))
    doc = json.loads(json.dumps(market_to_config(m)))
    assert market_from_config(doc) == m


def test_config_errors():
    with pytest.raises(ConfigError):
        market_from_config({"sources": []})
    with pytest.raises(ConfigError):
        market_from_config({"sources": [], "buyers": [], "feature_domain": [0.0]})
    bad_buyer = {
        "sources": [{"x": 0.0, "alpha": 1.0}],
        "buyers": [{"estimator": {"kind": "linear-regression"},
                    "value_dist": {"kind": "gaussian"},
                    "delta": [0.0]}],
        "feature_domain": [-1.0, 1.0],
    }
    with pytest.raises(ConfigError):
        market_from_config(bad_buyer)


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def test_solve_success_with_json(tmp_path, capsys):
    cfg = write_config(tmp_path, two_firm_market(0.0))
    out = tmp_path / "solution.json"
    assert main(["solve", str(cfg), "--json-out", str(out)]) == 0
    stdout = capsys.readouterr().out
    assert "price of anarchy" in stdout

    payload = json.loads(out.read_text())
    assert payload["status"] == "ok"
    assert payload["rho"] == pytest.approx(0.5, rel=1e-11)
    assert np.asarray(payload["d"]) == pytest.approx(
        np.array([[20 / 9, 17 / 9], [20 / 9, 17 / 9]]), rel=1e-9)
    assert payload["c"]["feasible"] is True
    assert payload["welfare"]["poa"] == pytest.approx(1.2779919143512248, rel=1e-9)


def test_solve_no_equilibrium_exits_2(tmp_path, capsys):
    # identical source locations: the full design degenerates but the
    # coupling still certifies nonexistence
    cfg = write_config(tmp_path, two_firm_market(1.0))
    assert main(["solve", str(cfg)]) == 2
    assert "no equilibrium" in capsys.readouterr().err

    # well-conditioned variant past the existence threshold
    cfg2 = write_config(tmp_path, two_firm_market(1.0 - 5e-5), name="near.json")
    assert main(["solve", str(cfg2)]) == 2


def test_solve_input_errors(tmp_path, capsys):
    assert main(["solve", str(tmp_path / "missing.json")]) == 1

    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    assert main(["solve", str(broken)]) == 1

    invalid = write_config(tmp_path, two_firm_market(0.0, alphas=(-1.0, 1.0)), name="bad.json")
    assert main(["solve", str(invalid)]) == 1
    assert "alpha-nonpositive" in capsys.readouterr().err


def test_solve_reports_infeasible_payments(tmp_path, capsys):
    cfg = write_config(tmp_path, two_firm_market(-1.0, alphas=(0.1, 0.1)))
    out = tmp_path / "sol.json"
    assert main(["solve", str(cfg), "--json-out", str(out)]) == 0
    assert "infeasible" in capsys.readouterr().out
    payload = json.loads(out.read_text())
    assert payload["c"]["feasible"] is False
    assert payload["d"]  # equilibrium slopes still reported


def test_solve_delta_asymmetry_rejected(tmp_path, capsys):
    doc = market_to_config(two_firm_market(0.0))
    doc["buyers"][0]["delta"] = [0.0, 0.3]
    doc["buyers"][1]["delta"] = [0.5, 0.0]
    cfg = tmp_path / "asym.json"
    cfg.write_text(json.dumps(doc))
    assert main(["solve", str(cfg)]) == 1
    assert "delta-asymmetry" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------

def test_check_passes(tmp_path, capsys):
    cfg = write_config(tmp_path, two_firm_market(0.0))
    assert main(["check", str(cfg), "--seed", "42", "--samples", "20000"]) == 0
    assert "certification: PASS" in capsys.readouterr().out


def test_check_perturbed_fails(tmp_path, capsys):
    cfg = write_config(tmp_path, two_firm_market(0.0))
    code = main(["check", str(cfg), "--samples", "5000", "--perturb", "1,1,0.5"])
    assert code == 3
    assert "certification: FAIL" in capsys.readouterr().out


def test_check_bad_perturb_flag(tmp_path):
    cfg = write_config(tmp_path, two_firm_market(0.0))
    assert main(["check", str(cfg), "--perturb", "9,9,0.5", "--samples", "1000"]) == 1


# ---------------------------------------------------------------------------
# welfare
# ---------------------------------------------------------------------------

def test_welfare_command(tmp_path, capsys):
    cfg = write_config(tmp_path, two_firm_market(0.0))
    assert main(["welfare", str(cfg)]) == 0
    assert "price of anarchy: 1.27799191435" in capsys.readouterr().out


def test_welfare_rejects_eta(tmp_path):
    cfg = write_config(tmp_path, two_firm_market(0.0, etas=(2.0, 2.0)))
    assert main(["welfare", str(cfg)]) == 1


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def write_sweep(tmp_path, base, frm, to, steps, param="sources[0].x", name="sweep.json"):
    spec = {"param": param, "range": {"from": frm, "to": to, "steps": steps}, "base": base}
    path = tmp_path / name
    path.write_text(json.dumps(spec))
    return path


def test_sweep_csv_contract(tmp_path):
    base = market_to_config(two_firm_market(0.0))
    spec = write_sweep(tmp_path, base, -1.0, 0.0, 5)
    out = tmp_path / "rows.csv"
    assert main(["sweep", str(spec), "--out", str(out)]) == 0

    text = out.read_text()
    header = text.splitlines()[0]
    assert header == (
        "param,gamma_1_1,gamma_1_2,gamma_2_1,gamma_2_2,"
        "xi_1_2_1,xi_1_2_2,xi_2_1_1,xi_2_1_2,rho,"
        "d_1_1,d_1_2,d_2_1,d_2_2,e_star_1,e_star_2,e_hat_1,e_hat_2,"
        "loss_eq,loss_opt,poa,status"
    )
    rows = list(csv.DictReader(text.splitlines()))
    assert len(rows) == 5
    assert rows[0]["param"] == "-1"
    assert float(rows[0]["poa"]) == pytest.approx(1.0, abs=1e-12)
    assert rows[0]["xi_1_2_1"] == "0"
    assert all(r["status"] == "ok" for r in rows)
    assert float(rows[-1]["d_1_1"]) == pytest.approx(20 / 9, rel=1e-9)


def test_sweep_deterministic_and_threaded(tmp_path, monkeypatch):
    base = market_to_config(two_firm_market(0.0))
    spec = write_sweep(tmp_path, base, -1.0, 0.9, 24)
    out1, out2, out3 = (tmp_path / n for n in ("a.csv", "b.csv", "c.csv"))
    assert main(["sweep", str(spec), "--out", str(out1)]) == 0
    assert main(["sweep", str(spec), "--out", str(out2)]) == 0
    monkeypatch.setenv("DM_THREADS", "4")
    assert main(["sweep", str(spec), "--out", str(out3)]) == 0
    assert out1.read_bytes() == out2.read_bytes() == out3.read_bytes()


def test_sweep_no_equilibrium_rows(tmp_path):
    base = market_to_config(two_firm_market(0.0))
    spec = write_sweep(tmp_path, base, 0.9, 1.0, 3)
    out = tmp_path / "edge.csv"
    assert main(["sweep", str(spec), "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert rows[0]["status"] == "ok"
    last = rows[-1]
    assert last["status"] == "no_equilibrium"
    assert float(last["rho"]) >= 1.0 - 1e-9
    assert last["d_1_1"] == ""
    assert last["loss_eq"] == ""
    assert last["poa"] == ""


def test_sweep_eta_parameter(tmp_path):
    base = market_to_config(two_firm_market(0.0))
    spec = write_sweep(tmp_path, base, 1.0, 2.0, 2, param="buyers[0].eta")
    out = tmp_path / "eta.csv"
    assert main(["sweep", str(spec), "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert rows[0]["poa"] != ""
    assert rows[1]["poa"] == ""       # welfare undefined off unit eta
    assert rows[1]["d_1_1"] != ""
    assert rows[1]["status"] == "ok"


def test_sweep_base_as_path(tmp_path):
    base_path = write_config(tmp_path, two_firm_market(0.0), name="base.json")
    spec = write_sweep(tmp_path, "base.json", -1.0, 0.0, 3)
    out = tmp_path / "rel.csv"
    assert main(["sweep", str(spec), "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 4


def test_sweep_input_errors(tmp_path):
    base = market_to_config(two_firm_market(0.0))
    assert main(["sweep", str(write_sweep(tmp_path, base, -1.0, 0.0, 1, name="s1.json")),
                 "--out", str(tmp_path / "x.csv")]) == 1
    assert main(["sweep", str(write_sweep(tmp_path, base, -1.0, 0.0, 3,
                                          param="sources[0].nope", name="s2.json")),
                 "--out", str(tmp_path / "y.csv")]) == 1
    # swept location leaves the feature domain
    assert main(["sweep", str(write_sweep(tmp_path, base, 0.0, 1.5, 3, name="s3.json")),
                 "--out", str(tmp_path / "z.csv")]) == 1
    # unwritable output
    assert main(["sweep", str(write_sweep(tmp_path, base, -1.0, 0.0, 3, name="s4.json")),
                 "--out", str(tmp_path / "nodir" / "w.csv")]) == 1


# ---------------------------------------------------------------------------
# module entry point
# ---------------------------------------------------------------------------

def test_python_m_invocation(tmp_path):
    cfg = write_config(tmp_path, two_firm_market(0.0))
    proc = subprocess.run([sys.executable, "-m", "datamarket", "solve", str(cfg)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "spectral radius: 0.5" in proc.stdout
