import json
import math
import os
import pathlib
import subprocess
import sys

import pytest

from letf.cli import load_config, read_csv

CONFIGS = pathlib.Path(__file__).resolve().parent.parent / "scripts" / "configs"


def run_cli(*args, env_extra=None):
    env = dict(os.environ)
    if env_extra:
        env.update(env_extra)
    return subprocess.run([sys.executable, "-m", "letf.cli", *args],
                          capture_output=True, text=True, env=env)


def write_config(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def small_kou_config(**overrides):
    doc = {
        "model": {"kind": "kou", "lam": 15.0, "p": 1.0 / 3.0, "q": 2.0 / 3.0,
                  "eta1": 25.0, "eta2": 15.0},
        "localvol": {"a": 0.05, "b": -0.02, "c": 0.5},
        "market": {"x": 0.0, "t": 5.0 / 365.0, "betas": [1, 2],
                   "strikes": [0.95, 1.05]},
        "mc": {"paths": 4000, "steps": 20, "seed": 7},
        "output": {"directory": "out"},
    }
    for key, val in overrides.items():
        doc[key].update(val)
    return doc


# -- config handling -----------------------------------------------------------

def test_config_round_trip(tmp_path):
    doc = small_kou_config()
    cfg = load_config(write_config(tmp_path, doc))
    assert cfg.to_dict() == doc
    cfg2 = load_config(write_config(tmp_path, cfg.to_dict(), "again.json"))
    assert cfg2.to_dict() == doc
    assert cfg2.strikes == cfg.strikes and cfg2.betas == cfg.betas


def test_config_errors_exit_2(tmp_path):
    bad = small_kou_config(mc={"paths": 0})
    res = run_cli("price", "--config", write_config(tmp_path, bad))
    assert res.returncode == 2
    assert "config error" in res.stderr
    res = run_cli("price", "--config", str(tmp_path / "missing.json"))
    assert res.returncode == 2


def test_config_syntax_error_reports_line(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "model": {\n')
    res = run_cli("price", "--config", str(path))
    assert res.returncode == 2
    assert ":3:" in res.stderr or "line" in res.stderr.lower()


# -- price ------------------------------------------------------------------------

def test_price_csv(tmp_path, kou_model):
    out = str(tmp_path / "prices.csv")
    res = run_cli("price", "--config", write_config(tmp_path, small_kou_config()),
                  "--out", out)
    assert res.returncode == 0
    metadata, header, rows = read_csv(out)
    assert header == ["beta", "K", "side", "moneyness", "coefficient",
                      "intrinsic", "leading_price", "degenerate"]
    assert len(rows) == 2 * 2 * 2  # betas x strikes x sides
    # ordering: beta ascending, then strike ascending
    betas = [float(r[0]) for r in rows]
    assert betas == sorted(betas)
    # parity: put - call = K - 1 for each (beta, K)
    by_key = {(r[0], r[1], r[2]): r for r in rows}
    for beta in ("1.0", "2.0"):
        for k in ("0.95", "1.05"):
            call = float(by_key[(beta, k, "call")][6])
            put = float(by_key[(beta, k, "put")][6])
            assert put - call == pytest.approx(float(k) - 1.0, abs=1e-12)


def test_price_empty_strikes(tmp_path):
    doc = small_kou_config()
    doc["market"]["strikes"] = []
    out = str(tmp_path / "prices.csv")
    res = run_cli("price", "--config", write_config(tmp_path, doc), "--out", out)
    assert res.returncode == 0
    _, header, rows = read_csv(out)
    assert header and rows == []


def test_price_atm_flagged_exit_3(tmp_path):
    doc = small_kou_config()
    doc["market"]["strikes"] = [0.95, 1.0, 1.05]
    out = str(tmp_path / "prices.csv")
    res = run_cli("price", "--config", write_config(tmp_path, doc), "--out", out)
    assert res.returncode == 3
    _, _, rows = read_csv(out)
    atm_rows = [r for r in rows if r[3] == "atm"]
    other = [r for r in rows if r[3] != "atm"]
    assert atm_rows and all(r[4] == "" for r in atm_rows)
    assert other and all(r[4] != "" for r in other)


# -- density ----------------------------------------------------------------------

def test_density_identity_at_beta_one(tmp_path):
    doc = small_kou_config()
    doc["market"]["betas"] = [1]
    out = str(tmp_path / "density.csv")
    assert run_cli("density", "--config", write_config(tmp_path, doc),
                   "--out", out).returncode == 0
    _, header, rows = read_csv(out)
    assert header == ["beta", "z", "h", "g"]
    assert rows
    for r in rows:
        assert r[2] == r[3]  # identical text, identical numbers


def test_density_support_cutoff_and_metadata(tmp_path):
    doc = small_kou_config()
    doc["market"]["betas"] = [2, -2]
    out = str(tmp_path / "density.csv")
    assert run_cli("density", "--config", write_config(tmp_path, doc),
                   "--out", out).returncode == 0
    metadata, _, rows = read_csv(out)
    endpoint = float(metadata["support-endpoint beta=-2.0"])
    assert endpoint == pytest.approx(math.log(3.0), rel=1e-15)
    cut = math.log(3.0)
    for r in rows:
        if float(r[0]) == -2.0 and float(r[1]) >= cut:
            assert float(r[3]) == 0.0


def test_density_fig1_parameters(tmp_path):
    res = run_cli("density", "--config", str(CONFIGS / "kou_density.json"),
                  "--out", str(tmp_path / "d.csv"))
    assert res.returncode == 0
    metadata, _, rows = read_csv(str(tmp_path / "d.csv"))
    assert {float(r[0]) for r in rows} == {2.0, -2.0}
    assert "support-endpoint beta=-2.0" in metadata


# -- smile --------------------------------------------------------------------------

def test_smile_schema_and_determinism(tmp_path):
    cfg_path = write_config(tmp_path, small_kou_config())
    out1, out2 = str(tmp_path / "s1.csv"), str(tmp_path / "s2.csv")
    r1 = run_cli("smile", "--config", cfg_path, "--out", out1,
                 env_extra={"LETF_THREADS": "1"})
    r2 = run_cli("smile", "--config", cfg_path, "--out", out2,
                 env_extra={"LETF_THREADS": "4"})
    assert r1.returncode in (0, 3) and r2.returncode in (0, 3)
    b1 = open(out1, "rb").read()
    b2 = open(out2, "rb").read()
    assert b1 == b2  # byte-identical under different thread counts
    metadata, header, rows = read_csv(out1)
    assert header == ["beta", "K", "log_moneyness", "mc_iv", "mc_iv_lo",
                      "mc_iv_hi", "asym_iv", "valid"]
    assert metadata["seed"] == "7"
    assert len(rows) == 2 * 2


def test_smile_flag_overrides(tmp_path):
    cfg_path = write_config(tmp_path, small_kou_config())
    out = str(tmp_path / "s.csv")
    res = run_cli("smile", "--config", cfg_path, "--out", out,
                  "--paths", "2000", "--seed", "123")
    assert res.returncode in (0, 3)
    metadata, _, _ = read_csv(out)
    assert metadata["seed"] == "123"
    assert metadata["paths"] == "2000"


def test_smile_stderr_band_scales_with_paths(tmp_path):
    # quadrupling the paths roughly halves the implied-vol band width
    cfg_path = write_config(tmp_path, small_kou_config())
    widths = {}
    for n in (2000, 32000):
        out = str(tmp_path / f"s{n}.csv")
        res = run_cli("smile", "--config", cfg_path, "--out", out, "--paths", str(n))
        assert res.returncode in (0, 3)
        _, _, rows = read_csv(out)
        usable = [r for r in rows if r[7] == "true" and r[4] and r[5]]
        assert usable
        widths[n] = sum(float(r[5]) - float(r[4]) for r in usable) / len(usable)
    ratio = widths[2000] / widths[32000]
    assert 2.0 < ratio < 8.0  # expect ~4


# -- diagnose and selftest -------------------------------------------------------------

def test_diagnose_rows_and_flags(tmp_path):
    doc = small_kou_config()
    doc["market"]["betas"] = [2]
    doc["trunc"] = {"eps": [0.1, 0.8]}  # 0.8 exceeds ln 2: flagged
    out = str(tmp_path / "diag.csv")
    res = run_cli("diagnose", "--config", write_config(tmp_path, doc), "--out", out)
    assert res.returncode == 3
    _, header, rows = read_csv(out)
    assert header[-1] == "valid"
    good = [r for r in rows if r[-1] == "true"]
    bad = [r for r in rows if r[-1] == "false"]
    assert len(good) == 1 and len(bad) == 1
    assert float(good[0][2]) > 0.0  # beta_eps populated


def test_diagnose_needs_trunc_section(tmp_path):
    res = run_cli("diagnose", "--config", write_config(tmp_path, small_kou_config()))
    assert res.returncode == 2


def test_selftest_passes():
    res = run_cli("selftest")
    assert res.returncode == 0, res.stdout + res.stderr
    assert "all self-tests passed" in res.stdout
