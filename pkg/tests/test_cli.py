import csv
import json
import os
import subprocess
import sys

import pytest

from kg2d.cli import load_config, main, parse_m
from kg2d.errors import ConfigError

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DEMO = os.path.join(ROOT, "demo")
GOLDEN = os.path.join(ROOT, "tests", "golden")


def run(command, config, out, *extra):
    return main([command, "--config", config, "--out", str(out), "--quiet", *extra])


def rows(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def write(tmp_path, text, name="c.ini"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return str(p)


def test_parse_m_forms():
    assert parse_m("3") == (3,)
    assert parse_m("0-2") == (0, 1, 2)
    assert parse_m("1..3") == (1, 2, 3)
    assert parse_m("4,0,2") == (0, 2, 4)
    with pytest.raises(ConfigError):
        parse_m("a-b")


def test_free_spectrum(tmp_path):
    assert run("spectrum", os.path.join(DEMO, "free.ini"), tmp_path) == 0
    assert rows(tmp_path / "spectrum.csv") == []
    summary = rows(tmp_path / "spectrum_summary.csv")
    assert summary and all(r["n_plus"] == r["n_minus"] == r["N_m"] == "0" for r in summary)


def test_square_well_spectrum_golden(tmp_path):
    assert run("spectrum", os.path.join(DEMO, "square_well.ini"), tmp_path) == 0
    got = rows(tmp_path / "spectrum.csv")
    want = rows(os.path.join(GOLDEN, "square_well_spectrum.csv"))
    assert len(got) == len(want)
    for g, w in zip(got, want):
        assert g["m"] == w["m"] and g["kind"] == w["kind"]
        assert float(g["E_over_M"]) == pytest.approx(float(w["E_over_M"]), abs=1e-8)
        assert float(g["epsilon"]) == pytest.approx(float(w["epsilon"]), rel=1e-6)


def test_negative_radius_is_config_error(tmp_path, capsys):
    cfg = write(tmp_path, "[potential]\nshape = square_well\ndepth = 1\nr0 = -1\n")
    assert run("spectrum", cfg, tmp_path / "o") == 2
    err = capsys.readouterr().err
    assert "potential.r0" in err and "line 4" in err


@pytest.mark.parametrize("text,field", [
    ("[potential]\nshape = hexagon\n", "potential.shape"),
    ("[potential]\nshape = square_well\n", "potential.depth"),
    ("[potential]\nshape = square_well\ndepth = x\n", "potential.depth"),
    ("[potential]\nshape = free\n[run]\nm = -3\n", "run.m"),
    ("[potential]\nshape = free\n[tolerances]\ncritical_tol = 0\n", "tolerances.critical_tol"),
    ("[potential]\nshape = free\n[run]\ncommands = spectrum, bogus\n", "run.commands"),
])
def test_config_errors_name_field(tmp_path, text, field):
    with pytest.raises(ConfigError) as info:
        load_config(write(tmp_path, text))
    assert info.value.field == field


def test_invalid_tabulated_rejected(tmp_path):
    cfg = write(tmp_path, "[potential]\nshape = tabulated\nr = 0, 0.5, 1.5\nv = -1, -1, 0.2\n")
    with pytest.raises(ConfigError, match="cutoff"):
        load_config(cfg)


def test_missing_file(tmp_path):
    assert run("spectrum", str(tmp_path / "nope.ini"), tmp_path) == 2


def test_levinson_free(tmp_path):
    assert run("levinson", os.path.join(DEMO, "free.ini"), tmp_path) == 0
    for r in rows(tmp_path / "levinson.csv"):
        assert r["status"] == "pass" and r["N_m"] == "0" and float(r["residual_over_pi"]) == 0


def test_levinson_square_well(tmp_path):
    assert run("levinson", os.path.join(DEMO, "square_well.ini"), tmp_path) == 0
    got = rows(tmp_path / "levinson.csv")
    want = rows(os.path.join(GOLDEN, "square_well_levinson.csv"))
    for g, w in zip(got, want):
        assert g["status"] == "pass"
        for key in ("n_plus", "n_minus", "N_m"):
            assert g[key] == w[key]
        assert float(g["delta_plus_over_pi"]) == pytest.approx(float(w["delta_plus_over_pi"]), abs=1e-3)
        assert float(g["delta_minus_over_pi"]) == pytest.approx(float(w["delta_minus_over_pi"]), abs=1e-3)


def test_levinson_critical_advisory(tmp_path, capsys):
    cfg = os.path.join(DEMO, "critical.ini")
    assert main(["levinson", "--config", cfg, "--out", str(tmp_path)]) == 0
    statuses = {r["m"]: r["status"] for r in rows(tmp_path / "levinson.csv")}
    assert statuses == {"0": "advisory", "2": "pass"}
    assert "advisory" in capsys.readouterr().out


def test_levinson_failure_exit_code(tmp_path, monkeypatch):
    from kg2d import cli

    real = cli.verify_theorem

    def broken(*args, **kwargs):
        rep = real(*args, **kwargs)
        return type(rep)(**{**rep.__dict__, "passed": False, "advisory": False})

    monkeypatch.setattr(cli, "verify_theorem", broken)
    assert run("levinson", os.path.join(DEMO, "free.ini"), tmp_path, "--m", "1") == 1


def test_numeric_failure_exit_code(tmp_path, monkeypatch):
    from kg2d import cli
    from kg2d.errors import ResolutionError

    def boom(*args, **kwargs):
        raise ResolutionError("forced")

    monkeypatch.setattr(cli, "find_bound_states", boom)
    assert run("spectrum", os.path.join(DEMO, "free.ini"), tmp_path) == 3


def test_sweep_free_constant(tmp_path):
    assert run("sweep", os.path.join(DEMO, "free.ini"), tmp_path) == 0
    data = rows(tmp_path / "sweep.csv")
    for m in {r["m"] for r in data}:
        block = [r for r in data if r["m"] == m]
        for col in ("A_plus", "A_minus", "B_threshold", "n_plus", "n_minus"):
            assert len({r[col] for r in block}) == 1


def test_sweep_steps_at_binding_couplings(tmp_path):
    import oracles

    cfg = write(tmp_path, "[potential]\nshape = square_well\ndepth = 3.0\n[run]\nm = 1\nlambda_points = 33\n")
    assert run("sweep", cfg, tmp_path / "o") == 0
    data = rows(tmp_path / "o" / "sweep.csv")
    lam_bind = oracles.binding_couplings(1, 1, 3.0)[0]
    for r in data:
        expected = 1 if float(r["lambda"]) >= lam_bind else 0
        assert int(r["n_plus"]) == expected


def test_sweep_reversed(tmp_path):
    base = "[potential]\nshape = square_well\ndepth = 1.2\n[run]\nm = 0,1\nlambda_points = 9\n"
    fwd = write(tmp_path, base, "f.ini")
    rev = write(tmp_path, base + "lambda_reverse = true\n", "r.ini")
    assert run("sweep", fwd, tmp_path / "f") == 0
    assert run("sweep", rev, tmp_path / "r") == 0
    a = rows(tmp_path / "f" / "sweep.csv")
    b = rows(tmp_path / "r" / "sweep.csv")
    for m in ("0", "1"):
        assert [r for r in a if r["m"] == m][::-1] == [r for r in b if r["m"] == m]


def test_m_override_and_manifest(tmp_path):
    assert run("phases", os.path.join(DEMO, "square_well.ini"), tmp_path, "--m", "1") == 0
    assert {r["m"] for r in rows(tmp_path / "phases.csv")} == {"1"}
    assert run("spectrum", os.path.join(DEMO, "square_well.ini"), tmp_path, "--m", "1") == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["schema_version"] == "1"
    assert set(manifest["runs"]) == {"phases", "spectrum"}


def test_repeat_runs_identical(tmp_path):
    for d in ("a", "b"):
        assert run("spectrum", os.path.join(DEMO, "square_well.ini"), tmp_path / d) == 0
        assert run("phases", os.path.join(DEMO, "square_well.ini"), tmp_path / d) == 0
    for name in ("spectrum.csv", "spectrum_summary.csv", "phases.csv", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "kg2d", "spectrum", "--config",
                           os.path.join(DEMO, "free.ini"), "--out", str(tmp_path), "--m", "0"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert "spectrum_summary.csv" in proc.stdout
