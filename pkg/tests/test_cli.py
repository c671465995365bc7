import json
import subprocess
import sys

import pytest

from bogoexp.cli import RunConfig, main, parse_config
from bogoexp.errors import ConfigError


def run_cli(*args, tmp=None):
    return subprocess.run([sys.executable, "-m", "bogoexp", *args], capture_output=True, text=True, cwd=tmp)


def test_config_rejects_small_cutoff():
    with pytest.raises(ConfigError, match="3\\*order"):
        RunConfig(command="expand", order=2, nmax=6)
    with pytest.raises(ConfigError):
        RunConfig(command="verify", study="energy", nmax=8, Nlist=(8, 10, 12, 14))


def test_flags_override_config_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"order": 2, "nmax": 9, "level": 1}))
    c = parse_config(["expand", "--config", str(cfg), "--nmax", "11"])
    assert (c.order, c.nmax, c.level) == (2, 11, 1)


def test_exit_codes(capsys):
    assert main(["expand", "--nmax", "3"]) == 4
    assert main(["bogus"]) == 4
    assert main(["hartree", "--model", "missing.json"]) == 4
    big = '{"torus": {"d": 2, "Kcut": 4, "vhat": [[[0, 0], 1.0]]}}'
    assert main(["hartree", "--model", big]) == 3
    err = capsys.readouterr().err
    assert '"code": "resource_guard"' in err


def test_selftest_on_torus_fixture():
    r = run_cli("selftest", "--deterministic")
    assert r.returncode == 0, r.stderr
    assert json.loads(r.stdout)["report"]["pass"] is True


def test_expand_free_fixture_has_zero_corrections():
    r = run_cli("expand", "--model", "free", "--order", "2")
    assert r.returncode == 0
    E = json.loads(r.stdout)["report"]["E"]
    assert E[1:] == [0.0, 0.0]


def test_verify_energy_slope_and_determinism(tmp_path):
    outs = []
    for name in ("a", "b"):
        r = run_cli("verify", "energy", "--order", "1", "--deterministic", "--out", str(tmp_path / name))
        assert r.returncode == 0, r.stderr
        outs.append(r.stdout)
    rep = json.loads(outs[0])["report"]
    assert rep["pass"] is True and 1.8 <= rep["slope"] <= 2.3
    assert outs[0] == outs[1]
    for f in ("energy.csv", "energy.json", "verify.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_rdm_and_bogoliubov_commands(tmp_path):
    r = run_cli("rdm", "--nmax", "12")
    assert r.returncode == 0
    assert json.loads(r.stdout)["report"]["closed_form_deviation"] < 1e-6
    r = run_cli("bogoliubov", "--level", "1")
    levels = json.loads(r.stdout)["report"]["levels"]
    assert [lv["multiplicity"] for lv in levels] == [1, 2]
    r = run_cli("expand", "--dump-operators", "--out", str(tmp_path))
    assert (tmp_path / "P_1.txt").read_text().startswith('{"M": 3')
