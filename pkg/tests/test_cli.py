"""Command-line front end: exit codes, output formats and manifests."""

import csv
import io
import json
import math
import subprocess
import sys

import pytest

import entropica.cli as cli
from entropica.cli import RunManifest, run_subcommand
from entropica.reports import make_report

ENV = {}


def run(argv, capsys, environ=None):
    code, manifest = run_subcommand(argv, ENV if environ is None else environ)
    out, err = capsys.readouterr()
    return code, manifest, out, err


# invocation -> expected exit code
GOLDEN_CORPUS = [
    (["doubling", "--density", "uniform(0,1)"], 0),
    (["entropy", "--density", "gaussian(0,1)", "--fisher", "--radius", "1"], 0),
    (["check", "golden", "--density", "gaussian(0,1)"], 0),
    (["check", "submodularity", "--density", "uniform(0,1)", "--density", "gaussian(0,1)"], 2),
    (["check", "superadditivity", "--density", "gaussian(0,1)", "--density", "laplace(0,1)", "--k", "2"], 0),
    (["check", "superadditivity", "--density", "gaussian(0,1)", "--k", "1"], 2),
    (["check", "mi_ratio", "--density", "uniform(-1,1)", "--noise", "laplace(0,1)", "--power", "1"], 0),
    (["check", "mi_ratio", "--density", "gaussian(0,4)", "--noise", "laplace(0,1)", "--power", "1"], 2),
    (["robustness", "--noise", "gaussian(0,1)", "--power", "1"], 0),
    (["capacity", "--noise", "uniform(-1.7320508,1.7320508)", "--power", "1", "--ba-max-iterations", "2"], 3),
    (["mimo", "--channel", '{"H": [[1]], "N": [[1]], "P": 1}'], 0),
    (["mimo", "--channel", '{"H": [[1]], "P": 1}'], 2),
    (["sweep", "--params", "2,1,0.5,0.25"], 0),
    (["sweep", "--params", "2,x"], 2),
    (["entropy", "--density", "gaussian(0)"], 2),
    (["entropy", "--density", "file:/nonexistent.csv"], 2),
    (["doubling", "--density", "uniform(0,1)", "--grid-points", "1000"], 2),
    (["frobnicate"], 2),
    (["suite", "--only", "3,8"], 0),
    (["suite", "--only", "12"], 2),
]


@pytest.mark.parametrize("argv,code", GOLDEN_CORPUS, ids=[" ".join(a)[:60] for a, _ in GOLDEN_CORPUS])
def test_exit_code_contract(argv, code, capsys):
    assert run(argv, capsys)[0] == code


def test_doubling_text(capsys):
    code, manifest, out, _ = run(["doubling", "--density", "uniform(0,1)"], capsys)
    assert code == 0
    assert "sigma=1.35914" in out
    assert manifest.reports[0]["sigma"] == pytest.approx(math.e / 2, abs=1e-3)


def test_robustness_manifest(capsys):
    code, manifest, out, _ = run(["robustness", "--noise", "gaussian(0,1)", "--power", "1", "--format", "json"], capsys)
    assert code == 0
    rep = json.loads(out)["reports"][0]
    assert rep["multiplicative_factor"] == pytest.approx(0.2, abs=1e-9)
    assert [b["satisfied"] for b in rep["bound_reports"]] == [True, True, True]
    assert rep["capacity_estimate"] == pytest.approx(0.5 * math.log(2), abs=2e-3)


def test_robustness_csv_header(capsys):
    _, _, out, _ = run(["robustness", "--noise", "gaussian(0,1)", "--snr", "1", "--snr", "4", "--format", "csv"], capsys)
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["snr", "capacity", "gaussian_mi", "additive_gap", "mult_factor", "mult_bound_satisfied"]
    assert len(rows) == 3


def test_robustness_corpus(tmp_path, capsys):
    corpus = tmp_path / "corpus.json"
    corpus.write_text(json.dumps([{"noise_family": "gaussian", "params": [0, 1], "P": 0.5}, {"noise_family": "uniform", "params": [-1, 1], "P": 2}]))
    code, manifest, _, _ = run(["robustness", "--corpus", str(corpus)], capsys)
    assert code == 0 and len(manifest.reports) == 2
    corpus.write_text(json.dumps([{"noise_family": "gaussian"}]))
    assert run(["robustness", "--corpus", str(corpus)], capsys)[0] == 2


def test_sweep_csv(capsys):
    _, _, out, _ = run(["sweep", "--params", "2,1,0.5,0.25", "--format", "csv"], capsys)
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["parameter", "doubling_gap", "levy_distance", "relative_entropy"]
    gaps = [float(r[1]) for r in rows[1:]]
    assert gaps == sorted(gaps)


def test_mac_corners_csv(tmp_path, capsys):
    trip = tmp_path / "t.json"
    trip.write_text(json.dumps({"v_probs": [1], "x1": ["gaussian(0,1)"], "x2": ["gaussian(0,1)"], "P1": 1, "P2": 1}))
    code, _, out, _ = run(["mac", "--triplet", str(trip), "--noise", "gaussian(0,1)", "--corners", "--format", "csv"], capsys)
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0
    assert rows[0] == ["R1", "R2"] and len(rows) == 6


def test_mac_bad_triplet(tmp_path, capsys):
    trip = tmp_path / "t.json"
    trip.write_text(json.dumps({"v_probs": [1], "x1": ["gaussian(0,1)"], "x2": ["gaussian(0,1)"], "P1": 0.5, "P2": 1}))
    assert run(["mac", "--triplet", str(trip), "--noise", "gaussian(0,1)"], capsys)[0] == 2


def test_violation_exit_code(monkeypatch, capsys):
    monkeypatch.setattr(cli, "check_epi_doubling", lambda f, tol: make_report("epi_doubling", 0.5, 1.0, tol))
    code, manifest, out, _ = run(["check", "epi_doubling", "--density", "gaussian(0,1)"], capsys)
    assert code == 1
    assert "VIOLATED" in out.upper()
    assert manifest.reports[0]["satisfied"] is False


def test_nonconvergence_beats_violation():
    out = cli.Outcome(violated=True, nonconverged=True)
    assert out.exit_code == 3


def test_capacity_pmf_out(tmp_path, capsys):
    pmf = tmp_path / "pmf.csv"
    code, manifest, _, _ = run(["capacity", "--noise", "gaussian(0,1)", "--power", "1", "--pmf-out", str(pmf)], capsys)
    assert code == 0
    rows = list(csv.reader(pmf.open()))
    assert rows[0] == ["x", "p"]
    assert sum(float(r[1]) for r in rows[1:]) == pytest.approx(1.0, abs=1e-9)


def test_json_round_trip_and_determinism(tmp_path, capsys):
    argv = ["check", "combined", "--density", "laplace(0,1)", "--format", "json", "--seed", "4"]
    first = run(argv, capsys)[2]
    second = run(argv, capsys)[2]
    a, b = json.loads(first), json.loads(second)
    a.pop("timestamp"), b.pop("timestamp")
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    m = RunManifest.from_json(first)
    assert m.to_json() == first.rstrip("\n")
    assert m.config.seed == 4 and m.version


def test_env_and_out_file(tmp_path, capsys):
    out_file = tmp_path / "o.json"
    code, manifest, out, _ = run(
        ["check", "golden", "--density", "gaussian(0,1)", "--out", str(out_file)],
        capsys,
        environ={"ENTROPICA_FORMAT": "json", "ENTROPICA_TOL": "0.002"},
    )
    assert code == 0 and out == ""
    data = json.loads(out_file.read_text())
    assert data["config"]["tolerance_nats"] == 0.002
    assert data["reports"][0]["tolerance"] == 0.002


def test_text_six_significant_digits(capsys):
    _, _, out, _ = run(["check", "golden", "--density", "gaussian(0,1)"], capsys)
    assert "slack=0.105968 " in out


def test_usage_error_message(capsys):
    code, manifest, _, err = run(["entropy", "--density", "bogus(1)"], capsys)
    assert code == 2 and manifest is None
    assert "unknown family" in err and "^" in err


def test_console_script():
    proc = subprocess.run(
        [sys.executable, "-m", "entropica.cli", "check", "golden", "--density", "gaussian(0,1)", "--format", "csv"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0].startswith("name,lhs,rhs,slack")
