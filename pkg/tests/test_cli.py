import csv
import io
import json
import math

import pytest

from nlgates import analytics as an
from nlgates.cli import main, parse_axis, parse_number, parse_state, UsageError
from nlgates.sweep import CSV_HEADER


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.mark.parametrize("text, value", [
    ("0.25", 0.25), ("pi/64", math.pi / 64), ("2*pi/3", 2 * math.pi / 3), ("pi", math.pi),
])
def test_parse_number(text, value):
    assert parse_number(text) == pytest.approx(value, rel=1e-15)


def test_parsers_reject_garbage():
    with pytest.raises(UsageError):
        parse_number("tau/2")
    with pytest.raises(UsageError):
        parse_axis("w")
    with pytest.raises(UsageError):
        parse_state("012")


def test_formulas_reference(capsys):
    code, out, _ = run(capsys, "formulas", "--xi", "0.2", "--alpha", "0.1", "--format", "json")
    data = json.loads(out)
    assert code == 0
    assert data["p"] == pytest.approx(0.2028260, abs=1e-7)
    assert data["bound_pmax"] == pytest.approx(0.2525168, abs=1e-7)
    assert data["theta"] == pytest.approx(1.111184, abs=1e-6)
    assert data["xi_tilde"] == pytest.approx(1.521175, abs=1e-6)


def test_formulas_maximal_resource(capsys):
    code, out, _ = run(capsys, "formulas", "--xi", "0.1", "--alpha", "0.7853982", "--format", "json")
    data = json.loads(out)
    assert code == 0
    assert data["p"] == pytest.approx(0.5, abs=1e-12)
    assert data["theta"] == pytest.approx(0.1, abs=1e-12)
    assert data["xi_tilde"] == pytest.approx(0.1, abs=1e-12)


@pytest.mark.parametrize("argv", [
    ("formulas", "--xi", "0", "--alpha", "0.1"),
    ("formulas", "--xi", "0.2", "--alpha", "1.0"),
    ("simulate", "--xi", "0.2", "--alpha", "0.1", "--state", "1,1,0,0.5"),
    ("sweep", "--xi", "0.1", "--s-step", "0"),
    ("sweep", "--xi", "0.1", "--s-start", "0.4", "--s-stop", "0.1"),
])
def test_validation_exit_code(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2
    assert out == ""
    assert err.startswith(f"nlgates {argv[0]}: error:")


def test_zero_xi_message(capsys):
    _, _, err = run(capsys, "formulas", "--xi", "0", "--alpha", "0.1")
    assert "xi must be positive" in err


def test_usage_error_from_argparse(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["formulas"])
    assert exc.value.code == 2


def test_simulate_reference(capsys):
    code, out, _ = run(capsys, "simulate", "--xi", "0.2", "--alpha", "0.1", "--state", "00",
                       "--format", "json")
    data = json.loads(out)
    probs = {b["label"]: b["probability"] for b in data["branches"]}
    assert code == 0
    assert probs["Success"] == pytest.approx(0.2028260, abs=1e-7)
    assert probs["Failure"] == pytest.approx(0.7971740, abs=1e-7)
    assert data["classical_bits_sent"] == 2
    assert all(len(b["post_state"]) == 4 for b in data["branches"])


def test_simulate_symmetric(capsys):
    code, out, _ = run(capsys, "simulate", "--symmetric", "--alpha", "0.3", "--format", "json")
    data = json.loads(out)
    assert code == 0
    assert sorted(b["probability"] for b in data["branches"]) == [0.5, 0.5]
    assert sorted(b["realized_xi"] for b in data["branches"]) == [-0.3, 0.3]


def test_simulate_deterministic(capsys):
    code, out, _ = run(capsys, "simulate", "--xi", "0.1", "--alpha", "0.7853982")
    assert code == 0
    assert "probability of realizing the target gate: 1\n" in out


def test_sweep_header_and_order(capsys):
    code, out, _ = run(capsys, "sweep", "--xi", "0.3,0.1", "--s-start", "0.1", "--s-stop", "0.5",
                       "--s-step", "0.1")
    lines = out.splitlines()
    assert code == 0
    assert lines[0] == ",".join(CSV_HEADER)
    rows = read_csv(out)
    keys = [(float(r["xi"]), float(r["sin2_alpha"])) for r in rows]
    assert keys == sorted(keys)
    for r in rows:
        for k in CSV_HEADER[:-1]:
            digits = r[k].lstrip("-").split("e")[0].replace(".", "").lstrip("0")
            assert len(digits) <= 9
        if float(r["sin2_alpha"]) == 0.5:
            assert float(r["p_direct"]) == pytest.approx(0.5, abs=1e-9)
        gap = float(r["p_direct"]) - float(r["p_procrustean"])
        if abs(gap) > 1e-8:
            assert r["better"] == ("direct" if gap > 0 else "procrustean")


@pytest.mark.parametrize("k", [8, 16, 32, 64])
def test_sweep_crossing(capsys, k):
    xi = math.pi / k
    _, out, _ = run(capsys, "sweep", "--xi", f"pi/{k}", "--format", "json")
    rows = [json.loads(line) for line in out.splitlines()]
    crossings = [r["sin2_alpha"] for r in rows if r["crossing"]]
    assert len(crossings) == 1
    assert crossings[0] == pytest.approx(an.alpha_crossing(xi), abs=1e-9)


def test_sweep_small_angle_slope(capsys):
    _, out, _ = run(capsys, "sweep", "--xi", "0.014", "--s-values", "1e-9,1e-8,1e-7")
    for r in read_csv(out):
        assert float(r["p_direct"]) / float(r["sin2_alpha"]) == pytest.approx(5102.4, rel=5e-3)


def test_optimal_table(capsys):
    code, out, _ = run(capsys, "optimal", "--xi", "0.014,pi/8", "--format", "csv")
    rows = read_csv(out)
    assert code == 0
    assert float(rows[0]["s_opt_numeric"]) == pytest.approx(0.0138076, abs=1e-6)
    assert float(rows[0]["p_max_numeric"]) == pytest.approx(0.9727665, abs=1e-6)
    assert float(rows[0]["s_opt_paper"]) == pytest.approx(an.alpha_opt_paper(0.014), rel=1e-8)
    assert rows[0]["discrepancy_flag"] == "true"
    assert float(rows[1]["s_crossing"]) == pytest.approx(0.2928932, abs=1e-7)


def test_output_dir_env(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("NLGATES_OUT_DIR", str(tmp_path))
    code, out, _ = run(capsys, "sweep", "--xi", "0.1", "--s-values", "0.1,0.2", "--out", "sub/s.csv")
    assert code == 0 and out == ""
    text = (tmp_path / "sub" / "s.csv").read_text()
    assert text.splitlines()[0] == ",".join(CSV_HEADER)


def test_same_config_same_bytes(capsys):
    argv = ("sweep", "--xi", "pi/16,0.2", "--s-step", "0.05")
    assert run(capsys, *argv)[1] == run(capsys, *argv)[1]


def test_verify_identity(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "identity", "--samples", "1000", "--seed", "42")
    reports = [json.loads(line) for line in out.splitlines()]
    assert code == 0
    assert all(r["passed"] for r in reports)
    assert reports[0]["max_residual"] < 1e-10


def test_verify_tightness(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "tightness", "--xi", "0.2")
    (report,) = [json.loads(line) for line in out.splitlines()]
    assert code == 0 and report["passed"] and report["tolerance"] == 0.02


def test_verify_capability_never_fails_exit(capsys):
    # a violated claim is reported on stderr and in the record, not in the exit code
    code, out, err = run(capsys, "verify", "--suite", "capability", "--xi", "0.05", "--alpha", "0.05",
                         "--restarts", "5")
    (report,) = [json.loads(line) for line in out.splitlines()]
    assert code == 0
    assert report["passed"] is False and report["hard"] is False
    assert report["detail"]["margin"] < 0
    assert "does not affect exit status" in err
