import json
import math
import subprocess
import sys

import pytest

from excursion_tails.cli import build_parser, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_maxdist(capsys, tmp_path):
    path = tmp_path / "m.json"
    code, out, _ = run(capsys, "maxdist", "--x", "1.5", "--x", "6", "--json", str(path))
    assert code == 0
    rows = json.loads(path.read_text())["rows"]
    assert rows[0]["tail"] == pytest.approx(0.177745, abs=1e-6)
    assert rows[1]["ratio"] == pytest.approx(0.921, abs=1e-3)
    assert set(rows[0]) >= {"x", "cdf", "tail", "trunc_bound"}
    assert "# command=excursion-tails maxdist" in out


@pytest.mark.parametrize("argv", [
    ["maxdist", "--x"],
    ["maxdist"],
    ["maxdist", "--x", "-1"],
    ["maxdist", "--x", "0"],
    ["gamma", "walpha", "--method", "closed"],
    ["gamma", "area", "--alpha", "2"],
    ["gamma", "volume"],
    ["gamma", "eta", "--method", "bounds"],
    ["simulate", "max"],
    ["simulate", "max", "--x", "-0.5"],
])
def test_usage_errors(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code != 0


def test_gamma_eta_all(capsys, tmp_path):
    path = tmp_path / "g.json"
    code, out, _ = run(capsys, "gamma", "eta", "--method", "all", "--n", "64", "--json", str(path))
    assert code == 0
    rows = json.loads(path.read_text())["rows"]
    assert [r["method"] for r in rows] == ["closed_form", "numeric"]
    assert f"{rows[0]['gamma']:.7g}" == "0.4472136"
    assert "0.4472136" in out


def test_gamma_zeta_all(capsys, tmp_path):
    path = tmp_path / "z.json"
    code, _, _ = run(capsys, "gamma", "zeta", "--method", "all", "--n", "64", "--json", str(path))
    assert code == 0
    closed, numeric, bounds = json.loads(path.read_text())["rows"]
    assert f"{closed['gamma']:.7g}" == "0.1825742"
    assert f"{bounds['lo']:.7g}" == "0.1825742" and f"{bounds['hi']:.7g}" == "0.3651484"
    assert bounds["lo"] - 1e-3 <= numeric["gamma"] <= bounds["hi"]


def test_gamma_w2_equals_eta(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(capsys, "gamma", "walpha", "--alpha", "2", "--method", "closed", "--json", str(a))
    run(capsys, "gamma", "eta", "--method", "closed", "--json", str(b))
    ga = json.loads(a.read_text())["rows"][0]["gamma"]
    gb = json.loads(b.read_text())["rows"][0]["gamma"]
    assert ga == pytest.approx(gb, abs=1e-15)
    assert f"{ga:.7g}" == "0.4472136"


def test_simulate_max_rows(capsys, tmp_path):
    from excursion_tails.excursion_mc import McConfig, estimate_tail
    from excursion_tails.exact_dist import tail_max
    from excursion_tails.functionals import functional

    path = tmp_path / "s.json"
    code, _, _ = run(capsys, "simulate", "max", "--x", "1.0", "1.5", "--samples", "20000",
                     "--n", "256", "--seed", "3", "--json", str(path))
    assert code == 0
    data = json.loads(path.read_text())
    assert data["manifest"]["seed"] == 3 and data["manifest"]["samples"] == 20000
    cfg = McConfig(n=256, samples=20000, seed=3)
    for row in data["rows"]:
        est = estimate_tail(functional("max"), row["x"], cfg, gamma=0.5)
        assert row["p_hat"] == est.p_hat and row["stderr"] == est.stderr
        assert row["ratio"] == est.log_tail_ratio
        assert row["exact_tail"] == tail_max(row["x"])


def test_simulate_deterministic_bytes(tmp_path):
    cmd = [sys.executable, "-m", "excursion_tails", "simulate", "area", "--x", "0.8",
           "--samples", "5000", "--n", "128", "--seed", "7"]
    env = {"SOURCE_DATE_EPOCH": "1700000000", "PATH": ""}
    a = subprocess.run(cmd, capture_output=True, env=env, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, env=env, check=True).stdout
    assert a == b and b"p_hat" in a


def test_simulate_walpha_interval(capsys, tmp_path):
    path = tmp_path / "w.json"
    csv_path = tmp_path / "w.csv"
    code, _, _ = run(capsys, "simulate", "walpha", "--alpha", "0.75", "--x", "1.2",
                     "--samples", "2000", "--n", "128", "--seed", "1",
                     "--json", str(path), "--csv", str(csv_path))
    assert code == 0
    row = json.loads(path.read_text())["rows"][0]
    assert row["ratio"] is None
    assert row["gamma"].startswith("[0.6324555")
    assert row["ratio_lo"] < row["ratio_hi"]
    assert "# seed=1" in csv_path.read_text()


def test_simulate_seed_printed_when_omitted(capsys):
    code, out, _ = run(capsys, "simulate", "area", "--x", "0.5", "--samples", "100", "--n", "32")
    assert code == 0
    seed = out.split("seed=")[1].split()[0]
    assert seed.isdigit()


def test_digits_flag(capsys):
    _, out, _ = run(capsys, "maxdist", "--x", "1.5", "--digits", "3")
    assert "0.178" in out and "0.177745" not in out


def test_papertable(capsys, tmp_path):
    path = tmp_path / "p.json"
    code, _, err = run(capsys, "papertable", "--n", "64", "--json", str(path))
    rows = {r["functional"]: r for r in json.loads(path.read_text())["rows"]}
    assert rows["max"]["closed"] == 0.5
    assert f"{rows['walpha(alpha=3)']['closed']:.7g}" == "0.3779645"
    assert 0.1825742 - 1e-3 <= rows["zeta"]["numeric"] <= 0.3651484
    for a in ("0.6", "0.75", "0.9"):
        assert rows[f"walpha(alpha={a})"]["factor"] <= 1.051
    assert code == 0, err


@pytest.mark.parametrize("argv", [["gamma", "area"], ["simulate", "area", "--x", "1", "--x", "2"],
                                  ["maxdist", "--x", "1"], ["papertable"]])
def test_parser_accepts(argv):
    args = build_parser().parse_args(argv)
    assert args.command == argv[0] and args.digits == 7
