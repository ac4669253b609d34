import json
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from qmchannel.cli import main

SCHEMA_DIR = Path(__file__).resolve().parents[1] / "docs" / "schemas"


def run_cli(args, capsys):
    code = main(args)
    out = capsys.readouterr().out
    payload = json.loads(out) if out.strip() else None
    return code, payload


def check_schema(payload, name):
    schema = json.loads((SCHEMA_DIR / name).read_text())
    jsonschema.validate(payload, schema)


def test_solve_defaults(tmp_path, capsys):
    out = tmp_path / "run"
    code, payload = run_cli(["solve", "--k", "5", "--out", str(out)], capsys)
    assert code == 0
    check_schema(payload, "solve.schema.json")
    assert payload["energies"][0] == pytest.approx(0.5, rel=1e-4)
    assert payload["energies"] == sorted(payload["energies"])
    assert max(payload["residual_norms"]) <= 1e-6
    on_disk = json.loads((out / "solve.json").read_text())
    assert on_disk == payload
    csv_text = (out / "eigenstates.csv").read_text()
    assert "\r" not in csv_text
    lines = csv_text.splitlines()
    assert lines[0] == "x,psi_0,psi_1,psi_2,psi_3,psi_4"
    assert len(lines) == payload["grid"]["n"] + 1
    assert not list(out.glob("*.tmp"))


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# device width\n"
        "gamma = 0.5\n"
        "seed = 99\n"
        "grid_n = 1024\n"
    )
    code, payload = run_cli(
        ["measure", "--config", str(cfg), "--out", str(tmp_path / "a")], capsys
    )
    assert code == 0 and payload["gamma"] == 0.5
    assert payload["grid"]["n"] == 1024
    code, payload = run_cli(
        ["measure", "--config", str(cfg), "--gamma", "1.0", "--out", str(tmp_path / "b")],
        capsys,
    )
    assert code == 0 and payload["gamma"] == 1.0  # flags win


def test_measure_matches_closed_forms(tmp_path, capsys):
    code, payload = run_cli(
        ["measure", "--gamma", "1.0", "--out", str(tmp_path / "m")], capsys
    )
    assert code == 0
    check_schema(payload, "measure.schema.json")
    assert payload["rel_err_mean"] <= 1e-3
    assert payload["rel_err_dev"] <= 1e-3
    assert payload["pd"]["mean"] == pytest.approx(5.0 / 6.0, rel=1e-3)
    assert payload["in"]["mean"] == pytest.approx(0.5, rel=1e-4)
    assert payload["in"]["dev"] <= 1e-3


def test_measure_ideal_device(tmp_path, capsys):
    code, payload = run_cli(
        ["measure", "--gamma", "0", "--out", str(tmp_path / "m0")], capsys
    )
    assert code == 0
    assert payload["closed_form"]["dev_pd"] == 0.0
    assert abs(payload["pd"]["mean"] - payload["in"]["mean"]) <= 1e-8
    assert abs(payload["pd"]["dev"] - payload["in"]["dev"]) <= 1e-8
    assert payload["rel_err_mean"] <= 1e-4  # discretization-level, not exact


def test_sweep_default_widths(tmp_path, capsys):
    code, payload = run_cli(["sweep", "--out", str(tmp_path / "s1")], capsys)
    assert code == 0
    assert [row["gamma"] for row in payload["rows"]] == [0.1, 0.5, 1.0, 2.0]
    for row in payload["rows"]:
        assert row["rel_err_mean"] <= 1e-3
        assert row["rel_err_dev"] <= 1e-3
    csv_lines = (tmp_path / "s1" / "sweep.csv").read_text().splitlines()
    assert csv_lines[0] == (
        "gamma,mean_pd_numeric,dev_pd_numeric,mean_pd_closed,dev_pd_closed,"
        "rel_err_mean,rel_err_dev"
    )
    assert len(csv_lines) == 5
    # byte-for-byte reproducible given the same config
    code, _ = run_cli(["sweep", "--out", str(tmp_path / "s2")], capsys)
    assert code == 0
    assert (tmp_path / "s1" / "sweep.csv").read_bytes() == (
        tmp_path / "s2" / "sweep.csv"
    ).read_bytes()


def test_sweep_including_ideal_width(tmp_path, capsys):
    code, payload = run_cli(
        ["sweep", "--gammas", "0,1", "--out", str(tmp_path / "s")], capsys
    )
    assert code == 0
    ideal, blurred = payload["rows"]
    assert ideal["dev_pd_closed"] == 0.0
    assert ideal["mean_pd_numeric"] == pytest.approx(0.5, rel=1e-4)
    assert ideal["dev_pd_numeric"] < 1e-6
    assert blurred["rel_err_mean"] <= 1e-3 and blurred["rel_err_dev"] <= 1e-3


def test_sample_position(tmp_path, capsys):
    out = tmp_path / "sp"
    code, payload = run_cli(
        [
            "sample", "--target", "position", "--gamma", "0",
            "--n-samples", "20000", "--seed", "4", "--out", str(out),
        ],
        capsys,
    )
    assert code == 0
    check_schema(payload, "sample.schema.json")
    assert payload["exp"]["dev"] == pytest.approx(1.0 / np.sqrt(2.0), rel=0.02)
    assert len((out / "samples.csv").read_text().splitlines()) == 20_001
    assert (out / "empirical.csv").read_text().splitlines()[0] == "value,frequency"


def test_sample_energy_with_noise(tmp_path, capsys):
    code, payload = run_cli(
        [
            "sample", "--target", "energy", "--gamma", "1", "--noise-width", "0.1",
            "--n-samples", "5000", "--seed", "8", "--out", str(tmp_path / "se"),
        ],
        capsys,
    )
    assert code == 0
    check_schema(payload, "sample.schema.json")
    assert payload["noise_width"] == 0.1
    assert payload["exp"]["mean"] == pytest.approx(5.0 / 6.0, rel=0.05)


def test_confront_scenario_exit_codes(tmp_path, capsys):
    args = ["confront", "--gamma", "1", "--seed", "7", "--n-samples", "100000"]
    code, refuted = run_cli(
        args + ["--against", "in", "--out", str(tmp_path / "in")], capsys
    )
    assert code == 4
    check_schema(refuted, "confront.schema.json")
    assert refuted["verdict"] == "refuted"
    assert refuted["suggested_upgradings"] == ["u1", "u2", "u3"]
    assert refuted["pd"] is None and refuted["closed_form"] is None

    code, confirmed = run_cli(
        args + ["--against", "pd", "--out", str(tmp_path / "pd")], capsys
    )
    assert code == 0
    check_schema(confirmed, "confront.schema.json")
    assert confirmed["verdict"] == "confirmed"
    assert confirmed["suggested_upgradings"] == []
    assert confirmed["pd"]["mean"] == pytest.approx(5.0 / 6.0, rel=1e-3)
    assert confirmed["closed_form"]["mean_pd"] == pytest.approx(5.0 / 6.0, rel=1e-12)
    # both analyses saw the same simulated data
    assert confirmed["exp"] == refuted["exp"]
    on_disk = json.loads((tmp_path / "pd" / "report.json").read_text())
    assert on_disk == confirmed


def test_confront_position_target(tmp_path, capsys):
    code, payload = run_cli(
        [
            "confront", "--target", "position", "--gamma", "0.5", "--against", "pd",
            "--seed", "5", "--n-samples", "50000", "--out", str(tmp_path / "cp"),
        ],
        capsys,
    )
    assert code == 0
    assert payload["verdict"] == "confirmed"
    # blurred position spread: sqrt(sigma^2 + gamma^2)
    assert payload["pd"]["dev"] == pytest.approx(np.sqrt(0.75), rel=1e-3)
    assert payload["closed_form"] is None  # closed forms cover the energy target


def test_config_error_exit_codes(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("gamma = 0.5\nwavelength = 3\n")
    code, payload = run_cli(
        ["measure", "--config", str(cfg), "--out", str(tmp_path / "x")], capsys
    )
    assert code == 2 and payload["error"] == "config-error"

    cfg.write_text("gamma = fast\n")
    code, payload = run_cli(
        ["measure", "--config", str(cfg), "--out", str(tmp_path / "x")], capsys
    )
    assert code == 2 and payload["error"] == "config-error"

    code, payload = run_cli(
        ["measure", "--gamma", "-1", "--out", str(tmp_path / "x")], capsys
    )
    assert code == 2 and payload["error"] == "config-error"

    code, payload = run_cli(
        ["measure", "--config", str(tmp_path / "missing.cfg"), "--out", str(tmp_path / "x")],
        capsys,
    )
    assert code == 2 and payload["error"] == "config-error"


def test_numeric_error_exit_codes(tmp_path, capsys):
    code, payload = run_cli(
        ["solve", "--domain", "1.4", "--grid-n", "512", "--out", str(tmp_path / "d)")],
        capsys,
    )
    assert code == 3 and payload["error"] == "domain-too-small"

    code, payload = run_cli(
        [
            "confront", "--gamma", "2", "--k-max", "2",
            "--n-samples", "1000", "--out", str(tmp_path / "k"),
        ],
        capsys,
    )
    assert code == 3 and payload["error"] == "k-max-too-small"


def test_missing_subcommand_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def _well_table(path, n=301, height=1.0e4):
    xs = np.linspace(-1.5, 1.5, n)
    lines = ["x,V"]
    for x in xs:
        v = 0.0 if abs(x) <= 1.0 else height
        lines.append(f"{x!r},{v!r}")
    path.write_text("\n".join(lines) + "\n")


def test_potential_table_solve(tmp_path, capsys):
    table = tmp_path / "well.csv"
    _well_table(table)
    code, payload = run_cli(
        ["solve", "--potential", str(table), "--k", "3", "--out", str(tmp_path / "w")],
        capsys,
    )
    assert code == 0
    assert payload["grid"]["n"] == 301
    e1 = np.pi**2 / 8.0
    for n, e in enumerate(payload["energies"], start=1):
        assert e == pytest.approx(n**2 * e1, rel=2e-2)


def test_potential_table_rejects_bad_input(tmp_path, capsys):
    table = tmp_path / "bad.csv"
    table.write_text("x,V\n0.0,1.0\n0.1,1.0\n0.25,1.0\n0.3,1.0\n"
                     "0.4,1.0\n0.5,1.0\n0.6,1.0\n0.7,1.0\n")
    code, payload = run_cli(
        ["solve", "--potential", str(table), "--out", str(tmp_path / "x")], capsys
    )
    assert code == 2 and payload["error"] == "config-error"  # non-uniform x

    table.write_text("x,V\n0.0,1.0\n0.1,1.0\n")
    code, payload = run_cli(
        ["solve", "--potential", str(table), "--out", str(tmp_path / "x")], capsys
    )
    assert code == 2  # too few rows


def test_sweep_requires_harmonic(tmp_path, capsys):
    table = tmp_path / "well.csv"
    _well_table(table)
    code, payload = run_cli(
        ["sweep", "--potential", str(table), "--out", str(tmp_path / "x")], capsys
    )
    assert code == 2 and payload["error"] == "config-error"


def test_si_units(tmp_path, capsys):
    code, payload = run_cli(
        ["solve", "--units", "si", "--k", "1", "--out", str(tmp_path / "si")], capsys
    )
    assert code == 0
    hbar_si = 1.054571817e-34
    assert payload["units"]["hbar"] == hbar_si
    assert payload["energies"][0] == pytest.approx(0.5 * hbar_si, rel=1e-3)


def test_config_hash_tracks_resolved_config(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("gamma = 0.25\n")
    _, via_file = run_cli(
        ["measure", "--config", str(cfg), "--out", str(tmp_path / "a")], capsys
    )
    _, via_flag = run_cli(
        ["measure", "--gamma", "0.25", "--out", str(tmp_path / "b")], capsys
    )
    assert via_file["config_hash"] == via_flag["config_hash"]
    _, other = run_cli(
        ["measure", "--gamma", "0.3", "--out", str(tmp_path / "c")], capsys
    )
    assert other["config_hash"] != via_flag["config_hash"]
