import csv
import io
import json
import math
import subprocess
import sys

import pytest

from buffon_walk.cli import (
    CSV_COLUMNS,
    EXIT_CONFIG,
    EXIT_IO,
    ResultEnvelope,
    dumps,
    emit,
    main,
    parse_args,
    run_experiment,
)


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def strip_duration(text):
    d = json.loads(text)
    d.pop("duration_s")
    return d


def test_needle_json(capsys):
    code, out, _ = run_cli(capsys, "needle", "--ds", "1", "--spacing", "2", "--drops", "1000000", "--seed", "42")
    assert code == 0
    d = json.loads(out)
    r = d["results"][0]
    assert r["analytic"] == pytest.approx(0.3183099, abs=1e-7)
    assert abs(r["merged"]["estimate"] - 1 / math.pi) < 0.002
    assert d["seeds"] == [42]
    assert list(d) == ["artifact", "version", "experiment", "config", "seeds", "results", "duration_s"]


def test_walk_json(capsys):
    code, out, _ = run_cli(
        capsys, "walk", "--ds", "1", "--room-l", "50", "--room-b", "30", "--p-theta", "0",
        "--steps", "100000", "--seed", "7",
    )
    assert code == 0
    r = json.loads(out)["results"][0]
    assert r["analytic"] == pytest.approx(0.0127324, abs=1e-7)
    assert r["merged"]["n"] == 99_000
    assert len(r["merged"]["x_histogram"]) == 20
    assert len(r["merged"]["angle_histogram"]) == 36


@pytest.mark.parametrize(
    "argv",
    [
        ["walk", "--steps", "20000", "--replicas", "2", "--seed", "5"],
        ["needle", "--drops", "20000", "--seed", "5"],
        ["noodle", "--drops", "20000", "--seed", "5"],
        ["compare", "--steps", "20000", "--drops", "20000", "--ds", "2", "--spacing", "10"],
        ["sweep", "--values", "0.5,1", "--drops", "10000", "--replicas", "2"],
    ],
)
def test_commands_are_deterministic_and_round_trip(capsys, argv):
    _, a, _ = run_cli(capsys, *argv)
    _, b, _ = run_cli(capsys, *argv)
    assert strip_duration(a) == strip_duration(b)
    da, db = json.loads(a), json.loads(b)
    da["duration_s"] = db["duration_s"] = 0.0
    assert dumps(da) == dumps(db)
    # parse -> serialise reproduces the bytes
    assert dumps(json.loads(a)) + "\n" == a


def test_workers_do_not_change_output(capsys):
    argv = ["walk", "--steps", "20000", "--replicas", "3"]
    _, a, _ = run_cli(capsys, *argv)
    _, b, _ = run_cli(capsys, *argv, "--workers", "3")
    assert strip_duration(a) == strip_duration(b)


def test_compare_reports_three_methods(capsys):
    _, out, _ = run_cli(capsys, "compare", "--steps", "20000", "--drops", "20000", "--ds", "1", "--spacing", "20")
    d = json.loads(out)
    assert [r["method"] for r in d["results"]] == ["walk", "needle", "noodle"]
    for r in d["results"]:
        assert r["analytic"] == pytest.approx(2 / (20 * math.pi))
        assert r["merged"]["rel_error"] == pytest.approx(
            abs(r["merged"]["estimate"] - r["analytic"]) / r["analytic"]
        )


def test_sweep_csv_rows(capsys):
    code, out, _ = run_cli(
        capsys, "sweep", "--values", "0.5,1,2", "--replicas", "2", "--drops", "1000", "--format", "csv"
    )
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) == 7
    assert [r[3] for r in rows[1:]] == ["0.5", "0.5", "1.0", "1.0", "2.0", "2.0"]
    assert out.endswith("\r\n")


def test_empty_sweep_csv_is_header_only(capsys):
    _, out, _ = run_cli(capsys, "sweep", "--values", "", "--format", "csv")
    assert out == ",".join(CSV_COLUMNS) + "\r\n"


def test_sweep_over_spacing(capsys):
    _, out, _ = run_cli(capsys, "sweep", "--vary", "spacing", "--values", "4,8", "--ds", "1", "--drops", "1000")
    d = json.loads(out)
    assert [r["parameter"] for r in d["results"]] == ["L", "L"]
    assert d["results"][1]["analytic"] == pytest.approx(2 / (8 * math.pi))


def test_csv_quoting():
    env = ResultEnvelope("needle", {}, [0], [
        {"method": 'a,"b"', "parameter": None, "value": None, "analytic": None,
         "merged": {}, "replicas": [{"replica": 0, "seed": 0, "n": 1, "estimate": 0.5}]}
    ])
    text = emit(env, "csv", None)
    row = list(csv.reader(io.StringIO(text)))[1]
    assert row[1] == 'a,"b"'
    assert row[10] == ""


@pytest.mark.parametrize(
    "argv",
    [
        ["walk", "--p-theta", "1.5"],
        ["walk", "--link-x", "60"],
        ["needle", "--spacing", "0"],
        ["needle", "--drops", "0"],
        ["noodle", "--drops", "1"],
        ["walk", "--x0", "1"],
        ["walk", "--replicas", "0"],
        ["needle", "--format", "xml"],
    ],
)
def test_config_errors_exit_2(capsys, argv):
    code, out, err = run_cli(capsys, *argv)
    assert code == EXIT_CONFIG
    assert out == ""
    assert err


def test_config_error_names_field(capsys):
    _, _, err = run_cli(capsys, "walk", "--p-theta", "1.5")
    assert "p_theta" in err


def test_unwritable_output_exit_3(capsys, tmp_path):
    code, _, err = run_cli(capsys, "needle", "--drops", "10", "--out", str(tmp_path / "no" / "x.json"))
    assert code == EXIT_IO
    assert "x.json" in err


def test_output_file(capsys, tmp_path):
    path = tmp_path / "out.json"
    code, out, _ = run_cli(capsys, "needle", "--drops", "10", "--out", str(path))
    assert code == 0 and out == ""
    assert json.loads(path.read_text())["experiment"] == "needle"


def test_config_file_with_flag_override(tmp_path):
    f = tmp_path / "sweep.cfg"
    f.write_text("# grid\nvalues = 0.5, 1, 2\nspacing = 10\ndrops = 5000\nseed = 9\n")
    cfg = parse_args(["sweep", "--config", str(f), "--seed", "11"])
    assert cfg.params["values"] == [0.5, 1.0, 2.0]
    assert cfg.params["L"] == 10.0
    assert cfg.params["drops"] == 5000
    assert cfg.seed == 11


def test_config_file_unknown_key(capsys, tmp_path):
    f = tmp_path / "bad.cfg"
    f.write_text("colour = blue\n")
    code, _, err = run_cli(capsys, "needle", "--config", str(f))
    assert code == EXIT_CONFIG
    assert "colour" in err


def test_envelope_echoes_seeds(capsys):
    _, out, _ = run_cli(capsys, "needle", "--drops", "100", "--replicas", "3", "--seed", "40")
    d = json.loads(out)
    assert d["seeds"] == [40, 41, 42]
    assert [r["seed"] for r in d["results"][0]["replicas"]] == [40, 41, 42]
    assert d["config"]["seed"] == 40


def test_merged_reproducible_from_replicas(capsys):
    _, out, _ = run_cli(capsys, "needle", "--drops", "1000", "--replicas", "4")
    r = json.loads(out)["results"][0]
    total = sum(rep["estimate"] * rep["n"] for rep in r["replicas"])
    assert r["merged"]["n"] == 4000
    assert r["merged"]["estimate"] == pytest.approx(total / 4000)


def test_float_formatting():
    assert dumps(1.0) == "1.0"
    assert dumps(0.1) == "0.10000000000000001"
    assert dumps(1e300) == "1.0000000000000001e+300"
    assert json.loads(dumps({"a": [1, 2.5, None]})) == {"a": [1, 2.5, None]}


def test_module_entry_point():
    r = subprocess.run(
        [sys.executable, "-m", "buffon_walk", "needle", "--drops", "100"],
        capture_output=True, text=True,
    )
    assert r.returncode == 0
    assert json.loads(r.stdout)["results"][0]["merged"]["n"] == 100
