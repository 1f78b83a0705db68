import argparse
import csv
import io
import json
import subprocess
import sys

import pytest

from zetalab import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def parse(*argv):
    return cli.build_parser().parse_args(list(argv))


# ---------------------------------------------------------------------------
# config


def test_precedence_flag_over_file_over_env(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("# comment\nthreads = 3\nsigma = 0.4\nt-grid = 50, 100\n")
    cfg = cli.build_config(parse("j3", "--config", str(cfg_file), "--sigma", "0.6"), {"THREADS": "2"})
    assert cfg.sigma == 0.6
    assert cfg.threads == 3
    assert cfg.t_grid == [50.0, 100.0]


def test_threads_from_environment():
    assert cli.build_config(parse("j3"), {"THREADS": "5"}).threads == 5
    assert cli.build_config(parse("j3"), {}).threads == 1
    assert cli.build_config(parse("j3", "--threads", "2"), {"THREADS": "5"}).threads == 2


@pytest.mark.parametrize("text", ["sigma 0.5\n", "colour = red\n", "sigma = abc\n"])
def test_bad_config_file(tmp_path, text):
    f = tmp_path / "bad.cfg"
    f.write_text(text)
    with pytest.raises(cli.ConfigError):
        cli.read_config_file(str(f))


@pytest.mark.parametrize("kwargs", [{"sigma": 1.5}, {"threads": 0}, {"d3": 1.0}, {"tol": -1.0},
                                    {"format": "xml"}, {"t_grid": []}, {"points": 1},
                                    {"bound": float("nan")}])
def test_config_validation(kwargs):
    with pytest.raises(cli.ConfigError):
        cli.ExperimentConfig(**kwargs)


def test_bad_threads_env():
    with pytest.raises(cli.ConfigError):
        cli.build_config(parse("j3"), {"THREADS": "many"})


# ---------------------------------------------------------------------------
# exit codes


def test_exit_config_error(capsys):
    code, _, err = run(capsys, "j3", "--sigma", "2")
    assert code == cli.EXIT_CONFIG and "sigma" in err


def test_exit_unknown_command(capsys):
    assert run(capsys, "nonsense")[0] == cli.EXIT_CONFIG


def test_exit_missing_config_file(capsys, tmp_path):
    assert run(capsys, "j3", "--config", str(tmp_path / "absent.cfg"))[0] == cli.EXIT_CONFIG


def test_exit_pass(capsys):
    code, out, _ = run(capsys, "section7")
    assert code == cli.EXIT_OK and "PASS" in out


def test_exit_tolerance_failure(capsys):
    code, out, _ = run(capsys, "section7", "--bound", "1e-12")
    assert code == cli.EXIT_TOLERANCE and "FAIL" in out


def test_exit_nonconvergence(capsys, monkeypatch):
    def boom(cfg):
        raise cli.QuadratureError("no convergence", None)

    monkeypatch.setitem(cli.COMMANDS, "j3", boom)
    assert run(capsys, "j3")[0] == cli.EXIT_NONCONVERGENCE


def test_diagnostic_command_exits_zero(capsys):
    code, out, _ = run(capsys, "sums", "--t-grid", "100,200")
    assert code == cli.EXIT_OK and "diagnostic" in out


def test_help_exits_zero(capsys):
    assert run(capsys, "--help")[0] == cli.EXIT_OK


# ---------------------------------------------------------------------------
# output formats


def test_appendix_b_csv_columns(capsys):
    code, out, _ = run(capsys, "appendix-b", "--points", "2", "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["a", "abs_lhs", "abs_rhs", "rel_err"]
    assert len(rows) == 1 + 4
    assert all(float(r[3]) <= 0.1 for r in rows[1:])
    assert code == cli.EXIT_OK


def test_json_schema(capsys):
    code, out, _ = run(capsys, "j3", "--t-grid", "1000,3000", "--format", "json")
    doc = json.loads(out)
    assert doc["schema_version"] == cli.SCHEMA_VERSION == 1
    assert doc["command"] == "j3"
    assert doc["oracle"]
    assert set(doc["rows"][0]) == set(doc["columns"])


def test_out_file(capsys, tmp_path):
    target = tmp_path / "r.json"
    run(capsys, "section7", "--format", "json", "--out", str(target))
    assert json.loads(target.read_text())["command"] == "section7"


def test_output_independent_of_threads(capsys):
    _, one, _ = run(capsys, "section7", "--format", "json", "--threads", "1")
    _, four, _ = run(capsys, "section7", "--format", "json", "--threads", "4")
    assert one == four


# ---------------------------------------------------------------------------
# helpers


def test_loglog_slope_and_monotone():
    assert cli.loglog_slope([1, 10, 100], [1, 0.1, 0.01]) == pytest.approx(-1)
    assert cli.non_improving([0.1, 0.2, 0.2])
    assert not cli.non_improving([0.2, 0.1])


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "zetalab", "section7", "--format", "csv"],
                       capture_output=True, text=True, check=False)
    assert r.returncode == 0
    assert r.stdout.splitlines()[0].startswith("example,")


def test_parser_has_all_commands():
    p = cli.build_parser()
    sub = next(a for a in p._actions if isinstance(a, argparse._SubParsersAction))
    assert set(sub.choices) == set(cli.COMMANDS)


def test_negative_slope_bound_accepted(capsys):
    code, out, _ = run(capsys, "j3", "--t-grid", "1000,10000", "--bound", "-0.4")
    assert code == cli.EXIT_OK and "PASS" in out
