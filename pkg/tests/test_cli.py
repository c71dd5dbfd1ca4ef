import csv
import io
import json
import math

import pytest

from irs_isac import cli
from irs_isac._validation import NumericalError
from irs_isac.orchestrator import TRACE_COLUMNS, RunResult, run
from irs_isac.scene import ScenarioConfig

SMALL_CFG = """\
# small geometry for fast tests
[system]
N = 2
L_x = 2
L_y = 2
K = 2

[quantization]
M = 4   ; four phase levels

[solver]
max_outer_iter = 40

[run]
seed = 1
"""


@pytest.fixture
def cfg_path(tmp_path):
    p = tmp_path / "small.cfg"
    p.write_text(SMALL_CFG)
    return p


def _data_lines(text):
    return [l for l in text.splitlines() if not l.startswith("#")]


def test_run_csv(cfg_path, tmp_path):
    out = tmp_path / "trace.csv"
    code = cli.parse_and_run(["run", "--config", str(cfg_path), "--override", "quantization.M=8",
                              "--output", str(out)])
    assert code == 0
    text = out.read_text()
    assert "# quantization.M = 8" in text
    assert "# run.seed = 1" in text
    assert "# solver.beta = 0.5" in text  # defaults are echoed too
    rows = list(csv.reader(io.StringIO("\n".join(_data_lines(text)))))
    assert tuple(rows[0]) == TRACE_COLUMNS
    cfg, _ = cli.load_config(cfg_path, ["quantization.M=8"])
    result = run(cfg)
    assert len(rows) - 1 == result.iterations_used + 1
    assert float(rows[-1][3]) == pytest.approx(result.final_snr_t_db, rel=1e-11)
    assert rows[1][4] == "inf"


def test_run_csv_stdout_deterministic(cfg_path, capsys):
    assert cli.parse_and_run(["run", "-c", str(cfg_path)]) == 0
    first = capsys.readouterr().out
    assert cli.parse_and_run(["run", "-c", str(cfg_path)]) == 0
    assert capsys.readouterr().out == first


def test_json_round_trip(cfg_path, tmp_path):
    out = tmp_path / "trace.json"
    assert cli.parse_and_run(["run", "-c", str(cfg_path), "--format", "json", "--output", str(out)]) == 0
    doc = json.loads(out.read_text())
    cfg, _ = cli.load_config(cfg_path)
    result = run(cfg)
    assert doc["config"]["system.N"] == 2
    assert doc["iterations_used"] == result.iterations_used
    for rec, row in zip(result.trace, doc["trace"]):
        for col, value in zip(TRACE_COLUMNS, rec.row()):
            assert float(row[col]) == value


def test_empty_trace_is_header_only():
    result = RunResult([], (None, None), False, 0, ScenarioConfig())
    text = cli.serialize_trace(result, "csv").decode()
    assert _data_lines(text) == [",".join(TRACE_COLUMNS)]


def test_db_sentinel():
    assert cli._fmt(-math.inf) == "-inf"
    assert cli._json_number(-math.inf) == "-inf"
    assert cli._fmt(1.0 / 3.0) == "0.333333333333"


def test_validate_bad_beta(tmp_path, capsys):
    p = tmp_path / "broken.cfg"
    p.write_text("[solver]\nbeta = 1.5\n")
    assert cli.parse_and_run(["validate", "--config", str(p)]) == 2
    err = capsys.readouterr().err
    assert "beta must satisfy 0 <= beta <= 1" in err
    assert f"{p}:2" in err


def test_validate_ok(cfg_path, capsys):
    assert cli.parse_and_run(["validate", "-c", str(cfg_path)]) == 0
    out = capsys.readouterr().out
    assert "system.N = 2" in out and "sweep.seeds = 20" in out


@pytest.mark.parametrize(
    "text, needle",
    [
        ("[solver]\nbogus = 1\n", "solver.bogus"),
        ("[nowhere]\nx = 1\n", "unknown section"),
        ("[system]\nN = two\n", "system.N"),
        ("no header line\n", "small.cfg"),
    ],
)
def test_config_errors(tmp_path, capsys, text, needle):
    p = tmp_path / "small.cfg"
    p.write_text(text)
    assert cli.parse_and_run(["validate", "-c", str(p)]) == 2
    err = capsys.readouterr().err
    assert needle in err


def test_unknown_override_lists_valid_keys(capsys):
    assert cli.parse_and_run(["run", "--override", "solver.nope=1"]) == 2
    err = capsys.readouterr().err
    for key in cli.valid_keys():
        assert key in err


def test_override_wins_over_file(cfg_path):
    cfg, _ = cli.load_config(cfg_path, ["system.N=3", "run.seed=9"])
    assert cfg.N == 3 and cfg.seed == 9 and cfg.M == 4


def test_numerical_abort_exit_code(cfg_path, monkeypatch, capsys):
    def boom(config):
        raise NumericalError("phase update", "non-finite values produced")

    monkeypatch.setattr(cli, "run", boom)
    assert cli.parse_and_run(["run", "-c", str(cfg_path)]) == 3
    assert "phase update" in capsys.readouterr().err


def test_sweep_summary(cfg_path, capsys):
    code = cli.parse_and_run(["sweep", "-c", str(cfg_path), "--override", "sweep.M=2,continuous",
                              "--override", "sweep.seeds=2", "--format", "json"])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert [row["M"] for row in doc["summary"]] == [2, "continuous"]
    assert all(row["n_runs"] == 2 for row in doc["summary"])
    assert doc["config"]["sweep.seeds"] == "2"


def test_parse_sweep():
    M, seeds, n_jobs = cli.parse_sweep({"M": "2, 8, inf", "seeds": "3", "n_jobs": "1"}, 5)
    assert M == [2, 8, "continuous"] and seeds == [5, 6, 7] and n_jobs == 1
    _, seeds, _ = cli.parse_sweep({"M": "4", "seeds": "4,9", "n_jobs": "2"}, 0)
    assert seeds == [4, 9]
    with pytest.raises(cli.ConfigError):
        cli.parse_sweep({"M": "1", "seeds": "3", "n_jobs": "1"}, 0)
