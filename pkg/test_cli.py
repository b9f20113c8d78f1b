"""Tests for the command-line surface: exit codes, outputs and config handling."""

import json

import pytest

from main import main


def _json_lines(text):
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def test_bounds_fuk_constants(capsys):
    assert main(["bounds", "fuk-constants", "--p", "3"]) == 0
    record = _json_lines(capsys.readouterr().out)[0]
    print(f"  {record}")
    assert record["beta"] == pytest.approx(0.6)
    assert record["c_star"] == pytest.approx(0.16 / (2.0 * 2.718281828459045**3))
    assert record["op"] == "fuk-constants"


def test_bounds_moddev(capsys):
    assert main(["bounds", "moddev", "--case", "p_lt_2", "--n", "100", "--x", "10", "--p", "1.5", "--kappa", "1"]) == 0
    record = _json_lines(capsys.readouterr().out)[0]
    assert record["op"] == "moddev"
    assert [t["label"] for t in record["terms"]] == ["polynomial"]
    assert round(record["total"], 4) == 3.1623
    assert record["regime"] is None


def test_bounds_young_list_input(capsys):
    assert main(["bounds", "young", "--p", "2", "--x", "1", "--L", "ones:100", "--kappa", "1"]) == 0
    record = _json_lines(capsys.readouterr().out)[0]
    exponential = record["terms"][1]
    assert exponential["label"] == "exponential"
    assert abs(exponential["factors"]["variance_factor"] - 330.259) < 1e-3
    assert abs(record["extras"]["variance_factor"] - 330.259) < 1e-3


def test_bounds_infinite_moment_is_strict_json(capsys):
    """E tau^2 is infinite at p = 2: printed as null and named, never as Infinity."""
    assert main(["bounds", "harris-tau-moments", "--p", "2"]) == 0
    line = capsys.readouterr().out.strip()

    def reject(token):
        raise ValueError(f"non-standard JSON constant {token}")

    record = json.loads(line, parse_constant=reject)
    assert record["value"] == [2.0, None]
    assert record["nonfinite"] == ["value[1]=inf"]


def test_bounds_tuple_result(capsys):
    assert main(["bounds", "beta-gamma-gap", "--b", "1", "--k", "10"]) == 0
    record = _json_lines(capsys.readouterr().out)[0]
    lhs, rhs = record["value"]
    assert lhs <= rhs


def test_bounds_usage_errors(capsys):
    assert main(["bounds", "no-such-op", "--p", "3"]) == 2
    assert "Valid ops" in capsys.readouterr().err
    assert main(["bounds", "moddev", "--case", "p_gt_2", "--x", "10"]) == 2
    assert "missing input" in capsys.readouterr().err
    assert main(["bounds", "fuk-constants", "--p", "3", "--q", "1"]) == 2
    assert main(["bounds", "fuk-constants", "--p", "1.5"]) == 2
    assert main(["bounds", "rosenthal", "--r", "2", "--N", "4", "--x", "2", "--l1-coupling", "0",
                 "--r-moment", "1", "--second-moment", "1", "--delta-sum", "0"]) == 2


def test_mixing_csv(tmp_path, capsys):
    out = tmp_path / "mix.csv"
    code = main(["mixing", "--chain", "renewal", "--p", "3", "--truncation-N", "20000",
                 "--n", "200..500:12", "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "n,coeff,stderr,method"
    assert len(lines) == 13
    fit = _json_lines(capsys.readouterr().out)[-1]
    print(f"  rate fit: {fit['slope']:.3f}")
    assert fit["kind"] == "rate_fit"
    assert abs(fit["slope"] + 2.0) < 0.25
    assert fit["target_slope"] == -2.0


def test_mixing_doubling_flagged(capsys):
    assert main(["mixing", "--chain", "doubling", "--n", "1..20"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("n,coeff,stderr,method\n")
    fit = _json_lines(out.split("\n", 21)[-1])[-1]
    assert "faster than polynomial" in fit["flags"]


def test_tails_validation_errors(capsys):
    base = ["tails", "--chain", "renewal", "--n", "500", "--x-grid", "bandwidth:5"]
    assert main(base) == 2
    assert "missing required field 'p'" in capsys.readouterr().err
    assert main(base + ["--p", "3", "--trials", "10"]) == 2
    assert "trials" in capsys.readouterr().err
    assert main(["tails", "--chain", "renewal", "--p", "3", "--n", "500"]) == 2
    assert main(["tails", "--chain", "tower", "--p", "2", "--n", "500", "--x-grid", "bandwidth:5"]) == 2
    assert main(["tails", "--chain", "renewal", "--p", "3", "--n", "500", "--x-grid", "linear:5:1:3"]) == 2


def test_tails_unwritable_output(tmp_path):
    out = tmp_path / "missing" / "t.csv"
    code = main(["tails", "--chain", "renewal", "--p", "3", "--truncation-N", "1000", "--n", "200",
                 "--x-grid", "linear:1:10:3", "--trials", "200", "--no-gate", "--out", str(out)])
    assert code == 3
    assert not out.exists()


def test_tails_unresolvable_grid(capsys):
    code = main(["tails", "--chain", "renewal", "--p", "3", "--truncation-N", "1000", "--n", "10000",
                 "--x-grid", "log:100:2000:3", "--trials", "100", "--kappa", "1"])
    assert code == 4
    assert "deficit" in capsys.readouterr().err


def test_tails_byte_identical_across_workers(tmp_path):
    args = ["tails", "--chain", "renewal", "--p", "3", "--truncation-N", "10000", "--n", "300",
            "--x-grid", "linear:1:20:4", "--trials", "5000", "--seed", "7", "--no-gate"]
    one, two = tmp_path / "one.csv", tmp_path / "two.csv"
    assert main(args + ["--workers", "1", "--out", str(one)]) == 0
    assert main(args + ["--workers", "2", "--out", str(two)]) == 0
    assert one.read_bytes() == two.read_bytes()
    header = one.read_text().splitlines()[0]
    assert header == "statistic,chain,p,gamma,n,x,hits,trials,p_hat,ci_low,ci_high,seed"


def test_tails_pilot_gate_and_config_file(tmp_path):
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({
        "chain": "harris", "p": 2, "n_list": "200,400", "x_grid": "log:5:40:4",
        "trials": 2000, "seed": 3, "workers": 1,
    }))
    out = tmp_path / "harris.csv"
    assert main(["tails", "--config", str(config), "--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert len(rows) == 1 + 8
    assert rows[1].startswith("max_abs_partial_sum,harris,2.0,1.0,200,")


def test_config_file_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["tails", "--config", str(bad)]) == 2
    unknown = tmp_path / "unknown.json"
    unknown.write_text(json.dumps({"chain": "renewal", "colour": "red"}))
    assert main(["tails", "--config", str(unknown)]) == 2
    assert "colour" in capsys.readouterr().err
    assert main(["tails", "--config", str(tmp_path / "absent.json")]) == 3


def test_report_concatenates(tmp_path, capsys):
    mix = tmp_path / "mix.csv"
    assert main(["mixing", "--chain", "doubling", "--n", "1..8", "--out", str(mix)]) == 0
    bounds = tmp_path / "bounds.jsonl"
    bounds.write_text(json.dumps({"op": "fuk-constants", "beta": 0.6}) + "\n")
    capsys.readouterr()

    out = tmp_path / "report.jsonl"
    assert main(["report", "--inputs", str(mix), str(bounds), "--out", str(out)]) == 0
    records = _json_lines(out.read_text())
    assert len(records) == 9
    assert records[0]["source"] == str(mix) and records[0]["method"] == "exact"
    assert records[-1]["op"] == "fuk-constants"
    assert main(["report", "--inputs", str(tmp_path / "nothing.csv")]) == 3


@pytest.mark.parametrize("suite", ["kac", "quadrature", "constants"])
def test_verify_fast_suites(suite, capsys):
    assert main(["verify", "--suite", suite]) == 0
    records = _json_lines(capsys.readouterr().out)
    assert records
    assert all(r["pass"] for r in records)
    assert set(records[0]) == {"check", "inputs", "observed", "target", "tolerance", "pass"}


def test_verify_mixing_suite(capsys):
    assert main(["verify", "--suite", "mixing", "--truncation-N", "20000"]) == 0
    names = [r["check"] for r in _json_lines(capsys.readouterr().out)]
    assert names == ["renewal_mixing_rate", "renewal_h1_floor", "doubling_closed_form"]


def test_verify_scaling_refuses_unresolvable_scale(capsys):
    """x = 4 n^0.6 expects well under one hit at n = 10^4: refused before sampling."""
    code = main(["verify", "--suite", "scaling", "--truncation-N", "20000", "--x-scale", "4"])
    assert code == 1
    records = _json_lines(capsys.readouterr().out)
    assert [r["check"] for r in records] == ["n_exponent_resolvable"]
    assert records[0]["observed"] < 1.0
    assert records[0]["pass"] is False


def test_lower_bound_gate_refuses_before_sampling(monkeypatch):
    from chains.kernels import renewal_chain
    from cli import verify

    def no_sampling(*args, **kwargs):
        raise AssertionError("sampled an unresolvable grid")

    monkeypatch.setattr(verify, "mc_tail", no_sampling)
    checks = verify._x_scaling_checks("renewal", renewal_chain(3.0, 20_000), 3.0, 1_000, 1_000,
                                      verify.VerifyOptions())
    assert [c.check for c in checks] == ["renewal_resolvable"]
    assert not checks[0].passed
    assert checks[0].observed < verify.MIN_EXPECTED_HITS


def test_gated_grid_targets_top_hits():
    from chains.laws import renewal_law
    from cli.verify import GRID_TOP_HITS, _gated_grid

    kappa = renewal_law(3.0, 20_000).single_jump_kappa
    grid = _gated_grid(kappa, 3.0, 1_000, 2_000_000, 10)
    assert grid[0] == pytest.approx(40.0)
    top_hits = 2_000_000 * kappa * 1_000 * grid[-1] ** -3.0
    assert top_hits == pytest.approx(GRID_TOP_HITS)


def test_verify_failure_exit_code(monkeypatch, capsys):
    """Any failed check turns the exit code to 1."""
    from cli import verify

    failing = verify.Check("always_fails", {}, 1.0, 0.0, 0.0, False)
    monkeypatch.setitem(verify.SUITES, "kac", lambda opts: [failing])
    assert verify.cmd_verify("kac", verify.VerifyOptions()) == 1
    assert _json_lines(capsys.readouterr().out) == [failing.to_dict()]


def test_parse_helpers():
    from chains.errors import ConfigError
    from cli.config import XGridSpec, parse_n_list

    assert parse_n_list("500") == [500]
    assert parse_n_list("1000,3000") == [1000, 3000]
    assert parse_n_list("3..6") == [3, 4, 5, 6]
    points = parse_n_list("10..500:12")
    assert points[0] == 10 and points[-1] == 500 and points == sorted(set(points))
    with pytest.raises(ConfigError):
        parse_n_list("a..b")

    grid = XGridSpec.parse("bandwidth:10").resolve(10_000, 3.0)
    assert len(grid) == 10
    assert grid[0] == pytest.approx(4.0 * 10_000 ** (1 / 3)) and grid[-1] == pytest.approx(625.0)
    assert list(XGridSpec.parse("linear:0:10:3").resolve(100, None)) == [0.0, 5.0, 10.0]
    with pytest.raises(ConfigError):
        XGridSpec.parse("cubic:1:2:3")
    with pytest.raises(ConfigError):
        XGridSpec.parse("bandwidth:10").resolve(100, 1.2)


def test_result_logger_stdout(capsys):
    from results_logging import ResultLogger

    logger = ResultLogger(None, kind="csv", columns=["a", "b"])
    logger.log_rows([{"a": 1, "b": 2}, {"a": 3, "b": 4}])
    logger.finalize()
    logger.log_row({"a": 5, "b": 6})
    assert capsys.readouterr().out == "a,b\n1,2\n3,4\n"
    assert logger.get_output_path() == "-"


def test_result_logger_round_trip(tmp_path):
    from results_logging import ResultLogger, load_results

    path = tmp_path / "rows.jsonl"
    logger = ResultLogger(str(path), kind="jsonl")
    logger.log_row({"check": "x", "pass": True})
    logger.finalize()
    assert load_results(str(path)) == [{"check": "x", "pass": True}]
