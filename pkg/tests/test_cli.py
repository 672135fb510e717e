import json

import pytest
from click.testing import CliRunner

from kpcollapse.cli import (ConfigError, PipelineConfig, UnknownSuite, main, ord_from_tree, ord_to_sexpr,
                            read_wop, run_pipeline, run_suite)
from kpcollapse.hfset import parse_sexpr
from kpcollapse.ordinal import OMEGA, Ord


@pytest.fixture
def runner():
    return CliRunner()


def test_ordinal_sexpr_roundtrip():
    for a in (Ord.nat(0), Ord.nat(7), OMEGA, OMEGA + 3, Ord(((OMEGA, 2), (Ord.nat(1), 1)))):
        assert ord_from_tree(parse_sexpr(ord_to_sexpr(a))) == a
    assert ord_from_tree("w") == OMEGA


def test_config_validation():
    with pytest.raises(ConfigError):
        PipelineConfig(n=5).validate()
    with pytest.raises(ConfigError):
        PipelineConfig(alpha=3).validate()
    with pytest.raises(ConfigError):
        PipelineConfig(iterations=5).validate()


def test_unknown_suite(runner):
    with pytest.raises(UnknownSuite):
        run_suite("no-such-suite")
    result = runner.invoke(main, ["suite", "no-such-suite"])
    assert result.exit_code == 2 and "UnknownSuite" in result.output


@pytest.mark.parametrize("name", ["ordinal-laws", "eps-laws", "search-tree-golden"])
def test_quick_suites_pass(name):
    status, summary = run_suite(name)
    assert status == 0, summary


def test_eps_subcommands(runner):
    r = runner.invoke(main, ["eps", "compare", "W^(0)*3", "W^(W^(0)*1)*1", "--json"])
    assert r.exit_code == 0 and json.loads(r.output)["result"] == -1
    r = runner.invoke(main, ["eps", "add", "W^(0)*3", "W^(W^(0)*1)*1"])
    assert r.exit_code == 0 and "result: W^(W^(0)*1)*1" in r.output
    r = runner.invoke(main, ["eps", "star", "W^(0)*(w^(3))"])
    assert r.exit_code == 0 and "result: 3" in r.output
    assert runner.invoke(main, ["eps", "add", "W^(0"]).exit_code == 2


def test_collapse_subcommands(runner, tmp_path):
    wop = tmp_path / "t.wop"
    wop.write_text("(wop (a 0) (b 1) (c 0))")
    r = runner.invoke(main, ["collapse", "synth", str(wop)])
    assert r.exit_code == 0
    good = tmp_path / "good.map"
    good.write_text(r.output)
    assert runner.invoke(main, ["collapse", "check", str(wop), "--map", str(good)]).exit_code == 0
    bad = tmp_path / "bad.map"
    bad.write_text("(collapse (a 1) (b 2) (c 1))")
    r = runner.invoke(main, ["collapse", "check", str(wop), "--map", str(bad), "--json"])
    assert r.exit_code == 1 and '"violations": 1' in r.output
    assert runner.invoke(main, ["collapse", "check", str(wop)]).exit_code == 2
    terms = tmp_path / "q.txt"
    terms.write_text("W^(W^(0)*1)*1\nW^(0)*5\n")
    r = runner.invoke(main, ["collapse", "oracle", str(terms)])
    assert r.exit_code == 0 and "violations: 0" in r.output
    assert read_wop("(wop (x w))").rank("x") == OMEGA


def test_search_tree_subcommand(runner):
    r = runner.invoke(main, ["search-tree", "--n", "1", "--alpha", "1", "--depth", "4", "--dump"])
    assert r.exit_code == 0
    assert sum(line.startswith("(node") for line in r.output.splitlines()) == 5
    r = runner.invoke(main, ["search-tree", "--depth", "2", "--json", "--dump"])
    rows = [json.loads(line) for line in r.output.splitlines()]
    assert rows[-1] == {"depth": 2, "nodes": 3}
    assert all(row["cmp"] == -1 for row in rows if "kb" in row)


def test_search_tree_reads_u_file(runner, tmp_path):
    u = tmp_path / "u.set"
    u.write_text("(set (set) (set (set)))")
    assert runner.invoke(main, ["search-tree", "--u", str(u), "--depth", "2"]).exit_code == 0
    u.write_text("(set (set (set)))")
    assert runner.invoke(main, ["search-tree", "--u", str(u), "--depth", "2"]).exit_code == 2


def test_codes_check(runner, tmp_path):
    code = tmp_path / "c.code"
    code.write_text("(truth (or (eq (set) (set)) (in (set) (set))))")
    r = runner.invoke(main, ["codes", "check", "--code", str(code), "--walks", "5", "--json"])
    assert r.exit_code == 0
    summary = json.loads(r.output.splitlines()[-1])
    assert summary["fail"] == 0 and summary["root"]["height"] == "W^(0)*1"
    code.write_text("(axiom 2)")
    assert runner.invoke(main, ["codes", "check", "--code", str(code), "--walks", "5"]).exit_code == 0
    code.write_text("(frobnicate)")
    assert runner.invoke(main, ["codes", "check", "--code", str(code)]).exit_code == 2


def test_pipeline_deterministic(runner, tmp_path):
    args = ["pipeline", "--walks", "20", "--json"]
    first, second = runner.invoke(main, args), runner.invoke(main, args)
    assert first.exit_code == 0 and first.output == second.output
    out = tmp_path / "report.jsonl"
    r = runner.invoke(main, ["pipeline", "--walks", "20", "--out", str(out)])
    assert r.exit_code == 0 and "collapsed root ordinal" in r.output
    assert out.read_text().splitlines() == first.output.splitlines()


def test_pipeline_summary():
    s = run_pipeline(PipelineConfig(walks=20))["summary"]
    assert s["roots"]["eliminated"]["d"] == 2 and s["roots"]["eliminated"]["sequent"] == []
    assert s["roots"]["collapsed"]["d"] == 1
    assert s["status"] == 0 and s["oracle_violations"] == 0
