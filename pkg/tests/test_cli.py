import json

import pytest
from click.testing import CliRunner

from conftest import fixture_path, load
from pgrouplab.artin import artin_pattern, ipad2, topology_symbol
from pgrouplab.cli import main
from pgrouplab.genealogy import (export_tree, fingerprint, format_counts, is_extremal_path, label_for_address,
                                 root_path, schur_census, tree_address)


@pytest.fixture
def run():
    runner = CliRunner()

    def invoke(*args):
        return runner.invoke(main, [str(a) for a in args])
    return invoke


def test_identify_matches_library(run, tree):
    res = run("identify", fixture_path("g243_5.pc"))
    assert res.exit_code == 0
    out = json.loads(res.stdout)
    node = tree.resolve(tree_address(load("g243_5.pc")))
    assert out["fingerprint"] == fingerprint(node)
    assert out["label"] == "⟨243,5⟩" == label_for_address(node.address)
    assert out["address"] == str(node.address)


def test_identify_trivial_group(run):
    res = run("identify", fixture_path("trivial.pc"))
    assert res.exit_code == 0
    out = json.loads(res.stdout)
    assert out["fingerprint"]["order"] == 1 and out["address"] is None


def test_identify_exit_codes(run, tmp_path):
    res = run("identify", fixture_path("corrupt_01.pc"))
    assert res.exit_code == 3
    assert "^p" in res.stderr
    bad = tmp_path / "bad.pc"
    bad.write_text("p 3\nfoo\n")
    res = run("identify", bad)
    assert res.exit_code == 2 and "line 2" in res.stderr
    assert run("identify", tmp_path / "missing.pc").exit_code == 2


def test_pattern_matches_library(run, tree):
    res = run("pattern", "<729,45>")
    assert res.exit_code == 0
    out = json.loads(res.stdout)
    G = tree.resolve("<729,45>").pres
    ap = artin_pattern(G)
    assert out["text"] == str(ap)
    assert out["ipad2"] == str(ipad2(G))
    assert {k: v for k, v in out.items() if k not in ("text", "ipad2")} == ap.to_json()


def test_root_path_table(run, tree):
    res = run("root-path", fixture_path("g6561_606.pc"), "--check-extremal", "--topology")
    assert res.exit_code == 0
    lines = [line.split("\t") for line in res.stdout.splitlines()]
    assert lines[0] == ["ancestor", "vertex", "lo", "nu_mu", "counts", "tkt"]
    assert lines[1:5] == [
        ["π^3(G)", "⟨27,3⟩", "3", "(2,4)", "(4/1,7/5)", "a.1"],
        ["π^2(G)", "⟨243,4⟩", "5", "(1,3)", "(4/4)", "H.4"],
        ["π(G)", "⟨729,45⟩", "6", "(2,4)", "(4/0,2/1)", "H.4"],
        ["G", "⟨6561,606⟩", "8", "(0,2)", "", "H.4"],
    ]
    assert lines[5] == ["extremal", "true", "s=(2,1,2)"]
    assert lines[6] == ["topology", topology_symbol(tree.resolve("<6561,606>"))]
    # the same numbers through the library
    rp = root_path(load("g6561_606.pc"))
    assert [v.n for v in reversed(rp.vertices)] == [3, 5, 6, 8]
    assert format_counts(tree.resolve("<243,4>").descendant_counts()) == "(4/4)"
    assert bool(is_extremal_path(load("g6561_606.pc")))


def test_root_path_fork_and_terminal_side_branch(run):
    res = run("root-path", "<729,49>-#1;4", "--topology", "--fork-with", "<729,49>-#2;4")
    assert res.exit_code == 0
    assert res.stdout.splitlines()[-1] == "topology\tE(1→)c(2←)E"
    res = run("root-path", "<81,10>", "--check-extremal")
    assert res.stdout.splitlines()[-1] == "extremal\tfalse\ts=(1)"


def test_root_path_of_abelian_group(run, tmp_path):
    path = tmp_path / "c3xc3.pc"
    path.write_text("p 3\nn 2\n")
    res = run("root-path", path)
    assert res.exit_code == 0
    assert res.stdout.splitlines() == ["ancestor\tvertex\tlo\tnu_mu\tcounts\ttkt"]
    assert "abelian" in res.stderr


def test_bad_address(run):
    assert run("root-path", "<9,9>").exit_code == 2
    assert run("descendants", "<27,3>", "--step", "3").exit_code == 2
    assert run("descendants", "C3xC3-#1;99").exit_code == 2


def test_descendants_table_and_exports(run, tree):
    node = tree.resolve("<27,3>")
    res = run("descendants", "<27,3>", "--step", "1")
    assert res.exit_code == 0
    rows = [line.split("\t") for line in res.stdout.splitlines()[1:]]
    assert [r[0] for r in rows] == [str(c.address) for c in node.children(1)]
    assert [r[4] for r in rows] == ["yes" if c.has_gia else "no" for c in node.children(1)]
    res = run("descendants", "<27,3>", "--export", "json")
    assert json.loads(res.stdout) == json.loads(export_tree([node] + node.all_children(), "json"))
    res = run("descendants", "<27,3>", "--export", "dot", "--purged")
    assert res.stdout.strip() == export_tree([node] + [c for c in node.all_children() if c.has_gia], "dot").strip()


def test_census_matches_library(run):
    res = run("census", "--max-lo", "5")
    assert res.exit_code == 0
    out = json.loads(res.stdout)
    assert out["records"] == [r.to_json() for r in schur_census(5)]
    assert out["totals"] == {"3^5": 2}


def test_census_budget_exit_code(run):
    res = run("census", "--max-lo", "12")
    assert res.exit_code == 4


def test_verify_exit_codes(run):
    res = run("verify", "--table", "d10")
    assert res.exit_code == 0
    recs = [json.loads(line) for line in res.stdout.splitlines()]
    assert recs and all(r["pass"] for r in recs)
    assert run("verify", "--table", "counts-lo5").exit_code == 0
    assert run("verify", "--table", "nonsense").exit_code == 2


def test_config_lowers_budget(run, tmp_path):
    from pgrouplab import autgroup
    saved = autgroup.DEFAULT_FULL_BUDGET, autgroup.DEFAULT_GIA_BUDGET
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"full_budget": 5, "gia_budget": 3}))
    try:
        res = run("--config", cfg, "identify", fixture_path("g27_3.pc"))
        assert res.exit_code == 0
        assert autgroup.DEFAULT_FULL_BUDGET == 5
        with pytest.raises(autgroup.BudgetExceeded):
            autgroup.has_gia(load("g243_5.pc"))
    finally:
        autgroup.DEFAULT_FULL_BUDGET, autgroup.DEFAULT_GIA_BUDGET = saved
    assert autgroup.has_gia(load("g243_5.pc")).is_sigma
