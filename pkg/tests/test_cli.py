import json

import pytest

from uncal.cli import main

from conftest import PROGRAMS, bisim, typed


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_eval_abab(capsys):
    assert run(capsys, "eval", str(PROGRAMS / "abab.unql")) == (0, "a:b:a:{}\n", "")


def test_eval_aa(capsys):
    code, out, _ = run(capsys, "eval", str(PROGRAMS / "aa.unql"))
    assert code == 0 and out == "true:{}\n"


def test_eval_with_open_markers(capsys):
    code, out, _ = run(capsys, "eval", str(PROGRAMS / "f2.unql"), "--source", "y1,y2")
    assert code == 0
    src = ("&y1", "&y2")
    assert bisim(typed(out.strip(), src), typed("a:a:cycle(a:{a:&y1, a:&y2, a:&})", src))


def test_eval_an_expression(capsys):
    code, out, _ = run(capsys, "eval", str(PROGRAMS / "aa.unql"), "-e", "aa?(a:b:{})")
    assert (code, out) == (0, "{}\n")


def test_check(capsys):
    code, out, _ = run(capsys, "check", str(PROGRAMS / "aa.unql"))
    assert code == 0
    assert "sfun aa? : <&>  (primitive)" in out
    assert "main : <> |- aa?(cycle(a:&)) : <&>" in out


def test_bisim_exit_codes(capsys):
    code, out, _ = run(capsys, "bisim", "-e", "a:{}", "-e", "{a:{}, a:{}}", "--json")
    assert code == 0 and json.loads(out) == {"bisimilar": True}
    code, out, _ = run(capsys, "bisim", "-e", "a:{}", "-e", "b:{}")
    assert code == 1 and out == "not bisimilar\n"


def test_nf_json(capsys):
    code, out, _ = run(capsys, "nf", "-e", "(a:&) @ (b:{})", "--json")
    data = json.loads(out)
    assert code == 0
    assert data["term"] == "a:b:{}" and data["judgment"] == "<> |- a:b:{} : <&>"


def test_mu(capsys):
    assert run(capsys, "mu", "-e", "cycle(&:=a:&)") == (0, "mu x. a(x)\n", "")


def test_lambda(capsys):
    assert run(capsys, "lambda", "-e", "cycle(&:=a:&)") == (0, "fix (\\x. a:x)\n", "")


def test_traces(capsys):
    code, out, _ = run(capsys, "traces", "-e", "cycle(&:=a:&)", "--depth", "2")
    assert code == 0 and out.split("\n")[:3] == ["(empty)", "a", "aa"]


def test_graph_to_a_file(capsys, tmp_path):
    target = tmp_path / "g.dot"
    code, _, _ = run(capsys, "graph", "-e", "a:{}", "--dot", str(target))
    assert code == 0
    text = target.read_text()
    assert text.startswith("digraph G {") and '[label="a"]' in text


def test_mutant_schema_fails(capsys):
    code, out, _ = run(capsys, "axioms", "--schema", "c2_mutant", "--trials", "3")
    assert code == 1
    assert json.loads(out)["failures"]


def test_sound_schema_passes(capsys):
    code, out, _ = run(capsys, "axioms", "--schema", "fix", "--trials", "5")
    assert code == 0 and json.loads(out)["failures"] == []


@pytest.mark.parametrize("argv", [
    ["nf", "-e", "a:("],
    ["eval", "no-such-file.unql"],
    [],
    ["bisim", "-e", "&z", "-e", "{}"],
])
def test_user_errors_exit_with_two(capsys, argv):
    assert main(argv) == 2
    capsys.readouterr()
