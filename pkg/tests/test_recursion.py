import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uncal import axioms as A
from uncal import graph as G
from uncal import lambdag as L
from uncal import recursion as REC
from uncal import rewrite as R
from uncal import syntax as S
from uncal import typing as T
from uncal.errors import (DependsOnArgument, HypothesisFailed, InconsistentK, MatchFailure,
                          ModeMismatch, NotClosed, UnknownFunction, UserError)

from conftest import (AMP, F2_OF_T_G, T_G, bisim, oracle_prec, oracle_srec, program,
                      random_structural_def, rec_def, typed)

seeds = st.integers(0, 2 ** 32 - 1)
F2 = "sfun f2(L:T) = a:f2(T)"
RELABEL = "sfun h(a:t) = b:h(t)\n h(L:t) = L:h(t) where L /= a"
GROW = "sfun g(b:t) = {c:g(t), t}\n g(L:t) = L:g(t) where L /= b"


# --------------------------------------------------------- abstraction

def test_f2_body_is_a_label_on_the_hole():
    d = rec_def(F2, "f2")
    assert (d.k, d.mode) == (1, REC.STRUCTURAL)
    assert d.body("q") == typed("a:&", AMP)


def test_abab_body_is_a_pair():
    d = REC.from_sfun(*_sfun("abab.unql", "abab"))
    assert d.k == 2 and d.W == ("&z1", "&z2")
    assert T.show(d.body("p")) == "(&z1:=a:&z2, &z2:=b:&z1)"


def test_aa_body_calls_the_bfun_on_the_hole(aa_env):
    d = aa_env.rec("aa?")
    assert d.mode == REC.PRIMITIVE and d.k == 1
    assert T.judgment(d.body("a")) == "<&x,&> |- head-a?(&) : <&>"


def _sfun(file, name):
    p = program(file)
    return p.sfuns[name], p


def test_structural_body_must_not_use_the_argument():
    p = S.parse_program("sfun f(a:t) = t")
    with pytest.raises(DependsOnArgument):
        REC.from_sfun(p.sfuns["f"], p, REC.STRUCTURAL)
    assert REC.detect_mode(p.sfuns["f"]) == REC.PRIMITIVE


def test_clauses_must_agree_on_arity():
    with pytest.raises(InconsistentK):
        rec_def("sfun f(a:t) = a:f(t)\n f(b:t) = (x:=a:f(t), y:=b:f(t))", "f")


def test_nested_sfun_calls_are_rejected():
    p = S.parse_program("sfun f(a:t) = g(t)\nsfun g(a:t) = g(t)")
    with pytest.raises(UserError):
        REC.from_sfun(p.sfuns["f"], p)


# ---------------------------------------------------- structural goldens

def test_f2_on_the_introduction_graph():
    src = ("&y1", "&y2")
    out = REC.srec(rec_def(F2, "f2"), typed(T_G, src))
    assert bisim(out, typed(F2_OF_T_G, src))


def test_srec_of_nil_is_k_nils():
    d = REC.from_sfun(*_sfun("abab.unql", "abab"))
    assert REC.srec(d, typed("{}")) == T.pair([typed("{}"), typed("{}")], ())


def test_abab_alternates():
    d = REC.from_sfun(*_sfun("abab.unql", "abab"))
    out = T.comp(T.projection(("&z1$1", "&z1$2"), [0]), REC.srec(d, typed("p:q:r:{}")))
    assert bisim(out, typed("a:b:a:{}"))


def test_srec_rejects_primitive_definitions():
    with pytest.raises(ModeMismatch):
        REC.srec(rec_def("sfun f(a:t) = t", "f"), typed("{}"))


# ----------------------------------------------------- primitive goldens

def test_aa_on_a_loop(aa_env):
    out = REC.run(aa_env, REC.prec(aa_env.rec("aa?"), typed("cycle(a:&)")))
    assert bisim(out, typed("true:{}"))


def test_aa_on_a_path(aa_env):
    out = REC.run(aa_env, REC.prec(aa_env.rec("aa?"), typed("a:a:{}")))
    assert bisim(out, typed("true:{}"))


def test_prec_needs_a_closed_argument():
    with pytest.raises(NotClosed):
        REC.prec(rec_def("sfun f(a:t) = t", "f"), typed("a:&y", ("&y",)))


def test_prec_rejects_structural_definitions():
    with pytest.raises(ModeMismatch):
        REC.prec(rec_def(F2, "f2"), typed("{}"))


def _phi_of_a_hole(env):
    """prec(aa?) extended to the open term a:& by its label clause, with the
    hole standing for both the result and the raw subterm."""
    aa = env.rec("aa?")
    return T.comp(aa.body("a"), T.pair([T.mark(0, AMP), T.mark(0, AMP)], AMP))


def test_composition_law_fails_for_aa(aa_env):
    aa = aa_env.rec("aa?")
    lhs = REC.run(aa_env, REC.prec(aa, typed("(a:&) @ (a:{})")))
    rhs = REC.run(aa_env, T.comp(_phi_of_a_hole(aa_env), REC.prec(aa, typed("a:{}"))))
    assert bisim(lhs, typed("true:{}"))
    assert bisim(rhs, typed("{}"))
    assert not bisim(lhs, rhs)


def test_cycle_law_fails_for_aa(aa_env):
    aa = aa_env.rec("aa?")
    lhs = REC.run(aa_env, REC.prec(aa, typed("cycle(a:&)")))
    # cycle(head-a?(&)) loops on itself without progress: a black hole
    _, tables = L.program_tables(aa_env.program)
    rhs = L.lg_eval(L.translate(T.cycle(_phi_of_a_hole(aa_env), 0)), bfuns=tables)
    assert G.bisimilar(rhs, G.interpret(typed("{}")))[0]
    assert not G.bisimilar(G.interpret(lhs), rhs)[0]


def test_cycle_of_a_bfun_call_cannot_be_matched_by_term_evaluation(aa_env):
    with pytest.raises(MatchFailure):
        REC.run(aa_env, T.cycle(_phi_of_a_hole(aa_env), 0))


# ------------------------------------------------------------ evaluation

def test_f1_collects_ethnic_groups():
    out = REC.eval_program(program("f1.unql"))
    expected = typed('{result:"Celtic", result:"Portuguese", result:"Italian"}')
    assert bisim(out, expected)


def test_bfun_on_a_label_head():
    assert bisim(REC.eval_program(program("aa.unql"), "head-a?(a:{})"), typed("true:{}"))


def test_aa_without_consecutive_a():
    assert bisim(REC.eval_program(program("aa.unql"), "aa?(a:b:{})"), typed("{}"))


def test_bfun_cannot_match_a_union():
    with pytest.raises(MatchFailure):
        REC.eval_program(program("aa.unql"), "aa?(a:{b:{}, c:{}})")


def test_unknown_function():
    with pytest.raises(UnknownFunction):
        REC.eval_program(S.parse_program(""), "zz(a:{})")


def test_eval_with_open_source():
    out = REC.eval_program(program("f2.unql"), None, ("&y1", "&y2"))
    assert bisim(out, typed(F2_OF_T_G, ("&y1", "&y2")))


# -------------------------------------------------- properties vs oracle

@settings(max_examples=150, deadline=None)
@given(seeds, st.sampled_from([(), ("&y",), ("&y1", "&y2")]),
       st.sampled_from([AMP, ("&x1", "&x2")]), st.integers(1, 9))
def test_srec_matches_the_graph_level_oracle(seed, src, tgt, size):
    rng = random.Random(seed)
    d = random_structural_def(rng)
    t = A.random_term(src, tgt, max(size, A.min_size(len(tgt))), rng.randrange(2 ** 32))
    out = REC.srec(d, t)
    assert out.src == REC.dup(src, d.k) and len(out.tgt) == len(tgt) * d.k
    assert G.bisimilar(G.interpret(out), oracle_srec(d, t))[0]


@settings(max_examples=150, deadline=None)
@given(seeds, st.sampled_from([RELABEL, GROW]), st.integers(1, 9))
def test_prec_matches_the_graph_level_oracle(seed, text, size):
    d = rec_def(text, text.split()[1].split("(")[0], REC.PRIMITIVE)
    t = A.random_term((), AMP, size, seed)
    assert G.bisimilar(G.interpret(REC.prec(d, t)), oracle_prec(d, t))[0]


@settings(max_examples=150, deadline=None)
@given(seeds, st.sampled_from([RELABEL, GROW]), st.integers(1, 9))
def test_product_structure_pairs_result_and_input(seed, text, size):
    d = rec_def(text, text.split()[1].split("(")[0], REC.PRIMITIVE)
    t = A.random_term((), AMP, size, seed)
    assert bisim(REC.prec_pair(d, t), T.pair([REC.prec(d, t), t], ()))


def _closed_equation(rng):
    eq = A.random_equation(rng, 5, 1)
    sub = T.pair([A.random_term((), AMP, rng.randint(1, 4), rng.randrange(2 ** 32))
                  for _ in eq.source], ())
    return T.comp(eq.lhs, sub), T.comp(eq.rhs, sub)


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_srec_respects_bisimilarity(seed):
    rng = random.Random(seed)
    s, t = _closed_equation(rng)
    d = random_structural_def(rng)
    assert bisim(REC.srec(d, s), REC.srec(d, t))


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_prec_respects_bisimilarity(seed):
    rng = random.Random(seed)
    s, t = _closed_equation(rng)
    d = rec_def(GROW, "g", REC.PRIMITIVE)
    assert bisim(REC.prec(d, s), REC.prec(d, t))


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_evaluation_respects_axiom_instances(seed):
    rng = random.Random(seed)
    s, t = _closed_equation(rng)
    env = REC.EvalEnv(S.parse_program(F2 + "\n" + GROW))
    for f in ("f2", "g"):
        lhs = REC.run(env, T.call(f, s))
        rhs = REC.run(env, T.call(f, t))
        assert bisim(lhs, rhs)


# ----------------------------------------------------------------- fusion

def test_relabel_fusion():
    e, h = rec_def(F2, "f2"), rec_def(RELABEL, "h")
    d = rec_def("sfun g(L:t) = b:g(t)", "g")
    r = REC.fusion_check(e, d, h, trials=30, seed=1)
    assert r == {"hypothesis": "ok", "trials": 30, "failures": []}


def test_identity_fusion_gives_back_e():
    e = rec_def(F2, "f2")
    ident = rec_def("sfun i(L:t) = L:i(t)", "i")
    assert not REC.fusion_check(e, e, ident, trials=30, seed=2)["failures"]


def test_fusion_hypothesis_violation_names_the_label():
    e, h = rec_def(F2, "f2"), rec_def(RELABEL, "h")
    bad = rec_def("sfun g(a:t) = b:g(t)\n g(L:t) = a:g(t) where L /= a", "g")
    with pytest.raises(HypothesisFailed) as info:
        REC.fusion_check(e, bad, h)
    assert info.value.label == "b"


def test_primitive_fusion():
    e = rec_def("sfun pe(a:t) = b:t\n pe(L:t) = L:pe(t) where L /= a", "pe")
    d = rec_def(GROW, "g")
    assert not REC.prec_fusion_check(e, d, trials=50, seed=3)["failures"]


def test_primitive_fusion_result_projects_the_composite():
    e = rec_def("sfun pe(a:t) = b:t\n pe(L:t) = L:pe(t) where L /= a", "pe")
    d = rec_def(GROW, "g")
    t = typed("a:b:cycle(&:=a:&)")
    lhs = REC.prec(d, R.normalize(REC.prec(e, t)))
    assert bisim(lhs, REC.apply_fused(REC.fused_prec(e, d), t))
