import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uncal import axioms as A
from uncal import rewrite as R
from uncal import syntax as S
from uncal import typing as T
from uncal.errors import FuelExhausted, NotInN, TypeNotSingleton

from conftest import AMP, bisim, typed

seeds = st.integers(0, 2 ** 32 - 1)
sources = st.sampled_from([(), ("&y",), ("&y1", "&y2")])
targets = st.sampled_from([AMP, ("&x1", "&x2")])


def random_term(src, tgt, size, seed):
    return A.random_term(src, tgt, max(size, A.min_size(len(tgt))), seed)


# ------------------------------------------------------------------ steps

def test_sub_step():
    assert R.step(typed("(a:&x) @ (x := b:{})")) == typed("a:b:{}")


def test_bekic_step_peels_the_last_coordinate():
    t = typed("cycle((x1 := a:&x2, x2 := b:&x1))")
    out = R.step(t)
    assert isinstance(out, T.TComp) and isinstance(out.outer, T.TPair)
    inner = out.outer.items[1]
    assert isinstance(inner, T.TCycle) and len(inner.tgt) == 1
    assert bisim(out, t)


def test_normal_term_has_no_step():
    assert R.step(typed("a:{}")) is None


def test_normalize_composition():
    assert R.normalize(typed("(a:&) @ (a:{})")) == typed("a:a:{}")


def test_normalize_is_identity_on_values():
    assert R.normalize(typed("a:{}")) == typed("a:{}")


def test_cycle_over_a_pair_normalizes_to_a_tuple():
    n = R.normalize(typed("cycle((x1 := a:&x2, x2 := b:&x1))"))
    assert isinstance(n, T.TPair) and len(n.items) == 2
    assert all(isinstance(i, T.TCycle) for i in n.items)


def test_fuel_exhaustion_is_reported():
    with pytest.raises(FuelExhausted):
        R.normalize(typed("(a:&) @ (b:&) @ (c:{})"), fuel=0)
    with pytest.raises(FuelExhausted):
        R.normalize(typed("(a:&) @ (b:&) @ (c:{})"), fuel=1, strategy="left")


# --------------------------------------------------------------- grammars

def test_bare_man_is_eta_expanded():
    n = R.eta_man_expand(T.infer(S.Man(), ("&y1", "&y2")))
    assert R.is_N(n)
    assert n == typed("! @ (&y1, &y2)", ("&y1", "&y2"))


def test_label_unchanged_by_eta():
    assert R.eta_man_expand(typed("a:{}")) == typed("a:{}")


def test_nested_man_is_expanded():
    t = typed("a:!", ("&y1", "&y2"))
    assert R.is_M(t) and not R.is_N(t)
    assert R.is_N(R.eta_man_expand(t))


def test_eta_needs_a_single_root():
    with pytest.raises(TypeNotSingleton):
        R.eta_man_expand(typed("(a:{}, b:{})"))


@settings(max_examples=200, deadline=None)
@given(sources, targets, st.integers(1, 10), seeds)
def test_normal_forms_are_values(src, tgt, size, seed):
    t = random_term(src, tgt, size, seed)
    n = R.normalize(t)
    assert R.is_M(n)
    assert R.step(n, "left") is None and R.step(n, "right") is None
    assert n.src == t.src and len(n.tgt) == len(t.tgt)
    if len(tgt) == 1:
        assert R.is_N(R.eta_man_expand(n))


@settings(max_examples=200, deadline=None)
@given(sources, targets, st.integers(1, 8), seeds)
def test_each_step_preserves_judgment_and_meaning(src, tgt, size, seed):
    t = random_term(src, tgt, size, seed)
    for _ in range(20):
        u = R.step(t)
        if u is None:
            break
        assert u.src == t.src and len(u.tgt) == len(t.tgt)
        assert bisim(u, t)
        t = u


@settings(max_examples=200, deadline=None)
@given(sources, targets, st.integers(1, 10), seeds)
def test_strategies_reach_the_same_normal_form(src, tgt, size, seed):
    t = random_term(src, tgt, size, seed)
    n = R.normalize(t, strategy="left")
    assert R.normalize(t, strategy="right") == n
    assert R.normalize(t, strategy="outer") == n
    assert R.normalize(t) == n
    assert bisim(n, t)


# ---------------------------------------------------------------- mu-terms

def test_loop_to_mu():
    assert R.to_mu(typed("cycle(x := a:&x)")) == R.Mu("x", R.App("a", R.Var("x")))


def test_nil_to_mu():
    assert R.to_mu(typed("{}")) == R.Zero()


def test_union_to_mu():
    m = R.to_mu(R.nf_N(typed("{a:{}, b:{}}")))
    assert m == R.Plus(R.App("a", R.Zero()), R.App("b", R.Zero()))
    assert R.print_mu(m) == "a(0) + b(0)"


def test_mu_to_term_examples():
    assert R.mu_to_term(R.parse_mu("mu x. a(x)")) == typed("cycle(x := a:&x)")
    assert R.mu_to_term(R.Zero()) == typed("{}")


def test_unfolded_loop_has_bisimilar_image():
    assert bisim(R.mu_to_term(R.parse_mu("mu x. a(x)")),
                 R.mu_to_term(R.parse_mu("a(mu x. a(x))")))


def test_to_mu_rejects_non_n_terms():
    with pytest.raises(NotInN):
        R.to_mu(T.infer(S.Man(), ("&y1", "&y2")))


def test_free_variables_become_markers():
    t = R.mu_to_term(R.parse_mu("a(y1) + b(y2)"))
    assert t.src == ("&y1", "&y2")


def _names(n):
    return [m[1:] or "x" for m in T.distinct(n.src)]


@settings(max_examples=200, deadline=None)
@given(sources, st.integers(1, 10), seeds)
def test_mu_bijection(src, size, seed):
    n = R.nf_N(random_term(src, AMP, size, seed))
    m = R.to_mu(n)
    assert R.mu_to_term(m, _names(n)) == n
    assert R.to_mu(R.mu_to_term(m, _names(n))) == m
    assert R.parse_mu(R.print_mu(m)) == m


@settings(max_examples=150, deadline=None)
@given(seeds)
def test_bisimilarity_is_decided_on_mu_images(seed):
    rng = random.Random(seed)
    s = A.random_term((), AMP, rng.randint(1, 7), rng.randrange(2 ** 32))
    t = A.random_term((), AMP, rng.randint(1, 7), rng.randrange(2 ** 32))
    image = lambda u: R.mu_to_term(R.to_mu(R.nf_N(u)))  # noqa: E731
    assert bisim(s, t) == bisim(image(s), image(t))
