import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uncal import axioms as A
from uncal import typing as T
from uncal.errors import SlotJudgmentMismatch

from conftest import AMP, bisim, typed

seeds = st.integers(0, 2 ** 32 - 1)

AXG_NAMES = {"sub", "SP", "eta_man", "fix", "nat", "dinat", "bekic", "CI", "c1", "c2",
             "unitL_man", "unitR_man", "assoc_man", "com_man", "degen"}


def test_all_axg_schemas_are_present():
    assert set(A.AXG) == AXG_NAMES
    assert len(A.DERIVED) >= 17 and "degen_prime" in A.DERIVED and "tmnl" in A.DERIVED
    assert A.MUTANTS == ["c2_mutant"]


def test_c1_instance():
    eq = A.instantiate("c1", {})
    assert (eq.source, eq.target) == ((), AMP)
    assert eq.lhs == typed("cycle(&)") and eq.rhs == typed("{}")


def test_fix_instance_unfolds_the_loop():
    eq = A.instantiate("fix", {"t": typed("a:&", AMP)})
    assert eq.lhs == typed("cycle(a:&)")
    assert eq.rhs == T.comp(typed("a:&", AMP), T.pair([T.emp(()), typed("cycle(a:&)")], ()))
    assert A.equation_holds(eq)


def test_sp_instance():
    t = typed("(a:{}, b:{})")
    eq = A.instantiate("SP", {"t": t, "split": 1})
    assert eq.rhs == t
    assert A.equation_holds(eq)


def test_slot_judgments_are_checked():
    with pytest.raises(SlotJudgmentMismatch):
        A.instantiate("fix", {"t": typed("(a:{}, b:{})")})
    with pytest.raises(SlotJudgmentMismatch):
        A.instantiate("sub", {"t": typed("a:&y", ("&y",)), "s": [], "Z": ()})


def test_equation_sides_share_their_judgment():
    rng = random.Random(0)
    for name in A.AXG + A.DERIVED:
        _, eq = A.sample_equation(name, rng, 5)
        assert len(eq.lhs.src) == len(eq.rhs.src) == len(eq.source)
        assert len(eq.lhs.tgt) == len(eq.rhs.tgt) == len(eq.target)


# ---------------------------------------------------------- generator

def test_size_one_closed_term_is_nil():
    for seed in range(20):
        assert A.random_term((), AMP, 1, seed) == typed("{}")


def test_generator_is_deterministic():
    a = A.random_term(("&y",), ("&x1", "&x2"), 8, 1234)
    b = A.random_term(("&y",), ("&x1", "&x2"), 8, 1234)
    assert a == b and T.show(a) == T.show(b)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from([(), ("&y",), ("&y1", "&y2")]),
       st.sampled_from([(), AMP, ("&x1", "&x2")]), st.integers(1, 10), seeds)
def test_generated_terms_typecheck(src, tgt, size, seed):
    t = A.random_term(src, tgt, max(size, A.min_size(len(tgt))), seed)
    assert t.src == src and len(t.tgt) == len(tgt)
    assert len(T.infer(T.to_raw(t), src).tgt) == len(tgt)
    assert T.labels_in(t) <= set(A.ALPHABET)


# ------------------------------------------------------------ soundness

def test_degen_and_bekic_are_sound():
    for name in ("degen", "degen_prime", "bekic"):
        r = A.check_soundness(name, 100, 6, 0)
        assert r == {"schema": name, "trials": 100, "failures": []}


def test_derivable_axioms_are_also_sound():
    for name in ("c1", "unitR_man"):
        assert not A.check_soundness(name, 20, 6, 1)["failures"]


def test_mutant_fails_with_a_witness():
    r = A.check_soundness("c2_mutant", 100, 6, 0)
    assert r["failures"]
    first = r["failures"][0]
    assert set(first) == {"trial", "assignment", "lhs", "rhs"}
    assert first["rhs"] == "{}"


def test_report_is_json():
    r = A.check_soundness("nat", 5, 4, 0)
    assert json.loads(A.report_json(r)) == r


@pytest.mark.parametrize("m", [1, 2])
def test_ci_exhaustive_for_small_m(m):
    rng = random.Random(m)
    ys = T.default_ctx(m, "&y")
    for rho in A.all_rhos(m):
        for _ in range(3):
            src = ("&x",) + ys
            t = A.random_term(src, AMP, rng.randint(1, 6), rng.randrange(2 ** 32))
            assert A.equation_holds(A.instantiate("CI", {"t": t, "rho": rho}))


def test_ci_sampled_for_m_three():
    rng = random.Random(3)
    ys = T.default_ctx(3, "&y")
    for _ in range(30):
        rho = [tuple(rng.randrange(3) for _ in range(3)) for _ in range(3)]
        t = A.random_term(ys, AMP, rng.randint(1, 6), rng.randrange(2 ** 32))
        assert A.equation_holds(A.instantiate("CI", {"t": t, "rho": rho}))


def test_all_rhos_counts():
    assert len(A.all_rhos(1)) == 1
    assert len(A.all_rhos(2)) == 16


def test_random_equation_has_requested_target():
    rng = random.Random(9)
    for _ in range(20):
        eq = A.random_equation(rng, 5, 1)
        assert len(eq.target) == 1
        assert bisim(eq.lhs, eq.rhs)
