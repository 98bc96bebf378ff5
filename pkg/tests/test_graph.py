import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uncal import axioms as A
from uncal import graph as G
from uncal.errors import ContextSplitError, InterfaceMismatch, MarkerMismatch, NotClosed

from conftest import AMP, T_G, typed

seeds = st.integers(0, 2 ** 32 - 1)


def gr(text, source=()):
    return G.interpret(typed(text, source))


def same(g, h):
    return G.bisimilar(g, h)[0]


def random_graph(src, tgt, seed, size=7):
    rng = random.Random(seed)
    return G.interpret(A.random_term(src, tgt, rng.randint(A.min_size(len(tgt)), size),
                                     rng.randrange(2 ** 32)))


# -------------------------------------------------------------- atoms

def test_label_graph():
    g = G.label_graph("a")
    assert (g.n, set(g.edges), g.roots, set(g.outputs)) == (2, {(0, "a", 1)}, (0,), {(1, 0)})


def test_nil_graph():
    g = G.nil_graph()
    assert (g.n, g.edges, g.outputs, g.roots) == (1, frozenset(), frozenset(), (0,))


def test_marker_graph_is_identity_on_one_marker():
    m, i = G.marker_graph(0, ("&y",)), G.identity_graph(("&y",))
    assert (m.n, m.edges, m.roots, m.outputs) == (i.n, i.edges, i.roots, i.outputs)


def test_man_graph_has_one_root_and_two_outputs():
    g = G.man_graph()
    assert g.n == 1 and len(g.roots) == 1 and set(g.outputs) == {(0, 0), (0, 1)}


# ------------------------------------------------------- constructors

def test_compose_substitutes():
    g = G.compose(gr("a:&y", ("&y",)), gr("y := b:{}"))
    assert same(g, gr("a:b:{}"))


def test_compose_with_identity():
    g = gr("{a:&y1, b:&y2}", ("&y1", "&y2"))
    assert same(G.compose(g, G.identity_graph(("&y1", "&y2"))), g)


def test_compose_over_empty_interface_adds_no_edges():
    g1, g2 = G.emp_graph(), G.emp_graph()
    h = G.compose(g1, g2)
    assert h.n == 0 and not h.edges


def test_compose_checks_the_interface():
    with pytest.raises(MarkerMismatch):
        G.compose(gr("a:&y", ("&y",)), G.emp_graph())


def test_pair_of_nils():
    g = G.pair(G.nil_graph(), G.nil_graph())
    assert g.n == 2 and len(g.roots) == 2 and not g.edges


def test_pair_with_projection():
    g1, g2 = gr("a:{}"), gr("b:c:{}")
    p = G.pair(g1, g2)
    first = G.compose(gr("&x1", ("&x1", "&x2")), p)
    assert same(first, g1)


def test_pair_with_empty_is_neutral():
    g = gr("a:{}")
    assert same(G.pair(g, G.emp_graph()), g)


def test_dagger_of_identity_is_nil():
    assert same(G.dagger(gr("&", AMP)), G.nil_graph())


LOOP = G.Graph(1, frozenset({(0, "a", 0)}), (0,), frozenset(), AMP, ())


def test_dagger_of_label_is_a_loop():
    h = G.eliminate_epsilon(G.dagger(gr("a:&", AMP)))
    assert not h.eps_edges() and same(h, LOOP)


def test_dagger_of_man_is_identity():
    g = G.dagger(G.man_graph(("&y", "&")))
    assert same(g, G.identity_graph(("&y",)))


def test_dagger_needs_a_split():
    with pytest.raises(ContextSplitError):
        G.dagger(G.pair(G.nil_graph(), G.nil_graph()))


# ----------------------------------------------------- interpretation

def test_graph_of_the_introduction_term():
    # root -a-> v1, v1 -b,c-> v2, v2 -d-> v3, v3 -p-> y1, -q-> y2, -r-> v2
    edges = {(0, "a", 1), (1, "b", 2), (1, "c", 2), (2, "d", 3), (3, "p", 4), (3, "q", 5), (3, "r", 2)}
    expected = G.Graph(6, frozenset(edges), (0,), frozenset({(4, 0), (5, 1)}), AMP, ("&y1", "&y2"))
    assert same(gr(T_G, ("&y1", "&y2")), expected)


def test_self_loop_after_elimination():
    h = G.eliminate_epsilon(gr("cycle(&:=a:&)"))
    assert {l for _, l, _ in h.edges} == {"a"} and same(h, LOOP)


def test_empty_tuple_graph():
    g = G.interpret(typed("()"))
    assert g.roots == () and g.n == 0


# -------------------------------------------------------- elimination

def test_elimination_of_the_introduction_graph_is_epsilon_free():
    h = G.eliminate_epsilon(gr(T_G, ("&y1", "&y2")))
    assert not h.eps_edges()
    assert {l for _, l, _ in h.edges} == set("abcdpqr")


def test_elimination_keeps_reachable_part_only():
    g = G.Graph(3, frozenset({(0, "a", 1), (2, "b", 2)}), (0,), frozenset(), AMP, ())
    h = G.eliminate_epsilon(g)
    assert h.n == 2 and set(h.edges) == {(0, "a", 1)}


def test_pure_epsilon_cycle_becomes_a_bare_root():
    h = G.eliminate_epsilon(gr("cycle(&)"))
    assert h.n == 1 and not h.edges and not h.outputs


@settings(max_examples=100, deadline=None)
@given(st.sampled_from([(), ("&y",)]), seeds)
def test_elimination_preserves_bisimilarity_and_is_idempotent(src, seed):
    g = random_graph(src, AMP, seed)
    h = G.eliminate_epsilon(g)
    hh = G.eliminate_epsilon(h)
    assert same(g, h)
    assert (hh.n, len(hh.edges)) == (h.n, len(h.edges))


# -------------------------------------------------------- bisimilarity

def test_loop_unfolds():
    assert same(gr("cycle(&:=a:&)"), gr("a:cycle(&:=a:&)"))


def test_distinct_labels():
    assert not same(gr("a:{}"), gr("b:{}"))


def test_union_is_idempotent():
    assert same(gr("{a:{}, a:{}}"), gr("a:{}"))


def test_interfaces_must_agree():
    with pytest.raises(InterfaceMismatch):
        G.bisimilar(gr("a:{}"), gr("a:&y", ("&y",)))


def test_witness_is_a_bisimulation():
    g, h = gr("cycle(&:=a:&)"), gr("a:a:cycle(&:=a:&)")
    ok, w = G.bisimilar(g, h, witness=True)
    assert ok and G.is_witness(g, h, w.relation)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from([(), ("&y",)]), seeds, seeds)
def test_partition_refinement_matches_naive_fixpoint(src, s1, s2):
    g, h = random_graph(src, AMP, s1, 6), random_graph(src, AMP, s2, 6)
    assert G.bisimilar(g, h)[0] == G.bisimilar_naive(g, h)
    assert G.bisimilar_naive(g, g)


@settings(max_examples=100, deadline=None)
@given(seeds, seeds)
def test_bisimilarity_is_an_equivalence(s1, s2):
    rng = random.Random(s1)
    eq = A.random_equation(rng, 5, 1)
    g, h = G.interpret(eq.lhs), G.interpret(eq.rhs)
    k = G.interpret(A.random_term(eq.lhs.src, AMP, 3, s2))
    assert same(g, g)
    assert same(g, h) == same(h, g)
    if same(g, h) and same(h, k):
        assert same(g, k)
    assert same(g, k) == same(h, k)


@settings(max_examples=100, deadline=None)
@given(seeds, seeds, seeds)
def test_composition_is_associative(s1, s2, s3):
    f = random_graph(("&u",), AMP, s1)
    g = random_graph(("&v",), ("&u",), s2)
    h = random_graph(("&w",), ("&v",), s3)
    assert same(G.compose(G.compose(f, g), h), G.compose(f, G.compose(g, h)))


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_fixed_point_property(seed):
    g = random_graph(("&y", "&"), AMP, seed)
    d = G.dagger(g)
    unfolded = G.compose(g, G.pair(G.identity_graph(("&y",)), d))
    assert same(d, unfolded)


# --------------------------------------------------------------- traces

def test_traces_of_a_loop():
    assert G.traces(gr("cycle(&:=a:&)"), 3) == {(), ("a",), ("a", "a"), ("a", "a", "a")}


def test_traces_of_nil():
    assert G.traces(gr("{}"), 5) == {()}


def test_traces_of_a_branch():
    assert G.traces(gr("a:b:{} U a:c:{}"), 2) == {(), ("a",), ("a", "b"), ("a", "c")}


def test_traces_need_a_closed_graph():
    with pytest.raises(NotClosed):
        G.traces(gr("a:&y", ("&y",)), 2)


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_bisimilar_graphs_have_equal_traces(seed):
    rng = random.Random(seed)
    eq = A.random_equation(rng, 5, 1)
    sub = [A.random_term((), AMP, rng.randint(1, 4), rng.randrange(2 ** 32)) for _ in eq.source]
    g = G.compose(G.interpret(eq.lhs), G.pair_all([G.interpret(s) for s in sub], ()))
    h = G.compose(G.interpret(eq.rhs), G.pair_all([G.interpret(s) for s in sub], ()))
    assert same(g, h)
    for d in range(9):
        assert G.traces(g, d) == G.traces(h, d)


# ----------------------------------------------------------------- DOT

def test_dot_of_empty_graph():
    assert G.to_dot(G.emp_graph()) == "digraph G {\n}\n"


def test_dot_of_label_graph():
    assert G.to_dot(G.label_graph("a")) == (
        "digraph G {\n"
        '  node [shape=circle, label="", width=0.25];\n'
        "  v0;\n"
        "  v1;\n"
        '  v0 -> v1 [label="a"];\n'
        '  r0 [shape=plaintext, label="&"];\n'
        "  r0 -> v0 [style=bold];\n"
        '  o0 [shape=plaintext, label="&"];\n'
        "  v1 -> o0 [style=dotted, arrowhead=none];\n"
        "}\n")


def test_dot_shows_epsilon_edges_dashed():
    dot = G.to_dot(G.compose(G.label_graph("a"), G.label_graph("b")))
    assert "  v1 -> v2 [style=dashed];\n" in dot
    assert '  v2 -> v3 [label="b"];\n' in dot


def test_json_dump():
    assert G.to_json(G.label_graph("a")) == (
        '{"edges": [[0, "a", 1]], "eps": [], "outputs": [[1, "&"]], '
        '"roots": {"&": 0}, "vertices": [0, 1]}')
