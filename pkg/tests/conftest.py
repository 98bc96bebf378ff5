import random
from pathlib import Path

import pytest

from uncal import axioms as A
from uncal import graph as G
from uncal import recursion as REC
from uncal import syntax as S
from uncal import typing as T

ROOT = Path(__file__).resolve().parent.parent
PROGRAMS = ROOT / "programs"
AMP = ("&",)

T_G = "a:(b:&x U c:&x) @ cycle(x := d:(p:&y1 U q:&y2 U r:&x))"
F2_OF_T_G = "a:(a:&x U a:&x) @ cycle(x := a:(a:&y1 U a:&y2 U a:&x))"


def typed(text, source=(), program=None):
    return T.infer(S.parse_term(text), tuple(source), program)


def bisim(s, t):
    return G.terms_bisimilar(s, t)


def program(name):
    return S.parse_program((PROGRAMS / name).read_text())


def rec_def(text, name, mode=None):
    prog = S.parse_program(text)
    return REC.from_sfun(prog.sfuns[name], prog, mode)


def closed_terms(n, size, seed):
    rng = random.Random(seed)
    return [A.random_term((), AMP, rng.randint(1, size), rng.randrange(2 ** 32)) for _ in range(n)]


def random_structural_def(rng, W=("&z1", "&z2"), size=5):
    bodies = {lab: A.random_term(W, W, rng.randint(A.min_size(len(W)), size), rng.randrange(2 ** 32))
              for lab in A.ALPHABET}
    return REC.make_def("r", bodies)


# ------------------------------------------------------------------ oracle
#
# Graph-level structural recursion: every vertex is copied k times, every
# labelled edge (v, l, u) is replaced by a fresh copy of the body graph for l
# wired between the copies of v and u.  Independent of the term-level
# implementation, which recurses on syntax.

def bulk_srec(g, body_graph, k):
    """``body_graph(l)`` is a graph with k roots and k outputs."""
    n = g.n * k
    edges, extra = set(), []

    def vid(v, i):
        return v * k + i

    for v, lab, u in g.edges:
        if lab is None:
            edges.update((vid(v, i), None, vid(u, i)) for i in range(k))
            continue
        b = body_graph(lab)
        off = n
        n += b.n
        edges.update((off + x, l, off + y) for x, l, y in b.edges)
        edges.update((vid(v, i), None, off + b.roots[i]) for i in range(k))
        edges.update((off + w, None, vid(u, j)) for w, j in b.outputs)
        extra.append(b)
    roots = tuple(vid(r, i) for r in g.roots for i in range(k))
    outputs = frozenset((vid(v, i), y * k + i) for v, y in g.outputs for i in range(k))
    return G.Graph(n, frozenset(edges), roots, outputs,
                   REC.dup(g.in_markers, k), REC.dup(g.out_markers, k))


def oracle_srec(defn, t):
    return bulk_srec(G.interpret(t), lambda lab: G.interpret(defn.body(lab)), defn.k)


def product_body_graph(defn):
    """Body of the product structure used by primitive recursion: the
    definition's body paired with ``l:&`` on the extra coordinate."""
    k = defn.k

    def body(lab):
        b = G.interpret(defn.body(lab))
        edge = G.Graph(2, frozenset({(0, lab, 1)}), (0,), frozenset({(1, k)}), ("&",), b.out_markers)
        return G.pair(b, edge)
    return body


def oracle_prec(defn, t):
    """Closed t only: keep the first k of every k+1 roots."""
    k = defn.k
    g = bulk_srec(G.interpret(t), product_body_graph(defn), k + 1)
    keep = [i for i in range(len(g.roots)) if i % (k + 1) < k]
    return G.Graph(g.n, g.edges, tuple(g.roots[i] for i in keep), g.outputs,
                   tuple(g.in_markers[i] for i in keep), g.out_markers)


@pytest.fixture
def aa_env():
    return REC.EvalEnv(program("aa.unql"))
