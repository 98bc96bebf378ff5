"""Rooted epsilon-labelled graphs, the interpretation of typed terms as
graphs, epsilon elimination, extended bisimilarity, traces and DOT output.

A graph over ``Y -> X`` has one root per marker of X and output marks drawn
from Y; vertices are the integers ``0..n-1`` and an epsilon edge carries the
label ``None``.
"""

import json
from collections import deque
from dataclasses import dataclass

from . import typing as T
from .errors import (ContextSplitError, InterfaceMismatch, MarkerMismatch, NotClosed,
                     UserError)


@dataclass(frozen=True)
class Graph:
    n: int
    edges: frozenset
    roots: tuple
    outputs: frozenset
    in_markers: tuple
    out_markers: tuple

    @property
    def vertices(self):
        return range(self.n)

    def labelled_edges(self):
        return sorted((e for e in self.edges if e[1] is not None), key=_edge_key)

    def eps_edges(self):
        return sorted((v, u) for v, l, u in self.edges if l is None)


def _edge_key(e):
    return (e[0], "" if e[1] is None else e[1], e[2])


def _shift(g, off):
    edges = {(v + off, l, u + off) for v, l, u in g.edges}
    return edges, tuple(r + off for r in g.roots), {(v + off, i) for v, i in g.outputs}


# --------------------------------------------------------------- atoms

def nil_graph(out_markers=()):
    return Graph(1, frozenset(), (0,), frozenset(), ("&",), tuple(out_markers))


def emp_graph(out_markers=()):
    return Graph(0, frozenset(), (), frozenset(), (), tuple(out_markers))


def man_graph(out_markers=("&x", "&y")):
    return Graph(1, frozenset(), (0,), frozenset({(0, 0), (0, 1)}), ("&",), tuple(out_markers))


def marker_graph(i, out_markers):
    return Graph(1, frozenset(), (0,), frozenset({(0, i)}), ("&",), tuple(out_markers))


def label_graph(lab):
    return Graph(2, frozenset({(0, lab, 1)}), (0,), frozenset({(1, 0)}), ("&",), ("&",))


def identity_graph(markers):
    k = len(markers)
    return Graph(k, frozenset(), tuple(range(k)), frozenset((i, i) for i in range(k)),
                 tuple(markers), tuple(markers))


# -------------------------------------------------------- constructors

def compose(g1, g2):
    """``g1 . g2``: each output of g1 gets an epsilon edge to the matching
    root of g2."""
    if len(g1.out_markers) != len(g2.in_markers):
        raise MarkerMismatch(
            f"cannot compose: {len(g1.out_markers)} outputs vs {len(g2.in_markers)} roots")
    e2, r2, o2 = _shift(g2, g1.n)
    eps = {(v, None, r2[i]) for v, i in g1.outputs}
    return Graph(g1.n + g2.n, frozenset(set(g1.edges) | e2 | eps), g1.roots,
                 frozenset(o2), g1.in_markers, g2.out_markers)


def pair(g1, g2):
    if len(g1.out_markers) != len(g2.out_markers):
        raise MarkerMismatch("paired graphs must share their output markers")
    e2, r2, o2 = _shift(g2, g1.n)
    return Graph(g1.n + g2.n, frozenset(set(g1.edges) | e2), g1.roots + r2,
                 frozenset(set(g1.outputs) | o2),
                 g1.in_markers + g2.in_markers, g1.out_markers)


def pair_all(graphs, out_markers):
    g = emp_graph(out_markers)
    for h in graphs:
        g = pair(g, h)
    return g


def dagger(g, ny=None):
    """Feedback: outputs on the trailing X markers loop back to the roots."""
    m = len(g.in_markers)
    if ny is None:
        ny = len(g.out_markers) - m
    if ny < 0 or len(g.out_markers) != ny + m:
        raise ContextSplitError(
            f"outputs {len(g.out_markers)} do not split as Y+X with |X| = {m}")
    eps = {(v, None, g.roots[i - ny]) for v, i in g.outputs if i >= ny}
    outs = frozenset((v, i) for v, i in g.outputs if i < ny)
    return Graph(g.n, frozenset(set(g.edges) | eps), g.roots, outs, g.in_markers,
                 g.out_markers[:ny])


# ------------------------------------------------------ interpretation

def interpret(t):
    """The graph of a Call-free typed term, with roots named after the
    target context and outputs after the source context."""
    return _retarget(_interp(t), t)


def _interp(t):
    if isinstance(t, T.TMark):
        return marker_graph(t.index, t.src)
    if isinstance(t, T.TNil):
        return nil_graph(t.src)
    if isinstance(t, T.TEmp):
        return emp_graph(t.src)
    if isinstance(t, T.TMan):
        return man_graph(t.src)
    if isinstance(t, T.TLabel):
        return compose(label_graph(t.label), interpret(t.body))
    if isinstance(t, T.TComp):
        return compose(interpret(t.outer), interpret(t.inner))
    if isinstance(t, T.TPair):
        return pair_all([interpret(i) for i in t.items], t.src)
    if isinstance(t, T.TCycle):
        return dagger(interpret(t.body), len(t.src))
    if isinstance(t, T.TCall):
        raise UserError(f"cannot interpret unresolved call to {t.name}")
    raise TypeError(t)


def _retarget(g, t):
    return Graph(g.n, g.edges, g.roots, g.outputs, tuple(t.tgt), tuple(t.src))


# -------------------------------------------------- epsilon elimination

def _eps_closure(g):
    succ = [[] for _ in range(g.n)]
    for v, l, u in g.edges:
        if l is None:
            succ[v].append(u)
    closure = []
    for v in range(g.n):
        seen = {v}
        stack = [v]
        while stack:
            w = stack.pop()
            for u in succ[w]:
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        closure.append(seen)
    return closure


def eliminate_epsilon(g):
    """An epsilon-free graph with the same observations, restricted to the
    vertices reachable from the roots and renumbered in BFS order."""
    cl = _eps_closure(g)
    lab = [[] for _ in range(g.n)]
    out = [set() for _ in range(g.n)]
    for v, l, u in g.edges:
        if l is not None:
            lab[v].append((l, u))
    for v, i in g.outputs:
        out[v].add(i)
    new_lab, new_out = {}, {}
    order, index = [], {}
    queue = deque()
    for r in g.roots:
        if r not in index:
            index[r] = len(order)
            order.append(r)
            queue.append(r)
    while queue:
        v = queue.popleft()
        es, os = set(), set()
        for w in cl[v]:
            es.update(lab[w])
            os.update(out[w])
        new_lab[v], new_out[v] = es, os
        for l, u in sorted(es, key=lambda e: (e[0], e[1])):
            if u not in index:
                index[u] = len(order)
                order.append(u)
                queue.append(u)
    edges = frozenset((index[v], l, index[u]) for v in order for l, u in new_lab[v])
    outputs = frozenset((index[v], i) for v in order for i in new_out[v])
    return Graph(len(order), edges, tuple(index[r] for r in g.roots), outputs,
                 g.in_markers, g.out_markers)


# ------------------------------------------------------- bisimilarity

@dataclass(frozen=True)
class BisimWitness:
    relation: frozenset


def _check_interfaces(g1, g2):
    if len(g1.in_markers) != len(g2.in_markers) or len(g1.out_markers) != len(g2.out_markers):
        raise InterfaceMismatch(
            f"interfaces differ: {len(g1.in_markers)}->{len(g1.out_markers)} vs "
            f"{len(g2.in_markers)}->{len(g2.out_markers)}")


def _union(h1, h2):
    off = h1.n
    succ = [set() for _ in range(h1.n + h2.n)]
    outs = [set() for _ in range(h1.n + h2.n)]
    for v, l, u in h1.edges:
        succ[v].add((l, u))
    for v, l, u in h2.edges:
        succ[v + off].add((l, u + off))
    for v, i in h1.outputs:
        outs[v].add(i)
    for v, i in h2.outputs:
        outs[v + off].add(i)
    return succ, [frozenset(o) for o in outs], off


def _partition(succ, outs):
    keys = {}
    block = [keys.setdefault(o, len(keys)) for o in outs]
    nblocks = len(keys)
    while True:
        keys = {}
        new = [keys.setdefault((block[v], frozenset((l, block[u]) for l, u in succ[v])), len(keys))
               for v in range(len(succ))]
        if len(keys) == nblocks:
            return new
        block, nblocks = new, len(keys)


def bisimilar(g1, g2, witness=False):
    """Decide extended bisimilarity by partition refinement on the
    epsilon-eliminated graphs.  Returns ``(decision, witness)``."""
    _check_interfaces(g1, g2)
    h1, h2 = eliminate_epsilon(g1), eliminate_epsilon(g2)
    succ, outs, off = _union(h1, h2)
    block = _partition(succ, outs)
    ok = all(block[a] == block[b + off] for a, b in zip(h1.roots, h2.roots))
    if not witness:
        return ok, None
    rel = frozenset((v, u) for v in range(h1.n) for u in range(h2.n)
                    if block[v] == block[u + off]) if ok else None
    return ok, (BisimWitness(rel) if ok else None)


def bisimilar_naive(g1, g2):
    """Reference decision: greatest fixpoint over vertex pairs."""
    _check_interfaces(g1, g2)
    h1, h2 = eliminate_epsilon(g1), eliminate_epsilon(g2)
    s1 = [set() for _ in range(h1.n)]
    s2 = [set() for _ in range(h2.n)]
    for v, l, u in h1.edges:
        s1[v].add((l, u))
    for v, l, u in h2.edges:
        s2[v].add((l, u))
    o1 = [set() for _ in range(h1.n)]
    o2 = [set() for _ in range(h2.n)]
    for v, i in h1.outputs:
        o1[v].add(i)
    for v, i in h2.outputs:
        o2[v].add(i)
    rel = {(v, u) for v in range(h1.n) for u in range(h2.n) if o1[v] == o2[u]}
    changed = True
    while changed:
        changed = False
        for v, u in list(rel):
            fwd = all(any(l2 == l and (v2, u2) in rel for l2, u2 in s2[u]) for l, v2 in s1[v])
            bwd = all(any(l1 == l and (v1, u2) in rel for l1, v1 in s1[v]) for l, u2 in s2[u])
            if not (fwd and bwd):
                rel.discard((v, u))
                changed = True
    return all((a, b) in rel for a, b in zip(h1.roots, h2.roots))


def is_witness(g1, g2, relation):
    """Check that ``relation`` is an extended bisimulation between the
    epsilon-eliminated forms of g1 and g2 that relates their roots."""
    h1, h2 = eliminate_epsilon(g1), eliminate_epsilon(g2)
    s1 = [set() for _ in range(h1.n)]
    s2 = [set() for _ in range(h2.n)]
    for v, l, u in h1.edges:
        s1[v].add((l, u))
    for v, l, u in h2.edges:
        s2[v].add((l, u))
    o1 = [{i for w, i in h1.outputs if w == v} for v in range(h1.n)]
    o2 = [{i for w, i in h2.outputs if w == v} for v in range(h2.n)]
    for v, u in relation:
        if o1[v] != o2[u]:
            return False
        if not all(any(l2 == l and (v2, u2) in relation for l2, u2 in s2[u]) for l, v2 in s1[v]):
            return False
        if not all(any(l1 == l and (v1, u2) in relation for l1, v1 in s1[v]) for l, u2 in s2[u]):
            return False
    return all((a, b) in relation for a, b in zip(h1.roots, h2.roots))


def terms_bisimilar(s, t):
    return bisimilar(interpret(s), interpret(t))[0]


# ------------------------------------------------------------- traces

def traces(g, depth, cap=32):
    """Label strings of length <= depth readable from the single root."""
    if len(g.in_markers) != 1:
        raise NotClosed("traces need a single root")
    if g.out_markers:
        raise NotClosed("traces need a closed graph (no output markers)")
    depth = min(depth, cap)
    h = eliminate_epsilon(g)
    succ = [[] for _ in range(h.n)]
    for v, l, u in h.edges:
        succ[v].append((l, u))
    result = {()}
    frontier = {((), h.roots[0])}
    for _ in range(depth):
        nxt = set()
        for word, v in frontier:
            for l, u in succ[v]:
                nxt.add((word + (l,), u))
        result.update(w for w, _ in nxt)
        frontier = nxt
    return result


def format_trace(word):
    return "".join(word) if all(len(l) == 1 for l in word) else ".".join(word)


# --------------------------------------------------------------- output

def _q(s):
    return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(g):
    lines = ["digraph G {"]
    if g.n or g.roots:
        lines.append('  node [shape=circle, label="", width=0.25];')
    for v in range(g.n):
        lines.append(f"  v{v};")
    for v, l, u in sorted(g.edges, key=_edge_key):
        if l is None:
            lines.append(f"  v{v} -> v{u} [style=dashed];")
        else:
            lines.append(f"  v{v} -> v{u} [label={_q(l)}];")
    for j, r in enumerate(g.roots):
        lines.append(f"  r{j} [shape=plaintext, label={_q(g.in_markers[j])}];")
        lines.append(f"  r{j} -> v{r} [style=bold];")
    for k, (v, i) in enumerate(sorted(g.outputs)):
        lines.append(f"  o{k} [shape=plaintext, label={_q(g.out_markers[i])}];")
        lines.append(f"  v{v} -> o{k} [style=dotted, arrowhead=none];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_json(g):
    d = {
        "vertices": list(range(g.n)),
        "edges": [[v, l, u] for v, l, u in g.labelled_edges()],
        "eps": [list(e) for e in g.eps_edges()],
        "roots": {name: r for name, r in zip(g.in_markers, g.roots)},
        "outputs": [[v, g.out_markers[i]] for v, i in sorted(g.outputs)],
    }
    return json.dumps(d, sort_keys=True)
