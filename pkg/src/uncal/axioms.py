"""Axiom schemas, a random generator of well-typed terms, and a harness that
checks every schema in the graph model.

Each schema builds an equation ``Y |- lhs = rhs : X`` from an assignment of
its slots.  ``sample`` draws a random assignment that satisfies the slot
judgments; ``check_soundness`` instantiates a schema many times and decides
each instance by bisimilarity of the interpreted graphs.
"""

import itertools
import json
import random
from dataclasses import dataclass

from . import graph as G
from . import syntax as S
from . import typing as T
from .errors import InternalError, SlotJudgmentMismatch, Unsatisfiable, UserError

ALPHABET = ("a", "b", "c")


# ------------------------------------------------------------- generator

def min_size(n):
    """Smallest term size with a target of n markers."""
    return 1 if n <= 1 else n + 1


class _Gen:
    def __init__(self, rng, alphabet):
        self.rng = rng
        self.alphabet = tuple(alphabet)

    def term(self, src, tgt, size):
        n = len(tgt)
        if size < min_size(n):
            raise Unsatisfiable(f"size {size} is too small for a target of {n} markers")
        if n == 0:
            return self.empty(src, size)
        if n == 1:
            return self.single(src, tgt[0], size)
        return T.retag(self.multi(src, tgt, size), tgt)

    def empty(self, src, size):
        rng = self.rng
        if size >= 3 and rng.random() < 0.3:
            mid = self.context("&m", 0, 2)
            inner = self.term(src, mid, self.budget(size - 2, mid))
            return T.comp(T.emp(mid), inner)
        return T.emp(src)

    def budget(self, size, tgt):
        return self.rng.randint(min_size(len(tgt)), max(size, min_size(len(tgt))))

    def context(self, base, lo, hi):
        return T.default_ctx(self.rng.randint(lo, hi), base)

    def multi(self, src, tgt, size):
        rng = self.rng
        n = len(tgt)
        options = ["pair"]
        if size >= 1 + min_size(n):
            options += ["cycle", "comp"]
        choice = rng.choice(options)
        if choice == "cycle":
            return self.cycle(src, tgt, size)
        if choice == "comp":
            out = self.comp(src, tgt, size)
            if out is not None:
                return out
        j = rng.randint(1, n - 1)
        left, right = tgt[:j], tgt[j:]
        spare = size - 1 - min_size(len(left)) - min_size(len(right))
        extra = rng.randint(0, max(spare, 0))
        a = self.term(src, left, min_size(len(left)) + extra)
        b = self.term(src, right, min_size(len(right)) + max(spare - extra, 0))
        return T.pair([a, b], src)

    def cycle(self, src, tgt, size):
        xs = T.distinct(tgt, avoid=src)
        body = self.term(tuple(src) + xs, xs, size - 1)
        return T.retag(T.cycle(body, len(src)), tgt)

    def comp(self, src, tgt, size):
        mid = self.context("&m", 0, 2)
        rest = size - 1
        lo = min_size(len(tgt))
        hi = rest - min_size(len(mid))
        if hi < lo:
            return None
        so = self.rng.randint(lo, hi)
        outer = self.term(mid, tgt, so)
        inner = self.term(src, mid, rest - so)
        return T.retag(T.comp(outer, inner), tgt)

    def atom(self, src, name):
        options = ["nil"] + [i for i in range(len(src))]
        if len(src) == 2:
            options.append("man")
        pick = self.rng.choice(options)
        if pick == "nil":
            return T.nil(src, name)
        if pick == "man":
            return T.man(src, name)
        return T.mark(pick, src, name)

    def single(self, src, name, size):
        rng = self.rng
        if size == 1:
            return self.atom(src, name)
        options = ["atom", "label", "label", "cycle"]
        if size >= 3:
            options.append("comp")
        if size >= 5:
            options += ["union", "union"]
        choice = rng.choice(options)
        if choice == "atom":
            return self.atom(src, name)
        if choice == "label":
            body = self.term(src, ("&",), rng.randint(1, size - 1))
            return T.label(rng.choice(self.alphabet), body, name)
        if choice == "cycle":
            return self.cycle(src, (name,), rng.randint(2, size))
        if choice == "union":
            rest = size - 3
            sa = rng.randint(1, rest - 1)
            a = self.term(src, ("&",), sa)
            b = self.term(src, ("&",), rng.randint(1, rest - sa))
            return T.retag(T.union_of(a, b), (name,))
        out = self.comp(src, (name,), size)
        return out if out is not None else self.atom(src, name)


def random_term(source, target, size, seed, alphabet=ALPHABET):
    """A well-typed ``source |- t : target`` of size at most ``size``,
    determined by ``seed``."""
    src = tuple(S.marker(n) for n in source)
    tgt = tuple(S.marker(n) for n in target)
    if size < 1:
        raise Unsatisfiable("size must be at least 1")
    rng = random.Random(seed)
    last = None
    for _ in range(20):
        try:
            return _Gen(rng, alphabet).term(src, tgt, size)
        except Unsatisfiable as e:
            last = e
    raise last


def _filler(rng, src, tgt, max_size):
    size = max(min_size(len(tgt)), rng.randint(1, max_size))
    return random_term(src, tgt, size, rng.randrange(2 ** 32))


def _ctx(rng, base, lo, hi):
    return T.default_ctx(rng.randint(lo, hi), base)


# --------------------------------------------------------------- schemas

@dataclass(frozen=True)
class Equation:
    name: str
    source: tuple
    lhs: object
    rhs: object
    target: tuple

    def __str__(self):
        return (f"{T.fmt_ctx(self.source)} |- {T.show(self.lhs)} = {T.show(self.rhs)}"
                f" : {T.fmt_ctx(self.target)}")


@dataclass(frozen=True)
class AxiomSchema:
    name: str
    group: str
    slots: tuple
    build: object
    sample: object


def _need(cond, msg):
    if not cond:
        raise SlotJudgmentMismatch(msg)


def _amp(t, slot):
    _need(len(t.tgt) == 1, f"slot {slot} must have type &")


def _same_src(*ts):
    _need(len({len(t.src) for t in ts}) == 1, "slots must share their source context")


SCHEMAS = {}


def schema(name, group, slots):
    def deco(pair):
        build, sample = pair
        SCHEMAS[name] = AxiomSchema(name, group, tuple(slots), build, sample)
        return pair
    return deco


def _split_fix(t, slot="t"):
    nx = len(t.tgt)
    _need(len(t.src) >= nx, f"slot {slot} must have source Y+X with X its target")
    return len(t.src) - nx


# (sub) t @ <s1..sn> = t[y -> s]
def _sub_build(a):
    t, s, z = a["t"], list(a["s"]), tuple(a.get("Z", a["s"][0].src if a["s"] else ()))
    _need(len(s) == len(t.src), "sub: one filler per source marker of t")
    for si in s:
        _amp(si, "s")
        _need(len(si.src) == len(z), "sub: fillers must share the source Z")
    return T.comp(t, T.pair(s, z)), T.substitute(t, s, z)


def _sub_sample(rng, k):
    y, x, z = _ctx(rng, "&y", 0, 3), _ctx(rng, "&x", 0, 2), _ctx(rng, "&z", 0, 2)
    return {"t": _filler(rng, y, x, k), "s": [_filler(rng, z, ("&",), k) for _ in y], "Z": z}


schema("sub", "AxG", ["t", "s", "Z"])((_sub_build, _sub_sample))


def _sp_build(a):
    t, j = a["t"], a["split"]
    n = len(t.tgt)
    _need(0 <= j <= n, "SP: split point outside the target")
    left = T.comp(T.projection(t.tgt, range(j)), t)
    right = T.comp(T.projection(t.tgt, range(j, n)), t)
    return T.pair([left, right], t.src), t


def _sp_sample(rng, k):
    z = _ctx(rng, "&z", 0, 2)
    n = rng.randint(1, 3)
    t = _filler(rng, z, T.default_ctx(n, "&x"), k)
    return {"t": t, "split": rng.randint(0, n)}


schema("SP", "AxG", ["t", "split"])((_sp_build, _sp_sample))


def _eta_man_build(a):
    xy = ("&x", "&y")
    p = T.pair([T.mark(0, xy, "&x"), T.mark(1, xy, "&y")], xy)
    return T.comp(T.man(xy), p), T.man(xy)


schema("eta_man", "AxG", [])((_eta_man_build, lambda rng, k: {}))


def _fix_build(a):
    t = a["t"]
    ny = _split_fix(t)
    y = t.src[:ny]
    c = T.cycle(t, ny)
    return c, T.comp(t, T.pair([T.identity(y), c], y))


def _fix_sample(rng, k):
    y, x = _ctx(rng, "&y", 0, 2), _ctx(rng, "&x", 1, 2)
    return {"t": _filler(rng, y + x, x, k)}


schema("fix", "AxG", ["t"])((_fix_build, _fix_sample))


def _nat_build(a):
    t, s = a["t"], a["s"]
    ny = len(s.tgt)
    nx = len(t.tgt)
    _need(len(t.src) == ny + nx, "nat: t must have source Y+X where Y is the target of s")
    x = t.src[ny:]
    lhs = T.comp(T.cycle(t, ny), s)
    rhs = T.cycle(T.comp(t, T.times(s, T.identity(x))), len(s.src))
    return lhs, rhs


def _nat_sample(rng, k):
    y, x, z = _ctx(rng, "&y", 0, 2), _ctx(rng, "&x", 1, 2), _ctx(rng, "&z", 0, 2)
    return {"t": _filler(rng, y + x, x, k), "s": _filler(rng, z, y, k)}


schema("nat", "AxG", ["t", "s"])((_nat_build, _nat_sample))


def _dinat_build(a):
    s, t = a["s"], a["t"]
    nx = len(s.tgt)
    _need(len(t.tgt) == len(s.src), "dinat: target of t must be the source of s")
    _need(len(t.src) >= nx, "dinat: t must have source Y+X")
    ny = len(t.src) - nx
    y = t.src[:ny]
    lhs = T.cycle(T.comp(s, t), ny)
    rhs = T.comp(s, T.cycle(T.comp(t, T.times(T.identity(y), s)), ny))
    return lhs, rhs


def _dinat_sample(rng, k):
    y, x, z = _ctx(rng, "&y", 0, 2), _ctx(rng, "&x", 1, 2), _ctx(rng, "&z", 1, 2)
    return {"s": _filler(rng, z, x, k), "t": _filler(rng, y + x, z, k)}


schema("dinat", "AxG", ["s", "t"])((_dinat_build, _dinat_sample))


def _bekic_build(a):
    t, s = a["t"], a["s"]
    _same_src(t, s)
    nx, ny = len(t.tgt), len(s.tgt)
    nz = len(t.src) - nx - ny
    _need(nz >= 0, "bekic: fillers must have source Z+X+Y")
    src = t.src
    z, zx = src[:nz], src[:nz + nx]
    lhs = T.cycle(T.pair([t, s], src), nz)
    cy_s = T.cycle(s, nz + nx)
    inner = T.cycle(T.comp(t, T.pair([T.identity(zx), cy_s], zx)), nz)
    left = T.pair([T.projection(zx, range(nz, nz + nx)), cy_s], zx)
    rhs = T.comp(left, T.pair([T.identity(z), inner], z))
    return lhs, rhs


def _bekic_sample(rng, k):
    z, x, y = _ctx(rng, "&z", 0, 1), _ctx(rng, "&x", 1, 2), _ctx(rng, "&y", 1, 2)
    src = z + x + y
    return {"t": _filler(rng, src, x, k), "s": _filler(rng, src, y, k)}


schema("bekic", "AxG", ["t", "s"])((_bekic_build, _bekic_sample))


def ci_equation(t, rho):
    """Commutative identity for ``X+Y |- t : &`` and index maps rho
    (m tuples of m indices into Y, 0-based)."""
    m = len(rho)
    _amp(t, "t")
    nx = len(t.src) - m
    _need(nx >= 0, "CI: t must have source X+Y with |Y| = m")
    for r in rho:
        _need(len(r) == m and all(0 <= i < m for i in r), "CI: each rho_i maps 1..m to 1..m")
    x, y = t.src[:nx], t.src[nx:]
    items = []
    for r in rho:
        rho_i = T.pair([T.mark(i, y, y[j]) for j, i in enumerate(r)], y)
        items.append(T.comp(t, T.times(T.identity(x), rho_i)))
    lhs = T.retag(T.cycle(T.retag(T.pair(items, t.src), y), nx), y)
    delta = T.retag(T.pair([T.mark(0, ("&",), n) for n in y], ("&",)), y)
    rhs = T.comp(delta, T.cycle(T.comp(t, T.times(T.identity(x), delta)), nx))
    return lhs, rhs


def _ci_build(a):
    return ci_equation(a["t"], [tuple(r) for r in a["rho"]])


def _ci_sample(rng, k):
    m = rng.randint(1, 3)
    x, y = _ctx(rng, "&x", 0, 1), T.default_ctx(m, "&y")
    rho = [tuple(rng.randrange(m) for _ in range(m)) for _ in range(m)]
    return {"t": _filler(rng, x + y, ("&",), k), "rho": rho}


schema("CI", "AxG", ["t", "rho"])((_ci_build, _ci_sample))


def all_rhos(m):
    """Every choice of m index maps on 1..m (0-based)."""
    maps = list(itertools.product(range(m), repeat=m))
    return [list(c) for c in itertools.product(maps, repeat=m)]


def _c1_build(a):
    return T.cycle(T.mark(0, ("&",)), 0), T.nil(())


schema("c1", "AxG", [])((_c1_build, lambda rng, k: {}))


def _c2_build(a):
    return T.cycle(T.man(("&y", "&")), 1), T.mark(0, ("&y",))


schema("c2", "AxG", [])((_c2_build, lambda rng, k: {}))


def _unit_l_build(a):
    x = ("&x",)
    return T.comp(T.man(("&", "&x")), T.times(T.nil(()), T.identity(x))), T.mark(0, x)


schema("unitL_man", "AxG", [])((_unit_l_build, lambda rng, k: {}))


def _unit_r_build(a):
    x = ("&x",)
    return T.comp(T.man(("&x", "&")), T.times(T.identity(x), T.nil(()))), T.mark(0, x)


schema("unitR_man", "AxG", [])((_unit_r_build, lambda rng, k: {}))


def _assoc_man_build(a):
    lhs = T.comp(T.man(("&x", "&yz")), T.times(T.identity(("&x",)), T.man(("&y", "&z"))))
    rhs = T.comp(T.man(("&xy", "&z")), T.times(T.man(("&x", "&y")), T.identity(("&z",))))
    return lhs, rhs


schema("assoc_man", "AxG", [])((_assoc_man_build, lambda rng, k: {}))


def _com_man_build(a):
    return T.comp(T.man(("&y", "&x")), T.swap(("&x",), ("&y",))), T.man(("&x", "&y"))


schema("com_man", "AxG", [])((_com_man_build, lambda rng, k: {}))


def _degen_build(a):
    x = ("&x",)
    return T.comp(T.man(("&x1", "&x2")), T.pair([T.mark(0, x), T.mark(0, x)], x)), T.mark(0, x)


schema("degen", "AxG", [])((_degen_build, lambda rng, k: {}))


# ------------------------------------------------------- derived theory

def _tmnl_build(a):
    t = a["t"]
    _need(len(t.tgt) == 0, "tmnl: t must have the empty target")
    return t, T.emp(t.src)


def _tmnl_sample(rng, k):
    return {"t": _filler(rng, _ctx(rng, "&y", 0, 2), (), k)}


schema("tmnl", "derived", ["t"])((_tmnl_build, _tmnl_sample))


def _pair_sample(rng, k):
    y = _ctx(rng, "&y", 0, 2)
    return {"s": _filler(rng, y, _ctx(rng, "&x", 0, 2), k),
            "t": _filler(rng, y, _ctx(rng, "&w", 0, 2), k)}


def _fst_build(a):
    s, t = a["s"], a["t"]
    _same_src(s, t)
    p = T.pair([s, t], s.src)
    return T.comp(T.projection(p.tgt, range(len(s.tgt))), p), s


def _snd_build(a):
    s, t = a["s"], a["t"]
    _same_src(s, t)
    p = T.pair([s, t], s.src)
    n = len(p.tgt)
    return T.comp(T.projection(p.tgt, range(len(s.tgt), n)), p), t


schema("fst", "derived", ["s", "t"])((_fst_build, _pair_sample))
schema("snd", "derived", ["s", "t"])((_snd_build, _pair_sample))


def _dpair_build(a):
    t1, t2, s = a["t1"], a["t2"], a["s"]
    _same_src(t1, t2)
    _need(len(s.tgt) == len(t1.src), "dpair: target of s must be the source of t1, t2")
    return (T.comp(T.pair([t1, t2], t1.src), s),
            T.pair([T.comp(t1, s), T.comp(t2, s)], s.src))


def _dpair_sample(rng, k):
    y, z = _ctx(rng, "&y", 0, 2), _ctx(rng, "&z", 0, 2)
    return {"t1": _filler(rng, y, _ctx(rng, "&x", 0, 2), k),
            "t2": _filler(rng, y, _ctx(rng, "&w", 0, 2), k),
            "s": _filler(rng, z, y, k)}


schema("dpair", "derived", ["t1", "t2", "s"])((_dpair_build, _dpair_sample))


def _fsi_build(a):
    x, y = tuple(a["X"]), tuple(a["Y"])
    return T.pair([T.proj_left(x, y), T.proj_right(x, y)], x + y), T.identity(x + y)


def _fsi_sample(rng, k):
    return {"X": _ctx(rng, "&x", 0, 2), "Y": _ctx(rng, "&y", 0, 2)}


schema("fsi", "derived", ["X", "Y"])((_fsi_build, _fsi_sample))


def _bmul_build(a):
    e = T.emp(("&",))
    return T.times(e, e), T.comp(e, T.man(("&x", "&y")))


schema("bmul", "derived", [])((_bmul_build, lambda rng, k: {}))


def _bcomul_build(a):
    return T.comp(T.diagonal(("&",)), T.nil(())), T.times(T.nil(()), T.nil(()))


schema("bcomul", "derived", [])((_bcomul_build, lambda rng, k: {}))


def _unr_build(a):
    t = a["t"]
    return T.comp(t, T.identity(t.src)), t


def _unl_build(a):
    t = a["t"]
    return T.comp(T.identity(T.distinct(t.tgt)), t), t


def _one_sample(rng, k):
    return {"t": _filler(rng, _ctx(rng, "&y", 0, 2), _ctx(rng, "&x", 0, 2), k)}


schema("unR_at", "derived", ["t"])((_unr_build, _one_sample))
schema("unL_at", "derived", ["t"])((_unl_build, _one_sample))


def _assoc_at_build(a):
    s, t, u = a["s"], a["t"], a["u"]
    _need(len(s.src) == len(t.tgt) and len(t.src) == len(u.tgt), "assoc@: slots must compose")
    return T.comp(T.comp(s, t), u), T.comp(s, T.comp(t, u))


def _assoc_at_sample(rng, k):
    x, y, z, w = (_ctx(rng, b, 0, 2) for b in ("&x", "&y", "&z", "&w"))
    return {"s": _filler(rng, y, x, k), "t": _filler(rng, z, y, k), "u": _filler(rng, w, z, k)}


schema("assoc_at", "derived", ["s", "t", "u"])((_assoc_at_build, _assoc_at_sample))


def _bunit_build(a):
    return T.comp(T.emp(("&",)), T.nil(())), T.identity(())


schema("bunit", "derived", [])((_bunit_build, lambda rng, k: {}))


def _compa_build(a):
    lhs = T.comp(T.diagonal(("&",)), T.man(("&x", "&y")))
    dd = T.times(T.diagonal(("&x",)), T.diagonal(("&y",)))
    mid = T.times(T.times(T.identity(("&a",)), T.swap(("&b",), ("&c",))), T.identity(("&d",)))
    mm = T.times(T.man(("&p", "&q")), T.man(("&r", "&s")))
    return lhs, T.comp(mm, T.comp(mid, dd))


schema("compa", "derived", [])((_compa_build, lambda rng, k: {}))


def _union_sample(names):
    def sample(rng, k):
        y = _ctx(rng, "&y", 0, 2)
        return {n: _filler(rng, y, ("&",), k) for n in names}
    return sample


def _comm_union_build(a):
    s, t = a["s"], a["t"]
    _amp(s, "s"), _amp(t, "t"), _same_src(s, t)
    return T.union_of(s, t), T.union_of(t, s)


def _unit_union_build(a):
    t = a["t"]
    _amp(t, "t")
    return T.union_of(T.nil(t.src), t), t


def _unit_union_r_build(a):
    t = a["t"]
    _amp(t, "t")
    return T.union_of(t, T.nil(t.src)), t


def _assoc_union_build(a):
    s, t, u = a["s"], a["t"], a["u"]
    for n in "stu":
        _amp(a[n], n)
    _same_src(s, t, u)
    return T.union_of(T.union_of(s, t), u), T.union_of(s, T.union_of(t, u))


def _degen_prime_build(a):
    t = a["t"]
    _amp(t, "t")
    return T.union_of(t, t), t


schema("comm_union", "derived", ["s", "t"])((_comm_union_build, _union_sample("st")))
schema("unit_union", "derived", ["t"])((_unit_union_build, _union_sample("t")))
schema("unit_union_r", "derived", ["t"])((_unit_union_r_build, _union_sample("t")))
schema("assoc_union", "derived", ["s", "t", "u"])((_assoc_union_build, _union_sample("stu")))
schema("degen_prime", "derived", ["t"])((_degen_prime_build, _union_sample("t")))


def _c2_mutant_build(a):
    lhs, _ = _c2_build(a)
    return lhs, T.nil(("&y",))


schema("c2_mutant", "mutant", [])((_c2_mutant_build, lambda rng, k: {}))

AXG = [n for n, s in SCHEMAS.items() if s.group == "AxG"]
DERIVED = [n for n, s in SCHEMAS.items() if s.group == "derived"]
MUTANTS = [n for n, s in SCHEMAS.items() if s.group == "mutant"]


# --------------------------------------------------------------- harness

def get_schema(name):
    if isinstance(name, AxiomSchema):
        return name
    if name not in SCHEMAS:
        raise UserError(f"unknown axiom schema {name!r}; known: {', '.join(SCHEMAS)}")
    return SCHEMAS[name]


def instantiate(schema_, assignment):
    """The equation of a schema under a slot assignment."""
    sch = get_schema(schema_)
    lhs, rhs = sch.build(assignment)
    if len(lhs.src) != len(rhs.src) or len(lhs.tgt) != len(rhs.tgt):
        raise InternalError(f"{sch.name}: the two sides have different judgments")
    return Equation(sch.name, T.distinct(lhs.src), lhs, rhs, T.distinct(lhs.tgt))


def sample_equation(schema_, rng, max_size):
    sch = get_schema(schema_)
    a = sch.sample(rng, max_size)
    return a, instantiate(sch, a)


def equation_holds(eq):
    return G.bisimilar(G.interpret(eq.lhs), G.interpret(eq.rhs))[0]


def _show_value(v):
    if isinstance(v, T.TypedTerm):
        return T.judgment(v)
    if isinstance(v, (list, tuple)):
        if all(isinstance(i, T.TypedTerm) for i in v) and v:
            return [T.judgment(i) for i in v]
        return [list(i) if isinstance(i, tuple) else i for i in v]
    return v


def check_soundness(schema_, trials=100, max_size=6, seed=0):
    """Instantiate a schema ``trials`` times with random fillers and decide
    every instance in the graph model."""
    sch = get_schema(schema_)
    failures = []
    for i in range(trials):
        rng = random.Random(f"{sch.name}/{seed}/{i}")
        a, eq = sample_equation(sch, rng, max_size)
        if not equation_holds(eq):
            failures.append({"trial": i,
                             "assignment": {k: _show_value(v) for k, v in a.items()},
                             "lhs": T.show(eq.lhs), "rhs": T.show(eq.rhs)})
    return {"schema": sch.name, "trials": trials, "failures": failures}


def check_all(names=None, trials=100, max_size=6, seed=0):
    names = names or AXG + DERIVED
    return [check_soundness(n, trials, max_size, seed) for n in names]


def report_json(report):
    return json.dumps(report, indent=2, sort_keys=False)


def random_equation(rng, max_size, target_len=1, names=None):
    """An instance of a random schema whose sides have ``target_len`` roots."""
    names = names or AXG + DERIVED
    for _ in range(200):
        a, eq = sample_equation(rng.choice(names), rng, max_size)
        if len(eq.lhs.tgt) == target_len:
            return eq
    raise Unsatisfiable("no schema instance with the requested target found")
