"""The rewrite system made of (sub) and (Bekic) read left to right, normal
form predicates, and the correspondence between normal forms of type ``&``
and mu-terms.
"""

import re
from dataclasses import dataclass

from . import typing as T
from .errors import FuelExhausted, NotInN, ParseError, TypeNotSingleton

DEFAULT_FUEL = 10 ** 6


# ------------------------------------------------------------- redexes

def _tuple_items(t):
    """Components of ``t`` when it is ``s1 (+) ... (+) sn`` with every
    ``si : &`` (n may be 0 or 1); otherwise None."""
    if isinstance(t, T.TEmp):
        return []
    if isinstance(t, T.TPair):
        if all(len(i.tgt) == 1 for i in t.items):
            return list(t.items)
        return None
    if len(t.tgt) == 1:
        return [t]
    return None


def is_union_value(t):
    return (isinstance(t, T.TComp) and isinstance(t.outer, T.TMan)
            and isinstance(t.inner, T.TPair) and len(t.inner.items) == 2)


def contract(t):
    """Rewrite at the root if a rule applies, else None."""
    if isinstance(t, T.TComp):
        if isinstance(t.outer, T.TMan):
            return None
        items = _tuple_items(t.inner)
        if items is None:
            return None
        return T.retag(T.substitute(t.outer, items, t.inner.src), t.tgt)
    if isinstance(t, T.TCycle):
        if not t.tgt:
            return T.emp(t.src)
        if len(t.tgt) >= 2 and isinstance(t.body, T.TPair):
            return bekic(t)
    return None


def bekic(t):
    """Split ``cycle^{X+Y}(<t, s>)`` peeling the last component as Y."""
    z = t.src
    nz = len(z)
    items = T.retag_items(t.body)
    s = items[-1]
    rest = items[:-1]
    nx = sum(len(i.tgt) for i in rest)
    bsrc = t.body.src
    zx = bsrc[:nz + nx]
    tx = T.pair(rest, bsrc)
    cy_s = T.cycle(s, nz + nx)
    back = T.pair([T.identity(zx), cy_s], zx)
    cy_t = T.cycle(T.retag(T.comp(tx, back), tx.tgt), nz)
    right = T.pair([T.identity(z), cy_t], z)
    left = T.pair([T.projection(zx, range(nz, nz + nx)), cy_s], zx)
    return T.retag(T.comp(left, right), t.tgt)


def _children(t):
    if isinstance(t, T.TLabel):
        return [t.body]
    if isinstance(t, T.TCall):
        return [t.arg]
    if isinstance(t, T.TComp):
        return [t.outer, t.inner]
    if isinstance(t, T.TPair):
        return list(t.items)
    if isinstance(t, T.TCycle):
        return [t.body]
    return []


def _rebuild(t, kids):
    if isinstance(t, T.TLabel):
        return T.TLabel(t.label, kids[0], src=t.src, tgt=t.tgt)
    if isinstance(t, T.TCall):
        return T.TCall(t.name, kids[0], src=t.src, tgt=t.tgt)
    if isinstance(t, T.TComp):
        return T.TComp(kids[0], kids[1], src=t.src, tgt=t.tgt)
    if isinstance(t, T.TPair):
        return T.retag(T.pair(kids, t.src), t.tgt)
    if isinstance(t, T.TCycle):
        return T.TCycle(kids[0], src=t.src, tgt=t.tgt)
    return t


def step(t, strategy="left"):
    """One innermost rewrite step; ``strategy`` picks the leftmost or the
    rightmost innermost redex.  Returns None on normal forms."""
    kids = _children(t)
    order = range(len(kids)) if strategy == "left" else range(len(kids) - 1, -1, -1)
    for i in order:
        r = step(kids[i], strategy)
        if r is not None:
            kids = list(kids)
            kids[i] = r
            return _rebuild(t, kids)
    return contract(t)


def step_outermost(t):
    r = contract(t)
    if r is not None:
        return r
    kids = _children(t)
    for i, k in enumerate(kids):
        r = step_outermost(k)
        if r is not None:
            kids = list(kids)
            kids[i] = r
            return _rebuild(t, kids)
    return None


class _Fuel:
    def __init__(self, n):
        self.n = n

    def burn(self):
        self.n -= 1
        if self.n < 0:
            raise FuelExhausted("normalization ran out of fuel")


def normalize(t, fuel=DEFAULT_FUEL, strategy="fast"):
    """The R-normal form.  ``strategy`` is ``"fast"`` (recursive innermost),
    ``"left"``/``"right"`` (iterated single innermost steps) or
    ``"outer"`` (iterated leftmost-outermost steps)."""
    if strategy == "fast":
        return _nf(t, _Fuel(fuel))
    stepper = {"left": lambda u: step(u, "left"), "right": lambda u: step(u, "right"),
               "outer": step_outermost}[strategy]
    for _ in range(fuel):
        r = stepper(t)
        if r is None:
            return t
        t = r
    raise FuelExhausted("normalization ran out of fuel")


def _nf(t, fuel):
    while True:
        kids = _children(t)
        if kids:
            t = _rebuild(t, [_nf(k, fuel) for k in kids])
        r = contract(t)
        if r is None:
            return t
        fuel.burn()
        t = r


# ----------------------------------------------------------- grammars

def is_M(t):
    if isinstance(t, (T.TMark, T.TNil, T.TMan, T.TEmp)):
        return True
    if isinstance(t, T.TLabel):
        return is_M(t.body)
    if isinstance(t, T.TCycle):
        return len(t.tgt) == 1 and is_M(t.body)
    if isinstance(t, T.TComp):
        return is_union_value(t) and all(is_M(i) for i in t.inner.items)
    if isinstance(t, T.TPair):
        return all(is_M(i) for i in t.items)
    return False


def is_N(t):
    if len(t.tgt) != 1:
        return False
    if isinstance(t, (T.TMark, T.TNil)):
        return True
    if isinstance(t, T.TLabel):
        return is_N(t.body)
    if isinstance(t, T.TCycle):
        return is_N(t.body)
    if is_union_value(t):
        return all(is_N(i) for i in t.inner.items)
    return False


def eta_man_expand(t):
    """Replace every bare ``!`` by ``!@<x, y>``."""
    if len(t.tgt) != 1:
        raise TypeNotSingleton(f"expected type &, got {T.fmt_ctx(t.tgt)}")
    return _eta(t)


def _eta(t):
    if isinstance(t, T.TMan):
        p = T.pair([T.mark(0, t.src, "&x"), T.mark(1, t.src, "&y")], t.src)
        return T.retag(T.comp(T.man(("&x", "&y")), p), t.tgt)
    if is_union_value(t):
        return T.TComp(t.outer, _rebuild(t.inner, [_eta(i) for i in t.inner.items]),
                       src=t.src, tgt=t.tgt)
    kids = _children(t)
    if not kids:
        return t
    return _rebuild(t, [_eta(k) for k in kids])


def nf_N(t, fuel=DEFAULT_FUEL):
    return eta_man_expand(normalize(t, fuel))


# ------------------------------------------------------------ mu-terms

@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class App:
    label: str
    arg: object


@dataclass(frozen=True)
class Mu:
    name: str
    body: object


@dataclass(frozen=True)
class Zero:
    pass


@dataclass(frozen=True)
class Plus:
    left: object
    right: object


def _var_of(marker):
    v = marker[1:] if marker.startswith("&") else marker
    return v or "x"


def to_mu(n):
    """The mu-term of a normal form in N."""
    if not is_N(n):
        raise NotInN("term is not in the N grammar")
    return _to_mu(n, [_var_of(m) for m in T.distinct(n.src)])


def _to_mu(t, names):
    if isinstance(t, T.TMark):
        return Var(names[t.index])
    if isinstance(t, T.TNil):
        return Zero()
    if isinstance(t, T.TLabel):
        return App(t.label, _to_mu(t.body, names))
    if is_union_value(t):
        a, b = t.inner.items
        return Plus(_to_mu(a, names), _to_mu(b, names))
    if isinstance(t, T.TCycle):
        bound = t.body.tgt[0]
        x = _var_of(bound)
        shadow = {i for i, v in enumerate(names) if v == x}
        if x == "x" and bound == "&" or shadow & T.free_indices(t.body):
            x = T.fresh(x, set(names))
        return Mu(x, _to_mu(t.body, names + [x]))
    raise NotInN(f"unexpected node {type(t).__name__}")


def free_vars(m):
    out = []

    def go(u, bound):
        if isinstance(u, Var):
            if u.name not in bound and u.name not in out:
                out.append(u.name)
        elif isinstance(u, App):
            go(u.arg, bound)
        elif isinstance(u, Mu):
            go(u.body, bound | {u.name})
        elif isinstance(u, Plus):
            go(u.left, bound)
            go(u.right, bound)

    go(m, frozenset())
    return out


def mu_to_term(m, free=None):
    """Embed a mu-term as a typed term over the given free variables."""
    if free is None:
        free = free_vars(m)
    ctx = tuple("&" + v for v in free)
    return _from_mu(m, ctx)


def _from_mu(m, ctx):
    if isinstance(m, Var):
        name = "&" + m.name
        for i in range(len(ctx) - 1, -1, -1):
            if ctx[i] == name:
                return T.mark(i, ctx)
        raise NotInN(f"free variable {m.name} not in the context")
    if isinstance(m, Zero):
        return T.nil(ctx)
    if isinstance(m, App):
        return T.label(m.label, _from_mu(m.arg, ctx))
    if isinstance(m, Plus):
        return T.union_of(_from_mu(m.left, ctx), _from_mu(m.right, ctx))
    if isinstance(m, Mu):
        x = "&" + m.name
        body = T.retag(_from_mu(m.body, ctx + (x,)), (x,))
        return T.cycle(body, len(ctx))
    raise TypeError(m)


def _label_text(l):
    from .syntax import print_label
    return print_label(l)


def print_mu(m):
    if isinstance(m, Var):
        return m.name
    if isinstance(m, Zero):
        return "0"
    if isinstance(m, App):
        return f"{_label_text(m.label)}({print_mu(m.arg)})"
    if isinstance(m, Mu):
        return f"mu {m.name}. {print_mu(m.body)}"
    if isinstance(m, Plus):
        left = print_mu(m.left)
        if isinstance(m.left, Mu):
            left = f"({left})"
        right = print_mu(m.right)
        if isinstance(m.right, (Mu, Plus)):
            right = f"({right})"
        return f"{left} + {right}"
    raise TypeError(m)


_MU_TOKEN = re.compile(r'\s*(?:(?P<str>"(?:[^"\\]|\\.)*")|(?P<id>[A-Za-z0-9_$\'?&-]+)|(?P<p>[().+]))')


def parse_mu(text):
    toks = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _MU_TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"bad mu-term near {text[pos:pos + 10]!r}", 1, pos + 1)
        if m.group("str"):
            toks.append(("str", re.sub(r"\\(.)", r"\1", m.group("str")[1:-1])))
        elif m.group("id"):
            toks.append(("id", m.group("id")))
        else:
            toks.append((m.group("p"), m.group("p")))
        pos = m.end()
    toks.append(("eof", ""))
    i = 0

    def peek():
        return toks[i]

    def take(kind=None):
        nonlocal i
        t = toks[i]
        if kind and t[0] != kind:
            raise ParseError(f"expected {kind!r} in mu-term, found {t[1]!r}")
        i += 1
        return t

    def expr():
        left = term()
        while peek()[0] == "+":
            take()
            left = Plus(left, term())
        return left

    def term():
        k, v = peek()
        if k == "id" and v == "mu":
            take()
            name = take("id")[1]
            take(".")
            return Mu(name, expr())
        return atom()

    def atom():
        k, v = take()
        if k == "(":
            e = expr()
            take(")")
            return e
        if k in ("id", "str"):
            if peek()[0] == "(":
                take()
                e = expr()
                take(")")
                return App(v, e)
            if k == "id" and v == "0":
                return Zero()
            if k == "str":
                raise ParseError("a quoted label must be applied")
            return Var(v)
        raise ParseError(f"unexpected {v!r} in mu-term")

    out = expr()
    take("eof")
    return out


def drop_dead_cycles(t):
    """Remove cycles whose body never refers to the cycle's own markers.
    Sound by (fix): such a cycle equals its body."""
    kids = _children(t)
    if kids:
        t = _rebuild(t, [drop_dead_cycles(k) for k in kids])
    if isinstance(t, T.TCycle):
        ny, nx = len(t.src), len(t.tgt)
        used = T.free_indices(t.body)
        if not any(ny <= i < ny + nx for i in used):
            return T.retag(T.reindex(t.body, lambda i: i, t.src), t.tgt)
    return t


def simplify(t):
    """Tidy a normal form with sound laws: drop nil branches of unions,
    merge identical branches, turn ``cycle(x := x)`` into ``{}`` and remove
    cycles that never use their own markers."""
    kids = _children(t)
    if kids:
        t = _rebuild(t, [simplify(k) for k in kids])
    if is_union_value(t):
        a, b = t.inner.items
        if isinstance(a, T.TNil) or a == b:
            return T.retag(b, t.tgt)
        if isinstance(b, T.TNil):
            return T.retag(a, t.tgt)
    if isinstance(t, T.TCycle):
        ny = len(t.src)
        if len(t.tgt) == 1 and isinstance(t.body, T.TMark) and t.body.index == ny:
            return T.nil(t.src, t.tgt[0])
        return drop_dead_cycles(t)
    return t
