"""A small lazy lambda calculus over graphs.

Terms have graph constants (nil ``{}``, union ``U``, edges ``l:t``), tuples,
label tests, conditionals and a first-order fixed point ``fix``.  This
module translates typed UnCAL terms into it, translates the image back,
evaluates terms call-by-need (a cell that demands itself before producing a
constructor reads back as nil), and eliminates the ``srec``/``prec``
operators over clause tables.

Printed form::

    \\(y1,y2). (\\x. a:((b:x) U (c:x))) (fix (\\x. d:((p:y1) U (q:y2) U (r:x))))
"""

import re
import sys
from dataclasses import dataclass

from . import graph as G
from . import recursion as REC
from . import syntax as S
from . import typing as T
from .errors import (InternalError, LgTypeError, MatchFailure, NonCanonicalClauseTable,
                     NotInImage, ParseError, StuckConditional, UserError)

# ------------------------------------------------------------------ types


@dataclass(frozen=True)
class Unit:
    def __str__(self):
        return "1"


@dataclass(frozen=True)
class GType:
    def __str__(self):
        return "G"


@dataclass(frozen=True)
class LType:
    def __str__(self):
        return "L"


@dataclass(frozen=True)
class BType:
    def __str__(self):
        return "B"


@dataclass(frozen=True)
class Prod:
    items: tuple

    def __str__(self):
        return " x ".join(_type_atom(i) for i in self.items)


@dataclass(frozen=True)
class Arrow:
    dom: object
    cod: object

    def __str__(self):
        d = f"({self.dom})" if isinstance(self.dom, Arrow) else _type_atom(self.dom)
        return f"{d} -> {self.cod}"


def _type_atom(t):
    return f"({t})" if isinstance(t, (Prod, Arrow)) else str(t)


def prod(items):
    """Product with nested products flattened and units dropped."""
    flat = []
    for t in items:
        if isinstance(t, Prod):
            flat.extend(t.items)
        elif not isinstance(t, Unit):
            flat.append(t)
    if not flat:
        return Unit()
    if len(flat) == 1:
        return flat[0]
    return Prod(tuple(flat))


def graphs(n):
    """The type G^n."""
    return prod([GType()] * n)


def arity(ty):
    if isinstance(ty, Unit):
        return 0
    if isinstance(ty, Prod):
        return len(ty.items)
    return 1


# ------------------------------------------------------------------ terms


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Lam:
    params: tuple
    body: object


@dataclass(frozen=True)
class App:
    fn: object
    arg: object


@dataclass(frozen=True)
class Tuple:
    items: tuple


UNIT = Tuple(())


@dataclass(frozen=True)
class Nil:
    pass


@dataclass(frozen=True)
class Union:
    left: object
    right: object


@dataclass(frozen=True)
class Lab:
    label: object  # LabConst or Var
    body: object


@dataclass(frozen=True)
class LabConst:
    name: str


@dataclass(frozen=True)
class Bool:
    value: bool


@dataclass(frozen=True)
class Eq:
    left: object
    right: object


@dataclass(frozen=True)
class If:
    cond: object
    then: object
    other: object


@dataclass(frozen=True)
class Fix:
    fn: object


@dataclass(frozen=True)
class Proj:
    index: int  # 1-based
    arg: object


@dataclass(frozen=True)
class Srec:
    table: object
    arg: object


@dataclass(frozen=True)
class Prec:
    table: object
    arg: object


@dataclass(frozen=True)
class BfunRef:
    name: str


@dataclass(frozen=True)
class Fail:
    pass


NIL = Nil()


def tup(items):
    """Tuple with nested literal tuples spliced in; one item stands alone."""
    flat = []
    for i in items:
        if isinstance(i, Tuple):
            flat.extend(i.items)
        else:
            flat.append(i)
    return flat[0] if len(flat) == 1 else Tuple(tuple(flat))


def lam(params, body):
    params = tuple(params)
    return body if not params else Lam(params, body)


def fix_arity(fn):
    if not isinstance(fn, Lam):
        raise LgTypeError("fix needs a lambda")
    return len(fn.params)


def free_vars(t):
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, Lam):
        return free_vars(t.body) - set(t.params)
    return set().union(*(free_vars(c) for c in _kids(t))) if _kids(t) else set()


def _kids(t):
    if isinstance(t, App):
        return (t.fn, t.arg)
    if isinstance(t, Tuple):
        return t.items
    if isinstance(t, (Union, Eq)):
        return (t.left, t.right)
    if isinstance(t, Lab):
        return (t.label, t.body)
    if isinstance(t, If):
        return (t.cond, t.then, t.other)
    if isinstance(t, (Fix,)):
        return (t.fn,)
    if isinstance(t, Proj):
        return (t.arg,)
    if isinstance(t, (Srec, Prec)):
        return (t.table, t.arg)
    if isinstance(t, Lam):
        return (t.body,)
    return ()


def labels_of(t):
    if isinstance(t, LabConst):
        return {t.name}
    out = set()
    for c in _kids(t):
        out |= labels_of(c)
    return out


def size(t):
    return 1 + sum(size(c) for c in _kids(t))


def subst(t, sigma):
    """Capture-avoiding substitution of variables by terms."""
    if not sigma:
        return t
    if isinstance(t, Var):
        return sigma.get(t.name, t)
    if isinstance(t, Lam):
        inner = {k: v for k, v in sigma.items() if k not in t.params}
        if not inner:
            return t
        avoid = set().union(*(free_vars(v) for v in inner.values())) | free_vars(t.body)
        params, ren = [], {}
        for p in t.params:
            if p in avoid - {p} or any(p in free_vars(v) for v in inner.values()):
                q = T.fresh(p, avoid | set(params) | set(inner))
                ren[p] = Var(q)
                params.append(q)
            else:
                params.append(p)
        body = subst(t.body, ren) if ren else t.body
        return Lam(tuple(params), subst(body, inner))
    if isinstance(t, App):
        return App(subst(t.fn, sigma), subst(t.arg, sigma))
    if isinstance(t, Tuple):
        return Tuple(tuple(subst(i, sigma) for i in t.items))
    if isinstance(t, Union):
        return Union(subst(t.left, sigma), subst(t.right, sigma))
    if isinstance(t, Eq):
        return Eq(subst(t.left, sigma), subst(t.right, sigma))
    if isinstance(t, Lab):
        return Lab(subst(t.label, sigma), subst(t.body, sigma))
    if isinstance(t, If):
        return If(subst(t.cond, sigma), subst(t.then, sigma), subst(t.other, sigma))
    if isinstance(t, Fix):
        return Fix(subst(t.fn, sigma))
    if isinstance(t, Proj):
        return Proj(t.index, subst(t.arg, sigma))
    if isinstance(t, Srec):
        return Srec(subst(t.table, sigma), subst(t.arg, sigma))
    if isinstance(t, Prec):
        return Prec(subst(t.table, sigma), subst(t.arg, sigma))
    return t


def beta_root(t):
    """One beta step at the root, if the root is a redex."""
    if isinstance(t, App) and isinstance(t.fn, Lam):
        ps = t.fn.params
        if len(ps) == 1:
            return subst(t.fn.body, {ps[0]: t.arg})
        if isinstance(t.arg, Tuple) and len(t.arg.items) == len(ps):
            return subst(t.fn.body, dict(zip(ps, t.arg.items)))
    return t


# ---------------------------------------------------------------- printer

KEYWORDS = {"U", "fix", "if", "then", "else", "true", "false", "srec", "prec", "fail"}
_ID = re.compile(r"[A-Za-z_][A-Za-z0-9_'?]*(?:-[A-Za-z0-9_'?]+)*\Z")
_PROJ = re.compile(r"pi[1-9][0-9]*\Z")


def print_label(name):
    if _ID.match(name) and name not in KEYWORDS and not _PROJ.match(name):
        return name
    if re.fullmatch(r"[0-9]+", name):
        return name
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _binder(params):
    return params[0] if len(params) == 1 else "(" + ",".join(params) + ")"


def show(t):
    return _pr(t, 0)


def _pr(t, level):
    """level 0: anything; 1: union operand; 2: application head;
    3: edge body or operand of a keyword; 4: argument of an application."""
    if isinstance(t, Lam):
        s = f"\\{_binder(t.params)}. {_pr(t.body, 0)}"
        return s if level == 0 else f"({s})"
    if isinstance(t, If):
        s = f"if {_pr(t.cond, 0)} then {_pr(t.then, 0)} else {_pr(t.other, 0)}"
        return s if level == 0 else f"({s})"
    if isinstance(t, Union):
        left = _pr(t.left, 1) if not isinstance(t.left, Union) else f"({_pr(t.left, 0)})"
        right = _pr(t.right, 0) if isinstance(t.right, Union) else _pr(t.right, 1)
        s = f"{left} U {right}"
        return s if level == 0 else f"({s})"
    if isinstance(t, Eq):
        s = f"{_pr(t.left, 3)} == {_pr(t.right, 3)}"
        return s if level == 0 else f"({s})"
    if isinstance(t, Lab):
        s = f"{_pr(t.label, 3)}:{_pr(t.body, 3)}"
        return s if level in (0, 3) else f"({s})"
    if isinstance(t, (App, Fix, Proj, Srec, Prec)):
        if isinstance(t, App):
            s = f"{_pr(t.fn, 2)} {_pr(t.arg, 4)}"
        elif isinstance(t, Fix):
            s = f"fix {_pr(t.fn, 3)}"
        elif isinstance(t, Proj):
            s = f"pi{t.index} {_pr(t.arg, 3)}"
        else:
            kw = "srec" if isinstance(t, Srec) else "prec"
            s = f"{kw} {_pr(t.table, 3)} {_pr(t.arg, 3)}"
        return s if level in (0, 2) else f"({s})"
    if isinstance(t, Tuple):
        return "(" + ", ".join(_pr(i, 0) for i in t.items) + ")"
    if isinstance(t, Var):
        return t.name
    if isinstance(t, LabConst):
        return print_label(t.name)
    if isinstance(t, Nil):
        return "{}"
    if isinstance(t, Bool):
        return "true" if t.value else "false"
    if isinstance(t, BfunRef):
        return t.name
    if isinstance(t, Fail):
        return "fail"
    raise TypeError(t)


# ----------------------------------------------------------------- parser

_TOK = re.compile(r"""
    (?P<ws>\s+)
  | (?P<str>"(?:[^"\\]|\\.)*")
  | (?P<op>==|\{\}|⊙|∪|[\\λ().,:])
  | (?P<num>[0-9]+)
  | (?P<id>[A-Za-z_][A-Za-z0-9_'?]*(?:-[A-Za-z0-9_'?]+)*)
""", re.VERBOSE)


def _tokens(text):
    out, pos = [], 0
    while pos < len(text):
        m = _TOK.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", 1, pos + 1)
        kind = m.lastgroup
        if kind != "ws":
            s = m.group()
            s = {"⊙": "{}", "∪": "U", "λ": "\\"}.get(s, s)
            out.append((kind, s, pos + 1))
        pos = m.end()
    out.append(("eof", "", pos + 1))
    return out


class _Parser:
    def __init__(self, text, bfuns):
        self.toks = _tokens(text)
        self.i = 0
        self.bfuns = set(bfuns or ())

    def peek(self, off=0):
        return self.toks[min(self.i + off, len(self.toks) - 1)]

    def take(self, want=None):
        tok = self.peek()
        if want is not None and tok[1] != want:
            raise ParseError(f"expected {want!r} but found {tok[1] or 'end of input'!r}", 1, tok[2])
        self.i += 1
        return tok

    def at(self, s):
        return self.peek()[1] == s and self.peek()[0] in ("op", "id")

    def expr(self, scope):
        if self.at("\\"):
            self.take()
            params = self.binder()
            self.take(".")
            return Lam(params, self.expr(scope | set(params)))
        if self.at("if"):
            self.take()
            c = self.expr(scope)
            self.take("then")
            a = self.expr(scope)
            self.take("else")
            return If(c, a, self.expr(scope))
        left = self.eq(scope)
        if self.at("U"):
            self.take()
            return Union(left, self.expr(scope))
        return left

    def binder(self):
        if self.at("("):
            self.take()
            names = []
            while not self.at(")"):
                names.append(self.take()[1])
                if not self.at(")"):
                    self.take(",")
            self.take(")")
            return tuple(names)
        kind, s, pos = self.take()
        if kind != "id" or s in KEYWORDS:
            raise ParseError(f"expected a variable but found {s!r}", 1, pos)
        return (s,)

    def eq(self, scope):
        left = self.app(scope)
        if self.at("=="):
            self.take()
            return Eq(left, self.app(scope))
        return left

    def _starts_atom(self):
        kind, s, _ = self.peek()
        if kind in ("str", "num"):
            return True
        if kind == "id":
            return s not in ("U", "then", "else")
        return s in ("(", "{}", "\\")

    def app(self, scope):
        kind, s, _ = self.peek()
        if kind == "id" and s in ("fix", "srec", "prec") or (kind == "id" and _PROJ.match(s)):
            self.take()
            if s == "fix":
                head = Fix(self.labeled(scope))
            elif s == "srec":
                head = Srec(self.labeled(scope), self.labeled(scope))
            elif s == "prec":
                head = Prec(self.labeled(scope), self.labeled(scope))
            else:
                head = Proj(int(s[2:]), self.labeled(scope))
        else:
            head = self.labeled(scope)
        while self._starts_atom():
            if self.at("\\"):
                head = App(head, self.expr(scope))
                break
            head = App(head, self.labeled(scope))
        return head

    def labeled(self, scope):
        kind, s, pos = self.peek()
        if kind in ("id", "str", "num") and self.peek(1)[1] == ":" and s not in KEYWORDS:
            self.take()
            self.take(":")
            lab = self._label(kind, s, scope)
            return Lab(lab, self.labeled(scope))
        return self.atom(scope)

    def _label(self, kind, s, scope):
        if kind == "str":
            return LabConst(re.sub(r"\\(.)", r"\1", s[1:-1]))
        if kind == "id" and s in scope:
            return Var(s)
        return LabConst(s)

    def atom(self, scope):
        kind, s, pos = self.take()
        if kind in ("str", "num"):
            return self._label(kind, s, scope)
        if kind == "id":
            if s == "true":
                return Bool(True)
            if s == "false":
                return Bool(False)
            if s == "fail":
                return Fail()
            if s in scope:
                return Var(s)
            if s in self.bfuns:
                return BfunRef(s)
            if s in KEYWORDS:
                raise ParseError(f"unexpected {s!r}", 1, pos)
            return LabConst(s)
        if s == "{}":
            return NIL
        if s == "(":
            if self.at(")"):
                self.take()
                return UNIT
            items = [self.expr(scope)]
            while self.at(","):
                self.take()
                items.append(self.expr(scope))
            self.take(")")
            return items[0] if len(items) == 1 else Tuple(tuple(items))
        raise ParseError(f"unexpected {s or 'end of input'!r}", 1, pos)


def parse(text, bfuns=()):
    """Parse a printed term.  Unbound identifiers are labels, or bfun
    references when their name is in ``bfuns``."""
    p = _Parser(text, bfuns)
    t = p.expr(frozenset())
    if p.peek()[0] != "eof":
        kind, s, pos = p.peek()
        raise ParseError(f"unexpected {s!r}", 1, pos)
    return t


# ------------------------------------------------------------ translation

def _var_name(marker):
    base = marker.lstrip("&").replace("$", "_")
    if not base:
        return "x"
    if not re.match(r"[A-Za-z_]", base):
        base = "x" + base
    if base in KEYWORDS or _PROJ.match(base):
        base = base + "_"
    return base


class _Translator:
    def __init__(self, avoid):
        self.avoid = set(avoid) | KEYWORDS

    def names(self, markers, scope):
        used = set(scope) | self.avoid
        out = []
        for m in markers:
            n = T.fresh(_var_name(m), used)
            used.add(n)
            out.append(n)
        return tuple(out)

    def tr(self, t, env, scope):
        """``env`` holds one expression per source marker; the result has
        as many components as the target."""
        if isinstance(t, T.TMark):
            return env[t.index]
        if isinstance(t, T.TEmp):
            return UNIT
        if isinstance(t, T.TNil):
            return NIL
        if isinstance(t, T.TMan):
            return Union(env[0], env[1])
        if isinstance(t, T.TLabel):
            return Lab(LabConst(t.label), self.tr(t.body, env, scope))
        if isinstance(t, T.TComp):
            h = self.tr(t.inner, env, scope)
            if isinstance(t.outer, T.TMan) and isinstance(h, Tuple) and len(h.items) == 2:
                return Union(*h.items)
            n = len(t.inner.tgt)
            parts = _atoms(h, n)
            if parts is not None:
                return self.tr(t.outer, parts, scope)
            xs = self.names(t.outer.src, scope)
            body = self.tr(t.outer, [Var(x) for x in xs], scope | set(xs))
            return App(Lam(xs, body), h)
        if isinstance(t, T.TPair):
            parts, binds = [], []
            for item in t.items:
                n = len(item.tgt)
                e = self.tr(item, env, scope)
                if n == 0:
                    continue
                if n == 1 or isinstance(e, Tuple):
                    parts.extend(e.items if isinstance(e, Tuple) else [e])
                    continue
                xs = self.names(item.tgt, scope | {p for b, _ in binds for p in b})
                binds.append((xs, e))
                parts.extend(Var(x) for x in xs)
            out = tup(parts) if parts else UNIT
            for xs, e in reversed(binds):
                out = App(Lam(xs, out), e)
            return out
        if isinstance(t, T.TCycle):
            xs = self.names(t.tgt, scope)
            body = self.tr(t.body, list(env) + [Var(x) for x in xs], scope | set(xs))
            return Fix(Lam(xs, body))
        if isinstance(t, T.TCall):
            if len(t.tgt) != 1 or len(t.arg.tgt) != 1:
                raise UserError(f"only single-marker bfun calls translate; got {t.name}")
            return App(BfunRef(t.name), self.tr(t.arg, env, scope))
        raise TypeError(t)


def _atoms(h, n):
    """Components of ``h`` when it is a variable tuple (safe to inline)."""
    if n == 0:
        return [] if h == UNIT else None
    if n == 1:
        return [h] if isinstance(h, Var) else None
    if isinstance(h, Tuple) and all(isinstance(i, Var) for i in h.items):
        return list(h.items)
    return None


def translate(t):
    """The closed term of type G^|Y| -> G^|X| for ``Y |- t : X``."""
    tr = _Translator(T.labels_in(t))
    ys = tr.names(t.src, set())
    return lam(ys, tr.tr(t, [Var(y) for y in ys], set(ys)))


def translate_open(t, env_names, avoid=()):
    """The body of the translation with the source bound to given names."""
    tr = _Translator(set(T.labels_in(t)) | set(avoid))
    return tr.tr(t, [Var(n) for n in env_names], set(env_names))


# -------------------------------------------------------- inverse

def inverse(t):
    """Back-translation of a term in the image of ``translate``."""
    if isinstance(t, Lam):
        src = T.distinct(tuple("&" + p for p in t.params))
        env = {p: i for i, p in enumerate(t.params)}
        return _inv(t.body, env, src)
    return _inv(t, {}, ())


def _inv(t, env, src):
    if isinstance(t, Var):
        if t.name not in env:
            raise NotInImage(f"free variable {t.name}")
        return T.mark(env[t.name], src, "&" + t.name)
    if isinstance(t, Nil):
        return T.nil(src)
    if isinstance(t, Tuple):
        if not t.items:
            return T.emp(src)
        return T.pair([_inv(i, env, src) for i in t.items], src)
    if isinstance(t, Union):
        return T.union_of(_inv(t.left, env, src), _inv(t.right, env, src))
    if isinstance(t, Lab):
        if not isinstance(t.label, LabConst):
            raise NotInImage("edge labels must be constants")
        return T.label(t.label.name, _inv(t.body, env, src))
    if isinstance(t, App) and isinstance(t.fn, Lam):
        arg = _inv(t.arg, env, src)
        ps = t.fn.params
        if len(arg.tgt) != len(ps):
            raise NotInImage(f"applied to {len(arg.tgt)} graphs, binds {len(ps)}")
        inner, ext = _extend(env, src, ps)
        body = _inv(t.fn.body, inner, ext)
        return T.comp(body, T.pair([T.identity(src), arg], src))
    if isinstance(t, Fix) and isinstance(t.fn, Lam):
        ps = t.fn.params
        inner, ext = _extend(env, src, ps)
        body = _inv(t.fn.body, inner, ext)
        if len(body.tgt) != len(ps):
            raise NotInImage("fix body must return as many graphs as it binds")
        return T.cycle(body, len(src))
    if isinstance(t, Proj):
        a = _inv(t.arg, env, src)
        if not 1 <= t.index <= len(a.tgt):
            raise NotInImage(f"projection pi{t.index} out of range")
        return T.comp(T.projection(T.distinct(a.tgt), [t.index - 1]), a)
    raise NotInImage(f"{type(t).__name__} is outside the first-order image")


def _extend(env, src, params):
    ext = T.distinct(tuple(src) + tuple("&" + p for p in params))
    inner = dict(env)
    for j, p in enumerate(params):
        inner[p] = len(src) + j
    return inner, ext


# ------------------------------------------------------------- typing

def _label_vars(t, out):
    if isinstance(t, Lab) and isinstance(t.label, Var):
        out.add(t.label.name)
    if isinstance(t, Eq):
        for s in (t.left, t.right):
            if isinstance(s, Var):
                out.add(s.name)
    for c in _kids(t):
        _label_vars(c, out)
    return out


def type_of(t, env=None, bfuns=()):
    """Type of a term; binders are G unless used as labels."""
    return _ty(t, dict(env or {}), _label_vars(t, set()), set(bfuns))


def _ty(t, env, lvars, bfuns):
    g = GType()
    if isinstance(t, Var):
        if t.name not in env:
            raise LgTypeError(f"unbound variable {t.name}")
        return env[t.name]
    if isinstance(t, Lam):
        inner = dict(env)
        doms = []
        for p in t.params:
            inner[p] = LType() if p in lvars else g
            doms.append(inner[p])
        return Arrow(prod(doms), _ty(t.body, inner, lvars, bfuns))
    if isinstance(t, App):
        f = _ty(t.fn, env, lvars, bfuns)
        a = _ty(t.arg, env, lvars, bfuns)
        if not isinstance(f, Arrow) or f.dom != a:
            raise LgTypeError(f"cannot apply {f} to {a}")
        return f.cod
    if isinstance(t, Tuple):
        return prod([_ty(i, env, lvars, bfuns) for i in t.items])
    if isinstance(t, Nil):
        return g
    if isinstance(t, Union):
        for s in (t.left, t.right):
            if _ty(s, env, lvars, bfuns) != g:
                raise LgTypeError("union operands must be graphs")
        return g
    if isinstance(t, Lab):
        if _ty(t.label, env, lvars, bfuns) != LType():
            raise LgTypeError("edge label must have type L")
        if _ty(t.body, env, lvars, bfuns) != g:
            raise LgTypeError("edge target must be a graph")
        return g
    if isinstance(t, LabConst):
        return LType()
    if isinstance(t, Bool):
        return BType()
    if isinstance(t, Eq):
        for s in (t.left, t.right):
            if _ty(s, env, lvars, bfuns) != LType():
                raise LgTypeError("label equality needs labels")
        return BType()
    if isinstance(t, If):
        if _ty(t.cond, env, lvars, bfuns) != BType():
            raise LgTypeError("condition must be boolean")
        a, b = _ty(t.then, env, lvars, bfuns), _ty(t.other, env, lvars, bfuns)
        if isinstance(t.other, Fail):
            return a
        if isinstance(t.then, Fail):
            return b
        if a != b:
            raise LgTypeError(f"branches have types {a} and {b}")
        return a
    if isinstance(t, Fail):
        return g
    if isinstance(t, Fix):
        f = _ty(t.fn, env, lvars, bfuns)
        if not isinstance(f, Arrow) or f.dom != f.cod or f.dom != graphs(arity(f.dom)):
            raise LgTypeError(f"fix needs G^n -> G^n, got {f}")
        return f.cod
    if isinstance(t, Proj):
        a = _ty(t.arg, env, lvars, bfuns)
        items = a.items if isinstance(a, Prod) else (a,)
        if not 1 <= t.index <= len(items):
            raise LgTypeError(f"pi{t.index} applied to {a}")
        return items[t.index - 1]
    if isinstance(t, BfunRef):
        return Arrow(g, g)
    if isinstance(t, (Srec, Prec)):
        return _ty(expand(t), env, lvars, bfuns)
    raise LgTypeError(f"unknown term {t!r}")


# ------------------------------------------------------------ evaluator

class _Thunk:
    __slots__ = ("compute", "value", "busy")

    def __init__(self, compute=None, value=None):
        self.compute = compute
        self.value = value
        self.busy = False


class VNil:
    __slots__ = ()


class VUnion:
    __slots__ = ("left", "right")

    def __init__(self, left, right):
        self.left, self.right = left, right


class VLab:
    __slots__ = ("label", "body")

    def __init__(self, label, body):
        self.label, self.body = label, body


class VOut:
    __slots__ = ("index",)

    def __init__(self, index):
        self.index = index


class VTuple:
    __slots__ = ("items",)

    def __init__(self, items):
        self.items = list(items)


class VClo:
    __slots__ = ("params", "body", "env")

    def __init__(self, params, body, env):
        self.params, self.body, self.env = params, body, env


@dataclass(frozen=True)
class VLabel:
    name: str


@dataclass(frozen=True)
class VBool:
    value: bool


class VBfun:
    __slots__ = ("table", "memo")

    def __init__(self, table):
        self.table = table
        self.memo = {}


def force(th):
    """Value of a thunk; a thunk demanded while it is being computed is a
    black hole and yields nil."""
    if th.value is not None:
        return th.value
    if th.busy:
        return VNil()
    th.busy = True
    try:
        v = th.compute()
    finally:
        th.busy = False
    th.value = v
    th.compute = None
    return v


def _ready(v):
    return _Thunk(value=v)


@dataclass
class BfunTable:
    """Clauses of a bfun: a body for ``{}``, per-label bodies and an
    optional default over a label variable."""
    name: str
    var: dict
    nil_body: object
    bodies: dict
    default: object = None
    label_var: str = None
    excluded: frozenset = frozenset()


class Machine:
    """Call-by-need evaluator; one heap per instance."""

    def __init__(self, bfuns=None, limit=2_000_000):
        self.bfuns = dict(bfuns or {})
        self.refs = {}
        self.limit = limit

    def delay(self, t, env):
        if isinstance(t, Var):
            if t.name not in env:
                raise LgTypeError(f"unbound variable {t.name}")
            return env[t.name]
        if isinstance(t, (Nil, LabConst, Bool)):
            return _ready(self.eval(t, env))
        return _Thunk(lambda: self.eval(t, env))

    def bind(self, params, th, env):
        env = dict(env)
        if len(params) == 1:
            env[params[0]] = th
            return env
        items = self.tuple_items(force(th), len(params))
        for p, i in zip(params, items):
            env[p] = i
        return env

    def tuple_items(self, v, n):
        if not isinstance(v, VTuple):
            raise LgTypeError(f"expected a {n}-tuple")
        items = v.items
        if len(items) != n:
            flat = []
            for i in items:
                w = force(i)
                flat.extend(w.items if isinstance(w, VTuple) else [i])
            items = flat
        if len(items) != n:
            raise LgTypeError(f"expected a {n}-tuple, got {len(items)} components")
        return items

    def eval(self, t, env):
        while True:
            if isinstance(t, Var):
                if t.name not in env:
                    raise LgTypeError(f"unbound variable {t.name}")
                return force(env[t.name])
            if isinstance(t, Lam):
                return VClo(t.params, t.body, env)
            if isinstance(t, App):
                f = self.eval(t.fn, env)
                arg = self.delay(t.arg, env)
                if isinstance(f, VClo):
                    env = self.bind(f.params, arg, f.env)
                    t = f.body
                    continue
                if isinstance(f, VBfun):
                    return force(self.apply_bfun(f, arg))
                raise LgTypeError("application of a non-function")
            if isinstance(t, Tuple):
                return VTuple(self.delay(i, env) for i in t.items)
            if isinstance(t, Nil):
                return VNil()
            if isinstance(t, Union):
                return VUnion(self.delay(t.left, env), self.delay(t.right, env))
            if isinstance(t, Lab):
                lab = self.eval(t.label, env)
                if not isinstance(lab, VLabel):
                    raise LgTypeError("edge label is not a label")
                return VLab(lab.name, self.delay(t.body, env))
            if isinstance(t, LabConst):
                return VLabel(t.name)
            if isinstance(t, Bool):
                return VBool(t.value)
            if isinstance(t, Eq):
                a, b = self.eval(t.left, env), self.eval(t.right, env)
                if not (isinstance(a, VLabel) and isinstance(b, VLabel)):
                    raise LgTypeError("label equality needs labels")
                return VBool(a.name == b.name)
            if isinstance(t, If):
                c = self.eval(t.cond, env)
                if not isinstance(c, VBool):
                    raise StuckConditional("the condition did not reduce to true or false")
                t = t.then if c.value else t.other
                continue
            if isinstance(t, Fix):
                f = self.eval(t.fn, env)
                if not isinstance(f, VClo):
                    raise LgTypeError("fix needs a function")
                return self.fix(f)
            if isinstance(t, Proj):
                v = self.eval(t.arg, env)
                if not isinstance(v, VTuple) or not 1 <= t.index <= len(v.items):
                    raise LgTypeError(f"pi{t.index} of a non-tuple")
                return force(v.items[t.index - 1])
            if isinstance(t, (Srec, Prec)):
                t = expand(t)
                continue
            if isinstance(t, BfunRef):
                if t.name not in self.bfuns:
                    raise UserError(f"unknown bfun {t.name}")
                if t.name not in self.refs:
                    self.refs[t.name] = VBfun(self.bfuns[t.name])
                return self.refs[t.name]
            if isinstance(t, Fail):
                raise MatchFailure("no clause matches this label")
            raise LgTypeError(f"cannot evaluate {t!r}")

    def fix(self, f):
        n = len(f.params)
        if n == 1:
            cell = _Thunk()
            env = dict(f.env)
            env[f.params[0]] = cell
            cell.compute = lambda: self.eval(f.body, env)
            return force(cell)
        cells = [_Thunk() for _ in range(n)]
        env = dict(f.env)
        env.update(zip(f.params, cells))
        shared = _Thunk(lambda: self.eval(f.body, env))
        for i, c in enumerate(cells):
            c.compute = (lambda i=i: force(self.tuple_items(force(shared), n)[i]))
        return VTuple(cells)

    def apply_bfun(self, f, arg):
        res = _Thunk()

        def compute():
            v = force(arg)
            key = id(v)
            if key in f.memo and f.memo[key][1] is not res:
                return force(f.memo[key][1])
            f.memo[key] = (v, res)
            return self.dispatch(f, v)
        res.compute = compute
        return res

    def dispatch(self, f, v):
        tab = f.table
        if isinstance(v, VNil):
            if tab.nil_body is None:
                raise MatchFailure(f"{tab.name}: no clause for {{}}")
            return self.eval(tab.nil_body, {})
        if isinstance(v, VUnion):
            return VUnion(self.apply_bfun(f, v.left), self.apply_bfun(f, v.right))
        if isinstance(v, VLab):
            if v.label in tab.bodies:
                body = tab.bodies[v.label]
                env = {}
            elif tab.default is not None and v.label not in tab.excluded:
                body = tab.default
                env = {tab.label_var: _ready(VLabel(v.label))}
            else:
                raise MatchFailure(f"{tab.name}: no clause for label {v.label!r}")
            env[tab.var] = v.body
            return self.eval(body, env)
        if isinstance(v, VOut):
            raise MatchFailure(f"{tab.name}: argument is an open input")
        raise LgTypeError(f"{tab.name} applied to a non-graph")

    def readback(self, values, inputs):
        """Graph of a list of graph values; ``VOut`` cells become outputs."""
        nodes = {}
        keep = []
        edges, outputs = set(), set()
        stack = []

        def node(v):
            key = id(v)
            if key not in nodes:
                if len(nodes) >= self.limit:
                    raise InternalError("readback exceeded its node limit")
                nodes[key] = len(nodes)
                keep.append(v)
                stack.append(v)
            return nodes[key]

        roots = tuple(node(v) for v in values)
        while stack:
            v = stack.pop()
            i = nodes[id(v)]
            if isinstance(v, VNil):
                continue
            if isinstance(v, VUnion):
                edges.add((i, None, node(force(v.left))))
                edges.add((i, None, node(force(v.right))))
            elif isinstance(v, VLab):
                edges.add((i, v.label, node(force(v.body))))
            elif isinstance(v, VOut):
                outputs.add((i, v.index))
            else:
                raise LgTypeError("a graph component evaluated to a non-graph")
        return G.Graph(len(nodes), frozenset(edges), roots, frozenset(outputs),
                       tuple("&" for _ in roots), tuple(inputs))


def lg_eval(t, args=None, bfuns=None):
    """Evaluate ``t : G^m -> G^n`` (or a closed ``G^n``) to a graph.

    Without ``args`` the inputs stay open and become output marks; with
    ``args`` (m closed graphs) they are plugged in.
    """
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 20000))
    try:
        m = Machine(bfuns)
        if isinstance(t, Lam):
            inputs = tuple("&" + p for p in t.params)
            env = {p: _ready(VOut(i)) for i, p in enumerate(t.params)}
            body = t.body
        else:
            inputs, env, body = (), {}, t
        v = m.eval(body, env)
        vals = [force(i) for i in m.tuple_items(v, len(v.items))] if isinstance(v, VTuple) else [v]
        g = m.readback(vals, T.distinct(inputs))
    finally:
        sys.setrecursionlimit(old)
    if args is not None:
        args = list(args)
        if len(args) != len(inputs):
            raise LgTypeError(f"expected {len(inputs)} arguments, got {len(args)}")
        g = G.compose(g, G.pair_all(args, ()))
    return g


# ------------------------------------------------------ clause tables

def clause_table(defn, avoid=()):
    """``\\l. \\(x1..). if l == a then .. else ..`` for a RecDef.

    Structural tables take the k results of the recursive call; primitive
    ones take those k results and the raw subterm last.
    """
    labels = sorted(defn.bodies)
    probe = next(iter(defn.bodies.values()), None)
    if probe is None:
        probe = defn.body(_PLACEHOLDER)
    avoid = set(avoid) | {lb for b in defn.bodies.values() for lb in T.labels_in(b)}
    tr = _Translator(avoid | set(labels))
    lvar = T.fresh("l", tr.avoid)
    params = tr.names(probe.src, {lvar})
    scope = set(params) | {lvar}
    if defn.default is not None:
        d = defn.body(_PLACEHOLDER) if _PLACEHOLDER not in defn.excluded else None
        other = _replace_label(tr.tr(d, [Var(p) for p in params], scope),
                               _PLACEHOLDER, Var(lvar))
    else:
        other = Fail()
    for lab in defn.excluded:
        if lab not in defn.bodies:
            other = If(Eq(Var(lvar), LabConst(lab)), Fail(), other)
    for lab in reversed(labels):
        body = tr.tr(defn.bodies[lab], [Var(p) for p in params], scope)
        other = If(Eq(Var(lvar), LabConst(lab)), body, other)
    return Lam((lvar,), Lam(params, other))


_PLACEHOLDER = "\x00label"


def _replace_label(t, name, var):
    if isinstance(t, LabConst) and t.name == name:
        return var
    if isinstance(t, Lab):
        return Lab(_replace_label(t.label, name, var), _replace_label(t.body, name, var))
    if isinstance(t, Lam):
        return Lam(t.params, _replace_label(t.body, name, var))
    if isinstance(t, App):
        return App(_replace_label(t.fn, name, var), _replace_label(t.arg, name, var))
    if isinstance(t, Tuple):
        return Tuple(tuple(_replace_label(i, name, var) for i in t.items))
    if isinstance(t, Union):
        return Union(_replace_label(t.left, name, var), _replace_label(t.right, name, var))
    if isinstance(t, Fix):
        return Fix(_replace_label(t.fn, name, var))
    if isinstance(t, Proj):
        return Proj(t.index, _replace_label(t.arg, name, var))
    return t


def bfun_tables(program):
    """Evaluator tables for every bfun of a program."""
    sigs = T.signatures(program)
    out = {}
    for name, f in program.bfuns.items():
        nil_body, bodies, default, lvar, excluded = None, {}, None, None, frozenset()
        var = "t"
        for c in f.clauses:
            p = c.pattern
            if isinstance(p, S.NilPattern):
                nil_body = translate_open(T.infer(c.body, (), sigs), ())
                continue
            var = _var_name(p.var)
            if isinstance(p, S.ConcreteLabel):
                body = T.infer(c.body, (p.var,), sigs)
                bodies[p.label] = _rename_var(translate_open(body, (var,)), var, "t")
            else:
                raw = REC._subst_label(c.body, p.name, _PLACEHOLDER)
                body = T.infer(raw, (p.var,), sigs)
                lvar = "l"
                default = _replace_label(_rename_var(translate_open(body, (var,), {"l"}), var, "t"),
                                         _PLACEHOLDER, Var(lvar))
                excluded = frozenset(p.excluded)
        out[name] = BfunTable(name, "t", nil_body, bodies, default, lvar, excluded)
    return out


def _rename_var(t, old, new):
    return t if old == new else subst(t, {old: Var(new)})


# --------------------------------------------------- recursion operators

def table_shape(e):
    """``(label variable, params, [(label, branch)], default)`` of a
    canonical clause table."""
    if not (isinstance(e, Lam) and len(e.params) == 1 and isinstance(e.body, Lam)):
        raise NonCanonicalClauseTable("a clause table is \\l. \\(x1,..,xk). body")
    lv = e.params[0]
    params = e.body.params
    branches = []
    b = e.body.body
    while isinstance(b, If):
        c = b.cond
        if not (isinstance(c, Eq) and isinstance(c.left, Var) and c.left.name == lv
                and isinstance(c.right, LabConst)):
            raise NonCanonicalClauseTable("conditions must test the label against a constant")
        branches.append((c.right.name, b.then))
        b = b.other
    return lv, params, branches, b


def _table(lv, params, branches, default):
    out = default
    for lab, body in reversed(branches):
        out = If(Eq(Var(lv), LabConst(lab)), body, out)
    return Lam((lv,), Lam(tuple(params), out))


class _Srec:
    def __init__(self, e, k, avoid):
        self.e, self.k = e, k
        self.used = set(avoid) | free_vars(e) | labels_of(e) | KEYWORDS

    def fresh(self, base):
        n = T.fresh(base, self.used)
        self.used.add(n)
        return n

    def copies(self, name):
        if self.k == 1:
            return (self.fresh(name),)
        return tuple(self.fresh(f"{name}_{i}") for i in range(1, self.k + 1))

    def go(self, t, env):
        k = self.k
        if isinstance(t, Var):
            if t.name not in env:
                raise NotInImage(f"free variable {t.name}")
            return tup([Var(c) for c in env[t.name]])
        if isinstance(t, Nil):
            return tup([NIL] * k)
        if isinstance(t, Tuple):
            return tup([self.go(i, env) for i in t.items]) if t.items else UNIT
        if isinstance(t, Lab):
            if not isinstance(t.label, LabConst):
                raise NotInImage("edge labels must be constants")
            return App(App(self.e, t.label), self.go(t.body, env))
        if isinstance(t, Union):
            a, b = self.go(t.left, env), self.go(t.right, env)
            if k == 1:
                return Union(a, b)
            xs, ys = self.copies("u"), self.copies("v")
            body = Tuple(tuple(Union(Var(x), Var(y)) for x, y in zip(xs, ys)))
            return App(Lam(xs, App(Lam(ys, body), b)), a)
        if isinstance(t, App) and isinstance(t.fn, Lam):
            inner, params = self.bind(t.fn.params, env)
            return App(Lam(params, self.go(t.fn.body, inner)), self.go(t.arg, env))
        if isinstance(t, Fix) and isinstance(t.fn, Lam):
            inner, params = self.bind(t.fn.params, env)
            return Fix(Lam(params, self.go(t.fn.body, inner)))
        raise NotInImage(f"{type(t).__name__} cannot be traversed by srec")

    def bind(self, ps, env):
        inner = dict(env)
        params = []
        for p in ps:
            cs = self.copies(p)
            inner[p] = cs
            params.extend(cs)
        return inner, tuple(params)


def lg_srec(e, t):
    """Eliminate ``srec e t``: a term of type G^(k m) -> G^(k n), inputs and
    outputs copied k times marker by marker."""
    lv, params, branches, default = table_shape(e)
    k = len(params)
    ps = t.params if isinstance(t, Lam) else ()
    body = t.body if isinstance(t, Lam) else t
    r = _Srec(e, k, free_vars(t) | labels_of(t) | set(ps))
    inner, top = r.bind(ps, {})
    return lam(top, r.go(body, inner))


def lg_prec(e, t):
    """Eliminate ``prec e t`` for closed ``t``: srec with the extra raw
    copy, then drop that copy from every output."""
    lv, params, branches, default = table_shape(e)
    if not params:
        raise NonCanonicalClauseTable("a primitive table takes the raw subterm last")
    k = len(params) - 1
    raw = Var(params[-1])

    def extend(lab, b):
        label = LabConst(lab) if lab is not None else Var(lv)
        return tup([b, Lab(label, raw)])

    e2 = _table(lv, params, [(lab, extend(lab, b)) for lab, b in branches],
                extend(None, default) if not isinstance(default, Fail) else default)
    if isinstance(t, Lam):
        raise UserError("primitive recursion needs a closed argument")
    s = lg_srec(e2, t)
    n = _arity_of(t)
    used = free_vars(s) | labels_of(s) | KEYWORDS
    zs = []
    for _ in range(n * (k + 1)):
        z = T.fresh("z", used)
        used.add(z)
        zs.append(z)
    keep = [Var(zs[i * (k + 1) + j]) for i in range(n) for j in range(k)]
    return App(Lam(tuple(zs), tup(keep) if keep else UNIT), s)


def _arity_of(t):
    return arity(type_of(t))


def expand(t):
    if isinstance(t, Srec):
        return lg_srec(t.table, t.arg)
    if isinstance(t, Prec):
        return lg_prec(t.table, t.arg)
    return t


def program_tables(program):
    """Clause tables for every sfun and evaluator tables for every bfun."""
    env = REC.make_env(program)
    tables = {}
    for name in program.sfuns:
        d = env.rec(name)
        tables[name] = (d.mode, clause_table(d))
    return tables, bfun_tables(program)
