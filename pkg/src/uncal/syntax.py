"""Raw terms, programs, the parser and the printer.

Marker names are stored with their leading ``&`` (``"&"``, ``"&x"``); a bare
identifier in marker position is read as ``&ident``.  Labels are plain
strings.  ``{t1, ..., tn}`` and ``s U t`` are sugar for ``!@(s, t)``.
"""

import re
from dataclasses import dataclass

from .errors import DuplicateClause, OverlappingPatterns, ParseError, UserError

DEFAULT = "&"


@dataclass(frozen=True)
class Mark:
    name: str


@dataclass(frozen=True)
class Edge:
    label: str
    body: object


@dataclass(frozen=True)
class Compose:
    outer: object
    inner: object


@dataclass(frozen=True)
class Pair:
    items: tuple


@dataclass(frozen=True)
class Cycle:
    body: object


@dataclass(frozen=True)
class Nil:
    pass


@dataclass(frozen=True)
class Emp:
    pass


@dataclass(frozen=True)
class Man:
    pass


@dataclass(frozen=True)
class Def:
    name: str
    body: object


@dataclass(frozen=True)
class Call:
    name: str
    arg: object


def mk_pair(items):
    """Pair with the flattening conventions: nested pairs are spliced,
    empty components dropped, and 0/1-element pairs collapse."""
    flat = []
    for it in items:
        if isinstance(it, Pair):
            flat.extend(it.items)
        elif not isinstance(it, Emp):
            flat.append(it)
    if not flat:
        return Emp()
    if len(flat) == 1:
        return flat[0]
    return Pair(tuple(flat))


def union(s, t):
    return Compose(Man(), mk_pair([s, t]))


def union_all(items):
    items = list(items)
    if not items:
        return Nil()
    out = items[-1]
    for it in reversed(items[:-1]):
        out = union(it, out)
    return out


def is_union(t):
    return (isinstance(t, Compose) and isinstance(t.outer, Man)
            and isinstance(t.inner, Pair) and len(t.inner.items) == 2)


def marker(name):
    return name if name.startswith("&") else "&" + name


def labels_of(t):
    """All labels occurring in a raw term."""
    out = set()
    stack = [t]
    while stack:
        u = stack.pop()
        if isinstance(u, Edge):
            out.add(u.label)
            stack.append(u.body)
        elif isinstance(u, Compose):
            stack += [u.outer, u.inner]
        elif isinstance(u, Pair):
            stack += list(u.items)
        elif isinstance(u, (Cycle, Def)):
            stack.append(u.body)
        elif isinstance(u, Call):
            stack.append(u.arg)
    return out


def calls_of(t):
    out = []
    stack = [t]
    while stack:
        u = stack.pop()
        if isinstance(u, Call):
            out.append(u.name)
            stack.append(u.arg)
        elif isinstance(u, Edge):
            stack.append(u.body)
        elif isinstance(u, Compose):
            stack += [u.outer, u.inner]
        elif isinstance(u, Pair):
            stack += list(u.items)
        elif isinstance(u, (Cycle, Def)):
            stack.append(u.body)
    return out


# ---------------------------------------------------------------- programs

@dataclass(frozen=True)
class ConcreteLabel:
    label: str
    var: str


@dataclass(frozen=True)
class LabelVar:
    name: str
    var: str
    excluded: frozenset


@dataclass(frozen=True)
class NilPattern:
    pass


@dataclass(frozen=True)
class Clause:
    pattern: object
    body: object


@dataclass
class FunSource:
    name: str
    kind: str  # "sfun" or "bfun"
    clauses: list

    def clause_for(self, label):
        for c in self.clauses:
            p = c.pattern
            if isinstance(p, ConcreteLabel) and p.label == label:
                return c
        for c in self.clauses:
            p = c.pattern
            if isinstance(p, LabelVar) and label not in p.excluded:
                return c
        return None

    def nil_clause(self):
        for c in self.clauses:
            if isinstance(c.pattern, NilPattern):
                return c
        return None

    def concrete_labels(self):
        return {c.pattern.label for c in self.clauses
                if isinstance(c.pattern, ConcreteLabel)}


SfunSource = BfunSource = FunSource


@dataclass
class Program:
    sfuns: dict
    bfuns: dict
    main: object = None

    def function(self, name):
        return self.sfuns.get(name) or self.bfuns.get(name)


# ------------------------------------------------------------------- lexer

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+|--[^\n]*)
  | (?P<nl>\n)
  | (?P<str>"(?:[^"\\\n]|\\.)*")
  | (?P<oplus>\(\+\)|⊕)
  | (?P<neq>/=|≠)
  | (?P<assign>:=)
  | (?P<marker>&(?:[A-Za-z0-9_$][A-Za-z0-9_$'?]*(?:-(?!-)[A-Za-z0-9_$'?]+)*)?)
  | (?P<ident>[A-Za-z0-9_$][A-Za-z0-9_$'?]*(?:-(?!-)[A-Za-z0-9_$'?]+)*)
  | (?P<punct>[:@,(){}<>⟨⟩!=|∪])
""", re.VERBOSE)


@dataclass(frozen=True)
class Tok:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text):
    toks = []
    pos, line, lstart = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - lstart + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            lstart = m.end()
        elif kind != "ws":
            s = m.group()
            if kind == "punct":
                kind = {"⟨": "(", "<": "(", "⟩": ")", ">": ")", "∪": "U"}.get(s, s)
            elif kind == "oplus":
                kind = ","
            elif kind == "neq":
                kind = "/="
            elif kind == "assign":
                kind = ":="
            elif kind == "ident" and s == "U":
                kind = "U"
            toks.append(Tok(kind, s, line, pos - lstart + 1))
        pos = m.end()
    toks.append(Tok("eof", "", line, pos - lstart + 1))
    return toks


def _unquote(s):
    return re.sub(r"\\(.)", r"\1", s[1:-1])


# ------------------------------------------------------------------ parser

class _Parser:
    def __init__(self, text):
        self.toks = tokenize(text)
        self.i = 0

    def peek(self, k=0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, kind):
        t = self.next()
        if t.kind != kind:
            want = "end of input" if kind == "eof" else repr(kind)
            got = "end of input" if t.kind == "eof" else repr(t.text)
            raise ParseError(f"expected {want}, found {got}", t.line, t.col)
        return t

    def error(self, msg):
        t = self.peek()
        raise ParseError(msg, t.line, t.col)

    def term(self):
        t = self.union()
        while self.peek().kind == "@":
            self.next()
            t = Compose(t, self.union())
        return t

    def union(self):
        items = [self.atom()]
        while self.peek().kind == "U":
            self.next()
            items.append(self.atom())
        return union_all(items)

    def atom(self):
        t = self.peek()
        k = t.kind
        if k == "marker":
            self.next()
            if self.peek().kind == ":=":
                self.next()
                return Def(t.text, self.atom())
            return Mark(t.text)
        if k == "!":
            self.next()
            return Man()
        if k == "(":
            self.next()
            if self.peek().kind == ")":
                self.next()
                return Emp()
            items = [self.term()]
            while self.peek().kind == ",":
                self.next()
                items.append(self.term())
            self.expect(")")
            return mk_pair(items)
        if k == "{":
            self.next()
            if self.peek().kind == "}":
                self.next()
                return Nil()
            items = [self.term()]
            while self.peek().kind == ",":
                self.next()
                items.append(self.term())
            self.expect("}")
            return union_all(items)
        if k == "str":
            self.next()
            lab = _unquote(t.text)
            if self.peek().kind == ":":
                self.next()
                return Edge(lab, self.atom())
            return Edge(lab, Nil())
        if k == "ident":
            self.next()
            nk = self.peek().kind
            if nk == ":":
                self.next()
                return Edge(t.text, self.atom())
            if nk == ":=":
                self.next()
                return Def(marker(t.text), self.atom())
            if nk == "(":
                self.next()
                arg = self.term()
                self.expect(")")
                if t.text == "cycle":
                    return Cycle(arg)
                return Call(t.text, arg)
            if t.text.isdigit():
                return Edge(t.text, Nil())
            return Mark(marker(t.text))
        got = "end of input" if k == "eof" else repr(t.text)
        raise ParseError(f"unexpected {got}", t.line, t.col)

    # programs
    def program(self):
        sfuns, bfuns, main = {}, {}, None
        while self.peek().kind != "eof":
            t = self.next()
            if t.kind == "ident" and t.text in ("sfun", "bfun"):
                table = sfuns if t.text == "sfun" else bfuns
                funs = self.clauses(t.text)
                if not funs:
                    self.error(f"{t.text} needs at least one clause")
                for f in funs:
                    if f.name in sfuns or f.name in bfuns:
                        raise DuplicateClause(f"function {f.name!r} defined twice")
                    table[f.name] = f
            elif t.kind == "ident" and t.text == "main":
                self.expect("=")
                if main is not None:
                    raise DuplicateClause("main defined twice")
                main = self.term()
            else:
                raise ParseError(f"unexpected {t.text!r} at top level", t.line, t.col)
        prog = Program(sfuns, bfuns, main)
        _validate(prog)
        return prog

    def _at_clause(self):
        return (self.peek().kind == "ident"
                and self.peek().text not in ("sfun", "bfun", "main")
                and self.peek(1).kind == "(")

    def clauses(self, kind):
        funs = []
        while True:
            if self.peek().kind == "|":
                self.next()
            if not self._at_clause():
                break
            name = self.next().text
            self.expect("(")
            pat = self.pattern(kind)
            self.expect(")")
            self.expect("=")
            body = self.term()
            excl = set()
            if self.peek().kind == "ident" and self.peek().text == "where":
                self.next()
                while True:
                    v = self.expect("ident")
                    self.expect("/=")
                    lab = self.next()
                    excl.add(_unquote(lab.text) if lab.kind == "str" else lab.text)
                    if not isinstance(pat, LabelVar) or v.text != pat.name:
                        raise ParseError("where-condition must constrain the label variable",
                                         v.line, v.col)
                    if self.peek().kind == ",":
                        self.next()
                        continue
                    break
            if not funs or funs[-1].name != name:
                if any(f.name == name for f in funs):
                    raise DuplicateClause(f"clauses of {name!r} are not contiguous")
                funs.append(FunSource(name, kind, []))
            f = funs[-1]
            if isinstance(pat, LabelVar):
                pat = LabelVar(pat.name, pat.var,
                               frozenset(f.concrete_labels() | excl))
            f.clauses.append(Clause(pat, body))
        return funs

    def pattern(self, kind):
        t = self.next()
        if t.kind == "{":
            self.expect("}")
            if kind != "bfun":
                raise ParseError("nil pattern is only allowed in bfun", t.line, t.col)
            return NilPattern()
        if t.kind not in ("ident", "str"):
            raise ParseError(f"bad pattern start {t.text!r}", t.line, t.col)
        self.expect(":")
        v = self.expect("ident")
        var = marker(v.text)
        if t.kind == "str":
            return ConcreteLabel(_unquote(t.text), var)
        if t.text[:1].isupper():
            return LabelVar(t.text, var, frozenset())
        return ConcreteLabel(t.text, var)


def _validate(prog):
    for f in list(prog.sfuns.values()) + list(prog.bfuns.values()):
        seen = set()
        nvars = 0
        nnil = 0
        for i, c in enumerate(f.clauses):
            p = c.pattern
            if isinstance(p, ConcreteLabel):
                if p.label in seen:
                    raise DuplicateClause(f"{f.name}: label {p.label!r} matched twice")
                seen.add(p.label)
                if nvars:
                    raise OverlappingPatterns(
                        f"{f.name}: clause for {p.label!r} follows the label-variable clause")
            elif isinstance(p, LabelVar):
                nvars += 1
                if nvars > 1:
                    raise OverlappingPatterns(f"{f.name}: more than one label-variable clause")
            else:
                nnil += 1
                if nnil > 1:
                    raise DuplicateClause(f"{f.name}: nil pattern matched twice")
        if f.kind == "bfun" and f.name in calls_of_clauses(f):
            raise UserError(f"bfun {f.name!r} must not call itself")


def calls_of_clauses(f):
    out = set()
    for c in f.clauses:
        out.update(calls_of(c.body))
    return out


def parse_term(text):
    p = _Parser(text)
    t = p.term()
    p.expect("eof")
    return t


def parse_program(text):
    return _Parser(text).program()


# ----------------------------------------------------------------- printer

_IDENT = re.compile(r"[A-Za-z0-9_$][A-Za-z0-9_$'?]*(?:-[A-Za-z0-9_$'?]+)*\Z")
_RESERVED = {"U", "cycle", "sfun", "bfun", "main", "where"}


def print_label(label):
    if _IDENT.match(label) and label not in _RESERVED:
        return label
    return '"' + label.replace("\\", "\\\\").replace('"', '\\"') + '"'


def print_marker(name):
    return name


def _union_items(t):
    out = []
    while is_union(t):
        out.append(t.inner.items[0])
        t = t.inner.items[1]
    out.append(t)
    return out


def print_term(t, level=0):
    """Render a raw term with minimal parentheses.

    level 0 allows a composition, level 1 is the right operand of ``@``,
    level 2 is an atom position (label body, definition body).
    """
    if isinstance(t, Mark):
        return t.name
    if isinstance(t, Nil):
        return "{}"
    if isinstance(t, Emp):
        return "()"
    if isinstance(t, Man):
        return "!"
    if isinstance(t, Edge):
        return print_label(t.label) + ":" + print_term(t.body, 2)
    if isinstance(t, Def):
        return t.name + ":=" + print_term(t.body, 2)
    if isinstance(t, Cycle):
        return "cycle(" + print_term(t.body, 0) + ")"
    if isinstance(t, Call):
        return t.name + "(" + print_term(t.arg, 0) + ")"
    if isinstance(t, Pair):
        return "(" + ", ".join(print_term(u, 0) for u in t.items) + ")"
    if isinstance(t, Compose):
        if is_union(t):
            return "{" + ", ".join(print_term(u, 0) for u in _union_items(t)) + "}"
        s = print_term(t.outer, 0) + " @ " + print_term(t.inner, 1)
        return s if level == 0 else "(" + s + ")"
    raise TypeError(f"not a raw term: {t!r}")


def print_program(prog):
    lines = []
    for kind, table in (("sfun", prog.sfuns), ("bfun", prog.bfuns)):
        for f in table.values():
            for i, c in enumerate(f.clauses):
                p = c.pattern
                if isinstance(p, NilPattern):
                    pat = "{}"
                elif isinstance(p, ConcreteLabel):
                    pat = print_label(p.label) + ":" + p.var.lstrip("&")
                else:
                    pat = p.name + ":" + p.var.lstrip("&")
                head = kind + " " if i == 0 else "     "
                lines.append(f"{head}{f.name}({pat}) = {print_term(c.body)}")
    if prog.main is not None:
        lines.append("main = " + print_term(prog.main))
    return "\n".join(lines) + ("\n" if lines else "")
