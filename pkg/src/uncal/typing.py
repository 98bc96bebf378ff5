"""Typed terms ``Y |- t : X``.

Typed terms are positional: a marker reference is an index into the source
context and a cycle body sees ``Y + X``.  Every node also carries the names
of its source and target contexts, but those names are excluded from
equality, so two terms that differ only in marker naming compare equal.
A definition ``x := t`` is not a node of its own; it only renames the
target of ``t``.
"""

from dataclasses import dataclass, field, replace

from . import syntax as S
from .errors import (ArityError, ContextMismatch, DomainMismatch, InconsistentK,
                     LengthMismatch, UnboundMarker, UnknownFunction)

AMP = ("&",)


def _names():
    return field(compare=False, kw_only=True)


@dataclass(frozen=True)
class TMark:
    index: int
    src: tuple = _names()
    tgt: tuple = _names()


@dataclass(frozen=True)
class TNil:
    src: tuple = _names()
    tgt: tuple = _names()


@dataclass(frozen=True)
class TEmp:
    src: tuple = _names()
    tgt: tuple = _names()


@dataclass(frozen=True)
class TMan:
    src: tuple = _names()
    tgt: tuple = _names()


@dataclass(frozen=True)
class TLabel:
    label: str
    body: object
    src: tuple = _names()
    tgt: tuple = _names()


@dataclass(frozen=True)
class TComp:
    outer: object
    inner: object
    src: tuple = _names()
    tgt: tuple = _names()


@dataclass(frozen=True)
class TPair:
    items: tuple
    src: tuple = _names()
    tgt: tuple = _names()


@dataclass(frozen=True)
class TCycle:
    body: object
    src: tuple = _names()
    tgt: tuple = _names()


@dataclass(frozen=True)
class TCall:
    name: str
    arg: object
    src: tuple = _names()
    tgt: tuple = _names()


TypedTerm = (TMark, TNil, TEmp, TMan, TLabel, TComp, TPair, TCycle, TCall)


# ------------------------------------------------------------ contexts

def ctx_concat(ctxs):
    """Concatenate target contexts, suffixing ``$i`` (1-based component
    index) to every name that occurs in more than one place."""
    ctxs = [tuple(c) for c in ctxs]
    flat = [n for c in ctxs for n in c]
    dup = {n for n in flat if flat.count(n) > 1}
    if not dup:
        return tuple(flat)
    out = []
    for i, c in enumerate(ctxs, 1):
        out.extend(f"{n}${i}" if n in dup else n for n in c)
    if len(set(out)) != len(out):
        raise ArityError(f"cannot make target context distinct: {out}")
    return tuple(out)


def fresh(base, used):
    if base not in used:
        return base
    i = 1
    while f"{base}{i}" in used:
        i += 1
    return f"{base}{i}"


def distinct(names, avoid=()):
    """Rename repeated names (and names in ``avoid``) apart, keeping order."""
    used = set(avoid)
    out = []
    for n in names:
        m = fresh(n, used) if n in used else n
        used.add(m)
        out.append(m)
    return tuple(out)


def default_ctx(n, base="&y"):
    if n == 1 and base == "&":
        return AMP
    return tuple(f"{base}{i}" for i in range(1, n + 1))


# --------------------------------------------------------- constructors

def mark(i, src, name="&"):
    src = tuple(src)
    if not 0 <= i < len(src):
        raise UnboundMarker(f"marker index {i} outside context of size {len(src)}")
    return TMark(i, src=src, tgt=(name,))


def nil(src, name="&"):
    return TNil(src=tuple(src), tgt=(name,))


def emp(src):
    return TEmp(src=tuple(src), tgt=())


def man(src=("&x", "&y"), name="&"):
    src = tuple(src)
    if len(src) != 2:
        raise ContextMismatch(f"! needs a source of two markers, got {len(src)}")
    return TMan(src=src, tgt=(name,))


def label(lab, body, name="&"):
    if len(body.tgt) != 1:
        raise ContextMismatch(f"label {lab!r} applied to a term of type {fmt_ctx(body.tgt)}")
    return TLabel(lab, body, src=body.src, tgt=(name,))


def comp(outer, inner):
    if len(outer.src) != len(inner.tgt):
        raise ContextMismatch(
            f"composition: outer source {fmt_ctx(outer.src)} vs inner target {fmt_ctx(inner.tgt)}")
    return TComp(outer, inner, src=inner.src, tgt=outer.tgt)


def pair(items, src=None):
    items = list(items)
    if src is None:
        if not items:
            raise ValueError("pair() of nothing needs a source context")
        src = items[0].src
    src = tuple(src)
    flat = []
    for it in items:
        if len(it.src) != len(src):
            raise ContextMismatch("pair components disagree on the source context")
        if isinstance(it, TPair):
            flat.extend(retag_items(it))
        elif len(it.tgt) > 0:
            flat.append(it)
    if not flat:
        return emp(src)
    if len(flat) == 1:
        return flat[0]
    return TPair(tuple(flat), src=src, tgt=ctx_concat(i.tgt for i in flat))


def retag_items(p):
    """Components of a pair, each renamed to its slice of the pair's target."""
    out, k = [], 0
    for it in p.items:
        n = len(it.tgt)
        out.append(replace(it, tgt=p.tgt[k:k + n]))
        k += n
    return out


def cycle(body, ny):
    nx = len(body.tgt)
    if len(body.src) != ny + nx:
        raise ContextMismatch(
            f"cycle body source {fmt_ctx(body.src)} is not Y+X with X = {fmt_ctx(body.tgt)}")
    return TCycle(body, src=body.src[:ny], tgt=body.tgt)


def call(name, arg, tgt=AMP):
    if len(arg.tgt) != 1:
        raise ContextMismatch(f"argument of {name} must have type &")
    return TCall(name, arg, src=arg.src, tgt=tuple(tgt))


def retag(t, tgt):
    tgt = tuple(tgt)
    if len(tgt) != len(t.tgt):
        raise LengthMismatch(f"cannot rename {fmt_ctx(t.tgt)} to {fmt_ctx(tgt)}")
    return t if tgt == t.tgt else replace(t, tgt=tgt)


def fmt_ctx(ctx):
    return "<" + ",".join(ctx) + ">"


# ------------------------------------------------------------- inference

def target_of(raw, sigs):
    """Syntactic target context of a raw term; None when it depends on a
    function whose result type is not known yet."""
    if isinstance(raw, (S.Mark, S.Nil, S.Man, S.Edge)):
        return AMP
    if isinstance(raw, S.Emp):
        return ()
    if isinstance(raw, S.Def):
        return (raw.name,)
    if isinstance(raw, S.Compose):
        return target_of(raw.outer, sigs)
    if isinstance(raw, S.Cycle):
        return target_of(raw.body, sigs)
    if isinstance(raw, S.Pair):
        parts = [target_of(i, sigs) for i in raw.items]
        if any(p is None for p in parts):
            return None
        return ctx_concat(parts)
    if isinstance(raw, S.Call):
        return sigs.get(raw.name)
    raise TypeError(f"not a raw term: {raw!r}")


def signatures(program):
    """Result contexts W of every function in a program.

    bfuns return ``&``; an sfun's W is the target of its clause bodies,
    found by iterating until calls between sfuns are resolved.  A
    function whose bodies are all bare recursive calls gets ``&``.
    """
    if program is None:
        return {}
    if isinstance(program, dict):
        return dict(program)
    sigs = {name: AMP for name in program.bfuns}
    pending = dict(program.sfuns)
    changed = True
    while changed and pending:
        changed = False
        for name, f in list(pending.items()):
            known = [w for w in (target_of(c.body, sigs) for c in f.clauses) if w is not None]
            if known:
                if len({len(w) for w in known}) > 1:
                    raise InconsistentK(f"{name}: clauses disagree on the result arity")
                sigs[name] = known[0]
                del pending[name]
                changed = True
    for name in pending:
        sigs[name] = AMP
    return sigs


def infer(raw, source=(), program=None):
    """Derive ``source |- raw : X``; returns the typed term."""
    sigs = signatures(program)
    src = tuple(S.marker(n) for n in source)
    if len(set(src)) != len(src):
        raise ContextMismatch(f"source context {fmt_ctx(src)} repeats a marker")
    return _infer(raw, src, sigs)


def _infer(t, Y, sigs):
    if isinstance(t, S.Mark):
        for i in range(len(Y) - 1, -1, -1):
            if Y[i] == t.name:
                return mark(i, Y)
        raise UnboundMarker(f"marker {t.name} not in {fmt_ctx(Y)}")
    if isinstance(t, S.Nil):
        return nil(Y)
    if isinstance(t, S.Emp):
        return emp(Y)
    if isinstance(t, S.Man):
        return man(Y)
    if isinstance(t, S.Edge):
        return label(t.label, _infer(t.body, Y, sigs))
    if isinstance(t, S.Def):
        b = _infer(t.body, Y, sigs)
        if len(b.tgt) != 1:
            raise ContextMismatch(f"{t.name} := ... needs a body of type &")
        return retag(b, (t.name,))
    if isinstance(t, S.Compose):
        inner = _infer(t.inner, Y, sigs)
        try:
            outer = _infer(t.outer, inner.tgt, sigs)
        except UnboundMarker as e:
            raise ContextMismatch(f"composition: {e}") from None
        except ContextMismatch as e:
            if isinstance(t.outer, S.Man):
                raise ContextMismatch(
                    f"composition: ! expects two inputs, inner target is {fmt_ctx(inner.tgt)}") from None
            raise e
        return comp(outer, inner)
    if isinstance(t, S.Pair):
        return pair([_infer(i, Y, sigs) for i in t.items], Y)
    if isinstance(t, S.Cycle):
        X = target_of(t.body, sigs)
        if X is None:
            raise UnknownFunction("cycle body calls a function of unknown type")
        b = _infer(t.body, Y + X, sigs)
        return cycle(b, len(Y))
    if isinstance(t, S.Call):
        if t.name not in sigs:
            raise UnknownFunction(f"unknown function {t.name!r}")
        return call(t.name, _infer(t.arg, Y, sigs), sigs[t.name])
    raise TypeError(f"not a raw term: {t!r}")


# -------------------------------------------------------------- traversal

def free_indices(t):
    """Source positions referenced by marker nodes."""
    if isinstance(t, TMark):
        return {t.index}
    if isinstance(t, TMan):
        return {0, 1}
    if isinstance(t, (TNil, TEmp)):
        return set()
    if isinstance(t, TLabel):
        return free_indices(t.body)
    if isinstance(t, TCall):
        return free_indices(t.arg)
    if isinstance(t, TComp):
        return free_indices(t.inner)
    if isinstance(t, TPair):
        out = set()
        for i in t.items:
            out |= free_indices(i)
        return out
    if isinstance(t, TCycle):
        n = len(t.src)
        return {i for i in free_indices(t.body) if i < n}
    raise TypeError(t)


def has_calls(t):
    if isinstance(t, TCall):
        return True
    if isinstance(t, TLabel):
        return has_calls(t.body)
    if isinstance(t, TComp):
        return has_calls(t.outer) or has_calls(t.inner)
    if isinstance(t, TPair):
        return any(has_calls(i) for i in t.items)
    if isinstance(t, TCycle):
        return has_calls(t.body)
    return False


def size(t):
    if isinstance(t, TLabel):
        return 1 + size(t.body)
    if isinstance(t, TCall):
        return 1 + size(t.arg)
    if isinstance(t, TComp):
        return 1 + size(t.outer) + size(t.inner)
    if isinstance(t, TPair):
        return 1 + sum(size(i) for i in t.items)
    if isinstance(t, TCycle):
        return 1 + size(t.body)
    return 1


def labels_in(t):
    out = set()
    stack = [t]
    while stack:
        u = stack.pop()
        if isinstance(u, TLabel):
            out.add(u.label)
            stack.append(u.body)
        elif isinstance(u, TCall):
            stack.append(u.arg)
        elif isinstance(u, TComp):
            stack += [u.outer, u.inner]
        elif isinstance(u, TPair):
            stack += list(u.items)
        elif isinstance(u, TCycle):
            stack.append(u.body)
    return out


def reindex(t, f, new_src):
    """Move ``t`` to source ``new_src``, sending marker i to f(i)."""
    new_src = tuple(new_src)
    if isinstance(t, TMark):
        return TMark(f(t.index), src=new_src, tgt=t.tgt)
    if isinstance(t, TNil):
        return TNil(src=new_src, tgt=t.tgt)
    if isinstance(t, TEmp):
        return TEmp(src=new_src, tgt=t.tgt)
    if isinstance(t, TMan):
        a, b = f(0), f(1)
        if len(new_src) == 2 and (a, b) == (0, 1):
            return TMan(src=new_src, tgt=t.tgt)
        mid = ("&x", "&y")
        p = pair([mark(a, new_src, mid[0]), mark(b, new_src, mid[1])], new_src)
        return retag(comp(man(mid), p), t.tgt)
    if isinstance(t, TLabel):
        return TLabel(t.label, reindex(t.body, f, new_src), src=new_src, tgt=t.tgt)
    if isinstance(t, TCall):
        return TCall(t.name, reindex(t.arg, f, new_src), src=new_src, tgt=t.tgt)
    if isinstance(t, TComp):
        return TComp(t.outer, reindex(t.inner, f, new_src), src=new_src, tgt=t.tgt)
    if isinstance(t, TPair):
        return TPair(tuple(reindex(i, f, new_src) for i in t.items), src=new_src, tgt=t.tgt)
    if isinstance(t, TCycle):
        ny, nn = len(t.src), len(new_src)
        g = lambda i: f(i) if i < ny else i - ny + nn  # noqa: E731
        body = reindex(t.body, g, new_src + t.body.src[ny:])
        return TCycle(body, src=new_src, tgt=t.tgt)
    raise TypeError(t)


def weaken(t, new_src):
    """View ``t`` over a longer source whose prefix is the old one."""
    return reindex(t, lambda i: i, new_src)


# ----------------------------------------------------------- substitution

def substitute(t, sigma, z=None):
    """Simultaneous substitution ``t[y_i -> s_i]``.

    ``sigma`` is a sequence (positional) or a mapping from source marker
    names; each ``s_i`` has type ``&`` over the common source ``z``.
    """
    if isinstance(sigma, dict):
        if set(sigma) != set(t.src):
            raise DomainMismatch(
                f"substitution domain {sorted(sigma)} differs from source {fmt_ctx(t.src)}")
        sigma = [sigma[n] for n in t.src]
    sigma = list(sigma)
    if len(sigma) != len(t.src):
        raise DomainMismatch(f"{len(sigma)} terms for a source of size {len(t.src)}")
    if z is None:
        if not sigma:
            raise DomainMismatch("empty substitution needs an explicit source context")
        z = sigma[0].src
    z = tuple(z)
    for s in sigma:
        if len(s.tgt) != 1 or len(s.src) != len(z):
            raise DomainMismatch("substituted terms must have type & over the common source")
    return _subst(t, sigma, z)


def _subst(t, sigma, z):
    if isinstance(t, TMark):
        return retag(sigma[t.index], t.tgt)
    if isinstance(t, TNil):
        return TNil(src=z, tgt=t.tgt)
    if isinstance(t, TEmp):
        return TEmp(src=z, tgt=t.tgt)
    if isinstance(t, TMan):
        p = pair([retag(sigma[0], ("&x",)), retag(sigma[1], ("&y",))], z)
        return retag(comp(man(("&x", "&y")), p), t.tgt)
    if isinstance(t, TLabel):
        return TLabel(t.label, _subst(t.body, sigma, z), src=z, tgt=t.tgt)
    if isinstance(t, TCall):
        return TCall(t.name, _subst(t.arg, sigma, z), src=z, tgt=t.tgt)
    if isinstance(t, TComp):
        return TComp(t.outer, _subst(t.inner, sigma, z), src=z, tgt=t.tgt)
    if isinstance(t, TPair):
        return TPair(tuple(_subst(i, sigma, z) for i in t.items), src=z, tgt=t.tgt)
    if isinstance(t, TCycle):
        xs = t.body.src[len(t.src):]
        zx = z + xs
        sig2 = [weaken(s, zx) for s in sigma]
        sig2 += [mark(len(z) + j, zx, xs[j]) for j in range(len(xs))]
        return TCycle(_subst(t.body, sig2, zx), src=z, tgt=t.tgt)
    raise TypeError(t)


def rename_target(t, new):
    """``t{X -> X'}``; only the names change, the structure is untouched."""
    return retag(t, tuple(S.marker(n) for n in new))


# ----------------------------------------------------------- abbreviations

def identity(ctx):
    ctx = tuple(ctx)
    return pair([mark(i, ctx, ctx[i]) for i in range(len(ctx))], ctx)


def proj_left(x, y):
    src = tuple(x) + tuple(y)
    return pair([mark(i, src, src[i]) for i in range(len(x))], src)


def proj_right(x, y):
    src = tuple(x) + tuple(y)
    return pair([mark(len(x) + i, src, src[len(x) + i]) for i in range(len(y))], src)


def projection(src, positions, names=None):
    src = tuple(src)
    names = names or [src[p] for p in positions]
    return pair([mark(p, src, n) for p, n in zip(positions, names)], src)


def diagonal(ctx):
    ctx = tuple(ctx)
    return pair([identity(ctx), identity(ctx)], ctx)


def swap(x, y):
    x, y = tuple(x), tuple(y)
    return pair([proj_right(x, y), proj_left(x, y)], x + y)


def times(t1, t2):
    y1, y2 = t1.src, t2.src
    src = distinct(y1 + y2)
    p1 = proj_left(src[:len(y1)], src[len(y1):])
    p2 = proj_right(src[:len(y1)], src[len(y1):])
    return pair([comp(t1, p1), comp(t2, p2)], src)


def union_of(t1, t2):
    p = pair([t1, t2])
    return comp(man(p.tgt), p)


def abbrev(kind, *args):
    table = {
        "proj_left": proj_left, "proj_right": proj_right, "identity": identity,
        "diagonal": diagonal, "swap": swap, "times": times, "union": union_of,
    }
    return table[kind](*args)


# ------------------------------------------------------------ rendering

def to_raw(t, src=None, tgt=None):
    """A raw term whose inference under ``src`` gives back ``t``."""
    src = distinct(t.src if src is None else src)
    tgt = distinct(t.tgt if tgt is None else tgt)
    return _raw(t, src, tgt)


def _wrap(r, tgt):
    return r if tgt == AMP else S.Def(tgt[0], r)


def _raw(t, src, tgt):
    if isinstance(t, TMark):
        return _wrap(S.Mark(src[t.index]), tgt)
    if isinstance(t, TNil):
        return _wrap(S.Nil(), tgt)
    if isinstance(t, TMan):
        return _wrap(S.Man(), tgt)
    if isinstance(t, TEmp):
        return S.Emp()
    if isinstance(t, TLabel):
        return _wrap(S.Edge(t.label, _raw(t.body, src, AMP)), tgt)
    if isinstance(t, TCall):
        r = S.Call(t.name, _raw(t.arg, src, AMP))
        if tuple(t.tgt) == tuple(tgt):
            return r
        if len(tgt) == 1 and t.tgt == AMP:
            return S.Def(tgt[0], r)
        return S.Compose(S.mk_pair([S.Def(n, S.Mark(w)) for n, w in zip(tgt, t.tgt)]), r)
    if isinstance(t, TComp):
        mid = natural_target(t.inner)
        return S.Compose(_raw(t.outer, mid, tgt), _raw(t.inner, src, mid))
    if isinstance(t, TPair):
        nat = [natural_target(i) for i in t.items]
        try:
            if ctx_concat(nat) == tuple(tgt):
                return S.Pair(tuple(_raw(i, src, n) for i, n in zip(t.items, nat)))
        except ArityError:
            pass
        out, k = [], 0
        for it in t.items:
            n = len(it.tgt)
            out.append(_raw(it, src, tgt[k:k + n]))
            k += n
        return S.Pair(tuple(out))
    if isinstance(t, TCycle):
        ny = len(src)
        shadowed = {i for i in range(ny) if src[i] in tgt}
        if shadowed & free_indices(t.body):
            inner = distinct(tgt, avoid=src)
            body = _raw(t.body, src + inner, inner)
            ren = S.mk_pair([S.Def(n, S.Mark(m)) for n, m in zip(tgt, inner)])
            return S.Compose(ren, S.Cycle(body))
        return S.Cycle(_raw(t.body, src + tgt, tgt))
    raise TypeError(t)


def natural_target(t):
    """Target names that need no ``:=`` wrappers when rendered."""
    if isinstance(t, (TMark, TNil, TMan, TLabel)):
        return AMP
    if isinstance(t, TEmp):
        return ()
    if isinstance(t, TComp):
        return natural_target(t.outer)
    if isinstance(t, TPair):
        try:
            return ctx_concat(natural_target(i) for i in t.items)
        except ArityError:
            return distinct(t.tgt)
    return distinct(t.tgt)


def display_target(t):
    """Target names for printing a whole term: its own names unless they
    are only the defaults produced by pairing."""
    tgt = tuple(t.tgt)
    if len(set(tgt)) == len(tgt) and not all(n == "&" or n.startswith("&$") for n in tgt):
        return tgt
    return natural_target(t)


def show(t):
    return S.print_term(to_raw(t, tgt=display_target(t)))


def judgment(t):
    tgt = display_target(t)
    raw = S.print_term(to_raw(t, tgt=tgt))
    return f"{fmt_ctx(distinct(t.src))} |- {raw} : {fmt_ctx(tgt)}"
