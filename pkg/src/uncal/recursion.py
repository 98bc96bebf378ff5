"""Structural and primitive recursion on graphs, program evaluation, and
fusion checks.

A recursive definition is turned into a family of abstracted bodies
``e'_l`` (one per label).  ``srec`` replaces every edge ``l:`` of a term
by ``e'_l`` while preserving composition, pairing, cycles and the monoid
structure; ``prec`` runs ``srec`` in the product monoid that also carries
a copy of the argument and projects it away afterwards.

With ``k`` result markers, every marker ``y`` of a context is duplicated
into ``y$1 .. y$k`` (no suffix when k = 1), ordered marker by marker.
"""

import random
from dataclasses import dataclass, field

from . import graph as G
from . import rewrite as R
from . import syntax as S
from . import typing as T
from .errors import (DependsOnArgument, HypothesisFailed, InconsistentK, MatchFailure,
                     ModeMismatch, NotClosed, UnknownFunction, UserError)

STRUCTURAL = "structural"
PRIMITIVE = "primitive"

MAX_ROUNDS = 10_000
MAX_UNFOLD = 64


def dup(ctx, k):
    """Marker-major k-fold copy of a context."""
    ctx = tuple(ctx)
    if k == 1:
        return ctx
    return tuple(f"{n}${i}" for n in ctx for i in range(1, k + 1))


# ------------------------------------------------------------ definitions

@dataclass
class RecDef:
    """Abstracted clause bodies of a recursive function.

    ``bodies`` maps concrete labels to ``e'_l``; ``default`` (if present)
    builds the body for any other label not in ``excluded``.  Structural
    bodies have judgment ``W |- e' : W``; primitive ones ``W,& |- e' : W``.
    """
    name: str
    k: int
    mode: str
    W: tuple
    bodies: dict
    default: object = None
    excluded: frozenset = frozenset()
    _cache: dict = field(default_factory=dict, repr=False)

    def body(self, lab):
        if lab in self.bodies:
            return self.bodies[lab]
        if self.default is None or lab in self.excluded:
            raise MatchFailure(f"{self.name}: no clause covers label {lab!r}")
        if lab not in self._cache:
            b = self.default(lab) if callable(self.default) else self.default
            self._cache[lab] = b
        return self._cache[lab]

    def labels(self):
        return set(self.bodies)


def make_def(name, bodies, default=None, mode=STRUCTURAL, excluded=()):
    """Build a RecDef from typed bodies (dict label -> term)."""
    some = next(iter(bodies.values()), None)
    if some is None:
        some = default(next_label(())) if callable(default) else default
    if some is None:
        raise UserError(f"{name}: a definition needs at least one clause")
    k = len(some.tgt)
    for lab, b in bodies.items():
        _check_body(name, lab, b, k, mode)
    return RecDef(name, k, mode, tuple(some.tgt), dict(bodies), default, frozenset(excluded))


def next_label(used):
    return T.fresh("other", set(used))


def _check_body(name, lab, b, k, mode):
    want = k + (1 if mode == PRIMITIVE else 0)
    if len(b.tgt) != k or len(b.src) != want:
        raise InconsistentK(f"{name}: body for {lab!r} is not typed over {k} result markers")


def _subst_label(raw, var, lab):
    """Replace label variable ``var`` by ``lab`` in a raw term."""
    if isinstance(raw, S.Edge):
        return S.Edge(lab if raw.label == var else raw.label, _subst_label(raw.body, var, lab))
    if isinstance(raw, S.Compose):
        return S.Compose(_subst_label(raw.outer, var, lab), _subst_label(raw.inner, var, lab))
    if isinstance(raw, S.Pair):
        return S.Pair(tuple(_subst_label(i, var, lab) for i in raw.items))
    if isinstance(raw, S.Cycle):
        return S.Cycle(_subst_label(raw.body, var, lab))
    if isinstance(raw, S.Def):
        return S.Def(raw.name, _subst_label(raw.body, var, lab))
    if isinstance(raw, S.Call):
        return S.Call(raw.name, _subst_label(raw.arg, var, lab))
    return raw


def _uses_bare(raw, fname, var):
    """Does ``var`` occur other than as the argument of ``fname``?"""
    if isinstance(raw, S.Mark):
        return raw.name == var
    if isinstance(raw, S.Call):
        if raw.name == fname and raw.arg == S.Mark(var):
            return False
        return _uses_bare(raw.arg, fname, var)
    if isinstance(raw, S.Edge):
        return _uses_bare(raw.body, fname, var)
    if isinstance(raw, S.Compose):
        return _uses_bare(raw.outer, fname, var) or _uses_bare(raw.inner, fname, var)
    if isinstance(raw, S.Pair):
        return any(_uses_bare(i, fname, var) for i in raw.items)
    if isinstance(raw, (S.Cycle, S.Def)):
        return _uses_bare(raw.body, fname, var)
    return False


def _w_source(W, mode):
    """Source names of abstracted bodies: W (with a default marker moved
    aside in primitive mode) followed by the hole ``&``."""
    if mode == STRUCTURAL:
        return tuple(W)
    ws = tuple(T.fresh("&x", set(W)) if w == "&" else w for w in W)
    return ws + ("&",)


def abstract_body(raw, fname, mode, W, var, sigs=None, sfuns=()):
    """``e'_l``: replace ``fname(var)`` with the identity on W and, in
    primitive mode, the bare argument with the hole ``&``."""
    W = tuple(W)
    src = _w_source(W, mode)
    ids = S.mk_pair([S.Def(w, S.Mark(s)) if w != "&" else S.Mark(s)
                     for w, s in zip(W, src)])

    def go(r):
        if isinstance(r, S.Mark):
            if r.name == var:
                if mode == STRUCTURAL:
                    raise DependsOnArgument(
                        f"{fname}: the argument {var} is used outside a recursive call")
                return S.Mark("&")
            return r
        if isinstance(r, S.Call):
            if r.name == fname:
                if r.arg != S.Mark(var):
                    raise DependsOnArgument(
                        f"{fname}: recursive calls must be applied to the pattern variable")
                return ids
            if r.name in sfuns:
                raise UserError(f"{fname}: calls to other sfuns inside clause bodies are not supported")
            return S.Call(r.name, go(r.arg))
        if isinstance(r, S.Edge):
            return S.Edge(r.label, go(r.body))
        if isinstance(r, S.Compose):
            return S.Compose(go(r.outer), go(r.inner))
        if isinstance(r, S.Pair):
            return S.mk_pair([go(i) for i in r.items])
        if isinstance(r, S.Cycle):
            return S.Cycle(go(r.body))
        if isinstance(r, S.Def):
            return S.Def(r.name, go(r.body))
        return r

    body = T.infer(go(raw), src, sigs or {})
    if len(body.tgt) != len(W):
        raise InconsistentK(f"{fname}: a clause body has {len(body.tgt)} results, expected {len(W)}")
    return T.retag(R.normalize(body), W)


def detect_mode(f):
    for c in f.clauses:
        p = c.pattern
        if not isinstance(p, S.NilPattern) and _uses_bare(c.body, f.name, p.var):
            return PRIMITIVE
    return STRUCTURAL


def from_sfun(f, program, mode=None):
    """Elaborate an sfun definition into a RecDef."""
    sigs = T.signatures(program)
    W = sigs[f.name]
    auto = detect_mode(f)
    if mode is None:
        mode = auto
    elif mode == STRUCTURAL and auto == PRIMITIVE:
        raise DependsOnArgument(f"{f.name}: a clause uses its argument directly")
    sfuns = set(program.sfuns) - {f.name}
    bodies = {}
    default = None
    excluded = frozenset()
    for c in f.clauses:
        p = c.pattern
        if isinstance(p, S.ConcreteLabel):
            bodies[p.label] = abstract_body(c.body, f.name, mode, W, p.var, sigs, sfuns)
        elif isinstance(p, S.LabelVar):
            raw, name, var = c.body, p.name, p.var

            def default(lab, raw=raw, name=name, var=var):
                return abstract_body(_subst_label(raw, name, lab), f.name, mode, W, var, sigs, sfuns)
            excluded = p.excluded
        else:
            raise UserError(f"sfun {f.name}: nil patterns are only allowed in bfuns")
    return RecDef(f.name, len(W), mode, tuple(W), bodies, default, excluded)


# ------------------------------------------------------------------ srec

def _psi(t, body, k):
    """The structural map over k copies; ``body(l)`` gives the term that
    replaces an edge labelled l."""
    ysrc = dup(t.src, k)
    tgt = dup(t.tgt, k)
    if isinstance(t, T.TMark):
        items = [T.mark(t.index * k + j, ysrc, n) for j, n in enumerate(tgt)]
        return T.pair(items, ysrc)
    if isinstance(t, T.TEmp):
        return T.emp(ysrc)
    if isinstance(t, T.TNil):
        return T.pair([T.nil(ysrc, n) for n in tgt], ysrc)
    if isinstance(t, T.TMan):
        items = [T.retag(T.union_of(T.mark(c, ysrc), T.mark(k + c, ysrc)), (n,))
                 for c, n in enumerate(tgt)]
        return T.pair(items, ysrc)
    if isinstance(t, T.TLabel):
        inner = _psi(t.body, body, k)
        return T.retag(T.comp(body(t.label), inner), tgt)
    if isinstance(t, T.TComp):
        return T.retag(T.comp(_psi(t.outer, body, k), _psi(t.inner, body, k)), tgt)
    if isinstance(t, T.TPair):
        return T.retag(T.pair([_psi(i, body, k) for i in t.items], ysrc), tgt)
    if isinstance(t, T.TCycle):
        return T.retag(T.cycle(_psi(t.body, body, k), len(ysrc)), tgt)
    if isinstance(t, T.TCall):
        raise UserError(f"cannot recurse over an unresolved call to {t.name}")
    raise TypeError(t)


def srec(defn, t):
    """Structural recursion: ``Y^1..Y^k |- srec(e')(t) : X^1..X^k``."""
    if defn.mode != STRUCTURAL:
        raise ModeMismatch(f"{defn.name} is primitive recursive; use prec")
    return _psi(t, defn.body, defn.k)


def _prim_body(defn):
    k = defn.k

    def body(lab):
        e = defn.body(lab)
        hole = T.label(lab, T.mark(k, e.src), "&")
        return T.pair([e, hole], e.src)
    return body


def prec_pair(defn, t):
    """The structural map of the product monoid; equals ``<prec(t), t>``."""
    if defn.mode != PRIMITIVE:
        raise ModeMismatch(f"{defn.name} is structural; use srec")
    return _psi(t, _prim_body(defn), defn.k + 1)


def prec_projection(x, k):
    """Keep the first k of every k+1 copies of each marker of x."""
    src = dup(x, k + 1)
    pos = [i * (k + 1) + j for i in range(len(x)) for j in range(k)]
    return T.projection(src, pos, list(dup(x, k)))


def prec(defn, t):
    """Primitive recursion on a closed term."""
    if defn.mode != PRIMITIVE:
        raise ModeMismatch(f"{defn.name} is structural; use srec")
    if t.src:
        raise NotClosed(f"{defn.name}: primitive recursion needs a closed argument")
    psi = prec_pair(defn, t)
    return T.comp(prec_projection(t.tgt, defn.k), psi)


def duplicate_tuple(src, k):
    """``Y |- <y1,..,y1, y2,..> : dup(Y, k)``, each marker repeated k times."""
    src = tuple(src)
    names = dup(src, k)
    return T.pair([T.mark(i, src, names[i * k + j]) for i in range(len(src)) for j in range(k)], src)


def apply_def(defn, arg):
    """``f(arg)`` over the argument's own source context."""
    if defn.mode == STRUCTURAL:
        out = srec(defn, arg)
        if defn.k > 1 and arg.src:
            out = T.comp(out, duplicate_tuple(arg.src, defn.k))
        return T.retag(out, defn.W)
    used = T.free_indices(arg)
    if used:
        raise NotClosed(f"{defn.name}: primitive recursion needs a closed argument")
    closed = T.reindex(arg, lambda i: i, ())
    return T.retag(T.weaken(prec(defn, closed), arg.src), defn.W)


# ------------------------------------------------------------ evaluation

class _Unfold(Exception):
    def __init__(self, index):
        self.index = index


class _Defer(Exception):
    pass


@dataclass
class EvalEnv:
    program: object
    sigs: dict = None
    defs: dict = None

    def __post_init__(self):
        if self.sigs is None:
            self.sigs = T.signatures(self.program)
        if self.defs is None:
            self.defs = {}

    def rec(self, name):
        if name not in self.defs:
            self.defs[name] = from_sfun(self.program.sfuns[name], self.program)
        return self.defs[name]


def make_env(program):
    return EvalEnv(program)


def _expose_head(u, budget):
    """Bring ``u : &`` to a nil, label or marker head using (c1), (c2),
    unit/idempotence of union and (fix) unfolding."""
    while True:
        if isinstance(u, (T.TNil, T.TLabel, T.TMark)):
            return u
        if R.is_union_value(u):
            a, b = (_expose_head(i, budget) for i in u.inner.items)
            if isinstance(a, T.TNil) or a == b:
                return T.retag(b, u.tgt)
            if isinstance(b, T.TNil):
                return T.retag(a, u.tgt)
            for side in (a, b):
                if isinstance(side, T.TMark):
                    return side
            raise MatchFailure("cannot match a union of two branches")
        if isinstance(u, T.TCycle):
            ny = len(u.src)
            b = u.body
            if isinstance(b, T.TMark) and b.index == ny:
                u = T.nil(u.src, u.tgt[0])
                continue
            if ny not in T.free_indices(b):
                u = T.retag(T.reindex(b, lambda i: i, u.src), u.tgt)
                continue
            if R.is_union_value(b):
                x, rest = b.inner.items
                if isinstance(rest, T.TMark) and rest.index == ny:
                    x, rest = rest, x
                if isinstance(x, T.TMark) and x.index == ny and ny not in T.free_indices(rest):
                    u = T.retag(T.reindex(rest, lambda i: i, u.src), u.tgt)
                    continue
            if budget[0] <= 0:
                raise MatchFailure("head exposure gave up unfolding a cycle")
            budget[0] -= 1
            sigma = [T.mark(i, u.src, u.src[i]) for i in range(ny)] + [u]
            u = R.normalize(T.retag(T.substitute(b, sigma, u.src), u.tgt))
            continue
        raise MatchFailure(f"cannot match on a {type(u).__name__} head")


def _bfun_clause_body(env, f, clause, lab=None):
    p = clause.pattern
    raw = clause.body
    if isinstance(p, S.LabelVar):
        raw = _subst_label(raw, p.name, lab)
    if isinstance(p, S.NilPattern):
        return T.infer(raw, (), env.sigs), None
    return T.infer(raw, (p.var,), env.sigs), p.var


def _apply_bfun(env, f, arg, budget):
    head = _expose_head(arg, budget)
    if isinstance(head, T.TMark):
        raise _Unfold(head.index)
    if isinstance(head, T.TNil):
        c = f.nil_clause()
        if c is None:
            raise MatchFailure(f"{f.name}: no clause for {{}}")
        body, _ = _bfun_clause_body(env, f, c)
        return T.weaken(body, arg.src)
    c = f.clause_for(head.label)
    if c is None or isinstance(c.pattern, S.NilPattern):
        raise MatchFailure(f"{f.name}: no clause for label {head.label!r}")
    body, _ = _bfun_clause_body(env, f, c, head.label)
    return T.substitute(body, [T.retag(head.body, ("&",))], arg.src)


def _resolve_call(env, t, state):
    name = t.name
    if name in env.program.sfuns:
        out = apply_def(env.rec(name), t.arg)
        return T.retag(out, t.tgt)
    if name in env.program.bfuns:
        out = _apply_bfun(env, env.program.bfuns[name], t.arg, state["budget"])
        return T.retag(out, t.tgt)
    raise UnknownFunction(f"unknown function {name!r}")


def _walk(env, t, free_n, deferred, state):
    if isinstance(t, T.TCall):
        if T.has_calls(t.arg):
            arg = _walk(env, t.arg, free_n, deferred, state)
            return T.TCall(t.name, arg, src=t.src, tgt=t.tgt)
        try:
            out = _resolve_call(env, t, state)
        except _Unfold as u:
            if u.index < free_n:
                if deferred:
                    return t
                raise MatchFailure(f"{t.name}: argument is a free marker {t.src[u.index]}") from None
            raise
        except NotClosed:
            if deferred or any(i >= free_n for i in T.free_indices(t.arg)):
                return t
            raise
        state["progress"] = True
        return out
    if isinstance(t, T.TCycle):
        ny, nx = len(t.src), len(t.tgt)
        try:
            body = _walk(env, t.body, free_n, deferred, state)
        except _Unfold as u:
            if not ny <= u.index < ny + nx:
                raise
            if state["unfold"] <= 0:
                raise MatchFailure("gave up unfolding a cycle to expose a call argument") from None
            state["unfold"] -= 1
            state["progress"] = True
            sigma = [T.mark(i, t.src, t.src[i]) for i in range(ny)]
            sigma += [T.retag(T.comp(T.projection(t.tgt, [j]), t), ("&",)) for j in range(nx)]
            return T.retag(T.substitute(t.body, sigma, t.src), t.tgt)
        return T.TCycle(body, src=t.src, tgt=t.tgt)
    if isinstance(t, T.TComp):
        inner = _walk(env, t.inner, free_n, deferred, state)
        outer = _walk(env, t.outer, len(t.outer.src), True, state)
        return T.TComp(outer, inner, src=t.src, tgt=t.tgt)
    if isinstance(t, T.TLabel):
        return T.TLabel(t.label, _walk(env, t.body, free_n, deferred, state), src=t.src, tgt=t.tgt)
    if isinstance(t, T.TPair):
        return T.retag(T.pair([_walk(env, i, free_n, deferred, state) for i in t.items], t.src), t.tgt)
    return t


def run(env, t):
    """Resolve every call in a typed term and return its normal form."""
    state = {"unfold": MAX_UNFOLD, "budget": [MAX_UNFOLD]}
    for _ in range(MAX_ROUNDS):
        t = R.normalize(t)
        if not T.has_calls(t):
            return R.normalize(R.simplify(t))
        state["progress"] = False
        t = _walk(env, t, len(t.src), False, state)
        if not state["progress"]:
            raise MatchFailure("evaluation is stuck on calls whose arguments cannot be matched")
    raise MatchFailure("evaluation did not finish within the round limit")


def eval_term(env, expr, source=()):
    """Evaluate a raw expression (or the program's main) to a normal form."""
    if isinstance(env, S.Program):
        env = EvalEnv(env)
    if expr is None:
        expr = env.program.main
        if expr is None:
            raise UserError("nothing to evaluate: no expression and no main")
    if isinstance(expr, str):
        expr = S.parse_term(expr)
    t = T.infer(expr, source, env.sigs)
    return run(env, t)


def eval_program(program, expr=None, source=()):
    return eval_term(EvalEnv(program), expr, source)


# ----------------------------------------------------------------- fusion

def equivalent(s, t):
    """Bisimilarity of two terms with equally long interfaces."""
    return G.terms_bisimilar(s, t)


def _fusion_labels(*defs, alphabet=("a", "b", "c")):
    labs = set(alphabet)
    for d in defs:
        labs |= d.labels()
    labs.add(next_label(labs))
    return sorted(labs)


def check_fusion_hypothesis(e, d, h, alphabet=("a", "b", "c")):
    """Raise HypothesisFailed(l) unless ``h(e'_l) ~ d'_l`` for every label."""
    if e.k != 1:
        raise UserError("fusion needs e with a single result marker")
    for lab in _fusion_labels(e, d, h, alphabet=alphabet):
        lhs = srec(h, e.body(lab))
        if len(lhs.tgt) != d.k:
            raise HypothesisFailed(lab)
        if not equivalent(R.normalize(lhs), d.body(lab)):
            raise HypothesisFailed(lab)


def fusion_check(e, d, h, trials=100, size=6, seed=0, alphabet=("a", "b", "c")):
    """Check ``h . srec(e) = srec(d)`` pointwise on random closed terms.

    The hypothesis is checked first; a violation raises HypothesisFailed.
    """
    from .axioms import random_term
    check_fusion_hypothesis(e, d, h, alphabet)
    rng = random.Random(seed)
    failures = []
    for i in range(trials):
        t = random_term((), ("&",), rng.randint(1, size), rng.randrange(2 ** 32))
        lhs = srec(h, srec(e, t))
        rhs = srec(d, t)
        if not equivalent(lhs, rhs):
            failures.append({"trial": i, "term": T.show(t)})
    return {"hypothesis": "ok", "trials": trials, "failures": failures}


def fused_prec(e, d):
    """A primitive definition g with ``prec(d)(prec(e)(s)) = pi @ prec(g)(s)``.

    g carries three results per subterm t: ``prec(d)(prec(e)(t))``,
    ``prec(e)(t)`` and ``prec(d)(t)``.  Requires k = 1 and call-free bodies.
    """
    if e.mode != PRIMITIVE or d.mode != PRIMITIVE or e.k != 1 or d.k != 1:
        raise ModeMismatch("primitive fusion needs two primitive definitions with k = 1")
    names = ("&a", "&b", "&c")
    src = names + ("&",)

    def body(lab):
        el, dl = e.body(lab), d.body(lab)
        if T.has_calls(el) or T.has_calls(dl):
            raise UserError("primitive fusion needs call-free bodies")
        psi_d = _psi(el, _prim_body(d), 2)
        a = T.comp(prec_projection(el.tgt, 1), psi_d)
        b = T.comp(el, T.projection(src, [1, 3]))
        c = T.comp(dl, T.projection(src, [2, 3]))
        return T.pair([T.retag(a, ("&a",)), T.retag(b, ("&b",)), T.retag(c, ("&c",))], src)

    bodies = {lab: body(lab) for lab in e.labels() | d.labels()}
    return RecDef(f"{d.name}.{e.name}", 3, PRIMITIVE, names, bodies, body)


def apply_fused(g, t):
    """``pi_A @ prec(g)(t)``."""
    out = prec(g, t)
    return T.comp(T.projection(out.tgt, [0], ["&"]), out)


def prec_fusion_check(e, d, trials=100, size=6, seed=0):
    from .axioms import random_term
    g = fused_prec(e, d)
    rng = random.Random(seed)
    failures = []
    for i in range(trials):
        t = random_term((), ("&",), rng.randint(1, size), rng.randrange(2 ** 32))
        lhs = prec(d, R.normalize(prec(e, t)))
        rhs = apply_fused(g, t)
        if not equivalent(lhs, rhs):
            failures.append({"trial": i, "term": T.show(t)})
    return {"trials": trials, "failures": failures}
