"""Command-line front end.

Exit codes: 0 success, 1 negative decision (not bisimilar, an axiom
instance failed), 2 user error (parse, typing, pattern failure), 3 broken
internal invariant.
"""

import argparse
import json
import sys
from pathlib import Path

from . import axioms as A
from . import graph as G
from . import lambdag as L
from . import recursion as REC
from . import rewrite as R
from . import syntax as S
from . import typing as T
from .errors import InternalError, UserError

EXIT_OK, EXIT_NEGATIVE, EXIT_USER, EXIT_INTERNAL = 0, 1, 2, 3


def _source(arg):
    if not arg:
        return ()
    return tuple(S.marker(n.strip()) for n in arg.split(",") if n.strip())


def _program(path):
    if path is None:
        return S.Program({}, {}, None)
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise UserError(f"cannot read {path}: {e.strerror}") from None
    return S.parse_program(text)


def _term(args, expr):
    """Typecheck an expression, resolving calls against ``--program``."""
    prog = _program(getattr(args, "program", None))
    raw = S.parse_term(expr)
    t = T.infer(raw, _source(args.source), prog)
    if T.has_calls(t):
        t = REC.run(REC.EvalEnv(prog), t)
    return t


def _display(t):
    """N-form for a single root, M-form otherwise."""
    if len(t.tgt) == 1:
        return R.eta_man_expand(t)
    return t


def _emit(args, text, data):
    if args.json:
        print(json.dumps(data, sort_keys=True))
    else:
        print(text)


def cmd_check(args):
    prog = _program(args.file)
    sigs = T.signatures(prog)
    rows = []
    for name, f in list(prog.sfuns.items()) + list(prog.bfuns.items()):
        mode = ""
        if f.kind == "sfun":
            mode = REC.detect_mode(f)
        rows.append({"function": name, "kind": f.kind, "mode": mode,
                     "results": T.fmt_ctx(sigs[name])})
    main = None
    if prog.main is not None:
        main = T.judgment(T.infer(prog.main, _source(args.source), sigs))
    lines = [f"{r['kind']} {r['function']} : {r['results']}" + (f"  ({r['mode']})" if r["mode"] else "")
             for r in rows]
    if main is not None:
        lines.append(f"main : {main}")
    _emit(args, "\n".join(lines), {"functions": rows, "main": main})
    return EXIT_OK


def cmd_eval(args):
    prog = _program(args.file)
    t = REC.eval_program(prog, args.expr, _source(args.source))
    out = _display(t)
    _emit(args, T.show(out), {"term": T.show(out), "judgment": T.judgment(out)})
    return EXIT_OK


def cmd_bisim(args):
    if len(args.expr) != 2:
        raise UserError("bisim needs exactly two -e expressions")
    s, t = (_term(args, e) for e in args.expr)
    ok, _ = G.bisimilar(G.interpret(s), G.interpret(t))
    _emit(args, "bisimilar" if ok else "not bisimilar", {"bisimilar": ok})
    return EXIT_OK if ok else EXIT_NEGATIVE


def cmd_nf(args):
    t = R.normalize(_term(args, args.expr), strategy=args.strategy)
    out = _display(t)
    _emit(args, T.show(out), {"term": T.show(out), "judgment": T.judgment(out),
                              "M": R.is_M(t), "N": len(t.tgt) == 1 and R.is_N(out)})
    return EXIT_OK


def cmd_mu(args):
    n = R.nf_N(_term(args, args.expr))
    m = R.to_mu(n)
    _emit(args, R.print_mu(m), {"mu": R.print_mu(m)})
    return EXIT_OK


def cmd_graph(args):
    g = G.interpret(_term(args, args.expr))
    if args.eliminate:
        g = G.eliminate_epsilon(g)
    text = G.to_json(g) if args.json else G.to_dot(g)
    if args.dot:
        Path(args.dot).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    return EXIT_OK


def cmd_lambda(args):
    t = _term(args, args.expr)
    lt = L.translate(t)
    _emit(args, L.show(lt), {"term": L.show(lt), "type": str(L.type_of(lt))})
    return EXIT_OK


def cmd_traces(args):
    g = G.interpret(_term(args, args.expr))
    words = sorted(G.traces(g, args.depth), key=lambda w: (len(w), w))
    shown = [G.format_trace(w) for w in words]
    _emit(args, "\n".join(s if s else "(empty)" for s in shown), {"traces": [list(w) for w in words]})
    return EXIT_OK


def cmd_axioms(args):
    names = [args.schema] if args.schema else A.AXG + A.DERIVED
    reports = [A.check_soundness(n, args.trials, args.size, args.seed) for n in names]
    print(json.dumps(reports if len(reports) > 1 else reports[0], indent=2))
    return EXIT_NEGATIVE if any(r["failures"] for r in reports) else EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="uncal", description="UnCAL graph terms: typing, "
                                "bisimilarity, normal forms, recursion and a lazy lambda calculus.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, expr=True, program=True):
        if expr:
            sp.add_argument("-e", "--expr", required=True, help="term to process")
        if program:
            sp.add_argument("--program", help="file whose functions calls may use")
        sp.add_argument("--source", help="comma-separated free markers, e.g. y1,y2")
        sp.add_argument("--json", action="store_true", help="machine-readable output")

    sp = sub.add_parser("check", help="typecheck a program and print judgments")
    sp.add_argument("file")
    common(sp, expr=False, program=False)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("eval", help="evaluate main or an expression of a program")
    sp.add_argument("file")
    sp.add_argument("-e", "--expr", help="expression to evaluate instead of main")
    common(sp, expr=False, program=False)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("bisim", help="decide bisimilarity of two terms (exit 1 if not)")
    sp.add_argument("-e", "--expr", action="append", required=True)
    sp.add_argument("--program")
    sp.add_argument("--source")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_bisim)

    sp = sub.add_parser("nf", help="normal form")
    common(sp)
    sp.add_argument("--strategy", default="fast", choices=["fast", "left", "right", "outer"])
    sp.set_defaults(func=cmd_nf)

    sp = sub.add_parser("mu", help="mu-term of a single-root term")
    common(sp)
    sp.set_defaults(func=cmd_mu)

    sp = sub.add_parser("graph", help="graph in DOT (or JSON with --json)")
    common(sp)
    sp.add_argument("--dot", metavar="OUT", help="write to this file instead of stdout")
    sp.add_argument("--eliminate", action="store_true", help="remove epsilon edges first")
    sp.set_defaults(func=cmd_graph)

    sp = sub.add_parser("lambda", help="translation into the lambda calculus")
    common(sp)
    sp.set_defaults(func=cmd_lambda)

    sp = sub.add_parser("traces", help="label strings up to a depth")
    common(sp)
    sp.add_argument("--depth", type=int, default=4)
    sp.set_defaults(func=cmd_traces)

    sp = sub.add_parser("axioms", help="randomised soundness check of axiom schemas")
    sp.add_argument("--schema", choices=sorted(A.SCHEMAS))
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--size", type=int, default=6)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_axioms)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USER if e.code else EXIT_OK
    try:
        return args.func(args)
    except UserError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USER
    except (InternalError, RecursionError) as e:
        print(f"internal error: {e}", file=sys.stderr)
        return EXIT_INTERNAL


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
