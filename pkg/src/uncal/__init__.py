"""UnCAL graph terms: typing, graph semantics and bisimilarity, rewriting to
normal forms, structural and primitive recursion, axiom checking and a lazy
lambda calculus."""

from .errors import InternalError, UncalError, UserError
from .graph import bisimilar, interpret, terms_bisimilar
from .recursion import eval_program, eval_term
from .rewrite import normalize
from .syntax import parse_program, parse_term, print_term
from .typing import infer, judgment, show

__all__ = [
    "InternalError", "UncalError", "UserError",
    "bisimilar", "interpret", "terms_bisimilar",
    "eval_program", "eval_term", "normalize",
    "parse_program", "parse_term", "print_term",
    "infer", "judgment", "show",
]
