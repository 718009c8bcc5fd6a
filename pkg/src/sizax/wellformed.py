"""Program well-formedness: lhs linearity, rhs variable coverage,
fully-applied pattern constructors, and pairwise non-overlap of
left-hand sides (checked by first-order pattern unification).
"""

from __future__ import annotations

from typing import Dict, List, Optional, Tuple

from .errors import Diagnostic
from .lang import (
    PAIR_NAME, PCon, PVar, Pattern, Program, pattern_vars, term_vars,
)


def _rename(p: Pattern, suffix: str) -> Pattern:
    if isinstance(p, PVar):
        return PVar(p.name + suffix, loc=p.loc)
    return PCon(p.con, tuple(_rename(a, suffix) for a in p.args), loc=p.loc)


def unify_patterns(pairs: List[Tuple[Pattern, Pattern]]) -> Optional[Dict[str, Pattern]]:
    """First-order unification on patterns; None when they do not unify.

    Patterns are linear, so no occurs check is needed beyond substitution
    into already-bound variables.
    """
    subst: Dict[str, Pattern] = {}

    def walk(p: Pattern) -> Pattern:
        while isinstance(p, PVar) and p.name in subst:
            p = subst[p.name]
        return p

    work = list(pairs)
    while work:
        a, b = work.pop()
        a, b = walk(a), walk(b)
        if isinstance(a, PVar):
            if not (isinstance(b, PVar) and b.name == a.name):
                subst[a.name] = b
            continue
        if isinstance(b, PVar):
            subst[b.name] = a
            continue
        assert isinstance(a, PCon) and isinstance(b, PCon)
        if a.con != b.con or len(a.args) != len(b.args):
            return None
        work.extend(zip(a.args, b.args))
    return subst


def check_wellformed(program: Program) -> List[Diagnostic]:
    """Every violation is reported; an empty list means the program is OK."""
    out: List[Diagnostic] = []
    for fname, f in program.functions.items():
        arities = {len(eq.lhs) for eq in f.equations}
        if len(arities) > 1:
            out.append(Diagnostic("ArityMismatch",
                                  f"{fname}: equations disagree on the number of patterns",
                                  f.loc))
        for eq in f.equations:
            vs = []
            for p in eq.lhs:
                vs.extend(pattern_vars(p))
            dupes = sorted({v for v in vs if vs.count(v) > 1})
            if dupes:
                out.append(Diagnostic(
                    "NonLinearLhs",
                    f"{fname}: variable(s) {', '.join(dupes)} occur more than once "
                    "on a left-hand side", eq.loc))
            missing = [v for v in term_vars(eq.rhs) if v not in vs]
            if missing:
                out.append(Diagnostic(
                    "UnboundRhsVar",
                    f"{fname}: right-hand side uses {', '.join(missing)} "
                    "not bound on the left", eq.loc))
            for p in eq.lhs:
                out.extend(_check_pattern_arity(program, fname, p))
        eqs = f.equations
        for i in range(len(eqs)):
            for j in range(i + 1, len(eqs)):
                if len(eqs[i].lhs) != len(eqs[j].lhs):
                    continue
                left = [_rename(p, "#l") for p in eqs[i].lhs]
                right = [_rename(p, "#r") for p in eqs[j].lhs]
                if unify_patterns(list(zip(left, right))) is not None:
                    out.append(Diagnostic(
                        "OverlappingLhs",
                        f"{fname}: equations {i + 1} and {j + 1} have overlapping "
                        "left-hand sides", eqs[j].loc))
    return out


def _check_pattern_arity(program: Program, fname: str, p: Pattern) -> List[Diagnostic]:
    out: List[Diagnostic] = []
    if isinstance(p, PCon):
        expected = 2 if p.con == PAIR_NAME else None
        if expected is None:
            decl = program.constructor_decl(p.con)
            expected = decl.arity if decl else None
        if expected is not None and len(p.args) != expected:
            out.append(Diagnostic(
                "PartialPatternCon",
                f"{fname}: constructor {p.con} must be fully applied in patterns",
                p.loc))
        for a in p.args:
            out.extend(_check_pattern_arity(program, fname, a))
    return out
