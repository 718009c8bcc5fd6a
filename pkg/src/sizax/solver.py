"""Polynomial interpretation synthesis for index-inequality constraints.

Constraints are grouped along the SCC condensation of the symbol
dependency graph and solved bottom-up: each group's unknown symbols get
template polynomials with small unknown coefficients, every constraint's
difference polynomial must have non-negative coefficients (absolute
positiveness), and the search enumerates coefficient vectors smallest
first with interval pruning.  Every accepted interpretation is then
re-verified independently and certificate material is produced.
"""

from __future__ import annotations

import itertools
import random
import time
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .callgraph import strongly_connected
from .errors import SizaxError
from .indexterms import (
    Assignment, IApp, IVar, IndexSymbol, IndexTerm, Interpretation, Leq,
    evaluate, leq_semantic, pretty_index, to_polynomial,
)
from .polynomials import Monomial, Polynomial, mono_degree
from .typecheck import Constraint, ConstraintSet, Origin


@dataclass
class SolverConfig:
    max_degree: int = 2
    coeff_bound: int = 3
    timeout_per_group: float = 20.0
    search_strategy: str = "backtracking"  # or "restart"

    def __post_init__(self):
        if self.max_degree < 1 or self.coeff_bound < 1:
            raise ValueError("max_degree and coeff_bound must be >= 1")

    def ladder(self) -> List[int]:
        steps = [k for k in (1, 3, 7) if k < self.coeff_bound]
        return steps + [self.coeff_bound]


# ---------------------------------------------------------------------------
# Symbolic coefficients (polynomials over coefficient unknowns)


class CoeffExpr:
    """Polynomial in coefficient unknowns; terms map sorted name tuples to ints."""

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Dict[Tuple[str, ...], int]] = None):
        self.terms = {k: v for k, v in (terms or {}).items() if v != 0}

    @staticmethod
    def const(n: int) -> "CoeffExpr":
        return CoeffExpr({(): n} if n else {})

    @staticmethod
    def unknown(name: str) -> "CoeffExpr":
        return CoeffExpr({(name,): 1})

    def __add__(self, other: "CoeffExpr") -> "CoeffExpr":
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return CoeffExpr(out)

    def __sub__(self, other: "CoeffExpr") -> "CoeffExpr":
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) - v
        return CoeffExpr(out)

    def __mul__(self, other: "CoeffExpr") -> "CoeffExpr":
        out: Dict[Tuple[str, ...], int] = {}
        for k1, v1 in self.terms.items():
            for k2, v2 in other.terms.items():
                key = tuple(sorted(k1 + k2))
                out[key] = out.get(key, 0) + v1 * v2
        return CoeffExpr(out)

    def is_const(self) -> bool:
        return all(not k for k in self.terms)

    def evaluate(self, env: Dict[str, int]) -> int:
        total = 0
        for k, v in self.terms.items():
            val = v
            for name in k:
                val *= env[name]
            total += val
        return total

    def bounds(self, env: Dict[str, int], hi: int) -> Tuple[int, int]:
        """(min, max) over unassigned unknowns ranging in [0, hi]."""
        lo_total = hi_total = 0
        for k, v in self.terms.items():
            prod_known = v
            free = 0
            for name in k:
                if name in env:
                    prod_known *= env[name]
                else:
                    free += 1
            if prod_known == 0:
                continue
            span = hi ** free
            if prod_known > 0:
                lo_total += 0 if free else prod_known
                hi_total += prod_known * span
            else:
                lo_total += prod_known * span
                hi_total += 0 if free else prod_known
        return lo_total, hi_total

    def variables(self) -> Set[str]:
        return {n for k in self.terms for n in k}


class SymPoly:
    """Polynomial over index variables with CoeffExpr coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Optional[Dict[Monomial, CoeffExpr]] = None):
        self.coeffs = {m: c for m, c in (coeffs or {}).items() if c.terms}

    @staticmethod
    def const_expr(e: CoeffExpr) -> "SymPoly":
        return SymPoly({(): e})

    @staticmethod
    def of_poly(p: Polynomial) -> "SymPoly":
        return SymPoly({m: CoeffExpr.const(c) for m, c in p.coeffs.items()})

    @staticmethod
    def var(name: str) -> "SymPoly":
        return SymPoly({((name, 1),): CoeffExpr.const(1)})

    def __add__(self, other: "SymPoly") -> "SymPoly":
        out = dict(self.coeffs)
        for m, c in other.coeffs.items():
            out[m] = out[m] + c if m in out else c
        return SymPoly(out)

    def __sub__(self, other: "SymPoly") -> "SymPoly":
        out = dict(self.coeffs)
        for m, c in other.coeffs.items():
            out[m] = out[m] - c if m in out else CoeffExpr.const(0) - c
        return SymPoly(out)

    def __mul__(self, other: "SymPoly") -> "SymPoly":
        from .polynomials import _mono_mul
        out: Dict[Monomial, CoeffExpr] = {}
        for m1, c1 in self.coeffs.items():
            for m2, c2 in other.coeffs.items():
                m = _mono_mul(m1, m2)
                prod = c1 * c2
                out[m] = out[m] + prod if m in out else prod
        return SymPoly(out)


@dataclass
class Template:
    symbol: str
    arity: int
    monomials: List[Monomial]  # over formals x1..xn
    coeff_names: List[str]

    def apply(self, args: Sequence[SymPoly]) -> SymPoly:
        formals = Interpretation.formals(self.arity)
        env = dict(zip(formals, args))
        total = SymPoly()
        for mono, cname in zip(self.monomials, self.coeff_names):
            term = SymPoly.const_expr(CoeffExpr.unknown(cname))
            for v, e in mono:
                for _ in range(e):
                    term = term * env[v]
            total = total + term
        return total

    def to_polynomial(self, env: Dict[str, int]) -> Polynomial:
        coeffs: Dict[Monomial, int] = {}
        for mono, cname in zip(self.monomials, self.coeff_names):
            c = env[cname]
            if c:
                coeffs[mono] = coeffs.get(mono, 0) + c
        return Polynomial(coeffs)


def _template_monomials(arity: int, degree: int) -> List[Monomial]:
    formals = Interpretation.formals(arity)
    out: List[Monomial] = []
    seen = set()
    for d in range(degree + 1):
        for combo in itertools.combinations_with_replacement(formals, d):
            exps: Dict[str, int] = {}
            for v in combo:
                exps[v] = exps.get(v, 0) + 1
            mono = tuple(sorted(exps.items()))
            if mono not in seen:
                seen.add(mono)
                out.append(mono)
    out.sort(key=lambda m: (mono_degree(m), m))
    return out


def _sym_poly_of(term: IndexTerm, solved: Interpretation,
                 templates: Dict[str, Template]) -> SymPoly:
    if isinstance(term, IVar):
        return SymPoly.var(term.name)
    assert isinstance(term, IApp)
    args = [_sym_poly_of(a, solved, templates) for a in term.args]
    sym = term.sym
    if sym.fixed:
        if sym.name == "0":
            return SymPoly()
        if sym.name == "s":
            return args[0] + SymPoly.of_poly(Polynomial.const(1))
        if sym.name == "+":
            return args[0] + args[1]
        if sym.name == "*":
            return args[0] * args[1]
        raise SizaxError(f"unhandled builtin {sym.name}")
    if sym.name in templates:
        return templates[sym.name].apply(args)
    poly = solved.lookup(sym)
    total = SymPoly()
    for mono, c in poly.coeffs.items():
        term_p = SymPoly.of_poly(Polynomial.const(c))
        formals = Interpretation.formals(sym.arity)
        env = dict(zip(formals, args))
        for v, e in mono:
            for _ in range(e):
                term_p = term_p * env[v]
        total = total + term_p
    return total


# ---------------------------------------------------------------------------
# Partitioning


@dataclass
class Group:
    index: int
    symbols: List[str]
    constraints: List[Constraint]


def partition(cs: ConstraintSet) -> List[Group]:
    """Order constraint groups along the SCC condensation of symbol deps.

    Dependencies are seeded from the call graph (a caller's symbols depend
    on its callees') and refined per constraint: symbols on the right-hand
    side depend on symbols on the left.  Each constraint lands in the
    latest group among its symbols; purely ground constraints go first.
    """
    symbols = list(cs.arities)
    deps: Dict[str, Set[str]] = {s: set() for s in symbols}
    by_owner: Dict[str, List[str]] = {}
    for s, fn in cs.owners.items():
        if s in deps:
            by_owner.setdefault(fn, []).append(s)
    for caller, callees in cs.call_edges.items():
        for callee in callees:
            if callee == caller:
                continue
            for u in by_owner.get(caller, ()):
                for v in by_owner.get(callee, ()):
                    deps[u].add(v)
    for c in cs.constraints:
        from .indexterms import unknown_symbols
        lhs_syms = {s.name for s in unknown_symbols(c.lhs)}
        rhs_syms = {s.name for s in unknown_symbols(c.rhs)}
        for u in rhs_syms:
            for v in lhs_syms:
                if u != v:
                    deps[u].add(v)
    comps = strongly_connected(deps)
    position = {}
    for i, comp in enumerate(comps):
        for s in comp:
            position[s] = i
    groups = [Group(i, comp, []) for i, comp in enumerate(comps)]
    ground = Group(-1, [], [])
    for c in cs.constraints:
        syms = {s.name for s in c.unknown_symbols()}
        if not syms:
            ground.constraints.append(c)
        else:
            idx = max(position[s] for s in syms)
            groups[idx].constraints.append(c)
    out = [ground] if ground.constraints else []
    out.extend(groups)
    return out


# ---------------------------------------------------------------------------
# Group solving


@dataclass
class GroupResult:
    group: Group
    status: str  # "sat" | "unsat" | "timeout" | "ground-ok" | "ground-fail"
    degree: int = 0
    coeff_bound: int = 0
    failed: Optional[Constraint] = None


class _Timeout(Exception):
    pass


def solve_group(group: Group, solved: Interpretation, cfg: SolverConfig
                ) -> Tuple[Optional[Interpretation], GroupResult]:
    """Search for polynomials for the group's symbols; smallest sum first.

    Returns the extension (new symbols only) or None with an unsat/timeout
    result.  Foreign symbols must already be in `solved`.
    """
    deadline = time.monotonic() + cfg.timeout_per_group
    if not group.symbols:
        for c in group.constraints:
            if leq_semantic(solved, c.lhs, c.rhs) is not Leq.YES:
                return None, GroupResult(group, "ground-fail", failed=c)
        return Interpretation(), GroupResult(group, "ground-ok")

    arities: Dict[str, int] = {}
    for c in group.constraints:
        for s in c.unknown_symbols():
            if s.name in group.symbols:
                arities[s.name] = s.arity
    for s in group.symbols:
        arities.setdefault(s, 0)

    last_failed: Optional[Constraint] = None
    for degree in range(1, cfg.max_degree + 1):
        for bound in cfg.ladder():
            try:
                env = _attempt(group, solved, arities, degree, bound, deadline)
            except _Timeout:
                return None, GroupResult(group, "timeout", degree, bound)
            if env is not None:
                ext = Interpretation()
                templates = _make_templates(group.symbols, arities, degree)
                for name in group.symbols:
                    t = templates[name]
                    ext.define(IndexSymbol(name, t.arity), t.to_polynomial(env))
                return ext, GroupResult(group, "sat", degree, bound)
    return None, GroupResult(group, "unsat", cfg.max_degree,
                             cfg.ladder()[-1], failed=last_failed)


def _make_templates(symbols: Sequence[str], arities: Dict[str, int],
                    degree: int) -> Dict[str, Template]:
    templates: Dict[str, Template] = {}
    for name in symbols:
        monos = _template_monomials(arities[name], degree)
        coeff_names = [f"{name}#{i}" for i in range(len(monos))]
        templates[name] = Template(name, arities[name], monos, coeff_names)
    return templates


_EXHAUSTIVE_LIMIT = 16


def _attempt(group: Group, solved: Interpretation, arities: Dict[str, int],
             degree: int, bound: int, deadline: float) -> Optional[Dict[str, int]]:
    templates = _make_templates(group.symbols, arities, degree)
    exprs: List[CoeffExpr] = []
    for c in group.constraints:
        diff = _sym_poly_of(c.rhs, solved, templates) - \
            _sym_poly_of(c.lhs, solved, templates)
        exprs.extend(diff.coeffs.values())
    variables: List[str] = []
    for name in group.symbols:
        variables.extend(templates[name].coeff_names)

    used = set()
    for e in exprs:
        used |= e.variables()
    active = [v for v in variables if v in used]
    inactive = [v for v in variables if v not in used]

    def feasible(env: Dict[str, int]) -> bool:
        for e in exprs:
            _, hi = e.bounds(env, bound)
            if hi < 0:
                return False
        return True

    def satisfied(env: Dict[str, int]) -> bool:
        return all(e.evaluate(env) >= 0 for e in exprs)

    checked = [0]

    def tick() -> None:
        checked[0] += 1
        if checked[0] % 512 == 0 and time.monotonic() > deadline:
            raise _Timeout()

    n = len(active)
    if n <= _EXHAUSTIVE_LIMIT:
        # Smallest total coefficient sum first, then lexicographic.
        for total in range(0, n * bound + 1):
            found = _dfs_sum(active, 0, total, {}, bound, feasible, satisfied, tick)
            if found is not None:
                for v in inactive:
                    found[v] = 0
                return found
        return None
    found = _dfs_plain(active, 0, {}, bound, feasible, satisfied, tick)
    if found is not None:
        for v in inactive:
            found[v] = 0
    return found


def _dfs_sum(variables, i, budget, env, bound, feasible, satisfied, tick):
    tick()
    if i == len(variables):
        if budget == 0 and satisfied(env):
            return dict(env)
        return None
    remaining_capacity = (len(variables) - i - 1) * bound
    for val in range(0, min(bound, budget) + 1):
        if budget - val > remaining_capacity:
            continue
        env[variables[i]] = val
        if feasible(env):
            out = _dfs_sum(variables, i + 1, budget - val, env, bound,
                           feasible, satisfied, tick)
            if out is not None:
                return out
        del env[variables[i]]
    return None


def _dfs_plain(variables, i, env, bound, feasible, satisfied, tick):
    tick()
    if i == len(variables):
        return dict(env) if satisfied(env) else None
    for val in range(0, bound + 1):
        env[variables[i]] = val
        if feasible(env):
            out = _dfs_plain(variables, i + 1, env, bound, feasible, satisfied, tick)
            if out is not None:
                return out
        del env[variables[i]]
    return None


# ---------------------------------------------------------------------------
# Whole-set solving


@dataclass
class SolveResult:
    status: str  # "sat" | "unsat" | "timeout"
    interpretation: Interpretation
    group_results: List[GroupResult] = field(default_factory=list)
    failed_group: Optional[Group] = None

    def group_order(self) -> List[List[str]]:
        return [g.group.symbols for g in self.group_results if g.group.symbols]


def solve(cs: ConstraintSet, cfg: Optional[SolverConfig] = None,
          joint: bool = False) -> SolveResult:
    """Solve all groups bottom-up; `joint` merges everything into one group."""
    cfg = cfg or SolverConfig()
    groups = partition(cs)
    if joint:
        merged = Group(0, sorted(cs.arities, key=list(cs.arities).index), [])
        ground = Group(-1, [], [])
        for g in groups:
            for c in g.constraints:
                (ground if not c.unknown_symbols() else merged).constraints.append(c)
        groups = ([ground] if ground.constraints else []) + [merged]
    solved = Interpretation()
    results: List[GroupResult] = []
    for g in groups:
        ext, res = solve_group(g, solved, cfg)
        results.append(res)
        if ext is None:
            status = "timeout" if res.status == "timeout" else "unsat"
            return SolveResult(status, solved, results, failed_group=g)
        solved = solved.merged_with(ext)
    # Unconstrained symbols (mentioned nowhere) default to zero.
    for name, arity in cs.arities.items():
        if name not in solved:
            solved.define(IndexSymbol(name, arity), Polynomial.const(0))
    return SolveResult("sat", solved, results)


def ensure_all_symbols(result: SolveResult, decls_symbols: Dict[str, List[str]],
                       symbol_arities: Dict[str, int]) -> None:
    """Give zero interpretations to template symbols absent from constraints."""
    for syms in decls_symbols.values():
        for name in syms:
            if name not in result.interpretation:
                arity = symbol_arities.get(name, 0)
                result.interpretation.define(IndexSymbol(name, arity),
                                             Polynomial.const(0))


# ---------------------------------------------------------------------------
# Verification and certificates


@dataclass
class CertificateEntry:
    constraint: Constraint
    difference: Polynomial
    slack: int  # constant coefficient of the difference
    samples: int

    def pretty(self) -> str:
        return (f"{pretty_index(self.constraint.lhs)} <= "
                f"{pretty_index(self.constraint.rhs)}  "
                f"[difference {self.difference.pretty()}; slack {self.slack}]")


@dataclass
class Certificate:
    entries: List[CertificateEntry] = field(default_factory=list)

    def pretty(self) -> str:
        return "\n".join(e.pretty() for e in self.entries)


@dataclass
class CounterExample:
    constraint: Constraint
    assignment: Assignment
    lhs_value: int
    rhs_value: int

    def pretty(self) -> str:
        env = ", ".join(f"{k}={v}" for k, v in sorted(self.assignment.env.items()))
        return (f"constraint {pretty_index(self.constraint.lhs)} <= "
                f"{pretty_index(self.constraint.rhs)} fails at [{env}]: "
                f"{self.lhs_value} > {self.rhs_value}")


def verify(interp: Interpretation, constraints: Iterable[Constraint],
           samples: int = 1000, seed: int = 7, sample_bound: int = 10
           ) -> Tuple[Optional[Certificate], Optional[CounterExample]]:
    """Independently re-check constraints: coefficient-wise plus sampling.

    The sampling route goes through the recursive evaluator rather than
    polynomial composition, so the two checks do not share a code path.
    """
    rng = random.Random(seed)
    cert = Certificate()
    for c in constraints:
        diff = to_polynomial(c.rhs, interp) - to_polynomial(c.lhs, interp)
        names = sorted(c.lhs.free_vars() | c.rhs.free_vars())
        if not diff.all_coeffs_nonneg():
            for _ in range(samples):
                alpha = Assignment({n: rng.randint(0, sample_bound) for n in names})
                lv = evaluate(c.lhs, interp, alpha)
                rv = evaluate(c.rhs, interp, alpha)
                if lv > rv:
                    return None, CounterExample(c, alpha, lv, rv)
            return None, CounterExample(c, Assignment({}), 0, 0)
        for _ in range(samples):
            alpha = Assignment({n: rng.randint(0, sample_bound) for n in names})
            lv = evaluate(c.lhs, interp, alpha)
            rv = evaluate(c.rhs, interp, alpha)
            if lv > rv:  # pragma: no cover - would indicate an internal bug
                return None, CounterExample(c, alpha, lv, rv)
        cert.entries.append(CertificateEntry(c, diff, diff.constant_term(), samples))
    return cert, None


# ---------------------------------------------------------------------------
# Constraint file format


def parse_constraint_file(text: str) -> ConstraintSet:
    """Read the exported `lhs <= rhs ; origin` format back in."""
    from .parser import TokenStream, tokenize, parse_index_expr
    cs = ConstraintSet()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("--"):
            continue
        body, _, origin_text = line.partition(";")
        if "<=" not in body:
            raise SizaxError(f"line {lineno}: expected `lhs <= rhs`")
        lhs_text, _, rhs_text = body.partition("<=")
        lhs = parse_index_expr(TokenStream(tokenize(lhs_text.strip())))
        rhs = parse_index_expr(TokenStream(tokenize(rhs_text.strip())))
        origin = Origin(origin_text.strip() or "<file>", 0, "file")
        cs.add(Constraint(lhs, rhs, origin))
    return cs
