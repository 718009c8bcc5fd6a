"""The abstract size-index language.

Index terms are built from index variables and applications of index
symbols.  Four symbols have a fixed meaning (zero, successor, addition,
multiplication); all others are unknowns that a solver must map to
weakly monotone functions, represented here as polynomials with
non-negative integer coefficients.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass
from typing import Dict, Iterator, Mapping, Optional, Tuple

from .errors import UnboundSymbol
from .polynomials import Polynomial


@dataclass(frozen=True)
class IndexSymbol:
    name: str
    arity: int
    fixed: bool = False  # fixed interpretation (builtin)

    def __str__(self) -> str:
        return self.name


ZERO = IndexSymbol("0", 0, fixed=True)
SUCC = IndexSymbol("s", 1, fixed=True)
PLUS = IndexSymbol("+", 2, fixed=True)
MUL = IndexSymbol("*", 2, fixed=True)

BUILTINS = {s.name: s for s in (ZERO, SUCC, PLUS, MUL)}


class IndexTerm:
    __slots__ = ()

    def free_vars(self) -> set:
        out: set = set()
        _collect_vars(self, out)
        return out


@dataclass(frozen=True)
class IVar(IndexTerm):
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class IApp(IndexTerm):
    sym: IndexSymbol
    args: Tuple[IndexTerm, ...] = ()

    def __post_init__(self):
        assert len(self.args) == self.sym.arity, (self.sym, self.args)

    def __str__(self) -> str:
        return pretty_index(self)


def _collect_vars(t: IndexTerm, out: set) -> None:
    if isinstance(t, IVar):
        out.add(t.name)
    else:
        assert isinstance(t, IApp)
        for a in t.args:
            _collect_vars(a, out)


def unknown_symbols(t: IndexTerm) -> set:
    """All non-fixed symbols occurring in t."""
    out: set = set()

    def go(u: IndexTerm) -> None:
        if isinstance(u, IApp):
            if not u.sym.fixed:
                out.add(u.sym)
            for a in u.args:
                go(a)

    go(t)
    return out


# Convenient constructors

def izero() -> IndexTerm:
    return IApp(ZERO)


def isucc(t: IndexTerm) -> IndexTerm:
    return IApp(SUCC, (t,))


def iplus(a: IndexTerm, b: IndexTerm) -> IndexTerm:
    return IApp(PLUS, (a, b))


def imul(a: IndexTerm, b: IndexTerm) -> IndexTerm:
    return IApp(MUL, (a, b))


def inat(n: int) -> IndexTerm:
    t: IndexTerm = izero()
    for _ in range(n):
        t = isucc(t)
    return t


def isum(terms) -> IndexTerm:
    terms = list(terms)
    if not terms:
        return izero()
    out = terms[0]
    for t in terms[1:]:
        out = iplus(out, t)
    return out


# Substitution

IndexSubstitution = Mapping[str, IndexTerm]


def substitute(t: IndexTerm, theta: IndexSubstitution) -> IndexTerm:
    """Homomorphic replacement of variables; others unchanged."""
    if isinstance(t, IVar):
        return theta.get(t.name, t)
    assert isinstance(t, IApp)
    return IApp(t.sym, tuple(substitute(a, theta) for a in t.args))


# Assignments and interpretations

class Assignment:
    """Total map from index variables to naturals (finite map + default)."""

    def __init__(self, env: Optional[Mapping[str, int]] = None, default: int = 0):
        self.env = dict(env or {})
        self.default = default

    def __getitem__(self, name: str) -> int:
        return self.env.get(name, self.default)

    def __repr__(self) -> str:
        items = ", ".join(f"{k}={v}" for k, v in sorted(self.env.items()))
        return f"Assignment({items}; default={self.default})"


class Interpretation:
    """Maps unknown index symbols to polynomials over their formal args.

    Formal argument i of a k-ary symbol is the polynomial variable "x{i+1}".
    All stored polynomials must have non-negative coefficients, which keeps
    every interpreted symbol weakly monotone.
    """

    def __init__(self):
        self._polys: Dict[str, Tuple[int, Polynomial]] = {}

    @staticmethod
    def formals(arity: int) -> Tuple[str, ...]:
        return tuple(f"x{i + 1}" for i in range(arity))

    def define(self, sym: IndexSymbol, poly: Polynomial) -> None:
        if not poly.all_coeffs_nonneg():
            raise ValueError(f"negative coefficient in interpretation of {sym.name}")
        bad = poly.variables() - set(self.formals(sym.arity))
        if bad:
            raise ValueError(f"interpretation of {sym.name} uses non-formals {bad}")
        self._polys[sym.name] = (sym.arity, poly)

    def lookup(self, sym: IndexSymbol) -> Polynomial:
        if sym.name not in self._polys:
            raise UnboundSymbol(f"no interpretation for index symbol {sym.name}/{sym.arity}")
        arity, poly = self._polys[sym.name]
        if arity != sym.arity:
            raise UnboundSymbol(f"arity mismatch for {sym.name}: {arity} vs {sym.arity}")
        return poly

    def __contains__(self, name: str) -> bool:
        return name in self._polys

    def items(self):
        return self._polys.items()

    def copy(self) -> "Interpretation":
        out = Interpretation()
        out._polys = dict(self._polys)
        return out

    def merged_with(self, other: "Interpretation") -> "Interpretation":
        out = self.copy()
        out._polys.update(other._polys)
        return out

    def pretty(self) -> str:
        lines = []
        for name in sorted(self._polys):
            arity, poly = self._polys[name]
            args = ",".join(self.formals(arity))
            lines.append(f"{name}({args}) = {poly.pretty()}" if arity else f"{name} = {poly.pretty()}")
        return "\n".join(lines)


def evaluate(t: IndexTerm, interp: Interpretation, alpha: Assignment) -> int:
    """Evaluate an index term to a natural under interpretation + assignment."""
    if isinstance(t, IVar):
        return alpha[t.name]
    assert isinstance(t, IApp)
    args = [evaluate(a, interp, alpha) for a in t.args]
    sym = t.sym
    if sym.fixed:
        if sym is ZERO or sym.name == "0":
            return 0
        if sym is SUCC or sym.name == "s":
            return args[0] + 1
        if sym is PLUS or sym.name == "+":
            return args[0] + args[1]
        if sym is MUL or sym.name == "*":
            return args[0] * args[1]
        raise UnboundSymbol(f"unhandled builtin {sym.name}")
    poly = interp.lookup(sym)
    env = dict(zip(Interpretation.formals(sym.arity), args))
    return poly.evaluate(env)


def to_polynomial(t: IndexTerm, interp: Interpretation) -> Polynomial:
    """Compose the interpretation into t, yielding a polynomial over t's variables."""
    if isinstance(t, IVar):
        return Polynomial.var(t.name)
    assert isinstance(t, IApp)
    args = [to_polynomial(a, interp) for a in t.args]
    sym = t.sym
    if sym.fixed:
        if sym.name == "0":
            return Polynomial.const(0)
        if sym.name == "s":
            return args[0] + Polynomial.const(1)
        if sym.name == "+":
            return args[0] + args[1]
        if sym.name == "*":
            return args[0] * args[1]
        raise UnboundSymbol(f"unhandled builtin {sym.name}")
    poly = interp.lookup(sym)
    mapping = dict(zip(Interpretation.formals(sym.arity), args))
    return poly.compose(mapping)


class Leq(enum.Enum):
    YES = "yes"
    UNKNOWN = "unknown"


def leq_semantic(interp: Interpretation, s: IndexTerm, t: IndexTerm) -> Leq:
    """Sound pointwise comparison: Yes iff (t - s) has no negative coefficient.

    This is the absolute-positiveness criterion: sufficient for s <= t over
    all natural assignments, not necessary.
    """
    diff = to_polynomial(t, interp) - to_polynomial(s, interp)
    return Leq.YES if diff.all_coeffs_nonneg() else Leq.UNKNOWN


def refute(
    interp: Interpretation,
    s: IndexTerm,
    t: IndexTerm,
    samples: int = 200,
    bound: int = 8,
    rng: Optional[random.Random] = None,
) -> Optional[Assignment]:
    """Search random assignments for a witness of NOT (s <= t)."""
    rng = rng or random.Random(0)
    names = sorted(s.free_vars() | t.free_vars())
    for _ in range(samples):
        alpha = Assignment({n: rng.randint(0, bound) for n in names})
        if evaluate(s, interp, alpha) > evaluate(t, interp, alpha):
            return alpha
    return None


def poly_to_index(poly: Polynomial) -> IndexTerm:
    """Render a non-negative polynomial back as an index term (for display)."""
    if not poly.all_coeffs_nonneg():
        raise ValueError("cannot render polynomial with negative coefficients")
    parts = []
    for mono, coef in poly.monomials_sorted():
        factors: list = []
        for v, e in mono:
            factors.extend([IVar(v)] * e)
        if not factors:
            parts.append(inat(coef))
            continue
        term = factors[0]
        for f in factors[1:]:
            term = imul(term, f)
        if coef != 1:
            term = imul(inat(coef), term)
        parts.append(term)
    if not parts:
        return izero()
    out = parts[0]
    for p in parts[1:]:
        out = iplus(out, p)
    return out


def _numeral_of(t: IndexTerm) -> Optional[int]:
    n = 0
    while isinstance(t, IApp) and t.sym.name == "s":
        n += 1
        t = t.args[0]
    if isinstance(t, IApp) and t.sym.name == "0":
        return n
    return None


def pretty_index(t: IndexTerm, prec: int = 0) -> str:
    """Readable rendering: numerals collapsed, + and * infix."""
    if isinstance(t, IVar):
        return t.name
    assert isinstance(t, IApp)
    n = _numeral_of(t)
    if n is not None:
        return str(n)
    sym = t.sym
    if sym.name == "s":
        # s^k(core) with non-numeral core renders as core + k
        k = 0
        core = t
        while isinstance(core, IApp) and core.sym.name == "s":
            k += 1
            core = core.args[0]
        inner = f"{pretty_index(core, 1)} + {k}"
        return f"({inner})" if prec > 0 else inner
    if sym.name == "+":
        inner = f"{pretty_index(t.args[0], 1)} + {pretty_index(t.args[1], 0)}"
        return f"({inner})" if prec > 0 else inner
    if sym.name == "*":
        inner = f"{pretty_index(t.args[0], 2)}*{pretty_index(t.args[1], 1)}"
        return f"({inner})" if prec > 1 else inner
    if not t.args:
        return sym.name
    return f"{sym.name}({','.join(pretty_index(a, 0) for a in t.args)})"


class NameSupply:
    """Deterministic fresh-name generator."""

    def __init__(self, prefix: str = "v"):
        self.prefix = prefix
        self.count = 0

    def fresh(self, base: str = "") -> str:
        self.count += 1
        stem = base or self.prefix
        return f"{stem}_{self.count}"

    def fresh_var(self, base: str = "i") -> IVar:
        return IVar(self.fresh(base))
