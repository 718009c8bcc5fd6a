"""Core language: simple types, terms, patterns, equations, programs.

Programs are equational and applicative.  Constructors start upper-case,
functions and variables lower-case.  The builtin datatypes (Nat, List,
Unit) have polymorphic constructors that are monomorphized per use site;
user datatypes are monomorphic.  Binary products are structural, built
with the Pair constructor.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

from .errors import SrcLoc


# ---------------------------------------------------------------------------
# Simple types


class SimpleType:
    __slots__ = ()

    def __str__(self) -> str:
        return pretty_simple(self)


@dataclass(frozen=True)
class TVar(SimpleType):
    """Rigid, opaque type variable (file-scoped atom)."""
    name: str


@dataclass(frozen=True)
class TData(SimpleType):
    """A datatype, possibly applied to element types (List a, Nat, Bool)."""
    name: str
    args: Tuple[SimpleType, ...] = ()


@dataclass(frozen=True)
class TProd(SimpleType):
    fst: SimpleType
    snd: SimpleType


@dataclass(frozen=True)
class TArrow(SimpleType):
    dom: SimpleType
    cod: SimpleType


@dataclass(frozen=True)
class TMeta(SimpleType):
    """Unification variable used only during simple type checking."""
    ident: int


def arrow_chain(ty: SimpleType) -> Tuple[List[SimpleType], SimpleType]:
    """Split T1 -> ... -> Tn -> R into ([T1..Tn], R)."""
    doms: List[SimpleType] = []
    while isinstance(ty, TArrow):
        doms.append(ty.dom)
        ty = ty.cod
    return doms, ty


def make_arrow(doms: List[SimpleType], result: SimpleType) -> SimpleType:
    ty = result
    for d in reversed(doms):
        ty = TArrow(d, ty)
    return ty


def is_first_order_data(ty: SimpleType) -> bool:
    """A datatype whose element types contain no functions."""
    if isinstance(ty, TData):
        return all(is_first_order_data(a) or isinstance(a, TVar) or _fo_prod(a) for a in ty.args)
    return False


def _fo_prod(ty: SimpleType) -> bool:
    if isinstance(ty, TProd):
        return all(
            isinstance(c, TVar) or is_first_order_data(c) or _fo_prod(c)
            for c in (ty.fst, ty.snd)
        )
    return False


def pretty_simple(ty: SimpleType, prec: int = 0) -> str:
    if isinstance(ty, TVar):
        return ty.name
    if isinstance(ty, TMeta):
        return f"?{ty.ident}"
    if isinstance(ty, TData):
        if not ty.args:
            return ty.name
        inner = ty.name + " " + " ".join(pretty_simple(a, 2) for a in ty.args)
        return f"({inner})" if prec >= 2 else inner
    if isinstance(ty, TProd):
        return f"({pretty_simple(ty.fst)}, {pretty_simple(ty.snd)})"
    assert isinstance(ty, TArrow)
    inner = f"{pretty_simple(ty.dom, 1)} -> {pretty_simple(ty.cod, 0)}"
    return f"({inner})" if prec >= 1 else inner


# ---------------------------------------------------------------------------
# Symbols

VARIABLE = "variable"
FUNCTION = "function"
CONSTRUCTOR = "constructor"


@dataclass(frozen=True)
class Symbol:
    name: str
    kind: str
    simple_type: SimpleType
    arity: int = 0

    def __str__(self) -> str:
        return self.name


# ---------------------------------------------------------------------------
# Terms and patterns


class Term:
    __slots__ = ()

    def __str__(self) -> str:
        return pretty_term(self)


@dataclass(frozen=True)
class Var(Term):
    name: str
    ty: Optional[SimpleType] = None
    loc: Optional[SrcLoc] = None


@dataclass(frozen=True)
class Fun(Term):
    name: str
    ty: Optional[SimpleType] = None
    loc: Optional[SrcLoc] = None


@dataclass(frozen=True)
class Con(Term):
    """Constructor occurrence; ty records the monomorphic instance type."""
    name: str
    ty: Optional[SimpleType] = None
    loc: Optional[SrcLoc] = None


@dataclass(frozen=True)
class App(Term):
    fn: Term
    arg: Term
    ty: Optional[SimpleType] = None
    loc: Optional[SrcLoc] = None


@dataclass(frozen=True)
class Lam(Term):
    """Source-level lambda; removed by lifting before type checking."""
    params: Tuple[str, ...]
    body: Term
    ty: Optional[SimpleType] = None
    loc: Optional[SrcLoc] = None


def spine(t: Term) -> Tuple[Term, List[Term]]:
    """Flatten nested applications: (h a1 ... an) -> (h, [a1..an])."""
    args: List[Term] = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fn
    args.reverse()
    return t, args


def make_app(head: Term, args: List[Term], loc: Optional[SrcLoc] = None) -> Term:
    t = head
    for a in args:
        t = App(t, a, loc=loc)
    return t


def term_vars(t: Term) -> List[str]:
    """Free variables in order of first occurrence."""
    seen: List[str] = []

    def go(u: Term, bound: Tuple[str, ...]) -> None:
        if isinstance(u, Var):
            if u.name not in bound and u.name not in seen:
                seen.append(u.name)
        elif isinstance(u, App):
            go(u.fn, bound)
            go(u.arg, bound)
        elif isinstance(u, Lam):
            go(u.body, bound + u.params)

    go(t, ())
    return seen


class Pattern:
    __slots__ = ()

    def __str__(self) -> str:
        return pretty_pattern(self)


@dataclass(frozen=True)
class PVar(Pattern):
    name: str
    ty: Optional[SimpleType] = None
    loc: Optional[SrcLoc] = None


@dataclass(frozen=True)
class PCon(Pattern):
    """Fully applied constructor pattern; ty is the instance result type."""
    con: str
    args: Tuple[Pattern, ...] = ()
    ty: Optional[SimpleType] = None
    loc: Optional[SrcLoc] = None


def pattern_vars(p: Pattern) -> List[str]:
    if isinstance(p, PVar):
        return [p.name]
    out: List[str] = []
    for a in p.args:
        out.extend(pattern_vars(a))
    return out


# ---------------------------------------------------------------------------
# Declarations, equations, programs


@dataclass(frozen=True)
class ConstructorDecl:
    name: str
    arg_types: Tuple[SimpleType, ...]
    result: TData

    @property
    def arity(self) -> int:
        return len(self.arg_types)


@dataclass(frozen=True)
class DataDecl:
    name: str
    params: Tuple[str, ...]  # type parameters (builtins only)
    constructors: Tuple[ConstructorDecl, ...]
    builtin: bool = False


@dataclass(frozen=True)
class Equation:
    fun: str
    lhs: Tuple[Pattern, ...]
    rhs: Term
    loc: Optional[SrcLoc] = None

    def __str__(self) -> str:
        pats = " ".join(pretty_pattern(p, atom=True) for p in self.lhs)
        sep = " " if pats else ""
        return f"{self.fun}{sep}{pats} = {pretty_term(self.rhs)}"


@dataclass
class FunctionDef:
    name: str
    signature: Optional[SimpleType]  # None only for lifted lambdas pre-check
    equations: List[Equation] = field(default_factory=list)
    sized_annotation: Optional[str] = None  # raw annotation text, parsed later
    generated: bool = False  # lifted lambda or ticking helper
    loc: Optional[SrcLoc] = None

    @property
    def arity(self) -> int:
        if self.equations:
            return len(self.equations[0].lhs)
        if self.signature is not None:
            return len(arrow_chain(self.signature)[0])
        return 0


@dataclass
class Program:
    datatypes: Dict[str, DataDecl] = field(default_factory=dict)
    functions: Dict[str, FunctionDef] = field(default_factory=dict)
    order: List[str] = field(default_factory=list)  # declaration order
    source_name: str = "<input>"

    def datatype_of_constructor(self, con: str) -> Optional[DataDecl]:
        for d in self.datatypes.values():
            for c in d.constructors:
                if c.name == con:
                    return d
        return None

    def constructor_decl(self, con: str) -> Optional[ConstructorDecl]:
        d = self.datatype_of_constructor(con)
        if d is None:
            return None
        for c in d.constructors:
            if c.name == con:
                return c
        return None

    def fresh_function_name(self, base: str) -> str:
        if base not in self.functions and base not in self.datatypes:
            return base
        k = 1
        while f"{base}{k}" in self.functions:
            k += 1
        return f"{base}{k}"


# ---------------------------------------------------------------------------
# Builtin datatypes

NAT = TData("Nat")
UNIT = TData("Unit")


def list_of(elem: SimpleType) -> TData:
    return TData("List", (elem,))


BUILTIN_DATATYPES: Dict[str, DataDecl] = {
    "Nat": DataDecl(
        "Nat",
        (),
        (
            ConstructorDecl("Zero", (), NAT),
            ConstructorDecl("Succ", (NAT,), NAT),
        ),
        builtin=True,
    ),
    "List": DataDecl(
        "List",
        ("a",),
        (
            ConstructorDecl("Nil", (), TData("List", (TVar("a"),))),
            ConstructorDecl("Cons", (TVar("a"), TData("List", (TVar("a"),))),
                            TData("List", (TVar("a"),))),
        ),
        builtin=True,
    ),
    "Unit": DataDecl("Unit", (), (ConstructorDecl("U", (), UNIT),), builtin=True),
}

# Pair is special: it constructs products, not a nominal datatype.
PAIR_NAME = "Pair"

RESERVED_CONSTRUCTORS = {"Zero", "Succ", "Nil", "Cons", "U", PAIR_NAME}
RESERVED_TYPES = set(BUILTIN_DATATYPES) | {"Pair", "L", "C"}


def constructor_instance(
    program: Program, con: str, instance: SimpleType
) -> Tuple[Tuple[SimpleType, ...], SimpleType]:
    """Argument/result types of a constructor occurrence.

    `instance` is the monomorphic instance type recorded on the occurrence:
    for Pair the resulting product, for datatype constructors the result
    TData (carrying element types).
    """
    if con == PAIR_NAME:
        assert isinstance(instance, TProd), instance
        return (instance.fst, instance.snd), instance
    decl = program.constructor_decl(con)
    assert decl is not None, f"unknown constructor {con}"
    data = program.datatype_of_constructor(con)
    assert isinstance(instance, TData) and instance.name == data.name, (con, instance)
    subst = dict(zip(data.params, instance.args))
    args = tuple(instantiate_simple(a, subst) for a in decl.arg_types)
    return args, instance


def instantiate_simple(ty: SimpleType, subst: Dict[str, SimpleType]) -> SimpleType:
    if isinstance(ty, TVar):
        return subst.get(ty.name, ty)
    if isinstance(ty, TData):
        return TData(ty.name, tuple(instantiate_simple(a, subst) for a in ty.args))
    if isinstance(ty, TProd):
        return TProd(instantiate_simple(ty.fst, subst), instantiate_simple(ty.snd, subst))
    if isinstance(ty, TArrow):
        return TArrow(instantiate_simple(ty.dom, subst), instantiate_simple(ty.cod, subst))
    return ty


# ---------------------------------------------------------------------------
# Pretty printing (terms, patterns, programs)


def _term_numeral(t: Term) -> Optional[int]:
    n = 0
    while isinstance(t, App):
        head, args = spine(t)
        if isinstance(head, Con) and head.name == "Succ" and len(args) == 1:
            n += 1
            t = args[0]
        else:
            return None
    if isinstance(t, Con) and t.name == "Zero":
        return n
    return None


def pretty_term(t: Term, prec: int = 0) -> str:
    num = _term_numeral(t)
    if num is not None:
        return str(num)
    if isinstance(t, Var) or isinstance(t, Fun):
        return t.name
    if isinstance(t, Con):
        if t.name == "Nil":
            return "[]"
        if t.name == "Cons":
            return "(:)"
        if t.name == "Zero":
            return "0"
        return t.name
    if isinstance(t, Lam):
        inner = f"\\{' '.join(t.params)}. {pretty_term(t.body, 0)}"
        return f"({inner})" if prec > 0 else inner
    assert isinstance(t, App)
    head, args = spine(t)
    if isinstance(head, Con) and head.name == "Cons" and len(args) == 2:
        inner = f"{pretty_term(args[0], 2)} : {pretty_term(args[1], 1)}"
        return f"({inner})" if prec > 1 else inner
    if isinstance(head, Con) and head.name == PAIR_NAME and len(args) == 2:
        return f"({pretty_term(args[0])}, {pretty_term(args[1])})"
    parts = [pretty_term(head, 2)] + [pretty_term(a, 2) for a in args]
    inner = " ".join(parts)
    return f"({inner})" if prec > 1 else inner


def pretty_pattern(p: Pattern, atom: bool = False) -> str:
    if isinstance(p, PVar):
        return p.name
    assert isinstance(p, PCon)
    if p.con == "Nil":
        return "[]"
    if p.con == "Zero":
        return "0"
    if p.con == "Succ":
        n = 0
        q: Pattern = p
        while isinstance(q, PCon) and q.con == "Succ":
            n += 1
            q = q.args[0]
        if isinstance(q, PCon) and q.con == "Zero":
            return str(n)
        inner = f"Succ {pretty_pattern(p.args[0], atom=True)}"
        return f"({inner})" if atom else inner
    if p.con == "Cons":
        inner = f"{pretty_pattern(p.args[0], atom=True)} : {pretty_pattern(p.args[1], atom=True)}"
        return f"({inner})"
    if p.con == PAIR_NAME:
        return f"({pretty_pattern(p.args[0])}, {pretty_pattern(p.args[1])})"
    if not p.args:
        return p.con
    inner = p.con + " " + " ".join(pretty_pattern(a, atom=True) for a in p.args)
    return f"({inner})" if atom else inner


def pretty_program(p: Program) -> str:
    lines: List[str] = []
    for dname in p.datatypes:
        d = p.datatypes[dname]
        if d.builtin:
            continue
        cons = " | ".join(
            c.name + ("" if not c.arg_types else " " + " ".join(pretty_simple(t, 2) for t in c.arg_types))
            for c in d.constructors
        )
        lines.append(f"data {d.name} = {cons}")
    for fname in p.order:
        f = p.functions[fname]
        if f.signature is not None:
            lines.append(f"{f.name} :: {pretty_simple(f.signature)}")
        if f.sized_annotation:
            lines.append(f"{f.name} ::: {f.sized_annotation}")
        for eq in f.equations:
            lines.append(str(eq))
        lines.append("")
    return "\n".join(lines).rstrip() + "\n"
