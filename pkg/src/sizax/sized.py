"""Sized types: simple types whose datatype occurrences carry size indices.

Monotypes annotate each datatype occurrence with an index term; polytypes
quantify index variables, and quantifiers may appear to the left of an
arrow at any depth (rank > 1).  Canonical types keep every index directly
left of an arrow a fresh, distinct variable, which lets instantiation be
computed by structural matching instead of unification.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Set, Tuple, Union

from .errors import MatchFailure, ParseError, SizaxError, SkeletonMismatch
from .indexterms import (
    IApp, IVar, IndexTerm, Leq, NameSupply, leq_semantic, pretty_index,
    substitute,
)
from .lang import (
    DataDecl, SimpleType, TArrow, TData, TProd, TVar, pretty_simple,
)


class Monotype:
    __slots__ = ()

    def __str__(self) -> str:
        return pretty_sized(self)


@dataclass(frozen=True)
class SAtom(Monotype):
    """An opaque type variable occurrence; carries no index."""
    name: str


@dataclass(frozen=True)
class SBase(Monotype):
    """Indexed datatype occurrence (element types are plain simple types)."""
    data: TData
    index: IndexTerm


@dataclass(frozen=True)
class SProd(Monotype):
    fst: Monotype
    snd: Monotype


@dataclass(frozen=True)
class SArrow(Monotype):
    dom: "SizedType"
    cod: Monotype


@dataclass(frozen=True)
class Forall:
    """Polytype: quantified index variables over a monotype body."""
    binders: Tuple[str, ...]
    body: Monotype

    def __str__(self) -> str:
        return pretty_sized(self)


SizedType = Union[Monotype, Forall]


def mono_body(ty: SizedType) -> Monotype:
    return ty.body if isinstance(ty, Forall) else ty


def binders_of(ty: SizedType) -> Tuple[str, ...]:
    return ty.binders if isinstance(ty, Forall) else ()


def forall(binders: Tuple[str, ...], body: Monotype) -> SizedType:
    return Forall(binders, body) if binders else body


# ---------------------------------------------------------------------------
# Skeletons, free variables, substitution


def skeleton(ty: SizedType) -> SimpleType:
    """Drop quantifiers and indices."""
    if isinstance(ty, Forall):
        return skeleton(ty.body)
    if isinstance(ty, SAtom):
        return TVar(ty.name)
    if isinstance(ty, SBase):
        return ty.data
    if isinstance(ty, SProd):
        return TProd(skeleton(ty.fst), skeleton(ty.snd))
    assert isinstance(ty, SArrow)
    return TArrow(skeleton(ty.dom), skeleton(ty.cod))


def free_vars_signed(ty: SizedType) -> Tuple[Set[str], Set[str]]:
    """(positive, negative) free index variables."""
    pos: Set[str] = set()
    neg: Set[str] = set()

    def go(t: SizedType, sign: bool, bound: Set[str]) -> None:
        if isinstance(t, Forall):
            go(t.body, sign, bound | set(t.binders))
            return
        if isinstance(t, SAtom):
            return
        if isinstance(t, SBase):
            for v in t.index.free_vars():
                if v not in bound:
                    (pos if sign else neg).add(v)
            return
        if isinstance(t, SProd):
            go(t.fst, sign, bound)
            go(t.snd, sign, bound)
            return
        assert isinstance(t, SArrow)
        go(t.dom, not sign, bound)
        go(t.cod, sign, bound)

    go(ty, True, set())
    return pos, neg


def free_vars(ty: SizedType) -> Set[str]:
    p, n = free_vars_signed(ty)
    return p | n


def apply_index_subst(ty: SizedType, theta: Dict[str, IndexTerm],
                      supply: Optional[NameSupply] = None) -> SizedType:
    """Apply an index substitution, alpha-converting to avoid capture."""
    if isinstance(ty, Forall):
        theta = {k: v for k, v in theta.items() if k not in ty.binders}
        if not theta:
            return ty
        clash = set()
        for t in theta.values():
            clash |= t.free_vars()
        binders = list(ty.binders)
        body: Monotype = ty.body
        renaming: Dict[str, IndexTerm] = {}
        supply = supply or NameSupply()
        for i, b in enumerate(binders):
            if b in clash:
                fresh = supply.fresh(b)
                renaming[b] = IVar(fresh)
                binders[i] = fresh
        if renaming:
            body = apply_index_subst(body, renaming, supply)  # type: ignore[assignment]
        return Forall(tuple(binders), apply_index_subst(body, theta, supply))  # type: ignore[arg-type]
    if isinstance(ty, SAtom):
        return ty
    if isinstance(ty, SBase):
        return SBase(ty.data, substitute(ty.index, theta))
    if isinstance(ty, SProd):
        return SProd(apply_index_subst(ty.fst, theta, supply),
                     apply_index_subst(ty.snd, theta, supply))
    assert isinstance(ty, SArrow)
    return SArrow(apply_index_subst(ty.dom, theta, supply),
                  apply_index_subst(ty.cod, theta, supply))


def instantiate(ty: SizedType, args: List[IndexTerm]) -> Monotype:
    """Substitute the quantified variables; a monotype instantiates with []."""
    if not isinstance(ty, Forall):
        if args:
            raise SizaxError(f"cannot instantiate a monotype with {len(args)} argument(s)")
        return ty
    if len(args) != len(ty.binders):
        raise SizaxError(
            f"instantiation arity mismatch: {len(ty.binders)} quantified, "
            f"{len(args)} given")
    theta = dict(zip(ty.binders, args))
    out = apply_index_subst(ty.body, theta)
    assert not isinstance(out, Forall)
    return out


def open_binders(ty: SizedType, supply: NameSupply) -> Tuple[List[str], Monotype]:
    """Strip the outer quantifier, renaming binders to globally fresh names."""
    if not isinstance(ty, Forall):
        return [], ty
    fresh = [supply.fresh(b) for b in ty.binders]
    body = instantiate(ty, [IVar(f) for f in fresh])
    return fresh, body


def arrow_domains(ty: Monotype, n: int) -> Tuple[List[SizedType], Monotype]:
    """Peel n arrows off a monotype."""
    doms: List[SizedType] = []
    cur = ty
    for _ in range(n):
        if not isinstance(cur, SArrow):
            raise SizaxError(f"expected a function type, found {pretty_sized(cur)}")
        doms.append(cur.dom)
        cur = cur.cod
    return doms, cur


# ---------------------------------------------------------------------------
# Alpha equivalence


def alpha_eq(a: SizedType, b: SizedType) -> bool:
    def go(x: SizedType, y: SizedType, envx: Dict[str, str], envy: Dict[str, str]) -> bool:
        if isinstance(x, Forall) or isinstance(y, Forall):
            bx, by = binders_of(x), binders_of(y)
            if len(bx) != len(by):
                return False
            ex, ey = dict(envx), dict(envy)
            for i, (p, q) in enumerate(zip(bx, by)):
                ex[p] = ey[q] = f"@{len(envx)}_{i}"
            return go(mono_body(x), mono_body(y), ex, ey)
        if isinstance(x, SAtom) and isinstance(y, SAtom):
            return x.name == y.name
        if isinstance(x, SBase) and isinstance(y, SBase):
            return x.data == y.data and _index_alpha(x.index, y.index, envx, envy)
        if isinstance(x, SProd) and isinstance(y, SProd):
            return go(x.fst, y.fst, envx, envy) and go(x.snd, y.snd, envx, envy)
        if isinstance(x, SArrow) and isinstance(y, SArrow):
            return go(x.dom, y.dom, envx, envy) and go(x.cod, y.cod, envx, envy)
        return False

    return go(a, b, {}, {})


def _index_alpha(s: IndexTerm, t: IndexTerm, envx, envy) -> bool:
    if isinstance(s, IVar) and isinstance(t, IVar):
        return envx.get(s.name, s.name) == envy.get(t.name, t.name)
    if isinstance(s, IApp) and isinstance(t, IApp):
        return (s.sym.name == s.sym.name and s.sym.name == t.sym.name
                and len(s.args) == len(t.args)
                and all(_index_alpha(a, b, envx, envy) for a, b in zip(s.args, t.args)))
    return False


# ---------------------------------------------------------------------------
# Canonicity (declaration shapes that make matching sufficient)


def is_canonical(ty: SizedType) -> Tuple[bool, Optional[str]]:
    """Check the canonical-shape conditions; returns (ok, diagnostic)."""
    try:
        _canon_type(ty)
        return True, None
    except _NotCanonical as e:
        return False, str(e)


class _NotCanonical(Exception):
    pass


def _canon_type(ty: SizedType) -> None:
    if isinstance(ty, Forall):
        _canon_mono(ty.body)
        _, neg = free_vars_signed(ty.body)
        loose = neg - set(ty.binders)
        if loose:
            raise _NotCanonical(
                f"negative index variable(s) {', '.join(sorted(loose))} "
                "are not bound by the quantifier")
        return
    _canon_mono(ty)


def _canon_mono(ty: Monotype) -> None:
    if isinstance(ty, (SAtom, SBase)):
        return
    if isinstance(ty, SProd):
        _canon_mono(ty.fst)
        _canon_mono(ty.snd)
        return
    assert isinstance(ty, SArrow)
    dom, cod = ty.dom, ty.cod
    if isinstance(dom, Forall) or isinstance(dom, SArrow):
        eta = dom if isinstance(dom, Forall) else Forall((), dom)
        _canon_type(eta)
        overlap = free_vars(eta) & free_vars_signed(cod)[1]
        if overlap:
            raise _NotCanonical(
                f"variable(s) {', '.join(sorted(overlap))} of a functional "
                "argument type reappear in a later negative position")
    else:
        for base in _domain_bases(dom):
            if not isinstance(base.index, IVar):
                raise _NotCanonical(
                    f"index {pretty_index(base.index)} directly left of an arrow "
                    "must be a plain variable")
        seen: Set[str] = set()
        for base in _domain_bases(dom):
            v = base.index.name  # type: ignore[union-attr]
            if v in seen:
                raise _NotCanonical(
                    f"index variable {v} must be pairwise distinct in negative positions")
            seen.add(v)
        dup = seen & free_vars_signed(cod)[1]
        if dup:
            raise _NotCanonical(
                f"index variable {', '.join(sorted(dup))} is reused in a later "
                "negative position")
    _canon_mono(cod)


def _domain_bases(dom: Monotype) -> List[SBase]:
    """Indexed bases of a first-order domain (descending through products)."""
    if isinstance(dom, SBase):
        return [dom]
    if isinstance(dom, SAtom):
        return []
    if isinstance(dom, SProd):
        fst = dom.fst
        snd = dom.snd
        for comp in (fst, snd):
            if isinstance(comp, SArrow) or isinstance(comp, Forall):
                raise _NotCanonical("functional component inside a product domain")
        return _domain_bases(fst) + _domain_bases(snd)
    raise _NotCanonical("unexpected domain shape")


# ---------------------------------------------------------------------------
# Matching (instantiation inference for canonical declarations)


class MatchState:
    """Bindable-variable store for structural matching."""

    def __init__(self, bindable: Set[str]):
        self.bindable = set(bindable)
        self.bindings: Dict[str, IndexTerm] = {}
        self.warnings: List[str] = []

    def subst(self) -> Dict[str, IndexTerm]:
        return dict(self.bindings)

    def unbound(self) -> Set[str]:
        return self.bindable - set(self.bindings)


def match_index(decl: IndexTerm, actual: IndexTerm, st: MatchState) -> None:
    """Bind decl-side bindable variables against actual's structure.

    Only bare variables and fixed-interpretation symbols are decomposed;
    applications of unknown symbols are opaque.  Mismatches are skipped
    (later subtype constraints enforce correctness); a second, different
    candidate for an already-bound variable keeps the first and records
    an ambiguity warning.
    """
    if isinstance(decl, IVar):
        if decl.name in st.bindable:
            prev = st.bindings.get(decl.name)
            if prev is None:
                st.bindings[decl.name] = actual
            elif prev != actual:
                st.warnings.append(
                    f"ambiguous instantiation for {decl.name}: "
                    f"{pretty_index(prev)} vs {pretty_index(actual)} (kept first)")
        return
    assert isinstance(decl, IApp)
    if not decl.sym.fixed:
        return
    if isinstance(actual, IApp) and actual.sym.name == decl.sym.name \
            and len(actual.args) == len(decl.args):
        for d, a in zip(decl.args, actual.args):
            match_index(d, a, st)


def match_type(decl: SizedType, actual: SizedType, st: MatchState) -> None:
    """Structural matching of a declared type against an actual type."""
    if isinstance(decl, Forall) or isinstance(actual, Forall):
        db, ab = binders_of(decl), binders_of(actual)
        if len(db) != len(ab):
            return
        body = mono_body(actual)
        if db:
            body = instantiate(actual, [IVar(b) for b in db])
        match_type(mono_body(decl), body, st)
        return
    if isinstance(decl, SBase) and isinstance(actual, SBase):
        match_index(decl.index, actual.index, st)
        return
    if isinstance(decl, SProd) and isinstance(actual, SProd):
        match_type(decl.fst, actual.fst, st)
        match_type(decl.snd, actual.snd, st)
        return
    if isinstance(decl, SArrow) and isinstance(actual, SArrow):
        match_type(decl.dom, actual.dom, st)
        match_type(decl.cod, actual.cod, st)


# ---------------------------------------------------------------------------
# Subtyping


def subtype_pairs(sub: SizedType, sup: SizedType,
                  supply: Optional[NameSupply] = None) -> List[Tuple[IndexTerm, IndexTerm]]:
    """Reduce sub <= sup to index inequalities (lhs <= rhs pairs).

    Quantifiers on the left are opened as rigid variables; quantifiers on
    the right are instantiated by matching against the left body, which is
    complete for canonical shapes.  Raises SkeletonMismatch or MatchFailure.
    """
    if skeleton(sub) != skeleton(sup):
        raise SkeletonMismatch(
            f"skeletons differ: {pretty_simple(skeleton(sub))} vs "
            f"{pretty_simple(skeleton(sup))}")
    supply = supply or NameSupply("sk")
    out: List[Tuple[IndexTerm, IndexTerm]] = []
    _sub_type(sub, sup, out, supply)
    return out


def _sub_type(sub: SizedType, sup: SizedType,
              out: List[Tuple[IndexTerm, IndexTerm]], supply: NameSupply) -> None:
    if isinstance(sub, Forall) or isinstance(sup, Forall):
        _, sub_body = open_binders(sub, supply) if isinstance(sub, Forall) else ((), sub)
        if isinstance(sub, Forall):
            sub = sub_body  # left binders become rigid skolems
        if isinstance(sup, Forall):
            st = MatchState(set(sup.binders))
            match_type(sup.body, sub, st)
            missing = st.unbound()
            if missing:
                raise MatchFailure(
                    "cannot determine instantiation for quantified variable(s) "
                    + ", ".join(sorted(missing)))
            sup = instantiate(sup, [st.bindings[b] for b in sup.binders])
        _sub_type(sub, sup, out, supply)
        return
    if isinstance(sub, SAtom) and isinstance(sup, SAtom):
        return
    if isinstance(sub, SBase) and isinstance(sup, SBase):
        out.append((sub.index, sup.index))
        return
    if isinstance(sub, SProd) and isinstance(sup, SProd):
        _sub_type(sub.fst, sup.fst, out, supply)
        _sub_type(sub.snd, sup.snd, out, supply)
        return
    assert isinstance(sub, SArrow) and isinstance(sup, SArrow)
    _sub_type(sup.dom, sub.dom, out, supply)  # contravariant
    _sub_type(sub.cod, sup.cod, out, supply)


def subtype_semantic(interp, sub: SizedType, sup: SizedType) -> Tuple[Leq, List[Tuple[IndexTerm, IndexTerm]]]:
    """Decide sub <= sup under a full interpretation; Unknown lists failures."""
    pairs = subtype_pairs(sub, sup)
    failed = [(s, t) for s, t in pairs if leq_semantic(interp, s, t) is not Leq.YES]
    return (Leq.YES if not failed else Leq.UNKNOWN), failed


# ---------------------------------------------------------------------------
# Pretty printing and parsing


def _index_atom_str(t: IndexTerm) -> str:
    s = pretty_index(t)
    if isinstance(t, IVar):
        return s
    if s.isdigit():
        return s
    if isinstance(t, IApp) and not t.sym.fixed:
        return s  # F(...) form is already self-delimiting
    return f"({s})"


def pretty_sized(ty: SizedType, prec: int = 0) -> str:
    if isinstance(ty, Forall):
        if not ty.binders:
            return pretty_sized(ty.body, prec)
        inner = f"forall {' '.join(ty.binders)}. {pretty_sized(ty.body, 0)}"
        return f"({inner})" if prec > 0 else inner
    if isinstance(ty, SAtom):
        return ty.name
    if isinstance(ty, SBase):
        name = "L" if ty.data.name == "List" else ty.data.name
        parts = [name, _index_atom_str(ty.index)]
        parts += [pretty_simple(a, 2) for a in ty.data.args]
        return " ".join(parts)
    if isinstance(ty, SProd):
        return f"({pretty_sized(ty.fst)}, {pretty_sized(ty.snd)})"
    assert isinstance(ty, SArrow)
    inner = f"{pretty_sized(ty.dom, 1)} -> {pretty_sized(ty.cod, 0)}"
    return f"({inner})" if prec >= 1 else inner


def rename_binders_pretty(ty: SizedType) -> SizedType:
    """Rename all binders to a readable i, j, k, ... sequence."""
    pool = ["i", "j", "k", "l", "m", "n", "p", "q", "r", "t", "u", "w"]
    counter = [0]
    taken = set(free_vars(ty))

    def next_name() -> str:
        while True:
            idx = counter[0]
            counter[0] += 1
            name = pool[idx] if idx < len(pool) else f"i{idx - len(pool) + 1}"
            if name not in taken:
                taken.add(name)
                return name

    def go(t: SizedType) -> SizedType:
        if isinstance(t, Forall):
            fresh = [next_name() for _ in t.binders]
            body = instantiate(t, [IVar(f) for f in fresh])
            return Forall(tuple(fresh), go(body))  # type: ignore[arg-type]
        if isinstance(t, (SAtom, SBase)):
            return t
        if isinstance(t, SProd):
            return SProd(go(t.fst), go(t.snd))
        assert isinstance(t, SArrow)
        return SArrow(go(t.dom), go(t.cod))

    return go(ty)


def parse_sized_type(text: str, datatypes: Dict[str, DataDecl],
                     file: str = "<annotation>") -> SizedType:
    from .parser import TokenStream, tokenize, parse_index_expr, _simple_atom

    ts = TokenStream(tokenize(text, file))

    def stype() -> SizedType:
        if ts.at("forall"):
            ts.next()
            names: List[str] = []
            while ts.at_kind("IDENT"):
                names.append(ts.next().text)
            ts.expect(".")
            body = stype()
            inner = mono_body(body)
            allb = tuple(names) + binders_of(body)
            if not isinstance(inner, Monotype):  # pragma: no cover
                raise ParseError("bad quantifier body", ts.peek().loc)
            return Forall(allb, inner)
        return arr()

    def arr() -> SizedType:
        left = sapp()
        if ts.at("->"):
            ts.next()
            right = stype()
            if isinstance(right, Forall):
                raise ParseError(
                    "quantifiers right of an arrow must be parenthesized",
                    ts.peek().loc)
            return SArrow(left, right)
        return left

    def sapp() -> SizedType:
        t = ts.peek()
        if t.kind == "CONID":
            ts.next()
            name = "List" if t.text == "L" else t.text
            decl = datatypes.get(name)
            if decl is None:
                raise ParseError(f"unknown type {t.text!r}", t.loc)
            index = iatom()
            args = tuple(_simple_atom(ts, datatypes) for _ in decl.params)
            _check_annotation_index(index, t.loc)
            return SBase(TData(name, args), index)
        return satom()

    def satom() -> SizedType:
        t = ts.peek()
        if t.kind == "IDENT":
            ts.next()
            return SAtom(t.text)
        if t.text == "(":
            ts.next()
            first = stype()
            if ts.at(","):
                ts.next()
                second = stype()
                ts.expect(")")
                for comp in (first, second):
                    if isinstance(comp, Forall):
                        raise ParseError("no quantifiers inside products", t.loc)
                return SProd(first, second)  # type: ignore[arg-type]
            ts.expect(")")
            return first
        raise ParseError(f"expected a sized type, found {t.text!r}", t.loc)

    def iatom() -> IndexTerm:
        t = ts.peek()
        if t.kind == "IDENT":
            ts.next()
            return IVar(t.text)
        if t.kind == "NUM":
            from .indexterms import inat
            ts.next()
            return inat(int(t.text))
        if t.text == "(":
            ts.next()
            out = parse_index_expr(ts)
            ts.expect(")")
            return out
        raise ParseError(f"expected an index, found {t.text!r}", t.loc)

    out = stype()
    if not ts.done():
        raise ParseError(f"trailing input {ts.peek().text!r}", ts.peek().loc)
    return out


def _check_annotation_index(t: IndexTerm, loc) -> None:
    if isinstance(t, IApp):
        if not t.sym.fixed:
            raise ParseError(
                f"annotation indices may use only variables and arithmetic, "
                f"found symbol {t.sym.name}", loc)
        for a in t.args:
            _check_annotation_index(a, loc)
