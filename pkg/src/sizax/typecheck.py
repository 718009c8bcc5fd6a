"""Sized type checking: footprints, syntax-directed inference, templates.

Checking an equation computes the most general context and type of its
left-hand side (the footprint, justified by canonical declarations), then
types the right-hand side and requires it to be a subtype.  Inference of
instantiations is by structural matching; where matching leaves a
quantified variable undetermined, a fresh unknown index symbol over the
equation's rigid variables is introduced and left to the solver.

Two modes share the traversal: Generate accumulates the emitted
inequalities, Semantic discharges each one immediately against a given
interpretation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

from .callgraph import call_graph, scc_condensation
from .errors import (
    Diagnostic, GeneralisationViolation, NonCanonicalDeclaration, SizaxError,
    SkeletonMismatch, SrcLoc, SubtypeFailure, UnsupportedRank,
)
from .indexterms import (
    IApp, IVar, IndexSymbol, IndexTerm, Interpretation, Leq, NameSupply,
    inat, isucc, isum, leq_semantic, pretty_index, refute,
)
from .lang import (
    App, Con, Equation, Fun, PAIR_NAME, PCon, PVar, Pattern, Program,
    SimpleType, TArrow, TData, TProd, TVar, Term, Var, arrow_chain,
    constructor_instance, pretty_simple, spine, term_vars,
)
from .sized import (
    Forall, MatchState, Monotype, SArrow, SAtom, SBase, SProd, SizedType,
    alpha_eq, apply_index_subst, arrow_domains, binders_of, free_vars,
    instantiate, is_canonical, match_type, mono_body, open_binders,
    parse_sized_type, pretty_sized, skeleton, subtype_pairs,
)


# ---------------------------------------------------------------------------
# Constraints


@dataclass(frozen=True)
class Origin:
    function: str
    equation: int  # 1-based; 0 for non-equation contexts
    rule: str
    loc: Optional[SrcLoc] = None

    def __str__(self) -> str:
        eq = f"#{self.equation}" if self.equation else ""
        return f"{self.function}{eq} {self.rule}"


@dataclass(frozen=True)
class Constraint:
    """An inequality lhs <= rhs, universally quantified over its variables."""
    lhs: IndexTerm
    rhs: IndexTerm
    origin: Origin

    def __str__(self) -> str:
        return f"{pretty_index(self.lhs)} <= {pretty_index(self.rhs)} ; {self.origin}"

    def unknown_symbols(self) -> Set[IndexSymbol]:
        from .indexterms import unknown_symbols
        return unknown_symbols(self.lhs) | unknown_symbols(self.rhs)


@dataclass
class ConstraintSet:
    constraints: List[Constraint] = field(default_factory=list)
    arities: Dict[str, int] = field(default_factory=dict)
    owners: Dict[str, str] = field(default_factory=dict)  # symbol -> function
    call_edges: Dict[str, Set[str]] = field(default_factory=dict)
    scc_of_function: Dict[str, int] = field(default_factory=dict)
    function_sccs: List[List[str]] = field(default_factory=list)

    def add(self, c: Constraint) -> None:
        self.constraints.append(c)
        for s in c.unknown_symbols():
            self.arities.setdefault(s.name, s.arity)

    def merge(self, other: "ConstraintSet") -> None:
        self.constraints.extend(other.constraints)
        self.arities.update(other.arities)
        self.owners.update(other.owners)
        for k, v in other.call_edges.items():
            self.call_edges.setdefault(k, set()).update(v)
        self.scc_of_function.update(other.scc_of_function)

    def export(self, groups: Optional[List[List[Constraint]]] = None) -> str:
        """One constraint per line; groups separated by `-- scc N` headers."""
        if groups is None:
            return "\n".join(str(c) for c in self.constraints) + "\n"
        lines = []
        for i, group in enumerate(groups):
            lines.append(f"-- scc {i}")
            lines.extend(str(c) for c in group)
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Declarations


@dataclass
class SizeConfig:
    """Size measure options: natural measure gives nullary constructors
    weight zero; the strict variant weighs every constructor 1."""
    nullary_weight_zero: bool = True


class Declarations:
    """Closed sized declarations for functions plus derived constructor types."""

    def __init__(self, program: Program, config: Optional[SizeConfig] = None):
        self.program = program
        self.config = config or SizeConfig()
        self.types: Dict[str, SizedType] = {}
        self.template_symbols: Dict[str, List[str]] = {}
        self.user_annotated: Set[str] = set()
        self.diagnostics: List[Diagnostic] = []
        self._symbol_counter = 0
        self._con_cache: Dict[Tuple[str, SimpleType], SizedType] = {}

    def fresh_symbol(self, arity: int, owner: str, prefix: str = "F") -> IndexSymbol:
        self._symbol_counter += 1
        name = f"{prefix}{self._symbol_counter}"
        sym = IndexSymbol(name, arity)
        self.template_symbols.setdefault(owner, []).append(name)
        return sym

    def constructor_sized(self, con: str, instance: SimpleType) -> SizedType:
        """Additive sized declaration of a constructor instance.

        Each datatype-typed argument position receives a fresh quantified
        variable that contributes to the result size; opaque and product
        positions contribute nothing.  Nullary constructors sit at size 0
        under the natural measure.
        """
        key = (con, instance)
        if key in self._con_cache:
            return self._con_cache[key]
        arg_tys, result = constructor_instance(self.program, con, instance)
        binders: List[str] = []

        def dom_of(ty: SimpleType, path: str) -> SizedType:
            if isinstance(ty, TData):
                v = f"c{len(binders) + 1}"
                binders.append(v)
                return SBase(ty, IVar(v))
            if isinstance(ty, TVar):
                return SAtom(ty.name)
            if isinstance(ty, TProd):
                return SProd(dom_of(ty.fst, path), dom_of(ty.snd, path))  # type: ignore[arg-type]
            raise UnsupportedRank(
                f"constructor {con} stores a function at {path}; "
                "sized declarations for function-storing constructors are unsupported")

        doms = [dom_of(t, f"argument {i + 1}") for i, t in enumerate(arg_tys)]
        contributing = [IVar(b) for b in binders]
        if con == PAIR_NAME:
            assert len(doms) == 2
            body: Monotype = SProd(doms[0], doms[1])  # type: ignore[arg-type]
        else:
            weight = 0 if (not arg_tys and self.config.nullary_weight_zero) else 1
            total = isum(contributing)
            index = isucc(total) if weight else total
            assert isinstance(result, TData)
            body = SBase(result, index)
        for d in reversed(doms):
            body = SArrow(d, body)
        out = Forall(tuple(binders), body) if binders else body
        self._con_cache[key] = out
        return out


def generate_templates(program: Program, user_decls: Optional[Dict[str, str]] = None,
                       config: Optional[SizeConfig] = None) -> Declarations:
    """Build a Declarations table: user sized annotations where given,
    canonical templates with fresh unknown symbols elsewhere.

    Template scheme: every datatype occurrence in argument position gets a
    fresh, pairwise distinct quantified variable; every datatype occurrence
    in result position gets a fresh unknown symbol applied to all quantified
    variables; functional arguments become inner-quantified polytypes whose
    result indices are the sum of the inner variables plus a fresh
    outer-quantified coupling variable (the shape that lets callers pick
    the per-call growth).  Functional arguments nested inside functional
    arguments or products exceed rank 2 and require a user annotation.
    """
    decls = Declarations(program, config)
    user_decls = user_decls or {}
    for name in program.order:
        f = program.functions[name]
        raw = user_decls.get(name, f.sized_annotation)
        if raw:
            ty = parse_sized_type(raw, program.datatypes, file=program.source_name)
            if skeleton(ty) != f.signature:
                raise SizaxError(
                    f"{name}: sized annotation skeleton {pretty_simple(skeleton(ty))} "
                    f"does not match signature {pretty_simple(f.signature)}", f.loc)
            if free_vars(ty):
                decls.diagnostics.append(Diagnostic(
                    "OpenDeclaration",
                    f"{name}: sized declaration has free index variables "
                    f"{sorted(free_vars(ty))}", f.loc))
            ok, why = is_canonical(ty)
            if not ok:
                decls.diagnostics.append(Diagnostic(
                    "NonCanonicalDeclaration", f"{name}: {why}", f.loc))
            decls.types[name] = ty
            decls.user_annotated.add(name)
        else:
            decls.types[name] = _template_for(decls, name, f.signature)
    return decls


def _template_for(decls: Declarations, fname: str, sig: SimpleType) -> SizedType:
    outer: List[str] = []
    positives: List[Tuple[SBase, None]] = []  # placeholder bases to patch

    class _Hole(IndexTerm):
        __slots__ = ("ident",)

        def __init__(self, ident: int):
            object.__setattr__(self, "ident", ident)

    holes: List[_Hole] = []

    def new_binder(stem: str) -> str:
        v = f"{stem}{len(outer) + 1}"
        outer.append(v)
        return v

    def go_pos(ty: SimpleType) -> Monotype:
        if isinstance(ty, TData):
            h = _Hole(len(holes))
            holes.append(h)
            return SBase(ty, h)
        if isinstance(ty, TVar):
            return SAtom(ty.name)
        if isinstance(ty, TProd):
            return SProd(go_pos(ty.fst), go_pos(ty.snd))
        assert isinstance(ty, TArrow)
        return SArrow(go_dom(ty.dom), go_pos(ty.cod))

    def go_dom(ty: SimpleType) -> SizedType:
        if isinstance(ty, TData):
            return SBase(ty, IVar(new_binder("i")))
        if isinstance(ty, TVar):
            return SAtom(ty.name)
        if isinstance(ty, TProd):
            def comp(t: SimpleType) -> Monotype:
                if isinstance(t, TArrow):
                    raise UnsupportedRank(
                        f"{fname}: functional component inside a product argument "
                        "needs a user annotation")
                out = go_dom(t)
                assert not isinstance(out, Forall)
                return out
            return SProd(comp(ty.fst), comp(ty.snd))
        assert isinstance(ty, TArrow)
        return _inner_polytype(ty)

    def _inner_polytype(ty: TArrow) -> Forall:
        inner: List[str] = []

        def inner_dom(t: SimpleType) -> Monotype:
            if isinstance(t, TData):
                v = f"a{len(inner) + 1}"
                inner.append(v)
                return SBase(t, IVar(v))
            if isinstance(t, TVar):
                return SAtom(t.name)
            if isinstance(t, TProd):
                return SProd(inner_dom(t.fst), inner_dom(t.snd))
            raise UnsupportedRank(
                f"{fname}: rank > 2 sized type required (functional argument "
                "inside a functional argument); add a user annotation")

        def inner_pos(t: SimpleType) -> Monotype:
            if isinstance(t, TData):
                coupling = new_binder("d")
                idx = isum([IVar(v) for v in inner] + [IVar(coupling)])
                return SBase(t, idx)
            if isinstance(t, TVar):
                return SAtom(t.name)
            if isinstance(t, TProd):
                return SProd(inner_pos(t.fst), inner_pos(t.snd))
            assert isinstance(t, TArrow)
            return SArrow(inner_dom(t.dom), inner_pos(t.cod))

        doms: List[Monotype] = []
        cur: SimpleType = ty
        while isinstance(cur, TArrow):
            doms.append(inner_dom(cur.dom))
            cur = cur.cod
        body = inner_pos(cur)
        for d in reversed(doms):
            body = SArrow(d, body)
        return Forall(tuple(inner), body)

    arg_tys, result_ty = arrow_chain(sig)
    doms = [go_dom(t) for t in arg_tys]
    res = go_pos(result_ty)

    # Patch holes with fresh symbols over all quantified variables.
    args = tuple(IVar(v) for v in outer)

    def patch(ty: SizedType) -> SizedType:
        if isinstance(ty, Forall):
            body = patch(ty.body)
            assert not isinstance(body, Forall)
            return Forall(ty.binders, body)
        if isinstance(ty, SBase):
            if isinstance(ty.index, _Hole):
                sym = decls.fresh_symbol(len(outer), fname)
                return SBase(ty.data, IApp(sym, args))
            return ty
        if isinstance(ty, SProd):
            return SProd(patch(ty.fst), patch(ty.snd))  # type: ignore[arg-type]
        if isinstance(ty, SArrow):
            return SArrow(patch(ty.dom), patch(ty.cod))  # type: ignore[arg-type]
        return ty

    body: Monotype = res
    for d in reversed(doms):
        body = SArrow(d, body)
    patched = patch(body)
    assert not isinstance(patched, Forall)
    return Forall(tuple(outer), patched) if outer else patched


# ---------------------------------------------------------------------------
# Footprint


Context = Dict[str, SizedType]


def footprint(eq: Equation, decls: Declarations,
              supply: Optional[NameSupply] = None) -> Tuple[Context, Monotype, List[str]]:
    """Most general context and type of an equation's left-hand side.

    The function's declaration is opened with globally fresh variables;
    variable arguments extend the context, constructor-pattern arguments
    are footprinted recursively and their expected variable index is
    substituted by the pattern's index (sound because declarations are
    canonical).  Returns (context, lhs type, rigid variables in order).
    """
    supply = supply or NameSupply("r")
    fdecl = decls.types.get(eq.fun)
    if fdecl is None:
        raise SizaxError(f"no sized declaration for {eq.fun}", eq.loc)
    rigids, body = open_binders(fdecl, supply)
    doms, result = arrow_domains(body, len(eq.lhs))
    ctx: Context = {}
    remaining: List[SizedType] = list(doms)

    for pos, pat in enumerate(eq.lhs):
        dom = remaining[pos]
        if isinstance(pat, PVar):
            ctx[pat.name] = dom
            continue
        assert isinstance(pat, PCon)
        pat_ctx, pat_ty, pat_rigids = _pattern_footprint(pat, decls, supply, eq)
        rigids.extend(pat_rigids)
        if not isinstance(dom, (SBase, SProd)):
            raise NonCanonicalDeclaration(
                f"{eq.fun}: argument {pos + 1} is pattern-matched but its declared "
                f"type {pretty_sized(dom)} is not an indexed base", eq.loc)
        theta = _domain_match(dom, pat_ty, eq)
        in_ctx = set()
        for t in ctx.values():
            in_ctx |= free_vars(t)
        dangling = set(theta) & in_ctx
        if dangling:
            raise NonCanonicalDeclaration(
                f"{eq.fun}: substituted variable(s) {sorted(dangling)} also occur "
                "in earlier argument types", eq.loc)
        overlap = pat_ctx.keys() & ctx.keys()
        assert not overlap, f"non-linear lhs slipped through: {overlap}"
        ctx.update(pat_ctx)
        for later in range(pos + 1, len(remaining)):
            remaining[later] = apply_index_subst(remaining[later], theta, supply)
        result = apply_index_subst(result, theta, supply)  # type: ignore[assignment]
    assert not isinstance(result, Forall)
    return ctx, result, rigids


def _pattern_footprint(pat: PCon, decls: Declarations, supply: NameSupply,
                       eq: Equation) -> Tuple[Context, Monotype, List[str]]:
    instance = pat.ty
    assert instance is not None, "pattern not simple-typed"
    cdecl = decls.constructor_sized(pat.con, instance)
    rigids, body = open_binders(cdecl, supply)
    doms, result = arrow_domains(body, len(pat.args))
    ctx: Context = {}
    remaining = list(doms)
    for pos, sub in enumerate(pat.args):
        dom = remaining[pos]
        if isinstance(sub, PVar):
            ctx[sub.name] = dom
            continue
        assert isinstance(sub, PCon)
        sub_ctx, sub_ty, sub_rigids = _pattern_footprint(sub, decls, supply, eq)
        rigids.extend(sub_rigids)
        if not isinstance(dom, (SBase, SProd)):
            raise NonCanonicalDeclaration(
                f"{eq.fun}: constructor {pat.con} has a non-base argument "
                "that is pattern-matched", eq.loc)
        theta = _domain_match(dom, sub_ty, eq)
        ctx.update(sub_ctx)
        for later in range(pos + 1, len(remaining)):
            remaining[later] = apply_index_subst(remaining[later], theta, supply)
        result = apply_index_subst(result, theta, supply)  # type: ignore[assignment]
    assert not isinstance(result, Forall)
    return ctx, result, rigids


def _domain_match(dom: SizedType, actual: Monotype, eq: Equation) -> Dict[str, IndexTerm]:
    """Match a canonical domain (variable indices) against a pattern type."""
    theta: Dict[str, IndexTerm] = {}

    def go(d: SizedType, a: SizedType) -> None:
        if isinstance(d, SBase) and isinstance(a, SBase):
            if not isinstance(d.index, IVar):
                raise NonCanonicalDeclaration(
                    f"{eq.fun}: declared index {pretty_index(d.index)} left of an "
                    "arrow must be a variable to allow pattern matching", eq.loc)
            theta[d.index.name] = a.index
            return
        if isinstance(d, SProd) and isinstance(a, SProd):
            go(d.fst, a.fst)
            go(d.snd, a.snd)
            return
        if isinstance(d, SAtom) and isinstance(a, SAtom):
            return
        raise NonCanonicalDeclaration(
            f"{eq.fun}: cannot match pattern type {pretty_sized(a)} against "
            f"declared {pretty_sized(d)}", eq.loc)

    go(dom, actual)
    return theta


# ---------------------------------------------------------------------------
# Inference


class CheckState:
    """Traversal state shared by Generate and Semantic modes."""

    def __init__(self, decls: Declarations, mode: str = "generate",
                 interp: Optional[Interpretation] = None,
                 supply: Optional[NameSupply] = None,
                 allow_free_result: bool = False):
        assert mode in ("generate", "semantic")
        self.decls = decls
        self.mode = mode
        self.interp = interp
        self.supply = supply or NameSupply("r")
        self.constraints: List[Constraint] = []
        self.warnings: List[str] = []
        self.rigids: List[str] = []
        self.origin = Origin("<expr>", 0, "expr")
        self.allow_free_result = allow_free_result
        self.failures: List[Diagnostic] = []

    def emit(self, lhs: IndexTerm, rhs: IndexTerm, rule: str,
             loc: Optional[SrcLoc] = None) -> None:
        origin = Origin(self.origin.function, self.origin.equation, rule,
                        loc or self.origin.loc)
        c = Constraint(lhs, rhs, origin)
        self.constraints.append(c)
        if self.mode == "semantic":
            assert self.interp is not None
            if leq_semantic(self.interp, lhs, rhs) is not Leq.YES:
                witness = refute(self.interp, lhs, rhs)
                extra = ""
                if witness is not None:
                    vals = ", ".join(f"{k}={v}" for k, v in sorted(witness.env.items()))
                    extra = f" (fails at {vals})" if vals else " (fails at all-zero)"
                raise SubtypeFailure(
                    f"cannot establish {pretty_index(lhs)} <= {pretty_index(rhs)}"
                    f"{extra} [{origin}]", loc or self.origin.loc)

    def fresh_fill(self, owner: str) -> IndexTerm:
        args = tuple(IVar(v) for v in self.rigids)
        sym = self.decls.fresh_symbol(len(args), owner, prefix="X")
        return IApp(sym, args)


def infer_term(ctx: Context, term: Term, decls: Declarations, state: CheckState,
               expected: Optional[Monotype] = None) -> Monotype:
    """Type a term; instantiation by matching, subtyping only at arguments."""
    head, args = spine(term)
    return _infer_spine(ctx, head, args, expected, decls, state)


def _head_type(ctx: Context, head: Term, decls: Declarations) -> SizedType:
    if isinstance(head, Var):
        if head.name not in ctx:
            raise SizaxError(f"variable {head.name} not in context", head.loc)
        return ctx[head.name]
    if isinstance(head, Fun):
        if head.name not in decls.types:
            raise SizaxError(f"no sized declaration for {head.name}", head.loc)
        return decls.types[head.name]
    if isinstance(head, Con):
        assert head.ty is not None
        _, result = arrow_chain(head.ty)
        return decls.constructor_sized(head.name, result)
    raise SizaxError(f"cannot type {head} as a spine head", getattr(head, "loc", None))


def _infer_spine(ctx: Context, head: Term, args: List[Term],
                 expected: Optional[Monotype], decls: Declarations,
                 state: CheckState) -> Monotype:
    decl_ty = _head_type(ctx, head, decls)
    slots, body = open_binders(decl_ty, state.supply)
    st = MatchState(set(slots))
    doms, cod = arrow_domains(body, len(args))

    per_arg: List[Tuple[Monotype, List[str], Monotype, Term]] = []
    for dom, arg in zip(doms, args):
        dom_now = apply_index_subst(dom, st.subst(), state.supply)
        skolems, dom_body = open_binders(dom_now, state.supply)
        holes = st.unbound()
        arg_ty = infer_term(ctx, arg, decls, state,
                            expected=_holes_masked(dom_body, holes))
        guarded = _GuardedMatch(st, holes)
        match_type(dom_body, arg_ty, guarded.state)
        guarded.commit()
        per_arg.append((dom_body, skolems, arg_ty, arg))

    if expected is not None:
        cod_now = apply_index_subst(cod, st.subst(), state.supply)
        guarded = _GuardedMatch(st, set())
        match_type(cod_now, expected, guarded.state)
        guarded.commit()

    theta = st.subst()
    for name in sorted(st.unbound()):
        if state.allow_free_result and expected is None:
            continue  # stays a free variable, re-generalized by the caller
        theta[name] = state.fresh_fill(state.origin.function)
    state.warnings.extend(st.warnings)

    for dom_body, skolems, arg_ty, arg in per_arg:
        dom_final = apply_index_subst(dom_body, theta, state.supply)
        assert not isinstance(dom_final, Forall)
        _check_generalisation(ctx, skolems, arg, state)
        rule = f"app:{_describe_head(head)}"
        for lhs, rhs in subtype_pairs(arg_ty, dom_final, state.supply):
            state.emit(lhs, rhs, rule, getattr(arg, "loc", None))

    out = apply_index_subst(cod, theta, state.supply)
    assert not isinstance(out, Forall)
    return out


class _GuardedMatch:
    """Wrap a MatchState so bindings never mention hole variables."""

    def __init__(self, st: MatchState, holes: Set[str]):
        self.target = st
        self.holes = holes
        self.state = MatchState(st.bindable)
        self.state.bindings = dict(st.bindings)
        self.state.warnings = st.warnings  # shared

    def commit(self) -> None:
        for k, v in self.state.bindings.items():
            if k in self.target.bindings:
                continue
            if v.free_vars() & self.holes:
                continue
            self.target.bindings[k] = v


def _holes_masked(dom_body: Monotype, holes: Set[str]) -> Optional[Monotype]:
    # The expected type is only a matching hint; holes are fine to keep
    # since the argument's matcher is guarded against binding to them.
    return dom_body


def _describe_head(head: Term) -> str:
    return getattr(head, "name", "?")


def _check_generalisation(ctx: Context, skolems: List[str], arg: Term,
                          state: CheckState) -> None:
    if not skolems:
        return
    used = set(term_vars(arg))
    restricted: Set[str] = set()
    for v in used:
        if v in ctx:
            restricted |= free_vars(ctx[v])
    bad = set(skolems) & restricted
    if bad:
        raise GeneralisationViolation(
            f"quantified variable(s) {sorted(bad)} escape into the context of "
            f"the argument {arg}", getattr(arg, "loc", None))


# ---------------------------------------------------------------------------
# Equation and program checking


def check_equation(eq: Equation, eq_index: int, decls: Declarations,
                   state: CheckState) -> None:
    ctx, lhs_ty, rigids = footprint(eq, decls, state.supply)
    state.rigids = rigids
    state.origin = Origin(eq.fun, eq_index, "equation", eq.loc)
    rhs_ty = infer_term(ctx, eq.rhs, decls, state, expected=lhs_ty)
    for lhs, rhs in subtype_pairs(rhs_ty, lhs_ty, state.supply):
        state.emit(lhs, rhs, "result", eq.loc)


def check_program(program: Program, decls: Declarations, mode: str = "generate",
                  interp: Optional[Interpretation] = None
                  ) -> Tuple[ConstraintSet, List[Diagnostic]]:
    """Check every equation; constraints are tagged with call-graph SCCs.

    Within an SCC, recursive calls re-instantiate the same declaration per
    call site (size-polymorphic recursion).  In semantic mode failed
    inequalities become diagnostics instead of constraints being collected.
    """
    cs = ConstraintSet()
    cs.call_edges = call_graph(program)
    sccs = scc_condensation(program)
    cs.function_sccs = sccs
    for i, comp in enumerate(sccs):
        for fn in comp:
            cs.scc_of_function[fn] = i
    diagnostics: List[Diagnostic] = list(decls.diagnostics)

    supply = NameSupply("r")
    for i, comp in enumerate(sccs):
        for fn in comp:
            f = program.functions[fn]
            for k, eq in enumerate(f.equations, start=1):
                state = CheckState(decls, mode=mode, interp=interp, supply=supply)
                try:
                    check_equation(eq, k, decls, state)
                except (SubtypeFailure, SkeletonMismatch, NonCanonicalDeclaration,
                        GeneralisationViolation, SizaxError) as e:
                    diagnostics.append(Diagnostic(
                        type(e).__name__, str(e), eq.loc))
                    continue
                finally:
                    for w in state.warnings:
                        diagnostics.append(Diagnostic("MatchAmbiguity", w, eq.loc,
                                                      severity="warning"))
                for c in state.constraints:
                    cs.add(c)
    for fn, syms in decls.template_symbols.items():
        for s in syms:
            cs.owners[s] = fn
    return cs, diagnostics


def infer_expression(text_term: Term, decls: Declarations
                     ) -> Tuple[SizedType, List[Constraint]]:
    """Type a closed expression; undetermined quantifiers stay polymorphic."""
    state = CheckState(decls, mode="generate", allow_free_result=True)
    state.origin = Origin("<expr>", 0, "expr")
    ty = infer_term({}, text_term, decls, state, expected=None)
    binders = tuple(sorted(free_vars(ty)))
    out: SizedType = Forall(binders, ty) if binders else ty
    return out, state.constraints
