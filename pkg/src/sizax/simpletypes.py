"""Church-style simple type checking.

Every term and pattern node gets annotated with its monomorphic type.
The only inference performed is local: builtin constructor families
(lists, pairs) are instantiated per use site, lambda-lifted helpers get
their signatures derived, both via unification metavariables that must
all be resolved by the end of the program.  Type variables from user
signatures are rigid, file-scoped atoms.
"""

from __future__ import annotations

from typing import Dict, List, Optional, Tuple

from .errors import SimpleTypeError, SrcLoc
from .lang import (
    App, Con, Equation, Fun, FunctionDef, Lam, PAIR_NAME, PCon, PVar, Pattern,
    Program, SimpleType, TArrow, TData, TMeta, TProd, TVar, Term, Var,
    arrow_chain, constructor_instance, instantiate_simple, make_arrow,
)


class _Unifier:
    def __init__(self):
        self.subst: Dict[int, SimpleType] = {}
        self.counter = 0

    def fresh(self) -> TMeta:
        self.counter += 1
        return TMeta(self.counter)

    def resolve(self, ty: SimpleType) -> SimpleType:
        while isinstance(ty, TMeta) and ty.ident in self.subst:
            ty = self.subst[ty.ident]
        return ty

    def zonk(self, ty: SimpleType) -> SimpleType:
        ty = self.resolve(ty)
        if isinstance(ty, TData):
            return TData(ty.name, tuple(self.zonk(a) for a in ty.args))
        if isinstance(ty, TProd):
            return TProd(self.zonk(ty.fst), self.zonk(ty.snd))
        if isinstance(ty, TArrow):
            return TArrow(self.zonk(ty.dom), self.zonk(ty.cod))
        return ty

    def _occurs(self, ident: int, ty: SimpleType) -> bool:
        ty = self.resolve(ty)
        if isinstance(ty, TMeta):
            return ty.ident == ident
        if isinstance(ty, TData):
            return any(self._occurs(ident, a) for a in ty.args)
        if isinstance(ty, TProd):
            return self._occurs(ident, ty.fst) or self._occurs(ident, ty.snd)
        if isinstance(ty, TArrow):
            return self._occurs(ident, ty.dom) or self._occurs(ident, ty.cod)
        return False

    def unify(self, a: SimpleType, b: SimpleType, loc: Optional[SrcLoc],
              what: str) -> None:
        a, b = self.resolve(a), self.resolve(b)
        if isinstance(a, TMeta):
            if isinstance(b, TMeta) and b.ident == a.ident:
                return
            if self._occurs(a.ident, b):
                raise SimpleTypeError(f"{what}: circular type", loc)
            self.subst[a.ident] = b
            return
        if isinstance(b, TMeta):
            self.unify(b, a, loc, what)
            return
        if isinstance(a, TVar) and isinstance(b, TVar) and a.name == b.name:
            return
        if isinstance(a, TData) and isinstance(b, TData) and a.name == b.name:
            for x, y in zip(a.args, b.args):
                self.unify(x, y, loc, what)
            return
        if isinstance(a, TProd) and isinstance(b, TProd):
            self.unify(a.fst, b.fst, loc, what)
            self.unify(a.snd, b.snd, loc, what)
            return
        if isinstance(a, TArrow) and isinstance(b, TArrow):
            self.unify(a.dom, b.dom, loc, what)
            self.unify(a.cod, b.cod, loc, what)
            return
        raise SimpleTypeError(
            f"{what}: expected {self.zonk(a)}, found {self.zonk(b)}", loc)


def _constructor_scheme(program: Program, con: str, uni: _Unifier,
                        loc: Optional[SrcLoc]) -> Tuple[List[SimpleType], SimpleType]:
    """Argument and result types of a constructor use, metavars for params."""
    if con == PAIR_NAME:
        a, b = uni.fresh(), uni.fresh()
        return [a, b], TProd(a, b)
    data = program.datatype_of_constructor(con)
    decl = program.constructor_decl(con)
    if decl is None or data is None:
        raise SimpleTypeError(f"unknown constructor {con}", loc)
    subst = {p: uni.fresh() for p in data.params}
    args = [instantiate_simple(t, subst) for t in decl.arg_types]
    result = instantiate_simple(decl.result, subst)
    return args, result


def simple_typecheck(program: Program) -> Program:
    """Annotate every term/pattern node; raises SimpleTypeError on failure."""
    uni = _Unifier()
    signatures: Dict[str, SimpleType] = {}
    for name, f in program.functions.items():
        if f.signature is not None:
            signatures[name] = f.signature
        else:
            if not f.generated:
                raise SimpleTypeError(f"{name} needs a type signature", f.loc)
            signatures[name] = uni.fresh()

    annotated: Dict[str, List[Equation]] = {}
    for name in program.order:
        f = program.functions[name]
        new_eqs = []
        for eq in f.equations:
            new_eqs.append(_check_equation(program, f, eq, signatures, uni))
        annotated[name] = new_eqs

    # All metavariables must be resolved (no ambiguity left).
    for name in program.order:
        f = program.functions[name]
        sig = uni.zonk(signatures[name])
        if _has_meta(sig):
            raise SimpleTypeError(
                f"could not determine the type of {name}; add a signature", f.loc)
        f.signature = sig
        f.equations = [_zonk_equation(uni, eq, f, name) for eq in annotated[name]]
    return program


def _has_meta(ty: SimpleType) -> bool:
    if isinstance(ty, TMeta):
        return True
    if isinstance(ty, TData):
        return any(_has_meta(a) for a in ty.args)
    if isinstance(ty, TProd):
        return _has_meta(ty.fst) or _has_meta(ty.snd)
    if isinstance(ty, TArrow):
        return _has_meta(ty.dom) or _has_meta(ty.cod)
    return False


def _check_equation(program: Program, f: FunctionDef, eq: Equation,
                    signatures: Dict[str, SimpleType], uni: _Unifier) -> Equation:
    arity = len(eq.lhs)
    doms = [uni.fresh() for _ in range(arity)]
    result = uni.fresh()
    uni.unify(signatures[eq.fun], make_arrow(doms, result), eq.loc,
              f"{eq.fun}: signature vs equation shape")

    env: Dict[str, SimpleType] = {}
    lhs = []
    for pat, dom in zip(eq.lhs, doms):
        lhs.append(_check_pattern(program, pat, dom, env, uni, eq.fun))
    rhs = _check_term(program, eq.rhs, env, signatures, uni)
    uni.unify(result, _type_of(rhs), eq.loc, f"{eq.fun}: right-hand side type")
    return Equation(eq.fun, tuple(lhs), rhs, eq.loc)


def _check_pattern(program: Program, p: Pattern, expected: SimpleType,
                   env: Dict[str, SimpleType], uni: _Unifier, fname: str) -> Pattern:
    if isinstance(p, PVar):
        env[p.name] = expected
        return PVar(p.name, ty=expected, loc=p.loc)
    assert isinstance(p, PCon)
    args, result = _constructor_scheme(program, p.con, uni, p.loc)
    if len(args) != len(p.args):
        raise SimpleTypeError(
            f"{fname}: constructor {p.con} expects {len(args)} pattern argument(s)",
            p.loc)
    if p.con != PAIR_NAME and not isinstance(uni.resolve(expected), (TData, TMeta)):
        raise SimpleTypeError(
            f"{fname}: only datatype values can be pattern-matched, "
            f"found {uni.zonk(expected)}", p.loc)
    uni.unify(expected, result, p.loc, f"{fname}: pattern {p.con}")
    sub = [
        _check_pattern(program, q, t, env, uni, fname)
        for q, t in zip(p.args, args)
    ]
    return PCon(p.con, tuple(sub), ty=result, loc=p.loc)


def _check_term(program: Program, t: Term, env: Dict[str, SimpleType],
                signatures: Dict[str, SimpleType], uni: _Unifier) -> Term:
    if isinstance(t, Var):
        if t.name not in env:
            raise SimpleTypeError(f"unbound variable {t.name}", t.loc)
        return Var(t.name, ty=env[t.name], loc=t.loc)
    if isinstance(t, Fun):
        if t.name not in signatures:
            raise SimpleTypeError(f"unknown function {t.name}", t.loc)
        return Fun(t.name, ty=signatures[t.name], loc=t.loc)
    if isinstance(t, Con):
        args, result = _constructor_scheme(program, t.name, uni, t.loc)
        return Con(t.name, ty=make_arrow(args, result), loc=t.loc)
    if isinstance(t, Lam):
        raise SimpleTypeError("internal: lambda survived lifting", t.loc)
    assert isinstance(t, App)
    fn = _check_term(program, t.fn, env, signatures, uni)
    arg = _check_term(program, t.arg, env, signatures, uni)
    res = uni.fresh()
    uni.unify(_type_of(fn), TArrow(_type_of(arg), res), t.loc, "application")
    return App(fn, arg, ty=res, loc=t.loc)


def _type_of(t: Term) -> SimpleType:
    ty = getattr(t, "ty", None)
    assert ty is not None, f"missing type on {t}"
    return ty


def _zonk_equation(uni: _Unifier, eq: Equation, f: FunctionDef, fname: str) -> Equation:
    def zt(t: Term) -> Term:
        if isinstance(t, Var):
            return Var(t.name, uni.zonk(_type_of(t)), t.loc)
        if isinstance(t, Fun):
            return Fun(t.name, uni.zonk(_type_of(t)), t.loc)
        if isinstance(t, Con):
            ty = uni.zonk(_type_of(t))
            if _has_meta(ty):
                raise SimpleTypeError(
                    f"{fname}: ambiguous element type for constructor {t.name}; "
                    "add annotations", t.loc)
            return Con(t.name, ty, t.loc)
        assert isinstance(t, App)
        ty = uni.zonk(_type_of(t))
        if _has_meta(ty):
            raise SimpleTypeError(f"{fname}: ambiguous type in expression", t.loc)
        return App(zt(t.fn), zt(t.arg), ty, t.loc)

    def zp(p: Pattern) -> Pattern:
        if isinstance(p, PVar):
            ty = uni.zonk(_type_of_p(p))
            if _has_meta(ty):
                raise SimpleTypeError(f"{fname}: ambiguous pattern variable {p.name}", p.loc)
            return PVar(p.name, ty, p.loc)
        assert isinstance(p, PCon)
        ty = uni.zonk(_type_of_p(p))
        if _has_meta(ty):
            raise SimpleTypeError(f"{fname}: ambiguous pattern constructor {p.con}", p.loc)
        return PCon(p.con, tuple(zp(a) for a in p.args), ty, p.loc)

    return Equation(eq.fun, tuple(zp(p) for p in eq.lhs), zt(eq.rhs), eq.loc)


def _type_of_p(p: Pattern) -> SimpleType:
    ty = getattr(p, "ty", None)
    assert ty is not None
    return ty


def assert_application_invariant(program: Program) -> None:
    """After checking, every application node relates arrow/arg/result exactly."""
    def go(t: Term) -> None:
        if isinstance(t, App):
            fn_ty = _type_of(t.fn)
            assert isinstance(fn_ty, TArrow), fn_ty
            assert fn_ty.dom == _type_of(t.arg), (fn_ty.dom, _type_of(t.arg))
            assert fn_ty.cod == _type_of(t), (fn_ty.cod, _type_of(t))
            go(t.fn)
            go(t.arg)

    for f in program.functions.values():
        for eq in f.equations:
            go(eq.rhs)
