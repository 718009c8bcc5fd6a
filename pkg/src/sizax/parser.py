"""Surface syntax parser and lambda lifting.

One declaration or equation per logical line; a line starting with
whitespace continues the previous one.  `--` starts a comment.  Grammar:

    data Color = Red | Green | Blue
    append :: List a -> List a -> List a
    append ::: forall i j. L i a -> L j a -> L (i+j) a
    append [] ys = ys
    append (x : xs) ys = x : append xs ys

Lambdas `\\x y. e` are accepted and lifted to fresh top-level functions
before the program is returned; captured variables become leading
parameters in order of first occurrence.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .errors import ParseError, SrcLoc
from .indexterms import (
    BUILTINS, IApp, IVar, IndexSymbol, IndexTerm, inat, iplus, imul,
)
from .lang import (
    App, Con, ConstructorDecl, DataDecl, Equation, Fun, FunctionDef, Lam,
    PAIR_NAME, PCon, PVar, Pattern, Program, RESERVED_CONSTRUCTORS,
    RESERVED_TYPES, SimpleType, TArrow, TData, TProd, TVar, Term, Var,
    BUILTIN_DATATYPES, make_app,
)

REJECTED_KEYWORDS = {"if", "then", "else", "case", "of", "let", "in", "where"}


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT CONID NUM PUNCT EOF
    text: str
    loc: SrcLoc


_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+)
      | (?P<num>\d+)
      | (?P<ident>[a-z_][A-Za-z0-9_'\#]*)
      | (?P<conid>[A-Z][A-Za-z0-9_'\#]*)
      | (?P<punct>:::|::|->|<=|[()\[\],=\\.:+*|])
    """,
    re.VERBOSE,
)


def tokenize(text: str, file: str = "<input>", line_offset: int = 0) -> List[Token]:
    tokens: List[Token] = []
    line = 1 + line_offset
    col = 1
    i = 0
    while i < len(text):
        if text.startswith("--", i):
            nl = text.find("\n", i)
            if nl < 0:
                break
            i = nl
            continue
        m = _TOKEN_RE.match(text, i)
        if not m:
            raise ParseError(f"unexpected character {text[i]!r}", SrcLoc(line, col, file))
        loc = SrcLoc(line, col, file)
        chunk = m.group(0)
        if m.lastgroup == "num":
            tokens.append(Token("NUM", chunk, loc))
        elif m.lastgroup == "ident":
            tokens.append(Token("IDENT", chunk, loc))
        elif m.lastgroup == "conid":
            tokens.append(Token("CONID", chunk, loc))
        elif m.lastgroup == "punct":
            tokens.append(Token("PUNCT", chunk, loc))
        for ch in chunk:
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1
        i = m.end()
    tokens.append(Token("EOF", "", SrcLoc(line, col, file)))
    return tokens


class TokenStream:
    def __init__(self, tokens: List[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        t = self.tokens[self.pos]
        if t.kind != "EOF":
            self.pos += 1
        return t

    def at(self, text: str) -> bool:
        return self.peek().text == text and self.peek().kind != "EOF"

    def at_kind(self, kind: str) -> bool:
        return self.peek().kind == kind

    def expect(self, text: str) -> Token:
        t = self.peek()
        if t.text != text or t.kind == "EOF":
            raise ParseError(f"expected {text!r}, found {t.text!r}", t.loc)
        return self.next()

    def done(self) -> bool:
        return self.peek().kind == "EOF"


# ---------------------------------------------------------------------------
# Simple types


def parse_simple_type(ts: TokenStream, datatypes: Dict[str, DataDecl]) -> SimpleType:
    left = _simple_btype(ts, datatypes)
    if ts.at("->"):
        ts.next()
        return TArrow(left, parse_simple_type(ts, datatypes))
    return left


def _simple_btype(ts: TokenStream, datatypes: Dict[str, DataDecl]) -> SimpleType:
    t = ts.peek()
    if t.kind == "CONID":
        ts.next()
        name = "List" if t.text == "L" else t.text
        decl = datatypes.get(name)
        if decl is None:
            raise ParseError(f"unknown type {t.text!r}", t.loc)
        args = tuple(_simple_atom(ts, datatypes) for _ in decl.params)
        return TData(name, args)
    return _simple_atom(ts, datatypes)


def _simple_atom(ts: TokenStream, datatypes: Dict[str, DataDecl]) -> SimpleType:
    t = ts.peek()
    if t.kind == "IDENT":
        if t.text in REJECTED_KEYWORDS:
            raise ParseError(f"{t.text!r} is not supported", t.loc)
        ts.next()
        return TVar(t.text)
    if t.kind == "CONID":
        name = "List" if t.text == "L" else t.text
        decl = datatypes.get(name)
        if decl is None:
            raise ParseError(f"unknown type {t.text!r}", t.loc)
        if decl.params:
            raise ParseError(f"type {name} needs {len(decl.params)} argument(s)", t.loc)
        ts.next()
        return TData(name)
    if t.text == "(":
        ts.next()
        first = parse_simple_type(ts, datatypes)
        if ts.at(","):
            ts.next()
            second = parse_simple_type(ts, datatypes)
            ts.expect(")")
            return TProd(first, second)
        ts.expect(")")
        return first
    raise ParseError(f"expected a type, found {t.text!r}", t.loc)


# ---------------------------------------------------------------------------
# Index terms


def parse_index_expr(ts: TokenStream) -> IndexTerm:
    left = _index_mul(ts)
    while ts.at("+"):
        ts.next()
        left = iplus(left, _index_mul(ts))
    return left


def _index_mul(ts: TokenStream) -> IndexTerm:
    left = _index_atom(ts)
    while ts.at("*"):
        ts.next()
        left = imul(left, _index_atom(ts))
    return left


def _index_atom(ts: TokenStream) -> IndexTerm:
    t = ts.peek()
    if t.kind == "NUM":
        ts.next()
        return inat(int(t.text))
    if t.kind in ("IDENT", "CONID"):
        ts.next()
        if ts.at("("):
            ts.next()
            args: List[IndexTerm] = []
            if not ts.at(")"):
                args.append(parse_index_expr(ts))
                while ts.at(","):
                    ts.next()
                    args.append(parse_index_expr(ts))
            ts.expect(")")
            if t.text == "s":
                if len(args) != 1:
                    raise ParseError("s(_) takes one argument", t.loc)
                return IApp(BUILTINS["s"], tuple(args))
            sym = IndexSymbol(t.text, len(args))
            return IApp(sym, tuple(args))
        return IVar(t.text)
    if t.text == "(":
        ts.next()
        inner = parse_index_expr(ts)
        ts.expect(")")
        return inner
    raise ParseError(f"expected an index term, found {t.text!r}", t.loc)


def parse_index_term(text: str) -> IndexTerm:
    ts = TokenStream(tokenize(text))
    out = parse_index_expr(ts)
    if not ts.done():
        raise ParseError(f"trailing input {ts.peek().text!r}", ts.peek().loc)
    return out


# ---------------------------------------------------------------------------
# Terms and patterns


def parse_term(ts: TokenStream, known_funs: set, bound: set,
               datatypes: Dict[str, DataDecl]) -> Term:
    return _term_cons(ts, known_funs, bound, datatypes)


def _term_cons(ts, known_funs, bound, datatypes) -> Term:
    left = _term_app(ts, known_funs, bound, datatypes)
    if ts.at(":") :
        loc = ts.peek().loc
        ts.next()
        right = _term_cons(ts, known_funs, bound, datatypes)
        return make_app(Con("Cons", loc=loc), [left, right], loc=loc)
    return left


def _term_app(ts, known_funs, bound, datatypes) -> Term:
    head = _term_atom(ts, known_funs, bound, datatypes)
    while _starts_atom(ts):
        arg = _term_atom(ts, known_funs, bound, datatypes)
        head = App(head, arg, loc=_loc_of(head))
    return head


def _loc_of(t: Term) -> Optional[SrcLoc]:
    return getattr(t, "loc", None)


def _starts_atom(ts: TokenStream) -> bool:
    t = ts.peek()
    if t.kind in ("IDENT", "CONID", "NUM"):
        return True
    return t.text in ("(", "[", "\\")


def _term_atom(ts, known_funs, bound, datatypes) -> Term:
    t = ts.peek()
    if t.kind == "NUM":
        ts.next()
        return _nat_term(int(t.text), t.loc)
    if t.kind == "IDENT":
        if t.text in REJECTED_KEYWORDS:
            raise ParseError(
                f"{t.text!r} expressions are not part of the language; "
                "use pattern-matching equations instead", t.loc)
        ts.next()
        if t.text in bound:
            return Var(t.text, loc=t.loc)
        if t.text in known_funs:
            return Fun(t.text, loc=t.loc)
        raise ParseError(f"unknown identifier {t.text!r}", t.loc)
    if t.kind == "CONID":
        ts.next()
        if t.text == "Zero":
            return Con("Zero", loc=t.loc)
        return Con(t.text, loc=t.loc)
    if t.text == "[":
        ts.next()
        loc = t.loc
        elems: List[Term] = []
        if not ts.at("]"):
            elems.append(parse_term(ts, known_funs, bound, datatypes))
            while ts.at(","):
                ts.next()
                elems.append(parse_term(ts, known_funs, bound, datatypes))
        ts.expect("]")
        out: Term = Con("Nil", loc=loc)
        for e in reversed(elems):
            out = make_app(Con("Cons", loc=loc), [e, out], loc=loc)
        return out
    if t.text == "(":
        ts.next()
        if ts.at(":"):
            colon = ts.next()
            ts.expect(")")
            return Con("Cons", loc=colon.loc)
        first = parse_term(ts, known_funs, bound, datatypes)
        if ts.at(","):
            ts.next()
            second = parse_term(ts, known_funs, bound, datatypes)
            ts.expect(")")
            return make_app(Con(PAIR_NAME, loc=t.loc), [first, second], loc=t.loc)
        ts.expect(")")
        return first
    if t.text == "\\":
        ts.next()
        params: List[str] = []
        while ts.at_kind("IDENT"):
            params.append(ts.next().text)
        ts.expect(".")
        body = parse_term(ts, known_funs, bound | set(params), datatypes)
        return Lam(tuple(params), body, loc=t.loc)
    raise ParseError(f"expected a term, found {t.text!r}", t.loc)


def _nat_term(n: int, loc: SrcLoc) -> Term:
    out: Term = Con("Zero", loc=loc)
    for _ in range(n):
        out = App(Con("Succ", loc=loc), out, loc=loc)
    return out


def parse_pattern_atom(ts: TokenStream, datatypes) -> Pattern:
    t = ts.peek()
    if t.kind == "IDENT":
        ts.next()
        return PVar(t.text, loc=t.loc)
    if t.kind == "NUM":
        ts.next()
        return _nat_pattern(int(t.text), t.loc)
    if t.kind == "CONID":
        ts.next()
        name = "Zero" if t.text == "Zero" else t.text
        return PCon(name, (), loc=t.loc)
    if t.text == "[":
        ts.next()
        ts.expect("]")
        return PCon("Nil", (), loc=t.loc)
    if t.text == "(":
        ts.next()
        inner = _pattern_full(ts, datatypes)
        if ts.at(","):
            ts.next()
            second = _pattern_full(ts, datatypes)
            ts.expect(")")
            return PCon(PAIR_NAME, (inner, second), loc=t.loc)
        ts.expect(")")
        return inner
    raise ParseError(f"expected a pattern, found {t.text!r}", t.loc)


def _pattern_full(ts: TokenStream, datatypes) -> Pattern:
    t = ts.peek()
    if t.kind == "CONID":
        ts.next()
        args: List[Pattern] = []
        while ts.peek().kind in ("IDENT", "CONID", "NUM") or ts.peek().text in ("(", "["):
            args.append(parse_pattern_atom(ts, datatypes))
        left: Pattern = PCon(t.text, tuple(args), loc=t.loc)
    else:
        left = parse_pattern_atom(ts, datatypes)
    if ts.at(":"):
        loc = ts.next().loc
        right = _pattern_full(ts, datatypes)
        return PCon("Cons", (left, right), loc=loc)
    return left


def _nat_pattern(n: int, loc: SrcLoc) -> Pattern:
    out: Pattern = PCon("Zero", (), loc=loc)
    for _ in range(n):
        out = PCon("Succ", (out,), loc=loc)
    return out


# ---------------------------------------------------------------------------
# Program parsing


def _logical_lines(text: str, file: str) -> List[Tuple[int, str]]:
    """Join indented continuation lines; returns (line_number, text) pairs."""
    out: List[Tuple[int, str]] = []
    for num, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("--", 1)[0].rstrip()
        if not stripped.strip():
            continue
        if raw[:1].isspace() and out:
            prev_num, prev = out[-1]
            out[-1] = (prev_num, prev + " " + stripped.strip())
        else:
            out.append((num, stripped))
    return out


def parse_program(text: str, file: str = "<input>") -> Program:
    """Parse surface text into a Program; lambdas are lifted to top level."""
    program = Program(source_name=file)
    program.datatypes = dict(BUILTIN_DATATYPES)
    lines = _logical_lines(text, file)

    # Pass 1: datatype declarations and function name discovery.
    pending: List[Tuple[int, str, List[Token]]] = []
    fun_names: List[str] = []
    for num, line in lines:
        toks = tokenize(line, file, line_offset=num - 1)
        if toks[0].text == "data":
            _parse_data_decl(TokenStream(toks), program)
            continue
        pending.append((num, line, toks))
        head = toks[0]
        if head.kind == "IDENT" and head.text not in fun_names:
            fun_names.append(head.text)
        elif head.kind != "IDENT":
            raise ParseError("a declaration or equation must start with a name", head.loc)
    known = set(fun_names)
    constructors = {c.name for d in program.datatypes.values() for c in d.constructors}
    clash = known & constructors
    if clash:
        raise ParseError(f"function names clash with constructors: {sorted(clash)}")

    # Pass 2: signatures, sized annotations, equations.
    for num, line, toks in pending:
        ts = TokenStream(toks)
        name_tok = ts.next()
        name = name_tok.text
        fdef = program.functions.get(name)
        if fdef is None:
            fdef = FunctionDef(name=name, signature=None, loc=name_tok.loc)
            program.functions[name] = fdef
            program.order.append(name)
        if ts.at("::"):
            ts.next()
            sig = parse_simple_type(ts, program.datatypes)
            if not ts.done():
                raise ParseError(f"trailing input {ts.peek().text!r}", ts.peek().loc)
            if fdef.signature is not None:
                raise ParseError(f"duplicate signature for {name}", name_tok.loc)
            fdef.signature = sig
            continue
        if ts.at(":::"):
            ts.next()
            rest = line.split(":::", 1)[1].strip()
            if fdef.sized_annotation is not None:
                raise ParseError(f"duplicate sized annotation for {name}", name_tok.loc)
            fdef.sized_annotation = rest
            continue
        # Equation: patterns then '=' then rhs.
        patterns: List[Pattern] = []
        while not ts.at("="):
            patterns.append(parse_pattern_atom(ts, program.datatypes))
        ts.expect("=")
        pvars = []
        for p in patterns:
            from .lang import pattern_vars
            pvars.extend(pattern_vars(p))
        rhs = parse_term(ts, known, set(pvars), program.datatypes)
        if not ts.done():
            raise ParseError(f"trailing input {ts.peek().text!r}", ts.peek().loc)
        eq = Equation(fun=name, lhs=tuple(patterns), rhs=rhs, loc=name_tok.loc)
        fdef.equations.append(eq)

    for name in program.order:
        f = program.functions[name]
        if not f.equations and f.signature is None:
            raise ParseError(f"{name} has a sized annotation but no definition")
        arities = {len(eq.lhs) for eq in f.equations}
        if len(arities) > 1:
            raise ParseError(
                f"{name} has equations with different numbers of patterns", f.loc)

    _lift_lambdas(program)
    _validate_constructor_arities(program)
    return program


def _parse_data_decl(ts: TokenStream, program: Program) -> None:
    ts.expect("data")
    name_tok = ts.next()
    if name_tok.kind != "CONID":
        raise ParseError("datatype name must start upper-case", name_tok.loc)
    if name_tok.text in RESERVED_TYPES or name_tok.text in program.datatypes:
        raise ParseError(f"type name {name_tok.text!r} is reserved or duplicate", name_tok.loc)
    ts.expect("=")
    result = TData(name_tok.text)
    cons: List[ConstructorDecl] = []
    while True:
        con_tok = ts.next()
        if con_tok.kind != "CONID":
            raise ParseError("constructor name must start upper-case", con_tok.loc)
        if con_tok.text in RESERVED_CONSTRUCTORS:
            raise ParseError(f"constructor name {con_tok.text!r} is reserved", con_tok.loc)
        args: List[SimpleType] = []
        while not ts.done() and not ts.at("|"):
            args.append(_simple_atom(ts, program.datatypes | {name_tok.text: DataDecl(name_tok.text, (), ())}))
        cons.append(ConstructorDecl(con_tok.text, tuple(args), result))
        if ts.at("|"):
            ts.next()
            continue
        break
    seen = set()
    for c in cons:
        if c.name in seen:
            raise ParseError(f"duplicate constructor {c.name}", name_tok.loc)
        seen.add(c.name)
    program.datatypes[name_tok.text] = DataDecl(name_tok.text, (), tuple(cons))


def _validate_constructor_arities(program: Program) -> None:
    def check_pattern(p: Pattern) -> None:
        if isinstance(p, PCon):
            if p.con == PAIR_NAME:
                expected = 2
            else:
                decl = program.constructor_decl(p.con)
                if decl is None:
                    raise ParseError(f"unknown constructor {p.con!r}", p.loc)
                expected = decl.arity
            if len(p.args) != expected:
                raise ParseError(
                    f"constructor {p.con} expects {expected} argument(s) in a pattern, "
                    f"got {len(p.args)}", p.loc)
            for a in p.args:
                check_pattern(a)

    def check_term(t: Term) -> None:
        if isinstance(t, App):
            check_term(t.fn)
            check_term(t.arg)
        elif isinstance(t, Con):
            if t.name != PAIR_NAME and program.constructor_decl(t.name) is None:
                raise ParseError(f"unknown constructor {t.name!r}", t.loc)

    for f in program.functions.values():
        for eq in f.equations:
            for p in eq.lhs:
                check_pattern(p)
            check_term(eq.rhs)


# ---------------------------------------------------------------------------
# Lambda lifting


def _lift_lambdas(program: Program) -> None:
    from .lang import pattern_vars, term_vars

    new_functions: List[FunctionDef] = []

    def lift(term: Term, enclosing: str, bound: Tuple[str, ...]) -> Term:
        if isinstance(term, App):
            return App(lift(term.fn, enclosing, bound),
                       lift(term.arg, enclosing, bound), loc=term.loc)
        if isinstance(term, Lam):
            body = lift(term.body, enclosing, bound + term.params)
            free = [v for v in term_vars(body)
                    if v not in term.params and v in bound]
            name = program.fresh_function_name(f"{enclosing}_lam")
            params = tuple(free) + term.params
            eq = Equation(fun=name,
                          lhs=tuple(PVar(v) for v in params),
                          rhs=body, loc=term.loc)
            fdef = FunctionDef(name=name, signature=None, equations=[eq],
                               generated=True, loc=term.loc)
            program.functions[name] = fdef
            new_functions.append(fdef)
            return make_app(Fun(name, loc=term.loc),
                            [Var(v, loc=term.loc) for v in free], loc=term.loc)
        return term

    for fname in list(program.order):
        f = program.functions[fname]
        for i, eq in enumerate(f.equations):
            bound = []
            for p in eq.lhs:
                bound.extend(pattern_vars(p))
            new_rhs = lift(eq.rhs, fname, tuple(bound))
            if new_rhs is not eq.rhs:
                f.equations[i] = Equation(eq.fun, eq.lhs, new_rhs, eq.loc)
    for fdef in new_functions:
        program.order.append(fdef.name)


def parse_ground_term(text: str, program: Program) -> Term:
    """Parse a closed constructor-only term (CLI input literals)."""
    ts = TokenStream(tokenize(text))
    term = parse_term(ts, known_funs=set(), bound=set(), datatypes=program.datatypes)
    if not ts.done():
        raise ParseError(f"trailing input {ts.peek().text!r}", ts.peek().loc)
    return term
