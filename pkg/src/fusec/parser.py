"""Parser for the `.fuse` source format (grammar in docs/grammar.md).

Hand-rolled recursive descent over a regex tokenizer; errors carry line and
column.  Functor and type names are resolved to their definitions during
parsing, so the resulting AST is fully structural, and every parsed term is
alpha-normalized (all binders distinct).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .syntax import (
    Add, Ana, App, Arrow, Build, Case, Cata, Cobuild, Compose, Const, Forall,
    FProd, FSum, FunctorDecl, FunctorExpr, ID, Inl, InMu, Inr, Lam, Let, Mu,
    NAT, NatLit, Nu, OutMu, OutNu, Pair, Prod, Program, Proj1, Proj2, Rec,
    Sum, Term, TermDecl, TmVar, TyApp, TyLam, TypeDecl, TypeExpr, TVar, UNIT,
    UnitVal, alpha_normalize, functor_from_type, normalize_functor,
)


class ParseError(Exception):
    def __init__(self, msg: str, line: int, col: int):
        self.line = line
        self.col = col
        super().__init__(f"{msg} at line {line}, column {col}")


KEYWORDS = {
    "functor", "type", "def", "rec", "fun", "tyfun", "let", "in", "case",
    "of", "inl", "inr", "fst", "snd", "fold", "unfold", "build", "cobuild",
    "out", "outmu", "forall", "mu", "nu", "Unit", "Nat",
}

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<comment>--[^\n]*)
  | (?P<inbr>in\[)
  | (?P<name>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<num>\d+)
  | (?P<sym>@\[|=>|->|[=+*.()\[\]{}|:,])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str   # "name" | "num" | "sym" | "eof"
    text: str
    line: int
    col: int


def tokenize(src: str) -> list[Token]:
    out: list[Token] = []
    line, col, pos = 1, 1, 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", line, col)
        text = m.group(0)
        kind = m.lastgroup
        if kind == "inbr":
            out.append(Token("sym", "in[", line, col))
        elif kind == "name":
            out.append(Token("name", text, line, col))
        elif kind == "num":
            out.append(Token("num", text, line, col))
        elif kind == "sym":
            out.append(Token("sym", text, line, col))
        nl = text.count("\n")
        if nl:
            line += nl
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
    out.append(Token("eof", "", line, col))
    return out


class Parser:
    def __init__(self, src: str):
        self.toks = tokenize(src)
        self.i = 0
        self.functors: dict[str, FunctorExpr] = {}
        self.types: dict[str, TypeExpr] = {}

    # -- token plumbing ----------------------------------------------------

    def peek(self) -> Token:
        return self.toks[self.i]

    def next(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def at_sym(self, s: str) -> bool:
        t = self.peek()
        return t.kind == "sym" and t.text == s

    def at_word(self, w: str) -> bool:
        t = self.peek()
        return t.kind == "name" and t.text == w

    def eat_sym(self, s: str) -> Token:
        t = self.peek()
        if not self.at_sym(s):
            raise ParseError(f"expected {s!r}, found {t.text!r}", t.line, t.col)
        return self.next()

    def eat_word(self, w: str) -> Token:
        t = self.peek()
        if not self.at_word(w):
            raise ParseError(f"expected {w!r}, found {t.text!r}", t.line, t.col)
        return self.next()

    def eat_name(self) -> str:
        t = self.peek()
        if t.kind != "name" or t.text in KEYWORDS:
            raise ParseError(f"expected a name, found {t.text!r}", t.line, t.col)
        return self.next().text

    def fail(self, msg: str):
        t = self.peek()
        raise ParseError(f"{msg} (found {t.text!r})", t.line, t.col)

    # -- functors ----------------------------------------------------------

    def parse_functor(self) -> FunctorExpr:
        return normalize_functor(self._fsum())

    def _fsum(self) -> FunctorExpr:
        left = self._fprod()
        if self.at_sym("+"):
            self.next()
            return FSum(left, self._fsum())
        return left

    def _fprod(self) -> FunctorExpr:
        left = self._fatom()
        if self.at_sym("*"):
            self.next()
            return FProd(left, self._fprod())
        return left

    def _fatom(self) -> FunctorExpr:
        t = self.peek()
        if t.kind == "num" and t.text == "1":
            self.next()
            return Const(UNIT)
        if self.at_sym("("):
            # Parenthesized groups admit full type syntax with X as the
            # hole; positivity is enforced on the way back to a functor.
            self.next()
            ty = self.parse_type()
            self.eat_sym(")")
            return functor_from_type(ty, "X")
        if self.at_word("X"):
            self.next()
            return ID
        if self.at_word("Unit"):
            self.next()
            return Const(UNIT)
        if self.at_word("Nat"):
            self.next()
            return Const(NAT)
        if self.at_word("mu") or self.at_word("nu"):
            return Const(self._tatom())
        if t.kind == "name" and t.text not in KEYWORDS:
            self.next()
            if t.text in self.functors:
                return self.functors[t.text]
            if t.text in self.types:
                return Const(self.types[t.text])
            return Const(TVar(t.text))
        self.fail("expected a functor")

    def parse_functor_brackets(self) -> FunctorExpr:
        self.eat_sym("[")
        f = self.parse_functor()
        self.eat_sym("]")
        return f

    # -- types ---------------------------------------------------------------

    def parse_type(self) -> TypeExpr:
        if self.at_word("forall"):
            self.next()
            v = self.eat_name()
            self.eat_sym(".")
            return Forall(v, self.parse_type())
        left = self._tsum()
        if self.at_sym("->"):
            self.next()
            return Arrow(left, self.parse_type())
        return left

    def _tsum(self) -> TypeExpr:
        left = self._tprod()
        if self.at_sym("+"):
            self.next()
            return Sum(left, self._tsum())
        return left

    def _tprod(self) -> TypeExpr:
        left = self._tatom()
        if self.at_sym("*"):
            self.next()
            return Prod(left, self._tprod())
        return left

    def _tatom(self) -> TypeExpr:
        t = self.peek()
        if self.at_sym("("):
            self.next()
            ty = self.parse_type()
            self.eat_sym(")")
            return ty
        if self.at_word("Unit"):
            self.next()
            return UNIT
        if self.at_word("Nat"):
            self.next()
            return NAT
        if self.at_word("mu"):
            self.next()
            return Mu(self.parse_functor_brackets())
        if self.at_word("nu"):
            self.next()
            return Nu(self.parse_functor_brackets())
        if t.kind == "name" and t.text not in KEYWORDS:
            self.next()
            if t.text in self.types:
                return self.types[t.text]
            if t.text in self.functors:
                raise ParseError(f"{t.text} names a functor, not a type; "
                                 f"write mu[{t.text}] or nu[{t.text}]",
                                 t.line, t.col)
            return TVar(t.text)
        self.fail("expected a type")

    # -- terms ---------------------------------------------------------------

    def parse_term(self) -> Term:
        if self.at_word("fun"):
            self.next()
            v = self.eat_name()
            self.eat_sym(":")
            ty = self.parse_type()
            self.eat_sym("=>")
            return Lam(v, ty, self.parse_term())
        if self.at_word("tyfun"):
            self.next()
            v = self.eat_name()
            self.eat_sym("=>")
            return TyLam(v, self.parse_term())
        if self.at_word("rec"):
            self.next()
            v = self.eat_name()
            self.eat_sym(":")
            ty = self.parse_type()
            self.eat_sym("=>")
            return Rec(v, ty, self.parse_term())
        if self.at_word("let"):
            self.next()
            v = self.eat_name()
            self.eat_sym("=")
            bound = self.parse_term()
            self.eat_word("in")
            return Let(v, bound, self.parse_term())
        if self.at_word("case"):
            self.next()
            s = self.parse_term()
            self.eat_word("of")
            self.eat_sym("{")
            self.eat_word("inl")
            lv = self.eat_name()
            self.eat_sym("=>")
            lb = self.parse_term()
            self.eat_sym("|")
            self.eat_word("inr")
            rv = self.eat_name()
            self.eat_sym("=>")
            rb = self.parse_term()
            self.eat_sym("}")
            return Case(s, lv, lb, rv, rb)
        return self._compose()

    def _compose(self) -> Term:
        left = self._add()
        if self.at_sym("."):
            self.next()
            return Compose(left, self._compose())
        return left

    def _add(self) -> Term:
        left = self._app()
        while self.at_sym("+"):
            self.next()
            left = Add(left, self._app())
        return left

    def _app(self) -> Term:
        head = self._prefixed()
        while True:
            if self.at_sym("@["):
                self.next()
                ty = self.parse_type()
                self.eat_sym("]")
                head = TyApp(head, ty)
            elif self._at_atom_start():
                head = App(head, self._atom())
            else:
                return head

    def _at_atom_start(self) -> bool:
        t = self.peek()
        if t.kind in ("num",):
            return True
        if t.kind == "sym" and t.text == "(":
            return True
        if t.kind == "name":
            if t.text in ("fold", "unfold", "build", "cobuild"):
                return True
            return t.text not in KEYWORDS
        return False

    def _prefixed(self) -> Term:
        if self.at_word("fst"):
            self.next()
            return Proj1(self._atom())
        if self.at_word("snd"):
            self.next()
            return Proj2(self._atom())
        if self.at_word("inl"):
            self.next()
            self.eat_sym("[")
            ann = self.parse_type()
            self.eat_sym("]")
            return Inl(self._atom(), ann)
        if self.at_word("inr"):
            self.next()
            self.eat_sym("[")
            ann = self.parse_type()
            self.eat_sym("]")
            return Inr(self._atom(), ann)
        if self.at_sym("in["):
            self.next()
            f = self.parse_functor()
            self.eat_sym("]")
            return InMu(f, self._atom())
        if self.at_word("outmu"):
            self.next()
            return OutMu(self.parse_functor_brackets(), self._atom())
        if self.at_word("out"):
            self.next()
            return OutNu(self.parse_functor_brackets(), self._atom())
        return self._atom()

    def _atom(self) -> Term:
        t = self.peek()
        if t.kind == "num":
            self.next()
            return NatLit(int(t.text))
        if self.at_sym("("):
            self.next()
            if self.at_sym(")"):
                self.next()
                return UnitVal()
            first = self.parse_term()
            if self.at_sym(","):
                self.next()
                second = self.parse_term()
                self.eat_sym(")")
                return Pair(first, second)
            self.eat_sym(")")
            return first
        for word, ctor in (("fold", Cata), ("unfold", Ana),
                           ("build", Build), ("cobuild", Cobuild)):
            if self.at_word(word):
                self.next()
                f = self.parse_functor_brackets()
                self.eat_sym("(")
                body = self.parse_term()
                self.eat_sym(")")
                return ctor(f, body)
        if t.kind == "name" and t.text not in KEYWORDS:
            self.next()
            return TmVar(t.text)
        self.fail("expected a term")

    # -- declarations ----------------------------------------------------------

    def parse_program(self) -> Program:
        decls = []
        while self.peek().kind != "eof":
            decls.append(self.parse_decl())
        return Program(tuple(decls))

    def parse_decl(self):
        if self.at_word("functor"):
            self.next()
            name = self.eat_name()
            self.eat_sym("=")
            f = self.parse_functor()
            self.functors[name] = f
            return FunctorDecl(name, f)
        if self.at_word("type"):
            self.next()
            name = self.eat_name()
            self.eat_sym("=")
            ty = self.parse_type()
            self.types[name] = ty
            return TypeDecl(name, ty)
        if self.at_word("def"):
            self.next()
            is_rec = False
            if self.at_word("rec"):
                self.next()
                is_rec = True
            name = self.eat_name()
            self.eat_sym(":")
            ty = self.parse_type()
            self.eat_sym("=")
            term = self.parse_term()
            if is_rec:
                term = Rec(name, ty, term)
            return TermDecl(name, ty, alpha_normalize(term))
        self.fail("expected a declaration (functor, type, or def)")


def parse_program(src: str) -> Program:
    return Parser(src).parse_program()


def parse_term(src: str, functors: dict | None = None,
               types: dict | None = None) -> Term:
    p = Parser(src)
    p.functors = dict(functors or {})
    p.types = dict(types or {})
    t = p.parse_term()
    tok = p.peek()
    if tok.kind != "eof":
        raise ParseError(f"trailing input {tok.text!r}", tok.line, tok.col)
    return alpha_normalize(t)


def parse_type(src: str, functors: dict | None = None,
               types: dict | None = None) -> TypeExpr:
    p = Parser(src)
    p.functors = dict(functors or {})
    p.types = dict(types or {})
    ty = p.parse_type()
    tok = p.peek()
    if tok.kind != "eof":
        raise ParseError(f"trailing input {tok.text!r}", tok.line, tok.col)
    return ty


def parse_functor(src: str, functors: dict | None = None,
                  types: dict | None = None) -> FunctorExpr:
    p = Parser(src)
    p.functors = dict(functors or {})
    p.types = dict(types or {})
    f = p.parse_functor()
    tok = p.peek()
    if tok.kind != "eof":
        raise ParseError(f"trailing input {tok.text!r}", tok.line, tok.col)
    return f


# Typed literal parsing for CLI --input values -------------------------------

def parse_value_literal(src: str, ty: TypeExpr):
    """Parse an input literal at a first-order type.

    Lists of a mu-functor 1 + T1*...*Tk*Id are written [e, e, ...] (entries
    are k-tuples for k > 1); other inductive values use `in <payload>`.
    """
    from .interp import VInl, VInr, VMu, VNat, VPair, VUNIT

    toks = tokenize(src)
    pos = [0]

    def peek() -> Token:
        return toks[pos[0]]

    def nxt() -> Token:
        t = toks[pos[0]]
        pos[0] += 1
        return t

    def eat(s: str) -> None:
        t = nxt()
        if t.kind != "sym" or t.text != s:
            raise ParseError(f"expected {s!r} in value literal", t.line, t.col)

    def _list_parts(f) -> list | None:
        match f:
            case FSum(Const(u), rest) if u == UNIT:
                parts = []
                while isinstance(rest, FProd):
                    parts.append(rest.left)
                    rest = rest.right
                if rest == ID and parts:
                    return parts
        return None

    def value(ty: TypeExpr):
        t = peek()
        match ty:
            case x if x == UNIT:
                eat("(")
                eat(")")
                return VUNIT
            case x if x == NAT:
                n = nxt()
                if n.kind != "num":
                    raise ParseError("expected a number", n.line, n.col)
                return VNat(int(n.text))
            case Prod(l, r):
                eat("(")
                lv = value(l)
                eat(",")
                rv = value(r)
                eat(")")
                return VPair(lv, rv)
            case Sum(l, r):
                w = nxt()
                if w.kind == "name" and w.text == "inl":
                    return VInl(value(l))
                if w.kind == "name" and w.text == "inr":
                    return VInr(value(r))
                raise ParseError("expected inl or inr", w.line, w.col)
            case Mu(f):
                from .syntax import functor_apply
                parts = _list_parts(f)
                if parts is not None and peek().kind == "sym" \
                        and peek().text == "[":
                    part_types = [functor_apply(p, Mu(f)) for p in parts]
                    eat("[")
                    items = []
                    if not (peek().kind == "sym" and peek().text == "]"):
                        while True:
                            if len(part_types) == 1:
                                items.append([value(part_types[0])])
                            else:
                                eat("(")
                                tup = [value(part_types[0])]
                                for comp in part_types[1:]:
                                    eat(",")
                                    tup.append(value(comp))
                                eat(")")
                                items.append(tup)
                            if peek().kind == "sym" and peek().text == ",":
                                nxt()
                                continue
                            break
                    eat("]")
                    out = VMu(f, VInl(VUNIT))
                    for tup in reversed(items):
                        payload = out
                        for comp in reversed(tup):
                            payload = VPair(comp, payload)
                        out = VMu(f, VInr(payload))
                    return out
                w = nxt()
                if w.kind == "name" and w.text == "in":
                    return VMu(f, value(functor_apply(f, Mu(f))))
                raise ParseError("expected a list or `in` payload", w.line, w.col)
        raise ParseError(f"cannot parse a literal at type {ty!r}",
                         t.line, t.col)

    v = value(ty)
    tok = peek()
    if tok.kind != "eof":
        raise ParseError(f"trailing input {tok.text!r}", tok.line, tok.col)
    return v
