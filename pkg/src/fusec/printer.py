"""Pretty-printing of types, functors, and terms in the surface syntax.

The printer and parser are exact inverses on ASTs: parse(print(x)) == x.
Precedence levels (loosest to tightest): binders/let/case, composition `.`,
addition, application, atoms.
"""

from __future__ import annotations

from .syntax import (
    Add, Ana, App, Arrow, BArrow, BConst, BifunctorExpr, BProd, BSum, Build,
    Case, Cata, Cobuild, Compose, Const, Forall, FProd, FSum, FunctorExpr,
    Ident, Inl, InMu, Inr, Lam, Let, Mu, Nat, NatLit, Nu, OutMu, OutNu, Pair,
    Pos, Prod, Program, Proj1, Proj2, Rec, Sum, Term, TermDecl, TmVar, TyApp,
    TyLam, TypeDecl, TypeExpr, TVar, Unit, UnitVal, FunctorDecl,
)


def _p(s: str, need: bool) -> str:
    return f"({s})" if need else s


# Type precedence: 0 forall, 1 arrow, 2 sum, 3 prod, 4 atom.

def print_type(t: TypeExpr, prec: int = 0) -> str:
    match t:
        case Unit():
            return "Unit"
        case Nat():
            return "Nat"
        case TVar(name):
            return name
        case Forall(v, b):
            return _p(f"forall {v}. {print_type(b, 0)}", prec > 0)
        case Arrow(d, c):
            return _p(f"{print_type(d, 2)} -> {print_type(c, 1)}", prec > 1)
        case Sum(l, r):
            return _p(f"{print_type(l, 3)} + {print_type(r, 2)}", prec > 2)
        case Prod(l, r):
            return _p(f"{print_type(l, 4)} * {print_type(r, 3)}", prec > 3)
        case Mu(f):
            return f"mu[{print_functor(f)}]"
        case Nu(f):
            return f"nu[{print_functor(f)}]"
    raise AssertionError(t)


# Functor precedence: 0 sum, 1 prod, 2 atom.

def print_functor(f: FunctorExpr, prec: int = 0) -> str:
    match f:
        case Ident():
            return "X"
        case Const(Unit()):
            return "1"
        case Const(ty):
            return print_type(ty, 4) if _type_atomic(ty) else f"({print_type(ty)})"
        case FSum(l, r):
            return _p(f"{print_functor(l, 1)} + {print_functor(r, 0)}", prec > 0)
        case FProd(l, r):
            return _p(f"{print_functor(l, 2)} * {print_functor(r, 1)}", prec > 1)
    raise AssertionError(f)


def _type_atomic(t: TypeExpr) -> bool:
    return isinstance(t, (Unit, Nat, TVar, Mu, Nu))


def print_bifunctor(w: BifunctorExpr, prec: int = 0) -> str:
    """Display form for reports; not part of the parsed surface syntax."""
    match w:
        case Pos():
            return "X"
        case BConst(Unit()):
            return "1"
        case BConst(ty):
            return print_type(ty, 4) if _type_atomic(ty) else f"({print_type(ty)})"
        case BArrow(l, r):
            return _p(f"{print_bifunctor(l, 2)} => {print_bifunctor(r, 1)}", prec > 1)
        case BSum(l, r):
            return _p(f"{print_bifunctor(l, 3)} + {print_bifunctor(r, 2)}", prec > 2)
        case BProd(l, r):
            return _p(f"{print_bifunctor(l, 4)} * {print_bifunctor(r, 3)}", prec > 3)
    raise AssertionError(w)


# Term precedence: 0 binders, 1 composition, 2 addition, 3 application, 4 atom.

def print_term(t: Term, prec: int = 0) -> str:
    match t:
        case TmVar(name):
            return name
        case UnitVal():
            return "()"
        case NatLit(n):
            return str(n)
        case Lam(v, ty, b):
            return _p(f"fun {v} : {print_type(ty)} => {print_term(b, 0)}", prec > 0)
        case TyLam(v, b):
            return _p(f"tyfun {v} => {print_term(b, 0)}", prec > 0)
        case Rec(v, ty, b):
            return _p(f"rec {v} : {print_type(ty)} => {print_term(b, 0)}", prec > 0)
        case Let(v, bound, b):
            return _p(f"let {v} = {print_term(bound, 0)} in {print_term(b, 0)}",
                      prec > 0)
        case Case(s, lv, lb, rv, rb):
            return _p(
                f"case {print_term(s, 0)} of {{ inl {lv} => {print_term(lb, 0)}"
                f" | inr {rv} => {print_term(rb, 0)} }}", prec > 0)
        case Compose(h, g):
            return _p(f"{print_term(h, 2)} . {print_term(g, 1)}", prec > 1)
        case Add(l, r):
            return _p(f"{print_term(l, 2)} + {print_term(r, 3)}", prec > 2)
        case App(f, a):
            return _p(f"{print_term(f, 3)} {print_term(a, 4)}", prec > 3)
        case TyApp(f, ty):
            return _p(f"{print_term(f, 3)} @[{print_type(ty)}]", prec > 3)
        case Proj1(a):
            return _p(f"fst {print_term(a, 4)}", prec > 3)
        case Proj2(a):
            return _p(f"snd {print_term(a, 4)}", prec > 3)
        case Inl(a, ann):
            return _p(f"inl[{print_type(ann)}] {print_term(a, 4)}", prec > 3)
        case Inr(a, ann):
            return _p(f"inr[{print_type(ann)}] {print_term(a, 4)}", prec > 3)
        case InMu(f, a):
            return _p(f"in[{print_functor(f)}] {print_term(a, 4)}", prec > 3)
        case OutMu(f, a):
            return _p(f"outmu[{print_functor(f)}] {print_term(a, 4)}", prec > 3)
        case OutNu(f, a):
            return _p(f"out[{print_functor(f)}] {print_term(a, 4)}", prec > 3)
        case Pair(l, r):
            return f"({print_term(l, 0)}, {print_term(r, 0)})"
        case Cata(f, c):
            return f"fold[{print_functor(f)}]({print_term(c, 0)})"
        case Ana(f, a):
            return f"unfold[{print_functor(f)}]({print_term(a, 0)})"
        case Build(f, p):
            return f"build[{print_functor(f)}]({print_term(p, 0)})"
        case Cobuild(f, q):
            return f"cobuild[{print_functor(f)}]({print_term(q, 0)})"
    raise AssertionError(t)


def print_decl(d) -> str:
    match d:
        case FunctorDecl(name, f):
            return f"functor {name} = {print_functor(f)}"
        case TypeDecl(name, ty):
            return f"type {name} = {print_type(ty)}"
        case TermDecl(name, ty, term):
            if isinstance(term, Rec) and term.ty == ty and term.var == name:
                return (f"def rec {name} : {print_type(ty)} = "
                        f"{print_term(term.body)}")
            return f"def {name} : {print_type(ty)} = {print_term(term)}"
    raise AssertionError(d)


def print_program(p: Program) -> str:
    return "\n".join(print_decl(d) for d in p.decls) + "\n"
