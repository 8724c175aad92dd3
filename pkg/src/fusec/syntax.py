"""Abstract syntax: types, polynomial functors, mixed-variance bifunctors, terms.

Types and terms are immutable dataclasses compared structurally, so they can
key dictionaries (allocation profiles are keyed by functor) and be tested for
exact equality in rewrites.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Union


class SyntaxError_(Exception):
    """Structural error in a type/functor construction (not a parse error)."""


class PositivityViolation(SyntaxError_):
    def __init__(self, path: str):
        self.path = path
        super().__init__(f"type variable occurs under an arrow at {path}")


class NotCurriedNormalForm(SyntaxError_):
    pass


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Unit:
    def __repr__(self) -> str:
        return "Unit"


@dataclass(frozen=True)
class Nat:
    def __repr__(self) -> str:
        return "Nat"


@dataclass(frozen=True)
class TVar:
    name: str

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Prod:
    left: "TypeExpr"
    right: "TypeExpr"


@dataclass(frozen=True)
class Sum:
    left: "TypeExpr"
    right: "TypeExpr"


@dataclass(frozen=True)
class Arrow:
    dom: "TypeExpr"
    cod: "TypeExpr"


@dataclass(frozen=True)
class Mu:
    functor: "FunctorExpr"


@dataclass(frozen=True)
class Nu:
    functor: "FunctorExpr"


@dataclass(frozen=True)
class Forall:
    var: str
    body: "TypeExpr"


TypeExpr = Union[Unit, Nat, TVar, Prod, Sum, Arrow, Mu, Nu, Forall]

UNIT = Unit()
NAT = Nat()


# ---------------------------------------------------------------------------
# Covariant polynomial functors in one variable (the hole is `Ident`)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    ty: "TypeExpr"


@dataclass(frozen=True)
class Ident:
    def __repr__(self) -> str:
        return "Id"


@dataclass(frozen=True)
class FSum:
    left: "FunctorExpr"
    right: "FunctorExpr"


@dataclass(frozen=True)
class FProd:
    left: "FunctorExpr"
    right: "FunctorExpr"


FunctorExpr = Union[Const, Ident, FSum, FProd]

ID = Ident()


# ---------------------------------------------------------------------------
# Mixed-variance bifunctors. `Pos` marks the hole; contravariant occurrences
# arise only through the left child of BArrow, whose variances are flipped.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BConst:
    ty: "TypeExpr"


@dataclass(frozen=True)
class Pos:
    def __repr__(self) -> str:
        return "Pos"


@dataclass(frozen=True)
class BSum:
    left: "BifunctorExpr"
    right: "BifunctorExpr"


@dataclass(frozen=True)
class BProd:
    left: "BifunctorExpr"
    right: "BifunctorExpr"


@dataclass(frozen=True)
class BArrow:
    left: "BifunctorExpr"
    right: "BifunctorExpr"


BifunctorExpr = Union[BConst, Pos, BSum, BProd, BArrow]

POS = Pos()


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TmVar:
    name: str


@dataclass(frozen=True)
class Lam:
    var: str
    ty: "TypeExpr"
    body: "Term"


@dataclass(frozen=True)
class App:
    fn: "Term"
    arg: "Term"


@dataclass(frozen=True)
class TyLam:
    tyvar: str
    body: "Term"


@dataclass(frozen=True)
class TyApp:
    fn: "Term"
    ty: "TypeExpr"


@dataclass(frozen=True)
class UnitVal:
    pass


@dataclass(frozen=True)
class NatLit:
    value: int


@dataclass(frozen=True)
class Add:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Pair:
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Proj1:
    arg: "Term"


@dataclass(frozen=True)
class Proj2:
    arg: "Term"


@dataclass(frozen=True)
class Inl:
    arg: "Term"
    ann: "TypeExpr"  # the full sum type


@dataclass(frozen=True)
class Inr:
    arg: "Term"
    ann: "TypeExpr"


@dataclass(frozen=True)
class Case:
    scrut: "Term"
    lvar: str
    lbody: "Term"
    rvar: str
    rbody: "Term"


@dataclass(frozen=True)
class InMu:
    functor: "FunctorExpr"
    arg: "Term"


@dataclass(frozen=True)
class OutMu:
    # Lambek inverse of InMu; O(1) destructor used by corpus pattern matching.
    functor: "FunctorExpr"
    arg: "Term"


@dataclass(frozen=True)
class Cata:
    functor: "FunctorExpr"
    algebra: "Term"


@dataclass(frozen=True)
class OutNu:
    functor: "FunctorExpr"
    arg: "Term"


@dataclass(frozen=True)
class Ana:
    functor: "FunctorExpr"
    coalgebra: "Term"


@dataclass(frozen=True)
class Build:
    functor: "FunctorExpr"
    producer: "Term"


@dataclass(frozen=True)
class Cobuild:
    functor: "FunctorExpr"
    consumer: "Term"


@dataclass(frozen=True)
class Compose:
    after: "Term"   # h
    before: "Term"  # f;  Compose(h, f) x = h (f x)


@dataclass(frozen=True)
class Let:
    var: str
    bound: "Term"
    body: "Term"


@dataclass(frozen=True)
class Rec:
    """Self-referential definition: `rec f : T => body`, `f` bound in body.

    Divergence is contained operationally by evaluation fuel; the body must
    be an abstraction so the fixpoint has a closure value.
    """
    var: str
    ty: "TypeExpr"
    body: "Term"


Term = Union[
    TmVar, Lam, App, TyLam, TyApp, UnitVal, NatLit, Add, Pair, Proj1, Proj2,
    Inl, Inr, Case, InMu, OutMu, Cata, OutNu, Ana, Build, Cobuild, Compose,
    Let, Rec,
]


# ---------------------------------------------------------------------------
# Programs (surface declarations)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FunctorDecl:
    name: str
    functor: "FunctorExpr"


@dataclass(frozen=True)
class TypeDecl:
    name: str
    ty: "TypeExpr"


@dataclass(frozen=True)
class TermDecl:
    name: str
    ty: "TypeExpr"
    term: "Term"


Decl = Union[FunctorDecl, TypeDecl, TermDecl]


@dataclass(frozen=True)
class Program:
    decls: tuple[Decl, ...] = field(default_factory=tuple)

    def term_decls(self) -> Iterator[TermDecl]:
        for d in self.decls:
            if isinstance(d, TermDecl):
                yield d

    def lookup(self, name: str) -> TermDecl:
        for d in self.decls:
            if isinstance(d, TermDecl) and d.name == name:
                return d
        raise KeyError(name)


# ---------------------------------------------------------------------------
# Type operations
# ---------------------------------------------------------------------------

def free_type_vars(t: TypeExpr) -> frozenset[str]:
    match t:
        case TVar(name):
            return frozenset({name})
        case Prod(l, r) | Sum(l, r):
            return free_type_vars(l) | free_type_vars(r)
        case Arrow(d, c):
            return free_type_vars(d) | free_type_vars(c)
        case Mu(f) | Nu(f):
            return functor_free_type_vars(f)
        case Forall(v, b):
            return free_type_vars(b) - {v}
        case _:
            return frozenset()


def functor_free_type_vars(f: FunctorExpr) -> frozenset[str]:
    match f:
        case Const(ty):
            return free_type_vars(ty)
        case FSum(l, r) | FProd(l, r):
            return functor_free_type_vars(l) | functor_free_type_vars(r)
        case _:
            return frozenset()


def _fresh(base: str, avoid: set[str]) -> str:
    if base not in avoid:
        return base
    i = 2
    while f"{base}{i}" in avoid:
        i += 1
    return f"{base}{i}"


def subst_type(t: TypeExpr, var: str, s: TypeExpr) -> TypeExpr:
    """Capture-avoiding substitution of `s` for the free variable `var`."""
    match t:
        case TVar(name):
            return s if name == var else t
        case Prod(l, r):
            return Prod(subst_type(l, var, s), subst_type(r, var, s))
        case Sum(l, r):
            return Sum(subst_type(l, var, s), subst_type(r, var, s))
        case Arrow(d, c):
            return Arrow(subst_type(d, var, s), subst_type(c, var, s))
        case Mu(f):
            return Mu(subst_functor(f, var, s))
        case Nu(f):
            return Nu(subst_functor(f, var, s))
        case Forall(v, b):
            if v == var:
                return t
            if v in free_type_vars(s) and var in free_type_vars(b):
                v2 = _fresh(v, set(free_type_vars(s) | free_type_vars(b)))
                b = subst_type(b, v, TVar(v2))
                return Forall(v2, subst_type(b, var, s))
            return Forall(v, subst_type(b, var, s))
        case _:
            return t


def subst_functor(f: FunctorExpr, var: str, s: TypeExpr) -> FunctorExpr:
    match f:
        case Const(ty):
            return Const(subst_type(ty, var, s))
        case FSum(l, r):
            return FSum(subst_functor(l, var, s), subst_functor(r, var, s))
        case FProd(l, r):
            return FProd(subst_functor(l, var, s), subst_functor(r, var, s))
        case _:
            return f


def normalize_functor(f: FunctorExpr) -> FunctorExpr:
    """Canonical form: hole-free subtrees collapse to a single Const.

    Allocation profiles key on functor identity, so structurally equal
    functor syntax must be one value: Const(A) * Const(B) and Const(A * B)
    both normalize to the latter.
    """
    match f:
        case FSum(l, r):
            l2, r2 = normalize_functor(l), normalize_functor(r)
            if isinstance(l2, Const) and isinstance(r2, Const):
                return Const(Sum(l2.ty, r2.ty))
            return FSum(l2, r2)
        case FProd(l, r):
            l2, r2 = normalize_functor(l), normalize_functor(r)
            if isinstance(l2, Const) and isinstance(r2, Const):
                return Const(Prod(l2.ty, r2.ty))
            return FProd(l2, r2)
        case _:
            return f


def functor_apply(f: FunctorExpr, t: TypeExpr) -> TypeExpr:
    """Plug `t` into the hole of `f`."""
    match f:
        case Const(ty):
            return ty
        case Ident():
            return t
        case FSum(l, r):
            return Sum(functor_apply(l, t), functor_apply(r, t))
        case FProd(l, r):
            return Prod(functor_apply(l, t), functor_apply(r, t))
    raise AssertionError(f)


def bifunctor_apply(w: BifunctorExpr, neg: TypeExpr, pos: TypeExpr) -> TypeExpr:
    """Interpret `w` at (neg, pos); the arrow's left child swaps the slots."""
    match w:
        case BConst(ty):
            return ty
        case Pos():
            return pos
        case BSum(l, r):
            return Sum(bifunctor_apply(l, neg, pos), bifunctor_apply(r, neg, pos))
        case BProd(l, r):
            return Prod(bifunctor_apply(l, neg, pos), bifunctor_apply(r, neg, pos))
        case BArrow(l, r):
            return Arrow(bifunctor_apply(l, pos, neg), bifunctor_apply(r, neg, pos))
    raise AssertionError(w)


def check_positivity(f: FunctorExpr) -> None:
    """Validate that `f` is a usable polynomial functor.

    FunctorExpr has no arrow node, so the hole cannot occur contravariantly;
    the check guards the remaining well-formedness condition (no hole inside
    a Const payload) and exists as the target the front-end reports against.
    """
    match f:
        case Const(ty):
            if free_type_vars(ty):
                # A Const payload may mention type variables of the ambient
                # scope but never the functor's own hole; the hole has no
                # name, so any payload is fine here by construction.
                pass
        case FSum(l, r) | FProd(l, r):
            check_positivity(l)
            check_positivity(r)


def functor_from_type(t: TypeExpr, var: str, path: str = "·") -> FunctorExpr:
    """Read a type with a distinguished variable back as a polynomial functor.

    Front-end for `mu`/`nu` bodies: rejects (with the offending path) any
    occurrence of the variable under an arrow or inside a fixpoint.
    """
    if var not in free_type_vars(t):
        return Const(t)
    match t:
        case TVar(name) if name == var:
            return ID
        case Prod(l, r):
            return FProd(functor_from_type(l, var, path + "/Prod.left"),
                         functor_from_type(r, var, path + "/Prod.right"))
        case Sum(l, r):
            return FSum(functor_from_type(l, var, path + "/Sum.left"),
                        functor_from_type(r, var, path + "/Sum.right"))
        case Arrow(d, _c):
            side = "Arrow.left" if var in free_type_vars(d) else "Arrow.right"
            raise PositivityViolation(path + "/" + side)
        case _:
            raise PositivityViolation(path)


def functor_readback(t: TypeExpr, var: str) -> FunctorExpr:
    """Inverse of functor_apply at a fresh variable (polynomial shapes only)."""
    return functor_from_type(t, var)


def bifunctor_from_type(t: TypeExpr, var: str) -> BifunctorExpr:
    """Read a type as a mixed-variance bifunctor in `var`.

    Any subtree not mentioning `var` collapses to BConst; `var` may occur on
    either side of arrows but not inside fixpoints or quantifiers.
    """
    if var not in free_type_vars(t):
        return BConst(t)
    match t:
        case TVar(name) if name == var:
            return POS
        case Prod(l, r):
            return BProd(bifunctor_from_type(l, var), bifunctor_from_type(r, var))
        case Sum(l, r):
            return BSum(bifunctor_from_type(l, var), bifunctor_from_type(r, var))
        case Arrow(d, c):
            return BArrow(bifunctor_from_type(d, var), bifunctor_from_type(c, var))
        case _:
            raise NotCurriedNormalForm(
                f"variable {var} occurs inside a fixpoint or quantifier: {t!r}")


def decompose_polytype(body: TypeExpr, var: str) -> tuple[BifunctorExpr, FunctorExpr]:
    """Split a curried-normal-form polytype T1 => ... => Tn => V into (W, V).

    W is the product of the argument components (empty product = Unit) as a
    bifunctor in `var`; V must read back as a covariant polynomial functor.
    The original body is isomorphic to W => V by currying.
    """
    components: list[TypeExpr] = []
    tail = body
    while isinstance(tail, Arrow):
        components.append(tail.dom)
        tail = tail.cod
    try:
        v = functor_from_type(tail, var)
    except PositivityViolation as e:
        raise NotCurriedNormalForm(
            f"result component is not covariant-polynomial in {var}: {e}") from e
    if not components:
        return BConst(UNIT), v
    bifs = [bifunctor_from_type(c, var) for c in components]
    w = bifs[-1]
    for b in reversed(bifs[:-1]):
        w = BProd(b, w)
    return w, v


# ---------------------------------------------------------------------------
# fmap at the term level
# ---------------------------------------------------------------------------

def fmap_apply(f: FunctorExpr, h: Term, tm: Term, src: TypeExpr, dst: TypeExpr) -> Term:
    """A term denoting the action of `f` on `h`, applied to `tm`."""
    match f:
        case Const(_):
            return tm
        case Ident():
            return App(h, tm)
        case FProd(l, r):
            return Pair(fmap_apply(l, h, Proj1(tm), src, dst),
                        fmap_apply(r, h, Proj2(tm), src, dst))
        case FSum(l, r):
            ann = Sum(functor_apply(l, dst), functor_apply(r, dst))
            return Case(tm,
                        "fml", Inl(fmap_apply(l, h, TmVar("fml"), src, dst), ann),
                        "fmr", Inr(fmap_apply(r, h, TmVar("fmr"), src, dst), ann))
    raise AssertionError(f)


def fmap_term(f: FunctorExpr, h: Term, src: TypeExpr, dst: TypeExpr) -> Term:
    """A term of type F(src) -> F(dst), given h : src -> dst.

    Identity functor returns `h` itself; other shapes build an abstraction
    acting structurally (identity on constants, componentwise on products,
    branchwise on sums).
    """
    if isinstance(f, Ident):
        return h
    v = "fmv"
    return Lam(v, functor_apply(f, src), fmap_apply(f, h, TmVar(v), src, dst))


# ---------------------------------------------------------------------------
# Term traversal helpers
# ---------------------------------------------------------------------------

def free_term_vars(t: Term) -> frozenset[str]:
    match t:
        case TmVar(name):
            return frozenset({name})
        case Lam(v, _, b):
            return free_term_vars(b) - {v}
        case Rec(v, _, b):
            return free_term_vars(b) - {v}
        case Let(v, bound, b):
            return free_term_vars(bound) | (free_term_vars(b) - {v})
        case Case(s, lv, lb, rv, rb):
            return (free_term_vars(s)
                    | (free_term_vars(lb) - {lv})
                    | (free_term_vars(rb) - {rv}))
        case App(f, a) | Add(f, a) | Pair(f, a) | Compose(f, a):
            return free_term_vars(f) | free_term_vars(a)
        case TyLam(_, b) | TyApp(b, _):
            return free_term_vars(b)
        case (Proj1(a) | Proj2(a) | Inl(a, _) | Inr(a, _)
              | InMu(_, a) | OutMu(_, a) | OutNu(_, a)):
            return free_term_vars(a)
        case Cata(_, a) | Ana(_, a) | Build(_, a) | Cobuild(_, a):
            return free_term_vars(a)
        case _:
            return frozenset()


def _map_children(t: Term, f) -> Term:
    """Rebuild `t` with `f` applied to each immediate subterm."""
    match t:
        case Lam(v, ty, b):
            return Lam(v, ty, f(b))
        case Rec(v, ty, b):
            return Rec(v, ty, f(b))
        case App(g, a):
            return App(f(g), f(a))
        case TyLam(v, b):
            return TyLam(v, f(b))
        case TyApp(b, ty):
            return TyApp(f(b), ty)
        case Add(l, r):
            return Add(f(l), f(r))
        case Pair(l, r):
            return Pair(f(l), f(r))
        case Proj1(a):
            return Proj1(f(a))
        case Proj2(a):
            return Proj2(f(a))
        case Inl(a, ann):
            return Inl(f(a), ann)
        case Inr(a, ann):
            return Inr(f(a), ann)
        case Case(s, lv, lb, rv, rb):
            return Case(f(s), lv, f(lb), rv, f(rb))
        case InMu(fn, a):
            return InMu(fn, f(a))
        case OutMu(fn, a):
            return OutMu(fn, f(a))
        case Cata(fn, a):
            return Cata(fn, f(a))
        case OutNu(fn, a):
            return OutNu(fn, f(a))
        case Ana(fn, a):
            return Ana(fn, f(a))
        case Build(fn, a):
            return Build(fn, f(a))
        case Cobuild(fn, a):
            return Cobuild(fn, f(a))
        case Compose(h, g):
            return Compose(f(h), f(g))
        case Let(v, bound, b):
            return Let(v, f(bound), f(b))
        case _:
            return t


def subst_term(t: Term, var: str, s: Term) -> Term:
    """Capture-avoiding substitution of term `s` for term variable `var`."""
    fv_s = free_term_vars(s)

    def go(t: Term) -> Term:
        match t:
            case TmVar(name):
                return s if name == var else t
            case Lam(v, ty, b):
                if v == var:
                    return t
                if v in fv_s and var in free_term_vars(b):
                    v2 = _fresh(v, set(fv_s | free_term_vars(b)))
                    b = subst_term(b, v, TmVar(v2))
                    return Lam(v2, ty, go(b))
                return Lam(v, ty, go(b))
            case Rec(v, ty, b):
                if v == var:
                    return t
                if v in fv_s and var in free_term_vars(b):
                    v2 = _fresh(v, set(fv_s | free_term_vars(b)))
                    b = subst_term(b, v, TmVar(v2))
                    return Rec(v2, ty, go(b))
                return Rec(v, ty, go(b))
            case Let(v, bound, b):
                bound2 = go(bound)
                if v == var:
                    return Let(v, bound2, b)
                if v in fv_s and var in free_term_vars(b):
                    v2 = _fresh(v, set(fv_s | free_term_vars(b)))
                    b = subst_term(b, v, TmVar(v2))
                    return Let(v2, bound2, go(b))
                return Let(v, bound2, go(b))
            case Case(sc, lv, lb, rv, rb):
                sc2 = go(sc)
                lv2, lb2 = _subst_branch(lv, lb, var, s, fv_s)
                rv2, rb2 = _subst_branch(rv, rb, var, s, fv_s)
                return Case(sc2, lv2, lb2, rv2, rb2)
            case _:
                return _map_children(t, go)

    return go(t)


def _subst_branch(v: str, body: Term, var: str, s: Term,
                  fv_s: frozenset[str]) -> tuple[str, Term]:
    if v == var:
        return v, body
    if v in fv_s and var in free_term_vars(body):
        v2 = _fresh(v, set(fv_s | free_term_vars(body)))
        body = subst_term(body, v, TmVar(v2))
        return v2, subst_term(body, var, s)
    return v, subst_term(body, var, s)


def subst_type_in_term(t: Term, var: str, ty: TypeExpr) -> Term:
    """Substitute a type for a type variable throughout a term's annotations."""
    def sty(x: TypeExpr) -> TypeExpr:
        return subst_type(x, var, ty)

    def sfn(f: FunctorExpr) -> FunctorExpr:
        return subst_functor(f, var, ty)

    def go(t: Term) -> Term:
        match t:
            case Lam(v, a, b):
                return Lam(v, sty(a), go(b))
            case Rec(v, a, b):
                return Rec(v, sty(a), go(b))
            case TyLam(v, b):
                if v == var:
                    return t
                return TyLam(v, go(b))
            case TyApp(b, a):
                return TyApp(go(b), sty(a))
            case Inl(a, ann):
                return Inl(go(a), sty(ann))
            case Inr(a, ann):
                return Inr(go(a), sty(ann))
            case InMu(f, a):
                return InMu(sfn(f), go(a))
            case OutMu(f, a):
                return OutMu(sfn(f), go(a))
            case Cata(f, a):
                return Cata(sfn(f), go(a))
            case OutNu(f, a):
                return OutNu(sfn(f), go(a))
            case Ana(f, a):
                return Ana(sfn(f), go(a))
            case Build(f, a):
                return Build(sfn(f), go(a))
            case Cobuild(f, a):
                return Cobuild(sfn(f), go(a))
            case _:
                return _map_children(t, go)

    return go(t)


def alpha_normalize(t: Term) -> Term:
    """Rename bound term variables so every binder in `t` is distinct.

    Renaming is deterministic (first collision gets suffix 2, then 3, ...)
    and idempotent on terms whose binders are already distinct.
    """
    used: set[str] = set(free_term_vars(t))

    def bind(v: str) -> str:
        v2 = _fresh(v, used)
        used.add(v2)
        return v2

    def go(t: Term, ren: dict[str, str]) -> Term:
        match t:
            case TmVar(name):
                return TmVar(ren.get(name, name))
            case Lam(v, ty, b):
                v2 = bind(v)
                return Lam(v2, ty, go(b, {**ren, v: v2}))
            case Rec(v, ty, b):
                v2 = bind(v)
                return Rec(v2, ty, go(b, {**ren, v: v2}))
            case Let(v, bound, b):
                bound2 = go(bound, ren)
                v2 = bind(v)
                return Let(v2, bound2, go(b, {**ren, v: v2}))
            case Case(s, lv, lb, rv, rb):
                s2 = go(s, ren)
                lv2 = bind(lv)
                lb2 = go(lb, {**ren, lv: lv2})
                rv2 = bind(rv)
                rb2 = go(rb, {**ren, rv: rv2})
                return Case(s2, lv2, lb2, rv2, rb2)
            case _:
                return _map_children(t, lambda u: go(u, ren))

    return go(t, {})


def type_alpha_eq(a: TypeExpr, b: TypeExpr) -> bool:
    """Structural equality of types up to renaming of Forall binders."""
    match (a, b):
        case (Forall(v1, b1), Forall(v2, b2)):
            if v1 == v2:
                return type_alpha_eq(b1, b2)
            fresh = TVar(_fresh("α", set(free_type_vars(b1) | free_type_vars(b2))))
            return type_alpha_eq(subst_type(b1, v1, fresh), subst_type(b2, v2, fresh))
        case (Prod(l1, r1), Prod(l2, r2)) | (Sum(l1, r1), Sum(l2, r2)):
            return type_alpha_eq(l1, l2) and type_alpha_eq(r1, r2)
        case (Arrow(d1, c1), Arrow(d2, c2)):
            return type_alpha_eq(d1, d2) and type_alpha_eq(c1, c2)
        case (Mu(f1), Mu(f2)) | (Nu(f1), Nu(f2)):
            return functor_alpha_eq(f1, f2)
        case _:
            return a == b


def functor_alpha_eq(f: FunctorExpr, g: FunctorExpr) -> bool:
    match (f, g):
        case (Const(t1), Const(t2)):
            return type_alpha_eq(t1, t2)
        case (FSum(l1, r1), FSum(l2, r2)) | (FProd(l1, r1), FProd(l2, r2)):
            return functor_alpha_eq(l1, l2) and functor_alpha_eq(r1, r2)
        case _:
            return f == g


def term_alpha_eq(a: Term, b: Term) -> bool:
    """Structural equality of terms up to bound-variable names."""
    def go(a: Term, b: Term, ra: dict[str, str], rb: dict[str, str], n: int) -> bool:
        match (a, b):
            case (TmVar(x), TmVar(y)):
                return ra.get(x, x) == rb.get(y, y)
            case (Lam(v1, t1, b1), Lam(v2, t2, b2)):
                if not type_alpha_eq(t1, t2):
                    return False
                fresh = f"#{n}"
                return go(b1, b2, {**ra, v1: fresh}, {**rb, v2: fresh}, n + 1)
            case (Rec(v1, t1, b1), Rec(v2, t2, b2)):
                if not type_alpha_eq(t1, t2):
                    return False
                fresh = f"#{n}"
                return go(b1, b2, {**ra, v1: fresh}, {**rb, v2: fresh}, n + 1)
            case (TyLam(v1, b1), TyLam(v2, b2)):
                if v1 != v2:
                    # Type binders are compared after renaming to a shared name.
                    fresh = TVar(f"#t{n}")
                    return go(subst_type_in_term(b1, v1, fresh),
                              subst_type_in_term(b2, v2, fresh), ra, rb, n + 1)
                return go(b1, b2, ra, rb, n)
            case (Let(v1, x1, b1), Let(v2, x2, b2)):
                if not go(x1, x2, ra, rb, n):
                    return False
                fresh = f"#{n}"
                return go(b1, b2, {**ra, v1: fresh}, {**rb, v2: fresh}, n + 1)
            case (Case(s1, lv1, lb1, rv1, rb1), Case(s2, lv2, lb2, rv2, rb2)):
                if not go(s1, s2, ra, rb, n):
                    return False
                f1, f2 = f"#{n}", f"#{n + 1}"
                return (go(lb1, lb2, {**ra, lv1: f1}, {**rb, lv2: f1}, n + 2)
                        and go(rb1, rb2, {**ra, rv1: f2}, {**rb, rv2: f2}, n + 2))
            case (App(f1, a1), App(f2, a2)) | (Add(f1, a1), Add(f2, a2)) \
                    | (Pair(f1, a1), Pair(f2, a2)) | (Compose(f1, a1), Compose(f2, a2)):
                return go(f1, f2, ra, rb, n) and go(a1, a2, ra, rb, n)
            case (TyApp(b1, t1), TyApp(b2, t2)):
                return type_alpha_eq(t1, t2) and go(b1, b2, ra, rb, n)
            case (Proj1(a1), Proj1(a2)) | (Proj2(a1), Proj2(a2)):
                return go(a1, a2, ra, rb, n)
            case (Inl(a1, t1), Inl(a2, t2)) | (Inr(a1, t1), Inr(a2, t2)):
                return type_alpha_eq(t1, t2) and go(a1, a2, ra, rb, n)
            case (InMu(g1, a1), InMu(g2, a2)) | (OutMu(g1, a1), OutMu(g2, a2)) \
                    | (Cata(g1, a1), Cata(g2, a2)) | (OutNu(g1, a1), OutNu(g2, a2)) \
                    | (Ana(g1, a1), Ana(g2, a2)) | (Build(g1, a1), Build(g2, a2)) \
                    | (Cobuild(g1, a1), Cobuild(g2, a2)):
                return (type(a) is type(b) and functor_alpha_eq(g1, g2)
                        and go(a1, a2, ra, rb, n))
            case _:
                return a == b

    return go(a, b, {}, {}, 0)
