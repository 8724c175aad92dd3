"""Type checking for fully annotated terms.

Every recursion/corecursion form carries its functor explicitly, so checking
is a single synthesis pass with no inference or unification.  Types are
compared up to renaming of quantifier binders only; fixpoints are never
unfolded definitionally.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .syntax import (
    Add, Ana, App, Arrow, Build, Case, Cata, Cobuild, Compose, Const, Forall,
    FunctorExpr, Inl, InMu, Inr, Lam, Let, Mu, NatLit, Nu, OutMu, OutNu,
    Pair, Prod, Proj1, Proj2, Program, Rec, Sum, Term, TermDecl, TmVar, TyApp,
    TyLam, TypeExpr, TVar, UnitVal, UNIT, NAT,
    check_positivity, free_type_vars, functor_apply, type_alpha_eq,
)


class FuseTypeError(Exception):
    """Base for all checking failures; message includes the term path."""

    def __init__(self, msg: str, path: str):
        self.path = path
        super().__init__(f"{msg} (at {path})")


class TypeMismatch(FuseTypeError):
    def __init__(self, expected: str, actual: str, path: str):
        self.expected = expected
        self.actual = actual
        super().__init__(f"type mismatch: expected {expected}, got {actual}", path)


class EscapedTypeVariable(FuseTypeError):
    def __init__(self, var: str, where: str, path: str):
        super().__init__(
            f"type variable {var} escapes its quantifier (free in {where})", path)


class UnboundVariable(FuseTypeError):
    def __init__(self, name: str, path: str):
        super().__init__(f"unbound variable {name}", path)


@dataclass(frozen=True)
class TypingContext:
    vars: dict = field(default_factory=dict)
    tyvars: frozenset = frozenset()

    def bind(self, name: str, ty: TypeExpr) -> "TypingContext":
        return TypingContext({**self.vars, name: ty}, self.tyvars)

    def bind_tyvar(self, name: str) -> "TypingContext":
        return TypingContext(dict(self.vars), self.tyvars | {name})


def _show(t: TypeExpr) -> str:
    from .printer import print_type
    return print_type(t)


def _quantifier_free(ty: TypeExpr, path: str) -> None:
    def go(t: TypeExpr) -> None:
        match t:
            case Forall(_, _):
                raise FuseTypeError(
                    "universal types are rank-1 only; no quantifier may occur "
                    "inside another type", path)
            case Prod(l, r) | Sum(l, r) | Arrow(l, r):
                go(l)
                go(r)
            case Mu(f) | Nu(f):
                gof(f)
            case _:
                pass

    def gof(f: FunctorExpr) -> None:
        match f:
            case Const(t):
                go(t)
            case _:
                if hasattr(f, "left"):
                    gof(f.left)
                    gof(f.right)

    go(ty)


def _check_scoped(ty: TypeExpr, ctx: TypingContext, path: str) -> None:
    loose = free_type_vars(ty) - ctx.tyvars
    if loose:
        raise FuseTypeError(
            f"type annotation mentions unbound type variable(s) "
            f"{', '.join(sorted(loose))}", path)


def _expect(actual: TypeExpr, expected: TypeExpr, path: str) -> None:
    if not type_alpha_eq(actual, expected):
        raise TypeMismatch(_show(expected), _show(actual), path)


def typecheck_term(ctx: TypingContext, t: Term, path: str = "·") -> TypeExpr:
    """Synthesize the unique type of `t`, or raise with the failing path."""
    match t:
        case TmVar(name):
            if name not in ctx.vars:
                raise UnboundVariable(name, path)
            return ctx.vars[name]

        case UnitVal():
            return UNIT

        case NatLit(n):
            if n < 0:
                raise FuseTypeError("negative literal", path)
            return NAT

        case Add(l, r):
            _expect(typecheck_term(ctx, l, path + "/Add.left"), NAT,
                    path + "/Add.left")
            _expect(typecheck_term(ctx, r, path + "/Add.right"), NAT,
                    path + "/Add.right")
            return NAT

        case Lam(v, ty, body):
            _quantifier_free(ty, path)
            _check_scoped(ty, ctx, path)
            bt = typecheck_term(ctx.bind(v, ty), body, path + "/Lam.body")
            return Arrow(ty, bt)

        case App(fn, arg):
            ft = typecheck_term(ctx, fn, path + "/App.fn")
            at = typecheck_term(ctx, arg, path + "/App.arg")
            if not isinstance(ft, Arrow):
                raise TypeMismatch("a function type", _show(ft), path + "/App.fn")
            _expect(at, ft.dom, path + "/App.arg")
            return ft.cod

        case TyLam(v, body):
            bt = typecheck_term(ctx.bind_tyvar(v), body, path + "/TyLam.body")
            return Forall(v, bt)

        case TyApp(fn, ty):
            _quantifier_free(ty, path)
            _check_scoped(ty, ctx, path)
            ft = typecheck_term(ctx, fn, path + "/TyApp.fn")
            if not isinstance(ft, Forall):
                raise TypeMismatch("a universal type", _show(ft), path + "/TyApp.fn")
            from .syntax import subst_type
            return subst_type(ft.body, ft.var, ty)

        case Pair(l, r):
            return Prod(typecheck_term(ctx, l, path + "/Pair.left"),
                        typecheck_term(ctx, r, path + "/Pair.right"))

        case Proj1(a):
            at = typecheck_term(ctx, a, path + "/Proj1.arg")
            if not isinstance(at, Prod):
                raise TypeMismatch("a product type", _show(at), path + "/Proj1.arg")
            return at.left

        case Proj2(a):
            at = typecheck_term(ctx, a, path + "/Proj2.arg")
            if not isinstance(at, Prod):
                raise TypeMismatch("a product type", _show(at), path + "/Proj2.arg")
            return at.right

        case Inl(a, ann):
            _quantifier_free(ann, path)
            _check_scoped(ann, ctx, path)
            if not isinstance(ann, Sum):
                raise TypeMismatch("a sum type annotation", _show(ann), path)
            _expect(typecheck_term(ctx, a, path + "/Inl.arg"), ann.left,
                    path + "/Inl.arg")
            return ann

        case Inr(a, ann):
            _quantifier_free(ann, path)
            _check_scoped(ann, ctx, path)
            if not isinstance(ann, Sum):
                raise TypeMismatch("a sum type annotation", _show(ann), path)
            _expect(typecheck_term(ctx, a, path + "/Inr.arg"), ann.right,
                    path + "/Inr.arg")
            return ann

        case Case(s, lv, lb, rv, rb):
            st = typecheck_term(ctx, s, path + "/Case.scrut")
            if not isinstance(st, Sum):
                raise TypeMismatch("a sum type", _show(st), path + "/Case.scrut")
            lt = typecheck_term(ctx.bind(lv, st.left), lb, path + "/Case.left")
            rt = typecheck_term(ctx.bind(rv, st.right), rb, path + "/Case.right")
            _expect(rt, lt, path + "/Case.right")
            return lt

        case InMu(f, a):
            check_positivity(f)
            _expect(typecheck_term(ctx, a, path + "/InMu.arg"),
                    functor_apply(f, Mu(f)), path + "/InMu.arg")
            return Mu(f)

        case OutMu(f, a):
            _expect(typecheck_term(ctx, a, path + "/OutMu.arg"), Mu(f),
                    path + "/OutMu.arg")
            return functor_apply(f, Mu(f))

        case Cata(f, alg):
            at = typecheck_term(ctx, alg, path + "/Cata.algebra")
            if not isinstance(at, Arrow):
                raise TypeMismatch("an algebra F(C) -> C", _show(at),
                                   path + "/Cata.algebra")
            carrier = at.cod
            _expect(at.dom, functor_apply(f, carrier), path + "/Cata.algebra")
            return Arrow(Mu(f), carrier)

        case OutNu(f, a):
            _expect(typecheck_term(ctx, a, path + "/OutNu.arg"), Nu(f),
                    path + "/OutNu.arg")
            return functor_apply(f, Nu(f))

        case Ana(f, coalg):
            at = typecheck_term(ctx, coalg, path + "/Ana.coalgebra")
            if not isinstance(at, Arrow):
                raise TypeMismatch("a coalgebra A -> F(A)", _show(at),
                                   path + "/Ana.coalgebra")
            state = at.dom
            _expect(at.cod, functor_apply(f, state), path + "/Ana.coalgebra")
            return Arrow(state, Nu(f))

        case Build(f, producer):
            pt = typecheck_term(ctx, producer, path + "/Build.producer")
            x, src, _ = _producer_shape(f, pt, path)
            return Arrow(src, Mu(f))

        case Cobuild(f, consumer):
            qt = typecheck_term(ctx, consumer, path + "/Cobuild.consumer")
            x, res, _ = _consumer_shape(f, qt, path)
            return Arrow(Nu(f), res)

        case Compose(h, g):
            gt = typecheck_term(ctx, g, path + "/Compose.before")
            ht = typecheck_term(ctx, h, path + "/Compose.after")
            if not isinstance(gt, Arrow):
                raise TypeMismatch("a function type", _show(gt),
                                   path + "/Compose.before")
            if not isinstance(ht, Arrow):
                raise TypeMismatch("a function type", _show(ht),
                                   path + "/Compose.after")
            _expect(ht.dom, gt.cod, path + "/Compose.after")
            return Arrow(gt.dom, ht.cod)

        case Let(v, bound, body):
            bt = typecheck_term(ctx, bound, path + "/Let.bound")
            return typecheck_term(ctx.bind(v, bt), body, path + "/Let.body")

        case Rec(v, ty, body):
            _check_scoped(ty, ctx, path)
            if not isinstance(ty, (Arrow, Forall)):
                raise FuseTypeError(
                    "rec requires a function or universal type annotation", path)
            if not isinstance(body, (Lam, TyLam, Rec)):
                raise FuseTypeError("rec body must be an abstraction", path)
            bt = typecheck_term(ctx.bind(v, ty), body, path + "/Rec.body")
            _expect(bt, ty, path + "/Rec.body")
            return ty

    raise FuseTypeError(f"unknown term form {type(t).__name__}", path)


def _producer_shape(f: FunctorExpr, pt: TypeExpr,
                    path: str) -> tuple[str, TypeExpr, TypeExpr]:
    """Match forall X. (F X -> X) -> A -> X, returning (X, A, F X)."""
    if not isinstance(pt, Forall):
        raise TypeMismatch("forall X. (F X -> X) -> A -> X", _show(pt), path)
    x = pt.var
    body = pt.body
    want = "forall {0}. (F {0} -> {0}) -> A -> {0}".format(x)
    if not (isinstance(body, Arrow) and isinstance(body.dom, Arrow)
            and isinstance(body.cod, Arrow)):
        raise TypeMismatch(want, _show(pt), path)
    fx = functor_apply(f, TVar(x))
    if not (type_alpha_eq(body.dom.dom, fx) and body.dom.cod == TVar(x)):
        raise TypeMismatch(want, _show(pt), path)
    src = body.cod.dom
    if not body.cod.cod == TVar(x):
        raise TypeMismatch(want, _show(pt), path)
    if x in free_type_vars(src):
        raise EscapedTypeVariable(x, "the producer source type " + _show(src), path)
    return x, src, fx


def _consumer_shape(f: FunctorExpr, qt: TypeExpr,
                    path: str) -> tuple[str, TypeExpr, TypeExpr]:
    """Match forall X. (X -> F X) -> X -> B, returning (X, B, F X)."""
    if not isinstance(qt, Forall):
        raise TypeMismatch("forall X. (X -> F X) -> X -> B", _show(qt), path)
    x = qt.var
    body = qt.body
    want = "forall {0}. ({0} -> F {0}) -> {0} -> B".format(x)
    if not (isinstance(body, Arrow) and isinstance(body.dom, Arrow)
            and isinstance(body.cod, Arrow)):
        raise TypeMismatch(want, _show(qt), path)
    fx = functor_apply(f, TVar(x))
    if not (body.dom.dom == TVar(x) and type_alpha_eq(body.dom.cod, fx)):
        raise TypeMismatch(want, _show(qt), path)
    if not body.cod.dom == TVar(x):
        raise TypeMismatch(want, _show(qt), path)
    res = body.cod.cod
    if x in free_type_vars(res):
        raise EscapedTypeVariable(x, "the consumer result type " + _show(res), path)
    return x, res, fx


def typecheck_program(program: Program) -> list[tuple[str, TypeExpr]]:
    """Check declarations in order; later ones may use earlier ones."""
    ctx = TypingContext()
    out: list[tuple[str, TypeExpr]] = []
    for d in program.decls:
        if not isinstance(d, TermDecl):
            continue
        if isinstance(d.ty, Forall):
            _quantifier_free(d.ty.body, d.name)
        else:
            _quantifier_free(d.ty, d.name)
        if free_type_vars(d.ty):
            raise FuseTypeError(
                f"declared type of {d.name} has free type variables", d.name)
        got = typecheck_term(ctx, d.term, d.name)
        if not type_alpha_eq(got, d.ty):
            raise TypeMismatch(_show(d.ty), _show(got), d.name)
        ctx = ctx.bind(d.name, d.ty)
        out.append((d.name, d.ty))
    return out


def context_of(program: Program) -> TypingContext:
    ctx = TypingContext()
    for d in program.decls:
        if isinstance(d, TermDecl):
            ctx = ctx.bind(d.name, d.ty)
    return ctx
