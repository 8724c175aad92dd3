"""Fusion as cut elimination: the case-commuting rewrite, inductive and
coinductive build fusion, producer/consumer reification and abstraction,
and differential verification of rewritten programs.

Rules (applied bottom-up to a fixpoint):
  R1  fold[F](c) . build[F](p)     ~>  p @[C] c     (C the carrier of c)
  R2  cobuild[F](q) . unfold[F](a) ~>  q @[A] a     (A the state type of a)
  R3  h (case s of {inl y => e0 | inr z => e1})
        ~>  case s of {inl y => h e0 | inr z => h e1}
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .interp import (
    AllocationProfile, DEFAULT_FUEL, FuelExhausted, Interp, Value,
    canonical_sample, is_first_order_type, program_env, run_deep, show_value,
    value_eq,
)
from .printer import print_term
from .syntax import (
    Add, Ana, App, Arrow, Build, Case, Cata, Cobuild, Compose, Const, FProd,
    FSum, FunctorExpr, Ident, Inl, InMu, Inr, Lam, Let, Mu, Nu, OutMu, OutNu,
    Pair, Prod, Proj1, Proj2, Program, Rec, Sum, Term, TmVar, TyApp, TyLam,
    TypeExpr, TVar, _fresh, _map_children, free_term_vars, free_type_vars,
    functor_apply, subst_term,
)
from .typecheck import TypingContext, FuseTypeError, typecheck_term


class NotAbstractable(Exception):
    def __init__(self, path: str, reason: str):
        self.path = path
        self.reason = reason
        super().__init__(f"{reason} (at {path})")


class ReplayMismatch(Exception):
    pass


@dataclass(frozen=True)
class RewriteStep:
    rule: str                 # "R1" | "R2" | "R3"
    path: tuple[str, ...]
    before: str
    after: str


@dataclass
class RewriteReport:
    steps: list[RewriteStep] = field(default_factory=list)
    iterations: int = 0
    converged: bool = True
    warnings: list[str] = field(default_factory=list)

    def counts(self) -> dict[str, int]:
        out = {"R1": 0, "R2": 0, "R3": 0}
        for s in self.steps:
            out[s.rule] += 1
        return out


ITERATION_CAP = 10_000


# ---------------------------------------------------------------------------
# Single-rule matchers (root position only)
# ---------------------------------------------------------------------------

def _carrier_of_algebra(ctx: TypingContext, alg: Term) -> TypeExpr:
    ty = typecheck_term(ctx, alg)
    if not isinstance(ty, Arrow):
        raise FuseTypeError("algebra is not a function", "R1")
    return ty.cod


def _state_of_coalgebra(ctx: TypingContext, coalg: Term) -> TypeExpr:
    ty = typecheck_term(ctx, coalg)
    if not isinstance(ty, Arrow):
        raise FuseTypeError("coalgebra is not a function", "R2")
    return ty.dom


def _match_r1(t: Term, ctx: TypingContext,
              warnings: Optional[list[str]] = None) -> Optional[Term]:
    def fused(c: Term, p: Term) -> Term:
        return App(TyApp(p, _carrier_of_algebra(ctx, c)), c)

    def mismatch(f1: FunctorExpr, f2: FunctorExpr) -> None:
        if warnings is not None:
            warnings.append(
                f"R1 skipped: fold functor {f1!r} differs from build functor {f2!r}")

    match t:
        case App(Cata(f1, c), App(Build(f2, p), x)):
            if f1 == f2:
                return App(fused(c, p), x)
            mismatch(f1, f2)
        case Compose(Cata(f1, c), Build(f2, p)):
            if f1 == f2:
                return fused(c, p)
            mismatch(f1, f2)
        case Compose(Cata(f1, c), Compose(Build(f2, p), h)):
            if f1 == f2:
                return Compose(fused(c, p), h)
            mismatch(f1, f2)
        case Compose(Compose(h, Cata(f1, c)), Build(f2, p)):
            if f1 == f2:
                return Compose(h, fused(c, p))
            mismatch(f1, f2)
    return None


def _match_r2(t: Term, ctx: TypingContext,
              warnings: Optional[list[str]] = None) -> Optional[Term]:
    def fused(q: Term, a: Term) -> Term:
        return App(TyApp(q, _state_of_coalgebra(ctx, a)), a)

    def mismatch(f1: FunctorExpr, f2: FunctorExpr) -> None:
        if warnings is not None:
            warnings.append(
                f"R2 skipped: cobuild functor {f1!r} differs from unfold "
                f"functor {f2!r}")

    match t:
        case App(Cobuild(f1, q), App(Ana(f2, a), x)):
            if f1 == f2:
                return App(fused(q, a), x)
            mismatch(f1, f2)
        case Compose(Cobuild(f1, q), Ana(f2, a)):
            if f1 == f2:
                return fused(q, a)
            mismatch(f1, f2)
        case Compose(Cobuild(f1, q), Compose(Ana(f2, a), h)):
            if f1 == f2:
                return Compose(fused(q, a), h)
            mismatch(f1, f2)
        case Compose(Compose(h, Cobuild(f1, q)), Ana(f2, a)):
            if f1 == f2:
                return Compose(h, fused(q, a))
            mismatch(f1, f2)
    return None


def _push_into_case(h: Term, case: Case) -> Case:
    lv, lb, rv, rb = case.lvar, case.lbody, case.rvar, case.rbody
    hfv = free_term_vars(h)
    if lv in hfv:
        lv2 = _fresh(lv, set(hfv | free_term_vars(lb)))
        lb = subst_term(lb, lv, TmVar(lv2))
        lv = lv2
    if rv in hfv:
        rv2 = _fresh(rv, set(hfv | free_term_vars(rb)))
        rb = subst_term(rb, rv, TmVar(rv2))
        rv = rv2
    return Case(case.scrut, lv, App(h, lb), rv, App(h, rb))


def _match_r3(t: Term, ctx: TypingContext,
              warnings: Optional[list[str]] = None) -> Optional[Term]:
    match t:
        case App(h, Case() as c):
            return _push_into_case(h, c)
        case Compose(h, Lam(x, ty, Case() as c)):
            hfv = free_term_vars(h)
            if x in hfv:
                x2 = _fresh(x, set(hfv | free_term_vars(c)))
                c = subst_term(c, x, TmVar(x2))
                x = x2
            return Lam(x, ty, _push_into_case(h, c))
    return None


_RULES: list[tuple[str, Callable]] = [
    ("R1", _match_r1), ("R2", _match_r2), ("R3", _match_r3),
]


# ---------------------------------------------------------------------------
# Traversal with typing contexts and paths
# ---------------------------------------------------------------------------

def _children_labels(t: Term):
    """Immediate subterms with edge labels (no typing information)."""
    match t:
        case Lam(_, _, b):
            yield "Lam.body", b
        case Rec(_, _, b):
            yield "Rec.body", b
        case TyLam(_, b):
            yield "TyLam.body", b
        case TyApp(f, _):
            yield "TyApp.fn", f
        case App(f, a):
            yield "App.fn", f
            yield "App.arg", a
        case Pair(l, r):
            yield "Pair.left", l
            yield "Pair.right", r
        case Proj1(a):
            yield "Proj1.arg", a
        case Proj2(a):
            yield "Proj2.arg", a
        case Inl(a, _):
            yield "Inl.arg", a
        case Inr(a, _):
            yield "Inr.arg", a
        case Case(s, _, lb, _, rb):
            yield "Case.scrut", s
            yield "Case.left", lb
            yield "Case.right", rb
        case InMu(_, a):
            yield "InMu.arg", a
        case OutMu(_, a):
            yield "OutMu.arg", a
        case Cata(_, a):
            yield "Cata.algebra", a
        case OutNu(_, a):
            yield "OutNu.arg", a
        case Ana(_, a):
            yield "Ana.coalgebra", a
        case Build(_, a):
            yield "Build.producer", a
        case Cobuild(_, a):
            yield "Cobuild.consumer", a
        case Compose(h, g):
            yield "Compose.after", h
            yield "Compose.before", g
        case Let(_, bound, b):
            yield "Let.bound", bound
            yield "Let.body", b
        case Add(l, r):
            yield "Add.left", l
            yield "Add.right", r
        case _:
            return


def _children(t: Term, ctx: TypingContext):
    """Immediate subterms with labels and extended typing contexts.

    Contexts are best-effort: where a binder's type cannot be recovered
    (open fragments), the child is yielded under the unextended context;
    only R1/R2 matching consults types, and it fails loudly if starved.
    """
    def scrut_type(s: Term):
        try:
            return typecheck_term(ctx, s)
        except FuseTypeError:
            return None

    match t:
        case Lam(v, ty, b):
            yield "Lam.body", b, ctx.bind(v, ty)
        case Rec(v, ty, b):
            yield "Rec.body", b, ctx.bind(v, ty)
        case TyLam(v, b):
            yield "TyLam.body", b, ctx.bind_tyvar(v)
        case Case(s, lv, lb, rv, rb):
            st = scrut_type(s)
            yield "Case.scrut", s, ctx
            if isinstance(st, Sum):
                yield "Case.left", lb, ctx.bind(lv, st.left)
                yield "Case.right", rb, ctx.bind(rv, st.right)
            else:
                yield "Case.left", lb, ctx
                yield "Case.right", rb, ctx
        case Let(v, bound, b):
            yield "Let.bound", bound, ctx
            bt = scrut_type(bound)
            yield "Let.body", b, (ctx.bind(v, bt) if bt is not None else ctx)
        case _:
            for label, child in _children_labels(t):
                yield label, child, ctx


def _replace_child(t: Term, label: str, new: Term) -> Term:
    rebuilt = {
        "Lam.body": lambda: Lam(t.var, t.ty, new),
        "Rec.body": lambda: Rec(t.var, t.ty, new),
        "TyLam.body": lambda: TyLam(t.tyvar, new),
        "TyApp.fn": lambda: TyApp(new, t.ty),
        "App.fn": lambda: App(new, t.arg),
        "App.arg": lambda: App(t.fn, new),
        "Pair.left": lambda: Pair(new, t.right),
        "Pair.right": lambda: Pair(t.left, new),
        "Proj1.arg": lambda: Proj1(new),
        "Proj2.arg": lambda: Proj2(new),
        "Inl.arg": lambda: Inl(new, t.ann),
        "Inr.arg": lambda: Inr(new, t.ann),
        "Case.scrut": lambda: Case(new, t.lvar, t.lbody, t.rvar, t.rbody),
        "Case.left": lambda: Case(t.scrut, t.lvar, new, t.rvar, t.rbody),
        "Case.right": lambda: Case(t.scrut, t.lvar, t.lbody, t.rvar, new),
        "InMu.arg": lambda: InMu(t.functor, new),
        "OutMu.arg": lambda: OutMu(t.functor, new),
        "Cata.algebra": lambda: Cata(t.functor, new),
        "OutNu.arg": lambda: OutNu(t.functor, new),
        "Ana.coalgebra": lambda: Ana(t.functor, new),
        "Build.producer": lambda: Build(t.functor, new),
        "Cobuild.consumer": lambda: Cobuild(t.functor, new),
        "Compose.after": lambda: Compose(new, t.before),
        "Compose.before": lambda: Compose(t.after, new),
        "Let.bound": lambda: Let(t.var, new, t.body),
        "Let.body": lambda: Let(t.var, t.bound, new),
        "Add.left": lambda: Add(new, t.right),
        "Add.right": lambda: Add(t.left, new),
    }
    return rebuilt[label]()


def _subterm_at(t: Term, path: tuple[str, ...], ctx: TypingContext):
    for label in path:
        for lab, child, cctx in _children(t, ctx):
            if lab == label:
                t, ctx = child, cctx
                break
        else:
            raise ReplayMismatch(f"no child {label}")
    return t, ctx


def _replace_at(t: Term, path: tuple[str, ...], new: Term) -> Term:
    if not path:
        return new
    label = path[0]
    for lab, child in _children_labels(t):
        if lab == label:
            return _replace_child(t, label, _replace_at(child, path[1:], new))
    raise ReplayMismatch(f"no child {label}")


def _find_first_redex(t: Term, ctx: TypingContext, warnings: list[str],
                      path: tuple[str, ...] = ()):
    """Post-order, left-to-right: innermost-leftmost redex first."""
    for label, child, cctx in _children(t, ctx):
        found = _find_first_redex(child, cctx, warnings, path + (label,))
        if found is not None:
            return found
    for rule, matcher in _RULES:
        new = matcher(t, ctx, warnings)
        if new is not None:
            return path, rule, t, new
    return None


def fuse_fixpoint(t: Term, ctx: Optional[TypingContext] = None,
                  cap: int = ITERATION_CAP) -> tuple[Term, RewriteReport]:
    """Apply R1/R2/R3 bottom-up until no redex remains (or the cap trips)."""
    ctx = ctx or TypingContext()
    report = RewriteReport()
    for _ in range(cap):
        scan_warnings: list[str] = []
        found = _find_first_redex(t, ctx, scan_warnings)
        if found is None:
            report.warnings = list(dict.fromkeys(report.warnings + scan_warnings))
            return t, report
        report.warnings = list(dict.fromkeys(report.warnings + scan_warnings))
        path, rule, before, after = found
        report.steps.append(RewriteStep(rule, path, print_term(before),
                                        print_term(after)))
        report.iterations += 1
        t = _replace_at(t, path, after)
    report.converged = False
    return t, report


def replay_rewrites(t: Term, report: RewriteReport,
                    ctx: Optional[TypingContext] = None) -> Term:
    """Re-apply the recorded rewrites; must reproduce the fused term."""
    ctx = ctx or TypingContext()
    for step in report.steps:
        sub, sctx = _subterm_at(t, step.path, ctx)
        if print_term(sub) != step.before:
            raise ReplayMismatch(
                f"at {'/'.join(step.path)}: expected {step.before}, "
                f"found {print_term(sub)}")
        matcher = dict(_RULES)[step.rule]
        new = matcher(sub, sctx, None)
        if new is None or print_term(new) != step.after:
            raise ReplayMismatch(f"rule {step.rule} did not re-fire at "
                                 f"{'/'.join(step.path)}")
        t = _replace_at(t, step.path, new)
    return t


def intermediate_terms(t: Term, report: RewriteReport,
                       ctx: Optional[TypingContext] = None) -> list[Term]:
    """All terms along the recorded rewrite sequence, initial one included."""
    ctx = ctx or TypingContext()
    out = [t]
    for step in report.steps:
        sub, sctx = _subterm_at(t, step.path, ctx)
        matcher = dict(_RULES)[step.rule]
        new = matcher(sub, sctx, None)
        if new is None:
            raise ReplayMismatch(f"rule {step.rule} did not re-fire")
        t = _replace_at(t, step.path, new)
        out.append(t)
    return out


# Single-rule passes (one bottom-up sweep each; the fixpoint driver iterates).

def _one_pass(t: Term, ctx: TypingContext, matcher) -> Term:
    for label, child, cctx in list(_children(t, ctx)):
        t = _replace_child(t, label, _one_pass(child, cctx, matcher))
    new = matcher(t, ctx, None)
    return new if new is not None else t


def rewrite_case_compose(t: Term, ctx: Optional[TypingContext] = None) -> Term:
    return _one_pass(t, ctx or TypingContext(), _match_r3)


def rewrite_cata_build(t: Term, ctx: Optional[TypingContext] = None) -> Term:
    return _one_pass(t, ctx or TypingContext(), _match_r1)


def rewrite_ana_cobuild(t: Term, ctx: Optional[TypingContext] = None) -> Term:
    return _one_pass(t, ctx or TypingContext(), _match_r2)


# ---------------------------------------------------------------------------
# Termination measure (asserted to decrease per recorded step in tests)
# ---------------------------------------------------------------------------

def _case_spine(t: Term) -> int:
    if isinstance(t, Case):
        return 1 + _case_spine(t.lbody) + _case_spine(t.rbody)
    return 0


def _is_r12_redex(t: Term) -> bool:
    match t:
        case (App(Cata(f1, _), App(Build(f2, _), _))
              | Compose(Cata(f1, _), Build(f2, _))
              | Compose(Cata(f1, _), Compose(Build(f2, _), _))
              | Compose(Compose(_, Cata(f1, _)), Build(f2, _))
              | App(Cobuild(f1, _), App(Ana(f2, _), _))
              | Compose(Cobuild(f1, _), Ana(f2, _))
              | Compose(Cobuild(f1, _), Compose(Ana(f2, _), _))
              | Compose(Compose(_, Cobuild(f1, _)), Ana(f2, _))):
            return f1 == f2
    return False


def fusion_measure(t: Term) -> tuple[int, int]:
    """(recursor/builder cut pairs, case spines under application).

    Each R1/R2 step removes a cut pair; each R3 step shortens a case spine
    under an application; the pair decreases lexicographically per rewrite.
    """
    cuts = 0
    case_under_app = 0

    def go(t: Term) -> None:
        nonlocal cuts, case_under_app
        if _is_r12_redex(t):
            cuts += 1
        match t:
            case App(_, arg):
                case_under_app += _case_spine(arg)
            case Compose(_, Lam(_, _, body)):
                case_under_app += _case_spine(body)
        for _, child in _children_labels(t):
            go(child)

    go(t)
    return cuts, case_under_app


# ---------------------------------------------------------------------------
# Reification: any producer/consumer becomes a polymorphic body (always
# correct, no deforestation gain)
# ---------------------------------------------------------------------------

def reify_build(f: Term, functor: FunctorExpr, ctx: TypingContext) -> Term:
    """For f : A -> mu[F], the body  tyfun X => fun c => fun a => fold[F](c) (f a)."""
    ty = typecheck_term(ctx, f)
    if not (isinstance(ty, Arrow) and ty.cod == Mu(functor)):
        raise FuseTypeError(
            f"reify_build needs A -> mu[F], got {ty!r}", "reify_build")
    src = ty.dom
    avoid = set(free_term_vars(f))
    x = _fresh("X", set(free_type_vars(src)))
    c = _fresh("c", avoid)
    a = _fresh("a", avoid | {c})
    fx = functor_apply(functor, TVar(x))
    return TyLam(x, Lam(c, Arrow(fx, TVar(x)),
                        Lam(a, src,
                            App(Cata(functor, TmVar(c)), App(f, TmVar(a))))))


def reify_cobuild(g: Term, functor: FunctorExpr, ctx: TypingContext) -> Term:
    """For g : nu[F] -> B, the body  tyfun X => fun d => fun x => g (unfold[F](d) x)."""
    ty = typecheck_term(ctx, g)
    if not (isinstance(ty, Arrow) and ty.dom == Nu(functor)):
        raise FuseTypeError(
            f"reify_cobuild needs nu[F] -> B, got {ty!r}", "reify_cobuild")
    res = ty.cod
    avoid = set(free_term_vars(g))
    x = _fresh("X", set(free_type_vars(res)))
    d = _fresh("d", avoid)
    v = _fresh("x", avoid | {d})
    fx = functor_apply(functor, TVar(x))
    return TyLam(x, Lam(d, Arrow(TVar(x), fx),
                        Lam(v, TVar(x),
                            App(g, App(Ana(functor, TmVar(d)), TmVar(v))))))


def alg_to_cata(functor: FunctorExpr, carrier: TypeExpr) -> Term:
    """(F X -> X) -> (mu[F] -> X), sending an algebra to its fold."""
    fx = functor_apply(functor, carrier)
    return Lam("x", Arrow(fx, carrier), Cata(functor, TmVar("x")))


def coalg_to_ana(functor: FunctorExpr, state: TypeExpr) -> Term:
    """(X -> F X) -> (X -> nu[F]), sending a coalgebra to its unfold."""
    fx = functor_apply(functor, state)
    return Lam("x", Arrow(state, fx), Ana(functor, TmVar("x")))


# ---------------------------------------------------------------------------
# Abstraction: syntactic producer/consumer generalization (partial; falls
# back to reification when its preconditions fail)
# ---------------------------------------------------------------------------

def _type_replace(ty: TypeExpr, target: TypeExpr, repl: TypeExpr) -> TypeExpr:
    if ty == target:
        return repl
    match ty:
        case Arrow(d, c):
            return Arrow(_type_replace(d, target, repl),
                         _type_replace(c, target, repl))
        case Sum(l, r):
            return Sum(_type_replace(l, target, repl),
                       _type_replace(r, target, repl))
        case Prod(l, r):
            return Prod(_type_replace(l, target, repl),
                        _type_replace(r, target, repl))
        case _:
            return ty


def _retype_annotations(t: Term, target: TypeExpr, repl: TypeExpr) -> Term:
    def rt(ty: TypeExpr) -> TypeExpr:
        return _type_replace(ty, target, repl)

    def go(t: Term) -> Term:
        match t:
            case Lam(v, ty, b):
                return Lam(v, rt(ty), go(b))
            case Rec(v, ty, b):
                return Rec(v, rt(ty), go(b))
            case Inl(a, ann):
                return Inl(go(a), rt(ann))
            case Inr(a, ann):
                return Inr(go(a), rt(ann))
            case TyApp(f, ty):
                return TyApp(go(f), rt(ty))
            case _:
                return _map_children(t, go)

    return go(t)


def abstract_build(f: Term, functor: FunctorExpr, ctx: TypingContext) -> Term:
    """Rewrite a producer body over `in[F]` into a polymorphic one over `c`.

    The body may construct its result only through in[F] at result positions;
    recursive self-calls (via rec) are re-threaded so the abstracted body
    recurses at the instantiating carrier.  Raises NotAbstractable otherwise.
    """
    ty = typecheck_term(ctx, f)
    if not (isinstance(ty, Arrow) and ty.cod == Mu(functor)):
        raise NotAbstractable("·", "producer is not of type A -> mu[F]")
    src = ty.dom

    self_name: Optional[str] = None
    inner = f
    if isinstance(inner, Rec):
        self_name = inner.var
        inner = inner.body
    if not isinstance(inner, Lam):
        raise NotAbstractable("·", "producer body is not an abstraction")

    x = _fresh("X", set(free_type_vars(src)))
    c = _fresh("c", set(free_term_vars(f)) | {inner.var})
    fx = functor_apply(functor, TVar(x))

    def check_arg(t: Term, path: str) -> Term:
        # Non-result positions must not build the result type or self-call.
        for bad, why in ((InMu, "constructs the fused-away type outside a "
                               "result position"),
                         (Cata, "folds over the fused-away type"),
                         (OutMu, "pattern-matches the fused-away type")):
            if _contains(t, bad, functor):
                raise NotAbstractable(path, why)
        if self_name is not None and self_name in free_term_vars(t):
            raise NotAbstractable(path, "self-call outside a result position")
        return t

    def tr(t: Term, path: str) -> Term:
        match t:
            case InMu(f2, e) if f2 == functor:
                return App(TmVar(c), tr_payload(functor, e, path + "/InMu.arg"))
            case App(TmVar(name), u) if name == self_name:
                return App(TmVar(name), check_arg(u, path + "/App.arg"))
            case Case(s, lv, lb, rv, rb):
                return Case(check_arg(s, path + "/Case.scrut"),
                            lv, tr(lb, path + "/Case.left"),
                            rv, tr(rb, path + "/Case.right"))
            case Let(v, bound, b):
                return Let(v, check_arg(bound, path + "/Let.bound"),
                           tr(b, path + "/Let.body"))
        raise NotAbstractable(path, "result is not built with in[F] here")

    def tr_payload(shape: FunctorExpr, e: Term, path: str) -> Term:
        match shape:
            case Const(_):
                return check_arg(e, path)
            case Ident():
                return tr(e, path)
            case FProd(l, r):
                if not isinstance(e, Pair):
                    raise NotAbstractable(path, "payload is not a literal pair")
                return Pair(tr_payload(l, e.left, path + "/Pair.left"),
                            tr_payload(r, e.right, path + "/Pair.right"))
            case FSum(l, r):
                ann = Sum(functor_apply(l, TVar(x)), functor_apply(r, TVar(x)))
                if isinstance(e, Inl):
                    return Inl(tr_payload(l, e.arg, path + "/Inl.arg"), ann)
                if isinstance(e, Inr):
                    return Inr(tr_payload(r, e.arg, path + "/Inr.arg"), ann)
                raise NotAbstractable(path, "payload is not a literal injection")
        raise AssertionError(shape)

    new_body = Lam(inner.var, src, tr(inner.body, "Lam.body"))
    new_body = _retype_annotations(new_body, Mu(functor), TVar(x))
    if self_name is not None:
        inner_rec: Term = Rec(self_name, Arrow(src, TVar(x)), new_body)
    else:
        inner_rec = new_body
    p = TyLam(x, Lam(c, Arrow(fx, TVar(x)), inner_rec))

    # The produced body must check as forall X. (F X -> X) -> A -> X.
    try:
        typecheck_term(ctx, Build(functor, p))
    except FuseTypeError as e:
        raise NotAbstractable("·", f"abstraction does not typecheck: {e}") from e
    return p


def abstract_cobuild(g: Term, functor: FunctorExpr, ctx: TypingContext) -> Term:
    """Rewrite a consumer over `out[F]` into a polymorphic one over `d`."""
    ty = typecheck_term(ctx, g)
    if not (isinstance(ty, Arrow) and ty.dom == Nu(functor)):
        raise NotAbstractable("·", "consumer is not of type nu[F] -> B")
    res = ty.cod

    self_name: Optional[str] = None
    inner = g
    if isinstance(inner, Rec):
        self_name = inner.var
        inner = inner.body
    if not isinstance(inner, Lam):
        raise NotAbstractable("·", "consumer body is not an abstraction")

    x = _fresh("X", set(free_type_vars(res)))
    d = _fresh("d", set(free_term_vars(g)) | {inner.var})
    fx = functor_apply(functor, TVar(x))

    def tr(t: Term, path: str) -> Term:
        match t:
            case OutNu(f2, e) if f2 == functor:
                return App(TmVar(d), tr(e, path + "/OutNu.arg"))
            case Ana(f2, _) if f2 == functor:
                raise NotAbstractable(path, "consumer rebuilds the fused-away "
                                            "coinductive type")
            case _:
                return _map_children(t, lambda u: tr(u, path + "/."))

    new_body = Lam(inner.var, TVar(x), tr(inner.body, "Lam.body"))
    new_body = _retype_annotations(new_body, Nu(functor), TVar(x))
    if self_name is not None:
        inner_rec: Term = Rec(self_name, Arrow(TVar(x), res), new_body)
    else:
        inner_rec = new_body
    q = TyLam(x, Lam(d, Arrow(TVar(x), fx), inner_rec))

    try:
        typecheck_term(ctx, Cobuild(functor, q))
    except FuseTypeError as e:
        raise NotAbstractable("·", f"abstraction does not typecheck: {e}") from e
    return q


def _contains(t: Term, node_type, functor: FunctorExpr) -> bool:
    if isinstance(t, node_type) and getattr(t, "functor", None) == functor:
        return True
    return any(_contains(child, node_type, functor)
               for _, child in _children_labels(t))


# ---------------------------------------------------------------------------
# Differential verification
# ---------------------------------------------------------------------------

@dataclass
class SampleResult:
    input: str
    equal: bool
    original: str
    fused: str
    original_profile: AllocationProfile
    fused_profile: AllocationProfile
    error: Optional[str] = None


@dataclass
class EquivalenceReport:
    samples: list[SampleResult] = field(default_factory=list)
    all_equal: bool = True

    def first_unequal(self) -> Optional[SampleResult]:
        for s in self.samples:
            if not s.equal:
                return s
        return None


def _run_on(program: Program, term: Term, inp: Value,
            fuel: int) -> tuple[Optional[Value], AllocationProfile, Optional[str]]:
    interp = Interp(fuel)
    env = program_env(program, interp)
    fv = interp.eval(term, env)
    interp.profile = AllocationProfile()
    try:
        return interp.apply(fv, inp), interp.profile, None
    except FuelExhausted as e:
        return None, e.profile, "fuel exhausted"


def verify_equivalence(program: Program, orig: Term, fused: Term,
                       in_type: TypeExpr, samples: int = 200,
                       fuel: int = DEFAULT_FUEL,
                       out_type: Optional[TypeExpr] = None) -> EquivalenceReport:
    """Run both terms on canonical inputs and compare results exactly.

    Result types must be first-order; fuel exhaustion is recorded per sample
    rather than aborting the run.
    """
    if out_type is not None and not is_first_order_type(out_type):
        raise FuseTypeError("differential comparison needs a first-order "
                            "result type", "verify_equivalence")

    def work() -> EquivalenceReport:
        report = EquivalenceReport()
        for inp in canonical_sample(in_type, samples):
            v1, p1, e1 = _run_on(program, orig, inp, fuel)
            v2, p2, e2 = _run_on(program, fused, inp, fuel)
            if e1 or e2:
                equal = False
                err = e1 or e2
            else:
                equal = value_eq(v1, v2)
                err = None
            report.samples.append(SampleResult(
                show_value(inp), equal,
                show_value(v1) if v1 is not None else "<none>",
                show_value(v2) if v2 is not None else "<none>",
                p1, p2, err))
            if not equal:
                report.all_equal = False
        return report

    return run_deep(work)
