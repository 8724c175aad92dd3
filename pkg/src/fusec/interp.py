"""Call-by-value interpreter with step fuel and allocation instrumentation.

Coinductive values are lazy (state, coalgebra) pairs observed one step at a
time; every inductive constructor cell and every coinductive observation is
counted per functor, which is what the deforestation claims are measured
against.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

from .syntax import (
    Add, Ana, App, Arrow, Build, Case, Cata, Cobuild, Compose, Const, Forall,
    FSum, FProd, FunctorExpr, Ident, Inl, InMu, Inr, Lam, Let, Mu, Nat,
    NatLit, Nu, OutMu, OutNu, Pair, Prod, Program, Proj1, Proj2, Rec, Sum,
    Term, TermDecl, TmVar, TyApp, TyLam, TypeExpr, TVar, Unit, UnitVal,
    functor_apply, subst_type_in_term,
)

DEFAULT_FUEL = 10**6


class FuelExhausted(Exception):
    def __init__(self, profile: "AllocationProfile"):
        self.profile = profile
        super().__init__(f"fuel exhausted after {profile.steps} steps")


class Stuck(Exception):
    """Evaluation reached an ill-formed state; signals a checker bug."""


class Unsupported(Exception):
    pass


# ---------------------------------------------------------------------------
# Values
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VUnit:
    def __repr__(self) -> str:
        return "()"


@dataclass(frozen=True)
class VNat:
    value: int


@dataclass(frozen=True)
class VPair:
    left: "Value"
    right: "Value"


@dataclass(frozen=True)
class VInl:
    value: "Value"


@dataclass(frozen=True)
class VInr:
    value: "Value"


@dataclass(frozen=True)
class VMu:
    functor: "FunctorExpr"
    payload: "Value"


@dataclass(eq=False)
class VNu:
    # Observed only through out; the state is never inspected directly.
    functor: "FunctorExpr"
    state: "Value"
    coalg: "Value"


@dataclass(eq=False)
class VClosure:
    env: dict
    var: str
    body: "Term"
    self_name: Optional[str] = None


@dataclass(eq=False)
class VTyClosure:
    env: dict
    tyvar: str
    body: "Term"
    self_name: Optional[str] = None


@dataclass(eq=False)
class VPrim:
    # Host-level function value (recursor instances, composition, bridges).
    name: str
    fn: Callable[["Value"], "Value"]


Value = VUnit | VNat | VPair | VInl | VInr | VMu | VNu | VClosure | VTyClosure | VPrim

VUNIT = VUnit()


@dataclass
class AllocationProfile:
    mu_cells: dict = field(default_factory=dict)
    nu_observations: dict = field(default_factory=dict)
    steps: int = 0

    def count_mu(self, f: FunctorExpr) -> None:
        self.mu_cells[f] = self.mu_cells.get(f, 0) + 1

    def count_nu(self, f: FunctorExpr) -> None:
        self.nu_observations[f] = self.nu_observations.get(f, 0) + 1

    def mu_count(self, f: FunctorExpr) -> int:
        return self.mu_cells.get(f, 0)

    def nu_count(self, f: FunctorExpr) -> int:
        return self.nu_observations.get(f, 0)

    def snapshot(self) -> "AllocationProfile":
        return AllocationProfile(dict(self.mu_cells), dict(self.nu_observations),
                                 self.steps)


# ---------------------------------------------------------------------------
# The machine
# ---------------------------------------------------------------------------

class Interp:
    def __init__(self, fuel: int = DEFAULT_FUEL):
        self.fuel = fuel
        self.profile = AllocationProfile()

    def _tick(self) -> None:
        self.profile.steps += 1
        if self.profile.steps > self.fuel:
            raise FuelExhausted(self.profile.snapshot())

    def eval(self, t: Term, env: dict) -> Value:
        self._tick()
        match t:
            case TmVar(name):
                try:
                    return env[name]
                except KeyError:
                    raise Stuck(f"unbound variable {name} at runtime") from None

            case Lam(v, _, body):
                return VClosure(env, v, body)

            case Rec(v, _, body):
                match body:
                    case Lam(x, _, b):
                        return VClosure(env, x, b, self_name=v)
                    case TyLam(x, b):
                        return VTyClosure(env, x, b, self_name=v)
                raise Stuck("rec body is not an abstraction")

            case App(fn, arg):
                fv = self.eval(fn, env)
                av = self.eval(arg, env)
                return self.apply(fv, av)

            case TyLam(v, body):
                return VTyClosure(env, v, body)

            case TyApp(fn, ty):
                return self.tyapply(self.eval(fn, env), ty)

            case UnitVal():
                return VUNIT

            case NatLit(n):
                return VNat(n)

            case Add(l, r):
                lv = self.eval(l, env)
                rv = self.eval(r, env)
                if isinstance(lv, VNat) and isinstance(rv, VNat):
                    return VNat(lv.value + rv.value)
                raise Stuck("add on non-numbers")

            case Pair(l, r):
                return VPair(self.eval(l, env), self.eval(r, env))

            case Proj1(a):
                v = self.eval(a, env)
                if isinstance(v, VPair):
                    return v.left
                raise Stuck("fst on non-pair")

            case Proj2(a):
                v = self.eval(a, env)
                if isinstance(v, VPair):
                    return v.right
                raise Stuck("snd on non-pair")

            case Inl(a, _):
                return VInl(self.eval(a, env))

            case Inr(a, _):
                return VInr(self.eval(a, env))

            case Case(s, lv, lb, rv, rb):
                sv = self.eval(s, env)
                if isinstance(sv, VInl):
                    return self.eval(lb, {**env, lv: sv.value})
                if isinstance(sv, VInr):
                    return self.eval(rb, {**env, rv: sv.value})
                raise Stuck("case on non-sum")

            case InMu(f, a):
                v = self.eval(a, env)
                self.profile.count_mu(f)
                return VMu(f, v)

            case OutMu(f, a):
                v = self.eval(a, env)
                if isinstance(v, VMu) and v.functor == f:
                    return v.payload
                raise Stuck("outmu on non-matching inductive value")

            case Cata(f, alg):
                return self._cata_value(f, self.eval(alg, env))

            case OutNu(f, a):
                v = self.eval(a, env)
                return self.observe(f, v)

            case Ana(f, coalg):
                av = self.eval(coalg, env)
                return VPrim("unfold", lambda v: VNu(f, v, av))

            case Build(f, producer):
                pv = self.eval(producer, env)
                return self._build_value(f, pv)

            case Cobuild(f, consumer):
                qv = self.eval(consumer, env)
                return self._cobuild_value(f, qv)

            case Compose(h, g):
                hv = self.eval(h, env)
                gv = self.eval(g, env)
                return VPrim("compose", lambda v: self.apply(hv, self.apply(gv, v)))

            case Let(v, bound, body):
                bv = self.eval(bound, env)
                return self.eval(body, {**env, v: bv})

        raise Stuck(f"unknown term form {type(t).__name__}")

    def apply(self, fv: Value, av: Value) -> Value:
        self._tick()
        match fv:
            case VClosure(cenv, var, body, self_name):
                env2 = {**cenv, var: av}
                if self_name is not None:
                    env2[self_name] = fv
                return self.eval(body, env2)
            case VPrim(_, fn):
                return fn(av)
        raise Stuck(f"application of non-function {type(fv).__name__}")

    def tyapply(self, fv: Value, ty: TypeExpr) -> Value:
        self._tick()
        if not isinstance(fv, VTyClosure):
            raise Stuck("type application of non-polymorphic value")
        env = fv.env
        if fv.self_name is not None:
            env = {**env, fv.self_name: fv}
        return self.eval(subst_type_in_term(fv.body, fv.tyvar, ty), env)

    def fmap_value(self, f: FunctorExpr, fn: Callable[[Value], Value],
                   v: Value) -> Value:
        self._tick()
        match f:
            case Const(_):
                return v
            case Ident():
                return fn(v)
            case FProd(l, r):
                if not isinstance(v, VPair):
                    raise Stuck("functor product expects a pair")
                return VPair(self.fmap_value(l, fn, v.left),
                             self.fmap_value(r, fn, v.right))
            case FSum(l, r):
                if isinstance(v, VInl):
                    return VInl(self.fmap_value(l, fn, v.value))
                if isinstance(v, VInr):
                    return VInr(self.fmap_value(r, fn, v.value))
                raise Stuck("functor sum expects an injection")
        raise Stuck(f"unknown functor {f!r}")

    def observe(self, f: FunctorExpr, v: Value) -> Value:
        """One `out` step on a coinductive value."""
        if not isinstance(v, VNu) or v.functor != f:
            raise Stuck("out on non-matching coinductive value")
        self.profile.count_nu(f)
        step = self.apply(v.coalg, v.state)
        return self.fmap_value(f, lambda s: VNu(f, s, v.coalg), step)

    def _cata_value(self, f: FunctorExpr, alg: Value) -> Value:
        def fold(v: Value) -> Value:
            if not isinstance(v, VMu) or v.functor != f:
                raise Stuck("fold on non-matching inductive value")
            return self.apply(alg, self.fmap_value(f, fold, v.payload))
        return VPrim("fold", fold)

    def _inmu_prim(self, f: FunctorExpr) -> Value:
        def mk(v: Value) -> Value:
            self.profile.count_mu(f)
            return VMu(f, v)
        return VPrim("in", mk)

    def _outnu_prim(self, f: FunctorExpr) -> Value:
        return VPrim("out", lambda v: self.observe(f, v))

    def _build_value(self, f: FunctorExpr, pv: Value) -> Value:
        def run(v: Value) -> Value:
            inst = self.apply(self.tyapply(pv, Mu(f)), self._inmu_prim(f))
            return self.apply(inst, v)
        return VPrim("build", run)

    def _cobuild_value(self, f: FunctorExpr, qv: Value) -> Value:
        def run(v: Value) -> Value:
            inst = self.apply(self.tyapply(qv, Nu(f)), self._outnu_prim(f))
            return self.apply(inst, v)
        return VPrim("cobuild", run)


# ---------------------------------------------------------------------------
# Programs
# ---------------------------------------------------------------------------

def program_env(program: Program, interp: Interp) -> dict:
    env: dict = {}
    for d in program.decls:
        if isinstance(d, TermDecl):
            env[d.name] = interp.eval(d.term, dict(env))
    return env


def eval_term(t: Term, env: Optional[dict] = None,
              fuel: int = DEFAULT_FUEL) -> tuple[Value, AllocationProfile]:
    interp = Interp(fuel)
    v = interp.eval(t, env or {})
    return v, interp.profile


def run_with_profile(program: Program, main: str, input_value: Value,
                     fuel: int = DEFAULT_FUEL) -> tuple[Value, AllocationProfile]:
    """Evaluate `main input` under a fresh profile.

    Runs on a wide-stack worker thread: evaluation recurses through host
    frames, and CPython's default stack is too shallow for long lists.
    """
    def work() -> tuple[Value, AllocationProfile]:
        interp = Interp(fuel)
        env = program_env(program, interp)
        if main not in env:
            raise KeyError(f"no declaration named {main}")
        interp.profile = AllocationProfile()  # measure the run, not the prelude
        v = interp.apply(env[main], input_value)
        return v, interp.profile

    return run_deep(work)


def run_deep(fn: Callable[[], "object"]):
    """Run `fn` on a thread with a large stack and raised recursion limit."""
    import sys

    result: list = []
    error: list = []

    def target() -> None:
        old = sys.getrecursionlimit()
        sys.setrecursionlimit(500_000)
        try:
            result.append(fn())
        except BaseException as e:  # re-raised on the caller's thread
            error.append(e)
        finally:
            sys.setrecursionlimit(old)

    old_size = threading.stack_size(512 * 1024 * 1024)
    try:
        th = threading.Thread(target=target)
        th.start()
        th.join()
    finally:
        threading.stack_size(old_size)
    if error:
        raise error[0]
    return result[0]


# ---------------------------------------------------------------------------
# Value utilities
# ---------------------------------------------------------------------------

def is_first_order_type(t: TypeExpr) -> bool:
    match t:
        case Unit() | Nat() | TVar(_):
            return True
        case Prod(l, r) | Sum(l, r):
            return is_first_order_type(l) and is_first_order_type(r)
        case Mu(_):
            return True
        case _:
            return False


def value_eq(a: Value, b: Value) -> bool:
    """Exact equality of first-order values."""
    match (a, b):
        case (VUnit(), VUnit()):
            return True
        case (VNat(x), VNat(y)):
            return x == y
        case (VPair(l1, r1), VPair(l2, r2)):
            return value_eq(l1, l2) and value_eq(r1, r2)
        case (VInl(x), VInl(y)) | (VInr(x), VInr(y)):
            return type(a) is type(b) and value_eq(x, y)
        case (VMu(f1, p1), VMu(f2, p2)):
            return f1 == f2 and value_eq(p1, p2)
        case (VInl(_), VInr(_)) | (VInr(_), VInl(_)):
            return False
    if type(a) is not type(b):
        return False
    raise Unsupported(f"equality on non-first-order value {type(a).__name__}")


def _list_arity(f: FunctorExpr) -> Optional[int]:
    """For 1 + T1 * ... * Tk * Id list-like functors, the component count k."""
    match f:
        case FSum(Const(Unit()), rest):
            k = 0
            while isinstance(rest, FProd):
                k += 1
                rest = rest.right
            if isinstance(rest, Ident) and k:
                return k
    return None


def show_value(v: Value) -> str:
    match v:
        case VUnit():
            return "()"
        case VNat(n):
            return str(n)
        case VPair(l, r):
            return f"({show_value(l)}, {show_value(r)})"
        case VInl(x):
            return f"inl {show_value(x)}"
        case VInr(x):
            return f"inr {show_value(x)}"
        case VMu(f, _):
            arity = _list_arity(f)
            if arity is not None:
                items = []
                cur = v
                while isinstance(cur.payload, VInr):
                    node = cur.payload.value
                    elems = []
                    for _ in range(arity):
                        elems.append(node.left)
                        node = node.right
                    if arity == 1:
                        items.append(show_value(elems[0]))
                    else:
                        items.append("(" + ", ".join(show_value(e) for e in elems)
                                     + ")")
                    cur = node
                    if not isinstance(cur, VMu):
                        return f"in {show_value(v.payload)}"
                return "[" + ", ".join(items) + "]"
            return f"in {show_value(v.payload)}"
        case VNu(_, _, _):
            return "<coinductive>"
        case VPrim(name, _):
            return f"<{name}>"
        case VClosure(_, _, _, _):
            return "<fun>"
        case VTyClosure(_, _, _, _):
            return "<tyfun>"
    return repr(v)


# ---------------------------------------------------------------------------
# Canonical input enumeration
# ---------------------------------------------------------------------------

def canonical_values(t: TypeExpr, budget: int) -> Iterator[Value]:
    """Deterministic enumeration of first-order values, smallest first.

    Nats range over 0..budget; inductive values are bounded to `budget`
    levels of recursion (lists: length <= budget); products enumerate
    componentwise in lexicographic order, sums left injections first.
    """
    match t:
        case Unit():
            yield VUNIT
        case Nat():
            for n in range(budget + 1):
                yield VNat(n)
        case Prod(l, r):
            rs = list(canonical_values(r, budget))
            for lv in canonical_values(l, budget):
                for rv in rs:
                    yield VPair(lv, rv)
        case Sum(l, r):
            for lv in canonical_values(l, budget):
                yield VInl(lv)
            for rv in canonical_values(r, budget):
                yield VInr(rv)
        case Mu(f):
            ordered: list[Value] = []
            seen: set[Value] = set()
            for _depth in range(budget + 1):
                layer = [VMu(f, p) for p in _payloads(f, f, list(ordered), budget)]
                new = [v for v in layer if v not in seen]
                if not new:
                    break
                for v in new:
                    seen.add(v)
                    ordered.append(v)
                    yield v
        case _:
            raise Unsupported(f"cannot enumerate values of {t!r}")


def _payloads(shape: FunctorExpr, f: FunctorExpr, subs: list[Value],
              budget: int) -> Iterator[Value]:
    match shape:
        case Const(ty):
            yield from canonical_values(ty, budget)
        case Ident():
            yield from subs
        case FProd(l, r):
            rs = list(_payloads(r, f, subs, budget))
            for lv in _payloads(l, f, subs, budget):
                for rv in rs:
                    yield VPair(lv, rv)
        case FSum(l, r):
            for lv in _payloads(l, f, subs, budget):
                yield VInl(lv)
            for rv in _payloads(r, f, subs, budget):
                yield VInr(rv)


def canonical_sample(t: TypeExpr, count: int, max_budget: int = 16) -> list[Value]:
    """The first `count` canonical values, growing the budget as needed."""
    for budget in range(1, max_budget + 1):
        vals = []
        for v in canonical_values(t, budget):
            vals.append(v)
            if len(vals) >= count:
                return vals
    return vals


# Convenience constructors used by tests and demos.

def nat_list_value(f: FunctorExpr, items: list[int]) -> Value:
    """Build a mu-list value [i0, i1, ...] for a functor 1 + Nat * Id.

    Built host-side, so the cells do not enter any run's profile (inputs
    exist before the measured run starts).
    """
    out: Value = VMu(f, VInl(VUNIT))
    for n in reversed(items):
        out = VMu(f, VInr(VPair(VNat(n), out)))
    return out


def value_to_nat(v: Value) -> int:
    if not isinstance(v, VNat):
        raise Unsupported("expected a number result")
    return v.value
