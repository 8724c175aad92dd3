"""Finite-set semantics and checkers for conditionally natural families.

A family theta_X : W(X,X) -> V(X) over a mixed-variance W and covariant V is
checked exhaustively over all small carriers: for every map u : X -> Y and
all w, w', whenever transporting w forward along u meets transporting w'
backward, the images under theta must agree.  Fixpoint types are excluded
here (they are unbounded); polymorphic bodies involving them are instead
spot-checked through the interpreter (`check_lemma1_sampled`).

Finite elements: Unit is (), a carrier of size k is 0..k-1, sums are
("l", e) / ("r", e), products are plain pairs, and functions are tables
("fn", (out_0, ..., out_n)) indexed by the domain enumeration.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional

from .interp import (
    DEFAULT_FUEL, AllocationProfile, FuelExhausted, Interp, Unsupported,
    program_env, run_deep, show_value, value_eq,
)
from .printer import print_term, print_type
from .syntax import (
    App, Arrow, BArrow, BConst, BifunctorExpr, BProd, BSum, Case, Compose,
    Const, Forall, FProd, FSum, FunctorExpr, Ident, Inl, InMu, Inr, Lam, Let,
    Mu, Nat, Nu, OutNu, Pair, Pos, Prod, Program, Proj1, Proj2, Sum, Term,
    TmVar, TyLam, TypeExpr, TVar, Unit, UnitVal, Ana, Cata,
    bifunctor_apply, decompose_polytype, functor_apply,
)
from .typecheck import TypingContext, typecheck_term

SIZE_CAP = 10**5


class SizeCap(Exception):
    def __init__(self, ty: TypeExpr, size: int):
        super().__init__(
            f"interpreted set for {print_type(ty)} has {size} elements "
            f"(cap {SIZE_CAP})")


# ---------------------------------------------------------------------------
# Finite models
# ---------------------------------------------------------------------------

class FiniteModel:
    """Carrier sizes for type variables, with cached type interpretations."""

    def __init__(self, carriers: dict[str, int]):
        self.carriers = dict(carriers)
        self._elems: dict[TypeExpr, list] = {}
        self._index: dict[TypeExpr, dict] = {}

    def cardinality(self, t: TypeExpr) -> int:
        match t:
            case Unit():
                return 1
            case TVar(name):
                if name not in self.carriers:
                    raise Unsupported(f"no carrier assigned to {name}")
                return self.carriers[name]
            case Sum(l, r):
                return self.cardinality(l) + self.cardinality(r)
            case Prod(l, r):
                return self.cardinality(l) * self.cardinality(r)
            case Arrow(d, c):
                n = self.cardinality(c) ** self.cardinality(d)
                if n > SIZE_CAP:
                    raise SizeCap(t, n)
                return n
            case Nat() | Mu(_) | Nu(_):
                raise Unsupported(
                    f"{print_type(t)} has no finite interpretation; use the "
                    "sampled fixpoint checks instead")
        raise Unsupported(f"cannot interpret {t!r}")

    def elems(self, t: TypeExpr) -> list:
        if t in self._elems:
            return self._elems[t]
        n = self.cardinality(t)
        if n > SIZE_CAP:
            raise SizeCap(t, n)
        match t:
            case Unit():
                out = [()]
            case TVar(_):
                out = list(range(n))
            case Sum(l, r):
                out = [("l", e) for e in self.elems(l)]
                out += [("r", e) for e in self.elems(r)]
            case Prod(l, r):
                out = [(a, b) for a in self.elems(l) for b in self.elems(r)]
            case Arrow(d, c):
                cod = self.elems(c)
                out = [("fn", combo)
                       for combo in itertools.product(cod,
                                                      repeat=len(self.elems(d)))]
            case _:
                raise Unsupported(f"cannot interpret {t!r}")
        self._elems[t] = out
        self._index[t] = {e: i for i, e in enumerate(out)}
        return out

    def index(self, t: TypeExpr, e) -> int:
        self.elems(t)
        return self._index[t][e]

    def apply(self, fn_ty: Arrow, fn, arg):
        """Apply a function table to an argument element."""
        return fn[1][self.index(fn_ty.dom, arg)]

    # Conversions between table elements and host callables, used to feed
    # enumerated inputs into evaluated terms and read results back.

    def to_callable(self, t: TypeExpr, e):
        if isinstance(t, Arrow):
            def call(arg):
                canon = self.from_callable(t.dom, arg)
                return self.to_callable(t.cod, self.apply(t, e, canon))
            return call
        return e

    def from_callable(self, t: TypeExpr, v):
        if isinstance(t, Arrow):
            outs = tuple(self.from_callable(t.cod, v(self.to_callable(t.dom, e)))
                         for e in self.elems(t.dom))
            return ("fn", outs)
        return v


def interpret_type_finite(t: TypeExpr, m: FiniteModel) -> list:
    """All elements of `t` under the model, deterministically enumerated."""
    return m.elems(t)


# ---------------------------------------------------------------------------
# Functor and bifunctor actions
# ---------------------------------------------------------------------------

def functor_action(v: FunctorExpr, u: Callable, e):
    """Covariant transport of an element of V(X) along u : X -> Y."""
    match v:
        case Const(_):
            return e
        case Ident():
            return u(e)
        case FProd(l, r):
            return (functor_action(l, u, e[0]), functor_action(r, u, e[1]))
        case FSum(l, r):
            tag, inner = e
            if tag == "l":
                return ("l", functor_action(l, u, inner))
            return ("r", functor_action(r, u, inner))
    raise AssertionError(v)


def bif_transport(m: FiniteModel, w: BifunctorExpr, e,
                  src: tuple[TypeExpr, TypeExpr], dst: tuple[TypeExpr, TypeExpr],
                  g: Callable, h: Callable):
    """Transport e in W(src) to W(dst), g : dst_neg -> src_neg contravariantly
    and h : src_pos -> dst_pos covariantly."""
    match w:
        case BConst(_):
            return e
        case Pos():
            return h(e)
        case BProd(l, r):
            return (bif_transport(m, l, e[0], src, dst, g, h),
                    bif_transport(m, r, e[1], src, dst, g, h))
        case BSum(l, r):
            tag, inner = e
            sub = l if tag == "l" else r
            return (tag, bif_transport(m, sub, inner, src, dst, g, h))
        case BArrow(l, r):
            # e : W_l(src_pos, src_neg) -> W_r(src); swap slots for the domain.
            dom_src = bifunctor_apply(l, src[1], src[0])
            dom_dst = bifunctor_apply(l, dst[1], dst[0])
            fn_ty = Arrow(dom_src, bifunctor_apply(r, *src))
            outs = []
            for a in m.elems(dom_dst):
                back = bif_transport(m, l, a, (dst[1], dst[0]),
                                     (src[1], src[0]), h, g)
                outs.append(bif_transport(m, r, m.apply(fn_ty, e, back),
                                          src, dst, g, h))
            return ("fn", tuple(outs))
    raise AssertionError(w)


def bifunctor_action(w: BifunctorExpr, u_table, m: FiniteModel,
                     x: TypeExpr = TVar("X"), y: TypeExpr = TVar("Y")):
    """The two mixed-variance actions for u : X -> Y.

    Returns (forward, backward): forward maps W(X,X) -> W(X,Y) along u in
    the covariant slot; backward maps W(Y,Y) -> W(X,Y) against u in the
    contravariant slot.
    """
    def u(e):
        return m.apply(Arrow(x, y), u_table, e)

    def ident(e):
        return e

    def forward(e):
        return bif_transport(m, w, e, (x, x), (x, y), ident, u)

    def backward(e):
        return bif_transport(m, w, e, (y, y), (x, y), u, ident)

    return forward, backward


# ---------------------------------------------------------------------------
# Families
# ---------------------------------------------------------------------------

@dataclass
class SemanticFamily:
    """Tables theta_k : W(X,X) -> V(X) for each carrier size k."""
    w: BifunctorExpr
    v: FunctorExpr
    tables: dict[int, dict]
    provenance: str  # "from-term" | "hand-given"
    name: str = ""

    def theta(self, k: int, w_elem):
        return self.tables[k][w_elem]


@dataclass(frozen=True)
class CounterExample:
    size_x: int
    size_y: int
    u: tuple
    w: object
    w_prime: object
    lhs: object   # V(u)(theta_X(w))
    rhs: object   # theta_Y(w')

    def as_dict(self) -> dict:
        return {
            "size_x": self.size_x, "size_y": self.size_y,
            "u": list(self.u[1]), "w": repr(self.w),
            "w_prime": repr(self.w_prime),
            "lhs": repr(self.lhs), "rhs": repr(self.rhs),
        }


def check_paranatural(family: SemanticFamily, w: BifunctorExpr,
                      v: FunctorExpr, max_carrier: int = 3
                      ) -> Optional[CounterExample]:
    """None when the family is paranatural up to the carrier bound; otherwise
    the lexicographically first failing (X, Y, u, w, w') witness."""
    x, y = TVar("X"), TVar("Y")
    for sx in range(1, max_carrier + 1):
        for sy in range(1, max_carrier + 1):
            m = FiniteModel({"X": sx, "Y": sy})
            wxx = m.elems(bifunctor_apply(w, x, x))
            wyy = m.elems(bifunctor_apply(w, y, y))
            for u_table in m.elems(Arrow(x, y)):
                forward, backward = bifunctor_action(w, u_table, m, x, y)
                def u(e):
                    return m.apply(Arrow(x, y), u_table, e)
                meet: dict = {}
                for wp in wyy:
                    meet.setdefault(backward(wp), []).append(wp)
                for we in wxx:
                    key = forward(we)
                    if key not in meet:
                        continue
                    lhs = functor_action(v, u, family.theta(sx, we))
                    for wp in meet[key]:
                        rhs = family.theta(sy, wp)
                        if lhs != rhs:
                            return CounterExample(sx, sy, u_table, we, wp,
                                                  lhs, rhs)
    return None


def recheck_counterexample(family: SemanticFamily, w: BifunctorExpr,
                           v: FunctorExpr, ce: CounterExample) -> bool:
    """Independently re-evaluate the failed implication; True if it fails."""
    x, y = TVar("X"), TVar("Y")
    m = FiniteModel({"X": ce.size_x, "Y": ce.size_y})
    forward, backward = bifunctor_action(w, ce.u, m, x, y)
    if forward(ce.w) != backward(ce.w_prime):
        return False  # premise does not even hold; not a witness

    def u(e):
        return m.apply(Arrow(x, y), ce.u, e)

    lhs = functor_action(v, u, family.theta(ce.size_x, ce.w))
    rhs = family.theta(ce.size_y, ce.w_prime)
    return lhs != rhs


def check_paranatural_triangle(family: SemanticFamily, w: BifunctorExpr,
                               v: FunctorExpr, max_carrier: int = 2,
                               max_z: int = 2) -> Optional[tuple]:
    """The span form: quantify over finite Z and legs z0, z1 explicitly.

    Used once to validate that the element-pair formulation agrees with the
    span formulation on finite sets.
    """
    x, y = TVar("X"), TVar("Y")
    for sx in range(1, max_carrier + 1):
        for sy in range(1, max_carrier + 1):
            m = FiniteModel({"X": sx, "Y": sy})
            wxx_ty = bifunctor_apply(w, x, x)
            wyy_ty = bifunctor_apply(w, y, y)
            for u_table in m.elems(Arrow(x, y)):
                forward, backward = bifunctor_action(w, u_table, m, x, y)

                def u(e):
                    return m.apply(Arrow(x, y), u_table, e)

                for sz in range(1, max_z + 1):
                    zm = FiniteModel({"Z": sz})
                    z_elems = zm.elems(TVar("Z"))
                    legs0 = itertools.product(m.elems(wxx_ty), repeat=sz)
                    for z0 in legs0:
                        for z1 in itertools.product(m.elems(wyy_ty), repeat=sz):
                            if all(forward(z0[i]) == backward(z1[i])
                                   for i in range(sz)):
                                for i in range(sz):
                                    lhs = functor_action(
                                        v, u, family.theta(sx, z0[i]))
                                    rhs = family.theta(sy, z1[i])
                                    if lhs != rhs:
                                        return (sx, sy, u_table, z_elems[i],
                                                z0[i], z1[i])
    return None


# ---------------------------------------------------------------------------
# Tabulating families from closed polymorphic terms
# ---------------------------------------------------------------------------

def _finite_eval(t: Term, env: dict, m: FiniteModel):
    """Denotational evaluation into finite sets (fixpoint- and Nat-free)."""
    match t:
        case TmVar(name):
            return env[name]
        case UnitVal():
            return ()
        case Lam(v, _, body):
            return lambda arg: _finite_eval(body, {**env, v: arg}, m)
        case App(f, a):
            fv = _finite_eval(f, env, m)
            av = _finite_eval(a, env, m)
            if not callable(fv):
                raise Unsupported("finite application of a non-function")
            return fv(av)
        case Pair(l, r):
            return (_finite_eval(l, env, m), _finite_eval(r, env, m))
        case Proj1(a):
            return _finite_eval(a, env, m)[0]
        case Proj2(a):
            return _finite_eval(a, env, m)[1]
        case Inl(a, _):
            return ("l", _finite_eval(a, env, m))
        case Inr(a, _):
            return ("r", _finite_eval(a, env, m))
        case Case(s, lv, lb, rv, rb):
            tag, inner = _finite_eval(s, env, m)
            if tag == "l":
                return _finite_eval(lb, {**env, lv: inner}, m)
            return _finite_eval(rb, {**env, rv: inner}, m)
        case Let(v, bound, body):
            return _finite_eval(body,
                                {**env, v: _finite_eval(bound, env, m)}, m)
        case Compose(h, g):
            hv = _finite_eval(h, env, m)
            gv = _finite_eval(g, env, m)
            return lambda arg: hv(gv(arg))
    raise Unsupported(
        f"{type(t).__name__} has no finite-set interpretation")


def _peel_components(body: TypeExpr) -> tuple[list[TypeExpr], TypeExpr]:
    comps = []
    while isinstance(body, Arrow):
        comps.append(body.dom)
        body = body.cod
    return comps, body


def tabulate_term_family(term: Term, ty: TypeExpr, max_carrier: int = 3,
                         name: str = "") -> SemanticFamily:
    """Tabulate a closed term of type forall X. T1 -> ... -> Tn -> V(X).

    Every argument tuple over every carrier of size 1..max_carrier is fed
    through the finite evaluator; the results form the family's tables.
    """
    if not isinstance(ty, Forall):
        raise Unsupported("term is not polymorphic")
    xvar = ty.var
    w, v = decompose_polytype(ty.body, xvar)
    comps, _ = _peel_components(ty.body)
    inner = term
    if isinstance(inner, TyLam):
        if inner.tyvar != xvar:
            from .syntax import subst_type_in_term
            inner = TyLam(xvar, subst_type_in_term(inner.body, inner.tyvar,
                                                   TVar(xvar)))
        inner = inner.body
    else:
        raise Unsupported("polymorphic term is not a type abstraction")

    tables: dict[int, dict] = {}
    for k in range(1, max_carrier + 1):
        m = FiniteModel({xvar: k})
        table: dict = {}
        w_ty = bifunctor_apply(w, TVar(xvar), TVar(xvar))
        v_ty = functor_apply(v, TVar(xvar))
        for w_elem in m.elems(w_ty):
            args = _unnest(w_elem, len(comps))
            out = _finite_eval(inner, {}, m)
            for comp_ty, arg in zip(comps, args):
                out = out(m.to_callable(comp_ty, arg))
            table[w_elem] = m.from_callable(v_ty, out)
        tables[k] = table
    return SemanticFamily(w, v, tables, "from-term", name)


def _unnest(w_elem, n: int) -> list:
    if n == 0:
        return []
    out = []
    cur = w_elem
    for _ in range(n - 1):
        out.append(cur[0])
        cur = cur[1]
    out.append(cur)
    return out


def bad_const_family(max_carrier: int = 3) -> SemanticFamily:
    """The built-in failing demo: W(Y,X) = Y => X, V = X, theta_X(f) = 0.

    Picking a fixed element of the carrier ignores the function argument and
    is not stable under carrier maps, so the checker must find a witness.
    """
    w = BArrow(Pos(), Pos())
    v = Ident()
    tables: dict[int, dict] = {}
    for k in range(1, max_carrier + 1):
        m = FiniteModel({"X": k})
        fn_ty = Arrow(TVar("X"), TVar("X"))
        tables[k] = {f: 0 for f in m.elems(fn_ty)}
    return SemanticFamily(w, v, tables, "hand-given", "bad_const")


def identity_family(max_carrier: int = 3) -> SemanticFamily:
    """theta_X(w) = w at W = X (covariant hole), V = X; plainly natural."""
    w = Pos()
    v = Ident()
    tables = {}
    for k in range(1, max_carrier + 1):
        m = FiniteModel({"X": k})
        tables[k] = {e: e for e in m.elems(TVar("X"))}
    return SemanticFamily(w, v, tables, "hand-given", "identity")


# ---------------------------------------------------------------------------
# Sampled genericity checks through the interpreter (fixpoint polytypes)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Lemma1Instance:
    """One (carrier, algebra-or-coalgebra) pair to check a body against.

    Inputs are enumerated at `input_type`; `prepare`, when given, maps them
    into the carrier first (e.g. unfolding canonical list pairs into streams
    for the out-instance of a consumer).
    """
    carrier: TypeExpr
    structure: Term
    input_type: TypeExpr
    prepare: Optional[Term] = None


@dataclass
class Lemma1Case:
    carrier: str
    structure: str
    inputs: int
    equal: int
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.equal == self.inputs and not self.failures


@dataclass
class Lemma1Report:
    kind: str   # "build" | "cobuild"
    cases: list[Lemma1Case] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.cases)


def check_lemma1_sampled(program: Program, body: Term, kind: str,
                         functor: FunctorExpr,
                         instances: list[Lemma1Instance],
                         default_input: Optional[TypeExpr] = None,
                         inputs: int = 100,
                         fuel: int = DEFAULT_FUEL) -> Lemma1Report:
    """Sampled genericity of a polymorphic producer/consumer body.

    For a build body p and algebra x at carrier C, compares p@[C] x against
    fold[F](x) . (p@[mu F] in) pointwise; for a cobuild body q and coalgebra
    y at carrier Y, compares q@[Y] y against (q@[nu F] out) . unfold[F](y).
    """
    from .interp import canonical_sample
    from .syntax import TyApp

    report = Lemma1Report(kind)
    mu_f, nu_f = Mu(functor), Nu(functor)
    in_fn = Lam("z", functor_apply(functor, mu_f), InMu(functor, TmVar("z")))
    out_fn = Lam("s", nu_f, OutNu(functor, TmVar("s")))

    def work():
        env = program_env(program, Interp(10**9))
        for inst in instances:
            carrier, structure = inst.carrier, inst.structure
            lhs_t = App(TyApp(body, carrier), structure)
            if kind == "build":
                rhs_t = Compose(Cata(functor, structure),
                                App(TyApp(body, mu_f), in_fn))
                in_ty = inst.input_type if inst.input_type is not None \
                    else default_input
            else:
                rhs_t = Compose(App(TyApp(body, nu_f), out_fn),
                                Ana(functor, structure))
                in_ty = inst.input_type
            if inst.prepare is not None:
                lhs_t = Compose(lhs_t, inst.prepare)
                rhs_t = Compose(rhs_t, inst.prepare)
            case = Lemma1Case(print_type(carrier), print_term(structure),
                              inputs, 0)
            for inp in canonical_sample(in_ty, inputs):
                try:
                    i1 = Interp(fuel)
                    lv = i1.apply(i1.eval(lhs_t, env), inp)
                    i2 = Interp(fuel)
                    rv = i2.apply(i2.eval(rhs_t, env), inp)
                    if value_eq(lv, rv):
                        case.equal += 1
                    else:
                        case.failures.append(
                            {"input": show_value(inp), "lhs": show_value(lv),
                             "rhs": show_value(rv)})
                except FuelExhausted:
                    case.failures.append({"input": show_value(inp),
                                          "error": "fuel exhausted"})
            report.cases.append(case)
        return report

    return run_deep(work)
