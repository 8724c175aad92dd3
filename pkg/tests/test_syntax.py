import pytest

from fusec.syntax import (
    Arrow, BArrow, BConst, BProd, Const, Forall, FProd, FSum, ID, Ident, Mu,
    NAT, Pos, Prod, Sum, TVar, UNIT, NotCurriedNormalForm,
    PositivityViolation, bifunctor_apply, decompose_polytype,
    free_type_vars, functor_apply, functor_from_type, functor_readback,
    normalize_functor, subst_type, type_alpha_eq,
)
from fusec.parser import parse_functor, parse_type


X = TVar("X")


def test_subst_identity_case():
    assert subst_type(X, "X", NAT) == NAT


def test_subst_structural():
    assert subst_type(Arrow(X, UNIT), "X", NAT) == Arrow(NAT, UNIT)


def test_subst_shadowing():
    assert subst_type(Forall("X", X), "X", NAT) == Forall("X", X)


def test_subst_capture_avoidance():
    # substituting a type mentioning Y under a Forall Y binder must rename
    t = Forall("Y", Arrow(X, TVar("Y")))
    got = subst_type(t, "X", TVar("Y"))
    assert isinstance(got, Forall)
    assert got.var != "Y"
    assert got.body == Arrow(TVar("Y"), TVar(got.var))


def test_subst_idempotent_for_closed_replacement():
    t = parse_type("X * (X -> Nat) + X")
    once = subst_type(t, "X", NAT)
    assert subst_type(once, "X", NAT) == once


def test_functor_apply_pair_list():
    f = FSum(Const(UNIT), FProd(Const(NAT), FProd(Const(NAT), ID)))
    assert functor_apply(f, TVar("T")) == \
        Sum(UNIT, Prod(NAT, Prod(NAT, TVar("T"))))


def test_functor_apply_identity():
    assert functor_apply(ID, NAT) == NAT


def test_functor_apply_constant():
    assert functor_apply(Const(UNIT), NAT) == UNIT


def test_functor_readback_roundtrip():
    for src in ["1 + Nat * X", "1 + Nat * Nat * X", "X * X + Nat",
                "1 + (Nat -> Nat) * X"]:
        f = parse_functor(src)
        assert functor_readback(functor_apply(f, TVar("Z")), "Z") == f


def test_positivity_ok_polynomial():
    f = parse_functor("1 + Nat * Nat * X")
    from fusec.syntax import check_positivity
    assert check_positivity(f) is None


def test_positivity_violation_arrow_left():
    with pytest.raises(PositivityViolation) as exc:
        functor_from_type(Arrow(X, NAT), "X")
    assert "Arrow.left" in str(exc.value)


def test_positivity_hole_absent_under_arrow_is_fine():
    assert functor_from_type(Arrow(NAT, NAT), "X") == Const(Arrow(NAT, NAT))


def test_positivity_violation_arrow_right():
    # covariant but not polynomial: the hole may not sit under an arrow
    with pytest.raises(PositivityViolation) as exc:
        functor_from_type(Arrow(NAT, X), "X")
    assert "Arrow.right" in str(exc.value)


def test_normalize_functor_collapses_hole_free_products():
    assert normalize_functor(FProd(Const(NAT), Const(NAT))) == \
        Const(Prod(NAT, NAT))
    f = parse_functor("Nat * Nat + Nat * X")
    assert f == FSum(Const(Prod(NAT, NAT)), FProd(Const(NAT), ID))


def test_decompose_church_list_shape():
    from fusec.syntax import bifunctor_from_type

    f = parse_functor("1 + Nat * Nat * X")
    body = Arrow(Arrow(functor_apply(f, X), X), X)
    w, v = decompose_polytype(body, "X")
    assert v == ID
    assert w == BArrow(bifunctor_from_type(functor_apply(f, X), "X"), Pos())
    assert bifunctor_apply(w, X, X) == Arrow(functor_apply(f, X), X)
    # mixed instantiation: contravariant slot feeds the arrow's domain
    a, b = TVar("A"), TVar("B")
    assert bifunctor_apply(w, a, b) == Arrow(functor_apply(f, a), b)


def test_decompose_covariant_body_no_arrows():
    w, v = decompose_polytype(X, "X")
    assert w == BConst(UNIT)
    assert v == ID


def test_decompose_consumer_component():
    # X -> F X on its own decomposes with component X and tail F X
    f = parse_functor("1 + Nat * Nat * X")
    body = Arrow(X, functor_apply(f, X))
    w, v = decompose_polytype(body, "X")
    assert w == Pos()
    assert functor_apply(v, TVar("T")) == functor_apply(f, TVar("T"))


def test_decompose_rejects_product_of_arrows():
    body = Prod(Arrow(X, X), Arrow(X, NAT))
    with pytest.raises(NotCurriedNormalForm):
        decompose_polytype(body, "X")


def test_decompose_accepts_mixed_variance_components():
    # Nat => X => Nat is a fine curried form: X sits in a component
    w, v = decompose_polytype(Arrow(NAT, Arrow(X, NAT)), "X")
    assert w == BProd(BConst(NAT), Pos())
    assert v == Const(NAT)


def test_decompose_rejects_arrow_buried_in_tail():
    # the tail Prod(X, Nat -> X) is covariant but not polynomial
    with pytest.raises(NotCurriedNormalForm):
        decompose_polytype(Arrow(NAT, Prod(X, Arrow(NAT, X))), "X")


def _card(t, k):
    """Independent cardinality oracle (plain arithmetic, no materializing)."""
    from fusec.syntax import Unit as U, Nat as N, TVar as TV
    match t:
        case U():
            return 1
        case TV(_):
            return k
        case Sum(l, r):
            return _card(l, k) + _card(r, k)
        case Prod(l, r):
            return _card(l, k) * _card(r, k)
        case Arrow(d, c):
            return _card(c, k) ** _card(d, k)
    raise AssertionError(t)


def test_decompose_bijectivity_cardinalities():
    """|W => V| = |body| at carriers up to 3, by independent arithmetic."""
    bodies = [
        Arrow(Arrow(X, X), X),
        Arrow(X, Arrow(X, X)),
        Arrow(Sum(X, UNIT), X),
        X,
        Arrow(X, Prod(X, X)),
    ]
    for body in bodies:
        w, v = decompose_polytype(body, "X")
        for k in (1, 2, 3):
            w_card = _card(bifunctor_apply(w, X, X), k)
            v_card = _card(functor_apply(v, X), k)
            assert _card(body, k) == v_card ** w_card


def test_decompose_bijectivity_elementwise():
    """Each element of the body denotes one distinct table W(X,X) -> V(X),
    checked by exhaustive currying at materializable carriers."""
    from fusec.paranat import FiniteModel

    bodies = [
        Arrow(X, Arrow(X, X)),
        Arrow(Sum(X, UNIT), X),
        X,
        Arrow(X, Prod(X, X)),
    ]
    for body in bodies:
        w, v = decompose_polytype(body, "X")
        comps = []
        tail = body
        while isinstance(tail, Arrow):
            comps.append(tail.dom)
            tail = tail.cod
        for k in (1, 2):
            m = FiniteModel({"X": k})
            direct = m.elems(body)
            w_ty = bifunctor_apply(w, X, X)
            v_ty = functor_apply(v, X)
            tables = set()
            for e in direct:
                outs = []
                for w_elem in m.elems(w_ty):
                    args = _unnest(w_elem, len(comps))
                    out = m.to_callable(body, e)
                    for c_ty, a in zip(comps, args):
                        out = out(m.to_callable(c_ty, a))
                    outs.append(m.from_callable(v_ty, out))
                tables.add(tuple(outs))
            assert len(tables) == len(direct)


def _unnest(w_elem, n):
    if n == 0:
        return []
    out = []
    cur = w_elem
    for _ in range(n - 1):
        out.append(cur[0])
        cur = cur[1]
    out.append(cur)
    return out


def test_free_type_vars_and_alpha_eq():
    a = parse_type("forall X. X -> Y")
    b = parse_type("forall Z. Z -> Y")
    assert type_alpha_eq(a, b)
    assert free_type_vars(a) == frozenset({"Y"})
    assert not type_alpha_eq(a, parse_type("forall X. X -> X"))
