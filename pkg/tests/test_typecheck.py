import pytest

from fusec.parser import parse_program, parse_term, parse_type
from fusec.printer import print_type
from fusec.syntax import (
    Arrow, BArrow, BConst, BProd, Forall, Mu, NAT, Pos, Prod, Program, Sum,
    TermDecl, TVar, UNIT, decompose_polytype, bifunctor_from_type,
)
from fusec.typecheck import (
    EscapedTypeVariable, FuseTypeError, TypeMismatch, TypingContext,
    typecheck_program, typecheck_term,
)

FUNCTORS = {}


def tc(src: str, tyvars: str = "A B B0 B1 C", **bindings):
    ctx = TypingContext()
    for v in tyvars.split():
        ctx = ctx.bind_tyvar(v)
    for name, ty in bindings.items():
        ctx = ctx.bind(name, parse_type(ty))
    return typecheck_term(ctx, parse_term(src))


def test_pair_formation():
    got = tc("fun a : A => (f0 a, f1 a)", f0="A -> B0", f1="A -> B1")
    assert print_type(got) == "A -> B0 * B1"


def test_cata_of_sum_algebra(prog, ctx):
    ssum = prog.lookup("ssum")
    assert print_type(ssum.ty) == "mu[1 + Nat * Nat * X] -> Nat"
    assert typecheck_term(ctx, ssum.term) == ssum.ty


def test_build_constant_producer():
    got = tc("build[1 + Nat * Nat * X](tyfun X => "
             "fun c : Unit + Nat * Nat * X -> X => fun a : A => "
             "c (inl[Unit + Nat * Nat * X] ()))")
    assert print_type(got) == "A -> mu[1 + Nat * Nat * X]"


def test_build_escaped_type_variable():
    # the producer source type mentions the quantified variable
    with pytest.raises(EscapedTypeVariable):
        tc("build[1 + Nat * X](tyfun X => "
           "fun c : Unit + Nat * X -> X => fun a : X => c (inl[Unit + Nat * X] ()))")


def test_type_mismatch_reports_path():
    with pytest.raises(TypeMismatch) as exc:
        tc("fun x : Nat => x + ()")
    assert "Add.right" in str(exc.value)


def test_error_messages_deterministic():
    msgs = set()
    for _ in range(3):
        try:
            tc("fun x : Nat => x + ()")
        except TypeMismatch as e:
            msgs.add(str(e))
    assert len(msgs) == 1


def test_unbound_variable():
    with pytest.raises(FuseTypeError):
        tc("nosuch")


def test_case_branches_must_agree():
    with pytest.raises(TypeMismatch):
        tc("fun s : Nat + Unit => case s of { inl n => n | inr u => u }")


def test_compose_typing():
    got = tc("h . f", f="A -> B", h="B -> C")
    assert print_type(got) == "A -> C"


def test_compose_mismatch():
    with pytest.raises(TypeMismatch):
        tc("h . f", f="A -> B", h="B2 -> C")


def test_rank1_quantifiers_only():
    with pytest.raises(FuseTypeError):
        tc("fun f : forall X. X -> X => f")


def test_rec_requires_matching_annotation():
    got = tc("rec go : Nat -> Nat => fun n : Nat => go n")
    assert print_type(got) == "Nat -> Nat"
    with pytest.raises(FuseTypeError):
        tc("rec go : Nat -> Nat => fun n : Nat => ()")


def test_program_empty():
    assert typecheck_program(Program(())) == []


def test_program_use_before_declare():
    src = "def a : Nat -> Nat = fun x : Nat => b x\ndef b : Nat -> Nat = fun x : Nat => x"
    with pytest.raises(FuseTypeError) as exc:
        typecheck_program(parse_program(src))
    assert "unbound variable b" in str(exc.value)


def test_corpus_types_as_declared(prog):
    types = dict(typecheck_program(prog))
    assert print_type(types["zipWp"]) == (
        "forall X. (Unit + Nat * Nat * X -> X) -> "
        "mu[1 + Nat * X] * mu[1 + Nat * X] -> X")
    assert print_type(types["ssumSp"]) == (
        "forall X. (X -> Unit + Nat * Nat * X) -> X -> Nat")
    assert print_type(types["sumzip"]) == \
        "mu[1 + Nat * X] * mu[1 + Nat * X] -> Nat"


def test_build_body_decomposes_to_algebra_and_source(prog):
    """Stripping the quantifier, a producer body's components are exactly
    the algebra type and the source type (the fused pairing, curried)."""
    d = prog.lookup("zipWp")
    w, v = decompose_polytype(d.ty.body, d.ty.var)
    x = TVar(d.ty.var)
    alg = bifunctor_from_type(
        Arrow(Sum(UNIT, Prod(NAT, Prod(NAT, x))), x), d.ty.var)
    src = BConst(parse_type("mu[1 + Nat * X] * mu[1 + Nat * X]"))
    assert w == BProd(alg, src)
    from fusec.syntax import Ident
    assert v == Ident()


def test_cobuild_body_decomposes_to_coalgebra_and_carrier(prog):
    d = prog.lookup("ssumSp")
    w, v = decompose_polytype(d.ty.body, d.ty.var)
    x = TVar(d.ty.var)
    coalg = bifunctor_from_type(
        Arrow(x, Sum(UNIT, Prod(NAT, Prod(NAT, x)))), d.ty.var)
    assert w == BProd(coalg, Pos())
    from fusec.syntax import Const
    assert v == Const(NAT)


def test_annotation_must_match_declaration():
    src = "def a : Nat -> Nat = fun x : Nat => ()"
    with pytest.raises(TypeMismatch):
        typecheck_program(parse_program(src))
