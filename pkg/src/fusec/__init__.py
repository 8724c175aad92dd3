"""fusec: build fusion over inductive and coinductive datatypes, with a
differential-testing and paranaturality-checking harness."""

from .syntax import (  # noqa: F401
    Add, Ana, App, Arrow, BArrow, BConst, BifunctorExpr, BProd, BSum, Build,
    Case, Cata, Cobuild, Compose, Const, Forall, FProd, FSum, FunctorDecl,
    FunctorExpr, ID, Ident, Inl, InMu, Inr, Lam, Let, Mu, NAT, Nat, NatLit,
    NotCurriedNormalForm, Nu, OutMu, OutNu, POS, Pair, Pos,
    PositivityViolation, Prod, Program, Proj1, Proj2, Rec, Sum, Term,
    TermDecl, TmVar, TyApp, TyLam, TypeDecl, TypeExpr, TVar, UNIT, Unit,
    UnitVal, alpha_normalize, bifunctor_apply, bifunctor_from_type,
    check_positivity, decompose_polytype, fmap_term, free_term_vars,
    free_type_vars, functor_apply, functor_from_type, functor_readback,
    subst_term, subst_type, term_alpha_eq, type_alpha_eq,
)
from .typecheck import (  # noqa: F401
    EscapedTypeVariable, FuseTypeError, TypeMismatch, TypingContext,
    UnboundVariable, context_of, typecheck_program, typecheck_term,
)
from .interp import (  # noqa: F401
    AllocationProfile, DEFAULT_FUEL, FuelExhausted, Interp, Stuck,
    Unsupported, VClosure, VInl, VInr, VMu, VNat, VNu, VPair, VPrim,
    VTyClosure, VUNIT, VUnit, Value, canonical_sample, canonical_values,
    eval_term, nat_list_value, program_env, run_deep, run_with_profile,
    show_value, value_eq,
)
from .fusion import (  # noqa: F401
    EquivalenceReport, NotAbstractable, RewriteReport, RewriteStep,
    abstract_build, abstract_cobuild, alg_to_cata, coalg_to_ana,
    fuse_fixpoint, fusion_measure, intermediate_terms, reify_build,
    reify_cobuild, replay_rewrites, rewrite_ana_cobuild, rewrite_case_compose,
    rewrite_cata_build, verify_equivalence,
)
from .printer import (  # noqa: F401
    print_bifunctor, print_decl, print_functor, print_program, print_term,
    print_type,
)
