import pathlib

import pytest

from fusec.parser import parse_functor, parse_program, parse_type
from fusec.typecheck import context_of

ROOT = pathlib.Path(__file__).resolve().parents[1]
CORPUS = ROOT / "corpus"


@pytest.fixture(scope="session")
def corpus_sources():
    return {p.stem: p.read_text() for p in sorted(CORPUS.glob("*.fuse"))}


@pytest.fixture(scope="session")
def prog():
    return parse_program((CORPUS / "sumzip.fuse").read_text())


@pytest.fixture(scope="session")
def polyprog():
    return parse_program((CORPUS / "polyterms.fuse").read_text())


@pytest.fixture(scope="session")
def ctx(prog):
    return context_of(prog)


@pytest.fixture(scope="session")
def NF():
    return parse_functor("1 + Nat * X")


@pytest.fixture(scope="session")
def PF():
    return parse_functor("1 + Nat * Nat * X")


@pytest.fixture(scope="session")
def LN():
    return parse_type("mu[1 + Nat * X]")


@pytest.fixture(scope="session")
def PLN():
    return parse_type("mu[1 + Nat * X] * mu[1 + Nat * X]")
