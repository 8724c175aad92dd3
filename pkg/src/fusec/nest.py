"""Nested-datatype case study: fusion over lists of perfect binary trees.

A nest is a sequence whose i-th entry is a perfect binary tree of depth i,
so entry i carries 2^i numbers.  Entries are nested pairs of ints: entry 2
of a number nest looks like ((a, b), (c, d)).  A pair nest additionally
pairs every leaf, which adds one structural level: entry i of a pair nest
is an int tree of depth i + 1.

The head/tail recursion views the tail of a nest over T as a nest over
T * T by splitting each entry at its deepest level; `zip_nests` pairs two
number nests leafwise into a pair nest, `sum_pair_nest` consumes one, and
`sum_zipped_fused` is their fusion, which never constructs pair entries.
Pair-entry construction is counted so the fusion claim is measurable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

Tree = Union[int, tuple]  # perfect: int at depth 0, pair of equal-depth trees


class MalformedNest(ValueError):
    pass


def tree_depth(t: Tree) -> int:
    d = 0
    while isinstance(t, tuple):
        t = t[0]
        d += 1
    return d


def validate_tree(t: Tree, depth: int, path: str = "entry") -> None:
    if depth == 0:
        if not isinstance(t, int):
            raise MalformedNest(f"{path}: expected a leaf, got {t!r}")
        return
    if not (isinstance(t, tuple) and len(t) == 2):
        raise MalformedNest(f"{path}: expected a pair at depth {depth}")
    validate_tree(t[0], depth - 1, path + ".left")
    validate_tree(t[1], depth - 1, path + ".right")


@dataclass(frozen=True)
class NestVal:
    """Number nest: entry i is a depth-i perfect tree of ints."""
    entries: tuple

    def __post_init__(self):
        for i, e in enumerate(self.entries):
            validate_tree(e, i, f"entry {i}")

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class NestPairVal:
    """Pair nest: entry i is a depth-i tree of int pairs (depth i+1 of ints)."""
    entries: tuple

    def __post_init__(self):
        for i, e in enumerate(self.entries):
            validate_tree(e, i + 1, f"entry {i}")

    def __len__(self) -> int:
        return len(self.entries)


@dataclass
class NestCounters:
    pair_entries_built: int = 0

    def reset(self) -> None:
        self.pair_entries_built = 0


counters = NestCounters()


# -- tree helpers -------------------------------------------------------------

def _zip_trees(a: Tree, b: Tree) -> Tree:
    """Leafwise pairing; adds one level at the bottom."""
    if isinstance(a, int):
        return (a, b)
    return (_zip_trees(a[0], b[0]), _zip_trees(a[1], b[1]))


def _split(t: Tree, levels: int) -> tuple[Tree, Tree]:
    """Project a tree at its level `levels` below the root: descending
    `levels` steps reaches pairs; take both halves pointwise."""
    if levels == 0:
        return t[0], t[1]
    l0, l1 = _split(t[0], levels - 1)
    r0, r1 = _split(t[1], levels - 1)
    return (l0, r0), (l1, r1)


def _tree_sum(t: Tree) -> int:
    if isinstance(t, int):
        return t
    return _tree_sum(t[0]) + _tree_sum(t[1])


# -- the three programs -------------------------------------------------------

def zip_nests(a: NestVal, b: NestVal) -> NestPairVal:
    """Pair entries leafwise, truncating at the shorter nest."""
    n = min(len(a), len(b))
    out = []
    for i in range(n):
        out.append(_zip_trees(a.entries[i], b.entries[i]))
        counters.pair_entries_built += 1
    return NestPairVal(tuple(out))


def _tail_halves(entries: tuple) -> tuple[tuple, tuple]:
    """Both projections of a nest tail viewed over doubled elements.

    Tail entry i sits one level deeper than its new index, so it splits at
    level i: each element pair at that level contributes one half to each
    projection.  Works for number and pair nests alike (the element
    boundary is one level lower for pair nests, uniformly)."""
    firsts, seconds = [], []
    for i, e in enumerate(entries):
        f, s = _split(e, i)
        firsts.append(f)
        seconds.append(s)
    return tuple(firsts), tuple(seconds)


def sum_pair_nest(z: NestPairVal) -> int:
    """Head pair plus the sums of both halves of the tail, recursively."""
    entries = z.entries
    if not entries:
        return 0
    x, y = entries[0]
    firsts, seconds = _tail_halves(entries[1:])
    return (x + y + sum_pair_nest(NestPairVal(firsts))
            + sum_pair_nest(NestPairVal(seconds)))


def sum_zipped_fused(a: NestVal, b: NestVal) -> int:
    """The fusion of sum_pair_nest . zip_nests: recurses on both number
    nests directly and never constructs a pair entry."""
    ea, eb = a.entries, b.entries
    if not ea or not eb:
        return 0
    n = min(len(ea), len(eb))
    ea, eb = ea[:n], eb[:n]
    a1, a2 = _tail_halves(ea[1:])
    b1, b2 = _tail_halves(eb[1:])
    return (ea[0] + eb[0]
            + sum_zipped_fused(NestVal(a1), NestVal(b1))
            + sum_zipped_fused(NestVal(a2), NestVal(b2)))


# -- literals and generators ---------------------------------------------------

def parse_nest(src: str) -> NestVal:
    """Nest literal {e0; e1; ...}: entry i is a 2^i-tuple of numbers,
    e.g. {1; (2, 3); ((4, 5), (6, 7))}."""
    import ast

    src = src.strip()
    if not (src.startswith("{") and src.endswith("}")):
        raise MalformedNest("nest literal must be braced: {e0; e1; ...}")
    body = src[1:-1].strip()
    if not body:
        return NestVal(())
    entries = []
    for part in body.split(";"):
        try:
            entries.append(ast.literal_eval(part.strip()))
        except (ValueError, SyntaxError) as e:
            raise MalformedNest(f"bad nest entry {part.strip()!r}") from e
    return NestVal(tuple(entries))


def show_nest(n: NestVal | NestPairVal) -> str:
    return "{" + "; ".join(repr(e).replace("'", "") for e in n.entries) + "}"


def random_nest(depth: int, rng) -> NestVal:
    """Uniform random entries below 100, one entry per level up to depth."""
    def tree(d: int) -> Tree:
        if d == 0:
            return rng.randrange(100)
        return (tree(d - 1), tree(d - 1))
    return NestVal(tuple(tree(i) for i in range(depth + 1)))


def flatten_leaves(n: NestVal | NestPairVal) -> list[int]:
    out: list[int] = []

    def go(t: Tree) -> None:
        if isinstance(t, int):
            out.append(t)
        else:
            go(t[0])
            go(t[1])

    for e in n.entries:
        go(e)
    return out
