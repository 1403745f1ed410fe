"""Non-well-founded sets given by finite accessible pointed graphs.

An :class:`Apg` is a finite directed graph with a root from which every
node is reachable; a node denotes the set of the sets denoted by its
children, so cycles give non-well-founded sets (a self-loop is the set
``Omega = {Omega}``).  Two graphs denote the same set iff their roots are
bisimilar.

The pseudometric on sets takes values in ``{0} | {2**-n}``: ``d(s, t) <= 2**-n``
iff ``s`` and ``t`` agree up to level ``n`` (``s ~n t``), where ``~0`` relates
everything and ``s ~(n+1) t`` iff every child of one side is ``~n`` some
child of the other.  Three routes to the same quantity live here:

* :func:`distance` -- ``~n`` partition levels on the disjoint union, exact;
* :func:`approx_equiv` -- equality of hash-consed rank-``n`` truncations;
* :func:`tau_iterate` -- Hausdorff-style value iteration, contraction 1/2.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, total_ordering
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from .errors import DanglingChild, TooLarge, UnreachableNode, ValidationError

Node = Hashable

S_LEVEL_LIMIT = 4


# --- graphs -------------------------------------------------------------------

@dataclass(frozen=True)
class Apg:
    nodes: tuple
    children: Mapping[Node, frozenset]
    root: Node

    @cached_property
    def index(self) -> dict:
        return {v: i for i, v in enumerate(self.nodes)}

    @cached_property
    def succ(self) -> tuple[tuple[int, ...], ...]:
        """Children as sorted index tuples, aligned with ``nodes``."""
        idx = self.index
        return tuple(tuple(sorted(idx[c] for c in self.children[v])) for v in self.nodes)

    @property
    def root_index(self) -> int:
        return self.index[self.root]

    def __len__(self) -> int:
        return len(self.nodes)

    def at(self, node: Node) -> Apg:
        """The sub-graph rooted at ``node`` (the set that ``node`` denotes)."""
        keep = _reachable(self.children, node)
        nodes = tuple(v for v in self.nodes if v in keep)
        return Apg(nodes, {v: self.children[v] for v in nodes}, node)


def _reachable(children: Mapping[Node, Iterable[Node]], root: Node) -> set:
    seen = {root}
    todo = [root]
    while todo:
        for c in children[todo.pop()]:
            if c not in seen:
                seen.add(c)
                todo.append(c)
    return seen


def validate_apg(nodes: Iterable[Node], children: Mapping[Node, Iterable[Node]], root: Node) -> Apg:
    """Build an :class:`Apg`, rejecting unknown ids and unreachable nodes.

    Nodes missing from ``children`` have no children.
    """
    nodes = tuple(nodes)
    known = set(nodes)
    if len(known) != len(nodes):
        raise ValidationError("duplicate node ids")
    if root not in known:
        raise DanglingChild(f"root {root!r} is not a node")
    for v in children:
        if v not in known:
            raise DanglingChild(f"children given for unknown node {v!r}")
    kids = {}
    for v in nodes:
        cs = frozenset(children.get(v, ()))
        missing = cs - known
        if missing:
            raise DanglingChild(f"node {v!r} has unknown children {sorted(map(repr, missing))}")
        kids[v] = cs
    unreachable = known - _reachable(kids, root)
    if unreachable:
        raise UnreachableNode(f"nodes not reachable from the root: {sorted(map(repr, unreachable))}")
    return Apg(nodes, kids, root)


def from_edges(root: Node, edges: Iterable[tuple[Node, Node]], nodes: Iterable[Node] = ()) -> Apg:
    kids: dict = {}
    order: list = []
    for v in [root, *nodes]:
        if v not in kids:
            kids[v] = set()
            order.append(v)
    for a, b in edges:
        for v in (a, b):
            if v not in kids:
                kids[v] = set()
                order.append(v)
        kids[a].add(b)
    return validate_apg(order, kids, root)


# --- builders -----------------------------------------------------------------

def empty() -> Apg:
    return validate_apg([0], {}, 0)


def numeral(n: int) -> Apg:
    """``0 = {}``, ``k+1 = {k}``; node ``k`` denotes the numeral ``k``."""
    if n < 0:
        raise ValidationError(f"numerals are nonnegative, got {n}")
    return validate_apg(range(n + 1), {k: [k - 1] for k in range(1, n + 1)}, n)


def omega() -> Apg:
    return validate_apg([0], {0: [0]}, 0)


def s_level(n: int) -> Apg:
    """``S_0 = {}``, ``S_(k+1)`` = powerset of ``S_k``, as a graph."""
    if n < 0:
        raise ValidationError(f"level must be nonnegative, got {n}")
    if n > S_LEVEL_LIMIT:
        raise TooLarge(f"S_{n} is too large to build (limit {S_LEVEL_LIMIT})")
    s = RankedSet.EMPTY
    for _ in range(n):
        elems = list(s.members)
        s = RankedSet(RankedSet(c) for r in range(len(elems) + 1) for c in itertools.combinations(elems, r))
    return to_apg(s)


# --- partition refinement -------------------------------------------------------

def _levels(succ: Sequence[Sequence[int]]):
    """Yield the ``~k`` partitions (block id per vertex) for ``k = 0, 1, ...`` until stable.

    Level ``k + 1`` groups vertices by the set of level-``k`` blocks of their
    children.  Partitions only get finer, so an unchanged block count means
    the partition is final; it is yielded once more with ``stable=True``.
    """
    block = [0] * len(succ)
    count = 1 if succ else 0
    while True:
        sigs: dict = {}
        nxt = [sigs.setdefault(frozenset(block[c] for c in kids), len(sigs)) for kids in succ]
        if len(sigs) == count:
            yield block, True
            return
        yield block, False
        block, count = nxt, len(sigs)


def _union_succ(g1: Apg, g2: Apg) -> list[tuple[int, ...]]:
    off = len(g1)
    return list(g1.succ) + [tuple(c + off for c in kids) for kids in g2.succ]


def stable_partition(g: Apg) -> list[int]:
    for block, stable in _levels(g.succ):
        if stable:
            return block
    raise AssertionError("unreachable")


def bisimilar(g1: Apg, g2: Apg) -> bool:
    """Roots bisimilar, by refinement of the disjoint union to stability."""
    r1, r2 = g1.root_index, len(g1) + g2.root_index
    for block, stable in _levels(_union_succ(g1, g2)):
        if block[r1] != block[r2]:
            return False
        if stable:
            return True
    raise AssertionError("unreachable")


def quotient(g: Apg) -> Apg:
    """Collapse bisimilar nodes; each class is named by its first node in ``g.nodes``."""
    block = stable_partition(g)
    rep: dict[int, Node] = {}
    for v, b in zip(g.nodes, block):
        rep.setdefault(b, v)
    nodes = tuple(rep.values())
    kids = {rep[b]: frozenset(rep[block[c]] for c in g.succ[g.index[v]]) for b, v in rep.items()}
    return Apg(nodes, kids, rep[block[g.root_index]])


# --- exact distance -------------------------------------------------------------

@total_ordering
@dataclass(frozen=True)
class DyadicDistance:
    """Exactly ``0`` (``exponent is None``) or ``2**-exponent``."""

    exponent: int | None

    ZERO = None  # replaced below

    @property
    def is_zero(self) -> bool:
        return self.exponent is None

    def as_fraction(self) -> Fraction:
        return Fraction(0) if self.exponent is None else Fraction(1, 2**self.exponent)

    def __float__(self) -> float:
        return 0.0 if self.exponent is None else 2.0 ** -self.exponent

    def __lt__(self, other):
        if isinstance(other, DyadicDistance):
            other = other.as_fraction()
        return self.as_fraction() < other

    def __str__(self) -> str:
        if self.exponent is None:
            return "0"
        return "1" if self.exponent == 0 else f"2^-{self.exponent}"

    @classmethod
    def parse(cls, text: str) -> DyadicDistance:
        text = text.strip()
        if text == "0":
            return cls(None)
        if text == "1":
            return cls(0)
        if text.startswith("2^-") and text[3:].isdigit():
            return cls(int(text[3:]))
        raise ValidationError(f"not a dyadic distance: {text!r}")


DyadicDistance.ZERO = DyadicDistance(None)


def distance(g1: Apg, g2: Apg) -> DyadicDistance:
    """``2**-n`` for the largest ``n`` with roots ``~n``-equivalent, or 0 if they agree at every level.

    Refinement stabilises after fewer rounds than the combined node count,
    after which agreement at every level is settled.
    """
    r1, r2 = g1.root_index, len(g1) + g2.root_index
    for k, (block, stable) in enumerate(_levels(_union_succ(g1, g2))):
        if block[r1] != block[r2]:
            return DyadicDistance(k - 1)
        if stable:
            return DyadicDistance.ZERO
    raise AssertionError("unreachable")


def distance_matrix(graphs: Sequence[Apg]) -> list[list[DyadicDistance]]:
    """All pairwise distances from a single refinement of the disjoint union."""
    succ: list[tuple[int, ...]] = []
    roots = []
    for g in graphs:
        off = len(succ)
        roots.append(off + g.root_index)
        succ.extend(tuple(c + off for c in kids) for kids in g.succ)
    m = len(graphs)
    split_at: list[list[int | None]] = [[None] * m for _ in range(m)]
    for k, (block, stable) in enumerate(_levels(succ)):
        for i in range(m):
            for j in range(m):
                if split_at[i][j] is None and block[roots[i]] != block[roots[j]]:
                    split_at[i][j] = k - 1
        if stable:
            break
    return [[DyadicDistance(e) for e in row] for row in split_at]


# --- hash-consed well-founded sets ----------------------------------------------

class RankedSet:
    """Hereditarily finite well-founded set, hash-consed.

    Construction interns by member set, so structurally equal sets are the
    same object and ``==`` is identity.  The intern table is insert-only and
    guarded by a lock; racing constructions of an equal set return one
    winner.
    """

    __slots__ = ("members", "rank", "size", "_text", "__weakref__")

    _table: dict[frozenset, RankedSet] = {}
    _lock = threading.Lock()
    EMPTY: RankedSet

    def __new__(cls, members: Iterable[RankedSet] = ()):
        key = frozenset(members)
        got = cls._table.get(key)
        if got is not None:
            return got
        with cls._lock:
            got = cls._table.get(key)
            if got is None:
                got = object.__new__(cls)
                got.members = key
                got.rank = 1 + max((m.rank for m in key), default=-1)
                got.size = len(key)
                got._text = None
                cls._table[key] = got
        return got

    def __iter__(self):
        return iter(self.members)

    def __len__(self) -> int:
        return self.size

    def __contains__(self, item) -> bool:
        return item in self.members

    def __reduce__(self):
        return (RankedSet, (tuple(self.members),))

    def __str__(self) -> str:
        if self._text is None:
            if not self.members:
                self._text = "{}"
            else:
                parts = sorted((str(m) for m in self.members), key=lambda s: (len(s), s))
                self._text = "{" + ", ".join(parts) + "}"
        return self._text

    def __repr__(self) -> str:
        return f"RankedSet({self})"


RankedSet.EMPTY = RankedSet()


def approximant_tower(g: Apg, n: int) -> list[RankedSet]:
    """``[f_0(root), ..., f_n(root)]`` with ``f_0 = {}`` and ``f_(k+1)(s) = {f_k(u) : u in s}``."""
    if n < 0:
        raise ValidationError(f"level must be nonnegative, got {n}")
    vals = [RankedSet.EMPTY] * len(g)
    r = g.root_index
    tower = [vals[r]]
    for _ in range(n):
        nxt = [RankedSet(vals[c] for c in kids) for kids in g.succ]
        settled = all(a is b for a, b in zip(nxt, vals))
        vals = nxt
        tower.append(vals[r])
        if settled:
            # every later level repeats this one
            tower.extend([vals[r]] * (n + 1 - len(tower)))
            break
    return tower


def approximant(g: Apg, n: int) -> RankedSet:
    return approximant_tower(g, n)[-1]


def approx_equiv(g1: Apg, g2: Apg, n: int) -> bool:
    """Rank-``n`` truncations coincide."""
    return approximant(g1, n) is approximant(g2, n)


def to_apg(s: RankedSet) -> Apg:
    """Graph of a well-founded set: one node per distinct hereditary member, root ``0``."""
    ids: dict[RankedSet, int] = {s: 0}
    order = [s]
    for x in order:
        for m in sorted(x.members, key=lambda m: (m.rank, str(m))):
            if m not in ids:
                ids[m] = len(order)
                order.append(m)
    return Apg(tuple(range(len(order))), {ids[x]: frozenset(ids[m] for m in x.members) for x in order}, 0)


# --- tau iteration --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TauTable:
    """``g[i, j]`` approximates ``d(nodes1[i], nodes2[j])`` after ``iterations`` rounds."""

    g: np.ndarray
    iterations: int
    nodes1: tuple
    nodes2: tuple
    root_pair: tuple[int, int] = field(repr=False)

    @property
    def root(self) -> float:
        return float(self.g[self.root_pair])

    def at(self, a: Node, b: Node) -> float:
        return float(self.g[self.nodes1.index(a), self.nodes2.index(b)])


def _children_mask(g: Apg) -> np.ndarray:
    mask = np.zeros((len(g), len(g)), dtype=bool)
    for i, kids in enumerate(g.succ):
        mask[i, list(kids)] = True
    return mask


def tau_step(g: np.ndarray, c1: np.ndarray, c2: np.ndarray) -> np.ndarray:
    """One application of the Hausdorff map on a node-pair table.

    ``c1``/``c2`` are the child incidence matrices.  Both childless gives 0,
    exactly one childless gives 1, otherwise half the larger of the two
    directed sup-inf distances between the child sets.
    """
    inf = np.inf
    # toward[u, b] = min over children v of b of g[u, v]
    toward = np.where(c2[None, :, :], g[:, None, :], inf).min(axis=2)
    # back[a, v] = min over children u of a of g[u, v]
    back = np.where(c1[:, :, None], g[None, :, :], inf).min(axis=1)
    left = np.where(c1[:, :, None], toward[None, :, :], -inf).max(axis=1)
    right = np.where(c2[None, :, :], back[:, None, :], -inf).max(axis=2)
    out = 0.5 * np.maximum(left, right)
    e1 = ~c1.any(axis=1)
    e2 = ~c2.any(axis=1)
    out[np.ix_(e1, e2)] = 0.0
    out[np.ix_(e1, ~e2)] = 1.0
    out[np.ix_(~e1, e2)] = 1.0
    return out


def tau_iterate(g1: Apg, g2: Apg, iters: int) -> TauTable:
    """``iters`` rounds of the Hausdorff map from the zero table over node pairs of ``g1 x g2``.

    Each round halves the sup-distance to the true pseudometric, which lies
    in ``[0, 1]``, so the root entry ends within ``2**-iters`` of :func:`distance`.
    """
    if iters < 1:
        raise ValidationError(f"iters must be >= 1, got {iters}")
    c1, c2 = _children_mask(g1), _children_mask(g2)
    g = np.zeros((len(g1), len(g2)))
    for _ in range(iters):
        g = tau_step(g, c1, c2)
    return TauTable(g, iters, g1.nodes, g2.nodes, (g1.root_index, g2.root_index))


# --- canonical representatives --------------------------------------------------

def canonical_F(g: Apg) -> Apg:
    """Canonical form ``F(s) = {F(u) : u in cl(s)}``, minimised.

    Closure is taken inside the graph's own node set: the closure of a child
    set adds every node at distance 0 from one of its members.  On a finite
    graph every node denotes a hereditarily finite, hence singular, set, so
    closure only adds bisimilar duplicates and the result must be bisimilar
    to :func:`quotient` of ``g``; this is checked before returning.
    """
    block = stable_partition(g)  # same block <=> distance 0
    by_block: dict[int, list[Node]] = {}
    for v, b in zip(g.nodes, block):
        by_block.setdefault(b, []).append(v)
    closed = {
        v: frozenset(w for c in g.succ[i] for w in by_block[block[c]])
        for i, v in enumerate(g.nodes)
    }
    image = Apg(g.nodes, closed, g.root)
    if not bisimilar(image, quotient(g)):
        raise RuntimeError("closure-based canonical form disagrees with the bisimulation quotient")
    return quotient(image)


# --- axioms report --------------------------------------------------------------

@dataclass(frozen=True)
class AxiomsReport:
    samples: int
    in_unit_interval: bool
    symmetric: bool
    reflexive: bool
    triangle: bool
    separation: bool
    failures: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return self.in_unit_interval and self.symmetric and self.reflexive and self.triangle and self.separation


def pseudometric_axioms_report(samples: Sequence[Apg], *, max_failures: int = 20) -> AxiomsReport:
    """Check range, symmetry, ``d(s, s) = 0``, the triangle inequality, and ``d = 0`` iff bisimilar.

    Every ordered pair and triple of ``samples`` is examined with exact
    dyadic arithmetic (scaled integers).
    """
    m = len(samples)
    if m < 2:
        raise ValidationError("need at least two samples")
    D = [[distance(a, b) for b in samples] for a in samples]
    fails: list[str] = []

    def note(msg):
        if len(fails) < max_failures:
            fails.append(msg)

    unit = all(Fraction(0) <= D[i][j].as_fraction() <= 1 for i in range(m) for j in range(m))
    if not unit:
        note("distance outside [0, 1]")
    sym = True
    refl = True
    sep = True
    for i in range(m):
        if not D[i][i].is_zero:
            refl = False
            note(f"d(s{i}, s{i}) = {D[i][i]}")
        for j in range(m):
            if D[i][j] != D[j][i]:
                sym = False
                note(f"d(s{i}, s{j}) = {D[i][j]} but d(s{j}, s{i}) = {D[j][i]}")
            if j > i and D[i][j].is_zero != bisimilar(samples[i], samples[j]):
                sep = False
                note(f"d(s{i}, s{j}) = {D[i][j]} disagrees with bisimilarity")

    top = max((d.exponent for row in D for d in row if d.exponent is not None), default=0)
    if top < 62:
        X = np.array([[0 if d.exponent is None else 1 << (top - d.exponent) for d in row] for row in D], dtype=np.int64)
        # bad[i, j, k]: d(i, k) > d(i, j) + d(j, k)
        bad = X[:, None, :] > X[:, :, None] + X[None, :, :]
        tri = not bad.any()
        if not tri:
            for i, j, k in np.argwhere(bad)[:max_failures]:
                note(f"triangle fails for (s{i}, s{j}, s{k})")
    else:
        F = [[d.as_fraction() for d in row] for row in D]
        tri = True
        for i, j, k in itertools.product(range(m), repeat=3):
            if F[i][k] > F[i][j] + F[j][k]:
                tri = False
                note(f"triangle fails for (s{i}, s{j}, s{k})")
    return AxiomsReport(m, unit, sym, refl, tri, sep, tuple(fails))
