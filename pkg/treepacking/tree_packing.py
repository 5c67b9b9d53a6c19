"""Well and good placements of arbitrary non-star trees.

The construction works on sub-problems: a connected vertex set of the input
tree together with per-vertex displacement caps. Branches are tried in a
fixed order and every candidate is checked against the sub-problem's
clauses before it is accepted:

  1. path tables
  2. sibling-leaf insertion
  3. leaf-group cycles
  4. figure families
  5. F-tree extension
  6. gluing across a cut edge
  7. splicing a hanging path into the anchor's cycle
  8. re-anchoring past a leaf anchor and its degree-two father
  9. exhaustive search on small components (opt-in)

Distances inside a connected vertex set equal distances in the whole tree,
so one distance table serves every sub-problem.
"""

import logging
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from treepacking.config import ConstructionOptions
from treepacking.errors import (
    BadVertex,
    ConstructionBug,
    DuplicateId,
    IdOutOfRange,
    KindMismatch,
    PreconditionViolation,
    StarInput,
    TooShort,
    UncoveredCase,
    UsageError,
)
from treepacking.figures import FigureMatch, default_registry, match_figure
from treepacking.graph_core import (
    DistanceTable,
    Tree,
    all_pairs_distance,
    induced_subtree,
    is_bad_vertex,
    is_star,
    side_vertices,
)
from treepacking.oracle import SearchConstraints, first_placement
from treepacking.path_packing import good_path_mapping, well_path_mapping
from treepacking.permutation import (
    Permutation,
    compose,
    from_cycles,
    from_mapping,
    restrict,
    union,
)
from treepacking.verifier import (
    CertificateKind,
    VerificationReport,
    check_cycle_bound,
    check_fixed_point_free,
    verify_caps,
    verify_certificate,
    verify_placement,
)

logger = logging.getLogger(__name__)

__all__ = [
    "ConstructionResult",
    "FTreePartition",
    "FigureMatch",
    "build_placement",
    "extend_over_f_trees",
    "f_tree_cycles",
    "f_tree_partition",
    "glue_placements",
    "good_placement",
    "match_figure",
    "well_placement",
]

TREE_KINDS = (CertificateKind.WELL_TREE, CertificateKind.GOOD_TREE)

Cycles = List[List[int]]


@dataclass(frozen=True)
class FTreePartition:
    """Neighbor F-trees of x, grouped by shape and ordered by attachment id.

    ``a`` holds the single vertices, ``bc`` the (attachment, leaf) pairs and
    ``def_`` the (attachment, middle, end) triples.
    """

    x: int
    a: Tuple[int, ...] = ()
    bc: Tuple[Tuple[int, int], ...] = ()
    def_: Tuple[Tuple[int, int, int], ...] = ()

    @property
    def r(self) -> int:
        return len(self.a)

    @property
    def p(self) -> int:
        return len(self.bc)

    @property
    def q(self) -> int:
        return len(self.def_)

    @property
    def m(self) -> int:
        return self.r + self.p + self.q

    def shapes(self) -> List[Tuple[int, ...]]:
        return [(v,) for v in self.a] + list(self.bc) + list(self.def_)

    def vertices(self) -> List[int]:
        return [v for shape in self.shapes() for v in shape]

    @classmethod
    def from_shapes(cls, x: int, shapes: Sequence[Tuple[int, ...]]) -> "FTreePartition":
        ordered = sorted(shapes, key=lambda s: s[0])
        return cls(
            x,
            tuple(s[0] for s in ordered if len(s) == 1),
            tuple((s[0], s[1]) for s in ordered if len(s) == 2),
            tuple((s[0], s[1], s[2]) for s in ordered if len(s) == 3),
        )


@dataclass(frozen=True)
class ConstructionResult:
    sigma: Permutation
    report: VerificationReport
    trace: Tuple[str, ...]
    kind: CertificateKind
    x: int


def _f_tree_shape(
    t: Tree, x: int, u: int, within: Optional[FrozenSet[int]] = None
) -> Optional[Tuple[int, ...]]:
    """(u,), (u, c) or (u, e, f) when the component of u away from x is a neighbor F-tree."""

    def onward(v: int, back: int) -> List[int]:
        return [w for w in t.adjacency[v] if w != back and (within is None or w in within)]

    first = onward(u, x)
    if not first:
        return (u,)
    if len(first) != 1:
        return None
    e = first[0]
    second = onward(e, u)
    if not second:
        return (u, e)
    if len(second) != 1:
        return None
    f = second[0]
    if onward(f, e):
        return None
    return (u, e, f)


def f_tree_partition(
    t: Tree, x: int, within: Optional[FrozenSet[int]] = None
) -> FTreePartition:
    """Every neighbor F-tree of x, optionally inside a connected vertex set."""
    if not 0 <= x < t.n:
        raise IdOutOfRange(f"vertex id {x + 1} outside 1..{t.n}")
    shapes = []
    for u in t.neighbors(x):
        if within is not None and u not in within:
            continue
        shape = _f_tree_shape(t, x, u, within)
        if shape is not None:
            shapes.append(shape)
    return FTreePartition.from_shapes(x, shapes)


def _pairs(a: Sequence[int], start: int) -> Cycles:
    return [[a[i], a[i + 1]] for i in range(start, len(a) - 1, 2)]


def _bc_cycles(bc: Sequence[Tuple[int, int]], start: int, flip: bool = False) -> Cycles:
    cycles = []
    for i in range(start, len(bc) - 1, 2):
        (b0, c0), (b1, c1) = bc[i], bc[i + 1]
        cycles.append([b0, c0, b1, c1] if flip else [b1, c1, b0, c0])
    return cycles


def _def_cycles(triples: Sequence[Tuple[int, int, int]], start: int) -> Cycles:
    cycles = []
    for i in range(start, len(triples) - 1, 2):
        (d0, e0, f0), (d1, e1, f1) = triples[i], triples[i + 1]
        cycles.append([e0, f1, d0])
        cycles.append([e1, f0, d1])
    return cycles


def _theta(a: Sequence[int]) -> Cycles:
    if len(a) % 2 == 0:
        return _pairs(a, 0)
    return [[a[0], a[1], a[2]]] + _pairs(a, 3)


def _epsilon(bc: Sequence[Tuple[int, int]]) -> Cycles:
    if len(bc) % 2 == 0:
        return _bc_cycles(bc, 0)
    (b0, c0), (b1, c1), (b2, c2) = bc[0], bc[1], bc[2]
    return [[b0, b1, b2], [c0, c2, c1]] + _bc_cycles(bc, 3)


def _delta(triples: Sequence[Tuple[int, int, int]]) -> Cycles:
    if len(triples) % 2 == 0:
        return _def_cycles(triples, 0)
    (d0, e0, f0), (d1, e1, f1), (d2, e2, f2) = triples[0], triples[1], triples[2]
    return [[d0, e0, f1, e1, f0], [d1, d2, f2, e2]] + _def_cycles(triples, 3)


def f_tree_cycles(part: FTreePartition) -> Cycles:
    """Cycles moving the peeled F-tree vertices, chosen by the counts (r, p, q)."""
    r, p, q = part.r, part.p, part.q
    if part.m < 2:
        raise PreconditionViolation(f"at least two F-trees are needed, got {part.m}")
    a, bc, triples = part.a, part.bc, part.def_
    if r == 1:
        a0 = a[0]
        if p >= 1:
            b0, c0 = bc[0]
        if q >= 1:
            d0, e0, f0 = triples[0]
        if p > 1:
            if q == 1:
                return _epsilon(bc) + [[a0, d0, f0, e0]]
            if p % 2 == 0:
                eps = [[a0, b0], [bc[1][0], bc[1][1], c0]] + _bc_cycles(bc, 2)
            else:
                eps = [[a0, b0, c0]] + _bc_cycles(bc, 1)
            return eps + (_delta(triples) if q > 1 else [])
        if p == 1:
            if q == 1:
                return [[a0, b0, c0, e0], [f0, d0]]
            return [[a0, b0, c0]] + (_delta(triples) if q > 1 else [])
        if q == 1:
            return [[a0, d0, f0, e0]]
        if q % 2 == 0:
            d1, e1, f1 = triples[1]
            return [[d0, e0, f1], [f0, a0, d1, e1]] + _def_cycles(triples, 2)
        return [[a0, d0, f0, e0]] + _def_cycles(triples, 1)
    if p == 1:
        b0, c0 = bc[0]
        if q >= 1:
            d0, e0, f0 = triples[0]
        if r > 1:
            if q == 1:
                return [[c0, e0, b0], [f0, d0]] + _theta(a)
            if r % 2 == 0:
                theta = [[a[0], b0, c0, a[1]]] + _pairs(a, 2)
            else:
                theta = [[b0, c0, a[0]]] + _pairs(a, 1)
            return theta + (_delta(triples) if q > 1 else [])
        if q == 1:
            return [[c0, e0, f0, d0, b0]]
        if q % 2 == 0:
            d1, e1, f1 = triples[1]
            return [[d0, f0, b0, c0], [f1, d1], [e0, e1]] + _def_cycles(triples, 2)
        return [[c0, e0, f0, d0, b0]] + _def_cycles(triples, 1)
    if q == 1:
        d0, e0, f0 = triples[0]
        if r > 1:
            if r % 2 == 0:
                theta = [[d0, f0, e0, a[0], a[1]]] + _pairs(a, 2)
            else:
                theta = [[a[0], d0, f0, e0]] + _pairs(a, 1)
            return theta + (_epsilon(bc) if p > 1 else [])
        b0, c0 = bc[0]
        if p % 2 == 0:
            b1, c1 = bc[1]
            return [[e0, b1, b0, c0, c1], [d0, f0]] + _bc_cycles(bc, 2)
        return [[e0, f0, d0, b0, c0]] + _bc_cycles(bc, 1, flip=True)
    # every count is now 0 or at least 2
    cycles: Cycles = []
    if r:
        cycles += _theta(a)
    if p:
        cycles += _epsilon(bc)
    if q:
        cycles += _delta(triples)
    return cycles


def _inner_bound(kind: CertificateKind) -> int:
    return 3 if kind.power == 6 else 2


def _clause_report(
    t: Tree,
    sigma: Permutation,
    kind: CertificateKind,
    anchor: Optional[int] = None,
    dist: Optional[DistanceTable] = None,
) -> VerificationReport:
    """The full certificate at ``anchor``, or the kind's anchor-free clauses."""
    if anchor is not None:
        return verify_certificate(t, sigma, kind, anchor, dist)
    report = verify_placement(t, sigma, kind.power, dist)
    profile = kind.profile
    if profile.fixed_point_free:
        report.conditions["fixed_point_free"] = check_fixed_point_free(sigma)
    if profile.cycle_bound is not None:
        report.conditions["cycle_length_bound"] = check_cycle_bound(sigma, profile.cycle_bound)
    return report


def _localize(
    t: Tree, mapping: Mapping[int, int]
) -> Tuple[Tree, Tuple[int, ...], Permutation]:
    """The subtree a mapping acts on, with the mapping on its local ids."""
    if set(mapping.values()) != set(mapping):
        raise PreconditionViolation("placement does not permute its own vertices")
    try:
        tree, ids = induced_subtree(t, mapping)
    except UsageError as e:
        raise PreconditionViolation(f"placement does not act on a subtree: {e}")
    local = {v: i for i, v in enumerate(ids)}
    return tree, ids, from_mapping(tree.n, {local[v]: local[w] for v, w in mapping.items()})


def _require_placement(
    t: Tree,
    mapping: Mapping[int, int],
    kind: CertificateKind,
    what: str,
    anchor: Optional[int] = None,
) -> None:
    tree, ids, sigma = _localize(t, mapping)
    local_anchor = ids.index(anchor) if anchor is not None else None
    report = _clause_report(tree, sigma, kind, local_anchor)
    if not report.overall:
        raise PreconditionViolation(
            f"{what} is not a {kind.value} placement: {', '.join(report.failed())}"
        )


def _require_verified(
    t: Tree,
    sigma: Permutation,
    kind: CertificateKind,
    anchor: Optional[int],
    dist: Optional[DistanceTable],
    step: str,
) -> Permutation:
    report = _clause_report(t, sigma, kind, anchor, dist)
    if not report.overall:
        logger.error("%s produced a placement failing %s", step, report.failed())
        raise ConstructionBug(f"{step} failed its self-check", report, (step,))
    return sigma


def extend_over_f_trees(
    t: Tree,
    x: int,
    part: FTreePartition,
    sigma_inner: Permutation,
    kind: CertificateKind = CertificateKind.WELL_TREE,
    anchor: Optional[int] = None,
    dist: Optional[DistanceTable] = None,
) -> Permutation:
    """Extend a placement of T' to T by moving the peeled F-trees of x.

    ``sigma_inner`` acts on T' and fixes every peeled vertex; the result
    agrees with it on T'. With ``anchor`` the inner placement must be a
    certificate of ``kind`` at that vertex of T', and so must the result on T.
    """
    if kind not in TREE_KINDS:
        raise KindMismatch(f"F-tree extension builds tree placements, not {kind.value}")
    if sigma_inner.n != t.n:
        raise PreconditionViolation(f"inner placement has size {sigma_inner.n}, tree has {t.n}")
    if part.x != x:
        raise PreconditionViolation(f"partition is anchored at {part.x + 1}, not {x + 1}")
    peeled = part.vertices()
    for v in peeled:
        if sigma_inner(v) != v:
            raise PreconditionViolation(f"inner placement moves peeled vertex {v + 1}")
    if anchor is not None and anchor in peeled:
        raise PreconditionViolation(f"anchor {anchor + 1} lies in a peeled F-tree")
    bound = _inner_bound(kind)
    dist = dist or all_pairs_distance(t)
    if dist.get(x, sigma_inner(x)) > bound:
        raise PreconditionViolation(
            f"inner placement moves {x + 1} by {dist.get(x, sigma_inner(x))} > {bound}"
        )
    kept = set(range(t.n)).difference(peeled)
    _require_placement(t, restrict(sigma_inner, kept), kind, "inner placement", anchor)
    product = from_cycles(t.n, f_tree_cycles(part))
    sigma = compose(product, sigma_inner)
    return _require_verified(t, sigma, kind, anchor, dist, "F-tree extension")


def glue_placements(
    t: Tree,
    x: int,
    inner: Mapping[int, int],
    pieces: Sequence[Union[Mapping[int, int], FTreePartition]] = (),
    kind: CertificateKind = CertificateKind.WELL_TREE,
    anchor: Optional[int] = None,
    dist: Optional[DistanceTable] = None,
) -> Permutation:
    """Join a placement of T' with placements of subtrees hanging off x.

    A mapping piece places a whole component of T - x, attached to x by a
    single edge; the moves of x and of the attachment vertex plus that edge
    must stay within the power. FTreePartition pieces are peeled neighbor
    F-trees of x, moved by the F-tree extension before the mapping pieces
    are joined.
    """
    if kind not in TREE_KINDS:
        raise KindMismatch(f"gluing builds tree placements, not {kind.value}")
    if x not in inner:
        raise PreconditionViolation(f"inner placement does not cover {x + 1}")
    dist = dist or all_pairs_distance(t)
    inner_anchor = anchor if anchor is not None and anchor in inner else None
    _require_placement(t, inner, kind, "inner placement", inner_anchor)

    shapes: List[Tuple[int, ...]] = []
    placed: List[Mapping[int, int]] = []
    for piece in pieces:
        if isinstance(piece, FTreePartition):
            if piece.x != x:
                raise PreconditionViolation(f"partition is anchored at {piece.x + 1}, not {x + 1}")
            shapes.extend(piece.shapes())
        else:
            placed.append(piece)

    joined: Mapping[int, int] = inner
    if shapes:
        joined = _extend_mapping(t, x, FTreePartition.from_shapes(x, shapes), inner, kind, inner_anchor)

    moved = dist.get(x, inner[x])
    for piece in placed:
        attach = [v for v in piece if t.has_edge(v, x)]
        if len(attach) != 1:
            raise PreconditionViolation("each subtree must hang off x by exactly one edge")
        a = attach[0]
        if set(piece) != side_vertices(t, a, x):
            raise PreconditionViolation(f"piece at {a + 1} is not the whole subtree hanging off x")
        _require_placement(t, piece, kind, f"placement of the subtree at {a + 1}")
        if moved + 1 + dist.get(a, piece[a]) > kind.power:
            raise PreconditionViolation(f"attachment vertex {a + 1} moves too far")
    try:
        sigma = union(t.n, [joined, *placed])
    except DuplicateId as e:
        raise PreconditionViolation(str(e))
    covered = set(joined).union(*[set(piece) for piece in placed])
    if len(covered) != t.n:
        raise PreconditionViolation(f"pieces cover {len(covered)} of {t.n} vertices")
    return _require_verified(t, sigma, kind, anchor, dist, "gluing")


def _extend_mapping(
    t: Tree,
    x: int,
    part: FTreePartition,
    inner: Mapping[int, int],
    kind: CertificateKind,
    anchor: Optional[int] = None,
) -> Dict[int, int]:
    """extend_over_f_trees on the subtree spanned by inner and the peeled F-trees."""
    if set(part.vertices()) & set(inner):
        raise PreconditionViolation("peeled F-trees overlap the inner placement")
    spanned = {**{v: v for v in part.vertices()}, **inner}
    tree, ids, sigma_inner = _localize(t, spanned)
    local = {v: i for i, v in enumerate(ids)}
    local_part = FTreePartition.from_shapes(
        local[x], [tuple(local[v] for v in shape) for shape in part.shapes()]
    )
    sigma = extend_over_f_trees(
        tree,
        local[x],
        local_part,
        sigma_inner,
        kind,
        local[anchor] if anchor is not None else None,
    )
    return {ids[i]: ids[sigma(i)] for i in range(tree.n)}


def _glue_mapping(
    t: Tree,
    x: int,
    inner: Mapping[int, int],
    pieces: Sequence[Mapping[int, int]],
    kind: CertificateKind,
) -> Dict[int, int]:
    """glue_placements on the subtree spanned by inner and the pieces."""
    spanned = dict(inner)
    for piece in pieces:
        spanned.update(piece)
    tree, ids, _ = _localize(t, spanned)
    local = {v: i for i, v in enumerate(ids)}

    def relabel(mapping: Mapping[int, int]) -> Dict[int, int]:
        return {local[v]: local[w] for v, w in mapping.items()}

    sigma = glue_placements(tree, local[x], relabel(inner), [relabel(p) for p in pieces], kind)
    return {ids[i]: ids[sigma(i)] for i in range(tree.n)}


def _tighten(caps: Dict[int, int], v: int, value: Optional[int]) -> None:
    if value is None:
        return
    caps[v] = min(caps.get(v, value), value)


@dataclass(frozen=True)
class _SubProblem:
    vertices: FrozenSet[int]
    caps: Dict[int, int]
    exact: FrozenSet[int]
    adjacency: Dict[int, Tuple[int, ...]]

    @property
    def n(self) -> int:
        return len(self.vertices)

    def neighbors(self, v: int) -> Tuple[int, ...]:
        return self.adjacency[v]

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    @property
    def anchor(self) -> int:
        return min(
            self.vertices,
            key=lambda v: (v not in self.exact, self.caps.get(v, float("inf")), v),
        )

    def ranked_caps(self, max_cap: int) -> List[int]:
        """Capped vertices with cap <= max_cap, exact ones first, then tightest."""
        ranked = sorted(self.caps, key=lambda v: (v not in self.exact, self.caps[v], v))
        return [v for v in ranked if self.caps[v] <= max_cap]

    def is_star(self) -> bool:
        return sum(1 for v in self.vertices if len(self.adjacency[v]) >= 2) <= 1

    def is_path(self) -> bool:
        return all(len(self.adjacency[v]) <= 2 for v in self.vertices)

    def is_bad(self, v: int) -> bool:
        return self.n == 5 and self.is_path() and self.path_order()[2] == v

    def path_order(self) -> List[int]:
        start = min(v for v in self.vertices if len(self.adjacency[v]) == 1)
        order = [start]
        previous = -1
        while True:
            onward = [w for w in self.adjacency[order[-1]] if w != previous]
            if not onward:
                return order
            previous = order[-1]
            order.append(onward[0])


def _leaf_chunks(leaves: Sequence[int]) -> Cycles:
    """Pairs, with the first three leaves forming a 3-cycle when the count is odd."""
    if len(leaves) % 2 == 0:
        return _pairs(leaves, 0)
    return [list(leaves[:3])] + _pairs(leaves, 3)


class _Construction:
    """One construction run over a fixed tree and certificate kind."""

    def __init__(
        self,
        t: Tree,
        kind: CertificateKind,
        options: ConstructionOptions,
        dist: DistanceTable,
    ):
        self.t = t
        self.kind = kind
        profile = kind.profile
        self.power = profile.power
        self.fpf = profile.fixed_point_free
        self.cycle_bound = profile.cycle_bound
        self.inner_bound = _inner_bound(kind)
        self.options = options
        self.d = dist.rows
        self.registry = default_registry()
        self.memo: Dict[tuple, Optional[Tuple[Dict[int, int], Tuple[str, ...]]]] = {}
        self.nodes = 0
        self.dead_ends: List[str] = []

    def subproblem(
        self, vertices: FrozenSet[int], caps: Mapping[int, int], exact: FrozenSet[int]
    ) -> _SubProblem:
        adjacency = {
            v: tuple(u for u in self.t.adjacency[v] if u in vertices) for v in vertices
        }
        return _SubProblem(
            vertices,
            {v: c for v, c in caps.items() if v in vertices},
            frozenset(v for v in exact if v in vertices),
            adjacency,
        )

    def solve(
        self, vertices: FrozenSet[int], caps: Mapping[int, int], exact: FrozenSet[int]
    ) -> Optional[Tuple[Dict[int, int], Tuple[str, ...]]]:
        sub = self.subproblem(vertices, caps, exact)
        key = (sub.vertices, tuple(sorted(sub.caps.items())), sub.exact)
        if key in self.memo:
            return self.memo[key]
        self.nodes += 1
        if self.nodes > self.options.node_budget:
            raise UncoveredCase(
                f"construction gave up after {self.options.node_budget} sub-problems",
                self.dead_ends,
            )
        result = None
        if sub.n >= 4 and not sub.is_star():
            result = self._dispatch(sub)
            if result is None and len(self.dead_ends) < 20:
                self.dead_ends.append(f"no branch on {sub.n} vertices at {sub.anchor + 1}")
        self.memo[key] = result
        return result

    def _dispatch(self, sub: _SubProblem) -> Optional[Tuple[Dict[int, int], Tuple[str, ...]]]:
        branches = (
            ("path", self._path),
            ("sibling_leaf", self._sibling_leaf),
            ("leaf_group", self._leaf_group),
            ("figure", self._figure),
            ("f_tree", self._f_tree),
            ("glue", self._glue),
            ("splice", self._splice),
            ("reanchor", self._reanchor),
            ("search", self._search),
        )
        for name, branch in branches:
            for mapping, trace in branch(sub):
                if self._accepts(sub, mapping):
                    logger.debug("branch fired: %s on %d vertices", trace[0], sub.n)
                    return mapping, trace
                logger.debug("branch %s rejected on %d vertices", name, sub.n)
        return None

    def _accepts(self, sub: _SubProblem, mapping: Mapping[int, int]) -> bool:
        """All clauses of the sub-problem: bijection, caps, edges, cycles."""
        if set(mapping) != sub.vertices or set(mapping.values()) != sub.vertices:
            return False
        d = self.d
        for v in sub.vertices:
            w = mapping[v]
            if self.fpf and w == v:
                return False
            cap = sub.caps.get(v)
            if cap is not None:
                moved = d[v][w]
                if moved > cap or (v in sub.exact and moved != cap):
                    return False
        for u in sub.vertices:
            for w in sub.adjacency[u]:
                if u < w and not 2 <= d[mapping[u]][mapping[w]] <= self.power:
                    return False
        if self.cycle_bound is not None:
            seen = set()
            for start in sub.vertices:
                if start in seen:
                    continue
                length = 0
                v = start
                while v not in seen:
                    seen.add(v)
                    length += 1
                    v = mapping[v]
                if length > self.cycle_bound:
                    return False
        return True

    def _path(self, sub: _SubProblem) -> Iterator[Tuple[Dict[int, int], Tuple[str, ...]]]:
        if not sub.is_path():
            return
        order = sub.path_order()
        mapper = well_path_mapping if self.power == 6 else good_path_mapping
        anchors = sub.ranked_caps(3)
        for end in (order[0], order[-1]):
            if end not in anchors:
                anchors.append(end)
        for v in anchors:
            for direction in (order, order[::-1]):
                try:
                    mapping = mapper(direction, v)
                except (BadVertex, TooShort):
                    continue
                yield mapping, (f"path[n={sub.n}]",)

    def _sibling_leaf(self, sub: _SubProblem) -> Iterator[Tuple[Dict[int, int], Tuple[str, ...]]]:
        x = sub.anchor
        if sub.degree(x) != 1:
            return
        y = sub.neighbors(x)[0]
        for alpha in sub.neighbors(y):
            if alpha == x or sub.degree(alpha) != 1 or alpha in sub.exact:
                continue
            if sub.caps.get(alpha, 2) < 2:
                continue
            caps = dict(sub.caps)
            caps.pop(x, None)
            _tighten(caps, alpha, sub.caps.get(x))
            _tighten(caps, y, self.power - 1)
            exact = sub.exact - {x}
            if x in sub.exact:
                exact = exact | {alpha}
            found = self.solve(sub.vertices - {x}, caps, exact)
            if found is None:
                continue
            inner, trace = found
            mapping = dict(inner)
            mapping[x] = inner[alpha]
            mapping[alpha] = x
            yield mapping, (f"sibling_leaf[n={sub.n}]",) + trace

    def _leaf_group(self, sub: _SubProblem) -> Iterator[Tuple[Dict[int, int], Tuple[str, ...]]]:
        fathers: Dict[int, List[int]] = {}
        for v in sorted(sub.vertices):
            if sub.degree(v) == 1:
                fathers.setdefault(sub.neighbors(v)[0], []).append(v)
        for beta, leaves in sorted(fathers.items(), key=lambda kv: (-len(kv[1]), kv[0])):
            movable = [v for v in leaves if v not in sub.exact and sub.caps.get(v, 2) >= 2]
            removals = [movable, movable[1:]]
            if len(movable) > 3:
                removals.append(movable[:2])
            for removed in removals:
                if len(removed) < 2:
                    continue
                rest = sub.vertices - set(removed)
                caps = dict(sub.caps)
                _tighten(caps, beta, self.power - 1)
                found = self.solve(rest, caps, sub.exact)
                if found is None:
                    continue
                inner, trace = found
                mapping = dict(inner)
                for cycle in _leaf_chunks(removed):
                    for i, v in enumerate(cycle):
                        mapping[v] = cycle[(i + 1) % len(cycle)]
                yield mapping, (f"leaf_group[n={sub.n},k={len(removed)}]",) + trace
                break

    def _figure(self, sub: _SubProblem) -> Iterator[Tuple[Dict[int, int], Tuple[str, ...]]]:
        if not self.registry.covers_size(sub.n):
            return
        tree, ids = induced_subtree(self.t, sub.vertices)
        local = {v: i for i, v in enumerate(ids)}
        kind = CertificateKind.WELL_TREE if self.power == 6 else CertificateKind.GOOD_TREE
        for v in sub.ranked_caps(2) or [sub.anchor]:
            found = self.registry.match(tree, local[v], kind)
            if found is None:
                continue
            figure, sigma = found
            mapping = {ids[i]: ids[sigma(i)] for i in range(tree.n)}
            yield mapping, (f"figure:{figure.tag}[n={sub.n}]",)

    def _peelable(self, sub: _SubProblem, shape: Tuple[int, ...]) -> bool:
        if any(v in sub.exact for v in shape):
            return False
        if sub.caps.get(shape[0], 2) < 2:
            return False
        return all(sub.caps.get(v, 4) >= 4 for v in shape[1:])

    def _f_tree(self, sub: _SubProblem) -> Iterator[Tuple[Dict[int, int], Tuple[str, ...]]]:
        anchor = sub.anchor
        for v in [anchor] + sorted(sub.vertices - {anchor}):
            if sub.degree(v) < 3:
                continue
            shapes = []
            for u in sub.neighbors(v):
                shape = _f_tree_shape(self.t, v, u, sub.vertices)
                if shape is not None and self._peelable(sub, shape):
                    shapes.append(shape)
            if len(shapes) < 2:
                continue
            peeled = sorted(shapes, key=lambda s: (len(s), s[0]))
            while True:
                rest = sub.vertices.difference(*peeled)
                if len(rest) >= 4 and not self.subproblem(rest, {}, frozenset()).is_star():
                    break
                if len(peeled) <= 2:
                    peeled = []
                    break
                peeled.pop()
            if not peeled:
                continue
            caps = dict(sub.caps)
            _tighten(caps, v, self.inner_bound)
            found = self.solve(rest, caps, sub.exact)
            if found is None:
                continue
            inner, trace = found
            part = FTreePartition.from_shapes(v, peeled)
            mapping = _extend_mapping(self.t, v, part, inner, self.kind)
            label = f"f_tree(r={part.r},p={part.p},q={part.q})[n={sub.n}]"
            yield mapping, (label,) + trace

    def _cut_edges(self, sub: _SubProblem) -> List[Tuple[int, int, FrozenSet[int], FrozenSet[int]]]:
        """Cut edges leaving two non-star sides, most balanced first."""
        root = min(sub.vertices)
        order = [root]
        parent = {root: -1}
        for v in order:
            for u in sub.adjacency[v]:
                if u not in parent:
                    parent[u] = v
                    order.append(u)
        below: Dict[int, List[int]] = {v: [v] for v in order}
        for v in reversed(order[1:]):
            below[parent[v]].extend(below[v])
        ranked = sorted(
            (max(len(below[v]), sub.n - len(below[v])), v) for v in order[1:]
            if len(below[v]) >= 4 and sub.n - len(below[v]) >= 4
        )
        cuts = []
        for _, v in ranked:
            side_v = frozenset(below[v])
            side_p = sub.vertices - side_v
            if self.subproblem(side_v, {}, frozenset()).is_star():
                continue
            if self.subproblem(side_p, {}, frozenset()).is_star():
                continue
            cuts.append((v, parent[v], side_v, side_p))
            if len(cuts) >= self.options.max_glue_attempts:
                break
        return cuts

    def _side_caps(
        self, sub: _SubProblem, side: FrozenSet[int], cut: int, cap: int
    ) -> Iterator[Tuple[Dict[int, int], FrozenSet[int]]]:
        """Caps for one side of a cut edge.

        The cut vertex is capped first; a side holding no exact vertex is
        then also tried anchored at the cut vertex and at each of its
        neighbors, as a certificate of the run's kind.
        """
        caps = dict(sub.caps)
        _tighten(caps, cut, cap)
        yield caps, sub.exact
        if sub.exact & side:
            return
        profile = self.kind.profile
        piece = self.subproblem(side, {}, frozenset())
        anchors = [cut] if profile.x_cap <= cap else []
        if profile.neighbor_cap is not None and profile.neighbor_cap <= cap:
            anchors.extend(sorted(piece.neighbors(cut)))
        for a in anchors:
            if self.kind.is_good and piece.is_bad(a):
                continue
            anchored = dict(caps)
            _tighten(anchored, a, profile.x_cap)
            for u in piece.neighbors(a):
                _tighten(anchored, u, profile.neighbor_cap)
            yield anchored, (sub.exact | {a}) if profile.x_exact else sub.exact

    def _solve_side(
        self, sub: _SubProblem, side: FrozenSet[int], cut: int, cap: int
    ) -> Optional[Tuple[Dict[int, int], Tuple[str, ...]]]:
        for caps, exact in self._side_caps(sub, side, cut, cap):
            found = self.solve(side, caps, exact)
            if found is not None:
                return found
        return None

    def _glue(self, sub: _SubProblem) -> Iterator[Tuple[Dict[int, int], Tuple[str, ...]]]:
        splits = ((3, 2), (2, 3)) if self.power == 6 else ((2, 2), (3, 1), (1, 3))
        for u, w, side_u, side_w in self._cut_edges(sub):
            for cap_u, cap_w in splits:
                left = self._solve_side(sub, side_u, u, cap_u)
                if left is None:
                    continue
                right = self._solve_side(sub, side_w, w, cap_w)
                if right is None:
                    continue
                mapping = _glue_mapping(self.t, u, left[0], [right[0]], self.kind)
                yield mapping, (f"glue[n={sub.n},{len(side_u)}+{len(side_w)}]",) + left[1] + right[1]

    def _hanging_path(self, sub: _SubProblem, x: int, y: int) -> Optional[List[int]]:
        """The path y, ... hanging off x and ending in a leaf, if the branch at y is one."""
        chain = [y]
        previous = x
        while sub.degree(chain[-1]) == 2:
            onward = [w for w in sub.neighbors(chain[-1]) if w != previous]
            previous = chain[-1]
            chain.append(onward[0])
        return chain if sub.degree(chain[-1]) == 1 else None

    def _splice(self, sub: _SubProblem) -> Iterator[Tuple[Dict[int, int], Tuple[str, ...]]]:
        """Thread a hanging leaf or three-vertex path into the cycle of an exact anchor."""
        for x in sorted(sub.exact):
            if sub.caps.get(x) != 1 or sub.degree(x) < 2:
                continue
            for y in sub.neighbors(x):
                chain = self._hanging_path(sub, x, y)
                if chain is None or len(chain) not in (1, 3):
                    continue
                found = self.solve(sub.vertices - set(chain), sub.caps, sub.exact)
                if found is None:
                    continue
                inner, trace = found
                mapping = dict(inner)
                if len(chain) == 1:
                    mapping[x] = y
                    mapping[y] = inner[x]
                else:
                    c1, c2, c3 = chain
                    mapping.update({x: c1, c1: c3, c3: c2, c2: inner[x]})
                yield mapping, (f"splice[n={sub.n},k={len(chain)}]",) + trace

    def _reanchor(self, sub: _SubProblem) -> Iterator[Tuple[Dict[int, int], Tuple[str, ...]]]:
        """A leaf anchor x on a degree-two father y: place the rest anchored at y's other neighbor."""
        profile = self.kind.profile
        for x in sorted(sub.exact):
            if sub.caps.get(x) != 1 or sub.degree(x) != 1:
                continue
            y = sub.neighbors(x)[0]
            if sub.degree(y) != 2:
                continue
            p = next(w for w in sub.neighbors(y) if w != x)
            rest = sub.vertices - {x, y}
            piece = self.subproblem(rest, {}, frozenset())
            if self.kind.is_good and piece.is_bad(p):
                continue
            caps = dict(sub.caps)
            _tighten(caps, p, profile.x_cap)
            for w in piece.neighbors(p):
                _tighten(caps, w, profile.neighbor_cap)
            exact = sub.exact - {x}
            if profile.x_exact:
                exact = exact | {p}
            found = self.solve(rest, caps, exact)
            if found is None:
                continue
            inner, trace = found
            mapping = dict(inner)
            mapping.update({p: x, x: y, y: inner[p]})
            yield mapping, (f"reanchor[n={sub.n}]",) + trace

    def _search(self, sub: _SubProblem) -> Iterator[Tuple[Dict[int, int], Tuple[str, ...]]]:
        limit = self.options.search_max_vertices
        if not self.options.search_fallback or sub.n > limit:
            return
        tree, ids = induced_subtree(self.t, sub.vertices)
        local = {v: i for i, v in enumerate(ids)}
        constraints = SearchConstraints(
            power=self.power,
            fixed_point_free=self.fpf,
            max_cycle_length=self.cycle_bound,
            caps={local[v]: c for v, c in sub.caps.items()},
            exact=frozenset(local[v] for v in sub.exact),
        )
        sigma = first_placement(tree, constraints, max_vertices=limit)
        if sigma is not None:
            yield {ids[i]: ids[sigma(i)] for i in range(tree.n)}, (f"search[n={sub.n}]",)


def build_placement(
    t: Tree,
    kind: CertificateKind,
    x: int,
    caps: Optional[Mapping[int, int]] = None,
    options: Optional[ConstructionOptions] = None,
) -> ConstructionResult:
    """Construct a certified well or good placement of t at x.

    ``caps`` adds displacement caps on top of the kind's own clauses; they
    are checked as the extra ``caps`` condition of the report.
    """
    if kind not in TREE_KINDS:
        raise KindMismatch(f"tree construction builds WellTree or GoodTree, not {kind.value}")
    if not 0 <= x < t.n:
        raise IdOutOfRange(f"vertex id {x + 1} outside 1..{t.n}")
    if is_star(t):
        raise StarInput("star trees have no placement into any power of themselves")
    if kind is CertificateKind.GOOD_TREE and is_bad_vertex(t, x):
        raise BadVertex(f"vertex {x + 1} is the middle of a P5")
    options = options or ConstructionOptions()
    dist = all_pairs_distance(t)
    constraints = SearchConstraints.for_kind(kind, t, x)
    if caps:
        constraints = constraints.with_caps(caps)

    run = _Construction(t, kind, options, dist)
    found = run.solve(frozenset(range(t.n)), constraints.caps, constraints.exact)
    if found is None:
        raise UncoveredCase(
            f"no construction branch yields a {kind.value} placement at vertex {x + 1}",
            run.dead_ends,
        )
    mapping, trace = found
    sigma = from_mapping(t.n, mapping)
    report = verify_certificate(t, sigma, kind, x, dist)
    if caps:
        report.conditions["caps"] = verify_caps(t, sigma, caps, dist)
    if not report.overall:
        logger.error("%s self-check failed at %d: %s", kind.value, x + 1, report.failed())
        raise ConstructionBug(f"{kind.value} construction failed its self-check", report, trace)
    logger.debug(
        "%s placement at %d built from %d sub-problems: %s",
        kind.value,
        x + 1,
        run.nodes,
        " > ".join(trace),
    )
    return ConstructionResult(sigma, report, trace, kind, x)


def well_placement(
    t: Tree, x: int, options: Optional[ConstructionOptions] = None
) -> Permutation:
    return build_placement(t, CertificateKind.WELL_TREE, x, options=options).sigma


def good_placement(
    t: Tree, x: int, options: Optional[ConstructionOptions] = None
) -> Permutation:
    return build_placement(t, CertificateKind.GOOD_TREE, x, options=options).sigma
