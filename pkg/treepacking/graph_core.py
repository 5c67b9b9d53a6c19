"""Trees, distances and structural classification.

Vertex ids are dense 0-based integers internally and 1-based in every
external text format.
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from treepacking.errors import (
    IdOutOfRange,
    KindMismatch,
    NotAnEdge,
    NotATree,
    ParseError,
    SizeTooLarge,
    StarInput,
)

logger = logging.getLogger(__name__)

MAX_ENUMERATION_SIZE = 10
DEFAULT_MAX_LEAVES_EXHAUSTIVE = 20


@dataclass(frozen=True)
class Tree:
    """An unrooted tree on vertices 0..n-1 with sorted adjacency lists."""

    n: int
    adjacency: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        if self.n < 1:
            raise NotATree("a tree needs at least one vertex")
        if len(self.adjacency) != self.n:
            raise NotATree(f"adjacency has {len(self.adjacency)} rows for {self.n} vertices")
        degree_sum = 0
        for v, row in enumerate(self.adjacency):
            if list(row) != sorted(set(row)):
                raise NotATree(f"neighbors of vertex {v + 1} are not sorted and unique")
            for u in row:
                if not 0 <= u < self.n:
                    raise IdOutOfRange(f"vertex id {u + 1} outside 1..{self.n}")
                if u == v:
                    raise NotATree(f"self-loop at vertex {v + 1}")
                if v not in self.adjacency[u]:
                    raise NotATree(f"edge {v + 1}-{u + 1} is not symmetric")
            degree_sum += len(row)
        if degree_sum != 2 * (self.n - 1):
            raise NotATree(f"{degree_sum // 2} edges on {self.n} vertices")
        if len(_reachable(self.adjacency, 0)) != self.n:
            raise NotATree("graph is disconnected")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Tuple[int, int]]) -> "Tree":
        """Build a tree from 0-based edges."""
        rows: List[set] = [set() for _ in range(n)]
        count = 0
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise IdOutOfRange(f"edge {u + 1}-{v + 1} outside 1..{n}")
            if v in rows[u]:
                raise NotATree(f"duplicate edge {u + 1}-{v + 1}")
            rows[u].add(v)
            rows[v].add(u)
            count += 1
        if count != n - 1:
            raise NotATree(f"{count} edges on {n} vertices")
        return cls(n, tuple(tuple(sorted(r)) for r in rows))

    @classmethod
    def from_networkx(cls, graph: nx.Graph) -> "Tree":
        """Build a tree from a networkx graph, numbering nodes in sorted order."""
        nodes = sorted(graph.nodes())
        index = {node: i for i, node in enumerate(nodes)}
        return cls.from_edges(len(nodes), ((index[u], index[v]) for u, v in graph.edges()))

    def neighbors(self, v: int) -> Tuple[int, ...]:
        return self.adjacency[v]

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adjacency[u]

    def edges(self) -> List[Tuple[int, int]]:
        """All edges as (u, v) with u < v, sorted."""
        return [(u, v) for u in range(self.n) for v in self.adjacency[u] if u < v]

    def leaves(self) -> List[int]:
        return [v for v in range(self.n) if len(self.adjacency[v]) == 1]

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n))
        graph.add_edges_from(self.edges())
        return graph


def _reachable(adjacency, start: int, blocked: Optional[int] = None, within=None) -> List[int]:
    """BFS order of the vertices reachable from start without entering blocked."""
    seen = {start}
    order = [start]
    queue = deque([start])
    while queue:
        v = queue.popleft()
        for u in adjacency[v]:
            if u == blocked or u in seen or (within is not None and u not in within):
                continue
            seen.add(u)
            order.append(u)
            queue.append(u)
    return order


@dataclass(frozen=True, eq=False)
class DistanceTable:
    """All-pairs hop distances of a tree."""

    matrix: np.ndarray
    rows: List[List[int]] = field(init=False, repr=False)

    def __post_init__(self):
        self.matrix.setflags(write=False)
        object.__setattr__(self, "rows", self.matrix.tolist())

    def get(self, u: int, v: int) -> int:
        return self.rows[u][v]


class FTreeKind(Enum):
    """Shape of the component T_(x,y) seen from y."""

    NOT_F_TREE = "NotFTree"
    P1 = "P1"
    P2 = "P2"
    P3_END_ATTACHED = "P3EndAttached"


@dataclass(frozen=True)
class SplitComponents:
    """The two sides of T - {xy}, each with a map from local to original ids."""

    side_x: Tree
    side_x_ids: Tuple[int, ...]
    side_y: Tree
    side_y_ids: Tuple[int, ...]


def parse_tree(text: str) -> Tree:
    """Parse an edge-list document with 1-based ids.

    Lines hold ``u v``; a line with a single id declares a vertex, which is how
    the one-vertex tree is written. Blank lines and ``#`` comments are skipped.
    """
    edges: List[Tuple[int, int]] = []
    max_id = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        try:
            ids = [int(p) for p in parts]
        except ValueError:
            raise ParseError(f"expected integer vertex ids, got '{line}'", lineno)
        if len(ids) not in (1, 2):
            raise ParseError(f"expected 'u v', got '{line}'", lineno)
        if any(i < 1 for i in ids):
            raise ParseError("vertex ids start at 1", lineno)
        max_id = max(max_id, *ids)
        if len(ids) == 2:
            if ids[0] == ids[1]:
                raise NotATree(f"self-loop at vertex {ids[0]} (line {lineno})")
            edges.append((ids[0] - 1, ids[1] - 1))
    if max_id == 0:
        raise ParseError("no vertices found")
    tree = Tree.from_edges(max_id, edges)
    logger.debug("Parsed tree with %d vertices", tree.n)
    return tree


def format_edge_list(t: Tree) -> str:
    """Render a tree in the 1-based edge-list format."""
    if t.n == 1:
        return "1\n"
    return "".join(f"{u + 1} {v + 1}\n" for u, v in t.edges())


def all_pairs_distance(t: Tree) -> DistanceTable:
    """BFS-exact hop distances between all pairs of vertices."""
    matrix = np.zeros((t.n, t.n), dtype=np.int64)
    for source, lengths in nx.all_pairs_shortest_path_length(t.to_networkx()):
        for target, d in lengths.items():
            matrix[source, target] = d
    return DistanceTable(matrix)


def is_star(t: Tree) -> bool:
    """True iff at most one vertex has degree two or more."""
    return sum(1 for v in range(t.n) if t.degree(v) >= 2) <= 1


def is_path(t: Tree) -> bool:
    return all(t.degree(v) <= 2 for v in range(t.n))


def path_order(t: Tree) -> List[int]:
    """Vertices of a path from end to end, starting at the smaller end id."""
    if not is_path(t):
        raise KindMismatch("tree is not a path")
    if t.n == 1:
        return [0]
    start = min(v for v in range(t.n) if t.degree(v) == 1)
    return _reachable(t.adjacency, start)


def side_vertices(
    t: Tree, x: int, y: int, within: Optional[FrozenSet[int]] = None
) -> FrozenSet[int]:
    """Vertex set of T_(x,y): the component of x once the edge xy is removed.

    With ``within`` the search stays inside that vertex set.
    """
    return frozenset(_reachable(t.adjacency, x, blocked=y, within=within))


def _require_edge(t: Tree, x: int, y: int) -> None:
    if not (0 <= x < t.n and 0 <= y < t.n) or not t.has_edge(x, y):
        raise NotAnEdge(f"{x + 1} and {y + 1} are not adjacent")


def f_tree_kind(t: Tree, x: int, y: int) -> FTreeKind:
    """Classify T_(x,y) as a neighbor F-tree of y."""
    _require_edge(t, x, y)
    side = side_vertices(t, x, y)
    if len(side) == 1:
        return FTreeKind.P1
    if len(side) == 2:
        return FTreeKind.P2
    if len(side) == 3 and t.degree(x) == 2:
        return FTreeKind.P3_END_ATTACHED
    return FTreeKind.NOT_F_TREE


def induced_subtree(t: Tree, vertices: Iterable[int]) -> Tuple[Tree, Tuple[int, ...]]:
    """The subtree induced on a connected vertex set.

    Returns the subtree on local ids 0..m-1 and the tuple mapping local ids
    back to ids of t (in ascending order of the original ids).
    """
    ids = tuple(sorted(set(vertices)))
    local = {v: i for i, v in enumerate(ids)}
    edges = [(local[u], local[v]) for u in ids for v in t.adjacency[u] if u < v and v in local]
    return Tree.from_edges(len(ids), edges), ids


def split_at_edge(t: Tree, x: int, y: int) -> SplitComponents:
    _require_edge(t, x, y)
    side_x, ids_x = induced_subtree(t, side_vertices(t, x, y))
    side_y, ids_y = induced_subtree(t, side_vertices(t, y, x))
    return SplitComponents(side_x, ids_x, side_y, ids_y)


def is_bad_vertex(t: Tree, v: int) -> bool:
    """True iff t is P5 and v is its middle vertex."""
    if t.n != 5 or not is_path(t):
        return False
    return path_order(t)[2] == v


def neighbor_trees(t: Tree, v: int) -> List[Tuple[int, FrozenSet[int]]]:
    """The components of T - v, keyed by the neighbor of v they contain."""
    return [(u, side_vertices(t, u, v)) for u in t.neighbors(v)]


def fathers_of_leaves(t: Tree) -> Dict[int, List[int]]:
    """Map each father to its sorted leaves; fathers of a single-edge tree included."""
    groups: Dict[int, List[int]] = {}
    for leaf in t.leaves():
        groups.setdefault(t.adjacency[leaf][0], []).append(leaf)
    return groups


def tree_center(t: Tree) -> List[int]:
    """The one or two central vertices of the tree."""
    return sorted(nx.center(t.to_networkx()))


def _rooted_codes(t: Tree, root: int) -> Tuple[List[str], List[int]]:
    """AHU codes of every subtree when t hangs from root, plus the parent array."""
    order = _reachable(t.adjacency, root)
    parent = [-1] * t.n
    for v in order:
        for u in t.adjacency[v]:
            if u != parent[v]:
                parent[u] = v
    codes = [""] * t.n
    for v in reversed(order):
        children = sorted(codes[u] for u in t.adjacency[v] if u != parent[v])
        codes[v] = "(" + "".join(children) + ")"
    return codes, parent


def rooted_canonical_form(t: Tree, root: int) -> str:
    return _rooted_codes(t, root)[0][root]


def canonical_form(t: Tree) -> str:
    """Isomorphism-invariant string: the smallest rooted code over the centres."""
    return min(rooted_canonical_form(t, c) for c in tree_center(t))


def rooted_isomorphism(t1: Tree, r1: int, t2: Tree, r2: int) -> Optional[Dict[int, int]]:
    """An explicit isomorphism t1 -> t2 sending r1 to r2, or None."""
    if t1.n != t2.n:
        return None
    codes1, parent1 = _rooted_codes(t1, r1)
    codes2, parent2 = _rooted_codes(t2, r2)
    if codes1[r1] != codes2[r2]:
        return None
    mapping = {r1: r2}
    stack = [(r1, r2)]
    while stack:
        u, v = stack.pop()
        kids1 = sorted((w for w in t1.adjacency[u] if w != parent1[u]), key=lambda w: codes1[w])
        kids2 = sorted((w for w in t2.adjacency[v] if w != parent2[v]), key=lambda w: codes2[w])
        for a, b in zip(kids1, kids2):
            mapping[a] = b
            stack.append((a, b))
    return mapping


def relabel(t: Tree, order: Sequence[int]) -> Tree:
    """Renumber t so that new vertex i is old vertex order[i]."""
    new_id = {old: i for i, old in enumerate(order)}
    return Tree.from_edges(t.n, ((new_id[u], new_id[v]) for u, v in t.edges()))


def canonical_tree(t: Tree) -> Tree:
    """Deterministic representative: BFS from the canonical centre, children by code."""
    root = min(tree_center(t), key=lambda c: rooted_canonical_form(t, c))
    codes, parent = _rooted_codes(t, root)
    order = [root]
    queue = deque([root])
    while queue:
        v = queue.popleft()
        kids = sorted((u for u in t.adjacency[v] if u != parent[v]), key=lambda u: codes[u])
        order.extend(kids)
        queue.extend(kids)
    return relabel(t, order)


def compute_m_T(
    t: Tree, max_leaves: int = DEFAULT_MAX_LEAVES_EXHAUSTIVE
) -> Tuple[int, Tuple[int, ...]]:
    """Maximum number of leaves removable while leaving a non-star tree.

    Returns the count and a witness leaf set (the first in lexicographic order
    among the largest ones).
    """
    if is_star(t):
        raise StarInput("m_T is undefined for star trees")
    leaves = t.leaves()
    if len(leaves) > max_leaves:
        raise SizeTooLarge(
            f"{len(leaves)} leaves exceed the exhaustive bound of {max_leaves}"
        )
    inner = [v for v in range(t.n) if t.degree(v) >= 2]
    for k in range(len(leaves), -1, -1):
        for removed in combinations(leaves, k):
            gone = set(removed)
            branching = sum(
                1
                for v in inner
                if t.degree(v) - sum(1 for u in t.adjacency[v] if u in gone) >= 2
            )
            if branching >= 2:
                return k, tuple(removed)
    raise StarInput("m_T is undefined for star trees")


def enumerate_trees(n: int) -> List[Tree]:
    """One representative per isomorphism class of free trees on n vertices."""
    if n < 1:
        return []
    if n > MAX_ENUMERATION_SIZE:
        raise SizeTooLarge(f"tree enumeration is limited to n <= {MAX_ENUMERATION_SIZE}")
    if n == 1:
        return [Tree(1, ((),))]
    if n == 2:
        return [Tree.from_edges(2, [(0, 1)])]
    trees = [canonical_tree(Tree.from_networkx(g)) for g in nx.nonisomorphic_trees(n)]
    trees.sort(key=canonical_form)
    return trees


def random_tree(n: int, seed: int) -> Tree:
    """Uniform random labeled tree by Pruefer decoding."""
    if n < 1:
        raise NotATree("a tree needs at least one vertex")
    if n == 1:
        return Tree(1, ((),))
    if n == 2:
        return Tree.from_edges(2, [(0, 1)])
    rng = np.random.default_rng(seed)
    sequence = rng.integers(0, n, size=n - 2).tolist()
    return Tree.from_networkx(nx.from_prufer_sequence(sequence))


def mis_size(t: Tree) -> int:
    """Size of a maximum independent set (two-state subtree recursion)."""
    order = _reachable(t.adjacency, 0)
    parent = [-1] * t.n
    for v in order:
        for u in t.adjacency[v]:
            if u != parent[v]:
                parent[u] = v
    take = [1] * t.n
    skip = [0] * t.n
    for v in reversed(order):
        p = parent[v]
        if p >= 0:
            take[p] += skip[v]
            skip[p] += max(take[v], skip[v])
    return max(take[0], skip[0])
