"""Exhaustive search over permutations of small trees.

A labeling is preserved by sigma exactly when it is constant on the cycles
of sigma, so the largest label count of a packing into T^k equals the
largest number of cycles (fixed points included) of a placement into T^k.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, List, Mapping, Optional, Tuple

from treepacking.errors import SizeTooLarge
from treepacking.graph_core import DistanceTable, Tree, all_pairs_distance, path_order
from treepacking.permutation import Permutation
from treepacking.verifier import CertificateKind

logger = logging.getLogger(__name__)

DEFAULT_MAX_VERTICES = 9


@dataclass(frozen=True)
class SearchConstraints:
    """Clauses a searched permutation must satisfy.

    ``caps`` bounds dist(v, sigma(v)) per vertex; vertices in ``exact`` must
    move by exactly their cap.
    """

    power: int
    fixed_point_free: bool = False
    max_cycle_length: Optional[int] = None
    caps: Dict[int, int] = field(default_factory=dict)
    exact: FrozenSet[int] = frozenset()

    def __post_init__(self):
        if self.power < 1:
            raise ValueError("power must be at least 1")
        if any(c < 0 for c in self.caps.values()):
            raise ValueError("distance caps must be non-negative")

    @classmethod
    def for_kind(
        cls, kind: CertificateKind, t: Tree, x: Optional[int] = None
    ) -> "SearchConstraints":
        """The clauses of a certificate kind, with overlapping caps resolved strictest-wins."""
        profile = kind.profile
        caps: Dict[int, int] = {}

        def cap(v: int, value: int) -> None:
            caps[v] = min(caps.get(v, value), value)

        exact = set()
        if kind is CertificateKind.PATH4:
            order = path_order(t)
            if x is not None and x == order[-1]:
                order.reverse()
            cap(order[0], 1)
            cap(order[-1], 1)
            exact.add(order[0])
        else:
            for leaf in t.leaves():
                cap(leaf, profile.leaf_cap)
            for y in t.neighbors(x):
                cap(y, profile.neighbor_cap)
            cap(x, profile.x_cap)
            if profile.x_exact:
                exact.add(x)
        return cls(
            power=profile.power,
            fixed_point_free=profile.fixed_point_free,
            max_cycle_length=profile.cycle_bound,
            caps=caps,
            exact=frozenset(exact),
        )

    def with_caps(self, caps: Mapping[int, int]) -> "SearchConstraints":
        """Tighten the per-vertex caps; the stricter value wins."""
        merged = dict(self.caps)
        for v, value in caps.items():
            merged[v] = min(merged.get(v, value), value)
        return replace(self, caps=merged)


class _Search:
    """Backtracking over images assigned in vertex order, smallest image first."""

    def __init__(self, t: Tree, c: SearchConstraints, dist: DistanceTable):
        self.t = t
        self.c = c
        self.d = dist.rows
        self.n = t.n
        self.caps = [c.caps.get(v) for v in range(t.n)]
        self.earlier = [[u for u in t.neighbors(v) if u < v] for v in range(t.n)]
        self.image = [-1] * t.n
        self.pre = [-1] * t.n

    def candidates(self, v: int, fixed_first: bool = False) -> List[int]:
        c = self.c
        order = list(range(self.n))
        if fixed_first:
            order.remove(v)
            order.insert(0, v)
        result = []
        for w in order:
            if self.pre[w] != -1:
                continue
            if w == v and (c.fixed_point_free or v in c.exact):
                continue
            cap = self.caps[v]
            if cap is not None:
                dv = self.d[v][w]
                if dv > cap or (v in c.exact and dv != cap):
                    continue
            if any(
                self.d[self.image[u]][w] == 1 or self.d[self.image[u]][w] > c.power
                for u in self.earlier[v]
            ):
                continue
            result.append(w)
        return result

    def chain(self, v: int) -> Tuple[bool, int]:
        """(closed?, vertex count) of the orbit fragment through an assigned v."""
        count = 1
        cur = self.image[v]
        while cur != v:
            count += 1
            if self.image[cur] == -1:
                break
            cur = self.image[cur]
        if cur == v:
            return True, count
        back = self.pre[v]
        while back != -1:
            count += 1
            back = self.pre[back]
        return False, count

    def assign(self, v: int, w: int) -> bool:
        """Assign v -> w; False (and undone) when the cycle bound breaks."""
        self.image[v] = w
        self.pre[w] = v
        bound = self.c.max_cycle_length
        if bound is not None and self.chain(v)[1] > bound:
            self.unassign(v)
            return False
        return True

    def unassign(self, v: int) -> None:
        self.pre[self.image[v]] = -1
        self.image[v] = -1


def _check_size(t: Tree, max_vertices: int) -> None:
    if t.n > max_vertices:
        raise SizeTooLarge(f"exhaustive search is limited to n <= {max_vertices}, got {t.n}")


def search_placements(
    t: Tree,
    c: SearchConstraints,
    limit: Optional[int] = None,
    max_vertices: int = DEFAULT_MAX_VERTICES,
    dist: Optional[DistanceTable] = None,
) -> List[Permutation]:
    """All (or the first ``limit``) permutations meeting c, in lexicographic image order."""
    _check_size(t, max_vertices)
    search = _Search(t, c, dist or all_pairs_distance(t))
    found: List[Permutation] = []

    def walk(v: int) -> bool:
        if v == t.n:
            found.append(Permutation(tuple(search.image)))
            return limit is not None and len(found) >= limit
        for w in search.candidates(v):
            if not search.assign(v, w):
                continue
            done = walk(v + 1)
            search.unassign(v)
            if done:
                return True
        return False

    walk(0)
    logger.debug("Search on %d vertices found %d placement(s)", t.n, len(found))
    return found


def first_placement(
    t: Tree,
    c: SearchConstraints,
    max_vertices: int = DEFAULT_MAX_VERTICES,
    dist: Optional[DistanceTable] = None,
) -> Optional[Permutation]:
    found = search_placements(t, c, limit=1, max_vertices=max_vertices, dist=dist)
    return found[0] if found else None


def max_label_packing(
    t: Tree, k: int, max_vertices: int = DEFAULT_MAX_VERTICES
) -> Tuple[int, Optional[Permutation]]:
    """Largest cycle count over placements into T^k, with a witness.

    Returns (0, None) when T has no placement at all (stars).
    """
    _check_size(t, max_vertices)
    search = _Search(t, SearchConstraints(power=k), all_pairs_distance(t))
    best = [0, None]

    def walk(v: int, closed: int) -> None:
        if v == t.n:
            if closed > best[0]:
                best[0] = closed
                best[1] = Permutation(tuple(search.image))
            return
        # every cycle still to close contains an unassigned vertex
        if closed + (t.n - v) <= best[0]:
            return
        for w in search.candidates(v, fixed_first=True):
            search.assign(v, w)
            walk(v + 1, closed + (1 if search.chain(v)[0] else 0))
            search.unassign(v)

    walk(0, 0)
    return best[0], best[1]


def max_label_count(t: Tree, k: int, max_vertices: int = DEFAULT_MAX_VERTICES) -> int:
    """Exact labeled packing number of t into T^k for small trees."""
    return max_label_packing(t, k, max_vertices)[0]
