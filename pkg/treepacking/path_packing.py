"""Placements of paths into their 4th, 5th and 6th powers.

Paths on 4 to 7 vertices come from fixed tables indexed by position along
the path (0 is the first end). A table lists the anchor positions it serves;
the mirror positions are served by reading the same table on the reversed
path. Longer paths are cut into a block of at most 7 vertices and a
remainder, placed independently and joined.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

from treepacking.errors import BadVertex, ConstructionBug, IdOutOfRange, TooShort
from treepacking.graph_core import Tree, path_order
from treepacking.permutation import Permutation, from_mapping
from treepacking.verifier import CertificateKind, verify_certificate

logger = logging.getLogger(__name__)

Table = Dict[int, Dict[Tuple[int, ...], List[List[int]]]]

PATH4_TABLE: Dict[int, List[List[int]]] = {
    4: [[0, 1, 3, 2]],
    5: [[0, 1, 4, 3]],
    6: [[0, 1, 4, 3]],
    7: [[0, 1, 4], [2, 6, 5]],
}

# Every vertex of these placements moves at most 3.
WELL_TABLE: Table = {
    4: {(0, 1, 2, 3): [[0, 1, 3, 2]]},
    5: {(0, 1, 2, 3, 4): [[0, 1, 3, 4, 2]]},
    6: {
        (0, 1): [[0, 1, 3], [2, 5, 4]],
        (2,): [[2, 0], [4, 1], [5, 3]],
    },
    7: {(0, 2, 3, 5): [[0, 1, 4, 2], [3, 5, 6]]},
}

GOOD_TABLE: Table = {
    4: {
        (0,): [[0, 1, 3, 2]],
        (1,): [[0, 2, 3, 1]],
    },
    5: {(0, 3): [[0, 1, 3, 4, 2]]},
    6: {
        (0,): [[0, 1, 3, 2, 5, 4]],
        (1, 2): [[0, 2, 3, 5, 4, 1]],
    },
    7: {
        (0, 3): [[0, 1, 3, 4, 6, 5, 2]],
        (1, 2): [[0, 2, 3, 5, 6, 4, 1]],
    },
}


@dataclass(frozen=True)
class PathView:
    """A path tree together with its vertices listed end to end."""

    tree: Tree
    order: Tuple[int, ...]

    @classmethod
    def from_tree(cls, t: Tree) -> "PathView":
        """View t in its canonical direction (first end id <= last end id)."""
        return cls(t, tuple(path_order(t)))

    @property
    def n(self) -> int:
        return len(self.order)

    def reversed(self) -> "PathView":
        return PathView(self.tree, tuple(reversed(self.order)))

    def position(self, v: int) -> int:
        try:
            return self.order.index(v)
        except ValueError:
            raise IdOutOfRange(f"vertex {v + 1} is not on the path")


def _cycles_to_mapping(order: Sequence[int], cycles: List[List[int]]) -> Dict[int, int]:
    mapping = {v: v for v in order}
    for cycle in cycles:
        for i, pos in enumerate(cycle):
            mapping[order[pos]] = order[cycle[(i + 1) % len(cycle)]]
    return mapping


def _table_mapping(table: Table, order: Sequence[int], pos: int) -> Dict[int, int]:
    n = len(order)
    for positions, cycles in table[n].items():
        if pos in positions:
            return _cycles_to_mapping(order, cycles)
    for positions, cycles in table[n].items():
        if n - 1 - pos in positions:
            return _cycles_to_mapping(list(reversed(order)), cycles)
    raise BadVertex(f"no table entry for position {pos + 1} of P{n}")


def path4_mapping(order: Sequence[int]) -> Dict[int, int]:
    """Placement of the path into its 4th power, as a mapping on its vertices."""
    n = len(order)
    if n < 4:
        raise TooShort(f"P{n} is too short; paths need at least 4 vertices")
    if n <= 7:
        return _cycles_to_mapping(order, PATH4_TABLE[n])
    mapping = path4_mapping(order[: n - 4])
    mapping.update(_cycles_to_mapping(order[n - 4 :], PATH4_TABLE[4]))
    return mapping


def well_path_mapping(order: Sequence[int], x: int) -> Dict[int, int]:
    """(P, x)-well path placement as a mapping on the path's vertices."""
    n = len(order)
    if n < 4:
        raise TooShort(f"P{n} is too short; paths need at least 4 vertices")
    pos = list(order).index(x)
    if n <= 7:
        return _table_mapping(WELL_TABLE, order, pos)
    if pos <= n - 1 - pos:
        mapping = well_path_mapping(order[: n - 4], x)
        mapping.update(well_path_mapping(order[n - 4 :], order[n - 4]))
    else:
        mapping = well_path_mapping(order[4:], x)
        mapping.update(well_path_mapping(order[:4], order[3]))
    return mapping


def _good_split(n: int, pos: int) -> Tuple[bool, int]:
    """Pick (block at the high end?, block size) for a good path of n >= 8 vertices."""
    high = pos <= n - 1 - pos
    for size in (4, 6, 7, 5):
        rest = n - size
        if rest < 4:
            continue
        rest_pos = pos if high else pos - size
        inside = pos < rest if high else pos >= size
        if inside and not (rest == 5 and rest_pos == 2):
            return high, size
    raise BadVertex(f"no admissible split of P{n} around position {pos + 1}")


def good_path_mapping(order: Sequence[int], x: int) -> Dict[int, int]:
    """(P, x)-good path placement as a mapping on the path's vertices."""
    n = len(order)
    if n < 4:
        raise TooShort(f"P{n} is too short; paths need at least 4 vertices")
    pos = list(order).index(x)
    if n == 5 and pos == 2:
        raise BadVertex(f"vertex {x + 1} is the middle of a P5")
    if n <= 7:
        return _table_mapping(GOOD_TABLE, order, pos)
    high, size = _good_split(n, pos)
    if high:
        mapping = good_path_mapping(order[: n - size], x)
        mapping.update(good_path_mapping(order[n - size :], order[n - size]))
    else:
        mapping = good_path_mapping(order[size:], x)
        mapping.update(good_path_mapping(order[:size], order[size - 1]))
    return mapping


def _certified(
    p: PathView, mapping: Dict[int, int], kind: CertificateKind, x=None
) -> Permutation:
    sigma = from_mapping(p.tree.n, mapping)
    report = verify_certificate(p.tree, sigma, kind, x)
    if not report.overall:
        logger.error("%s self-check failed on P%d: %s", kind.value, p.n, report.failed())
        raise ConstructionBug(f"{kind.value} construction failed its self-check", report)
    return sigma


def path4_placement(p: PathView) -> Permutation:
    """Pack P_n into P_n^4 with the first end moving 1 and the last at most 1."""
    return _certified(p, path4_mapping(p.order), CertificateKind.PATH4, p.order[0])


def well_path_placement(p: PathView, x: int) -> Permutation:
    return _certified(p, well_path_mapping(p.order, x), CertificateKind.WELL_PATH, x)


def good_path_placement(p: PathView, x: int) -> Permutation:
    return _certified(p, good_path_mapping(p.order, x), CertificateKind.GOOD_PATH, x)
