"""Clause-by-clause checking of placement certificates.

Semantic failures are reported, never raised. Exceptions are reserved for
inputs that cannot be checked at all (size mismatches, a path kind applied
to a non-path, a missing special vertex).
"""

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Mapping, Optional, Sequence

from treepacking.errors import IdOutOfRange, KindMismatch, ParseError, SizeMismatch
from treepacking.graph_core import (
    DistanceTable,
    Tree,
    all_pairs_distance,
    is_bad_vertex,
    is_path,
    is_star,
    path_order,
)
from treepacking.permutation import Permutation, cycle_decomposition

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class KindProfile:
    """Distance caps and global constraints of one certificate kind."""

    power: int
    x_cap: int
    x_exact: bool
    neighbor_cap: Optional[int]
    leaf_cap: int
    cycle_bound: Optional[int]
    fixed_point_free: bool


class CertificateKind(Enum):
    PATH4 = "Path4"
    WELL_PATH = "WellPath"
    GOOD_PATH = "GoodPath"
    WELL_TREE = "WellTree"
    GOOD_TREE = "GoodTree"

    @property
    def profile(self) -> KindProfile:
        return _PROFILES[self]

    @property
    def power(self) -> int:
        return _PROFILES[self].power

    @property
    def is_path_kind(self) -> bool:
        return self in (CertificateKind.PATH4, CertificateKind.WELL_PATH, CertificateKind.GOOD_PATH)

    @property
    def is_good(self) -> bool:
        return self in (CertificateKind.GOOD_PATH, CertificateKind.GOOD_TREE)

    @property
    def needs_vertex(self) -> bool:
        return self is not CertificateKind.PATH4

    @classmethod
    def parse(cls, name: str) -> "CertificateKind":
        for kind in cls:
            if kind.value.lower() == name.lower() or kind.name.lower() == name.lower():
                return kind
        raise KindMismatch(f"unknown certificate kind '{name}'")


# Path4 reads x_cap as the cap at the first end u and leaf_cap as the cap at the far end v.
_PROFILES = {
    CertificateKind.PATH4: KindProfile(4, 1, True, None, 1, 4, False),
    CertificateKind.WELL_PATH: KindProfile(6, 2, False, 3, 3, 5, True),
    CertificateKind.GOOD_PATH: KindProfile(5, 1, True, 2, 2, None, True),
    CertificateKind.WELL_TREE: KindProfile(6, 2, False, 3, 4, 5, True),
    CertificateKind.GOOD_TREE: KindProfile(5, 1, True, 2, 4, None, True),
}


@dataclass(frozen=True)
class ConditionResult:
    ok: bool
    witness: Optional[str] = None
    vacuous: bool = False


@dataclass
class VerificationReport:
    """Named condition results; overall is their conjunction."""

    conditions: Dict[str, ConditionResult] = field(default_factory=dict)
    label_count: Optional[int] = None
    kind: Optional[str] = None

    @property
    def overall(self) -> bool:
        return all(c.ok for c in self.conditions.values())

    def failed(self) -> List[str]:
        return [name for name, c in self.conditions.items() if not c.ok]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "overall": self.overall,
            "conditions": {
                name: {"ok": c.ok, "witness": c.witness} for name, c in self.conditions.items()
            },
            "label_count": self.label_count,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def render_text(self) -> str:
        lines = []
        if self.kind:
            lines.append(f"kind: {self.kind}")
        for name, c in self.conditions.items():
            status = "ok" if c.ok else "FAIL"
            if c.vacuous:
                status = "ok (vacuous)"
            line = f"  {name}: {status}"
            if c.witness:
                line += f" - {c.witness}"
            lines.append(line)
        if self.label_count is not None:
            lines.append(f"  label_count: {self.label_count}")
        lines.append(f"overall: {'ok' if self.overall else 'FAIL'}")
        return "\n".join(lines)


def _check_size(t: Tree, sigma: Permutation) -> None:
    if t.n != sigma.n:
        raise SizeMismatch(f"tree has {t.n} vertices, permutation has {sigma.n}")


def _vacuous() -> ConditionResult:
    return ConditionResult(True, None, True)


def check_two_placement(t: Tree, sigma: Permutation) -> ConditionResult:
    for u, v in t.edges():
        a, b = sigma(u), sigma(v)
        if t.has_edge(a, b):
            return ConditionResult(
                False, f"edge {u + 1}-{v + 1} maps onto edge {a + 1}-{b + 1}"
            )
    return ConditionResult(True)


def check_power_containment(
    t: Tree, sigma: Permutation, k: int, dist: DistanceTable
) -> ConditionResult:
    for u, v in t.edges():
        a, b = sigma(u), sigma(v)
        d = dist.get(a, b)
        if not 1 <= d <= k:
            return ConditionResult(
                False,
                f"edge {u + 1}-{v + 1} maps to {a + 1}-{b + 1} at distance {d} > {k}",
            )
    return ConditionResult(True)


def check_fixed_point_free(sigma: Permutation) -> ConditionResult:
    for v in range(sigma.n):
        if sigma(v) == v:
            return ConditionResult(False, f"vertex {v + 1} is fixed")
    return ConditionResult(True)


def check_cycle_bound(sigma: Permutation, bound: int) -> ConditionResult:
    for cycle in cycle_decomposition(sigma).cycles:
        if len(cycle) > bound:
            return ConditionResult(
                False, f"cycle through {cycle[0] + 1} has length {len(cycle)} > {bound}"
            )
    return ConditionResult(True)


def verify_caps(
    t: Tree,
    sigma: Permutation,
    caps: Mapping[int, int],
    dist: Optional[DistanceTable] = None,
    exact: Sequence[int] = (),
) -> ConditionResult:
    """Check dist(v, sigma(v)) <= caps[v] for every capped vertex.

    Vertices listed in ``exact`` must move by exactly their cap.
    """
    _check_size(t, sigma)
    dist = dist or all_pairs_distance(t)
    for v in sorted(caps):
        d = dist.get(v, sigma(v))
        if d > caps[v] or (v in exact and d != caps[v]):
            relation = "=" if v in exact else "<="
            return ConditionResult(
                False, f"vertex {v + 1} moves to {sigma(v) + 1}, distance {d}, needs {relation} {caps[v]}"
            )
    return ConditionResult(True)


def verify_two_placement(t: Tree, sigma: Permutation) -> VerificationReport:
    _check_size(t, sigma)
    return VerificationReport({"two_placement": check_two_placement(t, sigma)})


def verify_power_containment(
    t: Tree, sigma: Permutation, k: int, dist: Optional[DistanceTable] = None
) -> VerificationReport:
    _check_size(t, sigma)
    dist = dist or all_pairs_distance(t)
    return VerificationReport(
        {"power_containment": check_power_containment(t, sigma, k, dist)}
    )


def verify_placement(
    t: Tree, sigma: Permutation, k: int, dist: Optional[DistanceTable] = None
) -> VerificationReport:
    """Two-placement plus containment in T^k, with no vertex clauses."""
    _check_size(t, sigma)
    dist = dist or all_pairs_distance(t)
    return VerificationReport(
        {
            "two_placement": check_two_placement(t, sigma),
            "power_containment": check_power_containment(t, sigma, k, dist),
        },
        kind=f"T^{k}",
    )


def _cap_clause(
    vertices: Sequence[int],
    cap: int,
    exact: bool,
    sigma: Permutation,
    dist: DistanceTable,
    label: str,
) -> ConditionResult:
    for v in vertices:
        d = dist.get(v, sigma(v))
        if d > cap or (exact and d != cap):
            relation = "=" if exact else "<="
            return ConditionResult(
                False, f"{label} {v + 1} moves to distance {d}, needs {relation} {cap}"
            )
    return ConditionResult(True)


def verify_certificate(
    t: Tree,
    sigma: Permutation,
    kind: CertificateKind,
    x: Optional[int] = None,
    dist: Optional[DistanceTable] = None,
) -> VerificationReport:
    """Check every clause of a certificate kind.

    Path4 reads x as its end u (default: the end with the smaller id) and v
    as the other end; the other kinds need the special vertex x.
    """
    _check_size(t, sigma)
    profile = kind.profile
    if kind.is_path_kind and not is_path(t):
        raise KindMismatch(f"{kind.value} needs a path")
    if kind.needs_vertex:
        if x is None:
            raise KindMismatch(f"{kind.value} needs a special vertex")
        if not 0 <= x < t.n:
            raise IdOutOfRange(f"vertex id {x + 1} outside 1..{t.n}")
    dist = dist or all_pairs_distance(t)

    conditions: Dict[str, ConditionResult] = {}

    if is_star(t):
        conditions["precondition"] = ConditionResult(False, "tree is a star")
    elif kind.is_good and is_bad_vertex(t, x):
        conditions["precondition"] = ConditionResult(False, f"vertex {x + 1} is a bad vertex")
    else:
        conditions["precondition"] = ConditionResult(True)

    conditions["fixed_point_free"] = (
        check_fixed_point_free(sigma) if profile.fixed_point_free else _vacuous()
    )
    conditions["two_placement"] = check_two_placement(t, sigma)
    conditions["power_containment"] = check_power_containment(t, sigma, profile.power, dist)

    if kind is CertificateKind.PATH4:
        order = path_order(t)
        if x is not None and x != order[0]:
            if x != order[-1]:
                raise KindMismatch(f"Path4 end u must be an end of the path, got {x + 1}")
            order.reverse()
        conditions["dist_x"] = _cap_clause([order[0]], 1, True, sigma, dist, "end")
        conditions["dist_neighbors_of_x"] = _vacuous()
        conditions["dist_leaves"] = _cap_clause([order[-1]], 1, False, sigma, dist, "end")
    else:
        conditions["dist_x"] = _cap_clause(
            [x], profile.x_cap, profile.x_exact, sigma, dist, "vertex"
        )
        conditions["dist_neighbors_of_x"] = _cap_clause(
            t.neighbors(x), profile.neighbor_cap, False, sigma, dist, "neighbor"
        )
        conditions["dist_leaves"] = _cap_clause(
            t.leaves(), profile.leaf_cap, False, sigma, dist, "leaf"
        )

    conditions["cycle_length_bound"] = (
        check_cycle_bound(sigma, profile.cycle_bound)
        if profile.cycle_bound is not None
        else _vacuous()
    )

    report = VerificationReport(conditions, kind=kind.value)
    if not report.overall:
        logger.debug("%s check failed on %s", kind.value, ", ".join(report.failed()))
    return report


def verify_labeled_packing(
    t: Tree,
    sigma: Permutation,
    labels: Sequence[int],
    k: int,
    dist: Optional[DistanceTable] = None,
) -> VerificationReport:
    """Check a labeled packing: placement into T^k whose labels are constant on cycles."""
    _check_size(t, sigma)
    if len(labels) != t.n:
        raise SizeMismatch(f"{len(labels)} labels for {t.n} vertices")
    if any(isinstance(l, bool) or not isinstance(l, int) or l < 1 for l in labels):
        raise ParseError("labels must be positive integers")
    dist = dist or all_pairs_distance(t)

    preserved = ConditionResult(True)
    for v in range(t.n):
        if labels[v] != labels[sigma(v)]:
            preserved = ConditionResult(
                False,
                f"vertex {v + 1} has label {labels[v]} but maps to {sigma(v) + 1} "
                f"with label {labels[sigma(v)]}",
            )
            break

    return VerificationReport(
        {
            "two_placement": check_two_placement(t, sigma),
            "power_containment": check_power_containment(t, sigma, k, dist),
            "labels_preserved": preserved,
        },
        label_count=len(set(labels)),
        kind=f"labeled T^{k}",
    )
