"""Labeled packings of trees into their 4th, 5th and 6th powers.

A labeling is preserved by a placement exactly when it is constant on the
placement's cycles, so every construction here labels whole cycles.
"""

import json
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

from treepacking.config import ConstructionOptions
from treepacking.errors import ConstructionBug, NoNonBadVertex, StarInput, TooShort
from treepacking.graph_core import (
    DEFAULT_MAX_LEAVES_EXHAUSTIVE,
    Tree,
    compute_m_T,
    induced_subtree,
    is_bad_vertex,
    is_star,
    mis_size,
)
from treepacking.path_packing import PathView, path4_placement
from treepacking.permutation import Permutation, cycle_decomposition, format_cycles
from treepacking.tree_packing import ConstructionResult, build_placement
from treepacking.verifier import CertificateKind, verify_labeled_packing

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LabeledPacking:
    """A placement into T^k with a labeling it preserves."""

    sigma: Permutation
    labels: Tuple[int, ...]
    label_count: int
    power: int
    trace: Tuple[str, ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "power": self.power,
            "label_count": self.label_count,
            "sigma": format_cycles(self.sigma),
            "labels": list(self.labels),
        }

    def to_json(self) -> str:
        """Labels are listed by 1-based vertex id."""
        return json.dumps(self.to_dict(), sort_keys=True)


def _certified(
    t: Tree, sigma: Permutation, labels: Tuple[int, ...], k: int, trace: Tuple[str, ...] = ()
) -> LabeledPacking:
    report = verify_labeled_packing(t, sigma, labels, k)
    if not report.overall:
        logger.error("labeled packing into T^%d failed its self-check: %s", k, report.failed())
        raise ConstructionBug(f"labeled packing into T^{k} failed its self-check", report, trace)
    return LabeledPacking(sigma, labels, report.label_count, k, trace)


def labeled_pack_path4(p: PathView) -> LabeledPacking:
    """Label each cycle of the path's 4th-power placement with its own value."""
    if p.n < 4:
        raise TooShort(f"P{p.n} is too short; paths need at least 4 vertices")
    sigma = path4_placement(p)
    labels = [0] * p.n
    for i, cycle in enumerate(cycle_decomposition(sigma).cycles, start=1):
        for v in cycle:
            labels[v] = i
    return _certified(p.tree, sigma, tuple(labels), 4)


def _core_placement(
    t: Tree,
    kind: CertificateKind,
    max_leaves: int,
    options: Optional[ConstructionOptions],
) -> Tuple[Tuple[int, ...], Tuple[int, ...], ConstructionResult]:
    """Remove an m_T witness and place the remaining core.

    Fathers of removed leaves are capped at k - 1 so the edges to the fixed
    leaves land inside T^k. Returns the witness, the core's vertex ids and
    the core construction.
    """
    if is_star(t):
        raise StarInput("labeled packings are built for non-star trees only")
    _, witness = compute_m_T(t, max_leaves)
    removed = set(witness)
    core, ids = induced_subtree(t, (v for v in range(t.n) if v not in removed))
    local = {v: i for i, v in enumerate(ids)}
    caps = {local[t.neighbors(leaf)[0]]: kind.power - 1 for leaf in witness}

    if kind is CertificateKind.GOOD_TREE:
        candidates = [v for v in range(core.n) if not is_bad_vertex(core, v)]
        if not candidates:
            raise NoNonBadVertex("the core has no vertex a good placement can start from")
        x = candidates[0]
    else:
        x = 0
    result = build_placement(core, kind, x, caps=caps, options=options)
    return witness, ids, result


def _lift(t: Tree, ids: Tuple[int, ...], core_sigma: Permutation) -> Permutation:
    image = list(range(t.n))
    for i, v in enumerate(ids):
        image[v] = ids[core_sigma(i)]
    return Permutation(tuple(image))


def labeled_pack_t6(
    t: Tree,
    max_leaves: int = DEFAULT_MAX_LEAVES_EXHAUSTIVE,
    options: Optional[ConstructionOptions] = None,
) -> LabeledPacking:
    """Packing into T^6: removed leaves labeled 1..m_T, then one label per core cycle."""
    witness, ids, result = _core_placement(t, CertificateKind.WELL_TREE, max_leaves, options)
    labels = [0] * t.n
    for i, leaf in enumerate(witness, start=1):
        labels[leaf] = i
    for i, cycle in enumerate(cycle_decomposition(result.sigma).cycles, start=len(witness) + 1):
        for v in cycle:
            labels[ids[v]] = i
    return _certified(t, _lift(t, ids, result.sigma), tuple(labels), 6, result.trace)


def labeled_pack_t5(
    t: Tree,
    max_leaves: int = DEFAULT_MAX_LEAVES_EXHAUSTIVE,
    options: Optional[ConstructionOptions] = None,
) -> LabeledPacking:
    """Packing into T^5: removed leaves labeled 1..m_T, the whole core shares m_T + 1."""
    witness, ids, result = _core_placement(t, CertificateKind.GOOD_TREE, max_leaves, options)
    labels = [len(witness) + 1] * t.n
    for i, leaf in enumerate(witness, start=1):
        labels[leaf] = i
    return _certified(t, _lift(t, ids, result.sigma), tuple(labels), 5, result.trace)


def lambda2_upper_bound(t: Tree) -> int:
    """|I| + floor((n - |I|) / 2) with I a maximum independent set."""
    independent = mis_size(t)
    return independent + (t.n - independent) // 2


def label_bound_path4(n: int) -> int:
    if n < 4:
        raise TooShort(f"P{n} is too short; paths need at least 4 vertices")
    return math.ceil(n / 4)


def label_bound_t6(t: Tree, max_leaves: int = DEFAULT_MAX_LEAVES_EXHAUSTIVE) -> int:
    m, _ = compute_m_T(t, max_leaves)
    return m + math.ceil((t.n - m) / 5)


def label_bound_t5(t: Tree, max_leaves: int = DEFAULT_MAX_LEAVES_EXHAUSTIVE) -> int:
    m, _ = compute_m_T(t, max_leaves)
    return m + 1
