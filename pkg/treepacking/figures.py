"""Registry of small tree families with hand-built placements."""

import functools
import logging
import os
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import hjson

from treepacking.errors import ConstructionBug, ParseError, ReconstructionAmbiguous
from treepacking.graph_core import Tree, rooted_isomorphism
from treepacking.permutation import Permutation, from_cycles
from treepacking.verifier import CertificateKind, verify_certificate

logger = logging.getLogger(__name__)

FIGURES_FILE = os.path.join(os.path.dirname(__file__), "data", "figures.hjson")
SUPPORTED_FORMAT_VERSION = 1


@dataclass(frozen=True)
class LeafGroup:
    """A run of leaves prefix1..prefixK attached to one role."""

    prefix: str
    attach: str
    minimum: int


@dataclass(frozen=True)
class FigurePlacement:
    parity: str
    cycles: Tuple[Tuple[str, ...], ...]
    pairs_from: Optional[int]
    kind: CertificateKind
    anchors: Tuple[str, ...]

    def applies_to(self, size: Optional[int]) -> bool:
        if self.parity == "any" or size is None:
            return True
        return (size % 2 == 0) == (self.parity == "even")


@dataclass(frozen=True)
class FigureFamily:
    tag: str
    roles: Tuple[str, ...]
    edges: Tuple[Tuple[str, str], ...]
    group: Optional[LeafGroup]
    placements: Tuple[FigurePlacement, ...]
    figure: Optional[str] = None

    def size_for(self, n: int) -> Optional[int]:
        """Group size K giving an n-vertex member, or None when no member has n vertices."""
        if self.group is None:
            return 0 if n == len(self.roles) else None
        k = n - len(self.roles)
        return k if k >= self.group.minimum else None


@dataclass(frozen=True)
class FigureInstance:
    """A family member on vertices 0..n-1 with role names resolved."""

    family: FigureFamily
    size: Optional[int]
    tree: Tree
    ids: Dict[str, int]

    def sigma(self, placement: FigurePlacement) -> Permutation:
        cycles = [[self.ids[name] for name in cycle] for cycle in placement.cycles]
        if placement.pairs_from is not None and self.family.group is not None:
            prefix = self.family.group.prefix
            for s in range(placement.pairs_from, self.size, 2):
                cycles.append([self.ids[f"{prefix}{s}"], self.ids[f"{prefix}{s + 1}"]])
        return from_cycles(self.tree.n, cycles)


@dataclass(frozen=True)
class FigureMatch:
    """A family member found in a tree, with its roles mapped to the tree's ids."""

    tag: str
    size: Optional[int]
    roles: Dict[str, int]
    kind: CertificateKind
    anchor_role: str
    figure: Optional[str] = None


def _parse_family(raw: dict) -> FigureFamily:
    try:
        group = None
        if raw.get("group"):
            g = raw["group"]
            group = LeafGroup(str(g["prefix"]), str(g["attach"]), int(g["min"]))
        placements = tuple(
            FigurePlacement(
                parity=str(p.get("parity", "any")),
                cycles=tuple(tuple(str(v) for v in c) for c in p["cycles"]),
                pairs_from=int(p["pairs_from"]) if "pairs_from" in p else None,
                kind=CertificateKind.parse(str(p["kind"])),
                anchors=tuple(str(a) for a in p["anchors"]),
            )
            for p in raw["placements"]
        )
        return FigureFamily(
            tag=str(raw["tag"]),
            roles=tuple(str(r) for r in raw["roles"]),
            edges=tuple((str(a), str(b)) for a, b in raw["edges"]),
            group=group,
            placements=placements,
            figure=str(raw["figure"]) if raw.get("figure") is not None else None,
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"malformed figure family {raw.get('tag', '?')}: {e}")


class FigureRegistry:
    """Families loaded from the figures data file, each placement re-verified on load."""

    def __init__(self, figures_file: str = FIGURES_FILE, strict: bool = False):
        """Load and verify the families.

        Args:
            figures_file: Path to the HJSON data file
            strict: Raise ReconstructionAmbiguous instead of disabling a failing placement
        """
        self.figures_file = figures_file
        self.strict = strict
        self.families: List[FigureFamily] = []
        self.disabled: List[Tuple[str, str, str]] = []
        self._instances: Dict[Tuple[str, Optional[int]], FigureInstance] = {}
        self.load()

    def load(self) -> None:
        with open(self.figures_file, "r", encoding="utf-8") as f:
            document = hjson.load(f)
        version = document.get("_format_version", 1)
        if version > SUPPORTED_FORMAT_VERSION:
            logger.warning(
                "Figure file format v%s is newer than supported v%s",
                version,
                SUPPORTED_FORMAT_VERSION,
            )
        families = [_parse_family(raw) for raw in document.get("families", [])]
        self.families = [self._self_check(family) for family in families]
        logger.debug("Loaded %d figure families from '%s'", len(self.families), self.figures_file)

    def _sample_sizes(self, family: FigureFamily, placement: FigurePlacement) -> List[Optional[int]]:
        if family.group is None:
            return [None]
        k = family.group.minimum
        if not placement.applies_to(k):
            k += 1
        return [k, k + 2]

    def _self_check(self, family: FigureFamily) -> FigureFamily:
        kept = []
        for placement in family.placements:
            anchors = []
            for anchor in placement.anchors:
                ok = True
                for size in self._sample_sizes(family, placement):
                    instance = self.instance(family, size)
                    report = verify_certificate(
                        instance.tree,
                        instance.sigma(placement),
                        placement.kind,
                        instance.ids[anchor],
                    )
                    if not report.overall:
                        ok = False
                        message = (
                            f"{family.tag}: {placement.kind.value} at {anchor} fails "
                            f"{', '.join(report.failed())}"
                        )
                        if self.strict:
                            raise ReconstructionAmbiguous(message)
                        logger.warning("Disabling figure placement %s", message)
                        self.disabled.append((family.tag, placement.kind.value, anchor))
                        break
                if ok:
                    anchors.append(anchor)
            if anchors:
                kept.append(
                    FigurePlacement(
                        placement.parity,
                        placement.cycles,
                        placement.pairs_from,
                        placement.kind,
                        tuple(anchors),
                    )
                )
        return FigureFamily(
            family.tag, family.roles, family.edges, family.group, tuple(kept), family.figure
        )

    def instance(self, family: FigureFamily, size: Optional[int]) -> FigureInstance:
        key = (family.tag, size)
        if key not in self._instances:
            names = list(family.roles)
            edges = list(family.edges)
            if family.group is not None:
                for i in range(1, size + 1):
                    member = f"{family.group.prefix}{i}"
                    names.append(member)
                    edges.append((family.group.attach, member))
            ids = {name: i for i, name in enumerate(names)}
            tree = Tree.from_edges(len(names), ((ids[a], ids[b]) for a, b in edges))
            self._instances[key] = FigureInstance(family, size, tree, ids)
        return self._instances[key]

    def covers_size(self, n: int) -> bool:
        return any(family.size_for(n) is not None for family in self.families)

    def match(
        self, t: Tree, x: int, kind: Optional[CertificateKind] = None
    ) -> Optional[Tuple[FigureMatch, Permutation]]:
        """First family placement certifying (t, x), instantiated on t's ids."""
        for family in self.families:
            size = family.size_for(t.n)
            if size is None:
                continue
            instance = self.instance(family, size or None)
            for placement in family.placements:
                if kind is not None and placement.kind is not kind:
                    continue
                if not placement.applies_to(size or None):
                    continue
                for anchor in placement.anchors:
                    if anchor not in instance.ids:
                        continue
                    iso = rooted_isomorphism(instance.tree, instance.ids[anchor], t, x)
                    if iso is None:
                        continue
                    local = instance.sigma(placement)
                    image = [0] * t.n
                    for v in range(t.n):
                        image[iso[v]] = iso[local(v)]
                    sigma = Permutation(tuple(image))
                    report = verify_certificate(t, sigma, placement.kind, x)
                    if not report.overall:
                        raise ConstructionBug(
                            f"figure {family.tag} matched but its placement fails", report
                        )
                    roles = {name: iso[i] for name, i in instance.ids.items()}
                    logger.debug("Matched figure %s at anchor %s", family.tag, anchor)
                    return (
                        FigureMatch(family.tag, size or None, roles, placement.kind, anchor, family.figure),
                        sigma,
                    )
        return None


@functools.lru_cache(maxsize=1)
def default_registry() -> FigureRegistry:
    return FigureRegistry()


def match_figure(
    t: Tree, x: int, kind: Optional[CertificateKind] = None
) -> Optional[Tuple[FigureMatch, Permutation]]:
    """Match (t, x) against the bundled figure families."""
    return default_registry().match(t, x, kind)
