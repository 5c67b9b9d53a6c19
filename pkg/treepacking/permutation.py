"""Permutations of vertex ids: cycles, composition and text notation."""

import re
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

from treepacking.errors import DuplicateId, IdOutOfRange, ParseError, SizeMismatch

_CYCLE_RE = re.compile(r"\(([^()]*)\)")


@dataclass(frozen=True)
class CycleDecomposition:
    """Orbits of a permutation, fixed points included.

    Each cycle starts at its smallest id and cycles are sorted by that id.
    """

    cycles: Tuple[Tuple[int, ...], ...]

    @property
    def count(self) -> int:
        return len(self.cycles)

    @property
    def lengths(self) -> List[int]:
        return [len(c) for c in self.cycles]

    @property
    def max_length(self) -> int:
        return max(self.lengths, default=0)


@dataclass(frozen=True)
class Permutation:
    """A bijection on 0..n-1 stored as its image array."""

    image: Tuple[int, ...]

    def __post_init__(self):
        if sorted(self.image) != list(range(len(self.image))):
            raise DuplicateId("image is not a bijection on 0..n-1")

    @property
    def n(self) -> int:
        return len(self.image)

    def __call__(self, v: int) -> int:
        return self.image[v]

    def __str__(self) -> str:
        return format_cycles(self)


def identity(n: int) -> Permutation:
    return Permutation(tuple(range(n)))


def from_cycles(n: int, cycles: Iterable[Sequence[int]]) -> Permutation:
    """Realize each cycle (a1 a2 ... ak) as a1->a2, ..., ak->a1; unlisted ids stay fixed."""
    image = list(range(n))
    seen = set()
    for cycle in cycles:
        for v in cycle:
            if not 0 <= v < n:
                raise IdOutOfRange(f"vertex id {v + 1} outside 1..{n}")
            if v in seen:
                raise DuplicateId(f"vertex id {v + 1} appears twice")
            seen.add(v)
        for i, v in enumerate(cycle):
            image[v] = cycle[(i + 1) % len(cycle)]
    return Permutation(tuple(image))


def from_mapping(n: int, mapping: Mapping[int, int]) -> Permutation:
    """A permutation moving the keys of mapping as given and fixing the rest."""
    image = list(range(n))
    for v, w in mapping.items():
        if not (0 <= v < n and 0 <= w < n):
            raise IdOutOfRange(f"mapping {v + 1}->{w + 1} outside 1..{n}")
        image[v] = w
    return Permutation(tuple(image))


def compose(outer: Permutation, inner: Permutation) -> Permutation:
    """outer after inner: result(v) = outer(inner(v))."""
    if outer.n != inner.n:
        raise SizeMismatch(f"cannot compose permutations of sizes {outer.n} and {inner.n}")
    return Permutation(tuple(outer.image[w] for w in inner.image))


def compose_all(n: int, factors: Sequence[Permutation]) -> Permutation:
    """Product of factors, the rightmost applied first."""
    result = identity(n)
    for factor in factors:
        result = compose(result, factor)
    return result


def inverse(p: Permutation) -> Permutation:
    image = [0] * p.n
    for v, w in enumerate(p.image):
        image[w] = v
    return Permutation(tuple(image))


def cycle_decomposition(p: Permutation) -> CycleDecomposition:
    seen = [False] * p.n
    cycles = []
    for start in range(p.n):
        if seen[start]:
            continue
        cycle = []
        v = start
        while not seen[v]:
            seen[v] = True
            cycle.append(v)
            v = p.image[v]
        cycles.append(tuple(cycle))
    return CycleDecomposition(tuple(cycles))


def is_fixed_point_free(p: Permutation) -> bool:
    return all(v != w for v, w in enumerate(p.image))


def cycle_lengths(p: Permutation) -> List[int]:
    return cycle_decomposition(p).lengths


def conjugate(p: Permutation, relabel: Sequence[int]) -> Permutation:
    """The permutation r p r^-1 where r sends v to relabel[v]."""
    if len(relabel) != p.n:
        raise SizeMismatch(f"relabeling of size {len(relabel)} for permutation of size {p.n}")
    image = [0] * p.n
    for v in range(p.n):
        image[relabel[v]] = relabel[p.image[v]]
    return Permutation(tuple(image))


def restrict(p: Permutation, vertices: Iterable[int]) -> Dict[int, int]:
    """p on the given vertices, as a mapping."""
    return {v: p.image[v] for v in vertices}


def union(n: int, pieces: Iterable[Mapping[int, int]]) -> Permutation:
    """Join mappings on disjoint vertex sets into one permutation of 0..n-1."""
    merged: Dict[int, int] = {}
    for piece in pieces:
        for v, w in piece.items():
            if v in merged:
                raise DuplicateId(f"vertex id {v + 1} is covered by two pieces")
            merged[v] = w
    return from_mapping(n, merged)


def parse_cycles(text: str, n: int) -> Permutation:
    """Parse 1-based cycle notation such as ``(1 2 4 3)(5)``."""
    stripped = _CYCLE_RE.sub("", text).strip()
    if stripped:
        raise ParseError(f"unexpected text outside cycles: '{stripped}'")
    cycles = []
    for body in _CYCLE_RE.findall(text):
        parts = body.replace(",", " ").split()
        try:
            ids = [int(part) - 1 for part in parts]
        except ValueError:
            raise ParseError(f"expected integer vertex ids in cycle '({body})'")
        if ids:
            cycles.append(ids)
    return from_cycles(n, cycles)


def format_cycles(p: Permutation) -> str:
    """1-based cycle notation with every fixed point printed."""
    return "".join(
        "(" + " ".join(str(v + 1) for v in cycle) + ")"
        for cycle in cycle_decomposition(p).cycles
    )
