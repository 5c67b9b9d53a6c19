"""Tests for well and good placements of trees."""

import itertools
import unittest
from unittest.mock import patch

from treepacking.config import ConstructionOptions
from treepacking.errors import (
    BadVertex,
    ConstructionBug,
    IdOutOfRange,
    KindMismatch,
    PreconditionViolation,
    StarInput,
    UncoveredCase,
)
from treepacking.graph_core import Tree, enumerate_trees, is_bad_vertex, is_star
from treepacking.permutation import compose, from_cycles, is_fixed_point_free
from treepacking.tree_packing import (
    FTreePartition,
    build_placement,
    extend_over_f_trees,
    f_tree_cycles,
    f_tree_partition,
    glue_placements,
    good_placement,
    well_placement,
)
from treepacking.verifier import CertificateKind, verify_certificate

# x - y - z - w on ids 0..3, placed by x -> y -> w -> z -> x
SPINE = [(0, 1), (1, 2), (2, 3)]
SPINE_CYCLE = [0, 1, 3, 2]

NO_SEARCH = ConstructionOptions(search_fallback=False)


def path(n):
    return Tree.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def star(leaves):
    return Tree.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def spine_with_f_trees(r, p, q):
    """The spine with r leaves, p two-vertex paths and q three-vertex paths hung on x = 0."""
    edges = list(SPINE)
    shapes = []
    n = 4
    for size, count in ((1, r), (2, p), (3, q)):
        for _ in range(count):
            shape = tuple(range(n, n + size))
            edges.append((0, shape[0]))
            edges.extend(zip(shape, shape[1:]))
            shapes.append(shape)
            n += size
    return Tree.from_edges(n, edges), FTreePartition.from_shapes(0, shapes)


def spider16():
    """Centre 0 with three legs of three vertices, two of two and two leaves."""
    edges = []
    for start, size in ((1, 3), (4, 3), (7, 3), (10, 2), (12, 2), (14, 1), (15, 1)):
        leg = list(range(start, start + size))
        edges.append((0, leg[0]))
        edges.extend(zip(leg, leg[1:]))
    return Tree.from_edges(16, edges)


class TestFTreePartition(unittest.TestCase):
    """Test the grouping of neighbor F-trees."""

    def test_partition(self):
        """Test that each neighbor component is classified by shape."""
        t, _ = spine_with_f_trees(2, 1, 1)
        part = f_tree_partition(t, 0)
        self.assertEqual(part.a, (4, 5))
        self.assertEqual(part.bc, ((6, 7),))
        # the spine itself hangs off x as a three-vertex path
        self.assertEqual(part.def_, ((1, 2, 3), (8, 9, 10)))
        self.assertEqual((part.r, part.p, part.q, part.m), (2, 1, 2, 5))

    def test_partition_within(self):
        """Test restriction to a vertex set."""
        t, _ = spine_with_f_trees(2, 1, 1)
        part = f_tree_partition(t, 0, frozenset({0, 1, 4, 5, 6}))
        self.assertEqual(part.a, (1, 4, 5, 6))
        self.assertEqual(part.bc, ())

    def test_partition_out_of_range(self):
        """Test that x must be a vertex."""
        with self.assertRaises(IdOutOfRange):
            f_tree_partition(path(4), 7)

    def test_cycles_cover_peeled_vertices(self):
        """Test that every count combination moves each peeled vertex once."""
        for r, p, q in itertools.product(range(5), repeat=3):
            if r + p + q < 2:
                continue
            with self.subTest(r=r, p=p, q=q):
                _, part = spine_with_f_trees(r, p, q)
                moved = [v for cycle in f_tree_cycles(part) for v in cycle]
                self.assertEqual(sorted(moved), sorted(part.vertices()))
                self.assertTrue(all(len(cycle) >= 2 for cycle in f_tree_cycles(part)))

    def test_cycles_need_two_trees(self):
        """Test that a single F-tree is refused."""
        with self.assertRaises(PreconditionViolation):
            f_tree_cycles(FTreePartition(0, a=(4,)))


class TestExtendOverFTrees(unittest.TestCase):
    """Test extending an inner placement over peeled F-trees."""

    def _extend(self, r, p, q, kind=CertificateKind.WELL_TREE):
        t, part = spine_with_f_trees(r, p, q)
        inner = from_cycles(t.n, [SPINE_CYCLE])
        return t, extend_over_f_trees(t, 0, part, inner, kind)

    def test_two_leaves(self):
        """Test two single-vertex F-trees swapped."""
        t, sigma = self._extend(2, 0, 0)
        self.assertEqual(sigma, from_cycles(6, [SPINE_CYCLE, [4, 5]]))
        self.assertTrue(verify_certificate(t, sigma, CertificateKind.WELL_TREE, 0).overall)

    def test_leaf_and_long_leg(self):
        """Test one leaf with one three-vertex path."""
        t, sigma = self._extend(1, 0, 1)
        self.assertEqual(sigma, from_cycles(8, [SPINE_CYCLE, [4, 5, 7, 6]]))
        self.assertTrue(verify_certificate(t, sigma, CertificateKind.WELL_TREE, 0).overall)

    def test_short_and_long_leg(self):
        """Test one two-vertex path with one three-vertex path."""
        t, sigma = self._extend(0, 1, 1)
        self.assertEqual(sigma, from_cycles(9, [SPINE_CYCLE, [5, 7, 8, 6, 4]]))
        self.assertTrue(verify_certificate(t, sigma, CertificateKind.WELL_TREE, 0).overall)

    def test_every_count_combination(self):
        """Test well and good certificates for all small counts."""
        for r, p, q in itertools.product(range(4), repeat=3):
            if r + p + q < 2:
                continue
            for kind in (CertificateKind.WELL_TREE, CertificateKind.GOOD_TREE):
                with self.subTest(r=r, p=p, q=q, kind=kind.value):
                    t, sigma = self._extend(r, p, q, kind)
                    self.assertTrue(is_fixed_point_free(sigma))
                    self.assertTrue(verify_certificate(t, sigma, kind, 0).overall)

    def test_inner_must_fix_peeled(self):
        """Test that the inner placement may not touch peeled vertices."""
        t, part = spine_with_f_trees(2, 0, 0)
        inner = from_cycles(6, [SPINE_CYCLE, [4, 5]])
        with self.assertRaises(PreconditionViolation):
            extend_over_f_trees(t, 0, part, inner)

    def test_inner_moves_x_too_far(self):
        """Test the bound on how far x may move."""
        t, part = spine_with_f_trees(2, 0, 0)
        inner = from_cycles(6, [[0, 3], [1, 2]])
        with self.assertRaises(PreconditionViolation):
            extend_over_f_trees(t, 0, part, inner, CertificateKind.GOOD_TREE)

    def test_anchored_extension(self):
        """Test that an anchored extension is a certificate at the anchor."""
        t, part = spine_with_f_trees(1, 1, 1)
        inner = from_cycles(t.n, [SPINE_CYCLE])
        for kind in (CertificateKind.WELL_TREE, CertificateKind.GOOD_TREE):
            with self.subTest(kind=kind.value):
                sigma = extend_over_f_trees(t, 0, part, inner, kind, anchor=0)
                self.assertTrue(verify_certificate(t, sigma, kind, 0).overall)

    def test_anchor_may_not_be_peeled(self):
        """Test that the anchor stays in T'."""
        t, part = spine_with_f_trees(2, 0, 0)
        inner = from_cycles(6, [SPINE_CYCLE])
        with self.assertRaises(PreconditionViolation):
            extend_over_f_trees(t, 0, part, inner, anchor=4)

    def test_inner_must_be_a_placement(self):
        """Test that an inner permutation mapping an edge onto an edge is refused."""
        t, part = spine_with_f_trees(2, 0, 0)
        inner = from_cycles(6, [[0, 1], [2, 3]])
        with self.assertRaises(PreconditionViolation):
            extend_over_f_trees(t, 0, part, inner)

    def test_broken_cycles_fail_self_check(self):
        """Test that a result failing verification is reported as a construction bug."""
        t, part = spine_with_f_trees(2, 0, 0)
        inner = from_cycles(6, [SPINE_CYCLE])
        with patch("treepacking.tree_packing.f_tree_cycles", return_value=[]):
            with self.assertRaises(ConstructionBug) as cm:
                extend_over_f_trees(t, 0, part, inner)
        self.assertIn("fixed_point_free", cm.exception.report.failed())
        self.assertEqual(cm.exception.trace, ["F-tree extension"])

    def test_wrong_anchor_and_kind(self):
        """Test mismatched partitions and kinds."""
        t, part = spine_with_f_trees(2, 0, 0)
        inner = from_cycles(6, [SPINE_CYCLE])
        with self.assertRaises(PreconditionViolation):
            extend_over_f_trees(t, 1, part, inner)
        with self.assertRaises(KindMismatch):
            extend_over_f_trees(t, 0, part, inner, CertificateKind.PATH4)


class TestGluePlacements(unittest.TestCase):
    """Test joining placements of subtrees hanging off x."""

    def setUp(self):
        # spine plus two P4 legs 4-5-6-7 and 8-9-10-11 attached to x by 4 and 8
        edges = SPINE + [(0, 4), (4, 5), (5, 6), (6, 7), (0, 8), (8, 9), (9, 10), (10, 11)]
        self.t = Tree.from_edges(12, edges)
        self.inner = {0: 1, 1: 3, 3: 2, 2: 0}
        self.leg_a = {4: 5, 5: 7, 7: 6, 6: 4}
        self.leg_b = {8: 9, 9: 11, 11: 10, 10: 8}

    def test_glue(self):
        """Test that glued pieces form a well placement."""
        sigma = glue_placements(self.t, 0, self.inner, [self.leg_a, self.leg_b])
        self.assertEqual(sigma(4), 5)
        self.assertTrue(verify_certificate(self.t, sigma, CertificateKind.WELL_TREE, 0).overall)

    def test_pieces_must_cover(self):
        """Test that every vertex needs a piece."""
        with self.assertRaises(PreconditionViolation):
            glue_placements(self.t, 0, self.inner, [self.leg_a])

    def test_pieces_must_be_disjoint(self):
        """Test that overlapping pieces are refused."""
        with self.assertRaises(PreconditionViolation):
            glue_placements(self.t, 0, self.inner, [self.leg_a, self.leg_a])

    def test_piece_must_hang_off_x(self):
        """Test that a piece not adjacent to x is refused."""
        with self.assertRaises(PreconditionViolation):
            glue_placements(self.t, 0, self.inner, [{5: 6, 6: 5}])

    def test_inner_must_cover_x(self):
        """Test that x belongs to the inner placement."""
        with self.assertRaises(PreconditionViolation):
            glue_placements(self.t, 0, {1: 2, 2: 1}, [self.leg_a, self.leg_b])


    def test_inner_must_be_a_placement(self):
        """Test that the inner permutation is checked."""
        with self.assertRaises(PreconditionViolation):
            glue_placements(self.t, 0, {0: 1, 1: 0, 2: 3, 3: 2}, [self.leg_a, self.leg_b])

    def test_piece_must_be_a_placement(self):
        """Test that each piece is checked."""
        swapped = {4: 5, 5: 4, 6: 7, 7: 6}
        with self.assertRaises(PreconditionViolation):
            glue_placements(self.t, 0, self.inner, [swapped, self.leg_b])

    def test_path_kind_refused(self):
        """Test that gluing builds tree placements only."""
        with self.assertRaises(KindMismatch):
            glue_placements(self.t, 0, self.inner, [self.leg_a, self.leg_b], CertificateKind.PATH4)

    def test_glue_with_peeled_f_trees(self):
        """Test a leg placement glued next to two peeled leaves."""
        # spine, leaves 4 and 5 on x and the leg 6-7-8-9 attached by 6
        t = Tree.from_edges(10, SPINE + [(0, 4), (0, 5), (0, 6), (6, 7), (7, 8), (8, 9)])
        leaves = FTreePartition.from_shapes(0, [(4,), (5,)])
        leg = {6: 7, 7: 9, 9: 8, 8: 6}
        for kind in (CertificateKind.WELL_TREE, CertificateKind.GOOD_TREE):
            with self.subTest(kind=kind.value):
                sigma = glue_placements(t, 0, self.inner, [leaves, leg], kind, anchor=0)
                self.assertEqual(sigma, from_cycles(10, [SPINE_CYCLE, [4, 5], [6, 7, 9, 8]]))
                self.assertTrue(verify_certificate(t, sigma, kind, 0).overall)

    def test_partition_must_share_x(self):
        """Test that a peeled piece is anchored at x."""
        t = Tree.from_edges(10, SPINE + [(0, 4), (0, 5), (0, 6), (6, 7), (7, 8), (8, 9)])
        leaves = FTreePartition.from_shapes(1, [(4,), (5,)])
        with self.assertRaises(PreconditionViolation):
            glue_placements(t, 0, self.inner, [leaves, {6: 7, 7: 9, 9: 8, 8: 6}])


class TestBuildPlacement(unittest.TestCase):
    """Test the recursive construction."""

    def test_rejects_bad_input(self):
        """Test the input checks."""
        with self.assertRaises(StarInput):
            build_placement(star(4), CertificateKind.WELL_TREE, 0)
        with self.assertRaises(KindMismatch):
            build_placement(path(5), CertificateKind.PATH4, 0)
        with self.assertRaises(IdOutOfRange):
            build_placement(path(5), CertificateKind.WELL_TREE, 5)
        with self.assertRaises(BadVertex):
            build_placement(path(5), CertificateKind.GOOD_TREE, 2)

    def test_small_tree_corpus(self):
        """Test every non-star tree up to eight vertices at every vertex with no search."""
        for n in range(4, 9):
            for t in enumerate_trees(n):
                if is_star(t):
                    continue
                for x in range(n):
                    with self.subTest(edges=t.edges(), x=x):
                        result = build_placement(t, CertificateKind.WELL_TREE, x, options=NO_SEARCH)
                        self.assertTrue(result.report.overall)
                        if not is_bad_vertex(t, x):
                            result = build_placement(t, CertificateKind.GOOD_TREE, x, options=NO_SEARCH)
                            self.assertTrue(result.report.overall)

    def test_default_construction_does_not_search(self):
        """Test that the default options never reach the brute-force search."""
        self.assertFalse(ConstructionOptions().search_fallback)
        # 0 with three legs: 1-4, 2-5 and the leaf 3
        t = Tree.from_edges(6, [(0, 1), (0, 2), (0, 3), (1, 4), (2, 5)])
        for x in range(6):
            for kind in (CertificateKind.WELL_TREE, CertificateKind.GOOD_TREE):
                with self.subTest(x=x, kind=kind.value):
                    result = build_placement(t, kind, x)
                    self.assertTrue(result.report.overall)
                    self.assertFalse(any(step.startswith("search") for step in result.trace))

    def test_leg_end_splices_into_cycle(self):
        """Test a good placement at a leaf hanging off a vertex of degree two."""
        t = Tree.from_edges(6, [(0, 1), (0, 2), (0, 3), (1, 4), (2, 5)])
        result = build_placement(t, CertificateKind.GOOD_TREE, 4, options=NO_SEARCH)
        self.assertEqual(result.sigma(4), 1)
        self.assertTrue(verify_certificate(t, result.sigma, CertificateKind.GOOD_TREE, 4).overall)

    def test_search_when_enabled(self):
        """Test that switching the fallback on still yields a certificate."""
        t = Tree.from_edges(6, [(0, 1), (0, 2), (0, 3), (1, 4), (2, 5)])
        options = ConstructionOptions(search_fallback=True)
        result = build_placement(t, CertificateKind.GOOD_TREE, 1, options=options)
        self.assertTrue(result.report.overall)

    def test_long_paths_without_search(self):
        """Test that paths are placed from the tables alone."""
        t = path(12)
        for x in range(12):
            with self.subTest(x=x):
                result = build_placement(t, CertificateKind.WELL_TREE, x, options=NO_SEARCH)
                self.assertEqual(result.trace, ("path[n=12]",))
                result = build_placement(t, CertificateKind.GOOD_TREE, x, options=NO_SEARCH)
                self.assertTrue(result.report.overall)

    def test_leaf_group_without_search(self):
        """Test that two leaves on x are paired off the spine."""
        t, _ = spine_with_f_trees(2, 0, 0)
        result = build_placement(t, CertificateKind.WELL_TREE, 0, options=NO_SEARCH)
        self.assertTrue(result.trace[0].startswith("leaf_group"))
        self.assertTrue(result.report.overall)

    def test_spider_without_search(self):
        """Test a 16-vertex spider through leaf pairing and F-tree peeling."""
        t = spider16()
        for kind in (CertificateKind.WELL_TREE, CertificateKind.GOOD_TREE):
            with self.subTest(kind=kind.value):
                result = build_placement(t, kind, 0, options=NO_SEARCH)
                self.assertTrue(result.report.overall)
                self.assertTrue(result.trace[0].startswith("leaf_group"))
                self.assertTrue(result.trace[1].startswith("f_tree"))

    def test_extra_caps(self):
        """Test that extra caps are enforced and reported."""
        # of the two P4 placements only x -> y -> w -> z -> x moves w by one
        result = build_placement(path(4), CertificateKind.WELL_TREE, 0, caps={3: 1})
        self.assertIn("caps", result.report.conditions)
        self.assertTrue(result.report.conditions["caps"].ok)
        self.assertEqual(result.sigma, from_cycles(4, [SPINE_CYCLE]))

    def test_node_budget(self):
        """Test that an exhausted budget is reported as an uncovered case."""
        t, _ = spine_with_f_trees(2, 0, 0)
        options = ConstructionOptions(search_fallback=False, node_budget=1)
        with self.assertRaises(UncoveredCase):
            build_placement(t, CertificateKind.WELL_TREE, 0, options=options)

    def test_wrappers(self):
        """Test the permutation-returning helpers."""
        t = spider16()
        sigma = well_placement(t, 0, options=NO_SEARCH)
        self.assertTrue(verify_certificate(t, sigma, CertificateKind.WELL_TREE, 0).overall)
        sigma = good_placement(path(9), 4)
        self.assertTrue(verify_certificate(path(9), sigma, CertificateKind.GOOD_TREE, 4).overall)
        self.assertEqual(compose(sigma, from_cycles(9, [])), sigma)


if __name__ == "__main__":
    unittest.main()
