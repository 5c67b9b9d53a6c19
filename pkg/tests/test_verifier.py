"""Tests for certificate verification."""

import json
import unittest

from treepacking.errors import IdOutOfRange, KindMismatch, ParseError, SizeMismatch
from treepacking.graph_core import Tree, all_pairs_distance
from treepacking.permutation import from_cycles, identity
from treepacking.verifier import (
    CertificateKind,
    check_cycle_bound,
    check_power_containment,
    verify_caps,
    verify_certificate,
    verify_labeled_packing,
    verify_placement,
)


def path(n):
    return Tree.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def star(leaves):
    return Tree.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


# 1 -> 2 -> 4 -> 3 -> 1 on P4
P4_SIGMA = from_cycles(4, [[0, 1, 3, 2]])


class TestCertificateKind(unittest.TestCase):
    """Test the kind table."""

    def test_parse(self):
        """Test lookup by value or member name."""
        self.assertIs(CertificateKind.parse("welltree"), CertificateKind.WELL_TREE)
        self.assertIs(CertificateKind.parse("GOOD_PATH"), CertificateKind.GOOD_PATH)
        self.assertIs(CertificateKind.parse("Path4"), CertificateKind.PATH4)
        with self.assertRaises(KindMismatch):
            CertificateKind.parse("bogus")

    def test_profiles(self):
        """Test powers and flags."""
        self.assertEqual(CertificateKind.WELL_TREE.power, 6)
        self.assertEqual(CertificateKind.GOOD_TREE.power, 5)
        self.assertTrue(CertificateKind.GOOD_PATH.is_good)
        self.assertTrue(CertificateKind.WELL_PATH.is_path_kind)
        self.assertFalse(CertificateKind.PATH4.needs_vertex)
        self.assertIsNone(CertificateKind.GOOD_TREE.profile.cycle_bound)


class TestPlacementChecks(unittest.TestCase):
    """Test the global placement conditions."""

    def test_valid_placement(self):
        """Test a P4 placement into its 4th power."""
        report = verify_placement(path(4), P4_SIGMA, 4)
        self.assertTrue(report.overall)
        self.assertEqual(report.kind, "T^4")

    def test_identity_is_not_a_placement(self):
        """Test that the identity maps edges onto edges."""
        report = verify_placement(path(4), identity(4), 4)
        self.assertFalse(report.overall)
        self.assertEqual(report.failed(), ["two_placement"])
        self.assertEqual(
            report.conditions["two_placement"].witness, "edge 1-2 maps onto edge 1-2"
        )

    def test_power_containment_witness(self):
        """Test that a stretched edge is reported with its distance."""
        t = path(6)
        result = check_power_containment(
            t, from_cycles(6, [[0, 5]]), 3, all_pairs_distance(t)
        )
        self.assertFalse(result.ok)
        self.assertIn("distance 4 > 3", result.witness)

    def test_cycle_bound(self):
        """Test that a long cycle is reported."""
        sigma = from_cycles(6, [[0, 1, 2, 3, 4, 5]])
        self.assertFalse(check_cycle_bound(sigma, 5).ok)
        self.assertTrue(check_cycle_bound(sigma, 6).ok)

    def test_size_mismatch(self):
        """Test that sizes must agree."""
        with self.assertRaises(SizeMismatch):
            verify_placement(path(4), identity(5), 4)

    def test_verify_caps(self):
        """Test per-vertex caps with an exact clause."""
        t = path(4)
        self.assertTrue(verify_caps(t, P4_SIGMA, {0: 1}, exact=(0,)).ok)
        self.assertFalse(verify_caps(t, P4_SIGMA, {0: 2}, exact=(0,)).ok)
        self.assertFalse(verify_caps(t, P4_SIGMA, {1: 1}).ok)


class TestVerifyCertificate(unittest.TestCase):
    """Test clause-by-clause certificate checks."""

    def test_path4_certificate(self):
        """Test the Path4 certificate from either end."""
        report = verify_certificate(path(4), P4_SIGMA, CertificateKind.PATH4)
        self.assertTrue(report.overall)
        self.assertTrue(report.conditions["fixed_point_free"].vacuous)
        self.assertTrue(verify_certificate(path(4), P4_SIGMA, CertificateKind.PATH4, 3).overall)

    def test_path4_needs_an_end(self):
        """Test that u must be an end of the path."""
        with self.assertRaises(KindMismatch):
            verify_certificate(path(4), P4_SIGMA, CertificateKind.PATH4, 1)

    def test_well_tree_certificate(self):
        """Test that the P4 placement is well at an end."""
        report = verify_certificate(path(4), P4_SIGMA, CertificateKind.WELL_TREE, 0)
        self.assertTrue(report.overall)
        self.assertEqual(report.kind, "WellTree")
        self.assertTrue(report.render_text().endswith("overall: ok"))

    def test_exact_clause(self):
        """Test that a good certificate needs x to move exactly one."""
        report = verify_certificate(path(4), P4_SIGMA, CertificateKind.GOOD_TREE, 1)
        self.assertFalse(report.overall)
        self.assertIn("dist_x", report.failed())

    def test_bad_vertex_precondition(self):
        """Test that the middle of P5 fails the good precondition."""
        sigma = from_cycles(5, [[0, 1, 3, 4, 2]])
        report = verify_certificate(path(5), sigma, CertificateKind.GOOD_TREE, 2)
        self.assertFalse(report.conditions["precondition"].ok)
        self.assertTrue(report.render_text().endswith("overall: FAIL"))

    def test_star_precondition(self):
        """Test that stars fail the precondition."""
        sigma = from_cycles(4, [[0, 1], [2, 3]])
        report = verify_certificate(star(3), sigma, CertificateKind.WELL_TREE, 0)
        self.assertFalse(report.conditions["precondition"].ok)
        self.assertFalse(report.overall)

    def test_path_kind_needs_path(self):
        """Test that path kinds reject other trees."""
        with self.assertRaises(KindMismatch):
            verify_certificate(star(3), identity(4), CertificateKind.WELL_PATH, 0)

    def test_missing_vertex(self):
        """Test that tree kinds need x."""
        with self.assertRaises(KindMismatch):
            verify_certificate(path(4), P4_SIGMA, CertificateKind.WELL_TREE)
        with self.assertRaises(IdOutOfRange):
            verify_certificate(path(4), P4_SIGMA, CertificateKind.WELL_TREE, 4)

    def test_report_json(self):
        """Test the JSON rendering of a report."""
        data = json.loads(verify_placement(path(4), identity(4), 4).to_json())
        self.assertFalse(data["overall"])
        self.assertFalse(data["conditions"]["two_placement"]["ok"])
        self.assertIsNone(data["label_count"])


class TestLabeledPacking(unittest.TestCase):
    """Test labeled packing checks."""

    def test_constant_labels(self):
        """Test labels constant on the single cycle."""
        report = verify_labeled_packing(path(4), P4_SIGMA, [1, 1, 1, 1], 4)
        self.assertTrue(report.overall)
        self.assertEqual(report.label_count, 1)

    def test_labels_not_preserved(self):
        """Test that a label change along a cycle is reported."""
        report = verify_labeled_packing(path(4), P4_SIGMA, [1, 2, 1, 1], 4)
        self.assertEqual(report.failed(), ["labels_preserved"])
        self.assertEqual(report.label_count, 2)

    def test_label_validation(self):
        """Test malformed label vectors."""
        with self.assertRaises(ParseError):
            verify_labeled_packing(path(4), P4_SIGMA, [0, 1, 1, 1], 4)
        with self.assertRaises(SizeMismatch):
            verify_labeled_packing(path(4), P4_SIGMA, [1, 1, 1], 4)


if __name__ == "__main__":
    unittest.main()
