"""Tests for the figure registry."""

import os
import tempfile
import unittest

from treepacking.errors import ParseError, ReconstructionAmbiguous
from treepacking.figures import FigureRegistry, default_registry, match_figure
from treepacking.graph_core import Tree
from treepacking.verifier import CertificateKind, verify_certificate

BROKEN_FAMILY = """
{
  _format_version: 1
  families:
  [
    {
      tag: broken
      roles: ["a", "b", "c", "d"]
      edges: [["a", "b"], ["b", "c"], ["c", "d"]]
      placements:
      [
        {"parity": "any", "cycles": [["a", "b"]], "kind": "WellTree", "anchors": ["a"]}
      ]
    }
  ]
}
"""


def fork():
    """x1 - x - y with leaves y1, y2 on y."""
    return Tree.from_edges(5, [(0, 1), (1, 2), (2, 3), (2, 4)])


def _write(content: str) -> str:
    with tempfile.NamedTemporaryFile(mode="w", suffix=".hjson", delete=False) as f:
        f.write(content)
        return f.name


class TestBundledRegistry(unittest.TestCase):
    """Test the families shipped with the package."""

    def test_every_placement_survives_self_check(self):
        """Test that no bundled placement is disabled on load."""
        registry = default_registry()
        self.assertEqual(registry.disabled, [])
        self.assertEqual(len(registry.families), 24)
        self.assertTrue(all(family.placements for family in registry.families))

    def test_covers_size(self):
        """Test which sizes have a family member."""
        registry = default_registry()
        self.assertFalse(registry.covers_size(4))
        self.assertTrue(registry.covers_size(5))
        self.assertTrue(registry.covers_size(30))

    def test_group_sizes(self):
        """Test group size resolution."""
        families = {f.tag: f for f in default_registry().families}
        self.assertEqual(families["fork_tail"].size_for(5), 0)
        self.assertIsNone(families["fork_tail"].size_for(6))
        self.assertEqual(families["tail_broom"].size_for(7), 4)
        self.assertIsNone(families["tail_broom"].size_for(5))

    def test_match_fork(self):
        """Test that the fork matches at its tail leaf."""
        t = fork()
        found = match_figure(t, 0)
        self.assertIsNotNone(found)
        match, sigma = found
        self.assertEqual(match.tag, "fork_tail")
        self.assertEqual(match.kind, CertificateKind.WELL_TREE)
        self.assertEqual(match.roles["y"], 2)
        self.assertTrue(verify_certificate(t, sigma, match.kind, 0).overall)

    def test_match_by_kind(self):
        """Test that a kind filter picks the matching placement."""
        t = fork()
        match, sigma = match_figure(t, 2, CertificateKind.GOOD_TREE)
        self.assertEqual(match.tag, "short_spider")
        self.assertEqual(match.anchor_role, "xp")
        self.assertTrue(verify_certificate(t, sigma, CertificateKind.GOOD_TREE, 2).overall)

    def test_match_group_family(self):
        """Test a member of a family with a leaf group."""
        # x1 - x - y with five leaves on y
        t = Tree.from_edges(8, [(0, 1), (1, 2)] + [(2, i) for i in range(3, 8)])
        match, sigma = match_figure(t, 1)
        self.assertEqual(match.tag, "tail_broom")
        self.assertEqual(match.size, 5)
        self.assertTrue(verify_certificate(t, sigma, CertificateKind.WELL_TREE, 1).overall)

    def test_good_placement_at_hub_leaf(self):
        """Test the good placement at a leaf of the hub carrying the leaf group."""
        for k in range(2, 7):
            # x - y with leaves y1, y2 on y and k leaves on x
            t = Tree.from_edges(4 + k, [(0, 1), (1, 2), (1, 3)] + [(0, 4 + i) for i in range(k)])
            match, sigma = match_figure(t, 4, CertificateKind.GOOD_TREE)
            self.assertEqual(match.tag, "leafy_hub_fork")
            self.assertEqual(match.anchor_role, "x1")
            self.assertEqual(sigma(4), 0)
            self.assertTrue(verify_certificate(t, sigma, CertificateKind.GOOD_TREE, 4).overall)

    def test_good_placement_at_broom_tail(self):
        """Test the good placement at the end of the broom's handle."""
        for k in range(3, 7):
            t = Tree.from_edges(3 + k, [(0, 1), (1, 2)] + [(2, 3 + i) for i in range(k)])
            match, sigma = match_figure(t, 0, CertificateKind.GOOD_TREE)
            self.assertEqual(match.tag, "tail_broom")
            self.assertEqual(match.size, k)
            self.assertEqual(sigma(0), 1)
            self.assertTrue(verify_certificate(t, sigma, CertificateKind.GOOD_TREE, 0).overall)

    def test_catalogue_names(self):
        """Test the catalogue name carried by each family and its matches."""
        families = {f.tag: f for f in default_registry().families}
        self.assertEqual(families["fork_tail"].figure, "Fig1_A")
        self.assertEqual(families["tail_on_double_leg"].figure, "Fig6_B")
        self.assertIsNone(families["four_legged_spider"].figure)
        named = [f.figure for f in families.values() if f.figure is not None]
        self.assertEqual(len(named), 22)
        self.assertEqual(len(set(named)), 22)

        match, _ = match_figure(fork(), 0)
        self.assertEqual(match.figure, "Fig1_A")

    def test_path_does_not_match(self):
        """Test that a long path is not a figure."""
        t = Tree.from_edges(10, [(i, i + 1) for i in range(9)])
        self.assertIsNone(match_figure(t, 0))


class TestRegistryFile(unittest.TestCase):
    """Test loading custom figure files."""

    def test_failing_placement_is_disabled(self):
        """Test that a placement failing its check is dropped with a warning."""
        temp_file = _write(BROKEN_FAMILY)
        try:
            with self.assertLogs("treepacking.figures", level="WARNING"):
                registry = FigureRegistry(temp_file)
            self.assertEqual(registry.disabled, [("broken", "WellTree", "a")])
            self.assertEqual(registry.families[0].placements, ())
            t = Tree.from_edges(4, [(0, 1), (1, 2), (2, 3)])
            self.assertIsNone(registry.match(t, 0))
        finally:
            os.unlink(temp_file)

    def test_strict_registry_raises(self):
        """Test that strict loading refuses a failing placement."""
        temp_file = _write(BROKEN_FAMILY)
        try:
            with self.assertRaises(ReconstructionAmbiguous):
                FigureRegistry(temp_file, strict=True)
        finally:
            os.unlink(temp_file)

    def test_malformed_family(self):
        """Test that a family missing its edges and placements is a parse error."""
        temp_file = _write('{"families": [{"tag": "bad", "roles": ["a"]}]}')
        try:
            with self.assertRaises(ParseError):
                FigureRegistry(temp_file)
        finally:
            os.unlink(temp_file)

    def test_newer_format_warns(self):
        """Test that a newer format version is loaded with a warning."""
        temp_file = _write("{_format_version: 2, families: []}")
        try:
            with self.assertLogs("treepacking.figures", level="WARNING"):
                registry = FigureRegistry(temp_file)
            self.assertEqual(registry.families, [])
        finally:
            os.unlink(temp_file)


if __name__ == "__main__":
    unittest.main()
