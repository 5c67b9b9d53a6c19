"""Tests for treepacking."""
