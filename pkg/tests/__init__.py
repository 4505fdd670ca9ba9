"""Test suite for snapdiff."""
