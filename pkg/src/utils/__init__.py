"""Utility functions for snapdiff."""
