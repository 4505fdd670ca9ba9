"""Storage format tests."""
