"""Training harness tests."""
