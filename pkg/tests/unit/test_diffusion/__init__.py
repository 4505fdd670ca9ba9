"""Diffusion framework tests."""
