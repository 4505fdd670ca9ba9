"""Core functionality for snapdiff."""

from src.core.exceptions import SnapDiffException

__all__ = ["SnapDiffException"]
