"""Configuration for snapdiff.

``src.config.run_config`` holds the experiment file format; it is not
imported here because the tensor engine reads ``settings`` at import time.
"""

from src.config.settings import settings

__all__ = ["settings"]
