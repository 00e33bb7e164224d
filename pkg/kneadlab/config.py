"""Run configuration and settings."""

import os
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Optional

from dotenv import load_dotenv

# Load environment variables
load_dotenv()


@dataclass
class Settings:
    """Run defaults loaded from the environment (or a ``.env`` file)."""

    # Truncation
    default_depth: int = 14
    default_series_cap: int = 16
    default_tolerance: Fraction = Fraction(1, 10**9)

    # Search limits
    root_scan_grid: int = 1024
    node_budget: int = 10_000_000
    separation_pair_budget: int = 20_000
    orbit_depth: int = 0  # 0 -> depth // 2

    # Runtime
    threads: int = 1
    output_dir: str = "results"
    log_level: str = "WARNING"

    def __post_init__(self):
        if self.default_depth < 1:
            raise ValueError("KNEADLAB_DEPTH must be at least 1")
        if self.default_series_cap < 0:
            raise ValueError("KNEADLAB_SERIES_CAP must be non-negative")
        if self.default_tolerance <= 0:
            raise ValueError("KNEADLAB_TOLERANCE must be positive")
        if self.root_scan_grid < 2:
            raise ValueError("KNEADLAB_SCAN_GRID must be at least 2")
        if self.node_budget < 1:
            raise ValueError("KNEADLAB_NODE_BUDGET must be positive")
        if self.threads < 1:
            raise ValueError("KNEADLAB_THREADS must be at least 1")

    def orbit_depth_for(self, depth: int) -> int:
        """Depth used to build orbit point sets for a word-search depth."""
        if self.orbit_depth > 0:
            return min(self.orbit_depth, depth)
        return max(1, depth // 2)


@lru_cache()
def _environment_settings() -> Settings:
    """Get settings singleton."""
    return Settings(
        default_depth=int(os.getenv("KNEADLAB_DEPTH", "14")),
        default_series_cap=int(os.getenv("KNEADLAB_SERIES_CAP", "16")),
        default_tolerance=Fraction(os.getenv("KNEADLAB_TOLERANCE", "1/1000000000")),
        root_scan_grid=int(os.getenv("KNEADLAB_SCAN_GRID", "1024")),
        node_budget=int(os.getenv("KNEADLAB_NODE_BUDGET", "10000000")),
        separation_pair_budget=int(os.getenv("KNEADLAB_PAIR_BUDGET", "20000")),
        orbit_depth=int(os.getenv("KNEADLAB_ORBIT_DEPTH", "0")),
        threads=int(os.getenv("KNEADLAB_THREADS", "1")),
        output_dir=os.getenv("KNEADLAB_OUTPUT_DIR", "results"),
        log_level=os.getenv("KNEADLAB_LOG_LEVEL", "WARNING").upper(),
    )


# per-run overrides from the command line; never written into the cached singleton
_override: ContextVar[Optional[Settings]] = ContextVar("kneadlab_settings", default=None)


def get_settings() -> Settings:
    """Settings of the current run: an active override, else the environment singleton."""
    return _override.get() or _environment_settings()


@contextmanager
def settings_override(**changes) -> Iterator[Settings]:
    """Run a block with a copy of the current settings carrying ``changes``."""
    token = _override.set(replace(get_settings(), **changes))
    try:
        yield _override.get()
    finally:
        _override.reset(token)
