"""Shape-constrained spline surrogates for mixed-integer nonlinear optimization."""

from ._missoc import *  # noqa: F401,F403
from ._missoc import (
    MissocConfig,
    load_instance,
    parse_instance,
    run_missoc,
)

__all__ = [
    "MissocConfig",
    "load_instance",
    "parse_instance",
    "run_missoc",
]
