"""Finite p-group laboratory: pc-presentations, p-group generation,
Artin patterns and descendant trees."""
from ._jit import backend
from .pc import (
    GroupElement,
    PcPresentation,
    check_consistency,
    collect,
    commutator,
    evaluate_map,
    format_presentation,
    inverse,
    multiply,
    parse_presentation,
    power,
)

__version__ = "0.1.0"
