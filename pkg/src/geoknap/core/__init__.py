"""Shared domain types, rounding, I/O and verification."""

from .rounding import (PowerGrid, class_floor, class_of, class_value, grid_for, parse_eps,
                       round_down_pow, round_up_pow)
from .types import (BoxSpec, Cell, ClassIndex, HBox, ImplicitSolution, Instance, InstanceError,
                    Item, LBox, Mode, NStarBox, Packing, PlacedBox, Placement, SBox, VBox,
                    box_extents, check_eps_for_cubes, classify_rect_items, enumerate_eps_pairs,
                    rect_category)
from .verify import PackingError, VerifyReport, verify_packing

__all__ = [
    "PowerGrid", "class_floor", "class_of", "class_value", "grid_for", "parse_eps",
    "round_down_pow", "round_up_pow", "BoxSpec", "Cell", "ClassIndex", "HBox",
    "ImplicitSolution", "Instance", "InstanceError", "Item", "LBox", "Mode", "NStarBox",
    "Packing", "PlacedBox", "Placement", "SBox", "VBox", "box_extents", "check_eps_for_cubes",
    "classify_rect_items", "enumerate_eps_pairs", "rect_category", "PackingError",
    "VerifyReport", "verify_packing",
]
