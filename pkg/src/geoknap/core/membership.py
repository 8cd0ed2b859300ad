"""Selecting concrete items from an implicit (class-count) solution.

A cell's members are ordered by a fixed total order and the first ``z`` are
selected.  The same routine serves materialization and membership queries, so
``contains`` and ``output`` can never disagree.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable

from .rounding import grid_for
from .types import Cell, ImplicitSolution, Item


def item_attrs(item: Item, normalized: bool) -> dict:
    if item.is_cube:
        return {"s": item.s, "h": item.s, "w": item.s, "p": item.profit}
    h, w = item.h, item.w
    if normalized and h > w:
        h, w = w, h
    return {"h": h, "w": w, "p": item.profit, "density": Fraction(item.profit, w)}


def in_cell(attrs: dict[str, int], cell: Cell, grid) -> bool:
    for name, lo, hi in cell.ranges:
        v = attrs[name]
        if (lo is not None and v < lo) or (hi is not None and v > hi):
            return False
    for name, t in cell.classes:
        v = attrs[name]
        if v <= 0 or grid.class_of(v) != t:
            return False
    return True


def order_key(item: Item, attrs: dict[str, int], order: str):
    if order == "side":
        return (min(attrs.get("s", attrs["h"]), attrs["w"]), item.id)
    if order == "height":
        return (attrs["h"], item.id)
    if order == "profit":
        return (-attrs["p"], item.id)
    raise ValueError(f"unknown order {order!r}")


def cell_members(solution: ImplicitSolution, items: Iterable[Item]) -> list[list[Item]]:
    """Members of every cell in selection order (not truncated)."""
    grid = grid_for(solution.eps)
    members: list[list[tuple]] = [[] for _ in solution.cells]
    for it in items:
        attrs = item_attrs(it, solution.normalized)
        for c, cell in enumerate(solution.cells):
            if cell.pinned and it.id not in cell.pinned:
                continue
            if in_cell(attrs, cell, grid):
                members[c].append((order_key(it, attrs, cell.order), it))
    out = []
    for lst in members:
        lst.sort(key=lambda kv: kv[0])
        out.append([it for _, it in lst])
    return out


class MembershipError(ValueError):
    pass


def selected_by_box(solution: ImplicitSolution, items: Iterable[Item]) -> list[list[Item]]:
    """Items assigned to each box, following the per-cell assignment counts."""
    per_box: list[list[Item]] = [[] for _ in solution.boxes]
    for c, mem in enumerate(cell_members(solution, items)):
        row = solution.assignment[c]
        if sum(row) > len(mem):
            raise MembershipError(f"cell {c} selects {sum(row)} items but has {len(mem)}")
        pos = 0
        for b, cnt in enumerate(row):
            per_box[b].extend(mem[pos:pos + cnt])
            pos += cnt
    return per_box


def selected_ids(solution: ImplicitSolution, items: Iterable[Item]) -> set[str]:
    if solution.explicit is not None:
        return set(solution.explicit.ids())
    items = list(items)
    return {it.id for box in selected_by_box(solution, items) for it in box}
