"""Packing feasibility checks."""

from __future__ import annotations

from dataclasses import dataclass, field

from .types import Instance, Item, Mode, Packing


class PackingError(ValueError):
    """Raised for structurally invalid packings (unknown or duplicate ids)."""


@dataclass
class VerifyReport:
    feasible: bool
    violations: list = field(default_factory=list)


def boxes_of(instance: Instance, packing: Packing) -> list[tuple[str, tuple[int, ...], tuple[int, ...]]]:
    items = instance.by_id()
    seen = set()
    out = []
    for pl in packing.placements:
        if pl.id not in items:
            raise PackingError(f"unknown item id {pl.id!r}")
        if pl.id in seen:
            raise PackingError(f"duplicate item id {pl.id!r}")
        seen.add(pl.id)
        it = items[pl.id]
        out.append((pl.id, tuple(pl.origin), it.extents(instance.d, pl.rotated)))
    return out


def interiors_overlap(o1, e1, o2, e2) -> bool:
    return all(a < b + eb and b < a + ea for a, ea, b, eb in zip(o1, e1, o2, e2))


def verify_packing(instance: Instance, packing: Packing) -> VerifyReport:
    """Check containment in ``[0, N]^d`` and pairwise interior-disjointness.

    Closed boxes may touch along their boundaries.
    """
    d, N = instance.d, instance.N
    boxes = boxes_of(instance, packing)
    violations = []
    for pl in packing.placements:
        if pl.rotated and instance.mode is not Mode.RECTANGLE_ROTATING:
            violations.append(("rotation", pl.id))
    for id_, o, e in boxes:
        if len(o) != d or any(x < 0 or x + ext > N for x, ext in zip(o, e)):
            violations.append(("out_of_bounds", id_))
    # sweep along axis 0
    order = sorted(range(len(boxes)), key=lambda k: (boxes[k][1][0], boxes[k][0]))
    active: list[int] = []
    for k in order:
        id_, o, e = boxes[k]
        active = [a for a in active if boxes[a][1][0] + boxes[a][2][0] > o[0]]
        for a in active:
            if interiors_overlap(boxes[a][1], boxes[a][2], o, e):
                pair = tuple(sorted((boxes[a][0], id_)))
                violations.append(("overlap",) + pair)
        active.append(k)
    return VerifyReport(not violations, violations)


def verify_fragment(extents: tuple[int, ...], placements, items: dict[str, Item], d: int) -> bool:
    """True iff ``placements`` lie inside a box of the given extents and do not overlap."""
    boxes = []
    for pl in placements:
        e = items[pl.id].extents(d, pl.rotated)
        if any(x < 0 or x + ext > L for x, ext, L in zip(pl.origin, e, extents)):
            return False
        boxes.append((pl.origin, e))
    boxes.sort()
    active: list = []
    for o, e in boxes:
        active = [(o2, e2) for o2, e2 in active if o2[0] + e2[0] > o[0]]
        if any(interiors_overlap(o2, e2, o, e) for o2, e2 in active):
            return False
        active.append((o, e))
    return True
