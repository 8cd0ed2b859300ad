"""Placement routines that turn a box and an item list into coordinates."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterable, Optional, Sequence

from .core.rounding import grid_for
from .core.types import HBox, Item, NStarBox, Placement, VBox


class PackerError(ValueError):
    pass


@dataclass(frozen=True)
class Piece:
    """An item in a fixed orientation."""

    id: str
    extents: tuple[int, ...]
    rotated: bool = False


def pieces(items: Iterable[Item], d: int, rotated: bool = False) -> list[Piece]:
    return [Piece(it.id, it.extents(d, rotated), rotated) for it in items]


def piece(item: Item, d: int, rotated: bool = False) -> Piece:
    return Piece(item.id, item.extents(d, rotated), rotated)


@dataclass
class Fragment:
    """Placements relative to a box's corner, plus whatever did not fit."""

    placements: list[Placement] = field(default_factory=list)
    residue: list[Piece] = field(default_factory=list)
    shelves: list[tuple[int, int]] = field(default_factory=list)  # (axis, height) in opening order

    @property
    def ok(self) -> bool:
        return not self.residue

    @property
    def failed(self) -> Optional[Piece]:
        return self.residue[0] if self.residue else None

    def translated(self, offset: Sequence[int]) -> list[Placement]:
        return [Placement(p.id, tuple(a + b for a, b in zip(p.origin, offset)), p.rotated)
                for p in self.placements]


# ---------------------------------------------------------------- NFDH


def volume(lengths: Sequence[int]) -> int:
    v = 1
    for x in lengths:
        v *= x
    return v


def nfdh_pack(box_lengths: Sequence[int], items: Sequence[Piece]) -> Fragment:
    """Next-Fit-Decreasing-Height in as many dimensions as ``box_lengths`` has.

    Shelves are opened along the last (shortest, after sorting) axis; inside a
    shelf the remaining axes are packed recursively, and a single axis is plain
    next-fit.  Items are taken in nonincreasing order of their extent along the
    shelf axis, ties by id.  On failure the packed prefix and the residue are
    returned.
    """
    d = len(box_lengths)
    cubes = all(len(set(p.extents)) == 1 for p in items)
    if cubes:
        # shortest axis last, so shelves stack along it
        perm = sorted(range(d), key=lambda a: (-box_lengths[a], a))
    else:
        perm = list(range(d))
    L = [box_lengths[a] for a in perm]
    seq = sorted(items, key=lambda p: (-p.extents[perm[-1]], p.id))
    ext = [[p.extents[a] for a in perm] for p in seq]
    frag = Fragment()
    n = len(seq)

    def place(i: int, origin: list[int]) -> None:
        real = [0] * d
        for k, a in enumerate(perm):
            real[a] = origin[k]
        frag.placements.append(Placement(seq[i].id, tuple(real), seq[i].rotated))

    def fill(i: int, axis: int, origin: list[int], limit: list[int]) -> int:
        if axis == 0:
            x = 0
            while i < n and x + ext[i][0] <= limit[0] and all(
                    ext[i][a] <= limit[a] for a in range(1, d)):
                o = origin.copy()
                o[0] = x
                place(i, o)
                x += ext[i][0]
                i += 1
            return i
        y = 0
        while i < n:
            H = ext[i][axis]
            if y + H > limit[axis]:
                break
            sub = limit.copy()
            sub[axis] = H
            o = origin.copy()
            o[axis] = y
            j = fill(i, axis - 1, o, sub)
            if j == i:
                break
            frag.shelves.append((perm[axis], H))
            i = j
            y += H
        return i

    done = fill(0, d - 1, [0] * d, L) if n else 0
    frag.residue = list(seq[done:])
    return frag


def nfdh_guarantee(box_lengths: Sequence[int], sides: Iterable[int], eps: Fraction) -> bool:
    """Sufficient condition for NFDH to pack cubes of the given sides into the box.

    Every side is at most ``2 eps`` times the shortest box side and the rounded-up
    volume ``sum ceil(s)^d`` is at most ``(1 - 2(d-1) eps) VOL``.
    """
    eps = Fraction(eps)
    d = len(box_lengths)
    lmin = min(box_lengths)
    grid = grid_for(eps)
    vol = volume(box_lengths)
    total = Fraction(0)
    cap = vol - 2 * (d - 1) * eps * vol
    for s in sides:
        if s > 2 * eps * lmin:
            return False
        total += grid.round_up(s) ** d
        if total > cap:
            return False
    return True


# ---------------------------------------------------------------- structured boxes


def nstar_pack(spec: NStarBox, items: Sequence[Piece]) -> Fragment:
    """One item per cell of a grid with pitch ``s_max``; cells in row-major order (axis 0 fastest)."""
    if len(items) > spec.cells:
        raise PackerError(f"{len(items)} items exceed the {spec.cells} grid cells")
    frag = Fragment()
    for k, p in enumerate(sorted(items, key=lambda p: (p.extents[0], p.id))):
        s = p.extents[0]
        if not spec.s_min <= s <= spec.s_max:
            raise PackerError(f"item {p.id!r} side {s} outside [{spec.s_min}, {spec.s_max}]")
        coords = []
        for n in spec.n_per_dim:
            coords.append((k % n) * spec.s_max)
            k //= n
        frag.placements.append(Placement(p.id, tuple(coords), p.rotated))
    return frag


def hstack_pack(spec: HBox, items: Sequence[Piece]) -> Fragment:
    """Stack items on top of each other in nonincreasing width order."""
    if sum(p.extents[1] for p in items) > spec.height:
        raise PackerError("total height exceeds the box")
    frag = Fragment()
    y = 0
    for p in sorted(items, key=lambda p: -p.extents[0]):
        w = p.extents[0]
        if w > spec.width or (spec.w_max and w > spec.w_max) or w < spec.w_min:
            raise PackerError(f"item {p.id!r} width {w} violates the box's width range")
        frag.placements.append(Placement(p.id, (0, y), p.rotated))
        y += p.extents[1]
    return frag


def vstack_pack(spec: VBox, items: Sequence[Piece]) -> Fragment:
    """Place items left to right in nonincreasing height order."""
    width = spec.width or 0
    if sum(p.extents[0] for p in items) > width:
        raise PackerError("total width exceeds the box")
    frag = Fragment()
    x = 0
    for p in sorted(items, key=lambda p: (-p.extents[1], p.id)):
        if p.extents[1] > spec.height:
            raise PackerError(f"item {p.id!r} is taller than the box")
        frag.placements.append(Placement(p.id, (x, 0), p.rotated))
        x += p.extents[0]
    return frag


def single_pack(extents: Sequence[int], items: Sequence[Piece]) -> Fragment:
    """At most one item, at the box corner."""
    if len(items) > 1:
        raise PackerError("an L-box holds one item")
    frag = Fragment()
    for p in items:
        if any(e > L for e, L in zip(p.extents, extents)):
            raise PackerError(f"item {p.id!r} exceeds the box")
        frag.placements.append(Placement(p.id, (0,) * len(extents), p.rotated))
    return frag


# ---------------------------------------------------------------- arranging boxes


def _overlaps(o1, e1, o2, e2) -> bool:
    return all(a < b + eb and b < a + ea for a, ea, b, eb in zip(o1, e1, o2, e2))


def arrange_boxes(extents: Sequence[Sequence[int]], N: int) -> Optional[list[tuple[int, ...]]]:
    """Place boxes inside ``[0, N]^d`` without overlap, or return None.

    Deterministic corner-point greedy: larger boxes first, each at the
    candidate origin that is smallest in reversed-axis lexicographic order.
    Candidate coordinates per axis are 0 and the far faces of placed boxes.
    """
    if not extents:
        return []
    d = len(extents[0])
    order = sorted(range(len(extents)), key=lambda k: (-volume(extents[k]), k))
    placed: list[tuple[tuple[int, ...], tuple[int, ...]]] = []
    origins: list[Optional[tuple[int, ...]]] = [None] * len(extents)
    for k in order:
        e = tuple(extents[k])
        if any(x > N for x in e):
            return None
        cands = [sorted({0} | {o[a] + pe[a] for o, pe in placed}) for a in range(d)]
        best = None
        for o in product(*cands):
            if any(o[a] + e[a] > N for a in range(d)):
                continue
            if any(_overlaps(o, e, po, pe) for po, pe in placed):
                continue
            key = tuple(reversed(o))
            if best is None or key < best[0]:
                best = (key, o)
        if best is None:
            return None
        origins[k] = best[1]
        placed.append((best[1], e))
    return origins  # type: ignore[return-value]
