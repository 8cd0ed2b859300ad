"""Domain types shared by every solver."""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Union


class Mode(str, enum.Enum):
    HYPERCUBE = "hypercube"
    RECTANGLE = "rectangle"
    RECTANGLE_ROTATING = "rectangle-rotating"

    @property
    def is_rect(self) -> bool:
        return self is not Mode.HYPERCUBE


class InstanceError(ValueError):
    pass


@dataclass(frozen=True)
class Item:
    """A hypercube (``sides == (s,)``) or a rectangle (``sides == (h, w)``)."""

    id: str
    sides: tuple[int, ...]
    profit: int

    def __post_init__(self):
        if not self.sides or any((not isinstance(x, int)) or x < 1 for x in self.sides):
            raise InstanceError(f"item {self.id!r}: every side must be an integer >= 1")
        if len(self.sides) > 2:
            raise InstanceError(f"item {self.id!r}: expected (s,) or (h, w)")
        if not isinstance(self.profit, int) or self.profit < 0:
            raise InstanceError(f"item {self.id!r}: profit must be an integer >= 0")

    @classmethod
    def cube(cls, id, s: int, p: int) -> "Item":
        return cls(str(id), (s,), p)

    @classmethod
    def rect(cls, id, h: int, w: int, p: int) -> "Item":
        return cls(str(id), (h, w), p)

    @property
    def is_cube(self) -> bool:
        return len(self.sides) == 1

    @property
    def s(self) -> int:
        if not self.is_cube:
            raise AttributeError("rectangles have no single side length")
        return self.sides[0]

    @property
    def h(self) -> int:
        return self.sides[0]

    @property
    def w(self) -> int:
        return self.sides[-1]

    @property
    def min_side(self) -> int:
        return min(self.sides)

    @property
    def density(self) -> Fraction:
        return Fraction(self.profit, self.w)

    def extents(self, d: int, rotated: bool = False) -> tuple[int, ...]:
        """Extent along each axis; axis 0 is the width for rectangles."""
        if self.is_cube:
            return (self.sides[0],) * d
        return (self.h, self.w) if rotated else (self.w, self.h)

    def rotated(self) -> "Item":
        return Item(self.id, (self.w, self.h), self.profit)

    def volume(self, d: int) -> int:
        v = 1
        for e in self.extents(d):
            v *= e
        return v


@dataclass(frozen=True)
class Instance:
    N: int
    d: int
    mode: Mode
    items: tuple[Item, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "items", tuple(self.items))
        if not isinstance(self.N, int) or self.N < 1:
            raise InstanceError("N must be a positive integer")
        if not isinstance(self.d, int) or self.d < 1:
            raise InstanceError("d must be a positive integer")
        if self.mode.is_rect and self.d != 2:
            raise InstanceError("rectangle mode requires d=2")
        seen = set()
        for it in self.items:
            if it.id in seen:
                raise InstanceError(f"duplicate item id {it.id!r}")
            seen.add(it.id)
            if self.mode is Mode.HYPERCUBE and not it.is_cube:
                raise InstanceError(f"item {it.id!r}: hypercube instances need side s")
            if self.mode.is_rect and it.is_cube:
                raise InstanceError(f"item {it.id!r}: rectangle instances need h and w")

    @property
    def n(self) -> int:
        return len(self.items)

    @property
    def rotations(self) -> bool:
        return self.mode is Mode.RECTANGLE_ROTATING

    def fits(self, item: Item) -> bool:
        if self.mode is Mode.RECTANGLE_ROTATING:
            return min(item.sides) <= self.N and max(item.sides) <= self.N
        return max(item.sides) <= self.N

    def packable(self) -> tuple[Item, ...]:
        """Items that fit the knapsack; oversize items are dropped with a warning."""
        keep = tuple(it for it in self.items if self.fits(it))
        if len(keep) != len(self.items):
            warnings.warn(f"{len(self.items) - len(keep)} item(s) exceed the knapsack and are ignored",
                          stacklevel=2)
        return keep

    def by_id(self) -> dict[str, Item]:
        return {it.id: it for it in self.items}

    def with_items(self, items: Iterable[Item]) -> "Instance":
        return Instance(self.N, self.d, self.mode, tuple(items))


def check_eps_for_cubes(eps: Fraction, d: int) -> None:
    if eps >= Fraction(1, 2 ** (d + 2)):
        raise ValueError(f"hypercube mode needs eps < 1/{2 ** (d + 2)} for d={d}, got {eps}")


# ---------------------------------------------------------------- boxes


@dataclass(frozen=True)
class NStarBox:
    j: int
    n_per_dim: tuple[int, ...]
    s_min: int = 0
    s_max: int = 0

    kind = "N"

    @property
    def cells(self) -> int:
        c = 1
        for x in self.n_per_dim:
            c *= x
        return c

    def lengths(self) -> tuple[int, ...]:
        return tuple(x * self.s_max for x in self.n_per_dim)


@dataclass(frozen=True)
class SBox:
    lengths: tuple[int, ...]
    shares: tuple[Fraction, ...] = ()
    small_share: Fraction = Fraction(0)
    vert_share: Fraction = Fraction(0)

    kind = "S"

    @property
    def volume(self) -> int:
        v = 1
        for x in self.lengths:
            v *= x
        return v


@dataclass(frozen=True)
class LBox:
    j: int
    height: int
    width: int = 0
    special: bool = False

    kind = "L"


@dataclass(frozen=True)
class HBox:
    j: int
    height: int
    width: int = 0
    w_min: int = 0
    w_max: int = 0

    kind = "H"


@dataclass(frozen=True)
class VBox:
    interval: int
    height: int
    width: Optional[int] = None

    kind = "V"


BoxSpec = Union[NStarBox, SBox, LBox, HBox, VBox]


def box_extents(box: BoxSpec) -> tuple[int, ...]:
    """Axis extents of a fully instantiated box (axis 0 is width in 2-D)."""
    if isinstance(box, NStarBox):
        return box.lengths()
    if isinstance(box, SBox):
        return box.lengths
    if isinstance(box, VBox):
        return (box.width or 0, box.height)
    return (box.width, box.height)


@dataclass(frozen=True)
class PlacedBox:
    box: BoxSpec
    origin: tuple[int, ...]

    @property
    def extents(self) -> tuple[int, ...]:
        return box_extents(self.box)


@dataclass(frozen=True)
class ClassIndex:
    kind: str  # profit | size | height | width
    t: int


# ---------------------------------------------------------------- packings


@dataclass(frozen=True)
class Placement:
    id: str
    origin: tuple[int, ...]
    rotated: bool = False


@dataclass(frozen=True)
class Packing:
    N: int
    d: int
    placements: tuple[Placement, ...] = ()

    def ids(self) -> list[str]:
        return [pl.id for pl in self.placements]

    def profit(self, instance: Instance) -> int:
        items = instance.by_id()
        return sum(items[pl.id].profit for pl in self.placements)

    def translated(self, offset: tuple[int, ...]) -> "Packing":
        return Packing(self.N, self.d, tuple(
            Placement(pl.id, tuple(a + b for a, b in zip(pl.origin, offset)), pl.rotated)
            for pl in self.placements))

    def __len__(self) -> int:
        return len(self.placements)


# ---------------------------------------------------------------- implicit solutions


@dataclass(frozen=True)
class Cell:
    """A set of items described by integer ranges and class indices.

    ``ranges`` holds inclusive bounds ``(attribute, lo, hi)`` with ``None``
    meaning unbounded; ``classes`` holds ``(attribute, t)``.  Attributes are
    ``s``, ``h``, ``w`` and ``p``; for rotating instances they refer to the
    normalized orientation (``w >= h``).  ``order`` fixes which members are
    selected first: ``"side"`` (smallest side, then id) or ``"profit"``
    (largest profit, then id).  A non-empty ``pinned`` restricts the cell to
    the listed ids.
    """

    ranges: tuple[tuple[str, Optional[int], Optional[int]], ...] = ()
    classes: tuple[tuple[str, int], ...] = ()
    order: str = "side"
    label: str = ""
    pinned: tuple[str, ...] = ()


@dataclass
class ImplicitSolution:
    mode: Mode
    eps: Fraction
    thresholds: tuple[int, ...] = ()
    boxes: tuple[PlacedBox, ...] = ()
    cells: tuple[Cell, ...] = ()
    # assignment[c][b]: number of selected members of cells[c] placed into boxes[b]
    assignment: tuple[tuple[int, ...], ...] = ()
    total_profit_estimate: int = 0
    normalized: bool = False
    explicit: Optional[Packing] = None
    meta: dict = field(default_factory=dict)

    def counts(self) -> dict[int, int]:
        return {c: sum(row) for c, row in enumerate(self.assignment)}

    @property
    def is_explicit(self) -> bool:
        return self.explicit is not None

    @classmethod
    def empty(cls, mode: Mode, eps: Fraction) -> "ImplicitSolution":
        return cls(Mode(mode), Fraction(eps))


# ---------------------------------------------------------------- rectangle classes


def classify_rect_items(items: Iterable[Item], N: int, eps_large: Fraction, eps_small: Fraction
                        ) -> dict[str, list[Item]]:
    """Split rectangles into large / horizontal / vertical / small / intermediate.

    Comparisons are exactly: large ``h, w > el*N``; horizontal ``w > el*N, h <= es*N``;
    vertical ``h > el*N, w <= es*N``; small ``h, w < es*N``; everything else intermediate.
    """
    lN = Fraction(eps_large) * N
    sN = Fraction(eps_small) * N
    out: dict[str, list[Item]] = {k: [] for k in ("large", "horizontal", "vertical", "small", "intermediate")}
    for it in items:
        h, w = it.h, it.w
        if h > lN and w > lN:
            out["large"].append(it)
        elif w > lN and h <= sN:
            out["horizontal"].append(it)
        elif h > lN and w <= sN:
            out["vertical"].append(it)
        elif h < sN and w < sN:
            out["small"].append(it)
        else:
            out["intermediate"].append(it)
    return out


def rect_category(item: Item, N: int, eps_large: Fraction, eps_small: Fraction) -> str:
    for k, v in classify_rect_items([item], N, eps_large, eps_small).items():
        if v:
            return k
    raise AssertionError("unreachable")


def enumerate_eps_pairs(eps: Fraction, c: Optional[Fraction] = None, box_cap: int = 4
                        ) -> list[tuple[Fraction, Fraction]]:
    """Cascade ``(x_k, x_{k+1})`` with ``x_0 = eps`` and ``x_{k+1} = x_k / c``.

    ``c`` defaults to ``max(1/eps, box_cap)``; the list has ``1/eps + 1`` pairs.
    """
    eps = Fraction(eps)
    if c is None:
        c = max(Fraction(1) / eps, Fraction(box_cap))
    c = Fraction(c)
    if c <= 1:
        raise ValueError("cascade factor must exceed 1")
    steps = int(1 / eps) + 1
    pairs = []
    x = eps
    for _ in range(steps):
        pairs.append((x, x / c))
        x = x / c
    return pairs
