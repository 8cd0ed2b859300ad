"""Dynamic item indexes.

* :class:`OrderTree`: a treap over ``(value, id)`` keys with subtree sizes.
* :class:`RangeTree`: a static layered range tree over k-dimensional keys that
  aggregates ``(count, sum p, sum w)`` and reports handles.
* :class:`DynamicIndex`: the logarithmic method over static range trees.  An
  insertion merges equally sized blocks; a deletion inserts the point into a
  second "deleted" collection whose aggregates are subtracted.  Once deleted
  points outnumber half the live ones everything is rebuilt.

``ItemIndex2D`` indexes hypercubes by ``(s, p)``, ``RectIndex4D`` indexes
rectangles by ``(h, w, p, density)``.
"""

from __future__ import annotations

import zlib
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Iterable, Iterator, Optional, Sequence

from .core.types import Item

Ranges = dict  # attribute -> (lo | None, hi | None), closed


# ---------------------------------------------------------------- order statistics


class _Node:
    __slots__ = ("key", "prio", "left", "right", "size")

    def __init__(self, key):
        self.key = key
        self.prio = zlib.crc32(repr(key).encode())
        self.left: Optional[_Node] = None
        self.right: Optional[_Node] = None
        self.size = 1


def _size(t: Optional[_Node]) -> int:
    return t.size if t else 0


def _fix(t: _Node) -> _Node:
    t.size = 1 + _size(t.left) + _size(t.right)
    return t


def _split(t: Optional[_Node], key) -> tuple[Optional[_Node], Optional[_Node]]:
    """Split into keys < key and keys >= key."""
    if t is None:
        return None, None
    if t.key < key:
        a, b = _split(t.right, key)
        t.right = a
        return _fix(t), b
    a, b = _split(t.left, key)
    t.left = b
    return a, _fix(t)


def _merge(a: Optional[_Node], b: Optional[_Node]) -> Optional[_Node]:
    if a is None:
        return b
    if b is None:
        return a
    if a.prio > b.prio:
        a.right = _merge(a.right, b)
        return _fix(a)
    b.left = _merge(a, b.left)
    return _fix(b)


class OrderTree:
    """Balanced search tree over ``(value, id)`` keys.

    Priorities are a hash of the key, so the shape is a function of the key set.
    """

    def __init__(self, keys: Iterable = ()):
        self.root: Optional[_Node] = None
        for k in keys:
            self.insert(k)

    def __len__(self) -> int:
        return _size(self.root)

    def __contains__(self, key) -> bool:
        t = self.root
        while t is not None:
            if key == t.key:
                return True
            t = t.left if key < t.key else t.right
        return False

    def __iter__(self) -> Iterator:
        stack, t = [], self.root
        while stack or t is not None:
            while t is not None:
                stack.append(t)
                t = t.left
            t = stack.pop()
            yield t.key
            t = t.right

    def insert(self, key) -> None:
        if key in self:
            raise KeyError(f"duplicate key {key!r}")
        a, b = _split(self.root, key)
        self.root = _merge(_merge(a, _Node(key)), b)

    def delete(self, key) -> None:
        if key not in self:
            raise KeyError(f"absent key {key!r}")
        a, b = _split(self.root, key)
        # b starts with key; strip its minimum
        b = self._drop_min(b)
        self.root = _merge(a, b)

    @staticmethod
    def _drop_min(t: _Node) -> Optional[_Node]:
        if t.left is None:
            return t.right
        path = []
        cur = t
        while cur.left is not None:
            path.append(cur)
            cur = cur.left
        path[-1].left = cur.right
        for n in reversed(path):
            _fix(n)
        return t

    def kth(self, k: int):
        """k-th smallest key, 1-based."""
        if not 1 <= k <= len(self):
            raise IndexError(f"k={k} out of range 1..{len(self)}")
        t = self.root
        while True:
            ls = _size(t.left)
            if k <= ls:
                t = t.left
            elif k == ls + 1:
                return t.key
            else:
                k -= ls + 1
                t = t.right

    def rank(self, key) -> int:
        """Number of keys strictly smaller than ``key``."""
        r, t = 0, self.root
        while t is not None:
            if t.key < key:
                r += _size(t.left) + 1
                t = t.right
            else:
                t = t.left
        return r

    def count_values(self, lo=None, hi=None) -> int:
        """Keys whose value component lies in ``[lo, hi]``."""
        if lo is not None and hi is not None and lo > hi:
            return 0
        a = 0 if lo is None else self.rank((lo,))
        b = len(self) if hi is None else self.rank((hi, _TOP))
        return max(0, b - a)

    def median(self):
        """Lower median key."""
        return self.kth((len(self) + 1) // 2)

    def binary_search_threshold(self, predicate: Callable[[Any], bool], lo=None):
        """Least value ``v`` (with ``v > lo`` if given) such that ``predicate(v)``.

        ``predicate`` must be monotone nondecreasing; it is called O(log n) times.
        """
        a = 0 if lo is None else self.rank((lo, _TOP))
        b = len(self)
        found = None
        while a < b:
            mid = (a + b) // 2
            v = self.kth(mid + 1)[0]
            if predicate(v):
                found = v
                b = mid
            else:
                a = mid + 1
        return found

    def height(self) -> int:
        def h(t):
            return 0 if t is None else 1 + max(h(t.left), h(t.right))
        return h(self.root)

    def shape(self):
        """Nested ``(key, left, right)`` tuples, for debugging."""
        def s(t):
            return None if t is None else (t.key, s(t.left), s(t.right))
        return s(self.root)


class _Top:
    """Sorts after every id."""

    def __lt__(self, other):
        return False

    def __gt__(self, other):
        return not isinstance(other, _Top)

    def __eq__(self, other):
        return isinstance(other, _Top)

    def __hash__(self):
        return 0

    def __repr__(self):
        return "TOP"


_TOP = _Top()


# ---------------------------------------------------------------- static range tree

LEAF = 12


@dataclass(frozen=True)
class Point:
    key: tuple
    handle: int
    weights: tuple  # (count, p, w)


def _add(a: tuple, b: tuple) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


def _sub(a: tuple, b: tuple) -> tuple:
    return tuple(x - y for x, y in zip(a, b))


ZERO = (0, 0, 0)


def _inside(key: tuple, ranges: Sequence, start: int) -> bool:
    for dim in range(start, len(ranges)):
        lo, hi = ranges[dim]
        v = key[dim]
        if (lo is not None and v < lo) or (hi is not None and v > hi):
            return False
    return True


class RangeTree:
    """Static layered range tree over the points' keys from dimension ``level`` on."""

    __slots__ = ("level", "dims", "lo", "hi", "points", "keys", "prefix",
                 "left", "right", "assoc", "size")

    def __init__(self, points: Sequence[Point], dims: int, level: int = 0):
        self.level = level
        self.dims = dims
        self.size = len(points)
        pts = sorted(points, key=lambda q: (q.key[level], q.handle))
        self.points = pts
        self.lo = pts[0].key[level] if pts else None
        self.hi = pts[-1].key[level] if pts else None
        self.left = self.right = self.assoc = None
        self.keys = self.prefix = None
        if level == dims - 1:
            self.keys = [q.key[level] for q in pts]
            acc = [ZERO]
            for q in pts:
                acc.append(_add(acc[-1], q.weights))
            self.prefix = acc
        elif len(pts) > LEAF:
            mid = len(pts) // 2
            self.left = RangeTree(pts[:mid], dims, level)
            self.right = RangeTree(pts[mid:], dims, level)
            self.assoc = RangeTree(pts, dims, level + 1)

    def aggregate(self, ranges: Sequence) -> tuple:
        if not self.size:
            return ZERO
        lo, hi = ranges[self.level]
        if (lo is not None and self.hi < lo) or (hi is not None and self.lo > hi):
            return ZERO
        if self.keys is not None:
            a = 0 if lo is None else bisect_left(self.keys, lo)
            b = len(self.keys) if hi is None else bisect_right(self.keys, hi)
            return _sub(self.prefix[b], self.prefix[a]) if a < b else ZERO
        covered = (lo is None or lo <= self.lo) and (hi is None or self.hi <= hi)
        if covered and self.assoc is not None:
            return self.assoc.aggregate(ranges)
        if self.left is None:
            tot = ZERO
            for q in self.points:
                if _inside(q.key, ranges, self.level):
                    tot = _add(tot, q.weights)
            return tot
        return _add(self.left.aggregate(ranges), self.right.aggregate(ranges))

    def report(self, ranges: Sequence, out: list) -> None:
        if not self.size:
            return
        lo, hi = ranges[self.level]
        if (lo is not None and self.hi < lo) or (hi is not None and self.lo > hi):
            return
        if self.keys is not None:
            a = 0 if lo is None else bisect_left(self.keys, lo)
            b = len(self.keys) if hi is None else bisect_right(self.keys, hi)
            out.extend(q.handle for q in self.points[a:b])
            return
        covered = (lo is None or lo <= self.lo) and (hi is None or self.hi <= hi)
        if covered and self.assoc is not None:
            self.assoc.report(ranges, out)
            return
        if self.left is None:
            out.extend(q.handle for q in self.points if _inside(q.key, ranges, self.level))
            return
        self.left.report(ranges, out)
        self.right.report(ranges, out)


class _LogCollection:
    """Bentley–Saxe blocks of sizes 2^i over static range trees."""

    def __init__(self, dims: int):
        self.dims = dims
        self.blocks: list[Optional[RangeTree]] = []

    def __len__(self) -> int:
        return sum(b.size for b in self.blocks if b is not None)

    def add(self, p: Point) -> None:
        carry = [p]
        i = 0
        while True:
            if i == len(self.blocks):
                self.blocks.append(None)
            blk = self.blocks[i]
            if blk is None:
                self.blocks[i] = RangeTree(carry, self.dims)
                return
            carry = carry + blk.points
            self.blocks[i] = None
            i += 1

    def aggregate(self, ranges) -> tuple:
        tot = ZERO
        for b in self.blocks:
            if b is not None:
                tot = _add(tot, b.aggregate(ranges))
        return tot

    def report(self, ranges) -> list[int]:
        out: list[int] = []
        for b in self.blocks:
            if b is not None:
                b.report(ranges, out)
        return out

    def points(self) -> list[Point]:
        return [q for b in self.blocks if b is not None for q in b.points]


# ---------------------------------------------------------------- dynamic index


class DynamicIndex:
    """Orthogonal range counting / aggregation / reporting over items."""

    attributes: tuple[str, ...] = ()

    def __init__(self, items: Iterable[Item] = ()):
        self._dims = len(self.attributes)
        self._live = _LogCollection(self._dims)
        self._dead = _LogCollection(self._dims)
        self._dead_handles: set[int] = set()
        self._items: dict[str, tuple[int, Item]] = {}
        self._by_handle: dict[int, Item] = {}
        self._next = 0
        self._orders = {a: OrderTree() for a in self.attributes}
        items = list(items)
        if items:
            self._bulk(items)

    # -- attributes

    def key_of(self, item: Item) -> tuple:
        raise NotImplementedError

    def _point(self, item: Item, handle: int) -> Point:
        return Point(self.key_of(item), handle, (1, item.profit, item.w))

    # -- updates

    def _bulk(self, items: list[Item]) -> None:
        for it in items:
            if it.id in self._items:
                raise KeyError(f"duplicate item id {it.id!r}")
            h = self._next
            self._next += 1
            self._items[it.id] = (h, it)
            self._by_handle[h] = it
            for a, v in zip(self.attributes, self.key_of(it)):
                self._orders[a].insert((v, it.id))
        self._rebuild()

    def _rebuild(self) -> None:
        pts = [self._point(it, h) for h, it in self._items.values()]
        self._live = _LogCollection(self._dims)
        self._dead = _LogCollection(self._dims)
        self._dead_handles = set()
        self._by_handle = {h: it for h, it in self._items.values()}
        # lay the points out in binary-counter blocks directly
        pos = 0
        n = len(pts)
        i = 0
        while n >> i:
            self._live.blocks.append(None)
            i += 1
        for i in reversed(range(len(self._live.blocks))):
            if n >> i & 1:
                self._live.blocks[i] = RangeTree(pts[pos:pos + (1 << i)], self._dims)
                pos += 1 << i

    def insert(self, item: Item) -> None:
        if item.id in self._items:
            raise KeyError(f"duplicate item id {item.id!r}")
        h = self._next
        self._next += 1
        self._items[item.id] = (h, item)
        self._by_handle[h] = item
        self._live.add(self._point(item, h))
        for a, v in zip(self.attributes, self.key_of(item)):
            self._orders[a].insert((v, item.id))

    def delete(self, item_id: str) -> Item:
        if item_id not in self._items:
            raise KeyError(f"unknown item id {item_id!r}")
        h, item = self._items.pop(item_id)
        for a, v in zip(self.attributes, self.key_of(item)):
            self._orders[a].delete((v, item.id))
        self._dead.add(self._point(item, h))
        self._dead_handles.add(h)
        if len(self._dead_handles) > max(8, len(self._items) // 2):
            self._rebuild()
        return item

    # -- queries

    def __len__(self) -> int:
        return len(self._items)

    def __contains__(self, item_id: str) -> bool:
        return item_id in self._items

    def get(self, item_id: str) -> Item:
        return self._items[item_id][1]

    def items(self) -> list[Item]:
        return [it for _, it in self._items.values()]

    def _ranges(self, ranges: Optional[Ranges]) -> Optional[list]:
        ranges = ranges or {}
        out = []
        for a in self.attributes:
            lo, hi = ranges.get(a, (None, None))
            if lo is not None and hi is not None and lo > hi:
                return None
            out.append((lo, hi))
        unknown = set(ranges) - set(self.attributes)
        if unknown:
            raise KeyError(f"unknown attribute(s) {sorted(unknown)}")
        return out

    def aggregate(self, ranges: Optional[Ranges] = None) -> tuple[int, int, int]:
        """``(count, sum of profits, sum of widths)`` over the query box."""
        r = self._ranges(ranges)
        if r is None:
            return ZERO
        return _sub(self._live.aggregate(r), self._dead.aggregate(r))

    def count(self, ranges: Optional[Ranges] = None) -> int:
        return self.aggregate(ranges)[0]

    def sum_profit(self, ranges: Optional[Ranges] = None) -> int:
        return self.aggregate(ranges)[1]

    def sum_width(self, ranges: Optional[Ranges] = None) -> int:
        return self.aggregate(ranges)[2]

    def report(self, ranges: Optional[Ranges] = None) -> list[Item]:
        r = self._ranges(ranges)
        if r is None:
            return []
        return [self._by_handle[h] for h in self._live.report(r) if h not in self._dead_handles]

    def kth_smallest(self, attribute: str, k: int, ranges: Optional[Ranges] = None):
        """Value of the k-th smallest ``attribute`` among items in the query box (1-based)."""
        m = self.count(ranges)
        if not 1 <= k <= m:
            raise IndexError(f"k={k} out of range 1..{m}")
        tree = self._orders[attribute]
        base = dict(ranges or {})
        lo0, hi0 = base.get(attribute, (None, None))

        def enough(v) -> bool:
            hi = v if hi0 is None else min(v, hi0)
            base[attribute] = (lo0, hi)
            return self.count(base) >= k

        v = tree.binary_search_threshold(enough)
        assert v is not None
        return v

    def median(self, attribute: str, ranges: Optional[Ranges] = None):
        """Lower median of ``attribute`` over the query box."""
        m = self.count(ranges)
        if m == 0:
            raise IndexError("median of an empty set")
        return self.kth_smallest(attribute, (m + 1) // 2, ranges)

    def binary_search_threshold(self, attribute: str, predicate: Callable[[Any], bool],
                                ranges: Optional[Ranges] = None):
        """Least value among matching items' ``attribute`` with ``predicate`` true, else None.

        Uses O(log n) predicate calls; ``predicate`` must be monotone.
        """
        m = self.count(ranges)
        a, b, found = 1, m, None
        while a <= b:
            mid = (a + b) // 2
            v = self.kth_smallest(attribute, mid, ranges)
            if predicate(v):
                found, b = v, mid - 1
            else:
                a = mid + 1
        return found

    def distinct_values(self, attribute: str, ranges: Optional[Ranges] = None) -> list:
        """Sorted distinct values of ``attribute`` among items in the query box."""
        if not ranges:
            out = []
            for v, _ in self._orders[attribute]:
                if not out or out[-1] != v:
                    out.append(v)
            return out
        return sorted({self.key_of(it)[self.attributes.index(attribute)] for it in self.report(ranges)})


class ItemIndex2D(DynamicIndex):
    attributes = ("s", "p")

    def key_of(self, item: Item) -> tuple:
        return (item.min_side if not item.is_cube else item.s, item.profit)


class RectIndex4D(DynamicIndex):
    attributes = ("h", "w", "p", "density")

    def key_of(self, item: Item) -> tuple:
        return (item.h, item.w, item.profit, Fraction(item.profit, item.w))
