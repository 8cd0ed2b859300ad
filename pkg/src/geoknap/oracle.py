"""Exact optimum for tiny instances and the baseline packings every solver must beat."""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Optional, Sequence

from .core.types import Instance, Item, Mode, Packing, Placement
from .packers import Piece, nfdh_pack, volume


class LimitExceeded(RuntimeError):
    """The exact search hit one of its limits."""


class _Handoff(Exception):
    pass


@dataclass(frozen=True)
class Limits:
    max_items: int = 8
    max_nodes: int = 10_000_000
    coord_nodes: int = 20_000
    timeout: Optional[float] = None


@dataclass
class OracleResult:
    profit: int
    packing: Packing
    nodes: int


def _orientations(item: Item, d: int, rotations: bool) -> list[tuple[tuple[int, ...], bool]]:
    out = [(item.extents(d), False)]
    if rotations and not item.is_cube and item.h != item.w:
        out.append((item.extents(d, True), True))
    return out


def _subset_sums(values: Sequence[int], cap: int) -> list[int]:
    sums = {0}
    for v in values:
        sums |= {s + v for s in sums if s + v <= cap}
    return sorted(sums)


def _cliques_fit(L: tuple[int, ...], extents: list[tuple[int, ...]]) -> bool:
    """Boxes that must overlap on every axis but ``b`` share a point there, so
    they sit side by side along ``b``."""
    n = len(extents)
    for b in range(len(L)):
        adj = [0] * n
        for i in range(n):
            for j in range(i):
                if all(extents[i][a] + extents[j][a] > L[a] for a in range(len(L)) if a != b):
                    adj[i] |= 1 << j
                    adj[j] |= 1 << i

        def heaviest(cand: int) -> int:
            best = 0
            while cand:
                i = cand.bit_length() - 1
                cand &= ~(1 << i)
                best = max(best, extents[i][b] + heaviest(cand & adj[i]))
            return best

        if heaviest((1 << n) - 1) > L[b]:
            return False
    return True


class _Search:
    def __init__(self, instance: Instance, limits: Limits):
        self.inst = instance
        self.limits = limits
        self.nodes = 0
        self.deadline = None if limits.timeout is None else time.monotonic() + limits.timeout

    def tick(self) -> None:
        self.nodes += 1
        if self.nodes > self.limits.max_nodes:
            raise LimitExceeded(f"node limit {self.limits.max_nodes} exceeded")
        if self.deadline is not None and self.nodes % 1024 == 0 and time.monotonic() > self.deadline:
            raise LimitExceeded("timeout exceeded")

    def pack(self, subset: Sequence[Item]) -> Optional[list[Placement]]:
        """A placement of every item of ``subset`` or None."""
        d, N = self.inst.d, self.inst.N
        opts = [_orientations(it, d, self.inst.rotations) for it in subset]
        found = self._reduce((N,) * d, [(it, o) for it, o in zip(subset, opts)])
        return None if found is None else list(found)

    def _reduce(self, L: tuple[int, ...], entries: list) -> Optional[list[Placement]]:
        """Slabs span the box on every axis but one; they slide to the far end
        of that axis and leave a smaller box for the rest.
        """
        live = []
        for it, opts in entries:
            fit = [(e, r) for e, r in opts if all(x <= l for x, l in zip(e, L))]
            if not fit:
                return None
            live.append((it, fit))
        for k, (it, fit) in enumerate(live):
            axes = [[a for a in range(len(L)) if e[a] != L[a]] for e, _ in fit]
            if all(len(ax) <= 1 for ax in axes):
                rest = live[:k] + live[k + 1:]
                for (e, r), ax in zip(fit, axes):
                    b = ax[0] if ax else 0
                    self.tick()
                    origin = tuple(L[a] - e[a] if a == b else 0 for a in range(len(L)))
                    sub = self._reduce(tuple(L[a] - e[a] if a == b else L[a] for a in range(len(L))), rest)
                    if sub is not None:
                        return sub + [Placement(it.id, origin, r)]
                return None
        return self._base(L, live)

    def _base(self, L: tuple[int, ...], live: list) -> Optional[list[Placement]]:
        if not live:
            return []
        space = 1
        for x in L:
            space *= x
        if sum(volume(fit[0][0]) for _, fit in live) > space:
            return None
        for i in range(len(live)):
            for j in range(i):
                if not any(any(a + b <= l for a, b, l in zip(ei, ej, L))
                           for ei, _ in live[i][1] for ej, _ in live[j][1]):
                    return None
        try:
            return self._pack_coords(L, live, self.nodes + self.limits.coord_nodes)
        except _Handoff:
            pass
        if all(len(fit) == 1 for _, fit in live):
            return self._pack_cells(L, live) if _cliques_fit(L, [fit[0][0] for _, fit in live]) else None
        for choice in product(*[fit for _, fit in live]):
            self.tick()
            if _cliques_fit(L, [e for e, _ in choice]):
                found = self._reduce(L, [(it, [c]) for (it, _), c in zip(live, choice)])
                if found is not None:
                    return found
        return None

    def _pack_coords(self, L: tuple[int, ...], live: list, stop: int) -> Optional[list[Placement]]:
        """Normalized packings push every item towards the origin until it touches
        a wall or another item, so each coordinate is a sum of extents of other
        items along that axis; those sums are the candidate coordinates.
        """
        d, n = len(L), len(live)
        order = sorted(range(n), key=lambda k: (-volume(live[k][1][0][0]), live[k][0].id))
        cands = []
        for k in range(n):
            per_axis = []
            for a in range(d):
                # any one orientation per other item contributes to the sum
                sums = {0}
                for m in range(n):
                    if m != k:
                        choice = {e[a] for e, _ in live[m][1]}
                        sums |= {s + v for s in sums for v in choice if s + v <= L[a]}
                per_axis.append(sorted(sums))
            cands.append(per_axis)
        placed: list[tuple[tuple[int, ...], tuple[int, ...]]] = []
        result: list[Placement] = []

        def free(o, e) -> bool:
            for po, pe in placed:
                if all(a < b + eb and b < a + ea for a, ea, b, eb in zip(o, e, po, pe)):
                    return False
            return True

        def go(i: int) -> bool:
            if i == n:
                return True
            k = order[i]
            for e, r in live[k][1]:
                axes = [[x for x in cands[k][a] if x + e[a] <= L[a]] for a in range(d)]
                for o in product(*axes):
                    self.tick()
                    if self.nodes > stop:
                        raise _Handoff
                    if free(o, e):
                        placed.append((o, e))
                        result.append(Placement(live[k][0].id, tuple(o), r))
                        if go(i + 1):
                            return True
                        placed.pop()
                        result.pop()
            return False

        return list(result) if go(0) else None

    def _pack_cells(self, L: tuple[int, ...], live: list) -> Optional[list[Placement]]:
        """Fill cells in lexicographic order: the first empty cell is either the
        lowest corner of some item or stays empty for good. Empty cells are
        bounded by the free volume, and interchangeable items are tried once.
        """
        d = len(L)
        full = (1 << L[-1]) - 1
        stride = [1] * (d - 1)
        for a in range(d - 3, -1, -1):
            stride[a] = stride[a + 1] * L[a + 1]
        n_rows = 1
        for x in L[:-1]:
            n_rows *= x
        rows = [0] * n_rows
        budget = n_rows * L[-1] - sum(volume(fit[0][0]) for _, fit in live)
        groups: dict[tuple, list[int]] = {}
        for k, (_, fit) in enumerate(live):
            groups.setdefault(tuple(sorted(e for e, _ in fit)), []).append(k)
        shapes = []
        for members in groups.values():
            variants = []
            for e, _ in live[members[0]][1]:
                offs = [0]
                for a in range(d - 1):
                    offs = [b + j * stride[a] for b in offs for j in range(e[a])]
                variants.append((e, offs, (1 << e[-1]) - 1))
            shapes.append((members, variants))
        left = [len(m) for m, _ in shapes]
        result: list[Placement] = []

        def coords(r: int) -> list[int]:
            out = []
            for s in stride:
                out.append(r // s)
                r %= s
            return out

        def go(r: int, waste: int) -> bool:
            if len(result) == len(live):
                return True
            wasted = []
            found = False
            while not found:
                while r < n_rows and rows[r] == full:
                    r += 1
                if r == n_rows:
                    break
                row = rows[r]
                x = (~row & (row + 1)).bit_length() - 1
                c = coords(r) + [x]
                for g, (members, variants) in enumerate(shapes):
                    if not left[g]:
                        continue
                    for e, offs, base in variants:
                        self.tick()
                        if any(ca + ea > la for ca, ea, la in zip(c, e, L)):
                            continue
                        mask = base << x
                        if any(rows[r + o] & mask for o in offs):
                            continue
                        for o in offs:
                            rows[r + o] |= mask
                        left[g] -= 1
                        it, fit = live[members[left[g]]]
                        result.append(Placement(it.id, tuple(c), dict(fit)[e]))
                        found = go(r, waste)
                        if found:
                            break
                        result.pop()
                        left[g] += 1
                        for o in offs:
                            rows[r + o] &= ~mask
                    if found:
                        break
                if found or waste == budget:
                    break
                waste += 1
                rows[r] |= 1 << x
                wasted.append((r, x))
            for wr, wx in wasted:
                rows[wr] &= ~(1 << wx)
            return found

        return list(result) if go(0, 0) else None


def exact_opt(instance: Instance, limits: Limits = Limits()) -> OracleResult:
    """Maximum-profit feasible packing by exhaustive search over subsets and placements.

    Subsets are tried in order of decreasing profit; supersets of a subset that
    could not be packed are skipped, as are subsets whose volume exceeds the knapsack.
    """
    items = [it for it in instance.items if instance.fits(it)]
    if len(items) > limits.max_items:
        raise LimitExceeded(f"{len(items)} items exceed max_items={limits.max_items}")
    d, N = instance.d, instance.N
    cap = N ** d
    search = _Search(instance, limits)
    n = len(items)
    masks = sorted(range(1 << n), key=lambda m: (-sum(items[i].profit for i in range(n) if m >> i & 1),
                                                  bin(m).count("1"), m))
    bad: list[int] = []
    for m in masks:
        sub = [items[i] for i in range(n) if m >> i & 1]
        if sum(it.volume(d) for it in sub) > cap:
            continue
        if any(b & m == b for b in bad):
            continue
        pl = search.pack(sub)
        if pl is None:
            bad.append(m)
            continue
        pk = Packing(N, d, tuple(sorted(pl, key=lambda p: p.id)))
        return OracleResult(sum(it.profit for it in sub), pk, search.nodes)
    return OracleResult(0, Packing(N, d, ()), search.nodes)


def brute_force_opt(instance: Instance) -> int:
    """Every subset, every integer position: a second, slower oracle for n <= 4, N <= 6."""
    items = [it for it in instance.items if instance.fits(it)]
    d, N = instance.d, instance.N
    best = 0

    def go(i: int, placed: list, profit: int) -> None:
        nonlocal best
        best = max(best, profit)
        if i == len(items):
            return
        go(i + 1, placed, profit)
        for e, _ in _orientations(items[i], d, instance.rotations):
            for o in product(*[range(N - x + 1) for x in e]):
                if all(not all(a < b + eb and b < a + ea for a, ea, b, eb in zip(o, e, po, pe))
                       for po, pe in placed):
                    go(i + 1, placed + [(o, e)], profit + items[i].profit)

    go(0, [], 0)
    return best


# ---------------------------------------------------------------- baselines


def _flat_piece(item: Item, instance: Instance) -> Piece:
    """Rectangles lie on their long side when rotations are allowed."""
    rot = instance.rotations and item.h > item.w
    return Piece(item.id, item.extents(instance.d, rot), rot)


def _fits_piece(item: Item, instance: Instance) -> Optional[Piece]:
    for e, r in _orientations(item, instance.d, instance.rotations):
        if all(x <= instance.N for x in e):
            return Piece(item.id, e, r)
    return None


def baseline_single(instance: Instance) -> Packing:
    """The most profitable item that fits, at the origin."""
    best = None
    for it in instance.items:
        p = _fits_piece(it, instance)
        if p is not None and (best is None or (it.profit, best[0].id) > (best[0].profit, it.id)):
            best = (it, p)
    if best is None:
        return Packing(instance.N, instance.d, ())
    it, p = best
    return Packing(instance.N, instance.d, (Placement(it.id, (0,) * instance.d, p.rotated),))


def baseline_nfdh(instance: Instance, eps: Fraction = Fraction(1)) -> Packing:
    """NFDH over the longest packable prefix in order of profit per volume.

    Prefix lengths are found by doubling and then bisection, so only O(log n)
    NFDH runs are needed; the returned packing is always a complete NFDH
    packing of the prefix it reports.
    """
    d, N = instance.d, instance.N
    cands = []
    for it in instance.items:
        if not instance.fits(it):
            continue
        p = _flat_piece(it, instance)
        if any(x > N for x in p.extents):
            p = _fits_piece(it, instance)
        cands.append((it, p))
    cands.sort(key=lambda c: (-Fraction(c[0].profit, volume(c[1].extents)), c[0].id))
    box = (N,) * d

    def attempt(k: int):
        frag = nfdh_pack(box, [p for _, p in cands[:k]])
        return frag if frag.ok else None

    best_k, best = 0, None
    hi = 1
    while hi <= len(cands):
        f = attempt(hi)
        if f is None:
            break
        best_k, best = hi, f
        hi *= 2
    lo, hi = best_k + 1, min(hi, len(cands) + 1) - 1
    while lo <= hi:
        mid = (lo + hi) // 2
        f = attempt(mid)
        if f is None:
            hi = mid - 1
        else:
            best_k, best = mid, f
            lo = mid + 1
    if best is None:
        return Packing(N, d, ())
    return Packing(N, d, tuple(best.placements))


def baseline_profit(instance: Instance, packing: Packing) -> int:
    return packing.profit(instance)
