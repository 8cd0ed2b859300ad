"""Rectangle knapsack, with and without 90 degree rotations.

A configuration stacks full-width strips: L strips hold one large item, H
strips stack horizontal items, V strips put tall items side by side and S
strips hold small items packed by NFDH.  L and H strips sharing a label take
items from one width window ``(k_prev, k]``; the windows are found by
indirect guessing over item widths, the same way the cube solver finds size
thresholds.  V and S strips are filled by transport LPs.

With rotations every item is first turned to lie flat (``w >= h``).  V strips
are then filled through a density threshold, a special full-width box may
take the height left over by the strips, and the best packing of at most
three items is always a candidate.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from math import ceil, floor
from typing import Iterator, Optional, Sequence

from .config import SolverConfig
from .core.membership import MembershipError, selected_by_box, selected_ids
from .core.rounding import PowerGrid, grid_for, parse_eps
from .core.types import (Cell, HBox, ImplicitSolution, Instance, Item, LBox, Mode, Packing,
                         PlacedBox, Placement, SBox, VBox, enumerate_eps_pairs)
from .core.verify import verify_packing
from .cube_solver import (BudgetSpent, Envelope, IndirectState, RoundResult, SolveResult,
                          explicit_solution, profit_grid, search_targets)
from .index import RectIndex4D
from .oracle import baseline_nfdh, baseline_single
from .packers import PackerError, Piece, hstack_pack, nfdh_pack, single_pack, vstack_pack
from .smalllp import TransportLP, greedy_complete, guess_and_solve


# ---------------------------------------------------------------- preprocessing


@dataclass
class RectView:
    """Packable items after dropping negligible profits; lying flat in rotation mode."""

    instance: Instance
    eps: Fraction
    items: tuple[Item, ...]
    p_max: int
    flipped: frozenset = frozenset()  # ids whose flat orientation is the input one rotated
    dropped: tuple[Item, ...] = ()

    @property
    def n(self) -> int:
        return len(self.items)

    @property
    def rotations(self) -> bool:
        return self.instance.rotations


def lay_flat(item: Item) -> Item:
    return item.rotated() if item.h > item.w else item


def preprocess_rect(instance: Instance, eps) -> RectView:
    eps = parse_eps(eps)
    items = [it for it in instance.items if instance.fits(it)]
    flipped = set()
    if instance.rotations:
        flipped = {it.id for it in items if it.h > it.w}
        items = [lay_flat(it) for it in items]
    if not items:
        return RectView(instance, eps, (), 0, frozenset(flipped))
    p_max = max(it.profit for it in items)
    cut = eps * p_max / len(items)
    keep = tuple(it for it in items if it.profit >= cut)
    drop = tuple(it for it in items if it.profit < cut)
    return RectView(instance, eps, keep, p_max, frozenset(flipped), drop)


# ---------------------------------------------------------------- configurations


@dataclass(frozen=True)
class Strip:
    kind: str          # "L", "H", "V" or "S"
    alpha: Fraction    # height as a share of the knapsack side
    label: int = 0     # width window for L/H strips


@dataclass(frozen=True)
class RectLayout:
    strips: tuple[Strip, ...]
    special: bool = False  # a full-width box takes the leftover height

    @property
    def r(self) -> int:
        return max((s.label for s in self.strips), default=0)

    @property
    def n_vertical(self) -> int:
        return sum(s.kind == "V" for s in self.strips)


@dataclass(frozen=True)
class RectConfiguration:
    layout: RectLayout
    phat: tuple[Fraction, ...]        # profit target per width window
    vhat: tuple[Fraction, ...] = ()   # rotation mode: profit target per V strip
    pair: tuple[Fraction, Fraction] = (Fraction(0), Fraction(0))

    @property
    def r(self) -> int:
        return len(self.phat)

    @property
    def strips(self) -> tuple[Strip, ...]:
        return self.layout.strips


def height_grid(eps: Fraction, cfg: SolverConfig, eps_small: Fraction) -> list[Fraction]:
    """Strip heights ``{i eps / (2K)}`` without values below ``eps * eps_small``.

    Returned in promise order: small denominators first, then larger values.
    """
    k = cfg.u_grid_k or cfg.box_cap
    step = eps / (2 * k)
    vals = [step * i for i in range(1, int(1 / step) + 1)]
    vals = [v for v in vals if v >= eps * eps_small]
    return sorted(vals, key=lambda v: (v.denominator, -v))


TEMPLATES: tuple[tuple[str, ...], ...] = (
    ("H",), ("S",), ("V",),
    ("L", "H"), ("H", "V"), ("H", "S"), ("V", "S"), ("L", "S"), ("L", "V"), ("H", "H"), ("L", "L"),
    ("L", "H", "V"), ("L", "H", "S"), ("H", "V", "S"), ("L", "L", "S"), ("L", "L", "H"),
)
SPECIAL_TEMPLATES: tuple[tuple[str, ...], ...] = (("H",), ("S",), ("V",), ("H", "S"), ("L", "H"))


def _labels(kinds: Sequence[str]) -> list[int]:
    """L and H strips share label 1, except that a second H strip opens label 2."""
    out, h_seen = [], 0
    for k in kinds:
        if k == "H":
            h_seen += 1
            out.append(h_seen)
        elif k == "L":
            out.append(1)
        else:
            out.append(0)
    return out


def rect_layouts(alphas: list[Fraction], cats: set[str], box_cap: int, rotations: bool
                 ) -> Iterator[RectLayout]:
    """Layouts in promise order, lazily: coarse heights first, then the template order.

    A layout's level is the largest rank (position in ``alphas``) among its
    freely chosen heights; the last strip of a non-special layout takes
    whatever height remains.
    """
    need = {"L": "large", "H": "horizontal", "S": "small", "V": "tall" if rotations else "vertical"}
    groups = [(t, False) for t in TEMPLATES]
    if rotations:
        groups += [(t, True) for t in SPECIAL_TEMPLATES]
    groups = [(k, sp) for k, sp in groups
              if len(k) + sp <= box_cap and all(need[x] in cats for x in k)]
    for level in range(len(alphas)):
        for kinds, special in groups:
            labels = _labels(kinds)
            free = len(kinds) if special else len(kinds) - 1
            if free == 0:
                if level == 0:
                    yield RectLayout(tuple(Strip(k, Fraction(1), lab) for k, lab in zip(kinds, labels)))
                continue
            for ranks in product(range(level + 1), repeat=free):
                if max(ranks) != level:
                    continue
                tup = tuple(alphas[r] for r in ranks)
                total = sum(tup, Fraction(0))
                if total >= 1:
                    continue
                hs = tup if special else tup + (1 - total,)
                yield RectLayout(tuple(Strip(k, a, lab) for k, a, lab in zip(kinds, hs, labels)), special)


# ---------------------------------------------------------------- context


class RectContext:
    """Index, class lists and category bounds for one ``(eps_large, eps_small)`` pair."""

    def __init__(self, view: RectView, pair: tuple[Fraction, Fraction], cfg: SolverConfig,
                 index: Optional[RectIndex4D] = None):
        self.view = view
        self.cfg = cfg
        self.eps = view.eps
        self.el, self.es = pair
        N = self.N = view.instance.N
        self.grid: PowerGrid = grid_for(view.eps)
        self.index = index if index is not None else RectIndex4D(view.items)
        n = max(1, view.n)
        self.p_cut = ceil(view.eps * view.p_max / view.n) if view.n else 0
        self.l_floor = floor(self.el * N)        # x > el N  <=>  x >= l_floor + 1
        self.s_floor = floor(self.es * N)        # x <= es N <=>  x <= s_floor
        self.s_strict = ceil(self.es * N) - 1    # x < es N  <=>  x <= s_strict
        self.tiny_h = min(ceil(self.el * N / n) - 1, self.s_floor)
        g = self.grid
        self.classes: dict[str, set] = {}
        for it in view.items:
            if it.profit <= 0:
                continue
            cat = self.category(it)
            self.classes.setdefault(cat, set()).add((g.class_of(it.h), g.class_of(it.w),
                                                     g.class_of(it.profit)))
        self.evaluations = 0

    def category(self, it: Item) -> str:
        h, w, lf = it.h, it.w, self.l_floor
        if h > lf and w > lf:
            return "large"
        if w > lf and h <= self.s_floor:
            return "horizontal"
        if h > lf and w <= self.s_floor:
            return "vertical"
        if h <= self.s_strict and w <= self.s_strict:
            return "small"
        return "intermediate"

    def categories(self) -> set[str]:
        cats = set(self.classes)
        if cats & {"large", "horizontal"}:
            cats.add("tall")
        return cats

    def cat_bounds(self, cat: Optional[str]) -> dict:
        N, lf = self.N, self.l_floor
        return {
            None: {"h": (1, N), "w": (1, N)},
            "large": {"h": (lf + 1, N), "w": (lf + 1, N)},
            "horizontal": {"h": (1, self.s_floor), "w": (lf + 1, N)},
            "vertical": {"h": (lf + 1, N), "w": (1, self.s_floor)},
            "small": {"h": (1, self.s_strict), "w": (1, self.s_strict)},
        }[cat]

    def ranges(self, cat: Optional[str] = None, **extra) -> dict:
        """Query box for a category intersected with ``extra`` bounds; profits clipped at the cut."""
        out = dict(self.cat_bounds(cat))
        out["p"] = (self.p_cut, None)
        for name, (lo, hi) in extra.items():
            if name in out:
                a, b = out[name]
                lo = a if lo is None else (lo if a is None else max(a, lo))
                hi = b if hi is None else (hi if b is None else min(b, hi))
            out[name] = (lo, hi)
        return out

    def bounds(self, t: int) -> tuple[int, int]:
        return ceil(self.grid.power(t)), self.grid.int_hi(t)

    def hp_classes(self, cat: str) -> list[tuple[int, int]]:
        return sorted({(th, tp) for th, _, tp in self.classes.get(cat, ())})

    def wp_classes(self, cat: str) -> list[tuple[int, int]]:
        return sorted({(tw, tp) for _, tw, tp in self.classes.get(cat, ())})

    def strip_heights(self, layout: RectLayout) -> tuple[list[int], int]:
        hs = [floor(s.alpha * self.N) for s in layout.strips]
        return hs, self.N - sum(hs)


# ---------------------------------------------------------------- width windows: IP(w)


@dataclass
class RectIPEval:
    s: int                      # the evaluated width
    q: Fraction
    raw: Fraction
    x: dict
    lp: Optional[TransportLP]
    classes: list               # (category, height class, profit class, h_lo, h_hi)
    boxes: list                 # strip indices
    tiny: Optional[tuple]       # (strip index, count, profit, reserve)
    source_s: int
    w_lo: int = 0


def eval_ip_rect(w: int, label: int, config: RectConfiguration, ctx: RectContext, k_prev: int,
                 heights: Sequence[int]) -> RectIPEval:
    """Approximate IP(w) for one window: L/H strips of ``label`` and items of width in ``(k_prev, w]``.

    H rows: stacked heights (upper end of each height class) within the strip
    height.  L rows: one item whose height fits.  Horizontal items lower than
    ``el N / n`` are folded into the tallest H strip with a reserved height.
    """
    ctx.evaluations += 1
    g = ctx.grid
    boxes = [i for i, st in enumerate(config.strips) if st.kind in ("L", "H") and st.label == label]
    kinds = {config.strips[i].kind for i in boxes}
    w_lo = max(k_prev, ctx.l_floor) + 1
    wr = (w_lo, w)
    caps = [Fraction(heights[i]) if config.strips[i].kind == "H" else Fraction(1) for i in boxes]
    tiny = None
    h_floor = 1
    hs = [b for b, i in enumerate(boxes) if config.strips[i].kind == "H"]
    if hs and ctx.tiny_h >= 1 and w >= w_lo:
        bt = max(hs, key=lambda b: (caps[b], -b))
        c, p, _ = ctx.index.aggregate(ctx.ranges("horizontal", h=(1, ctx.tiny_h), w=wr))
        reserve = c * ctx.tiny_h
        if c and reserve <= caps[bt]:
            caps[bt] -= reserve
            tiny = (boxes[bt], c, p, reserve)
            h_floor = ctx.tiny_h + 1
    classes, counts, profits = [], [], []
    if w >= w_lo:
        for cat, kind in (("large", "L"), ("horizontal", "H")):
            if kind not in kinds:
                continue
            cb = ctx.cat_bounds(cat)["h"]
            for th, tp in ctx.hp_classes(cat):
                a, b = ctx.bounds(th)
                lo, hi = max(a, cb[0], h_floor if cat == "horizontal" else 1), min(b, cb[1])
                if lo > hi:
                    continue
                c = ctx.index.count(ctx.ranges(cat, h=(lo, hi), w=wr, p=ctx.bounds(tp)))
                if c:
                    classes.append((cat, th, tp, lo, hi))
                    counts.append(c)
                    profits.append(Fraction(g.int_hi(tp)))
    weights = {}
    for c, (cat, _, _, _, hi) in enumerate(classes):
        for b, i in enumerate(boxes):
            st = config.strips[i]
            if cat == "horizontal" and st.kind == "H":
                weights[(c, b)] = Fraction(hi)
            elif cat == "large" and st.kind == "L" and hi <= heights[i]:
                weights[(c, b)] = Fraction(1)
    lp = TransportLP(profits, counts, caps, weights, classes, boxes)
    x = {}
    if weights:
        res = guess_and_solve(lp, min(ctx.cfg.top_k_cap, len(weights)), ctx.cfg.guess_budget)
        x = greedy_complete(lp, res.x)
    value = lp.objective(x) + (tiny[2] if tiny else 0)
    return RectIPEval(w, value, value, x, lp, classes, boxes, tiny, w, w_lo)


def indirect_guess_rect(config: RectConfiguration, ctx: RectContext, heights: Sequence[int],
                        cache: Optional[dict] = None) -> IndirectState:
    """Width windows round by round; reject if a profit target is out of reach."""
    state = IndirectState()
    eps = ctx.eps
    for ell in range(config.r):
        label = ell + 1
        k_prev = state.thresholds[-1]
        if config.phat[ell] <= 0:
            state.thresholds.append(k_prev)
            state.rounds.append(RoundResult(label, k_prev, None))
            state.trace.append([])
            continue
        target = (1 - eps) * config.phat[ell]
        env = Envelope()
        rng = ctx.ranges(None, w=(max(k_prev, ctx.l_floor) + 1, None))
        shape = tuple((config.strips[i].kind, heights[i]) for i, st in enumerate(config.strips)
                      if st.kind in ("L", "H") and st.label == label)
        key0 = (label, k_prev, shape)

        def q(w: int) -> bool:
            key = key0 + (w,)
            if cache is not None and key in cache:
                ev = cache[key]
            else:
                ev = eval_ip_rect(w, label, config, ctx, k_prev, heights)
                if cache is not None:
                    cache[key] = ev
            return env.add(ev).q >= target

        def close() -> None:
            state.trace.append([(s, e.raw, e.q) for s, e in sorted(env.evals.items())])

        m = ctx.index.count(rng)
        if not m:
            state.rejected = f"round {label}: no items left"
            close()
            return state
        w_max = ctx.index.kth_smallest("w", m, rng)
        if not q(w_max):
            state.rejected = f"round {label}: target unreachable"
            close()
            return state
        k = ctx.index.binary_search_threshold("w", q, rng)
        assert k is not None
        state.thresholds.append(k)
        state.rounds.append(RoundResult(label, k, env.evals[k]))
        close()
    return state


# ---------------------------------------------------------------- V strips


@dataclass
class LPFill:
    """Integral transport solution for a group of strips."""

    x: dict
    classes: list      # (cell ranges, profit class, count)
    boxes: list        # strip indices
    value: Fraction
    exact: list = field(default_factory=list)  # (cell ranges, strip index, count, profit): taken whole


def _solve_fill(ctx: RectContext, classes, counts, profits, caps, weights, boxes) -> dict:
    lp = TransportLP(profits, counts, caps, weights, classes, boxes)
    if not weights:
        return {}
    res = guess_and_solve(lp, min(ctx.cfg.top_k_cap, len(weights)), ctx.cfg.guess_budget)
    return greedy_complete(lp, res.x)


def pack_vertical(ctx: RectContext, vboxes: Sequence[tuple[int, int, int]]) -> LPFill:
    """Vertical items for V strips given as ``(strip, width, height)``.

    Items are banded by the distinct strip heights, so a band fits every strip
    at least as tall as its upper end; widths are charged at the upper end of
    their class against ``(1 - eps)`` of the strip width.
    """
    g, eps = ctx.grid, ctx.eps
    if not vboxes:
        return LPFill({}, [], [], Fraction(0))
    tops = sorted({h for _, _, h in vboxes})
    bands, prev = [], ctx.l_floor
    for h in tops:
        if h > prev:
            bands.append((prev + 1, h))
            prev = h
    cb = ctx.cat_bounds("vertical")["w"]
    classes, counts, profits = [], [], []
    for lo_h, hi_h in bands:
        for tw, tp in ctx.wp_classes("vertical"):
            a, b = ctx.bounds(tw)
            lo, hi = max(a, cb[0]), min(b, cb[1])
            if lo > hi:
                continue
            rng = {"h": (lo_h, hi_h), "w": (lo, hi), "p": ctx.bounds(tp)}
            c = ctx.index.count(ctx.ranges("vertical", **rng))
            if c:
                classes.append((rng, tp, c))
                counts.append(c)
                profits.append(Fraction(g.int_hi(tp)))
    caps = [(1 - eps) * w for _, w, _ in vboxes]
    weights = {}
    for c, (rng, _, _) in enumerate(classes):
        for b, (_, _, h) in enumerate(vboxes):
            if rng["h"][1] <= h:
                weights[(c, b)] = Fraction(rng["w"][1])
    x = _solve_fill(ctx, classes, counts, profits, caps, weights, [s for s, _, _ in vboxes])
    value = sum((profits[c] * z for (c, _), z in x.items()), Fraction(0))
    return LPFill(x, classes, [s for s, _, _ in vboxes], value)


@dataclass(frozen=True)
class DensityThreshold:
    d_star: Fraction
    interval: int
    w_star: int


@dataclass
class DensitySplit:
    threshold: DensityThreshold
    widths: list[Fraction]             # guessed width per box, on the (eps/ell) w* grid
    cutoffs: list[Optional[int]]       # least profit per box; profits of box i lie in [cut_i, cut_{i-1})
    selected: list[tuple[int, int]]    # (count, profit) per box


def density_split(index, ranges: dict, phat: Fraction, eps: Fraction, box_widths: Sequence[int],
                  interval: int = 1) -> Optional[DensitySplit]:
    """Densest items first until the target profit is reached, then cut into boxes by profit.

    ``d*`` is the largest density such that the items in ``ranges`` with
    density at least ``d*`` reach ``phat``; ``w*`` is their total width.
    Every box width is rounded down to the ``(eps / ell) w*`` grid, and box
    ``i`` takes the items of profit in ``[p_i, p_{i-1})`` where ``p_i`` is the
    least profit keeping their total width within the rounded box width.
    Returns None when ``phat`` is out of reach.
    """
    phat = Fraction(phat)
    base = dict(ranges)
    if index.sum_profit(base) < phat or index.count(base) == 0:
        return None
    dens = index.distinct_values("density", base)
    lo, hi, best = 0, len(dens) - 1, None
    while lo <= hi:     # largest density with enough profit above it
        mid = (lo + hi) // 2
        if index.sum_profit({**base, "density": (dens[mid], None)}) >= phat:
            best, lo = mid, mid + 1
        else:
            hi = mid - 1
    assert best is not None
    d_star = dens[best]
    sel = {**base, "density": (d_star, None)}
    w_star = index.sum_width(sel)
    ell = max(1, len(box_widths))
    unit = eps / ell * w_star
    widths = [floor(Fraction(bw) / unit) * unit if unit > 0 else Fraction(0) for bw in box_widths]
    cutoffs: list[Optional[int]] = []
    selected = []
    prev = None  # exclusive upper bound on profits still available
    for wb in widths:
        rng = {**sel, "p": (sel.get("p", (None, None))[0], None if prev is None else prev - 1)}
        profs = index.distinct_values("p", rng) if index.count(rng) else []
        a, b, cut = 0, len(profs) - 1, None
        while a <= b:   # least profit whose band fits the box
            mid = (a + b) // 2
            if index.sum_width({**rng, "p": (profs[mid], rng["p"][1])}) <= wb:
                cut, b = profs[mid], mid - 1
            else:
                a = mid + 1
        cutoffs.append(cut)
        if cut is None:
            selected.append((0, 0))
            continue
        c, p, _ = index.aggregate({**rng, "p": (cut, rng["p"][1])})
        selected.append((c, p))
        prev = cut
    return DensitySplit(DensityThreshold(d_star, interval, w_star), widths, cutoffs, selected)


def density_split_oracle(items: Sequence[Item], phat: Fraction, eps: Fraction,
                         box_widths: Sequence[int]) -> Optional[tuple]:
    """Sort-and-scan reference for :func:`density_split` on an explicit item list."""
    phat = Fraction(phat)
    if not items or sum(it.profit for it in items) < phat:
        return None
    order = sorted(items, key=lambda it: (-it.density, it.id))
    acc, d_star = 0, None
    for it in order:
        acc += it.profit
        if acc >= phat:
            d_star = it.density
            break
    chosen = [it for it in items if it.density >= d_star]
    w_star = sum(it.w for it in chosen)
    ell = max(1, len(box_widths))
    unit = eps / ell * w_star
    widths = [floor(Fraction(bw) / unit) * unit if unit > 0 else Fraction(0) for bw in box_widths]
    cutoffs = []
    prev = None
    for wb in widths:
        pool = [it for it in chosen if prev is None or it.profit < prev]
        cut = None
        for p in sorted({it.profit for it in pool}):
            if sum(it.w for it in pool if it.profit >= p) <= wb:
                cut = p
                break
        cutoffs.append(cut)
        if cut is not None:
            prev = cut
    return d_star, w_star, widths, cutoffs


# ---------------------------------------------------------------- S strips


def _s_admits(hh: int, wh: int, W: int, H: int, eps: Fraction, rotations: bool) -> Optional[bool]:
    """Orientation that passes the small-item filter in a ``W x H`` box: False upright, True turned."""
    if hh <= eps * H and wh <= eps * W:
        return False
    if rotations and wh <= eps * H and hh <= eps * W:
        return True
    return None


def pack_small(ctx: RectContext, sboxes: Sequence[tuple[int, int, int]]) -> LPFill:
    """Small items for S strips ``(strip, width, height)`` under an area budget.

    A class is admitted to a box if its (rounded up) item fits in an ``eps``
    fraction of the box along both axes, in either orientation when rotations
    are allowed; the area budget ``(1 - 2 eps) W H`` then guarantees NFDH
    succeeds.  Classes small enough that all of them together take at most an
    ``eps`` share of the largest box are taken whole.
    """
    g, eps = ctx.grid, ctx.eps
    rot = ctx.view.rotations
    if not sboxes:
        return LPFill({}, [], [], Fraction(0))
    cb = ctx.cat_bounds("small")
    n = max(1, ctx.view.n)
    caps = [(1 - 2 * eps) * W * H for _, W, H in sboxes]
    big = max(range(len(sboxes)), key=lambda b: (caps[b], -b))
    _, Wb, Hb = sboxes[big]
    classes, counts, profits, exact = [], [], [], []
    reserve = Fraction(0)
    for th, tw, tp in sorted(ctx.classes.get("small", ())):
        a, b = ctx.bounds(th)
        hl, hh = max(a, cb["h"][0]), min(b, cb["h"][1])
        a, b = ctx.bounds(tw)
        wl, wh = max(a, cb["w"][0]), min(b, cb["w"][1])
        if hl > hh or wl > wh:
            continue
        rng = {"h": (hl, hh), "w": (wl, wh), "p": ctx.bounds(tp)}
        c, p, _ = ctx.index.aggregate(ctx.ranges("small", **rng))
        if not c:
            continue
        area = hh * wh
        if area * n <= eps * caps[big] and _s_admits(hh, wh, Wb, Hb, eps, rot) is not None \
                and reserve + c * area <= eps * caps[big]:
            reserve += c * area
            exact.append((rng, sboxes[big][0], c, p))
            continue
        classes.append((rng, tp, c))
        counts.append(c)
        profits.append(Fraction(g.int_hi(tp)))
    caps[big] -= reserve
    weights = {}
    for c, (rng, _, _) in enumerate(classes):
        for b, (_, W, H) in enumerate(sboxes):
            if _s_admits(rng["h"][1], rng["w"][1], W, H, eps, rot) is not None:
                weights[(c, b)] = Fraction(rng["h"][1] * rng["w"][1])
    x = _solve_fill(ctx, classes, counts, profits, caps, weights, [s for s, _, _ in sboxes])
    value = sum((profits[c] * z for (c, _), z in x.items()), Fraction(0))
    value += sum(p for *_, p in exact)
    return LPFill(x, classes, [s for s, _, _ in sboxes], value, exact)


# ---------------------------------------------------------------- assembly


class AssemblyError(ValueError):
    pass


def _cell(rng: dict, label: str, extra: tuple = ()) -> Cell:
    order = ("w", "h", "p", "density")
    ranges = tuple((k, rng[k][0], rng[k][1]) for k in order if k in rng) + extra
    return Cell(ranges, (), "profit", label)


@dataclass
class RectRun:
    config: RectConfiguration
    state: IndirectState
    heights: list[int]
    vertical: Optional[LPFill] = None
    splits: list = field(default_factory=list)   # (strip index, ranges, DensitySplit)
    small: Optional[LPFill] = None


def fill_strips(config: RectConfiguration, ctx: RectContext, cache: Optional[dict] = None
                ) -> RectRun:
    """Width windows, then V strips, then S strips; ``state.rejected`` is set on failure."""
    heights, _ = ctx.strip_heights(config.layout)
    state = indirect_guess_rect(config, ctx, heights, cache)
    run = RectRun(config, state, heights)
    if not state.complete:
        return run
    N = ctx.N
    v_idx = [i for i, s in enumerate(config.strips) if s.kind == "V"]
    if v_idx and ctx.view.rotations:
        # tall strips in rotation mode take flat items wider than every window, densest first
        w_lo = max(state.thresholds[-1], ctx.l_floor) + 1
        prev_h = 0
        for j, i in enumerate(sorted(v_idx, key=lambda i: (heights[i], i))):
            target = config.vhat[v_idx.index(i)] if config.vhat else Fraction(0)
            band = (prev_h + 1, heights[i])
            prev_h = max(prev_h, heights[i])
            if target <= 0 or band[0] > band[1]:
                continue
            rng = ctx.ranges(None, w=(w_lo, None), h=band)
            split = density_split(ctx.index, rng, (1 - ctx.eps) * target, ctx.eps, [N], j + 1)
            if split is None:
                state.rejected = f"tall strip {i}: target unreachable"
                return run
            run.splits.append((i, rng, split))
    elif v_idx:
        run.vertical = pack_vertical(ctx, [(i, N, heights[i]) for i in v_idx])
    s_idx = [i for i, s in enumerate(config.strips) if s.kind == "S"]
    if s_idx:
        run.small = pack_small(ctx, [(i, N, heights[i]) for i in s_idx])
    return run


def assemble_rect(run: RectRun, ctx: RectContext) -> ImplicitSolution:
    """Boxes stacked bottom to top and one cell per selected class."""
    config, state, heights = run.config, run.state, run.heights
    if not state.complete:
        raise AssemblyError(state.rejected)
    g = ctx.grid
    boxes: list[PlacedBox] = []
    gid: dict[int, int] = {}
    y = 0
    for i, st in enumerate(config.strips):
        h = heights[i]
        if h <= 0:
            continue
        if st.kind in ("L", "H"):
            k = state.thresholds[st.label]
            k_prev = state.thresholds[st.label - 1]
            if config.phat[st.label - 1] <= 0 or k <= 0:
                y += h
                continue
            box = LBox(st.label, h, k) if st.kind == "L" else \
                HBox(st.label, h, k, max(k_prev, ctx.l_floor) + 1, k)
        elif st.kind == "V":
            box = VBox(i, h, ctx.N)
        else:
            box = SBox((ctx.N, h))
        gid[i] = len(boxes)
        boxes.append(PlacedBox(box, (0, y)))
        y += h
    if y > ctx.N:
        raise AssemblyError("strips exceed the knapsack")
    cells: list[Cell] = []
    rows: list[tuple[int, ...]] = []
    est = 0

    def add(cell: Cell, strip: int, z: int) -> None:
        row = [0] * len(boxes)
        row[gid[strip]] = z
        cells.append(cell)
        rows.append(tuple(row))

    for rr in state.rounds:
        ev = rr.evaluation
        if ev is None:
            continue
        per_class: dict[int, list[int]] = {}
        for (c, b), z in ev.x.items():
            if z:
                per_class.setdefault(c, [0] * len(boxes))[gid[ev.boxes[b]]] += z
        for c in sorted(per_class):
            cat, th, tp, lo, hi = ev.classes[c]
            pa, pb = ctx.bounds(tp)
            rng = ctx.ranges(cat, w=(ev.w_lo, ev.source_s), h=(lo, hi), p=(pa, pb))
            z = sum(per_class[c])
            if z > ctx.index.count(rng):
                raise AssemblyError("cell count exceeds its population")
            cells.append(_cell(rng, f"window{rr.label}"))
            rows.append(tuple(per_class[c]))
            est += z * g.int_hi(tp)
        if ev.tiny is not None:
            strip, cnt, prof, _ = ev.tiny
            rng = ctx.ranges("horizontal", w=(ev.w_lo, ev.source_s), h=(1, ctx.tiny_h))
            add(_cell(rng, f"window{rr.label}-tiny"), strip, cnt)
            est += prof
    for fill, label in ((run.vertical, "vertical"), (run.small, "small")):
        if fill is None:
            continue
        cat = "vertical" if label == "vertical" else "small"
        per_class = {}
        for (c, b), z in fill.x.items():
            if z:
                per_class.setdefault(c, [0] * len(boxes))[gid[fill.boxes[b]]] += z
        for c in sorted(per_class):
            rng, tp, cnt = fill.classes[c]
            cells.append(_cell(ctx.ranges(cat, **rng), label))
            rows.append(tuple(per_class[c]))
            est += sum(per_class[c]) * g.int_hi(tp)
        for rng, strip, cnt, prof in fill.exact:
            add(_cell(ctx.ranges(cat, **rng), label + "-tiny"), strip, cnt)
            est += prof
    for strip, rng, split in run.splits:
        prev = None
        for b, (cut, (cnt, prof)) in enumerate(zip(split.cutoffs, split.selected)):
            if cut is None or not cnt:
                continue
            r2 = {**rng, "density": (split.threshold.d_star, None),
                  "p": (max(cut, rng["p"][0]), None if prev is None else prev - 1)}
            add(_cell(r2, f"tall{strip}"), strip, cnt)
            est += prof
            prev = cut
    return ImplicitSolution(ctx.view.instance.mode, ctx.eps,
                            tuple(state.thresholds[1:]), tuple(boxes), tuple(cells), tuple(rows),
                            est, normalized=ctx.view.rotations)


def _piece(it: Item, flipped: frozenset, turn: bool = False) -> Piece:
    """Flat item as a piece; ``rotated`` is relative to the input orientation."""
    ext = (it.h, it.w) if turn else (it.w, it.h)
    return Piece(it.id, ext, (it.id in flipped) != turn)


def materialize_rect(sol: ImplicitSolution, view: RectView) -> Packing:
    if sol.explicit is not None:
        return sol.explicit
    inst = view.instance
    N = inst.N
    per_box = selected_by_box(sol, view.items)
    out: list[Placement] = []
    for pb, its in zip(sol.boxes, per_box):
        box = pb.box
        if isinstance(box, HBox):
            frag = hstack_pack(box, [_piece(it, view.flipped) for it in its])
        elif isinstance(box, LBox):
            frag = single_pack((box.width, box.height), [_piece(it, view.flipped) for it in its])
        elif isinstance(box, VBox):
            frag = vstack_pack(box, [_piece(it, view.flipped) for it in its])
        elif isinstance(box, SBox):
            W, H = box.lengths
            ps = []
            for it in its:
                turn = _s_admits(it.h, it.w, W, H, view.eps, view.rotations)
                ps.append(_piece(it, view.flipped, bool(turn)))
            frag = nfdh_pack(box.lengths, ps)
            if not frag.ok:
                raise PackerError(f"NFDH left {len(frag.residue)} item(s) in a small-item box")
        else:
            raise PackerError(f"unexpected box kind {box.kind}")
        out.extend(frag.translated(pb.origin))
    pk = Packing(N, 2, tuple(out))
    rep = verify_packing(inst, pk)
    if not rep.feasible:
        raise PackerError(f"materialized packing infeasible: {rep.violations[:3]}")
    return pk


def add_special(sol: ImplicitSolution, pk: Packing, ctx: RectContext, top: int
                ) -> tuple[ImplicitSolution, Packing]:
    """Put the most profitable unused item into the full-width box above height ``top``."""
    room = ctx.N - top
    if room <= 0:
        return sol, pk
    used = set(pk.ids())
    cands = [it for it in ctx.index.report(ctx.ranges(None, h=(1, room))) if it.id not in used]
    if not cands:
        return sol, pk
    it = min(cands, key=lambda it: (-it.profit, it.id))
    box = PlacedBox(LBox(0, room, ctx.N, special=True), (0, top))
    cell = Cell((("p", it.profit, it.profit),), (), "profit", "special", (it.id,))
    rows = tuple(row + (0,) for row in sol.assignment) + ((0,) * len(sol.boxes) + (1,),)
    new = ImplicitSolution(sol.mode, sol.eps, sol.thresholds, sol.boxes + (box,), sol.cells + (cell,),
                           rows, sol.total_profit_estimate + it.profit, sol.normalized)
    pl = Placement(it.id, (0, top), it.id in ctx.view.flipped)
    return new, Packing(pk.N, pk.d, pk.placements + (pl,))


# ---------------------------------------------------------------- at most three items


def _fit2(a, b, W: int, H: int):
    """Offsets for two rectangles ``(w, h)`` in a ``W x H`` region, or None."""
    if a[0] + b[0] <= W and a[1] <= H and b[1] <= H:
        return [(0, 0), (a[0], 0)]
    if a[1] + b[1] <= H and a[0] <= W and b[0] <= W:
        return [(0, 0), (0, a[1])]
    return None


def fit_few(dims: Sequence[tuple[int, int]], N: int) -> Optional[list[tuple[int, int]]]:
    """Origins for at most three rectangles in an ``N x N`` square, or None.

    Any packing of three rectangles can be cut in two by a straight line, so
    trying each rectangle alone on one side of a vertical or horizontal cut,
    with the other two side by side or stacked, is complete.
    """
    k = len(dims)
    if any(w > N or h > N for w, h in dims):
        return None
    if k <= 1:
        return [(0, 0)] * k
    if k == 2:
        return _fit2(dims[0], dims[1], N, N)
    for a in range(3):
        b, c = [i for i in range(3) if i != a]
        wa, ha = dims[a]
        for vertical in (True, False):
            W, H = (N - wa, N) if vertical else (N, N - ha)
            off = _fit2(dims[b], dims[c], W, H)
            if off is None:
                continue
            shift = (wa, 0) if vertical else (0, ha)
            out = [None] * 3
            out[a] = (0, 0)
            out[b] = (off[0][0] + shift[0], off[0][1] + shift[1])
            out[c] = (off[1][0] + shift[0], off[1][1] + shift[1])
            return out
    return None


def tiny_pool(items: Sequence[Item], eps: Fraction, per_class: int = 3, cap: int = 24) -> list[Item]:
    """Candidates for the few-item search: per profit class the items with the
    smallest short side, the smallest long side and the largest profit."""
    g = grid_for(eps)
    by_class: dict[int, list[Item]] = {}
    for it in items:
        if it.profit > 0:
            by_class.setdefault(g.class_of(it.profit), []).append(it)
    pool = {}
    for members in by_class.values():
        for key in (lambda it: (min(it.sides), it.id), lambda it: (max(it.sides), it.id),
                    lambda it: (-it.profit, it.id)):
            for it in sorted(members, key=key)[:per_class]:
                pool[it.id] = it
    return sorted(pool.values(), key=lambda it: (-it.profit, it.id))[:cap]


def solve_tiny_rot(instance: Instance, eps) -> Packing:
    """Best packing of at most three pool items, each in either orientation when rotations are allowed."""
    eps = parse_eps(eps)
    N = instance.N
    items = [it for it in instance.items if instance.fits(it)]
    pool = tiny_pool(items, eps)
    best_p, best = 0, Packing(N, 2, ())

    def orients(it: Item):
        up = it.extents(2)
        return [(up, False)] if it.h == it.w or not instance.rotations else [(up, False), ((it.h, it.w), True)]

    m = len(pool)
    for size in (1, 2, 3):
        for combo in combinations(range(m), size):
            p = sum(pool[i].profit for i in combo)
            if p <= best_p:
                continue
            chosen = [pool[i] for i in combo]
            for opts in product(*(orients(it) for it in chosen)):
                origins = fit_few([o[0] for o in opts], N)
                if origins is not None:
                    best_p = p
                    best = Packing(N, 2, tuple(sorted(
                        (Placement(it.id, org, o[1]) for it, o, org in zip(chosen, opts, origins)),
                        key=lambda pl: pl.id)))
                    break
    return best


# ---------------------------------------------------------------- solve


def _targets(ctx: RectContext, layout: RectLayout) -> list[list[Fraction]]:
    """Descending profit targets per width window, then per tall strip (rotation mode)."""
    eps, view = ctx.eps, ctx.view
    g = ctx.grid
    r = layout.r
    n_tall = layout.n_vertical if view.rotations else 0
    labels = r + n_tall
    if not labels:
        return []
    lo = eps / labels * view.p_max
    out = []
    pool = [it for it in view.items if ctx.category(it) in ("large", "horizontal") and it.profit > 0]
    tops = sorted((g.int_hi(g.class_of(it.profit)) for it in pool), reverse=True)
    for lab in range(1, r + 1):
        kinds = {s.kind for s in layout.strips if s.label == lab}
        cap = Fraction(sum(tops)) if "H" in kinds else Fraction(sum(tops[:1]))
        out.append(profit_grid(eps, lo, min(cap, Fraction(view.n * view.p_max))) + [Fraction(0)])
    for _ in range(n_tall):
        out.append(profit_grid(eps, lo, Fraction(sum(tops))) + [Fraction(0)])
    return out


def rect_baselines(instance: Instance, eps: Fraction) -> list[tuple[str, Packing]]:
    out = [("single", baseline_single(instance)), ("nfdh", baseline_nfdh(instance, eps))]
    return out


def solve_rect(instance: Instance, eps, budget: Optional[int] = None,
               cfg: SolverConfig = SolverConfig(), record: Optional[list] = None,
               tiny: Optional[bool] = None) -> SolveResult:
    """Best packing over strip configurations, the few-item search and the baselines."""
    t0 = time.perf_counter()
    eps = parse_eps(eps)
    if not instance.mode.is_rect:
        raise ValueError("rectangle solver needs a rectangle instance")
    rot = instance.rotations
    tiny = cfg.tiny_branch if tiny is None else tiny
    budget = cfg.budget if budget is None else budget
    items = tuple(it for it in instance.items if instance.fits(it))
    inst = instance.with_items(items)
    view = preprocess_rect(inst, eps)
    meta: dict = {"epsilon": str(eps), "mode": instance.mode.value}
    best_pk, best_sol, best_src = None, None, None

    def offer(label: str, pk: Packing, sol: Optional[ImplicitSolution] = None) -> bool:
        nonlocal best_pk, best_sol, best_src
        if best_pk is None or pk.profit(inst) > best_pk.profit(inst):
            best_pk, best_src = pk, label
            best_sol = sol if sol is not None else explicit_solution(instance.mode, eps, inst, pk, label)
            return True
        return False

    for label, pk in rect_baselines(inst, eps):
        offer(label, pk)
    if tiny:
        offer("tiny", solve_tiny_rot(inst, eps))
    tried = succeeded = 0
    best_pair = None
    pairs = enumerate_eps_pairs(eps, cfg.cascade_c, cfg.box_cap)
    if cfg.eps_pairs is not None:
        pairs = pairs[:cfg.eps_pairs]
    index = RectIndex4D(view.items) if view.items else None
    if view.items and view.p_max > 0:
        for pi, pair in enumerate(pairs):
            quota = tried + max(1, (budget - tried) // (len(pairs) - pi))
            ctx = RectContext(view, pair, cfg, index)
            cache: dict = {}
            outcome: dict = {}
            alphas = height_grid(eps, cfg, pair[1])

            def run(layout: RectLayout, targets: tuple):
                nonlocal tried, succeeded, best_pair
                r = layout.r
                config = RectConfiguration(layout, tuple(targets[:r]), tuple(targets[r:]), pair)
                if config in outcome:
                    return outcome[config]
                if tried >= quota:
                    raise BudgetSpent
                tried += 1
                res = fill_strips(config, ctx, cache)
                if record is not None:
                    record.append((config, res.state))
                out = None
                if res.state.complete:
                    try:
                        sol = assemble_rect(res, ctx)
                        pk = materialize_rect(sol, view)
                        if layout.special:
                            sol, pk = add_special(sol, pk, ctx, sum(res.heights))
                        out = (sol, pk)
                    except (AssemblyError, PackerError, MembershipError):
                        out = None
                outcome[config] = out
                if out is not None:
                    succeeded += 1
                    if offer("special" if layout.special else "standard", out[1], out[0]):
                        best_pair = pair
                return out

            try:
                for layout in rect_layouts(alphas, ctx.categories(), cfg.box_cap, rot):
                    per_label = _targets(ctx, layout)
                    if per_label:
                        search_targets(lambda ph, lay=layout: run(lay, ph), per_label)
                    else:
                        run(layout, ())
            except BudgetSpent:
                pass
            if tried >= budget:
                break
    profit = best_pk.profit(inst)
    meta.update({
        "budget": budget,
        "configurations_tried": tried,
        "configurations_succeeded": succeeded,
        "budget_exhausted": tried >= budget,
        "baseline_used": best_src not in ("standard", "special"),
        "branch": best_src,
        "eps_pair": None if best_pair is None else [str(best_pair[0]), str(best_pair[1])],
        "profit": profit,
        "estimate": best_sol.total_profit_estimate,
        "n_selected": len(best_pk),
        "wall_time": time.perf_counter() - t0,
        "box_cap": cfg.box_cap,
    })
    best_sol.meta.update(meta)
    return SolveResult(best_pk, best_sol, meta)


def solve_norot(instance: Instance, eps, budget: Optional[int] = None,
                cfg: SolverConfig = SolverConfig(), record: Optional[list] = None) -> SolveResult:
    if instance.mode is not Mode.RECTANGLE:
        raise ValueError("solve_norot needs a rectangle instance without rotations")
    return solve_rect(instance, eps, budget, cfg, record)


def solve_rot(instance: Instance, eps, budget: Optional[int] = None,
              cfg: SolverConfig = SolverConfig(), record: Optional[list] = None,
              tiny: Optional[bool] = None) -> SolveResult:
    if instance.mode is not Mode.RECTANGLE_ROTATING:
        raise ValueError("solve_rot needs a rectangle instance with rotations")
    return solve_rect(instance, eps, budget, cfg, record, tiny)


# ---------------------------------------------------------------- dynamic session


class RectSession:
    """Insert / delete rectangles and query an implicit solution fixed between updates."""

    def __init__(self, instance: Instance, eps, budget: Optional[int] = None,
                 cfg: SolverConfig = SolverConfig()):
        if not instance.mode.is_rect:
            raise ValueError("rectangle session needs a rectangle instance")
        self.N, self.mode = instance.N, instance.mode
        self.eps = parse_eps(eps)
        self.budget = budget
        self.cfg = cfg
        self.index = RectIndex4D(instance.items)
        self.version = 0
        self._cached = None

    def insert(self, item: Item) -> None:
        self.index.insert(item)
        self.version += 1

    def delete(self, item_id: str) -> None:
        self.index.delete(item_id)
        self.version += 1

    def instance(self) -> Instance:
        return Instance(self.N, 2, self.mode, tuple(sorted(self.index.items(), key=lambda i: i.id)))

    def _current(self):
        if self._cached is None or self._cached[0] != self.version:
            inst = self.instance()
            res = solve_rect(inst, self.eps, self.budget, self.cfg)
            if res.solution.explicit is not None:
                ids = set(res.packing.ids())
            else:
                ids = selected_ids(res.solution, preprocess_rect(inst, self.eps).items)
            self._cached = (self.version, res, ids)
        return self._cached[1], self._cached[2]

    def estimate(self) -> int:
        return self._current()[0].solution.total_profit_estimate

    def output(self) -> Packing:
        return self._current()[0].packing

    def contains(self, item_id: str) -> bool:
        if item_id not in self.index:
            raise KeyError(f"unknown item id {item_id!r}")
        return item_id in self._current()[1]

    def solution(self) -> ImplicitSolution:
        return self._current()[0].solution
