"""Hypercube knapsack: guessed box structures filled via indirect guessing.

A configuration fixes a set of grid boxes (one item per cell, labelled with
the size partition they serve) and NFDH boxes (small items, volume shares per
partition), plus a profit target for every partition.  Partition thresholds
``k_1 < k_2 < ...`` are then found one by one: the next threshold is the least
item size ``s`` at which the transport LP over items of size in ``(k_prev, s]``
reaches the target.  Selected counts per (size class, profit class) cell are
turned into items by taking the cell's smallest items first.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from fractions import Fraction
from itertools import product
from math import ceil
from typing import Iterator, Optional, Sequence

from .config import SolverConfig
from .core.membership import MembershipError, selected_by_box, selected_ids
from .core.rounding import PowerGrid, grid_for, parse_eps
from .core.types import (Cell, ImplicitSolution, Instance, Item, Mode, NStarBox, Packing,
                         PlacedBox, Placement, SBox, check_eps_for_cubes)
from .core.verify import verify_packing
from .index import ItemIndex2D
from .oracle import baseline_nfdh, baseline_single
from .packers import (PackerError, arrange_boxes, nfdh_pack, nstar_pack, piece, volume)
from .smalllp import TransportLP, greedy_complete, guess_and_solve


# ---------------------------------------------------------------- preprocessing


@dataclass
class View:
    """Items that survive preprocessing, with the index over them."""

    instance: Instance
    eps: Fraction
    items: tuple[Item, ...]
    p_max: int
    dropped: tuple[Item, ...] = ()

    @property
    def n(self) -> int:
        return len(self.items)


def preprocess(instance: Instance, eps) -> View:
    """Drop items that cannot fit and items with ``p < eps * p_max / n``."""
    eps = parse_eps(eps)
    items = [it for it in instance.items if instance.fits(it)]
    if not items:
        return View(instance, eps, (), 0)
    p_max = max(it.profit for it in items)
    cut = eps * p_max / len(items)
    keep = tuple(it for it in items if it.profit >= cut)
    drop = tuple(it for it in items if it.profit < cut)
    return View(instance, eps, keep, p_max, drop)


# ---------------------------------------------------------------- configurations


@dataclass(frozen=True)
class GridBoxSpec:
    label: int
    n_per_dim: tuple[int, ...]


@dataclass(frozen=True)
class NFDHBoxSpec:
    lengths: tuple[int, ...]
    shares: tuple[Fraction, ...]  # share of the volume per label 1..r


@dataclass(frozen=True)
class GuessConfiguration:
    grids: tuple[GridBoxSpec, ...]
    nfdh: tuple[NFDHBoxSpec, ...]
    phat: tuple[Fraction, ...]

    @property
    def r(self) -> int:
        return len(self.phat)

    @property
    def layout(self) -> tuple:
        return (self.grids, self.nfdh)

    @property
    def n_boxes(self) -> int:
        return len(self.grids) + len(self.nfdh)


def share_budget(eps: Fraction, d: int) -> Fraction:
    """Largest total NFDH-box share: ``1 - 2 d eps + eps``."""
    return max(Fraction(0), 1 - 2 * d * eps + eps)


def share_grid(eps: Fraction, r: int, d: int) -> list[Fraction]:
    """Shares on the ``eps / r`` grid up to the budget, descending."""
    step = eps / r
    top = share_budget(eps, d)
    k = int(top / step)
    return [step * i for i in range(k, 0, -1)]


def count_grid(eps: Fraction, n: int) -> list[int]:
    """Admissible grid dimensions: ``1..ceil(1/eps)`` and rounded-down powers up to n."""
    vals = set(range(1, ceil(1 / eps) + 1)) | set(grid_for(eps).int_grid_down(1, max(1, n)))
    return sorted(v for v in vals if v <= max(1, n))


def profit_grid(eps: Fraction, lo: Fraction, hi: Fraction) -> list[Fraction]:
    """Powers of ``1+eps`` in ``[lo, hi]``, descending."""
    if hi <= 0 or hi < lo:
        return []
    g = grid_for(eps)
    t = g.class_of(hi)
    out = []
    while g.power(t) >= lo:
        out.append(g.power(t))
        t -= 1
    return out


def _layouts(view: View, cfg: SolverConfig) -> list[tuple[tuple, tuple]]:
    """Box layouts in promise order: larger estimated box volume first."""
    eps, d, N, n = view.eps, view.instance.d, view.instance.N, view.n
    g = grid_for(eps)
    cap = cfg.box_cap
    counts = count_grid(eps, n)
    full = (N,) * d
    slabs = [h for h in g.int_grid_down(1, N // 2)][:3]
    out = []
    # single NFDH box covering the knapsack
    top = share_grid(eps, 1, d)
    if top:
        out.append((N ** d, (), (NFDHBoxSpec(full, (top[0],)),)))
    for a in counts:
        if a ** d > n and a > 1 and (a - 1) ** d >= n:
            continue
        grid1 = GridBoxSpec(1, (a,) * d)
        out.append((N ** d, (grid1,), ()))
        # a grid for the large items next to a slab for the small ones
        for h in slabs:
            if cap >= 2 and top:
                sl = (N,) * (d - 1) + (h,)
                out.append((N ** d, (GridBoxSpec(2, (a,) * d),),
                            (NFDHBoxSpec(sl, (top[0], Fraction(0))),)))
        # two grids of different pitch
        for b in counts:
            if b < a and cap >= 2:
                out.append((N ** d - 1, (GridBoxSpec(1, (a,) * d), GridBoxSpec(2, (b,) * d)), ()))
    # non-cubic grids in 2-D and above
    if d >= 2:
        for a, b in product(counts, counts):
            if a > b and a * b ** (d - 1) <= n:
                out.append((N ** d - 2, (GridBoxSpec(1, (a,) + (b,) * (d - 1)),), ()))
    seen = set()
    uniq = []
    for vol, grids, nf in sorted(out, key=lambda t: (-t[0], len(t[1]) + len(t[2]), repr(t[1:]))):
        key = (grids, nf)
        if key not in seen and len(grids) + len(nf) <= cap:
            seen.add(key)
            uniq.append(key)
    return uniq


def _labels(grids, nfdh) -> int:
    r = max((gb.label for gb in grids), default=0)
    for sb in nfdh:
        r = max(r, len(sb.shares))
    return r


def _profit_bound(view: View, grids, nfdh, label: int) -> Fraction:
    """Profit no configuration can exceed in ``label``: top items for the grid cells, else everything."""
    g = grid_for(view.eps)
    profits = sorted((g.int_hi(g.class_of(it.profit)) for it in view.items if it.profit > 0),
                     reverse=True)
    if any(sb.shares[label - 1] > 0 for sb in nfdh if len(sb.shares) >= label):
        return Fraction(sum(profits))
    cells = sum(volume(gb.n_per_dim) for gb in grids if gb.label == label)
    return Fraction(sum(profits[:cells]))


def layout_groups(view: View, cfg: SolverConfig = SolverConfig()):
    """Every layout with its descending list of profit targets per label."""
    if not view.items or view.p_max <= 0:
        return
    eps = view.eps
    for grids, nfdh in _layouts(view, cfg):
        r = _labels(grids, nfdh)
        lo = eps / r * view.p_max
        per_label = []
        for j in range(1, r + 1):
            hi = min(Fraction(view.n * view.p_max), _profit_bound(view, grids, nfdh, j))
            used = any(gb.label == j for gb in grids) or any(
                len(sb.shares) >= j and sb.shares[j - 1] > 0 for sb in nfdh)
            per_label.append(profit_grid(eps, lo, hi) + [Fraction(0)] if used else [Fraction(0)])
        yield grids, nfdh, per_label


def enumerate_configurations(view: View, budget: Optional[int] = None,
                             cfg: SolverConfig = SolverConfig()) -> Iterator[GuessConfiguration]:
    """Deterministic stream of configurations, truncated at ``budget``.

    Layouts come in promise order; for every layout the profit targets run
    over powers of ``1+eps`` in ``[(eps/r) p_max, n p_max]`` (capped by what
    the layout's boxes could possibly hold), largest first.
    """
    emitted = 0
    for grids, nfdh, per_label in layout_groups(view, cfg):
        for phat in product(*per_label):
            if budget is not None and emitted >= budget:
                return
            emitted += 1
            yield GuessConfiguration(grids, nfdh, tuple(phat))


# ---------------------------------------------------------------- IP(s)


@dataclass
class CellKey:
    t: int   # size class
    tp: int  # profit class


@dataclass
class IPEval:
    s: int
    q: Fraction                    # monotone value (best over evaluated s'' <= s)
    raw: Fraction                  # value of this evaluation alone
    x: dict                        # (class index, box index) -> count
    lp: Optional[TransportLP]
    classes: list                  # class index -> (t, t')
    boxes: list                    # box index -> global box id
    tiny: Optional[tuple]          # (global box id, s_hi, count, profit, reserve)
    source_s: int                  # the s whose solution is stored


class Context:
    """Everything indirect guessing needs for one solve."""

    def __init__(self, view: View, cfg: SolverConfig, index: Optional[ItemIndex2D] = None):
        self.view = view
        self.cfg = cfg
        self.eps = view.eps
        self.d = view.instance.d
        self.N = view.instance.N
        self.grid: PowerGrid = grid_for(view.eps)
        self.index = index if index is not None else ItemIndex2D(view.items)
        g = self.grid
        cls = {}
        for it in view.items:
            if it.profit <= 0:
                continue
            key = (g.class_of(it.s), g.class_of(it.profit))
            cls[key] = cls.get(key, 0) + 1
        self.classes = sorted(cls)
        self.evaluations = 0
        # the index may hold more items than the view; every query is clipped to the view
        self.p_cut = ceil(view.eps * view.p_max / view.n) if view.n else 0
        self.s_cap = view.instance.N

    def size_bounds(self, t: int) -> tuple[int, int]:
        return ceil(self.grid.power(t)), self.grid.int_hi(t)

    def ranges(self, s_lo, s_hi, p_lo=None, p_hi=None) -> dict:
        s_hi = self.s_cap if s_hi is None else min(s_hi, self.s_cap)
        p_lo = self.p_cut if p_lo is None else max(p_lo, self.p_cut)
        return {"s": (s_lo, s_hi), "p": (p_lo, p_hi)}

    def count(self, t: int, tp: int, lo: int, hi: int) -> int:
        a, b = self.size_bounds(t)
        pa, pb = self.size_bounds(tp)
        return self.index.count(self.ranges(max(a, lo), min(b, hi), pa, pb))


def _round_boxes(config: GuessConfiguration, label: int):
    """Global ids of the boxes used in round ``label``."""
    out = []
    for i, gb in enumerate(config.grids):
        if gb.label == label:
            out.append(("G", i))
    for i, sb in enumerate(config.nfdh):
        if len(sb.shares) >= label and sb.shares[label - 1] > 0:
            out.append(("S", i))
    return out


def eval_ip(s: int, ell: int, config: GuessConfiguration, ctx: Context, k_prev: int) -> IPEval:
    """Approximate IP(s) for round ``ell + 1``: items of size in ``(k_prev, s]``."""
    ctx.evaluations += 1
    label = ell + 1
    g, eps, d = ctx.grid, ctx.eps, ctx.d
    n = max(1, ctx.view.n)
    boxes = _round_boxes(config, label)
    caps: list[Fraction] = []
    for kind, i in boxes:
        if kind == "G":
            caps.append(Fraction(volume(config.grids[i].n_per_dim)))
        else:
            sb = config.nfdh[i]
            caps.append(sb.shares[label - 1] * volume(sb.lengths))
    # fold the tiniest items into the NFDH box with the largest share
    tiny = None
    tiny_classes: set[int] = set()
    s_boxes = [(caps[b], -b, b) for b, (kind, _) in enumerate(boxes) if kind == "S"]
    if s_boxes:
        _, _, bt = max(s_boxes)
        sb = config.nfdh[boxes[bt][1]]
        vol = volume(sb.lengths)
        lmin = min(sb.lengths)
        ts = {t for t, _ in ctx.classes
              if g.int_cap(t) ** d * n <= eps * vol and g.int_cap(t) <= 2 * eps * lmin}
        if ts:
            reserve, cnt, prof, s_hi = Fraction(0), 0, 0, 0
            for t in sorted(ts):
                a, b = ctx.size_bounds(t)
                lo, hi = max(a, k_prev + 1), min(b, s)
                if lo > hi:
                    continue
                c, p, _ = ctx.index.aggregate(ctx.ranges(lo, hi))
                reserve += c * g.int_cap(t) ** d
                cnt += c
                prof += p
                s_hi = max(s_hi, hi)
            if cnt and reserve <= caps[bt]:
                caps[bt] -= reserve
                tiny = (boxes[bt], s_hi, cnt, prof, reserve)
                tiny_classes = ts
    classes = []
    counts = []
    profits = []
    for t, tp in ctx.classes:
        if t in tiny_classes:
            continue
        c = ctx.count(t, tp, k_prev + 1, s)
        if c:
            classes.append((t, tp))
            counts.append(c)
            profits.append(Fraction(g.int_hi(tp)))
    weights = {}
    for c, (t, tp) in enumerate(classes):
        for b, (kind, i) in enumerate(boxes):
            if kind == "G":
                weights[(c, b)] = Fraction(1)
            else:
                sb = config.nfdh[i]
                if g.int_cap(t) <= 2 * eps * min(sb.lengths):
                    weights[(c, b)] = Fraction(g.int_cap(t) ** d)
    lp = TransportLP(profits, counts, caps, weights, classes, boxes)
    if weights:
        res = guess_and_solve(lp, min(ctx.cfg.top_k_cap, len(boxes) * len(classes)),
                              ctx.cfg.guess_budget)
        x = greedy_complete(lp, res.x)
    else:
        x = {}
    value = lp.objective(x) + (tiny[3] if tiny else 0)
    return IPEval(s, value, value, x, lp, classes, boxes, tiny, s)


# ---------------------------------------------------------------- indirect guessing


@dataclass
class RoundResult:
    label: int
    k: int
    evaluation: Optional[IPEval]


@dataclass
class IndirectState:
    thresholds: list[int] = field(default_factory=lambda: [0])
    rounds: list[RoundResult] = field(default_factory=list)
    # per round, every evaluated s with its own value and its final monotone value
    trace: list[list[tuple[int, Fraction, Fraction]]] = field(default_factory=list)
    rejected: Optional[str] = None

    @property
    def complete(self) -> bool:
        return self.rejected is None


class Envelope:
    """q(s) as the best value over evaluated s'' <= s; raises later entries when needed.

    Evaluations are dataclasses with fields ``s``, ``q`` and ``raw``; a raised
    entry keeps its own ``s`` and ``raw`` and takes everything else from the
    better evaluation.
    """

    def __init__(self):
        self.evals: dict = {}

    def add(self, ev):
        best = ev
        for s2, e2 in self.evals.items():
            if s2 < ev.s and e2.q > best.q:
                best = e2
        if best is not ev:
            ev = replace(best, s=ev.s, raw=ev.raw)
        self.evals[ev.s] = ev
        for s2, e2 in list(self.evals.items()):
            if s2 > ev.s and e2.q < ev.q:
                self.evals[s2] = replace(ev, s=s2, raw=e2.raw)
        return ev


def indirect_guess(config: GuessConfiguration, ctx: Context,
                   cache: Optional[dict] = None) -> IndirectState:
    """Find thresholds round by round; reject if a profit target is out of reach."""
    state = IndirectState()
    eps = ctx.eps
    for ell in range(config.r):
        label = ell + 1
        k_prev = state.thresholds[-1]
        target = (1 - eps) * config.phat[ell]
        if config.phat[ell] <= 0:
            state.thresholds.append(k_prev)
            state.rounds.append(RoundResult(label, k_prev, None))
            state.trace.append([])
            continue
        env = Envelope()
        rng = ctx.ranges(k_prev + 1, None)
        boxes_key = (label, k_prev, tuple(_round_boxes(config, label)), config.layout)

        def q(s: int) -> bool:
            key = boxes_key + (s,)
            if cache is not None and key in cache:
                ev = cache[key]
            else:
                ev = eval_ip(s, ell, config, ctx, k_prev)
                if cache is not None:
                    cache[key] = ev
            ev = env.add(ev)
            return ev.q >= target

        def close() -> None:
            state.trace.append([(s, e.raw, e.q) for s, e in sorted(env.evals.items())])

        m = ctx.index.count(rng)
        if not m:
            state.rejected = f"round {label}: no items left"
            close()
            return state
        s_max = ctx.index.kth_smallest("s", m, rng)
        if not q(s_max):
            state.rejected = f"round {label}: target unreachable"
            close()
            return state
        k = ctx.index.binary_search_threshold("s", q, rng)
        assert k is not None
        state.thresholds.append(k)
        state.rounds.append(RoundResult(label, k, env.evals[k]))
        close()
    return state


# ---------------------------------------------------------------- assembly & materialization


class AssemblyError(ValueError):
    pass


def instantiate_boxes(config: GuessConfiguration, state: IndirectState) -> list:
    """Box specs with grid pitches taken from the thresholds; inactive grid boxes are None."""
    out = []
    for gb in config.grids:
        k = state.thresholds[gb.label]
        k_prev = state.thresholds[gb.label - 1]
        if config.phat[gb.label - 1] <= 0 or k <= 0:
            out.append(None)
        else:
            out.append(NStarBox(gb.label, gb.n_per_dim, k_prev + 1, k))
    for sb in config.nfdh:
        out.append(SBox(sb.lengths, sb.shares))
    return out


def assemble(state: IndirectState, config: GuessConfiguration, ctx: Context) -> ImplicitSolution:
    """Merge per-round solutions into cell counts and place the boxes."""
    eps, d, N = ctx.eps, ctx.d, ctx.N
    if not state.complete:
        raise AssemblyError(state.rejected)
    specs = instantiate_boxes(config, state)
    live = [i for i, b in enumerate(specs) if b is not None]
    ext = [specs[i].lengths() if isinstance(specs[i], NStarBox) else specs[i].lengths for i in live]
    origins = arrange_boxes(ext, N)
    if origins is None:
        raise AssemblyError("boxes do not fit the knapsack")
    gid = {}
    placed = []
    for i, o in zip(live, origins):
        gid[i] = len(placed)
        placed.append(PlacedBox(specs[i], tuple(o)))
    n_grid = len(config.grids)

    def box_index(key) -> int:
        kind, i = key
        return gid[i if kind == "G" else n_grid + i]

    cells: list[Cell] = []
    rows: list[tuple[int, ...]] = []
    est = 0
    g = ctx.grid
    for rr in state.rounds:
        ev = rr.evaluation
        if ev is None:
            continue
        k_prev = state.thresholds[rr.label - 1]
        per_class: dict[int, list[int]] = {}
        for (c, b), z in ev.x.items():
            if z:
                row = per_class.setdefault(c, [0] * len(placed))
                row[box_index(ev.boxes[b])] += z
        for c in sorted(per_class):
            t, tp = ev.classes[c]
            a, b = ctx.size_bounds(t)
            pa, pb = ctx.size_bounds(tp)
            cell = Cell((("s", max(a, k_prev + 1), min(b, ev.source_s)), ("p", max(pa, ctx.p_cut), pb)),
                        (("s", t), ("p", tp)), "side", f"round{rr.label}")
            z = sum(per_class[c])
            if z > ctx.count(t, tp, k_prev + 1, ev.source_s):
                raise AssemblyError("cell count exceeds its population")
            cells.append(cell)
            rows.append(tuple(per_class[c]))
            est += z * g.int_hi(tp)
        if ev.tiny is not None:
            key, s_hi, cnt, prof, _ = ev.tiny
            row = [0] * len(placed)
            row[box_index(key)] = cnt
            cells.append(Cell((("s", k_prev + 1, s_hi), ("p", ctx.p_cut, None)), (), "side",
                              f"round{rr.label}-tiny"))
            rows.append(tuple(row))
            est += prof
    return ImplicitSolution(Mode.HYPERCUBE, eps, tuple(state.thresholds[1:]), tuple(placed),
                            tuple(cells), tuple(rows), est)


def materialize(sol: ImplicitSolution, instance: Instance, items: Sequence[Item]) -> Packing:
    """Concrete placements for an implicit solution; raises on any packing failure."""
    if sol.explicit is not None:
        return sol.explicit
    d, N = instance.d, instance.N
    per_box = selected_by_box(sol, items)
    out: list[Placement] = []
    for pb, its in zip(sol.boxes, per_box):
        ps = [piece(it, d) for it in its]
        box = pb.box
        if isinstance(box, NStarBox):
            frag = nstar_pack(box, ps)
        elif isinstance(box, SBox):
            frag = nfdh_pack(box.lengths, ps)
            if not frag.ok:
                raise PackerError(f"NFDH left {len(frag.residue)} item(s) in an NFDH box")
        else:
            raise PackerError(f"unexpected box kind {box.kind}")
        out.extend(frag.translated(pb.origin))
    pk = Packing(N, d, tuple(out))
    rep = verify_packing(instance, pk)
    if not rep.feasible:
        raise PackerError(f"materialized packing infeasible: {rep.violations[:3]}")
    return pk


# ---------------------------------------------------------------- solve


class BudgetSpent(Exception):
    pass


def search_targets(run, per_label: list[list[Fraction]], prefix: tuple = ()):
    """Largest profit targets, label by label, for which ``run`` succeeds.

    Success only gets easier as targets shrink.  Earlier labels are scanned
    from the top (a target for a later label of 0 isolates the earlier ones);
    the last label is found by bisection.
    """
    level = len(prefix)
    vals = per_label[level]
    rest = len(per_label) - level - 1
    if rest == 0:
        lo, hi, found = 0, len(vals) - 1, None
        while lo <= hi:
            mid = (lo + hi) // 2
            res = run(prefix + (vals[mid],))
            if res is not None:
                found, hi = res, mid - 1
            else:
                lo = mid + 1
        return found
    for v in vals:
        if run(prefix + (v,) + (Fraction(0),) * rest) is not None:
            return search_targets(run, per_label, prefix + (v,))
    return None


@dataclass
class SolveResult:
    packing: Packing
    solution: ImplicitSolution
    meta: dict

    @property
    def profit(self) -> int:
        return self.meta["profit"]


def explicit_solution(mode: Mode, eps: Fraction, instance: Instance, pk: Packing, label: str
                      ) -> ImplicitSolution:
    sol = ImplicitSolution(mode, eps, explicit=pk, total_profit_estimate=pk.profit(instance))
    sol.meta["source"] = label
    return sol


def baselines(instance: Instance, eps: Fraction) -> list[tuple[str, Packing]]:
    return [("single", baseline_single(instance)), ("nfdh", baseline_nfdh(instance, eps))]


def solve(instance: Instance, eps, budget: Optional[int] = None, cfg: SolverConfig = SolverConfig(),
          strict: Optional[bool] = None, index: Optional[ItemIndex2D] = None,
          record: Optional[list] = None) -> SolveResult:
    """Best packing over enumerated configurations and the baselines.

    ``record``, if given, receives ``(config, state)`` for every configuration run.
    """
    t0 = time.perf_counter()
    eps = parse_eps(eps)
    if instance.mode is not Mode.HYPERCUBE:
        raise ValueError("cube solver needs a hypercube instance")
    strict = cfg.strict_eps if strict is None else strict
    meta: dict = {"epsilon": str(eps), "mode": instance.mode.value}
    if strict:
        check_eps_for_cubes(eps, instance.d)
    elif eps >= Fraction(1, 2 ** (instance.d + 2)):
        meta["eps_precondition"] = "violated"
    budget = cfg.budget if budget is None else budget
    items = tuple(it for it in instance.items if instance.fits(it))
    inst = instance.with_items(items)
    view = preprocess(inst, eps)
    best_pk, best_sol, best_src = None, None, None
    for label, pk in baselines(inst, eps):
        if best_pk is None or pk.profit(inst) > best_pk.profit(inst):
            best_pk, best_src = pk, label
            best_sol = explicit_solution(Mode.HYPERCUBE, eps, inst, pk, label)
    tried = 0
    succeeded = 0
    if view.items and view.p_max > 0:
        ctx = Context(view, cfg, index)
        cache: dict = {}
        outcome: dict = {}

        def run(config: GuessConfiguration):
            nonlocal tried, succeeded, best_pk, best_sol, best_src
            if config in outcome:
                return outcome[config]
            if tried >= budget:
                raise BudgetSpent
            tried += 1
            state = indirect_guess(config, ctx, cache)
            if record is not None:
                record.append((config, state))
            res = None
            if state.complete:
                try:
                    sol = assemble(state, config, ctx)
                    pk = materialize(sol, inst, view.items)
                    res = (sol, pk)
                except (AssemblyError, PackerError, MembershipError):
                    res = None
            outcome[config] = res
            if res is not None:
                succeeded += 1
                if res[1].profit(inst) > best_pk.profit(inst):
                    best_pk, best_sol, best_src = res[1], res[0], "configuration"
            return res

        try:
            for grids, nfdh, per_label in layout_groups(view, cfg):
                search_targets(lambda ph: run(GuessConfiguration(grids, nfdh, ph)), per_label)
        except BudgetSpent:
            pass
    profit = best_pk.profit(inst)
    meta.update({
        "budget": budget,
        "configurations_tried": tried,
        "configurations_succeeded": succeeded,
        "budget_exhausted": tried >= budget,
        "baseline_used": best_src != "configuration",
        "branch": best_src,
        "profit": profit,
        "estimate": best_sol.total_profit_estimate,
        "n_selected": len(best_pk),
        "wall_time": time.perf_counter() - t0,
        "box_cap": cfg.box_cap,
    })
    best_sol.meta.update(meta)
    return SolveResult(best_pk, best_sol, meta)


# ---------------------------------------------------------------- dynamic session


class Session:
    """Insert / delete items and query an implicit solution that stays fixed between updates."""

    index_type = ItemIndex2D

    def __init__(self, instance: Instance, eps, budget: Optional[int] = None,
                 cfg: SolverConfig = SolverConfig(), strict: Optional[bool] = None):
        self.N, self.d, self.mode = instance.N, instance.d, instance.mode
        self.eps = parse_eps(eps)
        self.budget = budget
        self.cfg = cfg
        self.strict = strict
        self.index = self.index_type(instance.items)
        self.version = 0
        self._cached: Optional[tuple[int, SolveResult, set]] = None

    def insert(self, item: Item) -> None:
        self.index.insert(item)
        self.version += 1

    def delete(self, item_id: str) -> None:
        self.index.delete(item_id)
        self.version += 1

    def instance(self) -> Instance:
        return Instance(self.N, self.d, self.mode, tuple(sorted(self.index.items(), key=lambda i: i.id)))

    def _solve(self, inst: Instance) -> SolveResult:
        return solve(inst, self.eps, self.budget, self.cfg, self.strict)

    def _current(self) -> tuple[SolveResult, set]:
        if self._cached is None or self._cached[0] != self.version:
            res = self._solve(self.instance())
            ids = set(res.packing.ids()) if res.solution.explicit is not None else \
                selected_ids(res.solution, self.index.items())
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
