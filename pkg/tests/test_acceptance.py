"""Acceptance criteria, each at its stated scale and tolerance.

Every test records one PASS/FAIL line that is printed in the terminal summary.
"""

from __future__ import annotations

import random
import time
from fractions import Fraction

import pytest

from geoknap.config import SolverConfig
from geoknap.core import Instance, Item, Mode, verify_packing
from geoknap.cube_solver import (Context, GridBoxSpec, GuessConfiguration, Session, indirect_guess,
                                 preprocess, profit_grid, solve)
from geoknap.index import ItemIndex2D, RectIndex4D
from geoknap.oracle import baseline_nfdh, baseline_single, exact_opt
from geoknap.packers import Piece, nfdh_guarantee, nfdh_pack
from geoknap.core.rounding import grid_for
from geoknap.rect_solver import RectSession, density_split, density_split_oracle, solve_rect
from geoknap.smalllp import TransportLP, solve_extreme, vertex_enumeration

from instances import random_cubes, random_rects, small_instance, structured_rects

pytestmark = pytest.mark.slow

EPS = Fraction(1, 4)
FUZZ_BUDGET = 4

# (instance, solver profit) pairs from every suite, checked against the baselines at the end
SOLVED: list[tuple[Instance, int]] = []


def run_solver(inst: Instance, budget=None):
    if inst.mode is Mode.HYPERCUBE:
        return solve(inst, EPS, budget, strict=False)
    return solve_rect(inst, EPS, budget)


def test_feasibility_fuzz(report):
    rng = random.Random(2024)
    t0 = time.perf_counter()
    bad = []
    modes = [Mode.HYPERCUBE, Mode.HYPERCUBE, Mode.RECTANGLE, Mode.RECTANGLE_ROTATING]
    for k in range(2000):
        mode = modes[k % 4]
        if mode is Mode.HYPERCUBE:
            inst = random_cubes(rng)
        elif k % 8 < 4:
            inst = random_rects(rng, mode)
        else:
            inst = structured_rects(rng, mode, rng.choice([100, 1000, 10 ** 6]))
        res = run_solver(inst, FUZZ_BUDGET)
        rep = verify_packing(inst, res.packing)
        if not rep.feasible:
            bad.append((k, rep.violations[:2]))
        SOLVED.append((inst, res.profit))
    dt = time.perf_counter() - t0
    ok = not bad and dt <= 600
    report("feasibility fuzz", ok, f"2000 instances, {len(bad)} infeasible, {dt:.0f}s (limit 600s)")
    assert not bad, bad[:3]
    assert dt <= 600


def test_oracle_ratio_floor(report):
    rng = random.Random(7)
    floors = {Mode.HYPERCUBE: Fraction(1, 2), Mode.RECTANGLE: Fraction(1, 2),
              Mode.RECTANGLE_ROTATING: Fraction(9, 17)}
    worst = {m: None for m in floors}
    fails = []
    t0 = time.perf_counter()
    for k in range(300):
        mode = list(floors)[k % 3]
        inst = small_instance(rng, mode)
        res = run_solver(inst)
        opt = exact_opt(inst).profit
        SOLVED.append((inst, res.profit))
        assert verify_packing(inst, res.packing).feasible
        if opt:
            ratio = Fraction(res.profit, opt)
            worst[mode] = ratio if worst[mode] is None else min(worst[mode], ratio)
            if ratio < floors[mode]:
                fails.append((inst, res.profit, opt))
    dt = time.perf_counter() - t0
    detail = ", ".join(f"{m.value} worst {float(w):.3f}" for m, w in worst.items() if w is not None)
    report("oracle ratio floor", not fails and dt <= 300, f"300 instances, {len(fails)} below floor; {detail}; {dt:.0f}s")
    assert not fails, fails[:2]
    assert dt <= 300


def test_nfdh_guarantee(report):
    rng = random.Random(5)
    pairs = fails = 0
    while pairs < 10_000:
        d = rng.choice([1, 2, 3])
        eps = Fraction(1, rng.choice([4, 8, 16]))
        L = [rng.randint(4, 120) for _ in range(d)]
        smax = int(2 * eps * min(L))
        if smax < 1:
            continue
        g = grid_for(eps)
        vol = 1
        for x in L:
            vol *= x
        cap = vol - 2 * (d - 1) * eps * vol
        hi = rng.randint(1, smax)
        sides, acc = [], Fraction(0)
        for _ in range(rng.randint(0, 300)):
            s = rng.randint(1, hi)
            r = g.round_up(s) ** d
            if acc + r > cap:
                break
            acc += r
            sides.append(s)
        if not nfdh_guarantee(L, sides, eps):
            continue
        pairs += 1
        if not nfdh_pack(L, [Piece(str(i), (s,) * d) for i, s in enumerate(sides)]).ok:
            fails += 1
    report("NFDH guarantee", fails == 0, f"{pairs} (box, item set) pairs, {fails} failures")
    assert fails == 0


def test_q_monotone(report):
    rng = random.Random(11)
    pairs = violations = rounds = raw_dips = 0
    for k in range(100):
        mode = [Mode.HYPERCUBE, Mode.RECTANGLE, Mode.RECTANGLE_ROTATING][k % 3]
        if mode is Mode.HYPERCUBE:
            inst = random_cubes(rng, n_max=60)
        else:
            inst = structured_rects(rng, mode) if k % 2 else random_rects(rng, mode, n_max=60)
        record: list = []
        if mode is Mode.HYPERCUBE:
            res = solve(inst, EPS, 6, strict=False, record=record)
        else:
            res = solve_rect(inst, EPS, 6, record=record)
        SOLVED.append((inst, res.profit))
        for _, state in record:
            for trace in state.trace:
                rounds += 1
                qs = [q for _, _, q in trace]
                pairs += len(qs) * (len(qs) - 1) // 2
                violations += sum(1 for a, b in zip(qs, qs[1:]) if a > b)
                raws = [r for _, r, _ in trace]
                raw_dips += sum(1 for a, b in zip(raws, raws[1:]) if a > b)
    report("q monotone", violations == 0, f"{rounds} rounds, {pairs} (s <= s') pairs, {violations} violations"
                                          f" ({raw_dips} adjacent dips in raw rounded IP values)")
    assert rounds > 0
    assert violations == 0


def _random_lp(rng: random.Random, max_vars=None) -> TransportLP:
    K = rng.randint(1, 30 if max_vars is None else 4)
    m = rng.randint(1, 4 if max_vars is None else 3)
    w = {}
    for c in range(K):
        for b in range(m):
            if rng.random() < 0.6:
                w[(c, b)] = Fraction(rng.randint(1, 50) if rng.random() < 0.7 else 1)
    if max_vars is not None:
        w = dict(list(w.items())[:max_vars])
    return TransportLP([Fraction(rng.randint(1, 100)) for _ in range(K)], [rng.randint(1, 10) for _ in range(K)],
                       [Fraction(rng.randint(0, 300)) for _ in range(m)], w)


def test_rank_bound(report):
    """Literal bound: fractional coordinates of a returned vertex <= number of box rows.

    Not attainable in general (see test_smalllp.py for an LP whose unique optimum
    has more); it is checked here as stated.
    """
    rng = random.Random(13)
    solved = over = over_2m = over_classes = enum_mismatch = enum_checked = 0
    worst = 0
    while solved < 1000:
        lp = _random_lp(rng)
        if not lp.weights:
            continue
        ep = solve_extreme(lp)
        assert lp.feasible(ep.values)
        solved += 1
        if ep.n_fractional > lp.n_boxes:
            over += 1
            worst = max(worst, ep.n_fractional - lp.n_boxes)
        over_2m += ep.n_fractional > 2 * lp.n_boxes
        over_classes += ep.n_fractional_classes > lp.n_boxes
    while enum_checked < 300:
        lp = _random_lp(rng, max_vars=6)
        if not lp.weights:
            continue
        enum_checked += 1
        if solve_extreme(lp).value != vertex_enumeration(lp):
            enum_mismatch += 1
    ok = over == 0 and enum_mismatch == 0
    report("rank bound", ok, f"{solved} LPs, {over} over the box-row bound (max excess {worst}), "
           f"{over_2m} over twice the bound, {over_classes} with more fractional classes than box rows; "
           f"{enum_checked} tiny LPs, {enum_mismatch} differ from vertex enumeration")
    assert enum_mismatch == 0
    assert over == 0


def _naive(items, ranges, key_of, attrs):
    out = []
    for it in items:
        key = key_of(it)
        if all((lo is None or key[attrs.index(a)] >= lo) and (hi is None or key[attrs.index(a)] <= hi)
               for a, (lo, hi) in ranges.items()):
            out.append(it)
    return out


@pytest.mark.parametrize("cls", [ItemIndex2D, RectIndex4D])
def test_index_equivalence(cls, report):
    rng = random.Random(17)
    idx = cls()
    live: dict[str, Item] = {}
    attrs = cls.attributes
    mismatches = queries = 0
    uid = 0
    for _ in range(10_000):
        r = rng.random()
        if r < 0.35 or not live:
            it = Item.cube(f"i{uid}", rng.randint(1, 60), rng.randint(0, 60)) if cls is ItemIndex2D else \
                Item.rect(f"i{uid}", rng.randint(1, 60), rng.randint(1, 60), rng.randint(0, 60))
            uid += 1
            idx.insert(it)
            live[it.id] = it
            continue
        if r < 0.55:
            victim = rng.choice(sorted(live))
            idx.delete(victim)
            del live[victim]
            continue
        queries += 1
        ranges = {}
        for a in attrs:
            if rng.random() < 0.6:
                lo, hi = sorted(rng.randint(0, 60) for _ in range(2))
                if a == "density":
                    lo, hi = Fraction(lo, 20), Fraction(hi, 20)
                ranges[a] = (lo if rng.random() < 0.8 else None, hi if rng.random() < 0.8 else None)
        sel = _naive(live.values(), ranges, idx.key_of, attrs)
        expect = (len(sel), sum(it.profit for it in sel), sum(it.w for it in sel))
        got = idx.aggregate(ranges)
        ok = got == expect and {it.id for it in idx.report(ranges)} == {it.id for it in sel}
        if sel:
            a = rng.choice(attrs)
            vals = sorted(idx.key_of(it)[attrs.index(a)] for it in sel)
            k = rng.randint(1, len(vals))
            ok = ok and idx.kth_smallest(a, k, ranges) == vals[k - 1]
        mismatches += not ok
    report(f"index equivalence ({cls.__name__})", mismatches == 0,
           f"10000 operations, {queries} queries, {mismatches} mismatches")
    assert mismatches == 0


@pytest.mark.parametrize("mode", list(Mode))
def test_dynamic_consistency(mode, report):
    rng = random.Random(19)
    N = 1000
    if mode is Mode.HYPERCUBE:
        inst = Instance(N, 2, mode, [Item.cube(f"a{i}", rng.randint(1, N // 2), rng.randint(1, 100)) for i in range(10)])
        sess = Session(inst, EPS, 2, strict=False)
    else:
        inst = structured_rects(rng, mode)
        inst = inst.with_items(inst.items[:20])
        sess = RectSession(inst, EPS, 2)
    violations = checks = 0
    uid = 0
    for _ in range(500):
        ids = [it.id for it in sess.index.items()]
        r = rng.random()
        if r < 0.3:
            if mode is Mode.HYPERCUBE:
                sess.insert(Item.cube(f"n{uid}", rng.randint(1, N // 2), rng.randint(1, 100)))
            else:
                sess.insert(Item.rect(f"n{uid}", rng.randint(1, N), rng.randint(1, N), rng.randint(1, 100)))
            uid += 1
        elif r < 0.5 and ids:
            sess.delete(rng.choice(ids))
        else:
            checks += 1
            cur = sess.instance()
            out = sess.output()
            p = out.profit(cur)
            est = sess.estimate()
            chosen = {i for i in (it.id for it in cur.items) if sess.contains(i)}
            ok = verify_packing(cur, out).feasible and chosen == set(out.ids()) and p <= est <= (1 + EPS) * p
            violations += not ok
            SOLVED.append((cur, p))
    report(f"dynamic consistency ({mode.value})", violations == 0,
           f"500 operations, {checks} query rounds, {violations} violations")
    assert violations == 0


def _planted(seed: int):
    rng = random.Random(seed)
    d = rng.choice([1, 2, 3])
    r = rng.randint(1, 3)
    grids, items, ks, phat = [], [], [], []
    k = 0
    for j in range(1, r + 1):
        dims = tuple(rng.randint(1, 3) for _ in range(d))
        cells = 1
        for x in dims:
            cells *= x
        lo = k + 1
        hi = lo + rng.randint(0, 3 * lo + 5)
        chunk = [Item.cube(f"x{j}_{i}", rng.randint(lo, hi), rng.randint(20, 100)) for i in range(cells)]
        items += chunk
        k = max(it.s for it in chunk)
        ks.append(k)
        grids.append(GridBoxSpec(j, dims))
        phat.append(profit_grid(EPS, Fraction(1), Fraction(sum(it.profit for it in chunk)))[0])
    for i in range(rng.randint(0, 30)):
        items.append(Item.cube(f"y{i}", rng.randint(1, 4 * k + 10), rng.randint(1, 100)))
    inst = Instance(10 ** 6, d, Mode.HYPERCUBE, items)
    return inst, GuessConfiguration(tuple(grids), (), tuple(phat)), ks


def test_planted_threshold(report):
    violations = 0
    for seed in range(100):
        inst, config, ks = _planted(seed)
        state = indirect_guess(config, Context(preprocess(inst, EPS), SolverConfig()))
        if not state.complete or any(a > b for a, b in zip(state.thresholds[1:], ks)):
            violations += 1
    report("planted thresholds", violations == 0, f"100 instances, {violations} violations")
    assert violations == 0


def test_density_split_equivalence(report):
    rng = random.Random(23)
    mismatches = 0
    for _ in range(200):
        N = 1000
        items = [Item.rect(f"v{i}", rng.randint(N // 2, N), rng.randint(1, 40), rng.randint(1, 60))
                 for i in range(rng.randint(1, 40))]
        total = sum(it.profit for it in items)
        phat = Fraction(rng.randint(1, total + 20))
        widths = [rng.randint(1, 300) for _ in range(rng.randint(1, 4))]
        eps = Fraction(1, rng.choice([4, 8]))
        got = density_split(RectIndex4D(items), {}, phat, eps, widths)
        expect = density_split_oracle(items, phat, eps, widths)
        if got is None or expect is None:
            mismatches += (got is None) != (expect is None)
            continue
        mine = (got.threshold.d_star, got.threshold.w_star, got.widths, got.cutoffs)
        mismatches += mine != expect
    report("density_split equivalence", mismatches == 0, f"200 sets, {mismatches} mismatches")
    assert mismatches == 0


def test_baseline_dominance(report):
    """Runs last in this module: checks every instance solved above, or a fresh batch when run alone."""
    if not SOLVED:
        rng = random.Random(99)
        modes = [Mode.HYPERCUBE, Mode.RECTANGLE, Mode.RECTANGLE_ROTATING]
        for k in range(150):
            inst = small_instance(rng, modes[k % 3], n_max=30, N_max=200)
            SOLVED.append((inst, run_solver(inst, FUZZ_BUDGET).profit))
    below = []
    for inst, p in SOLVED:
        fit = inst.with_items(it for it in inst.items if inst.fits(it))
        base = max(baseline_single(fit).profit(fit), baseline_nfdh(fit).profit(fit))
        if p < base:
            below.append((inst, p, base))
    report("baseline dominance", not below, f"{len(SOLVED)} solved instances, {len(below)} below a baseline")
    assert not below, below[:2]
