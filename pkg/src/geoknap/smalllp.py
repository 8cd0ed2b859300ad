"""Exact simplex for small transport-type LPs.

The LPs have the form::

    max  sum_{c,b} p_c x_{c,b}
    s.t. sum_c w_{c,b} x_{c,b} <= cap_b      (one box row per box b)
         sum_b x_{c,b}         <= n_c        (one class row per class c)
         x >= 0

There are few box rows and many class rows, so the class rows are handled as
generalized upper bounds: each class keeps one "key" basic variable that is
eliminated through its class row, and the working basis is a square matrix
over the box rows only.  Pivoting is fraction-free: every value is an integer
numerator over one common denominator, so results are exact rationals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement
from math import floor, lcm
from typing import Hashable, Optional, Sequence


@dataclass
class TransportLP:
    """Classes carry a profit and a count bound; boxes carry a capacity.

    ``weights[(c, b)]`` is the amount of box ``b``'s capacity used by one unit
    of class ``c``; a variable exists only where a weight is given.
    """

    profits: list[Fraction]
    counts: list[int]
    caps: list[Fraction]
    weights: dict[tuple[int, int], Fraction] = field(default_factory=dict)
    class_keys: list[Hashable] = field(default_factory=list)
    box_keys: list[Hashable] = field(default_factory=list)

    @property
    def n_classes(self) -> int:
        return len(self.profits)

    @property
    def n_boxes(self) -> int:
        return len(self.caps)

    def variables(self) -> list[tuple[int, int]]:
        return sorted(self.weights)

    def objective(self, x: dict) -> Fraction:
        return sum((self.profits[c] * v for (c, _), v in x.items()), Fraction(0))

    def feasible(self, x: dict) -> bool:
        use = [Fraction(0)] * self.n_boxes
        cnt = [Fraction(0)] * self.n_classes
        for (c, b), v in x.items():
            if v < 0 or (c, b) not in self.weights:
                return False
            use[b] += self.weights[(c, b)] * v
            cnt[c] += v
        return all(u <= cap for u, cap in zip(use, self.caps)) and \
            all(k <= n for k, n in zip(cnt, self.counts))

    def shrunk(self, taken: dict[tuple[int, int], int]) -> Optional["TransportLP"]:
        """The LP left after fixing ``taken`` units; None if they do not fit."""
        caps = list(self.caps)
        counts = list(self.counts)
        for (c, b), k in taken.items():
            caps[b] -= self.weights[(c, b)] * k
            counts[c] -= k
        if any(x < 0 for x in caps) or any(x < 0 for x in counts):
            return None
        return TransportLP(self.profits, counts, caps, self.weights, self.class_keys, self.box_keys)


@dataclass
class ExtremePoint:
    values: dict[tuple[int, int], Fraction]
    value: Fraction
    basis: tuple[int, ...]          # indices into the variable list (structural, then slacks)
    keys: tuple[int, ...]           # key variable of every class
    n_box_rows: int
    pivots: int = 0

    @property
    def fractional(self) -> list[tuple[int, int]]:
        return [k for k, v in self.values.items() if v.denominator != 1]

    @property
    def n_fractional(self) -> int:
        return len(self.fractional)

    @property
    def n_fractional_classes(self) -> int:
        return len({c for c, _ in self.fractional})


class LPError(RuntimeError):
    pass


def _invert(M: list[list[Fraction]]) -> list[list[Fraction]]:
    m = len(M)
    A = [list(row) + [Fraction(int(i == j)) for j in range(m)] for i, row in enumerate(M)]
    for col in range(m):
        piv = next((r for r in range(col, m) if A[r][col] != 0), None)
        if piv is None:
            raise LPError("singular matrix")
        A[col], A[piv] = A[piv], A[col]
        inv = 1 / A[col][col]
        A[col] = [v * inv for v in A[col]]
        for r in range(m):
            if r != col and A[r][col] != 0:
                f = A[r][col]
                A[r] = [a - f * b for a, b in zip(A[r], A[col])]
    return [row[m:] for row in A]


def _adjugate(M: list[list[int]]) -> tuple[list[list[int]], int]:
    """Integer matrix A and integer c > 0 with A M = c I (fraction-free Gauss-Jordan)."""
    m = len(M)
    A = [list(row) + [int(i == j) for j in range(m)] for i, row in enumerate(M)]
    prev = 1
    for col in range(m):
        piv = next((r for r in range(col, m) if A[r][col] != 0), None)
        if piv is None:
            raise LPError("singular working basis")
        A[col], A[piv] = A[piv], A[col]
        pc = A[col]
        p = pc[col]
        for r in range(m):
            if r != col:
                f = A[r][col]
                A[r] = [(p * a - f * b) // prev for a, b in zip(A[r], pc)]
        prev = p
    # every diagonal entry now equals prev; earlier rows are scaled consistently
    c = prev
    out = []
    for i in range(m):
        di = A[i][i]
        row = A[i][m:]
        if di != c:
            row = [v * c // di for v in row]
        out.append(row)
    if c < 0:
        c = -c
        out = [[-v for v in row] for row in out]
    return out, c


def solve_extreme(lp: TransportLP, max_pivots: int = 100_000) -> ExtremePoint:
    """Optimal basic feasible solution of ``lp``.

    Entering variables are chosen by largest reduced cost; after a degenerate
    pivot the rule switches to Bland's (smallest index) until progress resumes,
    which rules out cycling.
    """
    m, K = lp.n_boxes, lp.n_classes
    struct = lp.variables()
    V = len(struct)
    # variable indices: 0..V-1 structural, V..V+m-1 box slacks, V+m..V+m+K-1 class slacks
    # scale each box row and the objective to integers; x is unchanged by this
    row_scale = [1] * m
    for (c, b), w in lp.weights.items():
        row_scale[b] = lcm(row_scale[b], Fraction(w).denominator)
    obj_scale = 1
    for p in lp.profits:
        obj_scale = lcm(obj_scale, Fraction(p).denominator)
    cls = [c for c, _ in struct] + [-1] * m + list(range(K))
    row = [b for _, b in struct] + list(range(m)) + [-1] * K
    wt = [int(Fraction(lp.weights[v]) * row_scale[v[1]]) for v in struct] + [1] * m + [0] * K
    cost = [int(Fraction(lp.profits[c]) * obj_scale) for c, _ in struct] + [0] * (m + K)
    caps_f = [Fraction(x) * row_scale[b] for b, x in enumerate(lp.caps)]
    counts_f = [Fraction(x) for x in lp.counts]
    if any(x < 0 for x in caps_f) or any(x < 0 for x in counts_f):
        raise LPError("negative right-hand side")
    # one common denominator turns the right-hand sides into integers as well
    rhs_scale = 1
    for x in caps_f + counts_f:
        rhs_scale = lcm(rhs_scale, x.denominator)
    caps = [int(x * rhs_scale) for x in caps_f]
    counts = [int(x * rhs_scale) for x in counts_f]

    key = [V + m + t for t in range(K)]
    nonkey = [V + b for b in range(m)]       # basic, not key; len == m
    scost, srow, swt, scls = cost[:V], row[:V], wt[:V], cls[:V]

    def column(j: int) -> list[int]:
        """Box-row column of variable j minus that of its class key."""
        col = [0] * m
        if row[j] >= 0:
            col[row[j]] += wt[j]
        if cls[j] >= 0:
            k = key[cls[j]]
            if row[k] >= 0:
                col[row[k]] -= wt[k]
        return col

    pivots = 0
    bland = False
    while True:
        # all quantities below are numerators over the common denominator D
        W = [[0] * m for _ in range(m)]
        for i, j in enumerate(nonkey):
            for r, v in enumerate(column(j)):
                W[r][i] = v
        A, D = _adjugate(W) if m else ([], 1)
        rhs = list(caps)
        for t in range(K):
            k = key[t]
            if row[k] >= 0:
                rhs[row[k]] -= wt[k] * counts[t]
        val: dict[int, int] = {}
        for i, j in enumerate(nonkey):
            val[j] = sum(A[i][r] * rhs[r] for r in range(m))
        for t in range(K):
            val[key[t]] = counts[t] * D
        for j in nonkey:
            if cls[j] >= 0:
                val[key[cls[j]]] -= val[j]
        # duals: W^T pi = c_N - c_key, so P = D pi
        cN = [cost[j] - (cost[key[cls[j]]] if cls[j] >= 0 else 0) for j in nonkey]
        P = [sum(A[i][r] * cN[i] for i in range(m)) for r in range(m)]
        # reduced cost times D: cost_j D - P[row_j] w_j - (key cost D - P[key row] key w)
        kt = [cost[k] * D - (P[row[k]] * wt[k] if row[k] >= 0 else 0) for k in key]
        red = [c * D - P[r] * w - kt[t] for c, r, w, t in zip(scost, srow, swt, scls)]
        red += [-P[b] for b in range(m)]
        red += [-kt[t] for t in range(K)]
        for j in nonkey:
            red[j] = 0
        for j in key:
            red[j] = 0
        enter = None
        if bland:
            enter = next((j for j, dj in enumerate(red) if dj > 0), None)
        else:
            best = max(red) if red else 0
            if best > 0:
                enter = red.index(best)
        if enter is None:
            break
        if pivots >= max_pivots:
            raise LPError("pivot limit reached")
        pivots += 1

        # direction: nonkey basics move by -theta*y, keys by -theta*delta
        ce = column(enter)
        y = [sum(A[i][r] * a for r, a in enumerate(ce)) for i in range(m)]
        delta: dict[int, int] = {}
        if cls[enter] >= 0:
            delta[cls[enter]] = D
        for i, j in enumerate(nonkey):
            if cls[j] >= 0:
                delta[cls[j]] = delta.get(cls[j], 0) - y[i]
        # ratio val/rate; both share the denominator D, compare by cross-multiplying
        tn, td, leave = None, 1, None
        cands = [(j, y[i]) for i, j in enumerate(nonkey)] + [(key[t], dt) for t, dt in delta.items()]
        for j, rate in cands:
            if rate > 0:
                num = val[j]
                if tn is None or num * td < tn * rate or (num * td == tn * rate and j < leave):
                    tn, td, leave = num, rate, j
        if leave is None:
            raise LPError("unbounded")
        bland = tn == 0

        if leave in nonkey:
            nonkey[nonkey.index(leave)] = enter
            continue
        t = cls[leave]
        others = [j for j in nonkey if cls[j] == t]
        if others:
            # make another basic member the key, then the old key leaves as a nonkey
            new_key = min(others)
            key[t] = new_key
            nonkey[nonkey.index(new_key)] = enter
        else:
            key[t] = enter

    val = {j: Fraction(v, D * rhs_scale) for j, v in val.items()}
    values = {struct[j]: v for j, v in val.items() if j < V and v != 0}
    value = sum((Fraction(lp.profits[struct[j][0]]) * v for j, v in val.items() if j < V), Fraction(0))
    return ExtremePoint(values, value, tuple(sorted(set(nonkey) | set(key))), tuple(key), m, pivots)


def floor_round(x: ExtremePoint | dict) -> dict[tuple[int, int], int]:
    values = x.values if isinstance(x, ExtremePoint) else x
    out = {}
    for k, v in values.items():
        f = floor(v)
        if f:
            out[k] = f
    return out


def greedy_complete(lp: TransportLP, x: dict[tuple[int, int], int]) -> dict[tuple[int, int], int]:
    """Add whole units in order of profit (then index) while every row still fits."""
    x = dict(x)
    use = [Fraction(0)] * lp.n_boxes
    cnt = [0] * lp.n_classes
    for (c, b), k in x.items():
        use[b] += lp.weights[(c, b)] * k
        cnt[c] += k
    for (c, b) in sorted(lp.weights, key=lambda v: (-lp.profits[v[0]], lp.weights[v], v)):
        if lp.profits[c] <= 0:
            continue
        w = lp.weights[(c, b)]
        room = lp.counts[c] - cnt[c]
        if room <= 0:
            continue
        k = room if w == 0 else min(room, floor((lp.caps[b] - use[b]) / w))
        if k > 0:
            x[(c, b)] = x.get((c, b), 0) + k
            use[b] += w * k
            cnt[c] += k
    return x


@dataclass
class GuessResult:
    x: dict[tuple[int, int], int]
    value: Fraction
    guess: tuple[tuple[int, int], ...]
    candidates: int
    exhaustive: bool


def _guess_space(lp: TransportLP, top_k: int, budget: int):
    order = sorted(lp.weights, key=lambda v: (-lp.profits[v[0]], v))
    yield ()
    emitted = 1
    for size in range(1, top_k + 1):
        for combo in combinations_with_replacement(range(len(order)), size):
            if emitted >= budget:
                return
            yield tuple(order[i] for i in combo)
            emitted += 1


def guess_space_size(n_vars: int, top_k: int) -> int:
    from math import comb
    if n_vars == 0:
        return 1
    return sum(comb(n_vars + k - 1, k) for k in range(top_k + 1))


def guess_and_solve(lp: TransportLP, top_k: int = 0, budget: int = 100_000) -> GuessResult:
    """Best of: fix a few guessed units, solve the rest exactly, round down.

    Guesses are multisets of at most ``top_k`` variables.  If the guess space
    exceeds ``budget`` only its first ``budget`` members are tried, in order of
    decreasing guessed profit, so the result never gets worse as the budget grows.
    """
    best: Optional[GuessResult] = None
    tried = 0
    exhaustive = guess_space_size(len(lp.weights), top_k) <= budget
    for g in _guess_space(lp, top_k, budget):
        tried += 1
        taken: dict[tuple[int, int], int] = {}
        for v in g:
            taken[v] = taken.get(v, 0) + 1
        rest = lp.shrunk(taken)
        if rest is None:
            continue
        x = floor_round(solve_extreme(rest))
        for v, k in taken.items():
            x[v] = x.get(v, 0) + k
        val = lp.objective(x)
        if best is None or val > best.value:
            best = GuessResult(x, val, g, 0, exhaustive)
    assert best is not None
    best.candidates = tried
    return best


def vertex_enumeration(lp: TransportLP) -> Fraction:
    """Optimum by enumerating every basis of the inequality system (tiny LPs only)."""
    from itertools import combinations
    struct = lp.variables()
    V = len(struct)
    rows: list[tuple[list[Fraction], Fraction]] = []
    for b in range(lp.n_boxes):
        rows.append(([lp.weights[v] if v[1] == b else Fraction(0) for v in struct], Fraction(lp.caps[b])))
    for c in range(lp.n_classes):
        rows.append(([Fraction(1) if v[0] == c else Fraction(0) for v in struct], Fraction(lp.counts[c])))
    for i in range(V):
        rows.append(([Fraction(-1) if k == i else Fraction(0) for k in range(V)], Fraction(0)))
    best = None
    for sel in combinations(range(len(rows)), V):
        A = [list(rows[r][0]) for r in sel]
        rhs = [rows[r][1] for r in sel]
        try:
            inv = _invert(A) if V else []
        except LPError:
            continue
        x = [sum((inv[i][k] * rhs[k] for k in range(V)), Fraction(0)) for i in range(V)]
        if all(sum((a * xi for a, xi in zip(r, x)), Fraction(0)) <= rhs_ for r, rhs_ in rows):
            val = sum((lp.profits[v[0]] * xi for v, xi in zip(struct, x)), Fraction(0))
            if best is None or val > best:
                best = val
    return best if best is not None else Fraction(0)
