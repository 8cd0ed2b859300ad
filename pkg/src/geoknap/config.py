"""Solver knobs.  Defaults keep desk-scale runs in the sub-second range."""

from __future__ import annotations

import os
from dataclasses import dataclass, replace
from typing import Optional


@dataclass(frozen=True)
class SolverConfig:
    budget: int = 12             # configurations evaluated per solve
    box_cap: int = 4             # max boxes per configuration
    guess_budget: int = 4        # guess enumeration candidates per IP evaluation
    top_k_cap: int = 1           # items guessed before the LP
    eps_pairs: Optional[int] = 2  # how many (eps_large, eps_small) pairs to try; None = all
    cascade_c: Optional[int] = None
    u_grid_k: Optional[int] = None
    strict_eps: bool = True
    tiny_branch: bool = True
    threads: int = 1

    def with_(self, **kw) -> "SolverConfig":
        return replace(self, **kw)


def default_threads() -> int:
    env = os.environ.get("GEOKNAP_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1
