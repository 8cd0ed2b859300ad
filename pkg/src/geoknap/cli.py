"""Command-line front end: gen, solve, verify, dynamic, bench, oracle.

Exit codes: 0 success, 1 infeasible packing or failed verification, 2 usage,
3 unreadable or malformed input.  JSON summaries go to stdout, logs to stderr.
"""

from __future__ import annotations

import csv
import json
import random
import sys
from fractions import Fraction
from pathlib import Path
from typing import Iterator, Optional

import click

from .config import SolverConfig, default_threads
from .core.io import (ParseError, parse_item, read_instance, read_packing, write_instance,
                      write_packing, write_solution, dump_instance)
from .core.rounding import parse_eps
from .core.types import Instance, InstanceError, Item, Mode
from .core.verify import PackingError, verify_packing
from .cube_solver import Session, SolveResult, solve as solve_cubes
from .oracle import LimitExceeded, Limits, baseline_nfdh, baseline_single, exact_opt
from .rect_solver import RectSession, solve_rect

EXIT_OK, EXIT_INFEASIBLE, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class InputError(click.ClickException):
    exit_code = EXIT_IO


def _eps(ctx, param, value):
    if value is None:
        return None
    try:
        return parse_eps(value)
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise click.BadParameter(str(exc)) from exc


def _load(path: str) -> Instance:
    try:
        return read_instance(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except (ParseError, InstanceError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def _log(msg: str) -> None:
    click.echo(msg, err=True)


def solve_instance(instance: Instance, eps: Fraction, budget: Optional[int] = None,
                   cfg: SolverConfig = SolverConfig(), strict: Optional[bool] = None) -> SolveResult:
    """Dispatch on the instance mode."""
    if instance.mode is Mode.HYPERCUBE:
        return solve_cubes(instance, eps, budget, cfg, strict)
    return solve_rect(instance, eps, budget, cfg)


def _cube_eps_ok(instance: Instance, eps: Fraction) -> bool:
    return instance.mode is not Mode.HYPERCUBE or eps < Fraction(1, 2 ** (instance.d + 2))


@click.group()
@click.version_option(package_name="geoknap")
def main() -> None:
    """Geometric knapsack for hypercubes and rectangles."""


# ---------------------------------------------------------------- gen


def generate(mode: Mode, n: int, N: int, d: int, seed: int, profile: str) -> Instance:
    rng = random.Random(seed)
    centers = [rng.randint(1, N) for _ in range(3)]

    def side() -> int:
        if profile == "clustered":
            c = rng.choice(centers)
            spread = max(1, c // 10)
            return min(N, max(1, c + rng.randint(-spread, spread)))
        return rng.randint(1, N)

    items = []
    for i in range(n):
        p = rng.randint(0, 100)
        if mode is Mode.HYPERCUBE:
            items.append(Item.cube(f"i{i}", side(), p))
        else:
            items.append(Item.rect(f"i{i}", side(), side(), p))
    return Instance(N, d, mode, tuple(items))


@main.command()
@click.option("--mode", type=click.Choice([m.value for m in Mode]), default="hypercube")
@click.option("--n", "n", type=click.IntRange(min=0), default=10)
@click.option("--N", "N", type=click.IntRange(min=1), default=100)
@click.option("--d", "d", type=click.IntRange(min=1), default=2)
@click.option("--seed", type=int, default=0)
@click.option("--profile", type=click.Choice(["uniform", "clustered"]), default="uniform")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Instance file (stdout if absent).")
def gen(mode, n, N, d, seed, profile, out):
    """Write a random instance, deterministic in the seed."""
    mode = Mode(mode)
    if mode.is_rect and d != 2:
        raise click.UsageError("rectangle modes require --d 2")
    inst = generate(mode, n, N, d, seed, profile)
    if out is None:
        dump_instance(inst, sys.stdout)
    else:
        try:
            write_instance(inst, out)
        except OSError as exc:
            raise InputError(f"cannot write {out}: {exc}") from exc


# ---------------------------------------------------------------- solve


def _config(box_cap, threads, strict_eps) -> SolverConfig:
    return SolverConfig(box_cap=box_cap, threads=threads or default_threads(), strict_eps=strict_eps)


@main.command()
@click.argument("instance", type=click.Path(dir_okay=False))
@click.option("--epsilon", "eps", callback=_eps, default="1/8", help="Accuracy as 1/k.")
@click.option("--budget", type=click.IntRange(min=0), default=None, help="Configurations to evaluate.")
@click.option("--box-cap", type=click.IntRange(min=1), default=4)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Packing file.")
@click.option("--out-implicit", type=click.Path(dir_okay=False), default=None, help="Implicit solution JSON.")
@click.option("--strict-eps", is_flag=True, help="Reject eps outside the hypercube precondition.")
@click.option("--threads", type=click.IntRange(min=1), default=None)
def solve(instance, eps, budget, box_cap, out, out_implicit, strict_eps, threads):
    """Solve an instance; print a JSON summary."""
    inst = _load(instance)
    if not _cube_eps_ok(inst, eps):
        if strict_eps:
            raise click.BadParameter(f"hypercube mode needs eps < 1/{2 ** (inst.d + 2)}", param_hint="--epsilon")
        _log(f"warning: eps={eps} is outside the hypercube precondition eps < 1/{2 ** (inst.d + 2)}")
    cfg = _config(box_cap, threads, strict_eps)
    res = solve_instance(inst, eps, budget, cfg, strict=strict_eps)
    rep = verify_packing(inst, res.packing)
    try:
        if out:
            write_packing(res.packing, out)
        if out_implicit:
            write_solution(res.solution, out_implicit)
    except OSError as exc:
        raise InputError(f"cannot write output: {exc}") from exc
    keys = ("profit", "n_selected", "branch", "configurations_tried", "wall_time", "epsilon", "budget",
            "baseline_used", "estimate", "mode", "eps_pair", "eps_precondition")
    summary = {k: res.meta[k] for k in keys if k in res.meta}
    summary["threads"] = cfg.threads
    summary["feasible"] = rep.feasible
    click.echo(json.dumps(summary, default=str))
    sys.exit(EXIT_OK if rep.feasible else EXIT_INFEASIBLE)


# ---------------------------------------------------------------- verify


@main.command()
@click.argument("instance", type=click.Path(dir_okay=False))
@click.argument("packing", type=click.Path(dir_okay=False))
def verify(instance, packing):
    """Check a packing; exit 1 and list violations if it is infeasible."""
    inst = _load(instance)
    try:
        pk = read_packing(packing)
    except OSError as exc:
        raise InputError(f"cannot read {packing}: {exc}") from exc
    except (ParseError, ValueError) as exc:
        raise InputError(f"{packing}: {exc}") from exc
    try:
        rep = verify_packing(inst, pk)
    except PackingError as exc:
        raise InputError(str(exc)) from exc
    click.echo(json.dumps({"feasible": rep.feasible, "profit": pk.profit(inst) if rep.feasible else None,
                           "violations": [list(v) for v in rep.violations]}))
    sys.exit(EXIT_OK if rep.feasible else EXIT_INFEASIBLE)


# ---------------------------------------------------------------- dynamic


def parse_script(text: str, mode: Mode) -> list[tuple]:
    """Commands one per line: ``insert {json}``, ``delete id``, ``estimate``, ``output path``, ``contains id``."""
    cmds = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        op, _, arg = line.partition(" ")
        arg = arg.strip()
        if op == "insert":
            try:
                rec = json.loads(arg)
                cmds.append(("insert", parse_item(rec, mode, lineno)))
            except (json.JSONDecodeError, ParseError, InstanceError) as exc:
                raise ParseError(lineno, f"bad insert: {exc}") from exc
        elif op in ("delete", "contains", "output"):
            if not arg:
                raise ParseError(lineno, f"{op} needs an argument")
            cmds.append((op, arg))
        elif op == "estimate":
            cmds.append(("estimate",))
        else:
            raise ParseError(lineno, f"unknown command {op!r}")
    return cmds


def run_script(inst: Instance, cmds: list[tuple], eps: Fraction, budget: Optional[int],
               cfg: SolverConfig) -> Iterator[str]:
    """Yield one transcript line per command."""
    if inst.mode is Mode.HYPERCUBE:
        sess = Session(inst, eps, budget, cfg, strict=cfg.strict_eps)
    else:
        sess = RectSession(inst, eps, budget, cfg)
    for cmd in cmds:
        op = cmd[0]
        if op == "insert":
            if cmd[1].id in sess.index:
                raise InstanceError(f"duplicate item id {cmd[1].id!r}")
            sess.insert(cmd[1])
            yield "ok"
        elif op == "delete":
            sess.delete(cmd[1])
            yield "ok"
        elif op == "estimate":
            yield str(sess.estimate())
        elif op == "contains":
            yield "true" if sess.contains(cmd[1]) else "false"
        else:
            pk = sess.output()
            write_packing(pk, cmd[1])
            yield f"{cmd[1]} {pk.profit(sess.instance())}"


@main.command()
@click.argument("instance", type=click.Path(dir_okay=False))
@click.argument("script", type=click.Path(dir_okay=False))
@click.option("--epsilon", "eps", callback=_eps, default="1/8")
@click.option("--budget", type=click.IntRange(min=0), default=None)
@click.option("--threads", type=click.IntRange(min=1), default=None)
def dynamic(instance, script, eps, budget, threads):
    """Replay an update/query script against a session; one output line per command."""
    inst = _load(instance)
    try:
        cmds = parse_script(Path(script).read_text(encoding="utf-8"), inst.mode)
    except OSError as exc:
        raise InputError(f"cannot read {script}: {exc}") from exc
    except ParseError as exc:
        raise InputError(f"{script}: {exc}") from exc
    cfg = SolverConfig(threads=threads or default_threads(), strict_eps=False)
    try:
        for line in run_script(inst, cmds, eps, budget, cfg):
            click.echo(line)
    except KeyError as exc:
        raise InputError(str(exc.args[0]) if exc.args else "unknown item id") from exc
    except InstanceError as exc:
        raise InputError(str(exc)) from exc
    except OSError as exc:
        raise InputError(f"cannot write output: {exc}") from exc


# ---------------------------------------------------------------- bench


BENCH_FIELDS = ("instance", "mode", "n", "epsilon", "budget", "profit", "single", "nfdh", "oracle",
                "ratio_single", "ratio_nfdh", "ratio_oracle", "wall_time")


def _ratio(a: int, b: Optional[int]) -> str:
    if b is None:
        return ""
    if b == 0:
        return "1.0" if a == 0 else "inf"
    return repr(a / b)


def bench_rows(directory: Path, epsilons: list[Fraction], budgets: list[int], oracle_n: int = 8):
    for path in sorted(directory.glob("*.jsonl")):
        inst = _load(str(path))
        single = baseline_single(inst).profit(inst)
        nfdh = baseline_nfdh(inst).profit(inst)
        try:
            opt = exact_opt(inst, Limits(max_items=oracle_n, max_nodes=2_000_000)).profit
        except LimitExceeded:
            opt = None
        for eps in epsilons:
            for budget in budgets:
                res = solve_instance(inst, eps, budget, SolverConfig(strict_eps=False), strict=False)
                p = res.profit
                yield {"instance": path.name, "mode": inst.mode.value, "n": inst.n, "epsilon": str(eps),
                       "budget": budget, "profit": p, "single": single, "nfdh": nfdh,
                       "oracle": "" if opt is None else opt, "ratio_single": _ratio(p, single),
                       "ratio_nfdh": _ratio(p, nfdh), "ratio_oracle": _ratio(p, opt),
                       "wall_time": f"{res.meta['wall_time']:.4f}"}


@main.command()
@click.argument("directory", type=click.Path(file_okay=False, exists=True))
@click.option("--epsilons", default="1/4", help="Comma separated, e.g. 1/4,1/8.")
@click.option("--budgets", default="12", help="Comma separated integers.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="CSV file (stdout if absent).")
def bench(directory, epsilons, budgets, out):
    """Profit of every *.jsonl instance against the baselines and, for small n, the optimum."""
    try:
        eps_list = [parse_eps(e) for e in epsilons.split(",") if e.strip()]
        budget_list = [int(b) for b in budgets.split(",") if b.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise click.BadParameter(str(exc)) from exc
    fh = open(out, "w", newline="", encoding="utf-8") if out else sys.stdout
    try:
        w = csv.DictWriter(fh, fieldnames=BENCH_FIELDS)
        w.writeheader()
        for row in bench_rows(Path(directory), eps_list, budget_list):
            w.writerow(row)
    finally:
        if out:
            fh.close()


# ---------------------------------------------------------------- oracle


@main.command()
@click.argument("instance", type=click.Path(dir_okay=False))
@click.option("--max-items", type=click.IntRange(min=0), default=8)
@click.option("--timeout", type=float, default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Packing file.")
def oracle(instance, max_items, timeout, out):
    """Exact optimum by exhaustive search (tiny instances only)."""
    inst = _load(instance)
    try:
        res = exact_opt(inst, Limits(max_items=max_items, timeout=timeout))
    except LimitExceeded as exc:
        raise click.UsageError(str(exc)) from exc
    if out:
        try:
            write_packing(res.packing, out)
        except OSError as exc:
            raise InputError(f"cannot write {out}: {exc}") from exc
    click.echo(json.dumps({"profit": res.profit, "n_selected": len(res.packing), "nodes": res.nodes}))


if __name__ == "__main__":
    main()
