"""Newline-delimited JSON files for instances, packings and implicit solutions."""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Iterator, TextIO, Union

from .types import (Cell, HBox, ImplicitSolution, Instance, InstanceError, Item, LBox, Mode,
                    NStarBox, Packing, PlacedBox, Placement, SBox, VBox)

PathLike = Union[str, Path]


class ParseError(ValueError):
    def __init__(self, line: int, msg: str):
        super().__init__(f"line {line}: {msg}")
        self.line = line


def _records(fh: TextIO) -> Iterator[tuple[int, dict]]:
    for lineno, raw in enumerate(fh, 1):
        if not raw.strip():
            continue
        try:
            rec = json.loads(raw)
        except json.JSONDecodeError as e:
            raise ParseError(lineno, f"invalid JSON ({e.msg})") from None
        if not isinstance(rec, dict):
            raise ParseError(lineno, "expected a JSON object")
        yield lineno, rec


def _int(rec: dict, key: str, lineno: int) -> int:
    if key not in rec:
        raise ParseError(lineno, f"missing key {key!r}")
    v = rec[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ParseError(lineno, f"{key!r} must be an integer")
    return v


def _header(rec: dict, lineno: int) -> tuple[int, int, Mode]:
    N, d = _int(rec, "N", lineno), _int(rec, "d", lineno)
    try:
        mode = Mode(rec.get("mode", "hypercube"))
    except ValueError:
        raise ParseError(lineno, f"unknown mode {rec.get('mode')!r}") from None
    if mode.is_rect and d != 2:
        raise ParseError(lineno, "rectangle mode requires d=2")
    if N < 1 or d < 1:
        raise ParseError(lineno, "N and d must be positive")
    return N, d, mode


def parse_item(rec: dict, mode: Mode, lineno: int = 0) -> Item:
    if "id" not in rec:
        raise ParseError(lineno, "missing key 'id'")
    p = _int(rec, "p", lineno)
    try:
        if mode is Mode.HYPERCUBE:
            return Item.cube(rec["id"], _int(rec, "s", lineno), p)
        return Item.rect(rec["id"], _int(rec, "h", lineno), _int(rec, "w", lineno), p)
    except InstanceError as e:
        raise ParseError(lineno, str(e)) from None


def item_record(item: Item) -> dict:
    if item.is_cube:
        return {"id": item.id, "s": item.s, "p": item.profit}
    return {"id": item.id, "h": item.h, "w": item.w, "p": item.profit}


def load_instance(fh: TextIO) -> Instance:
    recs = _records(fh)
    try:
        lineno, head = next(recs)
    except StopIteration:
        raise ParseError(1, "empty file, expected header") from None
    N, d, mode = _header(head, lineno)
    items = []
    seen = set()
    for lineno, rec in recs:
        it = parse_item(rec, mode, lineno)
        if it.id in seen:
            raise ParseError(lineno, f"duplicate item id {it.id!r}")
        seen.add(it.id)
        items.append(it)
    return Instance(N, d, mode, tuple(items))


def dump_instance(instance: Instance, fh: TextIO) -> None:
    fh.write(json.dumps({"N": instance.N, "d": instance.d, "mode": instance.mode.value}) + "\n")
    for it in instance.items:
        fh.write(json.dumps(item_record(it)) + "\n")


def read_instance(path: PathLike) -> Instance:
    with open(path, encoding="utf-8") as fh:
        return load_instance(fh)


def write_instance(instance: Instance, path: PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        dump_instance(instance, fh)


def load_packing(fh: TextIO) -> Packing:
    recs = _records(fh)
    try:
        lineno, head = next(recs)
    except StopIteration:
        raise ParseError(1, "empty file, expected header") from None
    N, d = _int(head, "N", lineno), _int(head, "d", lineno)
    pls = []
    for lineno, rec in recs:
        origin = rec.get("origin")
        if "id" not in rec or not isinstance(origin, list) or len(origin) != d \
                or not all(isinstance(x, int) and not isinstance(x, bool) for x in origin):
            raise ParseError(lineno, f"expected {{id, origin: [{d} integers], rot}}")
        pls.append(Placement(str(rec["id"]), tuple(origin), bool(rec.get("rot", False))))
    return Packing(N, d, tuple(pls))


def dump_packing(packing: Packing, fh: TextIO) -> None:
    fh.write(json.dumps({"N": packing.N, "d": packing.d}) + "\n")
    for pl in packing.placements:
        fh.write(json.dumps({"id": pl.id, "origin": list(pl.origin), "rot": pl.rotated}) + "\n")


def read_packing(path: PathLike) -> Packing:
    with open(path, encoding="utf-8") as fh:
        return load_packing(fh)


def write_packing(packing: Packing, path: PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        dump_packing(packing, fh)


# ---------------------------------------------------------------- implicit solutions

_BOX_TYPES = {cls.kind: cls for cls in (NStarBox, SBox, LBox, HBox, VBox)}


def _frac(x: Fraction) -> str:
    return str(Fraction(x))


def _box_to_json(box) -> dict:
    out = {"kind": box.kind}
    for k, v in box.__dict__.items():
        if isinstance(v, tuple):
            v = [_frac(x) if isinstance(x, Fraction) else x for x in v]
        elif isinstance(v, Fraction):
            v = _frac(v)
        out[k] = v
    return out


_FRACTION_FIELDS = {"shares", "small_share", "vert_share"}


def _box_from_json(rec: dict):
    cls = _BOX_TYPES[rec["kind"]]
    kw = {}
    for k, v in rec.items():
        if k == "kind":
            continue
        if k in _FRACTION_FIELDS:
            v = tuple(Fraction(x) for x in v) if isinstance(v, list) else Fraction(v)
        elif isinstance(v, list):
            v = tuple(v)
        kw[k] = v
    return cls(**kw)


def _bound_out(v):
    return _frac(v) if isinstance(v, Fraction) and v.denominator != 1 else (None if v is None else int(v))


def _bound_in(v):
    return Fraction(v) if isinstance(v, str) else v


def solution_to_json(sol: ImplicitSolution) -> dict:
    return {
        "mode": sol.mode.value,
        "eps": _frac(sol.eps),
        "thresholds": list(sol.thresholds),
        "boxes": [{"box": _box_to_json(pb.box), "origin": list(pb.origin)} for pb in sol.boxes],
        "cells": [{"ranges": [[r[0], _bound_out(r[1]), _bound_out(r[2])] for r in c.ranges],
                   "classes": [list(x) for x in c.classes],
                   "order": c.order, "label": c.label, "pinned": list(c.pinned)} for c in sol.cells],
        "assignment": [list(row) for row in sol.assignment],
        "total_profit_estimate": sol.total_profit_estimate,
        "normalized": sol.normalized,
        "explicit": None if sol.explicit is None else {
            "N": sol.explicit.N, "d": sol.explicit.d,
            "placements": [{"id": p.id, "origin": list(p.origin), "rot": p.rotated}
                           for p in sol.explicit.placements]},
        "meta": sol.meta,
    }


def solution_from_json(rec: dict) -> ImplicitSolution:
    ex = rec.get("explicit")
    explicit = None
    if ex is not None:
        explicit = Packing(ex["N"], ex["d"], tuple(
            Placement(p["id"], tuple(p["origin"]), bool(p["rot"])) for p in ex["placements"]))
    return ImplicitSolution(
        mode=Mode(rec["mode"]),
        eps=Fraction(rec["eps"]),
        thresholds=tuple(rec["thresholds"]),
        boxes=tuple(PlacedBox(_box_from_json(b["box"]), tuple(b["origin"])) for b in rec["boxes"]),
        cells=tuple(Cell(tuple((r[0], _bound_in(r[1]), _bound_in(r[2])) for r in c["ranges"]),
                         tuple(tuple(x) for x in c["classes"]), c["order"], c["label"],
                         tuple(c.get("pinned", ()))) for c in rec["cells"]),
        assignment=tuple(tuple(row) for row in rec["assignment"]),
        total_profit_estimate=rec["total_profit_estimate"],
        normalized=rec["normalized"],
        explicit=explicit,
        meta=rec.get("meta", {}),
    )


def write_solution(sol: ImplicitSolution, path: PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(solution_to_json(sol), fh, default=str)
        fh.write("\n")


def read_solution(path: PathLike) -> ImplicitSolution:
    with open(path, encoding="utf-8") as fh:
        return solution_from_json(json.load(fh))
