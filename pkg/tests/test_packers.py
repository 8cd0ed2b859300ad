from fractions import Fraction

import pytest
from hypothesis import assume, given, settings, strategies as st

from geoknap.core import HBox, Instance, Item, Mode, NStarBox, Packing, VBox, verify_packing
from geoknap.core.rounding import grid_for
from geoknap.packers import (PackerError, Piece, arrange_boxes, hstack_pack, nfdh_guarantee, nfdh_pack,
                             nstar_pack, single_pack, vstack_pack)


def _cubes(sides, d):
    return [Piece(f"c{i}", (s,) * d) for i, s in enumerate(sides)]


def _feasible(box, pieces, frag):
    """Check a fragment inside its box through the verifier."""
    d = len(box)
    assert len(set(box)) == 1
    by_id = {p.id: p for p in pieces}
    items = [Item.cube(pl.id, by_id[pl.id].extents[0], 1) for pl in frag.placements]
    inst = Instance(box[0], d, Mode.HYPERCUBE, items)
    return verify_packing(inst, Packing(box[0], d, tuple(frag.placements))).feasible


def test_nfdh_single():
    frag = nfdh_pack((10, 10), _cubes([5], 2))
    assert frag.ok and frag.placements[0].origin == (0, 0)


def test_nfdh_shelves():
    frag = nfdh_pack((10, 10), _cubes([4] * 5, 2))
    assert len(frag.placements) == 4
    assert frag.failed.id == "c4"
    assert sorted(pl.origin for pl in frag.placements) == [(0, 0), (0, 4), (4, 0), (4, 4)]


def test_nfdh_oversize_item_fails_immediately():
    frag = nfdh_pack((10, 10), _cubes([11, 1], 2))
    assert not frag.placements and len(frag.residue) == 2


@settings(max_examples=80)
@given(st.integers(1, 3), st.integers(4, 40), st.lists(st.integers(1, 12), max_size=40))
def test_nfdh_prefix_is_feasible(d, L, sides):
    pieces = _cubes(sides, d)
    frag = nfdh_pack((L,) * d, pieces)
    assert len(frag.placements) + len(frag.residue) == len(pieces)
    assert _feasible((L,) * d, pieces, frag)


def test_guarantee_examples():
    assert nfdh_guarantee((16, 16), [2] * 16, Fraction(1, 8))
    assert not nfdh_guarantee((16, 16), [16], Fraction(1, 8))
    assert nfdh_guarantee((16, 16), [], Fraction(1, 8))


@settings(max_examples=200)
@given(st.integers(1, 3), st.sampled_from([4, 8, 16]), st.lists(st.integers(4, 100), min_size=3, max_size=3),
       st.lists(st.integers(1, 50), max_size=120))
def test_guarantee_implies_success(d, k, lengths, sides):
    eps = Fraction(1, k)
    box = lengths[:d]
    assume(nfdh_guarantee(box, sides, eps))
    assert nfdh_pack(box, _cubes(sides, d)).ok


def test_guarantee_volume_is_exact():
    eps = Fraction(1, 4)
    g = grid_for(eps)
    side = 2
    per = g.round_up(side) ** 2
    cap = 100 * 100 - 2 * eps * 100 * 100
    fit = int(cap / per)
    assert nfdh_guarantee((100, 100), [side] * fit, eps)
    assert not nfdh_guarantee((100, 100), [side] * (fit + 1), eps)


def test_nstar_examples():
    spec = NStarBox(1, (2, 2), 1, 3)
    frag = nstar_pack(spec, _cubes([3] * 4, 2))
    assert [pl.origin for pl in frag.placements] == [(0, 0), (3, 0), (0, 3), (3, 3)]
    assert nstar_pack(spec, _cubes([2], 2)).placements[0].origin == (0, 0)
    with pytest.raises(PackerError):
        nstar_pack(spec, _cubes([3] * 5, 2))
    with pytest.raises(PackerError):
        nstar_pack(spec, _cubes([4], 2))


def test_stack_examples():
    frag = hstack_pack(HBox(1, 10, 10), [Piece("a", (5, 3)), Piece("b", (5, 4))])
    assert [pl.origin[1] for pl in frag.placements] == [0, 3]
    with pytest.raises(PackerError):
        vstack_pack(VBox(0, 10, 10), [Piece("a", (6, 5)), Piece("b", (5, 5))])
    with pytest.raises(PackerError):
        hstack_pack(HBox(1, 5, 10), [Piece("a", (5, 3)), Piece("b", (5, 4))])


def test_vstack_orders_by_height():
    frag = vstack_pack(VBox(0, 10, 10), [Piece("a", (2, 3)), Piece("b", (2, 8)), Piece("c", (2, 5))])
    assert [pl.id for pl in frag.placements] == ["b", "c", "a"]
    assert [pl.origin for pl in frag.placements] == [(0, 0), (2, 0), (4, 0)]


@settings(max_examples=60)
@given(st.lists(st.tuples(st.integers(1, 10), st.integers(1, 10)), max_size=8))
def test_random_stacks_verify(dims):
    W = 10
    H = sum(h for h, _ in dims) or 1
    N = max(W, H)
    frag = hstack_pack(HBox(1, H, W), [Piece(f"r{i}", (w, h)) for i, (h, w) in enumerate(dims)])
    inst = Instance(N, 2, Mode.RECTANGLE, [Item.rect(f"r{i}", h, w, 1) for i, (h, w) in enumerate(dims)])
    assert verify_packing(inst, Packing(N, 2, tuple(frag.placements))).feasible


def test_single_pack():
    assert single_pack((5, 5), [Piece("a", (5, 5))]).placements[0].origin == (0, 0)
    with pytest.raises(PackerError):
        single_pack((5, 5), [Piece("a", (6, 5))])
    with pytest.raises(PackerError):
        single_pack((5, 5), [Piece("a", (1, 1)), Piece("b", (1, 1))])


def test_arrange_boxes():
    assert sorted(arrange_boxes([(5, 5)] * 4, 10)) == [(0, 0), (0, 5), (5, 0), (5, 5)]
    assert arrange_boxes([(6, 6), (6, 6)], 10) is None
    assert arrange_boxes([], 3) == []
