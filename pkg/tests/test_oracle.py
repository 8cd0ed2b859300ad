import pytest
from hypothesis import given, settings, strategies as st

from geoknap.core import Instance, Item, Mode, verify_packing
from geoknap.oracle import LimitExceeded, Limits, baseline_nfdh, baseline_single, brute_force_opt, exact_opt

from instances import cube_instances, rect_instances


def test_incompatible_squares():
    inst = Instance(4, 2, Mode.HYPERCUBE, [Item.cube("a", 3, 5), Item.cube("b", 2, 4)])
    assert exact_opt(inst).profit == 5


def test_grid_of_four():
    inst = Instance(4, 2, Mode.HYPERCUBE, [Item.cube(i, 2, 1) for i in range(4)])
    assert exact_opt(inst).profit == 4


def test_rotated_strips_stack():
    inst = Instance(10, 2, Mode.RECTANGLE_ROTATING, [Item.rect(i, 3, 10, 2) for i in range(3)])
    res = exact_opt(inst)
    assert res.profit == 6 and verify_packing(inst, res.packing).feasible


def test_two_large_squares():
    inst = Instance(10, 2, Mode.RECTANGLE, [Item.rect("a", 6, 6, 3), Item.rect("b", 6, 6, 4)])
    assert exact_opt(inst).profit == 4


def test_limits():
    inst = Instance(10, 1, Mode.HYPERCUBE, [Item.cube(i, 1, 1) for i in range(9)])
    with pytest.raises(LimitExceeded):
        exact_opt(inst, Limits(max_items=8))
    assert exact_opt(inst, Limits(max_items=9)).profit == 9


@settings(max_examples=60, deadline=None)
@given(st.one_of(cube_instances(n_max=4, N_max=6), rect_instances(n_max=4, N_max=6)))
def test_exact_matches_brute_force(inst):
    res = exact_opt(inst)
    assert verify_packing(inst, res.packing).feasible
    assert res.profit == res.packing.profit(inst) == brute_force_opt(inst)


def test_baselines_on_empty_and_oversize():
    empty = Instance(5, 2, Mode.HYPERCUBE, ())
    assert len(baseline_single(empty)) == 0 and len(baseline_nfdh(empty)) == 0
    inst = Instance(5, 2, Mode.HYPERCUBE, [Item.cube("big", 6, 100), Item.cube("ok", 5, 1)])
    assert baseline_single(inst).ids() == ["ok"]


def test_single_rotates_when_allowed():
    inst = Instance(10, 2, Mode.RECTANGLE_ROTATING, [Item.rect("a", 3, 12, 1)])
    assert len(baseline_single(inst)) == 0
    inst = Instance(12, 2, Mode.RECTANGLE_ROTATING, [Item.rect("a", 12, 3, 1)])
    assert verify_packing(inst, baseline_single(inst)).feasible


@settings(max_examples=80, deadline=None)
@given(st.one_of(cube_instances(n_max=30, N_max=50), rect_instances(n_max=30, N_max=50)))
def test_baselines_feasible_and_below_opt(inst):
    fit = inst.with_items(it for it in inst.items if inst.fits(it))
    for pk in (baseline_single(fit), baseline_nfdh(fit)):
        assert verify_packing(fit, pk).feasible
    if fit.n <= 5:
        opt = exact_opt(fit).profit
        assert baseline_single(fit).profit(fit) <= opt
        assert baseline_nfdh(fit).profit(fit) <= opt


def test_dense_infeasible_subset_is_cheap():
    # area 374 of 400, infeasible as a whole; full-length strips reduce the box
    dims = [(20, 6, 28), (8, 16, 13), (2, 20, 4), (13, 2, 6), (1, 20, 4), (14, 2, 22), (2, 6, 12)]
    inst = Instance(20, 2, Mode.RECTANGLE_ROTATING, [Item.rect(f"r{i}", h, w, p) for i, (h, w, p) in enumerate(dims)])
    res = exact_opt(inst, Limits(max_nodes=100_000))
    assert res.profit == 85 and verify_packing(inst, res.packing).feasible


def test_long_boxes_must_sit_side_by_side():
    # three 11-wide items all cross the vertical midline
    inst = Instance(20, 2, Mode.RECTANGLE, [Item.rect(i, 11, 7, 1) for i in range(3)])
    assert exact_opt(inst, Limits(max_nodes=10_000)).profit == 2


@settings(max_examples=80, deadline=None)
@given(st.one_of(cube_instances(n_max=6, N_max=12), rect_instances(n_max=6, N_max=12)))
def test_cell_search_matches_coordinate_search(inst):
    cells = exact_opt(inst, Limits(coord_nodes=0))
    coords = exact_opt(inst, Limits(coord_nodes=10 ** 9))
    assert verify_packing(inst, cells.packing).feasible
    assert cells.profit == cells.packing.profit(inst) == coords.profit
