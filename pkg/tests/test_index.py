import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from geoknap.core import Item
from geoknap.index import ItemIndex2D, OrderTree, RectIndex4D


def _naive_count(items, key_of, attrs, ranges):
    n = 0
    for it in items:
        k = key_of(it)
        if all((lo is None or k[attrs.index(a)] >= lo) and (hi is None or k[attrs.index(a)] <= hi)
               for a, (lo, hi) in ranges.items()):
            n += 1
    return n


def test_insert_delete_count():
    idx = ItemIndex2D()
    idx.insert(Item.cube("a", 3, 5))
    assert idx.count({"s": (3, 3), "p": (5, 5)}) == 1
    idx.delete("a")
    assert idx.count({"s": (3, 3), "p": (5, 5)}) == 0


def test_empty_index():
    idx = RectIndex4D()
    assert idx.count({"h": (1, 9)}) == 0
    assert idx.report({"w": (None, None)}) == []
    assert idx.aggregate() == (0, 0, 0)


def test_range_report():
    a, b = Item.cube("a", 2, 1), Item.cube("b", 4, 9)
    idx = ItemIndex2D([a, b])
    assert idx.count({"s": (1, 3)}) == 1
    assert idx.report({"s": (1, 3)}) == [a]


def test_kth_and_median():
    idx = ItemIndex2D([Item.cube(i, s, 1) for i, s in enumerate([2, 5, 5, 9])])
    assert idx.kth_smallest("s", 3) == 5
    idx = ItemIndex2D([Item.cube(i, s, 1) for i, s in enumerate([2, 5, 9])])
    assert idx.median("s") == 5
    # lower median on even counts
    assert ItemIndex2D([Item.cube(i, s, 1) for i, s in enumerate([1, 2, 3, 4])]).median("s") == 2
    with pytest.raises(IndexError):
        ItemIndex2D().median("s")


def test_binary_search_threshold_examples():
    idx = ItemIndex2D([Item.cube(i, s, 1) for i, s in enumerate([3, 7, 10])])
    assert idx.binary_search_threshold("s", lambda v: v >= 7) == 7
    assert idx.binary_search_threshold("s", lambda v: False) is None


def test_errors():
    idx = ItemIndex2D([Item.cube("a", 1, 1)])
    with pytest.raises(KeyError):
        idx.insert(Item.cube("a", 2, 2))
    with pytest.raises(KeyError):
        idx.delete("nope")
    with pytest.raises(KeyError):
        idx.count({"h": (1, 2)})


@settings(max_examples=60)
@given(st.lists(st.integers(1, 40), max_size=60, unique=True), st.integers(0, 45))
def test_threshold_matches_linear_scan(sizes, cut):
    idx = ItemIndex2D([Item.cube(i, s, 1) for i, s in enumerate(sizes)])
    expect = min((s for s in sizes if s >= cut), default=None)
    assert idx.binary_search_threshold("s", lambda v: v >= cut) == expect


def test_rect_index_sums_match_naive():
    rng = random.Random(3)
    items = [Item.rect(f"r{i}", rng.randint(1, 50), rng.randint(1, 50), rng.randint(0, 50)) for i in range(200)]
    idx = RectIndex4D(items)
    for _ in range(100):
        ranges = {a: tuple(sorted(rng.randint(0, 55) for _ in range(2))) for a in ("h", "w", "p")}
        ranges["density"] = (Fraction(rng.randint(0, 10), 4), None)
        sel = [it for it in items if all(lo <= v <= hi for v, (lo, hi) in
                                         zip((it.h, it.w, it.profit), (ranges["h"], ranges["w"], ranges["p"])))
               and it.density >= ranges["density"][0]]
        assert idx.aggregate(ranges) == (len(sel), sum(it.profit for it in sel), sum(it.w for it in sel))


def test_filtered_kth_width():
    rng = random.Random(4)
    items = [Item.rect(f"r{i}", rng.randint(1, 50), rng.randint(1, 50), rng.randint(1, 8)) for i in range(500)]
    idx = RectIndex4D(items)
    for p in range(1, 9):
        widths = sorted(it.w for it in items if it.profit == p)
        for k in (1, len(widths) // 2 + 1, len(widths)):
            assert idx.kth_smallest("w", k, {"p": (p, p)}) == widths[k - 1]


def test_random_updates_match_naive():
    rng = random.Random(5)
    idx, live = ItemIndex2D(), {}
    for step in range(1000):
        if live and rng.random() < 0.4:
            victim = rng.choice(sorted(live))
            idx.delete(victim)
            del live[victim]
        else:
            it = Item.cube(f"i{step}", rng.randint(1, 30), rng.randint(0, 30))
            idx.insert(it)
            live[it.id] = it
        ranges = {"s": (rng.randint(1, 30), None), "p": (None, rng.randint(0, 30))}
        assert idx.count(ranges) == _naive_count(live.values(), idx.key_of, idx.attributes, ranges)
    assert sorted(it.id for it in idx.items()) == sorted(live)


@given(st.lists(st.tuples(st.integers(0, 50), st.text(max_size=2)), unique=True, max_size=80))
def test_order_tree_ranks(keys):
    tree = OrderTree(keys)
    assert list(tree) == sorted(keys)
    for k, key in enumerate(sorted(keys), 1):
        assert tree.kth(k) == key
        assert tree.rank(key) == k - 1
    for key in keys[::2]:
        tree.delete(key)
    assert list(tree) == sorted(keys[1::2])


def test_order_tree_shape_is_history_independent():
    keys = [(i, str(i)) for i in range(50)]
    a = OrderTree(keys)
    b = OrderTree(reversed(keys))
    assert a.shape() == b.shape()
    assert a.height() <= 20
