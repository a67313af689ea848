from __future__ import annotations

import time

from hypothesis import given, settings, strategies as st

from anomstream.model import SensorKey, SensorMetadata
from anomstream.windows import SensorWindow, WindowStore, prefix_scan


def test_slide_fill_phase():
    win = SensorWindow(3, 2)
    assert win.slide(1.0) is None
    assert win.slide(2.0) is None
    assert list(win.values) == [1.0, 2.0]
    assert not win.is_full()
    assert win.slide(5.0) is None
    assert win.is_full()


def test_slide_evicts_oldest_and_records_prev_first():
    win = SensorWindow(3, 2)
    for v in (1.0, 2.0, 5.0):
        win.slide(v)
    assert win.slide(9.0) == 1.0
    assert list(win.values) == [2.0, 5.0, 9.0]
    assert win.prev_first == 1.0


def test_empty_window_is_not_full():
    assert not SensorWindow(3, 2).is_full()


@settings(deadline=None, max_examples=60)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=32), min_size=1, max_size=120))
def test_window_holds_last_values_in_arrival_order(stream):
    win = SensorWindow(3, 2)
    for v in stream:
        win.slide(v)
    assert len(win.values) == min(len(stream), 3)
    assert list(win.values) == stream[-3:]


def test_hundred_slides_keep_length():
    win = SensorWindow(3, 2)
    for i in range(100):
        win.slide(float(i))
        assert len(win.values) <= 3
    assert len(win.values) == 3


def test_prefix_scan_examples():
    assert prefix_scan([2.0, 5.0, 2.0, 7.0], 2) == ({2.0: 1, 5.0: 1}, 1)
    assert prefix_scan([2.0, 2.0, 5.0, 7.0], 2) == ({2.0: 2, 5.0: 1}, 2)
    # fewer distinct values than clusters: the whole window is the prefix
    assert prefix_scan([1.0, 1.0, 1.0, 2.0], 3) == ({1.0: 3, 2.0: 1}, 3)
    assert prefix_scan([4.0, 4.0, 4.0], 1) == ({4.0: 1}, 0)


def _store():
    meta = {
        SensorKey(0, 0): SensorMetadata(3, True),
        SensorKey(0, 1): SensorMetadata(1, False),
        SensorKey(1, 0): SensorMetadata(2, True),
    }
    return WindowStore.build(meta, window_size=4)


def test_lookup_returns_empty_window_for_stateful():
    store = _store()
    win = store.lookup(0, 0)
    assert win is not None and len(win.values) == 0 and win.cluster_count == 3


def test_lookup_absent_for_non_stateful_and_out_of_range():
    store = _store()
    assert store.lookup(0, 1) is None
    assert store.lookup(0, 9) is None
    assert store.lookup(7, 0) is None


def test_store_has_one_window_per_stateful_sensor():
    store = _store()
    keys = [key for key, _ in store.all_windows()]
    assert keys == [SensorKey(0, 0), SensorKey(1, 0)]


def test_lookup_cost_does_not_scan_machines():
    def build(machines):
        meta = {SensorKey(m, 0): SensorMetadata(2, True) for m in range(machines)}
        return WindowStore.build(meta, window_size=4)

    def per_lookup(store, machines):
        n = 100_000
        best = float("inf")
        for _ in range(3):
            t0 = time.perf_counter()
            for i in range(n):
                store.lookup(i % machines, 0)
            best = min(best, time.perf_counter() - t0)
        return best / n

    small = per_lookup(build(10), 10)
    large = per_lookup(build(1000), 1000)
    assert large < small * 10  # flat per-lookup cost, generous slack for timer noise
