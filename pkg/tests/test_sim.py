from __future__ import annotations

import pytest

from anomstream.generator import generate, mixed_spec
from anomstream.model import ObservationGroup, SensorKey, SensorMetadata
from anomstream.oracle import oracle_lines
from anomstream.sim import SimDeadlock, simulate_run
from anomstream.transport import MemorySink
from anomstream.wire import serialize_group
from conftest import quick_config


def spike_scenario(unique_ts: bool = False):
    """6 machines on 3 workers; paired machines share timestamps; spikes at two ticks."""
    msgs = []
    gid = 0
    for tick in range(25):
        for machine in (5, 0, 3, 1, 4, 2):  # arrival order shuffled against machine ids
            ts = 10 * gid if unique_ts else 10 * tick
            spike = tick in (15, 21) and machine % 2 == 0
            value = 50.0 + machine if spike else float(machine)
            msgs.append(serialize_group(
                ObservationGroup(gid, machine, ts, ((0, value), (1, float(tick % 2))))
            ))
            gid += 1
    meta = {SensorKey(m, p): SensorMetadata(2, True) for m in range(6) for p in (0, 1)}
    return msgs, meta


CFG = quick_config(window_size=5, threshold=0.9, worker_count=3)


def test_sim_produces_oracle_output_under_random_schedules():
    msgs, meta = spike_scenario()
    expected = oracle_lines(msgs, meta, CFG)
    assert expected  # scenario must actually produce anomalies
    for seed in range(300):
        sink = MemorySink()
        simulate_run(meta, CFG, msgs, sink, seed=seed, queue_capacity=2)
        keys = [a.order_key() for a in sink.anomalies]
        assert keys == sorted(keys), f"seed={seed}"
        assert sink.lines == expected, f"seed={seed}"


def test_sim_is_deterministic_per_seed():
    msgs, meta = spike_scenario()
    a, b = MemorySink(), MemorySink()
    simulate_run(meta, CFG, msgs, a, seed=123, queue_capacity=2)
    simulate_run(meta, CFG, msgs, b, seed=123, queue_capacity=2)
    assert a.lines == b.lines


def test_sim_adversarial_choosers():
    msgs, meta = spike_scenario()
    expected = oracle_lines(msgs, meta, CFG)

    def flusher_heavy(runnable, step):
        # interleave a flusher round between every other actor step
        if step % 2 == 0:
            return runnable[-1]
        return runnable[(step // 2) % len(runnable)]

    def dispatcher_first(runnable, _step):
        return runnable[0]

    for chooser in (flusher_heavy, dispatcher_first):
        sink = MemorySink()
        simulate_run(meta, CFG, msgs, sink, chooser=chooser, queue_capacity=2)
        assert sink.lines == expected


def test_sim_no_sync_single_worker_matches_oracle():
    # unique timestamps: with one producer, arrival order equals key order
    msgs, meta = spike_scenario(unique_ts=True)
    cfg = quick_config(window_size=5, threshold=0.9, worker_count=1,
                       synchronized_output=False)
    expected = oracle_lines(msgs, meta, cfg)
    sink = MemorySink()
    simulate_run(meta, cfg, msgs, sink, seed=5)
    assert sink.lines == expected


def test_sim_matches_mixed_corpus_oracle():
    msgs, meta = generate(mixed_spec(4, 3, 300, seed=17))
    cfg = quick_config(window_size=5, threshold=0.05, worker_count=4)
    expected = oracle_lines(msgs, meta, cfg)
    for seed in range(20):
        sink = MemorySink()
        simulate_run(meta, cfg, msgs, sink, seed=seed, queue_capacity=3)
        assert sink.lines == expected


def test_sim_step_budget_guard():
    msgs, meta = spike_scenario()
    with pytest.raises(SimDeadlock):
        sink = MemorySink()
        # starving everything but the (always runnable) flusher never finishes
        simulate_run(meta, CFG, msgs, sink, queue_capacity=1,
                     chooser=lambda runnable, _s: runnable[-1], max_steps=2000)
