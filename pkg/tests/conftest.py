from __future__ import annotations

import random

from anomstream.engine import Engine
from anomstream.model import ObservationGroup, RunConfig
from anomstream.transport import MemoryInput, MemorySink


def quick_config(**overrides) -> RunConfig:
    """RunConfig with warmup off; tests opt back in explicitly."""
    defaults = dict(window_size=5, threshold=0.05, worker_count=1,
                    warmup_groups=0, warmup_passes=0)
    defaults.update(overrides)
    return RunConfig(**defaults)


def run_engine(messages, metadata, config, **engine_kwargs):
    sink = MemorySink()
    report = Engine(metadata, config, **engine_kwargs).run(MemoryInput(messages), sink)
    return sink, report


def random_group(rng: random.Random, *, group_id=None, machine_id=None,
                 timestamp=None, readings=None) -> ObservationGroup:
    """Random well-formed group with varied id widths and value shapes."""
    if group_id is None:
        group_id = rng.randrange(10 ** rng.randrange(1, 10))
    if machine_id is None:
        machine_id = rng.randrange(10 ** rng.randrange(1, 5))
    if timestamp is None:
        timestamp = rng.randrange(10 ** rng.randrange(1, 12))
    if readings is None:
        count = rng.randrange(1, 8)
        pids = sorted(rng.sample(range(200), count))
        readings = tuple((pid, random_value(rng)) for pid in pids)
    return ObservationGroup(group_id, machine_id, timestamp, readings)


def random_value(rng: random.Random) -> float:
    kind = rng.randrange(4)
    if kind == 0:
        return float(rng.randrange(-1000, 1000))
    if kind == 1:
        return rng.uniform(-1e3, 1e3)
    if kind == 2:
        return rng.uniform(-1, 1) * 10.0 ** rng.randrange(-20, 20)
    return -rng.uniform(0, 1e-5)
