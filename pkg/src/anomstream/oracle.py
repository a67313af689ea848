"""Single-threaded, zero-optimization reference run; ground truth for tests.

Processes messages strictly in order with the validating parser. Every full
window is clustered from scratch, transition counts are recounted from
scratch, then detection runs - no prefix bookkeeping, no cluster reuse, no
single-cluster or low-distinct shortcuts. The leaf stage functions
(``kmeans_full``, ``count_transitions``, ``detect``) are shared with the
engine so equivalence is exact rather than tolerance-based: the code paths
that differ are exactly the optimizations under test.
"""

from __future__ import annotations

from collections import deque
from typing import Iterable

from .clustering import kmeans_full
from .markov import count_transitions, detect
from .model import (
    Anomaly,
    RunConfig,
    SensorKey,
    SensorMetadata,
    format_anomaly,
    validate_config,
)
from .wire import parse_group_reference


def oracle_run(messages: Iterable[bytes], metadata: dict[SensorKey, SensorMetadata],
               config: RunConfig) -> list[Anomaly]:
    """Reference anomaly list in (timestamp, machine, property) order.

    Ignores ``config.worker_count``; any parse error aborts (oracle inputs
    must be clean).
    """
    validate_config(config)
    window_size = config.window_size
    windows: dict[SensorKey, deque[float]] = {}
    clusters: dict[SensorKey, int] = {}
    for key, meta in metadata.items():
        if meta.stateful:
            windows[key] = deque(maxlen=window_size)
            clusters[key] = meta.cluster_count

    found: list[tuple[int, int, int, float]] = []
    for raw in messages:
        group = parse_group_reference(raw)
        for property_id, value in group.readings:
            key = SensorKey(group.machine_id, property_id)
            win = windows.get(key)
            if win is None:
                continue
            win.append(value)
            if len(win) < window_size:
                continue
            result = kmeans_full(list(win), clusters[key], config.max_kmeans_iterations)
            counts = count_transitions(result.assignments)
            probability = detect(result.assignments, counts,
                                 config.transition_count, config.threshold)
            if probability is not None:
                found.append((group.timestamp, group.machine_id, property_id, probability))

    found.sort(key=lambda f: (f[0], f[1], f[2]))
    return [
        Anomaly(i, machine_id, property_id, ts, probability)
        for i, (ts, machine_id, property_id, probability) in enumerate(found)
    ]


def oracle_lines(messages: Iterable[bytes], metadata: dict[SensorKey, SensorMetadata],
                 config: RunConfig) -> list[str]:
    return [format_anomaly(a) for a in oracle_run(messages, metadata, config)]
