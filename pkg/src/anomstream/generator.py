"""Deterministic synthetic workload generator.

Produces a wire-format corpus plus its metadata file. Timestamps increase by
10 ms per group; machines emit round-robin, one group per machine per tick,
every group carrying all sensors of its machine. Identical spec and seed give
a byte-identical corpus.

Value models per sensor:

* constant(v)          - always v; windows collapse to a single cluster.
* cyclic(a1..ap)       - repeats the alphabet; with p dividing the window size
                         every slide evicts exactly the value it inserts.
* uniform(alphabet)    - independent uniform draws from a finite alphabet.
* spike(base, v, rate) - base model with a rare injected value.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path
from typing import Union

from .model import ObservationGroup, SensorKey, SensorMetadata, serialize_metadata
from .wire import serialize_group


@dataclass(frozen=True)
class Constant:
    value: float


@dataclass(frozen=True)
class Cyclic:
    values: tuple[float, ...]


@dataclass(frozen=True)
class Uniform:
    alphabet: tuple[float, ...]


@dataclass(frozen=True)
class Spike:
    base: Union[Constant, Cyclic, Uniform]
    value: float
    rate: float


Model = Union[Constant, Cyclic, Uniform, Spike]


@dataclass(frozen=True)
class SensorSpec:
    model: Model
    cluster_count: int
    stateful: bool = True


@dataclass(frozen=True)
class GeneratorSpec:
    machines: int
    sensors_per_machine: int
    groups: int  # total messages; machine of group g is g mod machines
    sensors: tuple[tuple[SensorSpec, ...], ...]  # [machine][sensor]
    seed: int = 0


def _sensor_rng(seed: int, machine: int, sensor: int) -> random.Random:
    return random.Random(seed * 1_000_000_007 + machine * 100_003 + sensor)


def _draw(model: Model, rng: random.Random, step: int) -> float:
    if isinstance(model, Constant):
        return model.value
    if isinstance(model, Cyclic):
        return model.values[step % len(model.values)]
    if isinstance(model, Uniform):
        return model.alphabet[rng.randrange(len(model.alphabet))]
    if rng.random() < model.rate:
        return model.value
    return _draw(model.base, rng, step)


def metadata_for(spec: GeneratorSpec) -> dict[SensorKey, SensorMetadata]:
    meta = {}
    for machine, row in enumerate(spec.sensors):
        for sensor, s in enumerate(row):
            meta[SensorKey(machine, sensor)] = SensorMetadata(s.cluster_count, s.stateful)
    return meta


def generate(spec: GeneratorSpec) -> tuple[list[bytes], dict[SensorKey, SensorMetadata]]:
    """Render the corpus messages and the matching metadata map."""
    rngs = [
        [_sensor_rng(spec.seed, m, s) for s in range(spec.sensors_per_machine)]
        for m in range(spec.machines)
    ]
    messages = []
    for g in range(spec.groups):
        machine = g % spec.machines
        step = g // spec.machines
        row = spec.sensors[machine]
        readings = tuple(
            (s, _draw(row[s].model, rngs[machine][s], step))
            for s in range(spec.sensors_per_machine)
        )
        group = ObservationGroup(g, machine, 10 * g, readings)
        messages.append(serialize_group(group))
    return messages, metadata_for(spec)


def write_corpus(spec: GeneratorSpec, corpus_path: str | Path, meta_path: str | Path) -> None:
    messages, metadata = generate(spec)
    Path(corpus_path).write_bytes(b"".join(messages))
    Path(meta_path).write_text(serialize_metadata(metadata), encoding="utf-8")


# -- ready-made spec builders -------------------------------------------------

def uniform_sensors(machines: int, sensors: int, model_fn) -> tuple[tuple[SensorSpec, ...], ...]:
    return tuple(
        tuple(model_fn(m, s) for s in range(sensors)) for m in range(machines)
    )


def constant_spec(machines: int, sensors: int, groups: int, *, cluster_count: int = 3,
                  seed: int = 0) -> GeneratorSpec:
    """Every window is single-valued: the whole chain short-circuits."""
    def build(m: int, s: int) -> SensorSpec:
        return SensorSpec(Constant(float(10 * m + s)), cluster_count)

    return GeneratorSpec(machines, sensors, groups, uniform_sensors(machines, sensors, build), seed)


def cyclic_spec(machines: int, sensors: int, groups: int, *, period: int,
                cluster_count: int | None = None, seed: int = 0) -> GeneratorSpec:
    """Period-p cycles; with p dividing the window size, every slide reuses clusters."""
    k = cluster_count if cluster_count is not None else period

    def build(m: int, s: int) -> SensorSpec:
        base = float(100 * m + 10 * s)
        return SensorSpec(Cyclic(tuple(base + i for i in range(period))), k)

    return GeneratorSpec(machines, sensors, groups, uniform_sensors(machines, sensors, build), seed)


def uniform_alphabet_spec(machines: int, sensors: int, groups: int, *, alphabet_size: int,
                          cluster_count: int, seed: int = 0) -> GeneratorSpec:
    rng = random.Random(seed ^ 0x5EED)

    def build(m: int, s: int) -> SensorSpec:
        alphabet = tuple(round(rng.uniform(0.0, 100.0), 3) for _ in range(alphabet_size))
        return SensorSpec(Uniform(alphabet), cluster_count)

    return GeneratorSpec(machines, sensors, groups, uniform_sensors(machines, sensors, build), seed)


def mixed_spec(machines: int, sensors: int, groups: int, *, seed: int = 0,
               max_clusters: int = 8, stateful_share: float = 0.85,
               spike_rate: float = 0.03) -> GeneratorSpec:
    """Random mixture of all models; the acceptance corpora use this."""
    rng = random.Random(seed * 7_919 + 17)

    def alphabet(size: int) -> tuple[float, ...]:
        if rng.random() < 0.5:
            return tuple(float(rng.randrange(0, 12)) for _ in range(size))
        return tuple(rng.uniform(0.0, 100.0) for _ in range(size))

    def build(m: int, s: int) -> SensorSpec:
        kind = rng.randrange(4)
        if kind == 0:
            model: Model = Constant(float(rng.randrange(0, 50)))
        elif kind == 1:
            period = rng.randrange(2, 6)
            model = Cyclic(alphabet(period))
        elif kind == 2:
            model = Uniform(alphabet(rng.randrange(2, 7)))
        else:
            base = Uniform(alphabet(rng.randrange(2, 5)))
            model = Spike(base, 999.0 + m + s, spike_rate)
        k = rng.randrange(1, max_clusters + 1)
        stateful = rng.random() < stateful_share
        return SensorSpec(model, k, stateful)

    return GeneratorSpec(machines, sensors, groups, uniform_sensors(machines, sensors, build), seed)
