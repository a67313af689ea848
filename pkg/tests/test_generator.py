from __future__ import annotations

from collections import defaultdict

from anomstream.generator import (
    Constant,
    Cyclic,
    Spike,
    Uniform,
    constant_spec,
    cyclic_spec,
    generate,
    mixed_spec,
    uniform_alphabet_spec,
)
from anomstream.model import SensorKey
from anomstream.wire import parse_group_reference


def test_same_spec_and_seed_is_byte_identical():
    a, meta_a = generate(mixed_spec(4, 5, 300, seed=99))
    b, meta_b = generate(mixed_spec(4, 5, 300, seed=99))
    assert a == b and meta_a == meta_b
    c, _ = generate(mixed_spec(4, 5, 300, seed=100))
    assert a != c


def test_round_robin_machines_and_timestamps():
    msgs, _ = generate(constant_spec(3, 2, 12, seed=0))
    groups = [parse_group_reference(m) for m in msgs]
    assert [g.machine_id for g in groups] == [0, 1, 2] * 4
    assert [g.timestamp for g in groups] == [10 * i for i in range(12)]
    assert [g.group_id for g in groups] == list(range(12))


def test_every_group_carries_all_sensors():
    msgs, meta = generate(constant_spec(2, 4, 10, seed=0))
    for m in msgs:
        assert [pid for pid, _ in parse_group_reference(m).readings] == [0, 1, 2, 3]
    assert len(meta) == 8


def test_constant_model_emits_constant_values():
    msgs, _ = generate(constant_spec(1, 1, 20, seed=0))
    values = {parse_group_reference(m).readings[0][1] for m in msgs}
    assert len(values) == 1


def test_cyclic_model_repeats_period():
    msgs, _ = generate(cyclic_spec(1, 1, 12, period=3, seed=0))
    values = [parse_group_reference(m).readings[0][1] for m in msgs]
    assert values == values[:3] * 4
    assert len(set(values[:3])) == 3


def test_uniform_model_draws_from_alphabet():
    spec = uniform_alphabet_spec(1, 1, 200, alphabet_size=2, cluster_count=5, seed=4)
    msgs, meta = generate(spec)
    values = {parse_group_reference(m).readings[0][1] for m in msgs}
    assert len(values) == 2
    assert meta[SensorKey(0, 0)].cluster_count == 5


def test_spike_model_injects_rare_value():
    spec = mixed_spec(1, 1, 1, seed=0)
    spike = Spike(Constant(1.0), 99.0, 0.1)
    spec = spec.__class__(1, 1, 2000, ((spec.sensors[0][0].__class__(spike, 2),),), seed=7)
    msgs, _ = generate(spec)
    values = [parse_group_reference(m).readings[0][1] for m in msgs]
    spikes = sum(1 for v in values if v == 99.0)
    assert 0 < spikes < 600
    assert set(values) == {1.0, 99.0}


def test_mixed_spec_covers_all_model_kinds():
    spec = mixed_spec(6, 8, 10, seed=2)
    kinds = defaultdict(int)
    for row in spec.sensors:
        for sensor in row:
            kinds[type(sensor.model)] += 1
    assert set(kinds) == {Constant, Cyclic, Uniform, Spike}
    assert any(not s.stateful for row in spec.sensors for s in row)
    ks = {s.cluster_count for row in spec.sensors for s in row}
    assert min(ks) >= 1 and max(ks) <= 8 and len(ks) > 3
