from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from anomstream.errors import ConfigError, MetadataError
from anomstream.model import (
    Anomaly,
    RunConfig,
    SensorKey,
    SensorMetadata,
    format_anomaly,
    load_metadata,
    serialize_metadata,
    validate_config,
)


def test_load_metadata_basic_lines():
    meta = load_metadata("0,0,3,1\n0,1,1,0\n")
    assert meta[SensorKey(0, 0)] == SensorMetadata(3, True)
    assert meta[SensorKey(0, 1)] == SensorMetadata(1, False)


def test_load_metadata_rejects_zero_clusters():
    with pytest.raises(MetadataError):
        load_metadata("0,0,0,1\n")


def test_load_metadata_rejects_duplicates():
    with pytest.raises(MetadataError) as err:
        load_metadata("0,0,3,1\n0,0,2,1\n")
    assert err.value.line == 2


def test_load_metadata_reports_line_numbers():
    with pytest.raises(MetadataError) as err:
        load_metadata("0,0,3,1\nnot-a-line\n")
    assert err.value.line == 2


def test_load_metadata_ignores_comments_and_blanks():
    meta = load_metadata("# header\n\n2,7,4,1\n")
    assert meta == {SensorKey(2, 7): SensorMetadata(4, True)}


def test_load_metadata_accepts_bytes():
    assert load_metadata(b"1,2,3,1\n") == {SensorKey(1, 2): SensorMetadata(3, True)}


@given(
    st.dictionaries(
        st.tuples(st.integers(0, 500), st.integers(0, 500)).map(lambda t: SensorKey(*t)),
        st.tuples(st.integers(1, 60), st.booleans()).map(lambda t: SensorMetadata(*t)),
        max_size=40,
    )
)
def test_metadata_round_trip(meta):
    assert load_metadata(serialize_metadata(meta)) == meta


def test_paper_config_is_valid():
    cfg = RunConfig(window_size=10, transition_count=5, threshold=0.005, worker_count=12)
    assert validate_config(cfg) is cfg


def test_config_defaults_match_stated_constants():
    cfg = RunConfig(window_size=10)
    assert cfg.transition_count == 5
    assert cfg.warmup_groups == 5000
    assert cfg.warmup_passes == 3
    assert cfg.max_kmeans_iterations == 50
    assert cfg.synchronized_output is True


@pytest.mark.parametrize(
    "overrides,field",
    [
        (dict(window_size=1), "window_size"),
        (dict(transition_count=0), "transition_count"),
        (dict(threshold=0.0), "threshold"),
        (dict(threshold=1.5), "threshold"),
        (dict(max_kmeans_iterations=0), "max_kmeans_iterations"),
        (dict(worker_count=0), "worker_count"),
        (dict(warmup_groups=-1), "warmup_groups"),
        (dict(warmup_passes=-1), "warmup_passes"),
    ],
)
def test_config_invariants_produce_named_errors(overrides, field):
    kwargs = dict(window_size=10)
    kwargs.update(overrides)
    with pytest.raises(ConfigError) as err:
        validate_config(RunConfig(**kwargs))
    assert err.value.field == field


def test_anomaly_line_format():
    a = Anomaly(3, 12, 7, 4500, 27 / 1024)
    assert format_anomaly(a) == "3\t12\t7\t4500\t0.0263671875"


def test_anomaly_probability_12_significant_digits():
    a = Anomaly(0, 0, 0, 0, 1 / 3)
    assert format_anomaly(a).split("\t")[4] == "0.333333333333"
