"""Domain types, sensor metadata, and run configuration.

Everything here is immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .errors import ConfigError, MetadataError

DEFAULT_TRANSITIONS = 5
DEFAULT_THRESHOLD = 0.005  # no canonical value exists; set explicitly for real use
DEFAULT_MAX_KMEANS_ITERATIONS = 50
DEFAULT_WARMUP_GROUPS = 5000
DEFAULT_WARMUP_PASSES = 3


class SensorKey(NamedTuple):
    """Identifies one sensor: (machine id, property id)."""

    machine_id: int
    property_id: int


@dataclass(frozen=True, slots=True)
class ObservationGroup:
    """One timestamped message carrying all sensor readings of one machine.

    ``readings`` is sorted strictly ascending by property id; timestamps are
    non-decreasing in stream order.
    """

    group_id: int
    machine_id: int
    timestamp: int
    readings: tuple[tuple[int, float], ...]

    def validate(self) -> "ObservationGroup":
        if self.group_id < 0 or self.machine_id < 0 or self.timestamp < 0:
            raise ValueError("group/machine/timestamp must be non-negative")
        last = -1
        for pid, _ in self.readings:
            if pid <= last:
                raise ValueError("readings must be strictly ascending by property id")
            last = pid
        return self


@dataclass(frozen=True, slots=True)
class SensorMetadata:
    """Per-sensor problem parameters.

    Non-stateful sensors are parsed but never enter the processing chain.
    """

    cluster_count: int
    stateful: bool


@dataclass(frozen=True, slots=True)
class RunConfig:
    """Engine run parameters; see ``validate_config`` for the invariants."""

    window_size: int
    transition_count: int = DEFAULT_TRANSITIONS
    threshold: float = DEFAULT_THRESHOLD
    max_kmeans_iterations: int = DEFAULT_MAX_KMEANS_ITERATIONS
    worker_count: int = 1
    warmup_groups: int = DEFAULT_WARMUP_GROUPS
    warmup_passes: int = DEFAULT_WARMUP_PASSES
    synchronized_output: bool = True


@dataclass(frozen=True, slots=True)
class Anomaly:
    """A low-probability transition sequence, emitted in output-key order.

    ``timestamp`` is the timestamp of the observation group whose arrival
    completed the detecting window. ``anomaly_id`` is the emission sequence
    number, consistent with the ordering key (timestamp, machine, property).
    """

    anomaly_id: int
    machine_id: int
    property_id: int
    timestamp: int
    probability: float

    def order_key(self) -> tuple[int, int, int]:
        return (self.timestamp, self.machine_id, self.property_id)


def format_anomaly(a: Anomaly) -> str:
    """Render one output line: tab-separated, probability at 12 significant digits."""
    return (
        f"{a.anomaly_id}\t{a.machine_id}\t{a.property_id}"
        f"\t{a.timestamp}\t{a.probability:.12g}"
    )


def validate_config(cfg: RunConfig) -> RunConfig:
    """Return ``cfg`` unchanged if all invariants hold, else raise ConfigError."""
    if cfg.window_size < 2:
        raise ConfigError("window_size", "must be at least 2")
    if cfg.transition_count < 1:
        raise ConfigError("transition_count", "must be at least 1")
    if not (0.0 < cfg.threshold <= 1.0):
        raise ConfigError("threshold", "must lie in (0, 1]")
    if cfg.max_kmeans_iterations < 1:
        raise ConfigError("max_kmeans_iterations", "must be at least 1")
    if cfg.worker_count < 1:
        raise ConfigError("worker_count", "must be at least 1")
    if cfg.warmup_groups < 0:
        raise ConfigError("warmup_groups", "must be non-negative")
    if cfg.warmup_passes < 0:
        raise ConfigError("warmup_passes", "must be non-negative")
    return cfg


def load_metadata(source: Iterable[str] | str | bytes) -> dict[SensorKey, SensorMetadata]:
    """Parse sensor metadata.

    Format: one line per sensor, ``machine_id,sensor_id,cluster_count,stateful``
    with stateful in {0, 1}; ``#``-prefixed comment lines and blank lines are
    ignored. Duplicate keys and cluster counts below 1 are errors. The returned
    map has entries exactly for the pairs present in the source; there is no
    default cluster count for absent pairs.
    """
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    if isinstance(source, str):
        lines: Iterable[str] = source.splitlines()
    else:
        lines = source

    meta: dict[SensorKey, SensorMetadata] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise MetadataError(f"expected 4 comma-separated fields, got {len(parts)}", lineno)
        try:
            machine, sensor, clusters, stateful = (int(p) for p in parts)
        except ValueError:
            raise MetadataError(f"non-integer field in {line!r}", lineno) from None
        if machine < 0 or sensor < 0:
            raise MetadataError("machine and sensor ids must be non-negative", lineno)
        if clusters < 1:
            raise MetadataError(f"cluster count must be at least 1, got {clusters}", lineno)
        if stateful not in (0, 1):
            raise MetadataError(f"stateful flag must be 0 or 1, got {stateful}", lineno)
        key = SensorKey(machine, sensor)
        if key in meta:
            raise MetadataError(f"duplicate definition for sensor {key}", lineno)
        meta[key] = SensorMetadata(clusters, bool(stateful))
    return meta


def serialize_metadata(meta: dict[SensorKey, SensorMetadata]) -> str:
    """Inverse of ``load_metadata`` on valid maps (keys sorted)."""
    out = []
    for key in sorted(meta):
        m = meta[key]
        out.append(f"{key.machine_id},{key.property_id},{m.cluster_count},{int(m.stateful)}")
    return "\n".join(out) + "\n" if out else ""
