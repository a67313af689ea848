"""Stage-optimized anomaly detection for per-sensor numeric data streams.

The query per sensor: cluster the last W values with 1-D k-means, train a
lazy Markov transition model over the cluster sequence, and flag windows
whose last few transitions compose to a probability below a threshold.
Sliding-window structure lets most windows skip work: clusters are reused
when a slide evicts exactly the value it inserts, single-cluster windows
skip the whole chain, and windows with fewer distinct values than clusters
are already a k-means fixed point.
"""

from .clustering import (
    ClusteringResult,
    Trigger,
    apply_lowk,
    check_k1,
    in_out_check,
    initial_centers,
    kmeans_full,
    normalize_labels,
    reuse_clusters,
    sorted_sweep_kmeans,
)
from .engine import Engine, RunReport, compute_flush_bound, route, run_pipeline
from .errors import (
    AnomstreamError,
    ConfigError,
    MetadataError,
    StateError,
    WireParseError,
)
from .generator import GeneratorSpec, generate, mixed_spec, write_corpus
from .markov import TransitionCounts, count_transitions, detect, shift_counts, transition_probability
from .model import (
    Anomaly,
    ObservationGroup,
    RunConfig,
    SensorKey,
    SensorMetadata,
    format_anomaly,
    load_metadata,
    serialize_metadata,
    validate_config,
)
from .oracle import oracle_lines, oracle_run
from .sim import SimDriver, simulate_run
from .transport import FileReplayInput, FileSink, MemoryInput, MemorySink, NullSink
from .windows import SensorWindow, WindowStore, prefix_scan
from .wire import (
    ParseCursor,
    iter_readings,
    parse_group_reference,
    parse_header,
    parse_machine_id_fast,
    parse_next_reading,
    serialize_group,
    split_messages,
)

__version__ = "0.1.0"
