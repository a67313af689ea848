"""The concurrent engine: dispatcher, workers, watermark-ordered emission.

One dispatcher routes raw messages to per-worker queues by machine id modulo
worker count, so all observation groups of one machine are processed by the
same worker in arrival order. Workers parse readings one at a time, slide the
per-sensor windows, and run the processing chain; detected anomalies wait in a
pre-exit priority queue until the watermark guarantees nothing earlier can
still appear, then a flusher emits them in (timestamp, machine, property)
order.

The actors are written as generators yielding effects (receive, send, step,
notify, wait). The threaded driver in this module interprets the effects with
real queues and threads; the deterministic driver in ``sim`` interleaves the
same generators single-threaded for ordering tests. The yield points between
shared-memory accesses are exactly the preemption points the ordering proof
needs, so both drivers exercise one implementation.

Watermark protocol
------------------
Per worker the board holds ``done_ts``/``done_seq`` (written only by that
worker) and ``enq_seq`` (written only by the dispatcher); the dispatcher also
keeps a reference to the last dispatched message as a lazy clock. A worker is
*drained* when every message dispatched to it has been processed; its bound
contribution is then the dispatcher clock (input timestamps are
non-decreasing, so nothing older can still be routed to it), otherwise its
last processed timestamp. Soundness depends on write and read order:

* dispatcher: clock ref, then ``enq_seq += 1``, then the actual enqueue;
* worker: ``done_ts``, then ``done_seq += 1`` (after queueing its anomalies);
* flusher, per round: all (done_ts, done_seq), then the clock ref, then all
  ``enq_seq``.

With that order, a worker observed as drained cannot have a message in flight
older than the observed clock.
"""

from __future__ import annotations

import heapq
import itertools
import queue
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from math import inf
from typing import Callable, Generator, Iterable, Iterator

from . import clustering, markov
from .errors import WireParseError
from .model import Anomaly, RunConfig, SensorKey, SensorMetadata, validate_config
from .transport import NullSink
from .windows import SensorWindow, WindowStore
from .wire import (
    parse_header,
    parse_machine_id_fast,
    parse_next_reading,
    parse_timestamp_fast,
)

STOP = object()  # end-of-stream marker on worker queues

Effect = tuple
ActorGen = Generator[Effect, object, None]

_STEP: Effect = ("step",)
_NOTIFY: Effect = ("notify",)
_WAIT: Effect = ("wait",)


def route(machine_id: int, worker_count: int) -> int:
    """Modulo routing: same machine, same worker, arrival order preserved."""
    return machine_id % worker_count


class WatermarkBoard:
    """Wait-free watermark slots; see the module docstring for the protocol."""

    __slots__ = ("done_ts", "done_seq", "enq_seq", "last_dispatched")

    def __init__(self, worker_count: int):
        self.done_ts: list[int] = [-1] * worker_count
        self.done_seq: list[int] = [0] * worker_count
        self.enq_seq: list[int] = [0] * worker_count
        self.last_dispatched: bytes | None = None


def bound_protocol(board: WatermarkBoard, worker_count: int,
                   compat_sentinel: bool) -> Generator[Effect, None, float]:
    """Compute the flush bound with the read order the safety argument requires.

    Yields a step effect between shared reads so the deterministic driver can
    preempt at each. With ``compat_sentinel`` a drained worker contributes a
    maximum timestamp instead of the dispatcher clock (the historical
    behavior, which admits an in-flight race; kept for measurement parity).
    """
    done_ts: list[int] = []
    done_seq: list[int] = []
    for w in range(worker_count):
        done_ts.append(board.done_ts[w])
        yield _STEP
        done_seq.append(board.done_seq[w])
        yield _STEP
    clock_ref = board.last_dispatched
    yield _STEP
    enq_seq: list[int] = []
    for w in range(worker_count):
        enq_seq.append(board.enq_seq[w])
        yield _STEP

    clock: float | None = None
    bound = inf
    for w in range(worker_count):
        if done_seq[w] == enq_seq[w]:  # drained
            if compat_sentinel:
                continue
            if clock is None:
                clock = parse_timestamp_fast(clock_ref) if clock_ref is not None else -1
            contribution: float = clock
        else:
            contribution = done_ts[w]
        if contribution < bound:
            bound = contribution
    return bound


def compute_flush_bound(board: WatermarkBoard, worker_count: int,
                        compat_sentinel: bool = False) -> float:
    """Synchronous wrapper around ``bound_protocol`` (tests, diagnostics)."""
    gen = bound_protocol(board, worker_count, compat_sentinel)
    while True:
        try:
            next(gen)
        except StopIteration as stop:
            return stop.value


@dataclass
class StageCounters:
    messages: int = 0
    windows: int = 0
    inout: int = 0
    k1: int = 0
    lowk: int = 0
    full: int = 0
    parse_errors: int = 0

    def merge(self, other: "StageCounters") -> None:
        self.messages += other.messages
        self.windows += other.windows
        self.inout += other.inout
        self.k1 += other.k1
        self.lowk += other.lowk
        self.full += other.full
        self.parse_errors += other.parse_errors


@dataclass
class RunReport:
    messages: int
    windows: int
    inout: int
    k1: int
    lowk: int
    full: int
    anomalies: int
    wall_ms: float
    parse_errors: int
    latencies_ms: list[float] = field(default_factory=list, repr=False)

    def to_text(self) -> str:
        return (
            f"messages={self.messages}\n"
            f"windows={self.windows}\n"
            f"inout={self.inout}\n"
            f"k1={self.k1}\n"
            f"lowk={self.lowk}\n"
            f"full={self.full}\n"
            f"anomalies={self.anomalies}\n"
            f"wall_ms={self.wall_ms:.3f}\n"
            f"parse_errors={self.parse_errors}"
        )


class Session:
    """Mutable state of one pipeline run (fresh per run and per warmup pass)."""

    def __init__(self, engine: "Engine", input_messages: Iterable[bytes], sink,
                 time_fn: Callable[[], float] | None):
        n = engine.config.worker_count
        self.input: Iterator[bytes] = iter(input_messages)
        self.sink = sink
        self.time_fn = time_fn
        self.store = WindowStore.build(
            engine.metadata, engine.config.window_size, keep_sorted=engine.sorted_sweep
        )
        self.board = WatermarkBoard(n)
        self.heap: list[tuple] = []  # (ts, machine, property, probability, ingest)
        self.heap_lock = threading.Lock()
        self.emit_lock = threading.Lock()
        self.next_id = 0
        self.latencies_ms: list[float] = []
        self.worker_counters = [StageCounters() for _ in range(n)]
        self.dispatch_counters = StageCounters()
        self.dispatcher_done = False
        self.worker_done = [False] * n


class Engine:
    """Wires metadata and configuration to the pipeline actors."""

    def __init__(
        self,
        metadata: dict[SensorKey, SensorMetadata],
        config: RunConfig,
        *,
        force_full: bool = False,
        compat_sentinel: bool = False,
        sorted_sweep: bool = False,
        queue_capacity: int = 1024,
        time_fn: Callable[[], float] | None = time.monotonic,
    ):
        self.metadata = metadata
        self.config = validate_config(config)
        self.force_full = force_full
        self.compat_sentinel = compat_sentinel
        self.sorted_sweep = sorted_sweep
        self.queue_capacity = queue_capacity
        self.time_fn = time_fn
        # hot-path copies of the per-value chain parameters
        self._max_iterations = config.max_kmeans_iterations
        self._transitions = config.transition_count
        self._threshold = config.threshold
        self._synchronized = config.synchronized_output

    # -- processing chain ----------------------------------------------------

    def _process_value(self, session: Session, ctr: StageCounters, win: SensorWindow,
                       value: float, machine_id: int, property_id: int, ts: int,
                       ingest: float | None) -> None:
        win.slide(value)
        if len(win.values) < win.capacity:
            return
        ctr.windows += 1

        if self.force_full:
            result = clustering.kmeans_full(
                list(win.values), win.cluster_count, self._max_iterations
            )
            ctr.full += 1
            seq = result.assignments
            counts = markov.count_transitions(seq)
        else:
            if not win.primed:
                win.init_reuse_state()
                fired = False
            else:
                fired = clustering.in_out_check(win)
            if fired and win.reuse_eligible:
                prev = win.cluster_sequence
                dropped = (prev[0], prev[1])
                clustering.reuse_clusters(win)
                seq = win.cluster_sequence
                assert win.counts is not None
                counts = win.counts.shift(dropped, (seq[-2], seq[-1]))
                ctr.inout += 1
            else:
                # K1 and LowK both key on the distinct values, so one scan
                # serves both checks (single-cluster metadata skips even that).
                k = win.cluster_count
                if k == 1:
                    ctr.k1 += 1
                    win.reuse_eligible = False
                    return
                values = list(win.values)
                distinct = list(dict.fromkeys(values))
                if len(distinct) == 1:
                    # one cluster: every transition has probability 1,
                    # the rest of the chain is skipped entirely
                    ctr.k1 += 1
                    win.reuse_eligible = False
                    return
                if len(distinct) < k:
                    index = {v: i for i, v in enumerate(distinct)}
                    assignments: list[int] = [index[v] for v in values]
                    centroids = distinct
                    ctr.lowk += 1
                    win.reuse_eligible = False
                else:
                    if self.sorted_sweep:
                        result = clustering.sorted_sweep_kmeans(
                            values, k, self._max_iterations, win.sorted_values
                        )
                    else:
                        result = clustering.kmeans_full(values, k, self._max_iterations)
                    assignments = list(result.assignments)
                    centroids = list(result.centroids)
                    ctr.full += 1
                    win.reuse_eligible = True
                win.cluster_sequence = deque(assignments)
                win.centroids = centroids
                win.counts = markov.count_transitions(win.cluster_sequence)
                seq = win.cluster_sequence
                counts = win.counts

        probability = markov.detect(seq, counts, self._transitions, self._threshold)
        if probability is None:
            return
        if self._synchronized:
            with session.heap_lock:
                heapq.heappush(
                    session.heap, (ts, machine_id, property_id, probability, ingest)
                )
        else:
            self._emit(session, machine_id, property_id, ts, probability, ingest)

    def _process_message(self, session: Session, widx: int, raw: bytes,
                         ingest: float | None) -> int | None:
        """Parse one message, stream its readings through the chain; return its ts."""
        ctr = session.worker_counters[widx]
        try:
            _gid, machine_id, ts, cursor = parse_header(raw)
        except WireParseError:
            ctr.parse_errors += 1
            return None
        rows = session.store.windows
        row = rows[machine_id] if machine_id < len(rows) else []
        row_len = len(row)
        try:
            while True:
                reading = parse_next_reading(raw, cursor)
                if reading is None:
                    break
                property_id, value = reading
                win = row[property_id] if property_id < row_len else None
                if win is None:
                    continue  # non-stateful or unknown sensor
                self._process_value(session, ctr, win, value, machine_id,
                                    property_id, ts, ingest)
        except WireParseError:
            ctr.parse_errors += 1
        return ts

    def _emit(self, session: Session, machine_id: int, property_id: int, ts: int,
              probability: float, ingest: float | None) -> None:
        with session.emit_lock:
            anomaly = Anomaly(session.next_id, machine_id, property_id, ts, probability)
            session.next_id += 1
            if ingest is not None and session.time_fn is not None:
                session.latencies_ms.append((session.time_fn() - ingest) * 1000.0)
            session.sink.emit(anomaly)

    # -- actors ---------------------------------------------------------------

    def dispatcher_actor(self, session: Session) -> ActorGen:
        n = self.config.worker_count
        board = session.board
        ctr = session.dispatch_counters
        time_fn = session.time_fn
        for raw in session.input:
            ctr.messages += 1
            ingest = time_fn() if time_fn is not None else None
            try:
                machine_id = parse_machine_id_fast(raw)
            except WireParseError:
                ctr.parse_errors += 1
                continue
            w = route(machine_id, n)
            # Clock ref before the enqueue count, count before the enqueue:
            # the flush bound's safety proof needs exactly this order.
            board.last_dispatched = raw
            yield _STEP
            board.enq_seq[w] += 1
            yield _STEP
            yield ("send", w, (raw, ingest))
        for w in range(n):
            yield ("send", w, STOP)
        session.dispatcher_done = True
        yield _NOTIFY

    def worker_actor(self, session: Session, widx: int) -> ActorGen:
        board = session.board
        while True:
            item = yield ("recv", widx)
            if item is STOP:
                break
            raw, ingest = item
            ts = self._process_message(session, widx, raw, ingest)
            # Anomalies of this message are already queued; only now may the
            # watermark advance past its timestamp.
            if ts is not None:
                board.done_ts[widx] = ts
                yield _STEP
            board.done_seq[widx] += 1
            yield _NOTIFY
        session.worker_done[widx] = True
        yield _NOTIFY

    def flusher_actor(self, session: Session) -> ActorGen:
        n = self.config.worker_count
        heap = session.heap
        while True:
            yield _WAIT
            bound = yield from bound_protocol(session.board, n, self.compat_sentinel)
            finished = session.dispatcher_done and all(session.worker_done)
            if finished:
                bound = inf
            with session.heap_lock:
                batch = []
                while heap and heap[0][0] < bound:
                    batch.append(heapq.heappop(heap))
            for ts, machine_id, property_id, probability, ingest in batch:
                self._emit(session, machine_id, property_id, ts, probability, ingest)
            if finished:
                return

    def actors(self, session: Session) -> list[tuple[str, ActorGen]]:
        """All actors of one session, for a driver to interleave."""
        out: list[tuple[str, ActorGen]] = [("dispatcher", self.dispatcher_actor(session))]
        for w in range(self.config.worker_count):
            out.append((f"worker{w}", self.worker_actor(session, w)))
        if self.config.synchronized_output:
            out.append(("flusher", self.flusher_actor(session)))
        return out

    # -- threaded driver ------------------------------------------------------

    def _run_threaded(self, session: Session) -> None:
        n = self.config.worker_count
        queues = [queue.Queue(maxsize=self.queue_capacity) for _ in range(n)]
        flush_event = threading.Event()
        failures: list[BaseException] = []

        def drive(gen: ActorGen, role: str, widx: int | None = None) -> None:
            resume: object = None
            try:
                while True:
                    effect = gen.send(resume)
                    resume = None
                    kind = effect[0]
                    if kind == "recv":
                        resume = queues[effect[1]].get()
                    elif kind == "send":
                        queues[effect[1]].put(effect[2])
                    elif kind == "notify":
                        flush_event.set()
                    elif kind == "wait":
                        flush_event.wait(0.005)
                        flush_event.clear()
                    # "step" effects are preemption points only
            except StopIteration:
                pass
            except BaseException as exc:  # keep the pipeline drainable on bugs
                failures.append(exc)
                if role == "dispatcher":
                    for q in queues:
                        q.put(STOP)
                elif role == "worker" and widx is not None:
                    session.worker_done[widx] = True
                    while queues[widx].get() is not STOP:
                        pass
                flush_event.set()

        threads = [
            threading.Thread(target=drive, args=(self.dispatcher_actor(session), "dispatcher"),
                             name="dispatcher")
        ]
        for w in range(n):
            threads.append(
                threading.Thread(target=drive, args=(self.worker_actor(session, w), "worker", w),
                                 name=f"worker{w}")
            )
        if self.config.synchronized_output:
            threads.append(
                threading.Thread(target=drive, args=(self.flusher_actor(session), "flusher"),
                                 name="flusher")
            )
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        if failures:
            raise failures[0]

    # -- entry points ----------------------------------------------------------

    def warmup(self, messages: list[bytes]) -> None:
        """Run the full pipeline over ``messages`` repeatedly, discarding output.

        Every pass uses a fresh session, so no window or count state survives
        into the measured run.
        """
        for _ in range(self.config.warmup_passes):
            session = Session(self, messages, NullSink(), time_fn=None)
            self._run_threaded(session)

    def run(self, input_messages: Iterable[bytes], sink) -> RunReport:
        """Warm up if configured, then process the whole stream; returns counters."""
        stream = iter(input_messages)
        prefix: list[bytes] = []
        if self.config.warmup_groups > 0 and self.config.warmup_passes > 0:
            prefix = list(itertools.islice(stream, self.config.warmup_groups))
            self.warmup(prefix)
        session = Session(self, itertools.chain(prefix, stream), sink, self.time_fn)
        started = time.perf_counter()
        self._run_threaded(session)
        wall_ms = (time.perf_counter() - started) * 1000.0
        return self.report(session, wall_ms)

    def report(self, session: Session, wall_ms: float) -> RunReport:
        total = StageCounters()
        total.merge(session.dispatch_counters)
        for ctr in session.worker_counters:
            total.merge(ctr)
        return RunReport(
            messages=total.messages,
            windows=total.windows,
            inout=total.inout,
            k1=total.k1,
            lowk=total.lowk,
            full=total.full,
            anomalies=session.next_id,
            wall_ms=wall_ms,
            parse_errors=total.parse_errors,
            latencies_ms=session.latencies_ms,
        )


def run_pipeline(metadata: dict[SensorKey, SensorMetadata], config: RunConfig,
                 input_messages: Iterable[bytes], sink, **engine_kwargs) -> RunReport:
    """Top-level convenience: build an engine and run the stream through it."""
    return Engine(metadata, config, **engine_kwargs).run(input_messages, sink)
