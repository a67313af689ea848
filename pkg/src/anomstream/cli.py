"""Command-line surface: run, profile, bench, generate, oracle."""

from __future__ import annotations

import argparse
import statistics
import sys
import time
from pathlib import Path

from .engine import Engine, RunReport
from .errors import AnomstreamError
from .generator import (
    GeneratorSpec,
    constant_spec,
    cyclic_spec,
    mixed_spec,
    uniform_alphabet_spec,
    write_corpus,
)
from .model import RunConfig, load_metadata, format_anomaly, validate_config
from .oracle import oracle_run
from .transport import FileReplayInput, FileSink, MemorySink, NullSink


class _StdoutSink:
    def emit(self, anomaly) -> None:
        sys.stdout.write(format_anomaly(anomaly) + "\n")

    def close(self) -> None:
        sys.stdout.flush()


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="corpus file (concatenated messages)")
    p.add_argument("--meta", required=True, help="sensor metadata file")
    p.add_argument("--output", default=None, help="anomaly output file (default: stdout)")
    p.add_argument("--window", type=int, default=10)
    p.add_argument("--transitions", type=int, default=5)
    p.add_argument("--threshold", type=float, default=0.005)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--max-iters", type=int, default=50)
    p.add_argument("--sync", dest="sync", action="store_true", default=True)
    p.add_argument("--no-sync", dest="sync", action="store_false")
    p.add_argument("--force-full", action="store_true",
                   help="disable the IN/OUT, K1 and LowK shortcuts")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--warmup-groups", type=int, default=0)
    p.add_argument("--warmup-passes", type=int, default=0)
    p.add_argument("--compat-sentinel-watermark", action="store_true",
                   help="idle workers signal a maximum timestamp instead of the dispatcher clock")


def _config(args: argparse.Namespace) -> RunConfig:
    return validate_config(RunConfig(
        window_size=args.window,
        transition_count=args.transitions,
        threshold=args.threshold,
        max_kmeans_iterations=args.max_iters,
        worker_count=args.workers,
        warmup_groups=args.warmup_groups,
        warmup_passes=args.warmup_passes,
        synchronized_output=args.sync,
    ))


def _engine(args: argparse.Namespace) -> Engine:
    meta = load_metadata(Path(args.meta).read_text(encoding="utf-8"))
    return Engine(
        meta,
        _config(args),
        force_full=args.force_full,
        compat_sentinel=args.compat_sentinel_watermark,
    )


def cmd_run(args: argparse.Namespace) -> int:
    engine = _engine(args)
    sink = FileSink(args.output) if args.output else _StdoutSink()
    try:
        report = engine.run(FileReplayInput(args.input), sink)
    finally:
        sink.close()
    print(report.to_text())
    return 0


def cmd_profile(args: argparse.Namespace) -> int:
    engine = _engine(args)
    report = engine.run(FileReplayInput(args.input), NullSink())

    def share(n: int) -> str:
        return f"{100.0 * n / report.windows:.2f}%" if report.windows else "n/a"

    print(f"{'windows':>10}  {'inout':>8}  {'k1':>8}  {'lowk':>8}  {'full':>8}")
    print(f"{report.windows:>10}  {share(report.inout):>8}  {share(report.k1):>8}  "
          f"{share(report.lowk):>8}  {share(report.full):>8}")
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    input_bytes = Path(args.input).stat().st_size
    throughputs: list[float] = []
    latencies: list[float] = []
    anomalies = 0
    for _ in range(args.runs):
        engine = _engine(args)
        started = time.perf_counter()
        report = engine.run(FileReplayInput(args.input), NullSink())
        elapsed = time.perf_counter() - started
        throughputs.append(input_bytes / (1024 * 1024) / elapsed if elapsed > 0 else 0.0)
        latencies.extend(report.latencies_ms)
        anomalies = report.anomalies
    print(f"runs={args.runs}")
    print(f"bytes={input_bytes}")
    print(f"anomalies={anomalies}")
    print(f"throughput_mb_s={statistics.mean(throughputs):.3f}")
    if latencies:
        print(f"latency_ms={statistics.mean(latencies):.3f}")
    else:
        print("latency_ms=n/a")
    return 0


def cmd_oracle(args: argparse.Namespace) -> int:
    meta = load_metadata(Path(args.meta).read_text(encoding="utf-8"))
    cfg = _config(args)
    anomalies = oracle_run(FileReplayInput(args.input), meta, cfg)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            for a in anomalies:
                fh.write(format_anomaly(a) + "\n")
    else:
        for a in anomalies:
            print(format_anomaly(a))
    return 0


def _generator_spec(args: argparse.Namespace) -> GeneratorSpec:
    if args.model == "mixed":
        return mixed_spec(args.machines, args.sensors, args.groups, seed=args.seed)
    if args.model == "constant":
        return constant_spec(args.machines, args.sensors, args.groups,
                             cluster_count=args.clusters, seed=args.seed)
    if args.model == "cyclic":
        return cyclic_spec(args.machines, args.sensors, args.groups,
                           period=args.period, cluster_count=args.clusters, seed=args.seed)
    return uniform_alphabet_spec(args.machines, args.sensors, args.groups,
                                 alphabet_size=args.alphabet_size,
                                 cluster_count=args.clusters, seed=args.seed)


def cmd_generate(args: argparse.Namespace) -> int:
    write_corpus(_generator_spec(args), args.output, args.meta)
    print(f"wrote {args.output} and {args.meta}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anomstream",
        description="Stream anomaly detection over per-sensor sliding windows",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="process a corpus and emit anomalies")
    _add_run_flags(p_run)
    p_run.set_defaults(fn=cmd_run)

    p_profile = sub.add_parser("profile", help="report optimization trigger shares")
    _add_run_flags(p_profile)
    p_profile.set_defaults(fn=cmd_profile)

    p_bench = sub.add_parser("bench", help="measure throughput and latency")
    _add_run_flags(p_bench)
    p_bench.add_argument("--runs", type=int, default=5)
    p_bench.set_defaults(fn=cmd_bench)

    p_oracle = sub.add_parser("oracle", help="single-threaded reference run")
    _add_run_flags(p_oracle)
    p_oracle.set_defaults(fn=cmd_oracle)

    p_gen = sub.add_parser("generate", help="write a synthetic corpus + metadata")
    p_gen.add_argument("--output", required=True, help="corpus file to write")
    p_gen.add_argument("--meta", required=True, help="metadata file to write")
    p_gen.add_argument("--machines", type=int, default=10)
    p_gen.add_argument("--sensors", type=int, default=10)
    p_gen.add_argument("--groups", type=int, default=2000)
    p_gen.add_argument("--model", choices=["mixed", "constant", "cyclic", "uniform"],
                       default="mixed")
    p_gen.add_argument("--period", type=int, default=5, help="cyclic model period")
    p_gen.add_argument("--alphabet-size", type=int, default=2)
    p_gen.add_argument("--clusters", type=int, default=3)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.set_defaults(fn=cmd_generate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except AnomstreamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
