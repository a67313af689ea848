"""Pluggable message sources and anomaly sinks.

Inputs deliver raw wire-format messages exactly once, in stream order.
Sinks receive finished anomalies; emission order is the engine's concern.
"""

from __future__ import annotations

import io
from pathlib import Path
from typing import Iterable, Iterator

from .model import Anomaly, format_anomaly
from .wire import split_messages


class MemoryInput:
    """In-memory list of messages (testing and warmup replay)."""

    def __init__(self, messages: Iterable[bytes]):
        self._messages = list(messages)

    def __iter__(self) -> Iterator[bytes]:
        return iter(self._messages)


class FileReplayInput:
    """Replays a file of concatenated wire-format messages."""

    def __init__(self, path: str | Path):
        self.path = Path(path)

    def __iter__(self) -> Iterator[bytes]:
        return iter(split_messages(self.path.read_bytes()))


class MemorySink:
    """Collects anomalies and their formatted output lines."""

    def __init__(self):
        self.anomalies: list[Anomaly] = []
        self.lines: list[str] = []

    def emit(self, anomaly: Anomaly) -> None:
        self.anomalies.append(anomaly)
        self.lines.append(format_anomaly(anomaly))

    def close(self) -> None:
        pass


class FileSink:
    """Writes one anomaly per line to a text file."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._fh: io.TextIOWrapper | None = open(self.path, "w", encoding="utf-8")

    def emit(self, anomaly: Anomaly) -> None:
        assert self._fh is not None
        self._fh.write(format_anomaly(anomaly) + "\n")

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


class NullSink:
    """Discards everything (warmup)."""

    def emit(self, anomaly: Anomaly) -> None:
        pass

    def close(self) -> None:
        pass


def write_lines(sink, lines: Iterable[str]) -> None:
    for line in lines:
        sink.write(line + "\n")
