"""Observation-group wire format: fast fixed-offset parser plus validating reference.

One message is UTF-8 text with ``\\n`` line terminators: a 3-line header, then
two lines per reading, readings strictly ascending by property id::

    <og_{G}> <type> <MoldingMachineObservationGroup> .
    <og_{G}> <machine> <machine_{M}> .
    <og_{G}> <timestamp> "{T}"^^<long> .
    <og_{G}> <observedProperty> <_{M}_{S}> .
    <og_{G}> <hasValue> "{V}"^^<double> .

``{G}``, ``{M}``, ``{T}``, ``{S}`` are decimal integers without leading zeros;
``{V}`` is a decimal real with optional sign, fraction, and exponent.

Every field position is computable from the template constants plus the digit
widths of the ids, so the fast parser never tokenizes: it reads the group-id
width once, then jumps between fields, verifying only the fixed literals it
skips over. The reference parser is the opposite: full tokenization with
strict validation of every literal, used as the test oracle and by the
single-threaded reference pipeline.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator

from .errors import WireParseError
from .model import ObservationGroup

_PREFIX = b"<og_"
_L1_TAIL = b"> <type> <MoldingMachineObservationGroup> .\n"
_L2_MID = b"> <machine> <machine_"
_L2_TAIL = b"> .\n"
_L3_MID = b'> <timestamp> "'
_L3_TAIL = b'"^^<long> .\n'
_RD_PROP_MID = b"> <observedProperty> <_"
_RD_PROP_TAIL = b"> .\n"
_RD_VAL_MID = b'> <hasValue> "'
_RD_VAL_TAIL = b'"^^<double> .\n'


@dataclass(slots=True)
class ParseCursor:
    """Streaming position inside one message; advances monotonically forward.

    The constant chunks of the two per-reading lines (subject token plus fixed
    literal plus machine digits) are validated piecewise on the first reading
    and cached, so every later reading verifies each with a single comparison
    at the computed offset.
    """

    offset: int
    readings_emitted: int
    group_skip: int  # len("<og_") + group-id digit width, constant per message
    machine_width: int
    prop_prefix: bytes | None = None
    value_prefix: bytes | None = None


def serialize_group(g: ObservationGroup) -> bytes:
    """Render the exact wire form of a group; values use shortest round-trip text."""
    gid, mid = g.group_id, g.machine_id
    lines = [
        f"<og_{gid}> <type> <MoldingMachineObservationGroup> .",
        f"<og_{gid}> <machine> <machine_{mid}> .",
        f'<og_{gid}> <timestamp> "{g.timestamp}"^^<long> .',
    ]
    for pid, value in g.readings:
        lines.append(f"<og_{gid}> <observedProperty> <_{mid}_{pid}> .")
        lines.append(f'<og_{gid}> <hasValue> "{value!r}"^^<double> .')
    return ("\n".join(lines) + "\n").encode("utf-8")


def _expect(m: bytes, offset: int, literal: bytes) -> int:
    if not m.startswith(literal, offset):
        raise WireParseError("template mismatch", offset=offset)
    return offset + len(literal)


def _scan_int(m: bytes, offset: int, stop: bytes) -> tuple[int, int]:
    """Read an integer from ``offset`` up to the next ``stop`` byte."""
    end = m.find(stop, offset)
    if end < 0:
        raise WireParseError("unterminated integer field", offset=offset)
    try:
        return int(m[offset:end]), end
    except ValueError:
        raise WireParseError("malformed integer field", offset=offset) from None


def _machine_id_with_extent(m: bytes) -> tuple[int, int]:
    """Fast machine-id extraction, returning (id, highest byte offset touched).

    Touches only: the group-id digits on line 1 (to learn their width), the
    line-2 literal at the offset computed from that width, and the machine-id
    digits. Nothing after the machine id is inspected.
    """
    off = _expect(m, 0, _PREFIX)
    _, g_end = _scan_int(m, off, b">")
    # One constant-length jump from the end of the group id to the machine id.
    mid_start = g_end + len(_L1_TAIL) + (g_end - off) + len(_PREFIX) + len(_L2_MID)
    probe = g_end + len(_L1_TAIL) + (g_end - off) + len(_PREFIX)
    _expect(m, probe, _L2_MID)
    machine_id, m_end = _scan_int(m, mid_start, b">")
    return machine_id, m_end


def parse_machine_id_fast(m: bytes) -> int:
    """Extract the machine id without tokenizing the message."""
    return _machine_id_with_extent(m)[0]


def parse_header(m: bytes) -> tuple[int, int, int, ParseCursor]:
    """Parse the 3-line header; the cursor lands on the first reading."""
    off = _expect(m, 0, _PREFIX)
    group_id, g_end = _scan_int(m, off, b">")
    g_skip = g_end  # len("<og_") + digit width
    off = _expect(m, g_end, _L1_TAIL)
    off = _expect(m, off + g_skip, _L2_MID)
    machine_id, m_end = _scan_int(m, off, b">")
    m_width = m_end - off
    off = _expect(m, m_end, _L2_TAIL)
    off = _expect(m, off + g_skip, _L3_MID)
    timestamp, t_end = _scan_int(m, off, b'"')
    off = _expect(m, t_end, _L3_TAIL)
    return group_id, machine_id, timestamp, ParseCursor(off, 0, g_skip, m_width)


def parse_timestamp_fast(m: bytes) -> int:
    """Timestamp only, via the same offset jumps as ``parse_header``."""
    off = _expect(m, 0, _PREFIX)
    _, g_end = _scan_int(m, off, b">")
    g_skip = g_end
    off = _expect(m, g_end, _L1_TAIL)
    off = _expect(m, off + g_skip, _L2_MID)
    _, m_end = _scan_int(m, off, b">")
    off = _expect(m, m_end, _L2_TAIL)
    off = _expect(m, off + g_skip, _L3_MID)
    ts, _ = _scan_int(m, off, b'"')
    return ts


def parse_next_reading(m: bytes, c: ParseCursor) -> tuple[int, float] | None:
    """Return the next (property_id, value) pair, advancing ``c``, or None at end.

    The caller may fully process the returned value before requesting the
    next one; the cursor keeps the position reached so far.
    """
    off = c.offset
    if off == len(m):
        return None
    prefix = c.prop_prefix
    if prefix is not None and m.startswith(prefix, off):
        off += len(prefix)
    else:
        start = off
        off = _expect(m, off + c.group_skip, _RD_PROP_MID)
        off = _expect(m, off + c.machine_width, b"_")
        c.prop_prefix = m[start:off]
    p_end = m.find(b">", off)
    if p_end < 0:
        raise WireParseError("unterminated property field", offset=off)
    try:
        property_id = int(m[off:p_end])
    except ValueError:
        raise WireParseError("malformed property field", offset=off) from None
    off = _expect(m, p_end, _RD_PROP_TAIL)
    prefix = c.value_prefix
    if prefix is not None and m.startswith(prefix, off):
        off += len(prefix)
    else:
        start = off
        off = _expect(m, off + c.group_skip, _RD_VAL_MID)
        c.value_prefix = m[start:off]
    v_end = m.find(b'"', off)
    if v_end < 0:
        raise WireParseError("unterminated value field", offset=off)
    try:
        value = float(m[off:v_end])
    except ValueError:
        raise WireParseError("malformed value field", offset=off) from None
    c.offset = _expect(m, v_end, _RD_VAL_TAIL)
    c.readings_emitted += 1
    return property_id, value


def iter_readings(m: bytes, c: ParseCursor) -> Iterator[tuple[int, float]]:
    while (r := parse_next_reading(m, c)) is not None:
        yield r


# --- validating reference parser -------------------------------------------

_INT_RE = re.compile(rb"(?:0|[1-9][0-9]*)$")
_VALUE_RE = re.compile(rb"[+-]?[0-9]+(?:\.[0-9]+)?(?:[eE][+-]?[0-9]+)?$")


def _fail(lineno: int, col: int, msg: str) -> WireParseError:
    return WireParseError(msg, line=lineno, column=col)


def _tokens(line: bytes, lineno: int) -> tuple[list[bytes], list[int]]:
    toks = line.split(b" ")
    cols, pos = [], 1
    for t in toks:
        cols.append(pos)
        pos += len(t) + 1
    if len(toks) != 4:
        raise _fail(lineno, 1, f"expected 4 space-separated tokens, got {len(toks)}")
    if toks[3] != b".":
        raise _fail(lineno, cols[3], "line must end with '.'")
    return toks, cols

def _subject_id(tok: bytes, lineno: int, col: int) -> int:
    if not (tok.startswith(_PREFIX) and tok.endswith(b">")):
        raise _fail(lineno, col, "subject must be of the form <og_N>")
    body = tok[len(_PREFIX):-1]
    if not _INT_RE.match(body):
        raise _fail(lineno, col, "subject id must be a canonical decimal integer")
    return int(body)


def _angle_id(tok: bytes, prefix: bytes, lineno: int, col: int, what: str) -> int:
    if not (tok.startswith(prefix) and tok.endswith(b">")):
        raise _fail(lineno, col, f"malformed {what} token")
    body = tok[len(prefix):-1]
    if not _INT_RE.match(body):
        raise _fail(lineno, col, f"{what} id must be a canonical decimal integer")
    return int(body)


def _quoted(tok: bytes, suffix: bytes, pattern: re.Pattern[bytes],
            lineno: int, col: int, what: str) -> bytes:
    if not (tok.startswith(b'"') and tok.endswith(suffix)):
        raise _fail(lineno, col, f"malformed {what} literal")
    body = tok[1:-len(suffix)]
    if not pattern.match(body):
        raise _fail(lineno, col, f"invalid {what} text")
    return body


def parse_group_reference(m: bytes) -> ObservationGroup:
    """Fully tokenize and validate one message; the differential-test oracle."""
    if not m.endswith(b"\n"):
        raise WireParseError("message must end with a line terminator", offset=len(m))
    lines = m.split(b"\n")[:-1]
    if len(lines) < 3 or (len(lines) - 3) % 2 != 0:
        raise _fail(len(lines), 1, "message must have 3 header lines plus reading pairs")

    toks, cols = _tokens(lines[0], 1)
    group_id = _subject_id(toks[0], 1, cols[0])
    if toks[1] != b"<type>" or toks[2] != b"<MoldingMachineObservationGroup>":
        raise _fail(1, cols[1], "first line must declare the group type")

    toks, cols = _tokens(lines[1], 2)
    if _subject_id(toks[0], 2, cols[0]) != group_id:
        raise _fail(2, cols[0], "subject id differs from line 1")
    if toks[1] != b"<machine>":
        raise _fail(2, cols[1], "second line must carry the machine id")
    machine_id = _angle_id(toks[2], b"<machine_", 2, cols[2], "machine")

    toks, cols = _tokens(lines[2], 3)
    if _subject_id(toks[0], 3, cols[0]) != group_id:
        raise _fail(3, cols[0], "subject id differs from line 1")
    if toks[1] != b"<timestamp>":
        raise _fail(3, cols[1], "third line must carry the timestamp")
    timestamp = int(_quoted(toks[2], b'"^^<long>', _INT_RE, 3, cols[2], "timestamp"))

    readings: list[tuple[int, float]] = []
    last_pid = -1
    for i in range(3, len(lines), 2):
        lineno = i + 1
        toks, cols = _tokens(lines[i], lineno)
        if _subject_id(toks[0], lineno, cols[0]) != group_id:
            raise _fail(lineno, cols[0], "subject id differs from line 1")
        if toks[1] != b"<observedProperty>":
            raise _fail(lineno, cols[1], "expected an observedProperty line")
        obj = toks[2]
        if not (obj.startswith(b"<_") and obj.endswith(b">")):
            raise _fail(lineno, cols[2], "malformed property token")
        body = obj[2:-1]
        mid_part, sep, pid_part = body.partition(b"_")
        if not sep or not _INT_RE.match(mid_part) or not _INT_RE.match(pid_part):
            raise _fail(lineno, cols[2], "property token must be <_machine_sensor>")
        if int(mid_part) != machine_id:
            raise _fail(lineno, cols[2], "property token names a different machine")
        pid = int(pid_part)
        if pid <= last_pid:
            raise _fail(lineno, cols[2], "readings must be strictly ascending by property id")
        last_pid = pid

        lineno = i + 2
        toks, cols = _tokens(lines[i + 1], lineno)
        if _subject_id(toks[0], lineno, cols[0]) != group_id:
            raise _fail(lineno, cols[0], "subject id differs from line 1")
        if toks[1] != b"<hasValue>":
            raise _fail(lineno, cols[1], "expected a hasValue line")
        value = float(_quoted(toks[2], b'"^^<double>', _VALUE_RE, lineno, cols[2], "value"))
        readings.append((pid, value))

    return ObservationGroup(group_id, machine_id, timestamp, tuple(readings))


def split_messages(data: bytes) -> list[bytes]:
    """Frame a replay file: a message boundary is the next line that opens a group."""
    messages = []
    start = 0
    n = len(data)
    marker = b"> <type> <"
    while start < n:
        here = data.find(marker, start)
        probe = data.find(marker, here + 1) if here >= 0 else -1
        if probe < 0:
            end = n
        else:
            end = data.rfind(b"\n", start, probe) + 1
            if end <= start:
                end = n
        messages.append(data[start:end])
        start = end
    return messages
