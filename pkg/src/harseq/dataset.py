"""Interval-event ingestion and rasterization onto the one-minute grid.

Timestamps are integer minutes since 1970-01-01 00:00 *local* time. No
timezone conversion happens anywhere; hour-of-day and calendar days are
read straight off the minute count.
"""
from __future__ import annotations

import csv
import enum
import gzip
import io
import json
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

MINUTES_PER_DAY = 1440
EPOCH = datetime(1970, 1, 1)


class DatasetError(ValueError):
    """Malformed input files or inconsistent dataset values."""


class MetadataMismatchError(DatasetError):
    """An event refers to a sensor or activity the metadata does not know."""


class EventKind(enum.Enum):
    SENSOR = "sensor"
    ACTIVITY = "activity"


@dataclass(frozen=True)
class IntervalEvent:
    kind: EventKind
    id: int
    start: int
    end: int  # exclusive

    def __post_init__(self):
        if self.start > self.end:
            raise DatasetError(f"event end {self.end} precedes start {self.start}")
        if self.id < 0:
            raise DatasetError(f"negative event id {self.id}")


@dataclass(frozen=True)
class HouseMeta:
    sensor_names: tuple[str, ...]
    activity_names: tuple[str, ...]
    house_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "sensor_names", tuple(self.sensor_names))
        object.__setattr__(self, "activity_names", tuple(self.activity_names))
        if len(self.sensor_names) < 1:
            raise DatasetError("metadata needs at least one sensor")
        if len(self.activity_names) < 2:
            raise DatasetError("metadata needs at least two activities")
        if self.activity_names[0] != "Idle":
            raise DatasetError(f"activities[0] must be 'Idle', got {self.activity_names[0]!r}")
        for what, names in (("sensor", self.sensor_names), ("activity", self.activity_names)):
            seen = set()
            for name in names:
                if name in seen:
                    raise DatasetError(f"duplicate {what} name {name!r}")
                seen.add(name)

    @property
    def n_sensors(self) -> int:
        return len(self.sensor_names)

    @property
    def n_classes(self) -> int:
        return len(self.activity_names)

    def to_dict(self) -> dict:
        return {
            "house_id": self.house_id,
            "sensors": list(self.sensor_names),
            "activities": list(self.activity_names),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HouseMeta":
        try:
            return cls(d["sensors"], d["activities"], d.get("house_id", ""))
        except KeyError as exc:
            raise DatasetError(f"metadata is missing key {exc}") from None


@dataclass(frozen=True, eq=False)
class TimesliceSequence:
    """Minute-resolution sensor matrix ``x`` (T x N) with labels ``y``."""

    start_ts: int
    x: np.ndarray
    y: np.ndarray
    day_boundaries: tuple[int, ...] = field(default=())

    def __post_init__(self):
        x = np.ascontiguousarray(self.x, dtype=np.uint8)
        y = np.ascontiguousarray(self.y, dtype=np.int64)
        if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
            raise DatasetError(f"x {x.shape} and y {y.shape} do not line up")
        if x.size and x.max() > 1:
            raise DatasetError("sensor matrix must be binary")
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if not self.day_boundaries:
            object.__setattr__(self, "day_boundaries", day_boundaries(self.start_ts, len(y)))

    @property
    def T(self) -> int:
        return self.y.shape[0]

    @property
    def n_sensors(self) -> int:
        return self.x.shape[1]

    def hours(self) -> np.ndarray:
        """Hour of day (0..23) for every row."""
        ts = self.start_ts + np.arange(self.T)
        return (ts // 60) % 24

    def slice(self, lo: int, hi: int) -> "TimesliceSequence":
        return TimesliceSequence(self.start_ts + lo, self.x[lo:hi], self.y[lo:hi])


def day_boundaries(start_ts: int, T: int) -> tuple[int, ...]:
    if T <= 0:
        return (0,)
    first = (-start_ts) % MINUTES_PER_DAY
    rest = range(first if first > 0 else MINUTES_PER_DAY, T, MINUTES_PER_DAY)
    return (0, *rest)


def to_minutes(dt: datetime) -> int:
    delta = dt - EPOCH
    if delta.seconds % 60 or delta.microseconds:
        raise DatasetError(f"timestamp {dt.isoformat()} is not minute-aligned")
    return delta.days * MINUTES_PER_DAY + delta.seconds // 60


def from_minutes(ts: int) -> datetime:
    return EPOCH + timedelta(minutes=int(ts))


def rasterize(events, meta: HouseMeta, start_ts: int, end_ts: int) -> TimesliceSequence:
    """Paint interval events onto the minute grid ``[start_ts, end_ts)``.

    Overlapping activity annotations: the later ``start`` wins, exact ties
    go to the larger activity id. Unannotated minutes are Idle (0).
    """
    T = end_ts - start_ts
    if T < 1:
        raise DatasetError(f"invalid range [{start_ts}, {end_ts})")
    N, C = meta.n_sensors, meta.n_classes
    x = np.zeros((T, N), dtype=np.uint8)
    y = np.zeros(T, dtype=np.int64)
    activities = []
    for ev in events:
        limit = N if ev.kind is EventKind.SENSOR else C
        if ev.id >= limit:
            raise MetadataMismatchError(
                f"{ev.kind.value} id {ev.id} out of range for metadata with {limit} entries")
        lo = max(ev.start, start_ts) - start_ts
        hi = min(ev.end, end_ts) - start_ts
        if hi <= lo:
            continue
        if ev.kind is EventKind.SENSOR:
            x[lo:hi, ev.id] = 1
        else:
            activities.append((ev.start, ev.id, lo, hi))
    for _, act, lo, hi in sorted(activities):
        y[lo:hi] = act
    return TimesliceSequence(start_ts, x, y)


def split_days(seq: TimesliceSequence) -> list[TimesliceSequence]:
    bounds = list(seq.day_boundaries) + [seq.T]
    return [seq.slice(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:])]


def concatenate(parts) -> TimesliceSequence:
    parts = list(parts)
    for a, b in zip(parts, parts[1:]):
        if a.start_ts + a.T != b.start_ts:
            raise DatasetError("sequences are not contiguous")
    return TimesliceSequence(parts[0].start_ts,
                             np.concatenate([p.x for p in parts]),
                             np.concatenate([p.y for p in parts]))


# ---------------------------------------------------------------------------
# files

EVENTS_HEADER = ["kind", "id", "name", "start", "end"]


def load_meta(path) -> HouseMeta:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"{path}: invalid JSON ({exc})") from None
    return HouseMeta.from_dict(data)


def _parse_ts(text: str, where: str) -> int:
    try:
        dt = datetime.fromisoformat(text.strip())
    except ValueError:
        raise DatasetError(f"{where}: bad timestamp {text!r}") from None
    if dt.tzinfo is not None:
        raise DatasetError(f"{where}: timestamps must be local (no UTC offset)")
    try:
        return to_minutes(dt)
    except DatasetError as exc:
        raise DatasetError(f"{where}: {exc}") from None


def load_events(path, meta: HouseMeta | None = None, meta_path=None):
    """Read an events CSV; returns ``(events sorted by start, meta)``.

    ``meta`` may be passed directly; otherwise ``meta_path`` or a sibling
    ``meta.json`` next to the CSV is read. The ``id`` column is checked
    against the position of ``name`` in the metadata.
    """
    path = Path(path)
    if meta is None:
        meta = load_meta(meta_path if meta_path is not None else path.with_name("meta.json"))
    sensor_ix = {n: i for i, n in enumerate(meta.sensor_names)}
    activity_ix = {n: i for i, n in enumerate(meta.activity_names)}
    events = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != EVENTS_HEADER:
            raise DatasetError(f"{path}:1: expected header {','.join(EVENTS_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            where = f"{path}:{lineno}"
            if len(row) != 5:
                raise DatasetError(f"{where}: expected 5 fields, got {len(row)}")
            kind_s, id_s, name, start_s, end_s = (c.strip() for c in row)
            try:
                kind = EventKind(kind_s.lower())
            except ValueError:
                raise DatasetError(f"{where}: unknown kind {kind_s!r}") from None
            table = sensor_ix if kind is EventKind.SENSOR else activity_ix
            if name not in table:
                raise MetadataMismatchError(f"{where}: {kind.value} {name!r} not in metadata")
            try:
                ev_id = int(id_s)
            except ValueError:
                raise DatasetError(f"{where}: bad id {id_s!r}") from None
            if ev_id != table[name]:
                raise MetadataMismatchError(
                    f"{where}: id {ev_id} does not match metadata index {table[name]} of {name!r}")
            start = _parse_ts(start_s, where)
            end = _parse_ts(end_s, where)
            if end < start:
                raise DatasetError(f"{where}: end {end_s} precedes start {start_s}")
            events.append(IntervalEvent(kind, ev_id, start, end))
    events.sort(key=lambda e: (e.start, e.kind.value, e.id, e.end))
    return events, meta


def write_events(path, events, meta: HouseMeta) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVENTS_HEADER)
        for ev in sorted(events, key=lambda e: (e.start, e.kind.value, e.id, e.end)):
            names = meta.sensor_names if ev.kind is EventKind.SENSOR else meta.activity_names
            w.writerow([ev.kind.value, ev.id, names[ev.id],
                        from_minutes(ev.start).isoformat(timespec="minutes"),
                        from_minutes(ev.end).isoformat(timespec="minutes")])


def write_meta(path, meta: HouseMeta) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(meta.to_dict(), fh, indent=2)
        fh.write("\n")


def events_range(events) -> tuple[int, int]:
    if not events:
        raise DatasetError("no events")
    return min(e.start for e in events), max(e.end for e in events)


# Canonical container: gzip CSV ``ts,y,s0..s{N-1}`` plus ``<path>.meta.json``.

def meta_path_for(path) -> Path:
    return Path(str(path) + ".meta.json")


def save_timeslices(path, seq: TimesliceSequence, meta: HouseMeta) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["ts", "y", *(f"s{i}" for i in range(seq.n_sensors))])
    ts = seq.start_ts
    for t in range(seq.T):
        w.writerow([ts + t, int(seq.y[t]), *seq.x[t].tolist()])
    raw = buf.getvalue().encode("utf-8")
    with open(path, "wb") as fh:
        # mtime=0 and no filename keep reruns byte-identical
        with gzip.GzipFile(filename="", mode="wb", fileobj=fh, mtime=0) as gz:
            gz.write(raw)
    write_meta(meta_path_for(path), meta)


def load_timeslices(path) -> tuple[TimesliceSequence, HouseMeta]:
    meta = load_meta(meta_path_for(path))
    with gzip.open(path, "rt", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["ts", "y", *(f"s{i}" for i in range(meta.n_sensors))]
        if header != expected:
            raise DatasetError(f"{path}: header does not match metadata ({meta.n_sensors} sensors)")
        rows = [list(map(int, r)) for r in reader if r]
    if not rows:
        raise DatasetError(f"{path}: no rows")
    arr = np.asarray(rows, dtype=np.int64)
    ts = arr[:, 0]
    if np.any(np.diff(ts) != 1):
        raise DatasetError(f"{path}: rows are not contiguous minutes")
    y = arr[:, 1]
    if y.min() < 0 or y.max() >= meta.n_classes:
        raise MetadataMismatchError(f"{path}: label outside 0..{meta.n_classes - 1}")
    return TimesliceSequence(int(ts[0]), arr[:, 2:].astype(np.uint8), y), meta
