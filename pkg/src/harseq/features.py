"""Feature representations: raw, changepoint, last-fired and observation-based.

The observation-based (OB) representation merges consecutive minutes with
identical sensor vectors into one data point carrying its duration (``delta_t``)
and the hour it started. Duration and hour can be appended one-hot or
unary (thermometer) coded, and any representation can be widened by
concatenating each data point with its ``concat_k - 1`` predecessors.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass

import numpy as np

from .dataset import TimesliceSequence


class FeatureError(ValueError):
    pass


class Representation(str, enum.Enum):
    RAW = "raw"
    CHANGEPOINT = "changepoint"
    LAST_FIRED = "lastfired"
    OB = "ob"


class TodEncoding(str, enum.Enum):
    NONE = "none"
    ONE_HOT = "onehot"
    UNARY = "unary"


class DeltaTEncoding(str, enum.Enum):
    NONE = "none"
    ONE_HOT7 = "onehot7"
    ONE_HOT48 = "onehot48"
    UNARY7 = "unary7"
    UNARY48 = "unary48"

    @property
    def width(self) -> int:
        if self is DeltaTEncoding.NONE:
            return 0
        return 7 if self.value.endswith("7") else 48

    @property
    def unary(self) -> bool:
        return self.value.startswith("unary")


class Granularity(str, enum.Enum):
    MINUTE = "minute"
    SEGMENT = "segment"


class Bins(enum.Enum):
    BINS7 = 7
    BINS48 = 48


# Upper edges (inclusive) of the coarse duration intervals, in minutes.
# Durations beyond the last edge fall into a final open-ended bin.
_EDGES48 = np.array(list(range(1, 31)) + [40, 50, 60, 80, 100, 120, 150, 180, 210, 240,
                                           270, 300, 360, 420, 480, 540, 600])
_EDGES7 = np.array([5, 30, 60, 120, 150, 660])


def bin_delta_t(t, scheme: Bins = Bins.BINS48):
    """Map a duration in minutes (>= 1) to its interval index.

    ``Bins48``: 1..30 each get their own index (0..29), then 18 coarser
    intervals up to ``> 600`` (30..47). ``Bins7``: ``<=5, <=30, <=60,
    <=120, <=150, <=660, >660``. Accepts scalars or arrays.
    """
    arr = np.asarray(t)
    if np.any(arr <= 0):
        raise FeatureError(f"duration must be >= 1 minute, got {t!r}")
    edges = _EDGES48 if scheme is Bins.BINS48 else _EDGES7
    idx = np.searchsorted(edges, arr, side="left")
    if idx.ndim == 0:
        return int(idx)
    return idx


def encode_one_hot(index, k: int) -> np.ndarray:
    index = np.asarray(index)
    if np.any(index < 0) or np.any(index >= k):
        raise FeatureError(f"index {index!r} out of range for {k} categories")
    return (np.arange(k) == index[..., None]).astype(np.uint8)


def encode_unary(index, k: int) -> np.ndarray:
    index = np.asarray(index)
    if np.any(index < 0) or np.any(index >= k):
        raise FeatureError(f"index {index!r} out of range for {k} categories")
    return (np.arange(k) <= index[..., None]).astype(np.uint8)


@dataclass(frozen=True)
class FeatureConfig:
    representation: Representation = Representation.RAW
    concat_k: int = 1
    tod_encoding: TodEncoding = TodEncoding.NONE
    deltat_encoding: DeltaTEncoding = DeltaTEncoding.NONE
    eval_granularity: Granularity = Granularity.MINUTE

    def __post_init__(self):
        object.__setattr__(self, "representation", Representation(self.representation))
        object.__setattr__(self, "tod_encoding", TodEncoding(self.tod_encoding))
        object.__setattr__(self, "deltat_encoding", DeltaTEncoding(self.deltat_encoding))
        object.__setattr__(self, "eval_granularity", Granularity(self.eval_granularity))
        if int(self.concat_k) != self.concat_k or self.concat_k < 1:
            raise FeatureError(f"concat_k must be an integer >= 1, got {self.concat_k!r}")
        object.__setattr__(self, "concat_k", int(self.concat_k))
        if self.representation is not Representation.OB:
            if self.deltat_encoding is not DeltaTEncoding.NONE:
                raise FeatureError("delta-t encodings require the ob representation")
            if self.tod_encoding is not TodEncoding.NONE:
                raise FeatureError("time-of-day encodings require the ob representation")

    @property
    def tod_width(self) -> int:
        return 0 if self.tod_encoding is TodEncoding.NONE else 24

    @property
    def deltat_width(self) -> int:
        return self.deltat_encoding.width

    def width(self, n_sensors: int) -> int:
        return self.concat_k * (n_sensors + self.tod_width + self.deltat_width)

    def to_dict(self) -> dict:
        return {
            "representation": self.representation.value,
            "concat_k": self.concat_k,
            "tod_encoding": self.tod_encoding.value,
            "deltat_encoding": self.deltat_encoding.value,
            "eval_granularity": self.eval_granularity.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise FeatureError(f"unknown FeatureConfig keys {sorted(unknown)}")
        try:
            return cls(**d)
        except ValueError as exc:
            raise FeatureError(str(exc)) from None

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "FeatureConfig":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class ObSegment:
    sensors: np.ndarray
    delta_t: int
    start_hour: int
    label: int
    span: tuple[int, int]  # inclusive rows into the source sequence


@dataclass(frozen=True, eq=False)
class FeatureSequence:
    f: np.ndarray            # T' x F, uint8
    labels: np.ndarray       # T'
    minute_spans: np.ndarray  # T' x 2, inclusive (first_row, last_row)
    config: FeatureConfig

    @property
    def T(self) -> int:
        return self.f.shape[0]

    @property
    def width(self) -> int:
        return self.f.shape[1]

    @property
    def n_minutes(self) -> int:
        return int(self.minute_spans[-1, 1] + 1) if len(self.minute_spans) else 0


# ---------------------------------------------------------------------------
# representations

def changepoint_matrix(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.uint8)
    prev = np.vstack([np.zeros((1, x.shape[1]), dtype=np.uint8), x[:-1]])
    return (x != prev).astype(np.uint8)


def last_fired_matrix(x: np.ndarray) -> np.ndarray:
    cp = changepoint_matrix(x)
    T, N = cp.shape
    fired = cp.any(axis=1)
    lowest = np.argmax(cp, axis=1)  # lowest changed index wins
    # carry the last change forward; index 0 until the first change
    idx = np.where(fired, np.arange(T), -1)
    np.maximum.accumulate(idx, out=idx)
    marked = np.where(idx >= 0, lowest[np.maximum(idx, 0)], 0)
    out = np.zeros((T, N), dtype=np.uint8)
    out[np.arange(T), marked] = 1
    return out


def to_changepoint(seq: TimesliceSequence) -> TimesliceSequence:
    return TimesliceSequence(seq.start_ts, changepoint_matrix(seq.x), seq.y, seq.day_boundaries)


def to_last_fired(seq: TimesliceSequence) -> TimesliceSequence:
    return TimesliceSequence(seq.start_ts, last_fired_matrix(seq.x), seq.y, seq.day_boundaries)


def _run_starts(x: np.ndarray, y: np.ndarray | None) -> np.ndarray:
    change = np.any(x[1:] != x[:-1], axis=1)
    if y is not None:
        change |= y[1:] != y[:-1]
    return np.concatenate([[0], np.flatnonzero(change) + 1])


def _majority(labels: np.ndarray) -> int:
    return int(np.argmax(np.bincount(labels)))


def compact_ob(seq: TimesliceSequence, split_on_label: bool = True) -> list[ObSegment]:
    """Run-length compact a timeslice sequence into OB segments.

    Runs break wherever the sensor vector changes and, by default, wherever
    the label changes too, so every segment carries exactly one label.
    With ``split_on_label=False`` only sensor changes break runs (no label
    information used) and each segment takes its majority label.
    """
    if seq.T < 1:
        raise FeatureError("cannot compact an empty sequence")
    starts = _run_starts(seq.x, seq.y if split_on_label else None)
    ends = np.append(starts[1:], seq.T) - 1
    hours = seq.hours()
    segs = []
    for lo, hi in zip(starts.tolist(), ends.tolist()):
        label = int(seq.y[lo]) if split_on_label else _majority(seq.y[lo:hi + 1])
        segs.append(ObSegment(seq.x[lo].copy(), hi - lo + 1, int(hours[lo]), label, (lo, hi)))
    return segs


def expand_predictions(segments, preds) -> np.ndarray:
    """Replicate per-segment predictions over the minutes each segment spans."""
    preds = np.asarray(preds)
    if len(segments) != len(preds):
        raise FeatureError(f"{len(preds)} predictions for {len(segments)} segments")
    spans = segments if isinstance(segments, np.ndarray) else np.array([s.span for s in segments])
    return expand_spans(spans, preds)


def expand_spans(spans: np.ndarray, preds) -> np.ndarray:
    spans = np.asarray(spans).reshape(-1, 2)
    preds = np.asarray(preds)
    if len(spans) != len(preds):
        raise FeatureError(f"{len(preds)} predictions for {len(spans)} spans")
    lengths = spans[:, 1] - spans[:, 0] + 1
    return np.repeat(preds, lengths)


# ---------------------------------------------------------------------------
# featurize

def _encode(kind_unary: bool, index, k):
    return encode_unary(index, k) if kind_unary else encode_one_hot(index, k)


def _concat_blocks(blocks: np.ndarray, k: int) -> np.ndarray:
    """Row t becomes [b(t-k+1), ..., b(t-1), b(t)]; missing history repeats row 0."""
    if k == 1:
        return blocks
    T = blocks.shape[0]
    cols = []
    for lag in range(k - 1, -1, -1):
        rows = np.maximum(np.arange(T) - lag, 0)
        cols.append(blocks[rows])
    return np.hstack(cols)


def featurize(seq: TimesliceSequence, cfg: FeatureConfig,
              split_on_label: bool = True) -> FeatureSequence:
    """Build the model-ready binary feature matrix for one sequence.

    ``split_on_label`` only matters for the OB representation; pass False for
    held-out data so segment boundaries never depend on the labels.
    """
    rep = cfg.representation
    if rep is Representation.OB:
        segs = compact_ob(seq, split_on_label=split_on_label)
        base = np.array([s.sensors for s in segs], dtype=np.uint8)
        labels = np.array([s.label for s in segs], dtype=np.int64)
        spans = np.array([s.span for s in segs], dtype=np.int64)
        parts = [base]
        if cfg.tod_encoding is not TodEncoding.NONE:
            hours = np.array([s.start_hour for s in segs])
            parts.append(_encode(cfg.tod_encoding is TodEncoding.UNARY, hours, 24))
        if cfg.deltat_encoding is not DeltaTEncoding.NONE:
            dts = np.array([s.delta_t for s in segs])
            scheme = Bins.BINS7 if cfg.deltat_width == 7 else Bins.BINS48
            parts.append(_encode(cfg.deltat_encoding.unary, bin_delta_t(dts, scheme), cfg.deltat_width))
        blocks = np.hstack(parts)
    else:
        if rep is Representation.RAW:
            blocks = seq.x
        elif rep is Representation.CHANGEPOINT:
            blocks = changepoint_matrix(seq.x)
        else:
            blocks = last_fired_matrix(seq.x)
        labels = seq.y.copy()
        rows = np.arange(seq.T, dtype=np.int64)
        spans = np.stack([rows, rows], axis=1)
    f = np.ascontiguousarray(_concat_blocks(np.asarray(blocks, dtype=np.uint8), cfg.concat_k))
    return FeatureSequence(f, labels, spans, cfg)
