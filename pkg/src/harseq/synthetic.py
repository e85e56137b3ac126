"""Synthetic smart-home corpora.

``house_a_like`` simulates one occupant's daily routine in a house with the
sensor and activity layout of the Kasteren house A (14 binary sensors, 10
activities): mostly quiet sensors with short reed-switch activations, hours
of unchanged readings while asleep or away, missed and spurious firings.

``separable_days`` builds a corpus where every minute's label can be read
off a single sensor under every representation; it is a sanity fixture,
not a realistic house.
"""
from __future__ import annotations

from datetime import datetime

import numpy as np

from .dataset import (MINUTES_PER_DAY, EventKind, HouseMeta, IntervalEvent, TimesliceSequence,
                      rasterize, split_days, to_minutes)

HOUSE_A_SENSORS = (
    "Microwave", "Hall-Toilet door", "Hall-Bathroom door", "Cups cupboard", "Fridge",
    "Plates cupboard", "Frontdoor", "Dishwasher", "ToiletFlush", "Freezer", "Pans Cupboard",
    "Washingmachine", "Groceries Cupboard", "Hall-Bedroom door",
)
HOUSE_A_ACTIVITIES = (
    "Idle", "Leave house", "Use toilet", "Take shower", "Brush teeth", "Go to bed",
    "Prepare breakfast", "Prepare dinner", "Get snack", "Get drink",
)

IDLE, LEAVE, TOILET, SHOWER, TEETH, BED, BREAKFAST, DINNER, SNACK, DRINK = range(10)
S = {name: i for i, name in enumerate(HOUSE_A_SENSORS)}

# activity -> [(sensor, firing probability, where in the span)]
# where: "start", "end", "both" (start and end), "any" (random offset)
_PROFILES = {
    LEAVE: [(S["Frontdoor"], 0.97, "both"), (S["Hall-Bedroom door"], 0.2, "start")],
    TOILET: [(S["Hall-Toilet door"], 0.95, "both"), (S["ToiletFlush"], 0.9, "end")],
    SHOWER: [(S["Hall-Bathroom door"], 0.95, "both"), (S["Washingmachine"], 0.1, "any")],
    TEETH: [(S["Hall-Bathroom door"], 0.9, "start")],
    BED: [(S["Hall-Bedroom door"], 0.95, "both")],
    BREAKFAST: [(S["Cups cupboard"], 0.7, "any"), (S["Fridge"], 0.85, "any"),
                (S["Plates cupboard"], 0.8, "any"), (S["Microwave"], 0.4, "any"),
                (S["Groceries Cupboard"], 0.5, "any")],
    DINNER: [(S["Pans Cupboard"], 0.9, "any"), (S["Fridge"], 0.9, "any"),
             (S["Freezer"], 0.6, "any"), (S["Plates cupboard"], 0.85, "end"),
             (S["Groceries Cupboard"], 0.7, "any"), (S["Microwave"], 0.3, "any"),
             (S["Dishwasher"], 0.4, "end")],
    SNACK: [(S["Groceries Cupboard"], 0.7, "any"), (S["Fridge"], 0.5, "any")],
    DRINK: [(S["Cups cupboard"], 0.8, "any"), (S["Fridge"], 0.7, "any")],
}


def house_a_meta() -> HouseMeta:
    return HouseMeta(HOUSE_A_SENSORS, HOUSE_A_ACTIVITIES, "A-synthetic")


class _Day:
    def __init__(self, rng, day_start):
        self.rng = rng
        self.t0 = day_start
        self.spans = []

    def add(self, act, start, dur):
        start, dur = int(start), max(1, int(dur))
        if self.spans and start < self.spans[-1][2]:
            start = self.spans[-1][2] + int(self.rng.integers(1, 4))
        self.spans.append((act, start, start + dur))
        return start + dur

    def gap(self, lo, hi):
        return int(self.rng.integers(lo, hi + 1))


def _routine(rng, day_start, wake, bedtime, weekend):
    """Activity spans (activity, start, end) between waking and going to bed."""
    d = _Day(rng, day_start)
    t = wake
    t = d.add(TOILET, t + d.gap(2, 8), d.gap(2, 5))
    if rng.random() < 0.85:
        t = d.add(SHOWER, t + d.gap(1, 10), d.gap(8, 18))
    t = d.add(TEETH, t + d.gap(1, 5), d.gap(2, 4))
    t = d.add(BREAKFAST, t + d.gap(3, 20), d.gap(6, 15))
    if rng.random() < 0.5:
        t = d.add(DRINK, t + d.gap(5, 30), 1 + d.gap(0, 2))
    if not weekend or rng.random() < 0.4:
        away = d.gap(6 * 60, 9 * 60) if not weekend else d.gap(90, 300)
        t = d.add(LEAVE, t + d.gap(10, 40), away)
    evening = bedtime - d.gap(200, 300)
    while t < evening - 60:
        r = rng.random()
        if r < 0.3:
            t = d.add(SNACK, t + d.gap(20, 120), d.gap(2, 5))
        elif r < 0.6:
            t = d.add(DRINK, t + d.gap(20, 120), 1 + d.gap(0, 2))
        elif r < 0.8:
            t = d.add(TOILET, t + d.gap(30, 150), d.gap(2, 5))
        else:
            t = d.add(LEAVE, t + d.gap(20, 90), d.gap(20, 120))
    t = d.add(DINNER, max(t + 10, evening), d.gap(20, 45))
    if rng.random() < 0.6:
        t = d.add(DRINK, t + d.gap(20, 60), 1 + d.gap(0, 2))
    if rng.random() < 0.5:
        t = d.add(SNACK, t + d.gap(30, 90), d.gap(2, 5))
    t = d.add(TOILET, max(t + 10, bedtime - d.gap(25, 40)), d.gap(2, 5))
    d.add(TEETH, t + d.gap(2, 8), d.gap(2, 4))
    return d.spans


def _fire(rng, start, end, where):
    length = 1 + int(rng.random() < 0.3)
    dur = end - start
    if where == "start":
        offs = [0]
    elif where == "end":
        offs = [max(0, dur - length)]
    elif where == "both":
        offs = [0, max(0, dur - length)] if dur > 2 * length else [0]
    else:
        offs = [int(rng.integers(0, max(1, dur - length + 1)))]
    return [(start + o, min(start + o + length, end if where != "both" else end)) for o in offs]


def house_a_like(n_days: int = 25, seed: int = 7, start=datetime(2008, 2, 25)):
    """Simulated ``(events, meta)`` covering ``n_days`` whole days from ``start`` (a midnight)."""
    rng = np.random.default_rng(seed)
    meta = house_a_meta()
    origin = to_minutes(start)
    spans = []
    bed_start = origin - int(rng.integers(30, 90))  # went to bed the evening before
    for day in range(n_days):
        day0 = origin + day * MINUTES_PER_DAY
        wake = day0 + int(rng.normal(7.5 * 60, 35))
        spans.append((BED, bed_start, wake))
        # night-time toilet visit
        if rng.random() < 0.35:
            mid = int(rng.integers(bed_start + 60, max(bed_start + 61, wake - 60)))
            spans[-1] = (BED, bed_start, mid)
            spans.append((TOILET, mid + 1, mid + 1 + int(rng.integers(2, 5))))
            spans.append((BED, mid + 6, wake))
        weekend = day % 7 in (5, 6)
        bedtime = day0 + int(rng.normal(23.4 * 60, 30))
        routine = _routine(rng, day0, wake, bedtime, weekend)
        spans.extend(routine)
        bed_start = max(routine[-1][2] + int(rng.integers(3, 15)), bedtime)

    events = []
    end_ts = origin + n_days * MINUTES_PER_DAY
    for act, s, e in spans:
        s, e = max(s, origin), min(e, end_ts)
        if e <= s:
            continue
        events.append(IntervalEvent(EventKind.ACTIVITY, act, s, e))
        for sensor, p, where in _PROFILES.get(act, []):
            if act == BED and (s == origin or e == end_ts):
                continue
            if rng.random() < p:
                for a, b in _fire(rng, s, e, where):
                    if b > a:
                        events.append(IntervalEvent(EventKind.SENSOR, sensor, a, b))
    # spurious activations, mostly during waking hours
    n_noise = int(rng.poisson(3 * n_days))
    for _ in range(n_noise):
        t = origin + int(rng.integers(0, n_days * MINUTES_PER_DAY))
        if (t % MINUTES_PER_DAY) < 6 * 60 and rng.random() < 0.8:
            continue
        sensor = int(rng.integers(0, len(HOUSE_A_SENSORS)))
        events.append(IntervalEvent(EventKind.SENSOR, sensor, t, t + 1))
    events.sort(key=lambda e: (e.start, e.kind.value, e.id, e.end))
    return events, meta


def house_a_days(n_days: int = 25, seed: int = 7):
    events, meta = house_a_like(n_days, seed)
    origin = to_minutes(datetime(2008, 2, 25))
    seq = rasterize(events, meta, origin, origin + n_days * MINUTES_PER_DAY)
    return split_days(seq), meta


def separable_days(n_days: int = 5, start_ts: int = 0):
    """Days where each minute's activity is pinned down by one sensor.

    Minutes cycle through Idle (two minutes: sensor 0 then sensor 13) and
    activities 1..9 (one minute each, sensors 9 down to 1). Every minute has
    a distinct sensor switching on, and the switching-off sensor always has
    a higher index, so raw, changepoint, last-fired and OB rows all identify
    the label.
    """
    meta = HouseMeta([f"s{i}" for i in range(14)], ["Idle", *(f"a{i}" for i in range(1, 10))],
                     "separable")
    pattern = [(0, 0), (0, 13)] + [(c, 10 - c) for c in range(1, 10)]
    T = n_days * MINUTES_PER_DAY
    x = np.zeros((T, 14), dtype=np.uint8)
    y = np.zeros(T, dtype=np.int64)
    for t in range(T):
        c, s = pattern[(t % MINUTES_PER_DAY) % len(pattern)]
        x[t, s] = 1
        y[t] = c
    start_ts -= start_ts % MINUTES_PER_DAY
    return split_days(TimesliceSequence(start_ts, x, y)), meta


def constant_stretch_days(n_days: int = 6, seed: int = 3):
    """Short corpus dominated by long unchanged sensor readings."""
    return house_a_days(n_days, seed)


def bundled_house_a_paths():
    """``(events.csv, meta.json)`` of the bundled 25-day house-A-shaped corpus.

    The files hold ``house_a_like(25, seed=7)`` written out as interval events.
    """
    from importlib.resources import files

    root = files("harseq") / "data"
    return root / "house_a_events.csv", root / "house_a_meta.json"
