"""Shared builders for the test suite.

The dataset builders here construct in-memory fixtures directly, without
going through CSV, so miner and service tests can state event positions
explicitly and keep the interesting structure visible at the call site.
"""

from __future__ import annotations

import random

import numpy as np

from capmine.ingest import Dataset, Sensor, TimeGrid
from capmine.miner import MiningParams

BASE_LAT = 43.462
BASE_LON = -3.802

# one degree of latitude in meters on the package's sphere
M_PER_DEG = 6_371_000.0 * np.pi / 180.0


def offset_deg(meters: float) -> float:
    return meters / M_PER_DEG


def series_with_events(length: int, rises=(), falls=(), magnitude: float = 2.0) -> list:
    """A value list whose only deltas are +/-magnitude at the given indices."""
    values = [10.0]
    rises, falls = set(rises), set(falls)
    for t in range(1, length):
        delta = magnitude if t in rises else (-magnitude if t in falls else 0.0)
        values.append(values[-1] + delta)
    return values


def make_dataset(
    series_map: dict[tuple[str, str], list],
    *,
    coords: dict[tuple[str, str], tuple[float, float]] | None = None,
    start: int = 0,
    step: int = 60,
    name: str = "fixture",
) -> Dataset:
    """Dataset from explicit per-sensor value lists; None means null.

    Without coords every sensor sits at the same point, so any eta >= 0
    makes the proximity graph complete.
    """
    lengths = {len(v) for v in series_map.values()}
    assert len(lengths) == 1, "all series must share a length"
    count = lengths.pop()
    sensors = []
    series = {}
    attributes = set()
    for key, values in series_map.items():
        sid, attr = key
        attributes.add(attr)
        if coords and key in coords:
            lat, lon = coords[key]
        else:
            lat, lon = BASE_LAT, BASE_LON
        sensors.append(Sensor(id=sid, attribute=attr, lat=lat, lon=lon))
        series[key] = np.array(
            [np.nan if v is None else float(v) for v in values], dtype=np.float64
        )
    sensors.sort(key=lambda s: s.key)
    return Dataset(
        name=name,
        attributes=frozenset(attributes),
        sensors=sensors,
        grid=TimeGrid(start=start, step=step, count=count),
        series=series,
    )


def random_instance(
    rng: random.Random,
    *,
    max_sensors: int = 12,
    max_timestamps: int = 200,
) -> tuple[Dataset, MiningParams]:
    """A small random dataset plus random parameters, oracle-checkable."""
    n = rng.randint(2, max_sensors)
    t = rng.randint(3, max_timestamps)
    attrs = ["temperature", "traffic", "light", "humidity"][: rng.randint(2, 4)]

    sensors = []
    series = {}
    for i in range(n):
        # clumped coordinates so random eta draws hit several graph shapes
        lat = BASE_LAT + rng.choice([0.0, offset_deg(80), offset_deg(160), 0.5])
        lon = BASE_LON + rng.choice([0.0, offset_deg(80), 0.5])
        lat += rng.uniform(0, offset_deg(20))
        lon += rng.uniform(0, offset_deg(20))
        sensor = Sensor(
            id=f"{i:05d}",
            attribute=rng.choice(attrs),
            lat=round(lat, 6),
            lon=round(lon, 6),
        )
        sensors.append(sensor)
        values = np.empty(t, dtype=np.float64)
        level = rng.uniform(0.0, 10.0)
        for k in range(t):
            if rng.random() < 0.08:
                values[k] = np.nan
                continue
            level += rng.choice([-2.0, -1.0, 0.0, 0.0, 1.0, 2.0]) * rng.uniform(0.5, 1.5)
            values[k] = level
        series[sensor.key] = values

    dataset = Dataset(
        name="random",
        attributes=frozenset(attrs),
        sensors=sensors,
        grid=TimeGrid(start=0, step=60, count=t),
        series=series,
    )
    params = MiningParams(
        eta_meters=rng.choice([0.0, 90.0, 200.0, 1000.0, 100_000.0]),
        mu=rng.randint(2, 4),
        psi=rng.randint(1, 6),
        epsilon=rng.choice([0.0, 0.3, 0.8, 1.5]),
        epsilon_by_attribute={attrs[0]: rng.choice([0.2, 1.0])} if rng.random() < 0.3 else {},
        max_error=rng.choice([0.0, 0.0, 0.5]),
        distinct_attributes=rng.random() < 0.5,
        direction_mode=rng.choice(["signed", "unsigned"]),
        maximal=rng.random() < 0.25,
    )
    return dataset, params
