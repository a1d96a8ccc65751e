"""Synthetic dataset construction for demos and tests.

Sensors are laid out in small clusters a couple of kilometers apart, so a
few hundred meters of eta connects a cluster internally and never bridges
two clusters. Planted patterns each get their own cluster whose members
step together (same direction, same grid slots); every other value stays
flat except for optional random noise steps. With noise 0 the only change
events in the whole dataset are the planted ones.

Everything is driven by one seeded RNG in a fixed order, so equal seeds
give byte-identical CSV files and manifests.
"""

from __future__ import annotations

import calendar
import json
import random
from dataclasses import dataclass, field

from . import errors
from .ingest import DATA_HEADER, LOCATION_HEADER, Dataset, assemble_dataset, format_timestamp

ATTRIBUTE_NAMES = ("temperature", "traffic", "light", "sound", "humidity")

DEFAULT_START = calendar.timegm((2016, 3, 1, 0, 0, 0))
DEFAULT_STEP = 3600

BASE_LAT = 43.46192
BASE_LON = -3.80176

CLUSTER_SPACING_DEG = 0.02   # about 2.2 km of latitude, far beyond demo eta
CLUSTER_RADIUS_DEG = 0.001   # keeps a cluster's diameter under 300 m
CLUSTERS_PER_ROW = 20
BACKGROUND_CLUSTER_SIZE = 4

PLANTED_STEP_RANGE = (2.0, 3.0)
NOISE_STEP_RANGE = (0.2, 3.0)

SUGGESTED_EPSILON = 1.0
SUGGESTED_ETA = 300.0


@dataclass(frozen=True)
class SynthConfig:
    sensors: int
    attributes: int
    timestamps: int
    planted_caps: int
    noise: float = 0.0
    seed: int = 0
    cap_size: int = 3
    support: int | None = None
    name: str = "synthetic"
    start: int = DEFAULT_START
    step: int = DEFAULT_STEP

    def validate(self) -> None:
        if self.sensors < 0:
            raise ValueError(f"sensors must be >= 0, got {self.sensors}")
        if self.attributes < 1:
            raise ValueError(f"attributes must be >= 1, got {self.attributes}")
        if self.timestamps < 2:
            raise ValueError(f"timestamps must be >= 2, got {self.timestamps}")
        if self.planted_caps < 0:
            raise ValueError(f"planted_caps must be >= 0, got {self.planted_caps}")
        if not 0.0 <= self.noise <= 1.0:
            raise ValueError(f"noise must be in [0, 1], got {self.noise}")
        if self.cap_size < 2:
            raise ValueError(f"cap_size must be >= 2, got {self.cap_size}")
        if self.planted_caps > 0 and self.cap_size > self.attributes:
            raise ValueError(
                f"cap_size {self.cap_size} needs at least that many attributes, "
                f"got {self.attributes}"
            )
        if self.planted_caps * self.cap_size > self.sensors:
            raise ValueError(
                f"{self.planted_caps} planted caps of size {self.cap_size} "
                f"need more sensors than {self.sensors}"
            )
        support = self.effective_support()
        if not 1 <= support <= self.timestamps - 1:
            raise ValueError(
                f"support {support} must be in [1, {self.timestamps - 1}]"
            )

    def effective_support(self) -> int:
        if self.support is not None:
            return self.support
        return min(max(2, self.timestamps // 4), self.timestamps - 1)


@dataclass
class SynthOutput:
    dataset: Dataset
    files: dict[str, bytes]          # data / location / attribute CSV bytes
    manifest: dict = field(default_factory=dict)

    def manifest_bytes(self) -> bytes:
        return (json.dumps(self.manifest, sort_keys=True, indent=2) + "\n").encode("utf-8")


def _attribute_name(index: int) -> str:
    if index < len(ATTRIBUTE_NAMES):
        return ATTRIBUTE_NAMES[index]
    return f"attr{index:02d}"


def _cluster_center(cluster_index: int) -> tuple[float, float]:
    row, col = divmod(cluster_index, CLUSTERS_PER_ROW)
    return BASE_LAT + CLUSTER_SPACING_DEG * row, BASE_LON + CLUSTER_SPACING_DEG * col


def _scatter(rng: random.Random, center: tuple[float, float]) -> tuple[float, float]:
    lat = round(center[0] + rng.uniform(-CLUSTER_RADIUS_DEG, CLUSTER_RADIUS_DEG), 5)
    lon = round(center[1] + rng.uniform(-CLUSTER_RADIUS_DEG, CLUSTER_RADIUS_DEG), 5)
    return lat, lon


def _render_files(
    attributes: list[str],
    placed: list[tuple[str, str, float, float]],
    series: dict[tuple[str, str], list[float | None]],
    start: int,
    step: int,
    count: int,
) -> dict[str, bytes]:
    attribute_csv = "\n".join(sorted(attributes)) + "\n"
    location_lines = [LOCATION_HEADER]
    for sid, attr, lat, lon in placed:
        location_lines.append(f"{sid},{attr},{lat!r},{lon!r}")
    location_csv = "\n".join(location_lines) + "\n"
    data_lines = [DATA_HEADER]
    for sid, attr, _, _ in placed:
        values = series[(sid, attr)]
        for k in range(count):
            stamp = format_timestamp(start + k * step)
            value = values[k]
            text = "null" if value is None else repr(value)
            data_lines.append(f"{sid},{attr},{stamp},{text}")
    data_csv = "\n".join(data_lines) + "\n"
    return {
        "data": data_csv.encode("utf-8"),
        "location": location_csv.encode("utf-8"),
        "attribute": attribute_csv.encode("utf-8"),
    }


def generate(config: SynthConfig) -> SynthOutput:
    """Build the CSV triple, the assembled dataset, and a manifest."""
    config.validate()
    rng = random.Random(config.seed)
    attributes = [_attribute_name(i) for i in range(config.attributes)]
    support = config.effective_support()
    t_count = config.timestamps

    # Geometry: one cluster per planted cap, then background clusters.
    placed: list[tuple[str, str, float, float]] = []
    planted_members: list[list[tuple[str, str]]] = []
    cluster = 0
    serial = 0
    for _ in range(config.planted_caps):
        center = _cluster_center(cluster)
        cluster += 1
        members = []
        for m in range(config.cap_size):
            sid = f"{serial:05d}"
            serial += 1
            lat, lon = _scatter(rng, center)
            placed.append((sid, attributes[m], lat, lon))
            members.append((sid, attributes[m]))
        planted_members.append(members)
    while serial < config.sensors:
        center = _cluster_center(cluster)
        cluster += 1
        for _ in range(min(BACKGROUND_CLUSTER_SIZE, config.sensors - serial)):
            sid = f"{serial:05d}"
            serial += 1
            lat, lon = _scatter(rng, center)
            placed.append((sid, rng.choice(attributes), lat, lon))

    # Planted schedules: which grid slots step, and each member's direction.
    planted: list[dict] = []
    step_slots: dict[tuple[str, str], dict[int, float]] = {
        (sid, attr): {} for sid, attr, _, _ in placed
    }
    for members in planted_members:
        slots = sorted(rng.sample(range(1, t_count), support))
        entry_members = []
        for sid, attr in members:
            sign = rng.choice((1, -1))
            for t in slots:
                step_slots[(sid, attr)][t] = sign * rng.uniform(*PLANTED_STEP_RANGE)
            entry_members.append({"id": sid, "attribute": attr, "sign": "+" if sign > 0 else "-"})
        planted.append({"members": entry_members, "timestamps": slots})

    # Signals: constant base plus planted steps plus optional noise steps.
    series: dict[tuple[str, str], list[float | None]] = {}
    for sid, attr, _, _ in placed:
        base = round(rng.uniform(5.0, 25.0), 2)
        slots = step_slots[(sid, attr)]
        values = [float(base)]
        for t in range(1, t_count):
            delta = slots.get(t, 0.0)
            if delta == 0.0 and config.noise > 0 and rng.random() < config.noise:
                delta = rng.choice((1, -1)) * rng.uniform(*NOISE_STEP_RANGE)
            values.append(values[-1] + delta)
        series[(sid, attr)] = [round(v, 4) for v in values]

    files = _render_files(attributes, placed, series, config.start, config.step, t_count)
    dataset = assemble_dataset(
        config.name, files["attribute"], files["location"], [files["data"]]
    )
    suggested = {
        "epsilon": SUGGESTED_EPSILON,
        "eta_meters": SUGGESTED_ETA,
        "mu": max(2, config.cap_size),
        "psi": support,
        "distinct_attributes": True,
        "direction_mode": "signed",
        "maximal": True,
    }
    manifest = {
        "name": config.name,
        "seed": config.seed,
        "sensors": config.sensors,
        "attributes": attributes,
        "timestamps": t_count,
        "noise": config.noise,
        "support": support,
        "planted": planted,
        "suggested_params": suggested,
    }
    return SynthOutput(dataset=dataset, files=files, manifest=manifest)


def example1(seed: int = 7, *, noise: float = 0.0, timestamps: int = 168) -> SynthOutput:
    """Three sensors, one pattern: two traffic counters plus a thermometer.

    The planted members all step upward together at 48 shared hours of a
    one-week hourly grid. The documented parameters keep exactly that
    pattern and nothing else: repeated attributes allowed (two traffic
    members), mu 2, maximal filtering to drop its sub-pairs.
    """
    if timestamps < 60:
        raise ValueError("example needs at least 60 timestamps")
    rng = random.Random(seed)
    attributes = ["temperature", "traffic"]
    center = (BASE_LAT, BASE_LON)
    placed = []
    for sid, attr in (("00000", "traffic"), ("00001", "traffic"), ("00002", "temperature")):
        lat, lon = _scatter(rng, center)
        placed.append((sid, attr, lat, lon))

    support = 48
    slots = sorted(rng.sample(range(1, timestamps), support))
    slot_set = set(slots)
    series: dict[tuple[str, str], list[float | None]] = {}
    members_doc = []
    for sid, attr, _, _ in placed:
        base = round(rng.uniform(5.0, 25.0), 2)
        values = [float(base)]
        for t in range(1, timestamps):
            delta = rng.uniform(*PLANTED_STEP_RANGE) if t in slot_set else 0.0
            if delta == 0.0 and noise > 0 and rng.random() < noise:
                delta = rng.choice((1, -1)) * rng.uniform(*NOISE_STEP_RANGE)
            values.append(values[-1] + delta)
        series[(sid, attr)] = [round(v, 4) for v in values]
        members_doc.append({"id": sid, "attribute": attr, "sign": "+"})

    files = _render_files(attributes, placed, series, DEFAULT_START, DEFAULT_STEP, timestamps)
    dataset = assemble_dataset("example1", files["attribute"], files["location"], [files["data"]])
    suggested = {
        "epsilon": SUGGESTED_EPSILON,
        "eta_meters": SUGGESTED_ETA,
        "mu": 2,
        "psi": 30,
        "distinct_attributes": False,
        "direction_mode": "signed",
        "maximal": True,
    }
    manifest = {
        "name": "example1",
        "seed": seed,
        "sensors": 3,
        "attributes": attributes,
        "timestamps": timestamps,
        "noise": noise,
        "support": support,
        "planted": [{"members": members_doc, "timestamps": slots}],
        "suggested_params": suggested,
    }
    return SynthOutput(dataset=dataset, files=files, manifest=manifest)
