"""Parsing and assembly of the three-CSV sensor interchange format.

A dataset arrives as three files:

* ``attribute.csv`` - one attribute name per line, no header.
* ``location.csv``  - header ``id,attribute,lat,lon``, one sensor per row.
* ``data.csv``      - header ``id,attribute,time,data``, one measurement per
  row; the literal ``null`` marks a missing value.

Sensors are keyed by the (id, attribute) pair: the same physical station may
appear once per attribute it measures. Measurements are reassembled onto a
uniform time grid inferred from the data; grid cells with no record become
nulls. The canonical serialization of the assembled dataset is hashed so
that mining results can be cached by content, not by file name.
"""

from __future__ import annotations

import calendar
import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import errors

SensorKey = tuple[str, str]  # (sensor id, attribute)

LOCATION_HEADER = "id,attribute,lat,lon"
DATA_HEADER = "id,attribute,time,data"
TIMESTAMP_FORMAT = "%Y-%m-%d %H:%M:%S"
DEFAULT_CHUNK_LINES = 10_000

# Uniform grids denser than this are treated as evidence of irregular input
# rather than a legitimate sampling interval.
MAX_GRID_CELLS = 100_000_000

_TIMESTAMP_RE = re.compile(r"^\d{4}-(\d{2})-(\d{2}) (\d{2}):(\d{2}):(\d{2})$")


@dataclass(frozen=True)
class Sensor:
    id: str
    attribute: str
    lat: float
    lon: float

    @property
    def key(self) -> SensorKey:
        return (self.id, self.attribute)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform sampling grid: timestamps ``start + k * step`` for k < count."""

    start: int  # epoch seconds, UTC
    step: int   # seconds, >= 1
    count: int

    def __post_init__(self):
        if self.step < 1:
            raise ValueError("grid step must be a positive number of seconds")
        if self.count < 0:
            raise ValueError("grid count must be non-negative")

    def timestamp_at(self, index: int) -> int:
        return self.start + index * self.step

    def index_of(self, timestamp: int) -> int:
        """Grid index of an on-grid timestamp; raises if off-grid."""
        offset = timestamp - self.start
        index, rem = divmod(offset, self.step)
        if rem != 0 or not (0 <= index < self.count):
            raise errors.IrregularGrid(f"timestamp {timestamp} not on grid")
        return int(index)


@dataclass(frozen=True)
class Record:
    id: str
    attribute: str
    timestamp: int  # epoch seconds
    value: float | None
    line: int = 0   # 1-based line number in data.csv, for diagnostics


@dataclass
class Dataset:
    name: str
    attributes: frozenset[str]
    sensors: list[Sensor]
    grid: TimeGrid
    series: dict[SensorKey, np.ndarray]  # float64 arrays, NaN = null
    content_hash: str = ""

    def __post_init__(self):
        if not self.content_hash:
            self.content_hash = content_hash(self)

    @property
    def sensor_count(self) -> int:
        return len(self.sensors)

    def sensor_by_key(self, key: SensorKey) -> Sensor:
        for sensor in self.sensors:
            if sensor.key == key:
                return sensor
        raise errors.UnknownSensor(f"no sensor {key[0]} with attribute {key[1]}")

    def values_for(self, key: SensorKey) -> np.ndarray:
        try:
            return self.series[key]
        except KeyError:
            raise errors.UnknownSensor(f"no sensor {key[0]} with attributes {key[1]}") from None

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        if (self.name, self.attributes, self.sensors, self.grid) != (
            other.name,
            other.attributes,
            other.sensors,
            other.grid,
        ):
            return False
        if set(self.series) != set(other.series):
            return False
        for key, values in self.series.items():
            theirs = other.series[key]
            if len(values) != len(theirs):
                return False
            mine_nan = np.isnan(values)
            if not np.array_equal(mine_nan, np.isnan(theirs)):
                return False
            if not np.array_equal(values[~mine_nan], theirs[~np.isnan(theirs)]):
                return False
        return True


def _decode(data: bytes, kind: str) -> str:
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise errors.MalformedRow(f"not valid UTF-8: {exc}", kind=kind) from None


def _split_fields(line: str, expected: int, kind: str, line_no: int) -> list[str]:
    if '"' in line:
        raise errors.QuotedField("quoted fields are not supported", kind=kind, line=line_no)
    fields = line.split(",")
    if len(fields) != expected:
        raise errors.MalformedRow(
            f"expected {expected} comma-separated fields, got {len(fields)}",
            kind=kind,
            line=line_no,
        )
    return fields


def _iter_lines(text: str) -> Iterable[tuple[int, str]]:
    """Yield (1-based line number, line) with line endings stripped."""
    for i, raw in enumerate(text.split("\n"), start=1):
        yield i, raw.rstrip("\r")


def parse_attribute_csv(data: bytes) -> frozenset[str]:
    """Parse attribute.csv: one attribute name per line, no header."""
    text = _decode(data, "attribute.csv")
    names: list[str] = []
    seen: set[str] = set()
    for line_no, line in _iter_lines(text):
        name = line.strip()
        if not name:
            continue
        if '"' in name:
            raise errors.QuotedField("quoted fields are not supported", kind="attribute.csv", line=line_no)
        if name in seen:
            raise errors.DuplicateAttribute(f"attribute {name!r} listed twice", kind="attribute.csv", line=line_no)
        seen.add(name)
        names.append(name)
    if not names:
        raise errors.EmptyFile("no attributes listed", kind="attribute.csv")
    return frozenset(names)


def parse_location_csv(data: bytes, attributes: frozenset[str]) -> list[Sensor]:
    """Parse location.csv rows into Sensor values, preserving file order."""
    text = _decode(data, "location.csv")
    lines = _iter_lines(text)
    try:
        header_no, header = next(lines)
    except StopIteration:  # pragma: no cover - split always yields once
        raise errors.BadHeader("empty file", kind="location.csv")
    if header.strip() != LOCATION_HEADER:
        raise errors.BadHeader(
            f"expected header {LOCATION_HEADER!r}, got {header.strip()!r}",
            kind="location.csv",
            line=header_no,
        )
    sensors: list[Sensor] = []
    seen: set[SensorKey] = set()
    for line_no, line in lines:
        if not line.strip():
            continue
        sid, attribute, lat_text, lon_text = _split_fields(line, 4, "location.csv", line_no)
        if not sid:
            raise errors.MalformedRow("empty sensor id", kind="location.csv", line=line_no)
        if attribute not in attributes:
            raise errors.UnknownAttribute(
                f"attribute {attribute!r} not listed in attribute.csv",
                kind="location.csv",
                line=line_no,
            )
        try:
            lat = float(lat_text)
            lon = float(lon_text)
        except ValueError:
            raise errors.MalformedRow(
                f"coordinates must be numeric, got {lat_text!r},{lon_text!r}",
                kind="location.csv",
                line=line_no,
            ) from None
        if not (math.isfinite(lat) and math.isfinite(lon)):
            raise errors.CoordinateOutOfRange("non-finite coordinate", kind="location.csv", line=line_no)
        if not -90.0 <= lat <= 90.0 or not -180.0 <= lon <= 180.0:
            raise errors.CoordinateOutOfRange(
                f"lat {lat}, lon {lon} outside valid ranges",
                kind="location.csv",
                line=line_no,
            )
        key = (sid, attribute)
        if key in seen:
            raise errors.DuplicateSensor(
                f"sensor {sid!r} with attribute {attribute!r} listed twice",
                kind="location.csv",
                line=line_no,
            )
        seen.add(key)
        sensors.append(Sensor(sid, attribute, lat, lon))
    return sensors


def parse_timestamp(text: str) -> int:
    """Parse ``YYYY-MM-DD HH:MM:SS`` (UTC) to epoch seconds."""
    match = _TIMESTAMP_RE.match(text)
    if not match:
        raise ValueError(f"timestamp {text!r} not in YYYY-MM-DD HH:MM:SS format")
    year = int(text[0:4])
    month, day, hour, minute, second = (int(g) for g in match.groups())
    if not (1 <= month <= 12 and 1 <= day <= 31 and hour <= 23 and minute <= 59 and second <= 59):
        raise ValueError(f"timestamp {text!r} has out-of-range components")
    days_in_month = calendar.monthrange(year, month)[1]
    if day > days_in_month:
        raise ValueError(f"timestamp {text!r} has out-of-range day")
    return calendar.timegm((year, month, day, hour, minute, second, 0, 0, 0))


def format_timestamp(epoch: int) -> str:
    import time

    return time.strftime(TIMESTAMP_FORMAT, time.gmtime(epoch))


def parse_data_chunk(
    data: bytes,
    header_expected: bool,
    *,
    line_offset: int = 0,
) -> list[Record]:
    """Parse one chunk of data.csv into records, in file order.

    ``line_offset`` is the number of lines preceding this chunk in the whole
    file, so diagnostics can name absolute line numbers.
    """
    text = _decode(data, "data.csv")
    records: list[Record] = []
    timestamp_cache: dict[str, int] = {}
    first = header_expected
    for rel_no, line in _iter_lines(text):
        line_no = rel_no + line_offset
        stripped = line.strip()
        if first:
            first = False
            if stripped != DATA_HEADER:
                raise errors.BadHeader(
                    f"expected header {DATA_HEADER!r}, got {stripped!r}",
                    kind="data.csv",
                    line=line_no,
                )
            continue
        if not stripped:
            continue
        sid, attribute, time_text, value_text = _split_fields(line, 4, "data.csv", line_no)
        if not sid:
            raise errors.MalformedRow("empty sensor id", kind="data.csv", line=line_no)
        epoch = timestamp_cache.get(time_text)
        if epoch is None:
            try:
                epoch = parse_timestamp(time_text)
            except ValueError as exc:
                raise errors.BadTimestamp(str(exc), kind="data.csv", line=line_no) from None
            timestamp_cache[time_text] = epoch
        if value_text == "null":
            value: float | None = None
        else:
            try:
                value = float(value_text)
            except ValueError:
                raise errors.BadValue(
                    f"value {value_text!r} is neither a number nor null",
                    kind="data.csv",
                    line=line_no,
                ) from None
            if not math.isfinite(value):
                raise errors.BadValue(
                    f"value {value_text!r} is not finite",
                    kind="data.csv",
                    line=line_no,
                )
        records.append(Record(sid, attribute, epoch, value, line_no))
    return records


def infer_time_grid(records: Sequence[Record]) -> TimeGrid:
    """Infer the uniform grid spanning all record timestamps.

    The step is the greatest common divisor of the gaps between sorted
    distinct timestamps, so every record lands exactly on a grid cell.
    """
    stamps = sorted({r.timestamp for r in records})
    if not stamps:
        raise errors.SingleTimestamp("no timestamps present")
    if len(stamps) == 1:
        raise errors.SingleTimestamp("a single distinct timestamp cannot define a grid step")
    step = 0
    prev = stamps[0]
    for ts in stamps[1:]:
        step = math.gcd(step, ts - prev)
        prev = ts
    start = stamps[0]
    count = (stamps[-1] - start) // step + 1
    if count > MAX_GRID_CELLS:
        raise errors.IrregularGrid(
            f"inferred grid would need {count} cells (step {step} s); "
            "timestamps do not fit a reasonable uniform interval"
        )
    grid = TimeGrid(start=start, step=step, count=count)
    for ts in stamps:
        grid.index_of(ts)  # defensive; gcd construction puts all stamps on-grid
    return grid


def _grid_for(records: Sequence[Record]) -> TimeGrid:
    distinct = {r.timestamp for r in records}
    if len(distinct) >= 2:
        return infer_time_grid(records)
    if len(distinct) == 1:
        return TimeGrid(start=next(iter(distinct)), step=1, count=1)
    return TimeGrid(start=0, step=1, count=0)


def assemble_dataset(
    name: str,
    attribute_bytes: bytes,
    location_bytes: bytes,
    data_chunks: Sequence[bytes],
) -> Dataset:
    """Parse all three files and build a dense, content-hashed dataset.

    Missing grid cells become nulls. Identical duplicate rows are collapsed;
    rows that disagree on a non-null value for the same cell are an error.
    """
    attributes = parse_attribute_csv(attribute_bytes)
    sensors = parse_location_csv(location_bytes, attributes)
    known = {s.key for s in sensors}

    records: list[Record] = []
    line_offset = 0
    for i, chunk in enumerate(data_chunks):
        records.extend(parse_data_chunk(chunk, header_expected=(i == 0), line_offset=line_offset))
        line_offset += count_lines(chunk)

    for record in records:
        if (record.id, record.attribute) not in known:
            raise errors.OrphanRecord(
                f"measurement for unknown sensor {record.id!r}/{record.attribute!r}",
                kind="data.csv",
                line=record.line,
            )

    grid = _grid_for(records)
    series: dict[SensorKey, np.ndarray] = {
        s.key: np.full(grid.count, np.nan, dtype=np.float64) for s in sensors
    }
    filled: dict[tuple[str, str, int], float | None] = {}
    for record in records:
        index = grid.index_of(record.timestamp)
        cell = (record.id, record.attribute, index)
        if cell in filled:
            previous = filled[cell]
            if previous is None or record.value is None or previous == record.value:
                if record.value is not None:
                    filled[cell] = record.value
                    series[(record.id, record.attribute)][index] = record.value
                continue
            raise errors.ConflictingValue(
                f"sensor {record.id!r}/{record.attribute!r} at "
                f"{format_timestamp(record.timestamp)} has values {previous} and {record.value}",
                kind="data.csv",
                line=record.line,
            )
        filled[cell] = record.value
        if record.value is not None:
            series[(record.id, record.attribute)][index] = record.value

    return Dataset(
        name=name,
        attributes=attributes,
        sensors=sensors,
        grid=grid,
        series=series,
    )


def count_lines(data: bytes) -> int:
    """Number of lines in ``data`` under the chunking convention."""
    if not data:
        return 0
    n = data.count(b"\n")
    if not data.endswith(b"\n"):
        n += 1
    return n


def chunk_file(data: bytes, lines_per_chunk: int = DEFAULT_CHUNK_LINES) -> list[bytes]:
    """Split a file into slices of at most ``lines_per_chunk`` lines.

    Concatenating the chunks reproduces the input byte for byte; every chunk
    except possibly the last holds exactly ``lines_per_chunk`` lines.
    """
    if lines_per_chunk < 1:
        raise ValueError("lines_per_chunk must be >= 1")
    if not data:
        return []
    parts = data.split(b"\n")
    lines = [part + b"\n" for part in parts[:-1]]
    if parts[-1]:
        lines.append(parts[-1])
    chunks = []
    for i in range(0, len(lines), lines_per_chunk):
        chunks.append(b"".join(lines[i : i + lines_per_chunk]))
    return chunks


def _format_value(value: float) -> str:
    return repr(float(value))


def canonical_text(dataset: Dataset) -> str:
    """Canonical serialization used for content hashing.

    Independent of the dataset name and of input row order: attributes,
    sensors, and series are emitted in sorted key order.
    """
    out: list[str] = ["capmine-dataset-v1"]
    out.append("attributes")
    out.extend(sorted(dataset.attributes))
    out.append("sensors")
    for sensor in sorted(dataset.sensors, key=lambda s: s.key):
        out.append(f"{sensor.id},{sensor.attribute},{_format_value(sensor.lat)},{_format_value(sensor.lon)}")
    out.append(f"grid {dataset.grid.start} {dataset.grid.step} {dataset.grid.count}")
    out.append("series")
    for key in sorted(dataset.series):
        values = dataset.series[key]
        rendered = ",".join("null" if np.isnan(v) else _format_value(v) for v in values)
        out.append(f"{key[0]},{key[1]}:{rendered}")
    return "\n".join(out) + "\n"


def content_hash(dataset: Dataset) -> str:
    return hashlib.sha256(canonical_text(dataset).encode("utf-8")).hexdigest()


def dataset_to_json(dataset: Dataset) -> str:
    """Serialize a dataset to JSON (round-trips exactly, including nulls)."""
    doc = {
        "name": dataset.name,
        "attributes": sorted(dataset.attributes),
        "sensors": [
            {"id": s.id, "attribute": s.attribute, "lat": s.lat, "lon": s.lon}
            for s in dataset.sensors
        ],
        "grid": {"start": dataset.grid.start, "step": dataset.grid.step, "count": dataset.grid.count},
        "series": [
            {
                "id": key[0],
                "attribute": key[1],
                "values": [None if np.isnan(v) else float(v) for v in dataset.series[key]],
            }
            for key in sorted(dataset.series)
        ],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def dataset_from_json(text: str) -> Dataset:
    doc = json.loads(text)
    grid = TimeGrid(start=doc["grid"]["start"], step=doc["grid"]["step"], count=doc["grid"]["count"])
    sensors = [Sensor(s["id"], s["attribute"], s["lat"], s["lon"]) for s in doc["sensors"]]
    series: dict[SensorKey, np.ndarray] = {}
    for entry in doc["series"]:
        values = np.array(
            [np.nan if v is None else float(v) for v in entry["values"]], dtype=np.float64
        )
        series[(entry["id"], entry["attribute"])] = values
    return Dataset(
        name=doc["name"],
        attributes=frozenset(doc["attributes"]),
        sensors=sensors,
        grid=grid,
        series=series,
    )


@dataclass
class UploadSession:
    """Server-side reassembly of a chunked three-file upload.

    Chunks may arrive in any order; commit requires every declared sequence
    number of every file. Sessions are mutated by a single writer at a time.
    """

    dataset_name: str
    expected: dict[str, int]  # file kind -> declared chunk count
    chunks: dict[tuple[str, int], bytes] = field(default_factory=dict)
    state: str = "open"  # open | committed | aborted

    FILE_KINDS = ("data", "location", "attribute")

    def __post_init__(self):
        for kind in self.expected:
            if kind not in self.FILE_KINDS:
                raise ValueError(f"unknown file kind {kind!r}")
        for kind in self.FILE_KINDS:
            if self.expected.get(kind, 0) < 1:
                raise ValueError(f"expected chunk count for {kind!r} must be declared and >= 1")

    def add_chunk(self, kind: str, seq: int, data: bytes) -> None:
        if self.state != "open":
            raise errors.SessionClosed(f"session is {self.state}")
        if kind not in self.FILE_KINDS:
            raise ValueError(f"unknown file kind {kind!r}")
        if not 0 <= seq < self.expected[kind]:
            raise ValueError(f"sequence {seq} outside declared range for {kind!r}")
        self.chunks[(kind, seq)] = data

    def missing(self) -> list[tuple[str, int]]:
        gaps = []
        for kind in self.FILE_KINDS:
            for seq in range(self.expected[kind]):
                if (kind, seq) not in self.chunks:
                    gaps.append((kind, seq))
        return gaps

    def received_bytes(self) -> int:
        return sum(len(c) for c in self.chunks.values())

    def file_bytes(self, kind: str) -> bytes:
        return b"".join(self.chunks[(kind, seq)] for seq in range(self.expected[kind]))

    def commit(self) -> Dataset:
        if self.state != "open":
            raise errors.SessionClosed(f"session is {self.state}")
        gaps = self.missing()
        if gaps:
            raise errors.MissingChunks(gaps)
        data_chunks = [self.chunks[("data", seq)] for seq in range(self.expected["data"])]
        dataset = assemble_dataset(
            self.dataset_name,
            self.file_bytes("attribute"),
            self.file_bytes("location"),
            data_chunks,
        )
        self.state = "committed"
        return dataset

    def abort(self) -> None:
        self.state = "aborted"
