"""Correlated attribute pattern search.

A pattern (cap) is a set of sensors, each tagged with a change direction,
such that: the sensors induce a connected subgraph of the proximity graph,
they span at least two and at most mu attributes, and they share at least
psi co-evolving timestamps (grid indices where every member has a change
event of its tagged direction).

The search walks each spatial component with a canonical connected-subgraph
expansion: every connected sensor set is generated exactly once, rooted at
its smallest member, growing only through neighbors that are new to the
subgraph's neighborhood and larger than the root. Support counts are carried as
timestamp bitmasks and shrink monotonically along any expansion, so a set
whose every direction assignment falls below psi closes its whole subtree.

``brute_force_mine`` is the shipped verification oracle: it filters every
signed sensor subset directly against the pattern conditions, with its own
connectivity and intersection code, and must agree with ``mine`` exactly.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import errors
from .ingest import Dataset, SensorKey
from .segmentation import SensorEvents, extract_events, smooth
from .spatial import ProximityGraph, build_proximity_graph, connected_components, haversine

EventMap = dict[SensorKey, SensorEvents]

SIGNED = "signed"
UNSIGNED = "unsigned"

_SIGN_TEXT = {1: "+", -1: "-", 0: None}
_TEXT_SIGN = {"+": 1, "-": -1, None: 0}


@dataclass(frozen=True)
class MiningParams:
    """The four search knobs plus mode flags.

    ``epsilon`` is the change threshold for attributes not named in
    ``epsilon_by_attribute``; with ``epsilon_relative`` the numbers are
    fractions of each sensor's observed non-null value range instead of
    absolute units. ``max_error`` bounds the smoothing residual per
    attribute; 0 leaves series untouched.
    """

    eta_meters: float
    mu: int
    psi: int
    epsilon: float = 0.0
    epsilon_by_attribute: Mapping[str, float] = field(default_factory=dict)
    epsilon_relative: bool = False
    max_error: float = 0.0
    max_error_by_attribute: Mapping[str, float] = field(default_factory=dict)
    distinct_attributes: bool = True
    direction_mode: str = SIGNED
    maximal: bool = False

    def validate(self) -> None:
        if not isinstance(self.mu, int) or self.mu < 2:
            raise errors.InvalidParams(f"mu must be an integer >= 2, got {self.mu!r}")
        if not isinstance(self.psi, int) or self.psi < 1:
            raise errors.InvalidParams(f"psi must be an integer >= 1, got {self.psi!r}")
        if self.eta_meters < 0:
            raise errors.InvalidParams(f"eta_meters must be >= 0, got {self.eta_meters}")
        for name, value in [("epsilon", self.epsilon), ("max_error", self.max_error)]:
            if value < 0:
                raise errors.InvalidParams(f"{name} must be >= 0, got {value}")
        for attr, value in {**self.epsilon_by_attribute, **self.max_error_by_attribute}.items():
            if value < 0:
                raise errors.InvalidParams(f"threshold for {attr!r} must be >= 0, got {value}")
        if self.direction_mode not in (SIGNED, UNSIGNED):
            raise errors.InvalidParams(
                f"direction_mode must be {SIGNED!r} or {UNSIGNED!r}, got {self.direction_mode!r}"
            )

    @property
    def signed(self) -> bool:
        return self.direction_mode == SIGNED

    def epsilon_for(self, attribute: str, value_range: float = 0.0) -> float:
        base = self.epsilon_by_attribute.get(attribute, self.epsilon)
        if self.epsilon_relative:
            return base * value_range
        return base

    def max_error_for(self, attribute: str) -> float:
        return self.max_error_by_attribute.get(attribute, self.max_error)

    def canonical_dict(self) -> dict:
        return {
            "direction_mode": self.direction_mode,
            "distinct_attributes": bool(self.distinct_attributes),
            "epsilon": {
                "default": float(self.epsilon),
                "per_attribute": {k: float(v) for k, v in self.epsilon_by_attribute.items()},
                "relative": bool(self.epsilon_relative),
            },
            "eta_meters": float(self.eta_meters),
            "max_error": {
                "default": float(self.max_error),
                "per_attribute": {k: float(v) for k, v in self.max_error_by_attribute.items()},
            },
            "maximal": bool(self.maximal),
            "mu": int(self.mu),
            "psi": int(self.psi),
        }

    def canonical_json(self) -> str:
        return json.dumps(self.canonical_dict(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()


def _as_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise errors.InvalidParams(f"{name} must be a number, got {value!r}")
    if isinstance(value, float):
        if not value.is_integer():
            raise errors.InvalidParams(f"{name} must be an integer, got {value}")
        value = int(value)
    return value


def _as_float(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise errors.InvalidParams(f"{name} must be a number, got {value!r}")
    return float(value)


def _threshold_block(value, name: str) -> tuple[float, dict[str, float], bool]:
    """Accepts a bare number or {default, per_attribute, relative}."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value), {}, False
    if isinstance(value, dict):
        default = _as_float(value.get("default", 0.0), f"{name}.default")
        per = value.get("per_attribute", {})
        if not isinstance(per, dict):
            raise errors.InvalidParams(f"{name}.per_attribute must be an object")
        per_attribute = {str(k): _as_float(v, f"{name}.per_attribute[{k}]") for k, v in per.items()}
        relative = bool(value.get("relative", False))
        return default, per_attribute, relative
    raise errors.InvalidParams(f"{name} must be a number or an object, got {value!r}")


def params_from_dict(doc: Mapping) -> MiningParams:
    """Build validated MiningParams from a JSON-shaped mapping."""
    if not isinstance(doc, Mapping):
        raise errors.InvalidParams("params must be an object")
    known = {
        "eta_meters",
        "mu",
        "psi",
        "epsilon",
        "max_error",
        "distinct_attributes",
        "direction_mode",
        "maximal",
    }
    unknown = set(doc) - known
    if unknown:
        raise errors.InvalidParams(f"unknown parameter fields: {sorted(unknown)}")
    for required in ("eta_meters", "mu", "psi"):
        if required not in doc:
            raise errors.InvalidParams(f"missing required parameter {required!r}")
    eps_default, eps_per, eps_relative = _threshold_block(doc.get("epsilon", 0.0), "epsilon")
    err_default, err_per, err_relative = _threshold_block(doc.get("max_error", 0.0), "max_error")
    if err_relative:
        raise errors.InvalidParams("max_error has no relative mode")
    params = MiningParams(
        eta_meters=_as_float(doc["eta_meters"], "eta_meters"),
        mu=_as_int(doc["mu"], "mu"),
        psi=_as_int(doc["psi"], "psi"),
        epsilon=eps_default,
        epsilon_by_attribute=eps_per,
        epsilon_relative=eps_relative,
        max_error=err_default,
        max_error_by_attribute=err_per,
        distinct_attributes=bool(doc.get("distinct_attributes", True)),
        direction_mode=str(doc.get("direction_mode", SIGNED)),
        maximal=bool(doc.get("maximal", False)),
    )
    params.validate()
    return params


@dataclass(frozen=True)
class Cap:
    """One correlated attribute pattern."""

    members: tuple[tuple[str, str, int], ...]  # (sensor id, attribute, sign) sorted
    support: int
    co_timestamps: tuple[int, ...]

    @property
    def attributes(self) -> frozenset[str]:
        return frozenset(attr for _, attr, _ in self.members)

    @property
    def sensor_keys(self) -> frozenset[SensorKey]:
        return frozenset((sid, attr) for sid, attr, _ in self.members)

    def member_set(self) -> frozenset[tuple[str, str, int]]:
        return frozenset(self.members)

    def to_dict(self) -> dict:
        return {
            "members": [
                {"id": sid, "attribute": attr, "sign": _SIGN_TEXT[sign]}
                for sid, attr, sign in self.members
            ],
            "support": self.support,
            "timestamps": list(self.co_timestamps),
        }

    @staticmethod
    def from_dict(doc: Mapping) -> "Cap":
        members = _sorted_members(
            (m["id"], m["attribute"], _TEXT_SIGN[m.get("sign")]) for m in doc["members"]
        )
        return Cap(members=members, support=doc["support"], co_timestamps=tuple(doc["timestamps"]))


def _sign_sort_key(sign: int) -> str:
    text = _SIGN_TEXT[sign]
    return "" if text is None else text


def _sorted_members(members: Iterable[tuple[str, str, int]]) -> tuple[tuple[str, str, int], ...]:
    return tuple(sorted(members, key=lambda m: (m[0], m[1], _sign_sort_key(m[2]))))


def cap_sort_key(cap: Cap):
    return (-cap.support, [(m[0], m[1], _sign_sort_key(m[2])) for m in cap.members])


@dataclass
class MiningResult:
    dataset_hash: str
    params: MiningParams
    caps: list[Cap]
    stats: dict

    def cache_key(self) -> str:
        return f"{self.dataset_hash}:{self.params.digest()}"

    def to_dict(self) -> dict:
        return {
            "dataset_hash": self.dataset_hash,
            "params": self.params.canonical_dict(),
            "caps": [cap.to_dict() for cap in self.caps],
            "stats": self.stats,
        }

    def to_json_bytes(self) -> bytes:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")).encode("utf-8")

    @staticmethod
    def from_json_bytes(data: bytes) -> "MiningResult":
        doc = json.loads(data)
        params_doc = dict(doc["params"])
        params = MiningParams(
            eta_meters=params_doc["eta_meters"],
            mu=params_doc["mu"],
            psi=params_doc["psi"],
            epsilon=params_doc["epsilon"]["default"],
            epsilon_by_attribute=params_doc["epsilon"]["per_attribute"],
            epsilon_relative=params_doc["epsilon"]["relative"],
            max_error=params_doc["max_error"]["default"],
            max_error_by_attribute=params_doc["max_error"]["per_attribute"],
            distinct_attributes=params_doc["distinct_attributes"],
            direction_mode=params_doc["direction_mode"],
            maximal=params_doc["maximal"],
        )
        return MiningResult(
            dataset_hash=doc["dataset_hash"],
            params=params,
            caps=[Cap.from_dict(c) for c in doc["caps"]],
            stats=doc["stats"],
        )


def coevolution_support(
    events: EventMap,
    members: Iterable[tuple[SensorKey, int]],
    *,
    unsigned: bool = False,
) -> tuple[int, tuple[int, ...]]:
    """Shared co-evolving timestamps of a member set.

    Each member is ((sensor id, attribute), sign); signs are ignored in
    unsigned mode. The result is the intersection of the members' event
    index sets and its size.
    """
    co: set[int] | None = None
    for key, sign in members:
        if key not in events:
            raise errors.UnknownSensor(f"no events for sensor {key[0]}/{key[1]}")
        entry = events[key]
        indices = set(entry.any_indices() if unsigned else entry.indices(sign))
        co = indices if co is None else co & indices
        if not co:
            return 0, ()
    if co is None:
        return 0, ()
    return len(co), tuple(sorted(co))


def events_for_dataset(dataset: Dataset, params: MiningParams) -> EventMap:
    """Smooth per attribute policy, then extract signed change events."""
    out: EventMap = {}
    for sensor in dataset.sensors:
        values = dataset.series[sensor.key]
        finite = values[~np.isnan(values)]
        value_range = float(finite.max() - finite.min()) if len(finite) else 0.0
        max_error = params.max_error_for(sensor.attribute)
        if max_error > 0:
            values = smooth(values, max_error)
        epsilon = params.epsilon_for(sensor.attribute, value_range)
        out[sensor.key] = extract_events(values, epsilon)
    return out


def _mask_of(indices: Iterable[int]) -> int:
    mask = 0
    for index in indices:
        mask |= 1 << index
    return mask


def _mask_indices(mask: int) -> tuple[int, ...]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return tuple(out)


def enumerate_caps(
    graph: ProximityGraph,
    events: EventMap,
    params: MiningParams,
    component: Sequence[SensorKey],
    *,
    visited_log: list[frozenset[SensorKey]] | None = None,
) -> tuple[list[Cap], int]:
    """All caps whose sensors lie inside one component.

    Returns (caps, visited) where ``visited`` counts the connected sensor
    sets the expansion actually touched; ``visited_log`` additionally records
    them so tests can assert each set is generated at most once.
    """
    order = sorted(component)
    index_of = {key: i for i, key in enumerate(order)}
    attrs = [key[1] for key in order]
    adj: list[list[int]] = [
        sorted(index_of[n] for n in graph.neighbors(key) if n in index_of) for key in order
    ]
    if params.signed:
        sign_masks = [
            {1: _mask_of(events[key].rises), -1: _mask_of(events[key].falls)} for key in order
        ]
    else:
        sign_masks = [{0: _mask_of(events[key].any_indices())} for key in order]
    signs_to_try = (1, -1) if params.signed else (0,)
    psi = params.psi
    mu = params.mu
    distinct = params.distinct_attributes

    caps: list[Cap] = []
    visited = 0

    def visit(sub: tuple[int, ...], assignments: list[tuple[tuple[int, ...], int]]) -> None:
        nonlocal visited
        visited += 1
        if visited_log is not None:
            visited_log.append(frozenset(order[i] for i in sub))
        if len(sub) >= 2 and len({attrs[i] for i in sub}) >= 2:
            for signs, mask in assignments:
                members = _sorted_members(
                    (order[i][0], order[i][1], s) for i, s in zip(sub, signs)
                )
                caps.append(
                    Cap(members=members, support=mask.bit_count(), co_timestamps=_mask_indices(mask))
                )

    def extend(
        sub: tuple[int, ...],
        sub_attrs: frozenset[str],
        ext: list[int],
        reach: set[int],
        assignments: list[tuple[tuple[int, ...], int]],
        root: int,
    ) -> None:
        visit(sub, assignments)
        ext = list(ext)
        while ext:
            w = ext.pop(0)
            w_attr = attrs[w]
            if distinct and w_attr in sub_attrs:
                continue
            new_attrs = sub_attrs | {w_attr}
            if len(new_attrs) > mu:
                continue
            new_assignments = []
            for signs, mask in assignments:
                for sign in signs_to_try:
                    merged = mask & sign_masks[w][sign]
                    if merged.bit_count() >= psi:
                        new_assignments.append((signs + (sign,), merged))
            if not new_assignments:
                continue
            fresh = [u for u in adj[w] if u not in reach and u > root]
            extend(
                sub + (w,),
                new_attrs,
                sorted(ext + fresh),
                reach | {w} | set(adj[w]),
                new_assignments,
                root,
            )

    for root, key in enumerate(order):
        seeds = []
        for sign in signs_to_try:
            mask = sign_masks[root][sign]
            if mask.bit_count() >= psi:
                seeds.append(((sign,), mask))
        if not seeds:
            continue
        ext = [u for u in adj[root] if u > root]
        extend((root,), frozenset([attrs[root]]), ext, {root} | set(adj[root]), seeds, root)

    return caps, visited


def filter_maximal(caps: Sequence[Cap]) -> list[Cap]:
    """Drop caps whose member set is a strict subset of another's."""
    member_sets = [cap.member_set() for cap in caps]
    kept = []
    for i, cap in enumerate(caps):
        mine = member_sets[i]
        dominated = any(
            i != j and len(other) > len(mine) and mine < other
            for j, other in enumerate(member_sets)
        )
        if not dominated:
            kept.append(cap)
    return kept


def mine(
    dataset: Dataset,
    params: MiningParams,
    *,
    progress: Callable[[int, int], None] | None = None,
) -> MiningResult:
    """Run the full pipeline: smooth, extract events, partition, search."""
    params.validate()
    events = events_for_dataset(dataset, params)
    graph = build_proximity_graph(dataset.sensors, params.eta_meters)
    partition = connected_components(graph)
    component_ids = partition.component_ids()

    caps: list[Cap] = []
    visited_total = 0
    for done, component_id in enumerate(component_ids, start=1):
        component = partition.components[component_id]
        found, visited = enumerate_caps(graph, events, params, component)
        caps.extend(found)
        visited_total += visited
        if progress is not None:
            progress(done, len(component_ids))
    if params.maximal:
        caps = filter_maximal(caps)
    caps.sort(key=cap_sort_key)
    stats = {
        "sensors": len(dataset.sensors),
        "events": sum(len(e) for e in events.values()),
        "edges": graph.edge_count(),
        "components": len(component_ids),
        "sets_visited": visited_total,
        "caps": len(caps),
    }
    return MiningResult(
        dataset_hash=dataset.content_hash, params=params, caps=caps, stats=stats
    )


MAX_BRUTE_FORCE_SENSORS = 16


def brute_force_mine(dataset: Dataset, params: MiningParams) -> MiningResult:
    """Verification oracle: filter every signed sensor subset directly.

    Independent of the tree search: its own adjacency, its own connectivity
    walk, and plain set intersections over every direction assignment.
    """
    params.validate()
    n = len(dataset.sensors)
    if n > MAX_BRUTE_FORCE_SENSORS:
        raise errors.TooLarge(f"brute force capped at {MAX_BRUTE_FORCE_SENSORS} sensors, got {n}")
    events = events_for_dataset(dataset, params)
    sensors = sorted(dataset.sensors, key=lambda s: s.key)
    close = [
        [
            haversine((a.lat, a.lon), (b.lat, b.lon)) <= params.eta_meters and a is not b
            for b in sensors
        ]
        for a in sensors
    ]

    def connected(subset: tuple[int, ...]) -> bool:
        todo = [subset[0]]
        seen = {subset[0]}
        inside = set(subset)
        while todo:
            u = todo.pop()
            for v in inside:
                if v not in seen and close[u][v]:
                    seen.add(v)
                    todo.append(v)
        return len(seen) == len(inside)

    if params.signed:
        index_sets = [
            {1: set(events[s.key].rises), -1: set(events[s.key].falls)} for s in sensors
        ]
        sign_choices: tuple[int, ...] = (1, -1)
    else:
        index_sets = [{0: set(events[s.key].any_indices())} for s in sensors]
        sign_choices = (0,)

    caps: list[Cap] = []
    for size in range(2, n + 1):
        for subset in itertools.combinations(range(n), size):
            attr_list = [sensors[i].attribute for i in subset]
            attr_set = set(attr_list)
            if params.distinct_attributes and len(attr_set) != len(attr_list):
                continue
            if not 2 <= len(attr_set) <= params.mu:
                continue
            if not connected(subset):
                continue

            def assign(position: int, co: set[int], signs: tuple[int, ...]) -> None:
                if not co:
                    return
                if position == len(subset):
                    if len(co) >= params.psi:
                        members = _sorted_members(
                            (sensors[i].id, sensors[i].attribute, s)
                            for i, s in zip(subset, signs)
                        )
                        caps.append(
                            Cap(
                                members=members,
                                support=len(co),
                                co_timestamps=tuple(sorted(co)),
                            )
                        )
                    return
                for sign in sign_choices:
                    assign(position + 1, co & index_sets[subset[position]][sign], signs + (sign,))

            universe = set(range(dataset.grid.count))
            assign(0, universe, ())

    if params.maximal:
        survivors = []
        for cap in caps:
            mine_set = cap.member_set()
            strictly_inside = False
            for other in caps:
                other_set = other.member_set()
                if len(other_set) > len(mine_set) and mine_set.issubset(other_set):
                    strictly_inside = True
                    break
            if not strictly_inside:
                survivors.append(cap)
        caps = survivors
    caps.sort(key=cap_sort_key)
    stats = {
        "sensors": n,
        "events": sum(len(e) for e in events.values()),
        "edges": sum(row.count(True) for row in close) // 2,
        "components": 0,
        "sets_visited": 0,
        "caps": len(caps),
    }
    return MiningResult(
        dataset_hash=dataset.content_hash, params=params, caps=caps, stats=stats
    )


def result_geojson(result: MiningResult, dataset: Dataset) -> dict:
    """One FeatureCollection covering every cap member, tagged by cap index."""
    positions = {s.key: (s.lon, s.lat) for s in dataset.sensors}
    features = []
    for cap_index, cap in enumerate(result.caps):
        for sid, attr, sign in cap.members:
            lon, lat = positions[(sid, attr)]
            features.append(
                {
                    "type": "Feature",
                    "geometry": {"type": "Point", "coordinates": [lon, lat]},
                    "properties": {
                        "cap": cap_index,
                        "id": sid,
                        "attribute": attr,
                        "sign": _SIGN_TEXT[sign],
                        "support": cap.support,
                    },
                }
            )
    return {"type": "FeatureCollection", "features": features}


def cap_geojson(cap: Cap, dataset: Dataset) -> dict:
    """FeatureCollection for a single cap's members."""
    positions = {s.key: (s.lon, s.lat) for s in dataset.sensors}
    features = []
    for sid, attr, sign in cap.members:
        lon, lat = positions[(sid, attr)]
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [lon, lat]},
                "properties": {"id": sid, "attribute": attr, "sign": _SIGN_TEXT[sign]},
            }
        )
    return {"type": "FeatureCollection", "features": features}
