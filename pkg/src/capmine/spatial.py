"""Great-circle distances, the proximity graph, and its components.

Two sensors are close when their haversine distance is at most eta meters
(inclusive, so eta 0 still connects co-located multi-attribute stations).
Patterns can only form inside a connected component of the proximity graph,
which is what bounds the search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from . import errors
from .ingest import Sensor, SensorKey

EARTH_RADIUS_M = 6_371_000.0

# Meters per degree of latitude on the sphere; a latitude gap alone is a
# lower bound on distance, which makes the band prefilter safe.
_METERS_PER_DEG_LAT = math.pi * EARTH_RADIUS_M / 180.0


def haversine(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Great-circle distance in meters between (lat, lon) points in degrees."""
    lat1, lon1 = math.radians(a[0]), math.radians(a[1])
    lat2, lon2 = math.radians(b[0]), math.radians(b[1])
    sin_dlat = math.sin((lat2 - lat1) / 2.0)
    sin_dlon = math.sin((lon2 - lon1) / 2.0)
    h = sin_dlat * sin_dlat + math.cos(lat1) * math.cos(lat2) * sin_dlon * sin_dlon
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


@dataclass(frozen=True)
class ProximityGraph:
    vertices: tuple[SensorKey, ...]
    adjacency: dict[SensorKey, tuple[SensorKey, ...]]  # sorted neighbor tuples
    eta_meters: float

    def neighbors(self, key: SensorKey) -> tuple[SensorKey, ...]:
        return self.adjacency[key]

    def edge_count(self) -> int:
        return sum(len(n) for n in self.adjacency.values()) // 2

    def edges(self) -> set[frozenset[SensorKey]]:
        return {
            frozenset((u, v))
            for u, nbrs in self.adjacency.items()
            for v in nbrs
        }


def build_proximity_graph(
    sensors: Sequence[Sensor],
    eta_meters: float,
    *,
    band_prefilter: bool = True,
) -> ProximityGraph:
    """Undirected graph with an edge wherever distance <= eta.

    The latitude-band prefilter skips pairs whose latitude gap alone already
    exceeds eta; it never changes the result, only the work done.
    """
    if eta_meters < 0:
        raise errors.NegativeEta(f"eta must be >= 0 meters, got {eta_meters}")
    ordered = sorted(sensors, key=lambda s: s.key)
    adjacency: dict[SensorKey, list[SensorKey]] = {s.key: [] for s in ordered}
    by_lat = sorted(ordered, key=lambda s: s.lat)
    # Pad the band slightly: haversine goes through sin/asin round trips, so
    # a pair at distance exactly eta can land ~1e-12 relative above the
    # linearized latitude bound. The pad only admits extra candidate pairs.
    max_dlat_deg = (eta_meters * (1.0 + 1e-9) + 1e-9) / _METERS_PER_DEG_LAT
    for i, a in enumerate(by_lat):
        for b in by_lat[i + 1 :]:
            if band_prefilter and (b.lat - a.lat) > max_dlat_deg:
                break
            if haversine((a.lat, a.lon), (b.lat, b.lon)) <= eta_meters:
                adjacency[a.key].append(b.key)
                adjacency[b.key].append(a.key)
    return ProximityGraph(
        vertices=tuple(s.key for s in ordered),
        adjacency={key: tuple(sorted(nbrs)) for key, nbrs in adjacency.items()},
        eta_meters=eta_meters,
    )


@dataclass(frozen=True)
class ComponentPartition:
    component_of: dict[SensorKey, SensorKey]  # vertex -> component id
    components: dict[SensorKey, tuple[SensorKey, ...]]  # id -> sorted members

    def component_ids(self) -> list[SensorKey]:
        return sorted(self.components)


def connected_components(graph: ProximityGraph) -> ComponentPartition:
    """Connected components, each labeled by its smallest member key."""
    component_of: dict[SensorKey, SensorKey] = {}
    components: dict[SensorKey, tuple[SensorKey, ...]] = {}
    seen: set[SensorKey] = set()
    for vertex in sorted(graph.vertices):
        if vertex in seen:
            continue
        members = []
        stack = [vertex]
        seen.add(vertex)
        while stack:
            current = stack.pop()
            members.append(current)
            for neighbor in graph.adjacency[current]:
                if neighbor not in seen:
                    seen.add(neighbor)
                    stack.append(neighbor)
        members.sort()
        label = members[0]
        components[label] = tuple(members)
        for member in members:
            component_of[member] = label
    return ComponentPartition(component_of=component_of, components=components)
