"""CAP search: supports, enumeration, pruning soundness, serialization."""

import json
import random
from collections import deque

import pytest

from capmine import errors
from capmine.miner import (
    Cap,
    MiningParams,
    MiningResult,
    brute_force_mine,
    cap_geojson,
    coevolution_support,
    enumerate_caps,
    events_for_dataset,
    filter_maximal,
    mine,
    params_from_dict,
    result_geojson,
)
from capmine.spatial import build_proximity_graph, connected_components
from tests.support import make_dataset, offset_deg, random_instance, series_with_events

BASE = (43.462, -3.802)
FAR = (44.0, -3.0)


def params(**overrides) -> MiningParams:
    defaults = dict(eta_meters=500.0, mu=3, psi=1, epsilon=0.5)
    defaults.update(overrides)
    return MiningParams(**defaults)


class TestCoevolutionSupport:
    def _events(self):
        ds = make_dataset(
            {
                ("a", "temperature"): series_with_events(12, rises=(1, 2, 3, 5)),
                ("b", "traffic"): series_with_events(12, rises=(1, 2, 3)),
                ("c", "traffic"): series_with_events(12, falls=(1, 2)),
            }
        )
        return events_for_dataset(ds, params())

    def test_intersection(self):
        events = self._events()
        support, co = coevolution_support(
            events, [(("a", "temperature"), 1), (("b", "traffic"), 1)]
        )
        assert support == 3
        assert co == (1, 2, 3)

    def test_sign_respected(self):
        events = self._events()
        support, _ = coevolution_support(
            events, [(("a", "temperature"), 1), (("c", "traffic"), 1)]
        )
        assert support == 0
        support, co = coevolution_support(
            events, [(("a", "temperature"), 1), (("c", "traffic"), -1)]
        )
        assert support == 2 and co == (1, 2)

    def test_unsigned_ignores_direction(self):
        events = self._events()
        support, _ = coevolution_support(
            events, [(("a", "temperature"), 0), (("c", "traffic"), 0)], unsigned=True
        )
        assert support == 2

    def test_unknown_sensor(self):
        with pytest.raises(errors.UnknownSensor):
            coevolution_support(self._events(), [(("zz", "traffic"), 1)])


class TestMineBasics:
    def test_documented_three_sensor_case(self):
        """Temperature sensor co-rising with one of two traffic sensors."""
        ds = make_dataset(
            {
                ("a", "temperature"): series_with_events(12, rises=(1, 2, 3, 5)),
                ("b", "traffic"): series_with_events(12, rises=(1, 2, 3)),
                ("c", "traffic"): series_with_events(12, rises=(2, 9)),
            }
        )
        result = mine(ds, params(mu=2, psi=3))
        assert len(result.caps) == 1
        cap = result.caps[0]
        assert cap.members == (("a", "temperature", 1), ("b", "traffic", 1))
        assert cap.support == 3
        assert cap.co_timestamps == (1, 2, 3)

    def test_psi_above_grid_yields_nothing(self):
        ds = make_dataset(
            {
                ("a", "temperature"): series_with_events(5, rises=(1, 2, 3, 4)),
                ("b", "traffic"): series_with_events(5, rises=(1, 2, 3, 4)),
            }
        )
        assert mine(ds, params(mu=2, psi=4)).caps != []
        assert mine(ds, params(mu=2, psi=5)).caps == []

    def test_single_attribute_dataset_yields_nothing(self):
        ds = make_dataset(
            {
                ("a", "traffic"): series_with_events(8, rises=(1, 2)),
                ("b", "traffic"): series_with_events(8, rises=(1, 2)),
            }
        )
        assert mine(ds, params(mu=2)).caps == []

    def test_distinct_attributes_off_allows_repeats(self):
        ds = make_dataset(
            {
                ("a", "traffic"): series_with_events(8, rises=(1, 2)),
                ("b", "traffic"): series_with_events(8, rises=(1, 2)),
                ("c", "temperature"): series_with_events(8, rises=(1, 2)),
            }
        )
        loose = mine(ds, params(mu=3, distinct_attributes=False))
        assert any(len(c.members) == 3 for c in loose.caps)
        strict = mine(ds, params(mu=3, distinct_attributes=True))
        assert all(len(c.members) == 2 for c in strict.caps)

    def test_sensors_out_of_range_never_pair(self):
        coords = {("a", "temperature"): BASE, ("b", "traffic"): FAR}
        ds = make_dataset(
            {
                ("a", "temperature"): series_with_events(8, rises=(1, 2)),
                ("b", "traffic"): series_with_events(8, rises=(1, 2)),
            },
            coords=coords,
        )
        assert mine(ds, params(eta_meters=1000.0)).caps == []
        assert mine(ds, params(eta_meters=10**6)).caps != []

    def test_eta_zero_needs_colocation(self):
        dlat = offset_deg(5.0)
        coords = {
            ("a", "temperature"): BASE,
            ("b", "traffic"): (BASE[0] + dlat, BASE[1]),
        }
        ds = make_dataset(
            {
                ("a", "temperature"): series_with_events(8, rises=(1, 2)),
                ("b", "traffic"): series_with_events(8, rises=(1, 2)),
            },
            coords=coords,
        )
        assert mine(ds, params(eta_meters=0.0)).caps == []

    def test_epsilon_filters_small_moves(self):
        ds = make_dataset(
            {
                ("a", "temperature"): series_with_events(8, rises=(1, 2), magnitude=0.4),
                ("b", "traffic"): series_with_events(8, rises=(1, 2), magnitude=0.4),
            }
        )
        assert mine(ds, params(epsilon=0.5)).caps == []
        assert mine(ds, params(epsilon=0.4)).caps != []

    def test_stats_shape(self):
        ds = make_dataset(
            {
                ("a", "temperature"): series_with_events(8, rises=(1,)),
                ("b", "traffic"): series_with_events(8, rises=(1,)),
            }
        )
        stats = mine(ds, params()).stats
        assert set(stats) == {"sensors", "events", "edges", "components", "sets_visited", "caps"}
        assert stats["sensors"] == 2 and stats["edges"] == 1

    def test_progress_callback(self):
        ds = make_dataset(
            {
                ("a", "temperature"): series_with_events(8, rises=(1,)),
                ("b", "traffic"): series_with_events(8, rises=(1,)),
            }
        )
        calls = []
        mine(ds, params(), progress=lambda done, total: calls.append((done, total)))
        assert calls and calls[-1][0] == calls[-1][1]


class TestDirectionModes:
    def _dataset(self):
        return make_dataset(
            {
                ("a", "temperature"): series_with_events(10, rises=(2, 4, 6)),
                ("b", "traffic"): series_with_events(10, falls=(2, 4, 6)),
            }
        )

    def test_signed_pairs_opposite_signs(self):
        result = mine(self._dataset(), params(mu=2, psi=3))
        assert len(result.caps) == 1
        assert result.caps[0].members == (("a", "temperature", 1), ("b", "traffic", -1))

    def test_unsigned_drops_signs(self):
        result = mine(self._dataset(), params(mu=2, psi=3, direction_mode="unsigned"))
        assert len(result.caps) == 1
        assert result.caps[0].members == (("a", "temperature", 0), ("b", "traffic", 0))

    def test_unsigned_can_find_more(self):
        ds = make_dataset(
            {
                ("a", "temperature"): series_with_events(10, rises=(2,), falls=(4,)),
                ("b", "traffic"): series_with_events(10, falls=(2,), rises=(4,)),
            }
        )
        signed = mine(ds, params(mu=2, psi=2))
        unsigned = mine(ds, params(mu=2, psi=2, direction_mode="unsigned"))
        assert signed.caps == []
        assert len(unsigned.caps) == 1 and unsigned.caps[0].support == 2


class TestMaximal:
    def _caps(self):
        make = lambda members, support: Cap(
            members=tuple(members), support=support, co_timestamps=tuple(range(support))
        )
        triple = make([("a", "t", 1), ("b", "u", 1), ("c", "v", 1)], 3)
        pair_inside = make([("a", "t", 1), ("b", "u", 1)], 5)
        pair_outside = make([("a", "t", 1), ("d", "w", 1)], 4)
        return triple, pair_inside, pair_outside

    def test_strict_subsets_drop(self):
        triple, inside, outside = self._caps()
        kept = filter_maximal([triple, inside, outside])
        assert set(kept) == {triple, outside}

    def test_sign_matters_for_subset(self):
        triple, inside, _ = self._caps()
        flipped = Cap(
            members=(("a", "t", 1), ("b", "u", -1)), support=2, co_timestamps=(0, 1)
        )
        kept = filter_maximal([triple, flipped])
        assert set(kept) == {triple, flipped}

    def test_empty_and_identity(self):
        assert filter_maximal([]) == []
        triple, _, outside = self._caps()
        assert set(filter_maximal([triple, outside])) == {triple, outside}

    def test_mine_maximal_flag(self):
        ds = make_dataset(
            {
                ("a", "temperature"): series_with_events(10, rises=(1, 2, 3)),
                ("b", "traffic"): series_with_events(10, rises=(1, 2, 3)),
                ("c", "light"): series_with_events(10, rises=(1, 2, 3)),
            }
        )
        everything = mine(ds, params(mu=3, psi=3))
        only_top = mine(ds, params(mu=3, psi=3, maximal=True))
        assert len(everything.caps) == 4  # three pairs and the triple
        assert len(only_top.caps) == 1
        assert len(only_top.caps[0].members) == 3


class TestEnumerationInvariants:
    def _mined_instance(self, seed):
        rng = random.Random(seed)
        ds, p = random_instance(rng)
        return ds, p

    @pytest.mark.parametrize("seed", range(12))
    def test_each_sensor_set_visited_once(self, seed):
        ds, p = self._mined_instance(seed)
        events = events_for_dataset(ds, p)
        graph = build_proximity_graph(ds.sensors, p.eta_meters)
        partition = connected_components(graph)
        for component in partition.components.values():
            log: list[frozenset] = []
            enumerate_caps(graph, events, p, component, visited_log=log)
            assert len(log) == len(set(log))

    @pytest.mark.parametrize("seed", range(12))
    def test_emitted_caps_are_connected(self, seed):
        ds, p = self._mined_instance(seed)
        graph = build_proximity_graph(ds.sensors, p.eta_meters)
        result = mine(ds, p)
        for cap in result.caps:
            keys = set(cap.sensor_keys)
            start = next(iter(keys))
            seen = {start}
            queue = deque([start])
            while queue:
                u = queue.popleft()
                for v in graph.neighbors(u):
                    if v in keys and v not in seen:
                        seen.add(v)
                        queue.append(v)
            assert seen == keys, f"cap {cap.members} is not connected"

    @pytest.mark.parametrize("seed", range(12))
    def test_support_is_anti_monotone(self, seed):
        ds, p = self._mined_instance(seed)
        events = events_for_dataset(ds, p)
        unsigned = not p.signed
        for cap in mine(ds, p).caps:
            assert cap.support >= p.psi
            assert len(cap.co_timestamps) == cap.support
            members = [((sid, attr), sign) for sid, attr, sign in cap.members]
            support, co = coevolution_support(events, members, unsigned=unsigned)
            assert (support, co) == (cap.support, cap.co_timestamps)
            for drop in range(len(members)):
                subset = members[:drop] + members[drop + 1 :]
                sub_support, _ = coevolution_support(events, subset, unsigned=unsigned)
                assert sub_support >= cap.support

    @pytest.mark.parametrize("seed", range(12))
    def test_member_constraints(self, seed):
        ds, p = self._mined_instance(seed)
        for cap in mine(ds, p).caps:
            assert 2 <= len(cap.members) <= p.mu
            assert len(cap.attributes) >= 2
            if p.distinct_attributes:
                attrs = [attr for _, attr, _ in cap.members]
                assert len(attrs) == len(set(attrs))
            assert list(cap.members) == sorted(cap.members, key=lambda m: (m[0], m[1]))
            signs = {sign for _, _, sign in cap.members}
            if p.signed:
                assert signs <= {1, -1}
            else:
                assert signs == {0}


class TestOracleAgreement:
    @pytest.mark.parametrize("seed", range(40))
    def test_randomized(self, seed):
        rng = random.Random(10_000 + seed)
        ds, p = random_instance(rng)
        assert mine(ds, p).caps == brute_force_mine(ds, p).caps

    def test_brute_force_size_cap(self):
        series = {
            (f"s{i:02d}", "temperature" if i % 2 else "traffic"): series_with_events(
                4, rises=(1,)
            )
            for i in range(17)
        }
        ds = make_dataset(series)
        with pytest.raises(errors.TooLarge):
            brute_force_mine(ds, params())


class TestParams:
    def test_digest_ignores_numeric_spelling(self):
        a = MiningParams(eta_meters=300, mu=3, psi=5, epsilon=1)
        b = MiningParams(eta_meters=300.0, mu=3.0, psi=5.0, epsilon=1.0)
        assert a.digest() == b.digest()

    def test_digest_sensitive_to_each_knob(self):
        base = params()
        variants = [
            params(eta_meters=501.0),
            params(mu=4),
            params(psi=2),
            params(epsilon=0.6),
            params(direction_mode="unsigned"),
            params(distinct_attributes=False),
            params(maximal=True),
            params(max_error=0.1),
            params(epsilon_by_attribute={"temperature": 1.0}),
        ]
        digests = {base.digest()} | {v.digest() for v in variants}
        assert len(digests) == len(variants) + 1

    def test_from_dict_round_trip(self):
        p = params(epsilon_by_attribute={"traffic": 2.0}, max_error=0.25, maximal=True)
        again = params_from_dict(json.loads(p.canonical_json()))
        assert again.digest() == p.digest()

    def test_from_dict_bare_epsilon(self):
        p = params_from_dict({"eta_meters": 100, "mu": 2, "psi": 1, "epsilon": 0.5})
        assert p.epsilon == 0.5

    @pytest.mark.parametrize(
        "doc",
        [
            {"eta_meters": 100, "mu": 2, "psi": 1, "bogus": 1},
            {"eta_meters": 100, "mu": 2},
            {"eta_meters": 100, "mu": 1, "psi": 1},
            {"eta_meters": 100, "mu": 2, "psi": 0},
            {"eta_meters": -5, "mu": 2, "psi": 1},
            {"eta_meters": 100, "mu": 2.5, "psi": 1},
            {"eta_meters": 100, "mu": True, "psi": 1},
            {"eta_meters": 100, "mu": 2, "psi": 1, "direction_mode": "both"},
            {"eta_meters": 100, "mu": 2, "psi": 1, "epsilon": -0.5},
            {"eta_meters": 100, "mu": 2, "psi": 1, "max_error": {"relative": True}},
        ],
    )
    def test_invalid_documents(self, doc):
        with pytest.raises(errors.InvalidParams):
            params_from_dict(doc)

    def test_relative_epsilon_scales_with_range(self):
        # range of each series is 4, so a 0.5 fraction means threshold 2
        ds = make_dataset(
            {
                ("a", "temperature"): series_with_events(6, rises=(1,), magnitude=4.0),
                ("b", "traffic"): series_with_events(6, rises=(1,), magnitude=4.0),
            }
        )
        found = mine(ds, params(epsilon=0.5, epsilon_relative=True, psi=1))
        assert len(found.caps) == 1
        nothing = mine(ds, params(epsilon=1.5, epsilon_relative=True, psi=1))
        assert nothing.caps == []

    def test_per_attribute_epsilon(self):
        ds = make_dataset(
            {
                ("a", "temperature"): series_with_events(6, rises=(1, 2)),
                ("b", "traffic"): series_with_events(6, rises=(1, 2)),
            }
        )
        p = params(epsilon=0.5, epsilon_by_attribute={"traffic": 99.0})
        assert mine(ds, p).caps == []


class TestResultSerialization:
    def _result(self):
        ds = make_dataset(
            {
                ("a", "temperature"): series_with_events(10, rises=(1, 2, 3)),
                ("b", "traffic"): series_with_events(10, rises=(1, 2), falls=(5,)),
            }
        )
        return mine(ds, params(mu=2, psi=2)), ds

    def test_round_trip(self):
        result, _ = self._result()
        body = result.to_json_bytes()
        again = MiningResult.from_json_bytes(body)
        assert again == result
        assert again.to_json_bytes() == body

    def test_deterministic_bytes(self):
        first, _ = self._result()
        second, _ = self._result()
        assert first.to_json_bytes() == second.to_json_bytes()

    def test_cache_key_structure(self):
        result, ds = self._result()
        prefix, _, digest = result.cache_key().partition(":")
        assert prefix == ds.content_hash
        assert digest == result.params.digest()

    def test_json_shape(self):
        result, _ = self._result()
        doc = json.loads(result.to_json_bytes())
        assert set(doc) == {"dataset_hash", "params", "caps", "stats"}
        cap = doc["caps"][0]
        assert set(cap) == {"members", "support", "timestamps"}
        member = cap["members"][0]
        assert set(member) == {"id", "attribute", "sign"}
        assert member["sign"] in ("+", "-")

    def test_unsigned_sign_serializes_null(self):
        ds = make_dataset(
            {
                ("a", "temperature"): series_with_events(6, rises=(1,)),
                ("b", "traffic"): series_with_events(6, rises=(1,)),
            }
        )
        result = mine(ds, params(mu=2, direction_mode="unsigned"))
        doc = json.loads(result.to_json_bytes())
        assert doc["caps"][0]["members"][0]["sign"] is None

    def test_caps_sorted_by_support_then_members(self):
        for seed in range(6):
            ds, p = random_instance(random.Random(seed))
            caps = mine(ds, p).caps
            supports = [c.support for c in caps]
            assert supports == sorted(supports, reverse=True)


class TestGeojson:
    def _result(self):
        coords = {
            ("a", "temperature"): BASE,
            ("b", "traffic"): (BASE[0] + offset_deg(50.0), BASE[1]),
        }
        ds = make_dataset(
            {
                ("a", "temperature"): series_with_events(8, rises=(1, 2)),
                ("b", "traffic"): series_with_events(8, rises=(1, 2)),
            },
            coords=coords,
        )
        return mine(ds, params(mu=2, psi=2)), ds

    def test_feature_collection(self):
        result, ds = self._result()
        doc = result_geojson(result, ds)
        assert doc["type"] == "FeatureCollection"
        assert len(doc["features"]) == 2
        feature = doc["features"][0]
        assert feature["geometry"]["type"] == "Point"
        lon, lat = feature["geometry"]["coordinates"]
        assert (lat, lon) == BASE
        assert feature["properties"]["cap"] == 0
        assert feature["properties"]["attribute"] == "temperature"

    def test_member_count_matches(self):
        result, ds = self._result()
        doc = result_geojson(result, ds)
        assert len(doc["features"]) == sum(len(c.members) for c in result.caps)

    def test_single_cap_export(self):
        result, ds = self._result()
        doc = cap_geojson(result.caps[0], ds)
        assert doc["type"] == "FeatureCollection"
        assert len(doc["features"]) == 2
