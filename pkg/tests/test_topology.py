import json

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from routesim.topology import (CLIENT, CLUSTER, COLLECTOR, LEGACY, ConfigError,
                               FailoverScenario, GraphParams, Topology,
                               assign_cluster, build_failover_scenario, generate)


class TestGenerate:
    def test_clique_8_has_28_links(self):
        topo = generate(GraphParams("clique", 8), seed=1)
        assert len(topo.links) == 8 * 7 // 2

    def test_erdos_renyi_p1_equals_clique(self):
        er = generate(GraphParams("erdos-renyi", 8, p=1.0), seed=1)
        cl = generate(GraphParams("clique", 8), seed=1)
        assert set(er.links) == set(cl.links)

    def test_barabasi_albert_link_count(self):
        # (n - m) * m per the standard construction; cross-checked against
        # a reference networkx build with the same derived seed
        topo = generate(GraphParams("barabasi-albert", 8, m=2), seed=5)
        assert len(topo.links) == (8 - 2) * 2 == 12
        from routesim.simcore import RngStreams
        ref = nx.barabasi_albert_graph(8, 2, seed=RngStreams(5).derive_seed("topology", 0))
        assert {(a + 1, b + 1) for a, b in map(sorted, ref.edges())} == set(topo.links)

    def test_deterministic_per_seed(self):
        a = generate(GraphParams("erdos-renyi", 16, p=0.3), seed=9)
        b = generate(GraphParams("erdos-renyi", 16, p=0.3), seed=9)
        assert a.to_json() == b.to_json()

    def test_impossible_params_rejected(self):
        with pytest.raises(ConfigError):
            generate(GraphParams("barabasi-albert", 8, m=8), seed=1)
        with pytest.raises(ConfigError):
            generate(GraphParams("clique", 1), seed=1)
        with pytest.raises(ConfigError):
            generate(GraphParams("ladder", 8), seed=1)

    @settings(max_examples=60, deadline=None)
    @given(family=st.sampled_from(["clique", "erdos-renyi", "barabasi-albert",
                                   "newman-watts-strogatz"]),
           n=st.sampled_from([8, 16, 32]),
           seed=st.integers(min_value=0, max_value=2**32 - 1))
    def test_generated_topologies_are_connected(self, family, n, seed):
        topo = generate(GraphParams(family, n), seed=seed)
        assert topo.connected()


class TestAssignCluster:
    def test_zero_penetration_zero_members(self):
        topo = generate(GraphParams("clique", 8), seed=1)
        assert assign_cluster(topo, 0, seed=1).cluster_nodes() == []

    def test_75_percent_of_8_is_6(self):
        topo = generate(GraphParams("clique", 8), seed=1)
        assert len(assign_cluster(topo, 75, seed=1).cluster_nodes()) == 6

    def test_exact_rounding(self):
        topo = generate(GraphParams("clique", 16), seed=1)
        for pct, expect in [(0, 0), (25, 4), (50, 8), (75, 12), (100, 16)]:
            assert len(assign_cluster(topo, pct, seed=3).cluster_nodes()) == expect

    def test_same_seed_identical_membership(self):
        topo = generate(GraphParams("clique", 8), seed=1)
        a = assign_cluster(topo, 50, seed=11).cluster_nodes()
        b = assign_cluster(topo, 50, seed=11).cluster_nodes()
        assert a == b

    def test_memberships_nested_across_penetrations(self):
        # paired design: higher penetration only adds members
        topo = generate(GraphParams("clique", 16), seed=1)
        prev = set()
        for pct in (25, 50, 75):
            cur = set(assign_cluster(topo, pct, seed=11).cluster_nodes())
            assert prev <= cur
            prev = cur

    def test_out_of_range_rejected(self):
        topo = generate(GraphParams("clique", 8), seed=1)
        with pytest.raises(ConfigError):
            assign_cluster(topo, 101, seed=1)

    def test_input_not_mutated(self):
        topo = generate(GraphParams("clique", 8), seed=1)
        assign_cluster(topo, 75, seed=1)
        assert topo.cluster_nodes() == []


class TestFailoverScenario:
    def test_providers_distinct_across_100_draws(self):
        topo = generate(GraphParams("clique", 8), seed=1)
        for seed in range(100):
            sc = build_failover_scenario(topo, seed)
            assert sc.primary != sc.backup

    def test_client_has_exactly_two_provider_links(self):
        topo = generate(GraphParams("clique", 8), seed=1)
        sc = build_failover_scenario(topo, seed=4)
        provider_links = [k for k in sc.topology.links
                          if sc.client in k and sc.collector not in k]
        assert sorted(provider_links) == sorted(
            [tuple(sorted((sc.client, sc.primary))),
             tuple(sorted((sc.client, sc.backup)))])

    def test_collector_peers_with_every_speaker(self):
        topo = generate(GraphParams("clique", 8), seed=1)
        sc = build_failover_scenario(topo, seed=4)
        speakers = [a for a, r in sc.topology.roles.items() if r != COLLECTOR]
        assert sorted(sc.topology.neighbors(sc.collector)) == sorted(speakers)

    def test_isp_links_never_mutated(self):
        topo = generate(GraphParams("erdos-renyi", 16, p=0.3), seed=2)
        before = set(topo.links)
        sc = build_failover_scenario(topo, seed=4)
        isp_links = {k for k in sc.topology.links
                     if sc.topology.roles[k[0]] in (LEGACY, CLUSTER)
                     and sc.topology.roles[k[1]] in (LEGACY, CLUSTER)}
        assert isp_links == before

    def test_export_prepend_semantics(self):
        topo = generate(GraphParams("clique", 8), seed=1)
        sc = build_failover_scenario(topo, seed=4, prepend_count=10)
        assert sc.export_prepend(sc.client, sc.backup) == 10
        assert sc.export_prepend(sc.client, sc.primary) == 1
        assert sc.export_prepend(sc.primary, sc.client) == 1

    def test_needs_two_isps(self):
        topo = Topology(roles={1: LEGACY})
        with pytest.raises(ConfigError):
            build_failover_scenario(topo, seed=1)

    def test_duplicate_prefix_rejected(self):
        topo = generate(GraphParams("clique", 8), seed=1)
        topo.originations["198.51.100.0/24"] = 1
        with pytest.raises(ConfigError):
            build_failover_scenario(topo, seed=1)


class TestSerialization:
    def test_topology_json_roundtrip(self):
        topo = generate(GraphParams("newman-watts-strogatz", 16), seed=3)
        topo = assign_cluster(topo, 50, seed=3)
        again = Topology.from_json(topo.to_json())
        assert again.to_json() == topo.to_json()

    def test_scenario_json_roundtrip(self):
        topo = generate(GraphParams("clique", 8), seed=1)
        sc = build_failover_scenario(topo, seed=4)
        again = FailoverScenario.from_json(sc.to_json())
        assert again.to_json() == sc.to_json()

    def test_invalid_prefix_rejected_on_import(self):
        payload = {"nodes": [{"asn": 1, "role": LEGACY}], "links": [],
                   "originations": {"999.0.0.0/8": 1}}
        with pytest.raises(ValueError):
            Topology.from_dict(payload)
