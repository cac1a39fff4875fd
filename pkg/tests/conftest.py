import pytest

from routesim.network import Network, RunParams
from routesim.simcore import Simulator
from routesim.topology import (CLIENT, COLLECTOR, LEGACY, FailoverScenario,
                               Topology)


def make_topology(roles: dict, links: list, originations: dict | None = None,
                  delay_us: int = 2_000) -> Topology:
    topo = Topology()
    topo.roles.update(roles)
    for a, b in links:
        topo.add_link(a, b, delay_us)
    topo.originations.update(originations or {})
    return topo


def make_scenario(roles, links, originations, *, client, primary, backup,
                  collector=0, prepend_count=10, trigger_offset_us=60_000_000):
    topo = make_topology(roles, links, originations)
    return FailoverScenario(topology=topo, client=client, collector=collector,
                            primary=primary, backup=backup,
                            prefix=next(iter(originations)),
                            prepend_count=prepend_count,
                            trigger_offset_us=trigger_offset_us)


def line_scenario(n_isps=3, *, mrai_s=30.0, prepend_count=10):
    """client(100) dual-homed to ISPs 1 (primary) and n (backup); ISPs in a
    line 1-2-...-n. No collector."""
    roles = {i: LEGACY for i in range(1, n_isps + 1)}
    roles[100] = CLIENT
    links = [(i, i + 1) for i in range(1, n_isps)]
    links += [(100, 1), (100, n_isps)]
    scenario = make_scenario(roles, links, {"198.51.100.0/24": 100},
                             client=100, primary=1, backup=n_isps,
                             prepend_count=prepend_count)
    return scenario


def build_net(scenario, *, mrai_s=30.0, crwi_s=1.0, install_s=0.3,
              record_trace=False):
    params = RunParams(mrai_s=mrai_s, crwi_s=crwi_s, install_s=install_s)
    sim = Simulator(record_trace=record_trace)
    net = Network(scenario, params, sim)
    return net, sim


@pytest.fixture
def triangle():
    """Three legacy ISPs in a triangle plus a dual-homed client on 1 and 3."""
    roles = {1: LEGACY, 2: LEGACY, 3: LEGACY, 100: CLIENT}
    links = [(1, 2), (2, 3), (1, 3), (100, 1), (100, 3)]
    return make_scenario(roles, links, {"198.51.100.0/24": 100},
                         client=100, primary=1, backup=3)
