#!/usr/bin/env python3
"""Walk through the Switch Graph -> AS Graph transformation on the textbook
three-switch example.

Switch 1 learned a path to 8.0.10.0/29 from its external peer AS 20; switch
2 learned one that exits the cluster over AS 11 and re-enters at switch 1.
The transformation splits switch 2's path into a virtual link 2->1 carrying
the external segment [11], and the prefix attaches at AS 1 with switch 1's
own external annotation.  Switch 3's own prefix is directly connected and
attaches at weight 0.
"""

from routesim.bgp import ANNOUNCE
from routesim.controller import shortest_expansions
from routesim.network import RunParams
from routesim.simcore import Simulator
from routesim.topology import CLIENT, CLUSTER, LEGACY, FailoverScenario, Topology
from routesim.network import Network

PFX = "8.0.10.0/29"
OWN = "8.0.20.0/29"


def build():
    topo = Topology()
    topo.roles.update({1: CLUSTER, 2: CLUSTER, 3: CLUSTER,
                       11: LEGACY, 20: LEGACY, 9: LEGACY, 100: CLIENT})
    for link in [(1, 2), (2, 3), (1, 11), (2, 11), (1, 20), (9, 20),
                 (100, 9), (100, 11)]:
        topo.add_link(*link)
    topo.originations[PFX] = 100
    scenario = FailoverScenario(topology=topo, client=100, collector=0,
                                primary=9, backup=11, prefix=PFX)
    net = Network(scenario, RunParams(), Simulator())
    return net.controller


def main():
    ctrl = build()
    ctrl.ingest_external_update(1, 20, ANNOUNCE, PFX, (20, 9), now=0)
    ctrl.ingest_external_update(2, 11, ANNOUNCE, PFX, (11, 1, 20, 9), now=0)
    ctrl.add_direct_prefix(OWN, 3)

    print(f"stored external paths for {PFX}:")
    for (sw, peer, _), path in sorted(ctrl.path_store.items()):
        print(f"  switch {sw} heard {list(path)} from AS {peer}")

    graph = ctrl.transform(PFX)
    print(f"\nAS Graph for {PFX}:")
    for kind, src, dst, seg in graph.edges():
        where = "prefix" if dst == -1 else f"AS {dst}"
        print(f"  {kind:8s} AS {src} -> {where:7s} seg={list(seg)}"
              f"  weight={graph.weight(kind, seg)}")

    print("\nchosen routes (cost = expanded hop count):")
    for asn, (cost, tail) in sorted(shortest_expansions(graph).items()):
        print(f"  AS {asn}: cost {cost}, expansion {[asn, *tail]}")

    own = ctrl.transform(OWN)
    print(f"\nAS Graph for the directly connected {OWN}:")
    for kind, src, dst, seg in own.edges():
        if kind == "attach":
            print(f"  attach at AS {src}, weight {own.weight(kind, seg)}")


if __name__ == "__main__":
    main()
