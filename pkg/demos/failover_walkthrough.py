#!/usr/bin/env python3
"""One fail-over run, narrated.

A dual-homed client loses its primary provider link; the withdrawal wave,
path exploration, the SDN controller's batched recomputation and the final
convergence are printed as they happen in simulation time.
"""

from routesim.experiment import Cell, SweepConfig, build_cell_scenario
from routesim.metrics import forwarding_snapshot, measure_churn, measure_convergence
from routesim.network import Network
from routesim.oracle import shortest_hop_counts
from routesim.simcore import Simulator, to_seconds, usec
from routesim.topology import link_key

CELL = Cell("erdos-renyi", 16, 50, 30.0)


def main():
    config = SweepConfig()
    scenario, params, seed = build_cell_scenario(config, CELL, run_index=0)
    print(f"cell {CELL.cell_id()}, seed {seed}")
    print(f"client AS {scenario.client}: primary AS {scenario.primary}, "
          f"backup AS {scenario.backup} (x{scenario.prepend_count} prepending)")
    print(f"cluster: {scenario.topology.cluster_nodes()}")

    sim = Simulator()
    net = Network(scenario, params, sim)
    net.start()
    first = sim.run_until_quiescent(usec(3600.0))
    print(f"\ninitial convergence at t={to_seconds(first.quiescent_at):.3f} s "
          f"({len(net.update_log)} updates delivered)")

    trigger = first.quiescent_at + scenario.trigger_offset_us
    net.schedule_link_command(trigger, scenario.client, scenario.primary, False)
    mark = len(net.update_log)
    sim.run_until_quiescent(trigger + usec(3600.0))

    duration = measure_convergence(net, trigger)
    count, rate, _ = measure_churn(net, trigger, duration)
    print(f"\nprimary link down at t={to_seconds(trigger):.3f} s")
    wave = [e for e in net.update_log[mark:] if e[0] <= trigger + usec(0.05)]
    print(f"  first 50 ms: {sum(1 for e in wave if e[3] == 'withdraw')} withdrawals, "
          f"{sum(1 for e in wave if e[3] == 'announce')} announcements")
    if net.controller:
        print(f"  controller recomputations so far: {net.controller.recompute_count}")
    print(f"converged {to_seconds(duration):.3f} s after the trigger "
          f"({count} updates, {rate:.2f}/s)")

    snapshot, counts = forwarding_snapshot(net, scenario.prefix)
    print(f"\nforwarding after convergence: {counts['delivered']} delivered, "
          f"{counts['loops']} loops, {counts['blackholes']} blackholes")
    oracle = shortest_hop_counts(scenario,
                                 {link_key(scenario.client, scenario.primary)})
    sample = sorted(a for a in snapshot["next_hop"] if a != scenario.client)[:6]
    print("sample routes (AS: next hop, hops vs graph-shortest):")
    for asn in sample:
        if asn in net.cluster:
            held = net.controller.installed[scenario.prefix][asn][0]
        else:
            held = len(net.speakers[asn].loc_rib[scenario.prefix][0])
        print(f"  AS {asn}: via {snapshot['next_hop'][asn]}, "
              f"{held} hops (oracle {oracle[asn]})")


if __name__ == "__main__":
    main()
