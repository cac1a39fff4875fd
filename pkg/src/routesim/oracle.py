"""Independent oracles used by invariant checks and the acceptance suite.

Nothing here shares code with the BGP speaker or the controller: the
shortest-path oracle is a plain hand-rolled Dijkstra over the scenario
graph, and the trace replayer re-derives RIB evolution from the logged
updates alone.
"""

from __future__ import annotations

import heapq

from .topology import COLLECTOR, FailoverScenario, link_key


def shortest_hop_counts(scenario: FailoverScenario,
                        down_links: set | frozenset = frozenset()) -> dict[int, int]:
    """Graph-shortest AS-path hop count from every forwarding AS to the
    client prefix, with the backup edge weighted by the prepend count.

    Collector nodes never forward and are left out entirely.  Unreachable
    ASes are absent from the result.
    """
    topo = scenario.topology
    nodes = [a for a, r in topo.roles.items() if r != COLLECTOR]
    keep = set(nodes)
    backup_edge = link_key(scenario.client, scenario.backup)
    adj: dict[int, list[tuple[int, int]]] = {a: [] for a in nodes}
    for (a, b) in topo.links:
        if a not in keep or b not in keep:
            continue
        if link_key(a, b) in down_links:
            continue
        w = scenario.prepend_count if link_key(a, b) == backup_edge else 1
        adj[a].append((b, w))
        adj[b].append((a, w))

    source = scenario.client
    dist = {source: 0}
    heap = [(0, source)]
    while heap:
        d, node = heapq.heappop(heap)
        if d > dist.get(node, 1 << 60):
            continue
        for nb, w in adj[node]:
            nd = d + w
            if nd < dist.get(nb, 1 << 60):
                dist[nb] = nd
                heapq.heappush(heap, (nd, nb))
    return dist


def observed_hop_counts(net) -> dict[int, int]:
    """Hop counts each forwarding AS currently holds toward the client
    prefix (speaker Loc-RIB path length; installed route cost for cluster
    members).  ASes without a route are absent."""
    prefix = net.scenario.prefix
    out: dict[int, int] = {}
    for asn, role in sorted(net.roles.items()):
        if role == COLLECTOR:
            continue
        if asn in net.cluster:
            choice = net.controller.installed.get(prefix, {}).get(asn)
            if choice is not None:
                out[asn] = choice[0]
        else:
            entry = net.speakers[asn].loc_rib.get(prefix)
            if entry is not None:
                out[asn] = len(entry[0])
    return out


def truth_mismatches(net, down_links: set | frozenset) -> list[tuple]:
    """Compare every AS's held hop count against the graph oracle."""
    expected = shortest_hop_counts(net.scenario, down_links)
    observed = observed_hop_counts(net)
    mismatches = []
    for asn in sorted(set(expected) | set(observed)):
        if expected.get(asn) != observed.get(asn):
            mismatches.append((asn, expected.get(asn), observed.get(asn)))
    return mismatches


def brute_force_expansions(graph) -> dict[int, tuple[int, tuple]]:
    """Exhaustive simple-path enumeration over an AsGraph: for each cluster
    AS the minimum (cost, expansion) over all loop-free expanded routes to
    the sink.  Used to validate the controller's shortest-path search."""
    from .controller import ATTACH, SINK, expansion_is_loop_free

    adj = graph.out_edges()
    result: dict[int, tuple[int, tuple]] = {}

    for source in sorted(graph.cluster):
        best: tuple[int, tuple] | None = None
        stack = [(source, 0, (), {source})]
        while stack:
            node, cost, tail, visited = stack.pop()
            if node == SINK:
                if expansion_is_loop_free((source,) + tail):
                    cand = (cost, tail)
                    if best is None or cand < best:
                        best = cand
                continue
            for dst, seg, w, kind in adj[node]:
                if dst != SINK and dst in visited:
                    continue  # simple paths over AsGraph nodes only
                ext = seg if kind == ATTACH else seg + (dst,)
                stack.append((dst, cost + w, tail + ext, visited | {dst}))
        if best is not None:
            result[source] = best
    return result


class RibReplica:
    """Straight-line interpreter: replays logged updates (and the trigger's
    link-down) against a minimal RIB table, reporting when state last
    changed.  Cross-checks the engine for pure-BGP (0% penetration) runs."""

    def __init__(self, originations: dict[str, int]):
        self.rib: dict[int, dict[str, dict[int, tuple]]] = {}
        self.best: dict[tuple[int, str], tuple] = {}
        self.last_adj_change = -1
        self.last_best_change = -1
        for prefix, owner in originations.items():
            self.best[(owner, prefix)] = (0, -1, ())

    def _rescan(self, receiver: int, prefix: str, t: int) -> None:
        key = (receiver, prefix)
        if self.best.get(key) == (0, -1, ()):
            return  # self-originated always wins
        candidates = [(len(p), peer, p) for peer, p
                      in self.rib.get(receiver, {}).get(prefix, {}).items()]
        new = min(candidates) if candidates else None
        if new != self.best.get(key):
            if new is None:
                del self.best[key]
            else:
                self.best[key] = new
            self.last_best_change = t

    def apply_update(self, t: int, sender: int, receiver: int, kind: str,
                     prefix: str, path) -> None:
        table = self.rib.setdefault(receiver, {}).setdefault(prefix, {})
        if kind == "announce":
            if receiver in path:
                if table.pop(sender, None) is None:
                    return
            elif table.get(sender) == path:
                return
            else:
                table[sender] = path
        else:
            if table.pop(sender, None) is None:
                return
        self.last_adj_change = t
        self._rescan(receiver, prefix, t)

    def apply_link_down(self, t: int, a: int, b: int) -> None:
        for endpoint, other in ((a, b), (b, a)):
            for prefix, table in self.rib.get(endpoint, {}).items():
                if table.pop(other, None) is not None:
                    self.last_adj_change = t
                    self._rescan(endpoint, prefix, t)


def replay_trace(update_log, originations, commands) -> RibReplica:
    """Feed logged updates and (t, a, b) link-down commands in time order."""
    replica = RibReplica(originations)
    events = [(t, 1, (sender, receiver, kind, prefix, path))
              for t, sender, receiver, kind, prefix, path, _ in update_log]
    events += [(t, 0, (a, b)) for t, a, b in commands]
    for t, tag, payload in sorted(events, key=lambda e: (e[0], e[1])):
        if tag == 0:
            replica.apply_link_down(t, *payload)
        else:
            replica.apply_update(t, *payload)
    return replica
