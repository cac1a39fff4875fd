"""The logically centralized multi-AS SDN controller.

State is held in two graphs.  The Switch Graph couples the physical cluster
topology with per-prefix connectivity: each switch keeps the hop-count best
externally learned path as an edge annotation (every candidate is retained
in the path store so withdrawals fall back without re-querying peers).  Per
prefix, the Switch Graph is transformed into an AS Graph in which externally
learned paths are split at every cluster-member occurrence: the trailing
segment becomes a prefix attachment at the last cluster AS on the path, and
each maximal external segment between two cluster ASes becomes a virtual
link.  Route choice is a shortest-path run over that AS Graph with AS-path
weights, so controller costs stay commensurable with legacy hop counts.

Recomputation is batched behind the cluster waiting recomputation interval
(CRWI); forwarding rules are installed after a modeled delay, and only then
are the changed routes advertised to external peers.
"""

from __future__ import annotations

import heapq
import logging

from .bgp import ANNOUNCE, WITHDRAW, AsPath
from .simcore import SimTime, usec

logger = logging.getLogger(__name__)

SINK = -1  # per-prefix AsGraph sink node

INTRA = "intra"
VIRTUAL = "virtual"
ATTACH = "attach"


class AsGraph:
    """Per-prefix loop-sanitized view: cluster nodes, intra-cluster edges of
    weight 1, virtual links of weight len(segment)+1 and prefix attachments
    of weight len(annotation)."""

    def __init__(self, cluster):
        self.cluster = frozenset(cluster)
        self._edges: set[tuple[str, int, int, AsPath]] = set()

    def add_edge(self, kind: str, src: int, dst: int, seg: AsPath = ()) -> None:
        self._edges.add((kind, src, dst, seg))

    @staticmethod
    def weight(kind: str, seg: AsPath) -> int:
        if kind == INTRA:
            return 1
        if kind == VIRTUAL:
            return len(seg) + 1
        return len(seg)

    def edges(self) -> list[tuple[str, int, int, AsPath]]:
        return sorted(self._edges)

    def out_edges(self) -> dict[int, list[tuple[int, AsPath, int, str]]]:
        adj: dict[int, list] = {a: [] for a in self.cluster}
        for kind, src, dst, seg in self.edges():
            adj[src].append((dst, seg, self.weight(kind, seg), kind))
        return adj

    def __eq__(self, other) -> bool:
        return (isinstance(other, AsGraph) and self.cluster == other.cluster
                and self._edges == other._edges)


def split_external_path(entry_switch: int, path: AsPath, cluster) -> list:
    """Split a stored external path at every cluster-member occurrence.

    Returns AsGraph edges: a virtual link per maximal external segment
    between cluster ASNs, and the prefix attachment carrying the trailing
    segment.  Degenerate self virtual links are dropped.
    """
    edges = []
    last = entry_switch
    seg: list[int] = []
    for asn in path:
        if asn in cluster:
            if asn != last:
                edges.append((VIRTUAL, last, asn, tuple(seg)))
            last = asn
            seg = []
        else:
            seg.append(asn)
    edges.append((ATTACH, last, SINK, tuple(seg)))
    return edges


def collapse_runs(seq) -> list[int]:
    """Collapse consecutive duplicates (deliberate prepending) so that loop
    checks flag only genuine revisits."""
    out = []
    for asn in seq:
        if not out or out[-1] != asn:
            out.append(asn)
    return out


def expansion_is_loop_free(expanded) -> bool:
    collapsed = collapse_runs(expanded)
    return len(collapsed) == len(set(collapsed))


_EXACT_STATE_BUDGET = 200_000


def _plain_shortest(adj: dict, source: int) -> tuple[int, AsPath] | None:
    """Dijkstra over the AsGraph keyed on (cost, expansion); each node is
    settled once, so this ignores ASN collisions across segment annotations."""
    heap = [(0, (), source)]
    settled: set[int] = set()
    while heap:
        cost, tail, node = heapq.heappop(heap)
        if node == SINK:
            return (cost, tail)
        if node in settled:
            continue
        settled.add(node)
        for dst, seg, w, kind in adj[node]:
            if dst in settled:
                continue
            ext = seg if kind == ATTACH else seg + (dst,)
            heapq.heappush(heap, (cost + w, tail + ext, dst))
    return None


def _exact_loopfree(adj: dict, source: int) -> tuple[int, AsPath] | None:
    """Best-first search over loop-free expansions; states carry the set of
    ASNs already used, so mutually colliding annotations are handled exactly.
    Exponential in the worst case, hence bounded: on budget exhaustion the
    source is treated as unreachable for this recomputation round."""
    heap = [(0, (), source, frozenset((source,)))]
    seen_states: set[tuple[int, frozenset]] = set()
    budget = _EXACT_STATE_BUDGET
    while heap:
        budget -= 1
        if budget < 0:
            return None
        cost, tail, node, used = heapq.heappop(heap)
        if node == SINK:
            return (cost, tail)
        state = (node, used)
        if state in seen_states:
            continue
        seen_states.add(state)
        last = tail[-1] if tail else source
        for dst, seg, w, kind in adj[node]:
            ext = seg if kind == ATTACH else seg + (dst,)
            new_used = set()
            prev = last
            ok = True
            for asn in ext:
                if asn == prev:
                    prev = asn
                    continue
                if asn in used or asn in new_used:
                    ok = False
                    break
                new_used.add(asn)
                prev = asn
            if not ok:
                continue
            heapq.heappush(heap, (cost + w, tail + ext, dst,
                                  used | frozenset(new_used)))
    return None


def shortest_expansions(graph: AsGraph) -> dict[int, tuple[int, AsPath]]:
    """For every cluster AS, the cheapest loop-free expanded route to the
    prefix sink: cost, plus the expansion that follows the source's own ASN
    (inlined virtual segments, traversed cluster ASNs, attachment).

    Ties break on the lexicographically smallest expansion.  Plain Dijkstra
    answers when its result is already loop-free (always, on consistent
    state); an exact search takes over for a source only when stale
    annotations collide, so chosen routes never revisit an ASN.
    """
    adj = graph.out_edges()
    result: dict[int, tuple[int, AsPath]] = {}
    for source in sorted(graph.cluster):
        choice = _plain_shortest(adj, source)
        if choice is not None and not expansion_is_loop_free((source,) + choice[1]):
            choice = _exact_loopfree(adj, source)
        if choice is not None:
            result[source] = choice
    return result


class ClusterController:
    """Owns the cluster: ingests external BGP, recomputes behind the CRWI,
    installs forwarding state, then speaks BGP outward through the cluster
    speaker under each border AS's own identity."""

    def __init__(self, net, cluster, *, crwi_us: SimTime = usec(1.0),
                 install_us: SimTime = usec(0.3)):
        self.net = net
        self.cluster = frozenset(cluster)
        self.crwi_us = crwi_us
        self.install_us = install_us
        # directed physical adjacency inside the cluster
        self.switch_edges: set[tuple[int, int]] = set()
        # (switch, peer, prefix) -> path: every externally learned candidate
        self.path_store: dict[tuple[int, int, str], AsPath] = {}
        self._store_by_sp: dict[tuple[int, str], dict[int, AsPath]] = {}
        # (switch, prefix) -> best annotation; () means directly connected
        self.best_ann: dict[tuple[int, str], AsPath] = {}
        self.direct: dict[str, int] = {}
        self.known_prefixes: set[str] = set()
        self.dirty: set[str] = set()
        self.full_recompute = False
        self.crwi_timer = None
        self._install_pending = False
        # prefix -> {asn -> (cost, expansion)}: committed forwarding state
        self.installed: dict[str, dict[int, tuple[int, AsPath]]] = {}
        self.advertised: dict[tuple[int, int, str], AsPath] = {}
        self.recompute_count = 0

    # ----------------------------------------------------------- bootstrap

    def add_switch_link(self, a: int, b: int) -> None:
        self.switch_edges.add((a, b))
        self.switch_edges.add((b, a))

    def add_direct_prefix(self, prefix: str, switch: int) -> None:
        self.direct[prefix] = switch
        self.best_ann[(switch, prefix)] = ()
        self._mark_dirty(prefix)

    # ------------------------------------------------------------- ingest

    def ingest_external_update(self, at_switch: int, from_peer: int, kind: str,
                               prefix: str, path: AsPath | None, now: SimTime) -> None:
        if at_switch not in self.cluster:
            logger.warning("update at non-cluster switch AS%d dropped", at_switch)
            return
        if kind == ANNOUNCE and not path:
            logger.warning("malformed announce at AS%d dropped", at_switch)
            return
        key = (at_switch, from_peer, prefix)
        sp = self._store_by_sp.setdefault((at_switch, prefix), {})
        if kind == ANNOUNCE:
            self.path_store[key] = path
            sp[from_peer] = path
        else:
            self.path_store.pop(key, None)
            sp.pop(from_peer, None)
        if self._refresh_best(at_switch, prefix):
            self._mark_dirty(prefix)

    def _refresh_best(self, switch: int, prefix: str) -> bool:
        """Recompute the best annotation for (switch, prefix); True on change."""
        if self.direct.get(prefix) == switch:
            best = ()
        else:
            best = None
            for peer, path in self._store_by_sp.get((switch, prefix), {}).items():
                if best is None or (len(path), path) < (len(best), best):
                    best = path
        key = (switch, prefix)
        if best is None:
            if key in self.best_ann:
                del self.best_ann[key]
                return True
            return False
        if self.best_ann.get(key) != best:
            self.best_ann[key] = best
            return True
        return False

    def _mark_dirty(self, prefix: str) -> None:
        self.known_prefixes.add(prefix)
        if not self.full_recompute:
            self.dirty.add(prefix)
        self._arm_crwi()

    def _arm_crwi(self) -> None:
        if self.crwi_timer is None or not self.crwi_timer.pending:
            self.crwi_timer = self.net.sim.schedule_in(
                self.crwi_us, self.on_crwi_expiry, kind="crwi")

    # --------------------------------------------------------- link events

    def handle_cluster_link_event(self, a: int, b: int, up: bool, now: SimTime) -> None:
        present = (a, b) in self.switch_edges
        if up == present:
            return  # duplicate event, idempotent
        if up:
            self.add_switch_link(a, b)
        else:
            self.switch_edges.discard((a, b))
            self.switch_edges.discard((b, a))
        self.full_recompute = True
        self.dirty.clear()  # subsumed
        self._arm_crwi()

    def handle_external_session_event(self, switch: int, peer: int, up: bool,
                                      now: SimTime) -> None:
        if up:
            # fresh session: advertise current installed routes immediately
            for prefix in sorted(self.installed):
                choice = self.installed[prefix].get(switch)
                if choice is not None:
                    self._advertise_one(switch, peer, prefix, choice)
        else:
            affected = sorted({pfx for (sw, pr, pfx) in self.path_store
                               if sw == switch and pr == peer})
            for prefix in affected:
                self.path_store.pop((switch, peer, prefix), None)
                self._store_by_sp.get((switch, prefix), {}).pop(peer, None)
                self._refresh_best(switch, prefix)
            for key in [k for k in self.advertised if k[0] == switch and k[1] == peer]:
                del self.advertised[key]
        # Border port liveness gates AS Graph edges built from any stored
        # path, not only the ones learned over this session; recheck all.
        for prefix in sorted(self.known_prefixes):
            self._mark_dirty(prefix)

    # ---------------------------------------------------------- recompute

    def _edge_feasible(self, kind: str, src: int, dst: int, seg: AsPath) -> bool:
        """A virtual link or attachment is usable only while the egress port
        it implies (src towards the first external hop, or towards dst for an
        empty segment) is up; an edge means data can actually be forwarded."""
        if kind == ATTACH and not seg:
            return True  # directly connected prefix
        first_hop = seg[0] if seg else dst
        return self.net.link_live(src, first_hop)

    def transform(self, prefix: str) -> AsGraph:
        """Build the per-prefix AS Graph from the current Switch Graph.

        Splitting a switch's annotation yields its virtual links plus a
        trailing segment.  The trailing segment becomes a prefix attachment
        only when it still belongs to the storing switch itself: an
        attachment at another cluster AS is that AS's own business, and its
        own (first-party) annotation provides it.  Attaching hearsay would
        let a stale advertisement justify itself through an external echo.
        """
        graph = AsGraph(self.cluster)
        for a, b in sorted(self.switch_edges):
            graph.add_edge(INTRA, a, b)
        for switch in sorted(self.cluster):
            ann = self.best_ann.get((switch, prefix))
            if ann is None:
                continue
            for kind, src, dst, seg in split_external_path(switch, ann, self.cluster):
                if kind == ATTACH and src != switch:
                    continue
                if self._edge_feasible(kind, src, dst, seg):
                    graph.add_edge(kind, src, dst, seg)
        return graph

    def compute_paths(self, prefix: str) -> dict[int, tuple[int, AsPath]]:
        self.recompute_count += 1
        return shortest_expansions(self.transform(prefix))

    def on_crwi_expiry(self) -> None:
        now = self.net.sim.clock
        self.crwi_timer = None
        prefixes = sorted(self.known_prefixes if self.full_recompute else self.dirty)
        self.full_recompute = False
        self.dirty.clear()
        computed = {pfx: self.compute_paths(pfx) for pfx in prefixes}
        if any(computed[p] != self.installed.get(p, {}) for p in prefixes):
            # flow installation takes a while; advertise only once it is done
            self.net.sim.schedule_in(self.install_us, self.on_install_complete,
                                     computed, kind="install")

    def on_install_complete(self, computed: dict) -> None:
        now = self.net.sim.clock
        changed = []
        for prefix in sorted(computed):
            if computed[prefix] != self.installed.get(prefix, {}):
                self.installed[prefix] = computed[prefix]
                changed.append(prefix)
        if changed:
            self.net.note_state_change(now)
        self._advertise(changed)

    # ------------------------------------------------------------ outbound

    def _expanded(self, switch: int, peer: int, choice: tuple[int, AsPath]) -> AsPath:
        prepend = self.net.export_prepend(switch, peer)
        return (switch,) * prepend + choice[1]

    def _advertise_one(self, switch: int, peer: int, prefix: str,
                       choice: tuple[int, AsPath]) -> None:
        adv = self._expanded(switch, peer, choice)
        key = (switch, peer, prefix)
        if self.advertised.get(key) != adv:
            self.advertised[key] = adv
            self.net.send_update(switch, peer, ANNOUNCE, prefix, adv, "crwi")

    def _advertise(self, prefixes) -> None:
        """Announce changed routes (or withdraw vanished ones) to every
        external peer of every border AS; no MRAI, no sender-side loop
        filtering, the receiver's own loop check is what suppresses echoes."""
        for switch in sorted(self.cluster):
            for peer in self.net.external_peers(switch):
                for prefix in prefixes:
                    choice = self.installed.get(prefix, {}).get(switch)
                    key = (switch, peer, prefix)
                    if choice is None:
                        if self.advertised.pop(key, None) is not None:
                            self.net.send_update(switch, peer, WITHDRAW, prefix,
                                                 None, "crwi")
                    else:
                        self._advertise_one(switch, peer, prefix, choice)

    # ------------------------------------------------------------ queries

    def next_hop(self, prefix: str, asn: int) -> int | None:
        """Installed data-plane next hop; None when the AS is the egress."""
        choice = self.installed.get(prefix, {}).get(asn)
        if choice is None:
            return None
        return choice[1][0] if choice[1] else None

    def has_route(self, prefix: str, asn: int) -> bool:
        return asn in self.installed.get(prefix, {})
