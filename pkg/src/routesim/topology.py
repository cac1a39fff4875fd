"""AS-level topology generation and the dual-homed fail-over scenario.

Four synthetic graph families are supported (clique, Erdos-Renyi,
Barabasi-Albert, Newman-Watts-Strogatz), ISP nodes are assigned to the SDN
cluster by a penetration percentage, and the fail-over scenario attaches a
dual-homed client plus a route collector.
"""

from __future__ import annotations

import ipaddress
import json
from dataclasses import dataclass, field, replace

import networkx as nx

from .simcore import RngStreams, SimTime, usec

LEGACY = "legacy"
CLUSTER = "cluster"
CLIENT = "client"
COLLECTOR = "collector"

ISP_ROLES = (LEGACY, CLUSTER)

FAMILIES = ("clique", "erdos-renyi", "barabasi-albert", "newman-watts-strogatz")

DEFAULT_LINK_DELAY_US = 2_000   # per-link propagation, 2 ms
DEFAULT_PROC_DELAY_US = 1_000   # per-message processing, 1 ms

CLIENT_PREFIX = "198.51.100.0/24"


class ConfigError(ValueError):
    """Invalid generation parameters or scenario preconditions."""


@dataclass(frozen=True)
class GraphParams:
    """Family plus the family-appropriate knobs (k, p, m).

    Defaults are a compromise between full ISP meshes and sparse tiered
    environments: E-R p=0.3, B-A m=2, N-W-S k=4 / p=0.3.
    """

    family: str
    n: int
    p: float = 0.3
    m: int = 2
    k: int = 4

    def validate(self) -> None:
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}")
        if self.n < 2:
            raise ConfigError("need at least 2 nodes")
        if self.family == "erdos-renyi" and not 0.0 <= self.p <= 1.0:
            raise ConfigError("p must be in [0, 1]")
        if self.family == "barabasi-albert" and not 1 <= self.m < self.n:
            raise ConfigError("barabasi-albert requires 1 <= m < n")
        if self.family == "newman-watts-strogatz":
            if not 2 <= self.k < self.n:
                raise ConfigError("newman-watts-strogatz requires 2 <= k < n")
            if not 0.0 <= self.p <= 1.0:
                raise ConfigError("p must be in [0, 1]")


def link_key(a: int, b: int) -> tuple[int, int]:
    if a == b:
        raise ConfigError("self-links are not allowed")
    return (a, b) if a < b else (b, a)


@dataclass
class Topology:
    """Nodes with roles, undirected delay-annotated links, prefix origins."""

    roles: dict[int, str] = field(default_factory=dict)
    links: dict[tuple[int, int], SimTime] = field(default_factory=dict)
    originations: dict[str, int] = field(default_factory=dict)

    def isp_nodes(self) -> list[int]:
        return sorted(a for a, r in self.roles.items() if r in ISP_ROLES)

    def cluster_nodes(self) -> list[int]:
        return sorted(a for a, r in self.roles.items() if r == CLUSTER)

    def neighbors(self, asn: int) -> list[int]:
        out = []
        for a, b in self.links:
            if a == asn:
                out.append(b)
            elif b == asn:
                out.append(a)
        return sorted(out)

    def add_link(self, a: int, b: int, delay_us: SimTime = DEFAULT_LINK_DELAY_US) -> None:
        key = link_key(a, b)
        if key in self.links:
            raise ConfigError(f"duplicate link {key}")
        self.links[key] = delay_us

    def connected(self, over: tuple[str, ...] = ISP_ROLES) -> bool:
        nodes = [a for a, r in self.roles.items() if r in over]
        if not nodes:
            return False
        adj: dict[int, list[int]] = {a: [] for a in nodes}
        keep = set(nodes)
        for a, b in self.links:
            if a in keep and b in keep:
                adj[a].append(b)
                adj[b].append(a)
        seen = {nodes[0]}
        stack = [nodes[0]]
        while stack:
            for nb in adj[stack.pop()]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        return len(seen) == len(nodes)

    # ---- structured-text import/export (schema documented in README) ----

    def to_dict(self) -> dict:
        return {
            "nodes": [{"asn": a, "role": self.roles[a]} for a in sorted(self.roles)],
            "links": [
                {"a": a, "b": b, "delay_us": self.links[(a, b)]}
                for a, b in sorted(self.links)
            ],
            "originations": {p: a for p, a in sorted(self.originations.items())},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Topology":
        topo = cls()
        for node in d["nodes"]:
            topo.roles[int(node["asn"])] = node["role"]
        for ln in d["links"]:
            topo.add_link(int(ln["a"]), int(ln["b"]), int(ln.get("delay_us", DEFAULT_LINK_DELAY_US)))
        for prefix, asn in d.get("originations", {}).items():
            ipaddress.ip_network(prefix)
            topo.originations[prefix] = int(asn)
        return topo

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Topology":
        return cls.from_dict(json.loads(text))


def _raw_graph(params: GraphParams, seed: int) -> nx.Graph:
    if params.family == "clique":
        return nx.complete_graph(params.n)
    if params.family == "erdos-renyi":
        return nx.gnp_random_graph(params.n, params.p, seed=seed)
    if params.family == "barabasi-albert":
        return nx.barabasi_albert_graph(params.n, params.m, seed=seed)
    return nx.newman_watts_strogatz_graph(params.n, params.k, params.p, seed=seed)


MAX_CONNECT_ATTEMPTS = 32


def generate(params: GraphParams, seed: int,
             link_delay_us: SimTime = DEFAULT_LINK_DELAY_US) -> Topology:
    """Generate a connected ISP graph; ASNs are 1..n, all legacy.

    Disconnected draws (possible for Erdos-Renyi) are resampled with derived
    sub-seeds up to MAX_CONNECT_ATTEMPTS times before erroring out.
    """
    params.validate()
    streams = RngStreams(seed)
    for attempt in range(MAX_CONNECT_ATTEMPTS):
        g = _raw_graph(params, streams.derive_seed("topology", attempt))
        topo = Topology()
        for node in range(params.n):
            topo.roles[node + 1] = LEGACY
        for u, v in sorted(g.edges()):
            topo.add_link(u + 1, v + 1, link_delay_us)
        if topo.connected():
            return topo
    raise ConfigError(f"could not draw a connected {params.family} graph in "
                      f"{MAX_CONNECT_ATTEMPTS} attempts")


def _round_half_up(x: float) -> int:
    return int(x + 0.5)


def assign_cluster(topo: Topology, penetration: float, seed: int) -> Topology:
    """Mark round(penetration% of ISP nodes) as cluster members.

    Sampling is uniform without any contiguity constraint.  The membership
    permutation depends on the seed only, not on the percentage, so
    penetration levels of the same seed get nested memberships (the paired
    design used by the sweep).  Client and collector nodes are never chosen.
    """
    if not 0 <= penetration <= 100:
        raise ConfigError("penetration must be within [0, 100]")
    isp = topo.isp_nodes()
    count = _round_half_up(penetration / 100.0 * len(isp))
    perm = RngStreams(seed).stream("cluster").permutation(len(isp))
    chosen = {isp[i] for i in perm[:count]}
    roles = {a: (CLUSTER if a in chosen else (LEGACY if r in ISP_ROLES else r))
             for a, r in topo.roles.items()}
    return replace(topo, roles=roles, links=dict(topo.links),
                   originations=dict(topo.originations))


@dataclass
class FailoverScenario:
    """Dual-homed client loses its primary link and fails over to a
    prepended backup; the collector peers with every speaker."""

    topology: Topology
    client: int
    collector: int
    primary: int
    backup: int
    prefix: str = CLIENT_PREFIX
    prepend_count: int = 10
    trigger_offset_us: SimTime = usec(60.0)

    def export_prepend(self, sender: int, peer: int) -> int:
        """Occurrences of the sender ASN on announcements over (sender, peer)."""
        if sender == self.client and peer == self.backup:
            return self.prepend_count
        return 1

    def to_dict(self) -> dict:
        return {
            "topology": self.topology.to_dict(),
            "client": self.client,
            "collector": self.collector,
            "primary": self.primary,
            "backup": self.backup,
            "prefix": self.prefix,
            "prepend_count": self.prepend_count,
            "trigger_offset_us": self.trigger_offset_us,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FailoverScenario":
        return cls(
            topology=Topology.from_dict(d["topology"]),
            client=int(d["client"]),
            collector=int(d["collector"]),
            primary=int(d["primary"]),
            backup=int(d["backup"]),
            prefix=d.get("prefix", CLIENT_PREFIX),
            prepend_count=int(d.get("prepend_count", 10)),
            trigger_offset_us=int(d.get("trigger_offset_us", usec(60.0))),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "FailoverScenario":
        return cls.from_dict(json.loads(text))


def build_failover_scenario(topo: Topology, seed: int, *,
                            prefix: str = CLIENT_PREFIX,
                            prepend_count: int = 10,
                            trigger_offset_us: SimTime = usec(60.0),
                            with_collector: bool = True,
                            link_delay_us: SimTime = DEFAULT_LINK_DELAY_US) -> FailoverScenario:
    """Attach the dual-homed client (two random distinct providers) and the
    route collector.  The ISP-ISP link set is never touched."""
    isp = topo.isp_nodes()
    if len(isp) < 2:
        raise ConfigError("fail-over scenario needs at least 2 ISP nodes")
    ipaddress.ip_network(prefix)
    if prefix in topo.originations:
        raise ConfigError(f"prefix {prefix} already originated")

    rng = RngStreams(seed).stream("providers")
    pair = rng.choice(len(isp), size=2, replace=False)
    primary, backup = isp[pair[0]], isp[pair[1]]

    out = Topology(roles=dict(topo.roles), links=dict(topo.links),
                   originations=dict(topo.originations))
    client = max(out.roles) + 1
    collector = client + 1
    out.roles[client] = CLIENT
    out.add_link(client, primary, link_delay_us)
    out.add_link(client, backup, link_delay_us)
    if with_collector:
        out.roles[collector] = COLLECTOR
        for asn in sorted(a for a, r in out.roles.items() if r != COLLECTOR):
            out.add_link(collector, asn, link_delay_us)
    out.originations[prefix] = client

    return FailoverScenario(
        topology=out, client=client, collector=collector,
        primary=primary, backup=backup, prefix=prefix,
        prepend_count=prepend_count, trigger_offset_us=trigger_offset_us,
    )
