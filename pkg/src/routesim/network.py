"""Wires a scenario into a live simulation: speakers, controller, sessions.

Messages travel only through the event queue; per-message latency is the
link propagation delay plus a processing delay.  Link toggles are injected
as external commands and fan out to both endpoints (failure detection is a
configurable delay, 0 by default: the experiments study what happens after
the link-down has been detected).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .bgp import ANNOUNCE, WITHDRAW, AsPath, BgpSpeaker
from .controller import ClusterController
from .simcore import SimTime, Simulator, usec
from .topology import CLUSTER, COLLECTOR, FailoverScenario, link_key


@dataclass(frozen=True)
class RunParams:
    """Protocol timer and delay model knobs for one simulation.

    Keep-alive / hold-down / reconnect are recorded for completeness (the
    emulation used 5/15/5 s); failure detection here is direct, so they
    drive nothing.
    """

    mrai_s: float = 30.0
    crwi_s: float = 1.0
    install_s: float = 0.3
    proc_delay_us: int = 1_000
    detection_delay_us: int = 0
    keepalive_s: float = 5.0
    holddown_s: float = 15.0
    reconnect_s: float = 5.0

    def to_dict(self) -> dict:
        return {
            "mrai_s": self.mrai_s, "crwi_s": self.crwi_s,
            "install_s": self.install_s, "proc_delay_us": self.proc_delay_us,
            "detection_delay_us": self.detection_delay_us,
        }


# update_log entry: (t_us, sender, receiver, kind, prefix, path, origin)
LogEntry = tuple[int, int, int, str, str, AsPath | None, str]


@dataclass
class Network:
    scenario: FailoverScenario
    params: RunParams
    sim: Simulator
    speakers: dict[int, BgpSpeaker] = field(default_factory=dict)
    controller: ClusterController | None = None
    update_log: list[LogEntry] = field(default_factory=list)
    last_state_change: SimTime = -1
    last_delivery: SimTime = -1

    def __post_init__(self):
        topo = self.scenario.topology
        self.mrai_us = usec(self.params.mrai_s)
        self.roles = dict(topo.roles)
        self.cluster = frozenset(topo.cluster_nodes())
        self.link_state = {key: True for key in topo.links}
        self.link_delay = dict(topo.links)
        self._adjacency = {asn: topo.neighbors(asn) for asn in topo.roles}
        self._peers: dict[int, list[int]] = {}
        self._peer_sets: dict[int, set[int]] = {}
        for asn in sorted(topo.roles):
            self._rebuild_peers(asn)
            if asn not in self.cluster:
                self.speakers[asn] = BgpSpeaker(
                    asn, self, quiet=(self.roles[asn] == COLLECTOR))
        if self.cluster:
            self.controller = ClusterController(
                self, self.cluster,
                crwi_us=usec(self.params.crwi_s),
                install_us=usec(self.params.install_s))
            for a, b in sorted(topo.links):
                if a in self.cluster and b in self.cluster:
                    self.controller.add_switch_link(a, b)

    # ------------------------------------------------------------ sessions

    def _rebuild_peers(self, asn: int) -> None:
        live = [nb for nb in self._adjacency[asn]
                if self.link_state[link_key(asn, nb)]]
        self._peers[asn] = live
        self._peer_sets[asn] = set(live)

    def peers(self, asn: int) -> list[int]:
        return self._peers[asn]

    def peer_set(self, asn: int) -> set[int]:
        return self._peer_sets[asn]

    def external_peers(self, switch: int) -> list[int]:
        return [nb for nb in self._peers[switch] if nb not in self.cluster]

    def link_live(self, a: int, b: int) -> bool:
        return self.link_state.get(link_key(a, b), False)

    def export_prepend(self, sender: int, peer: int) -> int:
        return self.scenario.export_prepend(sender, peer)

    # ------------------------------------------------------------ messages

    def send_update(self, sender: int, receiver: int, kind: str, prefix: str,
                    path: AsPath | None, origin: str) -> None:
        key = link_key(sender, receiver)
        if not self.link_state.get(key, False):
            return  # session gone at send time
        delay = self.link_delay[key] + self.params.proc_delay_us
        self.sim.schedule_in(delay, self._deliver, sender, receiver, kind,
                             prefix, path, origin,
                             kind=f"msg:{sender}>{receiver}:{kind[0]}:{prefix}")

    def _deliver(self, sender: int, receiver: int, kind: str, prefix: str,
                 path: AsPath | None, origin: str) -> None:
        now = self.sim.clock
        if not self.link_state.get(link_key(sender, receiver), False):
            return  # cut while in flight
        self.update_log.append((now, sender, receiver, kind, prefix, path, origin))
        self.last_delivery = now
        if receiver in self.cluster:
            self.controller.ingest_external_update(receiver, sender, kind,
                                                   prefix, path, now)
        else:
            self.speakers[receiver].on_update(sender, kind, prefix, path, now)

    def note_state_change(self, now: SimTime) -> None:
        self.last_state_change = now

    # --------------------------------------------------------- link events

    def toggle_link(self, a: int, b: int, up: bool) -> bool:
        """Apply a link state change; False when it was a no-op."""
        key = link_key(a, b)
        if key not in self.link_state or self.link_state[key] == up:
            return False
        self.link_state[key] = up
        self._rebuild_peers(key[0])
        self._rebuild_peers(key[1])
        if self.params.detection_delay_us > 0:
            self.sim.schedule_in(self.params.detection_delay_us,
                                 self._notify_endpoints, key[0], key[1], up,
                                 kind=f"detect:{key[0]}-{key[1]}")
        else:
            self._notify_endpoints(key[0], key[1], up)
        return True

    def _notify_endpoints(self, a: int, b: int, up: bool) -> None:
        now = self.sim.clock
        if a in self.cluster and b in self.cluster:
            self.controller.handle_cluster_link_event(a, b, up, now)
            return
        for endpoint, other in ((a, b), (b, a)):
            if endpoint in self.cluster:
                self.controller.handle_external_session_event(endpoint, other, up, now)
            else:
                self.speakers[endpoint].on_link_event(other, up, now)

    def schedule_link_command(self, at: SimTime, a: int, b: int, up: bool):
        return self.sim.schedule_at(
            at, self.toggle_link, a, b, up,
            kind=f"cmd:link:{min(a, b)}-{max(a, b)}:{'up' if up else 'down'}")

    # ------------------------------------------------------------ start-up

    def start(self) -> None:
        """Schedule t=0 originations (and controller bootstrap)."""
        for prefix, owner in sorted(self.scenario.topology.originations.items()):
            if owner in self.cluster:
                self.sim.schedule_at(0, self.controller.add_direct_prefix,
                                     prefix, owner, kind=f"cmd:originate:{prefix}")
            else:
                self.sim.schedule_at(0, self.speakers[owner].originate, prefix, 0,
                                     kind=f"cmd:originate:{prefix}")
