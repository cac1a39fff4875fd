"""Convergence-time and churn measurement plus forwarding snapshot analysis.

Convergence is detected by exact event-queue quiescence rather than the
quiet-period heuristic an emulator has to use; the measured duration runs
from the trigger to the last routing-state change or the last inter-AS
update delivery, whichever is later.  Churn counts update deliveries on
inter-AS sessions, with collector sessions excluded so the measure does not
depend on monitoring fan-out.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .network import Network
from .simcore import SimTime, to_seconds
from .topology import COLLECTOR

DELIVERED = "delivered"
LOOP = "loop"
BLACKHOLE = "blackhole"


class MeasurementError(RuntimeError):
    pass


def measure_convergence(net: Network, trigger_us: SimTime, *,
                        quiescent: bool = True) -> SimTime:
    """Duration from trigger to the later of the last routing-state change
    and the last inter-AS update delivery; zero when nothing reacted."""
    if not quiescent:
        raise MeasurementError("simulation is not quiescent")
    last = max(net.last_state_change, net.last_delivery, trigger_us)
    return last - trigger_us


def measure_churn(net: Network, trigger_us: SimTime,
                  duration_us: SimTime) -> tuple[int, float, bool]:
    """(update count, updates per second, zero-duration flag) within the
    convergence window; collector sessions are excluded."""
    roles = net.roles
    end = trigger_us + duration_us
    count = 0
    for t, sender, receiver, _kind, _pfx, _path, _origin in net.update_log:
        if t < trigger_us or t > end:
            continue
        if roles[sender] == COLLECTOR or roles[receiver] == COLLECTOR:
            continue
        count += 1
    if duration_us <= 0:
        return count, 0.0, True
    return count, count / to_seconds(duration_us), False


def forwarding_snapshot(net: Network, prefix: str) -> tuple[dict, dict]:
    """Per-AS next hop toward the prefix plus walk verdicts.

    Valid mid-convergence: loops are recorded, not errors.  Collector ASes
    never forward and are left out.
    """
    originator = net.scenario.topology.originations.get(prefix)
    nodes = sorted(a for a, r in net.roles.items() if r != COLLECTOR)
    next_hop: dict[int, int | None] = {}
    has_route: dict[int, bool] = {}
    for asn in nodes:
        if asn in net.cluster:
            has_route[asn] = net.controller.has_route(prefix, asn)
            next_hop[asn] = net.controller.next_hop(prefix, asn)
        else:
            entry = net.speakers[asn].loc_rib.get(prefix)
            has_route[asn] = entry is not None
            next_hop[asn] = None if entry is None else entry[1]

    def walk(start: int) -> str:
        seen = set()
        cur = start
        while True:
            if not has_route.get(cur, False):
                return BLACKHOLE
            nh = next_hop[cur]
            if nh is None:  # self-originated or cluster egress
                return DELIVERED
            if cur in seen:
                return LOOP
            if not net.link_live(cur, nh):
                return BLACKHOLE  # route points out a dead port
            seen.add(cur)
            cur = nh

    verdict = {asn: walk(asn) for asn in nodes}
    counts = {
        "delivered": sum(1 for v in verdict.values() if v == DELIVERED),
        "loops": sum(1 for v in verdict.values() if v == LOOP),
        "blackholes": sum(1 for v in verdict.values() if v == BLACKHOLE),
    }
    counts["reachable_fraction"] = counts["delivered"] / len(nodes) if nodes else 0.0
    return {"next_hop": next_hop, "verdict": verdict, "originator": originator}, counts


@dataclass
class RunRecord:
    """Per-run metrics row; serializes to one CSV row and one JSON object."""

    scenario_id: str
    family: str
    size: int
    penetration: int
    mrai_s: float
    run_index: int
    seed: int
    trigger_time_us: int
    convergence_time_us: int
    update_count: int
    churn_rate: float
    zero_duration: bool
    post_convergence_loops: int
    blackholes: int
    reachable_fraction: float

    CSV_FIELDS = ("scenario_id", "family", "size", "penetration", "mrai_s",
                  "run_index", "seed", "trigger_time_us", "convergence_time_us",
                  "convergence_time_s", "update_count", "churn_rate",
                  "zero_duration", "post_convergence_loops", "blackholes",
                  "reachable_fraction")

    @property
    def convergence_time_s(self) -> float:
        return to_seconds(self.convergence_time_us)

    def csv_row(self) -> list[str]:
        return [
            self.scenario_id, self.family, str(self.size), str(self.penetration),
            f"{self.mrai_s:g}", str(self.run_index), str(self.seed),
            str(self.trigger_time_us), str(self.convergence_time_us),
            f"{self.convergence_time_s:.6f}", str(self.update_count),
            f"{self.churn_rate:.6f}", str(int(self.zero_duration)),
            str(self.post_convergence_loops), str(self.blackholes),
            f"{self.reachable_fraction:.6f}",
        ]

    def to_dict(self) -> dict:
        d = {f: getattr(self, f) for f in self.CSV_FIELDS if f != "convergence_time_s"}
        d["convergence_time_s"] = round(self.convergence_time_s, 6)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        kwargs = {f: d[f] for f in cls.CSV_FIELDS if f != "convergence_time_s"}
        return cls(**kwargs)


def dump_update_log(net: Network) -> str:
    """Update log as JSON lines (one delivered update per line)."""
    lines = []
    for t, sender, receiver, kind, prefix, path, origin in net.update_log:
        lines.append(json.dumps({
            "t_us": t, "sender": sender, "receiver": receiver, "kind": kind,
            "prefix": prefix, "as_path": list(path) if path else None,
            "origin": origin,
        }, sort_keys=True))
    return "\n".join(lines) + ("\n" if lines else "")
