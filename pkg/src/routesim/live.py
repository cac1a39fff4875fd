"""Interactive session service: one paced simulation per session, link
toggling, and JSON-over-WebSocket streams of topology, forwarding trees,
update events and metrics.

The simulation advances inside an asyncio task; WebSocket clients talk to it
only through an ordered command queue, and every outbound message carries a
per-session sequence number.  Pacing maps wall time to simulation time by a
speed factor and never changes outcomes: commands are bound to the
simulation clock at arrival and logged, so a batch replay of the command log
reproduces the session exactly.
"""

from __future__ import annotations

import asyncio
import itertools
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect

from .experiment import Cell, SweepConfig, build_cell_scenario
from .metrics import forwarding_snapshot
from .network import Network, RunParams
from .simcore import Simulator, to_seconds
from .topology import FailoverScenario, link_key

SCHEMA_VERSION = "1"

TREE_THROTTLE_WALL_S = 0.1
METRICS_TICK_WALL_S = 0.5
PUMP_TICK_WALL_S = 0.02

BUNDLED_SCENARIOS = {
    "clique8-p50": Cell("clique", 8, 50, 30.0),
    "clique8-p0": Cell("clique", 8, 0, 30.0),
    "erdos-renyi16-p50": Cell("erdos-renyi", 16, 50, 30.0),
    "barabasi-albert16-p75": Cell("barabasi-albert", 16, 75, 30.0),
}
BUNDLED_SEED = 7


def bundled_scenario(name: str) -> tuple[FailoverScenario, RunParams]:
    cell = BUNDLED_SCENARIOS[name]
    scenario, params, _seed = build_cell_scenario(SweepConfig(), cell, BUNDLED_SEED)
    return scenario, params


@dataclass
class LiveSession:
    """One simulation paced against the wall clock."""

    session_id: str
    scenario: FailoverScenario
    params: RunParams
    speed: float
    sim: Simulator = field(init=False)
    net: Network = field(init=False)

    def __post_init__(self):
        self.sim = Simulator()
        self.net = Network(self.scenario, self.params, self.sim)
        self.net.start()
        self.seq = itertools.count(1)
        self.started = False
        self.commands: asyncio.Queue = asyncio.Queue()
        self.subscribers: list[asyncio.Queue] = []
        self.command_log: list[tuple[int, int, int, bool]] = []
        self._log_cursor = 0
        self._anchor_wall: float | None = None
        self._anchor_sim = 0
        self._tree_dirty: dict[str, bool] = {}
        self._tree_last_push: dict[str, float] = {}
        self._tree_subs: set[str] = set()
        self._last_metrics_push = 0.0
        self._task: asyncio.Task | None = None

    # ------------------------------------------------------------- control

    def start(self) -> None:
        if self.started:
            raise RuntimeError("session already started")
        self.started = True
        self._anchor_wall = time.monotonic()
        self._anchor_sim = self.sim.clock
        self._task = asyncio.get_running_loop().create_task(self._pump())

    def stop(self) -> None:
        if self._task is not None:
            self._task.cancel()
            self._task = None

    def _target_sim(self) -> int:
        elapsed = time.monotonic() - self._anchor_wall
        return self._anchor_sim + int(elapsed * self.speed * 1_000_000)

    def status(self) -> dict:
        return {
            "session_id": self.session_id,
            "started": self.started,
            "sim_time_us": self.sim.clock,
            "speed": self.speed,
            "quiescent": self.sim.quiescent(),
            "commands": len(self.command_log),
            "prefixes": sorted(self.scenario.topology.originations),
        }

    # -------------------------------------------------------------- queues

    def attach(self) -> asyncio.Queue:
        q: asyncio.Queue = asyncio.Queue()
        self.subscribers.append(q)
        return q

    def detach(self, q: asyncio.Queue) -> None:
        if q in self.subscribers:
            self.subscribers.remove(q)

    def _broadcast(self, msg_type: str, payload: dict) -> None:
        msg = {"type": msg_type, "session": self.session_id,
               "seq": next(self.seq), "payload": payload}
        for q in self.subscribers:
            q.put_nowait(msg)

    # ------------------------------------------------------------ payloads

    def topology_payload(self) -> dict:
        topo = self.scenario.topology
        return {
            "schema_version": SCHEMA_VERSION,
            "nodes": [{"asn": a, "role": topo.roles[a]} for a in sorted(topo.roles)],
            "links": [{"a": a, "b": b, "up": self.net.link_state[(a, b)],
                       "delay_us": topo.links[(a, b)]}
                      for a, b in sorted(topo.links)],
            "originations": dict(sorted(topo.originations.items())),
            "client": self.scenario.client,
            "primary": self.scenario.primary,
            "backup": self.scenario.backup,
        }

    def tree_payload(self, prefix: str) -> dict:
        snapshot, counts = forwarding_snapshot(self.net, prefix)
        return {
            "prefix": prefix,
            "sim_time_us": self.sim.clock,
            "next_hop": {str(a): nh for a, nh in sorted(snapshot["next_hop"].items())},
            "verdict": {str(a): v for a, v in sorted(snapshot["verdict"].items())},
            "counts": counts,
        }

    def metrics_payload(self) -> dict:
        return {
            "sim_time_us": self.sim.clock,
            "updates_delivered": len(self.net.update_log),
            "last_state_change_us": self.net.last_state_change,
            "quiescent": self.sim.quiescent(),
        }

    # ------------------------------------------------------------ commands

    async def submit(self, command: dict) -> None:
        await self.commands.put(command)

    def _apply_command(self, cmd: dict) -> None:
        cid = cmd.get("id")
        action = cmd.get("action")
        if action == "toggle_link":
            a, b = int(cmd["a"]), int(cmd["b"])
            up = bool(cmd["up"])
            try:
                key = link_key(a, b)
            except Exception:
                key = None
            if key is None or key not in self.net.link_state:
                self._broadcast("error", {"id": cid, "message": f"unknown link {a}-{b}"})
                return
            now = self.sim.clock
            applied = self.net.toggle_link(a, b, up)
            if applied:
                self.command_log.append((now, key[0], key[1], up))
            self._broadcast("command_ack",
                            {"id": cid, "applied": applied, "noop": not applied,
                             "sim_time_us": now})
        elif action == "subscribe_tree":
            prefix = cmd.get("prefix")
            if prefix not in self.scenario.topology.originations:
                self._broadcast("error", {"id": cid, "message": f"unknown prefix {prefix}"})
                return
            self._tree_subs.add(prefix)
            self._tree_dirty[prefix] = False
            self._tree_last_push[prefix] = time.monotonic()
            self._broadcast("command_ack", {"id": cid, "applied": True, "noop": False,
                                            "sim_time_us": self.sim.clock})
            self._broadcast("forwarding_tree", self.tree_payload(prefix))
        else:
            self._broadcast("error", {"id": cid, "message": f"unknown action {action!r}"})

    # ---------------------------------------------------------------- pump

    def _advance(self) -> bool:
        """Process due events up to the paced target; True if any ran."""
        target = self._target_sim()
        ran = False
        budget = 5000
        while budget:
            nxt = self.sim.next_due()
            if nxt is None or nxt > target or self.sim.quiescent():
                break
            self.sim.process_next()
            ran = True
            budget -= 1
        return ran

    def _stream_new_updates(self) -> None:
        log = self.net.update_log
        while self._log_cursor < len(log):
            t, sender, receiver, kind, prefix, path, origin = log[self._log_cursor]
            self._log_cursor += 1
            self._broadcast("update_event", {
                "t_us": t, "sender": sender, "receiver": receiver, "kind": kind,
                "prefix": prefix, "as_path": list(path) if path else None,
            })
            if prefix in self._tree_subs:
                self._tree_dirty[prefix] = True

    def _push_trees(self, force: bool = False) -> None:
        now = time.monotonic()
        for prefix in sorted(self._tree_subs):
            throttled = now - self._tree_last_push.get(prefix, 0.0) < TREE_THROTTLE_WALL_S
            if self._tree_dirty.get(prefix) and (force or not throttled):
                self._tree_dirty[prefix] = False
                self._tree_last_push[prefix] = now
                self._broadcast("forwarding_tree", self.tree_payload(prefix))

    def _push_metrics(self, force: bool = False) -> None:
        now = time.monotonic()
        if force or now - self._last_metrics_push >= METRICS_TICK_WALL_S:
            self._last_metrics_push = now
            self._broadcast("metrics_tick", self.metrics_payload())

    async def _pump(self) -> None:
        while True:
            while not self.commands.empty():
                self._apply_command(self.commands.get_nowait())
            ran = self._advance()
            self._stream_new_updates()
            quiet = self.sim.quiescent()
            self._push_trees(force=quiet)
            self._push_metrics(force=ran and quiet)
            await asyncio.sleep(0 if ran else PUMP_TICK_WALL_S)


def create_app() -> FastAPI:
    app = FastAPI(title="routesim live bridge")
    from fastapi.middleware.cors import CORSMiddleware
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    ui_dir = Path(__file__).resolve().parents[2] / "frontend"
    if (ui_dir / "index.html").exists():
        from fastapi.staticfiles import StaticFiles
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")
    sessions: dict[str, LiveSession] = {}
    counter = itertools.count(1)

    @app.get("/scenarios")
    def list_scenarios():
        return {"scenarios": [
            {"name": name, "family": cell.family, "size": cell.size,
             "penetration": cell.penetration, "mrai_s": cell.mrai_s}
            for name, cell in BUNDLED_SCENARIOS.items()]}

    @app.post("/sessions")
    async def create_session(body: dict):
        speed = float(body.get("speed", 1.0))
        if speed <= 0:
            raise HTTPException(status_code=400, detail="speed must be > 0")
        try:
            if "scenario" in body and isinstance(body["scenario"], dict):
                scenario = FailoverScenario.from_dict(body["scenario"])
                params = RunParams(**body.get("params", {}))
            else:
                name = body.get("scenario", "clique8-p50")
                if name not in BUNDLED_SCENARIOS:
                    raise HTTPException(status_code=404,
                                        detail=f"unknown scenario {name!r}")
                scenario, params = bundled_scenario(name)
                if "params" in body:
                    params = RunParams(**{**params.to_dict(), **body["params"]})
        except HTTPException:
            raise
        except Exception as exc:
            raise HTTPException(status_code=400, detail=f"invalid scenario: {exc}")
        session_id = f"s{next(counter)}"
        session = LiveSession(session_id, scenario, params, speed)
        sessions[session_id] = session
        if body.get("autostart", True):
            session.start()
        return session.status()

    @app.post("/sessions/{session_id}/start")
    async def start_session(session_id: str):
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="no such session")
        try:
            session.start()
        except RuntimeError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return session.status()

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="no such session")
        return session.status()

    @app.websocket("/sessions/{session_id}/ws")
    async def session_ws(ws: WebSocket, session_id: str):
        session = sessions.get(session_id)
        if session is None:
            await ws.close(code=4404)
            return
        await ws.accept()
        queue = session.attach()
        await ws.send_text(json.dumps({
            "type": "hello", "session": session_id, "seq": 0,
            "payload": {"schema_version": SCHEMA_VERSION,
                        "sim_time_us": session.sim.clock,
                        "speed": session.speed}}))
        await ws.send_text(json.dumps({
            "type": "topology", "session": session_id, "seq": next(session.seq),
            "payload": session.topology_payload()}))

        async def sender():
            while True:
                msg = await queue.get()
                await ws.send_text(json.dumps(msg))

        send_task = asyncio.get_running_loop().create_task(sender())
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    cmd = json.loads(raw)
                except json.JSONDecodeError:
                    await ws.send_text(json.dumps({
                        "type": "error", "session": session_id,
                        "seq": next(session.seq),
                        "payload": {"message": "malformed command"}}))
                    continue
                await session.submit(cmd)
        except WebSocketDisconnect:
            pass
        finally:
            send_task.cancel()
            session.detach(queue)

    app.state.sessions = sessions
    return app
