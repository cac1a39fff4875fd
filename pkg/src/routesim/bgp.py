"""Per-AS path-vector BGP state machine.

Announcements are rate-limited by an MRAI timer kept per (peer, prefix);
withdrawals always go out immediately.  Best-path selection is shortest AS
path (hop count), tie-broken by lowest next-hop ASN and then by the
lexicographically smallest path, which keeps runs deterministic.

Outbound announcements are loop-checked against the receiving peer the way
production BGP daemons do: a best path containing the peer's own ASN is
never sent to that peer, and if something had been advertised there before,
an immediate withdrawal replaces it.  This is what turns a fail-over into
the wave of unthrottled withdrawals that drives path exploration; receivers
additionally apply the standard own-ASN loop check on everything that
arrives.
"""

from __future__ import annotations

import logging

from .simcore import SimTime

logger = logging.getLogger(__name__)

AsPath = tuple[int, ...]

ANNOUNCE = "announce"
WITHDRAW = "withdraw"

# Origination sorts ahead of every learned route: hop count 0, pseudo-peer -1.
_ORIGIN_KEY = (0, -1, ())


class BgpSpeaker:
    """One legacy AS (or the client / the quiet route collector)."""

    __slots__ = ("asn", "net", "quiet", "adj_rib_in", "loc_rib", "_best_key",
                 "originated", "advertised", "mrai", "pending", "_emit_queue",
                 "_flush_scheduled")

    def __init__(self, asn: int, net, quiet: bool = False):
        self.asn = asn
        self.net = net
        self.quiet = quiet          # collector: stores routes, never speaks
        # prefix -> {peer -> path}
        self.adj_rib_in: dict[str, dict[int, AsPath]] = {}
        # prefix -> (path, next_hop peer or None when self-originated)
        self.loc_rib: dict[str, tuple[AsPath, int | None]] = {}
        self._best_key: dict[str, tuple] = {}
        self.originated: set[str] = set()
        # (peer, prefix) -> last announced path / armed timer / coalesced update
        self.advertised: dict[tuple[int, str], AsPath] = {}
        self.mrai: dict[tuple[int, str], object] = {}
        self.pending: dict[tuple[int, str], AsPath] = {}
        self._emit_queue: set[str] = set()
        self._flush_scheduled = False

    # ------------------------------------------------------------- inbound

    def on_update(self, sender: int, kind: str, prefix: str, path: AsPath | None,
                  now: SimTime) -> None:
        if sender not in self.net.peer_set(self.asn):
            logger.warning("AS%d: update from unknown session AS%d dropped", self.asn, sender)
            return
        rib = self.adj_rib_in.setdefault(prefix, {})
        if kind == ANNOUNCE:
            if self.asn in path:
                # own ASN in path: loop. Discard, and drop whatever this peer
                # had previously announced (implicit withdraw).
                changed = rib.pop(sender, None) is not None
            else:
                changed = rib.get(sender) != path
                if changed:
                    rib[sender] = path
        else:
            changed = rib.pop(sender, None) is not None
        if changed:
            self._reselect_after_entry_change(prefix, sender, now)

    def _reselect_after_entry_change(self, prefix: str, peer: int, now: SimTime) -> None:
        """Incremental decision process: rescan only when the entry that
        changed was (or beats) the current best."""
        cur = self._best_key.get(prefix)
        rib = self.adj_rib_in.get(prefix, {})
        path = rib.get(peer)
        if path is not None:
            key = (len(path), peer, path)
            if cur is None or key < cur:
                self._commit(prefix, key, path, peer, now)
                return
            if cur[1] == peer:
                self._rescan(prefix, now)
            return
        if cur is not None and cur[1] == peer:
            self._rescan(prefix, now)

    def _rescan(self, prefix: str, now: SimTime) -> None:
        best_key = _ORIGIN_KEY if prefix in self.originated else None
        best = ((), None)
        for peer, path in self.adj_rib_in.get(prefix, {}).items():
            key = (len(path), peer, path)
            if best_key is None or key < best_key:
                best_key = key
                best = (path, peer)
        if best_key is None:
            if prefix in self.loc_rib:
                del self.loc_rib[prefix]
                del self._best_key[prefix]
                self.net.note_state_change(now)
                self._queue_emit(prefix)
        else:
            self._commit(prefix, best_key, best[0], best[1], now)

    def _commit(self, prefix: str, key: tuple, path: AsPath, peer: int | None,
                now: SimTime) -> None:
        if self._best_key.get(prefix) == key:
            return
        self._best_key[prefix] = key
        self.loc_rib[prefix] = (path, peer)
        self.net.note_state_change(now)
        self._queue_emit(prefix)

    # ------------------------------------------------------------ outbound

    def _queue_emit(self, prefix: str) -> None:
        """Batch output until every update due at this instant is digested.

        A router drains its input queue before it advertises (one decision
        pass, one batch of updates); the flush event lands at the current
        timestamp but after all same-time deliveries, so intermediate flips
        within one batch never hit the wire.
        """
        if self.quiet:
            return
        self._emit_queue.add(prefix)
        if not self._flush_scheduled:
            self._flush_scheduled = True
            self.net.sim.schedule_in(0, self._flush, kind=f"flush:{self.asn}")

    def _flush(self) -> None:
        self._flush_scheduled = False
        now = self.net.sim.clock
        prefixes = sorted(self._emit_queue)
        self._emit_queue.clear()
        for prefix in prefixes:
            self._emit(prefix, now)

    def _emit(self, prefix: str, now: SimTime) -> None:
        """Propagate the current best route for a prefix to every session.

        New announcements queue behind the (peer, prefix) MRAI timer; loss of
        the route and peer-loop suppression yield immediate withdrawals.
        """
        best = self.loc_rib.get(prefix)
        sim = self.net.sim
        for peer in self.net.peers(self.asn):
            key = (peer, prefix)
            if best is not None:
                out = (self.asn,) * self.net.export_prepend(self.asn, peer) + best[0]
                if peer in out:
                    # not announceable there; retract anything it still holds
                    if self.pending.pop(key, None) is not None:
                        sim.set_stateful(self.mrai[key], False)
                    if self.advertised.pop(key, None) is not None:
                        self.net.send_update(self.asn, peer, WITHDRAW, prefix, None, "event")
                    continue
                timer = self.mrai.get(key)
                if timer is not None and timer.pending:
                    if out == self.advertised.get(key):
                        if self.pending.pop(key, None) is not None:
                            sim.set_stateful(timer, False)
                    else:
                        self.pending[key] = out
                        sim.set_stateful(timer, True)
                elif out != self.advertised.get(key):
                    self._send_announce(peer, prefix, out, "event")
            else:
                if self.pending.pop(key, None) is not None:
                    sim.set_stateful(self.mrai[key], False)
                if self.advertised.pop(key, None) is not None:
                    self.net.send_update(self.asn, peer, WITHDRAW, prefix, None, "event")

    def _send_announce(self, peer: int, prefix: str, path: AsPath, origin: str) -> None:
        self.net.send_update(self.asn, peer, ANNOUNCE, prefix, path, origin)
        self.advertised[(peer, prefix)] = path
        mrai_us = self.net.mrai_us
        if mrai_us > 0:
            self.mrai[(peer, prefix)] = self.net.sim.schedule_in(
                mrai_us, self.on_mrai_expiry, peer, prefix,
                kind=f"mrai:{self.asn}>{peer}", stateful=False)

    def on_mrai_expiry(self, peer: int, prefix: str) -> None:
        key = (peer, prefix)
        self.mrai.pop(key, None)
        path = self.pending.pop(key, None)
        if path is not None:
            self._send_announce(peer, prefix, path, "mrai")

    # ------------------------------------------------------------ control

    def originate(self, prefix: str, now: SimTime) -> None:
        if prefix in self.originated:
            raise ValueError(f"AS{self.asn}: duplicate origination of {prefix}")
        self.originated.add(prefix)
        self._commit(prefix, _ORIGIN_KEY, (), None, now)

    def on_link_event(self, peer: int, up: bool, now: SimTime) -> None:
        if up:
            if self.quiet:
                return
            # fresh session: advertise the full Loc-RIB
            for prefix in sorted(self.loc_rib):
                out = (self.asn,) * self.net.export_prepend(self.asn, peer) \
                    + self.loc_rib[prefix][0]
                if peer not in out:
                    self._send_announce(peer, prefix, out, "event")
            return
        affected = sorted(pfx for pfx, rib in self.adj_rib_in.items() if peer in rib)
        for prefix in affected:
            del self.adj_rib_in[prefix][peer]
        sim = self.net.sim
        for key in [k for k in self.mrai if k[0] == peer]:
            sim.cancel(self.mrai.pop(key))
            self.pending.pop(key, None)
        for key in [k for k in self.advertised if k[0] == peer]:
            del self.advertised[key]
        for prefix in affected:
            self._reselect_after_entry_change(prefix, peer, now)
