/** Client-side state: a pure consumer of wire messages.
 *
 * No routing is ever computed here; every rendered fact traces back to a
 * received message.  A per-stream latest-wins guard keyed on the session
 * sequence number makes out-of-order or superseded frames harmless.
 */

import {
  ForwardingTreePayload,
  MetricsPayload,
  TopologyPayload,
  UpdateEventPayload,
  WireMessage,
} from "./protocol.js";

export interface RatePoint {
  sim_time_us: number;
  rate: number;
}

const RATE_WINDOW_US = 1_000_000;
const RATE_SERIES_MAX = 300;

export class ViewModel {
  topology: TopologyPayload | null = null;
  linkUp = new Map<string, boolean>();
  selectedPrefix: string | null = null;
  tree: ForwardingTreePayload | null = null;
  metrics: MetricsPayload | null = null;
  status: "connecting" | "live" | "error" = "connecting";
  lastError: string | null = null;
  /** sim time of the latest convergence trigger (a link toggle). */
  lastTriggerUs: number | null = null;
  updateSeries: RatePoint[] = [];
  private updateTimes: number[] = [];
  private lastSeqByStream = new Map<string, number>();
  private pendingAcks = new Map<string, (ok: boolean) => void>();

  /** approximate updates/second over the trailing window of sim time */
  private pushRate(t_us: number): void {
    this.updateTimes.push(t_us);
    while (this.updateTimes.length && this.updateTimes[0] < t_us - RATE_WINDOW_US) {
      this.updateTimes.shift();
    }
    this.updateSeries.push({ sim_time_us: t_us, rate: this.updateTimes.length });
    if (this.updateSeries.length > RATE_SERIES_MAX) this.updateSeries.shift();
  }

  private fresh(stream: string, seq: number): boolean {
    const last = this.lastSeqByStream.get(stream) ?? -1;
    if (seq <= last) return false;
    this.lastSeqByStream.set(stream, seq);
    return true;
  }

  expectAck(id: string, fn: (ok: boolean) => void): void {
    this.pendingAcks.set(id, fn);
  }

  apply(msg: WireMessage): void {
    switch (msg.type) {
      case "hello":
        this.status = "live";
        break;
      case "topology":
        if (!this.fresh("topology", msg.seq)) return;
        this.topology = msg.payload;
        this.linkUp.clear();
        for (const link of msg.payload.links) {
          this.linkUp.set(linkId(link.a, link.b), link.up);
        }
        break;
      case "forwarding_tree": {
        if (!this.fresh("tree", msg.seq)) return;
        const p = msg.payload;
        if (this.selectedPrefix === null || p.prefix === this.selectedPrefix) {
          this.tree = p;
        }
        break;
      }
      case "update_event": {
        if (!this.fresh("updates", msg.seq)) return;
        this.pushRate(msg.payload.t_us);
        this.noteLinkActivity(msg.payload);
        break;
      }
      case "metrics_tick":
        if (!this.fresh("metrics", msg.seq)) return;
        this.metrics = msg.payload;
        break;
      case "command_ack": {
        const ack = msg.payload;
        const fn = this.pendingAcks.get(ack.id);
        if (fn) {
          this.pendingAcks.delete(ack.id);
          fn(ack.applied);
        }
        if (ack.applied) this.lastTriggerUs = ack.sim_time_us;
        break;
      }
      case "error":
        this.lastError = msg.payload.message;
        if (msg.payload.id) {
          const fn = this.pendingAcks.get(msg.payload.id);
          if (fn) {
            this.pendingAcks.delete(msg.payload.id);
            fn(false);
          }
        }
        break;
    }
  }

  /** link state changes arrive as acks to our own toggles; remote changes
   * would come from a fresh topology frame. */
  setLinkState(a: number, b: number, up: boolean): void {
    this.linkUp.set(linkId(a, b), up);
  }

  private noteLinkActivity(_ev: UpdateEventPayload): void {
    // reserved for per-link activity styling
  }

  /** ASes flagged as looping in the latest snapshot. */
  loopAses(): number[] {
    if (!this.tree) return [];
    return Object.entries(this.tree.verdict)
      .filter(([, v]) => v === "loop")
      .map(([asn]) => Number(asn))
      .sort((x, y) => x - y);
  }

  blackholeAses(): number[] {
    if (!this.tree) return [];
    return Object.entries(this.tree.verdict)
      .filter(([, v]) => v === "blackhole")
      .map(([asn]) => Number(asn))
      .sort((x, y) => x - y);
  }

  /** sim seconds since the last trigger, for the convergence banner. */
  elapsedSinceTriggerS(): number | null {
    if (this.lastTriggerUs === null || !this.metrics) return null;
    const ref = Math.max(this.metrics.last_state_change_us, this.lastTriggerUs);
    return (ref - this.lastTriggerUs) / 1e6;
  }

  converged(): boolean {
    return this.metrics?.quiescent ?? false;
  }
}

export function linkId(a: number, b: number): string {
  return a < b ? `${a}-${b}` : `${b}-${a}`;
}
