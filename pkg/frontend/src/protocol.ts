/** Wire protocol spoken by the live bridge (schema version 1).
 *
 * Every server message carries the session id and a per-session sequence
 * number; the client treats the sequence number as the only ordering
 * authority and never renders stale data over newer data.
 */

export type Role = "legacy" | "cluster" | "client" | "collector";

export interface NodeInfo {
  asn: number;
  role: Role;
}

export interface LinkInfo {
  a: number;
  b: number;
  up: boolean;
  delay_us: number;
}

export interface TopologyPayload {
  schema_version: string;
  nodes: NodeInfo[];
  links: LinkInfo[];
  originations: Record<string, number>;
  client: number;
  primary: number;
  backup: number;
}

export type Verdict = "delivered" | "loop" | "blackhole";

export interface ForwardingTreePayload {
  prefix: string;
  sim_time_us: number;
  next_hop: Record<string, number | null>;
  verdict: Record<string, Verdict>;
  counts: { delivered: number; loops: number; blackholes: number; reachable_fraction: number };
}

export interface UpdateEventPayload {
  t_us: number;
  sender: number;
  receiver: number;
  kind: "announce" | "withdraw";
  prefix: string;
  as_path: number[] | null;
}

export interface MetricsPayload {
  sim_time_us: number;
  updates_delivered: number;
  last_state_change_us: number;
  quiescent: boolean;
}

export interface CommandAckPayload {
  id: string;
  applied: boolean;
  noop: boolean;
  sim_time_us: number;
}

export interface ErrorPayload {
  id?: string;
  message: string;
}

export type WireMessage =
  | { type: "hello"; session: string; seq: number; payload: { schema_version: string; sim_time_us: number; speed: number } }
  | { type: "topology"; session: string; seq: number; payload: TopologyPayload }
  | { type: "forwarding_tree"; session: string; seq: number; payload: ForwardingTreePayload }
  | { type: "update_event"; session: string; seq: number; payload: UpdateEventPayload }
  | { type: "metrics_tick"; session: string; seq: number; payload: MetricsPayload }
  | { type: "command_ack"; session: string; seq: number; payload: CommandAckPayload }
  | { type: "error"; session: string; seq: number; payload: ErrorPayload };

export interface Command {
  id: string;
  action: "toggle_link" | "subscribe_tree";
  a?: number;
  b?: number;
  up?: boolean;
  prefix?: string;
}

const KNOWN_TYPES = new Set([
  "hello", "topology", "forwarding_tree", "update_event",
  "metrics_tick", "command_ack", "error",
]);

/** Parse one frame; null for anything we cannot render (the connection is
 * kept, an error banner is the caller's business). */
export function parseMessage(raw: string): WireMessage | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const msg = data as Record<string, unknown>;
  if (typeof msg.type !== "string" || !KNOWN_TYPES.has(msg.type)) return null;
  if (typeof msg.seq !== "number" || typeof msg.payload !== "object") return null;
  return data as WireMessage;
}
