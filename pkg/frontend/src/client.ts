/** WebSocket client: connects to a live-bridge session, feeds the
 * ViewModel, and issues commands with client-chosen ids. */

import { Command, parseMessage } from "./protocol.js";
import { ViewModel } from "./viewmodel.js";

export class SessionClient {
  private ws: WebSocket | null = null;
  private nextId = 1;

  constructor(
    readonly baseUrl: string,
    readonly vm: ViewModel,
    readonly onChange: () => void,
  ) {}

  async createSession(scenario: string, speed: number): Promise<string> {
    const resp = await fetch(`${this.baseUrl}/sessions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ scenario, speed }),
    });
    if (!resp.ok) throw new Error(`session create failed: ${resp.status}`);
    const body = await resp.json();
    return body.session_id as string;
  }

  connect(sessionId: string): void {
    const wsUrl = this.baseUrl.replace(/^http/, "ws");
    this.ws = new WebSocket(`${wsUrl}/sessions/${sessionId}/ws`);
    this.ws.onmessage = (event) => {
      const msg = parseMessage(String(event.data));
      if (msg === null) {
        this.vm.lastError = "malformed message";
      } else {
        this.vm.apply(msg);
      }
      this.onChange();
    };
    this.ws.onclose = () => {
      this.vm.status = "error";
      this.vm.lastError = "connection closed";
      this.onChange();
    };
  }

  private send(cmd: Command): void {
    this.ws?.send(JSON.stringify(cmd));
  }

  toggleLink(a: number, b: number, up: boolean): void {
    const id = `c${this.nextId++}`;
    this.vm.expectAck(id, (ok) => {
      if (ok) this.vm.setLinkState(a, b, up);
      this.onChange();
    });
    this.send({ id, action: "toggle_link", a, b, up });
  }

  subscribeTree(prefix: string): void {
    const id = `c${this.nextId++}`;
    this.vm.selectedPrefix = prefix;
    this.send({ id, action: "subscribe_tree", prefix });
  }
}
