// WebSocket client: parses server messages into the ViewModel, pre-clamps
// outgoing force commands, keeps one monotone sequence across reconnects.

import {
  encodeControl,
  encodeForce,
  parseServerMessage,
  ProtocolError,
  type ControlAction,
  type ServerMessage,
} from "./protocol.js";
import { ViewModel } from "./viewmodel.js";

// Minimal structural view of a WebSocket so node tests can inject `ws` or a fake.
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ClientOptions {
  socketFactory?: SocketFactory;
  reconnectDelayMs?: number;
  /** called for protocol violations; default logs to console */
  onProtocolError?: (err: ProtocolError) => void;
}

export class ConsoleClient {
  readonly vm = new ViewModel();
  private socket: SocketLike | null = null;
  private seq = 0;
  private closed = false;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;
  private listeners: ((msg: ServerMessage) => void)[] = [];

  constructor(
    readonly url: string,
    private readonly opts: ClientOptions = {},
  ) {}

  onMessage(listener: (msg: ServerMessage) => void): void {
    this.listeners.push(listener);
  }

  connect(): void {
    this.closed = false;
    const factory: SocketFactory =
      this.opts.socketFactory ?? ((u) => new WebSocket(u) as unknown as SocketLike);
    this.vm.connection = "connecting";
    const socket = factory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.vm.connection = "connected";
    };
    socket.onmessage = (ev) => {
      let msg: ServerMessage;
      try {
        msg = parseServerMessage(String(ev.data));
      } catch (err) {
        if (err instanceof ProtocolError) {
          (this.opts.onProtocolError ?? ((e) => console.error(e.message)))(err);
          return;
        }
        throw err;
      }
      this.dispatch(msg);
    };
    socket.onclose = () => {
      this.vm.connection = "closed";
      this.socket = null;
      if (!this.closed) {
        // sequence numbers continue across the reconnect, so the server's
        // stale-command rejection keeps working after resubscription
        this.reconnectTimer = setTimeout(
          () => this.connect(),
          this.opts.reconnectDelayMs ?? 1000,
        );
      }
    };
    socket.onerror = () => {
      /* close follows; reconnect handles it */
    };
  }

  private dispatch(msg: ServerMessage): void {
    switch (msg.type) {
      case "hello":
        this.vm.applyHello(msg);
        break;
      case "frame":
        this.vm.applyFrame(msg);
        break;
      case "status":
        if (msg.action === "reset") this.vm.resetCharts();
        break;
      default:
        break;
    }
    for (const listener of this.listeners) listener(msg);
  }

  /** Send a force command, pre-clamped to the scenario bound. Returns the
   * values actually sent (null when not connected yet). */
  sendForce(fx: number, fy: number): { fx: number; fy: number; seq: number } | null {
    if (!this.socket || this.vm.connection !== "connected") return null;
    const fBar = this.vm.scenario?.f_bar ?? 0;
    const norm = Math.hypot(fx, fy);
    if (norm > fBar && norm > 0) {
      fx = (fx / norm) * fBar;
      fy = (fy / norm) * fBar;
    }
    this.seq += 1;
    this.socket.send(encodeForce(fx, fy, this.seq));
    this.vm.setCommand(fx, fy);
    return { fx, fy, seq: this.seq };
  }

  sendControl(action: ControlAction): boolean {
    if (!this.socket || this.vm.connection !== "connected") return false;
    this.socket.send(encodeControl(action));
    return true;
  }

  close(): void {
    this.closed = true;
    if (this.reconnectTimer !== null) clearTimeout(this.reconnectTimer);
    this.socket?.close();
  }
}
