import { EventEnvelope, decodeEnvelope, encodeEnvelope } from "./model.js";

/**
 * The slice of the browser WebSocket the channel relies on; the "ws"
 * package client matches it, so tests can run the channel under node.
 */
export interface ChannelSocket {
  readyState: number;
  send(data: string): void;
  close(): void;
  addEventListener(type: string, listener: (event: never) => void): void;
}

export type SocketFactory = (url: string) => ChannelSocket;

const SOCKET_OPEN = 1;

export const INITIAL_BACKOFF_MS = 500;
export const MAX_BACKOFF_MS = 8000;

/** Exponential backoff: 500 ms doubling per attempt, capped at 8 s. */
export function backoffDelayMs(attempt: number): number {
  return Math.min(INITIAL_BACKOFF_MS * 2 ** Math.min(attempt, 10), MAX_BACKOFF_MS);
}

export interface ChannelEvents {
  onEnvelope?: (env: EventEnvelope) => void;
  onStatus?: (connected: boolean) => void;
}

/**
 * Reconnecting event-stream client. One envelope per text frame inbound;
 * command envelopes outbound. A dropped connection schedules a retry and
 * reports the outage immediately through onStatus.
 */
export class EventChannel {
  private socket: ChannelSocket | null = null;
  private attempt = 0;
  private seq = 0;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private closed = false;

  constructor(
    private readonly url: string,
    private readonly events: ChannelEvents = {},
    private readonly factory: SocketFactory = (u) => new WebSocket(u) as unknown as ChannelSocket,
  ) {}

  connect(): void {
    if (this.closed) return;
    // error and close can both fire for one attempt; retry exactly once
    let settled = false;
    const retry = () => {
      if (settled || this.closed) return;
      settled = true;
      this.socket = null;
      this.events.onStatus?.(false);
      this.timer = setTimeout(() => this.connect(), backoffDelayMs(this.attempt++));
    };

    let socket: ChannelSocket;
    try {
      socket = this.factory(this.url);
    } catch {
      retry();
      return;
    }
    this.socket = socket;

    socket.addEventListener("open", () => {
      if (this.closed) return;
      this.attempt = 0;
      this.events.onStatus?.(true);
    });
    socket.addEventListener("message", (event: { data: unknown }) => {
      if (this.closed || typeof event.data !== "string") return;
      const env = decodeEnvelope(event.data);
      if (env !== null) this.events.onEnvelope?.(env);
    });
    socket.addEventListener("error", () => {
      // the close event that follows drives the retry
    });
    socket.addEventListener("close", retry);
  }

  get connected(): boolean {
    return this.socket !== null && this.socket.readyState === SOCKET_OPEN;
  }

  /** Emit one command envelope; false when the link is down. */
  sendCommand(payload: Record<string, unknown>): boolean {
    if (this.socket === null || this.socket.readyState !== SOCKET_OPEN) return false;
    const env: EventEnvelope = {
      payload,
      seq: this.seq++,
      timestamp: Date.now() / 1000,
      topic: "command",
    };
    this.socket.send(encodeEnvelope(env));
    return true;
  }

  close(): void {
    this.closed = true;
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = null;
    const socket = this.socket;
    this.socket = null;
    socket?.close();
  }
}
