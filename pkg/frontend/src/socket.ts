// Stream connection with automatic reconnect and a bounded incoming queue,
// so rendering never sits between the socket and state updates.

import { decodeStreamMessage, type StreamMessage } from "./types.js";
import type { ConnectionState } from "./state.js";

const BASE_RETRY_MS = 500;
const MAX_RETRY_MS = 10_000;

// overload safety valve only; draining happens every pump tick
const QUEUE_LIMIT = 8192;

/** Exponential backoff, capped: 500 ms, 1 s, 2 s, ... up to 10 s. */
export function retryDelayMs(attempt: number): number {
  return Math.min(BASE_RETRY_MS * 2 ** attempt, MAX_RETRY_MS);
}

export interface SocketCallbacks {
  onConnection: (state: ConnectionState) => void;
  onBatch: (messages: StreamMessage[]) => void;
}

export class StreamSocket {
  private ws: WebSocket | null = null;
  private queue: StreamMessage[] = [];
  private attempts = 0;
  private closedByUser = false;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;
  private pumpTimer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly url: string,
    private readonly callbacks: SocketCallbacks,
  ) {}

  start(): void {
    this.closedByUser = false;
    this.open();
    // drain the queue on a short tick, independent of the render loop
    this.pumpTimer = setInterval(() => this.pump(), 10);
  }

  stop(): void {
    this.closedByUser = true;
    if (this.retryTimer !== null) clearTimeout(this.retryTimer);
    if (this.pumpTimer !== null) clearInterval(this.pumpTimer);
    this.ws?.close();
    this.ws = null;
    this.callbacks.onConnection("disconnected");
  }

  private open(): void {
    this.callbacks.onConnection("connecting");
    try {
      this.ws = new WebSocket(this.url);
    } catch (err) {
      console.warn("websocket open failed", err);
      this.scheduleRetry();
      return;
    }
    this.ws.addEventListener("open", () => {
      this.attempts = 0;
    });
    this.ws.addEventListener("message", (event) => {
      const msg = decodeStreamMessage(String(event.data));
      if (msg === null) {
        console.warn("ignoring malformed stream message", event.data);
        return;
      }
      if (this.queue.length >= QUEUE_LIMIT) {
        console.warn("incoming queue overflow; dropping oldest message");
        this.queue.shift();
      }
      this.queue.push(msg);
    });
    this.ws.addEventListener("close", () => {
      if (!this.closedByUser) this.scheduleRetry();
    });
    this.ws.addEventListener("error", () => {
      this.ws?.close();
    });
  }

  private scheduleRetry(): void {
    this.callbacks.onConnection("connecting");
    const delay = retryDelayMs(this.attempts);
    this.attempts += 1;
    this.retryTimer = setTimeout(() => this.open(), delay);
  }

  private pump(): void {
    if (this.queue.length === 0) return;
    const batch = this.queue;
    this.queue = [];
    this.callbacks.onBatch(batch);
  }
}
