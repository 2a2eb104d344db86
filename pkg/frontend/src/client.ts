/**
 * Websocket client with reconnect/backoff, wired through the throttle so at
 * most one request is in flight and sends stay under the rate cap. On
 * reconnect the latest state is sent once so the view resynchronizes.
 */

import { parseResponse } from "./protocol.js";
import { UpdateThrottle } from "./throttle.js";
import { EmbodyRequest, EmbodyResponse } from "./types.js";

export interface ClientEvents {
  onResponse: (response: EmbodyResponse) => void;
  onStatus: (connected: boolean) => void;
  onError?: (message: string) => void;
}

const BACKOFF_INITIAL_MS = 500;
const BACKOFF_MAX_MS = 8000;

export class EmbodyClient {
  private socket: WebSocket | null = null;
  private backoff = BACKOFF_INITIAL_MS;
  private lastRequest: EmbodyRequest | null = null;
  private closed = false;
  readonly throttle: UpdateThrottle<EmbodyRequest>;

  constructor(private readonly url: string, private readonly events: ClientEvents) {
    this.throttle = new UpdateThrottle((payload) => this.transmit(payload));
  }

  connect(): void {
    this.closed = false;
    this.open();
  }

  close(): void {
    this.closed = true;
    this.socket?.close();
    this.socket = null;
  }

  /** Queue the latest state; throttling and in-flight logic apply. */
  send(request: EmbodyRequest): void {
    this.lastRequest = request;
    this.throttle.update(request);
  }

  private open(): void {
    const socket = new WebSocket(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.backoff = BACKOFF_INITIAL_MS;
      this.events.onStatus(true);
      if (this.lastRequest !== null) {
        this.throttle.update(this.lastRequest);  // resync once
      }
    };
    socket.onmessage = (event: MessageEvent) => {
      this.throttle.acknowledge();
      try {
        this.events.onResponse(parseResponse(JSON.parse(event.data)));
      } catch (error) {
        this.events.onError?.(String(error));
      }
    };
    socket.onclose = () => {
      if (this.socket !== socket) return;
      this.socket = null;
      this.throttle.reset();
      this.events.onStatus(false);
      if (!this.closed) {
        setTimeout(() => this.open(), this.backoff);
        this.backoff = Math.min(BACKOFF_MAX_MS, this.backoff * 2);
      }
    };
    socket.onerror = () => {
      socket.close();
    };
  }

  private transmit(payload: EmbodyRequest): void {
    if (this.socket !== null && this.socket.readyState === WebSocket.OPEN) {
      this.socket.send(JSON.stringify(payload));
    } else {
      // Connection dropped between queue and send: clear the in-flight
      // marker so the reconnect resync is not blocked.
      this.throttle.reset();
    }
  }
}
