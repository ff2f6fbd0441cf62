import type { FeedEvent } from "./types.js";

export interface FeedSocket {
  onmessage: ((ev: { data: string }) => void) | null;
  onclose: (() => void) | null;
  close(): void;
}

export type SocketFactory = (url: string) => FeedSocket;

/** Change-feed connection owning reconnection with sequence resume. */
export class FeedConnection {
  private socket: FeedSocket | null = null;
  private stopped = false;
  lastSeq: number;

  constructor(
    private url: string,
    private onEvent: (event: FeedEvent) => void,
    private makeSocket: SocketFactory,
    since = 0,
    private reconnectDelayMs = 1000,
  ) {
    this.lastSeq = since;
  }

  connect(): void {
    this.stopped = false;
    this.open();
  }

  private open(): void {
    const socket = this.makeSocket(`${this.url}?since=${this.lastSeq}`);
    this.socket = socket;
    socket.onmessage = (ev) => {
      const event = JSON.parse(ev.data) as FeedEvent;
      if (event.seq > this.lastSeq) {
        this.lastSeq = event.seq;
        this.onEvent(event);
      }
    };
    socket.onclose = () => {
      if (this.stopped) return;
      setTimeout(() => this.open(), this.reconnectDelayMs);
    };
  }

  stop(): void {
    this.stopped = true;
    this.socket?.close();
  }
}
