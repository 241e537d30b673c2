// REST calls plus the WebSocket lifecycle: connect, hand raw messages to the
// consumer, reconnect with growing backoff after a drop. The socket and
// fetch constructors are injectable for tests.

import { Control, SessionState } from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
  onclose: ((ev?: { code?: number }) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  readyState: number;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ClientEvents {
  onRaw(data: string): void;
  onConnection(state: "connecting" | "open" | "closed" | "error"): void;
}

export const DEFAULT_BACKOFF_MS = [500, 1000, 2000, 5000, 10000];

const OPEN = 1;

export class SessionClient {
  private socket: SocketLike | null = null;
  private attempt = 0;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;
  private stopped = false;

  constructor(
    readonly url: string,
    private events: ClientEvents,
    private socketFactory: SocketFactory = (u) =>
      new WebSocket(u) as unknown as SocketLike,
    private backoffMs: number[] = DEFAULT_BACKOFF_MS,
  ) {}

  connect(): void {
    if (this.stopped) return;
    this.events.onConnection("connecting");
    const ws = this.socketFactory(this.url);
    this.socket = ws;
    ws.onopen = () => {
      this.attempt = 0;
      this.events.onConnection("open");
    };
    ws.onmessage = (ev) => this.events.onRaw(ev.data);
    ws.onerror = () => this.events.onConnection("error");
    ws.onclose = () => {
      this.socket = null;
      this.events.onConnection("closed");
      this.scheduleReconnect();
    };
  }

  private scheduleReconnect(): void {
    if (this.stopped || this.reconnectTimer !== null) return;
    const delay =
      this.backoffMs[Math.min(this.attempt, this.backoffMs.length - 1)];
    this.attempt += 1;
    this.reconnectTimer = setTimeout(() => {
      this.reconnectTimer = null;
      this.connect();
    }, delay);
  }

  /** True if the control went out; false when the socket is not open. */
  send(control: Control): boolean {
    if (this.socket === null || this.socket.readyState !== OPEN) return false;
    try {
      this.socket.send(JSON.stringify(control));
      return true;
    } catch {
      return false;
    }
  }

  /** Deliberate shutdown: no reconnect afterwards. */
  close(): void {
    this.stopped = true;
    if (this.reconnectTimer !== null) {
      clearTimeout(this.reconnectTimer);
      this.reconnectTimer = null;
    }
    this.socket?.close();
    this.socket = null;
  }
}

// ---- REST ----

type FetchLike = (url: string, init?: {
  method?: string;
  headers?: Record<string, string>;
  body?: string;
}) => Promise<{ ok: boolean; status: number; json(): Promise<unknown> }>;

export class ServiceApi {
  constructor(
    readonly baseUrl: string,
    private fetchImpl: FetchLike = (u, i) => fetch(u, i),
  ) {}

  private async request(path: string, method = "GET", body?: unknown) {
    const res = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers: { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await res.json();
    if (!res.ok) {
      const msg =
        typeof payload === "object" && payload !== null && "message" in payload
          ? String((payload as { message: unknown }).message)
          : `HTTP ${res.status}`;
      throw new Error(msg);
    }
    return payload;
  }

  createSession(body: Record<string, unknown> = {}): Promise<SessionState> {
    return this.request("/sessions", "POST", body) as Promise<SessionState>;
  }

  getSession(id: string): Promise<SessionState> {
    return this.request(`/sessions/${id}`) as Promise<SessionState>;
  }

  listSessions(): Promise<SessionState[]> {
    return this.request("/sessions") as Promise<SessionState[]>;
  }

  deleteSession(id: string): Promise<unknown> {
    return this.request(`/sessions/${id}`, "DELETE");
  }

  /** ws:// URL for a session id, derived from the REST base. */
  socketUrl(id: string): string {
    return this.baseUrl.replace(/^http/, "ws") + `/session/${id}`;
  }
}
