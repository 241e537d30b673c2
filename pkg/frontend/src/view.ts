// Session view-model: the single source of truth the DOM renders from.
// Holds the latest telemetry, a bounded history, pending controls, and the
// audit log. Node status is never set optimistically: it only changes when
// a telemetry frame says so.

import {
  Control,
  ServerFrame,
  TelemetryFrame,
  isAck,
  isEnd,
  isError,
  isTelemetry,
  parseFrame,
} from "./protocol.js";

export type ConnectionState = "connecting" | "open" | "closed" | "error";

export interface AuditEntry {
  seq: number;
  control: Control;
  /** view tick when the control was sent (-1 before the first frame) */
  sentAtTick: number;
  /** applies_at_tick from the ack; null until acked */
  ackTick: number | null;
  error: string | null;
}

export class SessionView {
  connection: ConnectionState = "connecting";
  latest: TelemetryFrame | null = null;
  history: TelemetryFrame[] = [];
  audit: AuditEntry[] = [];
  ended: string | null = null;
  /** malformed or out-of-order frames ignored so far */
  dropped = 0;
  log: string[] = [];

  private seq = 0;
  private pending: AuditEntry[] = [];

  constructor(readonly historyLimit: number = 200) {
    if (historyLimit < 1) throw new RangeError("historyLimit must be >= 1");
  }

  get tick(): number {
    return this.latest ? this.latest.tick : -1;
  }

  /** Record a control at send time. Ack/error resolution comes later. */
  recordSend(control: Control): AuditEntry {
    const entry: AuditEntry = {
      seq: this.seq++,
      control,
      sentAtTick: this.tick,
      ackTick: null,
      error: null,
    };
    this.audit.push(entry);
    this.pending.push(entry);
    return entry;
  }

  /** Feed one raw WebSocket message through parsing into the view. */
  ingestRaw(raw: string): ServerFrame | null {
    const frame = parseFrame(raw);
    if (frame === null) {
      this.dropped += 1;
      this.log.push(`ignored malformed frame: ${raw.slice(0, 120)}`);
      return null;
    }
    this.ingest(frame);
    return frame;
  }

  ingest(frame: ServerFrame): void {
    if (isTelemetry(frame)) {
      // tick 0 after a live stream means the session was reset: start over
      if (frame.tick === 0 && this.latest !== null) {
        this.history = [];
        this.ended = null;
        this.log.push("session restarted from tick 0");
      } else if (this.latest !== null && frame.tick <= this.latest.tick) {
        // history stays ordered by tick; a stale or duplicate tick is dropped
        this.dropped += 1;
        this.log.push(`ignored out-of-order tick ${frame.tick}`);
        return;
      }
      this.latest = frame;
      this.history.push(frame);
      if (this.history.length > this.historyLimit) {
        this.history.splice(0, this.history.length - this.historyLimit);
      }
      return;
    }
    if (isAck(frame)) {
      const i = this.pending.findIndex((e) => e.control.kind === frame.kind);
      if (i >= 0) {
        this.pending[i].ackTick = frame.applies_at_tick;
        this.pending.splice(i, 1);
      } else {
        this.log.push(`ack with no pending control: ${frame.kind}`);
      }
      return;
    }
    if (isError(frame)) {
      if (frame.terminal) {
        // environment fault, not a control response: the session is dead
        this.ended = `fault: ${frame.message}`;
        this.log.push(`terminal fault: ${frame.message}`);
        return;
      }
      // the service answers each control with exactly one ack or error, so
      // an error resolves the oldest pending control
      const entry = this.pending.shift();
      if (entry) {
        entry.error = frame.message;
      } else {
        this.log.push(`server error: ${frame.message}`);
      }
      return;
    }
    if (isEnd(frame)) {
      this.ended = frame.reason;
    }
  }

  /** Acked node status only; null before the first telemetry frame. */
  nodeStatus(id: number): "up" | "down" | null {
    const node = this.latest?.per_node.find((n) => n.id === id);
    return node ? node.status : null;
  }

  nodePower(id: number): number | null {
    const node = this.latest?.per_node.find((n) => n.id === id);
    return node ? node.power : null;
  }

  pendingCount(): number {
    return this.pending.length;
  }

  /** Chart series, oldest first, exactly as received. */
  series(field: "slav" | "vnf_total" | "power_total"): number[] {
    return this.history.map((f) => f[field]);
  }
}
