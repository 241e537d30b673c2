// Wire protocol of the steering service, plus the preference-distribution
// arithmetic the slider needs. Everything here is pure data and guards so it
// can be unit-tested without a browser.

export const PROTOCOL_VERSION = 1;

export interface NodeTelemetry {
  id: number;
  status: "up" | "down";
  instance_counts: number[];
  power: number;
}

export interface TelemetryFrame {
  type: "telemetry";
  version: number;
  tick: number;
  alpha: number;
  beta?: number;
  slav: number;
  vnf_total: number;
  power_total: number;
  per_node: NodeTelemetry[];
}

export interface AckFrame {
  type: "ack";
  version: number;
  kind: string;
  applies_at_tick: number;
}

export interface ErrorFrame {
  type: "error";
  version?: number;
  message: string;
  /** set when the session died on an environment fault */
  terminal?: boolean;
}

export interface EndFrame {
  type: "end";
  version: number;
  tick: number;
  reason: string;
}

export type ServerFrame = TelemetryFrame | AckFrame | ErrorFrame | EndFrame;

export type Control =
  | { kind: "set_preference"; alpha: number; beta?: number }
  | { kind: "node_down"; node: number }
  | { kind: "node_up"; node: number }
  | { kind: "pause" }
  | { kind: "resume" }
  | { kind: "reset" };

export interface SessionState {
  id: string;
  version: number;
  tick: number;
  running: boolean;
  alpha: number;
  beta?: number;
  task: "as" | "pm";
  ended: boolean;
}

const isNum = (x: unknown): x is number =>
  typeof x === "number" && Number.isFinite(x);

function isNodeTelemetry(x: unknown): x is NodeTelemetry {
  if (typeof x !== "object" || x === null) return false;
  const n = x as Record<string, unknown>;
  return (
    isNum(n.id) &&
    (n.status === "up" || n.status === "down") &&
    Array.isArray(n.instance_counts) &&
    n.instance_counts.every(isNum) &&
    isNum(n.power)
  );
}

export function isTelemetry(x: unknown): x is TelemetryFrame {
  if (typeof x !== "object" || x === null) return false;
  const f = x as Record<string, unknown>;
  return (
    f.type === "telemetry" &&
    isNum(f.tick) &&
    isNum(f.alpha) &&
    isNum(f.slav) &&
    isNum(f.vnf_total) &&
    isNum(f.power_total) &&
    Array.isArray(f.per_node) &&
    f.per_node.every(isNodeTelemetry)
  );
}

export function isAck(x: unknown): x is AckFrame {
  if (typeof x !== "object" || x === null) return false;
  const f = x as Record<string, unknown>;
  return f.type === "ack" && typeof f.kind === "string" && isNum(f.applies_at_tick);
}

export function isError(x: unknown): x is ErrorFrame {
  if (typeof x !== "object" || x === null) return false;
  const f = x as Record<string, unknown>;
  return f.type === "error" && typeof f.message === "string";
}

export function isEnd(x: unknown): x is EndFrame {
  if (typeof x !== "object" || x === null) return false;
  const f = x as Record<string, unknown>;
  return f.type === "end" && isNum(f.tick) && typeof f.reason === "string";
}

/** Parse one raw WebSocket message; null for anything malformed. */
export function parseFrame(raw: string): ServerFrame | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (isTelemetry(data) || isAck(data) || isError(data) || isEnd(data)) {
    return data;
  }
  return null;
}

// ---- preference distributions (slider scale) ----

export const GRID_QUANTILES = [0.2, 0.4, 0.6, 0.8, 0.99] as const;

export interface PreferenceDist {
  kind: "exp" | "unif" | "point";
  spec: string;
  quantile(q: number): number;
}

/**
 * Parse a distribution spec string ("exp:145.45", "unif:0:0.05",
 * "point:0.0063"). Schedules are a server-side concept and have no slider
 * scale; they and anything else malformed return null.
 */
export function parseDist(spec: string): PreferenceDist | null {
  const parts = spec.trim().split(":");
  const nums = parts.slice(1).map(Number);
  if (nums.some((v) => !Number.isFinite(v))) return null;
  if (parts[0] === "exp" && nums.length === 1 && nums[0] > 0) {
    const lam = nums[0];
    return {
      kind: "exp",
      spec,
      quantile: (q) => {
        if (q < 0 || q >= 1) throw new RangeError(`quantile out of range: ${q}`);
        return -Math.log(1 - q) / lam;
      },
    };
  }
  if (parts[0] === "unif" && nums.length === 2 && nums[1] > nums[0] && nums[0] >= 0) {
    const [lo, hi] = nums;
    return {
      kind: "unif",
      spec,
      quantile: (q) => {
        if (q < 0 || q > 1) throw new RangeError(`quantile out of range: ${q}`);
        return lo + (hi - lo) * q;
      },
    };
  }
  if (parts[0] === "point" && nums.length === 1 && nums[0] >= 0) {
    const v = nums[0];
    return { kind: "point", spec, quantile: () => v };
  }
  return null;
}

/** Slider scale: linear over [0, q0.99] with marks at the five grid quantiles. */
export function sliderScale(dist: PreferenceDist): { max: number; ticks: number[] } {
  const max = dist.quantile(0.99);
  return { max, ticks: GRID_QUANTILES.map((q) => dist.quantile(q)) };
}
