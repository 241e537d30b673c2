// Operator console wiring. All state lives in SessionView; this module only
// moves values between the DOM and the view/client layer.

import {
  Control,
  PreferenceDist,
  SessionState,
  parseDist,
  sliderScale,
} from "./protocol.js";
import { SessionView } from "./view.js";
import { ServiceApi, SessionClient } from "./client.js";
import { StripChart } from "./charts.js";

const HISTORY = 200;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

class Console {
  private view = new SessionView(HISTORY);
  private client: SessionClient | null = null;
  private api: ServiceApi | null = null;
  private session: SessionState | null = null;
  private dist: PreferenceDist | null = null;
  private charts: { slav: StripChart; vnf: StripChart; power: StripChart };
  private nodeTiles = new Map<number, HTMLElement>();

  constructor() {
    this.charts = {
      slav: new StripChart(el("chart-slav"), "#c0392b", HISTORY),
      vnf: new StripChart(el("chart-vnf"), "#2980b9", HISTORY),
      power: new StripChart(el("chart-power"), "#27ae60", HISTORY),
    };
    el<HTMLFormElement>("connect-form").addEventListener("submit", (ev) => {
      ev.preventDefault();
      void this.connect();
    });
    el<HTMLButtonElement>("btn-pause").addEventListener("click", () =>
      this.sendControl({ kind: "pause" }),
    );
    el<HTMLButtonElement>("btn-resume").addEventListener("click", () =>
      this.sendControl({ kind: "resume" }),
    );
    el<HTMLButtonElement>("btn-reset").addEventListener("click", () =>
      this.sendControl({ kind: "reset" }),
    );
    const slider = el<HTMLInputElement>("alpha-slider");
    slider.addEventListener("change", () => this.sendPreference());
    el<HTMLInputElement>("beta-input").addEventListener("change", () =>
      this.sendPreference(),
    );
  }

  private async connect(): Promise<void> {
    const base = el<HTMLInputElement>("base-url").value.replace(/\/+$/, "");
    const distSpec = el<HTMLInputElement>("dist-spec").value.trim();
    const tickMs = Number(el<HTMLInputElement>("tick-ms").value) || 250;
    this.dist = parseDist(distSpec);
    this.api = new ServiceApi(base);
    try {
      // sessions come up paused at tick 0: set the preference first, then hit
      // resume to start the stream
      this.session = await this.api.createSession({ tick_ms: tickMs });
    } catch (err) {
      this.toast(`session create failed: ${(err as Error).message}`);
      return;
    }
    this.configureSlider();
    this.configureBeta();
    el("session-id").textContent = this.session.id;
    this.view = new SessionView(HISTORY);
    this.client?.close();
    this.client = new SessionClient(
      this.api.socketUrl(this.session.id),
      {
        onRaw: (data) => {
          this.view.ingestRaw(data);
          this.render();
        },
        onConnection: (state) => {
          this.view.connection = state;
          this.renderConnection();
        },
      },
    );
    this.client.connect();
  }

  private configureSlider(): void {
    const slider = el<HTMLInputElement>("alpha-slider");
    const marks = el<HTMLDataListElement>("alpha-ticks");
    marks.innerHTML = "";
    if (this.dist) {
      const scale = sliderScale(this.dist);
      slider.max = String(scale.max);
      slider.step = String(scale.max / 200);
      for (const t of scale.ticks) {
        const opt = document.createElement("option");
        opt.value = String(t);
        marks.appendChild(opt);
      }
      el("alpha-max").textContent = scale.max.toFixed(4);
    } else {
      // no usable distribution spec: fall back to a unit scale
      slider.max = "1";
      slider.step = "0.005";
      el("alpha-max").textContent = "1";
    }
    slider.value = String(this.session?.alpha ?? 0);
    el("alpha-value").textContent = slider.value;
  }

  private configureBeta(): void {
    const row = el("beta-row");
    row.style.display = this.session?.task === "pm" ? "" : "none";
    if (this.session?.beta !== undefined) {
      el<HTMLInputElement>("beta-input").value = String(this.session.beta);
    }
  }

  private sendPreference(): void {
    const alpha = Number(el<HTMLInputElement>("alpha-slider").value);
    el("alpha-value").textContent = alpha.toFixed(4);
    const control: Control = { kind: "set_preference", alpha };
    if (this.session?.task === "pm") {
      control.beta = Number(el<HTMLInputElement>("beta-input").value);
    }
    this.sendControl(control);
  }

  private sendControl(control: Control): void {
    if (!this.client || !this.client.send(control)) {
      this.toast(`send failed: ${control.kind} (socket not open)`);
      return;
    }
    this.view.recordSend(control);
    this.renderAudit();
  }

  private toggleNode(id: number): void {
    const status = this.view.nodeStatus(id);
    this.sendControl(
      status === "down" ? { kind: "node_up", node: id } : { kind: "node_down", node: id },
    );
  }

  private render(): void {
    const frame = this.view.latest;
    if (frame) {
      el("tick").textContent = String(frame.tick);
      el("alpha-live").textContent = frame.alpha.toFixed(4);
      this.charts.slav.draw(this.view.series("slav"));
      this.charts.vnf.draw(this.view.series("vnf_total"));
      this.charts.power.draw(this.view.series("power_total"));
      this.renderNodes();
    }
    this.renderAudit();
    this.renderEnd();
    el("dropped").textContent = String(this.view.dropped);
  }

  private renderNodes(): void {
    const frame = this.view.latest;
    if (!frame) return;
    const grid = el("node-grid");
    for (const node of frame.per_node) {
      let tile = this.nodeTiles.get(node.id);
      if (!tile) {
        tile = document.createElement("div");
        tile.className = "node-tile";
        const label = document.createElement("div");
        label.className = "node-label";
        label.textContent = `node ${node.id}`;
        const stats = document.createElement("div");
        stats.className = "node-stats";
        const btn = document.createElement("button");
        btn.addEventListener("click", () => this.toggleNode(node.id));
        tile.append(label, stats, btn);
        grid.appendChild(tile);
        this.nodeTiles.set(node.id, tile);
      }
      const stats = tile.querySelector<HTMLElement>(".node-stats");
      const btn = tile.querySelector<HTMLButtonElement>("button");
      const inst = node.instance_counts.reduce((a, b) => a + b, 0);
      if (stats) {
        stats.textContent = `${node.power.toFixed(0)} W / ${inst} inst`;
      }
      tile.classList.toggle("node-down", node.status === "down");
      if (btn) btn.textContent = node.status === "down" ? "bring up" : "take down";
    }
  }

  private renderAudit(): void {
    const body = el("audit-body");
    body.innerHTML = "";
    const rows = this.view.audit.slice(-30).reverse();
    for (const entry of rows) {
      const tr = document.createElement("tr");
      const detail =
        entry.control.kind === "set_preference"
          ? `alpha=${entry.control.alpha.toFixed(4)}` +
            (entry.control.beta !== undefined ? ` beta=${entry.control.beta}` : "")
          : "node" in entry.control
            ? `node=${entry.control.node}`
            : "";
      const ack = entry.error
        ? `error: ${entry.error}`
        : entry.ackTick === null
          ? "pending"
          : `applies @ ${entry.ackTick}`;
      for (const text of [
        String(entry.seq),
        entry.control.kind,
        detail,
        String(entry.sentAtTick),
        ack,
      ]) {
        const td = document.createElement("td");
        td.textContent = text;
        tr.appendChild(td);
      }
      if (entry.error) tr.className = "audit-error";
      body.appendChild(tr);
    }
  }

  private renderConnection(): void {
    const badge = el("conn-state");
    badge.textContent = this.view.connection;
    badge.className = `conn conn-${this.view.connection}`;
  }

  private renderEnd(): void {
    const banner = el("end-banner");
    if (this.view.ended) {
      banner.style.display = "";
      banner.textContent = `session ended (${this.view.ended}) at tick ${this.view.tick}`;
    } else {
      banner.style.display = "none";
    }
  }

  private toast(message: string): void {
    const host = el("toasts");
    const node = document.createElement("div");
    node.className = "toast";
    node.textContent = message;
    host.appendChild(node);
    setTimeout(() => node.remove(), 4000);
  }
}

export function boot(): void {
  new Console();
}

if (typeof document !== "undefined" && document.getElementById("connect-form")) {
  boot();
}
