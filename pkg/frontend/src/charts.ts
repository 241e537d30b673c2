// Strip charts for the three telemetry series. The y values plotted are the
// received numbers, untouched: no smoothing, no resampling.

export interface Point {
  x: number;
  y: number;
}

/**
 * Map a series onto a width x height box, newest point at the right edge.
 * yMax of 0 (all-zero series) still produces a flat line at the bottom.
 */
export function polyline(
  values: number[],
  width: number,
  height: number,
  capacity: number,
): Point[] {
  if (values.length === 0) return [];
  const yMax = Math.max(...values, 0);
  const dx = capacity > 1 ? width / (capacity - 1) : width;
  const x0 = width - (values.length - 1) * dx;
  return values.map((v, i) => ({
    x: x0 + i * dx,
    y: yMax > 0 ? height - (v / yMax) * height : height,
  }));
}

export class StripChart {
  private ctx: CanvasRenderingContext2D;

  constructor(
    private canvas: HTMLCanvasElement,
    private color: string,
    private capacity: number,
  ) {
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("2d canvas context unavailable");
    this.ctx = ctx;
  }

  draw(values: number[]): void {
    const { width, height } = this.canvas;
    this.ctx.clearRect(0, 0, width, height);
    const pts = polyline(values, width - 4, height - 4, this.capacity);
    if (pts.length === 0) return;
    this.ctx.strokeStyle = this.color;
    this.ctx.lineWidth = 1.5;
    this.ctx.beginPath();
    pts.forEach((p, i) => {
      if (i === 0) this.ctx.moveTo(p.x + 2, p.y + 2);
      else this.ctx.lineTo(p.x + 2, p.y + 2);
    });
    this.ctx.stroke();
    const last = values[values.length - 1];
    this.ctx.fillStyle = this.color;
    this.ctx.font = "11px monospace";
    this.ctx.fillText(formatValue(last), 6, 12);
  }
}

export function formatValue(v: number): string {
  if (Number.isInteger(v)) return String(v);
  return Math.abs(v) >= 100 ? v.toFixed(1) : v.toFixed(3);
}
