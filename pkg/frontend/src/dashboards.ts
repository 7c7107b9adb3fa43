// Chart data assembly and a minimal line-chart painter for the energy and
// per-edge distance dashboards. Data prep is pure so tests can cover it
// without a canvas.

import type { Canvas2D } from "./render.js";
import type { SeriesPoint } from "./viewmodel.js";
import type { ViewModel } from "./viewmodel.js";

export interface ChartSeries {
  label: string;
  color: string;
  points: readonly SeriesPoint[];
  dashed?: boolean;
}

export interface Chart {
  title: string;
  series: ChartSeries[];
  /** horizontal reference line (e.g. the communication radius) */
  hline?: { value: number; label: string };
}

export function buildCharts(vm: ViewModel): Chart[] {
  const energy: Chart = {
    title: "energy vs decay envelope",
    series: [
      { label: "V", color: "#3c78f2", points: vm.vSeries.values() },
      { label: "V_p", color: "#35b262", points: vm.vpSeries.values() },
      {
        label: "envelope",
        color: "#e05555",
        points: vm.envelopeSeries.values(),
        dashed: true,
      },
    ],
  };
  const palette = ["#35b262", "#b29a35", "#b23535", "#8a35b2", "#35a4b2", "#b23584"];
  const distances: Chart = {
    title: "edge distances vs r",
    series: [...vm.edgeDistSeries.entries()].map(([key, buf], idx) => ({
      label: key,
      color: palette[idx % palette.length],
      points: buf.values(),
    })),
    hline: vm.scenario ? { value: vm.scenario.r, label: "r" } : undefined,
  };
  return [energy, distances];
}

export function chartBounds(chart: Chart): { t0: number; t1: number; y1: number } {
  let t0 = Infinity;
  let t1 = -Infinity;
  let y1 = chart.hline ? chart.hline.value : 0;
  for (const s of chart.series) {
    for (const p of s.points) {
      t0 = Math.min(t0, p.t);
      t1 = Math.max(t1, p.t);
      y1 = Math.max(y1, p.value);
    }
  }
  if (!Number.isFinite(t0)) return { t0: 0, t1: 1, y1: 1 };
  return { t0, t1: t1 > t0 ? t1 : t0 + 1, y1: y1 > 0 ? y1 : 1 };
}

export function drawChart(
  ctx: Canvas2D,
  chart: Chart,
  x: number,
  y: number,
  w: number,
  h: number,
): void {
  const { t0, t1, y1 } = chartBounds(chart);
  const sx = (t: number) => x + ((t - t0) / (t1 - t0)) * w;
  const sy = (v: number) => y + h - (v / (y1 * 1.05)) * h;

  ctx.strokeStyle = "#555";
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.moveTo(x, y);
  ctx.lineTo(x, y + h);
  ctx.lineTo(x + w, y + h);
  ctx.stroke();
  ctx.fillStyle = "#bbb";
  ctx.font = "12px sans-serif";
  ctx.fillText(chart.title, x + 6, y + 14);

  if (chart.hline) {
    ctx.strokeStyle = "#e05555";
    ctx.beginPath();
    ctx.moveTo(x, sy(chart.hline.value));
    ctx.lineTo(x + w, sy(chart.hline.value));
    ctx.stroke();
    ctx.fillText(chart.hline.label, x + w - 18, sy(chart.hline.value) - 4);
  }

  for (const series of chart.series) {
    const pts = series.points;
    if (pts.length === 0) continue;
    ctx.strokeStyle = series.color;
    ctx.lineWidth = series.dashed ? 1 : 2;
    ctx.beginPath();
    ctx.moveTo(sx(pts[0].t), sy(pts[0].value));
    for (let k = 1; k < pts.length; k++) {
      ctx.lineTo(sx(pts[k].t), sy(pts[k].value));
    }
    ctx.stroke();
  }
}
