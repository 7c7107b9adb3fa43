// 2D canvas scene: robots at their positions, tree edges colored by link
// stress (green -> red, saturating at 1), communication-radius circles, and
// the informed slave visually distinct. The context is typed down to the
// calls used so tests can substitute a recording fake.

import type { StateFrame } from "./protocol.js";
import type { ViewModel } from "./viewmodel.js";

export interface Canvas2D {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  stroke(): void;
  fill(): void;
  fillText(text: string, x: number, y: number): void;
  strokeStyle: string;
  fillStyle: string;
  lineWidth: number;
  font: string;
}

/** Green to red ramp on stress in [0, 1]; input saturates at 1. */
export function stressColor(stress: number): string {
  const s = Math.max(0, Math.min(stress, 1));
  const hue = Math.round(120 * (1 - s)); // 120 = green, 0 = red
  return `hsl(${hue}, 85%, 45%)`;
}

export interface Viewport {
  scale: number;
  offsetX: number;
  offsetY: number;
}

/** Fit the swarm plus one communication radius into the canvas. */
export function fitViewport(frame: StateFrame, r: number, w: number, h: number): Viewport {
  let minX = Infinity;
  let maxX = -Infinity;
  let minY = Infinity;
  let maxY = -Infinity;
  for (const robot of frame.robots) {
    minX = Math.min(minX, robot.x[0]);
    maxX = Math.max(maxX, robot.x[0]);
    minY = Math.min(minY, robot.x[1]);
    maxY = Math.max(maxY, robot.x[1]);
  }
  const spanX = maxX - minX + 2 * r;
  const spanY = maxY - minY + 2 * r;
  const scale = 0.9 * Math.min(w / spanX, h / spanY);
  return {
    scale,
    offsetX: w / 2 - scale * (minX + maxX) / 2,
    offsetY: h / 2 + scale * (minY + maxY) / 2,
  };
}

export function toScreen(vp: Viewport, x: number, y: number): [number, number] {
  return [vp.offsetX + vp.scale * x, vp.offsetY - vp.scale * y];
}

export function renderScene(ctx: Canvas2D, w: number, h: number, vm: ViewModel): void {
  ctx.clearRect(0, 0, w, h);
  const frame = vm.latest;
  if (!frame || !vm.scenario) {
    ctx.fillStyle = "#888";
    ctx.font = "14px sans-serif";
    ctx.fillText(vm.connection === "closed" ? "disconnected" : "waiting for frames...", 16, 24);
    return;
  }
  const r = vm.scenario.r;
  const vp = fitViewport(frame, r, w, h);

  // communication radius around every robot (neighbours-of-record live inside)
  ctx.strokeStyle = "rgba(110, 140, 200, 0.25)";
  ctx.lineWidth = 1;
  for (const robot of frame.robots) {
    const [cx, cy] = toScreen(vp, robot.x[0], robot.x[1]);
    ctx.beginPath();
    ctx.arc(cx, cy, vp.scale * r, 0, 2 * Math.PI);
    ctx.stroke();
  }

  // tree edges, stress-colored
  for (const edge of frame.edges) {
    const a = frame.robots[edge.i - 1];
    const b = frame.robots[edge.j - 1];
    const [ax, ay] = toScreen(vp, a.x[0], a.x[1]);
    const [bx, by] = toScreen(vp, b.x[0], b.x[1]);
    ctx.strokeStyle = stressColor(edge.stress);
    ctx.lineWidth = edge.stress >= 0.9 ? 4 : 2;
    ctx.beginPath();
    ctx.moveTo(ax, ay);
    ctx.lineTo(bx, by);
    ctx.stroke();
  }

  // robots; robot 1 (informed slave) is larger and ringed
  frame.robots.forEach((robot, idx) => {
    const [cx, cy] = toScreen(vp, robot.x[0], robot.x[1]);
    ctx.fillStyle = idx === 0 ? "#f2a33c" : "#3c78f2";
    ctx.beginPath();
    ctx.arc(cx, cy, idx === 0 ? 9 : 6, 0, 2 * Math.PI);
    ctx.fill();
    if (idx === 0) {
      ctx.strokeStyle = "#f2a33c";
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.arc(cx, cy, 14, 0, 2 * Math.PI);
      ctx.stroke();
    }
    ctx.fillStyle = "#ddd";
    ctx.font = "11px sans-serif";
    ctx.fillText(String(idx + 1), cx + 10, cy - 10);
  });

  // commanded force arrow from the informed slave
  const { fx, fy } = vm.commanded;
  if (fx !== 0 || fy !== 0) {
    const lead = frame.robots[0];
    const [cx, cy] = toScreen(vp, lead.x[0], lead.x[1]);
    const fBar = vm.scenario.f_bar || 1;
    const len = (Math.hypot(fx, fy) / fBar) * 60;
    const ux = fx / Math.hypot(fx, fy);
    const uy = fy / Math.hypot(fx, fy);
    ctx.strokeStyle = "#eee";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(cx, cy);
    ctx.lineTo(cx + ux * len, cy - uy * len);
    ctx.stroke();
  }
}
