// Browser wiring: connect to the service, render the scene and dashboards,
// translate pointer drags on the informed slave into force commands.

import { ConsoleClient } from "./client.js";
import { buildCharts, drawChart } from "./dashboards.js";
import { ForceInput } from "./input.js";
import { fitViewport, renderScene, toScreen, type Canvas2D } from "./render.js";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

const scene = byId<HTMLCanvasElement>("scene");
const charts = byId<HTMLCanvasElement>("charts");
const status = byId<HTMLSpanElement>("status");
const sceneCtx = scene.getContext("2d") as unknown as Canvas2D;
const chartsCtx = charts.getContext("2d") as unknown as Canvas2D;

const wsUrl = `ws://${location.host}/ws`;
const client = new ConsoleClient(wsUrl);
client.connect();

let input: ForceInput | null = null;
client.onMessage((msg) => {
  if (msg.type === "hello") {
    input = new ForceInput(msg.scenario.f_bar);
    status.textContent = `connected: ${msg.scenario.name} (N=${msg.scenario.n_robots})`;
  } else if (msg.type === "error") {
    status.textContent = `server error: ${msg.message}`;
  }
});

let dragging = false;
let dragStart: { x: number; y: number } | null = null;
let lastSent = 0;

function informedSlaveScreenPos(): [number, number] | null {
  const frame = client.vm.latest;
  if (!frame || !client.vm.scenario) return null;
  const vp = fitViewport(frame, client.vm.scenario.r, scene.width, scene.height);
  const lead = frame.robots[0];
  return toScreen(vp, lead.x[0], lead.x[1]);
}

scene.addEventListener("pointerdown", (ev) => {
  const lead = informedSlaveScreenPos();
  if (!lead) return;
  const rect = scene.getBoundingClientRect();
  const px = ev.clientX - rect.left;
  const py = ev.clientY - rect.top;
  if (Math.hypot(px - lead[0], py - lead[1]) <= 24) {
    dragging = true;
    dragStart = { x: px, y: py };
    scene.setPointerCapture(ev.pointerId);
  }
});

scene.addEventListener("pointermove", (ev) => {
  if (!dragging || !dragStart || !input) return;
  const now = performance.now();
  if (now - lastSent < 50) return; // 20 Hz command rate is plenty
  lastSent = now;
  const rect = scene.getBoundingClientRect();
  const drag = {
    dx: ev.clientX - rect.left - dragStart.x,
    dy: -(ev.clientY - rect.top - dragStart.y), // screen y points down
  };
  const { fx, fy } = input.forceFromDrag(drag);
  client.sendForce(fx, fy);
});

scene.addEventListener("pointerup", () => {
  if (dragging) {
    dragging = false;
    dragStart = null;
    client.sendForce(0, 0);
  }
});

for (const action of ["pause", "resume", "reset"] as const) {
  byId<HTMLButtonElement>(`btn-${action}`).addEventListener("click", () => {
    client.sendControl(action);
  });
}

function tick(): void {
  renderScene(sceneCtx, scene.width, scene.height, client.vm);
  chartsCtx.clearRect(0, 0, charts.width, charts.height);
  const chartList = buildCharts(client.vm);
  const half = charts.height / 2;
  drawChart(chartsCtx, chartList[0], 40, 8, charts.width - 56, half - 24);
  drawChart(chartsCtx, chartList[1], 40, half + 8, charts.width - 56, half - 24);
  const frame = client.vm.latest;
  if (frame) {
    const state = frame.broken ? "LINK BROKEN" : frame.paused ? "paused" : "running";
    status.textContent = `${state} | t=${frame.t.toFixed(2)}s | V=${frame.V.toFixed(3)} | dropped=${client.vm.droppedFrames}`;
  } else if (client.vm.connection === "closed") {
    status.textContent = "disconnected, retrying...";
  }
  requestAnimationFrame(tick);
}
requestAnimationFrame(tick);
