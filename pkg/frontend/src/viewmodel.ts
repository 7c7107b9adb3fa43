// Console state: latest frame, connection status, bounded history buffers
// for the dashboards. Rendering reads from here and never mutates frames.

import type { HelloMessage, ScenarioSummary, StateFrame } from "./protocol.js";

export type ConnectionStatus = "connecting" | "connected" | "closed";

/** Fixed-capacity append-only window; old samples fall off the front. */
export class RingBuffer<T> {
  private buf: T[] = [];
  constructor(readonly capacity: number) {
    if (capacity < 1) throw new Error("capacity must be >= 1");
  }
  push(value: T): void {
    this.buf.push(value);
    if (this.buf.length > this.capacity) this.buf.shift();
  }
  values(): readonly T[] {
    return this.buf;
  }
  get length(): number {
    return this.buf.length;
  }
  last(): T | undefined {
    return this.buf[this.buf.length - 1];
  }
  clear(): void {
    this.buf = [];
  }
}

export interface SeriesPoint {
  t: number;
  value: number;
}

/** Stress shown in the UI saturates at 1 and carries an alarm flag. */
export interface StressSample {
  t: number;
  stress: number;
  alarm: boolean;
}

export const ALARM_STRESS = 0.9;

// 30 s of history at the 30 Hz publish rate
const WINDOW_SAMPLES = 900;

export class ViewModel {
  latest: StateFrame | null = null;
  scenario: ScenarioSummary | null = null;
  connection: ConnectionStatus = "connecting";
  commanded: { fx: number; fy: number } = { fx: 0, fy: 0 };

  readonly vSeries = new RingBuffer<SeriesPoint>(WINDOW_SAMPLES);
  readonly vpSeries = new RingBuffer<SeriesPoint>(WINDOW_SAMPLES);
  readonly envelopeSeries = new RingBuffer<SeriesPoint>(WINDOW_SAMPLES);
  readonly stressHistory = new Map<string, RingBuffer<StressSample>>();
  readonly edgeDistSeries = new Map<string, RingBuffer<SeriesPoint>>();

  private v0: number | null = null;
  private t0 = 0;
  private supChi = 0;
  private lastSeq = -1;
  droppedFrames = 0;

  applyHello(hello: HelloMessage): void {
    this.scenario = hello.scenario;
    this.connection = "connected";
  }

  /** Decay envelope exp(-rho (t-t0)) V(t0) + sup chi(|f|), tracked from the
   * first frame seen after connect/reset. */
  private envelopeAt(frame: StateFrame): number | null {
    if (this.scenario === null) return null;
    const rho = this.scenario.design.rho;
    const gamma = this.scenario.design.Gamma;
    if (this.v0 === null || frame.t < this.t0) {
      this.v0 = frame.V;
      this.t0 = frame.t;
      this.supChi = 0;
    }
    const fNorm = Math.hypot(frame.f[0], frame.f[1]);
    this.supChi = Math.max(this.supChi, (fNorm * fNorm) / (4 * rho * gamma));
    return Math.exp(-rho * (frame.t - this.t0)) * this.v0 + this.supChi;
  }

  applyFrame(frame: StateFrame): void {
    if (frame.seq <= this.lastSeq) {
      this.droppedFrames += 1;
      return; // out of order: ignore, never rewind
    }
    this.lastSeq = frame.seq;
    this.latest = frame;
    if (frame.paused) return; // charts freeze while paused

    this.vSeries.push({ t: frame.t, value: frame.V });
    this.vpSeries.push({ t: frame.t, value: frame.V_p });
    const env = this.envelopeAt(frame);
    if (env !== null) this.envelopeSeries.push({ t: frame.t, value: env });
    for (const edge of frame.edges) {
      const key = `${edge.i}-${edge.j}`;
      let stress = this.stressHistory.get(key);
      if (!stress) {
        stress = new RingBuffer<StressSample>(WINDOW_SAMPLES);
        this.stressHistory.set(key, stress);
      }
      const shown = Math.min(edge.stress, 1.0);
      stress.push({ t: frame.t, stress: shown, alarm: shown >= ALARM_STRESS });
      let dist = this.edgeDistSeries.get(key);
      if (!dist) {
        dist = new RingBuffer<SeriesPoint>(WINDOW_SAMPLES);
        this.edgeDistSeries.set(key, dist);
      }
      dist.push({ t: frame.t, value: edge.dist });
    }
  }

  setCommand(fx: number, fy: number): void {
    this.commanded = { fx, fy };
  }

  /** Reset clears chart history (new session epoch); sequence tracking is
   * kept so stale frames from before the reset are still rejected. */
  resetCharts(): void {
    this.vSeries.clear();
    this.vpSeries.clear();
    this.envelopeSeries.clear();
    this.stressHistory.clear();
    this.edgeDistSeries.clear();
    this.v0 = null;
    this.supChi = 0;
  }
}
