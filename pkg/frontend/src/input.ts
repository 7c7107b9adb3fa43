// Drag-from-robot joystick: the drag vector maps linearly to a force on the
// informed slave, pre-clamped to the command bound before anything is sent
// (the server clamps again; the client never relies on that).

export interface DragState {
  dx: number;
  dy: number;
}

export class ForceInput {
  private seq = 0;
  constructor(
    readonly fBar: number,
    readonly maxDragPx: number = 120,
  ) {
    if (fBar < 0 || maxDragPx <= 0) throw new Error("bad input configuration");
  }

  nextSeq(): number {
    this.seq += 1;
    return this.seq;
  }

  get currentSeq(): number {
    return this.seq;
  }

  /** Force from a drag vector in pixels; norm saturates at fBar. */
  forceFromDrag(drag: DragState): { fx: number; fy: number } {
    const norm = Math.hypot(drag.dx, drag.dy);
    if (norm === 0) return { fx: 0, fy: 0 };
    const scale = Math.min(norm, this.maxDragPx) / this.maxDragPx;
    const mag = scale * this.fBar;
    return { fx: (drag.dx / norm) * mag, fy: (drag.dy / norm) * mag };
  }

  command(drag: DragState): { fx: number; fy: number; seq: number } {
    return { ...this.forceFromDrag(drag), seq: this.nextSeq() };
  }

  /** Pointer released: zero force, still sequence-numbered. */
  release(): { fx: number; fy: number; seq: number } {
    return { fx: 0, fy: 0, seq: this.nextSeq() };
  }
}
