// Wire protocol of the teleop service: UTF-8 JSON text messages over /ws.
// Shapes mirror the server exactly; parse functions validate before use so
// the rest of the console never touches untyped data.

export interface RobotFrame {
  x: [number, number];
  v: [number, number];
  K: number;
}

export interface EdgeFrame {
  i: number;
  j: number;
  dist: number;
  stress: number;
}

export interface StateFrame {
  type: "frame";
  seq: number;
  t: number;
  paused: boolean;
  broken: boolean;
  robots: RobotFrame[];
  edges: EdgeFrame[];
  f: [number, number];
  V: number;
  V_p: number;
}

export interface ScenarioSummary {
  name: string;
  hash: string;
  n_robots: number;
  edges: [number, number][];
  kinds: string[];
  r: number;
  epsilon: number;
  f_bar: number;
  dt: number;
  rate_hz: number;
  psi_max: number;
  design: { rho: number; Gamma: number; [key: string]: unknown };
}

export interface HelloMessage {
  type: "hello";
  client_id: number;
  scenario: ScenarioSummary;
}

export interface ForceAck {
  type: "force_ack";
  fx: number;
  fy: number;
  seq: number;
}

export interface StatusMessage {
  type: "status";
  action: string;
  paused: boolean;
  broken: boolean;
  t: number;
}

export interface ErrorMessage {
  type: "error";
  message: string;
}

export type ServerMessage =
  | StateFrame
  | HelloMessage
  | ForceAck
  | StatusMessage
  | ErrorMessage;

export interface ForceCommand {
  type: "force";
  fx: number;
  fy: number;
  seq: number;
}

export type ControlAction = "pause" | "resume" | "reset";

export interface ControlCommand {
  type: "control";
  action: ControlAction;
}

function isPair(v: unknown): v is [number, number] {
  return (
    Array.isArray(v) &&
    v.length === 2 &&
    typeof v[0] === "number" &&
    typeof v[1] === "number"
  );
}

export class ProtocolError extends Error {}

export function parseServerMessage(raw: string): ServerMessage {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    throw new ProtocolError(`not JSON: ${raw.slice(0, 80)}`);
  }
  if (typeof data !== "object" || data === null || !("type" in data)) {
    throw new ProtocolError("message without a type field");
  }
  const msg = data as Record<string, unknown>;
  switch (msg.type) {
    case "frame": {
      if (
        typeof msg.t !== "number" ||
        typeof msg.seq !== "number" ||
        !Array.isArray(msg.robots) ||
        !Array.isArray(msg.edges) ||
        !isPair(msg.f) ||
        typeof msg.V !== "number" ||
        typeof msg.V_p !== "number"
      ) {
        throw new ProtocolError("malformed frame");
      }
      for (const r of msg.robots as unknown[]) {
        const robot = r as Record<string, unknown>;
        if (!isPair(robot.x) || !isPair(robot.v) || typeof robot.K !== "number") {
          throw new ProtocolError("malformed robot entry");
        }
      }
      for (const e of msg.edges as unknown[]) {
        const edge = e as Record<string, unknown>;
        if (
          typeof edge.i !== "number" ||
          typeof edge.j !== "number" ||
          typeof edge.dist !== "number" ||
          typeof edge.stress !== "number"
        ) {
          throw new ProtocolError("malformed edge entry");
        }
      }
      return msg as unknown as StateFrame;
    }
    case "hello":
      if (typeof msg.scenario !== "object" || msg.scenario === null) {
        throw new ProtocolError("hello without scenario");
      }
      return msg as unknown as HelloMessage;
    case "force_ack":
      if (typeof msg.fx !== "number" || typeof msg.fy !== "number") {
        throw new ProtocolError("malformed force_ack");
      }
      return msg as unknown as ForceAck;
    case "status":
      return msg as unknown as StatusMessage;
    case "error":
      return msg as unknown as ErrorMessage;
    default:
      throw new ProtocolError(`unknown message type ${String(msg.type)}`);
  }
}

export function encodeForce(fx: number, fy: number, seq: number): string {
  return JSON.stringify({ type: "force", fx, fy, seq } satisfies ForceCommand);
}

export function encodeControl(action: ControlAction): string {
  return JSON.stringify({ type: "control", action } satisfies ControlCommand);
}
