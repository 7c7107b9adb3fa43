import type { HelloMessage, StateFrame } from "../src/protocol.js";

export function makeHello(fBar = 1.0): HelloMessage {
  return {
    type: "hello",
    client_id: 1,
    scenario: {
      name: "test",
      hash: "deadbeef",
      n_robots: 3,
      edges: [
        [1, 2],
        [2, 3],
      ],
      kinds: ["point-mass", "point-mass", "point-mass"],
      r: 1.0,
      epsilon: 0.2,
      f_bar: fBar,
      dt: 0.001,
      rate_hz: 30,
      psi_max: 10,
      design: { rho: 0.5, Gamma: 1.0 },
    },
  };
}

export function makeFrame(seq: number, t: number, overrides: Partial<StateFrame> = {}): StateFrame {
  return {
    type: "frame",
    seq,
    t,
    paused: false,
    broken: false,
    robots: [
      { x: [0, 0], v: [0, 0], K: 0.5 },
      { x: [0.3, 0], v: [0, 0], K: 0.4 },
      { x: [0.6, 0], v: [0, 0], K: 0.4 },
    ],
    edges: [
      { i: 1, j: 2, dist: 0.3, stress: 0.1 },
      { i: 2, j: 3, dist: 0.3, stress: 0.1 },
    ],
    f: [0, 0],
    V: 1.0,
    V_p: 0.5,
    ...overrides,
  };
}
