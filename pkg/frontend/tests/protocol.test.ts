import { describe, expect, it } from "vitest";

import {
  encodeControl,
  encodeForce,
  parseServerMessage,
  ProtocolError,
} from "../src/protocol.js";
import { makeFrame, makeHello } from "./helpers.js";

describe("parseServerMessage", () => {
  it("round-trips a frame", () => {
    const frame = makeFrame(7, 0.233);
    const parsed = parseServerMessage(JSON.stringify(frame));
    expect(parsed).toEqual(frame);
  });

  it("round-trips hello/ack/status/error", () => {
    const hello = makeHello();
    expect(parseServerMessage(JSON.stringify(hello))).toEqual(hello);
    const ack = { type: "force_ack", fx: 0.5, fy: -0.25, seq: 3 };
    expect(parseServerMessage(JSON.stringify(ack))).toEqual(ack);
    const status = { type: "status", action: "pause", paused: true, broken: false, t: 1.5 };
    expect(parseServerMessage(JSON.stringify(status))).toEqual(status);
    const error = { type: "error", message: "nope" };
    expect(parseServerMessage(JSON.stringify(error))).toEqual(error);
  });

  it("rejects malformed payloads", () => {
    expect(() => parseServerMessage("not json")).toThrow(ProtocolError);
    expect(() => parseServerMessage("{}")).toThrow(ProtocolError);
    expect(() => parseServerMessage('{"type":"mystery"}')).toThrow(ProtocolError);
    const bad = makeFrame(1, 0) as unknown as Record<string, unknown>;
    bad.f = [1];
    expect(() => parseServerMessage(JSON.stringify(bad))).toThrow(ProtocolError);
    const badRobot = makeFrame(1, 0);
    (badRobot.robots[0] as unknown as Record<string, unknown>).K = "big";
    expect(() => parseServerMessage(JSON.stringify(badRobot))).toThrow(ProtocolError);
  });

  it("encodes commands in the server's wire format", () => {
    expect(JSON.parse(encodeForce(0.25, -0.5, 9))).toEqual({
      type: "force",
      fx: 0.25,
      fy: -0.5,
      seq: 9,
    });
    expect(JSON.parse(encodeControl("reset"))).toEqual({ type: "control", action: "reset" });
  });
});
