import { describe, expect, it } from "vitest";
import {
  clearTray,
  computeDeltas,
  describeEvent,
  emptyTray,
  hostEvent,
  sensorEvent,
  stage,
  unstage,
} from "../src/state";
import type { RiskReportDoc, TagStep } from "../src/types";

const step: TagStep = {
  source: "internet",
  target: "A",
  type: "RemoteExploit",
  conditionP: 0.8,
  sensors: ["ids-A"],
};

function report(perAsset: Record<string, number>): RiskReportDoc {
  return { formatVersion: 1, perAsset, ranking: Object.keys(perAsset), riskLevel: {}, bestPath: {} };
}

describe("event builders", () => {
  it("sensor events are step scoped", () => {
    expect(sensorEvent(step, "alert")).toEqual({
      kind: "SensorAlert",
      subjectId: "ids-A",
      source: "internet",
      target: "A",
    });
    expect(sensorEvent(step, "silent").kind).toBe("SensorSilent");
  });

  it("confidence 1.0 stays a hard state", () => {
    expect(sensorEvent(step, "alert", 1.0).confidence).toBeUndefined();
    expect(sensorEvent(step, "alert", 0.8).confidence).toBe(0.8);
    expect(hostEvent("A", "compromised", 1.0).confidence).toBeUndefined();
    expect(hostEvent("A", "healthy", 0.6)).toEqual({
      kind: "HostHealthy",
      subjectId: "A",
      confidence: 0.6,
    });
  });

  it("rejects steps without sensors", () => {
    expect(() => sensorEvent({ ...step, sensors: [] }, "alert")).toThrow(/no sensor/);
  });
});

describe("what-if tray", () => {
  it("stages, replaces per subject, removes and clears", () => {
    let tray = stage(emptyTray, sensorEvent(step, "alert"));
    expect(tray.items).toHaveLength(1);
    tray = stage(tray, sensorEvent(step, "silent"));
    expect(tray.items).toHaveLength(1);
    expect(tray.items[0].kind).toBe("SensorSilent");
    tray = stage(tray, hostEvent("B", "healthy"));
    expect(tray.items).toHaveLength(2);
    tray = unstage(tray, 0);
    expect(tray.items).toHaveLength(1);
    expect(clearTray().items).toHaveLength(0);
  });
});

describe("computeDeltas", () => {
  it("zero staged changes produce all-zero deltas", () => {
    const base = report({ A: 0.3, B: 0.1 });
    const deltas = computeDeltas(base, report({ A: 0.3, B: 0.1 }));
    expect(deltas.every((d) => d.delta === 0)).toBe(true);
  });

  it("reports signed per-host movement, sorted by host", () => {
    const deltas = computeDeltas(report({ B: 0.1, A: 0.3 }), report({ A: 0.5, B: 0.05 }));
    expect(deltas.map((d) => d.host)).toEqual(["A", "B"]);
    expect(deltas[0].delta).toBeCloseTo(0.2, 12);
    expect(deltas[1].delta).toBeCloseTo(-0.05, 12);
  });
});

describe("describeEvent", () => {
  it("labels scoped and host events", () => {
    expect(describeEvent(sensorEvent(step, "alert"))).toContain("ids-A");
    expect(describeEvent(sensorEvent(step, "alert"))).toContain("internet");
    expect(describeEvent(hostEvent("C", "compromised"))).toBe("C compromised");
  });
});
