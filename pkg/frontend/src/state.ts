import type { EventInput, RiskReportDoc, TagStep } from "./types";

/** Per-host change between the committed report and a hypothetical one. */
export interface Delta {
  host: string;
  from: number;
  to: number;
  delta: number;
}

export function computeDeltas(base: RiskReportDoc, hypothetical: RiskReportDoc): Delta[] {
  return Object.keys(base.perAsset)
    .sort()
    .map((host) => {
      const from = base.perAsset[host];
      const to = hypothetical.perAsset[host] ?? from;
      return { host, from, to, delta: to - from };
    });
}

/** A sensor observation pinned to one attack step. */
export function sensorEvent(
  step: TagStep,
  state: "alert" | "silent",
  confidence?: number,
): EventInput {
  if (step.sensors.length === 0) {
    throw new Error(`step ${step.source}->${step.target} has no sensor`);
  }
  return {
    kind: state === "alert" ? "SensorAlert" : "SensorSilent",
    subjectId: step.sensors[0],
    source: step.source,
    target: step.target,
    ...(confidence !== undefined && confidence < 1 ? { confidence } : {}),
  };
}

export function hostEvent(
  host: string,
  state: "compromised" | "healthy",
  confidence?: number,
): EventInput {
  return {
    kind: state === "compromised" ? "HostCompromised" : "HostHealthy",
    subjectId: host,
    ...(confidence !== undefined && confidence < 1 ? { confidence } : {}),
  };
}

/** Staged what-if edits; evaluation happens server-side only. */
export interface Tray {
  items: EventInput[];
}

export const emptyTray: Tray = { items: [] };

function sameSubject(a: EventInput, b: EventInput): boolean {
  return a.subjectId === b.subjectId && a.source === b.source && a.target === b.target;
}

/** Staging a new observation for a subject replaces the previous one. */
export function stage(tray: Tray, event: EventInput): Tray {
  return { items: [...tray.items.filter((e) => !sameSubject(e, event)), event] };
}

export function unstage(tray: Tray, index: number): Tray {
  return { items: tray.items.filter((_, i) => i !== index) };
}

export function clearTray(): Tray {
  return emptyTray;
}

/** Label used in the timeline and the tray. */
export function describeEvent(e: EventInput): string {
  const scope = e.source !== undefined ? ` on ${e.source}→${e.target}` : "";
  const conf = e.confidence !== undefined ? ` (confidence ${e.confidence})` : "";
  switch (e.kind) {
    case "SensorAlert":
      return `alert ${e.subjectId}${scope}${conf}`;
    case "SensorSilent":
      return `silence ${e.subjectId}${scope}${conf}`;
    case "HostCompromised":
      return `${e.subjectId} compromised${conf}`;
    case "HostHealthy":
      return `${e.subjectId} healthy${conf}`;
  }
}
