/** Wire formats of the risk service. */

export type Band = "NotSignificant" | "Low" | "Medium" | "High";

export type EventKind = "SensorAlert" | "SensorSilent" | "HostCompromised" | "HostHealthy";

export interface EventInput {
  kind: EventKind;
  subjectId: string;
  confidence?: number;
  timestamp?: number | string;
  /** Pin a sensor observation to one attack step (both or neither). */
  source?: string;
  target?: string;
}

export interface CommittedEvent extends EventInput {
  id: number;
}

export interface RiskReportDoc {
  formatVersion: number;
  perAsset: Record<string, number>;
  ranking: string[];
  riskLevel: Record<string, Band>;
  bestPath: Record<string, string[]>;
}

export interface RiskResponse {
  revision: number;
  report: RiskReportDoc;
}

export interface TagStep {
  source: string;
  target: string;
  type: string;
  conditionP: number;
  sensors: string[];
}

export interface ModelDoc {
  revision: number;
  params: Record<string, number | boolean>;
  autoSilent: boolean;
  topology: {
    hosts: string[];
    subnets: { id: string; hosts: string[] }[];
    sourcePriors: Record<string, number>;
  };
  tag: {
    nodes: string[];
    steps: TagStep[];
  };
  batNodeCounts: Record<string, number>;
}

export interface ExplainHop {
  node: string;
  host?: string;
  step?: string;
  probability: number;
}

export interface ExplainResponse {
  revision: number;
  source: string;
  assets: Record<string, { probability: number; path: string[]; hops: ExplainHop[] }>;
}

export interface CommitResponse extends RiskResponse {
  eventIds: number[];
}

export interface WhatIfResponse extends RiskResponse {
  committed: false;
}
