import type {
  CommitResponse,
  CommittedEvent,
  EventInput,
  ExplainResponse,
  ModelDoc,
  RiskResponse,
  WhatIfResponse,
} from "./types";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class StaleRevisionError extends ApiError {
  constructor(readonly revision: number) {
    super(409, `stale revision; server is at ${revision}`);
    this.name = "StaleRevisionError";
  }
}

async function parse<T>(response: Response): Promise<T> {
  const body = await response.json().catch(() => ({}));
  if (response.status === 409) {
    throw new StaleRevisionError((body as { revision?: number }).revision ?? -1);
  }
  if (!response.ok) {
    const message = (body as { error?: string }).error ?? `HTTP ${response.status}`;
    throw new ApiError(response.status, message);
  }
  return body as T;
}

/**
 * Typed client for the risk service.  All state shown in the console comes
 * through these calls; the client never computes probabilities itself.
 */
export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  getModel(): Promise<ModelDoc> {
    return fetch(this.url("/model")).then((r) => parse<ModelDoc>(r));
  }

  getRisk(): Promise<RiskResponse> {
    return fetch(this.url("/risk")).then((r) => parse<RiskResponse>(r));
  }

  getEvents(): Promise<{ revision: number; events: CommittedEvent[] }> {
    return fetch(this.url("/events")).then((r) => parse(r));
  }

  /** Commit events; pass the revision they were decided at to detect races. */
  commitEvents(events: EventInput[], ifRevision?: number): Promise<CommitResponse> {
    return fetch(this.url("/events"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(ifRevision === undefined ? { events } : { events, ifRevision }),
    }).then((r) => parse<CommitResponse>(r));
  }

  /** Evaluate events against a snapshot; the committed state is untouched. */
  whatIf(events: EventInput[]): Promise<WhatIfResponse> {
    return fetch(this.url("/whatif"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ events }),
    }).then((r) => parse<WhatIfResponse>(r));
  }

  retractEvent(id: number): Promise<RiskResponse> {
    return fetch(this.url(`/events/${id}`), { method: "DELETE" }).then((r) =>
      parse<RiskResponse>(r),
    );
  }

  explain(source: string): Promise<ExplainResponse> {
    return fetch(this.url(`/bats/${encodeURIComponent(source)}/explain`)).then((r) =>
      parse<ExplainResponse>(r),
    );
  }
}
