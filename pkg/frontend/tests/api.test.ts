import { afterEach, describe, expect, it, vi } from "vitest";
import { ApiClient, ApiError, StaleRevisionError } from "../src/api";

function mockFetch(status: number, body: unknown) {
  const impl = vi.fn(async () => ({
    ok: status >= 200 && status < 300,
    status,
    json: async () => body,
  }));
  vi.stubGlobal("fetch", impl);
  return impl;
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("ApiClient", () => {
  it("fetches risk with revision", async () => {
    const impl = mockFetch(200, { revision: 3, report: { perAsset: {} } });
    const risk = await new ApiClient("http://x").getRisk();
    expect(impl).toHaveBeenCalledWith("http://x/risk");
    expect(risk.revision).toBe(3);
  });

  it("posts events with conditional revision", async () => {
    const impl = mockFetch(200, { revision: 1, eventIds: [1], report: {} });
    const events = [{ kind: "SensorAlert" as const, subjectId: "s" }];
    await new ApiClient().commitEvents(events, 0);
    const [url, init] = impl.mock.calls[0] as unknown as [string, RequestInit];
    expect(url).toBe("/events");
    expect(init.method).toBe("POST");
    expect(JSON.parse(init.body as string)).toEqual({ events, ifRevision: 0 });
  });

  it("omits ifRevision when not supplied", async () => {
    const impl = mockFetch(200, { revision: 1, eventIds: [1], report: {} });
    await new ApiClient().commitEvents([{ kind: "SensorSilent", subjectId: "s" }]);
    const [, init] = impl.mock.calls[0] as unknown as [string, RequestInit];
    expect(JSON.parse(init.body as string)).not.toHaveProperty("ifRevision");
  });

  it("maps 409 to StaleRevisionError with the server revision", async () => {
    mockFetch(409, { error: "stale revision", revision: 7 });
    const err = await new ApiClient().commitEvents([{ kind: "SensorAlert", subjectId: "s" }], 2)
      .then(() => null, (e) => e);
    expect(err).toBeInstanceOf(StaleRevisionError);
    expect((err as StaleRevisionError).revision).toBe(7);
  });

  it("surfaces the failing subject id from 404 errors", async () => {
    mockFetch(404, { error: "unknown sensor 'bogus'" });
    const err = await new ApiClient().commitEvents([{ kind: "SensorAlert", subjectId: "bogus" }])
      .then(() => null, (e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(404);
    expect((err as ApiError).message).toContain("bogus");
  });

  it("what-if posts to /whatif", async () => {
    const impl = mockFetch(200, { revision: 1, report: {}, committed: false });
    await new ApiClient().whatIf([{ kind: "HostHealthy", subjectId: "A" }]);
    expect((impl.mock.calls[0] as unknown as [string])[0]).toBe("/whatif");
  });

  it("retract issues DELETE on the event id", async () => {
    const impl = mockFetch(200, { revision: 2, report: {} });
    await new ApiClient().retractEvent(12);
    const [url, init] = impl.mock.calls[0] as unknown as [string, RequestInit];
    expect(url).toBe("/events/12");
    expect(init.method).toBe("DELETE");
  });

  it("explain encodes the source", async () => {
    const impl = mockFetch(200, { revision: 0, source: "a b", assets: {} });
    await new ApiClient().explain("a b");
    expect((impl.mock.calls[0] as unknown as [string])[0]).toBe("/bats/a%20b/explain");
  });
});
