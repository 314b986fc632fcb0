import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError } from "../src/api";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("ApiClient", () => {
  it("builds the links query from the filter", async () => {
    const fetchMock = vi.fn().mockResolvedValue(
      jsonResponse({ total: 0, page: 2, page_size: 10, links: [] }),
    );
    vi.stubGlobal("fetch", fetchMock);
    const api = new ApiClient("http://svc");
    await api.fetchLinks({ band: "unsure", type: "req_src", page: 2, pageSize: 10 });
    const url = fetchMock.mock.calls[0][0] as string;
    expect(url).toBe("http://svc/api/links?type=req_src&band=unsure&page=2&page_size=10");
  });

  it("posts likert feedback as JSON", async () => {
    const fetchMock = vi.fn().mockResolvedValue(
      jsonResponse({
        source_id: "a", target_id: "b", probability: 0.8,
        band: "probably_linked", feedback_count: 1,
      }),
    );
    vi.stubGlobal("fetch", fetchMock);
    const api = new ApiClient("");
    const updated = await api.submitFeedback(
      { source_id: "a", target_id: "b" }, "strongly_agree", "dev");
    expect(updated.probability).toBe(0.8);
    const [url, init] = fetchMock.mock.calls[0] as [string, RequestInit];
    expect(url).toBe("/api/feedback");
    expect(JSON.parse(init.body as string)).toEqual({
      source_id: "a", target_id: "b", likert: "strongly_agree", reviewer: "dev",
    });
  });

  it("maps service errors onto ApiError with the payload code", async () => {
    vi.stubGlobal("fetch", vi.fn().mockResolvedValue(
      jsonResponse({ code: "unknown_pair", message: "no such pair" }, 404),
    ));
    const api = new ApiClient("");
    await expect(
      api.submitFeedback({ source_id: "x", target_id: "y" }, "agree", "dev"),
    ).rejects.toMatchObject({ status: 404, code: "unknown_pair" });
  });

  it("wraps network failures", async () => {
    vi.stubGlobal("fetch", vi.fn().mockRejectedValue(new TypeError("refused")));
    const api = new ApiClient("http://down");
    const err = await api.fetchRun().catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(0);
    expect((err as ApiError).code).toBe("network");
  });

  it("escapes artifact ids in the path", async () => {
    const fetchMock = vi.fn().mockResolvedValue(
      jsonResponse({ id: "dir/a.c", kind: "source_code", text: "x" }),
    );
    vi.stubGlobal("fetch", fetchMock);
    await new ApiClient("").fetchArtifact("dir/a.c");
    expect(fetchMock.mock.calls[0][0]).toBe("/api/artifacts/dir%2Fa.c");
  });
});
