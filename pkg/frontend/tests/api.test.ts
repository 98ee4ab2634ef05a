import { describe, expect, it } from "vitest";

import { ApiError, ArenaClient, FetchLike } from "../src/api.js";

interface Call {
  url: string;
  init?: Parameters<FetchLike>[1];
}

function fakeFetch(
  responses: Array<{ status: number; body: unknown }>,
): { fetch: FetchLike; calls: Call[] } {
  const calls: Call[] = [];
  const fetch: FetchLike = async (url, init) => {
    calls.push({ url, init });
    const next = responses.shift();
    if (!next) throw new TypeError("fetch failed");
    return {
      ok: next.status < 400,
      status: next.status,
      json: async () => next.body,
    };
  };
  return { fetch, calls };
}

describe("ArenaClient", () => {
  it("fetches a match from /api/match", async () => {
    const match = {
      match_id: "m1",
      instruction: "q",
      response_a: "x",
      response_b: "y",
      principles_text: "p",
    };
    const { fetch, calls } = fakeFetch([{ status: 200, body: match }]);
    const client = new ArenaClient("http://arena", fetch);
    expect(await client.fetchMatch()).toEqual(match);
    expect(calls[0]?.url).toBe("http://arena/api/match");
    expect(calls[0]?.init).toBeUndefined();
  });

  it("posts votes with the wire body", async () => {
    const { fetch, calls } = fakeFetch([{ status: 200, body: { recorded: true } }]);
    const client = new ArenaClient("", fetch);
    await client.submitVote("m7", "BOTH_BAD");
    expect(calls[0]?.url).toBe("/api/vote");
    expect(calls[0]?.init?.method).toBe("POST");
    expect(JSON.parse(calls[0]?.init?.body ?? "")).toEqual({
      match_id: "m7",
      vote: "BOTH_BAD",
    });
  });

  it("surfaces the server detail and status on errors", async () => {
    const { fetch } = fakeFetch([
      { status: 409, body: { detail: "match m7 was already voted on" } },
    ]);
    const client = new ArenaClient("", fetch);
    const err = await client.submitVote("m7", "A").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(409);
    expect(err.message).toContain("already voted");
  });

  it("falls back to a status-only message on unparseable errors", async () => {
    const fetch: FetchLike = async () => ({
      ok: false,
      status: 502,
      json: async () => {
        throw new SyntaxError("not json");
      },
    });
    const client = new ArenaClient("", fetch);
    const err = await client.fetchLeaderboard().catch((e) => e);
    expect(err.message).toBe("HTTP 502");
  });

  it("propagates transport failures unchanged", async () => {
    const { fetch } = fakeFetch([]);
    const client = new ArenaClient("", fetch);
    await expect(client.fetchMatch()).rejects.toThrow("fetch failed");
  });
});
