/** Thin typed client for the arena HTTP+JSON API. */

import type { LeaderboardRow, MatchView } from "./types.js";

export type FetchLike = (
  input: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ ok: boolean; status: number; json(): Promise<unknown> }>;

export class ApiError extends Error {
  constructor(
    message: string,
    public readonly status: number,
  ) {
    super(message);
  }
}

export class ArenaClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(path: string, init?: Parameters<FetchLike>[1]): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path, init);
    if (!resp.ok) {
      let detail = `HTTP ${resp.status}`;
      try {
        const body = (await resp.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        // keep the status-only message
      }
      throw new ApiError(detail, resp.status);
    }
    return (await resp.json()) as T;
  }

  fetchMatch(): Promise<MatchView> {
    return this.request<MatchView>("/api/match");
  }

  submitVote(matchId: string, wireVote: string): Promise<{ recorded: boolean }> {
    return this.request<{ recorded: boolean }>("/api/vote", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ match_id: matchId, vote: wireVote }),
    });
  }

  fetchLeaderboard(): Promise<LeaderboardRow[]> {
    return this.request<LeaderboardRow[]>("/api/leaderboard");
  }

  health(): Promise<{ status: string; events: number }> {
    return this.request<{ status: string; events: number }>("/api/health");
  }
}
