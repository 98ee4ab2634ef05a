/** Wire and view types for the rating arena API. */

/** Mirror of GET /api/match: anonymized, no method names anywhere. */
export interface MatchView {
  match_id: string;
  instruction: string;
  response_a: string;
  response_b: string;
  principles_text?: string;
}

/** The five controls the rater can press for a match. */
export type VoteChoice = "A_BETTER" | "B_BETTER" | "TIE" | "BOTH_BAD" | "SKIP";

/** Wire value sent in the POST /api/vote body for each choice. */
export const WIRE_VOTE: Record<VoteChoice, string> = {
  A_BETTER: "A",
  B_BETTER: "B",
  TIE: "TIE",
  BOTH_BAD: "BOTH_BAD",
  SKIP: "SKIP",
};

export interface LeaderboardRow {
  method: string;
  mu: number;
  sigma: number;
  win_rate: number | null;
  matches: number;
}

export interface AppConfig {
  /** Post-vote reveal of method names; off by default and the server never
   * sends names in match payloads, so the DOM stays anonymized. */
  revealAfterVote: boolean;
}

export const DEFAULT_CONFIG: AppConfig = { revealAfterVote: false };
