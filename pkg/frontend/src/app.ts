/** Arena voting screen: one match at a time, acknowledgment-gated voting. */

import { ApiError, ArenaClient } from "./api.js";
import { renderMarkdown } from "./markdown.js";
import { DEFAULT_PRINCIPLES } from "./principles.js";
import {
  AppConfig,
  DEFAULT_CONFIG,
  MatchView,
  VoteChoice,
  WIRE_VOTE,
} from "./types.js";

type Phase = "loading" | "ready" | "submitting" | "voted" | "error";

const VOTE_LABELS: Record<VoteChoice, string> = {
  A_BETTER: "A is better",
  B_BETTER: "B is better",
  TIE: "Tie",
  BOTH_BAD: "Both are bad",
  SKIP: "Skip",
};

function el(
  tag: string,
  attrs: Record<string, string> = {},
  html = "",
): HTMLElement {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (html) node.innerHTML = html;
  return node;
}

export class ArenaApp {
  private phase: Phase = "loading";
  private match: MatchView | null = null;
  /** Matches this client has had a vote acknowledged (or rejected as
   * duplicate) for; a second vote is never sent for these. */
  private readonly closed = new Set<string>();

  constructor(
    private readonly root: HTMLElement,
    private readonly client: ArenaClient,
    private readonly config: AppConfig = DEFAULT_CONFIG,
  ) {}

  get currentPhase(): Phase {
    return this.phase;
  }

  async start(): Promise<void> {
    await Promise.all([this.loadMatch(), this.refreshLeaderboard()]);
  }

  async loadMatch(): Promise<void> {
    this.phase = "loading";
    this.render("Fetching a new round…");
    try {
      this.match = await this.client.fetchMatch();
      this.phase = "ready";
      this.render("Vote for the better answer.");
    } catch (err) {
      this.phase = "error";
      this.match = null;
      this.render(`Could not fetch a match: ${message(err)}`);
    }
  }

  async vote(choice: VoteChoice): Promise<void> {
    if (this.phase !== "ready" || !this.match) return; // one in-flight vote
    const matchId = this.match.match_id;
    if (this.closed.has(matchId)) return; // never double-vote a match
    this.phase = "submitting";
    this.render("Submitting vote…");
    try {
      await this.client.submitVote(matchId, WIRE_VOTE[choice]);
      this.closed.add(matchId);
      this.phase = "voted";
      this.render('Vote recorded. Click "New Round" to get a new question.');
      await this.refreshLeaderboard();
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // someone already voted this match: note it and auto-advance
        this.closed.add(matchId);
        this.render("This match was already voted on; fetching a new round.");
        await this.loadMatch();
        await this.refreshLeaderboard();
      } else {
        // network failure: nothing acknowledged, allow a retry
        this.phase = "ready";
        this.render(`Vote not recorded (${message(err)}); try again.`);
      }
    }
  }

  async refreshLeaderboard(): Promise<void> {
    const table = this.root.querySelector("#leaderboard");
    if (!table) return;
    try {
      const rows = await this.client.fetchLeaderboard();
      const body = rows
        .map(
          (r) =>
            `<tr><td>${r.method}</td><td>${r.mu.toFixed(2)}</td>` +
            `<td>${r.sigma.toFixed(2)}</td>` +
            `<td>${r.win_rate == null ? "–" : r.win_rate.toFixed(1) + "%"}</td>` +
            `<td>${r.matches}</td></tr>`,
        )
        .join("");
      table.innerHTML =
        "<tr><th>Model</th><th>Rating</th><th>Uncertainty</th>" +
        "<th>Win rate</th><th>Matches</th></tr>" + body;
    } catch {
      table.innerHTML = "<tr><td>leaderboard unavailable</td></tr>";
    }
  }

  private render(status: string): void {
    this.root.innerHTML = "";
    const principles =
      this.match?.principles_text && this.match.principles_text.trim()
        ? this.match.principles_text
        : DEFAULT_PRINCIPLES;
    this.root.appendChild(
      el("section", { id: "principles" }, renderMarkdown(principles)),
    );

    if (this.match) {
      this.root.appendChild(
        el("section", { id: "instruction" }, renderMarkdown(this.match.instruction)),
      );
      const panels = el("section", { id: "responses" });
      for (const [id, label, text] of [
        ["response-a", "Answer A — [MASK]", this.match.response_a],
        ["response-b", "Answer B — [MASK]", this.match.response_b],
      ] as const) {
        const panel = el("article", { id, class: "response" });
        panel.appendChild(el("h3", {}, label));
        panel.appendChild(el("div", { class: "body" }, renderMarkdown(text)));
        panels.appendChild(panel);
      }
      this.root.appendChild(panels);

      const controls = el("section", { id: "controls" });
      for (const choice of Object.keys(VOTE_LABELS) as VoteChoice[]) {
        const button = el("button", { "data-choice": choice }, VOTE_LABELS[choice]);
        if (this.phase !== "ready") button.setAttribute("disabled", "");
        button.addEventListener("click", () => void this.vote(choice));
        controls.appendChild(button);
      }
      this.root.appendChild(controls);
    }

    const advance = el("button", { id: "new-round" }, "New Round");
    if (this.phase === "submitting" || this.phase === "loading") {
      advance.setAttribute("disabled", "");
    }
    advance.addEventListener("click", () => void this.loadMatch());
    this.root.appendChild(advance);

    if (this.phase === "error") {
      const retry = el("button", { id: "retry" }, "Retry");
      retry.addEventListener("click", () => void this.loadMatch());
      this.root.appendChild(retry);
    }

    this.root.appendChild(el("p", { id: "status" }, status));
    this.root.appendChild(el("table", { id: "leaderboard" }));
  }
}

function message(err: unknown): string {
  return err instanceof Error ? err.message : String(err);
}
