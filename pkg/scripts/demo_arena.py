#!/usr/bin/env python3
"""Simulate arena voting and print the resulting leaderboard.

Seeds an arena with a small task pool, casts votes from a biased scripted
rater (prefers the longer answer, with occasional ties and skips), then
prints the per-method ratings.  Everything is deterministic for a given
--seed, and the event log lands in a temp directory unless --log is given.
"""

import argparse
import os
import random
import tempfile

from ratkit.arena import ArenaState
from ratkit.rating import export_leaderboard_csv

POOL = {
    "pickaxe": {
        "instruction": "How do I craft a wooden pickaxe from scratch?",
        "responses": {
            "draft-only": "Make a pickaxe from logs.",
            "one-retrieval": "Craft planks from logs, then craft the pickaxe.",
            "revised": (
                "Chop logs, craft planks, craft sticks, place a crafting "
                "table, then craft the pickaxe from 3 planks and 2 sticks."
            ),
        },
    },
    "ingots": {
        "instruction": "How do I get iron ingots?",
        "responses": {
            "draft-only": "Mine iron and use it.",
            "one-retrieval": "Mine iron ore, then smelt it in a furnace.",
            "revised": (
                "Craft a stone pickaxe, mine iron ore, craft a furnace from "
                "8 cobblestone, then smelt the ore into ingots with fuel."
            ),
        },
    },
}


def scripted_vote(rng: random.Random, payload: dict) -> str:
    roll = rng.random()
    if roll < 0.05:
        return "SKIP"
    if roll < 0.15:
        return "TIE"
    if roll < 0.20:
        return "BOTH_BAD"
    longer_is_a = len(payload["response_a"]) >= len(payload["response_b"])
    if rng.random() < 0.85:  # mostly prefers the more detailed answer
        return "A" if longer_is_a else "B"
    return "B" if longer_is_a else "A"


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--matches", type=int, default=200)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--log", help="event log path (default: temp file)")
    args = parser.parse_args()

    log_path = args.log or os.path.join(
        tempfile.mkdtemp(prefix="arena-demo-"), "events.jsonl"
    )
    state = ArenaState(POOL, log_path, seed=args.seed)
    rater = random.Random(args.seed + 1)
    for _ in range(args.matches):
        payload = state.next_match()
        state.record_vote(payload["match_id"], scripted_vote(rater, payload))

    print(f"{len(state.events)} recorded events -> {log_path}\n")
    print(export_leaderboard_csv(state.events, state.params, state.methods))


if __name__ == "__main__":
    main()
