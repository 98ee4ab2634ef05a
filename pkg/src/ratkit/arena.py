"""HTTP service for live pairwise human evaluation.

Responses are served anonymized (no method identifiers in the payload), votes
append to a durable JSONL event log, and the leaderboard is always recomputed
by replaying that log, so a restart plus replay reproduces it byte for byte.
"""

from __future__ import annotations

import itertools
import json
import os
import random
import threading
import time
import uuid
from dataclasses import dataclass
from typing import Optional

import pydantic

from .rating import MatchRecord, RatingParams, leaderboard, outcome_for_vote, win_rate

VOTE_CHOICES = ("A", "B", "TIE", "BOTH_BAD", "SKIP")

# Rater guidance displayed by the UI alongside every match.
PRINCIPLES_TEXT = """\
# Chatbot Arena : Benchmarking LLMs in the Wild
##Rules
- Refresh to obtain the question and its corresponding answers from two anonymous models.
- Vote for the better answer. And then click "New Round" to get a new question.
- If both answers are bad, vote for "Both are bad".
- If you want to skip, click "Skip".

## Principle
You can evaluate the performance of the model from the following aspects:
1. **Relevance**: Does it answer the question accurately?
2. **Accuracy**: Is it accurate? For example, a crafting table is made by combining 4 wooden planks, not 4 logs; a diamond axe requires 3 diamonds and 2 sticks to craft, not 3 sticks and 2 diamonds.
3. **Completeness**: Is it complete? For example, crafting a wooden pickaxe from logs requires first crafting wooden planks and then crafting sticks before finally being able to craft the pickaxe. The intermediate steps cannot be ignored.
4. **Readability**: Is it coherent?
5. **Executability**: Considering the characteristics of the game, is it executable?

## Vote now!"""


class ArenaError(Exception):
    pass


class UnknownMatchError(ArenaError):
    pass


class DuplicateVoteError(ArenaError):
    pass


@dataclass(frozen=True)
class OpenMatch:
    match_id: str
    task_id: str
    method_a: str
    method_b: str


class ArenaState:
    """Task pool + open matches + append-only event log.

    All mutation goes through a single lock; a vote is acknowledged only
    after its event line is flushed and fsynced to the log file.
    """

    def __init__(
        self,
        task_pool: dict[str, dict],
        log_path: str,
        seed: int = 0,
        params: RatingParams = RatingParams(),
        uncertainty_weighted: bool = False,
    ):
        # task_pool: task_id -> {"instruction": ..., "responses": {method: text}}
        self.task_pool = task_pool
        self.log_path = log_path
        self.rng = random.Random(seed)
        self.params = params
        self.uncertainty_weighted = uncertainty_weighted
        self.open_matches: dict[str, OpenMatch] = {}
        self.closed: set[str] = set()
        self.events: list[MatchRecord] = []
        self._seq = 0
        self._lock = threading.Lock()
        if os.path.exists(log_path):
            self._replay_log()

    def _replay_log(self) -> None:
        with open(self.log_path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                self.events.append(
                    MatchRecord(
                        match_id=rec["match_id"],
                        task_id=rec["task_id"],
                        method_a=rec["method_a"],
                        method_b=rec["method_b"],
                        raw_vote=rec["raw_vote"],
                        outcome=rec["outcome"],
                    )
                )
                self.closed.add(rec["match_id"])
                self._seq = max(self._seq, rec["seq"])

    @property
    def methods(self) -> list[str]:
        names: set[str] = set()
        for task in self.task_pool.values():
            names.update(task["responses"].keys())
        return sorted(names)

    def next_match(self) -> dict:
        """Pick a random task, a random unordered method pair, and a random
        side assignment; returns the anonymized payload."""
        with self._lock:
            candidates = [
                (tid, task)
                for tid, task in self.task_pool.items()
                if len(task["responses"]) >= 2
            ]
            if not candidates:
                raise ArenaError("task pool has no task with two or more method responses")
            task_id, task = candidates[self.rng.randrange(len(candidates))]
            pairs = sorted(
                itertools.combinations(sorted(task["responses"].keys()), 2)
            )
            if self.uncertainty_weighted:
                board = leaderboard(self.events, self.params, self.methods)
                weights = [
                    board[m1][0].sigma + board[m2][0].sigma for m1, m2 in pairs
                ]
                pair = self.rng.choices(pairs, weights=weights)[0]
            else:
                pair = pairs[self.rng.randrange(len(pairs))]
            method_a, method_b = pair if self.rng.random() < 0.5 else pair[::-1]
            match_id = uuid.UUID(int=self.rng.getrandbits(128), version=4).hex
            self.open_matches[match_id] = OpenMatch(match_id, task_id, method_a, method_b)
            return {
                "match_id": match_id,
                "instruction": task["instruction"],
                "response_a": task["responses"][method_a],
                "response_b": task["responses"][method_b],
                "principles_text": PRINCIPLES_TEXT,
            }

    def record_vote(self, match_id: str, raw_vote: str) -> Optional[MatchRecord]:
        """Close the match; non-SKIP votes durably append an event."""
        if raw_vote not in VOTE_CHOICES:
            raise ArenaError(f"unknown vote {raw_vote!r}")
        with self._lock:
            if match_id in self.closed:
                raise DuplicateVoteError(f"match {match_id} was already voted on")
            match = self.open_matches.pop(match_id, None)
            if match is None:
                raise UnknownMatchError(f"unknown match id {match_id}")
            self.closed.add(match_id)
            if raw_vote == "SKIP":
                return None
            record = MatchRecord(
                match_id=match.match_id,
                task_id=match.task_id,
                method_a=match.method_a,
                method_b=match.method_b,
                raw_vote=raw_vote,
                outcome=outcome_for_vote(raw_vote),
            )
            self._seq += 1
            line = json.dumps(
                {
                    "seq": self._seq,
                    "ts": time.time(),
                    "match_id": record.match_id,
                    "task_id": record.task_id,
                    "method_a": record.method_a,
                    "method_b": record.method_b,
                    "raw_vote": record.raw_vote,
                    "outcome": record.outcome,
                },
                sort_keys=True,
            )
            with open(self.log_path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self.events.append(record)
            return record

    def leaderboard_rows(self) -> list[dict]:
        with self._lock:
            events = list(self.events)
        board = leaderboard(events, self.params, self.methods)
        rows = []
        for method, (rating, count) in sorted(
            board.items(), key=lambda kv: (-kv[1][0].mu, kv[0])
        ):
            try:
                wr = round(win_rate(events, method), 2)
            except ValueError:
                wr = None
            rows.append(
                {
                    "method": method,
                    "mu": round(rating.mu, 6),
                    "sigma": round(rating.sigma, 6),
                    "win_rate": wr,
                    "matches": count,
                }
            )
        return rows


def load_task_pool(path: str) -> dict[str, dict]:
    """Load {task_id: {"instruction", "responses": {method: text}}} from JSON."""
    with open(path, "r", encoding="utf-8") as fh:
        pool = json.load(fh)
    for tid, task in pool.items():
        if "instruction" not in task or "responses" not in task:
            raise ArenaError(f"task {tid} missing instruction/responses")
    return pool


class VoteBody(pydantic.BaseModel):
    match_id: str
    vote: str


def create_app(state: ArenaState, static_dir: Optional[str] = None):
    """FastAPI app exposing the arena HTTP+JSON API.

    When static_dir is given, its contents (e.g. a built browser frontend)
    are served at the root path.
    """
    from fastapi import FastAPI, HTTPException

    app = FastAPI(title="rating arena")

    @app.get("/api/health")
    def health():
        return {"status": "ok", "events": len(state.events)}

    @app.get("/api/match")
    def get_match():
        try:
            return state.next_match()
        except ArenaError as exc:
            raise HTTPException(status_code=409, detail=str(exc))

    @app.post("/api/vote")
    def post_vote(body: VoteBody):
        try:
            record = state.record_vote(body.match_id, body.vote)
        except DuplicateVoteError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except UnknownMatchError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except ArenaError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"recorded": record is not None}

    @app.get("/api/leaderboard")
    def get_leaderboard():
        return state.leaderboard_rows()

    if static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="static")

    return app
