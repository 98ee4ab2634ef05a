"""The four methods: DIRECT, zero-shot CoT, RAG-n, and causally revised
retrieval-augmented thoughts, plus the ablation modes.

Every run produces a RunTrace recording queries, retrieved sets, the exact
conversations sent, and backend call counts, so the loop structure (rounds,
causal ordering, retrieval counts) is auditable from the trace alone.
"""

from __future__ import annotations

import json
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from typing import Optional, Sequence

from . import prompts
from .backends import Backend, Conversation, DecodingParams
from .corpus import count_tokens
from .retrieval import (
    Query,
    RetrievedSet,
    VectorIndex,
    to_query,
    top_k,
)

METHODS = ("DIRECT", "COT", "RAG", "RAT")
RAT_MODES = ("causal", "non-causal")
QUERY_STRATEGIES = ("question-only", "full-cot", "stepwise")

TASK_KINDS = ("code", "math", "plan", "writing")

# Per-kind defaults: how queries are formed (code/math embed the draft
# directly; plan/writing ask the model for a search query) and whether a
# final synthesis completion follows the last revision.
DEFAULT_QUERY_MODE = {
    "code": "embed-draft",
    "math": "embed-draft",
    "plan": "llm-generated",
    "writing": "llm-generated",
}
DEFAULT_FINAL_SYNTHESIS = {
    "code": True,
    "math": False,
    "plan": False,
    "writing": False,
}

DEFAULT_CONTEXT_TOKEN_BUDGET = 6000

CONTEXT_SEPARATOR = "\n\n---\n\n"


class PipelineError(Exception):
    def __init__(self, message: str, round_index: Optional[int] = None, trace: Optional[dict] = None):
        super().__init__(message)
        self.round_index = round_index
        self.trace = trace


class NoThoughtsError(PipelineError):
    """The draft contained no parseable thought steps."""


@dataclass(frozen=True)
class TaskPrompt:
    task_id: str
    instruction: str
    kind: str

    def __post_init__(self):
        if not self.instruction:
            raise ValueError("instruction must be non-empty")
        if self.kind not in TASK_KINDS:
            raise ValueError(f"unknown task kind {self.kind!r}")


@dataclass(frozen=True)
class ThoughtChain:
    steps: tuple[str, ...]

    def __post_init__(self):
        if not self.steps:
            raise ValueError("thought chain must have at least one step")
        if any(not s for s in self.steps):
            raise ValueError("thought steps must be non-empty")

    def __len__(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class PipelineConfig:
    method: str = "RAT"
    rag_shots: int = 1
    rat_mode: str = "causal"
    query_strategy: str = "stepwise"
    k: int = 5
    decoding: DecodingParams = field(default_factory=DecodingParams)
    template_set: str = prompts.TEMPLATE_SET_ID
    query_mode: Optional[str] = None  # None -> per task kind default
    final_synthesis: Optional[bool] = None  # None -> per task kind default
    context_token_budget: int = DEFAULT_CONTEXT_TOKEN_BUDGET

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.rat_mode not in RAT_MODES:
            raise ValueError(f"unknown rat mode {self.rat_mode!r}")
        if self.query_strategy not in QUERY_STRATEGIES:
            raise ValueError(f"unknown query strategy {self.query_strategy!r}")
        if self.rag_shots < 1:
            raise ValueError("rag_shots must be >= 1")
        if self.k < 1:
            raise ValueError("k must be >= 1")

    def snapshot(self) -> dict:
        snap = asdict(self)
        snap["template_set_hash"] = prompts.template_set_hash()
        return snap


class RunTrace:
    """Auditable per-run transcript; serializes deterministically."""

    def __init__(self, task: TaskPrompt, config: PipelineConfig):
        self.task_id = task.task_id
        self.config = config.snapshot()
        self.draft: Optional[dict] = None
        self.rounds: list[dict] = []
        self.final_answer: Optional[str] = None
        self.completions = 0
        self.embeddings = 0
        self.retrievals = 0
        self.wall_time: Optional[float] = None

    def to_dict(self, include_wall_time: bool = True) -> dict:
        out = {
            "task_id": self.task_id,
            "config": self.config,
            "draft": self.draft,
            "rounds": self.rounds,
            "final_answer": self.final_answer,
            "counts": {
                "completions": self.completions,
                "embeddings": self.embeddings,
                "retrievals": self.retrievals,
            },
        }
        if include_wall_time:
            out["wall_time"] = self.wall_time
        return out

    def to_json(self, include_wall_time: bool = True) -> str:
        return json.dumps(self.to_dict(include_wall_time), sort_keys=True, indent=2)


_STEP_SPLIT_RE = re.compile(r"(?m)^(?=STEP\b)")
_PARA_SPLIT_RE = re.compile(r"\n\s*\n")


def split_thoughts(draft: str, kind: str) -> ThoughtChain:
    """Segment a draft into thought steps.

    Plan drafts split at line-initial STEP markers; all other kinds split on
    blank-line paragraph boundaries.
    """
    if not draft:
        raise NoThoughtsError("draft is empty")
    if kind == "plan":
        parts = [p.strip() for p in _STEP_SPLIT_RE.split(draft)]
        parts = [p for p in parts if p.startswith("STEP")]
        if not parts:
            # fall back to paragraphs when the plan grammar is absent
            parts = [p.strip() for p in _PARA_SPLIT_RE.split(draft) if p.strip()]
    else:
        parts = [p.strip() for p in _PARA_SPLIT_RE.split(draft) if p.strip()]
    if not parts:
        raise NoThoughtsError("no thought steps found in draft")
    return ThoughtChain(tuple(parts))


def _step_joiner(kind: str) -> str:
    return "\n" if kind == "plan" else "\n\n"


def format_context(retrieved: RetrievedSet, token_budget: int) -> str:
    """Join retrieved bodies, best first, dropping lowest-similarity chunks
    that do not fit the budget."""
    kept: list[str] = []
    used = 0
    for entry in retrieved.entries:
        n = count_tokens(entry.body)
        if kept and used + n > token_budget:
            break
        kept.append(entry.body)
        used += n
    return CONTEXT_SEPARATOR.join(kept)


def _record_retrieval(trace: RunTrace, round_index: int, query: Query,
                      retrieved: RetrievedSet, conv: Conversation, revision: str) -> None:
    trace.rounds.append(
        {
            "round": round_index,
            "query_text": query.query_text,
            "query_mode": query.mode,
            "retrieved": [
                {"chunk_id": e.chunk_id, "score": round(e.score, 12)} for e in retrieved.entries
            ],
            "conversation": conv.to_wire(),
            "revision": revision,
        }
    )


def _complete(trace: RunTrace, backend: Backend, conv: Conversation, params: DecodingParams) -> str:
    texts = backend.complete(conv, params)
    trace.completions += 1
    return texts[0]


def run_direct(task: TaskPrompt, backend: Backend, config: PipelineConfig) -> tuple[str, RunTrace]:
    trace = RunTrace(task, config)
    start = time.monotonic()
    conv = Conversation.user(task.instruction)
    answer = _complete(trace, backend, conv, config.decoding)
    trace.draft = {"conversation": conv.to_wire(), "text": answer}
    trace.final_answer = answer
    trace.wall_time = time.monotonic() - start
    return answer, trace


def run_cot(task: TaskPrompt, backend: Backend, config: PipelineConfig) -> tuple[str, RunTrace]:
    trace = RunTrace(task, config)
    start = time.monotonic()
    conv = prompts.render_prompt(prompts.DRAFT_BY_KIND[task.kind], {"question": task.instruction})
    answer = _complete(trace, backend, conv, config.decoding)
    trace.draft = {"conversation": conv.to_wire(), "text": answer}
    trace.final_answer = answer
    trace.wall_time = time.monotonic() - start
    return answer, trace


def run_rag(task: TaskPrompt, backend: Backend, index: VectorIndex,
            config: PipelineConfig, n_shots: Optional[int] = None) -> tuple[str, RunTrace]:
    """Single retrieval with the bare instruction as query, one completion
    with the retrieved bodies prepended as context."""
    trace = RunTrace(task, config)
    start = time.monotonic()
    shots = n_shots if n_shots is not None else config.rag_shots
    query = Query(
        query_text=task.instruction,
        query_vector=backend.embed(task.instruction),
        mode="embed-draft",
    )
    trace.embeddings += 1
    retrieved = top_k(index, query, shots)
    trace.retrievals += 1
    conv = prompts.render_prompt(
        prompts.RAG_CONTEXT,
        {
            "content": format_context(retrieved, config.context_token_budget),
            "question": task.instruction,
        },
    )
    answer = _complete(trace, backend, conv, config.decoding)
    _record_retrieval(trace, 1, query, retrieved, conv, answer)
    trace.final_answer = answer
    trace.wall_time = time.monotonic() - start
    return answer, trace


def run_rat(task: TaskPrompt, backend: Backend, index: VectorIndex,
            config: PipelineConfig) -> tuple[str, RunTrace]:
    """Iterative retrieval-augmented revision of a zero-shot draft.

    Causal mode revises one thought step per round, querying with the task,
    the already-revised prefix, and the current step only.  Non-causal mode
    (and the full-cot query ablation) does a single retrieval with the whole
    initial chain and one revision pass.  The question-only query ablation
    degenerates to RAG behavior.
    """
    if config.query_strategy == "question-only":
        return run_rag(task, backend, index, config, n_shots=config.k)

    trace = RunTrace(task, config)
    start = time.monotonic()
    query_mode = config.query_mode or DEFAULT_QUERY_MODE[task.kind]
    joiner = _step_joiner(task.kind)

    draft_conv = prompts.render_prompt(
        prompts.DRAFT_BY_KIND[task.kind], {"question": task.instruction}
    )
    draft_text = _complete(trace, backend, draft_conv, config.decoding)
    chain = split_thoughts(draft_text, task.kind)
    trace.draft = {
        "conversation": draft_conv.to_wire(),
        "text": draft_text,
        "steps": list(chain.steps),
    }

    single_pass = config.rat_mode == "non-causal" or config.query_strategy == "full-cot"
    if single_pass:
        rounds = [(1, list(chain.steps))]
    else:
        rounds = None  # built incrementally below

    def one_round(i: int, prefix: list[str], current: str, answer_text: str) -> str:
        query = to_query(
            task.instruction, prefix, current, query_mode,
            embed_backend=backend, chat_backend=backend, decoding=config.decoding,
        )
        trace.embeddings += 1
        if query_mode == "llm-generated":
            trace.completions += 1
        retrieved = top_k(index, query, config.k)
        trace.retrievals += 1
        conv = prompts.render_prompt(
            prompts.REVISE,
            {
                "content": format_context(retrieved, config.context_token_budget),
                "question": task.instruction,
                "answer": answer_text,
            },
        )
        revision = _complete(trace, backend, conv, config.decoding)
        _record_retrieval(trace, i, query, retrieved, conv, revision)
        return revision

    try:
        if single_pass:
            whole = joiner.join(chain.steps)
            answer = one_round(1, list(chain.steps[:-1]), chain.steps[-1], whole)
        else:
            working = [chain.steps[0]]
            answer = ""
            for i in range(1, len(chain) + 1):
                answer = one_round(i, working[:-1], working[-1], joiner.join(working))
                try:
                    working = list(split_thoughts(answer, task.kind).steps)
                except NoThoughtsError:
                    working = [answer.strip() or answer]
                if i < len(chain):
                    working.append(chain.steps[i])
    except PipelineError:
        raise
    except Exception as exc:
        idx = len(trace.rounds) + 1
        raise PipelineError(
            f"backend failure in revision round {idx}: {exc}",
            round_index=idx,
            trace=trace.to_dict(),
        ) from exc

    synthesize = (
        config.final_synthesis
        if config.final_synthesis is not None
        else DEFAULT_FINAL_SYNTHESIS[task.kind]
    )
    if synthesize:
        synth_conv = prompts.render_prompt(
            prompts.FINAL_ANSWER, {"question": task.instruction, "answer": answer}
        )
        answer = _complete(trace, backend, synth_conv, config.decoding)
        trace.rounds.append(
            {"round": "synthesis", "conversation": synth_conv.to_wire(), "revision": answer}
        )

    trace.final_answer = answer
    trace.wall_time = time.monotonic() - start
    return answer, trace


def run_task(task: TaskPrompt, backend: Backend, config: PipelineConfig,
             index: Optional[VectorIndex] = None) -> tuple[str, RunTrace]:
    if config.method == "DIRECT":
        return run_direct(task, backend, config)
    if config.method == "COT":
        return run_cot(task, backend, config)
    if index is None:
        raise PipelineError(f"method {config.method} requires a vector index")
    if config.method == "RAG":
        return run_rag(task, backend, index, config)
    return run_rat(task, backend, index, config)


def run_batch(tasks: Sequence[TaskPrompt], backend: Backend, config: PipelineConfig,
              index: Optional[VectorIndex] = None, workers: int = 1) -> list[tuple[str, RunTrace]]:
    """Run independent tasks, optionally on a bounded worker pool."""
    if workers <= 1:
        return [run_task(t, backend, config, index) for t in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda t: run_task(t, backend, config, index), tasks))
