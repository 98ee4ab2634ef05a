"""Exact cosine top-k vector index over chunks, plus query formation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .backends import Backend, Conversation, DecodingParams, EmbeddingVector
from .corpus import Chunk, count_tokens, tokenize
from . import prompts

INDEX_FORMAT_VERSION = 1

# Queries are truncated from the front to this budget; the query prompt asks
# for relevance to the last few sentences, so the oldest prefix goes first.
DEFAULT_QUERY_TOKEN_BUDGET = 8192

QUERY_MODES = ("embed-draft", "llm-generated")


class RetrievalError(Exception):
    pass


def cosine_similarity(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """(a.b)/(|a||b|), clamped to [-1, 1] against floating-point drift."""
    if len(a) != len(b):
        raise ValueError(f"dimension mismatch: {len(a)} vs {len(b)}")
    av = np.asarray(a.values, dtype=float)
    bv = np.asarray(b.values, dtype=float)
    na, nb = np.linalg.norm(av), np.linalg.norm(bv)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity undefined for zero vector")
    return float(np.clip(av @ bv / (na * nb), -1.0, 1.0))


@dataclass(frozen=True)
class ScoredChunk:
    chunk_id: str
    score: float
    body: str


@dataclass(frozen=True)
class RetrievedSet:
    entries: tuple[ScoredChunk, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def ids(self) -> list[str]:
        return [e.chunk_id for e in self.entries]

    def bodies(self) -> list[str]:
        return [e.body for e in self.entries]


class VectorIndex:
    """Immutable exact-search index: one embedding per chunk, linear scan."""

    def __init__(self, chunk_ids: Sequence[str], vectors: np.ndarray, bodies: Sequence[str]):
        if len(chunk_ids) == 0:
            raise RetrievalError("index must contain at least one entry")
        if len(chunk_ids) != len(set(chunk_ids)):
            dupes = {c for c in chunk_ids if list(chunk_ids).count(c) > 1}
            raise RetrievalError(f"duplicate chunk id(s): {sorted(dupes)}")
        norms = np.linalg.norm(vectors, axis=1)
        if np.any(norms == 0.0):
            bad = [chunk_ids[i] for i in np.flatnonzero(norms == 0.0)]
            raise RetrievalError(f"zero vector(s) for chunk(s): {bad}")
        self.chunk_ids = list(chunk_ids)
        self.vectors = np.asarray(vectors, dtype=float)
        self.bodies = list(bodies)
        self._unit = self.vectors / norms[:, None]

    def __len__(self) -> int:
        return len(self.chunk_ids)

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]

    def save(self, path: str) -> None:
        """Header line (version, dimension, count) + one JSON entry per line."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(
                json.dumps(
                    {
                        "version": INDEX_FORMAT_VERSION,
                        "dimension": self.dimension,
                        "entries": len(self),
                    }
                )
                + "\n"
            )
            for cid, vec, body in zip(self.chunk_ids, self.vectors, self.bodies):
                fh.write(
                    json.dumps({"chunk_id": cid, "vector": list(vec), "body": body}) + "\n"
                )

    @classmethod
    def load(cls, path: str) -> "VectorIndex":
        with open(path, "r", encoding="utf-8") as fh:
            header = json.loads(fh.readline())
            if header.get("version") != INDEX_FORMAT_VERSION:
                raise RetrievalError(f"unsupported index version {header.get('version')!r}")
            ids, vecs, bodies = [], [], []
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                ids.append(rec["chunk_id"])
                vecs.append(rec["vector"])
                bodies.append(rec["body"])
        if len(ids) != header["entries"]:
            raise RetrievalError(
                f"index truncated: header says {header['entries']} entries, found {len(ids)}"
            )
        return cls(ids, np.array(vecs, dtype=float), bodies)


def build_index(chunks: Sequence[Chunk], embed_backend: Backend) -> VectorIndex:
    if not chunks:
        raise RetrievalError("cannot build index from zero chunks")
    ids, vecs, bodies = [], [], []
    for chunk in chunks:
        try:
            vec = embed_backend.embed(chunk.body)
        except Exception as exc:
            raise RetrievalError(f"embedding failed for chunk {chunk.chunk_id}: {exc}") from exc
        ids.append(chunk.chunk_id)
        vecs.append(vec.values)
        bodies.append(chunk.body)
    return VectorIndex(ids, np.array(vecs, dtype=float), bodies)


@dataclass(frozen=True)
class Query:
    query_text: str
    query_vector: EmbeddingVector
    mode: str


def top_k(index: VectorIndex, query: Query, k: int) -> RetrievedSet:
    """The k highest-cosine entries, exact; ties broken by ascending chunk id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    qv = np.asarray(query.query_vector.values, dtype=float)
    if qv.shape[0] != index.dimension:
        raise RetrievalError(
            f"query dimension {qv.shape[0]} does not match index dimension {index.dimension}"
        )
    qn = np.linalg.norm(qv)
    if qn == 0.0:
        raise RetrievalError("query vector is all-zero")
    scores = np.clip(index._unit @ (qv / qn), -1.0, 1.0)
    order = sorted(range(len(index)), key=lambda i: (-scores[i], index.chunk_ids[i]))
    picked = order[: min(k, len(index))]
    return RetrievedSet(
        tuple(
            ScoredChunk(index.chunk_ids[i], float(scores[i]), index.bodies[i]) for i in picked
        )
    )


class WebSearch:
    """Pluggable live-search interface with the same output contract as top_k.

    No live adapter ships in-tree; Google/Bing adapters can subclass this.
    """

    def search(self, query_text: str, k: int) -> RetrievedSet:
        raise NotImplementedError


def truncate_query_text(text: str, budget: int = DEFAULT_QUERY_TOKEN_BUDGET) -> str:
    """Drop the oldest words first so the tail of the draft survives."""
    if count_tokens(text) <= budget:
        return text
    words = text.split()
    total = 0
    cut = len(words)
    # walk backwards accumulating token counts until the budget is hit
    for i in range(len(words) - 1, -1, -1):
        total += count_tokens(words[i])
        if total > budget:
            cut = i + 1
            break
    else:
        cut = 0
    return " ".join(words[cut:])


def to_query(
    task_instruction: str,
    revised_prefix: Sequence[str],
    current_step: str,
    mode: str,
    embed_backend: Backend,
    chat_backend: Optional[Backend] = None,
    decoding: Optional[DecodingParams] = None,
    token_budget: int = DEFAULT_QUERY_TOKEN_BUDGET,
) -> Query:
    """Form the retrieval query for one revision round.

    embed-draft: query text is task + revised prefix + current step joined by
    newlines, embedded directly.  llm-generated: the chat backend summarizes
    the draft into a search query via the query-generation prompt.
    """
    if mode not in QUERY_MODES:
        raise ValueError(f"unknown query mode {mode!r}")
    if not current_step:
        raise ValueError("current step must be non-empty")
    if mode == "embed-draft":
        parts = [task_instruction, *revised_prefix, current_step]
        query_text = "\n".join(p for p in parts if p)
    else:
        if chat_backend is None:
            raise ValueError("llm-generated query mode requires a chat backend")
        answer = "\n".join([*revised_prefix, current_step])
        conv = prompts.render_prompt(
            prompts.SEARCH_QUERY, {"question": task_instruction, "answer": answer}
        )
        query_text = chat_backend.complete(conv, decoding or DecodingParams())[0].strip()
        if not query_text:
            raise RetrievalError("query-generation backend returned empty text")
    query_text = truncate_query_text(query_text, token_budget)
    return Query(query_text=query_text, query_vector=embed_backend.embed(query_text), mode=mode)
