"""Document ingestion, token-bounded chunking, and benchmark decontamination."""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

DEFAULT_MAX_TOKENS = 2000
DEFAULT_NGRAM = 10

# Whitespace + punctuation tokenizer: words/numbers, or single punctuation marks.
_TOKEN_RE = re.compile(r"\w+|[^\w\s]")
_PARAGRAPH_RE = re.compile(r"\n\s*\n")
_SENTENCE_RE = re.compile(r"(?<=[.!?])\s+")

Tokenizer = Callable[[str], list[str]]


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text)


def count_tokens(text: str, tokenizer: Tokenizer = tokenize) -> int:
    return len(tokenizer(text))


@dataclass(frozen=True)
class Document:
    doc_id: str
    source_uri: str
    body: str

    def __post_init__(self):
        if not self.body:
            raise ValueError("document body must be non-empty")


@dataclass(frozen=True)
class Chunk:
    chunk_id: str
    doc_id: str
    body: str
    token_count: int


def chunk_document(
    doc: Document,
    max_tokens: int = DEFAULT_MAX_TOKENS,
    tokenizer: Tokenizer = tokenize,
) -> list[Chunk]:
    """Split a document into chunks of at most max_tokens tokens.

    Prefers paragraph boundaries (blank lines), then sentence boundaries,
    then hard token cuts.  Chunk bodies concatenated in order reconstruct the
    document body modulo boundary whitespace.
    """
    if max_tokens < 1:
        raise ValueError("max_tokens must be >= 1")
    if not doc.body.strip():
        raise ValueError(f"document {doc.doc_id} is empty")

    pieces: list[str] = []
    for para in _PARAGRAPH_RE.split(doc.body):
        para = para.strip()
        if not para:
            continue
        if count_tokens(para, tokenizer) <= max_tokens:
            pieces.append(para)
        else:
            pieces.extend(_split_oversize(para, max_tokens, tokenizer))

    chunks: list[Chunk] = []
    buf: list[str] = []
    buf_tokens = 0
    for piece in pieces:
        n = count_tokens(piece, tokenizer)
        if buf and buf_tokens + n > max_tokens:
            chunks.append(_make_chunk(doc, len(chunks), buf, tokenizer))
            buf, buf_tokens = [], 0
        buf.append(piece)
        buf_tokens += n
    if buf:
        chunks.append(_make_chunk(doc, len(chunks), buf, tokenizer))
    return chunks


def _split_oversize(text: str, max_tokens: int, tokenizer: Tokenizer) -> list[str]:
    """Break one oversize paragraph at sentence boundaries, then hard cuts."""
    out: list[str] = []
    for sent in _SENTENCE_RE.split(text):
        sent = sent.strip()
        if not sent:
            continue
        if count_tokens(sent, tokenizer) <= max_tokens:
            out.append(sent)
        else:
            out.extend(_hard_cut(sent, max_tokens, tokenizer))
    return out


def _hard_cut(text: str, max_tokens: int, tokenizer: Tokenizer) -> list[str]:
    # Accumulate whitespace-delimited words; a word may carry several tokens
    # (e.g. trailing punctuation), so count per word.  A single word whose
    # token count exceeds max_tokens is emitted alone rather than split.
    out: list[str] = []
    buf: list[str] = []
    buf_tokens = 0
    for word in text.split():
        n = count_tokens(word, tokenizer)
        if buf and buf_tokens + n > max_tokens:
            out.append(" ".join(buf))
            buf, buf_tokens = [], 0
        buf.append(word)
        buf_tokens += n
    if buf:
        out.append(" ".join(buf))
    return out


def _make_chunk(doc: Document, index: int, pieces: list[str], tokenizer: Tokenizer) -> Chunk:
    body = "\n\n".join(pieces)
    return Chunk(
        chunk_id=f"{doc.doc_id}#{index:04d}",
        doc_id=doc.doc_id,
        body=body,
        token_count=count_tokens(body, tokenizer),
    )


def _ngrams(tokens: list[str], n: int) -> set[tuple[str, ...]]:
    return {tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)}


def decontaminate(
    chunks: Iterable[Chunk],
    benchmark_texts: Iterable[str],
    n: int = DEFAULT_NGRAM,
    tokenizer: Tokenizer = tokenize,
) -> tuple[list[Chunk], list[tuple[str, str]]]:
    """Drop chunks sharing any token-level n-gram with a benchmark text.

    Returns (kept, removed) where removed entries are (chunk_id, reason);
    kept and removed partition the input in order.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    bench_grams: dict[tuple[str, ...], int] = {}
    for bench_idx, text in enumerate(benchmark_texts):
        for gram in _ngrams(tokenizer(text), n):
            bench_grams.setdefault(gram, bench_idx)

    kept: list[Chunk] = []
    removed: list[tuple[str, str]] = []
    for chunk in chunks:
        toks = tokenizer(chunk.body)
        hit = None
        for i in range(len(toks) - n + 1):
            gram = tuple(toks[i : i + n])
            if gram in bench_grams:
                hit = (gram, bench_grams[gram])
                break
        if hit is None:
            kept.append(chunk)
        else:
            gram, bench_idx = hit
            removed.append(
                (chunk.chunk_id, f"shares {n}-gram {' '.join(gram)!r} with benchmark {bench_idx}")
            )
    return kept, removed


def load_documents(path: str) -> list[Document]:
    """Ingest a corpus from a directory of .md/.txt files or a JSONL file.

    JSONL lines carry {"id", "source", "body"}.
    """
    docs: list[Document] = []
    if os.path.isdir(path):
        for name in sorted(os.listdir(path)):
            if not name.endswith((".md", ".txt")):
                continue
            full = os.path.join(path, name)
            with open(full, "r", encoding="utf-8") as fh:
                body = fh.read()
            docs.append(Document(doc_id=os.path.splitext(name)[0], source_uri=full, body=body))
    else:
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                docs.append(Document(doc_id=rec["id"], source_uri=rec.get("source", ""), body=rec["body"]))
    seen: set[str] = set()
    for d in docs:
        if d.doc_id in seen:
            raise ValueError(f"duplicate doc id {d.doc_id}")
        seen.add(d.doc_id)
    return docs


def write_decontamination_report(
    removed: list[tuple[str, str]], path: str
) -> None:
    """Emit the removal report as JSONL of {chunk_id, reason, benchmark_id}."""
    with open(path, "w", encoding="utf-8") as fh:
        for chunk_id, reason in removed:
            m = re.search(r"benchmark (\d+)$", reason)
            bench_id = int(m.group(1)) if m else None
            fh.write(
                json.dumps({"chunk_id": chunk_id, "reason": reason, "benchmark_id": bench_id})
                + "\n"
            )
