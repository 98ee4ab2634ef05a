"""Operator command line: corpus/index building, batch runs, evaluation
reports, decontamination, and arena serving."""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__, prompts
from .backends import DecodingParams, load_backend_config
from .corpus import (
    DEFAULT_MAX_TOKENS,
    DEFAULT_NGRAM,
    chunk_document,
    decontaminate,
    load_documents,
    write_decontamination_report,
)
from .metrics import (
    load_eval_records,
    mean_accuracy,
    mean_pass_at_k,
    method_table,
    render_csv,
    render_markdown,
)
from .pipeline import PipelineConfig, TaskPrompt, run_batch
from .retrieval import VectorIndex, build_index


def _file_hash(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            h.update(block)
    return h.hexdigest()


def _load_tasks(path: str) -> list[TaskPrompt]:
    tasks = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            tasks.append(TaskPrompt(rec["task_id"], rec["instruction"], rec["kind"]))
    return tasks


def cmd_index_build(args) -> int:
    docs = load_documents(args.corpus)
    chunks = []
    for doc in docs:
        chunks.extend(chunk_document(doc, args.max_tokens))
    backend = load_backend_config(args.backend)
    index = build_index(chunks, backend)
    index.save(args.out)
    print(f"indexed {len(index)} chunk(s) from {len(docs)} document(s) -> {args.out}")
    return 0


def cmd_decontaminate(args) -> int:
    index = VectorIndex.load(args.index)
    with open(args.benchmark, "r", encoding="utf-8") as fh:
        bench = [json.loads(line)["body"] for line in fh if line.strip()]
    from .corpus import Chunk, count_tokens

    chunks = [
        Chunk(cid, cid.split("#")[0], body, count_tokens(body))
        for cid, body in zip(index.chunk_ids, index.bodies)
    ]
    kept, removed = decontaminate(chunks, bench, n=args.ngram)
    write_decontamination_report(removed, args.report)
    if args.out:
        keep_ids = {c.chunk_id for c in kept}
        rows = [
            (cid, vec, body)
            for cid, vec, body in zip(index.chunk_ids, index.vectors, index.bodies)
            if cid in keep_ids
        ]
        clean = VectorIndex(
            [r[0] for r in rows], np.array([r[1] for r in rows]), [r[2] for r in rows]
        )
        clean.save(args.out)
    print(f"kept {len(kept)}, removed {len(removed)}; report -> {args.report}")
    return 0


def cmd_run(args) -> int:
    tasks = _load_tasks(args.tasks)
    backend = load_backend_config(args.backend)
    index = VectorIndex.load(args.index) if args.index else None
    config = PipelineConfig(
        method=args.method.upper(),
        rag_shots=args.rag_shots,
        rat_mode=args.rat_mode,
        query_strategy=args.query_strategy,
        k=args.k,
        decoding=DecodingParams(temperature=args.temperature, sample_count=args.samples),
        query_mode=args.query_mode,
    )
    os.makedirs(args.out, exist_ok=True)
    results = run_batch(tasks, backend, config, index, workers=args.workers)
    for task, (_, trace) in zip(tasks, results):
        with open(os.path.join(args.out, f"{task.task_id}.json"), "w", encoding="utf-8") as fh:
            fh.write(trace.to_json())
    manifest = {
        "version": __version__,
        "config": config.snapshot(),
        "config_hash": hashlib.sha256(
            json.dumps(config.snapshot(), sort_keys=True).encode()
        ).hexdigest(),
        "tasks_hash": _file_hash(args.tasks),
        "backend_config_hash": _file_hash(args.backend),
        "index_hash": _file_hash(args.index) if args.index else None,
        "template_set_hash": prompts.template_set_hash(),
        "tasks": [t.task_id for t in tasks],
    }
    manifest_path = os.path.join(args.out, "manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    print(f"manifest: {manifest_path}")
    return 0


def cmd_eval(args) -> int:
    records = load_eval_records(args.records)
    out = {"records": len(records), "accuracy": round(100 * mean_accuracy(records), 4)}
    for k in args.pass_k:
        try:
            out[f"pass@{k}"] = round(100 * mean_pass_at_k(records, k), 4)
        except ValueError as exc:
            print(f"pass@{k} skipped: {exc}", file=sys.stderr)
    print(json.dumps(out, indent=2))
    return 0


def cmd_report(args) -> int:
    with open(args.metrics, "r", encoding="utf-8") as fh:
        per_method = json.load(fh)
    rows = method_table(per_method, baseline_method=args.baseline)
    base, _ = os.path.splitext(args.out)
    with open(base + ".csv", "w", encoding="utf-8") as fh:
        fh.write(render_csv(rows))
    with open(base + ".md", "w", encoding="utf-8") as fh:
        fh.write(render_markdown(rows))
    print(f"report -> {base}.csv, {base}.md")
    return 0


def cmd_arena_serve(args) -> int:
    import uvicorn

    from .arena import ArenaState, create_app, load_task_pool

    state = ArenaState(load_task_pool(args.pool), args.log, seed=args.seed)
    app = create_app(state, static_dir=args.static)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ratkit",
        description="Retrieval-augmented thought revision pipeline and evaluation stack.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("index-build", help="chunk a corpus and build a vector index")
    p.add_argument("--corpus", required=True, help="directory of .md/.txt files or a JSONL file")
    p.add_argument("--backend", required=True, help="embedding backend config (TOML/JSON)")
    p.add_argument("--out", required=True, help="index output path")
    p.add_argument("--max-tokens", type=int, default=DEFAULT_MAX_TOKENS)
    p.set_defaults(func=cmd_index_build)

    p = sub.add_parser("decontaminate", help="drop index chunks overlapping benchmark texts")
    p.add_argument("--index", required=True)
    p.add_argument("--benchmark", required=True, help="JSONL of {body} benchmark texts")
    p.add_argument("--report", required=True, help="JSONL removal report path")
    p.add_argument("--out", help="cleaned index output path")
    p.add_argument("--ngram", type=int, default=DEFAULT_NGRAM)
    p.set_defaults(func=cmd_decontaminate)

    p = sub.add_parser("run", help="run a batch of tasks through a method")
    p.add_argument("--tasks", required=True, help="JSONL of {task_id, instruction, kind}")
    p.add_argument("--backend", required=True, help="backend config (TOML/JSON)")
    p.add_argument("--index", help="vector index (required for RAG/RAT)")
    p.add_argument("--method", required=True, choices=["direct", "cot", "rag", "rat"])
    p.add_argument("--out", default="runs", help="output directory for traces + manifest")
    p.add_argument("--rag-shots", type=int, default=1)
    p.add_argument("--rat-mode", choices=["causal", "non-causal"], default="causal")
    p.add_argument(
        "--query-strategy", choices=["question-only", "full-cot", "stepwise"], default="stepwise"
    )
    p.add_argument("--query-mode", choices=["embed-draft", "llm-generated"])
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--temperature", type=float, default=0.0)
    p.add_argument("--samples", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="aggregate metrics over an EvalRecord JSONL file")
    p.add_argument("--records", required=True)
    p.add_argument("--pass-k", type=int, nargs="*", default=[1, 5])
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="render per-method tables (CSV + markdown)")
    p.add_argument("--metrics", required=True, help="JSON of {method: {metric: value}}")
    p.add_argument("--baseline", default="DIRECT")
    p.add_argument("--out", default="report.csv")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("arena-serve", help="serve the pairwise rating arena")
    p.add_argument("--pool", required=True, help="task pool JSON")
    p.add_argument("--log", required=True, help="append-only event log path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--static", help="directory of frontend assets to serve at /")
    p.set_defaults(func=cmd_arena_serve)

    return parser


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (KeyboardInterrupt,):
        return 1
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch())
