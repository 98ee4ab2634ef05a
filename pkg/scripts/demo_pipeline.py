#!/usr/bin/env python3
"""Offline walkthrough of the four pipeline methods on one task.

Builds a tiny in-memory corpus, indexes it with the deterministic mock
embedder, then runs DIRECT, COT, RAG, and RAT with a scripted backend so the
whole comparison is reproducible without network access.  Prints each
method's final answer and its completion/embedding/retrieval counts.
"""

import argparse

from ratkit.backends import ScriptedBackend
from ratkit.corpus import Document, chunk_document
from ratkit.pipeline import PipelineConfig, TaskPrompt, run_task
from ratkit.retrieval import build_index

CORPUS = [
    Document(
        doc_id="wiki-apple",
        source_uri="demo://wiki/golden-apple",
        body=(
            "A golden apple is crafted from 8 gold ingots and 1 apple.\n\n"
            "Gold ingots are smelted from raw gold in a furnace, one ingot "
            "per raw gold."
        ),
    ),
    Document(
        doc_id="wiki-furnace",
        source_uri="demo://wiki/furnace",
        body=(
            "A furnace is crafted from 8 cobblestone at a crafting table.\n\n"
            "Cobblestone is mined from stone with any pickaxe."
        ),
    ),
    Document(
        doc_id="wiki-apple-tree",
        source_uri="demo://wiki/apple",
        body="Apples drop occasionally when oak leaves are broken.",
    ),
]

TASK = TaskPrompt(
    task_id="demo-golden-apple",
    instruction="How many gold ingots do I need for one golden apple?",
    kind="math",
)

# One scripted reply list per method: DIRECT and COT consume a single
# completion; RAG consumes one (after retrieval); causal RAT consumes a
# three-paragraph draft plus one revision per thought step.
SCRIPTS = {
    "DIRECT": ["You need some gold ingots."],
    "COT": ["Count the ingots in the recipe. The answer is probably 9."],
    "RAG": ["The recipe uses 8 gold ingots, so you need 8."],
    "RAT": [
        "First check the golden apple recipe.\n\n"
        "Then count the gold ingots it lists.\n\n"
        "So the answer is the ingot count.",
        "First check the golden apple recipe: 8 gold ingots and 1 apple.",
        "Then count the gold ingots it lists: 8.",
        "So the answer is 8 gold ingots.",
    ],
}


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--k", type=int, default=2, help="chunks retrieved per query")
    parser.add_argument("--show-answers", action="store_true", help="print full answers")
    args = parser.parse_args()

    chunks = [c for doc in CORPUS for c in chunk_document(doc, max_tokens=40)]
    index = build_index(chunks, ScriptedBackend([]))
    print(f"indexed {len(index)} chunks from {len(CORPUS)} documents\n")

    for method, script in SCRIPTS.items():
        config = PipelineConfig(method=method, k=args.k)
        answer, trace = run_task(TASK, ScriptedBackend(script), config, index=index)
        counts = trace.to_dict()["counts"]
        print(
            f"{method:6s}  completions={counts['completions']}  "
            f"embeddings={counts['embeddings']}  retrievals={counts['retrievals']}"
        )
        if args.show_answers:
            print(f"        {answer!r}")


if __name__ == "__main__":
    main()
