"""Prompt templates and rendering.

The drafting (writing), search-query, and revision templates are frozen and
golden-tested: rendered text must match the stored goldens byte-for-byte
outside placeholder spans.  The kind-specific drafting templates for code,
math, and plan tasks belong to the same versioned template set but are house
variants, kept deliberately close to the writing template.
"""

from __future__ import annotations

import hashlib
import re

from .backends import Conversation

TEMPLATE_SET_ID = "appendix-v1"

DRAFT_WRITING = "draft-writing"
DRAFT_CODE = "draft-code"
DRAFT_MATH = "draft-math"
DRAFT_PLAN = "draft-plan"
SEARCH_QUERY = "search-query"
REVISE = "revise"
RAG_CONTEXT = "rag-context"
FINAL_ANSWER = "final-answer"

_DRAFT_WRITING_TEXT = """\
##Question:
{question}
##Instruction:
Try to answer this question/instruction with step-by-step thoughts and make the answer more structural.
Use /n/n to split the answer into several paragraphs.
Just respond to the instruction directly. DO NOT add additional explanations or introducement in the answer unless you are asked to."""

_DRAFT_CODE_TEXT = """\
##Question:
{question}
##Instruction:
Try to answer this question/instruction with step-by-step thoughts and make the answer more structural.
Write your thoughts as comments and produce the code step by step.
Just respond to the instruction directly. DO NOT add additional explanations or introducement in the answer unless you are asked to."""

_DRAFT_MATH_TEXT = """\
##Question:
{question}
##Instruction:
Try to answer this question/instruction with step-by-step thoughts and make the answer more structural.
Use /n/n to split the answer into several reasoning steps.
Just respond to the instruction directly. DO NOT add additional explanations or introducement in the answer unless you are asked to."""

_DRAFT_PLAN_TEXT = """\
##Question:
{question}
##Instruction:
Try to answer this question/instruction with step-by-step thoughts and make the answer more structural.
For every step, start with 'STEP' as start.
Just respond to the instruction directly. DO NOT add additional explanations or introducement in the answer unless you are asked to."""

_SEARCH_QUERY_TEXT = """\
##Question:
{question}
##Content:
{answer}
##Instruction:
I want to verify the content correctness of the given question, especially the last sentences.
Please summarize the content with the corresponding question.
This summarization will be used as a query to search with Bing search engine.
The query should be short but need to be specific to promise Bing can find related knowledge or pages.
You can also use search syntax to make the query short and clear enough for the search engine to find relevant language data.
Try to make the query as relevant as possible to the last few sentences in the content.
**IMPORTANT**
Just output the query directly. DO NOT add additional explanations or introducement in the answer unless you are asked to."""

_REVISE_TEXT = """\
##Existing Text in Wiki Web:
{content}
##Question:
{question}
##Answer:
{answer}
##Instruction:
I want to revise the answer according to retrieved related text of the question in WIKI pages.
You need to check whether the answer is correct.
If you find some errors in the answer, revise the answer to make it better.
If you find some necessary details are ignored, add it to make the answer more plausible according to the related text.
If you find the answer is right and do not need to add more details, just output the original answer directly.
**IMPORTANT**
Try to keep the structure (multiple paragraphs with its subtitles) in the revised answer and make it more structural for understanding.
Split the paragraphs with /n/n characters.
Just output the revised answer directly. DO NOT add additional explanations or annoucement in the revised answer unless you are asked to."""

_RAG_CONTEXT_TEXT = """\
##Retrieved Content:
{content}
##Question:
{question}
##Instruction:
Answer the question/instruction. You may use the retrieved content above when it is relevant.
Just respond to the instruction directly. DO NOT add additional explanations or introducement in the answer unless you are asked to."""

_FINAL_ANSWER_TEXT = """\
##Question:
{question}
##Revised Thoughts:
{answer}
##Instruction:
Produce the complete response to the question from the revised thoughts above, in a step-by-step fashion.
Just respond to the instruction directly. DO NOT add additional explanations or introducement in the answer unless you are asked to."""

_TEMPLATES: dict[str, str] = {
    DRAFT_WRITING: _DRAFT_WRITING_TEXT,
    DRAFT_CODE: _DRAFT_CODE_TEXT,
    DRAFT_MATH: _DRAFT_MATH_TEXT,
    DRAFT_PLAN: _DRAFT_PLAN_TEXT,
    SEARCH_QUERY: _SEARCH_QUERY_TEXT,
    REVISE: _REVISE_TEXT,
    RAG_CONTEXT: _RAG_CONTEXT_TEXT,
    FINAL_ANSWER: _FINAL_ANSWER_TEXT,
}

DRAFT_BY_KIND = {
    "writing": DRAFT_WRITING,
    "code": DRAFT_CODE,
    "math": DRAFT_MATH,
    "plan": DRAFT_PLAN,
}

_PLACEHOLDER_RE = re.compile(r"\{(\w+)\}")


class PromptError(Exception):
    pass


def template_text(template_id: str) -> str:
    try:
        return _TEMPLATES[template_id]
    except KeyError:
        raise PromptError(f"unknown template id {template_id!r}") from None


def template_placeholders(template_id: str) -> set[str]:
    return set(_PLACEHOLDER_RE.findall(template_text(template_id)))


def render_prompt(template_id: str, bindings: dict[str, str]) -> Conversation:
    """Fill a template's placeholders and wrap it as a single user turn."""
    text = template_text(template_id)
    expected = template_placeholders(template_id)
    missing = expected - bindings.keys()
    extra = bindings.keys() - expected
    if missing:
        raise PromptError(f"missing binding(s) for {template_id}: {sorted(missing)}")
    if extra:
        raise PromptError(f"unknown extra binding(s) for {template_id}: {sorted(extra)}")
    rendered = _PLACEHOLDER_RE.sub(lambda m: bindings[m.group(1)], text)
    return Conversation.user(rendered)


def template_set_hash() -> str:
    payload = "\n\x00\n".join(f"{tid}\n{_TEMPLATES[tid]}" for tid in sorted(_TEMPLATES))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()
