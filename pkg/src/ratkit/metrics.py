"""Task metrics: unbiased pass@k, repeated-attempt accuracy, plan parsing and
executability checking, and relative-improvement arithmetic."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Optional, Sequence


@dataclass(frozen=True)
class EvalRecord:
    task_id: str
    attempts: tuple[bool, ...]

    def __post_init__(self):
        if not self.attempts:
            raise ValueError("attempts must be non-empty")

    @property
    def samples(self) -> int:
        return len(self.attempts)

    @property
    def correct(self) -> int:
        return sum(self.attempts)


def pass_at_k(n: int, c: int, k: int) -> float:
    """Unbiased estimator 1 - C(n-c, k)/C(n, k), in stable product form."""
    if not 1 <= k <= n:
        raise ValueError(f"require 1 <= k <= n, got k={k}, n={n}")
    if not 0 <= c <= n:
        raise ValueError(f"require 0 <= c <= n, got c={c}, n={n}")
    if n - c < k:
        return 1.0
    prod = 1.0
    for i in range(n - c + 1, n + 1):
        prod *= 1.0 - k / i
    return 1.0 - prod


def score_repeated(attempts: Sequence[bool]) -> float:
    """Mean correctness over repeated execution attempts."""
    if not attempts:
        raise ValueError("attempts must be non-empty")
    return sum(attempts) / len(attempts)


def relative_improvement(baseline: float, treatment: float) -> float:
    """Percent change of treatment over baseline: 100*(t-b)/b."""
    if baseline <= 0:
        raise ValueError("baseline must be positive")
    return 100.0 * (treatment - baseline) / baseline


class SolutionChecker:
    """Decides whether a sampled answer is correct for a task."""

    def check(self, answer: str, gold: str) -> bool:
        raise NotImplementedError


class ExactMatchChecker(SolutionChecker):
    def check(self, answer: str, gold: str) -> bool:
        return answer.strip() == gold.strip()


class NumericMatchChecker(SolutionChecker):
    """Compares the last number in the answer with the gold value."""

    _NUM_RE = re.compile(r"-?\d[\d,]*(?:\.\d+)?")

    def __init__(self, tolerance: float = 1e-6):
        self.tolerance = tolerance

    def _last_number(self, text: str) -> Optional[float]:
        hits = self._NUM_RE.findall(text)
        if not hits:
            return None
        return float(hits[-1].replace(",", ""))

    def check(self, answer: str, gold: str) -> bool:
        a = self._last_number(answer)
        g = self._last_number(gold)
        if a is None or g is None:
            return False
        return abs(a - g) <= self.tolerance * max(1.0, abs(g))


# ---------------------------------------------------------------------------
# Plan parsing and executability
# ---------------------------------------------------------------------------

PLAN_ACTIONS = ("gather", "craft", "smelt", "other")


@dataclass
class PlanStep:
    index: int
    action: str
    item: Optional[str]
    quantity: int = 1
    inputs: list[tuple[str, int]] = field(default_factory=list)
    tool: Optional[str] = None
    text: str = ""
    quantity_defaulted: bool = False


@dataclass(frozen=True)
class Recipe:
    inputs: tuple[tuple[str, int], ...]
    tool: Optional[str] = None
    yields: int = 1


class RecipeTable:
    def __init__(self, recipes: dict[str, Recipe]):
        for item, r in recipes.items():
            if r.yields < 1:
                raise ValueError(f"recipe for {item} has yield < 1")
        self.recipes = dict(recipes)

    def __contains__(self, item: str) -> bool:
        return item in self.recipes

    def get(self, item: str) -> Optional[Recipe]:
        return self.recipes.get(item)

    @classmethod
    def from_json(cls, path: str) -> "RecipeTable":
        """Load {item: {"inputs": [[item, qty], ...], "tool": ..., "yield": n}}."""
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        recipes = {}
        for item, spec in raw.items():
            recipes[item] = Recipe(
                inputs=tuple((i, int(q)) for i, q in spec.get("inputs", [])),
                tool=spec.get("tool"),
                yields=int(spec.get("yield", 1)),
            )
        return cls(recipes)


_STEP_RE = re.compile(r"(?m)^STEP\s*(\d+)\s*[:.]?\s*")
_ITEM_LINE_RE = re.compile(r"(?mi)^[-*]?\s*Minecraft items?\s*:\s*(.+)$")
_QTY_ITEM_RE = re.compile(r"(\d+)\s*x\s*([A-Za-z][A-Za-z' ]*)")

_SMELT_RE = re.compile(r"\bsmelt", re.I)
_CRAFT_RE = re.compile(r"\b(craft|create|make|convert|turn|combine|use the crafting)", re.I)
_GATHER_RE = re.compile(
    r"\b(gather|collect|mine|chop|punch|find|dig|obtain|break|fill|explore|look for|start digging)",
    re.I,
)


def normalize_item(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", name.strip().lower()).strip("_")


def _classify(text: str) -> str:
    # Classify on the first sentence of the description: later sentences
    # often mention the purpose ("... for crafting an iron pickaxe") and
    # would mislabel a gathering step.
    body = _ITEM_LINE_RE.sub("", text)
    first = re.split(r"(?<=[.!?])\s", body.strip(), maxsplit=1)[0]
    if _SMELT_RE.search(first):
        return "smelt"
    if _CRAFT_RE.search(first):
        return "craft"
    if _GATHER_RE.search(first):
        return "gather"
    return "other"


def parse_plan(text: str) -> list[PlanStep]:
    """Parse line-initial STEP blocks with 'Nx Item' quantity annotations.

    A step without a parseable quantity defaults to 1 and is flagged.
    """
    if not text:
        raise ValueError("plan text is empty")
    matches = list(_STEP_RE.finditer(text))
    if not matches:
        raise ValueError("no STEP blocks found in plan text")
    steps: list[PlanStep] = []
    for pos, m in enumerate(matches):
        end = matches[pos + 1].start() if pos + 1 < len(matches) else len(text)
        block = text[m.start() : end].strip()
        item = None
        quantity = 1
        defaulted = True
        item_line = _ITEM_LINE_RE.search(block)
        if item_line:
            qty_item = _QTY_ITEM_RE.search(item_line.group(1))
            if qty_item:
                quantity = int(qty_item.group(1))
                item = normalize_item(qty_item.group(2))
                defaulted = False
            else:
                item = normalize_item(item_line.group(1))
        steps.append(
            PlanStep(
                index=int(m.group(1)),
                action=_classify(block),
                item=item,
                quantity=quantity,
                text=block,
                quantity_defaulted=defaulted,
            )
        )
    return steps


@dataclass(frozen=True)
class PlanVerdict:
    executable: bool
    first_violation: Optional[tuple[int, str]]
    inventory: dict[str, int]


class RecipeLookupError(Exception):
    """A crafted/smelted item has no recipe: a fixture/config error, not a
    plan violation."""


def check_plan(
    steps: Sequence[PlanStep],
    recipes: RecipeTable,
    goal: tuple[str, int],
) -> PlanVerdict:
    """Simulate inventory from empty; stop at the first violating step.

    Gather adds items (checking tool presence when the table lists one for
    the item).  Craft/smelt consume recipe inputs scaled to whole batches and
    add the yield; tools are checked for presence, never consumed.
    """
    goal_item, goal_qty = goal
    if goal_qty < 1:
        raise ValueError("goal quantity must be >= 1")
    inventory: dict[str, int] = {}

    def violation(step: PlanStep, reason: str) -> PlanVerdict:
        return PlanVerdict(False, (step.index, reason), dict(inventory))

    for step in steps:
        if step.action == "other" or step.item is None:
            continue
        if step.action == "gather":
            recipe = recipes.get(step.item)
            if recipe is not None and recipe.tool and not recipe.inputs:
                if inventory.get(recipe.tool, 0) < 1:
                    return violation(step, f"missing tool {recipe.tool}")
            inventory[step.item] = inventory.get(step.item, 0) + step.quantity
            continue
        # craft / smelt
        recipe = recipes.get(step.item)
        if recipe is None:
            raise RecipeLookupError(f"no recipe for item {step.item!r} (step {step.index})")
        if not recipe.inputs:
            raise RecipeLookupError(f"recipe for {step.item!r} has no inputs")
        step.inputs = list(recipe.inputs)
        step.tool = recipe.tool
        if recipe.tool and inventory.get(recipe.tool, 0) < 1:
            return violation(step, f"missing tool {recipe.tool}")
        batches = -(-step.quantity // recipe.yields)  # ceil
        for item, qty in recipe.inputs:
            need = qty * batches
            if inventory.get(item, 0) < need:
                return violation(step, f"missing input {item}×{need}")
        for item, qty in recipe.inputs:
            inventory[item] -= qty * batches
        inventory[step.item] = inventory.get(step.item, 0) + recipe.yields * batches

    if inventory.get(goal_item, 0) >= goal_qty:
        return PlanVerdict(True, None, inventory)
    return PlanVerdict(
        False,
        (steps[-1].index if steps else 0, f"goal {goal_item}×{goal_qty} not met"),
        inventory,
    )


# ---------------------------------------------------------------------------
# Report emission
# ---------------------------------------------------------------------------

def load_eval_records(path: str) -> list[EvalRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            records.append(EvalRecord(rec["task_id"], tuple(bool(a) for a in rec["attempts"])))
    return records


def mean_pass_at_k(records: Sequence[EvalRecord], k: int) -> float:
    vals = [pass_at_k(r.samples, r.correct, k) for r in records]
    return sum(vals) / len(vals)


def mean_accuracy(records: Sequence[EvalRecord]) -> float:
    vals = [score_repeated(r.attempts) for r in records]
    return sum(vals) / len(vals)


def executability_stats(verdict_runs: Sequence[Sequence[bool]]) -> tuple[float, float]:
    """Mean and sample standard deviation of per-run executable rates (%)."""
    rates = [100.0 * sum(run) / len(run) for run in verdict_runs]
    mean = sum(rates) / len(rates)
    if len(rates) < 2:
        return mean, 0.0
    var = sum((r - mean) ** 2 for r in rates) / (len(rates) - 1)
    return mean, var ** 0.5


def method_table(
    per_method: dict[str, dict[str, float]],
    baseline_method: str = "DIRECT",
) -> list[dict]:
    """Rows of per-method metrics plus relative-improvement-vs-baseline rows.

    per_method maps method -> {metric name -> percent value}.
    """
    rows = []
    baseline = per_method.get(baseline_method, {})
    for method, metrics in per_method.items():
        rows.append({"method": method, **metrics})
    if baseline:
        rel = {"method": f"relative-improvement vs {baseline_method}"}
        for metric, base_val in baseline.items():
            best = {m: v.get(metric) for m, v in per_method.items() if m != baseline_method}
            for method, val in best.items():
                if val is None or base_val <= 0:
                    continue
                rel[f"{method}:{metric}"] = round(relative_improvement(base_val, val), 2)
        rows.append(rel)
    return rows


def render_csv(rows: list[dict]) -> str:
    import csv
    import io

    cols: list[str] = []
    for row in rows:
        for key in row:
            if key not in cols:
                cols.append(key)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=cols)
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def render_markdown(rows: list[dict]) -> str:
    cols: list[str] = []
    for row in rows:
        for key in row:
            if key not in cols:
                cols.append(key)
    lines = ["| " + " | ".join(cols) + " |", "| " + " | ".join("---" for _ in cols) + " |"]
    for row in rows:
        lines.append("| " + " | ".join(str(row.get(c, "")) for c in cols) + " |")
    return "\n".join(lines) + "\n"
