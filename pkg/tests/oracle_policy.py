"""A deliberately naive requirement interpreter, plus random generators.

The production evaluator walks the tree once and builds a breakdown.  This
one re-derives satisfaction from first principles over the plain JSON form
of an expression and a list of token dicts, sharing no code with the
package, so the two can disagree if either is wrong.
"""

import random
from decimal import Decimal
from typing import Any, Dict, List, Optional

COURSE_POOL = [f"course-{n}" for n in range(1, 9)]
STACK_POOL = ["stack-data", "stack-web", "stack-ml", None]
CREDIT_POOL = ["1", "2", "3", "4.5", "6", "7.5"]


def brute_force_satisfied(expr: Dict[str, Any], tokens: List[Dict[str, Any]]) -> bool:
    kind = expr["kind"]
    if kind == "require_token":
        hits = 0
        for token in tokens:
            if token["course_id"] == expr["course_id"]:
                hits += 1
        return hits > 0
    if kind == "require_stack":
        hits = 0
        for token in tokens:
            if token["stack_id"] == expr["stack_id"]:
                hits += 1
        return hits > 0
    if kind == "all":
        for child in expr["children"]:
            if not brute_force_satisfied(child, tokens):
                return False
        return True
    if kind == "any":
        for child in expr["children"]:
            if brute_force_satisfied(child, tokens):
                return True
        return False
    if kind == "at_least_credits":
        total = Decimal(0)
        wanted: Optional[str] = expr.get("course_filter")
        for token in tokens:
            if wanted is not None and token["course_id"] != wanted:
                continue
            total += Decimal(token["credits"])
        return total >= Decimal(expr["min_credits"])
    raise ValueError(f"oracle does not know kind {kind!r}")


def random_requirement(rng: random.Random, depth: int = 1, max_depth: int = 4) -> Dict[str, Any]:
    """A random expression tree with depth <= max_depth (leaves weighted up)."""
    leaf_kinds = ["require_token", "require_stack", "at_least_credits"]
    kinds = list(leaf_kinds)
    if depth < max_depth:
        kinds += ["all", "any", "all", "any"]
    kind = rng.choice(kinds)
    if kind == "require_token":
        return {"kind": kind, "course_id": rng.choice(COURSE_POOL)}
    if kind == "require_stack":
        stacks = [s for s in STACK_POOL if s is not None]
        return {"kind": kind, "stack_id": rng.choice(stacks)}
    if kind == "at_least_credits":
        node: Dict[str, Any] = {
            "kind": kind,
            "min_credits": rng.choice(["2", "3", "5", "6", "9", "12"]),
        }
        if rng.random() < 0.3:
            node["course_filter"] = rng.choice(COURSE_POOL)
        return node
    children = [
        random_requirement(rng, depth + 1, max_depth)
        for _ in range(rng.randint(1, 3))
    ]
    return {"kind": kind, "children": children}


def random_token_dicts(rng: random.Random, max_tokens: int = 8) -> List[Dict[str, Any]]:
    return [
        {
            "course_id": rng.choice(COURSE_POOL),
            "stack_id": rng.choice(STACK_POOL),
            "credits": rng.choice(CREDIT_POOL),
        }
        for _ in range(rng.randint(0, max_tokens))
    ]
