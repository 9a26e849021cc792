"""Single-field mutation harness for exported chains.

Works on the JSON form of blocks: enumerate every mutable leaf, change
exactly one, reparse, and hand the result to the validator.  Mutations are
chosen so the mutated document still parses — the point is to prove the
*validator* catches them, not the JSON loader.
"""

import copy
import random
import re
from typing import Any, Dict, List, Optional, Tuple

_HEX_RE = re.compile(r"^[0-9a-f]{8,}$")
_TS_RE = re.compile(r"^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}Z$")
_DATE_RE = re.compile(r"^\d{4}-\d{2}-\d{2}$")
_NUM_RE = re.compile(r"^\d+(\.\d+)?$")

# leaves whose value is structural vocabulary rather than content; changing
# them makes the document unparseable, which is outside this harness's remit
_SKIP_KEYS = {"kind"}

Leaf = Tuple[int, Tuple[Any, ...]]  # (block index, path inside the block)


def _walk(value: Any, path: Tuple[Any, ...]) -> List[Tuple[Tuple[Any, ...], Any]]:
    leaves: List[Tuple[Tuple[Any, ...], Any]] = []
    if isinstance(value, dict):
        for key, child in value.items():
            if key in _SKIP_KEYS:
                continue
            leaves.extend(_walk(child, path + (key,)))
    elif isinstance(value, list):
        for index, child in enumerate(value):
            leaves.extend(_walk(child, path + (index,)))
    elif value is not None:
        leaves.append((path, value))
    return leaves


def enumerate_leaves(blocks_json: List[Dict[str, Any]]) -> List[Leaf]:
    leaves: List[Leaf] = []
    for block_index, block in enumerate(blocks_json):
        for path, _value in _walk(block, ()):
            leaves.append((block_index, path))
    return leaves


def _flip_hex(value: str, rng: random.Random) -> str:
    position = rng.randrange(len(value))
    replacement = rng.choice([c for c in "0123456789abcdef" if c != value[position]])
    return value[:position] + replacement + value[position + 1 :]


def _mutate_value(value: Any, rng: random.Random) -> Optional[Any]:
    if isinstance(value, bool):
        return not value
    if isinstance(value, int):
        return value + 1
    if isinstance(value, str):
        if _HEX_RE.match(value):
            return _flip_hex(value, rng)
        if _TS_RE.match(value):
            # change the units digit of the seconds; always stays parseable
            old = value[18]
            new = rng.choice([d for d in "0123456789" if d != old])
            return value[:18] + new + value[19:]
        if _DATE_RE.match(value):
            new_day = rng.choice(
                [f"{d:02d}" for d in range(1, 29) if f"{d:02d}" != value[8:10]]
            )
            return value[:8] + new_day
        if _NUM_RE.match(value):
            old = value[0]
            new = rng.choice([d for d in "123456789" if d != old])
            return new + value[1:]
        return value + "x"
    return None


def mutate_one_field(
    blocks_json: List[Dict[str, Any]], leaf: Leaf, rng: random.Random
) -> List[Dict[str, Any]]:
    """A deep copy of blocks_json with exactly the chosen leaf changed."""
    mutated = copy.deepcopy(blocks_json)
    block_index, path = leaf
    node: Any = mutated[block_index]
    for step in path[:-1]:
        node = node[step]
    new_value = _mutate_value(node[path[-1]], rng)
    assert new_value is not None and new_value != node[path[-1]]
    node[path[-1]] = new_value
    return mutated
