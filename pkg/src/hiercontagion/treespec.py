"""JSON tree specifications.

One object per node::

    {"id": "A", "coeff": 1.0, "exp": [1, 2], "v": 0.5, "children": []}

``v`` is required on leaves and optional (checked against the children) on
internal nodes.  Parsing only checks shape and types; structural assumptions
are left to :func:`hiercontagion.model.validate`.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

from .model import HierarchyTree, TreeNode, node

_KEYS = {"id", "coeff", "exp", "v", "children"}


class TreeSpecError(ValueError):
    """Malformed tree document; the message names the offending node."""


def _where(obj: Any, path: str) -> str:
    if isinstance(obj, dict) and isinstance(obj.get("id"), str):
        return f"node {obj['id']!r} (at {path})"
    return f"node at {path}"


def _number(obj, key, where):
    x = obj[key]
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
        raise TreeSpecError(f"{where}: {key!r} must be a finite number, got {x!r}")
    return float(x)


def parse_node(obj: Any, path: str = "root") -> TreeNode:
    where = _where(obj, path)
    if not isinstance(obj, dict):
        raise TreeSpecError(f"{where}: expected an object, got {type(obj).__name__}")
    extra = set(obj) - _KEYS
    if extra:
        raise TreeSpecError(f"{where}: unknown keys {sorted(extra)}")
    for key in ("id", "coeff", "exp"):
        if key not in obj:
            raise TreeSpecError(f"{where}: missing {key!r}")
    if not isinstance(obj["id"], str) or not obj["id"]:
        raise TreeSpecError(f"{where}: 'id' must be a non-empty string")
    coeff = _number(obj, "coeff", where)
    exp = obj["exp"]
    if (not isinstance(exp, list) or len(exp) != 2
            or not all(isinstance(e, int) and not isinstance(e, bool) for e in exp)):
        raise TreeSpecError(f"{where}: 'exp' must be [numerator, denominator] integers, got {exp!r}")
    if exp[1] <= 0:
        raise TreeSpecError(f"{where}: exponent denominator must be positive, got {exp[1]}")
    if exp[0] < 0:
        raise TreeSpecError(f"{where}: exponent must be non-negative, got {exp[0]}/{exp[1]}")
    children_raw = obj.get("children", [])
    if not isinstance(children_raw, list):
        raise TreeSpecError(f"{where}: 'children' must be a list")
    v = _number(obj, "v", where) if "v" in obj else None
    if not children_raw and v is None:
        raise TreeSpecError(f"{where}: leaves need a vertex fraction 'v'")
    children = [parse_node(c, f"{path}.children[{i}]") for i, c in enumerate(children_raw)]
    return node(obj["id"], coeff, tuple(exp), v=v, children=children)


def parse_tree(obj: Any, r: int = 2) -> HierarchyTree:
    return HierarchyTree(parse_node(obj), r)


def load_tree(path: str | Path, r: int = 2) -> HierarchyTree:
    """Read a tree file; JSON syntax errors become :class:`TreeSpecError`."""
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise TreeSpecError(f"{path}: invalid JSON ({exc})") from exc
    return parse_tree(obj, r)


def node_to_dict(t: TreeNode) -> dict:
    out: dict[str, Any] = {"id": t.id, "coeff": t.coeff,
                           "exp": [t.exponent.numerator, t.exponent.denominator]}
    if t.is_leaf:
        out["v"] = t.leaf_v
    else:
        if t.leaf_v is not None:
            out["v"] = t.leaf_v
        out["children"] = [node_to_dict(c) for c in t.children]
    return out


def dump_tree(tree: HierarchyTree) -> str:
    return json.dumps(node_to_dict(tree.root), indent=2)
