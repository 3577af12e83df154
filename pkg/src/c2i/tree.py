"""AST data model, traversal, measurement, and the JSON interchange format.

Nodes are immutable after construction, so trees can be shared freely
across threads. A node carries a kind string and at most three content
parameters; child order is significant everywhere in the pipeline.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator

from .errors import SchemaError

MAX_PARAMS = 3


@dataclass(frozen=True)
class AstNode:
    kind: str
    params: tuple[str, ...] = ()
    children: tuple["AstNode", ...] = ()

    def __post_init__(self):
        if not isinstance(self.kind, str) or not self.kind:
            raise SchemaError("node kind must be a non-empty string")
        object.__setattr__(self, "params", tuple(self.params))
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.params) > MAX_PARAMS:
            raise SchemaError(
                f"node {self.kind!r} has {len(self.params)} params; at most {MAX_PARAMS} allowed"
            )
        for p in self.params:
            if not isinstance(p, str):
                raise SchemaError(f"node {self.kind!r}: params must be strings")

    def key(self) -> tuple[str, tuple[str, ...]]:
        """Content identity used by the color codebook."""
        return (self.kind, self.params)


@dataclass(frozen=True)
class Ast:
    root: AstNode
    node_count: int = field(default=0)
    depth: int = field(default=0)

    @classmethod
    def from_root(cls, root: AstNode) -> "Ast":
        count = 0
        deepest = 0
        stack = [(root, 0)]
        while stack:
            node, level = stack.pop()
            count += 1
            deepest = max(deepest, level)
            stack.extend((c, level + 1) for c in node.children)
        return cls(root=root, node_count=count, depth=deepest)

    def __eq__(self, other):
        if not isinstance(other, Ast):
            return NotImplemented
        return self.root == other.root

    def __hash__(self):
        return hash(self.root)


def bfs(ast: Ast) -> Iterator[tuple[AstNode, int]]:
    """Yield (node, level) in breadth-first order, children in stored order."""
    queue = [(ast.root, 0)]
    i = 0
    while i < len(queue):
        node, level = queue[i]
        i += 1
        yield node, level
        queue.extend((c, level + 1) for c in node.children)


def depth(ast: Ast) -> int:
    """Level of the deepest node, with the root at level 0."""
    return max(level for _, level in bfs(ast))


def level_widths(ast: Ast) -> list[int]:
    """Node count at each level; index 0 is the root's level."""
    widths: list[int] = []
    for _, level in bfs(ast):
        if level == len(widths):
            widths.append(0)
        widths[level] += 1
    return widths


# --- interchange format -------------------------------------------------
#
# One node object per document: {"kind": str, "params": [str...], "children": [...]}.
# "params" and "children" may be omitted when empty.


def _node_from_obj(obj, path: str) -> AstNode:
    if not isinstance(obj, dict):
        raise SchemaError(f"{path}: node must be an object, got {type(obj).__name__}")
    unknown = set(obj) - {"kind", "params", "children"}
    if unknown:
        raise SchemaError(f"{path}: unknown keys {sorted(unknown)}")
    kind = obj.get("kind")
    if not isinstance(kind, str) or not kind:
        raise SchemaError(f"{path}: 'kind' must be a non-empty string")
    params = obj.get("params", [])
    if not isinstance(params, list) or not all(isinstance(p, str) for p in params):
        raise SchemaError(f"{path}: 'params' must be a list of strings")
    if len(params) > MAX_PARAMS:
        raise SchemaError(f"{path}: {len(params)} params; at most {MAX_PARAMS} allowed")
    children_obj = obj.get("children", [])
    if not isinstance(children_obj, list):
        raise SchemaError(f"{path}: 'children' must be a list")
    children = tuple(
        _node_from_obj(c, f"{path}.children[{i}]") for i, c in enumerate(children_obj)
    )
    return AstNode(kind=kind, params=tuple(params), children=children)


def read_interchange(text: str) -> Ast:
    """Parse an interchange JSON document into an Ast.

    Raises SchemaError with the document position on malformed JSON and
    with the node path on schema violations.
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"line {e.lineno}, column {e.colno}: {e.msg}") from e
    return Ast.from_root(_node_from_obj(obj, "$"))


def _node_to_obj(node: AstNode) -> dict:
    obj: dict = {"kind": node.kind}
    if node.params:
        obj["params"] = list(node.params)
    if node.children:
        obj["children"] = [_node_to_obj(c) for c in node.children]
    return obj


def write_interchange(ast: Ast) -> str:
    """Serialize to the canonical interchange form (compact separators)."""
    return json.dumps(_node_to_obj(ast.root), separators=(",", ":"), ensure_ascii=False)
