"""Synthetic tree and corpus generators used by tests, the acceptance
suite, and the toy training corpus for the CNN harness."""

from __future__ import annotations

import random

from .tree import Ast, AstNode

_KIND_POOL = (
    "FileAST", "FuncDef", "Decl", "TypeDecl", "IdentifierType", "ParamList",
    "Compound", "If", "While", "For", "Return", "Assignment", "BinaryOp",
    "UnaryOp", "FuncCall", "ExprList", "ID", "Constant", "ArrayDecl", "PtrDecl",
)
_PARAM_POOL = ("int", "char", "x", "y", "main", "printf", "+", "-", "*", "0", "5", "buf")


def random_ast(rng: random.Random, max_depth: int = 12,
               max_level_width: int = 16, kind_pool=_KIND_POOL) -> Ast:
    """Random tree with bounded depth and bounded node count per level."""
    root = {"kind": rng.choice(kind_pool), "params": _random_params(rng), "children": []}
    frontier = [root]
    depth = 0
    while frontier and depth < max_depth:
        next_frontier = []
        budget = max_level_width
        rng.shuffle(frontier)
        for node in frontier:
            if budget <= 0:
                break
            n_children = rng.randint(0, min(4, budget))
            if depth == 0 and n_children == 0:
                n_children = rng.randint(1, min(4, budget))
            for _ in range(n_children):
                child = {"kind": rng.choice(kind_pool),
                         "params": _random_params(rng), "children": []}
                node["children"].append(child)
                next_frontier.append(child)
                budget -= 1
        frontier = next_frontier
        depth += 1

    def freeze(d) -> AstNode:
        return AstNode(kind=d["kind"], params=d["params"],
                       children=tuple(freeze(c) for c in d["children"]))

    return Ast.from_root(freeze(root))


def _random_params(rng: random.Random) -> tuple[str, ...]:
    return tuple(rng.choice(_PARAM_POOL) for _ in range(rng.randint(0, 3)))


# --- toy corpus for the trainer --------------------------------------------
#
# Two structurally distinct families: loop-shaped trees built from
# While/BinaryOp tokens vs call-shaped trees built from FuncCall/ExprList
# tokens. Distinct token kinds get distinct colors, so the families are
# visually separable by construction.


def family_a_ast(rng: random.Random) -> Ast:
    body = [AstNode("While", params=("w",), children=(
        AstNode("BinaryOp", params=("<",), children=(
            AstNode("ID", params=("i",)),
            AstNode("Constant", params=("int", str(rng.randint(0, 9)))),
        )),
        AstNode("Compound", children=tuple(
            AstNode("Assignment", params=("=",), children=(
                AstNode("ID", params=(rng.choice("abc"),)),
                AstNode("Constant", params=("int", str(rng.randint(0, 9)))),
            ))
            for _ in range(rng.randint(1, 3))
        )),
    )) for _ in range(rng.randint(1, 2))]
    root = AstNode("FuncDef", children=(
        AstNode("Decl", params=("loopy",)),
        AstNode("Compound", children=tuple(body)),
    ))
    return Ast.from_root(root)


def family_b_ast(rng: random.Random) -> Ast:
    calls = [AstNode("FuncCall", children=(
        AstNode("ID", params=(rng.choice(("printf", "puts", "exit")),)),
        AstNode("ExprList", children=tuple(
            AstNode("Constant", params=("string", f'"s{rng.randint(0, 9)}"'))
            for _ in range(rng.randint(1, 3))
        )),
    )) for _ in range(rng.randint(1, 3))]
    root = AstNode("FuncDef", children=(
        AstNode("Decl", params=("cally",)),
        AstNode("Compound", children=tuple(calls)),
    ))
    return Ast.from_root(root)


def toy_corpus_asts(n: int, seed: int = 0) -> list[tuple[str, Ast, bool]]:
    """n samples, alternating between the two families; family A is the
    positive (vulnerable) class. Returns (id, ast, positive) triples."""
    rng = random.Random(seed)
    out = []
    for i in range(n):
        positive = i % 2 == 0
        ast = family_a_ast(rng) if positive else family_b_ast(rng)
        out.append((f"toy{i:05d}", ast, positive))
    return out
