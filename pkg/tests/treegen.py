"""Random logical-form generators for fuzz and property tests."""

from __future__ import annotations

import random
from dataclasses import replace

from lfrerank.lf import (
    APP,
    BINDER,
    DEFAULT_UNORDERED,
    ENTITY,
    FUNQL,
    LAMBDA,
    LITERAL,
    OVERNIGHT,
    VAR,
    LfTree,
)

_FUNCTORS = ["answer", "state", "river", "loc_2", "next_to_2", "area_1", "count", "largest"]
_LAMBDA_PREDS = ["_flight", "_from", "_to", "_airline", "_fare", "_during_day", "_meal"]
_ENTITIES = ["alabama", "texas", "boston:_ci", "dallas:_ci", "aa:_al", "ohio", "kansas"]
_ON_FUNCS = ["call", "SW.filter", "SW.getProperty", "size", "rent", "arg max"]
_ON_ATOMS = ["Type.Meeting", "EndTime.", "Type.Player", "en.city.lisbon", "height", "width"]
_ON_OPS = ["⊓", "⊔", "=", "!=", "<", ">", "and", "or"]


def random_tree(rng: random.Random, formalism: str, max_depth: int = 4) -> LfTree:
    if formalism == FUNQL:
        return _funql(rng, max_depth)
    if formalism == LAMBDA:
        tree = _lambda(rng, max_depth, scope=[])
        # guarantee at least one binder so alpha tests have variables to rename
        if rng.random() < 0.8:
            var = LfTree(VAR, f"$b{rng.randint(0, 9)}", (), LAMBDA)
            body = _lambda(rng, max_depth - 1, scope=[var.label])
            return LfTree(BINDER, "_lambda", (var, LfTree(ENTITY, "e", (), LAMBDA), body), LAMBDA)
        return tree
    return _overnight(rng, max_depth)


def _funql(rng, depth) -> LfTree:
    if depth <= 0 or rng.random() < 0.3:
        if rng.random() < 0.2:
            return LfTree(LITERAL, str(rng.randint(0, 99)), (), FUNQL)
        return LfTree(ENTITY, rng.choice(_ENTITIES), (), FUNQL)
    n_children = rng.choice((1, 1, 1, 2, 3))
    children = tuple(_funql(rng, depth - 1) for _ in range(n_children))
    return LfTree(APP, rng.choice(_FUNCTORS), children, FUNQL)


def _lambda(rng, depth, scope) -> LfTree:
    if depth <= 0 or rng.random() < 0.25:
        if scope and rng.random() < 0.5:
            return LfTree(VAR, rng.choice(scope), (), LAMBDA)
        return LfTree(ENTITY, rng.choice(_ENTITIES), (), LAMBDA)
    roll = rng.random()
    if roll < 0.25:
        var = LfTree(VAR, f"$b{len(scope)}_{rng.randint(0, 9)}", (), LAMBDA)
        binder = rng.choice(("_lambda", "_exists", "_argmax"))
        inner_scope = scope + [var.label]
        body = tuple(_lambda(rng, depth - 1, inner_scope) for _ in range(rng.choice((1, 2))))
        return LfTree(BINDER, binder, (var,) + body, LAMBDA)
    if roll < 0.55:
        n = rng.choice((2, 3))
        children = tuple(_lambda(rng, depth - 1, scope) for _ in range(n))
        return LfTree(APP, rng.choice(("_and", "_or")), children, LAMBDA)
    n = rng.choice((1, 2))
    children = tuple(_lambda(rng, depth - 1, scope) for _ in range(n))
    return LfTree(APP, rng.choice(_LAMBDA_PREDS), children, LAMBDA)


def _overnight(rng, depth) -> LfTree:
    if depth <= 0 or rng.random() < 0.3:
        if rng.random() < 0.2:
            return LfTree(LITERAL, str(rng.randint(0, 99)), (), OVERNIGHT)
        return LfTree(ENTITY, rng.choice(_ON_ATOMS), (), OVERNIGHT)
    if rng.random() < 0.5:
        op = rng.choice(_ON_OPS)
        children = (_overnight(rng, depth - 1), _overnight(rng, depth - 1))
        return LfTree(APP, op, children, OVERNIGHT)
    n = rng.choice((1, 2, 3))
    children = tuple(_overnight(rng, depth - 1) for _ in range(n))
    return LfTree(APP, rng.choice(_ON_FUNCS), children, OVERNIGHT)


def permute_unordered(tree: LfTree, rng: random.Random) -> LfTree:
    """Randomly permute children of unordered functors throughout the tree."""
    unordered = DEFAULT_UNORDERED[tree.formalism]
    if tree.is_leaf():
        return tree
    children = [permute_unordered(c, rng) for c in tree.children]
    if tree.kind == APP and tree.label in unordered:
        rng.shuffle(children)
    return replace(tree, children=tuple(children))


def rename_vars(tree: LfTree, mapping: dict[str, str]) -> LfTree:
    """Apply a consistent variable renaming."""
    if tree.kind == VAR:
        return replace(tree, label=mapping.get(tree.label, tree.label))
    if tree.is_leaf():
        return tree
    return replace(tree, children=tuple(rename_vars(c, mapping) for c in tree.children))


def collect_vars(tree: LfTree) -> list[str]:
    out: list[str] = []

    def walk(node):
        if node.kind == VAR and node.label not in out:
            out.append(node.label)
        for c in node.children:
            walk(c)

    walk(tree)
    return out


def injective_renaming(names: list[str], rng: random.Random) -> dict[str, str]:
    offsets = rng.sample(range(100, 200), len(names))
    return {name: f"$r{off}" for name, off in zip(names, offsets)}
