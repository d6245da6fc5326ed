"""Tiny expression-tree language used to define charts in JSON configs.

A tree is one of

* a number  -> constant,
* a string  -> coordinate variable ``"u1".."un"``, ``"v1".."vm"``, ``"w1".."wm"``
  (1-based component index),
* a list    -> ``[op, arg, ...]`` with op in ``+ - * / neg exp sin cos``.

``+`` and ``*`` accept two or more arguments, ``-`` is binary (or unary as
negation), ``/`` is binary, ``neg exp sin cos`` are unary.  Trees are compiled
to closures that evaluate vectorized over numpy arrays whose last axis holds
the coordinate components.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError

_UNARY = {
    "neg": np.negative,
    "exp": np.exp,
    "sin": np.sin,
    "cos": np.cos,
}


def _parse_variable(name: str, dims: dict[str, int]):
    prefix, index = name[:1], name[1:]
    if prefix not in dims or not index.isdigit():
        raise ConfigError([f"unknown variable {name!r} in expression"])
    component = int(index) - 1
    if not 0 <= component < dims[prefix]:
        raise ConfigError(
            [f"variable {name!r} out of range: {prefix} has {dims[prefix]} component(s)"]
        )
    return prefix, component


def compile_expression(tree, base_dim: int, fiber_dim: int, slots: str = "uvw"):
    """Compile a tree to ``f(u, v, w)`` acting on (..., dim) arrays.

    ``slots`` limits which coordinate groups may appear, e.g. ``"u"`` for a
    weight expression that must only depend on the base point.
    """
    dims = {}
    for slot in slots:
        dims[slot] = base_dim if slot == "u" else fiber_dim

    def build(node):
        if isinstance(node, bool):
            raise ConfigError(["booleans are not valid expression constants"])
        if isinstance(node, (int, float)):
            value = float(node)
            return lambda env: value
        if isinstance(node, str):
            prefix, component = _parse_variable(node, dims)
            return lambda env: env[prefix][..., component]
        if isinstance(node, (list, tuple)):
            if not node or not isinstance(node[0], str):
                raise ConfigError([f"malformed expression node {node!r}"])
            op, args = node[0], [build(a) for a in node[1:]]
            if op in _UNARY:
                if len(args) != 1:
                    raise ConfigError([f"operator {op!r} takes one argument"])
                fn, (arg,) = _UNARY[op], args
                return lambda env: fn(arg(env))
            if op == "+":
                if len(args) < 2:
                    raise ConfigError(["operator '+' takes at least two arguments"])
                return lambda env: sum(a(env) for a in args[1:]) + args[0](env)
            if op == "*":
                if len(args) < 2:
                    raise ConfigError(["operator '*' takes at least two arguments"])

                def product(env, args=args):
                    out = args[0](env)
                    for a in args[1:]:
                        out = out * a(env)
                    return out

                return product
            if op == "-":
                if len(args) == 1:
                    (arg,) = args
                    return lambda env: -arg(env)
                if len(args) == 2:
                    left, right = args
                    return lambda env: left(env) - right(env)
                raise ConfigError(["operator '-' takes one or two arguments"])
            if op == "/":
                if len(args) != 2:
                    raise ConfigError(["operator '/' takes two arguments"])
                num, den = args
                return lambda env: num(env) / den(env)
            raise ConfigError([f"unknown operator {op!r}"])
        raise ConfigError([f"malformed expression node {node!r}"])

    body = build(tree)

    def evaluate(u=None, v=None, w=None):
        env = {"u": u, "v": v, "w": w}
        missing = [s for s in slots if env[s] is None and _tree_uses(tree, s)]
        if missing:
            raise ConfigError([f"expression needs coordinate group(s) {missing}"])
        out = body(env)
        # Constants broadcast to the batch shape of whichever array is present.
        for arr in (u, v, w):
            if arr is not None:
                return np.broadcast_to(np.asarray(out, dtype=float), np.shape(arr)[:-1]).copy()
        return np.asarray(out, dtype=float)

    return evaluate


def _tree_uses(tree, slot: str) -> bool:
    if isinstance(tree, str):
        return tree[:1] == slot
    if isinstance(tree, (list, tuple)):
        return any(_tree_uses(a, slot) for a in tree[1:])
    return False


def compile_vector(trees, base_dim: int, fiber_dim: int, slots: str = "uvw"):
    """Compile a list of trees into ``f(u, v, w) -> (..., len(trees))``."""
    parts = [compile_expression(t, base_dim, fiber_dim, slots) for t in trees]

    def evaluate(u=None, v=None, w=None):
        cols = [p(u, v, w) for p in parts]
        if not cols:
            for arr in (u, v, w):
                if arr is not None:
                    return np.empty(np.shape(arr)[:-1] + (0,), dtype=float)
            return np.empty((0,), dtype=float)
        return np.stack(cols, axis=-1)

    return evaluate
