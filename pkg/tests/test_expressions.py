import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from groupoidlab.errors import ConfigError
from groupoidlab.expressions import compile_expression, compile_vector


def test_constants_and_variables():
    f = compile_expression(["+", "u1", 2.5], 1, 1)
    assert f(u=np.array([0.5]), v=np.array([0.0])) == pytest.approx(3.0)
    g = compile_expression("v2", 0, 3)
    assert g(v=np.array([1.0, 7.0, -2.0])) == pytest.approx(7.0)


def test_vector_broadcasts_over_batches():
    f = compile_vector([["+", "v1", "w1"], ["*", "v2", ["exp", "w1"]]], 0, 2)
    v = np.random.default_rng(0).normal(size=(5, 4, 2))
    w = np.random.default_rng(1).normal(size=(5, 4, 2))
    out = f(v=v, w=w)
    assert out.shape == (5, 4, 2)
    np.testing.assert_allclose(out[..., 0], v[..., 0] + w[..., 0])
    np.testing.assert_allclose(out[..., 1], v[..., 1] * np.exp(w[..., 0]))


def test_unary_minus_and_division():
    f = compile_expression(["-", ["/", "u1", 4.0]], 1, 1)
    assert f(u=np.array([2.0])) == pytest.approx(-0.5)


@pytest.mark.parametrize(
    "tree, message",
    [
        ("q1", "unknown variable"),
        ("u3", "out of range"),
        (["pow", "u1", 2], "unknown operator"),
        (["exp"], "takes one argument"),
        (["+", "u1"], "at least two"),
        (True, "not valid"),
    ],
)
def test_malformed_trees_raise(tree, message):
    with pytest.raises(ConfigError, match=message):
        compile_expression(tree, 1, 1)


def test_missing_coordinate_group_raises():
    f = compile_expression("w1", 0, 1)
    with pytest.raises(ConfigError, match="needs coordinate group"):
        f(v=np.array([1.0]))


@st.composite
def trees(draw, depth=0):
    if depth >= 3 or draw(st.booleans()):
        return draw(
            st.one_of(
                st.floats(-2.0, 2.0).map(float),
                st.sampled_from(["u1", "v1", "w1"]),
            )
        )
    op = draw(st.sampled_from(["+", "*", "-", "neg", "exp", "sin", "cos"]))
    if op in ("neg", "exp", "sin", "cos"):
        return [op, draw(trees(depth=depth + 1))]
    return [op, draw(trees(depth=depth + 1)), draw(trees(depth=depth + 1))]


def _reference_eval(tree, u, v, w):
    if isinstance(tree, float):
        return tree
    if isinstance(tree, str):
        return {"u": u, "v": v, "w": w}[tree[0]][int(tree[1:]) - 1]
    op, *args = tree
    vals = [_reference_eval(a, u, v, w) for a in args]
    table = {
        "+": lambda a, b: a + b,
        "*": lambda a, b: a * b,
        "-": lambda a, b=None: -a if b is None else a - b,
        "neg": lambda a: -a,
        "exp": np.exp,
        "sin": np.sin,
        "cos": np.cos,
    }
    return table[op](*vals)


@given(tree=trees(), point=st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)))
@settings(max_examples=60, deadline=None)
def test_matches_reference_interpreter(tree, point):
    u, v, w = (np.array([c]) for c in point)
    compiled = compile_expression(tree, 1, 1)
    expected = _reference_eval(tree, u, v, w)
    got = compiled(u=u, v=v, w=w)
    np.testing.assert_allclose(got, expected, rtol=1e-13, atol=1e-13)
