import numpy as np
import pytest
from dataclasses import replace

import groupoidlab as gl
from groupoidlab.errors import ConvergenceError, GroupoidLabError

from oracles import kernel_composition_additive


def test_solve_product_additive_is_exact():
    chart = gl.builtin_chart("abelian_bundle", n=1, m=1)
    u = np.array([[0.2]])
    v = np.array([[0.7]])
    target = np.array([[-0.4]])
    w = gl.solve_product(chart, u, v, target)
    assert np.array_equal(w, target - v)


def test_solve_product_heisenberg_contract(heisenberg):
    rng = np.random.default_rng(12)
    v = rng.uniform(-2, 2, (100, 3))
    target = rng.uniform(-2, 2, (100, 3))
    w = gl.solve_product(heisenberg, np.zeros((100, 0)), v, target)
    residual = np.max(np.abs(heisenberg.product(np.zeros((100, 0)), v, w) - target))
    assert residual <= 1e-12


def test_newton_matches_closed_form(heisenberg):
    newton_chart = replace(heisenberg, product_solver=None, product_w_jacobian=None)
    rng = np.random.default_rng(5)
    v = rng.uniform(-1.5, 1.5, (50, 3))
    target = rng.uniform(-1.5, 1.5, (50, 3))
    u = np.zeros((50, 0))
    np.testing.assert_allclose(
        gl.solve_product(newton_chart, u, v, target),
        gl.solve_product(heisenberg, u, v, target),
        atol=1e-12,
    )
    # inverse through Newton agrees with the closed-form inverse -v
    np.testing.assert_allclose(
        gl.solve_product(newton_chart, u, v, np.zeros_like(v)), -v, atol=1e-12
    )


def test_newton_nonconvergence_raises():
    chart = gl.chart_from_spec(
        {
            "name": "nasty",
            "base_dim": 0,
            "fiber_dim": 1,
            "source_map": [],
            # p(v, w) = v + w stays solvable, but one iteration cannot finish
            "product": [["+", "v1", "w1", ["*", 0.4, "w1", "w1", "w1"]]],
            "unit_weight": 1.0,
            "base_box": [],
            "fiber_box": [[-3.0, 3.0]],
        }
    )
    with pytest.raises(ConvergenceError):
        gl.solve_product(chart, np.zeros((1, 0)), np.array([[0.1]]), np.array([[2.0]]), max_iter=1)


# -- haar density ---------------------------------------------------------------

def test_haar_density_trivial_charts(pair1, heisenberg):
    rng = np.random.default_rng(0)
    v = rng.uniform(-2, 2, (20, 1))
    u = rng.uniform(-2, 2, (20, 1))
    np.testing.assert_allclose(gl.haar_density(pair1, u, v), 1.0, atol=1e-12)
    v3 = rng.uniform(-2, 2, (20, 3))
    np.testing.assert_allclose(
        gl.haar_density(heisenberg, np.zeros((20, 0)), v3), 1.0, atol=1e-12
    )


def test_haar_density_ax_plus_b_modular_factor():
    chart = gl.builtin_chart("ax_plus_b")
    v = np.array([[1.0, 0.3], [-0.5, 0.1]])
    np.testing.assert_allclose(
        gl.haar_density(chart, np.zeros((2, 0)), v), np.exp(-v[:, 0]), rtol=1e-12
    )


def test_haar_density_normalized_at_units():
    chart = gl.builtin_chart("pair", n=1, mu_e=["exp", ["-", ["*", "u1", "u1"]]])
    u = np.array([[0.5], [-0.3]])
    np.testing.assert_allclose(
        gl.haar_density(chart, u, np.zeros((2, 1))),
        np.exp(-u[:, 0] ** 2),
        rtol=1e-12,
    )


@pytest.mark.parametrize(
    "name, params",
    [
        ("pair", {"n": 1}),
        ("abelian_bundle", {"n": 1, "m": 2}),
        ("heisenberg", {}),
        ("ax_plus_b", {}),
    ],
)
def test_haar_left_invariance(name, params):
    chart = gl.builtin_chart(name, **params)
    assert gl.left_invariance_residual(chart, sample_count=100, seed=17) <= 1e-8


# -- deformed product ------------------------------------------------------------

def bundle_setup():
    chart = gl.builtin_chart("abelian_bundle", n=1, m=1)
    grid = gl.GridSpec(base=(gl.Axis.centered(4.0, 32),), fiber=(gl.Axis.centered(8.0, 64),))
    f = gl.SymbolSpec.gaussian(1, 1, xi_widths=1.2)
    g = gl.SymbolSpec.gaussian(1, 1, xi_powers=[1])
    return chart, grid, f, g


def test_flat_bundle_matches_fiber_convolution():
    chart, grid, f, g = bundle_setup()
    mu = gl.unit_weight_on_grid(chart, grid)
    deformed = gl.deformed_product(chart, grid, f, g, 0.2)
    plain = gl.fiber_convolve(gl.eval_symbol(f, grid), gl.eval_symbol(g, grid), mu)
    assert np.max(np.abs(deformed.values - plain.values)) <= 1e-12 * gl.scale_of(plain.values)


def test_flat_bundle_t_independent_and_commutative():
    chart, grid, f, g = bundle_setup()
    field = gl.DeformationField(chart=chart, grid=grid, f0=f, g0=g, t_values=(0.4, 0.2, 0.1, 0.05))
    reference = gl.deformed_convolution(field, 0.4)
    for t in (0.2, 0.1, 0.05):
        other = gl.deformed_convolution(field, t)
        assert np.max(np.abs(other.values - reference.values)) <= 1e-12 * gl.scale_of(reference.values)
        commutator = gl.scaled_commutator(field, t)
        assert np.max(np.abs(commutator.values)) <= 1e-10


def test_zero_right_factor_gives_zero(pair1, pair1_grid64, gauss11):
    out = gl.deformed_product(pair1, pair1_grid64, gauss11, gl.SymbolSpec.zero(1, 1), 0.1)
    assert np.all(out.values == 0)


def test_kernel_composition_oracle_at_unit_scale(pair1):
    grid = gl.GridSpec(base=(gl.Axis.centered(2.0, 32),), fiber=(gl.Axis.centered(8.0, 64),))
    f = gl.SymbolSpec.gaussian(1, 1)
    g = gl.SymbolSpec.gaussian(1, 1, x_powers=[1], xi_widths=1.2)
    deformed = gl.deformed_product(pair1, grid, f, g, 1.0)
    oracle = kernel_composition_additive(
        lambda x, xi: np.exp(-x**2 - xi**2),
        lambda x, xi: x * np.exp(-x**2 - 1.2 * xi**2),
        grid.base[0].nodes,
        grid.fiber[0].nodes,
    )
    assert np.max(np.abs(deformed.values.real - oracle)) <= 1e-6
    assert np.max(np.abs(deformed.values.imag)) == 0.0


def test_real_symbols_give_real_commutator(pair1, pair1_grid64, gauss11, xxigauss11):
    field = gl.DeformationField(
        chart=pair1, grid=pair1_grid64, f0=gauss11, g0=xxigauss11, t_values=(0.2, 0.1, 0.05)
    )
    commutator = gl.scaled_commutator(field, 0.1)
    assert np.max(np.abs(commutator.values.imag)) <= 1e-12 * gl.scale_of(commutator.values)


def test_workers_do_not_change_bits(pair1, pair1_grid64, gauss11, xxigauss11):
    one = gl.deformed_product(pair1, pair1_grid64, gauss11, xxigauss11, 0.1, workers=1)
    three = gl.deformed_product(pair1, pair1_grid64, gauss11, xxigauss11, 0.1, workers=3)
    assert np.array_equal(one.values, three.values)


def test_associativity_at_fixed_scale(pair1):
    f = gl.SymbolSpec.gaussian(1, 1, xi_widths=1.2)
    g = gl.SymbolSpec.gaussian(1, 1, xi_powers=[1])
    h = gl.SymbolSpec.gaussian(1, 1, x_powers=[1], x_widths=1.1)
    t = 0.1

    def residual(intervals):
        grid = gl.GridSpec(
            base=(gl.Axis.centered(6.0, intervals),), fiber=(gl.Axis.centered(8.0, intervals),)
        )
        fg = gl.deformed_product(pair1, grid, f, g, t)
        left = gl.deformed_product(pair1, grid, fg, h, t)
        gh = gl.deformed_product(pair1, grid, g, h, t)
        right = gl.deformed_product(pair1, grid, f, gh, t)
        return np.max(np.abs(left.values - right.values)) / gl.scale_of(left.values, right.values)

    coarse = residual(128)
    fine = residual(256)
    assert fine <= 5e-3
    assert coarse / fine >= 2.0  # first-kind interpolation error, O(h^2)


# -- field validation -------------------------------------------------------------

def test_field_rejects_zero_and_increasing_t(pair1, pair1_grid64, gauss11):
    with pytest.raises(GroupoidLabError, match="nonzero"):
        gl.DeformationField(chart=pair1, grid=pair1_grid64, f0=gauss11, g0=gauss11, t_values=(0.2, 0.0))
    with pytest.raises(GroupoidLabError, match="decrease"):
        gl.DeformationField(chart=pair1, grid=pair1_grid64, f0=gauss11, g0=gauss11, t_values=(0.1, 0.2))


def test_field_rejects_out_of_box_scale(gauss11):
    chart = gl.builtin_chart("pair", n=1, half_width=3.0)
    grid = gl.GridSpec(base=(gl.Axis.centered(2.0, 16),), fiber=(gl.Axis.centered(8.0, 64),))
    with pytest.raises(GroupoidLabError, match="outside its box"):
        gl.DeformationField(chart=chart, grid=grid, f0=gauss11, g0=gauss11, t_values=(0.5, 0.25))


def test_table_requires_geometric_sweep(pair1, pair1_grid64, gauss11, xxigauss11):
    field = gl.DeformationField(
        chart=pair1, grid=pair1_grid64, f0=gauss11, g0=xxigauss11, t_values=(0.2, 0.1, 0.07)
    )
    with pytest.raises(GroupoidLabError, match="geometric"):
        gl.classical_limit_error_table(field)


# -- the limit itself --------------------------------------------------------------

def test_classical_limit_additive_chart(pair1, pair1_grid64, gauss11, xxigauss11):
    field = gl.DeformationField(
        chart=pair1, grid=pair1_grid64, f0=gauss11, g0=xxigauss11, t_values=(0.2, 0.1, 0.05)
    )
    table = gl.classical_limit_error_table(field)
    assert table.errors_decreasing()
    for ratio in table.ratios():
        assert 0.35 <= ratio <= 0.65
    assert table.observed_constant == pytest.approx(1.0 / (2.0 * np.pi), rel=5e-3)


def test_classical_limit_ax_plus_b_first_order():
    chart = gl.builtin_chart("ax_plus_b", half_width=4.0)
    grid = gl.GridSpec(base=(), fiber=(gl.Axis.centered(3.5, 24), gl.Axis.centered(3.5, 24)))
    f = gl.SymbolSpec.gaussian(0, 2, xi_widths=[2.5, 2.5])
    g = gl.SymbolSpec.gaussian(0, 2, xi_powers=[1, 0], xi_widths=[3.0, 2.6])
    field = gl.DeformationField(chart=chart, grid=grid, f0=f, g0=g, t_values=(0.2, 0.1, 0.05))
    table = gl.classical_limit_error_table(field)
    assert table.errors_decreasing()
    for ratio in table.ratios():
        assert 0.35 <= ratio <= 0.65


def test_classical_limit_heisenberg_is_second_order(heisenberg, heis_grid16):
    # the midpoint-symmetric product law makes the deformed commutator odd in t,
    # so the error is O(t^2): super-convergent, ratios near 1/4 rather than 1/2
    f = gl.SymbolSpec.gaussian(0, 3, xi_widths=[1.1, 1.2, 1.1], xi_centers=[0.3, 0.0, -0.2])
    g = gl.SymbolSpec.gaussian(0, 3, xi_powers=[1, 0, 0], xi_widths=[1.2, 1.1, 1.3])
    field = gl.DeformationField(
        chart=heisenberg, grid=heis_grid16, f0=f, g0=g, t_values=(0.2, 0.1, 0.05)
    )
    table = gl.classical_limit_error_table(field)
    assert table.errors_decreasing()
    for ratio in table.ratios():
        assert 0.2 <= ratio <= 0.3
    assert table.observed_constant == pytest.approx(1.0 / (2.0 * np.pi), rel=1e-2)
