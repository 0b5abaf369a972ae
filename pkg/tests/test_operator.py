import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import eigh_tridiagonal

from shnol import registry
from shnol.errors import InvalidParameter, NonPositive, NotPositiveDefinite
from shnol.grid import GridFunction, make_graded_grid
from shnol.operator import (
    Coefficients,
    DiscreteOperator,
    OperatorSpec,
    apply,
    assemble_form,
    check_semibound,
    discretize,
    distance_to_spectrum,
    eigenvalues_tridiagonal,
    ground_state_transform,
    harmonic_residual,
    q_norm,
    solve_shifted,
    weyl_residual_dual_norm,
)
from shnol.special import minimal_growth_solution


def flat(lo, hi, n, V=None, **kw):
    co = Coefficients(log_m=registry.log_positive("one"), V=V or registry.potential("zero"))
    return OperatorSpec.build(make_graded_grid(lo, hi, n), co, **kw)


def sample(g, f, df):
    return GridFunction(g, f(g.nodes), df(g.nodes))


def test_form_constant_is_zero():
    s = flat(0, 1, 20)
    one = GridFunction(s.grid, np.ones(21), np.zeros(21))
    assert assemble_form(s, one, one) == 0.0


def test_form_linear():
    s = flat(0, 1, 20)
    u = sample(s.grid, lambda x: x, np.ones_like)
    assert assemble_form(s, u, u) == pytest.approx(1.0, rel=1e-14)


def test_form_cubic_weight():
    co = Coefficients(log_m=registry.log_positive("x^3"))
    s = OperatorSpec.build(make_graded_grid(1, 2, 400), co)
    u = GridFunction(s.grid, s.grid.nodes.copy())  # no exact gradient: Simpson path
    assert assemble_form(s, u, u) == pytest.approx(15 / 4, abs=1e-8)


def test_q_norm_cases():
    s = flat(0, 1, 2000)
    g = s.grid
    zero = GridFunction(g, np.zeros(g.count), np.zeros(g.count))
    assert q_norm(s, zero) == 0.0
    one = GridFunction(g, np.ones(g.count), np.zeros(g.count))
    assert q_norm(s, one) == pytest.approx(1.0, rel=1e-14)
    v = sample(g, lambda x: np.sin(np.pi * x), lambda x: np.pi * np.cos(np.pi * x))
    assert abs(q_norm(s, v) - math.sqrt(math.pi ** 2 / 2 + 0.5)) < 1e-4


def test_semibound_constant_from_potential():
    s = flat(0, 1, 50, V=registry.potential("const(-2.5)"))
    assert s.c == 2.5
    assert check_semibound(s)


def test_transform_identity():
    co = Coefficients(log_m=registry.log_positive("x^2"), W=registry.potential("const(0.3)"))
    s = OperatorSpec.build(make_graded_grid(1, 3, 50), co)
    one = GridFunction(s.grid, np.ones(51), np.zeros(51))
    with pytest.warns(RuntimeWarning):  # W != 0, so h = 1 is not harmonic
        t = ground_state_transform(s, one)
    assert np.array_equal(t.log_m, s.log_m)
    assert np.array_equal(t.log_a, s.log_a)
    assert np.allclose(t.V, -0.3) and t.W is None


def test_transform_rejects_nonpositive():
    s = flat(0, 1, 20)
    with pytest.raises(NonPositive):
        ground_state_transform(s, GridFunction(s.grid, np.linspace(-1, 1, 21)))


def test_transform_hyperbolic_weight_flat():
    co = Coefficients(log_m=registry.log_positive("sinh^2"), V=registry.potential("hyperbolic(3)"))
    s = OperatorSpec.build(make_graded_grid(0.5, 20, 4000), co)
    h = minimal_growth_solution(s, 0.0, 26.0, s.grid)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        t = ground_state_transform(s, h, tol=1e-6)
    mu = t.m[(s.grid.nodes >= 5) & (s.grid.nodes <= 15)]
    assert mu.max() / mu.min() < 1.01


def test_harmonic_residual_exact_and_wrong():
    co = Coefficients(log_m=registry.log_positive("x^3"))
    s = OperatorSpec.build(make_graded_grid(1, 50, 5000), co)
    h = sample(s.grid, lambda x: x ** -2.0, lambda x: -2 * x ** -3.0)
    assert harmonic_residual(s, h) < 1e-8
    bad = sample(s.grid, lambda x: x ** -1.0, lambda x: -(x ** -2.0))
    assert harmonic_residual(s, bad) > 0.1
    with pytest.warns(RuntimeWarning):
        ground_state_transform(s, bad)


def test_discrete_laplacian_row():
    s = flat(0, 1, 100)
    op = discretize(s)
    h = 0.01
    assert op.diag[40] == pytest.approx(2 / h ** 2, rel=1e-12)
    assert op.offdiag[40] == pytest.approx(-1 / h ** 2, rel=1e-12)
    sv = flat(0, 1, 100, V=registry.potential("x^1"))
    opv = discretize(sv)
    assert opv.diag[40] - op.diag[40] == pytest.approx(s.grid.nodes[41], rel=1e-9)


def test_discrete_radial_consistency():
    co = Coefficients(log_m=registry.log_positive("x^3"))
    errs = []
    for n in (200, 400):
        s = OperatorSpec.build(make_graded_grid(1, 2, n), co)
        x = s.grid.nodes
        hu = apply(discretize(s), GridFunction(s.grid, x ** 2))
        errs.append(np.max(np.abs(hu.values[5:-5] + 8.0)))
    assert errs[1] < 1e-3
    assert 3.0 < errs[0] / errs[1] < 5.0


def test_dirichlet_ground_eigenvalue():
    op = discretize(flat(0, 1, 1000))
    ev = eigenvalues_tridiagonal(op, 3).eigenvalues
    assert abs(ev[0] - math.pi ** 2) < 1e-2
    assert np.all(np.diff(ev) > 0)


def test_diagonal_matrix_eigenvalues():
    g = make_graded_grid(0, 1, 8)
    d = np.array([3.0, -1.0, 2.0, 0.5, 7.0, 4.0, 1.0])
    z = np.zeros(6)
    op = DiscreteOperator(g, np.arange(1, 8), d, z, np.ones(7), d, z)
    assert np.allclose(eigenvalues_tridiagonal(op, 7).eigenvalues, np.sort(d), rtol=0, atol=1e-12)


def test_free_laplacian_dense_near_one():
    op = discretize(flat(-200, 200, 40000))
    assert distance_to_spectrum(op, 1.0) < 0.05


def test_eigenvalue_count_check():
    with pytest.raises(InvalidParameter):
        eigenvalues_tridiagonal(discretize(flat(0, 1, 20)), 0)


def test_solve_shifted_sin():
    s = flat(0, 1, 1000)
    g = s.grid
    rhs = GridFunction(g, (math.pi ** 2 + 1) * np.sin(math.pi * g.nodes))
    z = solve_shifted(discretize(s), 1.0, rhs)
    assert np.max(np.abs(z.values - np.sin(math.pi * g.nodes))) < 1e-5


def test_solve_shifted_rejects_indefinite():
    op = discretize(flat(0, 1, 50))
    with pytest.raises(NotPositiveDefinite):
        solve_shifted(op, -20.0, GridFunction(op.grid, np.ones(op.grid.count)))


@settings(max_examples=25, deadline=None)
@given(st.integers(12, 200), st.integers(0, 2 ** 31 - 1))
def test_apply_solve_roundtrip(n, seed):
    rng = np.random.default_rng(seed)
    co = Coefficients(
        log_m=lambda x, c=rng.random(): c * np.sin(x),
        log_a=lambda x, c=rng.random(): c * np.cos(x),
    )
    s = OperatorSpec.build(make_graded_grid(0, 3, n), co)
    op = discretize(s)
    v = np.zeros(s.grid.count)
    v[op.active] = rng.standard_normal(op.size)
    f = GridFunction(s.grid, v)
    hv = apply(op, f)
    back = solve_shifted(op, 0.0, hv)
    assert np.max(np.abs(back.values - v)) < 1e-10 * max(1.0, np.max(np.abs(v)))


def _eigenpair(s, k=3):
    op = discretize(s)
    ev, vec = eigh_tridiagonal(op.diag, op.offdiag, select="i", select_range=(k, k))
    w = np.zeros(s.grid.count)
    w[op.active] = vec[:, 0] / np.sqrt(op.mass)
    return op, float(ev[0]), GridFunction(s.grid, w)


def test_residual_exact_eigenpair():
    s = flat(0, 10, 2000)
    op, lam, w = _eigenpair(s)
    assert weyl_residual_dual_norm(s, w, lam, op) < 1e-8


def test_residual_monotone_in_offset():
    s = flat(0, 10, 2000)
    op, lam, w = _eigenpair(s)
    res = [weyl_residual_dual_norm(s, w, lam + d, op) for d in (1e-3, 1e-2, 1e-1)]
    assert res[0] < res[1] < res[2]


def test_discretize_rejects_overflow():
    co = Coefficients(log_m=registry.log_positive("exp(2)"))
    s = OperatorSpec.build(make_graded_grid(0, 1000, 100), co)
    with pytest.raises(InvalidParameter):
        discretize(s)


def test_transform_keeps_natural_end_spectrum():
    # -u'' + u on [0, 3], u'(0) = 0, u(3) = 0; h = e^{-x} turns the left end into a Robin end
    s = flat(0, 3, 3000, V=registry.potential("const(1)"), singular_lo=True)
    x = s.grid.nodes
    h = GridFunction(s.grid, np.exp(-x), -np.exp(-x))
    t = ground_state_transform(s, h)
    assert t.robin_lo == pytest.approx(1.0, rel=1e-12)
    exact = 1 + ((np.arange(5) + 0.5) * math.pi / 3) ** 2
    for spec in (s, t):
        ev = eigenvalues_tridiagonal(discretize(spec), 5).eigenvalues
        assert np.max(np.abs(ev - exact) / exact) < 1e-4
    # the form sees the boundary term
    one = GridFunction(s.grid, np.ones(x.size), np.zeros(x.size))
    assert assemble_form(t, one, one) == pytest.approx(1.0, rel=1e-12)
