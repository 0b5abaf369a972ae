import math

import numpy as np
import pytest
import scipy.special as sps
from hypothesis import given, settings
from hypothesis import strategies as st

from shnol import registry
from shnol.errors import CriticalOperator, InvalidParameter, OutOfRange
from shnol.grid import make_graded_grid
from shnol.operator import Coefficients, OperatorSpec
from shnol.special import (
    ShootingConfig,
    bessel_derivatives,
    bessel_dirichlet_coefficients,
    bessel_eigenfunction_oracle,
    bessel_j0,
    bessel_j1,
    bessel_y0,
    bessel_y1,
    green_function,
    integrate_ode_sl,
    minimal_growth_solution,
)


def spec(weight, lo, hi, n, potential="zero", **kw):
    co = Coefficients(log_m=registry.log_positive(weight), V=registry.potential(potential))
    return OperatorSpec.build(make_graded_grid(lo, hi, n), co, **kw)


# ---------------------------------------------------------------- Bessel


def test_j1_at_zero():
    assert bessel_j1(0.0) == 0.0
    assert bessel_j0(0.0) == 1.0


@pytest.mark.parametrize("x", [0.5, 5.0, 50.0])
def test_wronskian(x):
    j1, dj1, y1, dy1 = bessel_derivatives(x)
    assert abs(j1 * dy1 - dj1 * y1 - 2 / (math.pi * x)) < 1e-10 * max(1.0, 2 / (math.pi * x))


def test_against_scipy():
    x = np.concatenate([np.linspace(1e-3, 30, 3001), np.geomspace(30, 1e4, 500)])
    for ours, ref in ((bessel_j0, sps.j0), (bessel_j1, sps.j1), (bessel_y0, sps.y0), (bessel_y1, sps.y1)):
        got, want = ours(x), ref(x)
        # accuracy relative to the local modulus sqrt(J^2 + Y^2)
        mod = np.hypot(sps.j1(x), sps.y1(x)) if ref in (sps.j1, sps.y1) else np.hypot(sps.j0(x), sps.y0(x))
        assert np.max(np.abs(got - want) / mod) < 1e-12


def test_y_needs_positive_argument():
    with pytest.raises(OutOfRange):
        bessel_y1(0.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-3, 1e3))
def test_wronskian_property(x):
    j1, dj1, y1, dy1 = bessel_derivatives(x)
    w = 2 / (math.pi * x)
    assert abs(j1 * dy1 - dj1 * y1 - w) < 1e-10 * max(1.0, w)


def test_eigenfunction_solves_radial_equation():
    A, B, lam = 0.8, -1.3, 1.0
    x = np.linspace(1, 100, 400)
    d = 1e-3
    u, du = bessel_eigenfunction_oracle(A, B, lam, x, derivative=True)
    dd = [bessel_eigenfunction_oracle(A, B, lam, x + k * d, derivative=True)[1] for k in (-2, -1, 1, 2)]
    d2 = (dd[0] - 8 * dd[1] + 8 * dd[2] - dd[3]) / (12 * d)
    res = d2 + 3 / x * du + lam * u
    assert np.max(np.abs(res)) < 1e-8 * np.max(np.abs(u))


def test_eigenfunction_large_x_asymptotics():
    x = np.linspace(2000, 2010, 50)
    u = bessel_eigenfunction_oracle(1.0, 0.0, 1.0, x)
    approx = -math.sqrt(2 / math.pi) * x ** -1.5 * np.cos(x - 0.75 * math.pi)
    assert np.max(np.abs(u - approx)) < 1e-3 * np.max(np.abs(approx))


def test_dirichlet_coefficients():
    A, B = bessel_dirichlet_coefficients(1.0)
    u, du = bessel_eigenfunction_oracle(A, B, 1.0, 1.0, derivative=True)
    assert abs(u) < 1e-14 and du == pytest.approx(1.0, rel=1e-12)


def test_oracle_rejects_nonpositive_lambda():
    with pytest.raises(InvalidParameter):
        bessel_eigenfunction_oracle(1, 0, 0.0, 2.0)


# -------------------------------------------------------------- shooting


def test_shooting_harmonic_oscillator():
    s = spec("one", 0, 10, 1000)
    u = integrate_ode_sl(s, 1.0, ShootingConfig(0.0, 0.0, 1.0, 1e-3), s.grid)
    x = s.grid.nodes
    assert np.max(np.abs(u.values - np.sin(x))) < 1e-8
    assert np.max(np.abs(u.grad - np.cos(x))) < 1e-8


def test_shooting_both_directions():
    s = spec("one", -5, 5, 1000)
    u = integrate_ode_sl(s, 4.0, ShootingConfig(0.0, 1.0, 0.0, 1e-3), s.grid)
    assert np.max(np.abs(u.values - np.cos(2 * s.grid.nodes))) < 1e-8


def test_zero_energy_is_affine_in_evans_coordinate():
    s = spec("x^3", 1, 30, 2900)
    u = integrate_ode_sl(s, 0.0, ShootingConfig(1.0, 2.0, 0.5, 1e-3), s.grid)
    x = s.grid.nodes
    # u = alpha + beta int_1^x dt / t^3, beta = p(1) u'(1)
    assert np.max(np.abs(u.values - (2.0 + 0.5 * (1 - x ** -2.0) / 2))) < 1e-10


def test_shooting_matches_bessel_and_is_fourth_order():
    s = spec("x^3", 1, 200, 1990)
    x = s.grid.nodes
    ex, dex = bessel_eigenfunction_oracle(1.0, 0.7, 1.0, x, derivative=True)
    err = {}
    for step in (1e-3, 0.1, 0.05):
        u = integrate_ode_sl(s, 1.0, ShootingConfig(1.0, ex[0], dex[0], step), s.grid)
        err[step] = np.max(np.abs(u.values - ex)) / np.max(np.abs(ex))
    assert err[1e-3] < 1e-6
    assert 14 <= err[0.1] / err[0.05] <= 18


def test_shooting_config_validation():
    with pytest.raises(InvalidParameter):
        ShootingConfig(0.0, 0.0, 0.0)
    with pytest.raises(InvalidParameter):
        ShootingConfig(0.0, 1.0, 0.0, step=0.0)


# ---------------------------------------------------------- minimal growth


def test_minimal_growth_radial_4d():
    s = spec("x^3", 1, 40, 3900)
    h = minimal_growth_solution(s, 0.0, 80.0, s.grid)
    x = s.grid.nodes
    assert np.max(np.abs(h.values * x ** 2 - 1)) < 1e-4


def test_minimal_growth_constant_potential():
    s = spec("one", 0, 20, 2000, potential="const(1)")
    h = minimal_growth_solution(s, 0.0, 30.0, s.grid)
    assert np.max(np.abs(h.values - np.exp(-s.grid.nodes))) < 1e-4


@pytest.mark.parametrize("n", [2, 3])
def test_minimal_growth_hyperbolic_envelope(n):
    s = spec(f"sinh^{n - 1}", 0.5, 20, 4000, potential=f"hyperbolic({n})")
    h = minimal_growth_solution(s, 0.0, 26.0, s.grid)
    x = s.grid.nodes
    band = (x >= 5) & (x <= 15)
    env = h.values[band] * np.exp((n - 1) * x[band] / 2)
    assert 0.5 <= env.min() and env.max() <= 2


def test_minimal_growth_kappa_insensitive():
    s = spec("one", 0, 20, 2000, potential="const(1)")
    h0 = minimal_growth_solution(s, 0.0, 30.0, s.grid)
    h1 = minimal_growth_solution(s, 0.0, 30.0, s.grid, kappa=1.05)
    assert np.max(np.abs(h1.values / h0.values - 1)) < 1e-4


def test_minimal_growth_margin_check():
    s = spec("one", 0, 10, 100, potential="const(1)")
    with pytest.raises(InvalidParameter):
        minimal_growth_solution(s, 0.0, 11.0, s.grid)


# ------------------------------------------------------------ Green function


def test_green_4d_decay():
    grid = make_graded_grid(1e-3, 200, 20000).with_nodes([1.0])
    s = OperatorSpec.build(grid, Coefficients(log_m=registry.log_positive("x^3")), singular_lo=True)
    G = green_function(s, 1.0)
    x = np.linspace(10, 100, 91)
    # closed form: 1 * x^-2 / |p W| = x^-2 / 2
    assert np.max(np.abs(G(x) * x ** 2 - 0.5)) < 1e-10


def test_green_2d_is_critical():
    s = spec("x^1", 1e-3, 200, 20000, singular_lo=True)
    with pytest.raises(CriticalOperator):
        green_function(s, 1.0)


def test_green_resolvent_kernel():
    s = spec("one", -20, 20, 8000, potential="const(1)")
    G = green_function(s, 0.0)
    x = np.linspace(-5, 5, 41)
    assert np.max(np.abs(G(x) - np.exp(-np.abs(x)) / 2)) < 1e-4
    assert G(1.3) == pytest.approx(G(-1.3), rel=1e-6)
