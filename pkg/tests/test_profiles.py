import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tailwave.errors import ProfileError, QuadratureError
from tailwave.profiles import HFunction, RadialProfile, build_h, eval_profile, integrate_compact

ZERO = RadialProfile.zero()


def bump(amp=1.0, R=1.0, m=4):
    return RadialProfile("poly_bump", amp, R, m)


# ---- integrate_compact


def test_integrate_polynomial():
    assert abs(integrate_compact(lambda x: x**2, (-1, 1), tol=1e-12) - 2 / 3) < 1e-12


def test_integrate_odd_is_zero():
    assert abs(integrate_compact(lambda x: x, (-1, 1))) < 1e-10


def test_integrate_beta_identity():
    n = 4
    exact = 2 ** (2 * n + 1) * math.factorial(n) ** 2 / math.factorial(2 * n + 1)
    assert exact == pytest.approx(256 / 315)
    assert abs(integrate_compact(lambda x: (1 - x * x) ** n, (-1, 1)) - exact) < 1e-10


def test_integrate_reversed_interval():
    assert integrate_compact(np.exp, (1, 0)) == pytest.approx(-(math.e - 1), abs=1e-10)


def test_integrate_rejects_bad_tol():
    with pytest.raises(ValueError):
        integrate_compact(np.sin, (0, 1), tol=0)


def test_integrate_nonsmooth_raises():
    # a jump at an irrational point can never be resolved to 1e-14 in 5 halvings
    with pytest.raises(QuadratureError):
        integrate_compact(lambda x: np.where(x < 1 / math.pi, 0.0, 1.0), (0, 1), tol=1e-14, max_depth=5)


def test_integrate_breakpoint_fixes_kink():
    val = integrate_compact(np.abs, (-1, 2), tol=1e-13, breakpoints=(0.0,))
    assert val == pytest.approx(2.5, abs=1e-13)


# ---- RadialProfile


def test_profile_outside_support_is_zero():
    p = bump(2.0, 1.5, 4)
    assert p(1.5) == 0.0
    assert np.all(p(np.array([1.6, 10.0, -2.0])) == 0.0)
    assert p(0.0) == 2.0


def test_profile_is_even():
    p = bump(1.0, 2.0, 5)
    x = np.linspace(0, 2.5, 50)
    np.testing.assert_array_equal(p(x), p(-x))


@pytest.mark.parametrize("kw", [
    {"family": "gaussian"},
    {"radius": 0.0},
    {"radius": -1.0},
    {"m": 1},
    {"m": 2.5},
    {"amplitude": math.inf},
])
def test_profile_validation(kw):
    with pytest.raises(ProfileError):
        RadialProfile(**kw)


def test_profile_dict_round_trip():
    p = bump(0.3, 2.0, 7)
    assert RadialProfile.from_dict(p.to_dict()) == p


def test_profile_unknown_key():
    with pytest.raises(ProfileError):
        RadialProfile.from_dict({"family": "poly_bump", "width": 1})


def test_zero_profile():
    assert ZERO.is_zero and ZERO.support_radius == 0.0
    assert eval_profile(ZERO, 0.3) == 0.0


def test_polynomial_matches_eval():
    p = bump(1.7, 1.3, 4)
    x = np.linspace(-1.2, 1.2, 31)
    np.testing.assert_allclose(p.polynomial()(x), p(x), atol=1e-14)


# ---- build_h


def test_zero_data_gives_zero_h():
    h = build_h(ZERO, ZERO)
    assert np.all(h(np.linspace(-2, 2, 11)) == 0.0)
    assert h.support_radius == 0.0


def test_h_position_data_closed_form():
    h = build_h(bump(1, 1, 2), ZERO)
    x = np.linspace(-0.99, 0.99, 41)
    np.testing.assert_allclose(h(x), -(x / 2) * (1 - x * x) ** 2, atol=1e-15)
    np.testing.assert_allclose(h(x), -h(-x), atol=1e-15)


def test_h_velocity_data_closed_form():
    # h = (1/2) int_x^1 y (1-y^2)^3 dy = (1-x^2)^4 / 16
    h = build_h(ZERO, bump(1, 1, 3))
    x = np.linspace(-0.99, 0.99, 41)
    np.testing.assert_allclose(h(x), (1 - x * x) ** 4 / 16, atol=1e-15)


def test_h_derivative_of_antiderivative():
    h = build_h(ZERO, bump(1, 1, 3))
    x = np.linspace(-0.9, 0.9, 19)
    # d/dx[(1-x^2)^4/16] = -x (1-x^2)^3 / 2
    np.testing.assert_allclose(h.derivative(x), -x * (1 - x * x) ** 3 / 2, atol=1e-14)


def test_h_initial_velocity_sign():
    # u0_t(0, r) = [h'(-r) - h'(r)] / r must reproduce g
    g = bump(1, 1, 3)
    h = build_h(ZERO, g)
    r = np.linspace(0.1, 0.9, 9)
    u_t = (h.derivative(-r) - h.derivative(r)) / r
    np.testing.assert_allclose(u_t, g(r), atol=1e-14)


@pytest.mark.parametrize("f,g", [
    (bump(1, 1, 4), ZERO),
    (ZERO, bump(1, 1, 3)),
    (bump(0.5, 1.5, 5), bump(-2.0, 1.0, 4)),
])
def test_h_closed_form_matches_quadrature(f, g):
    h = build_h(f, g)
    x = np.linspace(-1.6, 1.6, 33)
    np.testing.assert_allclose(h(x), h.numeric(x), atol=1e-10)


def test_h_support():
    R = 1.3
    h = build_h(bump(1, R, 4), bump(1, R, 4))
    x = np.array([R * (1 + 1e-6), 2 * R, -R * (1 + 1e-6), -5 * R])
    assert np.all(np.abs(h(x)) < 1e-10)
    assert np.all(np.abs(h.numeric(x)) < 1e-10)


def test_build_h_rejects_non_profiles():
    with pytest.raises(ProfileError):
        build_h(lambda r: r, ZERO)


def test_from_callable_clips():
    h = HFunction.from_callable(lambda x: 1.0 + 0 * x, 1.0)
    assert h(0.5) == 1.0 and h(1.5) == 0.0


profiles = st.builds(
    bump,
    amp=st.floats(-3, 3).filter(lambda a: abs(a) > 1e-3),
    R=st.floats(0.2, 3.0),
    m=st.integers(2, 8),
)


@settings(max_examples=30, deadline=None)
@given(f=profiles)
def test_h_parity_for_position_data(f):
    h = build_h(f, ZERO)
    x = np.linspace(0, 1.2 * f.radius, 100)
    assert np.max(np.abs(h(x) + h(-x))) < 1e-12


@settings(max_examples=30, deadline=None)
@given(f=profiles, g=profiles, lam=st.floats(-5, 5))
def test_h_linearity(f, g, lam):
    h = build_h(f, g)
    hl = build_h(f.scaled(lam), g.scaled(lam))
    x = np.linspace(-3.2, 3.2, 65)
    np.testing.assert_allclose(hl(x), lam * h(x), atol=1e-12, rtol=1e-12)
