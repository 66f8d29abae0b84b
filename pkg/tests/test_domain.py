import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hamtopo.domain import (
    Domain,
    GridMap,
    ScalarField,
    c0_distance_maps,
    dbar_maps,
    identity_map,
    integrate,
    spline_coefficients,
    spline_eval,
    translation_map,
)
from hamtopo.errors import DomainMismatchError, HamtopoError, InverseUnavailableError, NonFiniteFieldError


def test_integrate_constant_torus():
    dom = Domain.torus(64)
    assert integrate(ScalarField(dom, np.ones(dom.shape))) == pytest.approx(1.0, abs=1e-14)


def test_integrate_cosine_vanishes():
    dom = Domain.torus(64)
    gx, _ = dom.coords
    assert abs(integrate(ScalarField(dom, np.cos(2 * np.pi * gx)))) <= 1e-12


def test_integrate_disc_area():
    dom = Domain.disc(512)
    assert abs(integrate(ScalarField(dom, np.ones(dom.shape))) - np.pi) <= 1e-2


def test_integrate_rejects_nan():
    dom = Domain.torus(16)
    values = np.ones(dom.shape)
    values[3, 4] = np.nan
    with pytest.raises(NonFiniteFieldError):
        integrate(ScalarField(dom, values))


def test_field_shape_checked():
    with pytest.raises(DomainMismatchError):
        ScalarField(Domain.torus(16), np.ones((8, 8)))


@pytest.mark.parametrize("n", [4, 5000])
def test_resolution_bounds(n):
    with pytest.raises(HamtopoError):
        Domain.torus(n)


def test_domain_mismatch():
    with pytest.raises(DomainMismatchError):
        Domain.torus(16).check_same(Domain.torus(32))
    with pytest.raises(DomainMismatchError):
        Domain.torus(16).check_same(Domain.disc(16))


def test_disc_cells():
    dom = Domain.disc(64)
    assert dom.hx == pytest.approx(2.0 / 64)
    assert np.all(dom.radius[dom.active] <= 1.0)
    assert not np.any(dom.active & (dom.radius > 1.0))


def test_translation_distance():
    dom = Domain.torus(32)
    ident = identity_map(dom)
    shift = translation_map(dom, 0.3, 0.7)
    # 0.7 wraps to 0.3 on the circle
    assert c0_distance_maps(shift, ident) == pytest.approx(np.hypot(0.3, 0.3), abs=1e-12)
    assert c0_distance_maps(translation_map(dom, 0.3, 0.0), ident) == pytest.approx(0.3, abs=1e-12)


def test_dbar_needs_inverse():
    dom = Domain.torus(16)
    gx, gy = dom.coords
    bare = GridMap(dom, gx + 0.1, gy)
    with pytest.raises(InverseUnavailableError):
        dbar_maps(bare, identity_map(dom))


def test_spline_interpolates_nodes_and_smooth_functions():
    dom = Domain.torus(64)
    gx, gy = dom.coords
    f = np.sin(2 * np.pi * gx) * np.cos(2 * np.pi * gy)
    coef = spline_coefficients(f)
    assert np.max(np.abs(spline_eval(dom, coef, gx, gy) - f)) <= 1e-12
    x = np.random.default_rng(1).random(200)
    y = np.random.default_rng(2).random(200)
    exact = np.sin(2 * np.pi * x) * np.cos(2 * np.pi * y)
    assert np.max(np.abs(spline_eval(dom, coef, x, y) - exact)) <= 1e-5


shifts = st.floats(-2.0, 2.0, allow_nan=False)


@settings(max_examples=40, deadline=None)
@given(shifts, shifts, shifts, shifts, shifts, shifts)
def test_dbar_metric_properties(a1, b1, a2, b2, a3, b3):
    dom = Domain.torus(16)
    p, q, r = (translation_map(dom, a, b) for a, b in ((a1, b1), (a2, b2), (a3, b3)))
    assert dbar_maps(p, p) == 0.0
    assert dbar_maps(p, q) == pytest.approx(dbar_maps(q, p), abs=1e-12)
    assert dbar_maps(p, r) <= dbar_maps(p, q) + dbar_maps(q, r) + 1e-12
    assert dbar_maps(p, q) <= np.sqrt(0.5) + 1e-12


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 10_000))
def test_integrate_linear(a, b, seed):
    dom = Domain.disc(32)
    g = np.random.default_rng(seed)
    f, h = g.standard_normal(dom.shape), g.standard_normal(dom.shape)
    lhs = integrate(ScalarField(dom, a * f + b * h))
    rhs = a * integrate(ScalarField(dom, f)) + b * integrate(ScalarField(dom, h))
    assert lhs == pytest.approx(rhs, abs=1e-9)
