import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hamtopo.domain import Domain
from hamtopo.errors import HamtopoError
from hamtopo.flow import FlowPath, identity_path, integrate_flow
from hamtopo.gallery import translation
from hamtopo.invariants import CircleMap, concatenate_paths, duality_check, flux, mass_flow, rotation_vector
from hamtopo.reparam import connect_concatenation, flatten


def test_circle_map_validation():
    assert CircleMap("y").axis == 1
    with pytest.raises(HamtopoError):
        CircleMap("z")


def test_identity_path(torus32):
    path = identity_path(torus32, 11)
    assert rotation_vector(path) == (0.0, 0.0)
    assert flux(path) == (0.0, 0.0)
    assert duality_check(path) == 0.0


def test_translation(torus32):
    path = translation(torus32, 0.3, 0.7, 21)
    assert mass_flow(path, CircleMap("x")) == pytest.approx(0.3, abs=1e-9)
    assert mass_flow(path, CircleMap("y")) == pytest.approx(0.7, abs=1e-9)
    fx, fy = flux(path)
    assert abs(fx - 0.3) <= 1e-3 and abs(fy - 0.7) <= 1e-3
    assert duality_check(path) <= 1e-3


def test_shear_is_in_the_kernel(shear64):
    _, flow = shear64
    a, b = rotation_vector(flow)
    assert abs(a) <= 1e-6 and abs(b) <= 1e-6
    assert max(abs(v) for v in flux(flow)) <= 1e-3
    assert duality_check(flow) <= 1e-3


def test_random_paths_are_in_the_kernel(random_flows64):
    for _, flow in random_flows64:
        assert max(abs(v) for v in rotation_vector(flow)) <= 1e-3
        assert max(abs(v) for v in flux(flow)) <= 1e-3
        assert duality_check(flow) <= 1e-3


def test_disc_is_rejected(disc64):
    with pytest.raises(HamtopoError):
        rotation_vector(identity_path(disc64, 3))


def test_flux_needs_inverse_and_samples(torus32):
    path = translation(torus32, 0.3, 0.7, 11)
    with pytest.raises(HamtopoError):
        flux(FlowPath(torus32, path.times, path.image_x, path.image_y))
    with pytest.raises(HamtopoError, match="refine time sampling"):
        flux(translation(torus32, 0.3, 0.7, 3))


def test_flux_rejects_noisy_velocity(torus32):
    # a path that accelerates abruptly has inconsistent finite differences
    gx, gy = torus32.coords
    times = np.linspace(0, 1, 6)
    shift = np.array([0.0, 0.0, 0.0, 0.3, 0.3, 0.3])[:, None, None]
    path = FlowPath(torus32, times, gx + shift, gy + 0 * shift, gx - shift, gy - 0 * shift)
    with pytest.raises(HamtopoError, match="refine time sampling"):
        flux(path)


def test_concatenation_adds_vectors(shear64, torus64):
    _, shear = shear64
    t1 = translation(torus64, 0.3, 0.7, shear.nt)
    t2 = translation(torus64, -0.1, 0.2, shear.nt)
    both = concatenate_paths(t1, t2)
    assert np.allclose(rotation_vector(both), (0.2, 0.9), atol=2e-3)
    mixed = concatenate_paths(t1, shear)
    assert np.allclose(rotation_vector(mixed), (0.3, 0.7), atol=2e-3)
    assert np.allclose(flux(mixed), (0.3, 0.7), atol=2e-3)


def test_hamiltonian_concatenation_stays_in_kernel(random_flows64):
    (H, _), (K, _) = random_flows64[0], random_flows64[1]
    H0, K0 = flatten(H, 0.1).hamiltonian, flatten(K, 0.1).hamiltonian
    flow = integrate_flow(connect_concatenation(H0, K0, 0.5), 400)
    assert max(abs(v) for v in rotation_vector(flow)) <= 2e-3


@settings(max_examples=20, deadline=None)
@given(st.floats(-0.45, 0.45), st.floats(-0.45, 0.45), st.floats(-0.45, 0.45), st.floats(-0.45, 0.45))
def test_rotation_vector_is_additive(a1, b1, a2, b2):
    dom = Domain.torus(16)
    both = concatenate_paths(translation(dom, a1, b1, 11), translation(dom, a2, b2, 11))
    assert np.allclose(rotation_vector(both), (a1 + a2, b1 + b2), atol=1e-9)
