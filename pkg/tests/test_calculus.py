import warnings

import numpy as np
import pytest

from hamtopo.calculus import (
    AreaWarning,
    compose,
    dev_map,
    identity_holds,
    inverse,
    leng_between,
    length_pair,
    max_difference,
    pullback,
    recover_generator,
    tan_map,
)
from hamtopo.domain import GridMap, c0_distance_maps, identity_map, translation_map
from hamtopo.errors import CalculusIdentityError, DomainMismatchError
from hamtopo.flow import FlowPath, compose_maps, integrate_flow
from hamtopo.functions import TrigModes
from hamtopo.hamiltonian import hofer_norm, sample


def _cos(dom, c=1.0, nt=41):
    return sample(TrigModes([[1, 0]], c), dom, nt)


def test_compose_with_zero(random_flows64):
    H, flow = random_flows64[0]
    zero = H * 0.0
    assert max_difference(compose(H, zero, flow), H) <= 1e-12


def test_compose_with_itself_autonomous(shear64):
    H, flow = shear64
    assert max_difference(compose(H, H, flow), 2.0 * H) <= 1e-6


def test_compose_generates_composed_flow(random_flows64):
    (H, fH), (K, fK) = random_flows64[0], random_flows64[1]
    HK = compose(H, K, fH)
    fHK = integrate_flow(HK, 400)
    for k in (10, 40):
        assert c0_distance_maps(fHK.slice(k), compose_maps(fH.slice(k), fK.slice(k))) <= 1e-4


def test_compose_associative_at_flow_level(random_flows64):
    (H, fH), (K, fK), (L, _) = (random_flows64[i] for i in range(3))
    HK = compose(H, K, fH)
    left = compose(HK, L, integrate_flow(HK, 400))
    right = compose(H, compose(K, L, fK), fH)
    a, b = integrate_flow(left, 400, inverse=False), integrate_flow(right, 400, inverse=False)
    assert c0_distance_maps(a.final(), b.final()) <= 2e-4


def test_compose_grid_mismatch(random_flows64, torus32):
    H, flow = random_flows64[0]
    with pytest.raises(DomainMismatchError):
        compose(H, _cos(torus32), flow)


def test_inverse_examples(shear64, random_flows64):
    H, flow = shear64
    assert max_difference(inverse(H * 0.0, flow), H * 0.0) == 0.0
    assert max_difference(inverse(H, flow), -H) <= 1e-6
    R, fR = random_flows64[2]
    Rbar = inverse(R, fR)
    assert max_difference(inverse(Rbar, fR.inverse()), R) <= 1e-6


def test_inverse_generates_inverse_path(random_flows64):
    H, flow = random_flows64[3]
    fbar = integrate_flow(inverse(H, flow), 400, inverse=False)
    for k in (20, 40):
        gx, gy = flow.domain.coords
        got = GridMap(flow.domain, fbar.image_x[k], fbar.image_y[k])
        want = GridMap(flow.domain, flow.inv_x[k], flow.inv_y[k])
        assert c0_distance_maps(got, want) <= 1e-4


def test_pullback_identity_and_translation(torus64):
    H = _cos(torus64)
    assert max_difference(pullback(H, identity_map(torus64)), H) <= 1e-12
    got = pullback(H, translation_map(torus64, 0.2, 0.0))
    gx, _ = torus64.coords
    assert np.max(np.abs(got.values - np.cos(2 * np.pi * (gx + 0.2)))) <= 1e-12


def test_pullback_conjugation(random_flows64):
    (H, fH), (_, fK) = random_flows64[4], random_flows64[5]
    psi = fK.final()
    conj = integrate_flow(pullback(H, psi), 400, inverse=False)
    # psi^-1 phi_H psi
    expected = compose_maps(psi.require_inverse(), compose_maps(fH.final(), psi))
    assert c0_distance_maps(conj.final(), expected) <= 1e-4


def test_pullback_warns_on_non_area_preserving(torus64):
    H = _cos(torus64)
    gx, gy = torus64.coords
    squash = GridMap(torus64, gx + 0.05 * np.sin(2 * np.pi * gx), gy)
    with pytest.warns(AreaWarning):
        pullback(H, squash)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        pullback(H, translation_map(torus64, 0.1, 0.3))


def test_tan_and_dev(shear64, random_flows64):
    H, flow = shear64
    assert max_difference(tan_map(H, flow), H) <= 1e-6
    assert dev_map(H) is H
    zero = H * 0.0
    assert max_difference(tan_map(zero, flow), zero) == 0.0
    R, fR = random_flows64[0]
    # Dev of the inverse path, rebuilt from its motion alone
    dev_inv = recover_generator(fR.inverse())
    tan = tan_map(R, fR)
    assert max_difference(tan, -dev_inv) <= 1e-3 * np.max(np.abs(tan.values))


def test_recover_generator_shear(shear64):
    H, flow = shear64
    assert max_difference(recover_generator(flow), H) <= 1e-6


def test_leng_between_examples(torus64):
    H, K = _cos(torus64), _cos(torus64, 2.0)
    fH = integrate_flow(H, 400)
    assert leng_between(H, K, fH) == pytest.approx(2.0, rel=1e-3)
    assert leng_between(H, H, fH) <= 1e-6


def test_leng_between_random_pairs(random_flows64):
    for i in range(5):
        (H, fH), (K, _) = random_flows64[i], random_flows64[i + 1]
        a, b = length_pair(H, K, fH)
        assert identity_holds(a, b)
        assert leng_between(H, K, fH) == a


def test_leng_between_detects_broken_path(random_flows64, torus64):
    (H, flow), (K, _) = random_flows64[0], random_flows64[1]
    # a "path" contracting the torus onto one point cannot be the flow of H
    gx, gy = torus64.coords
    t = flow.times[:, None, None]
    broken = FlowPath(torus64, flow.times, gx + (0.5 - gx) * t, gy + (0.5 - gy) * t, flow.inv_x, flow.inv_y)
    with pytest.raises(CalculusIdentityError, match="calculus identity violated"):
        leng_between(H, K, broken)


def test_triangle_inequality_for_product(random_flows64):
    for i in range(5):
        (H, fH), (K, _) = random_flows64[i], random_flows64[i + 1]
        assert hofer_norm(compose(H, K, fH)) <= hofer_norm(H) + hofer_norm(K) + 1e-9


def test_norm_of_inverse(random_flows64):
    for H, flow in random_flows64:
        assert identity_holds(hofer_norm(H), hofer_norm(inverse(H, flow)))


def test_identity_path_is_rejected_for_wrong_time_grid(random_flows64, torus64):
    H, flow = random_flows64[0]
    short = FlowPath(torus64, flow.times[:5], flow.image_x[:5], flow.image_y[:5])
    with pytest.raises(DomainMismatchError):
        inverse(H, short)
