"""Acceptance criteria, one test per criterion.

Each test carries a ``criterion`` marker; the terminal summary prints one
PASS/FAIL line per criterion with the measured quantities.  Resolutions
are the defaults (128 squared, steps 1000) unless a cheaper grid resolves
the quantity equally well.
"""

import numpy as np
import pytest

from hamtopo.calculus import (
    compose,
    inverse,
    leng_between,
    length_pair,
    max_difference,
    recover_generator,
    tan_map,
)
from hamtopo.domain import Domain, c0_distance_maps
from hamtopo.errors import ReparamBoundError
from hamtopo.flow import area_audit, integrate_flow, integrate_points, min_displacement
from hamtopo.gallery import (
    CORE_RADIUS,
    RotationProfile,
    example42_sequence,
    random_function,
    random_hamiltonian,
    rotation_hamiltonian,
    rotation_map,
    rotation_path,
    shear_exact,
    shear_hamiltonian,
    smooth_profile,
    translation,
    transport_sequence,
)
from hamtopo.hamiltonian import hofer_norm, linfty_norm
from hamtopo.invariants import duality_check, flux, rotation_vector
from hamtopo.metrics import PathPair, cauchy_report, dbar_paths, dham, extract_c0_limit, tail_modulus
from hamtopo.reparam import (
    ReparamMap,
    check_reparam_bound,
    flat_samples,
    flatten,
    ham_norm,
    plateau_oscillation,
    smoothstep,
    smoothstep_prime,
    truncate,
)

TAU = 1e-2
EX_NT = 51
TRANSPORT_START, TRANSPORT_END = np.array([0.25, 0.5]), np.array([0.75, 0.5])
TRANSPORT_N = [4, 8, 16, 32]


def _record(request, **values):
    for key, value in values.items():
        request.node.user_properties.append((key, f"{value:.3g}" if isinstance(value, float) else value))


# -- shared flows ---------------------------------------------------------------


@pytest.fixture(scope="module")
def torus128():
    return Domain.torus(128)


@pytest.fixture(scope="module")
def disc128():
    return Domain.disc(128)


@pytest.fixture(scope="module")
def shear128(torus128):
    H = shear_hamiltonian(torus128, 201)
    return H, integrate_flow(H, 1000)


@pytest.fixture(scope="module")
def rotation128(disc128):
    H = rotation_hamiltonian(smooth_profile(), disc128, 201)
    return H, integrate_flow(H, 1000)


@pytest.fixture(scope="module")
def sqrt_sequence(disc128):
    return example42_sequence(RotationProfile("sqrt_inverse"), [4, 8, 16, 32, 64], disc128, EX_NT, 1000)


@pytest.fixture(scope="module")
def square_sequence(disc128):
    return example42_sequence(RotationProfile("square_inverse"), [8, 16, 32, 64], disc128, EX_NT, 1000)


@pytest.fixture(scope="module")
def transport(torus128):
    return transport_sequence(TRANSPORT_START, TRANSPORT_END, TRANSPORT_N, torus128, nt=41, steps=400)


def _torus_hamiltonian_paths(shear128, random_flows64, transport):
    yield "shear", shear128[1]
    for seed, (_, flow) in enumerate(random_flows64):
        yield f"random{seed}", flow
    for n, pair in zip(TRANSPORT_N, transport):
        yield f"transport{n}", pair.path


# -- criteria -------------------------------------------------------------------


@pytest.mark.criterion(1, "flow correctness")
def test_criterion_01_flow_correctness(request, shear128, rotation128, torus128, disc128):
    _, flow = shear128
    gx, gy = torus128.coords
    ex, ey = shear_exact(gx, gy, flow.times[:, None, None])
    shear_err = float(np.max(torus128.displacement(flow.image_x - ex, flow.image_y - ey)))

    _, rot = rotation128
    exact = rotation_path(smooth_profile(), disc128, 201)
    act = disc128.active
    rot_err = float(np.max(np.hypot(rot.image_x[:, act] - exact.image_x[:, act], rot.image_y[:, act] - exact.image_y[:, act])))

    fn = random_function(3, amplitude=0.01)
    g = np.random.default_rng(0)
    x0, y0 = g.random(200), g.random(200)
    ref = integrate_points(fn, x0, y0, 2, 2560)
    errs = []
    for steps in (8, 16, 32):
        xs, ys, _, _ = integrate_points(fn, x0, y0, 2, steps)
        errs.append(float(np.max(np.hypot(xs[-1] - ref[0][-1], ys[-1] - ref[1][-1]))))
    ratio = min(errs[0] / errs[1], errs[1] / errs[2])
    _record(request, shear=shear_err, rotation=rot_err, order_ratio=ratio)
    assert shear_err <= 1e-8
    assert rot_err <= 1e-6
    assert ratio >= 8


@pytest.mark.criterion(2, "area preservation")
def test_criterion_02_area_preservation(request, shear128, rotation128, random_flows64, transport, sqrt_sequence, square_sequence, torus128):
    audits = {"shear": area_audit(shear128[1]), "rotation": area_audit(rotation128[1])}
    audits["translation"] = area_audit(translation(torus128, 0.3, 0.7, 21))
    for seed, (_, flow) in enumerate(random_flows64):
        audits[f"random{seed}"] = area_audit(flow)
    for n, pair in zip(TRANSPORT_N, transport):
        audits[f"transport{n}"] = area_audit(pair.path)
    for pair in sqrt_sequence:
        audits[f"sqrt {pair.label}"] = area_audit(pair.path)
    for pair in square_sequence:
        audits[f"square {pair.label}"] = area_audit(pair.path)
    worst = max(audits, key=audits.get)
    _record(request, flows=len(audits), worst=f"{worst} {audits[worst]:.3g}")
    assert audits[worst] <= 1e-4


@pytest.mark.criterion(3, "group-calculus identities")
def test_criterion_03_group_calculus(request, random_flows64):
    worst = {"lemma1": 0.0, "lemma3": 0.0, "tan_dev": 0.0, "leng": 0.0}
    slack = -np.inf
    for i in range(5):
        (H, fH), (K, fK) = random_flows64[i], random_flows64[i + 1]
        direct = hofer_norm(H - K)
        a = hofer_norm(compose(inverse(H, fH), K, fH.inverse()))
        b = hofer_norm(compose(inverse(K, fK), H, fK.inverse()))
        worst["lemma1"] = max(worst["lemma1"], abs(a - direct) / direct, abs(b - direct) / direct)
        slack = max(slack, hofer_norm(compose(H, K, fH)) - hofer_norm(H) - hofer_norm(K))
        worst["lemma3"] = max(worst["lemma3"], abs(hofer_norm(inverse(H, fH)) - hofer_norm(H)) / hofer_norm(H))
        tan = tan_map(H, fH)
        dev_inverse = recover_generator(fH.inverse())
        worst["tan_dev"] = max(worst["tan_dev"], max_difference(tan, -dev_inverse) / np.max(np.abs(tan.values)))
        p, q = length_pair(H, K, fH)
        worst["leng"] = max(worst["leng"], abs(p - q) / q)
        assert leng_between(H, K, fH) == p
    _record(request, pairs=5, triangle_slack=float(slack), **{k: float(v) for k, v in worst.items()})
    assert all(v <= 1e-3 for v in worst.values())
    assert slack <= 1e-9


def _random_zeta(g, nt):
    kind = g.integers(3)
    if kind == 0:
        return ReparamMap.linear(float(g.uniform(0.0, 1.0)), nt)
    if kind == 1:
        return ReparamMap.power(float(g.uniform(1.0, 3.0)), nt)
    a, s = float(g.uniform(0.0, 1.0)), float(g.uniform(0.1, 1.0))
    return ReparamMap.from_functions(
        lambda t: s * ((1 - a) * t + a * float(smoothstep(t))),
        lambda t: s * ((1 - a) + a * float(smoothstep_prime(t))),
        nt,
    )


@pytest.mark.criterion(4, "reparameterization bound")
def test_criterion_04_reparam_bound(request):
    dom = Domain.torus(32)
    g = np.random.default_rng(2024)
    H = random_hamiltonian(11, dom, 101)
    held, ratio = 0, 0.0
    for _ in range(100):
        z1, z2 = _random_zeta(g, H.nt), _random_zeta(g, H.nt)
        try:
            lhs, rhs = check_reparam_bound(H, z1, z2)
        except ReparamBoundError:
            continue
        held += 1
        if rhs > 0:
            ratio = max(ratio, lhs / rhs)
    pair_err = max(
        abs(ham_norm(ReparamMap.linear(s, 201), ReparamMap.linear(s2, 201)) - 2 * abs(s - s2))
        for s, s2 in ((0.2, 0.7), (1.0, 0.0), (0.35, 0.36), (0.9, 0.5))
    )
    _record(request, held=f"{held}/100", max_lhs_over_rhs=ratio, linear_pair_error=pair_err)
    assert held == 100
    assert pair_err <= 1e-9


@pytest.mark.criterion(5, "flattening")
@pytest.mark.parametrize("eps_target, nt", [(0.1, 101), (0.01, 801)])
def test_criterion_05_flattening(request, torus64, eps_target, nt):
    H = shear_hamiltonian(torus64, nt)
    res = flatten(H, eps_target)
    Hf = res.hamiltonian
    plateau = res.zeta.dzeta == 0.0
    fH = integrate_flow(H, 2000)
    b = integrate_flow(Hf, 2000, inverse=False)
    map_err = c0_distance_maps(fH.final(), b.final())
    leng = leng_between(H, Hf, fH)
    gap = linfty_norm(H - Hf)
    plateau_osc = plateau_oscillation(H, res.zeta)
    _record(request, eps=eps_target, map_error=map_err, leng=leng, linfty_over_plateau_osc=gap / plateau_osc)
    assert plateau[0] and plateau[-1] and np.all(Hf.values[plateau] == 0.0)
    assert flat_samples(Hf, True) and flat_samples(Hf, False)
    assert map_err <= 1e-6
    assert leng <= eps_target
    assert gap >= 0.9 * plateau_osc


@pytest.mark.criterion(6, "convergent twist sequence")
def test_criterion_06_convergent_twists(request, sqrt_sequence, disc128):
    prof = RotationProfile("sqrt_inverse")
    conv = cauchy_report(sqrt_sequence, TAU, CORE_RADIUS)
    conv.check_invariants()
    norm_err = max(abs(h - prof.mollified(n).norm()) for h, n in zip(conv.hofer_norms, (4, 8, 16, 32, 64)))
    limit = extract_c0_limit(sqrt_sequence, TAU, CORE_RADIUS)
    exact = rotation_map(prof, disc128)
    mask = disc128.region_mask(CORE_RADIUS)
    got = limit.path.final()
    limit_err = float(np.max(np.hypot(got.image_x - exact.image_x, got.image_y - exact.image_y)[mask]))
    _record(
        request,
        dham_tail=float(conv.modulus["dham"][-2]),
        ideal_norm=prof.norm(),
        norm_error=float(norm_err),
        limit_error=limit_err,
    )
    assert conv.verdicts["dham"]
    assert norm_err <= 0.02
    assert limit_err <= 1e-3
    assert RotationProfile("sqrt_inverse", cutoff_eps=1e-4).norm() == pytest.approx(2 / 3, abs=1e-3)


@pytest.mark.criterion(7, "divergent twist sequence")
def test_criterion_07_divergent_twists(request, square_sequence):
    ns = np.array([8, 16, 32, 64])
    norms = np.array([hofer_norm(p.ham) for p in square_sequence])
    n = len(square_sequence)
    dbar = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            dbar[i, j] = dbar[j, i] = dbar_paths(square_sequence[i].path, square_sequence[j].path, CORE_RADIUS)
    tail = float(tail_modulus(dbar)[-2])
    _record(request, min_norm_over_log_n=float(np.min(norms / np.log(ns))), c0_tail=tail)
    assert np.all(norms >= 0.9 * np.log(ns))
    assert tail <= TAU


@pytest.mark.criterion(8, "zero-energy transport")
def test_criterion_08_transport(request, transport, torus128):
    worst_norm, worst_miss = -np.inf, 0.0
    for n, pair in zip(TRANSPORT_N, transport):
        fn = pair.ham.as_function()
        xs, ys, _, _ = integrate_points(fn, [TRANSPORT_START[0]], [TRANSPORT_START[1]], 2, 400)
        miss = float(torus128.displacement(xs[-1][0] - TRANSPORT_END[0], ys[-1][0] - TRANSPORT_END[1]))
        worst_miss = max(worst_miss, miss)
        worst_norm = max(worst_norm, hofer_norm(pair.ham) * n / 2)
    _record(request, max_norm_over_bound=float(worst_norm), max_miss=worst_miss)
    assert worst_norm <= 1.0
    assert worst_miss <= 1e-3


@pytest.mark.criterion(9, "mass flow and flux")
def test_criterion_09_mass_flow_flux(request, torus128, shear128, random_flows64, transport):
    path = translation(torus128, 0.3, 0.7, 21)
    rot, fl = rotation_vector(path), flux(path)
    gap = duality_check(path)
    worst = 0.0
    for _, flow in _torus_hamiltonian_paths(shear128, random_flows64, transport):
        worst = max(worst, *(abs(v) for v in rotation_vector(flow)), *(abs(v) for v in flux(flow)))
    _record(request, rotation=f"({rot[0]:.6f}, {rot[1]:.6f})", flux=f"({fl[0]:.6f}, {fl[1]:.6f})", duality=gap, hamiltonian_worst=worst)
    assert max(abs(rot[0] - 0.3), abs(rot[1] - 0.7), abs(fl[0] - 0.3), abs(fl[1] - 0.7)) <= 1e-3
    assert gap <= 1e-3
    assert worst <= 1e-3


@pytest.mark.criterion(10, "fixed points")
def test_criterion_10_fixed_points(request, torus128, shear128, rotation128, random_flows64, transport, sqrt_sequence):
    worst = 0.0
    maps = [flow.final() for _, flow in _torus_hamiltonian_paths(shear128, random_flows64, transport)]
    maps += [rotation128[1].final()] + [p.path.final() for p in sqrt_sequence]
    for phi in maps:
        worst = max(worst, min_displacement(phi, refine=True)[0])
    shift = min_displacement(translation(torus128, 0.3, 0.0, 11).final())[0]
    _record(request, maps=len(maps), worst=worst, translation=shift)
    assert worst <= 1e-3
    assert shift == pytest.approx(0.3, abs=1e-12)


@pytest.mark.criterion(11, "truncation continuity")
def test_criterion_11_truncation(request, torus64):
    H = shear_hamiltonian(torus64, 41)
    s = np.round(np.arange(21) * 0.05, 12)
    pairs = []
    for v in s:
        Hs = truncate(H, float(v))
        pairs.append(PathPair(integrate_flow(Hs, 400), Hs, 400))
    d = np.zeros((s.size, s.size))
    for i in range(s.size):
        for j in range(i + 1, s.size):
            d[i, j] = dham(pairs[i], pairs[j])
    gaps = np.abs(s[:, None] - s[None, :])
    # local Lipschitz constant from neighbouring truncations, checked on every pair
    c = float(np.max(np.diag(d, 1) / np.diag(gaps, 1)))
    iu = np.triu_indices(s.size, 1)
    ratios = d[iu] / gaps[iu]
    _record(request, fitted_c=c, min_ratio=float(ratios.min()), max_ratio=float(ratios.max()))
    assert np.all(d[iu] <= c * gaps[iu])
