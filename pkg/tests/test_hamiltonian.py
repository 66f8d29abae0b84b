import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hamtopo.domain import Domain
from hamtopo.errors import NormalizationError, SupportViolationError
from hamtopo.functions import TrigModes
from hamtopo.hamiltonian import (
    SampledHamiltonian,
    c0_norm,
    hofer_norm,
    linfty_norm,
    normalize,
    osc,
    sample,
)


def _field(dom, fn, nt=11):
    gx, gy = dom.coords
    t = np.linspace(0, 1, nt)[:, None, None]
    return SampledHamiltonian(dom, fn(t, gx[None], gy[None]) * np.ones((nt, 1, 1)))


def test_normalize_constant_gives_zero():
    dom = Domain.torus(16)
    H = normalize(_field(dom, lambda t, x, y: 3.0 + 0 * x))
    assert np.max(np.abs(H.values)) <= 1e-14
    assert H.normalized


def test_normalize_keeps_zero_mean_field():
    dom = Domain.torus(16)
    H = _field(dom, lambda t, x, y: np.cos(2 * np.pi * x))
    assert np.max(np.abs(normalize(H).values - H.values)) <= 1e-14


def test_normalized_flag_is_checked():
    dom = Domain.torus(16)
    with pytest.raises(NormalizationError):
        SampledHamiltonian(dom, np.ones((3,) + dom.shape), normalized=True)


def test_disc_rejects_normalization_and_support_violation():
    dom = Domain.disc(32)
    with pytest.raises(NormalizationError):
        normalize(SampledHamiltonian(dom, np.zeros((3,) + dom.shape)))
    with pytest.raises(SupportViolationError):
        SampledHamiltonian(dom, np.ones((3,) + dom.shape))


def test_cosine_norms():
    dom = Domain.torus(64)
    H = _field(dom, lambda t, x, y: np.cos(2 * np.pi * x))
    assert osc(H, 0) == pytest.approx(2.0, abs=1e-12)
    assert hofer_norm(H) == pytest.approx(2.0, abs=1e-12)
    assert linfty_norm(H) == pytest.approx(2.0, abs=1e-12)


def test_linear_in_time_cosine():
    dom = Domain.torus(64)
    H = _field(dom, lambda t, x, y: t * np.cos(2 * np.pi * x), nt=101)
    assert hofer_norm(H) == pytest.approx(1.0, abs=1e-12)
    assert linfty_norm(H) == pytest.approx(2.0, abs=1e-12)
    assert c0_norm(H) == pytest.approx(1.0, abs=1e-12)


def test_sample_marks_mean_zero_trig_normalized():
    dom = Domain.torus(32)
    H = sample(TrigModes([[1, 2]], 0.5), dom, 5)
    assert H.normalized and H.autonomous


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(-5, 5, allow_nan=False))
def test_norm_properties(seed, c):
    dom = Domain.torus(16)
    g = np.random.default_rng(seed)
    H = normalize(SampledHamiltonian(dom, g.standard_normal((6,) + dom.shape)))
    K = normalize(SampledHamiltonian(dom, g.standard_normal((6,) + dom.shape)))
    assert hofer_norm(H) >= 0.0
    assert hofer_norm(H) <= linfty_norm(H) + 1e-12
    assert hofer_norm(H + K) <= hofer_norm(H) + hofer_norm(K) + 1e-9
    assert hofer_norm(c * H) == pytest.approx(abs(c) * hofer_norm(H), rel=1e-12, abs=1e-12)
    assert hofer_norm(normalize(H + 0.0 * H)) == pytest.approx(hofer_norm(H), rel=1e-12)
