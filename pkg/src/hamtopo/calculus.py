"""Algebra of Hamiltonians: product, inverse, pullback, Tan/Dev and lengths.

Everything is re-sampled onto the grid of the first argument.  Values of a
Hamiltonian at moved points come from its continuous representative (exact
for closed-form families, spline-interpolated otherwise).  Torus results are
renormalized after every operation because interpolation breaks exact
mean-zero slices.
"""

from __future__ import annotations

import warnings

import numpy as np

from .domain import GridMap, inverse_laplacian, spectral_gradient, spline_coefficients, spline_eval_many
from .errors import CalculusIdentityError, DomainMismatchError
from .flow import FlowPath
from .hamiltonian import SampledHamiltonian, hofer_norm, renormalized

IDENTITY_RTOL = 1e-3
IDENTITY_ATOL = 1e-9
AREA_WARN_TOL = 1e-4


class AreaWarning(UserWarning):
    """A map used for pullback is not area preserving at audit tolerance."""


def _check_path(H: SampledHamiltonian, path: FlowPath):
    H.domain.check_same(path.domain)
    if path.nt != H.nt:
        raise DomainMismatchError(f"path has {path.nt} time samples, Hamiltonian has {H.nt}")


def _finish(H: SampledHamiltonian, values) -> SampledHamiltonian:
    values = renormalized(H.domain, np.asarray(values))
    return SampledHamiltonian(H.domain, values, H.domain.is_torus)


def _values_along(H: SampledHamiltonian, xs, ys) -> np.ndarray:
    fn = H.as_function()
    return np.stack([fn.value(t, xs[k], ys[k]) for k, t in enumerate(H.times)])


def compose(H: SampledHamiltonian, K: SampledHamiltonian, path_H: FlowPath) -> SampledHamiltonian:
    """``(H # K)_t = H_t + K_t o (phi_H^t)^-1``, generating ``phi_H^t phi_K^t``."""
    H._check_compatible(K)
    _check_path(H, path_H)
    path_H.require_inverse()
    moved = _values_along(K, path_H.inv_x, path_H.inv_y)
    return _finish(H, H.values + moved)


def inverse(H: SampledHamiltonian, path_H: FlowPath) -> SampledHamiltonian:
    """``Hbar_t = -H_t o phi_H^t``, generating ``(phi_H^t)^-1``."""
    _check_path(H, path_H)
    return _finish(H, -_values_along(H, path_H.image_x, path_H.image_y))


def tan_map(H: SampledHamiltonian, path_H: FlowPath) -> SampledHamiltonian:
    """Tangent map ``(t, x) -> H(t, phi_H^t(x))``."""
    _check_path(H, path_H)
    return _finish(H, _values_along(H, path_H.image_x, path_H.image_y))


def dev_map(H: SampledHamiltonian) -> SampledHamiltonian:
    """Developing map; the identity on the sampled representation."""
    return H


def jacobian_of_map(psi: GridMap) -> np.ndarray:
    """``det D psi`` from spectral derivatives of the displacement."""
    dx, dy = psi.displacement
    dxx, dxy = spectral_gradient(psi.domain, dx)
    dyx, dyy = spectral_gradient(psi.domain, dy)
    return (1.0 + dxx) * (1.0 + dyy) - dxy * dyx


def pullback(H: SampledHamiltonian, psi: GridMap) -> SampledHamiltonian:
    """``(psi^* H)_t = H_t o psi``, generating ``psi^-1 phi_H^t psi``.

    A map that fails the area audit triggers an :class:`AreaWarning`; the
    computation still proceeds.
    """
    H.domain.check_same(psi.domain)
    det = psi.jacobian_det if psi.jacobian_det is not None else jacobian_of_map(psi)
    defect = float(H.domain.max_active(np.abs(det - 1.0)))
    if defect > AREA_WARN_TOL:
        warnings.warn(f"pullback map is not area preserving (|det - 1| = {defect:.3g})", AreaWarning, stacklevel=2)
    nt = H.nt
    xs = np.broadcast_to(psi.image_x, (nt,) + H.domain.shape)
    ys = np.broadcast_to(psi.image_y, (nt,) + H.domain.shape)
    return _finish(H, _values_along(H, xs, ys))


def length_pair(H: SampledHamiltonian, K: SampledHamiltonian, path_H: FlowPath) -> tuple:
    """Both evaluations of ``leng(phi_H^-1 phi_K)``.

    Returns ``(||Hbar # K||, ||K - H||)``: the first through the product
    with the inverse (flow of ``Hbar`` is the inverse path of ``phi_H``), the
    second from the closed identity ``(Hbar # K)_t = (K_t - H_t) o phi_H^t``.
    """
    hbar = inverse(H, path_H)
    via_product = hofer_norm(compose(hbar, K, path_H.inverse()))
    via_difference = hofer_norm(K - H)
    return via_product, via_difference


def identity_holds(a: float, b: float, rtol: float = IDENTITY_RTOL, atol: float = IDENTITY_ATOL) -> bool:
    return abs(a - b) <= atol + rtol * max(abs(a), abs(b))


def leng_between(H: SampledHamiltonian, K: SampledHamiltonian, path_H: FlowPath) -> float:
    """Hofer length of ``phi_H^-1 phi_K``, cross-checked against ``||K - H||``."""
    via_product, via_difference = length_pair(H, K, path_H)
    if not identity_holds(via_product, via_difference):
        raise CalculusIdentityError(
            f"calculus identity violated: ||Hbar#K|| = {via_product:.6g} but ||K - H|| = {via_difference:.6g}"
        )
    return via_product


def eulerian_velocity(path: FlowPath, k: int, order: int = 4) -> tuple:
    """``d/dt lambda`` at ``times[k]`` composed with ``lambda(t_k)^-1``.

    Time derivatives use five-point (fourth order) differences of the
    slices, one-sided at the ends; ``order=2`` uses three-point ones.
    """
    u_nodes = _time_derivative(path.image_x, path.times, k, order)
    v_nodes = _time_derivative(path.image_y, path.times, k, order)
    path.require_inverse()
    coefs = spline_coefficients(np.stack([u_nodes, v_nodes]))
    u, v = spline_eval_many(path.domain, coefs, path.inv_x[k], path.inv_y[k])
    return u, v


_FD_STENCILS = {
    # offsets relative to the evaluation index, weights times dt
    0: (np.arange(0, 5), np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0),
    1: (np.arange(-1, 4), np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0),
    2: (np.arange(-2, 3), np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0),
}


def _time_derivative(stack, times, k, order: int = 4):
    nt = len(times)
    k = k % nt
    dt = times[1] - times[0]
    if order == 2 or nt < 5:
        if k == 0:
            return (stack[1] - stack[0]) / dt
        if k == nt - 1:
            return (stack[-1] - stack[-2]) / dt
        return (stack[k + 1] - stack[k - 1]) / (2.0 * dt)
    if k <= 1:
        offsets, weights = _FD_STENCILS[k]
    elif k >= nt - 2:
        offsets, weights = _FD_STENCILS[nt - 1 - k]
        offsets, weights = -offsets, -weights
    else:
        offsets, weights = _FD_STENCILS[2]
    # weights sum to zero; differencing against slice k keeps constant paths exactly still
    return sum(w * (stack[k + o] - stack[k]) for o, w in zip(offsets, weights) if o != 0) / dt


def recover_generator(path: FlowPath) -> SampledHamiltonian:
    """The Hamiltonian generating a sampled path, reconstructed from motion alone.

    Solves ``Lap G_t = d/dy u - d/dx v`` for the Eulerian velocity ``(u, v)``
    of the path (``X_G = (G_y, -G_x)``).  On the torus the result is
    normalized; on the disc the constant is fixed so that G vanishes outside
    the support.
    """
    dom = path.domain
    values = np.empty((path.nt,) + dom.shape)
    for k in range(path.nt):
        u, v = eulerian_velocity(path, k)
        _, uy = spectral_gradient(dom, u)
        vx, _ = spectral_gradient(dom, v)
        g = inverse_laplacian(dom, uy - vx)
        if dom.is_torus:
            g -= dom.mean_values(g)
        else:
            g -= float(np.mean(g[dom.outside_support]))
            g[dom.outside_support] = 0.0
        values[k] = g
    return SampledHamiltonian(dom, values, dom.is_torus)


def max_difference(A: SampledHamiltonian, B: SampledHamiltonian) -> float:
    A._check_compatible(B)
    return float(np.max(np.abs(A.values[:, A.domain.active] - B.values[:, B.domain.active])))
