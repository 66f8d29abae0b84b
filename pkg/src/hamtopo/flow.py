"""Hamiltonian vector fields, flow integration and flow-path bookkeeping."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .domain import Domain, GridMap, spectral_gradient, spline_coefficients, spline_eval, spline_eval_many
from .errors import DomainMismatchError, HamtopoError, InverseUnavailableError, SupportViolationError, TimeStepError
from .functions import GridHamiltonian, HamiltonianFunction, Reparameterized
from .hamiltonian import SampledHamiltonian

DEFAULT_STEPS = 1000
UNWRAP_LIMIT = 0.5
# largest |D X_H| * step accepted before a point's step is halved
MAX_RATE_STEP = 0.05


@dataclass(frozen=True, eq=False)
class FlowPath:
    """A sampled isotopy ``t -> lambda(t)`` with ``lambda(0) = id``.

    ``image_x[k]``/``image_y[k]`` hold the images of the grid nodes at
    ``times[k]``; on the torus they are unwrapped, so ``image - grid`` is the
    continuous displacement.  ``inv_x``/``inv_y`` hold ``lambda(t)^-1``.
    """

    domain: Domain
    times: np.ndarray
    image_x: np.ndarray
    image_y: np.ndarray
    inv_x: Optional[np.ndarray] = None
    inv_y: Optional[np.ndarray] = None
    jacobian_det: Optional[np.ndarray] = None

    def __post_init__(self):
        shape = (len(self.times),) + self.domain.shape
        for name in ("image_x", "image_y", "inv_x", "inv_y", "jacobian_det"):
            arr = getattr(self, name)
            if arr is None:
                continue
            arr = np.array(arr, dtype=float)
            if arr.shape != shape:
                raise DomainMismatchError(f"{name} has shape {arr.shape}, expected {shape}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        gx, gy = self.domain.coords
        if not (np.array_equal(self.image_x[0], gx) and np.array_equal(self.image_y[0], gy)):
            raise HamtopoError("flow path must start at the identity")
        if self.domain.is_torus:
            check_unwrapping(self.image_x, self.image_y)

    @property
    def nt(self) -> int:
        return len(self.times)

    @property
    def has_inverse(self) -> bool:
        return self.inv_x is not None

    def displacement(self, k: int = -1) -> tuple:
        gx, gy = self.domain.coords
        return self.image_x[k] - gx, self.image_y[k] - gy

    def slice(self, k: int) -> GridMap:
        inv = self.inverse_slice(k) if self.has_inverse else None
        det = None if self.jacobian_det is None else self.jacobian_det[k]
        return GridMap(self.domain, self.image_x[k], self.image_y[k], det, inv)

    def require_inverse(self) -> None:
        if not self.has_inverse:
            raise InverseUnavailableError("inverse not available")

    def inverse_slice(self, k: int) -> GridMap:
        self.require_inverse()
        fwd = GridMap(self.domain, self.image_x[k], self.image_y[k])
        return GridMap(self.domain, self.inv_x[k], self.inv_y[k], None, fwd)

    def final(self) -> GridMap:
        return self.slice(self.nt - 1)

    def inverse(self) -> "FlowPath":
        """The path ``t -> lambda(t)^-1``."""
        self.require_inverse()
        return FlowPath(self.domain, self.times, self.inv_x, self.inv_y, self.image_x, self.image_y)

    def displacement_spline(self, k: int, inverse: bool = False):
        key = ("inv" if inverse else "fwd", k % self.nt)
        cache = self.__dict__.setdefault("_splines", {})
        if key not in cache:
            gx, gy = self.domain.coords
            ix, iy = (self.inv_x, self.inv_y) if inverse else (self.image_x, self.image_y)
            cache[key] = spline_coefficients(np.stack([ix[k] - gx, iy[k] - gy]))
        return cache[key]

    def evaluate(self, k: int, x, y, inverse: bool = False):
        """``lambda(t_k)`` (or its inverse) at arbitrary points."""
        dx, dy = spline_eval_many(self.domain, self.displacement_spline(k, inverse), x, y)
        return x + dx, y + dy


def check_unwrapping(image_x, image_y):
    if len(image_x) < 2:
        return
    jump = max(np.max(np.abs(np.diff(image_x, axis=0))), np.max(np.abs(np.diff(image_y, axis=0))))
    if jump >= UNWRAP_LIMIT:
        raise TimeStepError("time step too coarse for unwrapping")


def identity_path(domain: Domain, nt: int = 200) -> FlowPath:
    gx, gy = domain.coords
    stack = lambda a: np.broadcast_to(a, (nt,) + domain.shape)
    return FlowPath(domain, np.linspace(0.0, 1.0, nt), stack(gx), stack(gy), stack(gx), stack(gy), np.ones((nt,) + domain.shape))


def translation_path(domain: Domain, a: float, b: float, nt: int = 200) -> FlowPath:
    """``t -> (x + a t, y + b t)`` on the torus (symplectic, not Hamiltonian)."""
    if not domain.is_torus:
        raise HamtopoError("translations are only defined on the torus")
    gx, gy = domain.coords
    times = np.linspace(0.0, 1.0, nt)
    tt = times[:, None, None]
    return FlowPath(domain, times, gx + a * tt, gy + b * tt, gx - a * tt, gy - b * tt, np.ones((nt,) + domain.shape))


# -- vector fields -------------------------------------------------------------


def vector_field(H: SampledHamiltonian, t: float, method: Optional[str] = None):
    """X_H at the grid nodes at time ``t``.

    ``method``: ``"exact"`` uses the continuous representative,
    ``"spectral"`` or ``"centered"`` differentiate the samples (linear in
    time between slices).  Default: exact when available, else spectral.
    """
    if method is None:
        method = "exact" if H.func is not None else "spectral"
    gx, gy = H.domain.coords
    if method == "exact":
        if H.func is None:
            raise HamtopoError("no continuous representative attached")
        return H.func.vector_field(t, gx, gy)
    grid = GridHamiltonian(H.domain, H.times, H.values, time_interp="linear", derivative=method)
    hx, hy = grid.grid_gradient(t)
    return hy, -hx


# -- integration ---------------------------------------------------------------


def _rhs(fn: HamiltonianFunction, t, x, y, jac):
    if jac is None:
        hx, hy = fn.derivatives(t, x, y, hessian=False)
        return hy, -hx, None
    hx, hy, hxx, hxy, hyy = fn.derivatives(t, x, y, hessian=True)
    j11, j12, j21, j22 = jac
    # d/dt J = DX J with DX = [[H_xy, H_yy], [-H_xx, -H_xy]]
    return hy, -hx, (
        hxy * j11 + hyy * j21,
        hxy * j12 + hyy * j22,
        -hxx * j11 - hxy * j21,
        -hxx * j12 - hxy * j22,
    )


def _rk4_step(fn, t, h, x, y, jac):
    k1 = _rhs(fn, t, x, y, jac)
    a = lambda s, k: None if jac is None else tuple(j + s * d for j, d in zip(jac, k[2]))
    k2 = _rhs(fn, t + 0.5 * h, x + 0.5 * h * k1[0], y + 0.5 * h * k1[1], a(0.5 * h, k1))
    k3 = _rhs(fn, t + 0.5 * h, x + 0.5 * h * k2[0], y + 0.5 * h * k2[1], a(0.5 * h, k2))
    k4 = _rhs(fn, t + h, x + h * k3[0], y + h * k3[1], a(h, k3))
    xn = x + h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    yn = y + h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    jn = None
    if jac is not None:
        jn = tuple(j + h / 6.0 * (d1 + 2 * d2 + 2 * d3 + d4) for j, d1, d2, d3, d4 in zip(jac, k1[2], k2[2], k3[2], k4[2]))
    return xn, yn, jn


def substeps_per_interval(nt: int, steps: int) -> int:
    return max(1, math.ceil(steps / (nt - 1)))


def integrate_points(fn: HamiltonianFunction, x0, y0, nt: int = 2, steps: int = DEFAULT_STEPS, jacobian: bool = False):
    """Classical RK4 for arbitrary starting points.

    Returns images at ``nt`` uniform output times, the Jacobian determinants
    (or None) and the largest coordinate change over one step.
    """
    x = np.array(x0, dtype=float)
    y = np.array(y0, dtype=float)
    m = substeps_per_interval(nt, steps)
    h = 1.0 / ((nt - 1) * m)
    out_x = np.empty((nt,) + x.shape)
    out_y = np.empty((nt,) + x.shape)
    out_x[0], out_y[0] = x, y
    det = None
    jac = None
    if jacobian:
        jac = (np.ones_like(x), np.zeros_like(x), np.zeros_like(x), np.ones_like(x))
        det = np.empty((nt,) + x.shape)
        det[0] = 1.0
    max_step = 0.0
    for k in range(nt - 1):
        for j in range(m):
            t = (k * m + j) * h
            xn, yn, jac = _rk4_step(fn, t, h, x, y, jac)
            max_step = max(max_step, float(np.max(np.abs(xn - x), initial=0.0)), float(np.max(np.abs(yn - y), initial=0.0)))
            x, y = xn, yn
        out_x[k + 1], out_y[k + 1] = x, y
        if jacobian:
            det[k + 1] = jac[0] * jac[3] - jac[1] * jac[2]
    return out_x, out_y, det, max_step


def inverse_hamiltonian_values(fn: HamiltonianFunction, times, image_x, image_y) -> np.ndarray:
    """Samples of the inverse Hamiltonian ``-H_t o phi^t`` along a forward path."""
    return np.stack([-fn.value(t, image_x[k], image_y[k]) for k, t in enumerate(times)])


def rate_bound(fn: HamiltonianFunction, x, y, times) -> np.ndarray:
    """Pointwise bound on ``|D X_H|`` (Frobenius norm of the Hessian).

    Autonomous fields are measured along the starting point, which is exact
    for fields whose Hessian norm is constant on orbits (radial ones) and a
    heuristic otherwise; time-dependent fields use the global maximum over
    the sample times, so every point gets the same step.
    """
    sample_times = [0.0] if fn.autonomous else times
    worst = np.zeros(np.shape(x))
    for t in sample_times:
        hxx, hxy, hyy = fn.derivatives(t, x, y)[2:]
        norm = np.sqrt(hxx**2 + 2.0 * hxy**2 + hyy**2)
        worst = np.maximum(worst, norm) if fn.autonomous else np.maximum(worst, float(np.max(norm)))
    return worst


def refinement_levels(rates, nt: int, steps: int, max_rate_step: float = MAX_RATE_STEP) -> np.ndarray:
    """Power-of-two step multipliers keeping ``rate * h`` below ``max_rate_step``.

    The bound tightens in proportion when ``steps`` exceeds the default, so
    raising the step count still converges on refined points.
    """
    h = 1.0 / ((nt - 1) * substeps_per_interval(nt, steps))
    max_rate_step = max_rate_step * min(1.0, DEFAULT_STEPS / steps)
    need = np.maximum(np.asarray(rates) * h / max_rate_step, 1.0)
    return np.ceil(np.log2(need) - 1e-12).astype(int)


def integrate_refined(fn, x0, y0, nt: int, steps: int, jacobian: bool, levels):
    """:func:`integrate_points` with a per-point step multiplier ``2**level``.

    Points never interact, so each level is integrated as its own batch.
    Functions with a ``compiled_flow`` method take all refined points in
    one call of the same scheme.
    """
    x0 = np.asarray(x0, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    levels = np.broadcast_to(levels, x0.shape)
    xs = np.empty((nt,) + x0.shape)
    ys = np.empty((nt,) + x0.shape)
    det = np.empty((nt,) + x0.shape) if jacobian else None
    max_step = 0.0
    # small refined batches pay per-step overhead; use compiled kernels when offered
    compiled = getattr(fn, "compiled_flow", None)
    if compiled is not None and np.any(levels > 0):
        sel = levels > 0
        m = substeps_per_interval(nt, steps)
        bx, by, bdet, max_step = compiled(x0[sel], y0[sel], nt, m, 1.0 / ((nt - 1) * m), levels[sel], jacobian)
        xs[:, sel], ys[:, sel] = bx, by
        if jacobian:
            det[:, sel] = bdet
        levels = np.where(sel, -1, levels)
    for level in np.unique(levels):
        if level < 0:
            continue
        sel = levels == level
        bx, by, bdet, bstep = integrate_points(fn, x0[sel], y0[sel], nt, steps * 2 ** int(level), jacobian)
        xs[:, sel], ys[:, sel] = bx, by
        if jacobian:
            det[:, sel] = bdet
        max_step = max(max_step, bstep)
    return xs, ys, det, max_step


def integrate_flow(
    H: SampledHamiltonian,
    steps: int = DEFAULT_STEPS,
    inverse: bool = True,
    jacobian: bool = True,
    refine: bool = True,
) -> FlowPath:
    """Integrate ``d/dt phi^t = X_H(t, phi^t)``, ``phi^0 = id`` from every grid node.

    Slices are recorded at the Hamiltonian's ``nt`` sample times; the step
    count is rounded up to a whole number of substeps per output interval.
    With ``refine`` the step is halved, point by point, until
    ``|D X_H| h`` is below ``MAX_RATE_STEP`` (stiff cores of twist maps).
    Inverse slices come from integrating the inverse Hamiltonian
    ``-H_t o phi^t`` (just ``-H`` when H is autonomous).
    """
    dom = H.domain
    fn = H.as_function()
    gx, gy = dom.coords
    times = H.times
    levels = 0
    if refine:
        levels = refinement_levels(rate_bound(fn, gx, gy, times), H.nt, steps)
    xs, ys, det, max_step = integrate_refined(fn, gx, gy, H.nt, steps, jacobian, levels)
    _check_motion(dom, xs, ys, max_step)
    inv_x = inv_y = None
    if inverse:
        if fn.autonomous:
            inv_fn = fn.scaled(-1.0)
            # the reversed flow has the same Hessian norm along its orbits
        else:
            hbar = inverse_hamiltonian_values(fn, times, xs, ys)
            inv_fn = GridHamiltonian(dom, times, hbar)
            if refine:
                levels = refinement_levels(rate_bound(inv_fn, gx, gy, times), H.nt, steps)
        inv_x, inv_y, _, inv_step = integrate_refined(inv_fn, gx, gy, H.nt, steps, False, levels)
        _check_motion(dom, inv_x, inv_y, inv_step)
    xs[0], ys[0] = gx, gy
    if inv_x is not None:
        inv_x[0], inv_y[0] = gx, gy
    return FlowPath(dom, times, xs, ys, inv_x, inv_y, det)


def _check_motion(dom: Domain, xs, ys, max_step):
    if dom.is_torus:
        if max_step >= UNWRAP_LIMIT:
            raise TimeStepError("time step too coarse for unwrapping")
        return
    r = np.hypot(xs[:, dom.active], ys[:, dom.active])
    if np.any(r > 1.0 + 1e-9):
        raise SupportViolationError("support violation: a disc point left the disc")


def area_audit(path: FlowPath, exclude_radius: float = 0.0) -> float:
    """max over t and active nodes of |det D phi^t - 1|."""
    if path.jacobian_det is None:
        raise HamtopoError("jacobian_det not available; integrate with jacobian=True")
    mask = path.domain.region_mask(exclude_radius)
    return float(np.max(np.abs(path.jacobian_det[:, mask] - 1.0)))


def inverse_audit(path: FlowPath, H: Optional[SampledHamiltonian] = None, steps: int = DEFAULT_STEPS, samples: int = 8) -> float:
    """C0 distance of phi^t o (phi^t)^-1 from the identity, maximised over t.

    Without ``H`` the forward slice is evaluated at the inverse images by
    spline interpolation, which limits the audit to interpolation accuracy
    where the displacement varies fast (stiff twists).  With ``H`` the flow
    itself is re-integrated from the inverse images, on ``samples`` evenly
    spaced slices including the last.
    """
    dom = path.domain
    gx, gy = dom.coords
    path.require_inverse()
    worst = 0.0
    if H is None:
        for k in range(path.nt):
            px, py = path.evaluate(k, path.inv_x[k], path.inv_y[k])
            worst = max(worst, float(dom.max_active(dom.displacement(px - gx, py - gy))))
        return worst
    dom.check_same(H.domain)
    fn = H.as_function()
    picks = np.unique(np.linspace(1, path.nt - 1, min(samples, path.nt - 1)).round().astype(int))
    act = dom.active
    for k in picks:
        t = float(path.times[k])
        if fn.autonomous:
            sub = fn.scaled(t)
        else:
            sub = Reparameterized(fn, lambda s, t=t: t * s, lambda s, t=t: t)
        x0, y0 = path.inv_x[k][act], path.inv_y[k][act]
        levels = refinement_levels(rate_bound(sub, x0, y0, np.linspace(0.0, 1.0, path.nt)), 2, steps)
        xs, ys, _, _ = integrate_refined(sub, x0, y0, 2, steps, False, levels)
        worst = max(worst, float(np.max(dom.displacement(xs[-1] - gx[act], ys[-1] - gy[act]))))
    return worst


def energy_drift(H: SampledHamiltonian, path: FlowPath) -> float:
    """max over t, x of |H(phi^t(x)) - H(x)| for an autonomous H."""
    fn = H.as_function()
    gx, gy = H.domain.coords
    base = fn.value(0.0, gx, gy)
    worst = 0.0
    for k in range(path.nt):
        diff = np.abs(fn.value(0.0, path.image_x[k], path.image_y[k]) - base)
        worst = max(worst, float(H.domain.max_active(diff)))
    return worst


# -- maps ----------------------------------------------------------------------


def apply_map(phi: GridMap, x, y):
    """Evaluate a grid map off the grid by spline interpolation of its displacement."""
    coefs = spline_coefficients(np.stack(phi.displacement))
    dx, dy = spline_eval_many(phi.domain, coefs, x, y)
    return x + dx, y + dy


def compose_maps(phi: GridMap, psi: GridMap) -> GridMap:
    """``phi o psi`` (psi applied first)."""
    phi.domain.check_same(psi.domain)
    x, y = apply_map(phi, psi.image_x, psi.image_y)
    inv = None
    if phi.inverse is not None and psi.inverse is not None:
        ix, iy = apply_map(psi.inverse, phi.inverse.image_x, phi.inverse.image_y)
        inv = GridMap(phi.domain, ix, iy, None, GridMap(phi.domain, x, y))
    return GridMap(phi.domain, x, y, None, inv)


def invert_map(phi: GridMap, iterations: int = 30, tol: float = 1e-13) -> GridMap:
    """Numerical inverse by Newton iteration on the interpolated displacement."""
    dom = phi.domain
    gx, gy = dom.coords
    dx, dy = phi.displacement
    cx, cy = spline_coefficients(dx), spline_coefficients(dy)
    dxx, dxy = spectral_gradient(dom, dx)
    dyx, dyy = spectral_gradient(dom, dy)
    cj = [spline_coefficients(a) for a in (dxx, dxy, dyx, dyy)]
    px, py = gx - dx, gy - dy
    for _ in range(iterations):
        rx = px + spline_eval(dom, cx, px, py) - gx
        ry = py + spline_eval(dom, cy, px, py) - gy
        if max(np.max(np.abs(rx)), np.max(np.abs(ry))) < tol:
            break
        a, b, c, d = (1.0 + spline_eval(dom, cj[0], px, py), spline_eval(dom, cj[1], px, py),
                      spline_eval(dom, cj[2], px, py), 1.0 + spline_eval(dom, cj[3], px, py))
        det = a * d - b * c
        px = px - (d * rx - b * ry) / det
        py = py - (-c * rx + a * ry) / det
    return GridMap(dom, px, py, None, GridMap(dom, phi.image_x, phi.image_y))


def min_displacement(phi: GridMap, refine: bool = False, exclude_radius: float = 0.0, seeds: int = 16):
    """Minimum of d(x, phi(x)) over active nodes and where it is attained.

    With ``refine=True`` Gauss-Newton searches for a zero of the interpolated
    displacement (modulo the lattice on the torus), started from the ``seeds``
    nodes where a zero could lie within about one cell (smallest
    ``|d| - h |grad d|``), and the smallest value found is returned.
    """
    dom = phi.domain
    dx, dy = phi.displacement
    mask = dom.region_mask(exclude_radius)
    dist = np.where(mask, dom.displacement(dx, dy), np.inf)
    idx = np.unravel_index(int(np.argmin(dist)), dist.shape)
    gx, gy = dom.coords
    best = (float(dist[idx]), (float(gx[idx]), float(gy[idx])))
    if not refine or best[0] == 0.0:
        return best
    cx, cy = spline_coefficients(dx), spline_coefficients(dy)
    dxx, dxy = spectral_gradient(dom, dx)
    dyx, dyy = spectral_gradient(dom, dy)
    cj = [spline_coefficients(a) for a in (dxx, dxy, dyx, dyy)]
    reach = max(dom.hx, dom.hy) * np.sqrt(dxx**2 + dxy**2 + dyx**2 + dyy**2)
    order = np.argsort(np.where(mask, dist - reach, np.inf), axis=None)[:seeds]
    starts = [idx] + [np.unravel_index(int(k), dist.shape) for k in order]
    ev = lambda c, q: float(spline_eval(dom, c, np.array([q[0]]), np.array([q[1]]))[0])
    for start in starts:
        p = np.array([gx[start], gy[start]], dtype=float)
        shift = np.round([dx[start], dy[start]]) if dom.is_torus else np.zeros(2)
        for _ in range(30):
            r = np.array([ev(cx, p), ev(cy, p)]) - shift
            d = float(dom.displacement(r[0], r[1]))
            if d < best[0] and (dom.is_torus or np.hypot(*p) <= 1.0):
                best = (d, (float(p[0]), float(p[1])))
            if d < 1e-14:
                break
            jac = np.array([[ev(cj[0], p), ev(cj[1], p)], [ev(cj[2], p), ev(cj[3], p)]])
            # minimum-norm step: fixed points often form curves (singular Jacobian)
            step = np.linalg.lstsq(jac, r, rcond=1e-10)[0]
            if not np.all(np.isfinite(step)) or np.hypot(*step) > 4 * max(dom.hx, dom.hy):
                break
            p = p - step
        if best[0] < 1e-14:
            break
    return best


def attach_inverse(path: FlowPath) -> FlowPath:
    """Copy of ``path`` with inverse slices from :func:`invert_map` (for flows read from file)."""
    if path.has_inverse:
        return path
    inv = [invert_map(path.slice(k)) for k in range(path.nt)]
    gx, gy = path.domain.coords
    inv_x = np.stack([gx] + [m.image_x for m in inv[1:]])
    inv_y = np.stack([gy] + [m.image_y for m in inv[1:]])
    return FlowPath(path.domain, path.times, path.image_x, path.image_y, inv_x, inv_y, path.jacobian_det)
