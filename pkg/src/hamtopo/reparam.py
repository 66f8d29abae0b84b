"""Reparameterizations ``zeta`` of the time interval and what they do to paths.

``H^zeta(t, x) = zeta'(t) H(zeta(t), x)`` generates ``t -> phi_H^{zeta(t)}``.
This module provides the hamiltonian norm of ``zeta``, truncations
``H^s = s H(s t, x)``, the boundary flattening that makes a path constant
near both ends while staying Hofer-close, and the concatenation that runs a
flat path before a second one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import FlatnessError, FlattenError, HamtopoError, ReparamBoundError
from .functions import Concatenated, Reparameterized
from .hamiltonian import SampledHamiltonian, c0_norm, hofer_norm, linfty_norm, time_lipschitz

DZETA_TOL = 1e-6
BOUND_SLACK = 1e-9
FLATTEN_ITERATIONS = 20
FLATTEN_MARGIN = 0.95


def smoothstep(u):
    """Quintic smoothstep ``6u^5 - 15u^4 + 10u^3`` clamped to [0, 1]."""
    u = np.clip(u, 0.0, 1.0)
    return u**3 * (10.0 + u * (-15.0 + 6.0 * u))


def smoothstep_prime(u):
    inside = (u > 0.0) & (u < 1.0)
    u = np.clip(u, 0.0, 1.0)
    return np.where(inside, 30.0 * u**2 * (1.0 - u) ** 2, 0.0)


def smoothstep_integral(u):
    """``int_0^u smoothstep`` for u in [0, 1], continued linearly beyond 1."""
    v = np.clip(u, 0.0, 1.0)
    inner = v**6 - 3.0 * v**5 + 2.5 * v**4
    return inner + np.maximum(np.asarray(u, dtype=float) - 1.0, 0.0)


@dataclass(frozen=True, eq=False)
class ReparamMap:
    """Samples of a monotone ``zeta: [0, 1] -> [0, 1]`` and its derivative.

    ``zeta_fn``/``dzeta_fn`` optionally keep the closed form so flows of
    ``H^zeta`` can be integrated without re-interpolating the samples.
    """

    zeta: np.ndarray
    dzeta: np.ndarray
    zeta_fn: Optional[Callable] = field(default=None, repr=False)
    dzeta_fn: Optional[Callable] = field(default=None, repr=False)
    constant_speed: bool = False

    def __post_init__(self):
        z = np.array(self.zeta, dtype=float)
        dz = np.array(self.dzeta, dtype=float)
        if z.ndim != 1 or z.shape != dz.shape or len(z) < 2:
            raise HamtopoError("zeta and dzeta must be 1-d arrays of equal length >= 2")
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(dz))):
            raise HamtopoError("zeta samples must be finite")
        if z[0] != 0.0 or np.any(z < 0.0) or np.any(z > 1.0):
            raise HamtopoError("zeta must start at 0 and stay in [0, 1]")
        if np.any(np.diff(z) < 0.0) or np.any(dz < 0.0):
            raise HamtopoError("zeta must be nondecreasing")
        if self.zeta_fn is not None:
            quotient, spread = _difference_quotient(self.zeta_fn, len(z))
            residual = np.abs(dz - quotient)
            allowed = DZETA_TOL + 0.1 * spread
        else:
            residual, allowed = _trapezoid_residual(z, dz)
        if np.any(residual > allowed):
            raise HamtopoError(f"dzeta inconsistent with zeta (worst residual {float(np.max(residual)):.3g})")
        for arr in (z, dz):
            arr.setflags(write=False)
        object.__setattr__(self, "zeta", z)
        object.__setattr__(self, "dzeta", dz)

    @property
    def nt(self) -> int:
        return len(self.zeta)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.nt)

    def functions(self):
        """Continuous ``(zeta, zeta')``; piecewise-linear from samples if no closed form."""
        if self.zeta_fn is not None:
            return self.zeta_fn, self.dzeta_fn
        t = self.times
        return (lambda s: float(np.interp(s, t, self.zeta))), (lambda s: float(np.interp(s, t, self.dzeta)))

    @classmethod
    def from_functions(cls, zeta_fn, dzeta_fn, nt: int = 200, constant_speed: bool = False) -> "ReparamMap":
        t = np.linspace(0.0, 1.0, nt)
        z = np.array([zeta_fn(s) for s in t], dtype=float)
        dz = np.array([dzeta_fn(s) for s in t], dtype=float)
        return cls(z, dz, zeta_fn, dzeta_fn, constant_speed)

    @classmethod
    def identity(cls, nt: int = 200) -> "ReparamMap":
        return cls.linear(1.0, nt)

    @classmethod
    def linear(cls, s: float, nt: int = 200) -> "ReparamMap":
        """``zeta(t) = s t``; the truncation to the first ``s`` of the path."""
        if not 0.0 <= s <= 1.0:
            raise HamtopoError("truncation parameter must lie in [0, 1]")
        return cls.from_functions(lambda t: s * t, lambda t: s, nt, constant_speed=True)

    @classmethod
    def power(cls, p: float, nt: int = 200) -> "ReparamMap":
        if p < 1.0:
            raise HamtopoError("power reparameterization needs p >= 1 for a bounded derivative")
        return cls.from_functions(lambda t: t**p, lambda t: p * t ** (p - 1.0), nt)

    @classmethod
    def smoothstep_mix(cls, a: float, nt: int = 200) -> "ReparamMap":
        """``(1 - a) t + a S(t)`` with S the quintic smoothstep, ``a`` in [0, 1]."""
        if not 0.0 <= a <= 1.0:
            raise HamtopoError("mixing weight must lie in [0, 1]")
        return cls.from_functions(
            lambda t: (1.0 - a) * t + a * float(smoothstep(t)),
            lambda t: (1.0 - a) + a * float(smoothstep_prime(t)),
            nt,
        )

    @classmethod
    def plateau(cls, eps: float, nt: int = 200) -> "ReparamMap":
        """Boundary-flat map: 0 on [0, eps], 1 on [1 - eps, 1].

        ``zeta'`` is a normalized bump that rises by a quintic smoothstep on
        [eps, 2 eps], stays constant in the middle and falls symmetrically,
        so ``zeta`` is C^3 and ``zeta' -> 1`` away from the ends as eps -> 0.
        """
        if not 0.0 < eps < 0.25:
            raise HamtopoError("plateau width must lie in (0, 0.25)")
        mass = 1.0 - 3.0 * eps

        def bump(t):
            return float(smoothstep((t - eps) / eps) * smoothstep((1.0 - eps - t) / eps))

        def zeta(t):
            if t <= eps:
                return 0.0
            if t >= 1.0 - eps:
                return 1.0
            # rising ramp minus the deficit of the (mirror-image) falling ramp
            rise = eps * float(smoothstep_integral((t - eps) / eps))
            fall = eps * float(smoothstep_integral((t - (1.0 - 2.0 * eps)) / eps))
            return min((rise - fall) / mass, 1.0)

        return cls.from_functions(zeta, lambda t: bump(t) / mass, nt)


def _difference_quotient(fn, nt: int, h: float = 1e-5) -> np.ndarray:
    """Richardson-extrapolated difference quotients of ``fn`` at the sample times.

    Central at interior points; one-sided second order at t = 0 and t = 1
    so ``fn`` is never evaluated outside [0, 1].  At the endpoints, maps
    like ``t^p`` with 1 < p < 2 make the one-sided quotient converge only
    like ``h^(p-1)``; there the limit is Aitken-extrapolated from steps
    h, h/4, h/16 and the last difference is returned as an error scale
    (zero elsewhere).
    """
    t = np.linspace(0.0, 1.0, nt)

    def quotient(step):
        out = np.empty(nt)
        for k, s in enumerate(t):
            if s - step < 0.0:
                out[k] = (-3.0 * fn(s) + 4.0 * fn(s + step) - fn(s + 2 * step)) / (2.0 * step)
            elif s + step > 1.0:
                out[k] = (3.0 * fn(s) - 4.0 * fn(s - step) + fn(s - 2 * step)) / (2.0 * step)
            else:
                out[k] = (fn(s + step) - fn(s - step)) / (2.0 * step)
        return out

    coarse = quotient(h)
    out = (4.0 * quotient(h / 2.0) - coarse) / 3.0
    spread = np.zeros(nt)
    q1, q2 = quotient(h / 4.0), quotient(h / 16.0)
    for k in (0, nt - 1):
        d1, d2 = q1[k] - coarse[k], q2[k] - q1[k]
        if d1 * d2 > 0.0 and abs(d2) < abs(d1):
            # geometric convergence: Aitken's limit
            out[k] = q2[k] + d2 * d2 / (d1 - d2)
            spread[k] = abs(d2)
    return out, spread


def _trapezoid_residual(z, dz):
    """Per-interval ``|dzeta - trapezoid(zeta')|`` and the allowed size.

    The trapezoid rule errs by ``dt^3 |zeta'''| / 12`` on each interval; the
    third derivative is estimated from second differences of ``zeta'``.
    """
    dt = 1.0 / (len(z) - 1)
    residual = np.abs(np.diff(z) - 0.5 * dt * (dz[1:] + dz[:-1]))
    if len(z) >= 3:
        curv = np.abs(np.diff(dz, 2)) / dt**2
        curv = np.concatenate([curv[:1], np.maximum(curv[1:], curv[:-1]), curv[-1:]]) if len(curv) > 1 else np.repeat(curv, 2)
    else:
        curv = np.zeros(1)
    allowed = DZETA_TOL * dt + 2.0 * dt**3 * curv / 12.0
    return residual, allowed


def _check_same_grid(a: ReparamMap, b: ReparamMap):
    if a.nt != b.nt:
        raise HamtopoError("reparameterizations sampled on different time grids")


def ham_norm(z1: ReparamMap, z2: ReparamMap) -> float:
    """``max |zeta1 - zeta2| + int |zeta1' - zeta2'|`` (trapezoid in t)."""
    _check_same_grid(z1, z2)
    c0 = float(np.max(np.abs(z1.zeta - z2.zeta)))
    l1 = float(np.trapezoid(np.abs(z1.dzeta - z2.dzeta), dx=1.0 / (z1.nt - 1)))
    return c0 + l1


def reparameterize(H: SampledHamiltonian, z: ReparamMap) -> SampledHamiltonian:
    """``H^zeta(t_k) = zeta'(t_k) H(zeta(t_k))``, H linear between its time samples."""
    if z.nt != H.nt:
        raise HamtopoError("reparameterization and Hamiltonian use different time grids")
    u = z.zeta * (H.nt - 1)
    lo = np.minimum(np.floor(u).astype(int), H.nt - 2)
    w = (u - lo)[:, None, None]
    slices = (1.0 - w) * H.values[lo] + w * H.values[lo + 1]
    values = z.dzeta[:, None, None] * slices
    zeta_fn, dzeta_fn = z.functions()
    func = Reparameterized(H.as_function(), zeta_fn, dzeta_fn, z.constant_speed)
    return SampledHamiltonian(H.domain, values, H.normalized, func)


def truncate(H: SampledHamiltonian, s: float) -> SampledHamiltonian:
    """``H^s(t, x) = s H(s t, x)``, generating ``t -> phi_H^{s t}``."""
    return reparameterize(H, ReparamMap.linear(s, H.nt))


def check_reparam_bound(H: SampledHamiltonian, z1: ReparamMap, z2: ReparamMap) -> tuple:
    """Both sides of ``||H^z1 - H^z2|| <= 2 max(||H||_C0, L) ||z1 - z2||_ham``.

    ``L`` is the largest finite-difference slope of H in t, which is the exact
    Lipschitz constant of the time interpolant used by :func:`reparameterize`.
    """
    lhs = hofer_norm(reparameterize(H, z1) - reparameterize(H, z2))
    rhs = 2.0 * max(c0_norm(H), time_lipschitz(H)) * ham_norm(z1, z2)
    if lhs > rhs + BOUND_SLACK:
        raise ReparamBoundError(f"reparameterization bound violated: {lhs:.6g} > {rhs:.6g}")
    return lhs, rhs


def flat_samples(H: SampledHamiltonian, at_start: bool, count: int = 2) -> bool:
    """True when the first (or last) ``count`` slices vanish identically."""
    block = H.values[:count] if at_start else H.values[-count:]
    return bool(np.all(block == 0.0))


@dataclass(frozen=True)
class FlattenResult:
    hamiltonian: SampledHamiltonian
    zeta: ReparamMap
    eps: float
    distance: float


def flatten(H: SampledHamiltonian, eps_target: float, iterations: int = FLATTEN_ITERATIONS) -> FlattenResult:
    """Boundary-flat ``H' = H^zeta`` with the same time-1 map and ``||H - H'|| <= eps_target``.

    The plateau width is found by bisection.  Widths narrower than two time
    steps cannot be represented, so a target that needs them is refused.
    """
    if not eps_target > 0.0:
        raise HamtopoError("eps_target must be positive")
    dt = H.dt
    lo, hi = 2.0 * dt, 0.2
    if lo >= hi:
        raise FlattenError("refine time grid")

    def distance(eps):
        z = ReparamMap.plateau(eps, H.nt)
        return hofer_norm(H - reparameterize(H, z)), z

    goal = FLATTEN_MARGIN * eps_target
    d_lo, z_lo = distance(lo)
    if d_lo > goal:
        raise FlattenError(
            f"refine time grid: narrowest plateau ({lo:.3g}) still gives {d_lo:.3g} > {goal:.3g}"
        )
    best = (lo, d_lo, z_lo)
    d_hi, z_hi = distance(hi)
    if d_hi <= goal:
        best = (hi, d_hi, z_hi)
    else:
        for _ in range(iterations):
            mid = 0.5 * (lo + hi)
            d_mid, z_mid = distance(mid)
            if d_mid <= goal:
                lo, best = mid, (mid, d_mid, z_mid)
            else:
                hi = mid
    eps, dist, z = best
    return FlattenResult(reparameterize(H, z), z, eps, dist)


def plateau_oscillation(H: SampledHamiltonian, z: ReparamMap) -> float:
    """Largest oscillation of H over the sample times where ``zeta'`` vanishes."""
    from .hamiltonian import osc_series

    mask = z.dzeta == 0.0
    if not np.any(mask):
        return 0.0
    return float(np.max(osc_series(H)[mask]))


def linfty_gap(H: SampledHamiltonian, H_flat: SampledHamiltonian) -> float:
    """``||H - H'||_infty``; stays near the oscillation of H however small eps is."""
    return linfty_norm(H - H_flat)


def connect_concatenation(H0: SampledHamiltonian, K: SampledHamiltonian, s: float) -> SampledHamiltonian:
    """Run ``H0`` on [0, 1 - s) at speed ``1/(1 - s)``, then ``K`` on [1 - s, 1].

    The endpoint is ``phi_K^s o phi_H0^1``.  ``H0`` must vanish near both
    ends and ``K`` near t = 0, otherwise the pieces do not glue smoothly.
    """
    H0._check_compatible(K)
    if not 0.0 <= s <= 1.0:
        raise HamtopoError("s must lie in [0, 1]")
    if not (flat_samples(H0, True) and flat_samples(H0, False) and flat_samples(K, True)):
        raise FlatnessError("flatten inputs first")
    times = H0.times
    split = 1.0 - s
    values = np.empty_like(H0.values)
    for k, t in enumerate(times):
        if t < split:
            values[k] = _interp_slice(H0, t / split) / split
        else:
            values[k] = _interp_slice(K, t - split)
    func = Concatenated(H0.as_function(), K.as_function(), s)
    return SampledHamiltonian(H0.domain, values, H0.normalized and K.normalized, func)


def _interp_slice(H: SampledHamiltonian, t: float) -> np.ndarray:
    u = min(max(t, 0.0), 1.0) * (H.nt - 1)
    lo = min(int(np.floor(u)), H.nt - 2)
    w = u - lo
    return (1.0 - w) * H.values[lo] + w * H.values[lo + 1]


def write_zeta(path, z: ReparamMap) -> None:
    """Text lines ``t,zeta,dzeta`` with 17 significant digits."""
    with open(path, "w") as fh:
        for t, a, b in zip(z.times, z.zeta, z.dzeta):
            fh.write(f"{t:.17g},{a:.17g},{b:.17g}\n")


def read_zeta(path) -> ReparamMap:
    from .errors import ParseError

    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                rows.append([float(v) for v in line.split(",")])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
            if len(rows[-1]) != 3:
                raise ParseError(f"{path}:{lineno}: expected t,zeta,dzeta")
    if len(rows) < 2:
        raise ParseError(f"{path}: need at least two samples")
    data = np.array(rows)
    return ReparamMap(data[:, 1], data[:, 2])
