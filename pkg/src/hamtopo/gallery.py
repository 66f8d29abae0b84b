"""Reproducible generators for the explicit constructions.

* twist maps of the disc ``(r, theta) -> (r, theta + rho(r))`` with their
  radial Hamiltonians ``H(r) = int_r^1 s rho(s) ds`` and smoothing sequences
  for the singular profiles ``s^-1/2`` (convergent) and ``s^-2`` (divergent
  Hofer norm);
* the zero-transport-energy band shears on the torus;
* the shear, translation and seeded random families used across tests.

Profiles are piecewise sums of power laws so every Hamiltonian and norm has
a closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numba
import numpy as np

from .domain import Domain, GridMap
from .errors import HamtopoError, ProfileError, ResolutionError
from .flow import DEFAULT_STEPS, FlowPath, integrate_flow, translation_path
from .functions import HamiltonianFunction, LinearCombination, Reparameterized, TrigModes, ZeroHamiltonian
from .hamiltonian import SampledHamiltonian, normalize, sample
from .metrics import PathPair
from .reparam import smoothstep, smoothstep_integral, smoothstep_prime

PROFILE_KINDS = ("sqrt_inverse", "square_inverse", "custom")
DEFAULT_CUTOFF = 0.1
CORE_RADIUS = 0.05


# -- piecewise power laws ------------------------------------------------------


def _power_antiderivative(c, p, s):
    """Antiderivative of ``c s^p`` (log for p = -1)."""
    s = np.asarray(s, dtype=float)
    if p == -1.0:
        with np.errstate(divide="ignore"):
            return c * np.log(s)
    return c * s ** (p + 1.0) / (p + 1.0)


_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(48)


@dataclass(frozen=True)
class Piece:
    """``rho(s) = sum c s^p u^k`` on ``[lo, hi)`` with ``u = (s - origin) / width``.

    The local variable keeps the cutoff ramp and the mollifier blend well
    conditioned: their polynomial coefficients in ``u`` are O(1), whereas
    expanded in powers of ``s`` they grow like ``width^-5`` and cancel.
    """

    lo: float
    hi: float
    terms: tuple  # ((coef, power, k), ...)
    origin: float = 0.0
    width: float = 1.0

    @property
    def local(self) -> bool:
        return any(k != 0 for _, _, k in self.terms)

    def value(self, s):
        u = (s - self.origin) / self.width
        return sum(c * s**p * u**k for c, p, k in self.terms)

    def derivative(self, s):
        u = (s - self.origin) / self.width
        out = 0.0
        for c, p, k in self.terms:
            if p != 0.0:
                out = out + c * p * s ** (p - 1.0) * u**k
            if k != 0:
                out = out + c * k * s**p * u ** (k - 1) / self.width
        return out

    def moment_integral(self, a, b):
        """``int_a^b s rho(s) ds`` for a, b inside the piece.

        Pure power laws integrate in closed form; pieces in the local
        variable use 48-point Gauss-Legendre, exact for the polynomial blend
        and converged to rounding on the ramp, which stays away from s = 0.
        """
        lo = np.asarray(a, dtype=float)
        hi = np.asarray(b, dtype=float)
        nonempty = hi > lo
        if self.local:
            half = np.where(nonempty, 0.5 * (hi - lo), 0.0)
            mid = 0.5 * (hi + lo)
            s = mid[..., None] + half[..., None] * _GAUSS_X
            return half * np.sum(_GAUSS_W * s * self.value(s), axis=-1)
        out = np.zeros(np.broadcast(lo, hi).shape)
        safe_lo = np.where(nonempty, lo, 1.0)
        safe_hi = np.where(nonempty, hi, 1.0)
        for c, p, _ in self.terms:
            if c == 0.0:
                continue
            out = out + np.where(nonempty, _power_antiderivative(c, p + 1.0, safe_hi) - _power_antiderivative(c, p + 1.0, safe_lo), 0.0)
        return out


def _poly_terms(coefs, power: float = 0.0, scale: float = 1.0):
    """Coefficients of a polynomial in ``u`` -> ((coef, power, k), ...)."""
    return tuple((scale * float(c), float(power), k) for k, c in enumerate(coefs) if c != 0.0)


def _plain(terms):
    return tuple((c, p, 0) for c, p in terms)


@dataclass(frozen=True)
class RotationProfile:
    """Rotation angle ``rho(s)`` of a twist map, as a sum of power laws.

    ``terms`` lists ``(coef, power)`` for the custom kind; the named kinds
    fill it in.  The cutoff ``chi = 1 - S((s - (1 - 2 eps)) / eps)`` (S the
    quintic smoothstep) makes ``rho`` vanish on ``[1 - eps, 1]``.  With
    ``mollify_n`` set, ``rho_n = rho(1/n)`` on ``[0, 1/n]`` joined to ``rho``
    at ``2/n`` by the cubic Hermite segment matching value and slope at both
    ends, which keeps ``rho_n`` monotone and C^1.
    """

    kind: str = "sqrt_inverse"
    cutoff_eps: float = DEFAULT_CUTOFF
    mollify_n: Optional[int] = None
    terms: tuple = ()
    pieces: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise ProfileError(f"unknown profile kind {self.kind!r}")
        if not 0.0 < self.cutoff_eps < 0.5:
            raise ProfileError("cutoff_eps must lie in (0, 0.5)")
        terms = {"sqrt_inverse": ((1.0, -0.5),), "square_inverse": ((1.0, -2.0),)}.get(self.kind, tuple(self.terms))
        terms = tuple((float(c), float(p)) for c, p in terms)
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "pieces", self._build_pieces())
        self._check_monotone()

    @property
    def singular(self) -> bool:
        return any(p < 0.0 and c != 0.0 for c, p in self.terms)

    def mollified(self, n: int) -> "RotationProfile":
        return replace(self, mollify_n=int(n))

    def ideal(self) -> "RotationProfile":
        return replace(self, mollify_n=None)

    def _build_pieces(self):
        eps = self.cutoff_eps
        s0 = 1.0 - 2.0 * eps
        # chi = 1 - S(u) with u = (s - s0) / eps and S = 10u^3 - 15u^4 + 6u^5
        chi = (1.0, 0.0, 0.0, -10.0, 15.0, -6.0)
        ramp_terms = tuple(t for c, p in self.terms for t in _poly_terms(chi, p, c))
        ramp = Piece(s0, 1.0 - eps, ramp_terms, s0, eps)
        outer = [Piece(1.0 - eps, 1.0, ())]
        n = self.mollify_n
        if n is None:
            return (Piece(0.0, s0, _plain(self.terms)), ramp, *outer)
        a, b = 1.0 / n, 2.0 / n
        if b > s0:
            raise ProfileError(f"mollify_n = {n} too small: blend [1/n, 2/n] must end before the cutoff")
        bulk = Piece(b, s0, _plain(self.terms))
        va, vb, mb = bulk.value(a), bulk.value(b), bulk.derivative(b)
        # cubic Hermite in u = (s - a)/h: value va slope 0 at a, value vb slope mb at b
        h = b - a
        h00 = np.array([1.0, 0.0, -3.0, 2.0])
        h01 = np.array([0.0, 0.0, 3.0, -2.0])
        h11 = np.array([0.0, 0.0, -1.0, 1.0])
        blend = va * h00 + vb * h01 + h * mb * h11
        return (Piece(0.0, a, ((va, 0.0, 0),)), Piece(a, b, _poly_terms(blend), a, h), bulk, ramp, *outer)

    def _check_monotone(self):
        s = np.linspace(1e-3, 1.0, 4001)
        if np.any(self.rho(s) < -1e-12):
            raise ProfileError("rho must be nonnegative")
        if np.any(self.rho_prime(s) > 1e-9 * np.maximum(1.0, np.abs(self.rho(s)))):
            raise ProfileError("rho must be nonincreasing")

    @property
    def _tables(self):
        """Pieces flattened to arrays for the compiled kernels."""
        cached = self.__dict__.get("_tables_cache")
        if cached is None:
            lo = np.array([p.lo for p in self.pieces])
            hi = np.array([p.hi for p in self.pieces])
            origin = np.array([p.origin for p in self.pieces])
            width = np.array([p.width for p in self.pieces])
            start = np.cumsum([0] + [len(p.terms) for p in self.pieces]).astype(np.int64)
            flat = [t for p in self.pieces for t in p.terms] or [(0.0, 0.0, 0)]
            coef = np.array([c for c, _, _ in flat], dtype=float)
            power = np.array([q for _, q, _ in flat], dtype=float)
            kpow = np.array([k for _, _, k in flat], dtype=np.int64)
            cached = (lo, hi, origin, width, start, coef, power, kpow, self.mollify_n is not None)
            object.__setattr__(self, "_tables_cache", cached)
        return cached

    def rho_and_prime(self, s):
        s = np.asarray(s, dtype=float)
        flat = np.ascontiguousarray(s).ravel()
        rho = np.empty(flat.shape)
        drho = np.empty(flat.shape)
        _profile_kernel(flat, *self._tables, rho, drho)
        return rho.reshape(s.shape), drho.reshape(s.shape)

    def rho(self, s):
        return self.rho_and_prime(s)[0]

    def rho_prime(self, s):
        return self.rho_and_prime(s)[1]

    def hamiltonian_values(self, r):
        """``H(r) = int_r^1 s rho(s) ds``."""
        if self.divergent and np.any(np.asarray(r) <= 0.0):
            raise ProfileError("profile singular at 0; set mollify_n")
        r = np.asarray(r, dtype=float)
        out = np.zeros(r.shape)
        tails = self._tails
        for piece, tail in zip(self.pieces, tails):
            inside = (r >= piece.lo) & (r < piece.hi)
            if np.any(inside):
                part = piece.moment_integral(r[inside], piece.hi) if piece.terms else 0.0
                out[inside] = tail + part
        return out

    @property
    def _tails(self):
        """``int_{hi}^1 s rho(s) ds`` at the upper end of every piece."""
        cached = self.__dict__.get("_tails_cache")
        if cached is None:
            whole = [float(p.moment_integral(p.lo, p.hi)) if p.terms else 0.0 for p in self.pieces]
            cached = [float(sum(whole[i + 1 :])) for i in range(len(whole))]
            object.__setattr__(self, "_tails_cache", cached)
        return cached

    @property
    def divergent(self) -> bool:
        """``int_0 s rho(s) ds`` diverges (no mollification, a power <= -2)."""
        return self.mollify_n is None and any(p <= -2.0 and c != 0.0 for c, p in self.terms)

    def norm(self) -> float:
        """``int_0^1 s rho(s) ds``: osc H, hence the Hofer length of the twist path."""
        if self.divergent:
            return float("inf")
        return float(self.hamiltonian_values(np.array(0.0)))


@numba.njit(cache=True, inline="always")
def _pow(v, q):
    """``v**q``, through sqrt and integer powers for the (half-)integer exponents profiles use."""
    n2 = 2.0 * q
    if n2 == np.floor(n2) and abs(n2) < 64.0:
        k = int(n2)
        if k % 2 == 0:
            return v ** (k // 2)
        return np.sqrt(v) ** k
    return v**q


@numba.njit(cache=True)
def _profile_kernel(s, lo, hi, origin, width, start, coef, power, kpow, include_zero, rho, drho):
    for k in range(s.size):
        v = s[k]
        rho[k] = 0.0
        drho[k] = 0.0
        if v == 0.0 and not include_zero:
            continue
        for p in range(lo.size):
            if lo[p] <= v < hi[p]:
                u = (v - origin[p]) / width[p]
                for m in range(start[p], start[p + 1]):
                    c = coef[m]
                    q = power[m]
                    j = kpow[m]
                    vq = _pow(v, q)
                    rho[k] += c * vq * u**j
                    if q != 0.0:
                        drho[k] += c * q * _pow(v, q - 1.0) * u**j
                    if j != 0:
                        drho[k] += c * j * vq * u ** (j - 1) / width[p]
                break


def smooth_profile(cutoff_eps: float = DEFAULT_CUTOFF) -> RotationProfile:
    """``rho(s) = 1 - s^2 / 2`` with the cutoff: smooth at the centre, nonconstant."""
    return RotationProfile("custom", cutoff_eps, None, ((1.0, 0.0), (-0.5, 2.0)))


def constant_profile(c: float, cutoff_eps: float = DEFAULT_CUTOFF) -> RotationProfile:
    return RotationProfile("custom", cutoff_eps, None, ((float(c), 0.0),) if c else ())


@numba.njit(cache=True, inline="always")
def _radial_point(x, y, lo, hi, origin, width, start, coef, power, kpow, include_zero, scale):
    """Gradient and Hessian of ``scale * h(r)`` at one point."""
    r = np.hypot(x, y)
    rho = 0.0
    drho = 0.0
    if r > 0.0 or include_zero:
        for p in range(lo.size):
            if lo[p] <= r < hi[p]:
                u = (r - origin[p]) / width[p]
                for m in range(start[p], start[p + 1]):
                    q = power[m]
                    j = kpow[m]
                    rq = coef[m] * _pow(r, q)
                    if j == 0:
                        rho += rq
                        if q != 0.0:
                            drho += q * rq / r
                    else:
                        uj = u ** (j - 1)
                        rho += rq * uj * u
                        if q != 0.0:
                            drho += q * rq * uj * u / r
                        drho += j * rq * uj / width[p]
                break
    rho *= scale
    q = drho * scale / r if r > 0.0 else 0.0
    return -rho * x, -rho * y, -rho - q * x * x, -q * x * y, -rho - q * y * y


@numba.njit(cache=True, inline="always")
def _radial_rhs(x, y, a, b, c, d, lo, hi, origin, width, start, coef, power, kpow, include_zero, scale):
    hx, hy, hxx, hxy, hyy = _radial_point(x, y, lo, hi, origin, width, start, coef, power, kpow, include_zero, scale)
    # X_H = (H_y, -H_x) and d/dt J = DX J
    return (hy, -hx, hxy * a + hyy * c, hxy * b + hyy * d, -hxx * a - hxy * c, -hxx * b - hxy * d)


@numba.njit(cache=True)
def _radial_rk4(x0, y0, nt, m, h0, levels, lo, hi, origin, width, start, coef, power, kpow, include_zero, scale, out_x, out_y, det):
    """RK4 with the variational equation, ``m * 2**level`` steps per output interval."""
    max_step = 0.0
    for i in range(x0.size):
        sub = m * 2 ** levels[i]
        h = h0 / 2 ** levels[i]
        s = (x0[i], y0[i], 1.0, 0.0, 0.0, 1.0)
        out_x[0, i] = s[0]
        out_y[0, i] = s[1]
        det[0, i] = 1.0
        for k in range(nt - 1):
            for _ in range(sub):
                k1 = _radial_rhs(s[0], s[1], s[2], s[3], s[4], s[5], lo, hi, origin, width, start, coef, power, kpow, include_zero, scale)
                k2 = _radial_rhs(
                    s[0] + 0.5 * h * k1[0], s[1] + 0.5 * h * k1[1], s[2] + 0.5 * h * k1[2],
                    s[3] + 0.5 * h * k1[3], s[4] + 0.5 * h * k1[4], s[5] + 0.5 * h * k1[5], lo, hi, origin, width, start, coef, power, kpow, include_zero, scale,
                )
                k3 = _radial_rhs(
                    s[0] + 0.5 * h * k2[0], s[1] + 0.5 * h * k2[1], s[2] + 0.5 * h * k2[2],
                    s[3] + 0.5 * h * k2[3], s[4] + 0.5 * h * k2[4], s[5] + 0.5 * h * k2[5], lo, hi, origin, width, start, coef, power, kpow, include_zero, scale,
                )
                k4 = _radial_rhs(
                    s[0] + h * k3[0], s[1] + h * k3[1], s[2] + h * k3[2],
                    s[3] + h * k3[3], s[4] + h * k3[4], s[5] + h * k3[5], lo, hi, origin, width, start, coef, power, kpow, include_zero, scale,
                )
                dx = h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
                dy = h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
                max_step = max(max_step, abs(dx), abs(dy))
                s = (
                    s[0] + dx,
                    s[1] + dy,
                    s[2] + h / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
                    s[3] + h / 6.0 * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3]),
                    s[4] + h / 6.0 * (k1[4] + 2.0 * k2[4] + 2.0 * k3[4] + k4[4]),
                    s[5] + h / 6.0 * (k1[5] + 2.0 * k2[5] + 2.0 * k3[5] + k4[5]),
                )
            out_x[k + 1, i] = s[0]
            out_y[k + 1, i] = s[1]
            det[k + 1, i] = s[2] * s[5] - s[3] * s[4]
    return max_step


class RadialHamiltonian(HamiltonianFunction):
    """Autonomous ``H(x, y) = scale * h(r)`` with ``h' = -r rho(r)``; rotates circles by ``scale * rho``.

    Flows are integrated in compiled code (:meth:`compiled_flow`), the
    same RK4 scheme as the generic integrator.
    """

    autonomous = True

    def __init__(self, profile: RotationProfile, scale: float = 1.0):
        if profile.singular and profile.mollify_n is None:
            raise ProfileError("profile singular at 0; set mollify_n")
        self.profile = profile
        self.scale = float(scale)

    def scaled(self, c: float) -> "RadialHamiltonian":
        return RadialHamiltonian(self.profile, self.scale * c)

    def value(self, t, x, y):
        return self.scale * self.profile.hamiltonian_values(np.hypot(x, y))

    def gradient(self, t, x, y):
        rho = self.scale * self.profile.rho(np.hypot(x, y))
        return -rho * x, -rho * y

    def hessian(self, t, x, y):
        return self.derivatives(t, x, y)[2:]

    def derivatives(self, t, x, y, hessian=True):
        r = np.hypot(x, y)
        rho, drho = self.profile.rho_and_prime(r)
        rho = self.scale * rho
        out = (-rho * x, -rho * y)
        if not hessian:
            return out
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(r > 0.0, self.scale * drho / r, 0.0)
        return out + (-rho - q * x * x, -q * x * y, -rho - q * y * y)

    def compiled_flow(self, x0, y0, nt: int, m: int, h: float, levels, jacobian: bool):
        levels = np.ascontiguousarray(np.broadcast_to(levels, np.shape(x0)), dtype=np.int64).ravel()
        x0 = np.ascontiguousarray(x0, dtype=float).ravel()
        y0 = np.ascontiguousarray(y0, dtype=float).ravel()
        out_x = np.empty((nt, x0.size))
        out_y = np.empty((nt, x0.size))
        det = np.empty((nt, x0.size))
        step = _radial_rk4(x0, y0, nt, m, h, levels, *self.profile._tables, self.scale, out_x, out_y, det)
        return out_x, out_y, (det if jacobian else None), step


def rotation_hamiltonian(profile: RotationProfile, domain: Domain, nt: int = 200) -> SampledHamiltonian:
    """Autonomous radial Hamiltonian of a (mollified) profile on the disc."""
    if domain.is_torus:
        raise HamtopoError("twist maps live on the disc")
    return sample(RadialHamiltonian(profile), domain, nt, normalized=False)


def _rotate(x, y, angle):
    c, s = np.cos(angle), np.sin(angle)
    return c * x - s * y, s * x + c * y


def twist_jacobian(profile: RotationProfile, x, y, scale: float = 1.0):
    """``det D phi`` of the twist by ``scale * rho`` from its closed-form derivative."""
    r = np.hypot(x, y)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(r > 0.0, scale * profile.rho_prime(r) / r, 0.0)
    angle = scale * profile.rho(r)
    c, s = np.cos(angle), np.sin(angle)
    # D phi = R + (R J p) (q p)^T with p = (x, y), J = rotation by +90 degrees
    jx, jy = c * -y - s * x, s * -y + c * x
    a11 = c + jx * q * x
    a12 = -s + jx * q * y
    a21 = s + jy * q * x
    a22 = c + jy * q * y
    return a11 * a22 - a12 * a21


def rotation_map(profile: RotationProfile, domain: Domain, scale: float = 1.0) -> GridMap:
    """Closed-form twist ``(r, theta) -> (r, theta + scale rho(r))`` with its inverse."""
    gx, gy = domain.coords
    angle = np.where(domain.active, scale * profile.rho(np.hypot(gx, gy)), 0.0)
    fx, fy = _rotate(gx, gy, angle)
    bx, by = _rotate(gx, gy, -angle)
    det = np.where(domain.active, twist_jacobian(profile, gx, gy, scale), 1.0)
    inv = GridMap(domain, bx, by, None)
    return GridMap(domain, fx, fy, det, inv)


def rotation_path(profile: RotationProfile, domain: Domain, nt: int = 200) -> FlowPath:
    """The closed-form isotopy ``t -> phi_{t rho}``."""
    gx, gy = domain.coords
    times = np.linspace(0.0, 1.0, nt)
    angle = np.where(domain.active, profile.rho(np.hypot(gx, gy)), 0.0)
    tt = times[:, None, None]
    fx, fy = _rotate(gx, gy, tt * angle)
    bx, by = _rotate(gx, gy, -tt * angle)
    fx[0], fy[0], bx[0], by[0] = gx, gy, gx, gy
    return FlowPath(domain, times, fx, fy, bx, by, None)


def difference_quotients(profile: RotationProfile, radii, delta: float = 1e-3) -> np.ndarray:
    """``|phi(p) - phi(q)| / |p - q|`` for radially adjacent points near each radius.

    Grows without bound as the radius shrinks for the singular profiles: the
    limit twist map is continuous at the centre but not Lipschitz there.
    """
    radii = np.asarray(radii, dtype=float)
    out = np.empty(radii.shape)
    for k, r in enumerate(radii):
        r2 = r * (1.0 + delta)
        p = np.array(_rotate(r, 0.0, profile.rho(np.array(r))))
        q = np.array(_rotate(r2, 0.0, profile.rho(np.array(r2))))
        out[k] = float(np.hypot(*(p - q)) / (r2 - r))
    return out


def example42_sequence(
    profile: RotationProfile,
    n_list,
    domain: Domain,
    nt: int = 200,
    steps: int = DEFAULT_STEPS,
    audit_tol: Optional[float] = 1e-6,
) -> list:
    """Mollified twist Hamiltonians ``H_{rho_n}`` and their integrated paths."""
    if profile.kind not in ("sqrt_inverse", "square_inverse"):
        raise ProfileError("the smoothing sequence uses the sqrt_inverse or square_inverse profile")
    out = []
    for n in n_list:
        H = rotation_hamiltonian(profile.mollified(n), domain, nt)
        path = integrate_flow(H, steps)
        out.append(PathPair(path, H, steps, audit_tol, CORE_RADIUS, label=f"n={n}"))
    return out


# -- zero transport energy -----------------------------------------------------


class BandShear(HamiltonianFunction):
    """``H = g(coordinate)`` moving a band of width ~1/n by ``shift`` along the other axis.

    ``g' = shift (b - m) / (1 - m)`` with ``b`` a smooth band (1 on a core of
    width ``core``, quintic ramps of width ``ramp``) around ``centre`` and
    ``m`` its mean, so ``g`` is periodic and points in the core move by
    exactly ``shift`` while ``osc g`` is about ``shift * m``.
    ``axis = "x"`` moves points along x (H depends on y).
    """

    autonomous = True

    def __init__(self, centre: float, shift: float, core: float, ramp: float, axis: str = "x"):
        if axis not in ("x", "y"):
            raise HamtopoError("axis must be 'x' or 'y'")
        if core <= 0.0 or ramp <= 0.0 or core + 2.0 * ramp >= 1.0:
            raise HamtopoError("band must fit in the unit period")
        self.centre, self.shift, self.core, self.ramp, self.axis = centre, shift, core, ramp, axis
        self.mass = core + ramp
        self.scale = shift / (1.0 - self.mass)

    def _offset(self, z):
        return (z - self.centre + 0.5) % 1.0 - 0.5

    def _band(self, u):
        a = np.abs(u)
        return 1.0 - smoothstep((a - 0.5 * self.core) / self.ramp)

    def _band_prime(self, u):
        a = np.abs(u)
        return -np.sign(u) * smoothstep_prime((a - 0.5 * self.core) / self.ramp) / self.ramp

    def _band_integral(self, u):
        # int_0^u b for u in [-1/2, 1/2]
        a = np.abs(u)
        half = 0.5 * self.core
        v = (a - half) / self.ramp
        inner = np.minimum(a, half) + self.ramp * np.where(v > 0.0, np.minimum(v, 1.0) - smoothstep_integral(np.minimum(v, 1.0)), 0.0)
        return np.sign(u) * inner

    def _g(self, z):
        u = self._offset(z)
        return self.scale * (self._band_integral(u) - self.mass * u)

    def _gp(self, z):
        return self.scale * (self._band(self._offset(z)) - self.mass)

    def _gpp(self, z):
        return self.scale * self._band_prime(self._offset(z))

    def value(self, t, x, y):
        return self._g(y if self.axis == "x" else x)

    def gradient(self, t, x, y):
        zero = np.zeros(np.broadcast(x, y).shape)
        if self.axis == "x":
            return zero, self._gp(y) + zero
        return self._gp(x) + zero, zero

    def hessian(self, t, x, y):
        zero = np.zeros(np.broadcast(x, y).shape)
        if self.axis == "x":
            return zero, zero.copy(), self._gpp(y) + zero
        return self._gpp(x) + zero, zero.copy(), zero.copy()

    def vector_field(self, t, x, y):
        hx, hy = self.gradient(t, x, y)
        return hy, -hx


def transport_hamiltonian(x0, y0, n: int, domain: Domain, displacement=None) -> HamiltonianFunction:
    """Hamiltonian whose time-1 map sends ``x0`` to ``y0`` with Hofer norm O(1/n).

    ``displacement`` is the lifted move (defaults to the shortest one); a
    full loop is ``(1, 0)`` with ``x0 == y0``.  Pairs differing in both
    coordinates use an x-move followed by a y-move at double speed.
    """
    if not domain.is_torus:
        raise HamtopoError("transport sequences live on the torus")
    x0 = np.asarray(x0, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    if displacement is None:
        displacement = (y0 - x0 + 0.5) % 1.0 - 0.5
    dx, dy = (float(v) for v in displacement)
    core, ramp = 1.0 / n, 0.5 / n
    if ramp < 2.0 * max(domain.hx, domain.hy):
        raise ResolutionError(f"band ramp 1/(2n) = {ramp:.3g} is below two grid cells; use a finer grid")
    moves = []
    if dx != 0.0:
        moves.append(BandShear(float(x0[1]), dx, core, ramp, "x"))
    if dy != 0.0:
        # X_H = (H_y, -H_x): a band in x moves points by -g'(x) along y
        moves.append(BandShear(float(x0[0] + dx), -dy, core, ramp, "y"))
    if not moves:
        return ZeroHamiltonian()
    if len(moves) == 1:
        return moves[0]
    # smooth-in-time halves so sampled and interpolated paths stay accurate
    first = Reparameterized(moves[0], lambda t: smoothstep(2.0 * t), lambda t: 2.0 * smoothstep_prime(2.0 * t))
    second = Reparameterized(moves[1], lambda t: smoothstep(2.0 * t - 1.0), lambda t: 2.0 * smoothstep_prime(2.0 * t - 1.0))
    return LinearCombination([(1.0, first), (1.0, second)])


def transport_sequence(x0, y0, n_list, domain: Domain, nt: int = 200, steps: int = DEFAULT_STEPS, displacement=None) -> list:
    out = []
    for n in n_list:
        fn = transport_hamiltonian(x0, y0, n, domain, displacement)
        H = sample(fn, domain, nt)
        if not H.normalized:
            H = normalize(H)
        path = integrate_flow(H, steps)
        out.append(PathPair(path, H, steps, label=f"n={n}"))
    return out


# -- smooth torus families -----------------------------------------------------


def shear_function() -> TrigModes:
    """``sin(2 pi y) / (2 pi)``; its flow is ``(x + t cos(2 pi y), y)``."""
    return TrigModes([[0, 1]], 1.0 / (2.0 * np.pi), phase=-0.5 * np.pi)


def shear_hamiltonian(domain: Domain, nt: int = 200) -> SampledHamiltonian:
    return sample(shear_function(), domain, nt)


def shear_exact(x, y, t):
    return x + t * np.cos(2.0 * np.pi * y), y


RANDOM_MODES = ((1, 0), (0, 1), (1, 1), (1, -1))


def random_function(seed: int, amplitude: float = 0.01, time_dependent: bool = True) -> TrigModes:
    """Seeded smooth normalized Hamiltonian on the torus, low modes only."""
    rng = np.random.default_rng(seed)
    m = len(RANDOM_MODES)
    a0 = rng.normal(0.0, amplitude, m)
    a1 = rng.normal(0.0, amplitude, m) if time_dependent else None
    phase = rng.uniform(0.0, 2.0 * np.pi, m)
    return TrigModes(RANDOM_MODES, a0, a1, phase)


def random_hamiltonian(seed: int, domain: Domain, nt: int = 200, amplitude: float = 0.01, time_dependent: bool = True) -> SampledHamiltonian:
    return sample(random_function(seed, amplitude, time_dependent), domain, nt)


def translation(domain: Domain, a: float = 0.3, b: float = 0.7, nt: int = 200) -> FlowPath:
    """Symplectic, non-Hamiltonian isotopy with rotation vector ``(a, b)``."""
    return translation_path(domain, a, b, nt)


GALLERY_ITEMS = ("example42-sqrt", "example42-div", "transport", "shear", "translation")
