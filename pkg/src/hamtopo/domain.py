"""Model surfaces, sample grids, quadrature and C0 distances.

Two surfaces are supported:

* ``torus2`` -- the flat torus [0,1)^2 with area form dx^dy and total measure 1.
  Grid nodes sit at ``(i/nx, j/ny)``.
* ``disc2`` -- the closed unit disc with area form dx^dy (total measure pi),
  sampled on cell centres of a Cartesian grid covering [-1,1)^2.  Nodes with
  x^2 + y^2 > 1 are inactive and never enter a reduction.

Arrays over a grid are indexed ``[i, j]`` with ``i`` along x.  Both grids are
periodic in index space (the disc square because every field we sample on it
vanishes near the square's edge), which lets spectral derivatives and
periodic cubic splines serve both surfaces.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numba
import numpy as np
from scipy import fft as sfft
from scipy import ndimage

from .errors import DomainMismatchError, HamtopoError, InverseUnavailableError, NonFiniteFieldError

TORUS = "torus2"
DISC = "disc2"
KINDS = (TORUS, DISC)

MIN_RESOLUTION = 8
MAX_RESOLUTION = 4096


@dataclass(frozen=True)
class Domain:
    kind: str = TORUS
    grid_nx: int = 128
    grid_ny: int = 128
    support_margin: float = 0.05

    def __post_init__(self):
        if self.kind not in KINDS:
            raise HamtopoError(f"unknown domain kind {self.kind!r}")
        for n in (self.grid_nx, self.grid_ny):
            if not MIN_RESOLUTION <= n <= MAX_RESOLUTION:
                raise HamtopoError(f"grid resolution must lie in [{MIN_RESOLUTION}, {MAX_RESOLUTION}]")
        if not 0.0 <= self.support_margin < 1.0:
            raise HamtopoError("support_margin must lie in [0, 1)")

    @classmethod
    def torus(cls, n: int = 128, ny: Optional[int] = None) -> "Domain":
        return cls(TORUS, n, n if ny is None else ny)

    @classmethod
    def disc(cls, n: int = 128, ny: Optional[int] = None, support_margin: float = 0.05) -> "Domain":
        return cls(DISC, n, n if ny is None else ny, support_margin)

    @property
    def is_torus(self) -> bool:
        return self.kind == TORUS

    @property
    def shape(self) -> tuple:
        return (self.grid_nx, self.grid_ny)

    @property
    def period(self) -> float:
        return 1.0 if self.is_torus else 2.0

    @property
    def hx(self) -> float:
        return self.period / self.grid_nx

    @property
    def hy(self) -> float:
        return self.period / self.grid_ny

    @property
    def origin(self) -> tuple:
        if self.is_torus:
            return (0.0, 0.0)
        return (-1.0 + 0.5 * self.hx, -1.0 + 0.5 * self.hy)

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    @property
    def total_measure(self) -> float:
        return 1.0 if self.is_torus else float(np.pi)

    @cached_property
    def coords(self) -> tuple:
        x0, y0 = self.origin
        xs = x0 + self.hx * np.arange(self.grid_nx)
        ys = y0 + self.hy * np.arange(self.grid_ny)
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        gx.setflags(write=False)
        gy.setflags(write=False)
        return gx, gy

    @cached_property
    def radius(self) -> np.ndarray:
        gx, gy = self.coords
        r = np.hypot(gx, gy)
        r.setflags(write=False)
        return r

    @cached_property
    def active(self) -> np.ndarray:
        if self.is_torus:
            mask = np.ones(self.shape, dtype=bool)
        else:
            mask = self.radius <= 1.0
        mask.setflags(write=False)
        return mask

    @cached_property
    def outside_support(self) -> np.ndarray:
        """Nodes where disc fields must vanish (empty on the torus)."""
        if self.is_torus:
            mask = np.zeros(self.shape, dtype=bool)
        else:
            mask = self.radius > 1.0 - self.support_margin
        mask.setflags(write=False)
        return mask

    def region_mask(self, exclude_radius: float = 0.0) -> np.ndarray:
        """Active nodes, optionally without the core ``r < exclude_radius`` (disc only)."""
        if exclude_radius <= 0.0 or self.is_torus:
            return self.active
        return self.active & (self.radius >= exclude_radius)

    def displacement(self, dx, dy):
        """Distance for coordinate differences: flat quotient metric or Euclidean."""
        dx = np.asarray(dx, dtype=float)
        dy = np.asarray(dy, dtype=float)
        if self.is_torus:
            dx = np.abs(dx - np.round(dx))
            dy = np.abs(dy - np.round(dy))
        return np.hypot(dx, dy)

    def to_index(self, x, y):
        x0, y0 = self.origin
        return (np.asarray(x) - x0) / self.hx, (np.asarray(y) - y0) / self.hy

    def check_same(self, other: "Domain") -> None:
        if self != other:
            raise DomainMismatchError(f"domain mismatch: {self} vs {other}")

    # -- reductions -------------------------------------------------------

    def sum_active(self, values: np.ndarray) -> float:
        """Deterministic sum over active nodes of the trailing (nx, ny) axes."""
        values = np.asarray(values, dtype=float)
        if self.is_torus:
            return np.sum(values, axis=(-2, -1))
        return np.sum(np.where(self.active, values, 0.0), axis=(-2, -1))

    def integrate_values(self, values: np.ndarray):
        return self.sum_active(values) * self.cell_area

    def mean_values(self, values: np.ndarray):
        return self.integrate_values(values) / self.total_measure

    def max_active(self, values: np.ndarray, mask: Optional[np.ndarray] = None):
        mask = self.active if mask is None else mask
        return np.max(np.where(mask, values, -np.inf), axis=(-2, -1))

    def min_active(self, values: np.ndarray, mask: Optional[np.ndarray] = None):
        mask = self.active if mask is None else mask
        return np.min(np.where(mask, values, np.inf), axis=(-2, -1))


@dataclass(frozen=True, eq=False)
class ScalarField:
    domain: Domain
    values: np.ndarray

    def __post_init__(self):
        if np.shape(self.values) != self.domain.shape:
            raise DomainMismatchError("field shape does not match domain grid")


def integrate(f: ScalarField) -> float:
    """Quadrature of ``f`` against the Liouville measure.

    Uniform Riemann sum on the torus (exact for trigonometric polynomials
    below the Nyquist index); cell sum over active cells on the disc.
    """
    values = np.asarray(f.values, dtype=float)
    if not np.all(np.isfinite(values[f.domain.active])):
        raise NonFiniteFieldError("non-finite field")
    return float(f.domain.integrate_values(values))


# -- maps ----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GridMap:
    """Images of the grid nodes under a map.

    Torus images are unwrapped reals; their fractional parts are the points.
    """

    domain: Domain
    image_x: np.ndarray
    image_y: np.ndarray
    jacobian_det: Optional[np.ndarray] = None
    inverse: Optional["GridMap"] = field(default=None, repr=False)

    def __post_init__(self):
        if np.shape(self.image_x) != self.domain.shape or np.shape(self.image_y) != self.domain.shape:
            raise DomainMismatchError("map images do not match domain grid")

    @property
    def displacement(self) -> tuple:
        gx, gy = self.domain.coords
        return self.image_x - gx, self.image_y - gy

    def with_inverse(self, inverse: "GridMap") -> "GridMap":
        return GridMap(self.domain, self.image_x, self.image_y, self.jacobian_det, inverse)

    def require_inverse(self) -> "GridMap":
        if self.inverse is None:
            raise InverseUnavailableError("inverse not available")
        return self.inverse


def identity_map(domain: Domain) -> GridMap:
    gx, gy = domain.coords
    ident = GridMap(domain, gx.copy(), gy.copy(), np.ones(domain.shape))
    return ident.with_inverse(GridMap(domain, gx.copy(), gy.copy(), np.ones(domain.shape)))


def translation_map(domain: Domain, a: float, b: float) -> GridMap:
    if not domain.is_torus:
        raise HamtopoError("translations are only defined on the torus")
    gx, gy = domain.coords
    inv = GridMap(domain, gx - a, gy - b, np.ones(domain.shape))
    return GridMap(domain, gx + a, gy + b, np.ones(domain.shape), inv)


def c0_distance_maps(phi: GridMap, psi: GridMap, exclude_radius: float = 0.0) -> float:
    """max over active nodes of d(phi(x), psi(x))."""
    phi.domain.check_same(psi.domain)
    dom = phi.domain
    dist = dom.displacement(phi.image_x - psi.image_x, phi.image_y - psi.image_y)
    return float(dom.max_active(dist, dom.region_mask(exclude_radius)))


def dbar_maps(phi: GridMap, psi: GridMap, exclude_radius: float = 0.0) -> float:
    """max of the C0 distances of the maps and of their inverses."""
    forward = c0_distance_maps(phi, psi, exclude_radius)
    backward = c0_distance_maps(phi.require_inverse(), psi.require_inverse(), exclude_radius)
    return max(forward, backward)


# -- spectral calculus and interpolation --------------------------------------


def _wavenumbers(domain: Domain):
    kx = 2.0 * np.pi * sfft.fftfreq(domain.grid_nx, d=domain.hx)
    ky = 2.0 * np.pi * sfft.rfftfreq(domain.grid_ny, d=domain.hy)
    return kx[:, None], ky[None, :]


def _odd_mask(domain: Domain):
    # the Nyquist mode has no well-defined odd derivative on an even grid
    kx, ky = _wavenumbers(domain)
    mx = np.ones_like(kx)
    my = np.ones_like(ky)
    if domain.grid_nx % 2 == 0:
        mx[domain.grid_nx // 2, 0] = 0.0
    if domain.grid_ny % 2 == 0:
        my[0, -1] = 0.0
    return mx, my


def spectral_gradient(domain: Domain, values: np.ndarray) -> tuple:
    """(d/dx, d/dy) of periodic samples over the trailing two axes."""
    kx, ky = _wavenumbers(domain)
    mx, my = _odd_mask(domain)
    spectrum = sfft.rfft2(values, axes=(-2, -1))
    shape = values.shape[-2:]
    dx = sfft.irfft2(1j * kx * mx * spectrum, s=shape, axes=(-2, -1))
    dy = sfft.irfft2(1j * ky * my * spectrum, s=shape, axes=(-2, -1))
    return dx, dy


def spectral_hessian(domain: Domain, values: np.ndarray) -> tuple:
    kx, ky = _wavenumbers(domain)
    mx, my = _odd_mask(domain)
    spectrum = sfft.rfft2(values, axes=(-2, -1))
    shape = values.shape[-2:]
    hxx = sfft.irfft2(-(kx**2) * spectrum, s=shape, axes=(-2, -1))
    hxy = sfft.irfft2(-(kx * mx) * (ky * my) * spectrum, s=shape, axes=(-2, -1))
    hyy = sfft.irfft2(-(ky**2) * spectrum, s=shape, axes=(-2, -1))
    return hxx, hxy, hyy


def centered_gradient(domain: Domain, values: np.ndarray) -> tuple:
    """Second-order centred differences with periodic wrap."""
    dx = (np.roll(values, -1, axis=-2) - np.roll(values, 1, axis=-2)) / (2.0 * domain.hx)
    dy = (np.roll(values, -1, axis=-1) - np.roll(values, 1, axis=-1)) / (2.0 * domain.hy)
    return dx, dy


def inverse_laplacian(domain: Domain, values: np.ndarray) -> np.ndarray:
    """Zero-mean solution of Lap u = values (mean of ``values`` is discarded)."""
    kx, ky = _wavenumbers(domain)
    k2 = kx**2 + ky**2
    spectrum = sfft.rfft2(values, axes=(-2, -1))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(k2 > 0, -spectrum / np.where(k2 > 0, k2, 1.0), 0.0)
    return sfft.irfft2(out, s=values.shape[-2:], axes=(-2, -1))


def spline_coefficients(values: np.ndarray) -> np.ndarray:
    """Periodic cubic B-spline coefficients over the trailing two axes."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 2:
        return ndimage.spline_filter(values, order=3, mode="grid-wrap")
    out = np.empty_like(values)
    for idx in np.ndindex(values.shape[:-2]):
        out[idx] = ndimage.spline_filter(values[idx], order=3, mode="grid-wrap")
    return out


@numba.njit(cache=True)
def _cubic_weights(f):
    f2 = f * f
    f3 = f2 * f
    return (
        (1.0 - f) ** 3 / 6.0,
        (3.0 * f3 - 6.0 * f2 + 4.0) / 6.0,
        (-3.0 * f3 + 3.0 * f2 + 3.0 * f + 1.0) / 6.0,
        f3 / 6.0,
    )


@numba.njit(cache=True)
def _bspline_kernel(coefs, ix, iy, out):
    m, nx, ny = coefs.shape
    for p in range(ix.shape[0]):
        i0 = int(np.floor(ix[p]))
        j0 = int(np.floor(iy[p]))
        wx = _cubic_weights(ix[p] - i0)
        wy = _cubic_weights(iy[p] - j0)
        for c in range(m):
            acc = 0.0
            for a in range(4):
                ii = (i0 - 1 + a) % nx
                row = 0.0
                for b in range(4):
                    row += wy[b] * coefs[c, ii, (j0 - 1 + b) % ny]
                acc += wx[a] * row
            out[c, p] = acc


def spline_eval_many(domain: Domain, coefs: np.ndarray, x, y) -> np.ndarray:
    """Evaluate a stack of periodic cubic splines ``coefs[m, nx, ny]`` at points."""
    x = np.asarray(x, dtype=float)
    ix, iy = domain.to_index(x, y)
    ix = np.ascontiguousarray(ix, dtype=float).ravel()
    iy = np.ascontiguousarray(np.broadcast_to(iy, x.shape), dtype=float).ravel()
    coefs = np.ascontiguousarray(coefs, dtype=float)
    out = np.empty((coefs.shape[0], ix.shape[0]))
    _bspline_kernel(coefs, ix, iy, out)
    return out.reshape((coefs.shape[0],) + x.shape)


def spline_eval(domain: Domain, coef: np.ndarray, x, y) -> np.ndarray:
    """Evaluate a periodic cubic spline (from :func:`spline_coefficients`) at points."""
    return spline_eval_many(domain, np.asarray(coef)[None], x, y)[0]


def spline_eval_reference(domain: Domain, coef: np.ndarray, x, y) -> np.ndarray:
    """Same as :func:`spline_eval` through ``scipy.ndimage.map_coordinates``."""
    x = np.asarray(x, dtype=float)
    ix, iy = domain.to_index(x, y)
    pts = np.stack([ix.ravel(), np.asarray(iy).ravel()])
    vals = ndimage.map_coordinates(coef, pts, order=3, mode="grid-wrap", prefilter=False)
    return vals.reshape(x.shape)


def interpolate(domain: Domain, values: np.ndarray, x, y) -> np.ndarray:
    return spline_eval(domain, spline_coefficients(values), x, y)
