"""Sampled time-dependent Hamiltonians and the Hofer-type norms."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .domain import Domain, ScalarField
from .errors import DomainMismatchError, HamtopoError, NonFiniteFieldError, NormalizationError, SupportViolationError
from .functions import GridHamiltonian, HamiltonianFunction, LinearCombination, MeanShifted

NORMALIZATION_TOL = 1e-10
SUPPORT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class SampledHamiltonian:
    """``values[k, i, j] = H(t_k, x_ij)`` on ``nt`` uniform times covering [0, 1].

    ``func`` optionally carries a continuous representative used by the
    flow engine; without it the samples are interpolated.
    """

    domain: Domain
    values: np.ndarray
    normalized: bool = False
    func: Optional[HamiltonianFunction] = field(default=None, repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 3 or values.shape[1:] != self.domain.shape:
            raise DomainMismatchError("Hamiltonian samples must have shape (nt, nx, ny)")
        if values.shape[0] < 2:
            raise HamtopoError("need at least two time samples")
        if not np.all(np.isfinite(values[:, self.domain.active])):
            raise NonFiniteFieldError("non-finite field")
        if not self.domain.is_torus:
            outside = self.domain.outside_support
            scale = max(1.0, float(np.max(np.abs(values))))
            if np.any(np.abs(values[:, outside]) > SUPPORT_TOL * scale):
                raise SupportViolationError(
                    "disc Hamiltonian must vanish for r > 1 - support_margin (compact support)"
                )
            values[:, outside] = 0.0
        if self.normalized:
            if not self.domain.is_torus:
                raise NormalizationError("open case uses compact support, not normalization")
            means = self.domain.mean_values(values)
            if np.max(np.abs(means)) > NORMALIZATION_TOL:
                raise NormalizationError("time slices are not mean-zero")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def nt(self) -> int:
        return self.values.shape[0]

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.nt)

    @property
    def dt(self) -> float:
        return 1.0 / (self.nt - 1)

    @property
    def autonomous(self) -> bool:
        if self.func is not None:
            return self.func.autonomous
        return bool(np.all(self.values == self.values[:1]))

    def slice(self, k: int) -> ScalarField:
        return ScalarField(self.domain, self.values[k])

    def as_function(self) -> HamiltonianFunction:
        if self.func is not None:
            return self.func
        cached = self.__dict__.get("_grid_function")
        if cached is None:
            cached = GridHamiltonian(self.domain, self.times, self.values)
            object.__setattr__(self, "_grid_function", cached)
        return cached

    def with_values(self, values, func=None, normalized=None) -> "SampledHamiltonian":
        norm = self.normalized if normalized is None else normalized
        return SampledHamiltonian(self.domain, values, norm, func)

    def _check_compatible(self, other: "SampledHamiltonian"):
        self.domain.check_same(other.domain)
        if self.nt != other.nt:
            raise DomainMismatchError("time grids differ")

    def __add__(self, other):
        return linear_combination([(1.0, self), (1.0, other)])

    def __sub__(self, other):
        return linear_combination([(1.0, self), (-1.0, other)])

    def __neg__(self):
        return linear_combination([(-1.0, self)])

    def __mul__(self, c):
        return linear_combination([(float(c), self)])

    __rmul__ = __mul__


def linear_combination(terms) -> SampledHamiltonian:
    terms = list(terms)
    first = terms[0][1]
    for _, h in terms[1:]:
        first._check_compatible(h)
    values = sum(c * h.values for c, h in terms)
    func = None
    if all(h.func is not None for _, h in terms):
        func = LinearCombination([(c, h.func) for c, h in terms])
    normalized = all(h.normalized for _, h in terms)
    return SampledHamiltonian(first.domain, values, normalized, func)


def sample(func: HamiltonianFunction, domain: Domain, nt: int = 200, normalized: Optional[bool] = None) -> SampledHamiltonian:
    """Sample a continuous Hamiltonian on the space-time grid."""
    gx, gy = domain.coords
    times = np.linspace(0.0, 1.0, nt)
    if func.autonomous:
        values = np.broadcast_to(func.value(0.0, gx, gy), (nt,) + domain.shape)
    else:
        values = np.stack([func.value(t, gx, gy) for t in times])
    if normalized is None:
        normalized = domain.is_torus and bool(np.max(np.abs(domain.mean_values(values))) <= NORMALIZATION_TOL)
    return SampledHamiltonian(domain, values, normalized, func)


def normalize(H: SampledHamiltonian) -> SampledHamiltonian:
    """Subtract the Liouville mean of every time slice (torus only)."""
    if not H.domain.is_torus:
        raise NormalizationError("open case uses compact support, not normalization")
    means = H.domain.mean_values(H.values)
    values = H.values - means[:, None, None]
    func = None if H.func is None else MeanShifted(H.func, H.times, means)
    return SampledHamiltonian(H.domain, values, True, func)


def renormalized(domain: Domain, values: np.ndarray) -> np.ndarray:
    """Mean-zero slices on the torus; values untouched on the disc."""
    if domain.is_torus:
        return values - domain.mean_values(values)[:, None, None]
    return values


def osc(H: SampledHamiltonian, t: int) -> float:
    """Grid max minus grid min of the time slice ``t`` (an index)."""
    if not -H.nt <= t < H.nt:
        raise IndexError(f"time index {t} out of range")
    s = H.values[t]
    return float(H.domain.max_active(s) - H.domain.min_active(s))


def osc_series(H: SampledHamiltonian) -> np.ndarray:
    return H.domain.max_active(H.values) - H.domain.min_active(H.values)


def hofer_norm(H: SampledHamiltonian) -> float:
    """Trapezoid rule in t of the oscillation; the Hofer length of the path."""
    return float(np.trapezoid(osc_series(H), dx=H.dt))


def linfty_norm(H: SampledHamiltonian) -> float:
    """Global max minus global min over space-time."""
    return float(np.max(H.domain.max_active(H.values)) - np.min(H.domain.min_active(H.values)))


def c0_norm(H: SampledHamiltonian) -> float:
    return float(np.max(np.abs(H.values[:, H.domain.active])))


def time_lipschitz(H: SampledHamiltonian) -> float:
    """Largest finite-difference slope in t; exact Lipschitz constant of the
    piecewise-linear time interpolant of the samples."""
    diffs = np.abs(np.diff(H.values[:, H.domain.active], axis=0))
    return float(np.max(diffs) / H.dt) if diffs.size else 0.0
