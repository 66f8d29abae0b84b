"""Continuous Hamiltonians ``H(t, x, y)`` with first and second space derivatives.

The flow engine only talks to this interface.  Closed-form families give
exact derivatives; :class:`GridHamiltonian` turns samples into a continuous
function (spectral derivatives, periodic cubic splines in space, Lagrange
interpolation in time).  The wrappers implement the time reparameterization
``zeta'(t) H(zeta(t), x)`` and the concatenation of two Hamiltonians.
"""

from __future__ import annotations

import numba
import numpy as np

from .domain import Domain, centered_gradient, spectral_gradient, spectral_hessian, spline_coefficients, spline_eval_many
from .errors import HamtopoError


class HamiltonianFunction:
    """Base class; subclasses override value, gradient and hessian."""

    autonomous = False

    def value(self, t, x, y):
        raise NotImplementedError

    def gradient(self, t, x, y):
        raise NotImplementedError

    def hessian(self, t, x, y):
        raise NotImplementedError

    def derivatives(self, t, x, y, hessian: bool = True):
        """Gradient components followed (optionally) by the three Hessian entries."""
        out = tuple(self.gradient(t, x, y))
        if hessian:
            out += tuple(self.hessian(t, x, y))
        return out

    def scaled(self, c: float) -> "HamiltonianFunction":
        return LinearCombination([(c, self)])

    def vector_field(self, t, x, y):
        # X_H _| (dx ^ dy) = dH  gives  X_H = (dH/dy, -dH/dx)
        hx, hy = self.gradient(t, x, y)
        return hy, -hx


class ZeroHamiltonian(HamiltonianFunction):
    autonomous = True

    def value(self, t, x, y):
        return np.zeros(np.shape(x))

    def gradient(self, t, x, y):
        z = np.zeros(np.shape(x))
        return z, z.copy()

    def hessian(self, t, x, y):
        z = np.zeros(np.shape(x))
        return z, z.copy(), z.copy()


class TrigModes(HamiltonianFunction):
    """Sum of plane waves ``(a_m + b_m t) cos(2 pi k_m.(x, y) + phase_m)`` on the torus."""

    def __init__(self, wavevectors, amp0, amp1=None, phase=None):
        self.k = np.atleast_2d(np.asarray(wavevectors, dtype=float))
        m = len(self.k)
        self.a0 = np.broadcast_to(np.asarray(amp0, dtype=float), (m,)).copy()
        self.a1 = np.zeros(m) if amp1 is None else np.broadcast_to(np.asarray(amp1, dtype=float), (m,)).copy()
        self.phase = np.zeros(m) if phase is None else np.broadcast_to(np.asarray(phase, dtype=float), (m,)).copy()
        if np.any(np.all(self.k == 0, axis=1)):
            raise HamtopoError("constant mode not allowed; torus Hamiltonians are normalized")
        self.autonomous = bool(np.all(self.a1 == 0))

    def _modes(self, t, x, y):
        for (kx, ky), a0, a1, ph in zip(self.k, self.a0, self.a1, self.phase):
            theta = 2.0 * np.pi * (kx * x + ky * y) + ph
            yield kx, ky, a0 + a1 * t, theta

    def value(self, t, x, y):
        out = np.zeros(np.shape(x))
        for _, _, amp, theta in self._modes(t, x, y):
            out += amp * np.cos(theta)
        return out

    def gradient(self, t, x, y):
        gx = np.zeros(np.shape(x))
        gy = np.zeros(np.shape(x))
        for kx, ky, amp, theta in self._modes(t, x, y):
            s = -2.0 * np.pi * amp * np.sin(theta)
            gx += kx * s
            gy += ky * s
        return gx, gy

    def hessian(self, t, x, y):
        return self.derivatives(t, x, y)[2:]

    def derivatives(self, t, x, y, hessian=True):
        x = np.asarray(x, dtype=float)
        xf = np.ascontiguousarray(x).ravel()
        yf = np.ascontiguousarray(np.broadcast_to(y, x.shape), dtype=float).ravel()
        out = np.empty((5 if hessian else 2, xf.shape[0]))
        _trig_derivatives(self.k, self.a0 + self.a1 * t, self.phase, xf, yf, out)
        return tuple(out.reshape((out.shape[0],) + x.shape))


@numba.njit(cache=True)
def _trig_derivatives(k, amp, phase, x, y, out):
    two_pi = 2.0 * np.pi
    nout = out.shape[0]
    for p in range(x.shape[0]):
        gx = gy = hxx = hxy = hyy = 0.0
        for m in range(k.shape[0]):
            theta = two_pi * (k[m, 0] * x[p] + k[m, 1] * y[p]) + phase[m]
            s = -two_pi * amp[m] * np.sin(theta)
            gx += k[m, 0] * s
            gy += k[m, 1] * s
            if nout == 5:
                c = -two_pi * two_pi * amp[m] * np.cos(theta)
                hxx += k[m, 0] * k[m, 0] * c
                hxy += k[m, 0] * k[m, 1] * c
                hyy += k[m, 1] * k[m, 1] * c
        out[0, p] = gx
        out[1, p] = gy
        if nout == 5:
            out[2, p] = hxx
            out[3, p] = hxy
            out[4, p] = hyy


class LinearCombination(HamiltonianFunction):
    def __init__(self, terms):
        self.terms = [(float(c), f) for c, f in terms]
        self.autonomous = all(f.autonomous for _, f in self.terms)

    def _combine(self, parts):
        out = None
        for (c, _), p in zip(self.terms, parts):
            if out is None:
                out = [c * q for q in p]
            else:
                for i, q in enumerate(p):
                    out[i] = out[i] + c * q
        return tuple(out)

    def value(self, t, x, y):
        return self._combine([(f.value(t, x, y),) for _, f in self.terms])[0]

    def gradient(self, t, x, y):
        return self._combine([f.gradient(t, x, y) for _, f in self.terms])

    def hessian(self, t, x, y):
        return self._combine([f.hessian(t, x, y) for _, f in self.terms])

    def derivatives(self, t, x, y, hessian=True):
        return self._combine([f.derivatives(t, x, y, hessian) for _, f in self.terms])


class MeanShifted(HamiltonianFunction):
    """``base`` minus a time-dependent constant (piecewise linear in t)."""

    def __init__(self, base: HamiltonianFunction, times, shifts):
        self.base = base
        self.times = np.asarray(times, dtype=float)
        self.shifts = np.asarray(shifts, dtype=float)
        self.autonomous = base.autonomous and bool(np.all(self.shifts == self.shifts[0]))

    def value(self, t, x, y):
        return self.base.value(t, x, y) - np.interp(t, self.times, self.shifts)

    def gradient(self, t, x, y):
        return self.base.gradient(t, x, y)

    def hessian(self, t, x, y):
        return self.base.hessian(t, x, y)

    def derivatives(self, t, x, y, hessian=True):
        return self.base.derivatives(t, x, y, hessian)


class Reparameterized(HamiltonianFunction):
    """``zeta'(t) * base(zeta(t), x)``, generating ``t -> phi_base^{zeta(t)}``."""

    def __init__(self, base: HamiltonianFunction, zeta, dzeta, constant_speed: bool = False):
        self.base = base
        self.zeta = zeta
        self.dzeta = dzeta
        self.autonomous = base.autonomous and constant_speed

    def value(self, t, x, y):
        return self.dzeta(t) * self.base.value(self.zeta(t), x, y)

    def gradient(self, t, x, y):
        s = self.dzeta(t)
        gx, gy = self.base.gradient(self.zeta(t), x, y)
        return s * gx, s * gy

    def hessian(self, t, x, y):
        s = self.dzeta(t)
        return tuple(s * h for h in self.base.hessian(self.zeta(t), x, y))

    def derivatives(self, t, x, y, hessian=True):
        s = self.dzeta(t)
        if s == 0.0:
            return tuple(np.zeros(np.shape(x)) for _ in range(5 if hessian else 2))
        return tuple(s * d for d in self.base.derivatives(self.zeta(t), x, y, hessian))


class Concatenated(HamiltonianFunction):
    """``first`` compressed onto [0, 1-s), then ``second`` shifted onto [1-s, 1]."""

    def __init__(self, first: HamiltonianFunction, second: HamiltonianFunction, s: float):
        self.first = first
        self.second = second
        self.s = float(s)

    def _pick(self, t):
        split = 1.0 - self.s
        if t < split:
            return self.first, t / split, 1.0 / split
        return self.second, t - split, 1.0

    def value(self, t, x, y):
        f, tau, scale = self._pick(t)
        return scale * f.value(tau, x, y)

    def gradient(self, t, x, y):
        f, tau, scale = self._pick(t)
        return tuple(scale * g for g in f.gradient(tau, x, y))

    def hessian(self, t, x, y):
        f, tau, scale = self._pick(t)
        return tuple(scale * h for h in f.hessian(tau, x, y))

    def derivatives(self, t, x, y, hessian=True):
        f, tau, scale = self._pick(t)
        return tuple(scale * d for d in f.derivatives(tau, x, y, hessian))


def time_weights(times: np.ndarray, t: float, order: str = "cubic"):
    """Window start and interpolation weights for a uniform time grid."""
    nt = len(times)
    if nt == 1:
        return 0, np.ones(1)
    dt = times[1] - times[0]
    u = (min(max(t, times[0]), times[-1]) - times[0]) / dt
    if order == "linear" or nt < 4:
        k = min(int(np.floor(u)), nt - 2)
        w = u - k
        return k, np.array([1.0 - w, w])
    k = int(np.floor(u))
    start = min(max(k - 1, 0), nt - 4)
    v = u - start
    nodes = np.arange(4.0)
    weights = np.ones(4)
    for i in range(4):
        for j in range(4):
            if i != j:
                weights[i] *= (v - nodes[j]) / (nodes[i] - nodes[j])
    return start, weights


class GridHamiltonian(HamiltonianFunction):
    """Continuous interpolant of samples ``values[k, i, j]`` at ``times[k]``.

    Space derivatives are spectral by default (``derivative="centered"``
    gives second-order differences); evaluation off the grid uses periodic
    cubic splines; time uses 4-point Lagrange interpolation (or linear).
    """

    def __init__(self, domain: Domain, times, values, time_interp: str = "cubic", derivative: str = "spectral"):
        self.domain = domain
        values = np.asarray(values, dtype=float)
        self.autonomous = bool(np.all(values == values[:1]))
        if self.autonomous:
            values = values[:1]
            times = np.asarray(times, dtype=float)[:1]
        self.values = values
        self.times = np.asarray(times, dtype=float)
        self.time_interp = time_interp
        if derivative not in ("spectral", "centered"):
            raise HamtopoError(f"unknown derivative method {derivative!r}")
        self.derivative = derivative
        self._cache = {}

    def _stack(self, name):
        if name not in self._cache:
            if name == "value":
                arrays = (self.values,)
            elif name == "gradient":
                arrays = self._raw_gradient()
            else:
                arrays = self._raw_gradient() + self._raw_hessian()
            # layout (nt, m, nx, ny) so a time window is one contiguous block
            self._cache[name] = np.stack([spline_coefficients(a) for a in arrays], axis=1)
        return self._cache[name]

    def _combine(self, stack, t):
        start, w = time_weights(self.times, t, self.time_interp)
        return np.tensordot(w, stack[start : start + len(w)], axes=1)

    def _eval(self, name, t, x, y):
        return tuple(spline_eval_many(self.domain, self._combine(self._stack(name), t), x, y))

    def value(self, t, x, y):
        return self._eval("value", t, x, y)[0]

    def gradient(self, t, x, y):
        return self._eval("gradient", t, x, y)

    def hessian(self, t, x, y):
        return self._eval("derivatives", t, x, y)[2:]

    def derivatives(self, t, x, y, hessian=True):
        return self._eval("derivatives" if hessian else "gradient", t, x, y)

    def grid_gradient(self, t):
        """Derivatives at the grid nodes, interpolated in time only."""
        return tuple(self._combine(np.asarray(d), t) for d in self._raw_gradient())

    def _raw_gradient(self):
        if "raw_gradient" not in self._cache:
            if self.derivative == "spectral":
                self._cache["raw_gradient"] = spectral_gradient(self.domain, self.values)
            else:
                self._cache["raw_gradient"] = centered_gradient(self.domain, self.values)
        return self._cache["raw_gradient"]

    def _raw_hessian(self):
        if "raw_hessian" not in self._cache:
            if self.derivative == "spectral":
                self._cache["raw_hessian"] = spectral_hessian(self.domain, self.values)
            else:
                gx, gy = self._raw_gradient()
                hxx, hxy = centered_gradient(self.domain, gx)
                _, hyy = centered_gradient(self.domain, gy)
                self._cache["raw_hessian"] = (hxx, hxy, hyy)
        return self._cache["raw_hessian"]
