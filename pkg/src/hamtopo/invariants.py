"""Mass flow (mean rotation vector) and flux of torus isotopies.

For a path ``lambda`` starting at the identity, the mass flow against the
coordinate circle map ``f`` is the mean of the lifted displacement
``f(lambda_1(x)) - f(x)``.  The flux integrates the contraction of the
Eulerian velocity with the area form, ``u dy - v dx``, over time and pairs
the resulting 1-form with the two fundamental cycles.  Both vanish on
Hamiltonian paths and agree with each other component by component.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calculus import eulerian_velocity
from .errors import HamtopoError
from .flow import FlowPath, check_unwrapping

# largest gap between second and fourth order flux estimates
FLUX_NOISE_TOL = 1e-4
CIRCLE_MAPS = ("x", "y")


@dataclass(frozen=True)
class CircleMap:
    """Coordinate projection of the torus onto ``R/Z``."""

    which: str = "x"

    def __post_init__(self):
        if self.which not in CIRCLE_MAPS:
            raise HamtopoError("only the coordinate projections 'x' and 'y' are circle maps")

    @property
    def axis(self) -> int:
        return CIRCLE_MAPS.index(self.which)


def _require_torus(path: FlowPath):
    if not path.domain.is_torus:
        raise HamtopoError("mass flow and flux are defined on the torus")


def mass_flow(path: FlowPath, f: CircleMap) -> float:
    """Mean lifted displacement of the ``f`` coordinate at time 1."""
    _require_torus(path)
    check_unwrapping(path.image_x, path.image_y)
    disp = path.displacement(-1)[f.axis]
    return float(np.mean(disp))


def rotation_vector(path: FlowPath) -> tuple:
    return mass_flow(path, CircleMap("x")), mass_flow(path, CircleMap("y"))


def _time_averaged_velocity(path: FlowPath, order: int) -> tuple:
    nt = path.nt
    w = np.full(nt, 1.0)
    w[0] = w[-1] = 0.5
    w *= path.times[1] - path.times[0]
    ubar = np.zeros(path.domain.shape)
    vbar = np.zeros(path.domain.shape)
    for k in range(nt):
        u, v = eulerian_velocity(path, k, order)
        ubar += w[k] * u
        vbar += w[k] * v
    return ubar, vbar


def _period_integrals(path: FlowPath, ubar, vbar) -> tuple:
    # alpha = ubar dy - vbar dx; the y-cycle (x fixed) picks up ubar,
    # minus the x-cycle (y fixed) picks up vbar; average over grid lines
    over_y_cycles = np.mean(ubar, axis=1)
    over_x_cycles = np.mean(vbar, axis=0)
    return float(np.mean(over_y_cycles)), float(np.mean(over_x_cycles))


def flux(path: FlowPath) -> tuple:
    """Period integrals of ``int_0^1 (u dy - v dx) dt``, ordered like :func:`rotation_vector`.

    The x component pairs the 1-form with the y-cycle and the y component
    with the reversed x-cycle, so a translation by ``(a, b)`` has flux
    ``(a, b)``.  Raises when second and fourth order velocity estimates
    disagree by more than ``FLUX_NOISE_TOL``.
    """
    _require_torus(path)
    path.require_inverse()
    if path.nt < 5:
        raise HamtopoError("refine time sampling: flux needs at least five time samples")
    fine = _period_integrals(path, *_time_averaged_velocity(path, 4))
    coarse = _period_integrals(path, *_time_averaged_velocity(path, 2))
    noise = max(abs(a - b) for a, b in zip(fine, coarse))
    if noise > FLUX_NOISE_TOL:
        raise HamtopoError(f"refine time sampling: velocity estimates differ by {noise:.3g}")
    return fine


def duality_check(path: FlowPath) -> float:
    """Largest componentwise gap between flux and rotation vector."""
    return float(max(abs(a - b) for a, b in zip(flux(path), rotation_vector(path))))


def concatenate_paths(first: FlowPath, second: FlowPath) -> FlowPath:
    """``first`` run at double speed, then ``second`` applied after ``first``'s endpoint.

    The result has ``2 nt - 1`` samples; inverses are composed when both
    paths carry them.
    """
    first.domain.check_same(second.domain)
    if first.nt != second.nt:
        raise HamtopoError("paths use different time grids")
    nt = first.nt
    end_x, end_y = first.image_x[-1], first.image_y[-1]
    xs = [first.image_x[k] for k in range(nt)]
    ys = [first.image_y[k] for k in range(nt)]
    for k in range(1, nt):
        px, py = second.evaluate(k, end_x, end_y)
        xs.append(px)
        ys.append(py)
    inv_x = inv_y = None
    if first.has_inverse and second.has_inverse:
        inv_x = [first.inv_x[k] for k in range(nt)]
        inv_y = [first.inv_y[k] for k in range(nt)]
        for k in range(1, nt):
            px, py = first.evaluate(-1, second.inv_x[k], second.inv_y[k], inverse=True)
            inv_x.append(px)
            inv_y.append(py)
        inv_x, inv_y = np.stack(inv_x), np.stack(inv_y)
    times = np.linspace(0.0, 1.0, 2 * nt - 1)
    return FlowPath(first.domain, times, np.stack(xs), np.stack(ys), inv_x, inv_y)
