"""Distances on Hamiltonian paths and Cauchy diagnostics for sequences of them.

Three distances are compared: the uniform distance of paths (maps and
inverses), the Hofer length of ``phi_H^-1 phi_K`` and their sum, the
Hamiltonian distance.  A finite sequence never converges in any proven
sense; a report records the pairwise tables, the tail modulus
``k -> sup_{i, j >= k} d(i, j)`` and whether the last pair is within a
tolerance.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .calculus import leng_between
from .domain import dbar_maps
from .errors import DomainMismatchError, HamtopoError, NotCauchyError
from .flow import DEFAULT_STEPS, FlowPath, integrate_refined, rate_bound, refinement_levels
from .hamiltonian import SampledHamiltonian

AUDIT_POINTS = 64
AUDIT_TOL = 1e-6
METRICS = ("dbar", "hofer", "dham")


@dataclass(frozen=True, eq=False)
class PathPair:
    """A sampled path together with the Hamiltonian that generates it.

    Construction re-integrates up to ``AUDIT_POINTS`` nodes with twice the
    step count and checks they land within ``audit_tol`` of the stored
    slices (pass ``audit_tol=None`` to skip).
    """

    path: FlowPath
    ham: SampledHamiltonian
    steps: int = DEFAULT_STEPS
    audit_tol: Optional[float] = AUDIT_TOL
    audit_region: float = 0.0
    label: str = ""
    audit_error: float = field(default=0.0, init=False)

    def __post_init__(self):
        self.ham.domain.check_same(self.path.domain)
        if self.ham.nt != self.path.nt:
            raise DomainMismatchError("path and Hamiltonian use different time grids")
        if self.audit_tol is not None:
            err = audit_pair(self.path, self.ham, self.steps, self.audit_region)
            object.__setattr__(self, "audit_error", err)
            if err > self.audit_tol:
                raise HamtopoError(f"path is not the flow of its Hamiltonian (audit error {err:.3g})")


def audit_pair(path: FlowPath, ham: SampledHamiltonian, steps: int = DEFAULT_STEPS, exclude_radius: float = 0.0) -> float:
    dom = path.domain
    idx = np.flatnonzero(dom.region_mask(exclude_radius).ravel())
    if idx.size == 0:
        return 0.0
    pick = idx[np.linspace(0, idx.size - 1, min(AUDIT_POINTS, idx.size)).astype(int)]
    gx, gy = (c.ravel()[pick] for c in dom.coords)
    fn = ham.as_function()
    levels = refinement_levels(rate_bound(fn, gx, gy, ham.times), ham.nt, 2 * steps)
    xs, ys, _, _ = integrate_refined(fn, gx, gy, ham.nt, 2 * steps, False, levels)
    px = path.image_x.reshape(path.nt, -1)[:, pick]
    py = path.image_y.reshape(path.nt, -1)[:, pick]
    return float(np.max(dom.displacement(xs - px, ys - py)))


def _check_paths(a: FlowPath, b: FlowPath):
    a.domain.check_same(b.domain)
    if a.nt != b.nt:
        raise DomainMismatchError("paths use different time grids")


def dbar_paths(a: FlowPath, b: FlowPath, exclude_radius: float = 0.0) -> float:
    """``max_t dbar(a(t), b(t))`` over the shared time samples."""
    _check_paths(a, b)
    return max(dbar_maps(a.slice(k), b.slice(k), exclude_radius) for k in range(a.nt))


def hofer_dist(p: PathPair, q: PathPair) -> float:
    """Hofer length of ``phi_H^-1 phi_K``, i.e. ``||Hbar # K||``.

    ``||Hbar # K||`` and ``||Kbar # H||`` agree exactly in theory but go
    through different flows numerically; their mean makes the distance
    symmetric to the last bit.
    """
    if p.ham is q.ham or np.array_equal(p.ham.values, q.ham.values):
        return 0.0
    return 0.5 * (leng_between(p.ham, q.ham, p.path) + leng_between(q.ham, p.ham, q.path))


def dham(p: PathPair, q: PathPair, exclude_radius: float = 0.0) -> float:
    return hofer_dist(p, q) + dbar_paths(p.path, q.path, exclude_radius)


def tail_modulus(matrix: np.ndarray) -> np.ndarray:
    """``k -> sup_{i, j >= k} matrix[i, j]``; nonincreasing by construction."""
    return np.array([float(np.max(matrix[k:, k:])) for k in range(len(matrix))])


def cauchy_verdict(modulus: np.ndarray, tau: float) -> bool:
    """Cauchy at ``tau``: the modulus over the last pair of the sequence is below it."""
    if len(modulus) < 2:
        return True
    return bool(modulus[-2] <= tau)


@dataclass(frozen=True, eq=False)
class ConvergenceReport:
    labels: list
    tau: float
    dbar_matrix: np.ndarray
    hofer_matrix: np.ndarray
    dham_matrix: np.ndarray
    ev1_trace: np.ndarray
    hofer_norms: np.ndarray
    exclude_radius: float = 0.0
    modulus: dict = field(init=False)
    verdicts: dict = field(init=False)

    def __post_init__(self):
        mats = {"dbar": self.dbar_matrix, "hofer": self.hofer_matrix, "dham": self.dham_matrix}
        modulus = {k: tail_modulus(m) for k, m in mats.items()}
        object.__setattr__(self, "modulus", modulus)
        object.__setattr__(self, "verdicts", {k: cauchy_verdict(m, self.tau) for k, m in modulus.items()})

    @property
    def n(self) -> int:
        return len(self.labels)

    def check_invariants(self) -> None:
        """Sum identity, symmetry, monotone moduli and domination of both summands."""
        if not np.allclose(self.dham_matrix, self.hofer_matrix + self.dbar_matrix, rtol=0.0, atol=1e-12):
            raise HamtopoError("dham is not the sum of its two parts")
        for m in (self.dbar_matrix, self.hofer_matrix, self.dham_matrix):
            if not np.array_equal(m, m.T):
                raise HamtopoError("distance matrix not symmetric")
        for mod in self.modulus.values():
            if np.any(np.diff(mod) > 0.0):
                raise HamtopoError("Cauchy modulus must be nonincreasing")
        if self.verdicts["dham"] and not (self.verdicts["dbar"] and self.verdicts["hofer"]):
            raise HamtopoError("dham-Cauchy must imply Cauchy in both summands")

    def to_text(self) -> str:
        out = io.StringIO()
        out.write(f"n = {self.n}\n")
        out.write(f"tau = {self.tau!r}\n")
        out.write(f"exclude_radius = {self.exclude_radius!r}\n")
        for key in METRICS:
            out.write(f"cauchy_{key} = {str(self.verdicts[key]).lower()}\n")
        out.write("\n[hofer_norms]\nlabel,hofer_norm\n")
        for lab, v in zip(self.labels, self.hofer_norms):
            out.write(f"{lab},{v:.17g}\n")
        out.write("\n[ev1_trace]\nfrom,to,dbar_time1\n")
        for i, v in enumerate(self.ev1_trace):
            out.write(f"{self.labels[i]},{self.labels[i + 1]},{v:.17g}\n")
        for key, mat in (("dbar", self.dbar_matrix), ("hofer", self.hofer_matrix), ("dham", self.dham_matrix)):
            out.write(f"\n[{key}_matrix]\n," + ",".join(str(lab) for lab in self.labels) + "\n")
            for lab, row in zip(self.labels, mat):
                out.write(f"{lab}," + ",".join(f"{v:.17g}" for v in row) + "\n")
            out.write(f"\n[{key}_modulus]\nk,modulus\n")
            for k, v in enumerate(self.modulus[key]):
                out.write(f"{k},{v:.17g}\n")
        return out.getvalue()


def cauchy_report(seq, tau: float = 1e-2, exclude_radius: float = 0.0, labels=None) -> ConvergenceReport:
    """Pairwise distance tables and Cauchy verdicts for a list of :class:`PathPair`."""
    from .hamiltonian import hofer_norm

    seq = list(seq)
    n = len(seq)
    if n == 0:
        raise HamtopoError("empty sequence")
    if not tau > 0.0:
        raise HamtopoError("tau must be positive")
    for p in seq[1:]:
        _check_paths(seq[0].path, p.path)
    labels = list(labels) if labels is not None else [p.label or str(i) for i, p in enumerate(seq)]
    dbar = np.zeros((n, n))
    hof = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            dbar[i, j] = dbar[j, i] = dbar_paths(seq[i].path, seq[j].path, exclude_radius)
            hof[i, j] = hof[j, i] = hofer_dist(seq[i], seq[j])
    ev1 = np.array([dbar_maps(seq[i].path.final(), seq[i + 1].path.final(), exclude_radius) for i in range(n - 1)])
    norms = np.array([hofer_norm(p.ham) for p in seq])
    return ConvergenceReport(labels, tau, dbar, hof, hof + dbar, ev1, norms, exclude_radius)


@dataclass(frozen=True, eq=False)
class LimitPath:
    """Numerical representative of a C0 limit: the last path plus its error bar."""

    path: FlowPath
    error_bar: float


def extract_c0_limit(seq, tau: float = 1e-2, exclude_radius: float = 0.0) -> LimitPath:
    seq = list(seq)
    n = len(seq)
    dbar = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            dbar[i, j] = dbar[j, i] = dbar_paths(seq[i].path, seq[j].path, exclude_radius)
    modulus = tail_modulus(dbar)
    if not cauchy_verdict(modulus, tau):
        raise NotCauchyError(f"sequence is not C0-Cauchy at tau = {tau:g} (tail modulus {modulus[-2]:.3g})")
    bar = float(modulus[-2]) if n >= 2 else 0.0
    return LimitPath(seq[-1].path, bar)
