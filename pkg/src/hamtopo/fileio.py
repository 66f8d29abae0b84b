"""Text formats for sampled fields and flow paths.

Both start with ``#`` headers in a fixed order (``domain``, ``nt``, ``nx``,
``ny``), followed by one comma-separated record per node in row-major
order: ``t_index,i,j,value`` for fields and ``t_index,i,j,image_x,image_y``
for flows (torus images unwrapped).  Reals carry 17 significant digits so
files round-trip exactly.
"""

from __future__ import annotations

import io
from typing import Optional

import numpy as np

from .domain import KINDS, Domain
from .errors import HamtopoError, ParseError
from .flow import FlowPath
from .hamiltonian import SampledHamiltonian

HEADER_KEYS = ("domain", "nt", "nx", "ny")


def _header(domain: Domain, nt: int) -> str:
    return f"# domain: {domain.kind}\n# nt: {nt}\n# nx: {domain.grid_nx}\n# ny: {domain.grid_ny}\n"


def _write_records(path, header: str, columns) -> None:
    nt, nx, ny = columns[0].shape
    k, i, j = (a.ravel() for a in np.indices((nt, nx, ny)))
    data = np.column_stack([k, i, j] + [c.ravel() for c in columns])
    fmt = ["%d", "%d", "%d"] + ["%.17g"] * len(columns)
    buf = io.StringIO()
    np.savetxt(buf, data, fmt=fmt, delimiter=",")
    with open(path, "w") as fh:
        fh.write(header)
        fh.write(buf.getvalue())


def _read_records(path, ncols: int, support_margin: float):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    lines = text.splitlines()
    meta = {}
    body_start = 0
    for lineno, line in enumerate(lines):
        if not line.startswith("#"):
            body_start = lineno
            break
        key, sep, value = line[1:].partition(":")
        if not sep:
            raise ParseError(f"{path}:{lineno + 1}: malformed header {line!r}")
        meta[key.strip()] = value.strip()
    else:
        body_start = len(lines)
    if tuple(meta) != HEADER_KEYS:
        raise ParseError(f"{path}: headers must be {', '.join(HEADER_KEYS)} in that order")
    if meta["domain"] not in KINDS:
        raise ParseError(f"{path}: unknown domain {meta['domain']!r}")
    try:
        nt, nx, ny = (int(meta[k]) for k in ("nt", "nx", "ny"))
    except ValueError:
        raise ParseError(f"{path}: nt, nx and ny must be integers") from None
    try:
        domain = Domain(meta["domain"], nx, ny, support_margin)
    except HamtopoError as exc:
        raise ParseError(f"{path}: {exc}") from None
    expected = nt * nx * ny
    body = "\n".join(lines[body_start:])
    try:
        data = np.loadtxt(io.StringIO(body), delimiter=",", ndmin=2)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None
    if data.shape != (expected, 3 + ncols):
        raise ParseError(f"{path}: expected {expected} records of {3 + ncols} fields, got shape {data.shape}")
    k, i, j = (a.ravel() for a in np.indices((nt, nx, ny)))
    if not (np.array_equal(data[:, 0], k) and np.array_equal(data[:, 1], i) and np.array_equal(data[:, 2], j)):
        raise ParseError(f"{path}: records are not in row-major (t_index, i, j) order")
    cols = [data[:, 3 + c].reshape(nt, nx, ny) for c in range(ncols)]
    return domain, nt, cols


def write_field(path, H: SampledHamiltonian) -> None:
    _write_records(path, _header(H.domain, H.nt), [np.asarray(H.values)])


def read_field(path, normalized: Optional[bool] = None, support_margin: float = 0.05) -> SampledHamiltonian:
    """Read a field file; torus fields are flagged normalized when their slices are mean-zero."""
    domain, nt, (values,) = _read_records(path, 1, support_margin)
    if not np.all(np.isfinite(values)):
        raise ParseError(f"{path}: non-finite value")
    if normalized is None:
        normalized = domain.is_torus and bool(np.max(np.abs(domain.mean_values(values))) <= 1e-10)
    return SampledHamiltonian(domain, values, normalized)


def write_flow(path, flow: FlowPath) -> None:
    _write_records(path, _header(flow.domain, flow.nt), [np.asarray(flow.image_x), np.asarray(flow.image_y)])


def read_flow(path, support_margin: float = 0.05) -> FlowPath:
    """Read a flow file; the result carries no inverse slices."""
    domain, nt, (ix, iy) = _read_records(path, 2, support_margin)
    if not (np.all(np.isfinite(ix)) and np.all(np.isfinite(iy))):
        raise ParseError(f"{path}: non-finite value")
    return FlowPath(domain, np.linspace(0.0, 1.0, nt), ix, iy)
