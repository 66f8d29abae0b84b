"""Command line: norms, flows, distances, invariants and gallery experiments.

Every command writes a plain-text report: ``key = value`` header lines
(starting with the resolved configuration), then CSV tables introduced by
``[section]`` lines.  Reports contain no timestamps, so identical
configurations give identical bytes.
"""

from __future__ import annotations

import argparse
import io
import sys

import numpy as np

from . import gallery
from .domain import MAX_RESOLUTION, MIN_RESOLUTION, Domain, c0_distance_maps
from .errors import EXIT_CODES, ConfigError, HamtopoError, NotCauchyError, ParseError
from .fileio import read_field, read_flow, write_field, write_flow
from .flow import area_audit, attach_inverse, integrate_flow, inverse_audit, min_displacement
from .hamiltonian import SampledHamiltonian, c0_norm, hofer_norm, linfty_norm, osc_series
from .invariants import duality_check, flux, rotation_vector
from .metrics import PathPair, cauchy_report, dbar_paths, hofer_dist
from .reparam import flatten, linfty_gap, plateau_oscillation

COMMANDS = ("norm", "flow", "dham", "cauchy", "massflow", "flux", "flatten", "gallery", "fixedpoint")

DEFAULTS = {
    "domain": "torus2",
    "nx": 128,
    "ny": None,
    "nt": 200,
    "steps": 1000,
    "tau": 1e-2,
    "n_list": None,
    "eps_target": 0.1,
    "seed": 0,
    "exclude_radius": None,
    "item": None,
    "strict": False,
}

INT_KEYS = ("nx", "ny", "nt", "steps", "seed")
FLOAT_KEYS = ("tau", "eps_target", "exclude_radius")


class Report:
    def __init__(self, config: dict):
        self.header = [(f"config.{k}", v) for k, v in sorted(config.items())]
        self.sections = []

    def put(self, key, value):
        self.header.append((key, value))

    def table(self, name, columns, rows):
        self.sections.append((name, columns, rows))

    def to_text(self) -> str:
        out = io.StringIO()
        for key, value in self.header:
            out.write(f"{key} = {_fmt(value)}\n")
        for name, columns, rows in self.sections:
            out.write(f"\n[{name}]\n{','.join(columns)}\n")
            for row in rows:
                out.write(",".join(_fmt(v) for v in row) + "\n")
        return out.getvalue()


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    if isinstance(v, (list, tuple)):
        return " ".join(_fmt(x) for x in v)
    if v is None:
        return "none"
    return str(v)


# -- configuration -------------------------------------------------------------


def read_config_file(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        fh = open(path)
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    with fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key = key.strip().replace("-", "_")
            if not sep or key not in DEFAULTS:
                raise ParseError(f"{path}:{lineno}: expected key = value with a known key")
            out[key] = value.strip()
    return out


def _parse_n_list(text):
    if text is None or isinstance(text, list):
        return text
    try:
        values = [int(v) for v in str(text).replace(" ", "").split(",") if v]
    except ValueError:
        raise ConfigError(f"bad n-list {text!r}") from None
    if not values or min(values) < 1:
        raise ConfigError("n-list needs positive integers")
    return values


def resolve_config(args: argparse.Namespace) -> dict:
    """Defaults, overridden by the config file, overridden by flags."""
    cfg = dict(DEFAULTS)
    if args.config:
        cfg.update(read_config_file(args.config))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None and value is not False:
            cfg[key] = value
    if getattr(args, "item_pos", None):
        cfg["item"] = args.item_pos
    try:
        for key in INT_KEYS:
            if cfg[key] is not None:
                cfg[key] = int(cfg[key])
        for key in FLOAT_KEYS:
            if cfg[key] is not None:
                cfg[key] = float(cfg[key])
    except ValueError as exc:
        raise ConfigError(f"bad configuration value: {exc}") from None
    if isinstance(cfg["strict"], str):
        cfg["strict"] = cfg["strict"].lower() in ("1", "true", "yes")
    cfg["n_list"] = _parse_n_list(cfg["n_list"])
    cfg["domain"] = {"torus": "torus2", "disc": "disc2"}.get(cfg["domain"], cfg["domain"])
    if cfg["ny"] is None:
        cfg["ny"] = cfg["nx"]
    for key in ("nx", "ny"):
        if not MIN_RESOLUTION <= cfg[key] <= MAX_RESOLUTION:
            raise ConfigError(f"{key} must lie in [{MIN_RESOLUTION}, {MAX_RESOLUTION}]")
    if cfg["nt"] < 2 or cfg["steps"] < 1:
        raise ConfigError("nt must be >= 2 and steps >= 1")
    for key in ("tau", "eps_target"):
        if not cfg[key] > 0.0:
            raise ConfigError(f"{key} must be positive")
    cfg["command"] = args.command
    cfg["inputs"] = list(args.inputs or [])
    cfg["out"] = args.out
    return cfg


def _exclude(cfg, domain: Domain) -> float:
    if cfg["exclude_radius"] is not None:
        return cfg["exclude_radius"]
    return 0.0 if domain.is_torus else gallery.CORE_RADIUS


def _need_inputs(cfg, count=None, at_least=1):
    n = len(cfg["inputs"])
    if (count is not None and n != count) or n < at_least:
        want = count if count is not None else f"at least {at_least}"
        raise ConfigError(f"{cfg['command']} needs {want} --in file(s), got {n}")
    return cfg["inputs"]


# -- commands ------------------------------------------------------------------


def _osc_table(report: Report, H: SampledHamiltonian, name="osc"):
    report.table(name, ["t", "osc"], list(zip(H.times, osc_series(H))))


def cmd_norm(cfg, report):
    (path,) = _need_inputs(cfg, 1)
    H = read_field(path)
    report.put("hofer_norm", hofer_norm(H))
    report.put("linfty_norm", linfty_norm(H))
    report.put("c0_norm", c0_norm(H))
    _osc_table(report, H)


def _pair_from_field(path, cfg) -> PathPair:
    H = read_field(path)
    return PathPair(integrate_flow(H, cfg["steps"]), H, cfg["steps"], None, label=str(path))


def cmd_flow(cfg, report):
    (path,) = _need_inputs(cfg, 1)
    H = read_field(path)
    flow = integrate_flow(H, cfg["steps"])
    exclude = _exclude(cfg, H.domain)
    report.put("area_audit", area_audit(flow, exclude))
    report.put("inverse_audit", inverse_audit(flow, H, cfg["steps"]))
    if cfg["out"]:
        write_flow(cfg["out"], flow)
        report.put("flow_file", cfg["out"])


def cmd_dham(cfg, report):
    a, b = (_pair_from_field(p, cfg) for p in _need_inputs(cfg, 2))
    exclude = _exclude(cfg, a.ham.domain)
    hof = hofer_dist(a, b)
    dbar = dbar_paths(a.path, b.path, exclude)
    report.put("exclude_radius", exclude)
    report.put("hofer_distance", hof)
    report.put("dbar", dbar)
    report.put("dham", hof + dbar)


def _write_convergence(report: Report, conv):
    report.put("n", conv.n)
    report.put("exclude_radius", conv.exclude_radius)
    for key, verdict in conv.verdicts.items():
        report.put(f"cauchy_{key}", verdict)
    report.table("hofer_norms", ["label", "hofer_norm"], list(zip(conv.labels, conv.hofer_norms)))
    report.table(
        "ev1_trace",
        ["from", "to", "dbar_time1"],
        [(conv.labels[i], conv.labels[i + 1], v) for i, v in enumerate(conv.ev1_trace)],
    )
    for key, mat in (("dbar", conv.dbar_matrix), ("hofer", conv.hofer_matrix), ("dham", conv.dham_matrix)):
        report.table(f"{key}_matrix", ["label"] + [str(x) for x in conv.labels], [[lab] + list(row) for lab, row in zip(conv.labels, mat)])
        report.table(f"{key}_modulus", ["k", "modulus"], list(enumerate(conv.modulus[key])))


def _check_strict(cfg, conv):
    if cfg["strict"] and not conv.verdicts["dham"]:
        raise NotCauchyError(f"sequence is not dham-Cauchy at tau = {cfg['tau']:g}")


def cmd_cauchy(cfg, report):
    seq = [_pair_from_field(p, cfg) for p in _need_inputs(cfg, at_least=1)]
    conv = cauchy_report(seq, cfg["tau"], _exclude(cfg, seq[0].ham.domain))
    conv.check_invariants()
    _write_convergence(report, conv)
    _check_strict(cfg, conv)


def _load_flow(cfg):
    (path,) = _need_inputs(cfg, 1)
    return read_flow(path)


def cmd_massflow(cfg, report):
    flow = _load_flow(cfg)
    a, b = rotation_vector(flow)
    report.put("rotation_x", a)
    report.put("rotation_y", b)
    report.table("rotation_vector", ["component", "value"], [("x", a), ("y", b)])


def cmd_flux(cfg, report):
    flow = attach_inverse(_load_flow(cfg))
    fx, fy = flux(flow)
    report.put("flux_x", fx)
    report.put("flux_y", fy)
    report.put("duality_gap", duality_check(flow))
    report.table("flux", ["component", "value"], [("x", fx), ("y", fy)])


def cmd_flatten(cfg, report):
    (path,) = _need_inputs(cfg, 1)
    H = read_field(path)
    res = flatten(H, cfg["eps_target"])
    report.put("plateau_eps", res.eps)
    report.put("hofer_distance", res.distance)
    report.put("linfty_gap", linfty_gap(H, res.hamiltonian))
    report.put("plateau_oscillation", plateau_oscillation(H, res.zeta))
    _osc_table(report, res.hamiltonian, "osc_flattened")
    if cfg["out"]:
        write_field(cfg["out"], res.hamiltonian)
        report.put("field_file", cfg["out"])


def _time1_map(cfg):
    if cfg["inputs"]:
        H = read_field(_need_inputs(cfg, 1)[0])
        return integrate_flow(H, cfg["steps"], inverse=False).final()
    dom = Domain.torus(cfg["nx"], cfg["ny"])
    H = gallery.random_hamiltonian(cfg["seed"], dom, cfg["nt"])
    return integrate_flow(H, cfg["steps"], inverse=False).final()


def cmd_fixedpoint(cfg, report):
    phi = _time1_map(cfg)
    dist, (x, y) = min_displacement(phi, refine=True, exclude_radius=_exclude(cfg, phi.domain))
    report.put("min_displacement", dist)
    report.put("argmin_x", x)
    report.put("argmin_y", y)


# -- gallery -------------------------------------------------------------------


def _gallery_example42(cfg, report, kind):
    dom = Domain.disc(cfg["nx"], cfg["ny"])
    n_list = cfg["n_list"] or [4, 8, 16, 32, 64]
    profile = gallery.RotationProfile(kind)
    seq = gallery.example42_sequence(profile, n_list, dom, cfg["nt"], cfg["steps"], audit_tol=None)
    exclude = _exclude(cfg, dom)
    conv = cauchy_report(seq, cfg["tau"], exclude, labels=[str(n) for n in n_list])
    conv.check_invariants()
    report.put("profile", kind)
    report.put("cutoff_eps", profile.cutoff_eps)
    report.put("ideal_norm", profile.norm())
    _write_convergence(report, conv)
    limit = gallery.rotation_map(profile, dom)
    report.put("limit_c0_error", c0_distance_maps(seq[-1].path.final(), limit, exclude))
    rows = [(n, h, profile.mollified(n).norm(), float(np.log(n))) for n, h in zip(n_list, conv.hofer_norms)]
    report.table("norm_growth", ["n", "hofer_norm", "analytic_norm", "log_n"], rows)
    radii = 1.0 / np.arange(2, 65)
    report.table("difference_quotients", ["radius", "quotient"], list(zip(radii, gallery.difference_quotients(profile, radii))))
    if kind == "sqrt_inverse":
        _check_strict(cfg, conv)


def _gallery_transport(cfg, report):
    dom = Domain.torus(cfg["nx"], cfg["ny"])
    n_list = cfg["n_list"] or [4, 8, 16, 32]
    x0, y0 = np.array([0.25, 0.5]), np.array([0.75, 0.5])
    seq = gallery.transport_sequence(x0, y0, n_list, dom, cfg["nt"], cfg["steps"])
    rows = []
    from .flow import apply_map

    for n, pair in zip(n_list, seq):
        px, py = apply_map(pair.path.final(), np.array([x0[0]]), np.array([x0[1]]))
        miss = float(dom.displacement(px[0] - y0[0], py[0] - y0[1]))
        rows.append((n, hofer_norm(pair.ham), 2.0 / n, miss))
    report.put("x0", tuple(x0))
    report.put("y0", tuple(y0))
    report.table("transport", ["n", "hofer_norm", "bound_2_over_n", "endpoint_miss"], rows)


def _gallery_shear(cfg, report):
    dom = Domain.torus(cfg["nx"], cfg["ny"])
    H = gallery.shear_hamiltonian(dom, cfg["nt"])
    flow = integrate_flow(H, cfg["steps"])
    gx, gy = dom.coords
    ex, ey = gallery.shear_exact(gx, gy, 1.0)
    report.put("hofer_norm", hofer_norm(H))
    report.put("closed_form_error", float(np.max(np.hypot(flow.image_x[-1] - ex, flow.image_y[-1] - ey))))
    report.put("area_audit", area_audit(flow))
    rv = rotation_vector(flow)
    fl = flux(flow)
    report.table("invariants", ["quantity", "x", "y"], [("rotation_vector", *rv), ("flux", *fl)])
    _osc_table(report, H)


def _gallery_translation(cfg, report):
    dom = Domain.torus(cfg["nx"], cfg["ny"])
    flow = gallery.translation(dom, 0.3, 0.7, cfg["nt"])
    rv = rotation_vector(flow)
    fl = flux(flow)
    report.put("duality_gap", duality_check(flow))
    report.put("min_displacement", min_displacement(gallery.translation(dom, 0.3, 0.0, 2).final())[0])
    report.table("invariants", ["quantity", "x", "y"], [("rotation_vector", *rv), ("flux", *fl)])


GALLERY = {
    "example42-sqrt": lambda cfg, rep: _gallery_example42(cfg, rep, "sqrt_inverse"),
    "example42-div": lambda cfg, rep: _gallery_example42(cfg, rep, "square_inverse"),
    "transport": _gallery_transport,
    "shear": _gallery_shear,
    "translation": _gallery_translation,
}


def cmd_gallery(cfg, report):
    item = cfg["item"]
    if item not in GALLERY:
        raise ConfigError(f"unknown gallery item {item!r}; choose from {', '.join(GALLERY)}")
    report.put("item", item)
    GALLERY[item](cfg, report)
    if cfg["out"] and item in ("shear", "translation"):
        dom = Domain.torus(cfg["nx"], cfg["ny"])
        if item == "shear":
            flow = integrate_flow(gallery.shear_hamiltonian(dom, cfg["nt"]), cfg["steps"], inverse=False)
        else:
            flow = gallery.translation(dom, 0.3, 0.7, cfg["nt"])
        write_flow(cfg["out"], flow)


HANDLERS = {
    "norm": cmd_norm,
    "flow": cmd_flow,
    "dham": cmd_dham,
    "cauchy": cmd_cauchy,
    "massflow": cmd_massflow,
    "flux": cmd_flux,
    "flatten": cmd_flatten,
    "gallery": cmd_gallery,
    "fixedpoint": cmd_fixedpoint,
}


# -- entry point ---------------------------------------------------------------


def _epilog() -> str:
    lines = ["exit codes:"]
    lines += [f"  {code}  {text}" for code, text in EXIT_CODES.items()]
    lines.append("gallery items: " + ", ".join(GALLERY))
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hamtopo",
        description="Hofer-norm calculus, Hamiltonian topology and invariants on the torus and disc.",
        epilog=_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("item_pos", nargs="?", metavar="ITEM", help="gallery item (same as --item)")
    p.add_argument("--domain", choices=("torus", "torus2", "disc", "disc2"))
    p.add_argument("--nx", type=int)
    p.add_argument("--ny", type=int)
    p.add_argument("--nt", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--tau", type=float)
    p.add_argument("--in", dest="inputs", action="append", metavar="FILE", help="input field or flow file (repeatable)")
    p.add_argument("--out", metavar="FILE", help="output field or flow file")
    p.add_argument("--report", metavar="FILE", help="write the report here instead of stdout")
    p.add_argument("--item", choices=tuple(GALLERY))
    p.add_argument("--n-list", "--n", dest="n_list", metavar="N1,N2,...")
    p.add_argument("--eps-target", dest="eps_target", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--exclude-radius", dest="exclude_radius", type=float)
    p.add_argument("--strict", action="store_true", default=None, help="exit 6 when a sequence is not dham-Cauchy")
    p.add_argument("--config", metavar="FILE", help="key = value defaults; flags override")
    return p


def run(cfg: dict) -> Report:
    public = {k: v for k, v in cfg.items() if k not in ("command",)}
    report = Report(public)
    report.header.insert(0, ("command", cfg["command"]))
    HANDLERS[cfg["command"]](cfg, report)
    return report


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        report = run(cfg)
    except HamtopoError as exc:
        print(f"hamtopo: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # noqa: BLE001 - reported as an internal error
        print(f"hamtopo: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    text = report.to_text()
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
