"""Command line interface: ``k3e <command> [options]``.

Every report is a JSON document (or a CSV table with ``--csv``) whose header
records the full run configuration, so a report can be reproduced from its
own header.  Errors are reported as JSON on stderr with a machine-readable
code; the exit status is 0 on success, 2 for invalid input and 3 when a
numerical tolerance check fails.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .binaryforms import DegreeError, P1Point
from .elliptic import (
    DEFAULT_TOL_EIS,
    DEFAULT_TOL_WP,
    ConvergenceError,
    DegenerateCubicError,
    ResourceLimitError,
    eisenstein_g2,
    eisenstein_g3,
    is_pole,
    wp_pair,
)
from .eisenman import (
    CollinearityError,
    DegenerateJacobianError,
    vanishing_certificate,
)
from .fibration import (
    DegenerateFibrationError,
    NonMinimalError,
    SectionPointError,
    SingularFiberError,
    WeierstrassFibration,
    fiber_curve,
    fiber_lattice,
    kodaira_table_json,
    kodaira_type,
    random_fibration,
)
from .k3lattice import (
    DegenerateLatticeError,
    IntegralLattice,
    PeriodPoint,
    contains_hyperbolic_plane,
    determinant,
    lattice_L,
    neron_severi,
    signature,
)

log = logging.getLogger("k3e")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

#: residual tolerance for the curve equation, relative to 1 + |p|^3
DEFAULT_TOL_RESIDUAL = 1e-8
#: relative tolerance for the Eisenstein round trip
DEFAULT_TOL_ROUNDTRIP = 1e-6
#: allowed deviation of the certificate slope from -1
DEFAULT_TOL_SLOPE = 1e-6


class CliError(Exception):
    def __init__(self, code: str, message: str, exit_code: int = EXIT_VALIDATION):
        super().__init__(message)
        self.code = code
        self.message = message
        self.exit_code = exit_code


@dataclass(frozen=True)
class RunConfig:
    command: str
    input: str | None = None
    seed: int = 0
    t: str = "0"
    z: str = "0.3+0.2j"
    rmin: float = 10.0
    rmax: float = 1e4
    rpoints: int = 20
    tol_wp: float = DEFAULT_TOL_WP
    tol_eis: float = DEFAULT_TOL_EIS
    tol_residual: float = DEFAULT_TOL_RESIDUAL
    output: str | None = None
    format: str = "json"

    def __post_init__(self):
        for name in ("tol_wp", "tol_eis", "tol_residual"):
            if not getattr(self, name) > 0:
                raise CliError("invalid-config", f"{name.replace('_', '-')} must be positive")
        if not 0 < self.rmin < self.rmax:
            raise CliError("invalid-config", "need 0 < rmin < rmax")
        if self.rpoints < 2:
            raise CliError("invalid-config", "rpoints must be at least 2")

    @property
    def schedule(self) -> np.ndarray:
        return np.logspace(math.log10(self.rmin), math.log10(self.rmax), self.rpoints)


# --------------------------------------------------------------------------
# helpers


def _c(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _load_json(path: str | None):
    if path is None:
        return None
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise CliError("io-error", f"cannot read {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise CliError("invalid-json", f"{path}: {exc}") from exc


def _fibration(cfg: RunConfig) -> WeierstrassFibration:
    obj = _load_json(cfg.input)
    if obj is None:
        log.info("no --input: random fibration from seed %d", cfg.seed)
        return random_fibration(np.random.default_rng(cfg.seed))
    return WeierstrassFibration.from_json(obj)


def _point(text: str) -> P1Point:
    try:
        return P1Point.parse(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise CliError("invalid-argument", f"cannot parse base point {text!r}: {exc}") from exc


def _complex(text: str, name: str) -> complex:
    try:
        return complex(text.replace(" ", ""))
    except ValueError as exc:
        raise CliError("invalid-argument", f"cannot parse {name} {text!r}") from exc


def _locus(X: WeierstrassFibration) -> list:
    return [{"t": p.to_json(), "multiplicity": m} for p, m in X.singular_locus]


# --------------------------------------------------------------------------
# commands; each returns (report body, csv rows)


def cmd_discriminant(cfg: RunConfig):
    X = _fibration(cfg)
    body = {
        "delta": X.delta.to_json(),
        "singular_locus": _locus(X),
        "multiplicity_sum": X.multiplicity_sum,
        "degree": X.delta.degree,
    }
    if X.multiplicity_sum != X.delta.degree:
        body["error"] = "multiplicity sum differs from the discriminant degree"
        return body, None, EXIT_NUMERICAL
    rows = [["t_re", "t_im", "multiplicity"]]
    for p, m in X.singular_locus:
        rows.append([*_affine_or_inf(p), m])
    return body, rows, EXIT_OK


def _affine_or_inf(p: P1Point):
    if p.is_infinity:
        return ["inf", "inf"]
    u = p.coordinate("s")
    return [repr(u.real), repr(u.imag)]


def cmd_fibers(cfg: RunConfig):
    X = _fibration(cfg)
    fibers = []
    rows = [["t_re", "t_im", "multiplicity", "kodaira", "ord_g2", "ord_g3", "ord_delta"]]
    for p, m in X.singular_locus:
        lab = kodaira_type(X, p)
        fibers.append({"t": p.to_json(), "multiplicity": m, **lab.to_json()})
        rows.append([*_affine_or_inf(p), m, lab.label, *lab.orders])
    euler = sum(kodaira_type(X, p).euler_number for p, _ in X.singular_locus)
    return {"fibers": fibers, "euler_number_sum": euler}, rows, EXIT_OK


def cmd_periods(cfg: RunConfig):
    X = _fibration(cfg)
    t = _point(cfg.t)
    curve = fiber_curve(X, t)
    lat = fiber_lattice(X, t)
    g2 = eisenstein_g2(lat, cfg.tol_eis)
    g3 = eisenstein_g3(lat, cfg.tol_eis)
    scale = max(abs(curve.g2), abs(curve.g3) ** (2 / 3), 1e-300)
    err = max(abs(g2.value - curve.g2) / max(abs(curve.g2), scale), abs(g3.value - curve.g3) / max(abs(curve.g3), scale ** 1.5))
    body = {
        "t": t.to_json(),
        "g2": _c(curve.g2),
        "g3": _c(curve.g3),
        "omega1": _c(lat.omega1),
        "omega2": _c(lat.omega2),
        "tau": _c(lat.tau),
        "g2_lattice": _c(g2.value),
        "g3_lattice": _c(g3.value),
        "roundtrip_error": err,
    }
    rows = [["quantity", "re", "im"]] + [[k, *body[k]] for k in ("omega1", "omega2", "tau", "g2_lattice", "g3_lattice")]
    return body, rows, EXIT_OK if err <= DEFAULT_TOL_ROUNDTRIP else EXIT_NUMERICAL


def cmd_wp(cfg: RunConfig):
    X = _fibration(cfg)
    t = _point(cfg.t)
    z = _complex(cfg.z, "z")
    curve = fiber_curve(X, t)
    lat = fiber_lattice(X, t)
    if is_pole(z, lat):
        raise CliError("section-point", "z is a lattice point: F is the section point [0:1:0]")
    p, dp = wp_pair(z, lat, cfg.tol_wp)
    res = abs(dp * dp - (4 * p ** 3 - curve.g2 * p - curve.g3)) / (1 + abs(p) ** 3)
    body = {"t": t.to_json(), "z": _c(z), "wp": _c(p), "wp_prime": _c(dp), "residual": res}
    rows = [["z_re", "z_im", "wp_re", "wp_im", "wp_prime_re", "wp_prime_im", "residual"],
            [*_c(z), *_c(p), *_c(dp), res]]
    return body, rows, EXIT_OK if res <= cfg.tol_residual else EXIT_NUMERICAL


def cmd_certify(cfg: RunConfig):
    X = _fibration(cfg)
    t = _point(cfg.t)
    z = _complex(cfg.z, "z")
    cert = vanishing_certificate(X, z, t, cfg.schedule, tol=cfg.tol_wp)
    body = cert.to_json()
    rows = [["R", "bound"]] + [[repr(float(R)), repr(float(b))] for R, b in cert.schedule]
    ok = cert.is_decreasing() and abs(cert.decay_exponent + 1) <= DEFAULT_TOL_SLOPE
    return body, rows, EXIT_OK if ok else EXIT_NUMERICAL


def _lattice_input(cfg: RunConfig) -> IntegralLattice:
    obj = _load_json(cfg.input)
    if obj is None:
        return lattice_L()
    return IntegralLattice.from_json(obj)


def cmd_lattice_sig(cfg: RunConfig):
    lat = _lattice_input(cfg)
    body = {"rank": lat.rank, "signature": list(signature(lat)), "determinant": determinant(lat), "even": lat.is_even}
    rows = [["rank", "positive", "negative", "determinant", "even"],
            [lat.rank, *body["signature"], body["determinant"], lat.is_even]]
    return body, rows, EXIT_OK


def cmd_lattice_ns(cfg: RunConfig):
    obj = _load_json(cfg.input)
    if obj is None:
        raise CliError("missing-input", "lattice ns needs --input with a period point")
    omega = PeriodPoint.from_json(obj)
    ns = neron_severi(omega)
    body = {"rank": ns.rank, "lattice": ns.to_json()}
    if ns.rank:
        body["signature"] = list(signature(ns))
        body["determinant"] = determinant(ns)
    rows = [["basis_index", *range(len(ns.embedding[0]) if ns.rank else 0)]]
    for i, row in enumerate(ns.embedding if ns.rank else []):
        rows.append([i, *[int(v) for v in row]])
    return body, rows, EXIT_OK


def cmd_lattice_contains_u(cfg: RunConfig):
    lat = _lattice_input(cfg)
    res = contains_hyperbolic_plane(lat)
    body = res.to_json()
    if res.found:
        g = lat.gram
        e, f = res.e, res.f

        def pr(a, b):
            return int(sum(a[i] * int(g[i][j]) * b[j] for i in range(lat.rank) for j in range(lat.rank)))

        body["pairings"] = {"ee": pr(e, e), "ff": pr(f, f), "ef": pr(e, f)}
    rows = [["found", "structural", "reason"], [res.found, res.structural, res.reason or ""]]
    return body, rows, EXIT_OK


COMMANDS = {
    "discriminant": cmd_discriminant,
    "fibers": cmd_fibers,
    "periods": cmd_periods,
    "wp": cmd_wp,
    "certify": cmd_certify,
    "lattice sig": cmd_lattice_sig,
    "lattice ns": cmd_lattice_ns,
    "lattice contains-u": cmd_lattice_contains_u,
}


# --------------------------------------------------------------------------
# output


def _header(cfg: RunConfig) -> dict:
    return {"tool": "k3e", "version": __version__, "config": dataclasses.asdict(cfg)}


def render(cfg: RunConfig, body: dict, rows) -> str:
    if cfg.format == "csv":
        if rows is None:
            raise CliError("no-csv", f"command {cfg.command!r} has no tabular output")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerows(rows)
        return buf.getvalue()
    doc = {"header": _header(cfg), "result": body}
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=True) + "\n"


_ERRORS = (
    (DegreeError, "degree"),
    (DegenerateFibrationError, "degenerate-discriminant"),
    (SingularFiberError, "singular-fiber"),
    (SectionPointError, "section-point"),
    (NonMinimalError, "non-minimal"),
    (DegenerateCubicError, "singular-curve"),
    (DegenerateLatticeError, "degenerate-lattice"),
)
_NUMERICAL = (
    (ConvergenceError, "convergence"),
    (ResourceLimitError, "resource-limit"),
    (DegenerateJacobianError, "degenerate-jacobian"),
    (CollinearityError, "collinearity"),
)


def _classify(exc: Exception) -> CliError:
    if isinstance(exc, CliError):
        return exc
    for cls, code in _NUMERICAL:
        if isinstance(exc, cls):
            return CliError(code, str(exc), EXIT_NUMERICAL)
    for cls, code in _ERRORS:
        if isinstance(exc, cls):
            return CliError(code, str(exc))
    if isinstance(exc, (ValueError, TypeError, KeyError, IndexError, ZeroDivisionError)):
        return CliError("invalid-input", f"{type(exc).__name__}: {exc}")
    raise exc


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("usage", message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="fibration, lattice or period-point JSON file")
    common.add_argument("--seed", type=int, default=0, help="seed for the random fibration used without --input")
    common.add_argument("--t", default="0", help="base point: 'inf', a complex number or 's:t'")
    common.add_argument("--z", default="0.3+0.2j", help="fiber coordinate z")
    common.add_argument("--rmin", type=float, default=10.0)
    common.add_argument("--rmax", type=float, default=1e4)
    common.add_argument("--rpoints", type=int, default=20)
    common.add_argument("--tol-wp", type=float, default=DEFAULT_TOL_WP)
    common.add_argument("--tol-eis", type=float, default=DEFAULT_TOL_EIS)
    common.add_argument("--output", help="write the report here instead of stdout")
    fmt = common.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="format", action="store_const", const="json", help="JSON report (default)")
    fmt.add_argument("--csv", dest="format", action="store_const", const="csv", help="CSV table")
    common.set_defaults(format="json")

    parser = _Parser(prog="k3e", description="Weierstrass elliptic K3 toolkit")
    parser.add_argument("--dump-kodaira-table", action="store_true", help="print the Kodaira lookup table and exit")
    parser.add_argument("--version", action="version", version=f"k3e {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name, text in (
        ("discriminant", "discriminant coefficients and the singular locus"),
        ("fibers", "Kodaira types of the singular fibers"),
        ("periods", "period lattice of the fiber over --t"),
        ("wp", "p and p' at --z on the fiber over --t"),
        ("certify", "Eisenman vanishing certificate at (--z, --t)"),
    ):
        sub.add_parser(name, parents=[common], help=text)
    lat = sub.add_parser("lattice", help="lattice computations")
    lsub = lat.add_subparsers(dest="lattice_command", parser_class=_Parser)
    lsub.add_parser("sig", parents=[common], help="rank, signature, determinant (default: the K3 lattice)")
    lsub.add_parser("ns", parents=[common], help="Neron-Severi lattice of a period point")
    lsub.add_parser("contains-u", parents=[common], help="search for a hyperbolic plane")
    return parser


def _emit_error(err: CliError) -> int:
    sys.stderr.write(json.dumps({"error": {"code": err.code, "message": err.message}}, sort_keys=True) + "\n")
    return err.exit_code


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("K3E_LOG", "WARNING").upper(), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        if args.dump_kodaira_table:
            sys.stdout.write(json.dumps(kodaira_table_json(), sort_keys=True, indent=2) + "\n")
            return EXIT_OK
        if args.command is None:
            raise CliError("usage", "a command is required (see --help)")
        command = args.command
        if command == "lattice":
            if args.lattice_command is None:
                raise CliError("usage", "lattice needs one of: sig, ns, contains-u")
            command = f"lattice {args.lattice_command}"
        cfg = RunConfig(
            command=command, input=args.input, seed=args.seed, t=args.t, z=args.z,
            rmin=args.rmin, rmax=args.rmax, rpoints=args.rpoints, tol_wp=args.tol_wp,
            tol_eis=args.tol_eis, output=args.output, format=args.format,
        )
        log.debug("config %s", cfg)
        body, rows, status = COMMANDS[command](cfg)
        text = render(cfg, body, rows)
        if cfg.output:
            try:
                with open(cfg.output, "w", encoding="utf-8") as fh:
                    fh.write(text)
            except OSError as exc:
                raise CliError("io-error", f"cannot write {cfg.output}: {exc.strerror or exc}") from exc
        else:
            sys.stdout.write(text)
        if status != EXIT_OK:
            sys.stderr.write(json.dumps({"error": {"code": "tolerance", "message": f"{command}: tolerance check failed"}},
                                        sort_keys=True) + "\n")
        return status
    except Exception as exc:  # noqa: BLE001 - every failure becomes a structured error
        return _emit_error(_classify(exc))
