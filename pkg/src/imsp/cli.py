"""Command-line front end.

Every subcommand validates its arguments, runs one analysis and writes its
outputs next to ``--output PREFIX``: data files (CSV/JSON/PGM) whose bytes
depend only on the configuration, plus ``PREFIX.provenance.json`` holding the
version, the full configuration and the wall time.  The main JSON document is
also echoed to stdout.

Exit codes: 0 success, 2 usage or precondition error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import series as ps
from .conjugation import (
    RecurrenceSpec,
    build_transseries,
    eval_embedding,
    orbit,
    solve_poincare,
    verify_riccati,
)
from .dynamics import barrier_probe, boundary_to_csv, compute_fatou, extract_boundary, render_pgm
from .errors import NumericalError, PreconditionError
from .logistic import classify_imsp, find_branch_point, solve_superstable

DEFAULTS = {
    "order": 64,
    "classify_order": 200,
    "branchpoint_order": 128,
    "iter_cap": 5000,
    "resolution": (512, 512),
    "box": (-2.0, 3.0, -2.0, 2.0),
    "conv_threshold": 1e-6,
    "escape_threshold": 1e6,
    "n_rays": 32,
    "riccati_n": 30,
}

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 2, 3


# -- argument types ----------------------------------------------------------

def parse_complex(text: str) -> complex:
    """``"re"`` or ``"re,im"``."""
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) not in (1, 2) or not all(parts):
        raise argparse.ArgumentTypeError(f"expected 're' or 're,im', got {text!r}")
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not all(math.isfinite(v) for v in vals):
        raise argparse.ArgumentTypeError(f"non-finite value: {text!r}")
    return complex(vals[0], vals[1] if len(vals) == 2 else 0.0)


def parse_poly(text: str) -> tuple:
    """Coefficients f_2, f_3, ... separated by ';' or whitespace."""
    items = text.replace(";", " ").split()
    return tuple(parse_complex(t) for t in items)


def parse_box(text: str) -> tuple:
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("box must be 're_min,re_max,im_min,im_max'")
    try:
        box = tuple(float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad box {text!r}") from None
    if not all(math.isfinite(v) for v in box):
        raise argparse.ArgumentTypeError("box entries must be finite")
    if not (box[1] > box[0] and box[3] > box[2]):
        raise argparse.ArgumentTypeError(f"box {text!r} has zero or negative area")
    return box


def parse_resolution(text: str) -> tuple:
    parts = text.lower().replace("x", ",").split(",")
    if len(parts) == 1:
        parts = parts * 2
    try:
        nx, ny = (int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError("resolution must be 'N' or 'NX,NY'") from None
    if nx < 1 or ny < 1:
        raise argparse.ArgumentTypeError("resolution must be positive")
    return nx, ny


def _bounded_int(lo: int, hi: int | None = None):
    def conv(text: str) -> int:
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
        if v < lo or (hi is not None and v > hi):
            rng = f">= {lo}" if hi is None else f"in [{lo}, {hi}]"
            raise argparse.ArgumentTypeError(f"{v} must be {rng}")
        return v
    return conv


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"{text!r} must be positive and finite")
    return v


# -- JSON helpers ---------------------------------------------------------------

def jsonable(obj):
    """Plain JSON values: complex -> [re, im], non-finite floats -> null."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [jsonable(float(obj.real)), jsonable(float(obj.imag))]
    if isinstance(obj, (float, np.floating)):
        v = float(obj) + 0.0  # drop the sign of zero
        return v if math.isfinite(v) else None
    return obj


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


# -- subcommands ------------------------------------------------------------------
# Each returns (main JSON document, {suffix: bytes or str}).

def _spec(args) -> RecurrenceSpec:
    if args.poly is None:
        return RecurrenceSpec.logistic(args.a)
    return RecurrenceSpec(args.a, args.poly)


def cmd_conjugate(args):
    spec = _spec(args)
    pm = solve_poincare(spec, args.order)
    doc = {
        "a": pm.a, "nonlinearity": list(spec.nonlinearity), "order": args.order,
        "defect_norm": pm.defect_norm, "q_defect_norm": pm.q_defect_norm,
        "inverse_defect": pm.inverse_defect, "radius_estimate": pm.radius_estimate,
        "q_radius": pm.q_radius, "min_small_divisor": pm.min_small_divisor,
    }
    return doc, {"_phi.csv": ps.to_csv(pm.phi), "_q.csv": ps.to_csv(pm.q)}


def cmd_classify(args):
    return classify_imsp(args.a, args.order).to_json(), {}


def cmd_julia(args):
    spec = _spec(args)
    grid = compute_fatou(spec, args.box, args.resolution, args.iter_cap,
                         args.conv_threshold, args.escape_threshold)
    pts = extract_boundary(grid) if grid.component.any() else np.array([])
    status = grid.status
    doc = {
        "a": spec.a, "nonlinearity": list(spec.nonlinearity), "box": grid.box,
        "resolution": grid.resolution, "iter_cap": grid.iter_cap, "mode": args.mode,
        "members": int(grid.membership.sum()), "component_size": int(grid.component.sum()),
        "escaped": int((status == 0).sum()), "undecided": int((status == 2).sum()),
        "boundary_cells": int(len(pts)),
        "boundary_distance": float(np.min(np.abs(pts))) if len(pts) else None,
    }
    return doc, {".pgm": render_pgm(grid, args.mode), "_boundary.csv": boundary_to_csv(pts)}


def cmd_barrier(args):
    spec = _spec(args)
    pm = solve_poincare(spec, args.order)
    grid = compute_fatou(spec, args.box, args.resolution, args.iter_cap,
                         args.conv_threshold, args.escape_threshold)
    report = barrier_probe(pm, grid, args.n_rays)
    return report.to_json(), {}


def cmd_riccati(args):
    return verify_riccati(args.a, args.c, args.x0, args.n).to_json(), {}


def cmd_superstable(args):
    ss = solve_superstable(args.a, args.order, args.method)
    doc = {
        "a": ss.a, "order": ss.order, "method": ss.method, "iterations": ss.iterations,
        "residual_norm": ss.residual_norm, "radius_estimate": ss.radius_estimate,
    }
    return doc, {".csv": ps.to_csv(ss.f)}


def cmd_branchpoint(args):
    return find_branch_point(args.a, args.order, args.root_index).to_json(), {}


def cmd_transseries(args):
    spec = _spec(args)
    pm = solve_poincare(spec, args.order)
    ts = build_transseries(pm, args.C)
    value = eval_embedding(ts, args.z)
    doc = {"a": pm.a, "C": ts.C, "z": args.z, "order": args.order, "value": value,
           "sector_bound": ts.sector_bound(), "orbit_check": None}
    z = args.z
    if z.imag == 0 and z.real >= 0 and float(z.real).is_integer():
        n = int(z.real)
        x0 = eval_embedding(ts, 0)
        direct = complex(orbit(spec, x0, n)[-1])
        conj = complex(ps.evaluate(pm.phi, ts.C * pm.a ** n))
        doc["orbit_check"] = {
            "n": n, "x0": x0, "orbit_value": direct, "phi_value": conj,
            "max_pairwise_error": max(abs(value - direct), abs(value - conj), abs(direct - conj)),
        }
    return doc, {}


# -- parser -------------------------------------------------------------------------

def _defaults_table() -> str:
    rows = [f"  {k:<18} {v}" for k, v in DEFAULTS.items()]
    return "defaults:\n" + "\n".join(rows) + (
        "\n\ncomplex values are 're' or 're,im'; write --a=-2,1 when the value starts with '-'."
        "\nexit codes: 0 ok, 2 usage/precondition, 3 numerical failure.")


def _common(p: argparse.ArgumentParser, name: str):
    p.add_argument("--output", "-o", default=name, metavar="PREFIX",
                   help=f"output path prefix (default: ./{name})")


def _grid_args(p: argparse.ArgumentParser):
    p.add_argument("--poly", type=parse_poly, default=None,
                   help="f_2 f_3 ... of G = a x + f_2 x^2 + ... (default: logistic -a)")
    p.add_argument("--box", type=parse_box, default=DEFAULTS["box"],
                   help="re_min,re_max,im_min,im_max")
    p.add_argument("--resolution", type=parse_resolution, default=DEFAULTS["resolution"],
                   help="N or NX,NY")
    p.add_argument("--iter-cap", type=_bounded_int(1), default=DEFAULTS["iter_cap"])
    p.add_argument("--conv-threshold", type=_positive_float, default=DEFAULTS["conv_threshold"])
    p.add_argument("--escape-threshold", type=_positive_float,
                   default=DEFAULTS["escape_threshold"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="imsp", description="Conjugation maps, transseries embeddings and singularity "
        "analysis of one-dimensional recurrences.",
        epilog=_defaults_table(), formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"imsp {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text,
                           epilog=_defaults_table(),
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.set_defaults(func=func)
        p.add_argument("--a", type=parse_complex, required=True, help="multiplier a")
        _common(p, name)
        return p

    p = add("conjugate", cmd_conjugate, "conjugation map phi and its inverse Q")
    p.add_argument("--poly", type=parse_poly, default=None,
                   help="f_2 f_3 ... (default: logistic -a); '' gives the linear map")
    p.add_argument("--order", type=_bounded_int(2, 2000), default=DEFAULTS["order"])

    p = add("classify", cmd_classify, "IMSP verdict for the logistic map")
    p.add_argument("--order", type=_bounded_int(20, 2000), default=DEFAULTS["classify_order"])

    p = add("julia", cmd_julia, "Fatou component of the origin: PGM image and boundary CSV")
    _grid_args(p)
    p.add_argument("--mode", choices=("membership", "boundary", "iteration_shading"),
                   default="membership")

    p = add("barrier", cmd_barrier, "compare Q's radius with the distance to the Julia set")
    _grid_args(p)
    p.add_argument("--order", type=_bounded_int(20, 2000), default=DEFAULTS["order"])
    p.add_argument("--n-rays", type=_bounded_int(1, 4096), default=DEFAULTS["n_rays"])

    p = add("riccati", cmd_riccati, "closed-form check for G = a x / (1 + c x)")
    p.add_argument("--c", type=parse_complex, required=True)
    p.add_argument("--x0", type=parse_complex, required=True)
    p.add_argument("--n", type=_bounded_int(0, 100_000), default=DEFAULTS["riccati_n"])

    p = add("superstable", cmd_superstable, "Taylor series of the superstable conjugation F")
    p.add_argument("--order", type=_bounded_int(3, 2000), default=DEFAULTS["order"])
    p.add_argument("--method", choices=("matching", "contraction"), default="matching")

    p = add("branchpoint", cmd_branchpoint, "square-root branch point of F for |a| > 5")
    p.add_argument("--order", type=_bounded_int(20, 1000), default=DEFAULTS["branchpoint_order"])
    p.add_argument("--root-index", type=_bounded_int(0), default=None)

    p = add("transseries", cmd_transseries, "evaluate the analyzable embedding x(z; C)")
    p.add_argument("--poly", type=parse_poly, default=None,
                   help="f_2 f_3 ... (default: logistic -a)")
    p.add_argument("--C", type=parse_complex, required=True, help="transseries parameter")
    p.add_argument("--z", type=parse_complex, required=True, help="complex time")
    p.add_argument("--order", type=_bounded_int(2, 2000), default=DEFAULTS["order"])
    return parser


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k != "func"}


def _write(path: Path, payload):
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(payload, str):
        payload = payload.encode("utf-8")
    path.write_bytes(payload)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with exit 2
        return int(exc.code or 0)
    start = time.perf_counter()
    try:
        doc, extra = args.func(args)
    except PreconditionError as exc:
        print(f"imsp {args.subcommand}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, ArithmeticError) as exc:
        print(f"imsp {args.subcommand}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"imsp {args.subcommand}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    wall = time.perf_counter() - start

    prefix = str(args.output)
    text = dumps(doc)
    outputs = {prefix + ".json": text}
    outputs.update({prefix + suffix: data for suffix, data in extra.items()})
    for name, data in outputs.items():
        _write(Path(name), data)
    provenance = {
        "tool": "imsp", "version": __version__, "subcommand": args.subcommand,
        "config": _config(args), "wall_time_s": wall, "outputs": sorted(outputs),
    }
    _write(Path(prefix + ".provenance.json"), dumps(provenance))
    sys.stdout.write(text)
    return EXIT_OK


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
