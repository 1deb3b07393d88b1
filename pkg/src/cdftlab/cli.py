"""Batch CLI: load fields and scenarios, run validations, constructions,
audits, solves and Legendre searches, and emit one JSON report per run.

Exit codes: 0 success, 1 validation verdict false, 2 numerical failure
(curl gate, path mismatch, unsupported current, non-convergence),
3 I/O or configuration error. Reports carry the command echo, library
version, input digests, every functional value and inequality audit
produced, and the wall time; byte-identical reruns are guaranteed for
identical config and inputs except for the wall-time field.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .convexlab import (
    convexity_probe,
    envelope_audit,
    euler_lagrange_residual,
    f_legendre_sampled,
    family_from_spec,
)
from .density import (
    low_density_cell_count,
    pairing_energy,
    schwarz_audit,
    validate_pair,
    vorticity,
)
from .detbuilder import det_report, fejer, kinetic_tolerance, q_exact_n1
from .errors import CurlTooLarge, NonConvergence, PathMismatch, UnsupportedCurrent
from .fieldio import read_pair, write_field, write_pair
from .functionals import (
    corollary15_audit,
    hartree,
    hls_audit,
    j0,
    j1,
    j_lambda,
    q_upper_bound_curlfree,
    sobolev_chain_audit,
)
from .plotting import line_plot_svg
from .reports import BoundsReport, audit, finite_value, write_json_atomic
from .solver import (
    densities_from_state,
    discretize,
    ground_state,
    load_scenario,
    variational_audit,
)

TOL_FLAGS = ("curl", "mass", "neg", "kin", "orth", "eig", "audit", "path", "search")


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


def build_parser():
    p = argparse.ArgumentParser(
        prog="cdft",
        description="Current-density functional audits at desk scale.",
    )
    p.add_argument("command", choices=[
        "validate", "vorticity", "build-det", "bounds", "groundstate",
        "variational", "legendre", "envelope", "euler", "probe",
    ])
    p.add_argument("--input", action="append", default=[],
                   help="input path (pair manifest or scenario JSON); repeatable")
    p.add_argument("--output", required=True, help="report JSON path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=None, help="particle number override")
    p.add_argument("--lambda", dest="lam", type=float, default=0.5)
    p.add_argument("--family", default=None, help="potential family spec JSON")
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--grid", type=int, default=None,
                   help="override scenario cell count")
    p.add_argument("--plot", action="store_true",
                   help="emit SVG plots next to the report")
    for name in TOL_FLAGS:
        p.add_argument(f"--tol.{name}", dest=f"tol_{name}", type=float,
                       default=None, help=f"override the {name} tolerance")
    return p


def _tolerances(args):
    return {
        name: getattr(args, f"tol_{name}")
        for name in TOL_FLAGS
        if getattr(args, f"tol_{name}") is not None
    }


def _require_inputs(args, count, what):
    if len(args.input) < count:
        raise FileNotFoundError(f"{args.command} needs --input {what}")
    for path in args.input:
        if not os.path.exists(path):
            raise FileNotFoundError(f"input not found: {path}")


def _load_pair(args, idx=0):
    pair, n, _ = read_pair(args.input[idx])
    if args.n is not None:
        n = args.n
    return pair, n


def _scenario(args, idx=0):
    payload = _load_json(args.input[idx])
    if args.grid is not None:
        payload.setdefault("grid", {})["cells"] = args.grid
    return load_scenario(payload)


def cmd_validate(args):
    _require_inputs(args, 1, "a pair manifest")
    pair, n = _load_pair(args)
    report = validate_pair(pair, n)
    payload = {"validation": report.as_dict()}
    return payload, 0 if report.verdict else 1


def cmd_vorticity(args):
    _require_inputs(args, 1, "a pair manifest")
    pair, n = _load_pair(args)
    validate_pair(pair, n)
    w = vorticity(pair)
    out_dir = os.path.dirname(os.path.abspath(args.output))
    field_path = os.path.join(out_dir, "vorticity.fld")
    write_field(field_path, w)
    payload = {
        "vorticity": {
            "max_abs": float(np.abs(w.components).max()),
            "field": os.path.basename(field_path),
            "floored_cells": low_density_cell_count(pair),
        }
    }
    return payload, 0


def cmd_build_det(args):
    _require_inputs(args, 1, "a pair manifest")
    pair, n = _load_pair(args)
    rep = validate_pair(pair, n)
    if not rep.verdict:
        return {"validation": rep.as_dict()}, 1
    det = det_report(pair, n)
    tol_kin = args.tol_kin if args.tol_kin is not None else kinetic_tolerance(
        pair.grid, max(abs(det.t_direct), abs(det.t_formula))
    )
    payload = {"determinant": det.as_dict()}
    payload["audits"] = [
        audit("kinetic_two_path", abs(det.t_direct - det.t_formula), tol_kin,
              0.0).as_dict(),
        audit("det_kinetic_bound", det.t_formula, det.t_bound_rhs,
              args.tol_audit or 1e-8 * max(1.0, det.t_bound_rhs)).as_dict(),
    ]
    return payload, 0


def cmd_bounds(args):
    _require_inputs(args, 1, "a pair manifest")
    pair, n = _load_pair(args)
    rep = validate_pair(pair, n)
    bounds = BoundsReport(metadata={"n": n, "validation": rep.as_dict()})
    if not rep.verdict:
        return {"bounds": bounds.as_dict()}, 1
    lam = args.lam
    bounds.add_value(finite_value("J0", j0(pair)))
    bounds.add_value(finite_value("J1", j1(pair.rho)))
    bounds.add_value(j_lambda(pair, lam))
    bounds.add_value(finite_value("Hartree", hartree(pair.rho)))
    bounds.add_audit(hls_audit(pair.rho, tolerance=args.tol_audit))
    bounds.extend_audits(sobolev_chain_audit(pair.rho, n, tolerance=args.tol_audit))
    # curl-gated bounds: CurlTooLarge propagates to exit 2
    bounds.add_value(finite_value("Qn1" if n == 1 else "Q_upper",
                                  q_upper_bound_curlfree(pair, n)))
    bounds.extend_audits(corollary15_audit(pair, n, lam, tolerance=args.tol_audit))
    det = det_report(pair, n)
    bounds.add_value(finite_value("Texact", det.t_formula))
    bounds.add_value(finite_value("Exc", det.exc))
    bounds.add_audit(det.g_bound)
    bounds.metadata["determinant"] = det.as_dict()
    bounds.metadata["fejer_at_zero"] = [fejer(k, 0.0) for k in range(1, 7)]
    payload = {"bounds": bounds.as_dict()}
    if args.plot:
        _plot_audit_margins(args.output, bounds)
    return payload, 0


def _plot_audit_margins(report_path, bounds):
    margins = [a.margin for a in bounds.audits]
    if not margins:
        return
    svg = os.path.splitext(report_path)[0] + "_margins.svg"
    line_plot_svg(svg, list(range(len(margins))), {"margin": margins},
                  title="audit margins")


def cmd_groundstate(args):
    _require_inputs(args, 1, "a scenario JSON")
    grid, pot, boundary = _scenario(args)
    state = ground_state(discretize(pot.v, pot.a, boundary))
    pair = densities_from_state(state)
    out_dir = os.path.dirname(os.path.abspath(args.output))
    pair_dir = os.path.join(out_dir, "ground_pair")
    manifest = write_pair(pair_dir, pair, 1)
    payload = {
        "groundstate": {
            "e0": state.e0,
            "gap": state.gap,
            "residual": state.residual,
            "degenerate": state.degenerate_flag,
            "node_cells": state.node_cells,
            "pair_manifest": os.path.relpath(manifest, out_dir),
        }
    }
    if args.plot:
        svg = os.path.splitext(args.output)[0] + "_density.svg"
        x = grid.axis_coords(0)
        line_plot_svg(svg, x, {"rho": list(pair.rho.values),
                               "v": list(pot.v.values)}, title="ground state")
    return payload, 0


def cmd_variational(args):
    _require_inputs(args, 2, "a pair manifest and a scenario JSON")
    pair, n = _load_pair(args, 0)
    validate_pair(pair, n)
    _, pot, boundary = _scenario(args, 1)
    a = variational_audit(pair, pot, boundary, tolerance=args.tol_audit)
    payload = {
        "variational": a.as_dict(),
        "pairing_energy": pairing_energy(pair, pot),
        "q_oracle": q_exact_n1(pair),
        "schwarz": [s.as_dict() for s in schwarz_audit(pair, pot)],
    }
    return payload, 0 if a.passed else 1


def _family(args, grid):
    if args.family is None:
        raise FileNotFoundError("this command needs --family <spec JSON>")
    spec = _load_json(args.family)
    if args.budget is not None:
        spec["budget"] = args.budget
    if args.seed is not None:
        spec.setdefault("seed", args.seed)
    return family_from_spec(spec, grid)


def cmd_legendre(args):
    _require_inputs(args, 1, "a pair manifest")
    pair, n = _load_pair(args)
    validate_pair(pair, n)
    fam = _family(args, pair.grid)
    res = f_legendre_sampled(pair, fam)
    q = q_exact_n1(pair)
    payload = {
        "legendre": res.as_dict(),
        "q_oracle": q,
        "audits": [
            audit("legendre_F_le_Q", res.f_lower, q,
                  args.tol_audit or 1e-10 * max(1.0, abs(q))).as_dict()
        ],
    }
    if args.plot and res.trace:
        svg = os.path.splitext(args.output)[0] + "_trace.svg"
        line_plot_svg(svg, [t[0] for t in res.trace],
                      {"best": [t[1] for t in res.trace]},
                      title="legendre ascent trace")
    return payload, 0


def cmd_envelope(args):
    _require_inputs(args, 2, "two or more pair manifests")
    pairs = []
    for i in range(len(args.input)):
        pair, n = _load_pair(args, i)
        validate_pair(pair, n)
        pairs.append(pair)
    fam = _family(args, pairs[0].grid)
    audits = envelope_audit(pairs, fam)
    payload = {"envelope": [a.as_dict() for a in audits]}
    code = 0 if all(a.passed for a in audits) else 1
    return payload, code


def cmd_euler(args):
    _require_inputs(args, 2, "a pair manifest and a scenario JSON")
    pair, n = _load_pair(args, 0)
    validate_pair(pair, n)
    _, pot, _ = _scenario(args, 1)
    res = euler_lagrange_residual(pair, pot)
    return {"euler_lagrange": res.as_dict()}, 0


def cmd_probe(args):
    _require_inputs(args, 2, "two pair manifests")
    pa, na = _load_pair(args, 0)
    pb, nb = _load_pair(args, 1)
    validate_pair(pa, na)
    validate_pair(pb, nb)
    lam_grid = [k / 10.0 for k in range(11)]
    margin, margins = convexity_probe(
        pa, pb, lambda p: j_lambda(p, args.lam).as_float(), lam_grid
    )
    payload = {
        "probe": {
            "evaluator": f"Jlambda(lambda={args.lam})",
            "lambda_grid": lam_grid,
            "margins": margins,
            "min_margin": margin,
        }
    }
    return payload, 0


HANDLERS = {
    "validate": cmd_validate,
    "vorticity": cmd_vorticity,
    "build-det": cmd_build_det,
    "bounds": cmd_bounds,
    "groundstate": cmd_groundstate,
    "variational": cmd_variational,
    "legendre": cmd_legendre,
    "envelope": cmd_envelope,
    "euler": cmd_euler,
    "probe": cmd_probe,
}


def main(argv=None):
    threads = os.environ.get("CDFT_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)
    args = build_parser().parse_args(argv)
    started = time.time()
    try:
        payload, code = HANDLERS[args.command](args)
    except (CurlTooLarge, PathMismatch, UnsupportedCurrent, NonConvergence) as exc:
        payload, code = {"error": {"type": type(exc).__name__,
                                   "message": str(exc)}}, 2
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        payload, code = {"error": {"type": type(exc).__name__,
                                   "message": str(exc)}}, 3
    report = {
        "command": args.command,
        "version": __version__,
        "config": {
            "seed": args.seed,
            "n": args.n,
            "lambda": args.lam,
            "budget": args.budget,
            "grid": args.grid,
            "tolerance_overrides": _tolerances(args),
        },
        "inputs": [
            {"path": p, "sha256": _sha256(p)}
            for p in args.input
            if os.path.exists(p)
        ],
        "exit_code": code,
        "wall_time_s": round(time.time() - started, 6),
    }
    report.update(payload)
    try:
        write_json_atomic(args.output, report)
    except OSError as exc:
        print(f"cannot write report: {exc}", file=sys.stderr)
        return 3
    return code


if __name__ == "__main__":
    sys.exit(main())
