"""Command-line front end: ``lasgap <command> ...``.

Exit codes: 0 success (or verdict true), 1 verdict false, 2 bad input.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import io
from .certify import (
    CertificateError,
    Infeasible,
    RedundantConstraintError,
    certify_ilp,
    certify_unconstrained,
    is_svc,
    no_gap_precheck,
    top_fourier,
)
from .instances import (
    FAMILIES,
    gen_empty_hull,
    gen_gapknap,
    gen_gapknap_augmented,
    gen_origin_indicator,
    scan_gapknap,
    svc_exclude,
    two_point_indicator,
)
from .lattice import LevelError
from .moment import DEFAULT_TOL, CornerForm, Instance, lasserre_check
from .speig import dense_spectrum, eigenvalues_dpr1

OUTDIR_ENV = "LASGAP_OUTDIR"


class UsageError(Exception):
    pass


def _rat(s: str) -> Fraction:
    try:
        return io.parse_rational(s)
    except io.FormatError as exc:
        raise UsageError(str(exc)) from exc


def _number(s: str) -> Fraction:
    """Rational or decimal string -> Fraction (decimals are read exactly)."""
    try:
        return Fraction(s.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"not a number: {s!r}") from exc


def _subset_arg(s: str, n: int) -> int:
    try:
        return io.parse_subset_key(s, n)
    except io.FormatError as exc:
        raise UsageError(str(exc)) from exc


def _emit(args, payload: dict, text: str) -> None:
    if getattr(args, "json", False):
        sys.stdout.write(json.dumps(payload, indent=2) + "\n")
    else:
        sys.stdout.write(text.rstrip("\n") + "\n")


def _str_or_none(x):
    return None if x is None else str(x)


# --- gen -------------------------------------------------------------------------


def cmd_gen(args) -> int:
    n = args.n
    if n is None or n < 1:
        raise UsageError("--n must be a positive integer")
    family = args.family
    cert = None
    if family == "gapknap":
        k = _rat(args.k)
        if k < 2:
            raise UsageError("--k must be at least 2")
        inst, cert = gen_gapknap(n, k)
    elif family == "gapknap-aug":
        k = _rat(args.k)
        if k < 2:
            raise UsageError("--k must be at least 2")
        inst, cert = gen_gapknap_augmented(n, k)
    elif family == "empty-hull":
        b = None if args.b is None else _rat(args.b)
        try:
            inst, cert = gen_empty_hull(n, b)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    elif family == "svc-exclude":
        vertices = [_subset_arg(v, n) for v in (args.vertex or [])]
        b = None if args.b is None else _rat(args.b)
        try:
            inst = svc_exclude(n, vertices, b)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    elif family == "origin-indicator":
        inst = Instance(n, gen_origin_indicator(n))
    else:  # two-point
        if args.i1 is None or args.i2 is None:
            raise UsageError("two-point needs --i1 and --i2")
        try:
            f = two_point_indicator(n, _subset_arg(args.i1, n), _subset_arg(args.i2, n))
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        inst = Instance(n, f)

    outdir = Path(args.out_dir or os.environ.get(OUTDIR_ENV, "."))
    stem = f"{family}-n{n}"
    inst_path = Path(args.instance) if args.instance else outdir / f"{stem}.instance.json"
    io.write_json(inst_path, io.instance_to_dict(inst))
    lines = [f"instance: {inst_path} (n={inst.n}, m={inst.m})"]
    if cert is not None:
        cert_path = Path(args.certificate) if args.certificate else outdir / f"{stem}.cert.json"
        io.write_json(cert_path, io.certificate_to_dict(cert))
        lines.append(f"certificate: {cert_path}")
    elif family == "empty-hull":
        lines.append("no certificate: the uniform assignment fails the reciprocal condition for this b")
    sys.stdout.write("\n".join(lines) + "\n")
    return 0


# --- certify ---------------------------------------------------------------------


def _report_payload(inst: Instance, report, unconstrained: bool) -> dict:
    opt = report.integral_optimum
    ratio = report.gap_ratio
    payload = {
        "kind": "unconstrained" if unconstrained else "ilp",
        "n": inst.n,
        "verdict": report.verdict,
        "failing_condition": report.failing_condition,
        "conditions": report.conditions,
        "relaxation_value": str(report.relaxation_value),
        "integral_optimum": "infeasible" if opt is Infeasible else str(opt),
        "gap_ratio": None if ratio is None else ("inf" if ratio == math.inf else str(ratio)),
        "constraints": [
            {
                "index": c.index + 1,
                "violated_vertex": None if c.violated is None else io.subset_key(c.violated),
                "unique_violation": c.unique_violation,
                "positive_elsewhere": c.positive_elsewhere,
                "reciprocal_sum": _str_or_none(c.reciprocal_sum),
                "reciprocal_ok": c.reciprocal_ok,
            }
            for c in report.constraint_checks
        ],
        "cross_check": report.cross_check,
    }
    if unconstrained:
        neg = report.negative_index
        payload["negative_index"] = None if neg is None else io.subset_key(neg)
    return payload


def _report_text(payload: dict) -> str:
    lines = [f"verdict: {'GAP CERTIFIED' if payload['verdict'] else 'not certified'}"]
    for name, ok in payload["conditions"].items():
        lines.append(f"  {name:<20} {'ok' if ok else 'FAIL'}")
    if payload["failing_condition"]:
        lines.append(f"first failing condition: {payload['failing_condition']}")
    lines.append(f"relaxation value: {payload['relaxation_value']}")
    lines.append(f"integral optimum: {payload['integral_optimum']}")
    ratio = payload["gap_ratio"]
    if ratio is not None:
        shown = ratio if ratio == "inf" else f"{ratio} (~{float(Fraction(ratio)):.6g})"
        lines.append(f"gap ratio: {shown}")
    for c in payload["constraints"]:
        lines.append(
            f"  constraint {c['index']}: cut {c['violated_vertex']}, "
            f"reciprocal sum {c['reciprocal_sum']}"
        )
    if payload["cross_check"] is not None:
        lines.append(f"level n-1 feasibility cross-check: {'pass' if payload['cross_check'] else 'FAIL'}")
    return "\n".join(lines)


def cmd_certify(args) -> int:
    inst = io.instance_from_dict(io.read_json(args.instance))
    cert = io.certificate_from_dict(io.read_json(args.certificate))
    if cert.n != inst.n:
        raise io.FormatError(f"certificate has n={cert.n}, instance has n={inst.n}")
    if inst.m == 0:
        report = certify_unconstrained(inst.objective, cert)
    else:
        try:
            report = certify_ilp(
                inst, cert, allow_redundant=args.allow_redundant, cross_check=not args.no_cross_check
            )
        except RedundantConstraintError as exc:
            raise UsageError(f"{exc} (pass --allow-redundant to check anyway)") from exc
    payload = _report_payload(inst, report, inst.m == 0)
    _emit(args, payload, _report_text(payload))
    return 0 if report.verdict else 1


# --- feas ------------------------------------------------------------------------


def _load_vector(path):
    obj = io.read_json(path)
    if "yN" in obj:
        return io.certificate_from_dict(obj).moments()
    if "y" in obj:
        return io.moments_from_dict(obj)
    raise io.FormatError("vector file needs 'yN' (corner) or 'y' (moments)")


def cmd_feas(args) -> int:
    inst = io.instance_from_dict(io.read_json(args.instance))
    y = _load_vector(args.vector)
    if args.float:
        y = y.to_float()
    try:
        rep = lasserre_check(inst, y, args.level, tol=args.tol)
    except (LevelError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    payload = {
        "n": inst.n,
        "t": rep.t,
        "d": rep.d,
        "feasible": rep.feasible,
        "y_empty_is_one": rep.y_empty_is_one,
        "objective": _str_or_none(rep.objective),
        "redundant_constraints": [k + 1 for k in rep.redundant_constraints],
        "matrices": [
            {
                "name": mc.name,
                "level": mc.level,
                "size": mc.size,
                "route": mc.route,
                "exact": mc.route != "dense",
                "psd": mc.psd,
                "min_eigenvalue": mc.min_eigenvalue,
                "witness": mc.witness,
            }
            for mc in rep.matrices
        ],
    }
    lines = [
        f"level t={rep.t} (d={rep.d}): {'FEASIBLE' if rep.feasible else 'infeasible'}",
        f"  y_empty = 1: {'yes' if rep.y_empty_is_one else 'NO'}",
    ]
    for mc in rep.matrices:
        tag = "exact" if mc.route != "dense" else f"float, min eig {mc.min_eigenvalue:.3e}"
        lines.append(
            f"  {mc.name:<12} level {mc.level} size {mc.size:<5} "
            f"{'PSD' if mc.psd else 'NOT PSD':<8} [{mc.route}, {tag}]"
        )
    if rep.redundant_constraints:
        lines.append(f"  redundant constraints: {payload['redundant_constraints']}")
    if rep.objective is not None:
        lines.append(f"  objective: {rep.objective}")
    _emit(args, payload, "\n".join(lines))
    return 0 if rep.feasible else 1


# --- eig -------------------------------------------------------------------------


def _split(s: str) -> list[str]:
    return [p for p in s.replace(" ", "").split(",") if p]


def cmd_eig(args) -> int:
    diag = [_number(x) for x in _split(args.diag)]
    if not diag:
        raise UsageError("--diag needs at least one value")
    rho = _number(args.rho)
    if args.signs:
        signs = [int(s) for s in _split(args.signs)]
        if len(signs) != len(diag) or any(s not in (-1, 1) for s in signs):
            raise UsageError("--signs must list one +1/-1 per diagonal entry")
    else:
        signs = [1] * len(diag)
    form = CornerForm(tuple(diag), rho, tuple(signs))
    rep = eigenvalues_dpr1(form, tol=args.tol)
    eig = rep.eigenvalues
    payload = {
        "label": "float64 eigenvalues",
        "eigenvalues": eig.tolist(),
        "repeated": [{"value": v, "multiplicity": c} for v, c in rep.repeated],
        "secular_roots": rep.secular_roots.tolist(),
        "residuals": rep.residuals.tolist(),
    }
    lines = ["eigenvalues (float64): " + ", ".join(f"{x:.10f}" for x in eig)]
    for r, res in zip(rep.secular_roots, rep.residuals):
        lines.append(f"  secular root {r:.10f}  residual {res:.2e}")
    for v, c in rep.repeated:
        lines.append(f"  repeated diagonal value {v:.10f} (multiplicity {c})")
    if args.dense_check:
        dense = dense_spectrum(form)
        err = float(np.max(np.abs(dense - eig))) if len(eig) else 0.0
        payload["dense"] = dense.tolist()
        payload["max_abs_diff"] = err
        lines.append("dense oracle: " + ", ".join(f"{x:.10f}" for x in dense))
        lines.append(f"max |difference|: {err:.3e}")
    _emit(args, payload, "\n".join(lines))
    return 0


# --- scan-knap -------------------------------------------------------------------


def cmd_scan_knap(args) -> int:
    k = _rat(args.k)
    if k < 2:
        raise UsageError("--k must be at least 2")
    if args.n < 1:
        raise UsageError("--n must be a positive integer")
    res = scan_gapknap(
        args.n, k, family=args.family, steps_per_octave=args.steps_per_octave, jobs=args.jobs
    )
    in_bracket = res.threshold is not None and res.lower_bound <= res.threshold <= res.upper_bound
    payload = {
        "n": res.n,
        "k": str(res.k),
        "family": res.family,
        "rows": [{"P": str(r.P), "certified": r.certified, "failing": r.failing} for r in res.rows],
        "grid_threshold": _str_or_none(res.grid_threshold),
        "threshold": res.threshold,
        "lower_bound": res.lower_bound,
        "upper_bound": str(res.upper_bound),
        "threshold_in_bracket": in_bracket,
    }
    lines = [f"GapKnap n={res.n}, k={res.k}, family={res.family}", f"{'P':>14}  certified  failing"]
    for r in res.rows:
        lines.append(f"{str(r.P):>14}  {'yes' if r.certified else 'no':<9}  {r.failing or ''}")
    lines += [
        f"first certifying grid P:  {res.grid_threshold}",
        f"least certifying integer P: {res.threshold}",
        f"(k-1)(2^n-1)^2 = {res.lower_bound}",
        f"k*2^(2n+1)     = {res.upper_bound}",
        "note: one certificate family only, so the threshold is an upper estimate "
        "of the true feasibility threshold",
    ]
    _emit(args, payload, "\n".join(lines))
    return 0


# --- degree / svc ----------------------------------------------------------------


def cmd_degree(args) -> int:
    inst = io.instance_from_dict(io.read_json(args.instance))
    f = inst.objective
    coeff = top_fourier(f)
    try:
        pre = no_gap_precheck(f)
        precheck = {"no_gap_certified": pre.no_gap_certified, "normalized_sum": str(pre.normalized_sum)}
    except ValueError:
        precheck = None
    payload = {
        "n": inst.n,
        "top_fourier": str(coeff),
        "degree_is_n": coeff != 0,
        "precheck": precheck,
    }
    lines = [
        f"top Fourier coefficient: {coeff}",
        f"degree n: {'yes' if coeff != 0 else 'no (no level n-1 gap possible)'}",
    ]
    if precheck is None:
        lines.append("no-gap precheck: objective is constant")
    else:
        verdict = "no gap possible" if pre.no_gap_certified else "inconclusive"
        lines.append(f"no-gap precheck: normalized sum {pre.normalized_sum} -> {verdict}")
    _emit(args, payload, "\n".join(lines))
    return 0


def cmd_svc(args) -> int:
    inst = io.instance_from_dict(io.read_json(args.instance))
    rows = []
    for k, g in enumerate(inst.constraints):
        v = is_svc(g)
        rows.append(
            {
                "index": k + 1,
                "is_svc": v.is_svc,
                "cut_vertex": None if v.cut_vertex is None else io.subset_key(v.cut_vertex),
                "reason": v.reason,
            }
        )
    eligible = all(r["is_svc"] for r in rows)
    payload = {"n": inst.n, "constraints": rows, "eligible": eligible}
    lines = [
        f"  constraint {r['index']}: {'SVC' if r['is_svc'] else 'not SVC'} - {r['reason']}" for r in rows
    ]
    lines.append(f"eligible for level-(n-1) gap: {'yes' if eligible else 'no'}")
    _emit(args, payload, "\n".join(lines))
    return 0


# --- entry point -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lasgap", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate an instance family")
    g.add_argument(
        "family",
        choices=["gapknap", "gapknap-aug", "empty-hull", "svc-exclude", "origin-indicator", "two-point"],
    )
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--k", default="2")
    g.add_argument("--b", help="Hamming constraint threshold, default 1/2^(n+1)")
    g.add_argument("--vertex", action="append", help="excluded vertex as '[1,3]' (repeatable)")
    g.add_argument("--i1", help="first subset for two-point, e.g. '[1]'")
    g.add_argument("--i2", help="second subset for two-point")
    g.add_argument("--instance", help="instance output path")
    g.add_argument("--certificate", help="certificate output path")
    g.add_argument("--out-dir", help=f"output directory (default ${OUTDIR_ENV} or .)")
    g.set_defaults(func=cmd_gen)

    c = sub.add_parser("certify", help="check a level-(n-1) gap certificate")
    c.add_argument("instance")
    c.add_argument("certificate")
    c.add_argument("--json", action="store_true")
    c.add_argument("--allow-redundant", action="store_true")
    c.add_argument("--no-cross-check", action="store_true")
    c.set_defaults(func=cmd_certify)

    f = sub.add_parser("feas", help="check Lasserre feasibility at a given level")
    f.add_argument("instance")
    f.add_argument("vector", help="certificate (corner) or moment file")
    f.add_argument("--level", type=int, required=True)
    f.add_argument("--tol", type=float, default=DEFAULT_TOL)
    f.add_argument("--float", action="store_true", help="use float64 throughout")
    f.add_argument("--json", action="store_true")
    f.set_defaults(func=cmd_feas)

    e = sub.add_parser("eig", help="spectrum of D + rho v v^T")
    e.add_argument("--diag", required=True, help="comma-separated diagonal")
    e.add_argument("--rho", required=True)
    e.add_argument("--signs", help="comma-separated +1/-1 entries of v (default all +1)")
    e.add_argument("--tol", type=float, default=1e-12)
    e.add_argument("--dense-check", action="store_true")
    e.add_argument("--json", action="store_true")
    e.set_defaults(func=cmd_eig)

    s = sub.add_parser("scan-knap", help="sweep P for GapKnap certification")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--k", default="2")
    s.add_argument("--family", choices=FAMILIES, default="balanced")
    s.add_argument("--steps-per-octave", type=int, default=4)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_scan_knap)

    d = sub.add_parser("degree", help="top Fourier coefficient and no-gap precheck")
    d.add_argument("instance")
    d.add_argument("--json", action="store_true")
    d.set_defaults(func=cmd_degree)

    v = sub.add_parser("svc", help="single-vertex-cutting test per constraint")
    v.add_argument("instance")
    v.add_argument("--json", action="store_true")
    v.set_defaults(func=cmd_svc)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, io.FormatError, CertificateError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
