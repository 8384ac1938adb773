"""JSON file formats for instances, certificates and moment vectors.

Rationals are written as ``"p/q"`` strings and subsets as sorted 1-based
index lists (``"[1,3]"``, ``"[]"``). Output is canonical: serializing a parsed
file reproduces it byte for byte.
"""

from __future__ import annotations

import json
import re
from fractions import Fraction
from pathlib import Path

from .certify import CertificateError, GapCertificate
from .lattice import (
    LatticeVector,
    Repr,
    enumerate_subsets,
    lattice_size,
    popcount,
    subset_from_indices,
    subset_to_indices,
)
from .moment import Instance, LinearForm, MultilinearPoly

_RATIONAL = re.compile(r"^[+-]?\d+(/\d+)?$")


class FormatError(ValueError):
    """Input file does not follow the documented format."""


def parse_rational(s) -> Fraction:
    if isinstance(s, bool) or not isinstance(s, (str, int)):
        raise FormatError(f"rational must be a 'p/q' string, got {s!r}")
    s = str(s).strip()
    if not _RATIONAL.match(s):
        raise FormatError(f"malformed rational {s!r}")
    if "/" in s and int(s.split("/")[1]) == 0:
        raise FormatError(f"zero denominator in {s!r}")
    return Fraction(s)


def format_rational(x) -> str:
    return str(Fraction(x))


def _parse_index_list(raw, n: int, what: str) -> int:
    if not isinstance(raw, list) or not all(isinstance(i, int) and not isinstance(i, bool) for i in raw):
        raise FormatError(f"{what} must be a list of integers, got {raw!r}")
    if any(not 1 <= i <= n for i in raw):
        raise FormatError(f"{what} has indices outside 1..{n}: {raw}")
    if any(b <= a for a, b in zip(raw, raw[1:])):
        raise FormatError(f"{what} must be strictly increasing: {raw}")
    return subset_from_indices(raw)


def subset_key(mask: int) -> str:
    return "[" + ",".join(str(i) for i in subset_to_indices(mask)) + "]"


def parse_subset_key(key: str, n: int) -> int:
    try:
        raw = json.loads(key)
    except json.JSONDecodeError as exc:
        raise FormatError(f"bad subset key {key!r}") from exc
    return _parse_index_list(raw, n, f"subset key {key!r}")


def _get_n(obj) -> int:
    if not isinstance(obj, dict):
        raise FormatError("top level must be a JSON object")
    n = obj.get("n")
    if not isinstance(n, int) or isinstance(n, bool) or not 0 <= n <= 20:
        raise FormatError(f"'n' must be an integer in [0, 20], got {n!r}")
    return n


# --- instances -----------------------------------------------------------------


def instance_to_dict(inst: Instance) -> dict:
    order = enumerate_subsets(inst.n, inst.n)
    objective = [
        {"monomial": subset_to_indices(m), "coeff": format_rational(inst.objective.coeffs[m])}
        for m in order
        if m in inst.objective.coeffs
    ]
    constraints = [
        {"a": [format_rational(x) for x in g.a], "g0": format_rational(g.g0)}
        for g in inst.constraints
    ]
    return {"n": inst.n, "objective": objective, "constraints": constraints}


def instance_from_dict(obj) -> Instance:
    n = _get_n(obj)
    coeffs: dict[int, Fraction] = {}
    for term in obj.get("objective", []):
        if not isinstance(term, dict) or set(term) != {"monomial", "coeff"}:
            raise FormatError(f"objective term must have 'monomial' and 'coeff': {term!r}")
        mask = _parse_index_list(term["monomial"], n, "monomial")
        if mask in coeffs:
            raise FormatError(f"monomial {term['monomial']} listed twice")
        coeffs[mask] = parse_rational(term["coeff"])
    constraints = []
    for g in obj.get("constraints", []):
        if not isinstance(g, dict) or set(g) != {"a", "g0"}:
            raise FormatError(f"constraint must have 'a' and 'g0': {g!r}")
        if not isinstance(g["a"], list) or len(g["a"]) != n:
            raise FormatError(f"constraint needs {n} coefficients")
        constraints.append(LinearForm([parse_rational(x) for x in g["a"]], parse_rational(g["g0"])))
    return Instance(n, MultilinearPoly(n, coeffs), tuple(constraints))


# --- certificates and moment vectors ---------------------------------------------


def certificate_to_dict(cert: GapCertificate) -> dict:
    out = {
        "n": cert.n,
        "yN": {subset_key(m): format_rational(v) for m, v in cert.yN.items()},
    }
    if cert.claimed_relaxation_value is not None:
        out["claimed_relaxation_value"] = format_rational(cert.claimed_relaxation_value)
    if cert.metadata:
        out["metadata"] = cert.metadata
    return out


def _lattice_values(table, n: int, what: str) -> dict[int, Fraction]:
    if not isinstance(table, dict):
        raise FormatError(f"'{what}' must be an object keyed by subsets")
    out = {}
    for key, val in table.items():
        mask = parse_subset_key(key, n)
        if mask in out:
            raise FormatError(f"subset {key} listed twice")
        out[mask] = parse_rational(val)
    return out


def certificate_from_dict(obj) -> GapCertificate:
    n = _get_n(obj)
    if "yN" not in obj:
        raise FormatError("certificate needs 'yN'")
    vals = _lattice_values(obj["yN"], n, "yN")
    if len(vals) != 1 << n:
        raise FormatError(f"certificate lists {len(vals)} subsets, expected {1 << n}")
    claimed = obj.get("claimed_relaxation_value")
    try:
        return GapCertificate.from_mask_values(
            n,
            [vals[m] for m in range(1 << n)],
            claimed_relaxation_value=None if claimed is None else parse_rational(claimed),
            metadata=obj.get("metadata", {}),
        )
    except CertificateError as exc:
        raise FormatError(str(exc)) from exc


def moments_to_dict(y: LatticeVector) -> dict:
    return {"n": y.n, "y": {subset_key(m): format_rational(v) for m, v in y.items()}}


def moments_from_dict(obj) -> LatticeVector:
    """Moment vector on P_t(N); the level is the largest t with every subset present."""
    n = _get_n(obj)
    vals = _lattice_values(obj["y"], n, "y")
    level = max((popcount(m) for m in vals), default=0)
    if len(vals) != lattice_size(n, level):
        raise FormatError("moment file must list every subset up to its largest cardinality")
    return LatticeVector.from_function(n, level, Repr.MOMENT, vals.__getitem__)


def dumps(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc


def write_json(path, obj) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(dumps(obj))
