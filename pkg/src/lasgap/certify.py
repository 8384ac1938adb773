"""Exact certification of level-(n-1) integrality gaps.

A certificate is a full corner vector ``{y_I^N}`` in rationals. For linear
programs every constraint must cut exactly one vertex with the certificate
placing positive mass everywhere; for unconstrained problems exactly one
corner entry is negative. Every inequality is decided in exact arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .lattice import (
    LatticeVector,
    Repr,
    enumerate_subsets,
    format_subset,
    popcount,
    subset_mobius,
    zeta,
)
from .moment import Instance, LinearForm, MultilinearPoly, lasserre_check

SVC_SELF_CHECK_MAX_N = 16


class CertificateError(ValueError):
    """Malformed certificate (wrong size, inexact values, mass != 1)."""


class RedundantConstraintError(ValueError):
    """A constraint holds at every 0/1 point; certification refuses such instances."""


class _Infeasible:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "Infeasible"

    def __bool__(self):
        return False


Infeasible = _Infeasible()


@dataclass(frozen=True)
class GapCertificate:
    n: int
    yN: LatticeVector
    claimed_relaxation_value: Fraction | None = None
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.yN.n != self.n or not self.yN.full:
            raise CertificateError("certificate must cover every subset of N")
        if not self.yN.exact:
            raise CertificateError("certificate entries must be exact rationals")
        if self.yN.kind is not Repr.CORNER:
            raise CertificateError("certificate must be in corner representation")
        total = sum(self.yN.values, Fraction(0))
        if total != 1:
            raise CertificateError(f"certificate entries sum to {total}, not 1")

    @classmethod
    def from_mask_values(cls, n: int, by_mask: Sequence, **kw) -> "GapCertificate":
        vals = [Fraction(v) for v in by_mask]
        return cls(n, LatticeVector.from_mask_array(n, Repr.CORNER, vals), **kw)

    def moments(self) -> LatticeVector:
        return zeta(self.yN)


@dataclass
class ConstraintCheck:
    index: int
    violated: int | None  # the unique K_l, if exactly one product is negative
    unique_violation: bool
    positive_elsewhere: bool
    reciprocal_sum: Fraction | None
    reciprocal_ok: bool

    @property
    def ok(self) -> bool:
        return self.unique_violation and self.positive_elsewhere and self.reciprocal_ok


@dataclass
class CertReport:
    conditions: dict  # condition name -> bool, in checking order
    relaxation_value: Fraction
    integral_optimum: object  # Fraction or Infeasible
    constraint_checks: list = field(default_factory=list)
    cross_check: bool | None = None
    negative_index: int | None = None

    @property
    def verdict(self) -> bool:
        return all(self.conditions.values())

    @property
    def failing_condition(self) -> str | None:
        return next((k for k, v in self.conditions.items() if not v), None)

    @property
    def gap_ratio(self):
        """Integral optimum over relaxation value; ``inf`` for an empty integer hull."""
        if self.integral_optimum is Infeasible:
            return math.inf
        if self.relaxation_value > 0:
            return self.integral_optimum / self.relaxation_value
        return None


@dataclass
class Optimum:
    value: Fraction
    argmin: int


def integral_optimum(inst: Instance):
    """Exhaustive minimum over feasible 0/1 points (``Infeasible`` if none).

    Ties go to the canonically first subset.
    """
    table = inst.objective.value_table()
    feasible = [True] * (1 << inst.n)
    for g in inst.constraints:
        for m, v in enumerate(g.value_table()):
            if v < 0:
                feasible[m] = False
    best = None
    for m in enumerate_subsets(inst.n, inst.n):
        if feasible[m] and (best is None or table[m] < best.value):
            best = Optimum(table[m], m)
    return Infeasible if best is None else best


def _gap_holds(value: Fraction, opt) -> bool:
    return True if opt is Infeasible else value < opt.value


def _opt_value(opt):
    return Infeasible if opt is Infeasible else opt.value


def certify_ilp(
    inst: Instance,
    cert: GapCertificate,
    *,
    allow_redundant: bool = False,
    cross_check: bool = True,
    optimum=None,
) -> CertReport:
    """Check a level-(n-1) gap certificate for a constrained 0/1 program.

    Conditions, in order: positivity of every ``y_I^N``, normalization, and per
    constraint a unique negative product ``g(x_K) y_K^N``, strict positivity of
    the others and a nonpositive reciprocal sum; finally the relaxation value
    must beat the integral optimum (always true for an empty integer hull).
    """
    if cert.n != inst.n:
        raise CertificateError(f"certificate has n={cert.n}, instance has n={inst.n}")
    if inst.m == 0:
        raise ValueError("certify_ilp needs at least one constraint; use certify_unconstrained")
    redundant = inst.redundant_constraints()
    if redundant and not allow_redundant:
        raise RedundantConstraintError(
            f"constraints {[k + 1 for k in redundant]} hold at every 0/1 point"
        )
    y = cert.yN.by_mask()
    order = enumerate_subsets(inst.n, inst.n)
    conditions = {
        "positivity": all(y[m] > 0 for m in order),
        "normalization": sum(y, Fraction(0)) == 1,
    }
    checks = []
    for k, g in enumerate(inst.constraints):
        gv = g.value_table()
        z = {m: gv[m] * y[m] for m in order}
        neg = [m for m in order if z[m] < 0]
        unique = len(neg) == 1
        positive = all(z[m] > 0 for m in order if not (unique and m == neg[0]))
        if all(z[m] != 0 for m in order):
            rsum = sum((1 / z[m] for m in order), Fraction(0))
            rok = rsum <= 0
        else:
            rsum, rok = None, False
        checks.append(ConstraintCheck(k, neg[0] if unique else None, unique, positive, rsum, rok))
    conditions["unique_violation"] = all(c.unique_violation for c in checks)
    conditions["positive_elsewhere"] = all(c.positive_elsewhere for c in checks)
    conditions["reciprocal_sum"] = all(c.reciprocal_ok for c in checks)
    value = sum((t * v for t, v in zip(inst.objective.value_table(), y)), Fraction(0))
    opt = integral_optimum(inst) if optimum is None else optimum
    conditions["gap"] = _gap_holds(value, opt)
    report = CertReport(conditions, value, _opt_value(opt), checks)
    if cross_check and report.verdict:
        report.cross_check = lasserre_check(inst, cert.moments(), inst.n - 1).feasible
    return report


def certify_unconstrained(
    f: MultilinearPoly, cert: GapCertificate, *, optimum=None
) -> CertReport:
    """Check a level-(n-1) gap certificate for ``min f`` over {0,1}^n.

    Conditions: normalization, exactly one negative entry, strict positivity
    of the rest, nonpositive reciprocal sum, and the gap inequality.
    """
    if cert.n != f.n:
        raise CertificateError(f"certificate has n={cert.n}, objective has n={f.n}")
    y = cert.yN.values
    masks = cert.yN.subsets
    neg = [m for m, v in zip(masks, y) if v < 0]
    unique = len(neg) == 1
    conditions = {
        "normalization": sum(y, Fraction(0)) == 1,
        "unique_negative": unique,
        "positive_elsewhere": all(
            v > 0 for m, v in zip(masks, y) if not (unique and m == neg[0])
        ),
    }
    if all(v != 0 for v in y):
        conditions["reciprocal_sum"] = sum((1 / v for v in y), Fraction(0)) <= 0
    else:
        conditions["reciprocal_sum"] = False
    table = f.value_table()
    value = sum((table[m] * v for m, v in zip(masks, y)), Fraction(0))
    if optimum is None:
        optimum = integral_optimum(Instance(f.n, f))
    conditions["gap"] = _gap_holds(value, optimum)
    return CertReport(
        conditions, value, _opt_value(optimum), negative_index=neg[0] if unique else None
    )


# --- SVC constraints --------------------------------------------------------------


@dataclass
class SvcVerdict:
    is_svc: bool
    cut_vertex: int | None
    reason: str = ""
    exhaustive: bool | None = None  # result of the 2^n self-check, when run


def _svc_exhaustive(g: LinearForm) -> tuple[bool, int | None]:
    vals = g.value_table()
    neg = [m for m, v in enumerate(vals) if v < 0]
    if len(neg) == 1 and all(v > 0 for m, v in enumerate(vals) if m != neg[0]):
        return True, neg[0]
    return False, None


def is_svc(g: LinearForm, n: int | None = None, *, self_check: bool = True) -> SvcVerdict:
    """Does ``g(x) >= 0`` cut off exactly one vertex and hold strictly elsewhere?

    With ``g = sum a_i x_i - b`` and ``P = {i : a_i < 0}`` the minimum over the
    cube is ``sum_P a_i - b`` and the second smallest value adds
    ``min |a_i|``; the constraint is SVC iff the first is negative and the
    second positive. Forms with ``n <= 16`` are also enumerated as a check.
    """
    if n is not None and n != g.n:
        raise ValueError(f"linear form has {g.n} coefficients, expected {n}")
    b = -g.g0
    P = sum(1 << i for i, a in enumerate(g.a) if a < 0)
    low = sum((a for a in g.a if a < 0), Fraction(0))
    gap = min((abs(a) for a in g.a), default=None)
    if b == 0:
        verdict = SvcVerdict(False, None, "b = 0: the origin evaluates to 0")
    elif gap == 0:
        i = next(i for i, a in enumerate(g.a) if a == 0)
        verdict = SvcVerdict(False, None, f"a_{i + 1} = 0: violations come in pairs")
    elif not low < b:
        verdict = SvcVerdict(False, None, "no vertex violates the constraint")
    elif gap is not None and not low + gap > b:
        verdict = SvcVerdict(False, None, "a second vertex has g <= 0")
    else:
        verdict = SvcVerdict(True, P, f"cuts only {format_subset(P)}")
    if self_check and g.n <= SVC_SELF_CHECK_MAX_N:
        ok, cut = _svc_exhaustive(g)
        if (ok, cut) != (verdict.is_svc, verdict.cut_vertex):
            raise AssertionError(f"SVC shortcut disagrees with enumeration for {g}")
        verdict.exhaustive = ok
    return verdict


def gap_precondition_ilp(inst: Instance) -> bool:
    """Every constraint SVC: necessary for any level-(n-1) gap."""
    return all(is_svc(g).is_svc for g in inst.constraints)


# --- unconstrained problems -----------------------------------------------------


def top_fourier(f: MultilinearPoly) -> Fraction:
    """Coefficient of the full character in the +-1 basis: ``2^-n sum_S f(x_S) (-1)^|S|``."""
    table = f.value_table()
    total = sum((v if popcount(m) % 2 == 0 else -v for m, v in enumerate(table)), Fraction(0))
    return total / (1 << f.n)


@dataclass
class NoGapCheck:
    no_gap_certified: bool
    normalized_sum: Fraction


def no_gap_precheck(f: MultilinearPoly) -> NoGapCheck:
    """Normalize the value table to [0, 1]; a sum of at least 2 rules out a gap."""
    table = f.value_table()
    lo, hi = min(table), max(table)
    if lo == hi:
        raise ValueError("objective is constant")
    s = sum(((v - lo) / (hi - lo) for v in table), Fraction(0))
    return NoGapCheck(s >= 2, s)


def _symmetric_candidate(n: int, K: int, eps: Fraction) -> list[Fraction]:
    rest = (1 + eps) / ((1 << n) - 1)
    y = [rest] * (1 << n)
    y[K] = -eps
    return y


def _reciprocal_ok(y: Sequence[Fraction]) -> bool:
    return all(v != 0 for v in y) and sum((1 / v for v in y), Fraction(0)) <= 0


def _kkt_weights(h: list[float], eps: float) -> list[float] | None:
    """Positive weights minimizing ``sum u_i h_i`` with ``sum u = 1+eps``, ``sum 1/u = 1/eps``.

    Stationarity gives ``u_i = c / sqrt(h_i + lam)``; ``lam`` is found by bisection.
    """
    import numpy as np

    h = np.asarray(h, dtype=float)
    k = len(h)
    if eps * k * k > 1 + eps:
        return None
    lo = -h.min() + 1e-300
    target = (1 + eps) / eps

    def prod(lam):
        r = np.sqrt(h + lam)
        return r.sum() * (1.0 / r).sum()

    hi = max(1.0, abs(lo))
    while prod(hi) > target:
        hi *= 2
        if hi > 1e300:
            return None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if prod(mid) > target:
            lo = mid
        else:
            hi = mid
    r = np.sqrt(h + hi)
    c = eps * r.sum()
    return list(c / r)


def _asymmetric_candidate(table, n, K, eps: float) -> list[Fraction] | None:
    others = [m for m in range(1 << n) if m != K]
    lo = min(table)
    h = [float(table[m] - lo) for m in others]
    u = _kkt_weights(h, eps)
    if u is None:
        return None
    y = [Fraction(0)] * (1 << n)
    for m, val in zip(others, u):
        if not val > 0:
            return None
        # Shrinking the positive mass keeps the reciprocal sum on the safe side.
        y[m] = Fraction(val * (1 - 1e-9)).limit_denominator(1 << 40)
    y[K] = 1 - sum(y, Fraction(0))
    return y


def search_unconstrained_certificate(
    f: MultilinearPoly, budget: int = 200
) -> GapCertificate | None:
    """Heuristic search for a level-(n-1) gap certificate of ``min f``; ``None`` if none found.

    Puts ``-eps`` on a maximizer K of f and spreads ``1 + eps`` evenly over the
    other sets, bisecting for the largest eps that keeps the reciprocal sum
    nonpositive. If that fails, a stationary-point reweighting of the other
    sets is tried for a few eps. Every candidate is validated exactly; failure
    is not a proof that no gap exists.
    """
    n = f.n
    if n < 1:
        return None
    table = f.value_table()
    optimum = integral_optimum(Instance(n, f))
    top = max(table)
    if top == optimum.value:
        return None
    candidates = [m for m in enumerate_subsets(n, n) if table[m] == top]
    spent = 0

    def accept(y):
        cert = GapCertificate.from_mask_values(n, y)
        if certify_unconstrained(f, cert, optimum=optimum).verdict:
            return cert
        return None

    for K in candidates:
        # Largest dyadic eps with a nonpositive reciprocal sum.
        lo, hi = Fraction(0), Fraction(1)
        while _reciprocal_ok(_symmetric_candidate(n, K, hi)) and spent < budget:
            lo, hi = hi, 2 * hi
            spent += 1
        while spent < budget and hi - lo > Fraction(1, 1 << 60):
            mid = (lo + hi) / 2
            spent += 1
            if _reciprocal_ok(_symmetric_candidate(n, K, mid)):
                lo = mid
            else:
                hi = mid
            if lo and hi - lo <= lo / (1 << 20):
                break
        if lo > 0:
            spent += 1
            cert = accept(_symmetric_candidate(n, K, lo))
            if cert is not None:
                cert.metadata.update(method="symmetric", negative=format_subset(K), eps=str(lo))
                return cert
        eps_max = float(lo) if lo > 0 else 0.0
        for frac in (0.999, 0.9, 0.5, 0.1):
            if spent >= budget or eps_max == 0.0:
                break
            spent += 1
            y = _asymmetric_candidate(table, n, K, frac * eps_max)
            if y is None:
                continue
            cert = accept(y)
            if cert is not None:
                cert.metadata.update(method="reweighted", negative=format_subset(K))
                return cert
        if spent >= budget:
            break
    return None


def two_point_coefficients(n: int, values_by_mask: Sequence) -> dict[int, Fraction]:
    """Multilinear coefficients interpolating a value table."""
    coeffs = subset_mobius([Fraction(v) for v in values_by_mask], n)
    return {m: c for m, c in enumerate(coeffs) if c}
