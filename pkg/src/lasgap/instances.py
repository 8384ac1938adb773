"""Generators for the gap instance families and their closed-form certificates."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .certify import GapCertificate, certify_ilp, integral_optimum
from .lattice import enumerate_subsets, popcount, subset_to_indices
from .moment import Instance, LinearForm, MultilinearPoly
from .certify import two_point_coefficients


def _sum_objective(n: int) -> MultilinearPoly:
    return MultilinearPoly.linear([1] * n)


def gapknap_P(n: int, k) -> Fraction:
    """``P = k * 2^(2n+1)``."""
    return Fraction(k) * (1 << (2 * n + 1))


def gapknap_instance(n: int, P) -> Instance:
    """``min sum x_i`` subject to ``sum x_i >= 1/P``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    P = Fraction(P)
    if P <= 0:
        raise ValueError("P must be positive")
    return Instance(n, _sum_objective(n), (LinearForm([1] * n, -1 / P),))


def gen_gapknap(n: int, k=2) -> tuple[Instance, GapCertificate]:
    """Min-Knapsack instance with ``y_I^N = 2^n / (P|I| - 1)`` for nonempty I."""
    k = Fraction(k)
    if k <= 0:
        raise ValueError("k must be positive")
    P = gapknap_P(n, k)
    inst = gapknap_instance(n, P)
    y = [Fraction(0)] * (1 << n)
    for m in range(1, 1 << n):
        y[m] = Fraction(1 << n) / (P * popcount(m) - 1)
    y[0] = 1 - sum(y[1:], Fraction(0))
    cert = GapCertificate.from_mask_values(
        n, y, metadata={"family": "gapknap", "n": n, "k": str(k), "P": str(P)}
    )
    return inst, cert


def balanced_gapknap_certificate(n: int, k) -> GapCertificate:
    """Certificate with ``y_I^N |I| = 1 / (k (2^n - 1))`` for nonempty I.

    Its relaxation value is exactly ``1/k``. Equal products keep
    ``sum 1/(y_I^N |I|)`` at its minimum ``k (2^n - 1)^2`` for that value, so the
    family certifies from the smallest P the reciprocal condition allows.
    """
    k = Fraction(k)
    unit = 1 / (k * ((1 << n) - 1))
    y = [Fraction(0)] * (1 << n)
    for m in range(1, 1 << n):
        y[m] = unit / popcount(m)
    y[0] = 1 - sum(y[1:], Fraction(0))
    return GapCertificate.from_mask_values(
        n, y, metadata={"family": "gapknap-balanced", "n": n, "k": str(k)}
    )


def gen_gapknap_augmented(n: int, k=2) -> tuple[Instance, GapCertificate]:
    """GapKnap with an extra variable ``x_{n+1}`` that appears only in the constraint.

    The constraint becomes ``sum_{i<=n} x_i + x_{n+1} >= 1 + 1/P``. The moment
    lift ``y'_I = y_{I minus {n+1}}`` puts each corner mass ``y_J^N`` on
    ``J u {n+1}`` and zero elsewhere, so the lifted corner vector already sums
    to 1 and no rescaling is applied.
    """
    base, cert = gen_gapknap(n, k)
    P = gapknap_P(n, k)
    objective = MultilinearPoly(n + 1, base.objective.coeffs)
    inst = Instance(n + 1, objective, (LinearForm([1] * (n + 1), -(1 + 1 / P)),))
    y = cert.yN.by_mask()
    top = 1 << n
    lifted = [Fraction(0)] * (1 << (n + 1))
    for m in range(1 << n):
        lifted[m | top] = y[m]
    meta = dict(cert.metadata, family="gapknap-aug", normalization="none (lift preserves mass)")
    return inst, GapCertificate.from_mask_values(n + 1, lifted, metadata=meta)


def hamming_constraint(n: int, vertex: int, b) -> LinearForm:
    """``sum_{i in P} (1 - x_i) + sum_{i not in P} x_i >= b`` for ``P = vertex``."""
    a = [-1 if vertex >> i & 1 else 1 for i in range(n)]
    return LinearForm(a, popcount(vertex) - Fraction(b))


def _check_b(b) -> Fraction:
    b = Fraction(b)
    if not 0 < b < Fraction(1, 2):
        raise ValueError(f"b must lie in (0, 1/2), got {b}")
    return b


def svc_exclude(n: int, vertices: Sequence[int], b=None) -> Instance:
    """Instance whose 0/1 feasible set is the cube minus ``vertices``."""
    b = _check_b(Fraction(1, 1 << (n + 1)) if b is None else b)
    seen, unique = set(), []
    for v in vertices:
        if v < 0 or v >> n:
            raise ValueError(f"vertex {v:b} is not a subset of 1..{n}")
        if v in seen:
            warnings.warn(f"duplicate vertex {subset_to_indices(v)} collapsed", stacklevel=2)
            continue
        seen.add(v)
        unique.append(v)
    return Instance(n, _sum_objective(n), tuple(hamming_constraint(n, v, b) for v in unique))


def empty_hull_reciprocal_ok(n: int, b) -> bool:
    """``sum_{I nonempty} 1/(|I| - b) <= 1/b`` (uniform certificate feasibility)."""
    b = Fraction(b)
    s = sum((math.comb(n, j) / (j - b) for j in range(1, n + 1)), Fraction(0))
    return s <= 1 / b


def gen_empty_hull(n: int, b=None) -> tuple[Instance, GapCertificate | None]:
    """All ``2^n`` Hamming constraints with the uniform certificate ``y_I^N = 2^-n``.

    The certificate is ``None`` when ``b`` is too close to 1/2 for it to work.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    b = _check_b(Fraction(1, 1 << (n + 1)) if b is None else b)
    inst = svc_exclude(n, enumerate_subsets(n, n), b)
    if not empty_hull_reciprocal_ok(n, b):
        return inst, None
    cert = GapCertificate.from_mask_values(
        n, [Fraction(1, 1 << n)] * (1 << n), metadata={"family": "empty-hull", "n": n, "b": str(b)}
    )
    return inst, cert


def gen_origin_indicator(n: int) -> MultilinearPoly:
    """``prod_i (1 - x_i)``: 1 at the origin, 0 at every other vertex."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return MultilinearPoly(n, {m: (-1) ** popcount(m) for m in range(1 << n)})


def two_point_indicator(n: int, I1: int, I2: int) -> MultilinearPoly:
    """Multilinear polynomial equal to 1 at ``I1`` and ``I2`` and 0 elsewhere."""
    if I1 == I2:
        raise ValueError("I1 and I2 must differ")
    for m in (I1, I2):
        if m < 0 or m >> n:
            raise ValueError(f"{m:b} is not a subset of 1..{n}")
    table = [0] * (1 << n)
    table[I1] = table[I2] = 1
    return MultilinearPoly(n, two_point_coefficients(n, table))


# --- P sweep for GapKnap ----------------------------------------------------------


@dataclass
class ScanRow:
    P: Fraction
    certified: bool
    failing: str | None


@dataclass
class ScanResult:
    n: int
    k: Fraction
    family: str
    rows: list = field(default_factory=list)
    grid_threshold: Fraction | None = None
    threshold: int | None = None  # least integer P that certifies

    @property
    def lower_bound(self) -> int:
        return int((self.k - 1) * ((1 << self.n) - 1) ** 2)

    @property
    def upper_bound(self) -> Fraction:
        return gapknap_P(self.n, self.k)


FAMILIES = ("balanced", "closed-form")


def _certifies(n: int, k: Fraction, P, family: str) -> tuple[bool, str | None]:
    if family == "balanced":
        cert = balanced_gapknap_certificate(n, k)
    else:
        y = [Fraction(0)] * (1 << n)
        for m in range(1, 1 << n):
            y[m] = Fraction(1 << n) / (P * popcount(m) - 1)
        y[0] = 1 - sum(y[1:], Fraction(0))
        cert = GapCertificate.from_mask_values(n, y)
    inst = gapknap_instance(n, P)
    if inst.redundant_constraints():
        return False, "redundant"
    report = certify_ilp(inst, cert, cross_check=False, optimum=integral_optimum(inst))
    if not report.verdict:
        return False, report.failing_condition
    ratio = report.gap_ratio
    if ratio is None or ratio < k:
        return False, "gap_below_k"
    return True, None


def scan_gapknap(
    n: int, k, *, family: str = "balanced", steps_per_octave: int = 4, jobs: int = 1
) -> ScanResult:
    """Sweep P over a geometric grid and find where the family first certifies gap >= k.

    The grid runs from 2 to ``4 k 2^(2n+1)``; the exact integer threshold is then
    located by bisection between the last failing and first certifying grid
    points. Certification is monotone in P for both families.
    """
    k = Fraction(k)
    if k < 2:
        raise ValueError("k must be at least 2")
    if family not in FAMILIES:
        raise ValueError(f"family must be one of {FAMILIES}")
    top = 4 * gapknap_P(n, k)
    grid, j = [], 0
    while True:
        P = max(2, round(2 ** (1 + j / steps_per_octave)))
        if P > top:
            break
        if not grid or P != grid[-1]:
            grid.append(P)
        j += 1
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(jobs) as pool:
            verdicts = list(
                pool.map(_certifies, [n] * len(grid), [k] * len(grid), grid, [family] * len(grid))
            )
    else:
        verdicts = [_certifies(n, k, P, family) for P in grid]
    result = ScanResult(n, k, family)
    result.rows = [ScanRow(Fraction(P), ok, why) for P, (ok, why) in zip(grid, verdicts)]
    first = next((i for i, r in enumerate(result.rows) if r.certified), None)
    if first is None:
        return result
    result.grid_threshold = result.rows[first].P
    lo = int(result.rows[first - 1].P) if first > 0 else 1
    hi = int(result.rows[first].P)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _certifies(n, k, mid, family)[0]:
            hi = mid
        else:
            lo = mid
    result.threshold = hi
    return result
