"""Moment matrices, the shift operator and level-t feasibility of Lasserre relaxations.

Constraints are linear forms ``g(x) = sum_i a_i x_i + g0`` read as ``g(x) >= 0``.
PSD decisions at levels n and n-1 go through the corner representation and are
exact for rational input; lower levels use exact LDL^T for small rational
matrices and a dense float eigensolver otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .lattice import (
    LatticeVector,
    LevelError,
    Repr,
    _check_dims,
    enumerate_subsets,
    format_subset,
    lattice_size,
    mobius,
    popcount,
    subset_sum,
)

DEFAULT_TOL = 1e-9
# Largest matrix handed to the exact LDL^T route; beyond that use floats.
EXACT_LDL_LIMIT = 120


@dataclass(frozen=True)
class LinearForm:
    a: tuple
    g0: Fraction

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(Fraction(x) for x in self.a))
        object.__setattr__(self, "g0", Fraction(self.g0))

    @property
    def n(self) -> int:
        return len(self.a)

    def value_table(self) -> list[Fraction]:
        """``g(x_I)`` for every mask I."""
        vals = [self.g0] * (1 << self.n)
        for m in range(1, 1 << self.n):
            low = m & -m
            vals[m] = vals[m ^ low] + self.a[low.bit_length() - 1]
        return vals


@dataclass(frozen=True)
class MultilinearPoly:
    n: int
    coeffs: Mapping[int, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        _check_dims(self.n)
        clean = {}
        for mask, c in self.coeffs.items():
            if mask < 0 or mask >> self.n:
                raise ValueError(f"monomial {mask:b} uses variables outside 1..{self.n}")
            c = Fraction(c)
            if c:
                clean[mask] = c
        object.__setattr__(self, "coeffs", clean)

    @classmethod
    def linear(cls, weights: Sequence, constant=0) -> "MultilinearPoly":
        coeffs = {1 << i: Fraction(w) for i, w in enumerate(weights)}
        coeffs[0] = Fraction(constant)
        return cls(len(weights), coeffs)

    @property
    def degree(self) -> int:
        return max((popcount(m) for m in self.coeffs), default=0)

    def value_table(self) -> list[Fraction]:
        """``f(x_I)`` for every mask I."""
        by_mask = [self.coeffs.get(m, Fraction(0)) for m in range(1 << self.n)]
        return subset_sum(by_mask, self.n)


@dataclass(frozen=True)
class Instance:
    n: int
    objective: MultilinearPoly
    constraints: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if self.objective.n != self.n:
            raise ValueError("objective dimension does not match n")
        for k, g in enumerate(self.constraints):
            if g.n != self.n:
                raise ValueError(f"constraint {k} has {g.n} coefficients, expected {self.n}")

    @property
    def m(self) -> int:
        return len(self.constraints)

    def redundant_constraints(self) -> list[int]:
        """Indices of constraints satisfied at every 0/1 point."""
        return [k for k, g in enumerate(self.constraints) if min(g.value_table()) >= 0]


class SymmetricMatrix:
    """Dense symmetric matrix with rows/columns labelled by subsets.

    Only the lower triangle is stored; ``rows[r]`` holds entries ``(r, 0..r)``.
    """

    def __init__(self, index: Sequence[int], rows: Sequence[Sequence]):
        self.index = tuple(index)
        self.rows = tuple(tuple(r) for r in rows)
        if len(self.rows) != len(self.index) or any(
            len(r) != k + 1 for k, r in enumerate(self.rows)
        ):
            raise ValueError("lower-triangular storage has the wrong shape")

    @property
    def dim(self) -> int:
        return len(self.index)

    def __getitem__(self, rc):
        r, c = rc
        return self.rows[r][c] if c <= r else self.rows[c][r]

    def to_numpy(self) -> np.ndarray:
        d = self.dim
        out = np.empty((d, d))
        for r, row in enumerate(self.rows):
            vals = np.array([float(x) for x in row])
            out[r, : r + 1] = vals
            out[: r + 1, r] = vals
        return out

    def to_lists(self) -> list[list]:
        return [[self[r, c] for c in range(self.dim)] for r in range(self.dim)]


@dataclass(frozen=True)
class CornerForm:
    """The matrix ``D + rho * v v^T`` with ``v`` a +-1 vector.

    ``index`` carries the subset labels of the diagonal when the form comes
    from a moment vector; generic forms leave it empty.
    """

    diag: tuple
    rho: object
    signs: tuple
    n: int | None = None
    index: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "diag", tuple(self.diag))
        object.__setattr__(self, "signs", tuple(int(s) for s in self.signs))
        if len(self.signs) != len(self.diag):
            raise ValueError("signs and diag differ in length")
        if any(s not in (-1, 1) for s in self.signs):
            raise ValueError("signs must be +-1")

    @property
    def dim(self) -> int:
        return len(self.diag)

    def assemble(self) -> np.ndarray:
        v = np.array(self.signs, dtype=float)
        return np.diag([float(x) for x in self.diag]) + float(self.rho) * np.outer(v, v)


# --- basic operations --------------------------------------------------------


def _level_of(n: int, t: int) -> int:
    return min(t, n)


def moment_matrix(w: LatticeVector, t: int) -> SymmetricMatrix:
    """``M_t(w)``: entry ``(I, J)`` is ``w_{I u J}`` for I, J in P_t(N)."""
    t = _level_of(w.n, t)
    need = min(2 * t, w.n)
    if w.level < need:
        raise LevelError(f"M_{t} needs entries up to cardinality {need}, vector has {w.level}")
    index = enumerate_subsets(w.n, t)
    rows = [[w[index[r] | index[c]] for c in range(r + 1)] for r in range(len(index))]
    return SymmetricMatrix(index, rows)


def shift(g: LinearForm, y: LatticeVector) -> LatticeVector:
    """``(g*y)_I = sum_i a_i y_{I u {i}} + g0 y_I``.

    The output loses one level unless ``y`` already covers the full lattice.
    """
    if g.n != y.n:
        raise ValueError("linear form and vector dimensions differ")
    if y.level == 0 and y.n > 0:
        raise LevelError("shift needs the vector up to cardinality 1 at least")
    out_level = y.n if y.full else y.level - 1
    if y.full:
        src = y.by_mask()
        lookup = src.__getitem__
    else:
        lookup = y.__getitem__
    exact = y.exact
    a = g.a if exact else [float(x) for x in g.a]
    g0 = g.g0 if exact else float(g.g0)
    out = []
    for mask in enumerate_subsets(y.n, out_level):
        acc = g0 * lookup(mask)
        for i, ai in enumerate(a):
            if ai:
                acc += ai * lookup(mask | (1 << i))
        out.append(acc)
    return LatticeVector(y.n, out_level, Repr.MOMENT, tuple(out))


def eval_linear(g: LinearForm, mask: int) -> Fraction:
    """``g(x_I) = sum_{i in I} a_i + g0``."""
    total = g.g0
    i = 0
    while mask:
        if mask & 1:
            total += g.a[i]
        mask >>= 1
        i += 1
    return total


def eval_poly(f: MultilinearPoly, mask: int) -> Fraction:
    """``f(x_I) = sum_{J <= I} f_J``."""
    return sum((c for m, c in f.coeffs.items() if m & ~mask == 0), Fraction(0))


def objective_value(f: MultilinearPoly, yN: LatticeVector):
    """Relaxation objective from the corner representation, ``sum_I f(x_I) y_I^N``."""
    yN._require_full("objective_value")
    table = f.value_table()
    return sum((table[m] * v for m, v in yN.items()), Fraction(0) if yN.exact else 0.0)


def moment_objective(f: MultilinearPoly, y: LatticeVector):
    """``sum_I f_I y_I`` (needs y up to the degree of f)."""
    if y.level < f.degree:
        raise LevelError(f"objective of degree {f.degree} needs y up to level {f.degree}")
    return sum((c * y[m] for m, c in f.coeffs.items()), Fraction(0) if y.exact else 0.0)


def corner_form_full(w: LatticeVector) -> LatticeVector:
    """Diagonal congruent to ``M_n(w)``: ``M_n(w) >= 0`` iff every entry is >= 0."""
    return mobius(w)


def corner_signs(n: int) -> tuple[int, ...]:
    return tuple(1 if (n + 1 - popcount(m)) % 2 == 0 else -1 for m in enumerate_subsets(n, n - 1))


def corner_form_level_n_minus_1(w: LatticeVector) -> CornerForm:
    """``D + w_N^N v v^T`` congruent to ``M_{n-1}(w)``, with ``v_I = (-1)^{n+1-|I|}``."""
    if w.n < 1:
        raise ValueError("needs n >= 1")
    corner = w if w.kind is Repr.CORNER else mobius(w)
    corner._require_full("corner_form_level_n_minus_1")
    k = lattice_size(w.n, w.n - 1)
    return CornerForm(
        diag=corner.values[:k],
        rho=corner.values[k],
        signs=corner_signs(w.n),
        n=w.n,
        index=tuple(enumerate_subsets(w.n, w.n - 1)),
    )


# --- exact PSD below the corner levels -----------------------------------------


def exact_psd(rows: Sequence[Sequence[Fraction]]) -> tuple[bool, str]:
    """Exact PSD test of a rational symmetric matrix by symmetric elimination.

    Returns ``(verdict, reason)``.
    """
    a = [[Fraction(x) for x in r] for r in rows]
    d = len(a)
    alive = list(range(d))
    rank = 0
    while alive:
        diag = [(a[i][i], i) for i in alive]
        neg = next((i for v, i in diag if v < 0), None)
        if neg is not None:
            return False, f"negative pivot at row {neg}"
        pos = [i for v, i in diag if v > 0]
        for v, i in diag:
            if v == 0 and any(a[i][j] != 0 for j in alive):
                return False, f"zero diagonal with nonzero off-diagonal at row {i}"
        if not pos:
            break
        rank += 1
        p = pos[0]
        alive.remove(p)
        piv = a[p][p]
        for i in alive:
            f = a[i][p] / piv
            if f:
                ri, rp = a[i], a[p]
                for j in alive:
                    ri[j] -= f * rp[j]
    return True, f"PSD of rank {rank}"


# --- feasibility ---------------------------------------------------------------


@dataclass
class MatrixCheck:
    name: str
    level: int
    size: int
    route: str  # "corner-n", "corner-n-1", "ldl", "dense"
    psd: bool
    min_eigenvalue: float | None = None
    witness: dict | None = None


@dataclass
class FeasibilityReport:
    t: int
    d: int
    y_empty_is_one: bool
    matrices: list = field(default_factory=list)
    redundant_constraints: list = field(default_factory=list)
    objective: object = None

    @property
    def feasible(self) -> bool:
        return self.y_empty_is_one and all(mc.psd for mc in self.matrices)


def _corner_check(name: str, level: int, w: LatticeVector) -> MatrixCheck:
    from .speig import psd_corner

    corner = mobius(w)
    if level >= w.n:
        neg = next(((m, v) for m, v in corner.items() if v < 0), None)
        witness = None if neg is None else {"subset": format_subset(neg[0]), "value": str(neg[1])}
        return MatrixCheck(name, level, 1 << w.n, "corner-n", neg is None, witness=witness)
    res = psd_corner(corner)
    return MatrixCheck(
        name,
        level,
        lattice_size(w.n, level),
        "corner-n-1",
        res.verdict,
        witness={"case": res.case, **res.witness_strings()},
    )


def _matrix_check(name: str, w: LatticeVector, level: int, tol: float) -> MatrixCheck:
    from .speig import dense_min_eigenvalue

    level = _level_of(w.n, level)
    if w.exact and w.full and level >= w.n - 1 and w.n >= 1:
        return _corner_check(name, level, w)
    if w.exact and w.n == 0:
        return _corner_check(name, 0, w)
    M = moment_matrix(w, level)
    if w.exact and M.dim <= EXACT_LDL_LIMIT:
        ok, reason = exact_psd(M.to_lists())
        return MatrixCheck(name, level, M.dim, "ldl", ok, witness={"reason": reason})
    lam = dense_min_eigenvalue(M)
    return MatrixCheck(name, level, M.dim, "dense", lam >= -tol, min_eigenvalue=lam)


def lasserre_check(
    inst: Instance, y: LatticeVector, t: int, tol: float = DEFAULT_TOL
) -> FeasibilityReport:
    """Check ``y`` against the level-t Lasserre conditions for ``inst``.

    ``d`` is 1 when the instance has constraints and 0 otherwise. Levels above
    n collapse to the full lattice.
    """
    if y.n != inst.n:
        raise ValueError(f"vector has n={y.n}, instance has n={inst.n}")
    if y.kind is not Repr.MOMENT:
        raise ValueError("lasserre_check expects a moment vector")
    if t < 0:
        raise LevelError("t must be nonnegative")
    d = 1 if inst.m else 0
    need = min(2 * t + 2 * d, inst.n)
    if y.level < need:
        raise LevelError(f"level {t} needs y up to cardinality {need}, got {y.level}")
    report = FeasibilityReport(
        t=t,
        d=d,
        y_empty_is_one=(y.values[0] == 1),
        redundant_constraints=inst.redundant_constraints(),
    )
    report.matrices.append(_matrix_check("M(y)", y, t + d, tol))
    for k, g in enumerate(inst.constraints):
        report.matrices.append(_matrix_check(f"M(g{k + 1}*y)", shift(g, y), t, tol))
    if y.level >= inst.objective.degree:
        report.objective = moment_objective(inst.objective, y)
    return report
