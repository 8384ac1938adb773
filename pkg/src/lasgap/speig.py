"""Diagonal-plus-rank-one spectra and the exact corner PSD test.

``D + rho v v^T`` with ``v`` a +-1 vector is orthogonally similar (flip signs
with ``diag(v)``) to ``D + rho e e^T``, so everything below works with the
all-ones vector. Eigenvalues other than repeated diagonal values solve
``sum_i 1 / (lam - d_i) = 1 / rho``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .lattice import LatticeVector, format_subset
from .moment import CornerForm, SymmetricMatrix

DEFAULT_ROOT_TOL = 1e-12
DEDUP_RTOL = 1e-12
MAX_DENSE_DIM = 4096
MAX_BISECTIONS = 400
NEWTON_STEPS = 2


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, lo=None, hi=None):
        super().__init__(message)
        self.lo = lo
        self.hi = hi


# --- exact PSD decision -------------------------------------------------------


@dataclass
class CornerVerdict:
    verdict: bool
    case: str
    negative: int | None = None
    reciprocal_sum: object = None
    pair: tuple | None = None

    def witness_strings(self) -> dict:
        out = {}
        if self.negative is not None:
            out["negative"] = format_subset(self.negative)
        if self.reciprocal_sum is not None:
            out["reciprocal_sum"] = str(self.reciprocal_sum)
        if self.pair is not None:
            out["pair"] = [format_subset(m) for m in self.pair]
        return out


def psd_corner(yN: LatticeVector) -> CornerVerdict:
    """Decide ``M_{n-1}(zeta(yN)) >= 0`` from the full corner vector.

    PSD iff all entries are >= 0, or exactly one entry is negative, all others
    are strictly positive and the reciprocal sum is <= 0. A zero entry next to
    a negative one is reported as its own case (``zero-with-negative``); such a
    matrix always has a 2x2 principal minor of sign ``rho * w_K`` or a negative
    diagonal entry, so the verdict is False.
    """
    yN._require_full("psd_corner")
    items = list(yN.items())
    negatives = [m for m, v in items if v < 0]
    if not negatives:
        return CornerVerdict(True, "nonnegative")
    if len(negatives) >= 2:
        return CornerVerdict(False, "multiple-negative", pair=(negatives[0], negatives[1]))
    k = negatives[0]
    zero = next((m for m, v in items if v == 0), None)
    if zero is not None:
        return CornerVerdict(False, "zero-with-negative", negative=k, pair=(k, zero))
    if yN.exact:
        s = sum((Fraction(1) / v for _, v in items), Fraction(0))
    else:
        s = float(sum(1.0 / v for _, v in items))
    return CornerVerdict(s <= 0, "one-negative", negative=k, reciprocal_sum=s)


# --- dense oracle ---------------------------------------------------------------


def _as_array(M) -> np.ndarray:
    if isinstance(M, SymmetricMatrix):
        return M.to_numpy()
    if isinstance(M, CornerForm):
        return M.assemble()
    return np.asarray(M, dtype=float)


def dense_spectrum(M) -> np.ndarray:
    """Sorted eigenvalues via LAPACK's symmetric solver."""
    a = _as_array(M)
    if a.shape[0] > MAX_DENSE_DIM:
        raise ValueError(f"dimension {a.shape[0]} exceeds {MAX_DENSE_DIM}")
    if a.size == 0:
        return np.empty(0)
    return np.linalg.eigvalsh(a)


def dense_min_eigenvalue(M) -> float:
    return float(dense_spectrum(M)[0])


# --- secular equation ------------------------------------------------------------


@dataclass
class SpectrumReport:
    eigenvalues: np.ndarray
    repeated: list = field(default_factory=list)  # (value, multiplicity carried)
    secular_roots: np.ndarray = field(default_factory=lambda: np.empty(0))
    residuals: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def secular_root_count(self) -> int:
        return len(self.secular_roots)


def _poles(form: CornerForm) -> tuple[np.ndarray, np.ndarray]:
    """Distinct diagonal values (sorted) and their multiplicities."""
    if all(isinstance(x, (int, Fraction)) for x in form.diag):
        vals: dict = {}
        for x in form.diag:
            vals[Fraction(x)] = vals.get(Fraction(x), 0) + 1
        keys = sorted(vals)
        return np.array([float(k) for k in keys]), np.array([vals[k] for k in keys], dtype=float)
    d = np.sort(np.array([float(x) for x in form.diag]))
    poles = []
    for x in d:
        if poles and x - poles[-1][0] <= DEDUP_RTOL * max(1.0, abs(x)):
            poles[-1][1] += 1
            poles[-1][2] += x
        else:
            poles.append([x, 1, x])
    return (
        np.array([s / c for _, c, s in poles]),
        np.array([c for _, c, _ in poles], dtype=float),
    )


def _secular(lam: np.ndarray, p: np.ndarray, mu: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    diff = lam[:, None] - p[None, :]
    inv = mu[None, :] / diff
    return inv.sum(axis=1), -(inv / diff).sum(axis=1)


def _brackets(p: np.ndarray, mu: np.ndarray, rho: float) -> tuple[np.ndarray, np.ndarray]:
    # rho > 0 here: one root per gap plus one above the largest pole.
    lo = p.copy()
    hi = np.empty_like(p)
    hi[:-1] = p[1:]
    hi[-1] = p[-1] + rho * mu.sum()
    return lo, hi


def _solve_roots(p: np.ndarray, mu: np.ndarray, rho: float, tol: float, which=None) -> np.ndarray:
    lo, hi = _brackets(p, mu, rho)
    if which is not None:
        lo, hi = lo[which], hi[which]
    target = 1.0 / rho
    for _ in range(MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        width = hi - lo
        done = (width <= tol * np.maximum(1.0, np.abs(mid))) | (mid <= lo) | (mid >= hi)
        if done.all():
            break
        f, _ = _secular(mid, p, mu)
        right = f > target
        lo = np.where(~done & right, mid, lo)
        hi = np.where(~done & ~right, mid, hi)
    else:
        raise ConvergenceError("secular bisection did not converge", lo=lo, hi=hi)
    lam = 0.5 * (lo + hi)
    for _ in range(NEWTON_STEPS):
        f, df = _secular(lam, p, mu)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = (f - target) / df
        cand = lam - step
        ok = np.isfinite(cand) & (cand > lo) & (cand < hi)
        lam = np.where(ok, cand, lam)
    return lam


def _residuals(lam: np.ndarray, p: np.ndarray, mu: np.ndarray, rho: float) -> np.ndarray:
    # |1 - rho f(lam)| scaled by its condition; absolute |f - 1/rho| blows up near poles.
    diff = lam[:, None] - p[None, :]
    f = (mu[None, :] / diff).sum(axis=1)
    scale = 1.0 + abs(rho) * (mu[None, :] / np.abs(diff)).sum(axis=1)
    return np.abs(1.0 - rho * f) / scale


def _normalized(form: CornerForm):
    p, mu = _poles(form)
    rho = float(form.rho)
    flip = rho < 0
    if flip:
        p, mu, rho = -p[::-1], mu[::-1], -rho
    return p, mu, rho, flip


def eigenvalues_dpr1(form: CornerForm, tol: float = DEFAULT_ROOT_TOL) -> SpectrumReport:
    """Full spectrum of ``D + rho v v^T`` from repeated diagonal values and secular roots."""
    if form.dim == 0:
        return SpectrumReport(np.empty(0))
    if float(form.rho) == 0.0:
        return SpectrumReport(np.sort(np.array([float(x) for x in form.diag])))
    p, mu, rho, flip = _normalized(form)
    roots = _solve_roots(p, mu, rho, tol)
    residuals = _residuals(roots, p, mu, rho)
    repeated = [(float(x), int(c) - 1) for x, c in zip(p, mu) if c >= 2]
    sign = -1.0 if flip else 1.0
    roots = sign * roots
    repeated = [(sign * x, c) for x, c in repeated]
    eig = np.concatenate([roots, np.repeat([x for x, _ in repeated], [c for _, c in repeated])])
    order = np.argsort(roots)
    return SpectrumReport(
        eigenvalues=np.sort(eig),
        repeated=sorted(repeated),
        secular_roots=roots[order],
        residuals=residuals[order],
    )


def min_eigenvalue_dpr1(form: CornerForm, tol: float = DEFAULT_ROOT_TOL) -> float:
    """Least eigenvalue of ``D + rho v v^T``, solving only the leftmost bracket."""
    if form.dim == 0:
        raise ValueError("empty form")
    if float(form.rho) == 0.0:
        return min(float(x) for x in form.diag)
    p, mu, rho, flip = _normalized(form)
    if not flip:
        # Smallest pole repeated -> it is an eigenvalue below the first root.
        if mu[0] >= 2:
            return float(p[0])
        return float(_solve_roots(p, mu, rho, tol, which=np.array([0]))[0])
    # Negated problem: the least eigenvalue is minus the largest root there.
    return -float(_solve_roots(p, mu, rho, tol, which=np.array([len(p) - 1]))[0])
