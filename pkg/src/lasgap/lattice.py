"""Subset lattice of N = {1..n}: encoding, canonical order and the zeta/Moebius pair.

Subsets are plain ``int`` bitmasks (bit ``i-1`` set iff ``i`` is in the set).
Lattice-indexed data is stored in canonical order: ascending cardinality, ties
broken by ascending mask value, so truncating to P_t(N) is a prefix.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

MAX_N = 20


class DimensionError(ValueError):
    """Raised for lattice dimensions or levels outside the supported range."""


class LevelError(ValueError):
    """Raised when a vector is truncated below the level an operation needs."""


class Repr(enum.Enum):
    MOMENT = "moment"
    CORNER = "corner"


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def subset_from_indices(indices: Iterable[int]) -> int:
    """1-based index list -> bitmask."""
    mask = 0
    for i in indices:
        mask |= 1 << (i - 1)
    return mask


def subset_to_indices(mask: int) -> list[int]:
    """Bitmask -> sorted 1-based index list."""
    out = []
    i = 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def format_subset(mask: int) -> str:
    return "{" + ",".join(str(i) for i in subset_to_indices(mask)) + "}"


def _check_dims(n: int, t: int | None = None) -> None:
    if not 0 <= n <= MAX_N:
        raise DimensionError(f"n must lie in [0, {MAX_N}], got {n}")
    if t is not None and not 0 <= t <= n:
        raise DimensionError(f"level t must lie in [0, n={n}], got {t}")


@lru_cache(maxsize=None)
def _canonical(n: int) -> tuple[tuple[int, ...], np.ndarray, np.ndarray]:
    masks = sorted(range(1 << n), key=lambda m: (popcount(m), m))
    order = np.array(masks, dtype=np.int64)
    position = np.empty(1 << n, dtype=np.int64)
    position[order] = np.arange(1 << n)
    order.setflags(write=False)
    position.setflags(write=False)
    return tuple(masks), order, position


def lattice_size(n: int, t: int) -> int:
    """|P_t(N)|."""
    return sum(math.comb(n, j) for j in range(min(t, n) + 1))


def enumerate_subsets(n: int, t: int) -> list[int]:
    """All subsets of cardinality at most ``t`` in canonical order."""
    _check_dims(n, t)
    return list(_canonical(n)[0][: lattice_size(n, t)])


def canonical_position(n: int) -> np.ndarray:
    """Array mapping mask -> position in canonical order (read-only)."""
    return _canonical(n)[2]


def _is_exact(values: Sequence) -> bool:
    return all(isinstance(v, (int, Fraction)) and not isinstance(v, bool) for v in values)


@dataclass(frozen=True)
class LatticeVector:
    """One scalar per subset of P_t(N), stored in canonical order.

    ``level == n`` means the full lattice. Values are either all exact
    (``int``/``Fraction``) or all ``float``.
    """

    n: int
    level: int
    kind: Repr
    values: tuple

    def __post_init__(self):
        _check_dims(self.n, self.level)
        if len(self.values) != lattice_size(self.n, self.level):
            raise LevelError(
                f"expected {lattice_size(self.n, self.level)} values for n={self.n}, "
                f"t={self.level}, got {len(self.values)}"
            )
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "_exact", _is_exact(self.values))

    @classmethod
    def from_function(cls, n: int, level: int, kind: Repr, fn: Callable[[int], object]):
        return cls(n, level, kind, tuple(fn(m) for m in enumerate_subsets(n, level)))

    @classmethod
    def from_mask_array(cls, n: int, kind: Repr, by_mask: Sequence) -> "LatticeVector":
        """Full-lattice vector from values indexed by mask."""
        order = _canonical(n)[0]
        return cls(n, n, kind, tuple(by_mask[m] for m in order))

    @property
    def full(self) -> bool:
        return self.level == self.n

    @property
    def exact(self) -> bool:
        return self._exact

    @property
    def subsets(self) -> list[int]:
        return enumerate_subsets(self.n, self.level)

    def __getitem__(self, mask: int):
        if popcount(mask) > self.level or mask >> self.n:
            raise KeyError(f"subset {format_subset(mask)} not in P_{self.level}(N)")
        return self.values[int(canonical_position(self.n)[mask])]

    def by_mask(self) -> list:
        """Full-lattice values indexed by mask."""
        self._require_full("by_mask")
        out = [None] * (1 << self.n)
        for m, v in zip(_canonical(self.n)[0], self.values):
            out[m] = v
        return out

    def items(self):
        return zip(self.subsets, self.values)

    def truncate(self, t: int) -> "LatticeVector":
        _check_dims(self.n, t)
        if t > self.level:
            raise LevelError(f"cannot extend level {self.level} to {t}")
        return LatticeVector(self.n, t, self.kind, self.values[: lattice_size(self.n, t)])

    def to_float(self) -> "LatticeVector":
        return LatticeVector(self.n, self.level, self.kind, tuple(float(v) for v in self.values))

    def _require_full(self, what: str) -> None:
        if not self.full:
            raise LevelError(f"{what} needs the full lattice, got level {self.level} < n={self.n}")


# --- transforms -------------------------------------------------------------


def _butterfly(a: np.ndarray, n: int, superset: bool, sign: int) -> np.ndarray:
    # One pass per bit; view the array as (high, bit, low) blocks.
    for i in range(n):
        view = a.reshape(1 << (n - i - 1), 2, 1 << i)
        if superset:
            if sign > 0:
                view[:, 0, :] += view[:, 1, :]
            else:
                view[:, 0, :] -= view[:, 1, :]
        else:
            if sign > 0:
                view[:, 1, :] += view[:, 0, :]
            else:
                view[:, 1, :] -= view[:, 0, :]
    return a


def transform_by_mask(values: Sequence, n: int, *, superset: bool, inverse: bool) -> list:
    """Sum over supersets (or subsets) of each mask, or the inverse of that.

    ``values`` is indexed by mask. Exact inputs are carried through a common
    denominator so the inner loop runs on integers.
    """
    sign = -1 if inverse else 1
    if _is_exact(values):
        den = math.lcm(*(Fraction(v).denominator for v in values)) if values else 1
        nums = np.empty(len(values), dtype=object)
        for k, v in enumerate(values):
            v = Fraction(v)
            nums[k] = v.numerator * (den // v.denominator)
        _butterfly(nums, n, superset, sign)
        if den == 1:
            return [Fraction(int(x)) for x in nums]
        return [Fraction(int(x), den) for x in nums]
    arr = np.asarray(values, dtype=np.float64).copy()
    return _butterfly(arr, n, superset, sign).tolist()


def _apply(v: LatticeVector, superset: bool, inverse: bool, kind: Repr) -> LatticeVector:
    out = transform_by_mask(v.by_mask(), v.n, superset=superset, inverse=inverse)
    return LatticeVector.from_mask_array(v.n, kind, out)


def zeta(v: LatticeVector) -> LatticeVector:
    """Corner -> moment: ``out_I = sum_{J >= I} v_J``."""
    v._require_full("zeta")
    return _apply(v, superset=True, inverse=False, kind=Repr.MOMENT)


def mobius(w: LatticeVector) -> LatticeVector:
    """Moment -> corner: ``out_I = sum_{H <= N\\I} (-1)^|H| w_{H u I}``."""
    w._require_full("mobius")
    return _apply(w, superset=True, inverse=True, kind=Repr.CORNER)


def subset_sum(by_mask: Sequence, n: int) -> list:
    """``out_I = sum_{J <= I} v_J`` (coefficients -> value table)."""
    return transform_by_mask(by_mask, n, superset=False, inverse=False)


def subset_mobius(by_mask: Sequence, n: int) -> list:
    """Inverse of :func:`subset_sum` (value table -> coefficients)."""
    return transform_by_mask(by_mask, n, superset=False, inverse=True)
