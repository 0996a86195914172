"""Dense multilinear extensions over the Boolean hypercube.

Index bit order: the most significant bit of an evaluation index is the first
variable. Every transcript in the package depends on this convention.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .field import ExtElement, Scalar
from .fvec import EVec, _k_eq_step, asvec, matvec, vecmat


class DimensionError(ValueError):
    pass


class MultilinearPoly:
    __slots__ = ("evals", "num_vars")

    def __init__(self, evals, num_vars: int | None = None):
        if not isinstance(evals, EVec):
            evals = EVec(asvec(evals))
        n = len(evals)
        if n == 0 or n & (n - 1):
            raise DimensionError(f"evaluation count {n} is not a power of two")
        k = n.bit_length() - 1
        if num_vars is not None and num_vars != k:
            raise DimensionError(f"{n} evaluations do not match {num_vars} variables")
        self.evals = evals
        self.num_vars = k

    @staticmethod
    def padded(values, size: int | None = None) -> "MultilinearPoly":
        """Zero-pad a base vector to the next power of two (or to ``size``)."""
        v = asvec(values)
        n = size if size is not None else next_pow2(len(v))
        if n < len(v):
            raise DimensionError(f"cannot pad {len(v)} values into {n}")
        out = np.zeros(n, dtype=np.uint64)
        out[: len(v)] = v
        return MultilinearPoly(EVec(out))

    def __len__(self):
        return len(self.evals)

    def evaluate(self, point: Sequence[Scalar]) -> ExtElement:
        return mle_evaluate(self, point)


def mle_evaluate(poly: MultilinearPoly, point: Sequence[Scalar]) -> ExtElement:
    if len(point) != poly.num_vars:
        raise DimensionError(f"point has {len(point)} coordinates, poly has {poly.num_vars} variables")
    if poly.num_vars == 0:
        return poly.evals.element(0)
    # one dot product against the eq table is cheaper than k folds
    return poly.evals.dot(eq_table(point))


def eq_evaluate(x: Sequence[Scalar], y: Sequence[Scalar]) -> ExtElement:
    if len(x) != len(y):
        raise DimensionError("eq arguments differ in length")
    acc = ExtElement(1)
    for xi, yi in zip(x, y):
        xi, yi = ExtElement.lift(xi), ExtElement.lift(yi)
        acc = acc * (xi * yi + (1 - xi) * (1 - yi))
    return acc


def eq_table(point: Sequence[Scalar]) -> EVec:
    """All 2^k values eq(point, b) for b on the cube, MSB-first."""
    c0 = np.ones(1, dtype=np.uint64)
    c1 = np.zeros(1, dtype=np.uint64)
    base = True
    for r in point:
        r = ExtElement.lift(r)
        base = base and r.c1 == 0
        o0 = np.empty(2 * len(c0), dtype=np.uint64)
        o1 = np.empty_like(o0)
        _k_eq_step(c0, c1, np.uint64(r.c0), np.uint64(r.c1), o0, o1)
        c0, c1 = o0, o1
    return EVec(c0, None if base else c1)


def fold_evals(evals: EVec, r: Scalar) -> EVec:
    half = len(evals) // 2
    lo = evals[:half]
    hi = evals[half:]
    return lo + (hi - lo).scale(r)


def fold_variable(poly: MultilinearPoly, r: Scalar) -> MultilinearPoly:
    """Fix the first variable to r."""
    if poly.num_vars == 0:
        raise DimensionError("cannot fold a constant polynomial")
    return MultilinearPoly(fold_evals(poly.evals, r))


def fix_leading(matrix: np.ndarray, point: Sequence[Scalar]) -> EVec:
    """evals of f(point, x) for f stored as a row-major base matrix."""
    return vecmat(eq_table(point), matrix)


def fix_trailing(matrix: np.ndarray, point: Sequence[Scalar]) -> EVec:
    """evals of f(x, point) for f stored as a row-major base matrix."""
    return matvec(matrix, eq_table(point))


def next_pow2(n: int) -> int:
    return 1 if n <= 1 else 1 << (n - 1).bit_length()


def index_bits(index: int, k: int) -> list[int]:
    """Cube coordinates of ``index`` in MSB-first order."""
    return [(index >> (k - 1 - i)) & 1 for i in range(k)]
