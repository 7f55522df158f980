# Rational arithmetic helpers for the exact (oracle) mode.
# Coefficients live in numpy object arrays of fractions.Fraction so that the
# same array code serves both float and exact paths; linear systems go
# through sympy matrices with Rational entries.

from fractions import Fraction
from typing import Any

import numpy as np
import sympy as sp

from .exceptions import SingularElementError


def is_exact(array: np.ndarray) -> bool:
    return array.dtype == object


def to_fractions(values: Any) -> np.ndarray:
    array = np.asarray(values, dtype=object)
    flat = [v if isinstance(v, Fraction) else Fraction(v) for v in array.ravel()]
    return np.array(flat, dtype=object).reshape(array.shape)


def zeros_like_kind(shape, exact: bool) -> np.ndarray:
    if exact:
        out = np.empty(shape, dtype=object)
        out.fill(Fraction(0))
        return out
    return np.zeros(shape)


def to_sympy(values: Any) -> sp.Matrix:
    """Fraction (or float/int) array -> sympy Matrix of Rationals; vectors become columns."""
    array = to_fractions(values)
    if array.ndim == 1:
        array = array.reshape(-1, 1)
    return sp.Matrix(array.shape[0], array.shape[1],
                     [sp.Rational(v.numerator, v.denominator) for v in array.ravel()])


def from_sympy(matrix: sp.Matrix) -> np.ndarray:
    entries = []
    for v in matrix:
        r = sp.Rational(v)
        entries.append(Fraction(int(r.p), int(r.q)))
    return np.array(entries, dtype=object).reshape(matrix.shape)


def rational_solve(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Exact solve of ``matrix @ x = rhs``; ``rhs`` may be a vector or a matrix of right-hand sides."""
    a = to_sympy(matrix)
    vector_rhs = np.asarray(rhs, dtype=object).ndim == 1
    b = to_sympy(rhs)
    if a.rows != a.cols or b.rows != a.rows:
        raise ValueError(f"incompatible shapes {a.shape} and {b.shape}")
    if a.det(method="bareiss") == 0:
        raise SingularElementError("rational system is singular")
    try:
        solution = a.LUsolve(b)
    except ValueError as exc:
        raise SingularElementError(f"rational system is singular: {exc}") from exc
    out = from_sympy(solution)
    return out.ravel() if vector_rhs else out


def rational_inverse(matrix: np.ndarray) -> np.ndarray:
    a = to_sympy(matrix)
    if a.rows != a.cols:
        raise ValueError(f"cannot invert a {a.shape} matrix")
    try:
        return from_sympy(a.inv())
    except ValueError as exc:
        raise SingularElementError(f"rational matrix is singular: {exc}") from exc
