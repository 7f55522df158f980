from fractions import Fraction

import numpy as np
import pytest
import sympy as sp

from backend.exact import from_sympy, is_exact, rational_inverse, rational_solve, to_fractions, to_sympy, zeros_like_kind
from backend.exceptions import SingularElementError


def test_to_fractions_is_exact_for_binary_floats():
    values = to_fractions([0.5, 0.25, 3])
    assert is_exact(values)
    assert list(values) == [Fraction(1, 2), Fraction(1, 4), Fraction(3)]


def test_zeros_like_kind():
    assert not is_exact(zeros_like_kind(3, False))
    exact = zeros_like_kind((2, 2), True)
    assert is_exact(exact) and all(v == Fraction(0) for v in exact.ravel())


def test_rational_solve_vector():
    matrix = [[2, 1, 0], [1, 3, 1], [0, 1, 4]]
    rhs = [1, 2, 3]
    x = rational_solve(matrix, rhs)
    assert all(isinstance(v, Fraction) for v in x)
    residual = to_fractions(matrix) @ x - to_fractions(rhs)
    assert all(v == 0 for v in residual)


def test_rational_solve_needs_pivoting():
    x = rational_solve([[0, 1], [1, 0]], [Fraction(2, 3), Fraction(5, 7)])
    assert list(x) == [Fraction(5, 7), Fraction(2, 3)]


def test_vandermonde_inverse():
    values = [Fraction(4), Fraction(0), Fraction(-4)]
    vandermonde = np.array([[v ** j for v in values] for j in range(3)], dtype=object)
    inverse = rational_inverse(vandermonde)
    product = inverse @ vandermonde
    assert all(product[i, j] == (1 if i == j else 0) for i in range(3) for j in range(3))


def test_singular_system():
    with pytest.raises(SingularElementError):
        rational_solve([[1, 2], [2, 4]], [1, 1])


def test_shape_mismatch():
    with pytest.raises(ValueError):
        rational_solve([[1, 0], [0, 1]], [1, 2, 3])


def test_sympy_conversion_keeps_rationals():
    values = to_fractions([[Fraction(1, 3), 2], [Fraction(-5, 7), 0.5]])
    matrix = to_sympy(values)
    assert matrix[0, 0] == sp.Rational(1, 3)
    assert matrix[1, 1] == sp.Rational(1, 2)
    back = from_sympy(matrix)
    assert is_exact(back) and (back == values).all()
    assert to_sympy([1, 2, 3]).shape == (3, 1)


def test_matrix_right_hand_side():
    matrix = to_fractions([[1, 2], [3, 4]])
    x = rational_solve(matrix, [[1, 0], [0, 1]])
    assert x.shape == (2, 2)
    assert (x == rational_inverse(matrix)).all()
    assert list(x[0]) == [Fraction(-2), Fraction(1)]


def test_singular_inverse():
    with pytest.raises(SingularElementError):
        rational_inverse([[Fraction(1, 2), 1], [1, 2]])
    with pytest.raises(ValueError):
        rational_inverse([[1, 2, 3], [4, 5, 6]])
