import math
from fractions import Fraction

import numpy as np
import pytest

from backend.clifford_core import Multivector, Signature
from backend.exceptions import ExactModeError, FrameError, GradeError, SignatureMismatchError
from backend.frames import sample_points
from backend.jets import (
    BaseSpace,
    Constant,
    Coordinate,
    Derivative,
    EvaluationContext,
    ExpSeries,
    Inverse,
    MatrixKernel,
    Polynomial,
    Product,
    ScalarFunction,
    Sum,
    TaylorJet,
    derivative,
    evaluate,
    finite_difference_check,
    jet_eval,
    make_point,
    monomial_basis,
    value,
)
from tests.conftest import assert_mv_close, make_gauge_frame, make_orthogonal_frame

SIG = Signature(2, 0)
E = Multivector.scalar(SIG, 1.0)
E12 = Multivector.blade(SIG, 0b11)


def test_base_space_metric():
    base = BaseSpace(1, 2)
    assert base.m == 3
    assert [base.rho(mu) for mu in (1, 2, 3)] == [1, -1, -1]
    with pytest.raises(FrameError):
        BaseSpace(0, 0)


def test_monomial_bases_are_prefixes():
    low = monomial_basis(3, 1)
    high = monomial_basis(3, 3)
    assert high.exponents[:low.size] == low.exponents
    assert high.count_up_to(1) == low.size == 4
    assert high.exponents[high.unit(2)] == (0, 1, 0)


def test_polynomial_jet():
    # x1^2 x2 at (a, b)
    field = Polynomial(SIG, [((2, 1), E)])
    a, b = 0.7, -0.4
    jet = jet_eval(field, [a, b])
    assert jet.value[0] == pytest.approx(a * a * b)
    assert jet.d(1)[0] == pytest.approx(2 * a * b)
    assert jet.d(2)[0] == pytest.approx(a * a)
    assert jet.hess(1, 1)[0] == pytest.approx(2 * b)
    assert jet.hess(1, 2)[0] == pytest.approx(2 * a)
    assert jet.hess(2, 1)[0] == pytest.approx(2 * a)
    assert jet.hess(2, 2)[0] == pytest.approx(0.0)


def test_operator_overloads_build_fields():
    x1 = Coordinate(SIG, 1)
    field = (x1 + 1) * 2 - x1 * E12
    out = value(field, [0.5, 0.0])
    assert_mv_close(out, Multivector.from_terms(SIG, {0: 3.0, 0b11: -0.5}))


def test_fields_over_different_algebras_do_not_mix():
    with pytest.raises(SignatureMismatchError):
        Coordinate(SIG, 1) + Coordinate(Signature(1, 1), 1)


def test_product_and_inverse_jets():
    f = Sum([Constant(E), Product(Coordinate(SIG, 1), Constant(E12 * 0.5))])
    identity = evaluate(Product(Inverse(f), f), [0.3, 0.2], order=3)
    assert np.allclose(identity.coeffs[0], E.coeffs)
    assert np.allclose(identity.coeffs[1:], 0.0, atol=1e-13)


def test_scalar_functions():
    x1 = Coordinate(SIG, 1)
    s = 0.9
    jet = jet_eval(ScalarFunction("sin", x1), [s, 0.0])
    assert jet.value[0] == pytest.approx(math.sin(s))
    assert jet.d(1)[0] == pytest.approx(math.cos(s))
    assert jet.hess(1, 1)[0] == pytest.approx(-math.sin(s))
    poly = jet_eval(ScalarFunction("poly", x1, [1, 0, 3]), [s, 0.0])
    assert poly.d(1)[0] == pytest.approx(6 * s)


def test_scalar_function_needs_grade_zero_operand():
    field = ScalarFunction("cos", Product(Coordinate(SIG, 1), Constant(E12)))
    with pytest.raises(GradeError):
        jet_eval(field, [0.2, 0.1])


def test_exponential_series_jet():
    # exp(x1 e12) = cos x1 + sin x1 e12
    field = ExpSeries(Product(Coordinate(SIG, 1), Constant(E12)))
    s = 0.6
    jet = jet_eval(field, [s, 0.3])
    assert_mv_close(jet.value, Multivector.from_terms(SIG, {0: math.cos(s), 0b11: math.sin(s)}), 1e-13)
    assert_mv_close(jet.d(1), Multivector.from_terms(SIG, {0: -math.sin(s), 0b11: math.cos(s)}), 1e-13)
    assert_mv_close(jet.d(2), Multivector.zero(SIG), 1e-13)


def test_nested_derivatives_stay_exact():
    cubic = Polynomial(SIG, [((3, 0), E)])
    second = Derivative(Derivative(cubic, 1), 1)
    jet = jet_eval(second, [0.4, 0.0])
    assert jet.value[0] == pytest.approx(6 * 0.4)
    assert jet.d(1)[0] == pytest.approx(6.0)
    assert jet.hess(1, 1)[0] == pytest.approx(0.0)


def test_derivative_of_constant_is_zero_node():
    node = derivative(Constant(E12), 1)
    assert isinstance(node, Constant) and node.value.is_zero()


def test_shared_nodes_are_evaluated_once():
    x1 = Coordinate(SIG, 1)
    shared = Product(x1, x1)
    root = Sum([shared, shared])
    point = make_point([0.5, 0.5])
    ctx = EvaluationContext(point)
    evaluate(root, point, 2, ctx)
    assert id(shared) in ctx._cache
    assert value(root, point)[0] == pytest.approx(0.5)


def test_exact_evaluation():
    field = Polynomial(SIG, [((1, 1), Multivector.scalar(SIG, Fraction(1, 3)))])
    point = make_point([Fraction(1, 2), Fraction(-3, 4)], exact=True)
    jet = jet_eval(field, point)
    assert jet.value.exact
    assert jet.value[0] == Fraction(-1, 8)
    assert jet.hess(1, 2)[0] == Fraction(1, 3)


def test_exact_mode_rejects_transcendental_nodes():
    point = make_point([Fraction(1, 2), Fraction(0)], exact=True)
    with pytest.raises(ExactModeError):
        jet_eval(ExpSeries(Product(Coordinate(SIG, 1), Constant(E12))), point)
    with pytest.raises(ExactModeError):
        jet_eval(ScalarFunction("sin", Coordinate(SIG, 1)), point)


def test_points_must_be_finite():
    with pytest.raises(FrameError):
        make_point([0.0, float("nan")])


def test_coordinate_outside_base_space():
    with pytest.raises(FrameError):
        jet_eval(Coordinate(SIG, 3), [0.1, 0.2])


@pytest.mark.parametrize("p,q", [(2, 0), (2, 1), (3, 1)])
def test_jets_match_finite_differences(p, q):
    sig = Signature(p, q)
    frames = [make_gauge_frame(sig, seed=3), make_orthogonal_frame(sig, seed=3)]
    for frame in frames:
        for x in sample_points(frame.m, 4, seed=11):
            for gen in frame.gens:
                deviation = finite_difference_check(gen, x)
                assert deviation.max_deviation <= 1e-5, f"{frame}: {deviation}"


def clifford_fields():
    x1, x2 = Coordinate(SIG, 1), Coordinate(SIG, 2)
    e1 = Multivector.generator(SIG, 1)
    lorentz = Signature(1, 1)
    y1, y2 = Coordinate(lorentz, 1), Coordinate(lorentz, 2)
    unit = Multivector.scalar(lorentz, 1.0)
    f1, f2 = Multivector.generator(lorentz, 1), Multivector.generator(lorentz, 2)
    return [
        pytest.param(Sum([Constant(E), Product(x1, Constant(E12 * 0.5)), Product(x2, Constant(e1 * 0.3))]),
                     id="Cl(2,0)-affine"),
        pytest.param(Sum([Constant(unit * 1.5), Product(Product(y1, y2), Constant(f1 * 0.4)),
                          Product(ScalarFunction("sin", y2), Constant(f2 * 0.2))]),
                     id="Cl(1,1)-nonlinear"),
    ]


class TestInverseJets:

    X = [0.3, -0.2]

    @pytest.mark.parametrize("f", clifford_fields())
    def test_first_derivative_chain_rule(self, f):
        inverse = Inverse(f)
        g = value(inverse, self.X)
        df = jet_eval(f, self.X)
        dg = jet_eval(inverse, self.X)
        for mu in (1, 2):
            assert_mv_close(dg.d(mu), -(g * df.d(mu) * g), 1e-12)

    @pytest.mark.parametrize("f", clifford_fields())
    def test_matches_central_differences(self, f):
        assert finite_difference_check(Inverse(f), self.X).max_deviation <= 1e-5

    @pytest.mark.parametrize("f", clifford_fields())
    def test_derivative_of_inverse(self, f):
        inverse = Inverse(f)
        outer = jet_eval(inverse, self.X)
        nested = jet_eval(Derivative(inverse, 1), self.X)
        assert_mv_close(nested.value, outer.d(1), 1e-12)
        for nu in (1, 2):
            assert_mv_close(nested.d(nu), outer.hess(1, nu), 1e-10)
        assert finite_difference_check(Derivative(inverse, 1), self.X).max_deviation <= 1e-5


class TestMatrixInverseJets:

    A0 = np.array([[2.0, 0.5, 0.0], [0.1, 1.5, 0.3], [0.0, -0.4, 1.0]])
    A1 = np.array([[0.3, 0.0, 0.2], [0.0, -0.1, 0.0], [0.5, 0.0, 0.2]])
    A2 = np.array([[0.0, 0.4, 0.0], [0.2, 0.0, 0.1], [0.0, 0.3, -0.2]])
    A12 = np.array([[0.1, 0.0, 0.0], [0.0, 0.2, 0.0], [0.0, 0.0, -0.3]])

    def matrix(self, x):
        return self.A0 + x[0] * self.A1 + x[1] * self.A2 + x[0] * x[1] * self.A12

    def jet(self, x, order=3):
        basis = monomial_basis(2, order)
        coeffs = np.zeros((basis.size, 3, 3))
        coeffs[0] = self.matrix(x)
        coeffs[basis.unit(1)] = self.A1 + x[1] * self.A12
        coeffs[basis.unit(2)] = self.A2 + x[0] * self.A12
        coeffs[basis.index[(1, 1)]] = self.A12
        return TaylorJet(MatrixKernel(3), 2, order, coeffs)

    def test_inverse_jet_is_two_sided(self):
        a = self.jet([0.4, -0.3])
        g = a.inverse()
        for product in (a * g, g * a):
            assert np.allclose(product.coeffs[0], np.eye(3))
            assert np.allclose(product.coeffs[1:], 0.0, atol=1e-13)

    def test_first_derivative_chain_rule(self):
        x = [0.4, -0.3]
        a = self.jet(x)
        g = a.inverse()
        g0 = np.linalg.inv(self.matrix(x))
        for mu in (1, 2):
            assert np.allclose(g.partial(mu), -g0 @ a.partial(mu) @ g0, atol=1e-12)

    def test_derivatives_match_central_differences(self):
        x = np.array([0.4, -0.3])
        g = self.jet(x).inverse()
        h = 1e-5
        for mu, shift in ((1, np.array([h, 0.0])), (2, np.array([0.0, h]))):
            fd = (np.linalg.inv(self.matrix(x + shift)) - np.linalg.inv(self.matrix(x - shift))) / (2 * h)
            assert np.allclose(g.partial(mu), fd, atol=1e-8)

        # mixed partial of the inverse, read off the differentiated jet
        k = 1e-4
        mixed = (np.linalg.inv(self.matrix(x + [k, k])) - np.linalg.inv(self.matrix(x + [k, -k]))
                 - np.linalg.inv(self.matrix(x + [-k, k])) + np.linalg.inv(self.matrix(x - [k, k]))) / (4 * k * k)
        assert np.allclose(g.derivative(1).partial(2), mixed, atol=1e-6)

    def test_exact_inverse_jet(self):
        basis = monomial_basis(2, 2)
        coeffs = np.zeros((basis.size, 2, 2))
        coeffs[0] = [[2, 1], [1, 1]]
        coeffs[basis.unit(1)] = [[0.5, 0], [0, 0.25]]
        a = TaylorJet(MatrixKernel(2), 2, 2, coeffs).to_exact()
        g = a.inverse()
        assert g.exact
        assert list(g.coeffs[0].ravel()) == [Fraction(1), Fraction(-1), Fraction(-1), Fraction(2)]
        product = a * g
        assert all(v == (1 if i in (0, 3) else 0) for i, v in enumerate(product.coeffs[0].ravel()))
        assert all(v == 0 for v in product.coeffs[1:].ravel())
