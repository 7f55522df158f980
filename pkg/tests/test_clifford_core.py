from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from backend.clifford_core import (
    Multivector,
    Signature,
    average_over_basis,
    blade_indices,
    blade_mask,
    blade_square_sign,
    center_project,
    commutator,
    exp_series,
    generator_contraction,
    geometric_product,
    grade_project,
    is_center_free,
    masks_of_grade,
    product_tables,
)
from backend.exceptions import (
    ExactModeError,
    GradeError,
    SignatureError,
    SignatureMismatchError,
    SingularElementError,
)
from tests.conftest import ALGEBRA_SIGNATURES, assert_mv_close

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def brute_force_product(sig: Signature, a: int, b: int):
    """Sort the concatenated index list by adjacent swaps, then contract repeats."""
    indices = blade_indices(a) + blade_indices(b)
    sign = 1
    for i in range(len(indices)):
        for j in range(len(indices) - 1 - i):
            if indices[j] > indices[j + 1]:
                indices[j], indices[j + 1] = indices[j + 1], indices[j]
                sign = -sign
    kept = []
    for index in indices:
        if kept and kept[-1] == index:
            kept.pop()
            sign *= sig.eta(index)
        else:
            kept.append(index)
    return sign, blade_mask(kept)


class TestSignature:

    def test_eta_entries(self):
        sig = Signature(1, 3)
        assert [sig.eta(a) for a in range(1, 5)] == [1, -1, -1, -1]
        assert sig.dim == 16
        assert sig.pseudoscalar_mask == 0b1111

    @pytest.mark.parametrize("p,q", [(0, 0), (-1, 2), (13, 0)])
    def test_invalid_signatures(self, p, q):
        with pytest.raises(SignatureError):
            Signature(p, q)

    def test_parse(self):
        assert Signature.parse("3,1") == Signature(3, 1)


class TestGeometricProduct:

    def test_generator_squares(self):
        sig = Signature(1, 1)
        e1, e2 = Multivector.generator(sig, 1), Multivector.generator(sig, 2)
        assert_mv_close(e1 * e1, Multivector.scalar(sig, 1.0))
        assert_mv_close(e2 * e2, Multivector.scalar(sig, -1.0))

    def test_distinct_generators_anticommute(self):
        sig = Signature(2, 0)
        e1, e2 = Multivector.generator(sig, 1), Multivector.generator(sig, 2)
        e12 = Multivector.blade(sig, 0b11)
        assert_mv_close(e1 * e2, e12)
        assert_mv_close(e2 * e1, -e12)

    def test_bivector_square_in_minkowski_signature(self):
        sig = Signature(1, 3)
        e12 = Multivector.blade(sig, blade_mask([1, 2]))
        assert_mv_close(e12 * e12, Multivector.scalar(sig, 1.0))

    @pytest.mark.parametrize("p,q", [(2, 0), (1, 1), (1, 3), (3, 1), (0, 4), (2, 3), (3, 2)])
    def test_sign_table_matches_brute_force(self, p, q):
        sig = Signature(p, q)
        xor, signs, _ = product_tables(sig)
        for a in range(sig.dim):
            for b in range(sig.dim):
                sign, mask = brute_force_product(sig, a, b)
                assert xor[a, b] == mask
                assert signs[a, b] == sign

    @pytest.mark.parametrize("p,q", ALGEBRA_SIGNATURES)
    @given(seed=seeds)
    @settings(max_examples=25, deadline=None)
    def test_associativity(self, p, q, seed):
        sig = Signature(p, q)
        rng = np.random.default_rng(seed)
        a, b, c = (Multivector.random(sig, rng) for _ in range(3))
        assert_mv_close((a * b) * c, a * (b * c), 1e-12)

    @pytest.mark.parametrize("p,q", ALGEBRA_SIGNATURES)
    @given(seed=seeds)
    @settings(max_examples=25, deadline=None)
    def test_vectors_anticommute_to_metric(self, p, q, seed):
        sig = Signature(p, q)
        rng = np.random.default_rng(seed)
        u = rng.uniform(-1, 1, sig.n)
        v = rng.uniform(-1, 1, sig.n)
        a = Multivector.from_terms(sig, {1 << i: u[i] for i in range(sig.n)})
        b = Multivector.from_terms(sig, {1 << i: v[i] for i in range(sig.n)})
        dot = sum(u[i] * v[i] * sig.eta(i + 1) for i in range(sig.n))
        assert_mv_close(a * b + b * a, Multivector.scalar(sig, 2 * dot), 1e-12)

    def test_signature_mismatch(self):
        a = Multivector.generator(Signature(2, 0), 1)
        b = Multivector.generator(Signature(1, 1), 1)
        with pytest.raises(SignatureMismatchError):
            geometric_product(a, b)
        with pytest.raises(TypeError):
            a + b

    def test_float_times_fraction_stays_float(self):
        sig = Signature(2, 0)
        u = Multivector.generator(sig, 1) * Fraction(1, 3)
        assert not u.exact
        assert u[1] == pytest.approx(1 / 3)

    def test_exact_products_are_rational(self):
        sig = Signature(1, 3)
        half = Multivector.blade(sig, 0b0110, Fraction(1, 2))
        square = half * half
        assert square.exact
        assert square[0] == Fraction(1, 4)
        assert square.norm() == 0.25


class TestProjections:

    def test_grade_project_splits_the_element(self, rng):
        sig = Signature(2, 2)
        u = Multivector.random(sig, rng)
        total = sum((grade_project(u, j) for j in range(sig.n + 1)), Multivector.zero(sig))
        assert_mv_close(total, u, 1e-14)
        assert all(grade_project(u, 2)[m] == 0 for m in masks_of_grade(sig, 1))

    def test_grade_out_of_range(self):
        with pytest.raises(GradeError):
            grade_project(Multivector.zero(Signature(2, 0)), 3)

    def test_center_is_grade_zero_for_even_n(self, rng):
        sig = Signature(2, 0)
        u = Multivector.random(sig, rng)
        assert center_project(u).terms().keys() <= {0}

    def test_center_includes_pseudoscalar_for_odd_n(self, rng):
        sig = Signature(2, 1)
        u = Multivector.random(sig, rng)
        center = center_project(u)
        assert center[0] == u[0]
        assert center[sig.pseudoscalar_mask] == u[sig.pseudoscalar_mask]
        top = Multivector.blade(sig, sig.pseudoscalar_mask)
        for a in range(1, sig.n + 1):
            assert commutator(top, Multivector.generator(sig, a)).is_zero()

    def test_center_free_detection(self):
        sig = Signature(3, 0)
        assert is_center_free(Multivector.blade(sig, 0b011))
        assert not is_center_free(Multivector.blade(sig, 0b111))

    @pytest.mark.parametrize("p,q", ALGEBRA_SIGNATURES)
    @given(seed=seeds)
    @settings(max_examples=20, deadline=None)
    def test_average_over_basis_is_scaled_center(self, p, q, seed):
        sig = Signature(p, q)
        u = Multivector.random(sig, np.random.default_rng(seed))
        assert_mv_close(average_over_basis(u), center_project(u) * sig.dim, 1e-12)

    @pytest.mark.parametrize("p,q", [(2, 0), (1, 1), (0, 4), (2, 2)])
    def test_average_over_basis_exact(self, p, q, rng):
        sig = Signature(p, q)
        u = Multivector.random(sig, rng).to_exact()
        gap = average_over_basis(u) - center_project(u) * sig.dim
        assert gap.exact and gap.is_zero()

    @pytest.mark.parametrize("p,q", ALGEBRA_SIGNATURES)
    def test_generator_contraction_eigenvalues(self, p, q, rng):
        sig = Signature(p, q)
        for k in range(sig.n + 1):
            u = Multivector.random(sig, rng, grades=[k])
            expected = u * ((-1) ** k * (sig.n - 2 * k))
            assert_mv_close(generator_contraction(u), expected, 1e-12)


class TestInverses:

    def test_blade_square_sign(self):
        sig = Signature(1, 3)
        assert blade_square_sign(sig, 0b0001) == 1
        assert blade_square_sign(sig, 0b0010) == -1
        assert blade_square_sign(sig, 0b0011) == 1
        assert blade_square_sign(sig, 0b0110) == -1

    def test_general_inverse(self, rng):
        sig = Signature(3, 1)
        u = Multivector.scalar(sig, 2.0) + Multivector.random(sig, rng, scale=0.3)
        assert_mv_close(u * u.inverse(), Multivector.scalar(sig, 1.0), 1e-12)
        assert_mv_close(u.inverse() * u, Multivector.scalar(sig, 1.0), 1e-12)

    def test_exact_inverse(self):
        sig = Signature(2, 0)
        u = Multivector.from_terms(sig, {0: Fraction(2), 0b11: Fraction(1, 3)})
        product = u * u.inverse()
        assert product.exact
        assert product[0] == 1 and product.terms() == {0: Fraction(1)}

    def test_singular_element(self):
        sig = Signature(1, 0)
        u = Multivector.scalar(sig, 1.0) + Multivector.generator(sig, 1)
        with pytest.raises(SingularElementError):
            u.inverse()

    def test_repeated_generator_in_multi_index(self):
        with pytest.raises(GradeError):
            blade_mask([1, 2, 1])


class TestExponential:

    def test_bivector_exponential_is_a_rotor(self):
        sig = Signature(2, 0)
        theta = 0.7
        rotor = exp_series(Multivector.blade(sig, 0b11, theta))
        expected = Multivector.from_terms(sig, {0: np.cos(theta), 0b11: np.sin(theta)})
        assert_mv_close(rotor, expected, 1e-13)

    def test_exact_mode_refuses_exponential(self):
        sig = Signature(2, 0)
        with pytest.raises(ExactModeError):
            exp_series(Multivector.blade(sig, 0b11, Fraction(1, 2)))
