from fractions import Fraction

import numpy as np
import pytest

from backend.clifford_core import Multivector, Signature, commutator
from backend.exceptions import FrameGradeError, GaugeError
from backend.connection import (
    FramePoint,
    connection_averaged,
    connection_explicit,
    connection_field,
    connection_projection,
    contraction_F,
    eigen_table,
    eigenvalue,
    gauge_transform_connection,
    project_by_expansion,
    project_frame_grade,
    spin_connection_grade1,
    uniqueness_probe,
    verify_connection_formulas,
    verify_defining_equation,
    verify_zero_curvature,
)
from backend.frames import (
    GaugeScalar,
    OrthoMatrixField,
    constant_frame,
    gauge_frame,
    orthogonal_frame,
    sample_points,
)
from backend.jets import BaseSpace, Constant, Coordinate, Product, Scale, make_point
from tests.conftest import assert_mv_close, make_gauge_frame, make_orthogonal_frame

POINTS = sample_points(4, 4, seed=3)


def points_for(frame, count=4):
    return POINTS[:count, :frame.m]


class TestEigenTable:

    def test_n2(self):
        table = eigen_table(2)
        assert table.lambdas == (2, 0, -2)
        assert table.mus == {1: Fraction(1, 2), 2: Fraction(1, 4)}
        assert table.iterates == 3

    def test_n3_pairs_grades(self):
        table = eigen_table(3)
        assert table.lambdas == (3, -1, -1, 3)
        assert table.distinct == (0, 1)
        assert table.mus == {1: Fraction(1, 4)}

    def test_eigenvalue(self):
        assert eigenvalue(4, 1) == -2
        assert eigenvalue(5, 2) == 1

    @pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
    def test_rows_are_lagrange_coefficients(self, n):
        table = eigen_table(n)
        for i in table.distinct:
            for k in table.distinct:
                lam = Fraction(table.lambdas[k])
                total = sum(c * lam ** j for j, c in enumerate(table.rows[i]))
                assert total == (1 if i == k else 0)


class TestConnectionFormulas:

    def test_gauge_frames(self, sig):
        frame = make_gauge_frame(sig)
        report = verify_connection_formulas(frame, points_for(frame, 2))
        assert report.passed, report.failures()

    def test_orthogonal_frames_include_spin_connection(self, sig):
        frame = make_orthogonal_frame(sig, reflect=True)
        report = verify_connection_formulas(frame, points_for(frame, 2))
        assert "spin_connection" in [c.name for c in report.checks]
        assert report.passed, report.failures()

    def test_odd_and_explicit_checks_present(self):
        frame = make_gauge_frame(Signature(2, 1))
        names = [c.name for c in verify_connection_formulas(frame, points_for(frame, 1)).checks]
        assert "odd_reduction" in names and "explicit_formula" in names

    def test_defining_equation_and_zero_curvature(self, sig):
        frame = make_gauge_frame(sig)
        connection = connection_field(frame)
        defining = verify_defining_equation(frame, connection, points_for(frame, 3))
        assert defining.passed, defining.failures()
        curvature = verify_zero_curvature(connection, points_for(frame, 3))
        assert curvature.passed, curvature.failures()

    def test_scalar_frame_over_smaller_base(self, rng):
        sig = Signature(3, 0)
        field = OrthoMatrixField.random(sig, 2, rng)
        frame = orthogonal_frame(field, BaseSpace(1, 1))
        connection = connection_field(frame)
        assert connection.m == 2
        assert verify_defining_equation(frame, connection, POINTS[:3, :2]).passed

    def test_connection_is_center_free_for_odd_n(self):
        frame = make_gauge_frame(Signature(3, 0))
        x = make_point(POINTS[0, :3])
        for c in connection_averaged(frame, x):
            assert c.center().norm() < 1e-12
        for full, reduced in zip(connection_averaged(frame, x), connection_averaged(frame, x, reduced=True)):
            assert_mv_close(full, reduced, 1e-10)

    def test_n3_connection_is_quarter_of_w(self):
        frame = make_gauge_frame(Signature(2, 1), seed=8)
        fp = FramePoint(frame, POINTS[2, :3])
        for mu, c in enumerate(connection_averaged(frame, fp), start=1):
            assert_mv_close(c, fp.w(mu) / 4, 1e-10)
            assert c.grade(0).norm() < 1e-10 and c.grade(3).norm() < 1e-10

    def test_uniqueness_probe(self):
        frame = constant_frame(Signature(2, 0))
        assert uniqueness_probe(frame, [0.1, 0.2]) > 1.0
        assert uniqueness_probe(make_gauge_frame(Signature(3, 1)), POINTS[0], samples=16) > 0.0


class TestProjections:

    def test_contraction_eigenvalues_on_frame_blades(self, rng):
        sig = Signature(2, 2)
        frame = make_gauge_frame(sig)
        fp = FramePoint(frame, POINTS[0])
        for mask in (0b0001, 0b0011, 0b0111, 0b1111):
            h = fp.values[mask]
            k = bin(mask).count("1")
            assert_mv_close(contraction_F(frame, h, fp), h * eigenvalue(4, k), 1e-10)

    def test_projectors_split_the_element(self, rng):
        sig = Signature(2, 2)
        frame = make_gauge_frame(sig)
        fp = FramePoint(frame, POINTS[1])
        u = Multivector.random(sig, rng)
        total = sum((project_frame_grade(frame, u, i, fp) for i in range(5)), Multivector.zero(sig))
        assert_mv_close(total, u, 1e-10)

    def test_odd_n_needs_paired_projection(self, rng):
        frame = make_gauge_frame(Signature(2, 1))
        u = Multivector.random(frame.sig, rng)
        with pytest.raises(FrameGradeError):
            project_frame_grade(frame, u, 1, POINTS[0, :3])
        paired = project_frame_grade(frame, u, 2, POINTS[0, :3], paired=True)
        assert_mv_close(paired, project_frame_grade(frame, u, 1, POINTS[0, :3], paired=True), 1e-12)

    def test_grade_out_of_range(self, rng):
        frame = constant_frame(Signature(2, 0))
        with pytest.raises(FrameGradeError):
            project_frame_grade(frame, Multivector.random(frame.sig, rng), 3, [0.0, 0.0])


class TestFormulaErrors:

    def test_explicit_formula_only_for_n2_and_n3(self):
        frame = constant_frame(Signature(2, 2))
        with pytest.raises(FrameGradeError):
            connection_explicit(frame, POINTS[0])

    def test_reduced_formula_needs_odd_n(self):
        frame = constant_frame(Signature(2, 0))
        with pytest.raises(FrameGradeError):
            connection_field(frame, "reduced")
        with pytest.raises(FrameGradeError):
            connection_averaged(frame, [0.0, 0.0], reduced=True)

    def test_gauge_formula_needs_gauge_frame(self):
        with pytest.raises(GaugeError):
            connection_field(constant_frame(Signature(2, 0)), "gauge")

    def test_unknown_formula(self):
        with pytest.raises(ValueError):
            connection_field(constant_frame(Signature(2, 0)), "symmetric")


class TestGaugeTransport:

    def test_transported_connection_matches_averaged(self):
        frame = make_gauge_frame(Signature(3, 1))
        transported = connection_field(frame, "gauge")
        averaged = connection_field(frame)
        for x in POINTS[:2]:
            for a, b in zip(transported.values(x), averaged.values(x)):
                assert_mv_close(a, b, 1e-9)

    def test_transport_builds_the_gauge_frame(self, rng):
        sig = Signature(2, 1)
        base = make_orthogonal_frame(sig)
        S = GaugeScalar.random(sig, 3, rng)
        connection = gauge_transform_connection(connection_field(base), S)
        assert connection.frame.provenance == "gauge"
        assert verify_defining_equation(connection.frame, connection, POINTS[:2, :3]).passed


class TestSpinConnection:

    def test_rotation_frame(self):
        sig = Signature(2, 0)
        frame = orthogonal_frame(OrthoMatrixField.rotation(sig, 2))
        connections, omega = spin_connection_grade1(frame, [0.3, -0.6])
        assert_mv_close(connections[0], Multivector.blade(sig, 0b11, -0.5), 1e-12)
        assert_mv_close(connections[1], Multivector.zero(sig), 1e-12)
        assert omega[0][0, 1] == pytest.approx(-0.5)
        assert np.allclose(omega[0], -omega[0].T)

    def test_omega_reproduces_connection(self):
        sig = Signature(3, 1)
        frame = make_orthogonal_frame(sig, seed=9)
        connections, omega = spin_connection_grade1(frame, POINTS[0])
        for mu, c in enumerate(connections):
            rebuilt = Multivector.zero(sig)
            for b in range(4):
                for d in range(b + 1, 4):
                    rebuilt = rebuilt + Multivector.blade(sig, (1 << b) | (1 << d), omega[mu][b, d])
            assert_mv_close(rebuilt, c, 1e-10)

    def test_needs_grade_one_frame(self):
        sig = Signature(2, 0)
        exponent = Product(Coordinate(sig, 1), Constant(Multivector.generator(sig, 1) * 0.3))
        frame = gauge_frame(GaugeScalar.from_exponent(exponent), constant_frame(sig))
        with pytest.raises(FrameGradeError):
            spin_connection_grade1(frame, [0.5, 0.2])


class TestExactConnection:

    @pytest.fixture
    def exact_point(self):
        sig = Signature(2, 0)
        t = Scale(Fraction(1, 2), Coordinate(sig, 1))
        frame = gauge_frame(GaugeScalar.cayley(sig, 0b11, t), constant_frame(sig))
        return FramePoint(frame, make_point([Fraction(1, 3), Fraction(-1, 2)], exact=True))

    def test_defining_equation_holds_exactly(self, exact_point):
        frame = exact_point.frame
        for mu, c in enumerate(connection_averaged(frame, exact_point), start=1):
            assert c.exact
            for a in (1, 2):
                gap = exact_point.d(mu, 1 << (a - 1)) - commutator(c, exact_point.upper(a))
                assert gap.is_zero()

    def test_projection_equals_averaged_exactly(self, exact_point):
        frame = exact_point.frame
        averaged = connection_averaged(frame, exact_point)
        projected = connection_projection(frame, exact_point)
        explicit = connection_explicit(frame, exact_point)
        for a, b, c in zip(averaged, projected, explicit):
            assert (a - b).is_zero()
            assert (a - c).is_zero()

    def test_exact_report(self):
        sig = Signature(2, 0)
        t = Scale(Fraction(1, 2), Coordinate(sig, 1))
        frame = gauge_frame(GaugeScalar.cayley(sig, 0b11, t), constant_frame(sig))
        report = verify_connection_formulas(frame, [[0.5, 0.25]], exact=True)
        assert report.passed
        assert report.residual("equivalence") == 0.0


FIVE_GENERATOR_POINTS = sample_points(5, 2, seed=17)
FIVE_GENERATOR_FRAMES = [
    pytest.param(lambda: make_gauge_frame(Signature(3, 2), seed=5), id="gauge-Cl(3,2)"),
    pytest.param(lambda: make_gauge_frame(Signature(5, 0), seed=6), id="gauge-Cl(5,0)"),
    pytest.param(lambda: make_orthogonal_frame(Signature(3, 2), seed=7), id="orthogonal-Cl(3,2)"),
    pytest.param(lambda: make_orthogonal_frame(Signature(5, 0), seed=8, reflect=True), id="orthogonal-Cl(5,0)"),
]


class TestFiveGenerators:

    @pytest.fixture(params=FIVE_GENERATOR_FRAMES)
    def frame(self, request):
        return request.param()

    def test_eigen_table_pairs_grades(self):
        table = eigen_table(5)
        assert table.distinct == (0, 1, 2)
        for i in range(6):
            assert table.lambdas[i] == table.lambdas[5 - i]
        assert table.mus == {1: Fraction(1, 8), 2: Fraction(1, 4)}

    def test_averaged_projection_and_reduced_agree(self, frame):
        fp = FramePoint(frame, FIVE_GENERATOR_POINTS[0])
        averaged = connection_averaged(frame, fp)
        for other in (connection_projection(frame, fp), connection_averaged(frame, fp, reduced=True)):
            for a, b in zip(averaged, other):
                assert_mv_close(a, b, 1e-9)
        for c in averaged:
            assert c.center().norm() < 1e-10

    def test_report(self, frame):
        report = verify_connection_formulas(frame, FIVE_GENERATOR_POINTS[:1])
        assert report.passed, report.failures()
        names = [c.name for c in report.checks]
        assert "odd_reduction" in names and "explicit_formula" not in names

    def test_paired_projectors_match_expansion(self, frame, rng):
        fp = FramePoint(frame, FIVE_GENERATOR_POINTS[1])
        u = Multivector.random(frame.sig, rng)
        total = Multivector.zero(frame.sig)
        for i in (0, 1, 2):
            paired = project_frame_grade(frame, u, i, fp, paired=True)
            assert_mv_close(paired, project_by_expansion(frame, u, [i, 5 - i], fp), 1e-9)
            assert_mv_close(paired, project_frame_grade(frame, u, 5 - i, fp, paired=True), 1e-12)
            total = total + paired
        assert_mv_close(total, u, 1e-9)

    def test_grade_and_complement_share_eigenvalue(self, frame):
        fp = FramePoint(frame, FIVE_GENERATOR_POINTS[0])
        for mask in (0b00001, 0b01111, 0b00011, 0b00111):
            h = fp.values[mask]
            assert_mv_close(contraction_F(frame, h, fp), h * eigenvalue(5, bin(mask).count("1")), 1e-9)
        assert eigenvalue(5, 1) == eigenvalue(5, 4) == -3
        assert eigenvalue(5, 2) == eigenvalue(5, 3) == 1
