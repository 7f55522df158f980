"""
The spin connection of the general form: the unique center-free covector
C_mu with ``d_mu h^a = [C_mu, h^a]``.

Two independent routes are implemented. The averaged formula sums
``(d_mu h^A) h_A`` over the extended basis. The projection formula writes
``W = (d_mu h^a) h_a = n C - F(C)`` with ``F(U) = sum_a h_a U h^a`` and
inverts ``n - F`` on each eigenspace of F using projectors that are
polynomials in F (coefficients from an exact Vandermonde inverse).
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .clifford_core import (
    Multivector,
    blade_square_sign,
    center_masks,
    commutator,
    grade_of,
    masks_of_grade,
)
from .config import DEFAULT_SEED, DEFAULT_TOLERANCES
from .exact import rational_inverse
from .exceptions import FrameError, FrameGradeError, GaugeError, GradeError
from .frames import Frame, GaugeScalar, _as_points, basis_matrix, check_grade_one, expand_in_frame, gauge_frame
from .jets import (
    EvaluationContext,
    FieldExpr,
    Product,
    Scale,
    Sum,
    derivative,
    evaluate_many,
    make_point,
    zero_field,
)
from .residuals import ResidualTracker, VerificationReport, relative_residual

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Eigenvalues of F and the projector polynomials

@dataclass(frozen=True)
class EigenTable:
    n: int
    lambdas: Tuple[int, ...]             # lambda_i for i = 0..n
    distinct: Tuple[int, ...]            # grades carrying distinct eigenvalues
    mus: Dict[int, Fraction]             # mu_i = 1 / (n - lambda_i)
    rows: Dict[int, Tuple[Fraction, ...]]  # pi_i = sum_j rows[i][j] F^j

    @property
    def iterates(self) -> int:
        return len(self.distinct)


def eigenvalue(n: int, i: int) -> int:
    return (-1) ** i * (n - 2 * i)


@lru_cache(maxsize=None)
def eigen_table(n: int) -> EigenTable:
    lambdas = tuple(eigenvalue(n, i) for i in range(n + 1))
    # odd n pairs grade i with n - i (same eigenvalue)
    distinct = tuple(range(n + 1)) if n % 2 == 0 else tuple(range((n - 1) // 2 + 1))
    values = [lambdas[i] for i in distinct]
    if len(set(values)) != len(values):
        raise FrameError(f"eigenvalues for n={n} are not distinct: {values}")
    # vandermonde[j][k] = lambda_k ** j, so rows of its inverse are Lagrange coefficients
    vandermonde = np.array([[Fraction(v) ** j for v in values] for j in range(len(values))], dtype=object)
    inverse = rational_inverse(vandermonde)
    rows = {i: tuple(inverse[k]) for k, i in enumerate(distinct)}
    mus = {i: Fraction(1, n - lambdas[i]) for i in distinct if i > 0}
    logger.debug(f"Eigen table n={n}: lambdas={lambdas}, mus={mus}")
    return EigenTable(n, lambdas, distinct, mus, rows)


# ---------------------------------------------------------------------------
# Connection fields

@dataclass
class Connection:
    frame: Frame
    fields: Tuple[FieldExpr, ...]
    formula: str = "averaged"

    @property
    def m(self) -> int:
        return len(self.fields)

    def field(self, mu: int) -> FieldExpr:
        return self.fields[mu - 1]

    def values(self, x, ctx: Optional[EvaluationContext] = None) -> List[Multivector]:
        return [Multivector(f.sig, jet.coeffs[0]) for f, jet in zip(self.fields, evaluate_many(self.fields, x, 0, ctx))]


def _averaged_field(frame: Frame, mu: int, masks: Sequence[int], weight: Fraction) -> FieldExpr:
    terms = [Product(derivative(frame.blade(mask), mu), frame.lower_blade(mask)) for mask in masks]
    return Scale(weight, Sum(terms)) if terms else zero_field(frame.sig)


def connection_field(frame: Frame, formula: str = "averaged") -> Connection:
    """Jet-evaluable C_mu.

    ``averaged`` sums over the whole extended basis, ``reduced`` (odd n) over
    grades 1..(n-1)/2, ``gauge`` transports the parent frame's connection
    through the frame's gauge scalar.
    """
    n = frame.n
    if formula == "averaged":
        masks = list(range(1, frame.sig.dim))
        weight = Fraction(1, 2 ** n)
    elif formula == "reduced":
        if n % 2 == 0:
            raise FrameGradeError("the reduced averaging formula needs odd n")
        masks = [mask for mask in range(1, frame.sig.dim) if grade_of(mask) <= (n - 1) // 2]
        weight = Fraction(1, 2 ** (n - 1))
    elif formula == "gauge":
        if frame.gauge is None or frame.parent is None:
            raise GaugeError("frame was not built by a gauge transformation")
        return gauge_transform_connection(connection_field(frame.parent), frame.gauge, frame)
    else:
        raise ValueError(f"unknown connection formula '{formula}'")
    fields = tuple(_averaged_field(frame, mu, masks, weight) for mu in range(1, frame.m + 1))
    return Connection(frame, fields, formula)


def gauge_transform_connection(connection: Connection, S: GaugeScalar,
                               transformed_frame: Optional[Frame] = None) -> Connection:
    """``S^{-1} C_mu S - S^{-1} d_mu S``; solves the equation for ``S^{-1} h^a S``."""
    frame = transformed_frame or gauge_frame(S, connection.frame)
    fields = []
    for mu, c in enumerate(connection.fields, start=1):
        fields.append(Sum([Product(Product(S.S_inv, c), S.S), Scale(-1, S.log_derivative(mu))]))
    return Connection(frame, tuple(fields), "gauge")


# ---------------------------------------------------------------------------
# Pointwise formulas

class FramePoint:
    """Values and first derivatives of every h^A at one point."""

    def __init__(self, frame: Frame, x, ctx: Optional[EvaluationContext] = None):
        point = x if isinstance(x, np.ndarray) else make_point(x)
        self.frame = frame
        self.point = point
        self.ctx = ctx or EvaluationContext(point)
        fields = [frame.blade(mask) for mask in range(frame.sig.dim)]
        jets = evaluate_many(fields, point, 1, self.ctx)
        sig = frame.sig
        self.values = [Multivector(sig, jet.coeffs[0]) for jet in jets]
        self.grads = [[Multivector(sig, jet.partial(mu)) for jet in jets] for mu in range(1, frame.m + 1)]
        self.lowered = [v * blade_square_sign(sig, mask) for mask, v in enumerate(self.values)]

    def upper(self, a: int) -> Multivector:
        return self.values[1 << (a - 1)]

    def lower(self, a: int) -> Multivector:
        return self.lowered[1 << (a - 1)]

    def d(self, mu: int, mask: int) -> Multivector:
        return self.grads[mu - 1][mask]

    def w(self, mu: int) -> Multivector:
        """``(d_mu h^a) h_a``."""
        n = self.frame.n
        total = Multivector.zero(self.frame.sig, self.values[0].exact)
        for a in range(1, n + 1):
            total = total + self.d(mu, 1 << (a - 1)) * self.lower(a)
        return total


def _frame_point(frame: Frame, x) -> FramePoint:
    return x if isinstance(x, FramePoint) else FramePoint(frame, x)


def connection_averaged(frame: Frame, x, reduced: bool = False) -> List[Multivector]:
    """``C_mu = 2^{-n} sum_A (d_mu h^A) h_A``; ``reduced`` uses grades 1..(n-1)/2 only (odd n)."""
    fp = _frame_point(frame, x)
    n = frame.n
    if reduced and n % 2 == 0:
        raise FrameGradeError("the reduced averaging formula needs odd n")
    masks = [mask for mask in range(1, frame.sig.dim) if not reduced or grade_of(mask) <= (n - 1) // 2]
    weight = 2 ** (n - 1) if reduced else 2 ** n
    out = []
    for mu in range(1, frame.m + 1):
        total = Multivector.zero(frame.sig, fp.values[0].exact)
        for mask in masks:
            total = total + fp.d(mu, mask) * fp.lowered[mask]
        out.append(total / weight)
    return out


def contraction_F(frame: Frame, u: Multivector, x) -> Multivector:
    """``F(U) = sum_a h_a U h^a``."""
    fp = _frame_point(frame, x)
    total = Multivector.zero(frame.sig, u.exact)
    for a in range(1, frame.n + 1):
        total = total + fp.lower(a) * u * fp.upper(a)
    return total


def project_frame_grade(frame: Frame, u: Multivector, i: int, x, paired: bool = False) -> Multivector:
    """Projection onto span{h^A : |A| = i} (odd n: grades i and n - i together).

    Computed as ``sum_j b_ij F^j(u)`` from repeated application of F.
    """
    n = frame.n
    if not 0 <= i <= n:
        raise FrameGradeError(f"grade {i} outside [0, {n}]")
    if n % 2:
        if not paired:
            raise FrameGradeError(f"n={n} is odd: grade {i} is only reachable paired with grade {n - i}")
        i = min(i, n - i)
    fp = _frame_point(frame, x)
    table = eigen_table(n)
    iterate = u
    total = u * table.rows[i][0]
    for j in range(1, table.iterates):
        iterate = contraction_F(frame, iterate, fp)
        total = total + iterate * table.rows[i][j]
    return total


def project_by_expansion(frame: Frame, u: Multivector, grades: Sequence[int], x) -> Multivector:
    """Projection by expanding in the h^A basis and keeping the listed grades."""
    fp = _frame_point(frame, x)
    coefficients = expand_in_frame(u, frame, fp.point, fp.ctx)
    keep = np.array([grade_of(mask) in grades for mask in range(frame.sig.dim)])
    coefficients = np.where(keep, coefficients, 0)
    matrix = basis_matrix(frame, fp.point, fp.ctx)
    return Multivector(frame.sig, matrix @ coefficients)


def connection_projection(frame: Frame, x) -> List[Multivector]:
    """``C_mu = sum_i mu_i pi_i((d_mu h^a) h_a)``, paired projectors for odd n."""
    fp = _frame_point(frame, x)
    table = eigen_table(frame.n)
    odd = frame.n % 2 == 1
    out = []
    for mu in range(1, frame.m + 1):
        w = fp.w(mu)
        total = Multivector.zero(frame.sig, w.exact)
        for i, weight in table.mus.items():
            total = total + project_frame_grade(frame, w, i, fp, paired=odd) * weight
        out.append(total)
    return out


def connection_explicit(frame: Frame, x) -> List[Multivector]:
    """Closed forms for n = 2 and n = 3 written with F-iterates of W."""
    n = frame.n
    if n not in (2, 3):
        raise FrameGradeError(f"explicit formula only exists for n = 2 or 3, got {n}")
    fp = _frame_point(frame, x)
    out = []
    for mu in range(1, frame.m + 1):
        w = fp.w(mu)
        fw = contraction_F(frame, w, fp)
        if n == 2:
            ffw = contraction_F(frame, fw, fp)
            out.append(w * Fraction(1, 2) - fw * Fraction(1, 16) - ffw * Fraction(3, 32))
        else:
            out.append(w * Fraction(3, 16) - fw * Fraction(1, 16))
    return out


def spin_connection_grade1(frame: Frame, x) -> Tuple[List[Multivector], np.ndarray]:
    """``C_mu = 1/4 (d_mu h^a) h_a`` and its coefficients ``omega[mu, b, d]``.

    ``omega`` is antisymmetric in (b, d) with ``C_mu = sum_{b<d} omega[mu, b, d] e^{bd}``
    and ``omega = 1/2 (d_mu Y)^T eta Y`` for ``h^a = y^a_b e^b``.
    """
    fp = _frame_point(frame, x)
    try:
        check_grade_one(frame, fp.point)
    except GradeError as exc:
        raise FrameGradeError(f"spin connection needs a grade-1 frame: {exc}") from exc
    sig = frame.sig
    n = sig.n
    y = np.array([[float(fp.upper(a)[1 << (b - 1)]) for b in range(1, n + 1)] for a in range(1, n + 1)])
    eta = sig.eta_matrix
    connections = []
    omega = np.zeros((frame.m, n, n))
    for mu in range(1, frame.m + 1):
        connections.append(fp.w(mu) / 4)
        dy = np.array([[float(fp.d(mu, 1 << (a - 1))[1 << (b - 1)]) for b in range(1, n + 1)]
                       for a in range(1, n + 1)])
        omega[mu - 1] = 0.5 * dy.T @ eta @ y
    return connections, omega


def uniqueness_probe(frame: Frame, x, samples: int = 64, seed: int = DEFAULT_SEED) -> float:
    """Smallest ``max_a |[delta, h^a]|`` over random center-free delta with |delta| = 1.

    A positive value means no center-free shift of C keeps the defining equation.
    """
    fp = _frame_point(frame, x)
    rng = np.random.default_rng(seed)
    central = center_masks(frame.sig)
    smallest = np.inf
    for _ in range(samples):
        coeffs = rng.uniform(-1, 1, frame.sig.dim)
        coeffs[central] = 0
        delta = Multivector(frame.sig, coeffs / np.max(np.abs(coeffs)))
        worst = max(commutator(delta, fp.upper(a)).norm() for a in range(1, frame.n + 1))
        smallest = min(smallest, worst)
    return float(smallest)


# ---------------------------------------------------------------------------
# Verification

def verify_defining_equation(frame: Frame, connection: Connection, points,
                             tolerances: Optional[Dict[str, float]] = None, exact: bool = False) -> VerificationReport:
    """``d_mu h^a - [C_mu, h^a]`` for the generators and for every h^A; C center-free."""
    tol = {**DEFAULT_TOLERANCES, **(tolerances or {})}
    generators = ResidualTracker("defining_equation", tol["defining_equation"])
    extended = ResidualTracker("extended_defining_equation", tol["defining_equation"])
    center = ResidualTracker("center_free", tol["spin_connection"])
    for x in _as_points(points, exact):
        fp = FramePoint(frame, x)
        cs = connection.values(x, fp.ctx)
        worst_gen = worst_ext = worst_center = 0.0
        for mu, c in enumerate(cs, start=1):
            worst_center = max(worst_center, relative_residual(c.center(), c))
            for mask in range(1, frame.sig.dim):
                h = fp.values[mask]
                residual = relative_residual(fp.d(mu, mask) - commutator(c, h), fp.d(mu, mask), c, h)
                worst_ext = max(worst_ext, residual)
                if grade_of(mask) == 1:
                    worst_gen = max(worst_gen, residual)
        generators.record(worst_gen, x)
        extended.record(worst_ext, x)
        center.record(worst_center, x)
    return VerificationReport.from_trackers([generators, extended, center])


def verify_zero_curvature(connection: Connection, points, tolerances: Optional[Dict[str, float]] = None,
                          exact: bool = False) -> VerificationReport:
    """``d_mu C_nu - d_nu C_mu - [C_mu, C_nu] = 0`` and ``D_mu C_rho = d_rho C_mu``."""
    tol = {**DEFAULT_TOLERANCES, **(tolerances or {})}
    curvature = ResidualTracker("zero_curvature", tol["zero_curvature"])
    covariant = ResidualTracker("connection_covariant_derivative", tol["zero_curvature"])
    sig = connection.frame.sig
    for x in _as_points(points, exact):
        jets = evaluate_many(connection.fields, x, 1)
        c = [Multivector(sig, jet.coeffs[0]) for jet in jets]
        dc = [[Multivector(sig, jet.partial(mu)) for jet in jets] for mu in range(1, connection.m + 1)]
        worst_curv = worst_cov = 0.0
        for mu in range(connection.m):
            for nu in range(connection.m):
                bracket = commutator(c[mu], c[nu])
                # dc[mu][nu] is d_mu C_nu
                if mu < nu:
                    residual = dc[mu][nu] - dc[nu][mu] - bracket
                    worst_curv = max(worst_curv, relative_residual(residual, dc[mu][nu], dc[nu][mu], bracket))
                covariant_c = dc[mu][nu] - bracket
                worst_cov = max(worst_cov, relative_residual(covariant_c - dc[nu][mu], covariant_c, dc[nu][mu]))
        curvature.record(worst_curv, x)
        covariant.record(worst_cov, x)
    return VerificationReport.from_trackers([curvature, covariant])


def verify_connection_formulas(frame: Frame, points, tolerances: Optional[Dict[str, float]] = None,
                               exact: bool = False, seed: int = DEFAULT_SEED) -> VerificationReport:
    """Averaged vs projection formula, odd-n reduction, closed forms, projectors and the F eigenvalue law."""
    tol = {**DEFAULT_TOLERANCES, **(tolerances or {})}
    n = frame.n
    odd = n % 2 == 1
    rng = np.random.default_rng(seed)
    table = eigen_table(n)
    trackers = {
        "eigenvalue": ResidualTracker("eigenvalue", tol["eigenvalue"]),
        "equivalence": ResidualTracker("equivalence", tol["equivalence"]),
        "projector": ResidualTracker("projector", tol["projector"]),
    }
    if odd:
        trackers["odd_reduction"] = ResidualTracker("odd_reduction", tol["odd_reduction"])
    if n in (2, 3):
        trackers["explicit_formula"] = ResidualTracker("explicit_formula", tol["explicit_formula"])
    grade_one = frame.provenance in ("constant", "orthogonal")
    if grade_one:
        trackers["spin_connection"] = ResidualTracker("spin_connection", tol["spin_connection"])

    for x in _as_points(points, exact):
        fp = FramePoint(frame, x)
        averaged = connection_averaged(frame, fp)
        projected = connection_projection(frame, fp)
        trackers["equivalence"].record(
            max(relative_residual(a - b, a, b) for a, b in zip(averaged, projected)), x)
        if odd:
            reduced = connection_averaged(frame, fp, reduced=True)
            trackers["odd_reduction"].record(
                max(relative_residual(a - b, a, b) for a, b in zip(averaged, reduced)), x)
        if n in (2, 3):
            explicit = connection_explicit(frame, fp)
            trackers["explicit_formula"].record(
                max(relative_residual(a - b, a, b) for a, b in zip(averaged, explicit)), x)
        if grade_one:
            spin, _ = spin_connection_grade1(frame, fp)
            worst = 0.0
            for a, s in zip(averaged, spin):
                worst = max(worst, relative_residual(a - s, a, s), relative_residual(s - s.grade(2), s))
            trackers["spin_connection"].record(worst, x)

        worst_eig = 0.0
        for k in range(n + 1):
            coeffs = {mask: rng.uniform(-1, 1) for mask in masks_of_grade(frame.sig, k)}
            u = sum((fp.values[mask] * c for mask, c in coeffs.items()), Multivector.zero(frame.sig))
            fu = contraction_F(frame, u, fp)
            worst_eig = max(worst_eig, relative_residual(fu - u * table.lambdas[k], fu, u))
        trackers["eigenvalue"].record(worst_eig, x)

        u = Multivector.random(frame.sig, rng)
        worst_proj = 0.0
        for i in table.distinct:
            grades = [i, n - i] if odd else [i]
            by_f = project_frame_grade(frame, u, i, fp, paired=odd)
            by_solve = project_by_expansion(frame, u, grades, fp)
            worst_proj = max(worst_proj, relative_residual(by_f - by_solve, by_f, by_solve))
        trackers["projector"].record(worst_proj, x)

    return VerificationReport.from_trackers(list(trackers.values()))
