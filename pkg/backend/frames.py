"""
Frame fields h^a(x) with the Clifford relations, in two forms:

* scalar-index frames over any base space R^{k,l};
* vector frames h^mu over R^{p,q} (m = n, Greek indices lowered with eta).

Fixtures come from three constructions: the constant frame e^a, grade-1
frames h^a = y^a_b e^b for an O(p,q)-valued matrix field Y, and gauge frames
S^{-1} h^a S for an invertible scalar S whose logarithmic derivative has no
center component.
"""

import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .clifford_core import (
    Multivector,
    Signature,
    blade_indices,
    blade_square_sign,
    center_project,
    grade_of,
    product_tables,
)
from .config import DEFAULT_SEED, DEFAULT_TOLERANCES, GAUGE_AMPLITUDE, GAUGE_DEGREE, ORTHO_AMPLITUDE, SAMPLE_BOX, SINGULAR_COND
from .exact import is_exact, rational_solve, to_fractions, zeros_like_kind
from .exceptions import FrameError, GaugeError, GradeError
from .jets import (
    BaseSpace,
    Constant,
    Derivative,
    EvaluationContext,
    ExpSeries,
    FieldExpr,
    Inverse,
    Jet2Multivector,
    MatrixKernel,
    Polynomial,
    Product,
    Scale,
    Sum,
    TaylorJet,
    evaluate_many,
    jet_eval,
    make_point,
    monomial_basis,
)
from .residuals import CheckResult, ResidualTracker, VerificationReport, relative_residual

logger = logging.getLogger(__name__)

FRAME_KINDS = ("scalar", "vector")


def sample_points(m: int, count: int, seed: int = DEFAULT_SEED, box: float = SAMPLE_BOX) -> np.ndarray:
    """Uniform points in [-box, box]^m from a seeded generator."""
    if count < 1:
        raise FrameError("need at least one sample point")
    rng = np.random.default_rng(seed)
    return rng.uniform(-box, box, size=(count, m))


def _as_points(points, exact: bool) -> List[np.ndarray]:
    return [make_point(p, exact=exact) for p in np.asarray(points, dtype=float)]


# ---------------------------------------------------------------------------
# O(p,q)-valued matrix fields

class OrthoMatrixField:
    """``Y(x) = D exp(eta A(x))`` with ``A(x) = A0 + sum_mu x^mu A_mu`` antisymmetric.

    ``D = diag(+-1)`` reaches the components of O(p,q) away from the identity.
    """

    def __init__(self, sig: Signature, m: int, a0: np.ndarray, slopes: Sequence[np.ndarray],
                 reflections: Optional[Sequence[int]] = None):
        n = sig.n
        self.sig = sig
        self.m = m
        self.a0 = np.array(a0, dtype=float)
        self.slopes = [np.array(s, dtype=float) for s in slopes]
        self.reflections = np.array(reflections if reflections is not None else [1] * n, dtype=float)
        if len(self.slopes) != m:
            raise FrameError(f"need one slope matrix per base coordinate ({m}), got {len(self.slopes)}")
        for matrix in [self.a0] + self.slopes:
            if matrix.shape != (n, n) or not np.allclose(matrix, -matrix.T):
                raise FrameError("generator matrices must be antisymmetric n x n")
        if self.reflections.shape != (n,) or not np.all(np.abs(self.reflections) == 1):
            raise FrameError("reflections must be a list of +1/-1 of length n")

    @classmethod
    def identity(cls, sig: Signature, m: int) -> "OrthoMatrixField":
        zero = np.zeros((sig.n, sig.n))
        return cls(sig, m, zero, [zero] * m)

    @classmethod
    def rotation(cls, sig: Signature, m: int, plane: Tuple[int, int] = (1, 2), mu: int = 1,
                 rate: float = 1.0) -> "OrthoMatrixField":
        """Rotation in the (a, b) plane by angle ``rate * x^mu`` (a boost when the plane is mixed)."""
        a, b = plane
        slope = np.zeros((sig.n, sig.n))
        slope[a - 1, b - 1] = rate
        slope[b - 1, a - 1] = -rate
        slopes = [slope if nu == mu else np.zeros_like(slope) for nu in range(1, m + 1)]
        return cls(sig, m, np.zeros_like(slope), slopes)

    @classmethod
    def random(cls, sig: Signature, m: int, rng: np.random.Generator, amplitude: float = ORTHO_AMPLITUDE,
               reflect: bool = False) -> "OrthoMatrixField":
        def antisym():
            raw = rng.uniform(-amplitude, amplitude, (sig.n, sig.n))
            return np.triu(raw, 1) - np.triu(raw, 1).T

        reflections = rng.choice([-1, 1], size=sig.n) if reflect else None
        return cls(sig, m, antisym(), [antisym() for _ in range(m)], reflections)

    def taylor(self, ctx: EvaluationContext, order: int) -> TaylorJet:
        kernel = MatrixKernel(self.sig.n)
        eta = self.sig.eta_matrix
        basis = monomial_basis(ctx.m, order)
        generator = np.zeros((basis.size, self.sig.n, self.sig.n))
        point = np.asarray(ctx.point, dtype=float)
        generator[0] = eta @ (self.a0 + sum(x * s for x, s in zip(point, self.slopes)))
        if order >= 1:
            for mu, slope in enumerate(self.slopes, start=1):
                generator[basis.unit(mu)] = eta @ slope
        jet = TaylorJet(kernel, ctx.m, order, generator)
        if ctx.exact:
            # exp has no rational form; TaylorJet.exp raises ExactModeError
            jet = jet.to_exact()
        rotated = jet.exp()
        return TaylorJet(kernel, ctx.m, order, self.reflections[None, :, None] * rotated.coeffs)

    def matrix(self, x) -> np.ndarray:
        ctx = EvaluationContext(make_point(x))
        return self.taylor(ctx, 0).coeffs[0]

    def orthogonality_residual(self, x) -> float:
        y = self.matrix(x)
        eta = self.sig.eta_matrix
        return float(np.max(np.abs(y.T @ eta @ y - eta)))


class OrthoGenerator(FieldExpr):
    """``h^a(x) = y^a_b(x) e^b``."""

    def __init__(self, field: OrthoMatrixField, a: int):
        self.sig = field.sig
        self.field = field
        self.a = a

    def taylor(self, ctx, order):
        ymat = ctx.auxiliary(self.field, order, lambda o: self.field.taylor(ctx, o))
        out = zeros_like_kind((ymat.coeffs.shape[0], self.sig.dim), ymat.exact)
        for b in range(1, self.sig.n + 1):
            out[:, 1 << (b - 1)] = ymat.coeffs[:, self.a - 1, b - 1]
        return TaylorJet(self.kernel, ctx.m, order, out)


# ---------------------------------------------------------------------------
# Gauge scalars

class GaugeScalar:
    """An invertible scalar field S with its inverse expression."""

    def __init__(self, S: FieldExpr, S_inv: FieldExpr, recipe: Optional[Dict] = None):
        if S.sig != S_inv.sig:
            raise GaugeError("S and its inverse live in different algebras")
        self.sig = S.sig
        self.S = S
        self.S_inv = S_inv
        self.recipe = recipe or {"type": "custom"}

    @classmethod
    def identity(cls, sig: Signature) -> "GaugeScalar":
        unit = Constant(Multivector.scalar(sig, 1.0))
        return cls(unit, unit, {"type": "identity"})

    @classmethod
    def from_exponent(cls, exponent: FieldExpr) -> "GaugeScalar":
        """``S = exp(P)`` with cached ``S^{-1} = exp(-P)``."""
        return cls(ExpSeries(exponent), ExpSeries(Scale(-1, exponent)), {"type": "exp"})

    @classmethod
    def cayley(cls, sig: Signature, mask: int, t: FieldExpr) -> "GaugeScalar":
        """``S = (e + tB)(e - tB)^{-1}`` for the blade ``B = e^mask`` with ``B^2 = -e``.

        Every node is rational, so the gauge is usable in exact mode.
        """
        if blade_square_sign(sig, mask) != -1:
            raise GaugeError(f"Cayley gauge needs a blade squaring to -e, got mask {mask}")
        if mask in (0, sig.pseudoscalar_mask) and (mask == 0 or sig.n % 2):
            raise GaugeError("Cayley blade must not be central")
        blade = Constant(Multivector.blade(sig, mask))
        unit = Constant(Multivector.scalar(sig, 1.0))
        tb = Product(t, blade)
        plus = Sum([unit, tb])
        minus = Sum([unit, Scale(-1, tb)])
        return cls(Product(plus, Inverse(minus)), Product(minus, Inverse(plus)), {"type": "cayley", "mask": mask})

    @classmethod
    def random(cls, sig: Signature, m: int, rng: np.random.Generator, amplitude: float = GAUGE_AMPLITUDE,
               degree: int = GAUGE_DEGREE) -> "GaugeScalar":
        """``exp(P(x))``, P of degree <= ``degree`` with grade-1 and grade-2 coefficients.

        For odd n the grade-n part would be central, so it is left out.
        """
        grades = [j for j in (1, 2) if j <= sig.n and not (sig.n % 2 and j == sig.n)]
        if not grades:
            raise GaugeError(f"{sig} has no non-central grade-1 or grade-2 directions")
        _, _, blade_grades = product_tables(sig)
        terms = []
        for d in range(degree + 1):
            for alpha in monomial_basis(m, degree).exponents:
                if sum(alpha) != d:
                    continue
                coeffs = rng.uniform(-amplitude, amplitude, sig.dim)
                coeffs = np.where(np.isin(blade_grades, grades), coeffs, 0.0)
                coeffs /= (d + 1) * np.sqrt(np.count_nonzero(coeffs) or 1)
                terms.append((alpha, Multivector(sig, coeffs)))
        return cls.from_exponent(Polynomial(sig, terms))

    def inverse(self) -> "GaugeScalar":
        return GaugeScalar(self.S_inv, self.S, {"type": "inverse", "of": self.recipe})

    def log_derivative(self, mu: int) -> FieldExpr:
        """``S^{-1} d_mu S``."""
        return Product(self.S_inv, Derivative(self.S, mu))

    def validate(self, points, m: int, tol: Optional[float] = None, exact: bool = False) -> CheckResult:
        tol = tol or DEFAULT_TOLERANCES["gauge_scalar"]
        tracker = ResidualTracker("gauge_scalar", tol)
        logs = [self.log_derivative(mu) for mu in range(1, m + 1)]
        unit = Multivector.scalar(self.sig, 1.0)
        for x in _as_points(points, exact):
            ctx = EvaluationContext(x)
            jets = evaluate_many([self.S, self.S_inv] + logs, x, 0, ctx)
            s, s_inv = (Multivector(self.sig, j.coeffs[0]) for j in jets[:2])
            worst = relative_residual(s * s_inv - unit, s, s_inv)
            for jet in jets[2:]:
                log = Multivector(self.sig, jet.coeffs[0])
                worst = max(worst, relative_residual(center_project(log), log))
            tracker.record(worst, x)
        return tracker.summary()


# ---------------------------------------------------------------------------
# Frames

class Frame:

    def __init__(self, sig: Signature, base: BaseSpace, gens: Sequence[FieldExpr], kind: str = "scalar",
                 provenance: str = "constant", ortho: Optional[OrthoMatrixField] = None,
                 gauge: Optional[GaugeScalar] = None, parent: Optional["Frame"] = None,
                 recipe: Optional[Dict] = None):
        if kind not in FRAME_KINDS:
            raise FrameError(f"unknown frame kind '{kind}'")
        if kind == "vector" and (base.k, base.l) != (sig.p, sig.q):
            raise FrameError(f"vector frames need base (p,q) = ({sig.p},{sig.q}), got ({base.k},{base.l})")
        if len(gens) != sig.n:
            raise FrameError(f"{sig} needs {sig.n} generator fields, got {len(gens)}")
        for gen in gens:
            if gen.sig != sig:
                raise FrameError("generator field over the wrong algebra")
        self.sig = sig
        self.base = base
        self.kind = kind
        self.gens = tuple(gens)
        self.provenance = provenance
        self.ortho = ortho
        self.gauge = gauge
        self.parent = parent
        self.recipe = recipe or {"type": provenance}
        self._blades: Dict[int, FieldExpr] = {}
        self._unit = Constant(Multivector.scalar(sig, 1.0))

    @property
    def n(self) -> int:
        return self.sig.n

    @property
    def m(self) -> int:
        return self.base.m

    def upper(self, a: int) -> FieldExpr:
        return self.gens[a - 1]

    def lower(self, a: int) -> FieldExpr:
        """``h_a = eta_aa h^a``."""
        return Scale(self.sig.eta(a), self.gens[a - 1])

    def blade(self, mask: int) -> FieldExpr:
        """``h^A = h^{a1} ... h^{aj}`` (increasing indices); nodes are shared."""
        if mask in self._blades:
            return self._blades[mask]
        if mask == 0:
            node = self._unit
        elif grade_of(mask) == 1:
            node = self.gens[mask.bit_length() - 1]
        else:
            top = 1 << (mask.bit_length() - 1)
            node = Product(self.blade(mask ^ top), self.gens[top.bit_length() - 1])
        self._blades[mask] = node
        return node

    def lower_blade(self, mask: int) -> FieldExpr:
        """``h_A = (h^A)^{-1} = s_A h^A`` with ``e^A e^A = s_A e``."""
        return Scale(blade_square_sign(self.sig, mask), self.blade(mask))

    def blade_values(self, x: np.ndarray, ctx: Optional[EvaluationContext] = None) -> List[Multivector]:
        fields = [self.blade(mask) for mask in range(self.sig.dim)]
        jets = evaluate_many(fields, x, 0, ctx)
        return [Multivector(self.sig, jet.coeffs[0]) for jet in jets]

    def describe(self) -> Dict:
        return {"signature": [self.sig.p, self.sig.q], "base": [self.base.k, self.base.l],
                "kind": self.kind, "provenance": self.provenance}

    def __repr__(self):
        return f"Frame({self.sig}, {self.base}, kind={self.kind}, provenance={self.provenance})"


def constant_frame(sig: Signature, base: Optional[BaseSpace] = None, kind: str = "scalar") -> Frame:
    base = base or BaseSpace.matching(sig)
    gens = [Constant(Multivector.generator(sig, a)) for a in range(1, sig.n + 1)]
    return Frame(sig, base, gens, kind=kind, provenance="constant")


def orthogonal_frame(field: OrthoMatrixField, base: Optional[BaseSpace] = None, kind: str = "scalar",
                     check_points: int = 5, tol: Optional[float] = None) -> Frame:
    base = base or BaseSpace.matching(field.sig)
    if base.m != field.m:
        raise FrameError(f"matrix field is defined over m={field.m}, base space has m={base.m}")
    tol = tol or DEFAULT_TOLERANCES["anticommutation"]
    for x in sample_points(field.m, check_points):
        residual = field.orthogonality_residual(x)
        if residual > tol:
            raise FrameError(f"Y^T eta Y deviates from eta by {residual:.3g} at {x}")
    gens = [OrthoGenerator(field, a) for a in range(1, field.sig.n + 1)]
    return Frame(field.sig, base, gens, kind=kind, provenance="orthogonal", ortho=field)


def gauge_frame(S: GaugeScalar, base_frame: Frame, check_points: int = 5, tol: Optional[float] = None) -> Frame:
    """``h^a = S^{-1} base^a S``."""
    if S.sig != base_frame.sig:
        raise GaugeError(f"gauge scalar over {S.sig} cannot act on a frame over {base_frame.sig}")
    result = S.validate(sample_points(base_frame.m, check_points), base_frame.m, tol)
    if not result.passed:
        raise GaugeError(f"gauge scalar invalid: residual {result.max_residual:.3g} at {result.worst_point}")
    gens = [Product(Product(S.S_inv, gen), S.S) for gen in base_frame.gens]
    return Frame(base_frame.sig, base_frame.base, gens, kind=base_frame.kind, provenance="gauge",
                 gauge=S, parent=base_frame)


def reindex_frame(frame: Frame, Z: np.ndarray, tol: float = 1e-10) -> Frame:
    """Vector frame ``h^mu = z^mu_a h^a`` from a scalar-index frame over R^{p,q}."""
    sig = frame.sig
    if (frame.base.k, frame.base.l) != (sig.p, sig.q):
        raise FrameError("re-indexing needs a frame over R^{p,q}")
    Z = np.array(Z, dtype=float)
    eta = sig.eta_matrix
    if Z.shape != (sig.n, sig.n) or np.max(np.abs(Z.T @ eta @ Z - eta)) > tol:
        raise FrameError("Z must be an O(p,q) matrix")
    gens = []
    for mu in range(sig.n):
        terms = [Scale(Z[mu, a], frame.gens[a]) for a in range(sig.n) if Z[mu, a] != 0]
        gens.append(Sum(terms) if terms else Constant(Multivector.zero(sig)))
    return Frame(sig, frame.base, gens, kind="vector", provenance=frame.provenance, gauge=frame.gauge,
                 ortho=frame.ortho, parent=frame, recipe={"type": "reindex", "Z": Z.tolist()})


def scaled_generator(frame: Frame, a: int = 1, factor: float = 1.1) -> Frame:
    """Deliberately broken copy of ``frame`` with ``h^a`` rescaled."""
    gens = list(frame.gens)
    gens[a - 1] = Scale(factor, gens[a - 1])
    return Frame(frame.sig, frame.base, gens, kind=frame.kind, provenance="broken", parent=frame,
                 recipe={"type": "broken", "generator": a, "factor": factor})


# ---------------------------------------------------------------------------
# Operations at a point

def extended_basis(frame: Frame, x) -> List[Jet2Multivector]:
    point = x if isinstance(x, np.ndarray) else make_point(x)
    ctx = EvaluationContext(point)
    fields = [frame.blade(mask) for mask in range(frame.sig.dim)]
    ctx.plan([(f, 2) for f in fields])
    return [jet_eval(f, point, ctx) for f in fields]


def basis_matrix(frame: Frame, x, ctx: Optional[EvaluationContext] = None) -> np.ndarray:
    """Columns are the e-basis coefficients of ``h^B(x)``."""
    point = x if isinstance(x, np.ndarray) else make_point(x)
    blades = frame.blade_values(point, ctx)
    return np.stack([b.coeffs for b in blades], axis=1)


def expand_in_frame(u: Multivector, frame: Frame, x, ctx: Optional[EvaluationContext] = None) -> np.ndarray:
    """Coefficients ``u{h}_B`` with ``u = sum_B u{h}_B h^B(x)``."""
    matrix = basis_matrix(frame, x, ctx)
    if is_exact(matrix) or u.exact:
        return rational_solve(to_fractions(matrix), to_fractions(u.coeffs))
    cond = np.linalg.cond(matrix)
    if not np.isfinite(cond) or cond > SINGULAR_COND:
        raise FrameError(f"frame basis is singular at {x} (condition estimate {cond:.3g})")
    return np.linalg.solve(matrix, u.coeffs)


def recombine(coefficients: np.ndarray, frame: Frame, x, ctx: Optional[EvaluationContext] = None) -> Multivector:
    matrix = basis_matrix(frame, x, ctx)
    return Multivector(frame.sig, matrix @ coefficients)


def check_grade_one(frame: Frame, x, tol: float = 1e-10) -> None:
    for a, h in enumerate(frame.blade_values(x)[1:], start=1):
        if grade_of(a) != 1:
            continue
        leak = h - h.grade(1)
        if leak.norm() > tol * max(1.0, h.norm()):
            raise GradeError(f"h^{blade_indices(a)[0]} is not grade-1 at {x}")


def validate_frame(frame: Frame, points, tolerances: Optional[Dict[str, float]] = None,
                   exact: bool = False) -> VerificationReport:
    """Anticommutation, trace and pseudoscalar constancy (odd n), vector identities."""
    tol = {**DEFAULT_TOLERANCES, **(tolerances or {})}
    sig = frame.sig
    n = sig.n
    trackers = [ResidualTracker("anticommutation", tol["anticommutation"])]
    if n % 2:
        trackers.append(ResidualTracker("trace", tol["trace"]))
        trackers.append(ResidualTracker("pseudoscalar", tol["pseudoscalar"]))
    if frame.kind == "vector":
        trackers.append(ResidualTracker("vector_identities", tol["vector_identities"]))
    by_name = {t.name: t for t in trackers}

    # anticommutation residuals are relative to max(1, |h^a|, |h^b|); the absolute norm is kept alongside
    worst_absolute = 0.0
    full = sig.pseudoscalar_mask
    reference: Optional[Multivector] = None
    e_full = Multivector.blade(sig, full)
    for x in _as_points(points, exact):
        ctx = EvaluationContext(x)
        h = frame.blade_values(x, ctx)
        gens = [h[1 << (a - 1)] for a in range(1, n + 1)]

        worst = 0.0
        absolute = 0.0
        for a in range(n):
            for b in range(a, n):
                anti = gens[a] * gens[b] + gens[b] * gens[a]
                target = Multivector.scalar(sig, 2.0 * sig.eta(a + 1)) if a == b else Multivector.zero(sig)
                worst = max(worst, relative_residual(anti - target, gens[a], gens[b]))
                absolute = max(absolute, float((anti - target).norm()))
        worst_absolute = max(worst_absolute, absolute)
        by_name["anticommutation"].record(worst, x, absolute=absolute)

        if n % 2:
            top = h[full]
            by_name["trace"].record(relative_residual(top.grade(0), top), x)
            reference = reference if reference is not None else top
            drift = relative_residual(top - reference, top, reference)
            sign_gap = min(relative_residual(top - e_full), relative_residual(top + e_full))
            by_name["pseudoscalar"].record(max(drift, sign_gap), x)

        if frame.kind == "vector":
            lowered = [gens[mu] * sig.eta(mu + 1) for mu in range(n)]
            contraction = sum((lowered[mu] * gens[mu] for mu in range(n)), Multivector.zero(sig))
            worst = relative_residual(contraction - Multivector.scalar(sig, float(n)), contraction)
            for nu in range(n):
                sandwich = sum((lowered[mu] * gens[nu] * gens[mu] for mu in range(n)), Multivector.zero(sig))
                worst = max(worst, relative_residual(sandwich - gens[nu] * (2 - n), sandwich, gens[nu]))
            by_name["vector_identities"].record(worst, x)

    by_name["anticommutation"].detail = {"scaling": "max(1, |h^a|, |h^b|)", "max_absolute": worst_absolute}
    report = VerificationReport.from_trackers(trackers)
    for check in report.checks:
        if check.passed:
            logger.info(f"✓ {check.name}: max residual {check.max_residual:.3g}")
        else:
            logger.warning(f"{check.name} failed: max residual {check.max_residual:.3g} at {check.worst_point}")
    return report
