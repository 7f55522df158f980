"""
Covariant derivatives and Yang-Mills fields built from a frame and its
connection.

A covector K_mu = sum_B k_{mu B} h^B with constant coefficients is
covariantly constant, and B_mu = C_mu + K_mu solves the Yang-Mills system
with F_mu_nu = -[K_mu, K_nu] and J^nu = [K_mu, [K^mu, K^nu]]. For vector
frames K_mu = sigma h_mu gives J^nu = 4(n-1) sigma^3 h^nu.
"""

import logging
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .clifford_core import Multivector, commutator
from .config import CONSERVATION_STEP, DEFAULT_SEED, DEFAULT_TOLERANCES
from .connection import Connection, connection_field, verify_defining_equation
from .exceptions import ConnectionMismatchError, CovariantConstancyError, FrameError, GaugeError
from .frames import Frame, GaugeScalar, _as_points, sample_points
from .jets import (
    BaseSpace,
    Derivative,
    EvaluationContext,
    FieldExpr,
    Polynomial,
    Product,
    Scale,
    Sum,
    commutator_field,
    derivative,
    evaluate_many,
    make_point,
    monomial_basis,
    zero_field,
)
from .residuals import CheckResult, ResidualTracker, VerificationReport, relative_residual

logger = logging.getLogger(__name__)


class CovDerivContext:
    """A frame together with the connection that solves its defining equation."""

    def __init__(self, frame: Frame, connection: Optional[Connection] = None, check_points: int = 3,
                 tolerances: Optional[Dict[str, float]] = None):
        connection = connection or connection_field(frame)
        if connection.m != frame.m:
            raise ConnectionMismatchError(f"connection has {connection.m} components, base space has m={frame.m}")
        if check_points:
            report = verify_defining_equation(frame, connection, sample_points(frame.m, check_points), tolerances)
            if not report.passed:
                raise ConnectionMismatchError(
                    f"connection does not solve the defining equation: {report.failures()}")
        self.frame = frame
        self.connection = connection

    @property
    def sig(self):
        return self.frame.sig

    @property
    def base(self) -> BaseSpace:
        return self.frame.base

    @property
    def m(self) -> int:
        return self.frame.m


def covariant_derivative(ctx: CovDerivContext, U: FieldExpr, mu: int) -> FieldExpr:
    """``D_mu U = d_mu U - [C_mu, U]``."""
    return Sum([derivative(U, mu), Scale(-1, commutator_field(ctx.connection.field(mu), U))])


# ---------------------------------------------------------------------------
# Covariantly constant covectors

class CovConstCovector:
    """``K_mu(x) = sum_B k[mu, B] h^B(x)`` with constant real coefficients."""

    def __init__(self, ctx: CovDerivContext, coefficients: np.ndarray, center_free: bool = True):
        sig = ctx.sig
        k = np.array(coefficients, dtype=float)
        if k.shape != (ctx.m, sig.dim):
            raise CovariantConstancyError(f"coefficients need shape ({ctx.m}, {sig.dim}), got {k.shape}")
        if center_free:
            k[:, 0] = 0.0
            if sig.n % 2:
                k[:, sig.pseudoscalar_mask] = 0.0
        self.ctx = ctx
        self.coefficients = k
        self.center_free = center_free
        fields = []
        for mu in range(ctx.m):
            terms = [Scale(k[mu, mask], ctx.frame.blade(mask)) for mask in range(sig.dim) if k[mu, mask] != 0]
            fields.append(Sum(terms) if terms else zero_field(sig))
        self.fields = tuple(fields)
        self.check: Optional[CheckResult] = None

    @property
    def m(self) -> int:
        return len(self.fields)

    def has_center(self) -> bool:
        sig = self.ctx.sig
        central = [0] + ([sig.pseudoscalar_mask] if sig.n % 2 else [])
        return bool(np.any(self.coefficients[:, central] != 0))

    def values(self, x, ectx: Optional[EvaluationContext] = None) -> List[Multivector]:
        return [Multivector(f.sig, jet.coeffs[0]) for f, jet in zip(self.fields, evaluate_many(self.fields, x, 0, ectx))]


def sigma_coefficients(ctx: CovDerivContext, sigma: float) -> np.ndarray:
    """Coefficients of ``K_mu = sigma h_mu = sigma eta_mumu h^mu`` on a vector frame."""
    if ctx.frame.kind != "vector":
        raise FrameError("K = sigma h_mu needs a vector frame")
    k = np.zeros((ctx.m, ctx.sig.dim))
    for mu in range(1, ctx.m + 1):
        k[mu - 1, 1 << (mu - 1)] = sigma * ctx.sig.eta(mu)
    return k


def random_coefficients(ctx: CovDerivContext, rng: np.random.Generator, scale: float = 0.5) -> np.ndarray:
    return rng.uniform(-scale, scale, size=(ctx.m, ctx.sig.dim))


def covariant_constancy_check(ctx: CovDerivContext, fields: Sequence[FieldExpr], points,
                              tol: Optional[float] = None, exact: bool = False) -> CheckResult:
    tracker = ResidualTracker("covariant_constancy", tol or DEFAULT_TOLERANCES["covariant_constancy"])
    derivatives = [covariant_derivative(ctx, f, nu) for f in fields for nu in range(1, ctx.m + 1)]
    for x in _as_points(points, exact):
        ectx = EvaluationContext(x)
        vals = evaluate_many(list(fields) + derivatives, x, 0, ectx)
        scale = max([1.0] + [float(np.max(np.abs(np.asarray(v.coeffs[0], dtype=float)))) for v in vals[:len(fields)]])
        worst = max((float(np.max(np.abs(np.asarray(v.coeffs[0], dtype=float)))) for v in vals[len(fields):]),
                    default=0.0)
        tracker.record(worst / scale, x)
    return tracker.summary()


def covconst_build(ctx: CovDerivContext, coefficients: np.ndarray, center_free: bool = True,
                   points=None, tol: Optional[float] = None) -> CovConstCovector:
    K = CovConstCovector(ctx, coefficients, center_free)
    points = points if points is not None else sample_points(ctx.m, 5, DEFAULT_SEED)
    K.check = covariant_constancy_check(ctx, K.fields, points, tol)
    if K.check.passed:
        logger.debug(f"✓ covariantly constant K (residual {K.check.max_residual:.3g})")
    else:
        logger.warning(f"K is not covariantly constant: residual {K.check.max_residual:.3g}")
    return K


def algebraic_bracket(K: CovConstCovector, x, ectx: Optional[EvaluationContext] = None) -> List[Multivector]:
    """``J^nu = sum_mu rho^mumu rho^nunu [K_mu, [K_mu, K_nu]]``."""
    base = K.ctx.base
    ks = K.values(x, ectx)
    out = []
    for nu in range(1, K.m + 1):
        total = Multivector.zero(K.ctx.sig, ks[0].exact)
        for mu in range(1, K.m + 1):
            inner = commutator(ks[mu - 1], ks[nu - 1])
            total = total + commutator(ks[mu - 1], inner) * (base.rho(mu) * base.rho(nu))
        out.append(total)
    return out


# ---------------------------------------------------------------------------
# Curvature and current

class CurvatureField:
    """``F_mu_nu = d_mu B_nu - d_nu B_mu - [B_mu, B_nu]``, antisymmetric by construction."""

    def __init__(self, potentials: Sequence[FieldExpr]):
        self.potentials = tuple(potentials)
        self.m = len(self.potentials)
        self.sig = self.potentials[0].sig
        self._upper: Dict[Tuple[int, int], FieldExpr] = {}
        for mu in range(1, self.m + 1):
            for nu in range(mu + 1, self.m + 1):
                b_mu, b_nu = self.potentials[mu - 1], self.potentials[nu - 1]
                self._upper[(mu, nu)] = Sum([
                    derivative(b_nu, mu),
                    Scale(-1, derivative(b_mu, nu)),
                    Scale(-1, commutator_field(b_mu, b_nu)),
                ])
        self._zero = zero_field(self.sig)
        self._lower = {key: Scale(-1, node) for key, node in self._upper.items()}

    def __call__(self, mu: int, nu: int) -> FieldExpr:
        if mu == nu:
            return self._zero
        if mu < nu:
            return self._upper[(mu, nu)]
        return self._lower[(nu, mu)]

    def fields(self) -> List[FieldExpr]:
        return list(self._upper.values())


def curvature(potentials: Sequence[FieldExpr]) -> CurvatureField:
    return CurvatureField(potentials)


def current(potentials: Sequence[FieldExpr], F: CurvatureField, base: BaseSpace) -> Tuple[FieldExpr, ...]:
    """``J^nu = sum_mu rho^mumu rho^nunu (d_mu F_mu_nu - [B_mu, F_mu_nu])``."""
    out = []
    m = len(potentials)
    for nu in range(1, m + 1):
        terms = []
        for mu in range(1, m + 1):
            if mu == nu:
                continue
            f = F(mu, nu)
            sign = base.rho(mu) * base.rho(nu)
            terms.append(Scale(sign, Derivative(f, mu)))
            terms.append(Scale(-sign, commutator_field(potentials[mu - 1], f)))
        out.append(Sum(terms) if terms else zero_field(potentials[0].sig))
    return tuple(out)


class YangMillsField:
    """Potential B with its derived curvature F and current J.

    ``expected_curvature`` and ``expected_current`` give the closed forms the
    construction predicts (conjugated by every gauge applied since).
    """

    def __init__(self, potentials: Sequence[FieldExpr], base: BaseSpace, ctx: Optional[CovDerivContext] = None,
                 K: Optional[CovConstCovector] = None, sigma: Optional[float] = None,
                 conjugators: Sequence[GaugeScalar] = ()):
        if len(potentials) != base.m:
            raise FrameError(f"need {base.m} potential components, got {len(potentials)}")
        self.potentials = tuple(potentials)
        self.base = base
        self.sig = self.potentials[0].sig
        self.ctx = ctx
        self.K = K
        self.sigma = sigma
        self.epsilon = None if sigma is None else 4 * (self.sig.n - 1) * sigma ** 3
        self.conjugators = tuple(conjugators)
        self.F = curvature(self.potentials)
        self.J = current(self.potentials, self.F, base)

    @property
    def m(self) -> int:
        return self.base.m

    def _conjugate(self, values: List[Multivector], x, ectx: EvaluationContext) -> List[Multivector]:
        for S in self.conjugators:
            s, s_inv = (Multivector(self.sig, j.coeffs[0]) for j in evaluate_many([S.S, S.S_inv], x, 0, ectx))
            values = [s_inv * v * s for v in values]
        return values

    def expected_curvature(self, x, ectx: Optional[EvaluationContext] = None) -> Dict[Tuple[int, int], Multivector]:
        point = x if isinstance(x, np.ndarray) else make_point(x)
        ectx = ectx or EvaluationContext(point)
        pairs = [(mu, nu) for mu in range(1, self.m + 1) for nu in range(mu + 1, self.m + 1)]
        if self.K is None:
            return {pair: Multivector.zero(self.sig) for pair in pairs}
        ks = self.K.values(point, ectx)
        values = [-commutator(ks[mu - 1], ks[nu - 1]) for mu, nu in pairs]
        return dict(zip(pairs, self._conjugate(values, point, ectx)))

    def expected_current(self, x, ectx: Optional[EvaluationContext] = None) -> List[Multivector]:
        point = x if isinstance(x, np.ndarray) else make_point(x)
        ectx = ectx or EvaluationContext(point)
        if self.K is None:
            return [Multivector.zero(self.sig) for _ in range(self.m)]
        if self.sigma is not None:
            gens = evaluate_many(list(self.ctx.frame.gens), point, 0, ectx)
            values = [Multivector(self.sig, g.coeffs[0]) * self.epsilon for g in gens]
        else:
            values = algebraic_bracket(self.K, point, ectx)
        return self._conjugate(values, point, ectx)

    def current_values(self, x, ectx: Optional[EvaluationContext] = None) -> List[Multivector]:
        return [Multivector(self.sig, j.coeffs[0]) for j in evaluate_many(self.J, x, 0, ectx)]

    def potential_values(self, x, ectx: Optional[EvaluationContext] = None) -> List[Multivector]:
        return [Multivector(self.sig, j.coeffs[0]) for j in evaluate_many(self.potentials, x, 0, ectx)]


def build_covconst_solution(ctx: CovDerivContext, K: CovConstCovector) -> YangMillsField:
    """``B_mu = C_mu + K_mu``."""
    if K.ctx is not ctx:
        raise CovariantConstancyError("K was built for a different frame context")
    if K.check is None:
        K.check = covariant_constancy_check(ctx, K.fields, sample_points(ctx.m, 5))
    if not K.check.passed:
        raise CovariantConstancyError(f"K is not covariantly constant (residual {K.check.max_residual:.3g})")
    if K.has_center():
        raise CovariantConstancyError("K must be center-free to serve as a potential part")
    potentials = [Sum([c, k]) for c, k in zip(ctx.connection.fields, K.fields)]
    return YangMillsField(potentials, ctx.base, ctx=ctx, K=K)


def build_sigma_solution(frame: Frame, sigma: float, ctx: Optional[CovDerivContext] = None) -> YangMillsField:
    """``B_mu = sigma h_mu + C_mu`` with ``J^nu = 4(n-1) sigma^3 h^nu``."""
    if frame.kind != "vector":
        raise FrameError(f"sigma solutions need a vector frame, got kind '{frame.kind}'")
    ctx = ctx or CovDerivContext(frame)
    K = covconst_build(ctx, sigma_coefficients(ctx, sigma))
    field = build_covconst_solution(ctx, K)
    field.sigma = sigma
    field.epsilon = 4 * (frame.n - 1) * sigma ** 3
    logger.info(f"Built sigma solution on {frame.sig}: sigma={sigma}, epsilon={field.epsilon}")
    return field


def vacuum_field(S: GaugeScalar, base: BaseSpace) -> YangMillsField:
    """``B_mu = -S^{-1} d_mu S`` (pure gauge: F = 0, J = 0)."""
    potentials = [Scale(-1, S.log_derivative(mu)) for mu in range(1, base.m + 1)]
    return YangMillsField(potentials, base)


def gauge_transform_field(field: YangMillsField, S: GaugeScalar) -> YangMillsField:
    """``B -> S^{-1} B S - S^{-1} d S``; F and J follow by conjugation."""
    if S.sig != field.sig:
        raise GaugeError(f"gauge scalar over {S.sig} cannot act on a field over {field.sig}")
    potentials = [Sum([Product(Product(S.S_inv, b), S.S), Scale(-1, S.log_derivative(mu))])
                  for mu, b in enumerate(field.potentials, start=1)]
    out = YangMillsField(potentials, field.base, ctx=field.ctx, K=field.K, sigma=field.sigma,
                         conjugators=field.conjugators + (S,))
    return out


# ---------------------------------------------------------------------------
# Residuals

def ym_residuals(field: YangMillsField, points, tolerances: Optional[Dict[str, float]] = None,
                 exact: bool = False) -> VerificationReport:
    """First equation against the predicted F, second equation against the predicted J."""
    tol = {**DEFAULT_TOLERANCES, **(tolerances or {})}
    first = ResidualTracker("ym_first", tol["ym_first"])
    second = ResidualTracker("ym_second", tol["ym_second"])
    trackers = [first, second]
    bracket = None
    if field.sigma is not None and field.K is not None:
        bracket = ResidualTracker("bracket_identity", tol["ym_second"])
        trackers.append(bracket)
    pairs = [(mu, nu) for mu in range(1, field.m + 1) for nu in range(mu + 1, field.m + 1)]
    f_nodes = [field.F(mu, nu) for mu, nu in pairs]
    for x in _as_points(points, exact):
        ectx = EvaluationContext(x)
        jets = evaluate_many(f_nodes + list(field.J), x, 0, ectx)
        f_vals = [Multivector(field.sig, j.coeffs[0]) for j in jets[:len(pairs)]]
        j_vals = [Multivector(field.sig, j.coeffs[0]) for j in jets[len(pairs):]]
        expected_f = field.expected_curvature(x, ectx)
        expected_j = field.expected_current(x, ectx)
        worst = 0.0
        for pair, value in zip(pairs, f_vals):
            worst = max(worst, relative_residual(value - expected_f[pair], value, expected_f[pair]))
        first.record(worst, x)
        second.record(max((relative_residual(a - b, a, b) for a, b in zip(j_vals, expected_j)), default=0.0), x)
        if bracket is not None:
            alg = field._conjugate(algebraic_bracket(field.K, x, ectx), x, ectx)
            bracket.record(max(relative_residual(a - b, a, b) for a, b in zip(alg, expected_j)), x)
    return VerificationReport.from_trackers(trackers)


def conservation_residual(field: YangMillsField, points, step: float = CONSERVATION_STEP,
                          tol: Optional[float] = None,
                          current_override: Optional[Callable[[np.ndarray], List[Multivector]]] = None) -> CheckResult:
    """``d_nu J^nu - [B_nu, J^nu]`` with the outer derivative by central differences."""
    tracker = ResidualTracker("conservation", tol or DEFAULT_TOLERANCES["conservation"])
    currents = current_override or (lambda y: field.current_values(y))
    eye = np.eye(field.m)
    for x in np.asarray(points, dtype=float):
        js = currents(x)
        bs = field.potential_values(x)
        divergence = Multivector.zero(field.sig)
        scale_terms = list(js)
        for nu in range(field.m):
            forward = currents(x + step * eye[nu])[nu]
            backward = currents(x - step * eye[nu])[nu]
            d_nu = (forward - backward) / (2 * step)
            scale_terms.append(d_nu)
            divergence = divergence + d_nu - commutator(bs[nu], js[nu])
        tracker.record(relative_residual(divergence, *scale_terms), x)
    return tracker.summary()


def scaled_current(field: YangMillsField, axis: int = 1, slope: float = 0.1) -> Callable[[np.ndarray], List[Multivector]]:
    """``(1 + slope x^axis) J`` - a current that violates the conservation law when J != 0."""
    def probe(x: np.ndarray) -> List[Multivector]:
        factor = 1.0 + slope * float(x[axis - 1])
        return [j * factor for j in field.current_values(x)]
    return probe


def gauge_invariance(before: VerificationReport, after: VerificationReport, factor: float = 10.0) -> CheckResult:
    """Largest change of any residual across a gauge transform, against ``factor`` x its tolerance."""
    tracker = ResidualTracker("gauge_invariance", 1.0)
    worst_ratio = 0.0
    worst_delta = 0.0
    for check in before.checks:
        delta = abs(after.residual(check.name) - check.max_residual)
        worst_delta = max(worst_delta, delta)
        worst_ratio = max(worst_ratio, delta / (factor * check.tolerance))
    tracker.record(worst_ratio)
    tracker.detail = {"max_delta": worst_delta, "factor": factor}
    return tracker.summary()


def round_trip_residual(field: YangMillsField, S: GaugeScalar, points, tol: Optional[float] = None) -> CheckResult:
    """Transform by S then by S^{-1}; the potential must come back."""
    back = gauge_transform_field(gauge_transform_field(field, S), S.inverse())
    tracker = ResidualTracker("round_trip", tol or DEFAULT_TOLERANCES["round_trip"])
    for x in np.asarray(points, dtype=float):
        original = field.potential_values(x)
        restored = back.potential_values(x)
        tracker.record(max(relative_residual(a - b, a, b) for a, b in zip(original, restored)), x)
    return tracker.summary()


# ---------------------------------------------------------------------------
# Properties of D

def coefficient_field(ctx: CovDerivContext, rng: np.random.Generator, degree: int = 2,
                      scale: float = 0.5) -> Tuple[FieldExpr, FieldExpr]:
    """Random ``U = sum_B u_B(x) h^B`` with polynomial u_B, and ``sum_B d_1 u_B h^B`` for comparison."""
    sig = ctx.sig
    unit = Multivector.scalar(sig, 1.0)
    exponents = monomial_basis(ctx.m, degree).exponents
    terms, derivative_terms = [], []
    for mask in range(sig.dim):
        coefficients = [(alpha, unit * float(rng.uniform(-scale, scale))) for alpha in exponents]
        u = Polynomial(sig, coefficients)
        terms.append(Product(u, ctx.frame.blade(mask)))
        derivative_terms.append(Product(Derivative(u, 1), ctx.frame.blade(mask)))
    return Sum(terms), Sum(derivative_terms)


def covderiv_property_suite(ctx: CovDerivContext, points, seed: int = DEFAULT_SEED,
                            tolerances: Optional[Dict[str, float]] = None, exact: bool = False) -> VerificationReport:
    """Linearity, Leibniz, commutation of D, the cyclic identities on [C_mu, C_nu],
    ``D_mu C_rho = d_rho C_mu``, coefficientwise action and the non-commutation witness."""
    tol = {**DEFAULT_TOLERANCES, **(tolerances or {})}["property_suite"]
    rng = np.random.default_rng(seed)
    m = ctx.m
    C = ctx.connection.fields
    U, dU_coeffwise = coefficient_field(ctx, rng)
    W, _ = coefficient_field(ctx, rng)
    a, b = float(rng.uniform(-2, 2)), float(rng.uniform(-2, 2))

    def D(field, mu):
        return covariant_derivative(ctx, field, mu)

    checks: Dict[str, List[Tuple[FieldExpr, FieldExpr]]] = {name: [] for name in (
        "linearity", "leibniz", "commutation", "coefficientwise", "cyclic_partial", "cyclic_covariant",
        "connection_derivative", "noncommutation")}
    checks["coefficientwise"].append((D(U, 1), dU_coeffwise))
    for mu in range(1, m + 1):
        checks["linearity"].append((D(Sum([Scale(a, U), Scale(b, W)]), mu), Sum([Scale(a, D(U, mu)), Scale(b, D(W, mu))])))
        checks["leibniz"].append((D(Product(U, W), mu), Sum([Product(D(U, mu), W), Product(U, D(W, mu))])))
        for nu in range(1, m + 1):
            if mu < nu:
                checks["commutation"].append((D(D(U, nu), mu), D(D(U, mu), nu)))
            checks["connection_derivative"].append((D(C[nu - 1], mu), Derivative(C[mu - 1], nu)))
            witness = Sum([Derivative(D(U, mu), nu), Scale(-1, D(Derivative(U, nu), mu))])
            checks["noncommutation"].append((witness, commutator_field(U, Derivative(C[mu - 1], nu))))
    for lam in range(1, m + 1):
        for mu in range(lam + 1, m + 1):
            for nu in range(mu + 1, m + 1):
                cyc = [(lam, mu, nu), (mu, nu, lam), (nu, lam, mu)]
                partial = Sum([Derivative(commutator_field(C[i - 1], C[j - 1]), k) for k, i, j in cyc])
                covariant = Sum([D(commutator_field(C[i - 1], C[j - 1]), k) for k, i, j in cyc])
                checks["cyclic_partial"].append((partial, zero_field(ctx.sig)))
                checks["cyclic_covariant"].append((covariant, zero_field(ctx.sig)))

    trackers = {name: ResidualTracker(name, tol) for name, pairs in checks.items() if pairs}
    flat = [(name, lhs, rhs) for name, pairs in checks.items() for lhs, rhs in pairs]
    nodes = [node for _, lhs, rhs in flat for node in (lhs, rhs)]
    for x in _as_points(points, exact):
        ectx = EvaluationContext(x)
        jets = evaluate_many(nodes, x, 0, ectx)
        vals = [Multivector(ctx.sig, j.coeffs[0]) for j in jets]
        worst: Dict[str, float] = {}
        for i, (name, _, _) in enumerate(flat):
            lhs, rhs = vals[2 * i], vals[2 * i + 1]
            worst[name] = max(worst.get(name, 0.0), relative_residual(lhs - rhs, lhs, rhs))
        for name, value in worst.items():
            trackers[name].record(value, x)
    return VerificationReport.from_trackers(list(trackers.values()))
