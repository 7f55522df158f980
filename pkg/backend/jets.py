"""
Jets of multivector-valued fields over the flat base space R^{k,l}.

A field is an immutable expression tree (``FieldExpr``). Evaluating it at a
point produces a truncated Taylor polynomial (``TaylorJet``): one coefficient
per monomial ``delta^alpha`` with ``|alpha| <= order``, propagated exactly
through sums, geometric products, inverses and series. ``Derivative`` nodes
ask their operand for one extra order, so nested derivatives stay exact.
The public view ``Jet2Multivector`` is the order-2 slice (value, gradient,
Hessian).
"""

import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Number
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .clifford_core import Multivector, Signature, general_inverse, product_arrays
from .config import FD_STEP, SERIES_MAX_TERMS, SERIES_TOL
from .exact import is_exact, rational_inverse, to_fractions, zeros_like_kind
from .exceptions import ExactModeError, FrameError, GradeError, SeriesDivergenceError, SignatureMismatchError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BaseSpace:
    k: int
    l: int

    def __post_init__(self):
        if self.k < 0 or self.l < 0 or self.m < 1:
            raise FrameError(f"base space needs k, l >= 0 and m >= 1, got ({self.k},{self.l})")

    @classmethod
    def parse(cls, text: str) -> "BaseSpace":
        k, l = (int(part) for part in text.split(","))
        return cls(k, l)

    @classmethod
    def matching(cls, sig: Signature) -> "BaseSpace":
        return cls(sig.p, sig.q)

    @property
    def m(self) -> int:
        return self.k + self.l

    def rho(self, mu: int) -> int:
        """Diagonal base metric entry (1-based); raises and lowers Greek indices."""
        return 1 if mu <= self.k else -1

    def __str__(self):
        return f"R^({self.k},{self.l})"


def make_point(coords: Sequence, exact: bool = False) -> np.ndarray:
    if exact:
        point = to_fractions(list(coords))
    else:
        point = np.array(coords, dtype=float)
        if not np.all(np.isfinite(point)):
            raise FrameError(f"point has non-finite coordinates: {coords}")
    if point.ndim != 1 or point.size == 0:
        raise FrameError("a point needs at least one coordinate")
    return point


# ---------------------------------------------------------------------------
# Monomial bookkeeping

@dataclass(frozen=True)
class MonomialBasis:
    m: int
    order: int
    exponents: Tuple[Tuple[int, ...], ...]
    index: Dict[Tuple[int, ...], int]
    degrees: np.ndarray
    pairs: Tuple[np.ndarray, np.ndarray, np.ndarray]

    @property
    def size(self) -> int:
        return len(self.exponents)

    def unit(self, mu: int) -> int:
        """Index of the monomial delta^mu (1-based mu)."""
        alpha = [0] * self.m
        alpha[mu - 1] = 1
        return self.index[tuple(alpha)]

    def count_up_to(self, order: int) -> int:
        return int(np.sum(self.degrees <= order))


def _exponents_of_degree(m: int, degree: int) -> List[Tuple[int, ...]]:
    out = []
    for combo in itertools.combinations_with_replacement(range(m), degree):
        alpha = [0] * m
        for axis in combo:
            alpha[axis] += 1
        out.append(tuple(alpha))
    return out


@lru_cache(maxsize=64)
def monomial_basis(m: int, order: int) -> MonomialBasis:
    # graded order makes every lower-order basis a prefix of a higher one
    exponents = tuple(alpha for d in range(order + 1) for alpha in _exponents_of_degree(m, d))
    index = {alpha: i for i, alpha in enumerate(exponents)}
    ia, ib, ic = [], [], []
    for i, alpha in enumerate(exponents):
        for j, beta in enumerate(exponents):
            gamma = tuple(a + b for a, b in zip(alpha, beta))
            target = index.get(gamma)
            if target is not None:
                ia.append(i)
                ib.append(j)
                ic.append(target)
    degrees = np.array([sum(alpha) for alpha in exponents])
    pairs = (np.array(ia, dtype=int), np.array(ib, dtype=int), np.array(ic, dtype=int))
    return MonomialBasis(m, order, exponents, index, degrees, pairs)


# ---------------------------------------------------------------------------
# Value algebras a Taylor jet can live in

class ProductKernel:
    """Bilinear product on value arrays of shape ``value_shape``."""

    value_shape: Tuple[int, ...] = ()

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def unit(self, exact: bool) -> np.ndarray:
        raise NotImplementedError

    def inverse(self, a: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class CliffordKernel(ProductKernel):

    def __init__(self, sig: Signature):
        self.sig = sig
        self.value_shape = (sig.dim,)

    def mul(self, a, b):
        return product_arrays(self.sig, a, b)

    def unit(self, exact):
        out = zeros_like_kind(self.value_shape, exact)
        out[0] = 1
        return out

    def inverse(self, a):
        return general_inverse(Multivector(self.sig, a)).coeffs

    def __eq__(self, other):
        return isinstance(other, CliffordKernel) and other.sig == self.sig

    def __hash__(self):
        return hash(("clifford", self.sig))


class MatrixKernel(ProductKernel):

    def __init__(self, size: int):
        self.size = size
        self.value_shape = (size, size)

    def mul(self, a, b):
        return np.matmul(a, b)

    def unit(self, exact):
        out = zeros_like_kind(self.value_shape, exact)
        for i in range(self.size):
            out[i, i] = 1
        return out

    def inverse(self, a):
        if is_exact(a):
            return rational_inverse(a)
        return np.linalg.inv(a)

    def __eq__(self, other):
        return isinstance(other, MatrixKernel) and other.size == self.size

    def __hash__(self):
        return hash(("matrix", self.size))


class ScalarKernel(ProductKernel):

    def mul(self, a, b):
        return a * b

    def unit(self, exact):
        return np.array(Fraction(1) if exact else 1.0, dtype=object if exact else float)

    def inverse(self, a):
        return 1 / a

    def __eq__(self, other):
        return isinstance(other, ScalarKernel)

    def __hash__(self):
        return hash("scalar")


SCALARS = ScalarKernel()


# ---------------------------------------------------------------------------
# Truncated Taylor polynomials

class TaylorJet:
    """Coefficients ``c[alpha]`` of ``sum_alpha c[alpha] delta^alpha`` up to ``order``."""

    __slots__ = ("kernel", "m", "order", "coeffs")

    def __init__(self, kernel: ProductKernel, m: int, order: int, coeffs: np.ndarray):
        basis = monomial_basis(m, order)
        if coeffs.shape != (basis.size,) + tuple(kernel.value_shape):
            raise ValueError(f"jet coefficients have shape {coeffs.shape}")
        self.kernel = kernel
        self.m = m
        self.order = order
        self.coeffs = coeffs

    @property
    def basis(self) -> MonomialBasis:
        return monomial_basis(self.m, self.order)

    @property
    def exact(self) -> bool:
        return is_exact(self.coeffs)

    @classmethod
    def constant(cls, kernel: ProductKernel, m: int, order: int, value: np.ndarray) -> "TaylorJet":
        value = np.asarray(value)
        coeffs = zeros_like_kind((monomial_basis(m, order).size,) + tuple(kernel.value_shape), is_exact(value))
        coeffs[0] = value
        return cls(kernel, m, order, coeffs)

    def truncate(self, order: int) -> "TaylorJet":
        if order == self.order:
            return self
        if order > self.order:
            raise ValueError(f"cannot raise jet order {self.order} to {order}")
        count = monomial_basis(self.m, self.order).count_up_to(order)
        return TaylorJet(self.kernel, self.m, order, self.coeffs[:count])

    def _align(self, other: "TaylorJet") -> Tuple["TaylorJet", "TaylorJet"]:
        if other.kernel != self.kernel or other.m != self.m:
            raise SignatureMismatchError("jets live in different value algebras or base spaces")
        order = min(self.order, other.order)
        a, b = self.truncate(order), other.truncate(order)
        if a.exact != b.exact:
            a, b = a.to_exact(), b.to_exact()
        return a, b

    def to_exact(self) -> "TaylorJet":
        if self.exact:
            return self
        return TaylorJet(self.kernel, self.m, self.order, to_fractions(self.coeffs))

    def __add__(self, other: "TaylorJet") -> "TaylorJet":
        a, b = self._align(other)
        return TaylorJet(a.kernel, a.m, a.order, a.coeffs + b.coeffs)

    def __sub__(self, other: "TaylorJet") -> "TaylorJet":
        a, b = self._align(other)
        return TaylorJet(a.kernel, a.m, a.order, a.coeffs - b.coeffs)

    def __neg__(self) -> "TaylorJet":
        return TaylorJet(self.kernel, self.m, self.order, -self.coeffs)

    def scale(self, factor) -> "TaylorJet":
        factor = Fraction(factor) if self.exact else float(factor)
        return TaylorJet(self.kernel, self.m, self.order, self.coeffs * factor)

    def __mul__(self, other: "TaylorJet") -> "TaylorJet":
        a, b = self._align(other)
        ia, ib, ic = a.basis.pairs
        products = a.kernel.mul(a.coeffs[ia], b.coeffs[ib])
        out = zeros_like_kind(a.coeffs.shape, a.exact)
        np.add.at(out, ic, products)
        return TaylorJet(a.kernel, a.m, a.order, out)

    def derivative(self, mu: int) -> "TaylorJet":
        """d/dx^mu, one order lower."""
        if self.order < 1:
            raise ValueError("cannot differentiate an order-0 jet")
        basis = self.basis
        lower = monomial_basis(self.m, self.order - 1)
        out = zeros_like_kind((lower.size,) + tuple(self.kernel.value_shape), self.exact)
        for i, alpha in enumerate(lower.exponents):
            raised = list(alpha)
            raised[mu - 1] += 1
            out[i] = self.coeffs[basis.index[tuple(raised)]] * (alpha[mu - 1] + 1)
        return TaylorJet(self.kernel, self.m, self.order - 1, out)

    def inverse(self) -> "TaylorJet":
        """Left-and-right inverse, solved degree by degree from ``f g = 1``."""
        basis = self.basis
        g0 = self.kernel.inverse(self.coeffs[0])
        out = zeros_like_kind(self.coeffs.shape, self.exact or is_exact(g0))
        out[0] = g0
        ia, ib, ic = basis.pairs
        for degree in range(1, self.order + 1):
            select = (basis.degrees[ic] == degree) & (ia != 0)
            targets = ic[select]
            acc = zeros_like_kind(out.shape, is_exact(out))
            np.add.at(acc, targets, self.kernel.mul(self.coeffs[ia[select]], out[ib[select]]))
            rows = np.nonzero(basis.degrees == degree)[0]
            out[rows] = -self.kernel.mul(np.asarray(g0)[None, ...], acc[rows])
        return TaylorJet(self.kernel, self.m, self.order, out)

    def exp(self, tol: float = SERIES_TOL, max_terms: int = SERIES_MAX_TERMS) -> "TaylorJet":
        if self.exact:
            raise ExactModeError("the exponential series has no rational closed form")
        result = TaylorJet.constant(self.kernel, self.m, self.order, self.kernel.unit(False))
        term = result
        for k in range(1, max_terms + 1):
            term = (term * self).scale(1.0 / k)
            result = result + term
            if _max_abs(term.coeffs) <= tol * max(_max_abs(result.coeffs), np.finfo(float).tiny):
                return result
        raise SeriesDivergenceError(f"jet exponential did not converge in {max_terms} terms")

    def coefficient(self, alpha: Tuple[int, ...]) -> np.ndarray:
        return self.coeffs[self.basis.index[tuple(alpha)]]

    def partial(self, *mus: int) -> np.ndarray:
        """Mixed partial derivative ``d_mu1 d_mu2 ...`` at the expansion point."""
        alpha = [0] * self.m
        for mu in mus:
            alpha[mu - 1] += 1
        factor = 1
        for power in alpha:
            factor *= math.factorial(power)
        return self.coefficient(tuple(alpha)) * factor


def _max_abs(array: np.ndarray) -> float:
    if array.size == 0:
        return 0.0
    return float(np.max(np.abs(np.asarray(array, dtype=float))))


def compose_scalar(series: TaylorJet, derivatives: Sequence) -> TaylorJet:
    """``phi(s)`` from the derivatives ``phi^(k)(s0)``, k = 0..order."""
    base = series.coeffs[0]
    delta = TaylorJet(series.kernel, series.m, series.order, series.coeffs.copy())
    exact = series.exact
    delta.coeffs[0] = Fraction(0) if exact else 0.0
    result = TaylorJet.constant(SCALARS, series.m, series.order,
                                np.array(derivatives[0], dtype=object if exact else float))
    power = TaylorJet.constant(SCALARS, series.m, series.order, SCALARS.unit(exact))
    for k in range(1, series.order + 1):
        power = power * delta
        weight = Fraction(1, math.factorial(k)) if exact else 1.0 / math.factorial(k)
        result = result + power.scale(derivatives[k] * weight)
    return result


# ---------------------------------------------------------------------------
# Evaluation

class EvaluationContext:
    """Per-point memo of node jets; shared nodes are evaluated once."""

    def __init__(self, point: np.ndarray):
        self.point = point
        self.exact = is_exact(point)
        self.m = len(point)
        self._cache: Dict[int, Tuple[Any, TaylorJet]] = {}
        self._plan: Dict[int, int] = {}

    def plan(self, roots: Sequence[Tuple["FieldExpr", int]]):
        """Record the highest order each reachable node will be asked for."""
        seen = set()
        stack = list(roots)
        while stack:
            node, order = stack.pop()
            key = (id(node), order)
            if key in seen:
                continue
            seen.add(key)
            self._plan[id(node)] = max(order, self._plan.get(id(node), order))
            for child, bump in node.children():
                stack.append((child, order + bump))

    def taylor(self, node: Any, order: int) -> TaylorJet:
        hit = self._cache.get(id(node))
        if hit is not None and hit[1].order >= order:
            return hit[1].truncate(order)
        target = max(order, self._plan.get(id(node), order))
        jet = node.taylor(self, target)
        self._cache[id(node)] = (node, jet)
        return jet.truncate(order)

    def auxiliary(self, owner: Any, order: int, compute: Callable[[int], TaylorJet]) -> TaylorJet:
        """Cache a jet for a non-FieldExpr object (e.g. a matrix field)."""
        hit = self._cache.get(id(owner))
        if hit is not None and hit[1].order >= order:
            return hit[1].truncate(order)
        jet = compute(order)
        self._cache[id(owner)] = (owner, jet)
        return jet


class FieldExpr:
    """Immutable smooth map R^{k,l} -> Cl(p,q)."""

    sig: Signature

    def children(self) -> List[Tuple["FieldExpr", int]]:
        return []

    def taylor(self, ctx: EvaluationContext, order: int) -> TaylorJet:
        raise NotImplementedError

    @property
    def kernel(self) -> CliffordKernel:
        return CliffordKernel(self.sig)

    def _wrap(self, other) -> "FieldExpr":
        if isinstance(other, FieldExpr):
            if other.sig != self.sig:
                raise SignatureMismatchError(f"cannot combine fields over {self.sig} and {other.sig}")
            return other
        if isinstance(other, Multivector):
            return Constant(other)
        if isinstance(other, Number):
            return Constant(Multivector.scalar(self.sig, other))
        raise TypeError(f"cannot build a field from {type(other).__name__}")

    def __add__(self, other):
        return Sum([self, self._wrap(other)])

    def __radd__(self, other):
        return Sum([self._wrap(other), self])

    def __sub__(self, other):
        return Sum([self, Scale(-1, self._wrap(other))])

    def __rsub__(self, other):
        return Sum([self._wrap(other), Scale(-1, self)])

    def __neg__(self):
        return Scale(-1, self)

    def __mul__(self, other):
        if isinstance(other, Number):
            return Scale(other, self)
        return Product(self, self._wrap(other))

    def __rmul__(self, other):
        if isinstance(other, Number):
            return Scale(other, self)
        return Product(self._wrap(other), self)


class Constant(FieldExpr):

    def __init__(self, value: Multivector):
        self.sig = value.sig
        self.value = value

    def taylor(self, ctx, order):
        coeffs = to_fractions(self.value.coeffs) if ctx.exact else self.value.coeffs
        return TaylorJet.constant(self.kernel, ctx.m, order, coeffs)


def zero_field(sig: Signature) -> Constant:
    return Constant(Multivector.zero(sig))


class Coordinate(FieldExpr):
    """The scalar field ``x^mu e`` (1-based mu)."""

    def __init__(self, sig: Signature, mu: int):
        self.sig = sig
        self.mu = mu

    def taylor(self, ctx, order):
        if not 1 <= self.mu <= ctx.m:
            raise FrameError(f"coordinate x^{self.mu} outside a {ctx.m}-dimensional base space")
        unit = self.kernel.unit(ctx.exact)
        jet = TaylorJet.constant(self.kernel, ctx.m, order, unit * ctx.point[self.mu - 1])
        if order >= 1:
            jet.coeffs[jet.basis.unit(self.mu)] = unit
        return jet


class Polynomial(FieldExpr):
    """``sum_alpha x^alpha M_alpha`` with constant multivector coefficients."""

    def __init__(self, sig: Signature, terms: Sequence[Tuple[Tuple[int, ...], Multivector]]):
        self.sig = sig
        self.terms = [(tuple(int(e) for e in alpha), mv) for alpha, mv in terms]
        for _, mv in self.terms:
            if mv.sig != sig:
                raise SignatureMismatchError("polynomial coefficient has the wrong signature")

    def taylor(self, ctx, order):
        basis = monomial_basis(ctx.m, order)
        out = zeros_like_kind((basis.size, self.sig.dim), ctx.exact)
        for alpha, mv in self.terms:
            if len(alpha) != ctx.m:
                raise FrameError(f"monomial {alpha} does not match a {ctx.m}-dimensional base space")
            coeffs = to_fractions(mv.coeffs) if ctx.exact else mv.coeffs
            for i, beta in enumerate(basis.exponents):
                if any(b > a for a, b in zip(alpha, beta)):
                    continue
                weight = 1
                for mu, (a, b) in enumerate(zip(alpha, beta)):
                    weight = weight * math.comb(a, b) * ctx.point[mu] ** (a - b)
                out[i] = out[i] + coeffs * weight
        return TaylorJet(self.kernel, ctx.m, order, out)


class Sum(FieldExpr):

    def __init__(self, terms: Sequence[FieldExpr]):
        if not terms:
            raise ValueError("Sum needs at least one term")
        self.sig = terms[0].sig
        for term in terms[1:]:
            if term.sig != self.sig:
                raise SignatureMismatchError("summands belong to different algebras")
        self.terms = list(terms)

    def children(self):
        return [(term, 0) for term in self.terms]

    def taylor(self, ctx, order):
        total = ctx.taylor(self.terms[0], order)
        for term in self.terms[1:]:
            total = total + ctx.taylor(term, order)
        return total


class Scale(FieldExpr):

    def __init__(self, factor, operand: FieldExpr):
        self.sig = operand.sig
        self.factor = factor
        self.operand = operand

    def children(self):
        return [(self.operand, 0)]

    def taylor(self, ctx, order):
        return ctx.taylor(self.operand, order).scale(self.factor)


class Product(FieldExpr):

    def __init__(self, left: FieldExpr, right: FieldExpr):
        if left.sig != right.sig:
            raise SignatureMismatchError(f"cannot multiply fields over {left.sig} and {right.sig}")
        self.sig = left.sig
        self.left = left
        self.right = right

    def children(self):
        return [(self.left, 0), (self.right, 0)]

    def taylor(self, ctx, order):
        return ctx.taylor(self.left, order) * ctx.taylor(self.right, order)


def product_of(factors: Sequence[FieldExpr]) -> FieldExpr:
    out = factors[0]
    for factor in factors[1:]:
        out = Product(out, factor)
    return out


def commutator_field(a: FieldExpr, b: FieldExpr) -> FieldExpr:
    return Sum([Product(a, b), Scale(-1, Product(b, a))])


SCALAR_FUNCTIONS = ("sin", "cos", "exp", "poly")


class ScalarFunction(FieldExpr):
    """``phi(s) e`` for a grade-0 valued operand ``s e``."""

    def __init__(self, name: str, operand: FieldExpr, coefficients: Optional[Sequence] = None):
        if name not in SCALAR_FUNCTIONS:
            raise ValueError(f"unknown scalar function '{name}'")
        if name == "poly" and not coefficients:
            raise ValueError("poly needs coefficients c0, c1, ...")
        self.sig = operand.sig
        self.name = name
        self.operand = operand
        self.coefficients = list(coefficients or [])

    def children(self):
        return [(self.operand, 0)]

    def _derivatives(self, s0, order: int, exact: bool) -> List:
        if self.name == "poly":
            coeffs = [Fraction(c) if exact else float(c) for c in self.coefficients]
            out = []
            for _ in range(order + 1):
                out.append(sum((c * s0 ** i for i, c in enumerate(coeffs)), Fraction(0) if exact else 0.0))
                coeffs = [c * i for i, c in enumerate(coeffs)][1:] or [Fraction(0) if exact else 0.0]
            return out
        if exact:
            raise ExactModeError(f"{self.name} has no rational closed form")
        s0 = float(s0)
        if self.name == "exp":
            return [math.exp(s0)] * (order + 1)
        cycle = [math.sin(s0), math.cos(s0), -math.sin(s0), -math.cos(s0)]
        shift = 0 if self.name == "sin" else 1
        return [cycle[(k + shift) % 4] for k in range(order + 1)]

    def taylor(self, ctx, order):
        inner = ctx.taylor(self.operand, order)
        rest = inner.coeffs[:, 1:]
        scale = max(1.0, _max_abs(inner.coeffs))
        if _max_abs(rest) > 1e-12 * scale:
            raise GradeError(f"{self.name} needs a grade-0 operand")
        series = TaylorJet(SCALARS, ctx.m, order, inner.coeffs[:, 0].copy())
        composed = compose_scalar(series, self._derivatives(series.coeffs[0], order, ctx.exact))
        out = zeros_like_kind(inner.coeffs.shape, is_exact(composed.coeffs))
        out[:, 0] = composed.coeffs
        return TaylorJet(self.kernel, ctx.m, order, out)


class ExpSeries(FieldExpr):

    def __init__(self, operand: FieldExpr, tol: float = SERIES_TOL):
        if tol <= 0:
            raise ValueError("tol must be positive")
        self.sig = operand.sig
        self.operand = operand
        self.tol = tol

    def children(self):
        return [(self.operand, 0)]

    def taylor(self, ctx, order):
        return ctx.taylor(self.operand, order).exp(self.tol)


class Inverse(FieldExpr):

    def __init__(self, operand: FieldExpr):
        self.sig = operand.sig
        self.operand = operand

    def children(self):
        return [(self.operand, 0)]

    def taylor(self, ctx, order):
        return ctx.taylor(self.operand, order).inverse()


class Derivative(FieldExpr):
    """``d_mu`` of the operand (1-based mu)."""

    def __init__(self, operand: FieldExpr, mu: int):
        if mu < 1:
            raise ValueError("derivative index is 1-based")
        self.sig = operand.sig
        self.operand = operand
        self.mu = mu

    def children(self):
        return [(self.operand, 1)]

    def taylor(self, ctx, order):
        if self.mu > ctx.m:
            raise FrameError(f"d_{self.mu} outside a {ctx.m}-dimensional base space")
        return ctx.taylor(self.operand, order + 1).derivative(self.mu)


def derivative(field: FieldExpr, mu: int) -> FieldExpr:
    if isinstance(field, Constant):
        return zero_field(field.sig)
    return Derivative(field, mu)


# ---------------------------------------------------------------------------
# Public evaluation API

class Jet2Multivector:
    """Value, gradient and Hessian of a field at a point.

    The Hessian is stored as its upper triangle (``mu <= nu``), so it is
    symmetric by construction.
    """

    __slots__ = ("value", "grad", "_hess", "m")

    def __init__(self, value: Multivector, grad: Sequence[Multivector], hess_upper: Dict[Tuple[int, int], Multivector]):
        self.value = value
        self.grad = tuple(grad)
        self.m = len(self.grad)
        self._hess = dict(hess_upper)

    @classmethod
    def from_taylor(cls, sig: Signature, jet: TaylorJet) -> "Jet2Multivector":
        jet = jet.truncate(2)
        value = Multivector(sig, jet.coeffs[0])
        grad = [Multivector(sig, jet.partial(mu)) for mu in range(1, jet.m + 1)]
        hess = {}
        for mu in range(1, jet.m + 1):
            for nu in range(mu, jet.m + 1):
                hess[(mu, nu)] = Multivector(sig, jet.partial(mu, nu))
        return cls(value, grad, hess)

    def d(self, mu: int) -> Multivector:
        return self.grad[mu - 1]

    def hess(self, mu: int, nu: int) -> Multivector:
        return self._hess[(min(mu, nu), max(mu, nu))]


def evaluate(field: FieldExpr, x: Sequence, order: int = 2, ctx: Optional[EvaluationContext] = None) -> TaylorJet:
    point = x if isinstance(x, np.ndarray) else make_point(x)
    ctx = ctx or EvaluationContext(point)
    ctx.plan([(field, order)])
    return ctx.taylor(field, order)


def evaluate_many(fields: Sequence[FieldExpr], x: Sequence, order: int = 0,
                  ctx: Optional[EvaluationContext] = None) -> List[TaylorJet]:
    point = x if isinstance(x, np.ndarray) else make_point(x)
    ctx = ctx or EvaluationContext(point)
    ctx.plan([(f, order) for f in fields])
    return [ctx.taylor(f, order) for f in fields]


def value(field: FieldExpr, x: Sequence, ctx: Optional[EvaluationContext] = None) -> Multivector:
    return Multivector(field.sig, evaluate(field, x, 0, ctx).coeffs[0])


def values(fields: Sequence[FieldExpr], x: Sequence, ctx: Optional[EvaluationContext] = None) -> List[Multivector]:
    return [Multivector(f.sig, jet.coeffs[0]) for f, jet in zip(fields, evaluate_many(fields, x, 0, ctx))]


def jet_eval(field: FieldExpr, x: Sequence, ctx: Optional[EvaluationContext] = None) -> Jet2Multivector:
    return Jet2Multivector.from_taylor(field.sig, evaluate(field, x, 2, ctx))


@dataclass
class DerivativeDeviation:
    grad: float
    hess: float

    @property
    def max_deviation(self) -> float:
        return max(self.grad, self.hess)


def finite_difference_check(field: FieldExpr, x: Sequence, step: float = FD_STEP,
                            hess_step: Optional[float] = None) -> DerivativeDeviation:
    """Largest relative gap between the jet derivatives and central differences."""
    if step <= 0:
        raise ValueError("step must be positive")
    hess_step = hess_step or max(step, 1e-4)
    point = np.array(x, dtype=float)
    jet = jet_eval(field, point)
    m = len(point)

    def at(shift) -> Multivector:
        return value(field, point + shift)

    def rel(diff: Multivector, ref: Multivector) -> float:
        return diff.norm() / max(1.0, ref.norm())

    grad_dev = 0.0
    hess_dev = 0.0
    eye = np.eye(m)
    center = at(np.zeros(m))
    for mu in range(m):
        fd = (at(step * eye[mu]) - at(-step * eye[mu])) / (2 * step)
        grad_dev = max(grad_dev, rel(fd - jet.grad[mu], jet.grad[mu]))
        h = hess_step
        for nu in range(mu, m):
            if mu == nu:
                fd2 = (at(h * eye[mu]) - center * 2.0 + at(-h * eye[mu])) / (h * h)
            else:
                fd2 = (at(h * (eye[mu] + eye[nu])) - at(h * (eye[mu] - eye[nu]))
                       - at(h * (eye[nu] - eye[mu])) + at(-h * (eye[mu] + eye[nu]))) / (4 * h * h)
            exact = jet.hess(mu + 1, nu + 1)
            hess_dev = max(hess_dev, rel(fd2 - exact, exact))
    logger.debug(f"finite-difference deviation grad={grad_dev:.3g} hess={hess_dev:.3g}")
    return DerivativeDeviation(grad=grad_dev, hess=hess_dev)
