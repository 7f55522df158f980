"""
Dense real Clifford algebra Cl(p,q).

Blades are addressed by bitmask: bit ``a-1`` is set when generator ``e^a``
appears in the (increasingly ordered) multi-index. A multivector stores all
``2**n`` coefficients in that order, so index 0 is the unit ``e`` and index
``2**n - 1`` is the pseudoscalar ``e^{1...n}``.

Products use a cached sign table ``T[i, j]`` with
``e^I e^J = T[i, j] e^{I xor J}``; the table is derived from transposition
counting and the diagonal metric and is checked against a brute-force sort in
the test-suite.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Number
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .config import (
    HARD_MAX_GENERATORS,
    MAX_GENERATORS,
    SERIES_MAX_TERMS,
    SERIES_TOL,
    SINGULAR_COND,
    TABLE_CACHE_SIZE,
)
from .exact import is_exact, rational_solve, to_fractions, zeros_like_kind
from .exceptions import (
    ExactModeError,
    GradeError,
    SeriesDivergenceError,
    SignatureError,
    SignatureMismatchError,
    SingularElementError,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Signature:
    p: int
    q: int

    def __post_init__(self):
        if self.p < 0 or self.q < 0:
            raise SignatureError(f"signature counts must be non-negative, got ({self.p},{self.q})")
        cap = min(MAX_GENERATORS, HARD_MAX_GENERATORS)
        if not 1 <= self.n <= cap:
            raise SignatureError(f"n = p + q must lie in [1, {cap}], got {self.n}")

    @classmethod
    def parse(cls, text: str) -> "Signature":
        p, q = (int(part) for part in text.split(","))
        return cls(p, q)

    @property
    def n(self) -> int:
        return self.p + self.q

    @property
    def dim(self) -> int:
        return 1 << self.n

    @property
    def pseudoscalar_mask(self) -> int:
        return self.dim - 1

    def eta(self, a: int) -> int:
        """Diagonal metric entry for generator ``a`` (1-based)."""
        return 1 if a <= self.p else -1

    @property
    def eta_matrix(self) -> np.ndarray:
        return np.diag([self.eta(a) for a in range(1, self.n + 1)]).astype(float)

    def __str__(self):
        return f"Cl({self.p},{self.q})"


# ---------------------------------------------------------------------------
# Blade indexing

def grade_of(mask: int) -> int:
    return bin(mask).count("1")


def blade_mask(indices: Iterable[int]) -> int:
    """Mask of the blade e^{a1...aj} from 1-based generator indices."""
    mask = 0
    for a in indices:
        bit = 1 << (a - 1)
        if mask & bit:
            raise GradeError(f"generator {a} repeated in multi-index")
        mask |= bit
    return mask


def blade_indices(mask: int) -> List[int]:
    return [a + 1 for a in range(mask.bit_length()) if mask >> a & 1]


def blade_label(mask: int) -> str:
    if mask == 0:
        return "e"
    return "e" + "".join(str(a) for a in blade_indices(mask))


def masks_of_grade(sig: Signature, j: int) -> List[int]:
    return [mask for mask in range(sig.dim) if grade_of(mask) == j]


def reorder_sign(a: int, b: int) -> int:
    """Sign of the permutation sorting the concatenated index lists of a and b."""
    a >>= 1
    swaps = 0
    while a:
        swaps += grade_of(a & b)
        a >>= 1
    return -1 if swaps & 1 else 1


def metric_factor(sig: Signature, a: int, b: int) -> int:
    factor = 1
    for index in blade_indices(a & b):
        factor *= sig.eta(index)
    return factor


def blade_product(sig: Signature, a: int, b: int) -> Tuple[int, int]:
    """``e^A e^B = coef * e^{A xor B}``; returns ``(coef, mask)``."""
    return reorder_sign(a, b) * metric_factor(sig, a, b), a ^ b


@lru_cache(maxsize=TABLE_CACHE_SIZE)
def product_tables(sig: Signature) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(xor table, sign table, grade of each blade) for the signature."""
    dim = sig.dim
    masks = np.arange(dim)
    xor = masks[:, None] ^ masks[None, :]
    signs = np.empty((dim, dim), dtype=np.int64)
    for i in range(dim):
        for j in range(dim):
            signs[i, j] = blade_product(sig, i, j)[0]
    grades = np.array([grade_of(m) for m in range(dim)])
    logger.debug(f"Built product table for {sig} ({dim}x{dim})")
    return xor, signs, grades


def center_masks(sig: Signature) -> List[int]:
    if sig.n % 2:
        return [0, sig.pseudoscalar_mask]
    return [0]


# ---------------------------------------------------------------------------
# Coefficient-array kernels (last axis indexes blades; leading axes batch)

def _coerce_pair(a: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray, bool]:
    a = np.asarray(a)
    b = np.asarray(b)
    exact = is_exact(a) or is_exact(b)
    if exact:
        a, b = to_fractions(a), to_fractions(b)
    return a, b, exact


def product_arrays(sig: Signature, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Batched geometric product of coefficient arrays ``(..., 2**n)``."""
    a, b, exact = _coerce_pair(a, b)
    xor, signs, _ = product_tables(sig)
    shape = np.broadcast_shapes(a.shape, b.shape)
    out = zeros_like_kind(shape, exact)
    table = signs.astype(object) if exact else signs
    for i in range(sig.dim):
        ai = a[..., i]
        if not np.any(ai != 0):
            continue
        out[..., xor[i]] += ai[..., None] * (table[i] * b)
    return out


def left_multiplication_matrix(sig: Signature, coeffs: np.ndarray) -> np.ndarray:
    """Matrix L with ``L @ v`` the coefficients of ``u v``."""
    coeffs = np.asarray(coeffs)
    xor, signs, _ = product_tables(sig)
    dim = sig.dim
    matrix = zeros_like_kind((dim, dim), is_exact(coeffs))
    cols = np.broadcast_to(np.arange(dim)[None, :], (dim, dim))
    table = signs.astype(object) if is_exact(coeffs) else signs
    matrix[xor, cols] = coeffs[:, None] * table
    return matrix


# ---------------------------------------------------------------------------
# Multivector

class Multivector:
    """Immutable element of Cl(p,q) with dense coefficients."""

    __slots__ = ("sig", "coeffs")

    def __init__(self, sig: Signature, coeffs):
        array = np.asarray(coeffs)
        if array.dtype == object:
            array = to_fractions(array)
        else:
            array = np.array(array, dtype=float)
        if array.shape != (sig.dim,):
            raise GradeError(f"{sig} needs {sig.dim} coefficients, got shape {array.shape}")
        array.flags.writeable = False
        self.sig = sig
        self.coeffs = array

    # -- construction -------------------------------------------------------

    @classmethod
    def zero(cls, sig: Signature, exact: bool = False) -> "Multivector":
        return cls(sig, zeros_like_kind(sig.dim, exact))

    @classmethod
    def scalar(cls, sig: Signature, value=1.0) -> "Multivector":
        return cls.blade(sig, 0, value)

    @classmethod
    def blade(cls, sig: Signature, mask: int, coef=1.0) -> "Multivector":
        exact = isinstance(coef, Fraction)
        coeffs = zeros_like_kind(sig.dim, exact)
        coeffs[mask] = coef
        return cls(sig, coeffs)

    @classmethod
    def generator(cls, sig: Signature, a: int) -> "Multivector":
        return cls.blade(sig, 1 << (a - 1))

    @classmethod
    def from_terms(cls, sig: Signature, terms: Dict[int, Number]) -> "Multivector":
        exact = any(isinstance(v, Fraction) for v in terms.values())
        coeffs = zeros_like_kind(sig.dim, exact)
        for mask, value in terms.items():
            coeffs[mask] += value
        return cls(sig, coeffs)

    @classmethod
    def random(cls, sig: Signature, rng: np.random.Generator, grades: Optional[Sequence[int]] = None,
               scale: float = 1.0) -> "Multivector":
        coeffs = rng.uniform(-scale, scale, sig.dim)
        if grades is not None:
            _, _, blade_grades = product_tables(sig)
            coeffs = np.where(np.isin(blade_grades, list(grades)), coeffs, 0.0)
        return cls(sig, coeffs)

    # -- representation -----------------------------------------------------

    @property
    def exact(self) -> bool:
        return is_exact(self.coeffs)

    def to_exact(self) -> "Multivector":
        return Multivector(self.sig, to_fractions(self.coeffs))

    def to_float(self) -> "Multivector":
        return Multivector(self.sig, np.asarray(self.coeffs, dtype=float))

    def __getitem__(self, mask: int):
        return self.coeffs[mask]

    def terms(self) -> Dict[int, Number]:
        return {mask: c for mask, c in enumerate(self.coeffs) if c != 0}

    def __repr__(self):
        parts = [f"{float(c):+.6g}*{blade_label(m)}" for m, c in self.terms().items()]
        return f"Multivector[{self.sig}]({' '.join(parts) if parts else '0'})"

    # -- arithmetic ---------------------------------------------------------

    def _like(self, number):
        return Fraction(number) if self.exact else float(number)

    def _check(self, other: "Multivector"):
        if self.sig != other.sig:
            raise SignatureMismatchError(f"cannot combine {self.sig} with {other.sig}")

    def __add__(self, other):
        if isinstance(other, Multivector):
            self._check(other)
            a, b, _ = _coerce_pair(self.coeffs, other.coeffs)
            return Multivector(self.sig, a + b)
        if isinstance(other, Number):
            return self + Multivector.scalar(self.sig, other)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (Multivector, Number)):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return Multivector(self.sig, -self.coeffs)

    def __mul__(self, other):
        if isinstance(other, Multivector):
            return geometric_product(self, other)
        if isinstance(other, Number):
            return Multivector(self.sig, self.coeffs * self._like(other))
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, Number):
            return Multivector(self.sig, self._like(other) * self.coeffs)
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, Number):
            return Multivector(self.sig, self.coeffs / self._like(other))
        return NotImplemented

    # -- projections and queries -------------------------------------------

    def grade(self, j: int) -> "Multivector":
        return grade_project(self, j)

    def center(self) -> "Multivector":
        return center_project(self)

    def scalar_part(self):
        return self.coeffs[0]

    def inverse(self) -> "Multivector":
        return general_inverse(self)

    def norm(self) -> float:
        """Max absolute coefficient (the residual norm used throughout)."""
        return float(np.max(np.abs(np.asarray(self.coeffs, dtype=float))))

    def allclose(self, other: "Multivector", tol: float = 1e-10) -> bool:
        self._check(other)
        scale = max(1.0, self.norm(), other.norm())
        return (self - other).norm() <= tol * scale

    def is_zero(self) -> bool:
        return not np.any(self.coeffs != 0)


# ---------------------------------------------------------------------------
# Operations

def geometric_product(a: Multivector, b: Multivector) -> Multivector:
    a._check(b)
    return Multivector(a.sig, product_arrays(a.sig, a.coeffs, b.coeffs))


def grade_project(u: Multivector, j: int) -> Multivector:
    if not 0 <= j <= u.sig.n:
        raise GradeError(f"grade {j} outside [0, {u.sig.n}]")
    _, _, grades = product_tables(u.sig)
    coeffs = u.coeffs.copy()
    coeffs[grades != j] = 0
    return Multivector(u.sig, coeffs)


def center_project(u: Multivector) -> Multivector:
    """Grade 0 for even n; grades 0 and n for odd n."""
    coeffs = zeros_like_kind(u.sig.dim, u.exact)
    for mask in center_masks(u.sig):
        coeffs[mask] = u.coeffs[mask]
    return Multivector(u.sig, coeffs)


def trace_scalar(u: Multivector) -> Multivector:
    return grade_project(u, 0)


def blade_square_sign(sig: Signature, mask: int) -> int:
    """``e^A e^A = s e`` with ``s = +-1``."""
    return blade_product(sig, mask, mask)[0]


def blade_inverse(sig: Signature, mask: int, exact: bool = False) -> Multivector:
    coef = blade_square_sign(sig, mask)
    return Multivector.blade(sig, mask, Fraction(coef) if exact else float(coef))


def general_inverse(u: Multivector) -> Multivector:
    """Inverse through the left-multiplication matrix of ``u``."""
    matrix = left_multiplication_matrix(u.sig, u.coeffs)
    unit = zeros_like_kind(u.sig.dim, u.exact)
    unit[0] = 1
    if u.exact:
        return Multivector(u.sig, rational_solve(matrix, unit))

    cond = np.linalg.cond(matrix)
    if not np.isfinite(cond) or cond > SINGULAR_COND:
        raise SingularElementError(f"element is singular (condition estimate {cond:.3g})")
    return Multivector(u.sig, np.linalg.solve(matrix, unit))


def commutator(a: Multivector, b: Multivector) -> Multivector:
    return a * b - b * a


def anticommutator(a: Multivector, b: Multivector) -> Multivector:
    return a * b + b * a


def average_over_basis(u: Multivector) -> Multivector:
    """``sum_A e^A u e_A``; equals ``2**n`` times the center projection."""
    total = Multivector.zero(u.sig, u.exact)
    for mask in range(u.sig.dim):
        blade = Multivector.blade(u.sig, mask, Fraction(1) if u.exact else 1.0)
        total = total + blade * u * blade_inverse(u.sig, mask, u.exact)
    return total


def generator_contraction(u: Multivector) -> Multivector:
    """``sum_a e_a u e^a``; acts on grade k as ``(-1)**k (n - 2k)``."""
    total = Multivector.zero(u.sig, u.exact)
    for a in range(1, u.sig.n + 1):
        upper = Multivector.blade(u.sig, 1 << (a - 1), Fraction(1) if u.exact else 1.0)
        total = total + (upper * u * upper) * u.sig.eta(a)
    return total


def exp_series(u: Multivector, tol: float = SERIES_TOL, max_terms: int = SERIES_MAX_TERMS) -> Multivector:
    """Truncated power series of the exponential."""
    if u.exact:
        raise ExactModeError("exp_series has no rational closed form")
    if tol <= 0:
        raise ValueError("tol must be positive")
    result = Multivector.scalar(u.sig, 1.0)
    term = result
    for k in range(1, max_terms + 1):
        term = (term * u) / k
        result = result + term
        if term.norm() <= tol * max(result.norm(), np.finfo(float).tiny):
            return result
    raise SeriesDivergenceError(f"exp series did not converge in {max_terms} terms (|u| = {u.norm():.3g})")


def is_center_free(u: Multivector, tol: float = 1e-10) -> bool:
    return center_project(u).norm() <= tol * max(1.0, u.norm())
