import numpy as np
import pytest

from backend.clifford_core import Multivector, Signature
from backend.frames import GaugeScalar, OrthoMatrixField, constant_frame, gauge_frame, orthogonal_frame

ALGEBRA_SIGNATURES = [(2, 0), (1, 1), (1, 3), (3, 1), (0, 4), (2, 3)]
FRAME_SIGNATURES = [(2, 0), (1, 1), (2, 1), (3, 0), (3, 1), (2, 2)]


def assert_mv_close(a: Multivector, b: Multivector, tol: float = 1e-10):
    """Componentwise ``|a - b| <= tol * max(1, |a|, |b|)`` with the max-coefficient norm."""
    assert a.sig == b.sig, f"{a.sig} vs {b.sig}"
    scale = max(1.0, a.norm(), b.norm())
    gap = (a - b).norm()
    assert gap <= tol * scale, f"|a - b| = {gap:.3g} exceeds {tol:.1g} * {scale:.3g}\n a = {a}\n b = {b}"


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture(params=FRAME_SIGNATURES, ids=lambda s: f"Cl{s}")
def sig(request):
    return Signature(*request.param)


def make_gauge_frame(sig: Signature, seed: int = 42, kind: str = "scalar"):
    rng = np.random.default_rng(seed)
    return gauge_frame(GaugeScalar.random(sig, sig.n, rng), constant_frame(sig, kind=kind))


def make_orthogonal_frame(sig: Signature, seed: int = 42, kind: str = "scalar", reflect: bool = False):
    rng = np.random.default_rng(seed)
    return orthogonal_frame(OrthoMatrixField.random(sig, sig.n, rng, reflect=reflect), kind=kind)


@pytest.fixture
def gauge_frame_factory():
    return make_gauge_frame


@pytest.fixture
def orthogonal_frame_factory():
    return make_orthogonal_frame
