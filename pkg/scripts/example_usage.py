import sys
from pathlib import Path

import numpy as np

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))


def example_1_algebra():
    print("\n" + "="*60)
    print("Example 1: Geometric products in Cl(1,3)")
    print("="*60)

    from backend.clifford_core import Multivector, Signature, average_over_basis, center_project

    sig = Signature(1, 3)
    e1, e2 = Multivector.generator(sig, 1), Multivector.generator(sig, 2)
    print(f"e1 e2       = {e1 * e2}")
    print(f"e2 e1       = {e2 * e1}")
    print(f"(e1 e2)^2   = {(e1 * e2) * (e1 * e2)}")

    u = Multivector.random(sig, np.random.default_rng(0))
    gap = (average_over_basis(u) - center_project(u) * sig.dim).norm()
    print(f"sum_A e^A u e_A - 2^n Cen(u): {gap:.2e}")


def example_2_connection():
    print("\n" + "="*60)
    print("Example 2: Spin connection of a gauge frame")
    print("="*60)

    from backend.clifford_core import Signature
    from backend.connection import connection_averaged, connection_projection, connection_explicit
    from backend.frames import GaugeScalar, constant_frame, gauge_frame

    sig = Signature(2, 1)
    rng = np.random.default_rng(42)
    frame = gauge_frame(GaugeScalar.random(sig, 3, rng), constant_frame(sig))
    x = [0.3, -0.2, 0.5]

    averaged = connection_averaged(frame, x)
    projected = connection_projection(frame, x)
    explicit = connection_explicit(frame, x)
    for mu, (a, b, c) in enumerate(zip(averaged, projected, explicit), start=1):
        print(f"C_{mu}: |averaged - projection| = {(a - b).norm():.2e}, |averaged - closed form| = {(a - c).norm():.2e}")


def example_3_rotation():
    print("\n" + "="*60)
    print("Example 3: Grade-1 frame rotating in the (1,2) plane")
    print("="*60)

    from backend.clifford_core import Signature
    from backend.connection import spin_connection_grade1
    from backend.frames import OrthoMatrixField, orthogonal_frame

    sig = Signature(2, 0)
    frame = orthogonal_frame(OrthoMatrixField.rotation(sig, 2, (1, 2), mu=1, rate=1.0))
    connections, omega = spin_connection_grade1(frame, [0.4, 0.1])
    print(f"C_1 = {connections[0]}")
    print(f"C_2 = {connections[1]}")
    print(f"omega_1 =\n{omega[0]}")


def example_4_yang_mills():
    print("\n" + "="*60)
    print("Example 4: B = sigma h_mu + C_mu on a vector frame")
    print("="*60)

    from backend.clifford_core import Signature
    from backend.frames import GaugeScalar, constant_frame, gauge_frame, sample_points
    from backend.gauge_ym import CovDerivContext, build_sigma_solution, conservation_residual, ym_residuals

    sig = Signature(3, 1)
    rng = np.random.default_rng(7)
    frame = gauge_frame(GaugeScalar.random(sig, 4, rng), constant_frame(sig, kind="vector"))
    ctx = CovDerivContext(frame)
    points = sample_points(4, 5, seed=7)

    for sigma in (0.5, 1.0):
        field = build_sigma_solution(frame, sigma, ctx)
        report = ym_residuals(field, points)
        conservation = conservation_residual(field, points)
        print(f"sigma={sigma}: epsilon={field.epsilon:g}, "
              f"first={report.residual('ym_first'):.2e}, second={report.residual('ym_second'):.2e}, "
              f"conservation={conservation.max_residual:.2e}")


def example_5_campaign():
    print("\n" + "="*60)
    print("Example 5: Running a campaign from Python")
    print("="*60)

    from backend.campaigns import load_config, run_campaign

    config = load_config(overrides={"signature": [2, 0], "points": 10, "out": "reports/example_connection.json"})
    report = run_campaign("connection", config)
    print(report.summary_text())


def main():
    print("\n" + "="*60)
    print("Clifford Yang-Mills toolkit - Usage Examples")
    print("="*60)

    examples = [
        example_1_algebra,
        example_2_connection,
        example_3_rotation,
        example_4_yang_mills,
        example_5_campaign,
    ]
    for example in examples:
        example()

    print("\n" + "="*60)
    print("Examples complete!")
    print("="*60)


if __name__ == "__main__":
    main()
