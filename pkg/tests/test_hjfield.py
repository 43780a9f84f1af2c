"""Tests for hypersurface families: HJ residual, geodesic gradient,
equidistance, transversality, Lagrange brackets, Hilbert integral,
family normalization."""

import numpy as np
import pytest

from hjkit import hjfield as hf
from hjkit import varcore as vc
from hjkit.errors import CrossingNotFound, NotEquidistantFamily, NotTangent
from hjkit.systems import free_particle, harmonic_oscillator


@pytest.fixture(scope="module")
def free():
    return free_particle()


def linear_family():
    # S = q - t/2 solves S_t + S_q^2/2 = 0
    return hf.HypersurfaceFamily(
        lambda q, t: q[0] - 0.5 * t,
        grad_q=lambda q, t: np.array([1.0]),
        dS_dt=lambda q, t: -0.5,
        name="linear",
    )


def fan_family():
    # S = q^2 / (2t), the free-particle fan of lines through the origin
    return hf.HypersurfaceFamily(
        lambda q, t: q[0] ** 2 / (2.0 * t),
        grad_q=lambda q, t: np.array([q[0] / t]),
        dS_dt=lambda q, t: -q[0] ** 2 / (2.0 * t**2),
        name="fan",
    )


# ------------------------------------------------------------- hj residual

def test_hj_residual_linear_solution(free):
    _, ham = free
    assert hf.hj_residual(ham, linear_family(), [0.3], 0.7) == pytest.approx(0.0, abs=1e-12)


def test_hj_residual_fan_solution(free):
    # oracle: S_t = -q^2/2t^2, H = (q/t)^2/2 cancel identically
    _, ham = free
    assert abs(hf.hj_residual(ham, fan_family(), [1.0], 2.0)) < 1e-9


def test_hj_residual_nonsolution(free):
    _, ham = free
    fam = hf.HypersurfaceFamily(lambda q, t: q[0])
    assert hf.hj_residual(ham, fam, [0.2], 0.1) == pytest.approx(0.5, abs=1e-9)


# ------------------------------------------------------- geodesic gradient

def test_geodesic_gradient_linear(free):
    lag, _ = free
    qd = hf.geodesic_gradient(lag, linear_family(), [0.0], 0.0)
    assert qd[0] == pytest.approx(1.0, abs=1e-10)


def test_geodesic_gradient_fan(free):
    lag, _ = free
    qd = hf.geodesic_gradient(lag, fan_family(), [2.0], 1.0)
    assert qd[0] == pytest.approx(2.0, abs=1e-10)


def test_geodesic_gradient_zero_momentum():
    lag, _ = harmonic_oscillator()
    fam = hf.HypersurfaceFamily(lambda q, t: 0.0, grad_q=lambda q, t: np.array([0.0]))
    assert hf.geodesic_gradient(lag, fam, [0.5], 0.0)[0] == pytest.approx(0.0, abs=1e-12)


# ----------------------------------------------------------- equidistance

def test_equidistance_linear_family(free):
    lag, _ = free
    seeds = [([q], 0.0) for q in np.linspace(-1, 1, 5)]
    report = hf.equidistance_check(lag, linear_family(), 0.0, 0.5, seeds)
    assert report.max_abs_deviation < 1e-8
    assert np.allclose(report.actions, 0.5, atol=1e-8)


def test_equidistance_coincident_surfaces(free):
    lag, _ = free
    report = hf.equidistance_check(lag, linear_family(), 0.25, 0.25, [([0.25], 0.0)])
    assert np.all(report.actions == 0.0)


def test_equidistance_fan_family(free):
    # analytic oracle: congruence is q = C t with action C^2 (t1 - t0) / 2 = 1
    # between S=1 and S=2 for every start point
    lag, _ = free
    seeds = [([np.sqrt(2.0 * t0)], t0) for t0 in np.linspace(0.5, 2.0, 8)]
    report = hf.equidistance_check(lag, fan_family(), 1.0, 2.0, seeds)
    assert report.max_abs_deviation < 1e-6


def test_equidistance_curve_crossing_values(free):
    # the traced crossing point must land on S = sigma2
    lag, _ = free
    fam = fan_family()
    q0 = hf.project_to_level(fam, [1.5], 1.0, 1.0)
    q, t, z = hf.trace_congruence_curve(lag, fam, q0, 1.0, 2.0)
    assert fam.value(q, t) == pytest.approx(2.0, abs=1e-8)
    assert z == pytest.approx(1.0, abs=1e-7)


def test_crossing_not_found(free):
    lag, _ = free
    with pytest.raises(CrossingNotFound):
        hf.equidistance_check(lag, linear_family(), 0.0, -3.0, [([0.0], 0.0)], horizon=1.0)


# --------------------------------------------------------- transversality

def test_transversality_linear(free):
    _, ham = free
    d = hf.transversality_defect(ham, linear_family(), ([0.0], 0.0), ([1.0], 2.0))
    assert d == pytest.approx(0.0, abs=1e-12)


def test_transversality_zero_displacement(free):
    _, ham = free
    d = hf.transversality_defect(ham, linear_family(), ([0.3], 0.1), ([0.0], 0.0))
    assert d == 0.0


def test_transversality_fan_random_tangent(free):
    _, ham = free
    fam = fan_family()
    q, t = np.array([1.0]), 1.0
    # tangent displacement: (dq, dt) with S_q dq + S_t dt = 0
    rng = np.random.default_rng(0)
    for _ in range(10):
        dt = rng.uniform(-0.5, 0.5)
        dq = -fam.dt(q, t) * dt / fam.grad_q(q, t)[0]
        d = hf.transversality_defect(ham, fam, (q, t), ([dq], dt))
        assert abs(d) < 1e-8


def test_transversality_rejects_non_tangent(free):
    _, ham = free
    with pytest.raises(NotTangent):
        hf.transversality_defect(ham, linear_family(), ([0.0], 0.0), ([1.0], 0.0))


# -------------------------------------------------------- Lagrange brackets

def test_brackets_1d_field_vanish(free):
    field = hf.FieldCongruence(1, lambda u, t: (u, u * 0.0 + 1.0))
    B = hf.lagrange_brackets(field, [0.4], 0.0)
    assert B.shape == (1, 1) and B[0, 0] == 0.0


def test_brackets_shear_field():
    # q = u, p = (u2, 0): [u1, u2] = 1 by direct evaluation
    field = hf.FieldCongruence(2, lambda u, t: (u, np.array([u[1], 0.0])))
    B = hf.lagrange_brackets(field, [0.1, -0.2], 0.0)
    assert B[0, 1] == pytest.approx(1.0, abs=1e-8)
    assert np.allclose(B, -B.T)


def test_brackets_gradient_field_vanish():
    # p = grad S for S = (q1^2 + q2^2)/(2t): brackets must vanish
    fam = hf.HypersurfaceFamily(lambda q, t: (q[0] ** 2 + q[1] ** 2) / (2 * t))
    field = hf.gradient_field(fam, 2)
    B = hf.lagrange_brackets(field, [0.7, -0.3], 1.0)
    assert np.max(np.abs(B)) < 1e-8


# --------------------------------------------------------- Hilbert integral

def test_hilbert_straight_path(free):
    _, ham = free
    path = vc.Curve(lambda t: [t], 0.0, 1.0, qdot=lambda t: [1.0])
    J = hf.hilbert_integral(ham, linear_family(), path)
    assert J == pytest.approx(0.5, abs=1e-10)


def test_hilbert_path_independence(free):
    _, ham = free
    fam = linear_family()
    wiggly = vc.Curve(
        lambda t: [t + 0.2 * np.sin(2 * np.pi * t)],
        0.0, 1.0,
        qdot=lambda t: [1.0 + 0.4 * np.pi * np.cos(2 * np.pi * t)],
    )
    J = hf.hilbert_integral(ham, fam, wiggly, quadrature_steps=2048)
    assert J == pytest.approx(0.5, abs=1e-7)


def test_hilbert_loop_vanishes(free):
    # out-and-back loop: forward along one path minus forward along another
    _, ham = free
    fam = linear_family()
    p1 = vc.Curve(lambda t: [t], 0.0, 1.0, qdot=lambda t: [1.0])
    p2 = vc.Curve(
        lambda t: [t**2], 0.0, 1.0, qdot=lambda t: [2.0 * t])
    loop = hf.hilbert_integral(ham, fam, p1, 2048) - hf.hilbert_integral(ham, fam, p2, 2048)
    assert abs(loop) < 1e-7


def test_hilbert_non_mayer_slope_field_path_dependent(free):
    # slope field p(q, t) = q (not a gradient in (q,t) for the free particle):
    # J differs between paths, so the field is not a Mayer field
    _, ham = free_particle(dim=1)

    def slope(q, t):
        return np.array([q[0] + t])

    p1 = vc.Curve(lambda t: [t], 0.0, 1.0, qdot=lambda t: [1.0])
    p2 = vc.Curve(lambda t: [t**2], 0.0, 1.0, qdot=lambda t: [2.0 * t])
    J1 = hf.hilbert_integral(ham, slope, p1, 2048)
    J2 = hf.hilbert_integral(ham, slope, p2, 2048)
    assert abs(J1 - J2) > 1e-3


# ------------------------------------------------- canonical-field deduction

def test_congruence_obeys_canonical_equations(free):
    # along the fan congruence p(t) = grad S(q(t), t) must obey pdot = -H_q = 0
    lag, _ = free
    fam = fan_family()
    q0 = hf.project_to_level(fam, [1.2], 1.0, 1.0)

    def p_along(t):
        # analytic congruence through (q0, 1.0): q = q0 * t
        return fam.grad_q([q0[0] * t], t)[0]

    h = 1e-4
    pdot = (p_along(1.0 + h) - p_along(1.0 - h)) / (2 * h)
    assert abs(pdot) < 1e-8


def test_congruence_curve_is_extremal(free):
    # congruence members of the fan family are straight lines through 0:
    # Euler-Lagrange residual vanishes along them
    lag, _ = free
    c = 1.3
    line = vc.Curve(lambda t: [c * t], 0.5, 2.0, qdot=lambda t: [c])
    assert abs(vc.el_residual(lag, line, 1.0)[0]) < 1e-10
    qd = hf.geodesic_gradient(lag, fan_family(), [c * 1.0], 1.0)
    assert qd[0] == pytest.approx(c, abs=1e-10)


def test_reconstructed_family_equidistant(free):
    # converse: from the canonical field q = u + t, p = 1 with boundary value
    # S0(u) = u on t=0, action reconstruction yields S = q - t/2 up to labels
    lag, _ = free

    def reconstructed(q, t):
        u = q[0] - t          # curve label through (q, t)
        return u + 0.5 * t    # S0(u) + action along the curve (L = 1/2)

    fam = hf.HypersurfaceFamily(lambda q, t: reconstructed(q, t))
    seeds = [([u], 0.0) for u in np.linspace(-0.5, 0.5, 4)]
    report = hf.equidistance_check(lag, fam, 0.0, 0.4, seeds)
    assert report.max_abs_deviation < 1e-7


# ----------------------------------------------------------- normalization

def test_normalize_family_identity(free):
    lag, _ = free
    fam = linear_family()
    q_lattice = np.linspace(-0.5, 0.5, 5)[:, None]
    out = hf.normalize_family(lag, fam, q_lattice, [0.0, 0.4, 0.8], n_levels=7)
    # already satisfies L = Delta: relabeling is (affinely) the identity
    q, t = np.array([0.1]), 0.2
    assert np.allclose(out.grad_q(q, t), fam.grad_q(q, t), atol=1e-9)


def test_normalize_family_scaled(free):
    # S' = 2q - t has phi = 1/2; psi(sigma) = sigma/2 restores L/Delta = 1
    lag, ham = free
    fam = hf.HypersurfaceFamily(
        lambda q, t: 2.0 * q[0] - t,
        grad_q=lambda q, t: np.array([2.0]),
        dS_dt=lambda q, t: -1.0,
    )
    q_lattice = np.linspace(-0.5, 0.5, 5)[:, None]
    out = hf.normalize_family(lag, fam, q_lattice, [0.0, 0.3, 0.6], n_levels=7)
    q, t = np.array([0.15]), 0.25
    # normalized family satisfies the HJ equation (equivalent to L/Delta = 1)
    assert abs(hf.hj_residual(ham, out, q, t)) < 1e-6
    assert out.grad_q(q, t)[0] == pytest.approx(1.0, abs=1e-6)


def test_normalize_family_rejects_varying_ratio(free):
    lag, _ = free
    fam = hf.HypersurfaceFamily(lambda q, t: q[0] - 0.5 * t + 0.3 * np.sin(3.0 * q[0]))
    q_lattice = np.linspace(-1.0, 1.0, 5)[:, None]
    with pytest.raises(NotEquidistantFamily):
        hf.normalize_family(lag, fam, q_lattice, [0.0, 0.5], n_levels=5)
