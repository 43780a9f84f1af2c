"""Tests for the characteristic-strip PDE solver."""

import numpy as np
import pytest

from hjkit import hjchar as hc
from hjkit.errors import OutOfSheet, StripFailure


@pytest.fixture(scope="module")
def eikonal_sheet():
    prob = hc.eikonal_problem()
    surf = hc.line_surface()
    strips = hc.solve_strips(prob, surf, np.linspace(-3.0, 3.0, 121), seed_b=[0.0, 1.0])
    return hc.trace_characteristics(prob, surf, strips, (0.0, 2.0), step=0.01)


@pytest.fixture(scope="module")
def free_hj_sheet():
    prob = hc.free_particle_hj_problem()
    surf = hc.InitialSurface(
        1,
        a=lambda U: np.stack([U[:, 0], np.zeros(U.shape[0])], axis=-1),
        c=lambda U: 0.5 * U[:, 0] ** 2,
        vectorized=True,
    )
    strips = hc.solve_strips(prob, surf, np.linspace(-2.0, 2.0, 81), seed_b=[0.0, 0.0])
    return hc.trace_characteristics(prob, surf, strips, (0.0, 1.5), step=0.01)


# -------------------------------------------------------------- strip data

def test_strip_eikonal_outgoing_normal():
    prob = hc.eikonal_problem()
    surf = hc.line_surface()
    b = hc.solve_strip_conditions(prob, surf, [0.4], seed_b=[0.0, 1.0])
    assert np.allclose(b, [0.0, 1.0], atol=1e-12)


def test_strip_eikonal_sliding_values():
    # c(u) = u forces the tangential momentum to 1, leaving none for the normal
    prob = hc.eikonal_problem()
    surf = hc.line_surface(c=lambda U: U[:, 0])
    b = hc.solve_strip_conditions(prob, surf, [0.0], seed_b=[0.9, 0.1])
    assert b[0] == pytest.approx(1.0, abs=1e-10)
    # grazing double root: |b2| is only pinned to sqrt(2 * residual tol)
    assert abs(b[1]) < 2e-6
    assert abs(prob.phi(surf.a([0.0]), b)) < 1e-12


def test_strip_free_particle_hj():
    prob = hc.free_particle_hj_problem()
    surf = hc.InitialSurface(
        1,
        a=lambda U: np.stack([U[:, 0], np.zeros(U.shape[0])], axis=-1),
        c=lambda U: 0.5 * U[:, 0] ** 2,
        vectorized=True,
    )
    for u in (-1.0, 0.3, 1.7):
        b = hc.solve_strip_conditions(prob, surf, [u], seed_b=[0.0, 0.0])
        assert b[0] == pytest.approx(u, abs=1e-10)
        assert b[1] == pytest.approx(-0.5 * u * u, abs=1e-10)


def test_strip_failure_on_impossible_data():
    # |grad_V c| > 1 is incompatible with |b| = 1 on the eikonal strip system
    prob = hc.eikonal_problem()
    surf = hc.line_surface(c=lambda U: 2.0 * U[:, 0])
    with pytest.raises(StripFailure):
        hc.solve_strip_conditions(prob, surf, [0.0], seed_b=[1.0, 0.5])


# ----------------------------------------------------------------- tracing

def test_trace_eikonal_straight_lines(eikonal_sheet):
    sheet = eikonal_sheet
    # characteristics q(s, u) = (u, s), z = s (symbolic integration oracle)
    k = np.searchsorted(sheet.s_values, 1.0)
    j = 60  # u = 0.0
    assert sheet.s_values[k] == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(sheet.q[k, j], [0.0, 1.0], atol=1e-10)
    assert sheet.z[k, j] == pytest.approx(1.0, abs=1e-10)
    assert np.allclose(sheet.p[k, j], [0.0, 1.0], atol=1e-12)


def test_trace_zero_range_equals_strips():
    prob = hc.eikonal_problem()
    surf = hc.line_surface()
    strips = hc.solve_strips(prob, surf, np.linspace(-1.0, 1.0, 11), seed_b=[0.0, 1.0])
    sheet = hc.trace_characteristics(prob, surf, strips, (0.0, 0.0), step=0.01)
    assert sheet.s_values.size == 1
    assert np.allclose(sheet.q[0], strips.A)
    assert np.allclose(sheet.z[0], strips.C)


def test_trace_free_hj_closed_form(free_hj_sheet):
    sheet = free_hj_sheet
    k = np.searchsorted(sheet.s_values, 1.0)
    u = sheet.strips.U[:, 0]
    # q_x = u(1+s), q_t = s, p constant, z = u^2/2 + u^2 s/2
    assert np.allclose(sheet.q[k, :, 0], u * 2.0, atol=1e-9)
    assert np.allclose(sheet.q[k, :, 1], 1.0, atol=1e-12)
    assert np.allclose(sheet.p[k, :, 0], u, atol=1e-10)
    assert np.allclose(sheet.z[k], u * u, atol=1e-9)


def test_phi_conserved_on_sheet(eikonal_sheet, free_hj_sheet):
    assert np.max(eikonal_sheet.phi_residual()) <= 1e-7
    assert np.max(free_hj_sheet.phi_residual()) <= 1e-7


def test_brackets_constant_along_s(eikonal_sheet, free_hj_sheet):
    for sheet in (eikonal_sheet, free_hj_sheet):
        us, uu = sheet.brackets()
        interior = np.all(sheet.valid, axis=0)
        drift_us = np.max(np.abs(us - us[0][None]), axis=0)[interior]
        drift_uu = np.max(np.abs(uu - uu[0][None]), axis=0)[interior]
        assert np.max(drift_us) <= 1e-6
        assert np.max(drift_uu) <= 1e-6


# -------------------------------------------------------------- evaluation

def test_evaluate_eikonal_distance(eikonal_sheet):
    assert hc.evaluate_solution(eikonal_sheet, [0.3, 0.7]) == pytest.approx(0.7, abs=1e-9)


def test_evaluate_on_initial_surface(eikonal_sheet):
    assert abs(hc.evaluate_solution(eikonal_sheet, [0.5, 1e-12])) <= 1e-8


def test_evaluate_free_hj_value(free_hj_sheet):
    # closed form S = x^2 / (2 (1 + t)) for boundary values u^2/2
    assert hc.evaluate_solution(free_hj_sheet, [1.0, 1.0]) == pytest.approx(0.25, abs=1e-9)


def test_evaluate_gradient_matches_sheet_momentum(eikonal_sheet):
    q = np.array([0.4, 1.1])
    g = hc.solution_gradient(eikonal_sheet, q)
    h = 1e-5
    fd = np.array([
        (hc.evaluate_solution(eikonal_sheet, q + [h, 0]) - hc.evaluate_solution(eikonal_sheet, q - [h, 0])) / (2 * h),
        (hc.evaluate_solution(eikonal_sheet, q + [0, h]) - hc.evaluate_solution(eikonal_sheet, q - [0, h])) / (2 * h),
    ])
    assert np.allclose(g, fd, atol=1e-4)


def test_pde_satisfied_at_random_points(eikonal_sheet):
    rng = np.random.default_rng(4)
    pts = np.column_stack([rng.uniform(-2.0, 2.0, 100), rng.uniform(0.1, 1.8, 100)])
    vals, grads, status = eikonal_sheet.evaluate_batch(pts)
    assert np.all(status == 0)
    phi = eikonal_sheet.prob.phi_batch(pts, grads)
    assert np.max(np.abs(phi)) <= 1e-5


def test_boundary_data_reproduced(free_hj_sheet):
    for u in np.linspace(-1.5, 1.5, 7):
        s = hc.evaluate_solution(free_hj_sheet, [u, 0.0])
        assert abs(s - 0.5 * u * u) <= 1e-8


def test_hj_specialization_against_closed_form(free_hj_sheet):
    rng = np.random.default_rng(9)
    pts = np.column_stack([rng.uniform(-1.5, 1.5, 50), rng.uniform(0.05, 1.4, 50)])
    vals, _, status = free_hj_sheet.evaluate_batch(pts)
    assert np.all(status == 0)
    closed = pts[:, 0] ** 2 / (2.0 * (1.0 + pts[:, 1]))
    assert np.max(np.abs(vals - closed)) <= 1e-5


def test_out_of_sheet(eikonal_sheet):
    with pytest.raises(OutOfSheet):
        hc.evaluate_solution(eikonal_sheet, [0.0, 5.0])


def test_curved_initial_surface_distance_field():
    # outgoing distance from the unit circle: S(q) = |q| - 1
    prob = hc.eikonal_problem()
    surf = hc.InitialSurface(
        1,
        a=lambda U: np.stack([np.cos(U[:, 0]), np.sin(U[:, 0])], axis=-1),
        c=lambda U: np.zeros(U.shape[0]),
        vectorized=True,
    )
    strips = hc.solve_strips(
        prob, surf, np.linspace(0.0, 2 * np.pi, 181),
        seed_b=lambda u: [np.cos(u[0]), np.sin(u[0])],   # outward branch
    )
    # Newton lands on b(u) = (cos u, sin u) up to the finite-difference
    # accuracy of the surface Jacobian
    assert np.allclose(strips.B, strips.A, atol=1e-7)
    sheet = hc.trace_characteristics(prob, surf, strips, (0.0, 1.5), step=0.01)
    rng = np.random.default_rng(2)
    ang = rng.uniform(0, 2 * np.pi, 40)
    rad = rng.uniform(1.2, 2.2, 40)
    pts = np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
    vals, _, status = sheet.evaluate_batch(pts)
    assert np.all(status == 0)
    assert np.max(np.abs(vals - (rad - 1.0))) <= 1e-7
