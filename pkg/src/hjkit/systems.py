"""Bundled test systems.

Each builder returns a LagrangianSystem and, where closed forms exist, a
matching direct HamiltonianSystem with analytic gradients (cheaper than
the Newton-based Legendre inversion, and a cross-check for it).
"""

import numpy as np

from .varcore import HamiltonianSystem, LagrangianSystem, box_domain


def free_particle(dim=1, mass=1.0, half_width=50.0, t_range=(-50.0, 50.0)):
    """L = m|qdot|^2/2, H = |p|^2/2m."""
    m = float(mass)
    dom = box_domain(dim, half_width, t_range)
    lag = LagrangianSystem(
        dim,
        lambda q, qd, t: 0.5 * m * float(np.dot(qd, qd)),
        domain=dom,
        grad_q=lambda q, qd, t: np.zeros(dim),
        grad_qdot=lambda q, qd, t: m * qd,
        velocity_hessian=lambda q, qd, t: m * np.eye(dim),
        name="free_particle",
    )
    ham = HamiltonianSystem(
        dim,
        lambda q, p, t: 0.5 * float(np.dot(p, p)) / m,
        domain=dom,
        grad_q=lambda q, p, t: np.zeros(dim),
        grad_p=lambda q, p, t: p / m,
        name="free_particle",
    )
    return lag, ham


def harmonic_oscillator(dim=1, mass=1.0, omega=1.0, half_width=50.0, t_range=(-50.0, 50.0)):
    """L = m|qdot|^2/2 - m w^2 |q|^2/2 and its Legendre partner."""
    m = float(mass)
    w2 = float(omega) ** 2
    dom = box_domain(dim, half_width, t_range)
    lag = LagrangianSystem(
        dim,
        lambda q, qd, t: 0.5 * m * float(np.dot(qd, qd)) - 0.5 * m * w2 * float(np.dot(q, q)),
        domain=dom,
        grad_q=lambda q, qd, t: -m * w2 * q,
        grad_qdot=lambda q, qd, t: m * qd,
        velocity_hessian=lambda q, qd, t: m * np.eye(dim),
        name="harmonic_oscillator",
    )
    ham = HamiltonianSystem(
        dim,
        lambda q, p, t: 0.5 * float(np.dot(p, p)) / m + 0.5 * m * w2 * float(np.dot(q, q)),
        domain=dom,
        grad_q=lambda q, p, t: m * w2 * q,
        grad_p=lambda q, p, t: p / m,
        name="harmonic_oscillator",
    )
    return lag, ham


def fermat_time_parametrized(dim=3, index=None, half_width=10.0):
    """Travel-time integrand n(q)|qdot|/c with time as the parameter.

    Homogeneous of degree 1 in qdot, hence a vanishing velocity Hessian:
    the canonical construction must reject it. Bundled as the degenerate
    guard case.
    """
    n_of_q = index if index is not None else (lambda q: 1.0)

    def L(q, qd, t):
        return n_of_q(q) * float(np.linalg.norm(qd))

    return LagrangianSystem(dim, L, domain=box_domain(dim, half_width), name="fermat_time_parametrized")


BUILTIN_SYSTEMS = {
    "free_particle": free_particle,
    "harmonic_oscillator": harmonic_oscillator,
}
