"""Hypersurface families, congruences, and field diagnostics.

A scalar function S(q, t) defines a one-parameter family of hypersurfaces
S = sigma. This module tests whether such a family solves the
Hamilton-Jacobi equation, traces the congruence it determines through the
geodesic gradient, verifies geodesic equidistance (the action between two
members is the parameter difference), checks transversality, computes
Lagrange brackets of parametrized fields, evaluates Hilbert's independent
integral, and renormalizes families that are equidistant only up to a
relabeling of the parameter.
"""

from __future__ import annotations

import numpy as np

from . import _fd
from .errors import CrossingNotFound, NotEquidistantFamily, NotTangent
from .varcore import Curve, _vec, invert_momentum


class HypersurfaceFamily:
    """A family of hypersurfaces S(q, t) = sigma with gradient access."""

    def __init__(self, S, domain=None, grad_q=None, dS_dt=None, name=None):
        self._S = S
        self.domain = domain
        self._grad_q = grad_q
        self._dS_dt = dS_dt
        self.name = name or "family"

    def value(self, q, t):
        return float(self._S(_vec(q), float(t)))

    def grad_q(self, q, t):
        q = _vec(q)
        if self._grad_q is not None:
            return _vec(self._grad_q(q, float(t)), q.size)
        return _fd.grad(lambda x: self._S(x, t), q)

    def dt(self, q, t):
        q = _vec(q)
        if self._dS_dt is not None:
            return float(self._dS_dt(q, float(t)))
        return _fd.partial(lambda s: self._S(q, s), float(t))

    def reparametrized(self, psi, dpsi, name=None):
        """Family psi(S) with chain-rule gradients."""
        return HypersurfaceFamily(
            lambda q, t: psi(self.value(q, t)),
            domain=self.domain,
            grad_q=lambda q, t: dpsi(self.value(q, t)) * self.grad_q(q, t),
            dS_dt=lambda q, t: dpsi(self.value(q, t)) * self.dt(q, t),
            name=name or f"psi({self.name})",
        )


class FieldCongruence:
    """A parametrized field (q(u, t), p(u, t)) covering a region simply."""

    def __init__(self, dim_u, mapping, u_domain=None, name=None):
        self.dim_u = int(dim_u)
        self._map = mapping
        self.u_domain = u_domain
        self.name = name or "field"

    def point(self, u, t):
        q, p = self._map(_vec(u, self.dim_u), float(t))
        return _vec(q), _vec(p)


class EquidistanceReport:
    """Per-curve action values against the target sigma2 - sigma1."""

    def __init__(self, actions, target):
        self.actions = np.asarray(actions, dtype=float)
        self.target = float(target)

    @property
    def max_abs_deviation(self):
        if self.actions.size == 0:
            return 0.0
        return float(np.max(np.abs(self.actions - self.target)))

    def __repr__(self):
        return (f"EquidistanceReport(n={self.actions.size}, target={self.target:.6g}, "
                f"max_abs_deviation={self.max_abs_deviation:.3g})")


# ---------------------------------------------------------------------------

def hj_residual(ham, fam, q, t):
    """S_t + H(q, grad S, t); zero iff the family solves the HJ equation."""
    q = _vec(q)
    return fam.dt(q, t) + ham.hamiltonian(q, fam.grad_q(q, t), t)


def geodesic_gradient(lag, fam, q, t, seed=None):
    """Congruence direction through (q, t): solve dL/dqdot = grad S for qdot."""
    q = _vec(q)
    return invert_momentum(lag, q, fam.grad_q(q, t), t, seed=seed)


def transversality_defect(ham, fam, point, displacement, tangent_tol=1e-8):
    """p . dq - H dt for a displacement tangent to the level set.

    Vanishes exactly when the family solves the HJ equation.
    """
    q, t = _vec(point[0]), float(point[1])
    dq, dt = _vec(displacement[0], q.size), float(displacement[1])
    gS = fam.grad_q(q, t)
    tangency = float(np.dot(gS, dq)) + fam.dt(q, t) * dt
    scale = 1.0 + float(np.linalg.norm(dq)) + abs(dt)
    if abs(tangency) > tangent_tol * scale:
        raise NotTangent(f"displacement not tangent to the level set (dS = {tangency:.3g})")
    return float(np.dot(gS, dq)) - ham.hamiltonian(q, gS, t) * dt


def project_to_level(fam, q, t, sigma, tol=1e-12, max_iter=60):
    """Move q along grad S (t fixed) until S(q, t) = sigma; 1-D Newton."""
    q = _vec(q).copy()
    for _ in range(max_iter):
        r = fam.value(q, t) - sigma
        if abs(r) <= tol * (1.0 + abs(sigma)):
            return q
        g = fam.grad_q(q, t)
        gg = float(np.dot(g, g))
        if gg == 0.0:
            raise CrossingNotFound("vanishing gradient while projecting onto the level set")
        q = q - (r / gg) * g
    raise CrossingNotFound(f"level-set projection did not converge (residual {r:.3g})")


def trace_congruence_curve(lag, fam, q0, t0, sigma_target, max_step=0.01,
                           horizon=50.0, crossing_tol=1e-10):
    """Follow the congruence from (q0, t0) forward in t until S = sigma_target.

    Integrates dq/dt = geodesic gradient by RK4 while accumulating the
    action integral of L; the crossing is bracketed by a sign change of
    S - sigma_target between steps and refined by bisection on the step
    fraction to ``crossing_tol`` in t.

    Returns (q, t, action) at the crossing.
    """
    q = _vec(q0).copy()
    t = float(t0)
    seed = {"qdot": None}

    def rhs(qv, tv):
        qd = geodesic_gradient(lag, fam, qv, tv, seed=seed["qdot"])
        seed["qdot"] = qd
        return qd, lag.lagrangian(qv, qd, tv)

    def rk4(qv, tv, h):
        k1q, k1z = rhs(qv, tv)
        k2q, k2z = rhs(qv + 0.5 * h * k1q, tv + 0.5 * h)
        k3q, k3z = rhs(qv + 0.5 * h * k2q, tv + 0.5 * h)
        k4q, k4z = rhs(qv + h * k3q, tv + h)
        dq = (h / 6.0) * (k1q + 2 * k2q + 2 * k3q + k4q)
        dz = (h / 6.0) * (k1z + 2 * k2z + 2 * k3z + k4z)
        return qv + dq, dz

    z = 0.0
    r0 = fam.value(q, t) - sigma_target
    if abs(r0) <= crossing_tol:
        return q, t, 0.0
    while t - t0 < horizon:
        q_next, dz = rk4(q, t, max_step)
        t_next = t + max_step
        r1 = fam.value(q_next, t_next) - sigma_target
        if r0 * r1 <= 0.0:
            lo, hi = 0.0, max_step
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                q_mid, dz_mid = rk4(q, t, mid)
                r_mid = fam.value(q_mid, t + mid) - sigma_target
                if r0 * r_mid <= 0.0:
                    hi = mid
                else:
                    lo = mid
                if hi - lo < crossing_tol:
                    break
            q_cross, dz_cross = rk4(q, t, hi)
            return q_cross, t + hi, z + dz_cross
        q, t, z, r0 = q_next, t_next, z + dz, r1
    raise CrossingNotFound(
        f"congruence curve did not reach sigma={sigma_target:g} within horizon {horizon:g}"
    )


def equidistance_check(lag, fam, sigma1, sigma2, seeds, surface_tol=1e-8,
                       max_step=0.01, horizon=50.0, workers=1):
    """Verify the action between family members equals sigma2 - sigma1.

    Each seed (q, t) is projected onto S = sigma1, then its congruence
    curve is traced to the S = sigma2 crossing while the fundamental
    integral accumulates. All action values and the worst deviation from
    sigma2 - sigma1 are reported. With ``workers`` > 1 the per-seed
    traces run in a thread pool; results keep seed order either way.
    """

    def one(seed):
        q0, t0 = _vec(seed[0]), float(seed[1])
        q0 = project_to_level(fam, q0, t0, sigma1)
        if abs(fam.value(q0, t0) - sigma1) > surface_tol * (1.0 + abs(sigma1)):
            raise CrossingNotFound("seed projection missed the start surface")
        if sigma2 == sigma1:
            return 0.0
        _, _, z = trace_congruence_curve(lag, fam, q0, t0, sigma2,
                                         max_step=max_step, horizon=horizon)
        return z

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=int(workers)) as pool:
            actions = list(pool.map(one, seeds))
    else:
        actions = [one(s) for s in seeds]
    return EquidistanceReport(actions, sigma2 - sigma1)


def lagrange_brackets(field, u, t, h0=_fd.H0):
    """Bracket matrix [u_a, u_b] of a field's parameters at (u, t).

    Central differences in u; returned matrix is exactly antisymmetric by
    construction (A^T B - B^T A with A = dq/du, B = dp/du).
    """
    u = _vec(u, field.dim_u)
    q0, p0 = field.point(u, t)
    n = q0.size
    A = np.empty((n, field.dim_u))
    B = np.empty((n, field.dim_u))
    for a in range(field.dim_u):
        h = _fd.step(u[a], h0)
        up = u.copy(); um = u.copy()
        up[a] += h; um[a] -= h
        qp, pp = field.point(up, t)
        qm, pm = field.point(um, t)
        A[:, a] = (qp - qm) / (2.0 * h)
        B[:, a] = (pp - pm) / (2.0 * h)
    C = A.T @ B
    return C - C.T


def hilbert_integral(ham, fam, path, quadrature_steps=512):
    """Independent integral of (p q' - H) dt along an arbitrary C^1 path.

    ``fam`` is either a HypersurfaceFamily (p = grad S along the path) or
    a bare slope field callable p(q, t). For a family solving the HJ
    equation the value is S(end) - S(start), independent of the path;
    path dependence diagnoses a field that is not a Mayer field.
    """
    if path.t1 == path.t0:
        return 0.0
    slope = fam.grad_q if hasattr(fam, "grad_q") else fam
    m = int(quadrature_steps)
    if m % 2:
        m += 1
    ts = np.linspace(path.t0, path.t1, m + 1)
    vals = np.empty(m + 1)
    for i, t in enumerate(ts):
        q = path.q(t)
        qdash = path.velocity(t)
        p = _vec(slope(q, t))
        vals[i] = float(np.dot(p, qdash)) - ham.hamiltonian(q, p, t)
    h = (path.t1 - path.t0) / m
    weights = np.ones(m + 1)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    return float(h / 3.0 * np.dot(weights, vals))


def _level_samples(lag, fam, sigma, q_lattice, t_values):
    """Project a (q, t) lattice onto the level set S = sigma."""
    pts = []
    for t in t_values:
        for q in q_lattice:
            try:
                pts.append((project_to_level(fam, q, t, sigma), float(t)))
            except CrossingNotFound:
                continue
    return pts


def _normalizing_ratio(lag, fam, q, t, tol=1e-12, max_iter=60):
    """Solve the joint system for the pre-normalization congruence direction.

    Unknowns (qdot, kappa) with kappa = L / Delta:
        dL/dqdot = kappa * grad S        (n equations)
        kappa * (grad S . qdot + S_t) = L   (1 equation)
    Returns kappa, the level-set relabeling density phi(sigma).
    """
    q = _vec(q)
    n = q.size
    gS = fam.grad_q(q, t)
    St = fam.dt(q, t)

    # seed: the normalized-case inversion with kappa = 1
    qdot = invert_momentum(lag, q, gS, t)
    kappa = 1.0
    x = np.concatenate([qdot, [kappa]])

    def F(x):
        qd, k = x[:n], x[n]
        r1 = lag.grad_qdot(q, qd, t) - k * gS
        r2 = k * (float(np.dot(gS, qd)) + St) - lag.lagrangian(q, qd, t)
        return np.concatenate([r1, [r2]])

    Fx = F(x)
    for _ in range(max_iter):
        if np.linalg.norm(Fx) <= tol:
            return float(x[n])
        J = _fd.jacobian(F, x)
        try:
            dx = np.linalg.solve(J, -Fx)
        except np.linalg.LinAlgError:
            raise NotEquidistantFamily("singular system while estimating L/Delta")
        lam = 1.0
        for _ in range(30):
            xt = x + lam * dx
            Ft = F(xt)
            if np.linalg.norm(Ft) < np.linalg.norm(Fx):
                break
            lam *= 0.5
        else:
            raise NotEquidistantFamily("L/Delta estimation stalled")
        x, Fx = xt, Ft
    if np.linalg.norm(Fx) <= 1e-8:
        return float(x[n])
    raise NotEquidistantFamily("L/Delta estimation did not converge")


def normalize_family(lag, fam, q_lattice, t_values, sigma_grid=None,
                     n_levels=9, constancy_tol=1e-5):
    """Relabel a family so the normalizing ratio L/Delta becomes 1.

    The ratio phi(sigma) = L/Delta is estimated on each level set from
    projected lattice samples and must be constant on the set (to
    ``constancy_tol``); otherwise the family is not geodesically
    equidistant and NotEquidistantFamily is raised. The relabeling
    psi(sigma) integrates phi by the trapezoid rule on the sigma grid and
    is applied by monotone interpolation.
    """
    q_lattice = np.atleast_2d(np.asarray(q_lattice, dtype=float))
    t_values = np.atleast_1d(np.asarray(t_values, dtype=float))
    if sigma_grid is None:
        observed = [fam.value(q, t) for t in t_values for q in q_lattice]
        lo, hi = min(observed), max(observed)
        if hi - lo <= 0:
            raise NotEquidistantFamily("family is constant over the sample lattice")
        sigma_grid = np.linspace(lo, hi, n_levels)
    sigma_grid = np.asarray(sigma_grid, dtype=float)

    phis = np.empty(sigma_grid.size)
    for k, sigma in enumerate(sigma_grid):
        pts = _level_samples(lag, fam, sigma, q_lattice, t_values)
        if not pts:
            raise NotEquidistantFamily(f"no lattice samples reach the level sigma={sigma:g}")
        vals = np.array([_normalizing_ratio(lag, fam, q, t) for q, t in pts])
        if vals.max() - vals.min() > constancy_tol * (1.0 + abs(vals.mean())):
            raise NotEquidistantFamily(
                f"L/Delta varies by {vals.max() - vals.min():.3g} on the level sigma={sigma:g}"
            )
        phis[k] = vals.mean()

    # psi(sigma) = integral of phi from sigma_grid[0], by cumulative trapezoid
    psi_vals = np.concatenate([[0.0], np.cumsum(0.5 * (phis[1:] + phis[:-1]) * np.diff(sigma_grid))])
    psi_vals = psi_vals + sigma_grid[0] * 0.0  # additive constant is immaterial

    def psi(s):
        return float(np.interp(s, sigma_grid, psi_vals))

    def dpsi(s):
        return float(np.interp(s, sigma_grid, phis))

    return fam.reparametrized(psi, dpsi, name=f"normalized({fam.name})")


def gradient_field(fam, dims, name=None):
    """The field q = u, p = grad S(u, t) belonging to the family."""
    return FieldCongruence(
        dims,
        lambda u, t: (u, fam.grad_q(u, t)),
        name=name or f"grad({fam.name})",
    )
