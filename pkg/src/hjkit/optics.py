"""Geometric optics in 2+1 coordinates.

The three coordinates (q1, q2, axis) are all spatial; the preferred third
axis plays the role of the curve parameter so the travel-time integrand

    L = (n / c) * sqrt(qdot1^2 + qdot2^2 + 1)

has a non-vanishing velocity Hessian for isotropic media (the
time-parametrized form is degree-1 homogeneous and is rejected by the
canonical machinery). Its Legendre partner in closed form is

    H = -sqrt((n/c)^2 - p1^2 - p2^2),

so -H equals (n/c) * cos(angle to the axis) and is Bouguer's invariant in
axis-independent media. Rays whose direction approaches orthogonality to
the axis blow up in qdot and are rejected (ParaxialViolation).

Wave-front machinery (point-source fronts, Huygens envelopes, front
propagation) runs on batches of rays; medium evaluators must broadcast
over numpy arrays.
"""

from __future__ import annotations

import numpy as np

from . import _fd
from .errors import ParaxialViolation, SamplingTooCoarse
from .hjfield import project_to_level
from .varcore import (
    LagrangianSystem,
    HamiltonianSystem,
    PhasePoint,
    StepControl,
    box_domain,
    integrate_extremal,
    _vec,
)

_PARAXIAL_FLOOR = 1e-7


class Medium:
    """Isotropic refractive medium n(q1, q2, axis) with vacuum speed c.

    ``n`` must broadcast over numpy array arguments (all bundled media
    do; wrap scalar-only callables with np.vectorize before passing).
    The local ray speed is v = c/n and n >= 1 is spot-checked on a small
    lattice at construction.
    """

    def __init__(self, n, c=1.0, domain=None, grad_n=None, check_index=True):
        self._n = n
        self.c = float(c)
        if self.c <= 0:
            raise ValueError("vacuum speed c must be positive")
        self.domain = domain if domain is not None else box_domain(2, 10.0, (-10.0, 10.0))
        self._grad_n = grad_n
        if check_index:
            t0, t1 = self.domain.t_range
            for t in np.linspace(t0, t1, 3):
                for q in self.domain.q_lattice(3):
                    if self.index(q[0], q[1], t) < 1.0 - 1e-9:
                        raise ValueError(f"refractive index below 1 at {(q[0], q[1], t)}")

    def index(self, q1, q2, t):
        return np.asarray(self._n(np.asarray(q1, dtype=float),
                                  np.asarray(q2, dtype=float),
                                  np.asarray(t, dtype=float)), dtype=float) + 0.0

    def index_grad(self, q1, q2, t):
        """(dn/dq1, dn/dq2), broadcast over arrays."""
        q1 = np.asarray(q1, dtype=float)
        q2 = np.asarray(q2, dtype=float)
        t = np.asarray(t, dtype=float)
        if self._grad_n is not None:
            g1, g2 = self._grad_n(q1, q2, t)
            return np.asarray(g1, dtype=float), np.asarray(g2, dtype=float)
        h1 = _fd.H0 * (1.0 + np.abs(q1))
        h2 = _fd.H0 * (1.0 + np.abs(q2))
        g1 = (self.index(q1 + h1, q2, t) - self.index(q1 - h1, q2, t)) / (2.0 * h1)
        g2 = (self.index(q1, q2 + h2, t) - self.index(q1, q2 - h2, t)) / (2.0 * h2)
        return g1, g2


def homogeneous_medium(n0=1.0, **kw):
    n0 = float(n0)
    return Medium(lambda q1, q2, t: np.broadcast_to(n0, np.broadcast(q1, q2, t).shape).copy(),
                  grad_n=lambda q1, q2, t: (np.zeros(np.broadcast(q1, q2, t).shape),
                                            np.zeros(np.broadcast(q1, q2, t).shape)), **kw)


def linear_gradient_medium(slope=0.1, axis="q2", n0=1.0, **kw):
    """n = n0 + slope * coordinate; coordinate one of q1, q2, axis."""

    def pick(q1, q2, t):
        return {"q1": q1, "q2": q2, "axis": t}[axis]

    def n(q1, q2, t):
        return n0 + slope * pick(q1, q2, t) + 0.0 * (q1 + q2 + t)

    def grad(q1, q2, t):
        z = np.zeros(np.broadcast(q1, q2, t).shape)
        g1 = z + (slope if axis == "q1" else 0.0)
        g2 = z + (slope if axis == "q2" else 0.0)
        return g1, g2

    return Medium(n, grad_n=grad, **kw)


def tanh_interface_medium(n1=1.0, n2=1.5, width=0.02, position=0.0, axis="q2", **kw):
    """Smoothed two-layer medium: C^2 tanh profile along one coordinate."""

    def pick(q1, q2, t):
        return {"q1": q1, "q2": q2, "axis": t}[axis]

    def n(q1, q2, t):
        x = pick(q1, q2, t)
        return n1 + (n2 - n1) * 0.5 * (1.0 + np.tanh((x - position) / width)) + 0.0 * (q1 + q2 + t)

    def grad(q1, q2, t):
        x = pick(q1, q2, t)
        d = (n2 - n1) * 0.5 / width / np.cosh((x - position) / width) ** 2
        z = np.zeros(np.broadcast(q1, q2, t).shape)
        return (z + d if axis == "q1" else z), (z + d if axis == "q2" else z)

    return Medium(n, grad_n=grad, **kw)


# ---------------------------------------------------------------------------
# canonical structures

def optical_lagrangian(med):
    """Travel-time Lagrangian over (q1, q2) with the axis as parameter."""

    def L(q, qd, t):
        g = float(med.index(q[0], q[1], t)) / med.c
        return g * float(np.sqrt(1.0 + np.dot(qd, qd)))

    def grad_q(q, qd, t):
        g1, g2 = med.index_grad(q[0], q[1], t)
        f = float(np.sqrt(1.0 + np.dot(qd, qd)))
        return np.array([float(g1), float(g2)]) / med.c * f

    def grad_qdot(q, qd, t):
        g = float(med.index(q[0], q[1], t)) / med.c
        f = float(np.sqrt(1.0 + np.dot(qd, qd)))
        return g * qd / f

    def velocity_hessian(q, qd, t):
        g = float(med.index(q[0], q[1], t)) / med.c
        f2 = 1.0 + float(np.dot(qd, qd))
        f = np.sqrt(f2)
        return g * (np.eye(2) / f - np.outer(qd, qd) / f**3)

    return LagrangianSystem(2, L, domain=med.domain, grad_q=grad_q,
                            grad_qdot=grad_qdot, velocity_hessian=velocity_hessian,
                            name="optical")


def optical_hamiltonian(med):
    """Closed-form Legendre partner H = -sqrt((n/c)^2 - |p|^2).

    Raises ParaxialViolation when |p| reaches the index surface (the ray
    would run orthogonal to the preferred axis).
    """

    def _r(q, p, t):
        g = float(med.index(q[0], q[1], t)) / med.c
        arg = g * g - float(np.dot(p, p))
        floor = (_PARAXIAL_FLOOR * g) ** 2
        if arg <= floor:
            raise ParaxialViolation(f"|p| reached the index surface at q={tuple(q)}, axis={t:g}")
        return g, np.sqrt(arg)

    def H(q, p, t):
        _, r = _r(q, p, t)
        return -r

    def grad_q(q, p, t):
        g, r = _r(q, p, t)
        g1, g2 = med.index_grad(q[0], q[1], t)
        return -(g / r) * np.array([float(g1), float(g2)]) / med.c

    def grad_p(q, p, t):
        _, r = _r(q, p, t)
        return p / r

    return HamiltonianSystem(2, H, domain=med.domain, grad_q=grad_q,
                             grad_p=grad_p, origin="direct", name="optical")


def direction_to_momentum(med, q1, q2, t, qd):
    """p = dL/dqdot for a ray direction (qdot1, qdot2) at a point."""
    qd = _vec(qd, 2)
    g = float(med.index(q1, q2, t)) / med.c
    f = float(np.sqrt(1.0 + np.dot(qd, qd)))
    return g * qd / f


def trace_ray(med, start, direction, t_end, step_control=StepControl(0.005)):
    """Fermat ray from (q1, q2, axis) with direction (qdot1, qdot2).

    Integrates the canonical equations of the optical Lagrangian's
    Hamiltonian; the accumulated action is the travel time.
    """
    q1, q2, t0 = (float(x) for x in start)
    p0 = direction_to_momentum(med, q1, q2, t0, direction)
    ham = optical_hamiltonian(med)
    return integrate_extremal(ham, PhasePoint([q1, q2], p0, t0), t_end, step_control)


# ---------------------------------------------------------------------------
# batched ray engine

def _batch_rhs(med, Q, P, T):
    """RHS arrays for ray batches: dQ, dP, dZ, plus a paraxial-failure mask."""
    g = med.index(Q[:, 0], Q[:, 1], T) / med.c
    r2 = g * g - np.sum(P * P, axis=1)
    bad = r2 <= (_PARAXIAL_FLOOR * g) ** 2
    r = np.sqrt(np.where(bad, 1.0, r2))
    g1, g2 = med.index_grad(Q[:, 0], Q[:, 1], T)
    dQ = P / r[:, None]
    dP = np.stack([g * g1, g * g2], axis=1) / (med.c * r[:, None])
    dZ = g * g / r
    return dQ, dP, dZ, bad


def _batch_rk4(med, Q, P, Z, T, h):
    """One vectorized RK4 step; h may be scalar or per-ray."""
    h = np.asarray(h, dtype=float)
    hq = h[:, None] if h.ndim else h

    dQ1, dP1, dZ1, b1 = _batch_rhs(med, Q, P, T)
    dQ2, dP2, dZ2, b2 = _batch_rhs(med, Q + 0.5 * hq * dQ1, P + 0.5 * hq * dP1, T + 0.5 * h)
    dQ3, dP3, dZ3, b3 = _batch_rhs(med, Q + 0.5 * hq * dQ2, P + 0.5 * hq * dP2, T + 0.5 * h)
    dQ4, dP4, dZ4, b4 = _batch_rhs(med, Q + hq * dQ3, P + hq * dP3, T + h)

    Qn = Q + (hq / 6.0) * (dQ1 + 2 * dQ2 + 2 * dQ3 + dQ4)
    Pn = P + (hq / 6.0) * (dP1 + 2 * dP2 + 2 * dP3 + dP4)
    Zn = Z + (h / 6.0) * (dZ1 + 2 * dZ2 + 2 * dZ3 + dZ4)
    return Qn, Pn, Zn, T + h, (b1 | b2 | b3 | b4)


def propagate_until_action(med, Q, P, T, z_target, step=0.005, z0=None):
    """March ray batches until the accumulated travel time reaches z_target.

    The crossing step is refined by bisection on the step fraction. Rays
    that fail (paraxial blow-up, step budget) are flagged, not raised.

    Returns (Q, P, T, Z, ok).
    """
    Q = np.array(Q, dtype=float)
    P = np.array(P, dtype=float)
    T = np.array(T, dtype=float)
    N = Q.shape[0]
    Z = np.zeros(N) if z0 is None else np.array(z0, dtype=float)
    z_target = np.broadcast_to(np.asarray(z_target, dtype=float), (N,)).copy()

    ok = np.ones(N, dtype=bool)
    done = Z >= z_target
    # bracket state for the refinement stage
    bQ, bP, bT, bZ = Q.copy(), P.copy(), T.copy(), Z.copy()

    max_steps = int(np.ceil(np.max(z_target - Z, initial=0.0) * med.c / step * 4.0)) + 16
    for _ in range(max_steps):
        if np.all(done | ~ok):
            break
        Qn, Pn, Zn, Tn, bad = _batch_rk4(med, Q, P, Z, T, step)
        ok &= ~bad
        crossing = ok & ~done & (Zn >= z_target)
        bQ[crossing], bP[crossing], bT[crossing], bZ[crossing] = (
            Q[crossing], P[crossing], T[crossing], Z[crossing])
        active = ok & ~done
        Q[active], P[active], Z[active], T[active] = (
            Qn[active], Pn[active], Zn[active], Tn[active])
        done |= crossing
    ok &= done

    # bisection on the step fraction within the bracketing step
    idx = np.where(ok)[0]
    if idx.size:
        lo = np.zeros(idx.size)
        hi = np.full(idx.size, step)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            Qm, Pm, Zm, Tm, _ = _batch_rk4(med, bQ[idx], bP[idx], bZ[idx], bT[idx], mid)
            high = Zm >= z_target[idx]
            hi = np.where(high, mid, hi)
            lo = np.where(high, lo, mid)
            if np.max(hi - lo) < 1e-14 * (1.0 + step):
                break
        Qf, Pf, Zf, Tf, _ = _batch_rk4(med, bQ[idx], bP[idx], bZ[idx], bT[idx], 0.5 * (lo + hi))
        Q[idx], P[idx], Z[idx], T[idx] = Qf, Pf, Zf, Tf
    return Q, P, T, Z, ok


# ---------------------------------------------------------------------------
# wave-fronts

class WaveFront:
    """A sampled wave-front locus in (q1, q2, axis) space.

    ``points`` is (N, 3); ``momenta`` holds the arriving ray momenta
    (p1, p2) so the forward normal (p1, p2, -H) is available per sample.
    """

    def __init__(self, T, points, momenta=None, source=("unknown",), ok=None, meta=None):
        self.T = float(T)
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        self.momenta = None if momenta is None else np.atleast_2d(np.asarray(momenta, dtype=float))
        self.source = source
        self.ok = np.ones(self.points.shape[0], dtype=bool) if ok is None else np.asarray(ok, dtype=bool)
        self.meta = dict(meta or {})

    @property
    def n_samples(self):
        return self.points.shape[0]

    def normals(self, med):
        """Unit forward normals (= ray directions) per sample."""
        if self.momenta is None:
            raise ValueError("front carries no momenta")
        q1, q2, t = self.points[:, 0], self.points[:, 1], self.points[:, 2]
        g = med.index(q1, q2, t) / med.c
        r = np.sqrt(np.maximum(g * g - np.sum(self.momenta**2, axis=1), 0.0))
        n3 = np.stack([self.momenta[:, 0], self.momenta[:, 1], r], axis=1)
        return n3 / np.linalg.norm(n3, axis=1, keepdims=True)


def wavefront_from_point(med, source, T, n_rays=91, theta_max=np.pi / 3,
                         azimuth=0.0, step=0.005):
    """Geodesic sphere of travel-time radius T about a point source.

    Launches a fan of rays with angles to the axis in
    [-theta_max, theta_max] within the plane set by ``azimuth``, stopping
    each when the accumulated travel time reaches T.
    """
    if T < 0:
        raise ValueError("wave-front radius T must be nonnegative")
    q1, q2, t0 = (float(x) for x in source)
    thetas = np.linspace(-theta_max, theta_max, int(n_rays))
    if T == 0.0:
        pts = np.tile([q1, q2, t0], (thetas.size, 1))
        return WaveFront(0.0, pts, momenta=np.zeros((thetas.size, 2)),
                         source=("point", (q1, q2, t0)),
                         meta={"theta_max": theta_max, "azimuth": azimuth, "step": step})
    eu = np.array([np.cos(azimuth), np.sin(azimuth)])
    g0 = float(med.index(q1, q2, t0)) / med.c
    P0 = g0 * np.sin(thetas)[:, None] * eu[None, :]
    Q0 = np.tile([q1, q2], (thetas.size, 1))
    T0 = np.full(thetas.size, t0)
    Q, P, Taxis, Z, ok = propagate_until_action(med, Q0, P0, T0, T, step=step)
    pts = np.column_stack([Q, Taxis])
    return WaveFront(T, pts, momenta=P, source=("point", (q1, q2, t0)), ok=ok,
                     meta={"theta_max": theta_max, "azimuth": azimuth,
                           "n_rays": int(n_rays), "step": step})


def plane_front(med, u_values, axis_value=0.0, azimuth=0.0, origin=(0.0, 0.0)):
    """Plane initial front orthogonal to the axis, sampled along ``azimuth``."""
    u = np.asarray(u_values, dtype=float)
    eu = np.array([np.cos(azimuth), np.sin(azimuth)])
    pts = np.column_stack([origin[0] + u * eu[0], origin[1] + u * eu[1],
                           np.full(u.size, float(axis_value))])
    return WaveFront(0.0, pts, momenta=np.zeros((u.size, 2)), source=("plane", float(axis_value)),
                     meta={"azimuth": azimuth})


def continue_front(med, front, dT, step=0.005):
    """Propagate every front sample along its own ray for travel time dT."""
    if front.momenta is None:
        raise ValueError("front carries no momenta to continue along")
    Q0 = front.points[:, :2]
    T0 = front.points[:, 2]
    Q, P, Taxis, Z, ok = propagate_until_action(med, Q0, front.momenta, T0, dT, step=step)
    pts = np.column_stack([Q, Taxis])
    return WaveFront(front.T + dT, pts, momenta=P,
                     source=("continued",) + tuple(front.source), ok=ok & front.ok,
                     meta=dict(front.meta))


class HuygensReport:
    """Envelope-vs-direct-front comparison."""

    def __init__(self, defect, distances, envelope_points, direct_points):
        self.defect = float(defect)
        self.distances = np.asarray(distances, dtype=float)
        self.envelope_points = np.asarray(envelope_points, dtype=float)
        self.direct_points = np.asarray(direct_points, dtype=float)

    def __repr__(self):
        return f"HuygensReport(defect={self.defect:.3g}, n={self.distances.size})"


def _quad_refine(g_minus, g_zero, g_plus):
    """Vertex offset (in index units, clipped to [-1, 1]) of a 3-point parabola."""
    denom = g_minus - 2.0 * g_zero + g_plus
    if abs(denom) < 1e-14 * (1.0 + abs(g_zero)):
        return 0.0
    return float(np.clip(0.5 * (g_minus - g_plus) / denom, -1.0, 1.0))


def _dist_to_polyline(pts, poly):
    """Distance from each point (M, d) to a polyline (K, d)."""
    a = poly[:-1]
    ab = poly[1:] - a
    denom = np.sum(ab * ab, axis=1)
    denom = np.where(denom == 0.0, 1.0, denom)
    out = np.empty(pts.shape[0])
    for i, x in enumerate(pts):
        sfrac = np.clip(np.sum((x - a) * ab, axis=1) / denom, 0.0, 1.0)
        proj = a + sfrac[:, None] * ab
        out[i] = np.min(np.linalg.norm(x - proj, axis=1))
    return out


def _touch_points(centers, normals, sphere_pts, ok, window, targets, edge_tol=None):
    """Envelope touching points: per target direction, the extremal
    (projection-maximizing) sphere point over a window of centers, with
    quadratic refinement over each sphere's fan.

    With ``edge_tol`` set, a window-edge maximum that improves on the
    central sphere by more than the tolerance raises SamplingTooCoarse
    (the true touching sphere lies outside the window); near-flat
    profiles, where the edge hit is noise on a tie, are accepted.
    """
    K = sphere_pts.shape[1]
    offsets = sorted(range(-window, window + 1), key=abs)   # prefer near centers on ties
    env_pts = []
    for idx, j in enumerate(targets):
        nj = normals[idx]
        best_val = -np.inf
        best_pt = None
        best_off = None
        center_val = None
        for off in offsets:
            jp = j + off
            if not np.all(ok[jp]):
                raise SamplingTooCoarse(f"failed secondary rays on sphere {jp}")
            proj = (sphere_pts[jp] - centers[j]) @ nj
            k = int(np.argmax(proj))
            if k == 0 or k == K - 1:
                raise SamplingTooCoarse("touching direction outside the sphere fan")
            alpha = _quad_refine(proj[k - 1], proj[k], proj[k + 1])
            val = proj[k] - 0.25 * (proj[k - 1] - proj[k + 1]) * alpha
            xm, x0, xp = sphere_pts[jp, k - 1], sphere_pts[jp, k], sphere_pts[jp, k + 1]
            pt = x0 + alpha * (xp - xm) / 2.0 + alpha**2 * (xp - 2 * x0 + xm) / 2.0
            if off == 0:
                center_val = val
            if best_pt is None or val > best_val + 1e-12 * (1.0 + abs(best_val)):
                best_val, best_pt, best_off = val, pt, off
        if (edge_tol is not None and abs(best_off) == window
                and best_val - center_val > edge_tol):
            raise SamplingTooCoarse("touching sphere at the window edge; enlarge window/density")
        env_pts.append(best_pt)
    return np.asarray(env_pts)


def _polyline_normals(pts, reference):
    """Unit in-plane normals of a polyline, oriented along the reference."""
    tang = np.empty_like(pts)
    tang[1:-1] = pts[2:] - pts[:-2]
    tang[0] = pts[1] - pts[0]
    tang[-1] = pts[-1] - pts[-2]
    tang /= np.linalg.norm(tang, axis=1, keepdims=True)
    # rotate 90 degrees within the plane spanned by the tangent and reference
    normals = reference - np.sum(reference * tang, axis=1, keepdims=True) * tang
    norms = np.linalg.norm(normals, axis=1, keepdims=True)
    return normals / np.where(norms == 0.0, 1.0, norms)


def huygens_check(med, front1, dT, sphere_rays=181, sphere_theta_max=0.7,
                  window=8, step=0.005, direct=None, direct_refine=2,
                  normal_iterations=3):
    """Verify the envelope construction of the next front.

    Secondary geodesic spheres of radius dT are traced around the samples
    of ``front1``; for each interior sample the touching point is the
    projection maximum over nearby spheres, with quadratic refinement
    over the sphere fan. The target directions start at the front
    normals and are re-estimated from the provisional envelope polyline
    (in graded media the envelope normal tilts away from the front
    normal). The final locus is compared with the directly propagated
    front at front1.T + dT; the report carries the maximum distance
    defect.
    """
    if front1.n_samples < 2 * window + 3:
        raise SamplingTooCoarse("front has too few samples for the requested window")
    centers = front1.points
    normals = front1.normals(med)
    N = centers.shape[0]

    # secondary spheres: one fan per center, angles measured from each normal
    g = med.index(centers[:, 0], centers[:, 1], centers[:, 2]) / med.c
    eu = _plane_unit(front1)
    n_u = normals[:, 0] * eu[0] + normals[:, 1] * eu[1]
    base_theta = np.arctan2(n_u, normals[:, 2])
    d_theta = np.linspace(-sphere_theta_max, sphere_theta_max, int(sphere_rays))
    thetas = base_theta[:, None] + d_theta[None, :]          # (N, K)
    sin_t = np.sin(thetas)
    P0 = g[:, None, None] * sin_t[:, :, None] * eu[None, None, :]
    Q0 = np.repeat(centers[:, None, :2], d_theta.size, axis=1)
    T0 = np.repeat(centers[:, None, 2], d_theta.size, axis=1)

    K = d_theta.size
    Qf, Pf, Tf, Zf, ok = propagate_until_action(
        med, Q0.reshape(-1, 2), P0.reshape(-1, 2), T0.reshape(-1), dT, step=step)
    sphere_pts = np.column_stack([Qf, Tf]).reshape(N, K, 3)
    ok = ok.reshape(N, K)

    targets = list(range(window, N - window))
    target_normals = normals[targets]
    iters = max(1, normal_iterations)
    edge_tol = 1e-3 * med.c * dT / float(np.min(g))
    env_pts = None
    for it in range(iters):
        env_pts = _touch_points(centers, target_normals, sphere_pts, ok, window,
                                targets, edge_tol=edge_tol if it == iters - 1 else None)
        target_normals = _polyline_normals(env_pts, normals[targets])
    # one-sided tangents degrade the polyline-normal estimate at the ends;
    # those samples are provisional only
    if iters > 1 and env_pts.shape[0] > 2 * (iters - 1) + 2:
        env_pts = env_pts[iters - 1:-(iters - 1)]

    if direct is None:
        if front1.source[0] == "point":
            src = front1.source[1]
            n_dir = int(front1.meta.get("n_rays", front1.n_samples)) * direct_refine
            direct = wavefront_from_point(med, src, front1.T + dT, n_rays=n_dir,
                                          theta_max=front1.meta.get("theta_max", np.pi / 3),
                                          azimuth=front1.meta.get("azimuth", 0.0), step=step)
        else:
            direct = continue_front(med, front1, dT, step=step)
    dists = _dist_to_polyline(env_pts, direct.points)
    return HuygensReport(np.max(dists), dists, env_pts, direct.points)


def _plane_unit(front):
    az = float(front.meta.get("azimuth", 0.0))
    return np.array([np.cos(az), np.sin(az)])


def propagate_front(med, fam, front_sigma, T, seeds, step=0.005):
    """Advance the level set S = front_sigma of an optical HJ family by T.

    ``seeds`` are (q1, q2, axis) starting guesses; each is projected onto
    the level set, given the canonical momentum grad S, and carried along
    its extremal until the accumulated travel time reaches T. The
    returned front stores the per-sample defect |S - (front_sigma + T)|
    in meta["sigma_defect"].
    """
    seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
    pts0 = []
    mom0 = []
    for s in seeds:
        q = project_to_level(fam, s[:2], s[2], front_sigma)
        pts0.append([q[0], q[1], s[2]])
        mom0.append(fam.grad_q(q, s[2]))
    pts0 = np.asarray(pts0)
    mom0 = np.asarray(mom0)
    if T == 0.0:
        front = WaveFront(0.0, pts0, momenta=mom0, source=("family", float(front_sigma)))
        front.meta["sigma_defect"] = np.zeros(pts0.shape[0])
        return front
    Q, P, Taxis, Z, ok = propagate_until_action(med, pts0[:, :2], mom0, pts0[:, 2], T, step=step)
    pts = np.column_stack([Q, Taxis])
    front = WaveFront(T, pts, momenta=P, source=("family", float(front_sigma)), ok=ok)
    front.meta["sigma_defect"] = np.array(
        [abs(fam.value(pts[i, :2], pts[i, 2]) - (front_sigma + T)) for i in range(pts.shape[0])]
    )
    return front
