"""Variational systems and the Legendre transform.

Houses the basic calculus-of-variations machinery the rest of the toolkit
builds on: Lagrangian/Hamiltonian evaluators with derivative access, the
action integral along paths, Euler-Lagrange residuals, canonical (RK4)
extremal integration with the action accumulated alongside, and the
parameter-homogenized extended system (degree-1 L*, symmetric Phi).

Conventions: configuration q and momentum p are 1-D float arrays of
length ``dim``; the curve parameter is a scalar t. All quantities are in
dimensionless program units.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _fd
from .errors import (
    BadCurve,
    BadParameterDirection,
    BoundaryPoint,
    DegenerateLagrangian,
    DomainEscape,
    InversionFailure,
)


def _vec(x, dim=None):
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if dim is not None and v.size != dim:
        raise ValueError(f"expected vector of length {dim}, got {v.size}")
    return v


@dataclass(frozen=True)
class Domain:
    """Box region in (q, t) space on which a system is trusted.

    ``lower``/``upper`` bound the configuration coordinates componentwise,
    ``t_range`` bounds the curve parameter.
    """

    lower: np.ndarray
    upper: np.ndarray
    t_range: tuple

    def __post_init__(self):
        object.__setattr__(self, "lower", _vec(self.lower))
        object.__setattr__(self, "upper", _vec(self.upper))
        object.__setattr__(self, "t_range", (float(self.t_range[0]), float(self.t_range[1])))
        if self.lower.shape != self.upper.shape:
            raise ValueError("lower/upper must have equal length")
        if not np.all(self.lower < self.upper):
            raise ValueError("domain requires lower < upper componentwise")
        if not self.t_range[0] < self.t_range[1]:
            raise ValueError("domain requires a nonempty t_range")

    @property
    def dim(self):
        return self.lower.size

    def contains(self, q, t):
        q = _vec(q)
        return (
            bool(np.all(q >= self.lower) and np.all(q <= self.upper))
            and self.t_range[0] <= t <= self.t_range[1]
        )

    def q_lattice(self, per_axis=3, margin=0.05):
        """Regular interior lattice of configuration points, (m, dim)."""
        span = self.upper - self.lower
        axes = [
            np.linspace(self.lower[i] + margin * span[i], self.upper[i] - margin * span[i], per_axis)
            for i in range(self.dim)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def t_lattice(self, n=3, margin=0.05):
        t0, t1 = self.t_range
        span = t1 - t0
        return np.linspace(t0 + margin * span, t1 - margin * span, n)


def box_domain(dim, half_width=10.0, t_range=(-10.0, 10.0)):
    """Convenience symmetric box domain."""
    return Domain(-half_width * np.ones(dim), half_width * np.ones(dim), t_range)


@dataclass(frozen=True)
class VarState:
    """A line element (q, qdot, t)."""

    q: np.ndarray
    qdot: np.ndarray
    t: float

    def __post_init__(self):
        object.__setattr__(self, "q", _vec(self.q))
        object.__setattr__(self, "qdot", _vec(self.qdot, self.q.size))
        object.__setattr__(self, "t", float(self.t))
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.qdot)) and np.isfinite(self.t)):
            raise ValueError("VarState components must be finite")


@dataclass(frozen=True)
class PhasePoint:
    """A canonical point (q, p, t)."""

    q: np.ndarray
    p: np.ndarray
    t: float

    def __post_init__(self):
        object.__setattr__(self, "q", _vec(self.q))
        object.__setattr__(self, "p", _vec(self.p, self.q.size))
        object.__setattr__(self, "t", float(self.t))
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.p)) and np.isfinite(self.t)):
            raise ValueError("PhasePoint components must be finite")


class LagrangianSystem:
    """A Lagrangian L(q, qdot, t) with derivative access.

    Analytic gradients are optional; central finite differences with step
    h = cbrt(eps) * (1 + |x|) are used where they are absent.
    """

    def __init__(self, dim, L, domain=None, grad_q=None, grad_qdot=None,
                 velocity_hessian=None, name=None):
        if dim < 1:
            raise ValueError("dim must be a positive integer")
        self.dim = int(dim)
        self._L = L
        self.domain = domain if domain is not None else box_domain(dim)
        self._grad_q = grad_q
        self._grad_qdot = grad_qdot
        self._velocity_hessian = velocity_hessian
        self.name = name or "lagrangian"

    def lagrangian(self, q, qdot, t):
        return float(self._L(_vec(q, self.dim), _vec(qdot, self.dim), float(t)))

    def grad_q(self, q, qdot, t):
        q = _vec(q, self.dim)
        qdot = _vec(qdot, self.dim)
        if self._grad_q is not None:
            return _vec(self._grad_q(q, qdot, t), self.dim)
        return _fd.grad(lambda x: self._L(x, qdot, t), q)

    def grad_qdot(self, q, qdot, t):
        q = _vec(q, self.dim)
        qdot = _vec(qdot, self.dim)
        if self._grad_qdot is not None:
            return _vec(self._grad_qdot(q, qdot, t), self.dim)
        return _fd.grad(lambda v: self._L(q, v, t), qdot)

    def velocity_hessian(self, q, qdot, t):
        q = _vec(q, self.dim)
        qdot = _vec(qdot, self.dim)
        if self._velocity_hessian is not None:
            return np.asarray(self._velocity_hessian(q, qdot, t), dtype=float).reshape(self.dim, self.dim)
        if self._grad_qdot is not None:
            return _fd.jacobian(lambda v: self._grad_qdot(q, v, t), qdot)
        return _fd.hessian(lambda v: self._L(q, v, t), qdot)


class HamiltonianSystem:
    """A Hamiltonian H(q, p, t) with derivative access.

    Either constructed directly from evaluators, or derived from a
    LagrangianSystem by ``to_hamiltonian`` (in which case the evaluators
    run a warm-started Newton inversion of p = dL/dqdot). The warm-start
    seed is a single attribute whose update is atomic; a stale seed can
    only cost Newton iterations, never correctness, so concurrent use on
    distinct carriers is safe.
    """

    def __init__(self, dim, H, domain=None, grad_q=None, grad_p=None,
                 origin="direct", lagrangian=None, name=None):
        self.dim = int(dim)
        self._H = H
        self.domain = domain if domain is not None else box_domain(dim)
        self._grad_q = grad_q
        self._grad_p = grad_p
        self.origin = origin
        self.lagrangian_system = lagrangian
        self.name = name or "hamiltonian"

    def hamiltonian(self, q, p, t):
        return float(self._H(_vec(q, self.dim), _vec(p, self.dim), float(t)))

    def grad_q(self, q, p, t):
        q = _vec(q, self.dim)
        p = _vec(p, self.dim)
        if self._grad_q is not None:
            return _vec(self._grad_q(q, p, t), self.dim)
        return _fd.grad(lambda x: self._H(x, p, t), q)

    def grad_p(self, q, p, t):
        q = _vec(q, self.dim)
        p = _vec(p, self.dim)
        if self._grad_p is not None:
            return _vec(self._grad_p(q, p, t), self.dim)
        return _fd.grad(lambda y: self._H(q, y, t), p)


class Curve:
    """A C^2 path q(t) on [t0, t1] given by a callable.

    ``qdot`` may supply the analytic velocity; otherwise central
    differences along the curve are used.
    """

    def __init__(self, q, t0, t1, qdot=None):
        if not t1 >= t0:
            raise BadCurve("curve requires t1 >= t0")
        self._q = q
        self.t0 = float(t0)
        self.t1 = float(t1)
        self._qdot = qdot

    def q(self, t):
        return _vec(self._q(float(t)))

    def velocity(self, t):
        if self._qdot is not None:
            return _vec(self._qdot(float(t)))
        h = _fd.step(t)
        return (self.q(t + h) - self.q(t - h)) / (2.0 * h)


class ExtremalCurve:
    """A canonical trajectory with the running action attached.

    Arrays: t (m,), q (m, n), p (m, n), action (m,) with action[0] = 0.
    """

    def __init__(self, t, q, p, action):
        self.t = np.asarray(t, dtype=float)
        self.q = np.asarray(q, dtype=float)
        self.p = np.asarray(p, dtype=float)
        self.action = np.asarray(action, dtype=float)
        if self.t.size > 1 and not np.all(np.diff(self.t) > 0):
            raise BadCurve("extremal samples require strictly increasing t")
        if self.action.size and self.action[0] != 0.0:
            raise BadCurve("running action must start at 0")

    @property
    def samples(self):
        return [PhasePoint(self.q[i], self.p[i], self.t[i]) for i in range(self.t.size)]

    @property
    def endpoint(self):
        return PhasePoint(self.q[-1], self.p[-1], self.t[-1])

    @property
    def total_action(self):
        return float(self.action[-1])

    def interp_q(self, t):
        """Componentwise linear interpolation of q(t)."""
        t = np.asarray(t, dtype=float)
        return np.stack([np.interp(t, self.t, self.q[:, i]) for i in range(self.q.shape[1])], axis=-1)


@dataclass(frozen=True)
class StepControl:
    """Fixed-step RK4 configuration.

    Energy drift for t-independent H is O(max_step^4) over a fixed
    horizon; halving max_step shrinks the drift by ~16x.
    """

    max_step: float = 0.01

    def n_steps(self, span):
        return max(1, int(np.ceil(abs(span) / self.max_step)))


# ---------------------------------------------------------------------------
# momentum inversion (shared by the Legendre transform and field modules)

def invert_momentum(lag, q, p, t, seed=None, tol=1e-10, max_iter=50):
    """Solve p = dL/dqdot for qdot by damped Newton.

    ``seed`` warm-starts the iteration; defaults to zero velocity.
    Raises InversionFailure (with the last residual) on divergence.
    """
    q = _vec(q, lag.dim)
    p = _vec(p, lag.dim)
    qdot = _vec(seed, lag.dim).copy() if seed is not None else np.zeros(lag.dim)
    scale = 1.0 + float(np.linalg.norm(p))
    F = lag.grad_qdot(q, qdot, t) - p
    for _ in range(max_iter):
        rnorm = float(np.linalg.norm(F))
        if rnorm <= tol * scale:
            return qdot
        M = lag.velocity_hessian(q, qdot, t)
        try:
            delta = np.linalg.solve(M, -F)
        except np.linalg.LinAlgError:
            raise InversionFailure("singular velocity Hessian during inversion", residual=rnorm)
        lam = 1.0
        for _ in range(30):
            trial = qdot + lam * delta
            Ft = lag.grad_qdot(q, trial, t) - p
            if np.linalg.norm(Ft) < rnorm:
                break
            lam *= 0.5
        else:
            raise InversionFailure("damped Newton stalled", residual=rnorm)
        qdot, F = trial, Ft
    rnorm = float(np.linalg.norm(F))
    if rnorm <= tol * scale:
        return qdot
    raise InversionFailure(f"no convergence in {max_iter} iterations", residual=rnorm)


# ---------------------------------------------------------------------------
# operations

def fundamental_integral(lag, curve, quadrature_steps=256):
    """Action integral of L along the curve by composite Simpson rule.

    Converges at fourth order as quadrature_steps is refined. A
    degenerate interval (t0 == t1) integrates to zero exactly.
    """
    if curve.t1 < curve.t0:
        raise BadCurve("integration requires t1 >= t0")
    if curve.t1 == curve.t0:
        return 0.0
    m = int(quadrature_steps)
    if m < 2:
        m = 2
    if m % 2:
        m += 1
    ts = np.linspace(curve.t0, curve.t1, m + 1)
    vals = np.empty(m + 1)
    for i, t in enumerate(ts):
        qi = curve.q(t)
        if not lag.domain.contains(qi, t):
            raise DomainEscape(f"curve leaves domain at t={t:g}")
        vals[i] = lag.lagrangian(qi, curve.velocity(t), t)
    h = (curve.t1 - curve.t0) / m
    weights = np.ones(m + 1)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    return float(h / 3.0 * np.dot(weights, vals))


def hessian_det(lag, state):
    """Determinant of the velocity Hessian at a line element."""
    M = lag.velocity_hessian(state.q, state.qdot, state.t)
    return float(np.linalg.det(M))


def is_degenerate(lag, state, degeneracy_tol=1e-8):
    """Flag |det| below degeneracy_tol relative to the matrix norm."""
    M = lag.velocity_hessian(state.q, state.qdot, state.t)
    scale = max(1.0, float(np.linalg.norm(M))) ** lag.dim
    return abs(float(np.linalg.det(M))) < degeneracy_tol * scale


def _spot_states(lag, per_axis=2, n_t=2, n_qdot=3, seed=7):
    rng = np.random.default_rng(seed)
    states = []
    for t in lag.domain.t_lattice(n_t):
        for q in lag.domain.q_lattice(per_axis):
            for _ in range(n_qdot):
                states.append(VarState(q, rng.standard_normal(lag.dim), t))
    return states


def to_hamiltonian(lag, tol=1e-10, max_iter=50, degeneracy_tol=1e-8, spot_check=True):
    """Legendre transform of a LagrangianSystem.

    The returned HamiltonianSystem inverts p = dL/dqdot by damped Newton
    (seeded from the previous successful query) and evaluates
    H = sum(qdot * p) - L. Gradients use the exact Legendre identities
    dH/dp = qdot and dH/dq = -dL/dq at the inverted velocity.

    The velocity Hessian is spot-checked for degeneracy on a sample
    lattice; a degree-1 homogeneous integrand is rejected here.
    """
    if spot_check:
        for st in _spot_states(lag):
            if is_degenerate(lag, st, degeneracy_tol):
                raise DegenerateLagrangian(
                    f"velocity Hessian vanishes at q={st.q}, qdot={st.qdot}, t={st.t:g}"
                )

    state = {"seed": None}

    def _invert(q, p, t):
        try:
            qdot = invert_momentum(lag, q, p, t, seed=state["seed"], tol=tol, max_iter=max_iter)
        except InversionFailure:
            # cold restart once before giving up: the warm seed may be stale
            qdot = invert_momentum(lag, q, p, t, seed=None, tol=tol, max_iter=max_iter)
        state["seed"] = qdot
        return qdot

    def H(q, p, t):
        qdot = _invert(q, p, t)
        return float(np.dot(qdot, p)) - lag.lagrangian(q, qdot, t)

    def dH_dp(q, p, t):
        return _invert(q, p, t)

    def dH_dq(q, p, t):
        qdot = _invert(q, p, t)
        return -lag.grad_q(q, qdot, t)

    return HamiltonianSystem(
        lag.dim, H, domain=lag.domain, grad_q=dH_dq, grad_p=dH_dp,
        origin="legendre", lagrangian=lag, name=f"legendre({lag.name})",
    )


def el_residual(lag, curve, t, h=1e-4):
    """Euler-Lagrange residual d/dt(dL/dqdot) - dL/dq along a curve.

    The outer time derivative uses step ``h`` (coarser than the inner
    finite-difference steps so their noise stays subdominant).
    """
    t = float(t)
    hh = h * (1.0 + abs(t))
    if t - hh < curve.t0 or t + hh > curve.t1:
        raise BoundaryPoint(f"t={t:g} too close to the curve boundary for step {hh:g}")

    def momentum(s):
        return lag.grad_qdot(curve.q(s), curve.velocity(s), s)

    dmom = (momentum(t + hh) - momentum(t - hh)) / (2.0 * hh)
    return dmom - lag.grad_q(curve.q(t), curve.velocity(t), t)


def _fast_evaluators(ham):
    """Unwrapped (H, dH/dq, dH/dp) callables for tight integration loops."""
    H = ham._H
    if ham._grad_q is not None:
        gq = ham._grad_q
    else:
        gq = lambda q, p, t: _fd.grad(lambda x: H(x, p, t), q)  # noqa: E731
    if ham._grad_p is not None:
        gp = ham._grad_p
    else:
        gp = lambda q, p, t: _fd.grad(lambda y: H(q, y, t), p)  # noqa: E731
    return H, gq, gp


def integrate_extremal(ham, start, t_end, step_control=StepControl()):
    """Integrate the canonical equations from a PhasePoint by fixed-step RK4.

    The action integral of the matched Lagrangian (sum(p*qdot) - H along
    the trajectory) is accumulated as an extra state component, so
    curve.action tracks the fundamental integral from the start point.
    Raises DomainEscape carrying the partial curve if the trajectory
    leaves the domain.
    """
    n = ham.dim
    t0 = float(start.t)
    t_end = float(t_end)
    if t_end < t0:
        raise BadCurve("integrate_extremal requires t_end >= start.t")
    if t_end == t0:
        return ExtremalCurve([t0], [start.q], [start.p], [0.0])

    Hf, gq, gp = _fast_evaluators(ham)

    def rhs(t, y):
        q, p = y[:n], y[n:2 * n]
        Hp = np.asarray(gp(q, p, t), dtype=float)
        Hq = np.asarray(gq(q, p, t), dtype=float)
        out = np.empty(2 * n + 1)
        out[:n] = Hp
        out[n:2 * n] = -Hq
        out[2 * n] = float(np.dot(p, Hp)) - float(Hf(q, p, t))
        return out

    m = step_control.n_steps(t_end - t0)
    hstep = (t_end - t0) / m
    y = np.concatenate([start.q, start.p, [0.0]])
    ts = [t0]
    ys = [y.copy()]
    t = t0
    for i in range(m):
        y = _rk4_step(rhs, t, y, hstep)
        t = t0 + (i + 1) * hstep
        if not ham.domain.contains(y[:n], t):
            partial = ExtremalCurve(
                np.array(ts), np.array([v[:n] for v in ys]),
                np.array([v[n:2 * n] for v in ys]), np.array([v[-1] for v in ys]),
            )
            raise DomainEscape(f"trajectory left the domain at t={t:g}", partial=partial)
        ts.append(t)
        ys.append(y.copy())
    ys = np.array(ys)
    return ExtremalCurve(np.array(ts), ys[:, :n], ys[:, n:2 * n], ys[:, -1])


def _rk4_step(rhs, t, y, h):
    k1 = rhs(t, y)
    k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def hermite_curve(extremal, ham):
    """C^1 cubic Hermite view of an integrated extremal.

    Velocities at the samples come from dH/dp, so the interpolant is
    O(step^4)-accurate between samples: good enough for variational
    perturbation checks.
    """
    t = extremal.t
    q = extremal.q
    v = np.stack([ham.grad_p(q[i], extremal.p[i], t[i]) for i in range(t.size)])

    def _seg(s):
        i = int(np.clip(np.searchsorted(t, s) - 1, 0, t.size - 2))
        h = t[i + 1] - t[i]
        x = (s - t[i]) / h
        return i, h, x

    def qfun(s):
        i, h, x = _seg(float(s))
        h00 = 2 * x**3 - 3 * x**2 + 1
        h10 = x**3 - 2 * x**2 + x
        h01 = -2 * x**3 + 3 * x**2
        h11 = x**3 - x**2
        return h00 * q[i] + h10 * h * v[i] + h01 * q[i + 1] + h11 * h * v[i + 1]

    def vfun(s):
        i, h, x = _seg(float(s))
        d00 = (6 * x**2 - 6 * x) / h
        d10 = 3 * x**2 - 4 * x + 1
        d01 = (-6 * x**2 + 6 * x) / h
        d11 = 3 * x**2 - 2 * x
        return d00 * q[i] + d10 * v[i] + d01 * q[i + 1] + d11 * v[i + 1]

    return Curve(qfun, t[0], t[-1], qdot=vfun)


def flow_curve(ham, start, t1, step_control=StepControl()):
    """Curve view of the canonical flow from ``start``.

    Evaluates q(t) by re-integrating from the start point per query, so
    it is as smooth as the integrator; the velocity uses dH/dp at the
    endpoint. Intended for residual checks, not bulk evaluation.
    """

    def q(t):
        return integrate_extremal(ham, start, t, step_control).q[-1]

    def qdot(t):
        c = integrate_extremal(ham, start, t, step_control)
        return ham.grad_p(c.q[-1], c.p[-1], t)

    return Curve(q, start.t, t1, qdot=qdot)


class ExtendedSystem:
    """Parameter-homogenized form of a variational problem.

    The base system has n-1 configuration coordinates; the extended one
    appends the former parameter as coordinate q_n. lstar is positively
    homogeneous of degree 1 in the extended velocities, and
    phi(q, p) = H(q_alpha, p_alpha, q_n) + p_n exactly, so phi = 0 is the
    base problem's Hamilton-Jacobi equation and p_n = -H along extremals.
    """

    def __init__(self, base, ham):
        self.base = base
        self.ham = ham
        self.dim = base.dim + 1

    def lstar(self, q, qprime):
        q = _vec(q, self.dim)
        qprime = _vec(qprime, self.dim)
        if qprime[-1] <= 0.0:
            raise BadParameterDirection("extended velocity requires q'_n > 0")
        return self.base.lagrangian(q[:-1], qprime[:-1] / qprime[-1], q[-1]) * qprime[-1]

    def phi(self, q, p):
        q = _vec(q, self.dim)
        p = _vec(p, self.dim)
        return self.ham.hamiltonian(q[:-1], p[:-1], q[-1]) + p[-1]

    def momentum_n(self, q, qdot, t):
        """p_n = L - sum(p_alpha * qdot_alpha) at a base line element."""
        p_alpha = self.base.grad_qdot(q, qdot, t)
        return self.base.lagrangian(q, qdot, t) - float(np.dot(p_alpha, qdot))


def homogenize(lag, **legendre_kwargs):
    """Extend a system by treating its parameter as an extra coordinate."""
    ham = to_hamiltonian(lag, **legendre_kwargs)
    return ExtendedSystem(lag, ham)
