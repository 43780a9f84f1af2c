"""Hamilton's two-point characteristic function.

S(q1, t1; q2, t2) is the action along the unique extremal joining the
end events, found here by Newton shooting on the initial momentum. Its
end-point gradients reproduce the boundary momenta and Hamiltonian
values, which lets trajectories be recovered from S alone by algebra
(no further integration): solve dS/dq1 = -p1 for q2, then read
p2 = dS/dq2.
"""

from __future__ import annotations

import numpy as np

from .errors import AmbiguousConnection, DomainEscape, NoConnection, RecoveryFailure
from .varcore import PhasePoint, StepControl, _vec, integrate_extremal


class TwoPointResult:
    """Shooting outcome: the action value and the end momenta."""

    def __init__(self, value, p1, p2, converged, shots):
        self.value = float(value)
        self.p1 = np.asarray(p1, dtype=float)
        self.p2 = np.asarray(p2, dtype=float)
        self.converged = bool(converged)
        self.shots = int(shots)

    def __repr__(self):
        return (f"TwoPointResult(value={self.value:.9g}, p1={self.p1}, p2={self.p2}, "
                f"shots={self.shots})")


def _endpoint(ham, q1, p1, t1, t2, step_control):
    """Terminal (q, p, action) of a shot, or None if it leaves the domain."""
    try:
        curve = integrate_extremal(ham, PhasePoint(q1, p1, t1), t2, step_control)
    except DomainEscape:
        return None
    return curve.q[-1], curve.p[-1], curve.total_action


def two_point_characteristic(ham, P1, P2, seed_p1=None, shoot_tol=1e-10,
                             max_shots=60, step_control=StepControl(0.01),
                             verify_unique=False, ambiguity_tol=1e-6):
    """Action along the extremal from event P1 = (q1, t1) to P2 = (q2, t2).

    Newton shooting on the initial momentum with a finite-difference
    sensitivity matrix; the returned value is the accumulated action of
    the converged trajectory. ``verify_unique`` re-shoots from perturbed
    seeds and raises AmbiguousConnection if a distinct solution appears
    (conjugate-point regime).
    """
    q1, t1 = _vec(P1[0], ham.dim), float(P1[1])
    q2, t2 = _vec(P2[0], ham.dim), float(P2[1])
    if not t2 > t1:
        raise ValueError("two-point problem requires t2 > t1")

    def solve(p_start):
        p = _vec(p_start, ham.dim).copy()
        hit = _endpoint(ham, q1, p, t1, t2, step_control)
        if hit is None:
            return p, p, 0.0, 1, False
        qe, pe, act = hit
        F = qe - q2
        shots = 1
        scale = 1.0 + float(np.linalg.norm(q2))
        for _ in range(max_shots):
            rn = float(np.linalg.norm(F))
            if rn <= shoot_tol * scale:
                return p, pe, act, shots, True
            J = np.empty((ham.dim, ham.dim))
            for j in range(ham.dim):
                h = 1e-6 * (1.0 + abs(p[j]))
                pp = p.copy(); pm = p.copy()
                pp[j] += h; pm[j] -= h
                hp = _endpoint(ham, q1, pp, t1, t2, step_control)
                hm = _endpoint(ham, q1, pm, t1, t2, step_control)
                shots += 2
                if hp is None or hm is None:
                    return p, pe, act, shots, False
                J[:, j] = (hp[0] - hm[0]) / (2.0 * h)
            try:
                delta = np.linalg.solve(J, -F)
            except np.linalg.LinAlgError:
                return p, pe, act, shots, False
            lam = 1.0
            for _ in range(25):
                trial = p + lam * delta
                hit = _endpoint(ham, q1, trial, t1, t2, step_control)
                shots += 1
                if hit is not None:
                    Ft = hit[0] - q2
                    if np.linalg.norm(Ft) < rn:
                        break
                lam *= 0.5
            else:
                return p, pe, act, shots, False
            p, F, (_, pe, act) = trial, Ft, hit
        return p, pe, act, shots, np.linalg.norm(F) <= shoot_tol * scale

    seed = _vec(seed_p1, ham.dim) if seed_p1 is not None else np.zeros(ham.dim)
    p1, p2, action, shots, converged = solve(seed)
    if not converged:
        raise NoConnection(
            f"shooting did not converge from seed {seed} between t={t1:g} and t={t2:g}")

    if verify_unique:
        span = 1.0 + float(np.linalg.norm(p1))
        for probe in (p1 + 0.1 * span, p1 - 0.1 * span):
            alt_p1, _, _, _, ok = solve(probe)
            if ok and np.linalg.norm(alt_p1 - p1) > ambiguity_tol * span:
                raise AmbiguousConnection(
                    f"distinct extremal found: p1={p1} vs {alt_p1}")
    return TwoPointResult(action, p1, p2, converged, shots)


def char_gradients(ham, P1, P2, seed_p1=None, h=1e-5, step_control=StepControl(0.01)):
    """End-point derivatives (S_t1, S_q1, S_t2, S_q2) by central differences.

    Contracts: S_q2 = p2, S_q1 = -p1, S_t2 = -H at P2, S_t1 = +H at P1.
    Each perturbed solve is warm-started from the central solution.
    """
    q1, t1 = _vec(P1[0], ham.dim), float(P1[1])
    q2, t2 = _vec(P2[0], ham.dim), float(P2[1])
    base = two_point_characteristic(ham, P1, P2, seed_p1, step_control=step_control)
    warm = base.p1

    def value(a1, s1, a2, s2):
        return two_point_characteristic(
            ham, (a1, s1), (a2, s2), seed_p1=warm, step_control=step_control).value

    S_q1 = np.empty(ham.dim)
    S_q2 = np.empty(ham.dim)
    for j in range(ham.dim):
        e = np.zeros(ham.dim); e[j] = h
        S_q1[j] = (value(q1 + e, t1, q2, t2) - value(q1 - e, t1, q2, t2)) / (2 * h)
        S_q2[j] = (value(q1, t1, q2 + e, t2) - value(q1, t1, q2 - e, t2)) / (2 * h)
    S_t1 = (value(q1, t1 + h, q2, t2) - value(q1, t1 - h, q2, t2)) / (2 * h)
    S_t2 = (value(q1, t1, q2, t2 + h) - value(q1, t1, q2, t2 - h)) / (2 * h)
    return S_t1, S_q1, S_t2, S_q2


def shooting_provider(ham, step_control=StepControl(0.01)):
    """S(q1, t1, q2, t2) callable backed by shooting, with a warm-start cache.

    The returned callable also exposes ``gradients(q1, t1, q2, t2)``
    yielding (dS/dq1, dS/dq2) = (-p1, p2) from the converged shot: the
    end-point derivative identities make finite differencing of the
    value unnecessary for gradient consumers.
    """
    cache = {"p1": None}

    def _solve(q1, t1, q2, t2):
        res = two_point_characteristic(
            ham, (q1, t1), (q2, t2), seed_p1=cache["p1"], step_control=step_control)
        cache["p1"] = res.p1
        return res

    def S(q1, t1, q2, t2):
        return _solve(q1, t1, q2, t2).value

    def gradients(q1, t1, q2, t2):
        res = _solve(q1, t1, q2, t2)
        return -res.p1, res.p2

    S.gradients = gradients
    return S


def recover_trajectory(charfn_provider, q1, p1, t1, t2, seed_q2=None,
                       tol=1e-9, max_iter=40, fd_h=1e-5):
    """Evolve (q1, p1) to t2 using only the two-point function.

    Solves dS/dq1(q1, t1; q2, t2) = -p1 for q2 by Newton, then reads
    p2 = dS/dq2. The provider may be analytic or shooting-backed; its
    gradients come from a ``gradients`` attribute when it has one and
    from central differences of the value otherwise.
    """
    q1 = _vec(q1)
    p1 = _vec(p1, q1.size)
    n = q1.size

    def S(a, b):
        return float(charfn_provider(a, t1, b, t2))

    grad_fn = getattr(charfn_provider, "gradients", None)

    def dS_dq1(q2v):
        if grad_fn is not None:
            return _vec(grad_fn(q1, t1, q2v, t2)[0], n)
        g = np.empty(n)
        for j in range(n):
            e = np.zeros(n); e[j] = fd_h
            g[j] = (S(q1 + e, q2v) - S(q1 - e, q2v)) / (2 * fd_h)
        return g

    def dS_dq2(q2v):
        if grad_fn is not None:
            return _vec(grad_fn(q1, t1, q2v, t2)[1], n)
        g = np.empty(n)
        for j in range(n):
            e = np.zeros(n); e[j] = fd_h
            g[j] = (S(q1, q2v + e) - S(q1, q2v - e)) / (2 * fd_h)
        return g

    q2 = _vec(seed_q2, n).copy() if seed_q2 is not None else q1 + (t2 - t1) * p1
    F = dS_dq1(q2) + p1
    scale = 1.0 + float(np.linalg.norm(p1))
    for _ in range(max_iter):
        if np.linalg.norm(F) <= tol * scale:
            p2 = dS_dq2(q2)
            return q2, p2
        J = np.empty((n, n))
        for j in range(n):
            e = np.zeros(n); e[j] = max(1e-5, fd_h * 10)
            J[:, j] = (dS_dq1(q2 + e) - dS_dq1(q2 - e)) / (2 * e[j])
        try:
            delta = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            raise RecoveryFailure("singular mixed second-derivative block d2S/dq1 dq2")
        lam = 1.0
        for _ in range(25):
            trial = q2 + lam * delta
            Ft = dS_dq1(trial) + p1
            if np.linalg.norm(Ft) < np.linalg.norm(F):
                break
            lam *= 0.5
        else:
            raise RecoveryFailure("trajectory recovery stalled")
        q2, F = trial, Ft
    raise RecoveryFailure(f"no convergence; residual {np.linalg.norm(F):.3g}")
