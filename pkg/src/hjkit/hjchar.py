"""First-order PDE solution by characteristic strips.

Solves Phi(q, dS/dq) = 0 for S(q) with prescribed values c(u) on an
(n-1)-dimensional initial surface V: q = a(u). Initial momenta b(u) are
adjusted so that Phi(a, b) = 0 together with the tangency conditions
dc/du_a = sum_i b_i da_i/du_a; the characteristic system

    dq/ds = dPhi/dp,   dp/ds = -dPhi/dq,   dz/ds = sum_i p_i dPhi/dp_i

is then integrated from s = 0 on V over a parameter lattice, and S(q) is
read off by inverting (s, u) -> q(s, u) with Newton, seeded from the
nearest lattice sample.

Evaluators may be marked ``vectorized`` (accepting (N, n) arrays); all
bundled problems are, which keeps batched evaluation at desk scale fast.
Supported dimensions: n = 2 or 3 (u lattices of one or two axes).
"""

from __future__ import annotations

import numpy as np

from . import _fd
from .errors import CausticSuspected, OutOfSheet, StripFailure
from .varcore import _vec, box_domain


class PdeProblem:
    """Phi(q, p) = 0 with gradient access; q, p of length dim."""

    def __init__(self, dim, phi, domain=None, grad_q=None, grad_p=None,
                 vectorized=False, name=None):
        if dim < 2:
            raise ValueError("characteristic machinery requires dim >= 2")
        self.dim = int(dim)
        self._phi = phi
        self.domain = domain if domain is not None else box_domain(dim)
        self._grad_q = grad_q
        self._grad_p = grad_p
        self.vectorized = bool(vectorized)
        self.name = name or "pde"

    # batch evaluators on (N, n) arrays -----------------------------------
    def phi_batch(self, Q, P):
        if self.vectorized:
            return np.asarray(self._phi(Q, P), dtype=float)
        return np.array([float(self._phi(Q[i], P[i])) for i in range(Q.shape[0])])

    def _fd_batch(self, Q, P, wrt):
        base = Q if wrt == "q" else P
        out = np.empty_like(base)
        for j in range(self.dim):
            h = _fd.H0 * (1.0 + np.abs(base[:, j]))
            bp = base.copy(); bm = base.copy()
            bp[:, j] += h; bm[:, j] -= h
            if wrt == "q":
                out[:, j] = (self.phi_batch(bp, P) - self.phi_batch(bm, P)) / (2.0 * h)
            else:
                out[:, j] = (self.phi_batch(Q, bp) - self.phi_batch(Q, bm)) / (2.0 * h)
        return out

    def grad_q_batch(self, Q, P):
        if self._grad_q is not None:
            if self.vectorized:
                return np.asarray(self._grad_q(Q, P), dtype=float)
            return np.array([_vec(self._grad_q(Q[i], P[i]), self.dim) for i in range(Q.shape[0])])
        return self._fd_batch(Q, P, "q")

    def grad_p_batch(self, Q, P):
        if self._grad_p is not None:
            if self.vectorized:
                return np.asarray(self._grad_p(Q, P), dtype=float)
            return np.array([_vec(self._grad_p(Q[i], P[i]), self.dim) for i in range(Q.shape[0])])
        return self._fd_batch(Q, P, "p")

    # scalar conveniences ---------------------------------------------------
    def phi(self, q, p):
        return float(self.phi_batch(_vec(q, self.dim)[None, :], _vec(p, self.dim)[None, :])[0])

    def grad_q(self, q, p):
        return self.grad_q_batch(_vec(q, self.dim)[None, :], _vec(p, self.dim)[None, :])[0]

    def grad_p(self, q, p):
        return self.grad_p_batch(_vec(q, self.dim)[None, :], _vec(p, self.dim)[None, :])[0]


class InitialSurface:
    """Data surface V: q = a(u) carrying prescribed values c(u)."""

    def __init__(self, dim_u, a, c, u_domain=None, vectorized=False, name=None):
        if dim_u < 1:
            raise ValueError("initial surface needs at least one parameter")
        self.dim_u = int(dim_u)
        self._a = a
        self._c = c
        self.u_domain = u_domain
        self.vectorized = bool(vectorized)
        self.name = name or "surface"

    def a_batch(self, U):
        if self.vectorized:
            return np.asarray(self._a(U), dtype=float)
        return np.array([_vec(self._a(U[i])) for i in range(U.shape[0])])

    def c_batch(self, U):
        if self.vectorized:
            return np.asarray(self._c(U), dtype=float)
        return np.array([float(self._c(U[i])) for i in range(U.shape[0])])

    def a_jacobian_batch(self, U):
        """(N, n, dim_u) array of da/du by central differences."""
        N = U.shape[0]
        a0 = self.a_batch(U)
        J = np.empty((N, a0.shape[1], self.dim_u))
        for j in range(self.dim_u):
            h = _fd.H0 * (1.0 + np.abs(U[:, j]))
            Up = U.copy(); Um = U.copy()
            Up[:, j] += h; Um[:, j] -= h
            J[:, :, j] = (self.a_batch(Up) - self.a_batch(Um)) / (2.0 * h)[:, None]
        return J

    def c_grad_batch(self, U):
        N = U.shape[0]
        G = np.empty((N, self.dim_u))
        for j in range(self.dim_u):
            h = _fd.H0 * (1.0 + np.abs(U[:, j]))
            Up = U.copy(); Um = U.copy()
            Up[:, j] += h; Um[:, j] -= h
            G[:, j] = (self.c_batch(Up) - self.c_batch(Um)) / (2.0 * h)
        return G

    def a(self, u):
        return self.a_batch(np.atleast_1d(np.asarray(u, dtype=float))[None, :])[0]

    def c(self, u):
        return float(self.c_batch(np.atleast_1d(np.asarray(u, dtype=float))[None, :])[0])


class StripData:
    """Solved initial strips on a u lattice: (a(u), b(u), c(u))."""

    def __init__(self, u_grids, U, A, B, C):
        self.u_grids = tuple(np.asarray(g, dtype=float) for g in u_grids)
        self.u_shape = tuple(g.size for g in self.u_grids)
        self.U = U
        self.A = A
        self.B = B
        self.C = C


def _strips_newton(prob, surf, U, B, tol, max_iter):
    """Batched (plain) Newton on the strip system; returns B and residual norms."""
    A = surf.a_batch(U)
    Aj = surf.a_jacobian_batch(U)               # (N, n, m)
    cg = surf.c_grad_batch(U)                   # (N, m)
    n, m = prob.dim, surf.dim_u
    for _ in range(max_iter):
        F_tan = np.einsum("nim,ni->nm", Aj, B) - cg          # (N, m)
        F_phi = prob.phi_batch(A, B)                         # (N,)
        F = np.concatenate([F_tan, F_phi[:, None]], axis=1)  # (N, n)
        res = np.linalg.norm(F, axis=1)
        if np.all(res <= tol):
            break
        J = np.empty((U.shape[0], n, n))
        J[:, :m, :] = np.swapaxes(Aj, 1, 2)
        J[:, m, :] = prob.grad_p_batch(A, B)
        try:
            delta = np.linalg.solve(J, -F[..., None])[..., 0]
        except np.linalg.LinAlgError:
            raise StripFailure("singular strip system")
        B = B + delta
    F_tan = np.einsum("nim,ni->nm", Aj, B) - cg
    F_phi = prob.phi_batch(A, B)
    res = np.linalg.norm(np.concatenate([F_tan, F_phi[:, None]], axis=1), axis=1)
    return A, B, res


def solve_strip_conditions(prob, surf, u, seed_b, tol=1e-12, max_iter=40):
    """Momenta b(u) solving Phi(a, b) = 0 plus the tangency conditions.

    The caller's ``seed_b`` selects the branch (e.g. the outgoing normal
    for the eikonal equation); Newton divergence raises StripFailure.
    """
    U = np.atleast_1d(np.asarray(u, dtype=float))[None, :]
    B = _vec(seed_b, prob.dim)[None, :].copy()
    _, B, res = _strips_newton(prob, surf, U, B, tol, max_iter)
    if res[0] > 1e-9:
        raise StripFailure(f"strip conditions not satisfied at u={u} (residual {res[0]:.3g})")
    return B[0]


def solve_strips(prob, surf, u_grids, seed_b, tol=1e-12, max_iter=40):
    """Solve strip conditions on a lattice of u values.

    ``u_grids``: one 1-D array per surface parameter. ``seed_b`` selects
    the branch: either a constant momentum vector or a callable u -> seed
    (needed e.g. for the outward branch around a closed surface).
    Verifies dPhi/dp does not vanish on V.
    """
    if isinstance(u_grids, np.ndarray) and u_grids.ndim == 1:
        u_grids = (u_grids,)
    u_grids = tuple(np.asarray(g, dtype=float) for g in u_grids)
    if len(u_grids) != surf.dim_u:
        raise ValueError("one u grid per surface parameter required")
    mesh = np.meshgrid(*u_grids, indexing="ij")
    U = np.stack([m.ravel() for m in mesh], axis=-1)
    if callable(seed_b):
        B = np.array([_vec(seed_b(U[i]), prob.dim) for i in range(U.shape[0])])
    else:
        B = np.tile(_vec(seed_b, prob.dim), (U.shape[0], 1))
    A, B, res = _strips_newton(prob, surf, U, B, tol, max_iter)
    if np.any(res > 1e-9):
        bad = int(np.argmax(res))
        raise StripFailure(
            f"strip conditions failed at u={U[bad]} (residual {res[bad]:.3g})")
    if np.max(np.linalg.norm(prob.grad_p_batch(A, B), axis=1)) < 1e-12:
        raise StripFailure("dPhi/dp vanishes on the initial surface")
    return StripData(u_grids, U, A, B, surf.c_batch(U))


def _char_rhs(prob, Q, P):
    dQ = prob.grad_p_batch(Q, P)
    dP = -prob.grad_q_batch(Q, P)
    dZ = np.sum(P * dQ, axis=1)
    return dQ, dP, dZ


def _char_rk4(prob, Q, P, Z, h):
    """One RK4 step of the characteristic system; h scalar or (N,)."""
    h = np.asarray(h, dtype=float)
    hq = h[:, None] if h.ndim else h
    dQ1, dP1, dZ1 = _char_rhs(prob, Q, P)
    dQ2, dP2, dZ2 = _char_rhs(prob, Q + 0.5 * hq * dQ1, P + 0.5 * hq * dP1)
    dQ3, dP3, dZ3 = _char_rhs(prob, Q + 0.5 * hq * dQ2, P + 0.5 * hq * dP2)
    dQ4, dP4, dZ4 = _char_rhs(prob, Q + hq * dQ3, P + hq * dP3)
    return (Q + (hq / 6.0) * (dQ1 + 2 * dQ2 + 2 * dQ3 + dQ4),
            P + (hq / 6.0) * (dP1 + 2 * dP2 + 2 * dP3 + dP4),
            Z + (h / 6.0) * (dZ1 + 2 * dZ2 + 2 * dZ3 + dZ4))


class CharacteristicSheet:
    """Characteristic congruence samples (q, p, z) on an (s, u) lattice."""

    def __init__(self, prob, surf, strips, s_values, q, p, z, valid, step, jac_tol=1e-8):
        self.prob = prob
        self.surf = surf
        self.strips = strips
        self.s_values = s_values          # (K,)
        self.q = q                        # (K, M, n)
        self.p = p
        self.z = z                        # (K, M)
        self.valid = valid                # (K, M)
        self.step = float(step)
        self.jac_tol = float(jac_tol)
        self.jacobian_ok = self._jacobian_flags()

    @property
    def u_shape(self):
        return self.strips.u_shape

    def _grid(self, arr):
        """Reshape (K, M, ...) lattice arrays to (K, *u_shape, ...)."""
        return arr.reshape((self.s_values.size,) + self.u_shape + arr.shape[2:])

    def _u_derivatives(self, arr):
        """Central differences along each u axis of a (K, *u_shape, ...) array."""
        outs = []
        for ax, grid in enumerate(self.strips.u_grids):
            d = np.gradient(arr, grid, axis=1 + ax)
            outs.append(d)
        return outs

    def _jacobian_flags(self):
        K = self.s_values.size
        qg = self._grid(self.q)                      # (K, *u_shape, n)
        n = self.prob.dim
        dq_ds = self.prob.grad_p_batch(
            self.q.reshape(-1, n), self.p.reshape(-1, n)).reshape(self.q.shape)
        dq_du = self._u_derivatives(qg)
        cols = [self._grid(dq_ds)] + dq_du
        J = np.stack([c.reshape(K, -1, n) for c in cols], axis=-1)   # (K, M, n, n)
        det = np.linalg.det(J)
        scale = np.maximum(1.0, np.linalg.norm(J, axis=(2, 3))) ** n
        return np.abs(det) > self.jac_tol * scale

    def phi_residual(self):
        """|Phi| over all valid sheet cells (result: an integral of motion)."""
        n = self.prob.dim
        vals = np.abs(self.prob.phi_batch(self.q.reshape(-1, n), self.p.reshape(-1, n)))
        vals = vals.reshape(self.z.shape)
        return np.where(self.valid, vals, 0.0)

    def brackets(self):
        """Lagrange brackets [u_a, s] and [u_a, u_b] on the lattice.

        s-derivatives use the exact characteristic RHS; u-derivatives use
        central differences across the lattice. Both bracket families are
        constant along each characteristic for exact sheets.
        """
        K = self.s_values.size
        n = self.prob.dim
        m = len(self.strips.u_grids)
        dq_ds = self.prob.grad_p_batch(self.q.reshape(-1, n), self.p.reshape(-1, n))
        dp_ds = -self.prob.grad_q_batch(self.q.reshape(-1, n), self.p.reshape(-1, n))
        dq_ds = self._grid(dq_ds.reshape(self.q.shape))
        dp_ds = self._grid(dp_ds.reshape(self.p.shape))
        qg, pg = self._grid(self.q), self._grid(self.p)
        dq_du = self._u_derivatives(qg)
        dp_du = self._u_derivatives(pg)
        us = np.stack(
            [np.sum(dq_du[a] * dp_ds - dq_ds * dp_du[a], axis=-1) for a in range(m)],
            axis=-1,
        )                                                            # (K, *u_shape, m)
        uu = np.empty(us.shape[:-1] + (m, m))
        for a in range(m):
            for b in range(m):
                uu[..., a, b] = np.sum(dq_du[a] * dp_du[b] - dq_du[b] * dp_du[a], axis=-1)
        return us.reshape(K, -1, m), uu.reshape(K, -1, m, m)

    # ------------------------------------------------------------------ eval
    def _map_batch(self, S, U, B_seed, n_substeps=None):
        """Continuous sheet map (s, u) -> (q, p, z) by strip solve + integration."""
        _, B, res = _strips_newton(self.prob, self.surf, U, B_seed.copy(), 1e-13, 25)
        A = self.surf.a_batch(U)
        Z = self.surf.c_batch(U)
        steps = n_substeps or max(1, int(np.ceil(np.max(np.abs(S), initial=0.0) / self.step)))
        Q, P = A.copy(), B.copy()
        h = S / steps
        for _ in range(steps):
            Q, P, Z = _char_rk4(self.prob, Q, P, Z, h)
        return Q, P, Z, B

    def evaluate_batch(self, targets, tol=1e-10, max_iter=25):
        """Invert q(s, u) = target for a batch of points.

        Returns (values, grads, status) with status 0 = ok,
        1 = out of coverage, 2 = caustic-suspect, 3 = no convergence.
        """
        targets = np.atleast_2d(np.asarray(targets, dtype=float))
        N, n = targets.shape
        m = len(self.strips.u_grids)
        if n != self.prob.dim:
            raise ValueError("target dimension mismatch")

        # nearest valid lattice sample as Newton seed (chunked distance scan)
        K = self.s_values.size
        flat_q = self.q.reshape(-1, n)
        flat_ok = self.valid.reshape(-1)
        q_ok = flat_q[flat_ok]
        idx_ok = np.where(flat_ok)[0]
        seed_idx = np.empty(N, dtype=int)
        for lo in range(0, N, 64):
            hi = min(lo + 64, N)
            d = np.linalg.norm(targets[lo:hi, None, :] - q_ok[None, :, :], axis=2)
            seed_idx[lo:hi] = idx_ok[np.argmin(d, axis=1)]
        k_idx, mflat_idx = np.unravel_index(seed_idx, (K, self.z.shape[1]))
        S = self.s_values[k_idx].astype(float).copy()
        U = self.strips.U[mflat_idx].copy()
        B = self.strips.B[mflat_idx].copy()

        s_lo = float(self.s_values.min()) - self.step
        s_hi = float(self.s_values.max()) + self.step
        u_bounds = [(g.min() - (g[1] - g[0] if g.size > 1 else 1.0),
                     g.max() + (g[1] - g[0] if g.size > 1 else 1.0))
                    for g in self.strips.u_grids]

        status = np.full(N, 3, dtype=int)
        vals = np.full(N, np.nan)
        grads = np.full((N, n), np.nan)
        n_sub = max(1, int(np.ceil(max(abs(s_lo), abs(s_hi)) / self.step)))

        du = [max(1e-6, 1e-6 * (g.max() - g.min() + 1.0)) for g in self.strips.u_grids]
        for _ in range(max_iter):
            Q, P, Z, B = self._map_batch(S, U, B, n_sub)
            R = Q - targets
            rn = np.linalg.norm(R, axis=1)
            conv = rn <= tol * (1.0 + np.linalg.norm(targets, axis=1))
            if np.all(conv):
                break
            # Jacobian columns: exact s-column, finite-difference u-columns
            J = np.empty((N, n, n))
            J[:, :, 0] = self.prob.grad_p_batch(Q, P)
            for a in range(m):
                Up = U.copy(); Um = U.copy()
                Up[:, a] += du[a]; Um[:, a] -= du[a]
                Qp, _, _, _ = self._map_batch(S, Up, B, n_sub)
                Qm, _, _, _ = self._map_batch(S, Um, B, n_sub)
                J[:, :, 1 + a] = (Qp - Qm) / (2.0 * du[a])
            try:
                delta = np.linalg.solve(J, -R[..., None])[..., 0]
            except np.linalg.LinAlgError:
                delta = np.stack([np.linalg.lstsq(J[i], -R[i], rcond=None)[0] for i in range(N)])
            upd = ~conv
            S[upd] = np.clip(S[upd] + delta[upd, 0], s_lo, s_hi)
            for a in range(m):
                U[upd, a] = np.clip(U[upd, a] + delta[upd, 1 + a], *u_bounds[a])

        Q, P, Z, B = self._map_batch(S, U, B, n_sub)
        R = np.linalg.norm(Q - targets, axis=1)
        conv = R <= 10 * tol * (1.0 + np.linalg.norm(targets, axis=1))
        inside = (S >= s_lo + 0.5 * self.step) & (S <= s_hi - 0.5 * self.step)
        for a, (blo, bhi) in enumerate(u_bounds):
            ga = self.strips.u_grids[a]
            pad = 0.5 * (ga[1] - ga[0]) if ga.size > 1 else 0.0
            inside &= (U[:, a] >= blo + pad) & (U[:, a] <= bhi - pad)
        J0 = np.empty((N, n, n))
        J0[:, :, 0] = self.prob.grad_p_batch(Q, P)
        for a in range(m):
            Up = U.copy(); Um = U.copy()
            Up[:, a] += du[a]; Um[:, a] -= du[a]
            Qp, _, _, _ = self._map_batch(S, Up, B, n_sub)
            Qm, _, _, _ = self._map_batch(S, Um, B, n_sub)
            J0[:, :, 1 + a] = (Qp - Qm) / (2.0 * du[a])
        det = np.abs(np.linalg.det(J0))
        scale = np.maximum(1.0, np.linalg.norm(J0, axis=(1, 2))) ** n
        caustic = det < self.jac_tol * scale

        okm = conv & inside & ~caustic
        status[okm] = 0
        status[conv & ~inside] = 1
        status[conv & inside & caustic] = 2
        vals[conv] = Z[conv]
        grads[conv] = P[conv]
        return vals, grads, status


def trace_characteristics(prob, surf, strips, s_range, step=0.01, jac_tol=1e-8):
    """Integrate the characteristic congruence from the solved strips.

    ``s_range`` is (s_min, s_max) containing 0 (a bare scalar means
    (0, s_max)). Cells whose q leaves the problem domain are flagged
    invalid but tracing continues for the rest of the lattice.
    """
    if np.isscalar(s_range):
        s_range = (0.0, float(s_range))
    s_min, s_max = float(s_range[0]), float(s_range[1])
    if s_min > 0.0 or s_max < 0.0:
        raise ValueError("s_range must contain 0 (strips launch at s = 0)")

    def march(sign, s_end):
        out_q, out_p, out_z, out_v, out_s = [], [], [], [], []
        if sign * s_end <= 0.0:
            return out_s, out_q, out_p, out_z, out_v
        Ksteps = max(1, int(np.round(abs(s_end) / step)))
        h = s_end / Ksteps
        Q, P, Z = strips.A.copy(), strips.B.copy(), strips.C.copy()
        V = np.ones(Q.shape[0], dtype=bool)
        for k in range(Ksteps):
            Q, P, Z = _char_rk4(prob, Q, P, Z, h)
            with np.errstate(invalid="ignore"):
                fin = np.all(np.isfinite(Q), axis=1)
                inb = fin.copy()
                inb[fin] = (
                    np.all(Q[fin] >= prob.domain.lower, axis=1)
                    & np.all(Q[fin] <= prob.domain.upper, axis=1)
                )
            V = V & inb
            out_s.append((k + 1) * h)
            out_q.append(Q.copy()); out_p.append(P.copy())
            out_z.append(Z.copy()); out_v.append(V.copy())
        return out_s, out_q, out_p, out_z, out_v

    bs, bq, bp, bz, bv = march(-1.0, s_min)
    fs, fq, fp, fz, fv = march(+1.0, s_max)
    ones = np.ones(strips.A.shape[0], dtype=bool)
    s_values = np.array(list(reversed(bs)) + [0.0] + fs)
    q = np.stack(list(reversed(bq)) + [strips.A] + fq)
    p = np.stack(list(reversed(bp)) + [strips.B] + fp)
    z = np.stack(list(reversed(bz)) + [strips.C] + fz)
    valid = np.stack(list(reversed(bv)) + [ones] + fv)
    return CharacteristicSheet(prob, surf, strips, s_values, q, p, z, valid, step, jac_tol)


def evaluate_solution(sheet, q, tol=1e-10):
    """S(q) from the sheet; single-point wrapper over evaluate_batch.

    Raises OutOfSheet beyond the covered region and CausticSuspected when
    the local (s, u) -> q Jacobian is (near-)singular.
    """
    vals, grads, status = sheet.evaluate_batch(_vec(q, sheet.prob.dim)[None, :], tol=tol)
    if status[0] == 1:
        raise OutOfSheet(f"point {q} outside the sheet coverage")
    if status[0] == 2:
        raise CausticSuspected(f"near-singular sheet Jacobian at {q}")
    if status[0] != 0:
        raise OutOfSheet(f"sheet inversion did not converge at {q}")
    return float(vals[0])


def solution_gradient(sheet, q, tol=1e-10):
    """grad S(q) = p at the inverted sheet point."""
    vals, grads, status = sheet.evaluate_batch(_vec(q, sheet.prob.dim)[None, :], tol=tol)
    if status[0] != 0:
        raise OutOfSheet(f"no sheet coverage at {q}")
    return grads[0]


# ---------------------------------------------------------------------------
# bundled problems

def eikonal_problem(dim=2, domain=None):
    """Phi = (|p|^2 - 1)/2: S is the signed distance field of geometric optics."""
    return PdeProblem(
        dim,
        phi=lambda Q, P: 0.5 * (np.sum(P * P, axis=-1) - 1.0),
        domain=domain,
        grad_q=lambda Q, P: np.zeros_like(Q),
        grad_p=lambda Q, P: P,
        vectorized=True,
        name="eikonal",
    )


def free_particle_hj_problem(domain=None):
    """Phi = p_2 + p_1^2/2 on coordinates (x, t): the free-particle HJ equation."""

    def phi(Q, P):
        return P[..., 1] + 0.5 * P[..., 0] ** 2

    def grad_p(Q, P):
        return np.stack([P[..., 0], np.ones_like(P[..., 1])], axis=-1)

    return PdeProblem(
        2, phi, domain=domain,
        grad_q=lambda Q, P: np.zeros_like(Q),
        grad_p=grad_p,
        vectorized=True,
        name="free_particle_hj",
    )


def line_surface(c=None, axis_value=0.0):
    """V = {q2 = axis_value} parametrized by u, with values c(u) (default 0)."""
    cf = c if c is not None else (lambda U: np.zeros(U.shape[0]))
    return InitialSurface(
        1,
        a=lambda U: np.stack([U[:, 0], np.full(U.shape[0], axis_value)], axis=-1),
        c=cf,
        vectorized=True,
        name="line",
    )
