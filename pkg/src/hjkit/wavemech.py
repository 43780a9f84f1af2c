"""Wave-front kinematics, grid wave mechanics, and pilot-wave quantities.

The bridge from conservative Hamilton-Jacobi families S = S*(q) - E t to
matter waves: front speed u = E/|grad S*|, the frequency/wavelength
relations nu = E/h and lambda = h/p (so u = lambda nu identically), a
norm-preserving split-step Fourier propagator for the Schrodinger
equation on periodic 1D/2D grids, polar decomposition psi = R exp(iS/hbar)
with spatially unwrapped phase, the quantum potential
Q = -(hbar^2/2m) lap(R)/R, guidance trajectories dq/dt = grad S / m, and
finite-difference residuals of the phase (quantum Hamilton-Jacobi) and
continuity equations.

Natural units hbar = m = 1 are the defaults; both are explicit grid
parameters.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from .errors import NodeEncounter, NodeOnPath, StationaryFront, UnstableStep
from .varcore import _vec
from . import _fd


class ConservativeHJ:
    """Separated solution S(q, t) = S*(q) - E t of a conservative system."""

    def __init__(self, Sstar, E, grad=None):
        self._Sstar = Sstar
        self.E = float(E)
        self._grad = grad

    def Sstar(self, q):
        return float(self._Sstar(_vec(q)))

    def grad(self, q):
        q = _vec(q)
        if self._grad is not None:
            return _vec(self._grad(q), q.size)
        return _fd.grad(self._Sstar, q)

    def value(self, q, t):
        return self.Sstar(q) - self.E * float(t)


def wavefront_speed(chj, q, grad_floor=1e-12):
    """Speed E/|grad S*| of the constant-S front through q."""
    p = float(np.linalg.norm(chj.grad(q)))
    if p <= grad_floor:
        raise StationaryFront(f"|grad S*| vanishes at q={q}")
    return chj.E / p


class PhaseWave:
    """de Broglie kinematics of a monochromatic matter wave."""

    def __init__(self, u, nu, lam, h):
        self.u = float(u)
        self.nu = float(nu)
        self.lam = float(lam)
        self.h = float(h)
        self.hbar = self.h / (2.0 * np.pi)


def debroglie(E, p, h):
    """Frequency, wavelength, and front speed for energy E and momentum p.

    nu = E/h and lambda = h/p; u is constructed as lambda * nu so the
    dispersion identity holds exactly in floating point.
    """
    if p <= 0:
        raise ValueError("momentum magnitude must be positive")
    if h <= 0:
        raise ValueError("action quantum must be positive")
    nu = E / h
    lam = h / p
    return PhaseWave(lam * nu, nu, lam, h)


# ---------------------------------------------------------------------------
# grids

class WaveGrid:
    """Complex wave samples on a uniform periodic grid (1D or 2D).

    ``psi`` has shape (N,) or (Nx, Ny); ``dx`` is the common spacing.
    ``V`` holds potential samples of the same shape (zero if omitted).
    """

    def __init__(self, psi, dx, hbar=1.0, m=1.0, V=None, t=0.0, boundary="periodic"):
        self.psi = np.asarray(psi, dtype=complex)
        if self.psi.ndim not in (1, 2):
            raise ValueError("only 1D and 2D grids are supported")
        self.dx = float(dx)
        self.hbar = float(hbar)
        self.m = float(m)
        self.V = np.zeros(self.psi.shape) if V is None else np.asarray(V, dtype=float)
        if self.V.shape != self.psi.shape:
            raise ValueError("potential shape must match psi")
        self.t = float(t)
        if boundary != "periodic":
            raise ValueError("only periodic grids are implemented")
        self.boundary = boundary

    @property
    def ndim(self):
        return self.psi.ndim

    def axes(self, origin=0.0):
        """Coordinate arrays per axis (uniform, starting at origin)."""
        if np.ndim(origin) == 0:
            origin = [origin] * self.ndim
        return [origin[a] + self.dx * np.arange(self.psi.shape[a]) for a in range(self.ndim)]

    def norm(self):
        return float(np.sum(np.abs(self.psi) ** 2) * self.dx**self.ndim)

    def copy(self):
        return WaveGrid(self.psi.copy(), self.dx, self.hbar, self.m, self.V.copy(), self.t)


def gaussian_packet_grid(n, dx, sigma0, q0=0.0, k0=0.0, hbar=1.0, m=1.0, V=None,
                         origin=None):
    """Normalized 1D Gaussian |psi|^2 of standard deviation sigma0."""
    origin = -0.5 * n * dx if origin is None else origin
    x = origin + dx * np.arange(n)
    psi = np.exp(-((x - q0) ** 2) / (4.0 * sigma0**2) + 1j * k0 * x)
    psi /= np.sqrt(np.sum(np.abs(psi) ** 2) * dx)
    Varr = None if V is None else np.asarray(V(x), dtype=float)
    return WaveGrid(psi, dx, hbar, m, Varr), x


def schrodinger_step(grid, dt):
    """One norm-preserving split-step Fourier step.

    Strang splitting exp(-iV dt/2h) F^-1 exp(-ih k^2 dt/2m) F
    exp(-iV dt/2h): unitary up to FFT rounding, second order in dt for
    smooth potentials, exact for V = 0. dt must resolve the fastest
    potential phase (|V| dt < pi hbar, checked).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    vmax = float(np.max(np.abs(grid.V)))
    if vmax * dt >= np.pi * grid.hbar:
        raise UnstableStep(
            f"potential phase per step {vmax * dt / grid.hbar:.3g} exceeds pi")
    half_v = np.exp(-0.5j * grid.V * dt / grid.hbar)
    psi = half_v * grid.psi
    ks = [2.0 * np.pi * np.fft.fftfreq(nn, d=grid.dx) for nn in grid.psi.shape]
    if grid.ndim == 1:
        k2 = ks[0] ** 2
    else:
        k2 = ks[0][:, None] ** 2 + ks[1][None, :] ** 2
    psi = np.fft.ifftn(np.exp(-0.5j * grid.hbar * k2 * dt / grid.m) * np.fft.fftn(psi))
    psi = half_v * psi
    return WaveGrid(psi, grid.dx, grid.hbar, grid.m, grid.V, grid.t + dt)


def propagate(grid, dt, n_steps, keep_every=None):
    """March n_steps; returns the final grid (and snapshots if requested)."""
    snaps = []
    g = grid
    for i in range(int(n_steps)):
        g = schrodinger_step(g, dt)
        if keep_every and (i + 1) % keep_every == 0:
            snaps.append(g)
    return (g, snaps) if keep_every else g


# ---------------------------------------------------------------------------
# polar decomposition

def _unwrap_bfs(phase, mask):
    """Region-by-region phase unwrap by breadth-first sweep.

    Each connected unmasked region is unwrapped from its own anchor;
    masked cells stay NaN.
    """
    shape = phase.shape
    out = np.full(shape, np.nan)
    visited = mask.copy()    # masked cells are never visited and stay NaN
    if phase.ndim == 1:
        neighbors = lambda idx: [(idx[0] - 1,), (idx[0] + 1,)]  # noqa: E731
    else:
        neighbors = lambda idx: [(idx[0] - 1, idx[1]), (idx[0] + 1, idx[1]),  # noqa: E731
                                 (idx[0], idx[1] - 1), (idx[0], idx[1] + 1)]
    it = np.ndindex(*shape)
    for anchor in it:
        if visited[anchor]:
            continue
        out[anchor] = phase[anchor]
        visited[anchor] = True
        queue = deque([anchor])
        while queue:
            cur = queue.popleft()
            for nb in neighbors(cur):
                if any(c < 0 or c >= s for c, s in zip(nb, shape)):
                    continue
                if visited[nb]:
                    continue
                d = phase[nb] - out[cur]
                out[nb] = out[cur] + np.angle(np.exp(1j * d))
                visited[nb] = True
                queue.append(nb)
    return out


def polar_decompose(grid, node_tol=1e-12, allow_nodes=False):
    """Split psi into amplitude R >= 0 and continuous action phase S.

    S = hbar * (unwrapped phase), swept row-major from the grid origin
    with 2 pi jump correction. A node (|psi| <= node_tol relative to the
    peak) on the sweep raises NodeOnPath unless ``allow_nodes``, in which
    case nodes become NaN and each surviving region is unwrapped
    independently.
    """
    R = np.abs(grid.psi)
    peak = float(R.max())
    mask = R <= node_tol * peak
    phase = np.angle(grid.psi)
    if mask.any():
        if not allow_nodes:
            where = tuple(int(i[0]) for i in np.nonzero(mask))
            raise NodeOnPath(f"node at grid index {where}", where=where)
        S = grid.hbar * _unwrap_bfs(phase, mask)
        return R, S
    if grid.ndim == 1:
        S = grid.hbar * np.unwrap(phase)
    else:
        col0 = np.unwrap(phase[:, 0])
        rows = np.unwrap(phase, axis=1)
        S = grid.hbar * (rows - rows[:, 0][:, None] + col0[:, None])
    return R, S


def reconstruct(R, S, grid):
    """psi from a polar pair on the same grid (inverse of polar_decompose)."""
    return R * np.exp(1j * S / grid.hbar)


def quantum_potential(R, dx, hbar=1.0, m=1.0, node_tol=1e-12, periodic=True):
    """Q = -(hbar^2 / 2m) lap(R)/R by second-order central differences.

    Node cells (R below node_tol relative to the peak) are masked NaN.
    Non-periodic boundary cells are flagged NaN as well.
    """
    R = np.asarray(R, dtype=float)
    lap = np.zeros_like(R)
    for ax in range(R.ndim):
        lap += (np.roll(R, -1, axis=ax) - 2.0 * R + np.roll(R, 1, axis=ax)) / dx**2
    with np.errstate(divide="ignore", invalid="ignore"):
        Q = -(hbar**2) / (2.0 * m) * lap / R
    Q[R <= node_tol * float(R.max())] = np.nan
    if not periodic:
        for ax in range(R.ndim):
            sl = [slice(None)] * R.ndim
            sl[ax] = 0
            Q[tuple(sl)] = np.nan
            sl[ax] = -1
            Q[tuple(sl)] = np.nan
    return Q


# ---------------------------------------------------------------------------
# guidance

def _velocity_field(grid, node_tol=1e-9):
    """Guidance velocity grad S / m on the grid, NaN near nodes.

    grad S comes from central differences of the unwrapped phase (exact
    for linear phases, second order otherwise).
    """
    if grid.ndim != 1:
        raise NotImplementedError("guidance interpolation is 1D here")
    _, S = polar_decompose(grid, node_tol=node_tol, allow_nodes=True)
    return np.gradient(S, grid.dx, edge_order=2) / grid.m


def bohm_trajectory(psi_provider, q0, t_range, dt, origin, node_tol=1e-9):
    """Integrate the guidance law dq/dt = grad S / m through grid snapshots.

    ``psi_provider(t)`` must return the grid at any needed time (the RK4
    stages query t, t + dt/2, and t + dt); grad S is interpolated
    linearly from the polar decomposition of each snapshot. Returns
    (times, positions). Hitting a wave-function node raises
    NodeEncounter.
    """
    t0, t1 = float(t_range[0]), float(t_range[1])
    n = max(1, int(np.round((t1 - t0) / dt)))
    h = (t1 - t0) / n
    field_cache = {}

    def velocity(grid, q):
        key = (id(grid), grid.t)
        if key not in field_cache:
            field_cache[key] = (_velocity_field(grid, node_tol), grid)
        v = field_cache[key][0]
        x0 = origin if np.ndim(origin) == 0 else origin[0]
        qx = float(q)
        i = int(np.clip(np.floor((qx - x0) / grid.dx), 0, v.size - 2))
        w = (qx - (x0 + i * grid.dx)) / grid.dx
        vi, vj = v[i], v[i + 1]
        if not (np.isfinite(vi) and np.isfinite(vj)):
            raise NodeEncounter(f"node near q={qx:g} at t={grid.t:g}", t=grid.t, q=qx)
        return (1.0 - w) * vi + w * vj

    ts = [t0]
    qs = [float(np.atleast_1d(q0)[0])]
    q = qs[0]
    for i in range(n):
        t = t0 + i * h
        g0 = psi_provider(t)
        gh = psi_provider(t + 0.5 * h)
        g1 = psi_provider(t + h)

        k1 = velocity(g0, q)
        k2 = velocity(gh, q + 0.5 * h * k1)
        k3 = velocity(gh, q + 0.5 * h * k2)
        k4 = velocity(g1, q + h * k3)
        q = q + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        ts.append(t0 + (i + 1) * h)
        qs.append(q)
    return np.array(ts), np.array(qs)


# ---------------------------------------------------------------------------
# residual diagnostics

def _align_phases(S_list, anchor):
    """Remove 2 pi ambiguities between successive unwrapped phase grids.

    ``anchor`` must index a cell finite in every snapshot (e.g. the
    density peak); the step between snapshots must keep the true anchor
    phase change below pi.
    """
    out = [S_list[0]]
    twopi = 2.0 * np.pi
    for S in S_list[1:]:
        prev = out[-1]
        jump = np.round((prev[anchor] - S[anchor]) / twopi)
        out.append(S + twopi * jump)
    return out


def current_grad_S(grid, node_tol=1e-9):
    """grad S per axis via hbar Im(conj(psi) grad psi)/rho.

    Gauge-invariant form of the phase gradient: no unwrapping, exact
    periodic wrap-around for periodic psi. Cells with rho below
    node_tol * peak are NaN.
    """
    psi = grid.psi
    rho = np.abs(psi) ** 2
    peak = float(rho.max())
    small = rho <= node_tol * peak
    out = []
    for ax in range(psi.ndim):
        dpsi = (np.roll(psi, -1, axis=ax) - np.roll(psi, 1, axis=ax)) / (2.0 * grid.dx)
        with np.errstate(divide="ignore", invalid="ignore"):
            g = grid.hbar * np.imag(np.conj(psi) * dpsi) / rho
        g[small] = np.nan
        out.append(g)
    return out


def pilot_wave_residuals(grids, node_tol=1e-9):
    """Phase and continuity residuals from three consecutive grid snapshots.

    Returns (qhj, continuity), each an array over the middle snapshot with
    NaN at masked (node-affected) cells:

        qhj         = S_t + |grad S|^2 / 2m + Q + V
        continuity  = rho_t + div(rho grad S) / m

    S_t comes from unwrapped phases aligned at the density peak across
    the snapshots (the step must keep |E| dt < pi hbar); grad S uses
    central differences of the unwrapped phase. Both residuals are
    second-order small in (dx, dt) for propagator output.
    """
    if len(grids) != 3:
        raise ValueError("residuals need exactly three snapshots (t-dt, t, t+dt)")
    g0, g1, g2 = grids
    dt = g1.t - g0.t
    if abs((g2.t - g1.t) - dt) > 1e-12 * (1.0 + abs(dt)):
        raise ValueError("snapshots must be uniformly spaced in t")
    dx = g1.dx
    hbar, m = g1.hbar, g1.m

    Rs, Ss = [], []
    for g in grids:
        R, S = polar_decompose(g, node_tol=node_tol, allow_nodes=True)
        Rs.append(R)
        Ss.append(S / hbar)
    anchor = np.unravel_index(int(np.argmax(Rs[1])), Rs[1].shape)
    Ss = _align_phases(Ss, anchor)
    Ss = [S * hbar for S in Ss]

    S_t = (Ss[2] - Ss[0]) / (2.0 * dt)
    rho = [R * R for R in Rs]
    rho_t = (rho[2] - rho[0]) / (2.0 * dt)

    with np.errstate(invalid="ignore"):
        gS = [np.gradient(Ss[1], dx, axis=a, edge_order=2) for a in range(Ss[1].ndim)]
        grad_sq = sum(gg * gg for gg in gS)
        Q = quantum_potential(Rs[1], dx, hbar, m, node_tol=node_tol)
        qhj = S_t + grad_sq / (2.0 * m) + Q + g1.V

        flux = [rho[1] * gg / m for gg in gS]
        div = sum(np.gradient(flux[a], dx, axis=a, edge_order=2)
                  for a in range(len(flux)))
        continuity = rho_t + div

    bad = ~np.isfinite(Ss[0]) | ~np.isfinite(Ss[1]) | ~np.isfinite(Ss[2]) | ~np.isfinite(Q)
    for gg in gS:
        bad |= ~np.isfinite(gg)
    # spatial stencils smear node damage onto neighbors
    grown = bad.copy()
    for ax in range(bad.ndim):
        grown |= np.roll(bad, 1, axis=ax) | np.roll(bad, -1, axis=ax)
    qhj = np.where(grown, np.nan, qhj)
    continuity = np.where(grown, np.nan, continuity)
    return qhj, continuity


def snapshot_provider(grid0, dt_snap):
    """Callable t -> grid backed by incremental propagation with caching.

    Times must land on multiples of dt_snap from grid0.t (the guidance
    integrator's stage times do, when dt_snap = dt/2).
    """
    cache = {0: grid0}
    state = {"last": 0}

    def provider(t):
        k = int(round((float(t) - grid0.t) / dt_snap))
        if k < 0:
            raise ValueError("provider cannot rewind before the initial grid")
        if abs(grid0.t + k * dt_snap - float(t)) > 1e-9 * (1.0 + abs(t)):
            raise ValueError(f"t={t} is off the snapshot lattice (dt_snap={dt_snap})")
        while state["last"] < k:
            g = cache[state["last"]]
            cache[state["last"] + 1] = schrodinger_step(g, dt_snap)
            state["last"] += 1
        return cache[k]

    return provider


class ClassicalLimitReport:
    """Guidance-vs-classical trajectory comparison."""

    def __init__(self, per_seed_max, mean_deviation, seeds):
        self.per_seed_max = np.asarray(per_seed_max, dtype=float)
        self.mean_deviation = float(mean_deviation)
        self.seeds = np.asarray(seeds, dtype=float)

    @property
    def max_deviation(self):
        return float(np.max(self.per_seed_max)) if self.per_seed_max.size else 0.0


def classical_limit_check(psi_provider, classical_curves, dt, origin, weights=None):
    """Compare guidance trajectories with classical extremal curves.

    Each classical ExtremalCurve supplies the seed (its initial q) and the
    comparison positions; the guidance trajectory is integrated through
    the provider's grids over the same span. The report carries per-seed
    maximum deviations and the deviation of the (weighted) ensemble-mean
    trajectory from the classical ensemble mean.
    """
    per_seed = []
    bohm_all = []
    classical_all = []
    seeds = []
    for curve in classical_curves:
        q0 = float(curve.q[0, 0])
        seeds.append(q0)
        ts, qs = bohm_trajectory(psi_provider, q0, (curve.t[0], curve.t[-1]), dt, origin)
        q_cl = np.interp(ts, curve.t, curve.q[:, 0])
        per_seed.append(np.max(np.abs(qs - q_cl)))
        bohm_all.append(qs)
        classical_all.append(q_cl)
    bohm_all = np.asarray(bohm_all)
    classical_all = np.asarray(classical_all)
    w = np.ones(len(seeds)) if weights is None else np.asarray(weights, dtype=float)
    w = w / np.sum(w)
    mean_dev = float(np.max(np.abs(w @ bohm_all - w @ classical_all)))
    return ClassicalLimitReport(per_seed, mean_dev, seeds)
