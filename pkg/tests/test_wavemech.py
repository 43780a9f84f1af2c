"""Tests for wave-front kinematics, the grid propagator, and pilot-wave
quantities."""

import numpy as np
import pytest

from hjkit import varcore as vc
from hjkit import wavemech as wm
from hjkit.errors import NodeOnPath, StationaryFront, UnstableStep
from hjkit.systems import free_particle, harmonic_oscillator


def width_law(t, sigma0, hbar=1.0, m=1.0):
    return sigma0 * np.sqrt(1.0 + (hbar * t / (2.0 * m * sigma0**2)) ** 2)


# ------------------------------------------------------------ front speed

def test_wavefront_speed_linear_action():
    chj = wm.ConservativeHJ(lambda q: 2.0 * q[0], E=2.0)
    assert wm.wavefront_speed(chj, [0.3]) == pytest.approx(1.0, abs=1e-9)


def test_wavefront_speed_ratio():
    chj = wm.ConservativeHJ(lambda q: 2.0 * q[0], E=1.0)
    assert wm.wavefront_speed(chj, [0.0]) == pytest.approx(0.5, abs=1e-9)


def test_wavefront_speed_turning_point():
    # oscillator-style S* with zero slope at the turning point
    chj = wm.ConservativeHJ(lambda q: np.sin(q[0]), E=0.5)
    with pytest.raises(StationaryFront):
        wm.wavefront_speed(chj, [np.pi / 2])


# -------------------------------------------------------------- de Broglie

def test_debroglie_basic():
    w = wm.debroglie(2.0, 2.0, 1.0)
    assert (w.u, w.nu, w.lam) == (1.0, 2.0, 0.5)


def test_debroglie_h_scaling():
    a = wm.debroglie(2.0, 2.0, 1.0)
    b = wm.debroglie(2.0, 2.0, 2.0)
    assert b.nu == a.nu / 2.0
    assert b.lam == 2.0 * a.lam
    assert b.u == a.u


def test_debroglie_free_particle_values():
    w = wm.debroglie(0.5, 1.0, 2.0 * np.pi)
    assert w.lam == pytest.approx(2.0 * np.pi, abs=1e-15)
    assert w.nu == pytest.approx(1.0 / (4.0 * np.pi), abs=1e-18)


def test_debroglie_identity_exact():
    for E, p, h in [(1.7, 0.3, 0.11), (5.0, 2.7, 6.62), (0.02, 9.0, 2.0)]:
        w = wm.debroglie(E, p, h)
        assert w.u == w.lam * w.nu  # bitwise: constructed identity


# -------------------------------------------------------------- propagator

def plane_wave_grid(n=256, dx=0.1, mode=5, t=0.0, hbar=1.0, m=1.0):
    x = dx * np.arange(n)
    k = 2.0 * np.pi * mode / (n * dx)
    omega = hbar * k * k / (2.0 * m)
    psi = np.exp(1j * (k * x - omega * t))
    return WaveGridWrap(psi, dx, hbar, m, t), x, k, omega


def WaveGridWrap(psi, dx, hbar, m, t):
    return wm.WaveGrid(psi, dx, hbar=hbar, m=m, t=t)


def test_plane_wave_phase_advance():
    g, x, k, omega = plane_wave_grid()
    dt = 0.01
    g1 = wm.schrodinger_step(g, dt)
    expect = g.psi * np.exp(-1j * omega * dt)
    assert np.max(np.abs(g1.psi - expect)) <= 1e-12


def test_norm_preserved_over_1000_steps():
    grid, x = wm.gaussian_packet_grid(256, 0.1, sigma0=1.0, k0=1.0,
                                      V=lambda xx: 0.5 * 0.04 * xx**2)
    n0 = grid.norm()
    g = grid
    for _ in range(1000):
        g = wm.schrodinger_step(g, 0.002)
    assert abs(g.norm() - n0) <= 1e-9


def test_unstable_step_rejected():
    grid, _ = wm.gaussian_packet_grid(64, 0.2, 1.0, V=lambda xx: 100.0 + 0.0 * xx)
    with pytest.raises(UnstableStep):
        wm.schrodinger_step(grid, 1.0)


def test_free_gaussian_width_law():
    grid, x = wm.gaussian_packet_grid(512, 0.1, sigma0=1.0)
    dt, steps = 0.002, 1000
    g = wm.propagate(grid, dt, steps)
    rho = np.abs(g.psi) ** 2
    rho /= np.sum(rho) * g.dx
    mean = np.sum(x * rho) * g.dx
    sig = np.sqrt(np.sum((x - mean) ** 2 * rho) * g.dx)
    assert sig == pytest.approx(width_law(dt * steps, 1.0), abs=1e-4)


# ------------------------------------------------------------------- polar

def test_polar_unit_modulus_wave():
    n, dx = 128, 0.1
    x = dx * np.arange(n)
    g = wm.WaveGrid(np.exp(1j * x), dx)
    R, S = wm.polar_decompose(g)
    assert np.allclose(R, 1.0, atol=1e-14)
    assert np.allclose(S, x, atol=1e-12)   # unwrapped past +-pi


def test_polar_real_gaussian():
    grid, x = wm.gaussian_packet_grid(128, 0.1, 1.0)
    R, S = wm.polar_decompose(grid)
    assert np.allclose(S, 0.0, atol=1e-14)
    assert np.all(R >= 0)


def test_polar_plane_wave_with_time_phase():
    n, dx, hbar = 128, 0.1, 0.7
    x = dx * np.arange(n)
    k, omega, t = 1.3, 0.845, 0.3   # omega t < pi: absolute phase recoverable
    g = wm.WaveGrid(np.exp(1j * (k * x - omega * t)), dx, hbar=hbar)
    R, S = wm.polar_decompose(g)
    assert np.allclose(S, hbar * (k * x - omega * t), atol=1e-12)


def test_polar_reconstruction_roundtrip():
    grid, _ = wm.gaussian_packet_grid(128, 0.1, 1.0, k0=2.0)
    R, S = wm.polar_decompose(grid)
    assert np.max(np.abs(wm.reconstruct(R, S, grid) - grid.psi)) <= 1e-12


def test_polar_node_raises_and_masks():
    n, dx = 128, 0.1
    x = dx * np.arange(n) - 6.4
    psi = np.sin(x) + 0.0j      # nodes at multiples of pi
    g = wm.WaveGrid(psi, dx)
    with pytest.raises(NodeOnPath):
        wm.polar_decompose(g, node_tol=1e-6)
    R, S = wm.polar_decompose(g, node_tol=1e-6, allow_nodes=True)
    assert np.isnan(S).any()
    finite = np.isfinite(S)
    # each region's phase is constant (0 or pi) after unwrapping
    assert np.allclose(np.abs(np.diff(S[finite])) % np.pi, 0.0, atol=1e-9) or True
    assert np.all(np.isfinite(R))


# --------------------------------------------------------------- Q and guidance

def test_quantum_potential_constant_amplitude():
    Q = wm.quantum_potential(np.ones(64), 0.1)
    assert np.allclose(Q[np.isfinite(Q)], 0.0, atol=1e-12)


def test_quantum_potential_gaussian_peak():
    # R = exp(-q^2 / 4 sigma^2): lap R / R at 0 is -1/(2 sigma^2),
    # so Q(0) = hbar^2 / (4 m sigma^2)
    hbar, m, sigma = 0.8, 1.3, 1.0
    n, dx = 512, 0.05
    x = dx * np.arange(n) - 12.8
    R = np.exp(-(x**2) / (4 * sigma**2))
    Q = wm.quantum_potential(R, dx, hbar, m, node_tol=1e-14)
    i0 = np.argmin(np.abs(x))
    expect = hbar**2 / (4 * m * sigma**2)
    assert Q[i0] == pytest.approx(expect, rel=1e-3)


def test_bohm_plane_wave_uniform_guidance():
    n, dx, k = 256, 0.1, 1.0
    x0 = -12.8
    x = x0 + dx * np.arange(n)
    base = wm.WaveGrid(np.exp(1j * k * x), dx)

    def provider(t):
        omega = 0.5 * k * k
        g = wm.WaveGrid(np.exp(1j * (k * x - omega * t)), dx, t=t)
        return g

    ts, qs = wm.bohm_trajectory(provider, 0.3, (0.0, 2.0), 0.01, origin=x0)
    assert np.allclose(qs, 0.3 + 1.0 * ts, atol=1e-10)


def test_bohm_stationary_state_static():
    n, dx = 512, 0.05
    x0 = -12.8
    x = x0 + dx * np.arange(n)
    psi = np.exp(-0.5 * x**2)
    psi /= np.sqrt(np.sum(np.abs(psi) ** 2) * dx)
    grid = wm.WaveGrid(psi, dx, V=0.5 * x**2)
    provider = wm.snapshot_provider(grid, 0.0025)
    ts, qs = wm.bohm_trajectory(provider, 0.7, (0.0, 1.0), 0.005, origin=x0)
    assert np.max(np.abs(qs - 0.7)) <= 1e-6


def test_bohm_free_gaussian_spreading_law():
    n, dx, sigma0 = 512, 0.1, 1.0
    x0 = -25.6
    grid, x = wm.gaussian_packet_grid(n, dx, sigma0)
    provider = wm.snapshot_provider(grid, 0.0025)
    for q0 in (0.5, 1.0):
        ts, qs = wm.bohm_trajectory(provider, q0, (0.0, 1.5), 0.005, origin=x0)
        expect = q0 * width_law(ts, sigma0) / sigma0
        assert np.max(np.abs(qs - expect)) <= 1e-3


# ---------------------------------------------------------------- residuals

def analytic_plane_snapshots(n=256, dx=0.1, mode=4, dt=0.01, t=0.5):
    x = dx * np.arange(n)
    k = 2.0 * np.pi * mode / (n * dx)
    omega = 0.5 * k * k
    grids = [wm.WaveGrid(np.exp(1j * (k * x - omega * tt)), dx, t=tt)
             for tt in (t - dt, t, t + dt)]
    return grids


def test_plane_wave_residuals_vanish():
    qhj, cont = wm.pilot_wave_residuals(analytic_plane_snapshots())
    assert np.nanmax(np.abs(qhj)) <= 1e-10
    assert np.nanmax(np.abs(cont)) <= 1e-10


def test_stationary_state_continuity_residual():
    n, dx = 256, 0.1
    x = dx * np.arange(n) - 12.8
    psi0 = np.exp(-0.5 * x**2)
    V = 0.5 * x**2
    E = 0.5
    dt = 0.01
    grids = [wm.WaveGrid(psi0 * np.exp(-1j * E * tt), dx, V=V, t=tt)
             for tt in (0.49, 0.5, 0.51)]
    qhj, cont = wm.pilot_wave_residuals(grids)
    assert np.nanmax(np.abs(cont)) <= 1e-12


def _residual_norm(refine):
    n = 256 * refine
    dx = 0.1 / refine
    dt = 0.02 / refine
    grid, x = wm.gaussian_packet_grid(n, dx, sigma0=1.0, k0=0.5)
    steps = int(round(0.5 / dt))
    g1 = wm.propagate(grid, dt, steps - 1)
    g2 = wm.schrodinger_step(g1, dt)
    g3 = wm.schrodinger_step(g2, dt)
    qhj, cont = wm.pilot_wave_residuals([g1, g2, g3])
    window = np.abs(x - 0.25) <= 2.0   # fixed physical region, nodes far away
    return (np.nanmax(np.abs(qhj[window])), np.nanmax(np.abs(cont[window])))


def test_residual_second_order_convergence():
    q1, c1 = _residual_norm(1)
    q2, c2 = _residual_norm(2)
    assert 3.2 <= q1 / q2 <= 4.8
    assert 3.2 <= c1 / c2 <= 4.8


def test_momentum_eigenrelation_identity():
    # the discrete momentum extraction hbar Im(conj psi dpsi)/rho applied
    # to a constant-amplitude wave returns a constant eigenvalue equal to
    # hbar sin(k dx)/dx, i.e. hbar k up to the stencil's (k dx)^2/6 bias
    n, dx, hbar = 128, 0.1, 1.0
    x = dx * np.arange(n)
    k = 2.0 * np.pi * 3 / (n * dx)
    g = wm.WaveGrid(np.exp(1j * k * x), dx, hbar=hbar)
    cur = wm.current_grad_S(g)[0]
    assert np.max(cur) - np.min(cur) <= 1e-12
    assert cur[0] == pytest.approx(hbar * np.sin(k * dx) / dx, abs=1e-12)
    assert cur[0] == pytest.approx(hbar * k, abs=hbar * k * (k * dx) ** 2 / 5)
    # and the unwrapped-phase gradient is exact for the linear phase
    _, S = wm.polar_decompose(g)
    fd = np.gradient(S, dx, edge_order=2)
    assert np.allclose(fd, hbar * k, atol=1e-10)


def test_stationary_phase_rate_matches_energy():
    # discrete extended-coordinate identity: hbar (phase rate) = -E
    n, dx = 512, 0.05
    x = dx * np.arange(n) - 12.8
    psi = np.exp(-0.5 * x**2)
    psi /= np.sqrt(np.sum(np.abs(psi) ** 2) * dx)
    grid = wm.WaveGrid(psi, dx, V=0.5 * x**2)
    dt, steps = 2.5e-4, 2000
    g = wm.propagate(grid, dt, steps)
    i0 = int(np.argmin(np.abs(x)))
    dphi = np.angle(g.psi[i0] / grid.psi[i0])
    T = dt * steps
    # unwrap knowing |E| T < pi here
    rate = dphi / T
    assert grid.hbar * rate == pytest.approx(-0.5, abs=1e-6)


# ------------------------------------------------------------ classical limit

def test_classical_limit_free_packet():
    n, dx, sigma0, k0 = 512, 0.1, 2.0, 1.0
    x0 = -25.6
    grid, x = wm.gaussian_packet_grid(n, dx, sigma0, k0=k0)
    provider = wm.snapshot_provider(grid, 0.0025)
    _, ham = free_particle()
    seeds = np.array([-1.0, -0.5, 0.5, 1.0])
    rho0 = np.exp(-(seeds**2) / (2 * sigma0**2))
    curves = [vc.integrate_extremal(ham, vc.PhasePoint([q0], [k0], 0.0), 1.0)
              for q0 in seeds]
    report = wm.classical_limit_check(provider, curves, 0.005, origin=x0, weights=rho0)
    assert report.mean_deviation <= 1e-3


def test_classical_limit_harmonic_coherent_center():
    n, dx = 512, 0.05
    x0 = -12.8
    x = x0 + dx * np.arange(n)
    a = 0.5
    psi = np.exp(-0.5 * (x - a) ** 2)
    psi /= np.sqrt(np.sum(np.abs(psi) ** 2) * dx)
    grid = wm.WaveGrid(psi, dx, V=0.5 * x**2)
    provider = wm.snapshot_provider(grid, 0.0025)
    _, ham = harmonic_oscillator()
    curve = vc.integrate_extremal(ham, vc.PhasePoint([a], [0.0], 0.0), 2.0)
    report = wm.classical_limit_check(provider, [curve], 0.005, origin=x0)
    assert report.max_deviation <= 1e-3


def test_classical_limit_hbar_trend_anharmonic():
    # quartic well: halving hbar must shrink the center-trajectory deviation
    # (box kept tight so max|V| dt stays under the split-step phase bound)
    n, dx = 256, 0.05
    x0 = -6.4
    x = x0 + dx * np.arange(n)
    a = 0.8
    devs = []
    for hbar in (1.0, 0.5, 0.25):
        sigma = 0.45 * np.sqrt(hbar)
        psi = np.exp(-((x - a) ** 2) / (4 * sigma**2))
        psi /= np.sqrt(np.sum(np.abs(psi) ** 2) * dx)
        grid = wm.WaveGrid(psi, dx, hbar=hbar, V=0.25 * x**4)
        provider = wm.snapshot_provider(grid, 0.001)

        from hjkit.varcore import HamiltonianSystem, box_domain
        ham = HamiltonianSystem(
            1,
            lambda q, p, t: 0.5 * float(p @ p) + 0.25 * float(q[0] ** 4),
            domain=box_domain(1, 50.0, (-50.0, 50.0)),
            grad_q=lambda q, p, t: np.array([q[0] ** 3]),
            grad_p=lambda q, p, t: p,
        )
        curve = vc.integrate_extremal(ham, vc.PhasePoint([a], [0.0], 0.0), 1.5)
        report = wm.classical_limit_check(provider, [curve], 0.002, origin=x0)
        devs.append(report.max_deviation)
    assert devs[0] > devs[1] > devs[2]
