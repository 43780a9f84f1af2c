"""Central finite-difference helpers.

Step sizes follow the cube-root-of-epsilon rule h = eps^(1/3) * (1 + |x|),
which balances truncation against rounding for C^2 integrands.
"""

import numpy as np

EPS = np.finfo(float).eps
H0 = EPS ** (1.0 / 3.0)      # ~6.1e-6, first derivatives
H0_SECOND = EPS ** 0.25      # ~1.2e-4, second derivatives


def step(x, h0=H0):
    return h0 * (1.0 + np.abs(x))


def grad(f, x, h0=H0):
    """Central-difference gradient of scalar f at vector x."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        h = step(x[i], h0)
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (2.0 * h)
    return g


def partial(f, x, h0=H0):
    """Central-difference derivative of scalar f of a scalar x."""
    h = step(x, h0)
    return (f(x + h) - f(x - h)) / (2.0 * h)


def jacobian(f, x, h0=H0):
    """Central-difference Jacobian of vector f at vector x, shape (m, n)."""
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(f(x), dtype=float)
    J = np.empty((f0.size, x.size))
    for i in range(x.size):
        h = step(x[i], h0)
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        J[:, i] = (np.asarray(f(xp)) - np.asarray(f(xm))) / (2.0 * h)
    return J


def hessian(f, x, h0=H0_SECOND):
    """Central-difference Hessian of scalar f at vector x (symmetrized)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    H = np.empty((n, n))
    hs = np.array([step(x[i], h0) for i in range(n)])
    f0 = f(x)
    for i in range(n):
        xp = x.copy()
        xm = x.copy()
        xp[i] += hs[i]
        xm[i] -= hs[i]
        H[i, i] = (f(xp) - 2.0 * f0 + f(xm)) / hs[i] ** 2
    for i in range(n):
        for j in range(i + 1, n):
            xpp = x.copy()
            xpm = x.copy()
            xmp = x.copy()
            xmm = x.copy()
            xpp[i] += hs[i]; xpp[j] += hs[j]
            xpm[i] += hs[i]; xpm[j] -= hs[j]
            xmp[i] -= hs[i]; xmp[j] += hs[j]
            xmm[i] -= hs[i]; xmm[j] -= hs[j]
            H[i, j] = H[j, i] = (f(xpp) - f(xpm) - f(xmp) + f(xmm)) / (4.0 * hs[i] * hs[j])
    return H
