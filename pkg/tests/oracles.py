"""Reference values computed independently of the package under test."""
from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad
from scipy.linalg import eigh_tridiagonal


def bessel_j(n: int, x: float, terms: int = 60) -> float:
    """Power series of J_n (accurate for the moderate x used here)."""
    s = 0.0
    for k in range(terms):
        s += (-1) ** k * (x / 2) ** (2 * k + n) / (math.factorial(k) * math.factorial(k + n))
    return s


def bessel_j1_prime(x: float) -> float:
    return 0.5 * (bessel_j(0, x) - bessel_j(2, x))


def bisect(f, a: float, b: float, tol: float = 1e-15) -> float:
    fa = f(a)
    assert fa * f(b) < 0
    while b - a > tol:
        m = 0.5 * (a + b)
        fm = f(m)
        if fa * fm <= 0:
            b = m
        else:
            a, fa = m, fm
    return 0.5 * (a + b)


J1P_ZERO = bisect(bessel_j1_prime, 1.0, 3.0)
J1P_ZERO_SQ = J1P_ZERO**2


def cap_rho2(c: float, r):
    return 4 * c * c / (1 + c * c * r * r) ** 2


def cap_area(c: float) -> float:
    return 4 * math.pi * c * c / (1 + c * c)


def cap_cumulative(c: float, r):
    return 4 * math.pi * c * c * r * r / (1 + c * c * r * r)


def rayleigh_profile_exact(G, dG_unused, f, df, M: float) -> float:
    """Continuous quotient int (G f'^2 + 4 pi^2 f^2 / G) / int f^2 by adaptive quadrature."""
    opts = dict(epsabs=0.0, epsrel=1e-13, limit=400)
    num = quad(lambda a: G(a) * df(a) ** 2 + 4 * math.pi**2 * f(a) ** 2 / G(a), 0, M, **opts)[0]
    den = quad(lambda a: f(a) ** 2, 0, M, **opts)[0]
    return num / den


def brute_V(rho2, qs, n: int = 400, n_theta: int = 64):
    """``V(q) = int v_q e^{i theta} rho_q^2`` on a plain tensor grid, many poles at once.

    Independent of the package: the recentered density is sampled directly in
    the recentered variable, and the radial problem is solved on a uniform
    midpoint grid with its own tridiagonal assembly.
    """
    qs = np.atleast_1d(np.asarray(qs, dtype=complex))
    faces = np.linspace(0, 1, n + 1)
    c = 0.5 * (faces[1:] + faces[:-1])
    h = 1.0 / n
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    z = c[:, None] * np.exp(1j * th)[None, :]
    out = np.empty(qs.size, dtype=complex)
    coup = faces[1:-1] / h
    diag0 = np.zeros(n)
    diag0[:-1] += coup
    diag0[1:] += coup
    diag0 += h / c
    for i, q in enumerate(qs):
        w = (z + q) / (1 + np.conj(q) * z)
        dens = rho2(w) * (1 - abs(q) ** 2) ** 2 / np.abs(1 + np.conj(q) * z) ** 4
        m0 = dens.mean(axis=1)
        m1 = (dens * np.exp(1j * th)).mean(axis=1) * 2 * np.pi
        mass = m0 * c * h
        s = 1 / np.sqrt(mass)
        _, vec = eigh_tridiagonal(diag0 * s * s, -coup * s[:-1] * s[1:], select="i",
                                  select_range=(0, 0))
        v = vec[:, 0] * s
        v /= np.sqrt(np.sum(2 * np.pi * mass * v * v))
        if v.sum() < 0:
            v = -v
        out[i] = np.sum(v * m1 * c * h)
    return out
