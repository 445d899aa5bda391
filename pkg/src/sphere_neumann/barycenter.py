"""The barycenter field ``V(q)``, its balanced zero, and the Steklov limit.

For a pole ``q`` the first radial eigenfunction ``v_q`` of the recentered
problem gives the test function ``v_q e^{i theta}``.  It is orthogonal to
constants in the ``rho_q^2`` metric exactly when

    V(q) = int_D v_q e^{i theta} rho_q^2 dv_E

vanishes.  ``V`` points inward near the unit circle (``V -> -sqrt(M) q``), so
it has degree one there and a zero inside.  As ``|q| -> 1`` the recentered
mass piles up on the boundary and the radial sectors tend to the Steklov
spectrum ``2 pi l / M`` of the disk with boundary density ``M / 2 pi``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .conformal import ConformalDomain, RecenteredDensity, _GL_W, _GL_X
from .errors import ConvergenceError, DegreeError
from .radial import DEFAULT_N, SLSolution, solve_radial_weighted

PROBE_RADIUS = 0.95
NEWTON_STEP = 1e-4


def first_radial_eigenfunction(density: RecenteredDensity, n: int = DEFAULT_N) -> SLSolution:
    """First eigenpair of the mode-one weighted radial problem at ``density.q``.

    ``first`` is positive and ``int_D v^2 rho~_q^2 = 1``, i.e. the pulled back
    profile eigenfunction has unit ``L^2(0, M)`` norm.
    """
    return solve_radial_weighted(density, 1, n, mode=1)


def V_of(domain: ConformalDomain, q: complex, n: int = DEFAULT_N) -> complex:
    """``V(q) = int_0^1 v_q(r) conj(m_1(r)) r dr`` with ``m_1 = int rho_q^2 e^{-i theta}``."""
    q = complex(q)
    if abs(q) >= 1.0:
        raise ValueError("pole must lie inside the unit disk")
    density = domain.density(q)
    sol = first_radial_eigenfunction(density, n)
    c = sol.grid
    m1 = density.fourier_mode(c, 1)
    return complex(np.sum(sol.first * np.conj(m1) * c * np.diff(sol.faces)))


def winding_number(values: np.ndarray) -> int:
    """Winding number about 0 of the closed polygon through ``values``."""
    w = np.asarray(values, dtype=complex)
    steps = np.angle(np.roll(w, -1) / w)
    return int(np.rint(steps.sum() / (2.0 * np.pi)))


def probe_winding(domain: ConformalDomain, radius: float = PROBE_RADIUS, samples: int = 32,
                  n: int = DEFAULT_N, max_samples: int = 512):
    """Winding number of ``V`` on ``|q| = radius``, refining until steps are small.

    Returns ``(winding, values)``.  The sampling is doubled while any angular
    increment of ``V`` exceeds ``pi / 3``.
    """
    gam = 2.0 * np.pi * np.arange(samples) / samples
    vals = np.array([V_of(domain, radius * np.exp(1j * g), n) for g in gam])
    while True:
        steps = np.abs(np.angle(np.roll(vals, -1) / vals))
        if np.all(steps < np.pi / 3) or vals.size >= max_samples:
            return winding_number(vals), vals
        mid = gam + np.pi / vals.size
        new = np.array([V_of(domain, radius * np.exp(1j * g), n) for g in mid])
        gam = np.column_stack([gam, mid]).ravel()
        vals = np.column_stack([vals, new]).ravel()


@dataclass(frozen=True)
class BalancedPoleResult:
    """A zero of ``V`` certified by a degree-one probe circle."""

    q: complex
    residual: float
    winding: int
    iterations: int
    candidates: int = 1
    history: list = field(default_factory=list, compare=False, repr=False)


def _jacobian(func, q: complex, step: float) -> np.ndarray:
    dx = (func(q + step) - func(q - step)) / (2.0 * step)
    dy = (func(q + 1j * step) - func(q - 1j * step)) / (2.0 * step)
    return np.array([[dx.real, dy.real], [dx.imag, dy.imag]])


def _newton(func, q0: complex, target: float, max_iter: int, step: float, bound: float):
    q, Vq = q0, func(q0)
    hist = [(q, abs(Vq))]
    for it in range(1, max_iter + 1):
        if abs(Vq) < target:
            return q, Vq, it - 1, hist
        J = _jacobian(func, q, step)
        try:
            dx = np.linalg.solve(J, -np.array([Vq.real, Vq.imag]))
        except np.linalg.LinAlgError:
            break
        delta = complex(dx[0], dx[1])
        t = 1.0
        while t > 1e-3:
            qn = q + t * delta
            if abs(qn) < bound:
                Vn = func(qn)
                if abs(Vn) < abs(Vq):
                    break
            t *= 0.5
        else:
            break
        q, Vq = qn, Vn
        hist.append((q, abs(Vq)))
    ok = abs(Vq) < target
    return (q, Vq, len(hist) - 1, hist) if ok else (None, Vq, len(hist) - 1, hist)


def _grid_points(center: complex, half: float, m: int, bound: float):
    s = np.linspace(-half, half, m)
    pts = (center + s[None, :] + 1j * s[:, None]).ravel()
    return pts[np.abs(pts) < bound]


def _local_minima(pts, vals, spacing):
    count = 0
    for p, v in zip(pts, vals):
        near = np.abs(pts - p) < 1.5 * spacing
        if v <= vals[near].min():
            count += 1
    return count


def find_balanced_pole(domain: ConformalDomain, tol: float = 1e-6, n: int = DEFAULT_N,
                       grid: int = 9, max_iter: int = 30, max_refine: int = 4,
                       step: float = NEWTON_STEP, probe_radius: float = PROBE_RADIUS,
                       check_degree: bool = True) -> BalancedPoleResult:
    """Zero of ``V`` with ``|V| < tol * sqrt(M)``.

    The winding number on ``|q| = probe_radius`` must be one (``DegreeError``
    otherwise).  Damped Newton with a central-difference Jacobian starts from
    the best point of a coarse grid; when it stalls the grid is refined around
    the best point and the search restarts.  ``candidates`` counts local minima
    of ``|V|`` on the first grid, a hint at multiple zeros.
    """
    target = tol * np.sqrt(domain.M)
    winding = 1
    if check_degree:
        winding, _ = probe_winding(domain, probe_radius, n=n)
        if winding != 1:
            raise DegreeError(f"V has winding number {winding} on |q| = {probe_radius}")

    cache: dict = {}

    def func(q):
        q = complex(q)
        if q not in cache:
            cache[q] = V_of(domain, q, n)
        return cache[q]

    center, half = 0.0j, probe_radius
    candidates = None
    hist_all = []
    for level in range(max_refine + 1):
        pts = _grid_points(center, half, grid, probe_radius)
        vals = np.array([abs(func(p)) for p in pts])
        if candidates is None:
            candidates = _local_minima(pts, vals, 2.0 * half / (grid - 1))
        best = pts[np.argmin(vals)]
        q, Vq, iters, hist = _newton(func, best, target, max_iter, step, probe_radius)
        hist_all.extend(hist)
        if q is not None:
            return BalancedPoleResult(q, abs(Vq), winding, len(hist_all) - 1, candidates, hist_all)
        center, half = best, 2.0 * half / (grid - 1)
    raise ConvergenceError(f"no zero of V found; best |V| = {min(h[1] for h in hist_all):.3e}")


# Steklov limit -------------------------------------------------------------

@dataclass(frozen=True)
class SteklovSpectrum:
    """Steklov spectrum of the unit disk with boundary density ``M / 2 pi``.

    ``sigma_1 = 0`` and then each ``2 pi l / M`` (``l >= 1``) twice, with
    eigenfunctions ``r^l e^{+-i l theta} / sqrt(M)``.
    """

    M: float
    eigenvalues: np.ndarray

    def level(self, ell: int) -> float:
        return 2.0 * np.pi * ell / self.M


def steklov_spectrum(M: float, count: int = 5) -> SteklovSpectrum:
    if M <= 0.0:
        raise ValueError("M must be positive")
    if count < 1:
        raise ValueError("count must be >= 1")
    ell = np.concatenate([[0], np.repeat(np.arange(1, count // 2 + 2), 2)])[:count]
    return SteklovSpectrum(float(M), 2.0 * np.pi * ell / M)


def steklov_mode(M: float, ell: int) -> Callable:
    """``u(z) = z^l / sqrt(M)``, a complex Steklov eigenfunction for ``2 pi l / M``."""
    return lambda z: np.asarray(z, dtype=complex) ** ell / np.sqrt(M)


@dataclass(frozen=True)
class SteklovLimitRow:
    magnitude: float
    mu: float
    sigma: float

    @property
    def error(self) -> float:
        return abs(self.mu - self.sigma)

    @property
    def relative_error(self) -> float:
        return self.error / self.sigma


@dataclass(frozen=True)
class SteklovLimitTable:
    sector: int
    rows: list

    @property
    def monotone(self) -> bool:
        err = [r.error for r in self.rows]
        return all(b < a for a, b in zip(err, err[1:]))

    @property
    def final_relative_error(self) -> float:
        return self.rows[-1].relative_error


def steklov_limit_check(domain: ConformalDomain, magnitudes, k: int = 1,
                        n: int = DEFAULT_N, direction: float = 0.0) -> SteklovLimitTable:
    """Lowest eigenvalue of the angular sector ``k`` against ``sigma = 2 pi k / M``.

    Poles are ``|q| e^{i direction}`` for each magnitude; for ``|q| >= 0.99``
    the radial grid is graded toward the boundary.
    """
    if k < 1:
        raise ValueError("sector must be >= 1")
    mags = [float(m) for m in magnitudes]
    if any(b <= a for a, b in zip(mags, mags[1:])) or not all(0 <= m < 1 for m in mags):
        raise ValueError("magnitudes must increase inside [0, 1)")
    sigma = 2.0 * np.pi * k / domain.M
    rows = []
    for m in mags:
        dens = domain.density(m * np.exp(1j * direction))
        mu = solve_radial_weighted(dens, 1, n, mode=k).kappa1
        rows.append(SteklovLimitRow(m, mu, sigma))
    return SteklovLimitTable(k, rows)


def concentration_error(density: RecenteredDensity, u: Callable, n_theta: int = 256) -> float:
    """``|int_D rho~_q^2 u dv_E - (M / 2 pi) int_{|z|=1} u ds|``.

    ``u`` maps complex points to real values.  The interior integral uses the
    panels of the cumulative area, so it stays accurate while the weight
    concentrates at the boundary.
    """
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    ring = np.exp(1j * theta)

    def mean_on_circle(r):
        return np.real(u(np.multiply.outer(r, ring))).mean(axis=-1)

    t = density.panel_breaks
    a, b = t[:-1], t[1:]
    x = (a[:, None] + (b - a)[:, None] * _GL_X).ravel()
    w = ((b - a)[:, None] * _GL_W).ravel()
    inner = np.sum(w * 2.0 * np.pi * x * density.radial_weight(x) * mean_on_circle(x))
    boundary = density.M * mean_on_circle(np.array([1.0]))[0]
    return float(abs(inner - boundary))


def limit_profile_error(density: RecenteredDensity, n: int = DEFAULT_N):
    """``(sup_r |v_q - r / sqrt(M)|^2, (1 / 2 pi) |grad((v_q - r / sqrt(M)) e^{i theta})|^2)``.

    The first number is bounded by the second, a Sobolev-type estimate that
    turns energy convergence of ``v_q`` into uniform convergence.
    """
    sol = first_radial_eigenfunction(density, n)
    c, f = sol.grid, sol.faces
    phi = sol.first - c / np.sqrt(density.M)
    dphi = np.diff(phi) / np.diff(c)
    energy = np.sum(dphi**2 * f[1:-1] * np.diff(c)) + np.sum(phi**2 / c * np.diff(f))
    return float(np.max(phi**2)), float(energy)
