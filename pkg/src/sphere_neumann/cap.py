"""Neumann spectrum of geodesic disks (spherical caps) on the unit sphere.

Separating variables in geodesic polar coordinates around the centre of the
cap ``B(0, R)`` reduces the Laplacian to the mode problems

    -v'' - cot(r) v' + k^2 v / sin(r)^2 = mu v,   r v'(r) -> 0,  v'(R) = 0,

one for each angular frequency ``k >= 0``.  They are solved with the same
cell-centred flux scheme as the radial problems, with weight ``sin r``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .errors import CapGapError, GridTooCoarseError
from .radial import SLSolution, solve_pencil

DEFAULT_CAP_N = 2048
NEAR_ANTIPODE_N = 8192
NEAR_ANTIPODE_R = 3.0


@dataclass(frozen=True)
class CapModeSpectrum:
    """Lowest eigenpairs ``mu_{k1} <= mu_{k2} <= ...`` of one cap mode problem.

    ``eigenfunctions[:, j]`` is normalized by ``int_0^R v^2 sin r dr = 1``
    (discrete midpoint rule).
    """

    R: float
    k: int
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray
    grid: np.ndarray
    faces: np.ndarray
    weights: np.ndarray

    def as_solution(self) -> SLSolution:
        return SLSolution(self.eigenvalues, self.eigenfunctions, self.grid, self.faces,
                          self.weights, "cap", {"R": self.R, "k": self.k})


def _check_radius(R: float):
    if not 0.0 < R < np.pi:
        raise ValueError(f"cap radius must lie in (0, pi), got {R!r}")


def default_cap_grid(R: float) -> int:
    return NEAR_ANTIPODE_N if R > NEAR_ANTIPODE_R else DEFAULT_CAP_N


def _cap_pencil(R: float, k: int, n: int):
    faces = np.linspace(0.0, R, n + 1)
    c = 0.5 * (faces[1:] + faces[:-1])
    h = R / n
    coup = np.sin(faces[1:-1]) / h
    diag = k * k * h / np.sin(c)
    diag[:-1] += coup
    diag[1:] += coup
    return diag, -coup, np.sin(c) * h, c, faces


def _solve_cap(R: float, k: int, count: int, n: int) -> CapModeSpectrum:
    diag, off, mass, c, faces = _cap_pencil(R, k, n)
    vals, vecs = solve_pencil(diag, off, mass, count)
    return CapModeSpectrum(R, k, vals, vecs, c, faces, mass)


def solve_cap_mode(R: float, k: int, count: int = 1, n: int | None = None,
                   refinement_rtol: float | None = 1e-3) -> CapModeSpectrum:
    """Lowest ``count`` eigenpairs of the mode-``k`` problem on the cap of radius ``R``.

    With ``refinement_rtol`` set, the top requested eigenvalue is recomputed on
    a grid with half the cells and ``GridTooCoarseError`` is raised if it moves
    by more than ``refinement_rtol * max(1, mu)``.
    """
    _check_radius(R)
    k = int(k)
    if k < 0:
        raise ValueError("angular mode must be non-negative")
    if count < 1:
        raise ValueError("count must be >= 1")
    n = default_cap_grid(R) if n is None else int(n)
    spec = _solve_cap(R, k, count, n)
    if refinement_rtol is not None and n >= 32:
        top = spec.eigenvalues[-1]
        coarse = _solve_cap(R, k, count, n // 2).eigenvalues[-1]
        if abs(coarse - top) > refinement_rtol * max(1.0, abs(top)):
            raise GridTooCoarseError(
                f"mu_{k},{count} moved {abs(coarse - top):.3e} under refinement")
    return spec


@dataclass(frozen=True)
class CapSecondEigenvalue:
    """``mu_2`` of a cap together with the competing mode ``mu_02``."""

    R: float
    mu11: float
    mu02: float

    @property
    def gap(self) -> float:
        return self.mu02 - self.mu11

    def __float__(self) -> float:
        return self.mu11


def cap_mu2(R: float, n: int | None = None, gap_atol: float = 1e-8) -> CapSecondEigenvalue:
    """Second Neumann eigenvalue ``mu_2 = mu_11(R)`` of the cap of radius ``R``.

    The radial competitor ``mu_02(R)`` is computed as a side check;
    ``CapGapError`` is raised if it falls below ``mu_11`` by more than
    ``gap_atol``.
    """
    mu11 = solve_cap_mode(R, 1, 1, n).eigenvalues[0]
    mu02 = solve_cap_mode(R, 0, 2, n).eigenvalues[1]
    out = CapSecondEigenvalue(float(R), float(mu11), float(mu02))
    if out.gap < -gap_atol:
        raise CapGapError(f"mu_02 < mu_11 at R={R}: gap {out.gap:.3e}")
    return out


def area_to_radius(M: float) -> float:
    """Geodesic radius of the cap with area ``M = 4 pi sin^2(R / 2)``."""
    if not 0.0 < M < 4.0 * np.pi:
        raise ValueError(f"cap area must lie in (0, 4 pi), got {M!r}")
    return float(2.0 * np.arcsin(np.sqrt(M / (4.0 * np.pi))))


def radius_to_area(R: float) -> float:
    _check_radius(R)
    return float(4.0 * np.pi * np.sin(0.5 * R) ** 2)


def g_ratio(x):
    """``(2x^2 - 3x + 3) / (x (3 - 2x))`` on ``(0, 3/2)``.

    This is the Rayleigh quotient of ``sin r`` in the ``k = 1`` mode problem,
    written in ``x = sin^2(R / 2)``.  Exact for ``Fraction`` input; arrays are
    evaluated elementwise.
    """
    if isinstance(x, np.ndarray):
        if not np.all((x > 0) & (x < 1.5)):
            raise ValueError("g is defined on (0, 3/2)")
    elif not 0 < x < Fraction(3, 2):
        raise ValueError(f"g is defined on (0, 3/2), got {x!r}")
    return (2 * x * x - 3 * x + 3) / (x * (3 - 2 * x))


def rayleigh_sl_k(v, R: float, k: int, dv: Callable | None = None) -> float:
    """Rayleigh quotient of the mode-``k`` cap problem.

    ``v`` is either a grid function on the cell centres of a uniform grid of
    ``(0, R)`` (discrete quotient, consistent with :func:`solve_cap_mode`) or a
    callable ``v(r)``, integrated by adaptive quadrature.  For a callable, the
    derivative ``dv`` defaults to a centred difference.
    """
    _check_radius(R)
    if callable(v):
        return _rayleigh_continuous(v, R, k, dv)
    v = np.asarray(v, dtype=float)
    diag, off, mass, _, _ = _cap_pencil(R, int(k), v.size)
    den = np.sum(mass * v * v)
    if den == 0.0:
        raise ZeroDivisionError("zero-norm grid function")
    num = np.sum(diag * v * v) + 2.0 * np.sum(off * v[:-1] * v[1:])
    return float(num / den)


def _rayleigh_continuous(v: Callable, R: float, k: int, dv: Callable | None) -> float:
    if dv is None:
        def dv(r, h=1e-6):
            return (v(r + h) - v(r - h)) / (2.0 * h)
    opts = dict(epsabs=0.0, epsrel=1e-13, limit=200)
    den = quad(lambda r: v(r) ** 2 * np.sin(r), 0.0, R, **opts)[0]
    if den == 0.0:
        raise ZeroDivisionError("zero-norm function")
    num = quad(lambda r: dv(r) ** 2 * np.sin(r), 0.0, R, **opts)[0]
    if k:
        num += k * k * quad(lambda r: v(r) ** 2 / np.sin(r), 0.0, R, **opts)[0]
    return num / den


def endpoint_value(spec: CapModeSpectrum, j: int = 0) -> float:
    """``v_j(R)`` by the even quadratic through the last two centres (``v'(R) = 0``)."""
    v = spec.eigenfunctions[:, j]
    d1 = spec.R - spec.grid[-1]
    d2 = spec.R - spec.grid[-2]
    # v(r) ~ A + B (r - R)^2
    B = (v[-2] - v[-1]) / (d2 * d2 - d1 * d1)
    return float(v[-1] - B * d1 * d1)


def mu0j_derivative_check(R: float, j: int, h: float = 1e-4, n: int | None = None):
    """``(-mu_0j v_0j(R)^2 sin R, centred difference of mu_0j)`` at radius ``R``."""
    if j < 2:
        raise ValueError("j must be >= 2 (mu_01 = 0 identically)")
    _check_radius(R)
    if not (0.0 < R - h and R + h < np.pi):
        raise ValueError("finite-difference stencil leaves (0, pi)")
    n = default_cap_grid(R) if n is None else n
    spec = solve_cap_mode(R, 0, j, n, refinement_rtol=None)
    mu = spec.eigenvalues[j - 1]
    analytic = -mu * endpoint_value(spec, j - 1) ** 2 * np.sin(R)
    plus = solve_cap_mode(R + h, 0, j, n, refinement_rtol=None).eigenvalues[j - 1]
    minus = solve_cap_mode(R - h, 0, j, n, refinement_rtol=None).eigenvalues[j - 1]
    return float(analytic), float((plus - minus) / (2.0 * h))
