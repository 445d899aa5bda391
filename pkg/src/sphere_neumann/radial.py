"""First radial eigenvalue: the profile (G-form) problem and the weighted radial problem.

Both are discretized in flux (finite-volume) form on cell-centred grids.  The
zero-flux faces at either end realize the natural boundary conditions, so the
singular endpoint is never evaluated.  Each discretization yields a symmetric
tridiagonal pencil with diagonal mass, solved by bisection and inverse
iteration (LAPACK ``stebz``/``stein`` through scipy).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.linalg import eigh_tridiagonal

from .conformal import ProfileFunction, RecenteredDensity
from .errors import GridTooCoarseError, ProfileMismatchError, SignChangeError

TWO_PI = 2.0 * np.pi
FOUR_PI2 = 4.0 * np.pi**2
DEFAULT_N = 2048
REFINE_POLE = 0.99


@dataclass(frozen=True)
class SLSolution:
    """Lowest eigenpairs of a one-dimensional Sturm-Liouville pencil.

    ``eigenfunctions[:, k]`` is sampled at ``grid``; ``weights`` are the mass
    weights, so ``sum(weights * f_k**2) == 1``.  ``form`` is ``"G"``,
    ``"weighted"`` or ``"cap"``.
    """

    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray
    grid: np.ndarray
    faces: np.ndarray
    weights: np.ndarray
    form: str
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def first(self) -> np.ndarray:
        return self.eigenfunctions[:, 0]

    @property
    def kappa1(self) -> float:
        return float(self.eigenvalues[0])


def solve_pencil(diag, off, mass, count: int):
    """Lowest ``count`` eigenpairs of ``(T, diag(mass))`` with ``T`` tridiagonal.

    Eigenvectors are mass-normalized.  The first is made positive; higher
    ones are positive at the last node (ties broken by the first nonzero node).
    """
    n = diag.size
    count = min(int(count), n)
    if count < 1:
        raise ValueError("count must be >= 1")
    s = 1.0 / np.sqrt(mass)
    vals, vecs = eigh_tridiagonal(diag * s * s, off * s[:-1] * s[1:],
                                  select="i", select_range=(0, count - 1))
    vecs = vecs * s[:, None]
    vecs /= np.sqrt((mass[:, None] * vecs**2).sum(axis=0))
    for k in range(count):
        v = vecs[:, k]
        if k == 0:
            ref = v.sum()
        else:
            ref = v[-1] if abs(v[-1]) > 1e-14 else v[np.flatnonzero(np.abs(v) > 1e-14)[0]]
        if ref < 0:
            vecs[:, k] = -v
    return vals, vecs


def face_conductance(profile: ProfileFunction, G_faces=None) -> np.ndarray:
    """Flux weights ``w_j`` with ``(G f')_j ~ w_j (f_{j} - f_{j-1})`` at interior faces.

    The difference quotient is taken in ``sqrt(a)``, the variable in which the
    grid is uniform and the first eigenfunction is smooth at ``a = 0``.
    """
    gf = profile.face_values if G_faces is None else G_faces
    x = np.sqrt(profile.centers)
    return gf[1:-1] / (2.0 * np.sqrt(profile.faces[1:-1]) * np.diff(x))



def _g_pencil(profile: ProfileFunction):
    da = profile.widths
    w = face_conductance(profile)
    diag = FOUR_PI2 * da / profile.values
    diag[:-1] += w
    diag[1:] += w
    return diag, -w, da


def _solve_g(profile: ProfileFunction, count: int) -> SLSolution:
    diag, off, mass = _g_pencil(profile)
    vals, vecs = solve_pencil(diag, off, mass, count)
    return SLSolution(vals, vecs, profile.centers, profile.faces, mass, "G",
                      {"n": profile.n, "M": profile.M})


def solve_sl_G(profile: ProfileFunction, count: int = 1,
               refinement_rtol: float | None = 1e-3) -> SLSolution:
    """Lowest eigenpairs of ``-(G f')' + 4 pi^2 f / G = kappa f`` on ``(0, M)``.

    With ``refinement_rtol`` set, the solve is repeated on the grid with half
    the cells; ``GridTooCoarseError`` is raised if ``kappa_1`` moves more than
    that (relative).
    """
    sol = _solve_g(profile, count)
    if refinement_rtol is not None and profile.n % 2 == 0 and profile.n >= 32:
        coarse = _solve_g(profile.coarsened(), 1).kappa1
        if abs(coarse - sol.kappa1) > refinement_rtol * abs(sol.kappa1):
            raise GridTooCoarseError(
                f"kappa_1 moved {abs(coarse - sol.kappa1):.3e} under refinement")
        sol.meta["kappa1_coarse"] = coarse
    return sol


def _end_flux_energy(f, profile: ProfileFunction) -> float:
    # G f'^2 over the half cell [a_{n-1}, M], which the face fluxes do not cover.
    # f' is extrapolated linearly from the last two face quotients; the term is
    # O(h^5) when f'(M) = 0 and restores second order when it is not.
    c = profile.centers
    d = np.diff(f[-3:]) / np.diff(c[-3:])
    m = 0.5 * (c[-3:-1] + c[-2:])
    slope = (d[1] - d[0]) / (m[1] - m[0])
    d_in = d[1] + slope * (c[-1] - m[1])
    d_end = d[1] + slope * (profile.M - m[1])
    return 0.5 * (profile.M - c[-1]) * (profile.values[-1] * d_in**2
                                         + profile.face_values[-1] * d_end**2)


def rayleigh_G(f, profile: ProfileFunction) -> float:
    """Discrete Rayleigh quotient of the profile problem.

    The quadratic form of the pencil (face fluxes, cell potentials and masses)
    plus the flux energy of the last half cell, so that functions without
    ``f'(M) = 0`` are also integrated to second order.  For eigenfunctions of
    :func:`solve_sl_G` the extra term is negligible.
    """
    f = np.asarray(f, dtype=float)
    if f.shape != (profile.n,):
        raise ValueError("grid function does not match the profile grid")
    da = profile.widths
    den = np.sum(da * f * f)
    if den == 0.0:
        raise ZeroDivisionError("zero-norm grid function")
    num = np.sum(face_conductance(profile) * np.diff(f) ** 2)
    num += FOUR_PI2 * np.sum(da * f * f / profile.values)
    num += _end_flux_energy(f, profile)
    return float(num / den)


def log_derivative_ratio(solution: SLSolution, profile: ProfileFunction) -> np.ndarray:
    """``R = G f' / f`` at the cell centres of the profile grid.

    The flux ``G f'`` is known at faces (zero at both ends); it is interpolated
    to the centres linearly in ``sqrt(a)``, in which it is smooth at ``a = 0``.
    """
    f = solution.first
    if f.shape != (profile.n,):
        raise ProfileMismatchError("solution and profile grids differ")
    if np.any(f <= 0.0):
        raise SignChangeError("first eigenfunction is not strictly positive")
    flux = np.concatenate([[0.0], face_conductance(profile) * np.diff(f), [0.0]])
    x = np.sqrt(profile.faces)
    theta = (np.sqrt(profile.centers) - x[:-1]) / np.diff(x)
    return (flux[:-1] + theta * np.diff(flux)) / f


def _check_pair(G0: ProfileFunction, G1: ProfileFunction):
    if G0.n != G1.n or not np.isclose(G0.M, G1.M, rtol=1e-12, atol=0.0):
        raise ProfileMismatchError("profiles must share M and grid size")


def feynman_hellmann_derivative(G0: ProfileFunction, G1: ProfileFunction, t: float) -> float:
    """``d kappa_1 / dt`` along ``G_t = (1 - t) G0 + t G1``.

    Quadrature of ``(G_t^2 f'^2 - 4 pi^2 f^2) (G1 - G0) / G_t^2`` with the
    flux term at faces and ``f`` at centres; this is the exact derivative of
    the discrete eigenvalue.
    """
    _check_pair(G0, G1)
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    Gt = G0.blend(G1, t)
    f = _solve_g(Gt, 1).first
    dw = face_conductance(Gt, G1.face_values - G0.face_values)
    dcent = G1.values - G0.values
    return float(np.sum(dw * np.diff(f) ** 2)
                 - FOUR_PI2 * np.sum(Gt.widths * dcent * f**2 / Gt.values**2))


# weighted radial form --------------------------------------------------------

def radial_faces(density: RecenteredDensity, n: int = DEFAULT_N,
                 refine: bool | None = None) -> np.ndarray:
    """Cell faces on ``[0, 1]``: uniform, or graded toward ``r = 1``.

    The graded grid equidistributes ``(r + s_q(r) / M) / 2``, so half of the
    cells follow the mass once it concentrates in a boundary strip.
    """
    if refine is None:
        refine = abs(density.q) >= REFINE_POLE
    if not refine:
        return np.linspace(0.0, 1.0, n + 1)
    t, s, _ = density._panels
    tau = 0.5 * (t + s / s[-1])
    faces = PchipInterpolator(tau, t)(np.linspace(0.0, 1.0, n + 1))
    faces[0], faces[-1] = 0.0, 1.0
    if np.any(np.diff(faces) <= 0.0):
        raise ValueError("graded grid is not monotone")
    return faces


def _weighted_pencil(faces, weight, mode: int):
    c = 0.5 * (faces[1:] + faces[:-1])
    dr = np.diff(faces)
    coup = faces[1:-1] / np.diff(c)
    diag = np.zeros(c.size)
    diag[:-1] += coup
    diag[1:] += coup
    diag += mode**2 * dr / c
    mass = TWO_PI * weight * c * dr
    # stiffness carries the same 2 pi as the mass: both are disk integrals
    return TWO_PI * diag, -TWO_PI * coup, mass, c


def solve_radial_weighted(density: RecenteredDensity, count: int = 1, n: int = DEFAULT_N,
                          mode: int = 1, refine: bool | None = None,
                          faces: np.ndarray | None = None) -> SLSolution:
    """Lowest eigenpairs of ``-v'' - v'/r + mode^2 v / r^2 = kappa rho~_q^2 v`` on ``(0, 1)``.

    ``mode = 1`` is the radial magnetic sector; other modes give the
    remaining Fourier sectors of the radially weighted disk problem.  The
    eigenfunctions are normalized by ``int_D v^2 rho~_q^2 dv_E = 1``.
    """
    if faces is None:
        faces = radial_faces(density, n, refine)
    c = 0.5 * (faces[1:] + faces[:-1])
    weight = density.radial_weight(c)
    diag, off, mass, c = _weighted_pencil(faces, weight, mode)
    vals, vecs = solve_pencil(diag, off, mass, count)
    return SLSolution(vals, vecs, c, faces, mass, "weighted",
                      {"n": c.size, "mode": mode, "q": density.q})


def kappa1(density: RecenteredDensity, n: int = DEFAULT_N) -> float:
    return solve_radial_weighted(density, 1, n).kappa1
