"""Conformal models of simply connected spherical domains.

A domain is given by an analytic map ``F`` from the closed unit disk into the
stereographic plane.  Pulling back the round metric gives the conformal
density ``rho^2 = |F'|^2 * 4 / (1 + |F|^2)^2`` on the disk.  Moving the pole
to ``q`` composes with the disk automorphism ``z -> (z + q) / (1 + conj(q) z)``.

Angular integrals over circles ``|z| = r`` of the recentered density are
evaluated on the preimage circle in the original disk (an Apollonius circle of
``q``).  There the integrand stays smooth uniformly in ``q``, whereas in the
recentered variable it develops a spike of width ``1 - |q|``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DegenerateMapError, InversionError, ResolutionError

FOUR_PI = 4.0 * np.pi
DERIVATIVE_FLOOR = 1e-12

# 8-point Gauss-Legendre rule on [0, 1], used for all radial panel integrals.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


class AnalyticMap:
    """Polynomial map ``F(z) = P(w)``, ``w = (z + b) / (1 + conj(b) z)``.

    ``P(w) = c_1 w + c_2 w^2 + ... + c_d w^d``.  The optional Moebius shift
    ``b`` lets a cap be viewed off-center; with ``b = 0`` the map is the plain
    polynomial.  Univalence on the closed disk is the caller's responsibility.
    """

    def __init__(self, coefficients: Sequence[complex], shift: complex = 0.0):
        coeffs = np.asarray(coefficients, dtype=complex).ravel()
        if coeffs.size == 0 or coeffs[0] == 0:
            raise ValueError("the linear coefficient c_1 must be nonzero")
        if abs(shift) >= 1.0:
            raise ValueError("Moebius shift must lie inside the unit disk")
        self.coefficients = coeffs
        self.shift = complex(shift)
        # highest power first, for np.polyval
        self._poly = np.concatenate([coeffs[::-1], [0.0]])
        self._dpoly = np.polyder(self._poly)

    def _inner(self, z):
        b = self.shift
        if b == 0:
            return z, np.ones_like(z)
        den = 1.0 + np.conj(b) * z
        return (z + b) / den, (1.0 - abs(b) ** 2) / den**2

    def __call__(self, z):
        w, _ = self._inner(np.asarray(z, dtype=complex))
        return np.polyval(self._poly, w)

    def derivative(self, z):
        w, dw = self._inner(np.asarray(z, dtype=complex))
        return np.polyval(self._dpoly, w) * dw

    def to_dict(self) -> dict:
        out = {"coefficients": [[c.real, c.imag] for c in self.coefficients]}
        if self.shift != 0:
            out["shift"] = [self.shift.real, self.shift.imag]
        return out

    def __repr__(self):
        return f"AnalyticMap({self.coefficients.tolist()!r}, shift={self.shift!r})"


def conformal_factor(fmap: AnalyticMap, z, metric: str = "sphere"):
    """Conformal factor ``rho^2(z)`` of the pulled-back metric.

    ``metric="sphere"`` pulls back the round metric through stereographic
    coordinates; ``metric="plane"`` pulls back the flat metric (``|F'|^2``),
    which with ``F(z) = z`` is the Euclidean test density ``rho^2 = 1``.
    """
    z = np.asarray(z, dtype=complex)
    d = fmap.derivative(z)
    if np.any(np.abs(d) < DERIVATIVE_FLOOR):
        raise DegenerateMapError("|F'(z)| < 1e-12: map is not univalent near z")
    d2 = np.abs(d) ** 2
    if metric == "plane":
        return d2
    if metric != "sphere":
        raise ValueError(f"unknown metric {metric!r}")
    return d2 * 4.0 / (1.0 + np.abs(fmap(z)) ** 2) ** 2


class ConformalDomain:
    """A spherical domain represented as ``(D, rho^2 g_E)``.

    The area ``M`` is computed once at construction with a tensor-product
    rule (Gauss-Legendre in ``r``, trapezoid in ``theta``) and checked
    against a half-resolution rule.
    """

    def __init__(self, fmap: AnalyticMap, n_r: int = 256, n_theta: int = 256,
                 metric: str = "sphere", area_rtol: float = 1e-9):
        if n_r < 8 or n_theta < 8:
            raise ValueError("quadrature needs at least 8 nodes per direction")
        self.map = fmap
        self.n_r = int(n_r)
        self.n_theta = int(n_theta)
        self.metric = metric
        self.M = area(self, rtol=area_rtol)
        if metric == "sphere" and not 0.0 < self.M < FOUR_PI:
            raise ValueError(f"area {self.M} outside (0, 4 pi): map is not univalent")

    def rho2(self, z):
        return conformal_factor(self.map, z, self.metric)

    def density(self, q: complex = 0.0) -> "RecenteredDensity":
        return RecenteredDensity(self, q)

    def with_resolution(self, scale: float) -> "ConformalDomain":
        return ConformalDomain(self.map, max(8, round(self.n_r * scale)),
                               max(8, round(self.n_theta * scale)), self.metric)

    def to_dict(self) -> dict:
        out = self.map.to_dict()
        out.update(n_r=self.n_r, n_theta=self.n_theta)
        if self.metric != "sphere":
            out["metric"] = self.metric
        return out

    @classmethod
    def from_dict(cls, cfg: dict, **overrides) -> "ConformalDomain":
        coeffs = [complex(*_pair(c)) for c in cfg["coefficients"]]
        shift = complex(*_pair(cfg.get("shift", [0.0, 0.0])))
        kw = dict(n_r=int(cfg.get("n_r", 256)), n_theta=int(cfg.get("n_theta", 256)),
                  metric=cfg.get("metric", "sphere"))
        kw.update(overrides)
        return cls(AnalyticMap(coeffs, shift), **kw)

    @classmethod
    def from_json(cls, path) -> "ConformalDomain":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def __repr__(self):
        return (f"ConformalDomain({self.map!r}, n_r={self.n_r}, "
                f"n_theta={self.n_theta}, metric={self.metric!r}, M={self.M:.12g})")


def _pair(c):
    if isinstance(c, (int, float)):
        return float(c), 0.0
    re, im = c
    return float(re), float(im)


def cap_domain(R: float, **kw) -> ConformalDomain:
    """Geodesic disk of radius ``R`` centred at the south pole (``F = tan(R/2) z``)."""
    if not 0.0 < R < np.pi:
        raise ValueError("cap radius must lie in (0, pi)")
    return ConformalDomain(AnalyticMap([np.tan(R / 2.0)]), **kw)


def euclidean_disk(**kw) -> ConformalDomain:
    """Flat unit disk, ``rho^2 = 1`` and ``M = pi``."""
    kw.setdefault("metric", "plane")
    return ConformalDomain(AnalyticMap([1.0]), **kw)


def _disk_rule(n_r: int, n_theta: int):
    x, w = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * (x + 1.0)
    wr = 0.5 * w
    th = 2.0 * np.pi * np.arange(n_theta) / n_theta
    return r, wr, th


def _area_at(domain: ConformalDomain, n_r: int, n_theta: int) -> float:
    r, wr, th = _disk_rule(n_r, n_theta)
    z = r[:, None] * np.exp(1j * th)[None, :]
    vals = domain.rho2(z).sum(axis=1) * (2.0 * np.pi / n_theta)
    return float(np.sum(vals * r * wr))


def area(domain: ConformalDomain, rtol: float | None = 1e-9) -> float:
    """Area ``M = int_D rho^2 dv_E``; raises ``ResolutionError`` if unresolved."""
    full = _area_at(domain, domain.n_r, domain.n_theta)
    if rtol is not None:
        half = _area_at(domain, max(4, domain.n_r // 2), max(4, domain.n_theta // 2))
        if abs(full - half) > rtol * abs(full):
            raise ResolutionError(
                f"area changed by {abs(full - half):.3e} between resolutions")
    return full


class RecenteredDensity:
    """Conformal density ``rho_q^2`` of the domain with its pole moved to ``q``.

    Radial quantities (ring mass ``m``, Fourier modes, cumulative area ``s_q``)
    are computed by integrating over the preimage circle of ``|z| = r``.
    """

    def __init__(self, domain: ConformalDomain, q: complex = 0.0):
        q = complex(q)
        if abs(q) >= 1.0:
            raise ValueError("pole must lie strictly inside the unit disk")
        self.domain = domain
        self.q = q
        self.M = domain.M
        self._aq = abs(q) ** 2
        self._phi = np.exp(2j * np.pi * np.arange(domain.n_theta) / domain.n_theta)

    # pointwise ---------------------------------------------------------------
    def rho2(self, z):
        z = np.asarray(z, dtype=complex)
        q = self.q
        den = 1.0 + np.conj(q) * z
        w = (z + q) / den
        return self.domain.rho2(w) * (1.0 - self._aq) ** 2 / np.abs(den) ** 4

    # circle machinery --------------------------------------------------------
    def _circle(self, r):
        """Preimage circles: centers, radii, and radius/r (finite at r=0)."""
        r = np.asarray(r, dtype=float)
        den = 1.0 - r * r * self._aq
        center = np.asarray(self.q * (1.0 - r * r) / den, dtype=complex)
        ratio = np.asarray((1.0 - self._aq) / den)
        return center, r * ratio, ratio

    def _circle_integral(self, r, kernel):
        """``(1/2pi) int_0^{2pi} kernel(w) dphi`` over each preimage circle."""
        center, radius, ratio = self._circle(r)
        w = center[..., None] + radius[..., None] * self._phi
        return kernel(w).mean(axis=-1), ratio

    def ring_mass(self, r):
        """``m(r) = int_0^{2pi} rho_q^2(r, theta) dtheta``."""
        q, aq = self.q, self._aq

        def kern(w):
            return self.domain.rho2(w) * np.abs(1.0 - np.conj(q) * w) ** 2 / (1.0 - aq)

        mean, ratio = self._circle_integral(r, kern)
        return 2.0 * np.pi * mean * ratio

    def radial_weight(self, r):
        """Angular average ``rho~_q^2(r) = m(r) / 2pi``."""
        return self.ring_mass(r) / (2.0 * np.pi)

    def fourier_mode(self, r, mode: int = 1):
        """``int_0^{2pi} rho_q^2(r, theta) exp(-i mode theta) dtheta``."""
        q, aq = self.q, self._aq
        r = np.asarray(r, dtype=float)
        if mode == 0:
            return self.ring_mass(r).astype(complex)
        if np.any(r <= 0.0):
            raise ValueError("nonzero Fourier modes need r > 0")
        rr = r[..., None]

        def kern(w):
            z = (w - q) / (1.0 - np.conj(q) * w)
            phase = (np.conj(z) / rr) ** mode if mode > 0 else (z / rr) ** (-mode)
            return self.domain.rho2(w) * np.abs(1.0 - np.conj(q) * w) ** 2 / (1.0 - aq) * phase

        mean, ratio = self._circle_integral(r, kern)
        return 2.0 * np.pi * mean * ratio

    def level_curve_length(self, a):
        """Length of the level curve of the Green function enclosing area ``a``."""
        r = self.radius_of_area(a)
        center, radius, _ = self._circle(r)
        w = center[..., None] + radius[..., None] * self._phi
        return 2.0 * np.pi * radius * np.sqrt(self.domain.rho2(w)).mean(axis=-1)

    # cumulative area ---------------------------------------------------------
    @cached_property
    def _panels(self):
        t = np.linspace(0.0, 1.0, 129)
        delta = 1.0 - abs(self.q)
        if delta < 0.5:
            near = 1.0 - delta * np.geomspace(1e-3, 0.5 / delta, 48)
            t = np.union1d(t, near[(near > 0.0) & (near < 1.0)])
        h = np.diff(t)
        nodes = t[:-1, None] + h[:, None] * _GL_X
        vals = self.ring_mass(nodes) * nodes
        s = np.concatenate([[0.0], np.cumsum((vals * _GL_W).sum(axis=1) * h)])
        if np.any(np.diff(s) <= 0.0):
            raise InversionError("cumulative area is not strictly increasing")
        return t, s, PchipInterpolator(s, t)

    @property
    def total_mass(self) -> float:
        """``s_q(1)``, which equals ``M`` up to quadrature error."""
        return float(self._panels[1][-1])

    def cumulative_area(self, r):
        """``s_q(r)``: area of ``B(0, r)`` in the metric ``rho_q^2 g_E``."""
        t, s, _ = self._panels
        r = np.clip(np.asarray(r, dtype=float), 0.0, 1.0)
        k = np.clip(np.searchsorted(t, r, side="right") - 1, 0, t.size - 2)
        t0 = t[k]
        h = r - t0
        nodes = t0[..., None] + h[..., None] * _GL_X
        part = (self.ring_mass(nodes) * nodes * _GL_W).sum(axis=-1) * h
        return s[k] + part

    def _increment(self, r0, r1):
        """``s_q(r1) - s_q(r0)`` for nearby radii (4-point Gauss-Legendre)."""
        x, w = np.polynomial.legendre.leggauss(4)
        h = r1 - r0
        nodes = r0[..., None] + h[..., None] * 0.5 * (x + 1.0)
        return (self.ring_mass(nodes) * nodes * w).sum(axis=-1) * 0.5 * h

    def radius_of_area(self, a, tol: float = 1e-13, max_iter: int = 40):
        """Invert ``s_q``: safeguarded Newton seeded by a monotone interpolant."""
        t, s, seed = self._panels
        a = np.asarray(a, dtype=float)
        shape = a.shape
        if np.any(a < 0.0) or np.any(a > s[-1] * (1 + 1e-12)):
            raise InversionError("area value outside [0, M]")
        a = np.minimum(a, s[-1])
        k = np.clip(np.searchsorted(s, a, side="right") - 1, 0, s.size - 2)
        lo, hi = t[k].copy(), t[k + 1].copy()
        r = np.atleast_1d(np.clip(seed(a), lo, hi))
        a, lo, hi = np.atleast_1d(a), np.atleast_1d(lo), np.atleast_1d(hi)
        sr = self.cumulative_area(r)
        scale = tol * self.total_mass
        for _ in range(max_iter):
            f = sr - a
            done = np.abs(f) <= scale
            if np.all(done):
                return r.reshape(shape)
            lo = np.where(f < 0.0, r, lo)
            hi = np.where(f > 0.0, r, hi)
            with np.errstate(divide="ignore", invalid="ignore"):
                nr = r - f / (r * self.ring_mass(r))
            bad = ~np.isfinite(nr) | (nr <= lo) | (nr >= hi)
            nr = np.where(done, r, np.where(bad, 0.5 * (lo + hi), nr))
            # long (bisection) steps are re-integrated from the panel start
            live = ~done
            step = live & ~bad
            sr = sr.copy()
            sr[step] += self._increment(r[step], nr[step])
            redo = live & bad
            if np.any(redo):
                sr[redo] = self.cumulative_area(nr[redo])
            r = nr
        raise InversionError("s_q inversion did not converge")

    @property
    def panel_breaks(self) -> np.ndarray:
        return self._panels[0]


def sqrt_grid(M: float, n: int):
    """Cell centres and faces of ``(0, M)``, uniform in ``sqrt(a)``.

    Near ``a = 0`` the profile behaves like ``4 pi a`` and eigenfunctions like
    ``sqrt(a)``; a grid uniform in ``sqrt(a)`` resolves that endpoint the way a
    uniform radial grid resolves the centre of a disk.
    """
    u = np.arange(n + 1) / n
    return M * ((np.arange(n) + 0.5) / n) ** 2, M * u**2


@dataclass(frozen=True)
class ProfileFunction:
    """Green-function profile ``G(a)`` sampled on a cell-centred grid of ``(0, M)``.

    The grid is uniform in ``sqrt(a)`` (see :func:`sqrt_grid`).  ``values[i]``
    is ``G`` at centre ``i``; ``face_values[j]`` is ``G`` at face ``j`` for
    ``j = 0..n``.  The end faces are not used by the solvers, which impose zero
    flux there.
    """

    M: float
    values: np.ndarray
    face_values: np.ndarray
    label: str = field(default="", compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        fv = np.asarray(self.face_values, dtype=float)
        if v.ndim != 1 or fv.shape != (v.size + 1,):
            raise ValueError("face_values must have one more entry than values")
        if v.size < 16:
            raise ValueError("profile grid needs n >= 16")
        if not (np.all(np.isfinite(v)) and np.all(v > 0.0) and np.all(fv[1:-1] > 0.0)):
            raise ValueError("profile must be strictly positive on (0, M)")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "face_values", fv)

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def centers(self) -> np.ndarray:
        return sqrt_grid(self.M, self.n)[0]

    @property
    def faces(self) -> np.ndarray:
        return sqrt_grid(self.M, self.n)[1]

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.faces)

    @classmethod
    def from_function(cls, func: Callable, M: float, n: int, label: str = "") -> "ProfileFunction":
        c, f = sqrt_grid(M, n)
        return cls(M, func(c), func(f), label)

    def coarsened(self) -> "ProfileFunction":
        """Same profile on the grid with half as many cells (exact resampling)."""
        if self.n % 2:
            raise ValueError("cannot coarsen an odd grid")
        return ProfileFunction(self.M, self.face_values[1::2], self.face_values[::2], self.label)

    def blend(self, other: "ProfileFunction", t: float) -> "ProfileFunction":
        """Linear interpolation ``(1 - t) self + t other``."""
        return ProfileFunction(self.M, (1 - t) * self.values + t * other.values,
                               (1 - t) * self.face_values + t * other.face_values)


def cap_profile(M: float, n: int) -> ProfileFunction:
    """``G*(a) = a (4 pi - a)``, the profile of a cap seen from its centre."""
    return ProfileFunction.from_function(lambda a: a * (FOUR_PI - a), M, n, "cap")


def profile_G(density: RecenteredDensity, n: int = 2048) -> ProfileFunction:
    """Profile ``G(a) = 2 pi r^2 m(r)`` with ``s_q(r) = a``, sampled on :func:`sqrt_grid`."""
    if n < 16:
        raise ValueError("profile grid needs n >= 16")
    M = density.M
    centers, faces = sqrt_grid(M, n)
    pts = np.concatenate([centers, faces[1:-1]])
    r = density.radius_of_area(pts)
    G = 2.0 * np.pi * r**2 * density.ring_mass(r)
    face_vals = np.concatenate([[0.0], G[n:], [2.0 * np.pi * density.ring_mass(1.0)]])
    return ProfileFunction(M, G[:n], face_vals, f"q={density.q}")


def level_curve_length(density: RecenteredDensity, a):
    return density.level_curve_length(a)


def recentered_density(domain: ConformalDomain, q: complex, z):
    if abs(q) >= 1.0:
        raise ValueError("pole on or outside the boundary")
    return RecenteredDensity(domain, q).rho2(z)


def radialized_weight(density: RecenteredDensity, r):
    return density.radial_weight(r)


def fourier_mode(density: RecenteredDensity, mode: int, r):
    return density.fourier_mode(r, mode)


def cumulative_area(density: RecenteredDensity, r):
    return density.cumulative_area(r)
