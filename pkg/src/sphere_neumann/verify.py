"""End-to-end verification of the eigenvalue chain and the 1D property suites.

The chain compares, for one domain ``Omega`` of area ``M``,

    mu_2(Omega) <= kappa_1(Omega, q_bar) <= mu_2(cap of area M),

where ``q_bar`` is the balanced pole.  Each comparison is judged with the
aggregate tolerance ``eps_tot = 2 (fem error + 1D error)``.
"""
from __future__ import annotations

import copy
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .barycenter import find_balanced_pole
from .cap import NEAR_ANTIPODE_R, area_to_radius, cap_mu2
from .conformal import (FOUR_PI, ConformalDomain, ProfileFunction, profile_G, sqrt_grid)
from .errors import ConfigError, ProfileOrderError
from .fem import build_disk_mesh, solve_neumann_weighted
from .radial import feynman_hellmann_derivative, solve_radial_weighted, solve_sl_G

DEFAULTS = {
    "resolutions": {"rings": 128, "sl_grid": 2048, "n_r": 256, "n_theta": 256},
    "tolerances": {"residual_V": 1e-6},
}


# configuration -------------------------------------------------------------

def load_config(source) -> dict:
    """Parse and complete a verification config (path, JSON text or dict).

    A bare domain document ``{"coefficients": ...}`` is accepted as the
    ``domain`` section.  Raises ``ConfigError`` on anything malformed.
    """
    if isinstance(source, dict):
        raw = copy.deepcopy(source)
    else:
        try:
            raw = json.loads(Path(source).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {source}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    if "domain" not in raw and "coefficients" in raw:
        raw = {"domain": {k: raw[k] for k in ("coefficients", "shift", "metric") if k in raw},
               "resolutions": {k: raw[k] for k in ("n_r", "n_theta") if k in raw}}
    cfg = {"domain": raw.get("domain")}
    if not isinstance(cfg["domain"], dict) or "coefficients" not in cfg["domain"]:
        raise ConfigError("config needs a domain with coefficients")
    for sec, defaults in DEFAULTS.items():
        given = raw.get(sec)
        given = {} if given is None else given
        if not isinstance(given, dict):
            raise ConfigError(f"section {sec!r} must be an object")
        unknown = set(given) - set(defaults)
        if unknown:
            raise ConfigError(f"unknown keys in {sec!r}: {sorted(unknown)}")
        cfg[sec] = {**defaults, **given}
    for key in ("rings", "sl_grid", "n_r", "n_theta"):
        v = cfg["resolutions"][key]
        if not isinstance(v, int) or v <= 0:
            raise ConfigError(f"resolution {key!r} must be a positive integer")
    if cfg["resolutions"]["rings"] < 16:
        raise ConfigError("rings must be >= 16 (two coarser meshes are solved as well)")
    if not cfg["tolerances"]["residual_V"] > 0:
        raise ConfigError("residual_V must be positive")
    for extra in ("sweep",):
        if extra in raw:
            cfg[extra] = raw[extra]
    return cfg


def scale_resolutions(res: dict, scale: float) -> dict:
    """Multiply every resolution by ``scale`` (rings to a multiple of 4, grids even)."""
    if scale <= 0:
        raise ConfigError("resolution scale must be positive")
    return {
        "rings": max(16, 4 * round(res["rings"] * scale / 4)),
        "sl_grid": max(32, 2 * round(res["sl_grid"] * scale / 2)),
        "n_r": max(8, round(res["n_r"] * scale)),
        "n_theta": max(8, round(res["n_theta"] * scale)),
    }


def build_domain(cfg: dict) -> ConformalDomain:
    res = cfg["resolutions"]
    try:
        return ConformalDomain.from_dict(cfg["domain"], n_r=res["n_r"], n_theta=res["n_theta"])
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid domain: {exc}") from exc


# the chain -----------------------------------------------------------------

def fem_mu2(domain: ConformalDomain, rings: int):
    """``mu_2`` on three nested ring meshes, Richardson-extrapolated.

    Returns ``(extrapolated, raw, error)``: ``raw`` is the value on the finest
    mesh and ``error`` the change of the extrapolant between the two coarser
    pairs.  P1 eigenvalues on these meshes have an ``h^2`` expansion, so the
    extrapolant is markedly more accurate than ``raw``.
    """
    mus = [solve_neumann_weighted(build_disk_mesh(r), domain.rho2, 3).mu2
           for r in (rings // 4, rings // 2, rings)]
    ext_coarse = mus[1] + (mus[1] - mus[0]) / 3.0
    ext = mus[2] + (mus[2] - mus[1]) / 3.0
    return ext, mus[2], abs(ext - ext_coarse)


@dataclass
class VerificationReport:
    """Result of :func:`verify_chain`; ``to_dict`` is deterministic (no timings)."""

    data: dict
    timings: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.data["verdicts"]["pass"])

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)

    def to_json(self) -> str:
        return json.dumps(self.data, indent=2, sort_keys=False) + "\n"


def _c(z: complex):
    return [float(z.real), float(z.imag)]


def verify_chain(config, resolution_scale: float = 1.0) -> VerificationReport:
    """Run the chain for one domain config and judge it with ``eps_tot``."""
    cfg = load_config(config)
    res = scale_resolutions(cfg["resolutions"], resolution_scale)
    cfg["resolutions"] = res
    tol_V = cfg["tolerances"]["residual_V"]
    timings = {}

    t0 = time.perf_counter()
    domain = build_domain(cfg)
    M = domain.M
    R_star = area_to_radius(M)
    timings["domain"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    pole = find_balanced_pole(domain, tol=tol_V, n=res["sl_grid"])
    timings["pole"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    n = res["sl_grid"]
    density = domain.density(pole.q)
    kappa = solve_radial_weighted(density, 1, n).kappa1
    kappa_half = solve_radial_weighted(density, 1, n // 2).kappa1
    kappa_profile = solve_sl_G(profile_G(density, n), 1, refinement_rtol=None).kappa1
    timings["radial"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    n_cap = 4 * n if R_star > NEAR_ANTIPODE_R else n
    cap = cap_mu2(R_star, n=n_cap)
    cap_half = cap_mu2(R_star, n=n_cap // 2).mu11
    timings["cap"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    mu2, mu2_raw, fem_err = fem_mu2(domain, res["rings"])
    timings["fem"] = time.perf_counter() - t0

    sl_err = abs(kappa - kappa_half) / 3.0 + abs(cap.mu11 - cap_half) / 3.0
    eps_tot = 2.0 * (fem_err + sl_err)
    d1 = kappa - mu2
    d2 = cap.mu11 - kappa
    data = {
        "domain": domain.to_dict(),
        "resolutions": res,
        "tolerances": {"residual_V": tol_V, "eps_tot": eps_tot},
        "M": M,
        "R_star": R_star,
        "pole": {"q": _c(pole.q), "residual_V": pole.residual, "winding": pole.winding,
                 "iterations": pole.iterations, "candidates": pole.candidates},
        "mu2_domain": mu2,
        "mu2_domain_finest_mesh": mu2_raw,
        "kappa1": kappa,
        "kappa1_profile_form": kappa_profile,
        "mu2_cap": cap.mu11,
        "mu02_cap": cap.mu02,
        "error_estimates": {"fem": fem_err, "sl": sl_err},
        "chain": {"kappa1_minus_mu2": d1, "mu2_cap_minus_kappa1": d2,
                  "mu2_cap_minus_mu2": cap.mu11 - mu2},
        "near_equality": {"mu2_kappa1": abs(d1) <= eps_tot, "kappa1_mu2_cap": abs(d2) <= eps_tot},
        "verdicts": {"mu2_le_kappa1": d1 >= -eps_tot, "kappa1_le_mu2_cap": d2 >= -eps_tot},
    }
    data["verdicts"]["pass"] = all(data["verdicts"].values())
    for key, value in _walk_numbers(data):
        if not np.isfinite(value):
            raise FloatingPointError(f"non-finite value in report field {key}")
    return VerificationReport(data, timings)


def _walk_numbers(obj, prefix=""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _walk_numbers(v, f"{prefix}.{k}" if prefix else k)
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            yield from _walk_numbers(v, f"{prefix}[{i}]")
    elif isinstance(obj, float):
        yield prefix, obj


# monotonicity sweep --------------------------------------------------------

def _shape(name: str, M: float):
    if name == "parabola":
        return lambda a: a * (M - a) / M**2
    if name == "bump":
        return lambda a: 16.0 * (a * (M - a)) ** 2 / M**4
    raise ConfigError(f"unknown perturbation shape {name!r}")


def profile_from_spec(spec, M: float, n: int, domain: ConformalDomain | None = None,
                      pole: complex = 0.0) -> ProfileFunction:
    """Build a profile from ``"cap"``, ``"euclidean"``, ``"domain"`` or a dict spec.

    A dict has ``kind`` plus an optional ``perturbation`` ``{"shape", "amplitude"}``
    adding ``amplitude * a (M - a) / M^2`` (parabola) or
    ``amplitude * 16 a^2 (M - a)^2 / M^4`` (bump) to the base profile.  Both keep
    the ``4 pi a`` behaviour at ``a = 0``.
    """
    if isinstance(spec, str):
        spec = {"kind": spec}
    kind = spec.get("kind")
    if kind == "cap":
        base = ProfileFunction.from_function(lambda a: a * (FOUR_PI - a), M, n, "cap")
    elif kind == "euclidean":
        base = ProfileFunction.from_function(lambda a: FOUR_PI * a, M, n, "euclidean")
    elif kind == "domain":
        if domain is None:
            raise ConfigError("profile kind 'domain' needs a domain")
        base = profile_G(domain.density(pole), n)
    else:
        raise ConfigError(f"unknown profile kind {kind!r}")
    pert = spec.get("perturbation")
    if not pert:
        return base
    f = _shape(pert.get("shape", "parabola"), M)
    amp = float(pert.get("amplitude", 1.0))
    c, fc = sqrt_grid(M, n)
    return ProfileFunction(M, base.values + amp * f(c), base.face_values + amp * f(fc),
                           f"{base.label}+{amp:g}{pert.get('shape', 'parabola')}")


@dataclass(frozen=True)
class SweepTable:
    t: np.ndarray
    kappa: np.ndarray
    t_mid: np.ndarray
    fh: np.ndarray
    fd: np.ndarray

    @property
    def nonincreasing(self) -> bool:
        return bool(np.all(np.diff(self.kappa) <= 1e-12 * np.abs(self.kappa[:-1])))

    @property
    def relative_disagreement(self) -> np.ndarray:
        scale = np.maximum(np.abs(self.fd), 1e-12)
        return np.abs(self.fh - self.fd) / scale

    def rows(self):
        yield ("t", "kappa1")
        yield from zip(self.t.tolist(), self.kappa.tolist())

    def derivative_rows(self):
        yield ("t", "feynman_hellmann", "finite_difference")
        yield from zip(self.t_mid.tolist(), self.fh.tolist(), self.fd.tolist())


def monotonicity_sweep(G0: ProfileFunction, G1: ProfileFunction, steps: int = 10,
                       h: float = 1e-3, order_rtol: float = 1e-10) -> SweepTable:
    """``kappa_1`` along ``G_t = (1 - t) G0 + t G1`` and FH-vs-FD checks at midpoints."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    slack = order_rtol * np.abs(G1.values)
    if G0.n != G1.n or np.any(G0.values > G1.values + slack) or \
            np.any(G0.face_values[1:-1] > G1.face_values[1:-1] + order_rtol * G1.face_values[1:-1]):
        raise ProfileOrderError("sweep needs G0 <= G1 nodewise on a shared grid")

    def kappa(t):
        return solve_sl_G(G0.blend(G1, t), 1, refinement_rtol=None).kappa1

    t = np.linspace(0.0, 1.0, steps + 1)
    kap = np.array([kappa(s) for s in t])
    mid = 0.5 * (t[1:] + t[:-1])
    fh = np.array([feynman_hellmann_derivative(G0, G1, s) for s in mid])
    fd = np.array([(kappa(s + h) - kappa(s - h)) / (2.0 * h) for s in mid])
    return SweepTable(t, kap, mid, fh, fd)


# isoperimetric profile check -----------------------------------------------

@dataclass(frozen=True)
class ProfileCheckTable:
    a: np.ndarray
    G: np.ndarray
    cap: np.ndarray
    L2: np.ndarray
    rtol: float

    @property
    def lower_holds(self) -> bool:
        return bool(np.all(self.cap <= self.L2 * (1 + self.rtol)))

    @property
    def upper_holds(self) -> bool:
        return bool(np.all(self.L2 <= self.G * (1 + self.rtol)))

    @property
    def holds(self) -> bool:
        return self.lower_holds and self.upper_holds

    def rows(self):
        yield ("a", "G", "a(4pi-a)", "L^2")
        yield from zip(self.a.tolist(), self.G.tolist(), self.cap.tolist(), self.L2.tolist())


def isoperimetric_profile_check(domain: ConformalDomain, q: complex = 0.0, n: int = 2048,
                                rtol: float = 1e-9) -> ProfileCheckTable:
    """Tabulate ``a (4 pi - a) <= L(a)^2 <= G_q(a)`` at the profile grid centres."""
    density = domain.density(q)
    prof = profile_G(density, n)
    a = prof.centers
    L = density.level_curve_length(a)
    return ProfileCheckTable(a, prof.values, a * (FOUR_PI - a), L**2, rtol)
