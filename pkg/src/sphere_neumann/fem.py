"""P1 finite elements for the weighted Neumann problem on the unit disk.

The Neumann spectrum of a spherical domain is that of the disk with the
Euclidean Dirichlet form and the ``rho^2``-weighted mass, because the Dirichlet
integral is conformally invariant in two dimensions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .errors import ConvergenceError, SphereNeumannError

SHIFT = -1e-3


class NonPositiveWeightError(SphereNeumannError, ValueError):
    """The mass weight is not strictly positive at a quadrature point."""


@dataclass(frozen=True)
class DiskMesh:
    """Triangulation of the unit disk by concentric rings.

    Ring ``i`` (``1 <= i <= rings``) carries ``6 i`` vertices at radius
    ``i / rings``; vertex 0 is the centre.  Triangles are counter-clockwise.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary: np.ndarray
    rings: int

    @property
    def h(self) -> float:
        return 1.0 / self.rings

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    def edges(self) -> np.ndarray:
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        return np.unique(np.sort(e, axis=1), axis=0)

    def areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def dump(self, path) -> None:
        """Write ``v x y`` and ``t i j k`` lines (0-based vertex indices)."""
        with open(Path(path), "w") as fh:
            for x, y in self.vertices:
                fh.write(f"v {float(x)!r} {float(y)!r}\n")
            for i, j, k in self.triangles:
                fh.write(f"t {i} {j} {k}\n")


def build_disk_mesh(rings: int) -> DiskMesh:
    """Structured ring triangulation of the unit disk with ``h ~ 1 / rings``."""
    rings = int(rings)
    if rings < 4:
        raise ValueError("rings must be >= 4")
    pts = [np.zeros((1, 2))]
    start = [0]
    for i in range(1, rings + 1):
        m = 6 * i
        phi = 2.0 * np.pi * np.arange(m) / m
        pts.append(i / rings * np.column_stack([np.cos(phi), np.sin(phi)]))
        start.append(start[-1] + (1 if i == 1 else 6 * (i - 1)))
    verts = np.concatenate(pts)
    tris = []
    # innermost ring: fan around the centre
    for j in range(6):
        tris.append((0, 1 + j, 1 + (j + 1) % 6))
    for i in range(2, rings + 1):
        tris.extend(_stitch(start[i - 1], 6 * (i - 1), start[i], 6 * i))
    tris = np.asarray(tris, dtype=np.int64)
    boundary = np.zeros(len(verts), dtype=bool)
    boundary[start[rings]:] = True
    return DiskMesh(verts, tris, boundary, rings)


def _stitch(a0: int, na: int, b0: int, nb: int):
    """Triangulate the annulus between two rings by merging them by angle."""
    ta = np.arange(na + 1) / na
    tb = np.arange(nb + 1) / nb
    i = j = 0
    out = []
    while i < na or j < nb:
        # advance along whichever ring has the nearer next vertex
        if j < nb and (i == na or tb[j + 1] <= ta[i + 1]):
            out.append((a0 + i % na, b0 + j % nb, b0 + (j + 1) % nb))
            j += 1
        else:
            out.append((a0 + i % na, b0 + j % nb, a0 + (i + 1) % na))
            i += 1
    return out


def _edge_midpoints(mesh: DiskMesh) -> np.ndarray:
    p = mesh.vertices[mesh.triangles]
    mids = 0.5 * (p[:, [1, 2, 0]] + p[:, [2, 0, 1]])
    return mids[..., 0] + 1j * mids[..., 1]


def assemble(mesh: DiskMesh, weight: Callable | None = None):
    """P1 stiffness and ``weight``-weighted mass matrices (CSR, symmetric).

    ``weight`` maps complex points to positive values; ``None`` means 1.  The
    mass uses the edge-midpoint rule, exact for quadratics on each triangle.
    """
    tri = mesh.triangles
    p = mesh.vertices[tri]
    area = mesh.areas()
    if np.any(area <= 0.0):
        raise ValueError("mesh has non-positive triangle areas")
    # gradients of barycentric coordinates: rotate the opposite edge
    e = p[:, [2, 0, 1]] - p[:, [1, 2, 0]]
    grads = np.stack([-e[..., 1], e[..., 0]], axis=-1) / (2.0 * area[:, None, None])
    Kloc = area[:, None, None] * np.einsum("tik,tjk->tij", grads, grads)

    mids = _edge_midpoints(mesh)
    w = np.ones(mids.shape) if weight is None else np.asarray(weight(mids), dtype=float)
    if w.shape != mids.shape:
        w = np.broadcast_to(w, mids.shape)
    if not np.all(np.isfinite(w)) or np.any(w <= 0.0):
        raise NonPositiveWeightError("weight must be positive at every quadrature point")
    # midpoint m is opposite vertex m; barycentrics there are 1/2 on the other two
    phi = 0.5 * (1.0 - np.eye(3))
    Mloc = (area / 3.0)[:, None, None] * np.einsum("tm,mi,mj->tij", w, phi, phi)

    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    n = mesh.n_vertices
    K = sp.coo_matrix((Kloc.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    M = sp.coo_matrix((Mloc.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    return K, M


@dataclass(frozen=True)
class MeshEigenResult:
    """Lowest generalized eigenpairs ``K u = mu M u`` on a disk mesh."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    mesh: DiskMesh = field(repr=False)

    @property
    def mu2(self) -> float:
        return float(self.eigenvalues[1])


def _start_vector(n: int) -> np.ndarray:
    return 1.0 + 0.01 * np.sin(np.arange(n) * 0.7548776662466927)


def solve_neumann_weighted(mesh: DiskMesh, weight: Callable | None = None, count: int = 4,
                           operators=None, maxiter: int | None = None) -> MeshEigenResult:
    """Lowest ``count`` Neumann eigenpairs of the ``weight``-weighted problem.

    Shift-invert Lanczos about a small negative shift, which makes the shifted
    operator definite while keeping the zero mode resolved.
    """
    if count < 2:
        raise ValueError("count must be >= 2")
    K, M = assemble(mesh, weight) if operators is None else operators
    n = K.shape[0]
    try:
        vals, vecs = eigsh(K, k=count, M=M, sigma=SHIFT, which="LM",
                           v0=_start_vector(n), maxiter=maxiter)
    except ArpackNoConvergence as exc:
        raise ConvergenceError(f"shift-invert Lanczos did not converge: {exc}") from exc
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    # M-normalize and fix signs deterministically
    vecs /= np.sqrt(np.einsum("ik,ik->k", vecs, M @ vecs))
    for k in range(count):
        ref = vecs[:, k].sum() if k == 0 else vecs[np.argmax(np.abs(vecs[:, k])), k]
        if ref < 0:
            vecs[:, k] *= -1.0
    res = np.linalg.norm(K @ vecs - (M @ vecs) * vals, axis=0) / np.linalg.norm(vecs, axis=0)
    return MeshEigenResult(vals, vecs, res, mesh)
