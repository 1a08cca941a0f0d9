"""Nystrom discretizations and spectra of the two volume operators.

Two operators drive the resonances:

- the volumetric logarithmic (Newtonian) potential with kernel
  -(1/2pi) ln|x-y|, discretized cell-by-cell with an exact equal-area-disc
  self integral on the diagonal;
- the magnetization operator, the Hessian-type kernel acting on gradients of
  harmonic functions, whose strongly singular self cell is the principal
  value of an equal-area disc: a (1/2) Identity block.

Eigen-decompositions are done in the area-weighted inner product, so the
returned eigenvectors are orthonormal in discrete L2 of the particle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DegenerateBasisError, MeshError
from .geometry import ParticleMesh

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class EigenSystem:
    """Ordered eigenpairs of a discretized volume operator.

    ``eigenvalues`` are sorted descending.  ``eigenvectors`` has shape
    (k, n_cells) for scalar operators and (k, n_cells, 2) for vector ones,
    orthonormal w.r.t. the area-weighted inner product.  ``means`` holds the
    cell-integral of each eigenfunction (scalar, or 2-vector per entry).
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    means: np.ndarray
    operator_tag: str  # "LogPotential" | "Magnetization"

    def mode_with_largest_mean(self) -> int:
        norms = np.linalg.norm(self.means.reshape(len(self.eigenvalues), -1), axis=1)
        return int(np.argmax(norms))

    def mean_norm(self, n: int) -> float:
        m = self.means[n]
        return float(np.linalg.norm(np.atleast_1d(m)))


# ---------------------------------------------------------------------------
# Logarithmic potential
# ---------------------------------------------------------------------------


def log_self_integral(area: float) -> float:
    """Exact integral of -(1/2pi) ln|y| over the disc of the same area."""
    rho = math.sqrt(area / math.pi)
    return rho * rho * (0.25 - 0.5 * math.log(rho))


def assemble_log_potential(mesh: ParticleMesh) -> np.ndarray:
    """Dense Nystrom matrix of the logarithmic potential on the mesh cells.

    Entry (i, j) = -(1/2pi) ln|x_i - x_j| * area_j for i != j; the diagonal
    carries the exact equal-area-disc self integral.  The matrix acts on
    nodal values; symmetry holds after weighting by sqrt(area).
    """
    pts = mesh.centroids
    d = pts[:, None, :] - pts[None, :, :]
    r = np.sqrt(np.einsum("ijk,ijk->ij", d, d))
    n = mesh.n_cells
    if np.any((r == 0.0) & ~np.eye(n, dtype=bool)):
        raise MeshError("coincident distinct cell centroids")
    np.fill_diagonal(r, 1.0)
    a = np.log(r) * (-1.0 / _TWO_PI) * mesh.areas[None, :]
    np.fill_diagonal(a, [log_self_integral(ai) for ai in mesh.areas])
    return a


def log_potential_eval(mesh: ParticleMesh, density: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Potential of a cell density at arbitrary off-centroid points."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    d = points[:, None, :] - mesh.centroids[None, :, :]
    r = np.sqrt(np.einsum("ijk,ijk->ij", d, d))
    if np.any(r == 0.0):
        raise MeshError("evaluation point coincides with a cell centroid")
    return (np.log(r) * (-1.0 / _TWO_PI)) @ (density * mesh.areas)


def weighted_symmetrize(matrix: np.ndarray, weights: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Similarity transform W^(1/2) A W^(-1/2); fails if not symmetric within tol."""
    s = np.sqrt(weights)
    sym = matrix * (s[:, None] / s[None, :])
    skew = np.max(np.abs(sym - sym.T))
    scale = max(np.max(np.abs(sym)), 1e-300)
    if skew > tol * scale:
        raise MeshError(f"matrix not symmetric in the weighted inner product ({skew:.3e})")
    return 0.5 * (sym + sym.T)


def eigs(matrix: np.ndarray, weights: np.ndarray, operator_tag: str = "LogPotential") -> EigenSystem:
    """Full spectrum of a Nystrom matrix in the area-weighted inner product.

    Returns eigenvalues in descending order with eigenvectors normalized so
    that sum_i e_n(x_i)^2 area_i = 1, plus the cell-integral means.
    """
    weights = np.asarray(weights, dtype=float)
    sym = weighted_symmetrize(matrix, weights)
    vals, vecs = np.linalg.eigh(sym)
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    vecs = vecs[:, order]
    # back to nodal values: e = W^(-1/2) v, orthonormal under sum e e' a
    nodal = vecs / np.sqrt(weights)[:, None]
    means = nodal.T @ weights
    sign = np.where(means < 0.0, -1.0, 1.0)
    # zero-mean modes: fix sign by the first significant nodal value instead
    tiny = np.abs(means) < 1e-12 * np.linalg.norm(nodal, axis=0)
    if tiny.any():
        lead = nodal[np.argmax(np.abs(nodal), axis=0), np.arange(nodal.shape[1])]
        sign = np.where(tiny, np.where(lead < 0.0, -1.0, 1.0), sign)
    nodal = nodal * sign[None, :]
    means = means * sign
    return EigenSystem(vals, nodal.T.copy(), means, operator_tag)


def power_iteration_top(matrix: np.ndarray, weights: np.ndarray,
                        iters: int = 4000, tol: float = 1e-13) -> tuple[float, np.ndarray]:
    """Independent oracle: dominant eigenpair by plain power iteration."""
    sym = weighted_symmetrize(matrix, weights)
    v = np.ones(sym.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = sym @ v
        lam_new = float(v @ w)
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            break
        v = w / nrm
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            lam = lam_new
            break
        lam = lam_new
    return lam, v / np.sqrt(weights)


# ---------------------------------------------------------------------------
# Magnetization operator
# ---------------------------------------------------------------------------
#
# The dipole kernel (1/2pi)(I - 2 rr^T/r^2)/r^2 is strongly singular, so a
# bare midpoint rule does not converge near the diagonal.  The discretization
# therefore subtracts the singularity: the operator is written as
#     M[F](x) = int K(x,y) (F(y) - F(x)) dy  +  T(x) F(x),
# where T(x) = int_Omega K(x,y) dy is computed exactly as a boundary integral
# (the distributional total includes the delta part, 1/2 Identity on a disc).
# Discretely this amounts to a deflected diagonal block
#     A_ii = T(x_i) - sum_{j != i} K(x_i, x_j) area_j,
# which makes the scheme exact on constant fields.


def _fine_boundary(mesh: ParticleMesh, n: int = 1024) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Dedicated fine boundary quadrature from the exact shape parametrization."""
    z, d = mesh.center_z, mesh.delta
    t = _TWO_PI * (np.arange(n) + 0.5) / n
    if mesh.shape_tag[0] == "disc":
        nodes = z + d * np.stack([np.cos(t), np.sin(t)], axis=-1)
        normals = np.stack([np.cos(t), np.sin(t)], axis=-1)
        weights = np.full(n, _TWO_PI * d / n)
    elif mesh.shape_tag[0] == "ellipse":
        a, b = mesh.shape_tag[1], mesh.shape_tag[2]
        nodes = z + d * np.stack([a * np.cos(t), b * np.sin(t)], axis=-1)
        speed = d * np.sqrt((a * np.sin(t)) ** 2 + (b * np.cos(t)) ** 2)
        weights = speed * (_TWO_PI / n)
        normals = np.stack([b * np.cos(t), a * np.sin(t)], axis=-1)
        normals /= np.linalg.norm(normals, axis=1)[:, None]
    else:
        return mesh.bnodes, mesh.bnormals, mesh.barc
    return nodes, normals, weights


def magnetization_domain_integral(mesh: ParticleMesh, targets: np.ndarray) -> np.ndarray:
    """T(p) = int_Omega K(p, y) dy for interior p, via the boundary form.

    T_ij(p) = -(1/2pi) oint (p-y)_i nu_j(y) / |p-y|^2 dsigma(y); on a disc this
    is (1/2) Identity for every interior point.
    """
    nodes, normals, weights = _fine_boundary(mesh)
    d = targets[:, None, :] - nodes[None, :, :]
    r2 = np.einsum("pbk,pbk->pb", d, d)
    coef = weights[None, :] / (-_TWO_PI * r2)
    t = np.einsum("pb,pbi,bj->pij", coef, d, normals)
    return 0.5 * (t + np.transpose(t, (0, 2, 1)))


def _dipole_blocks(targets: np.ndarray, sources: np.ndarray, areas: np.ndarray,
                   self_pairs: np.ndarray | None = None) -> tuple[np.ndarray, ...]:
    """Off-diagonal Nystrom blocks of the dipole kernel; self pairs zeroed."""
    dx = targets[:, 0, None] - sources[None, :, 0]
    dy = targets[:, 1, None] - sources[None, :, 1]
    r2 = dx * dx + dy * dy
    safe = r2.copy()
    if self_pairs is not None:
        safe[self_pairs] = 1.0
    inv = 1.0 / (_TWO_PI * safe)
    axx = (1.0 - 2.0 * dx * dx / safe) * inv * areas[None, :]
    ayy = (1.0 - 2.0 * dy * dy / safe) * inv * areas[None, :]
    axy = (-2.0 * dx * dy / safe) * inv * areas[None, :]
    if self_pairs is not None:
        axx[self_pairs] = 0.0
        ayy[self_pairs] = 0.0
        axy[self_pairs] = 0.0
    return axx, axy, ayy


def apply_magnetization(mesh: ParticleMesh, field: np.ndarray, chunk: int = 1024) -> np.ndarray:
    """Apply the magnetization operator to per-cell 2-vector fields.

    ``field`` has shape (n_cells, 2) or (n_fields, n_cells, 2); the output
    matches.  Evaluation is chunked over target cells to bound memory.
    """
    single = field.ndim == 2
    f = field[None, :, :] if single else field
    if not np.all(np.isfinite(f)):
        raise MeshError("field must be finite")
    n = mesh.n_cells
    out = np.empty((f.shape[0], n, 2), dtype=np.result_type(f.dtype, float))
    fx = np.ascontiguousarray(f[:, :, 0]).T  # (n, nf)
    fy = np.ascontiguousarray(f[:, :, 1]).T
    total = magnetization_domain_integral(mesh, mesh.centroids)
    cols = np.arange(n)
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        idx = np.arange(start, stop)
        self_pairs = idx[:, None] == cols[None, :]
        axx, axy, ayy = _dipole_blocks(mesh.centroids[start:stop], mesh.centroids,
                                       mesh.areas, self_pairs)
        # deflected diagonal: exact domain integral minus the off-diagonal row sum
        dxx = total[start:stop, 0, 0] - axx.sum(axis=1)
        dxy = total[start:stop, 0, 1] - axy.sum(axis=1)
        dyy = total[start:stop, 1, 1] - ayy.sum(axis=1)
        axx[self_pairs] = dxx
        axy[self_pairs] = dxy
        ayy[self_pairs] = dyy
        out[:, start:stop, 0] = (axx @ fx + axy @ fy).T
        out[:, start:stop, 1] = (axy @ fx + ayy @ fy).T
    return out[0] if single else out


def magnetization_matrix(mesh: ParticleMesh) -> np.ndarray:
    """Dense (2n, 2n) Nystrom matrix of the magnetization operator.

    Layout: interleaved components, unknowns (F_1x, F_1y, F_2x, ...).
    """
    n = mesh.n_cells
    pts, areas = mesh.centroids, mesh.areas
    self_pairs = np.eye(n, dtype=bool)
    axx, axy, ayy = _dipole_blocks(pts, pts, areas, self_pairs)
    total = magnetization_domain_integral(mesh, pts)
    idx = np.arange(n)
    axx[idx, idx] = total[:, 0, 0] - axx.sum(axis=1)
    axy[idx, idx] = total[:, 0, 1] - axy.sum(axis=1)
    ayy[idx, idx] = total[:, 1, 1] - ayy.sum(axis=1)
    out = np.empty((2 * n, 2 * n))
    out[0::2, 0::2] = axx
    out[0::2, 1::2] = axy
    out[1::2, 0::2] = axy
    out[1::2, 1::2] = ayy
    return out


def harmonic_gradient_basis(mesh: ParticleMesh, degree_max: int) -> np.ndarray:
    """Gradients of the harmonic polynomials Re/Im (x+iy)^m, m = 1..degree_max.

    Returns (2*degree_max, n_cells, 2) samples at the cell centroids, in local
    coordinates of the particle (translated to its center, scaled by delta).
    """
    if degree_max < 1:
        raise DegenerateBasisError("basis degree must be >= 1")
    xi = (mesh.centroids - mesh.center_z) / mesh.delta
    w = xi[:, 0] + 1j * xi[:, 1]
    fields = []
    for m in range(1, degree_max + 1):
        wm = m * w ** (m - 1)
        fields.append(np.stack([wm.real, -wm.imag], axis=-1))  # grad Re w^m
        fields.append(np.stack([wm.imag, wm.real], axis=-1))   # grad Im w^m
    return np.array(fields)


def _cluster_and_align(vals: np.ndarray, vecs: np.ndarray, areas: np.ndarray,
                       atol: float = 0.015) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Rotate eigenvectors inside (near-)degenerate clusters to concentrate means.

    Discrete eigenvectors of a degenerate eigenvalue are an arbitrary
    orthonormal basis of the eigenspace; an SVD of the cluster means picks a
    deterministic one with at most two mean-carrying modes up front.
    Signs are fixed so the dominant mean component is nonnegative.
    """
    k = len(vals)
    means = np.einsum("knd,n->kd", vecs, areas)
    start = 0
    while start < k:
        stop = start + 1
        while stop < k and abs(vals[stop] - vals[start]) <= atol:
            stop += 1
        c = stop - start
        if c > 1:
            mc = means[start:stop].T  # (2, c)
            _, _, vt = np.linalg.svd(mc, full_matrices=True)
            rot = vt.T  # (c, c)
            vecs[start:stop] = np.einsum("jc,jnd->cnd", rot, vecs[start:stop])
            means[start:stop] = np.einsum("knd,n->kd", vecs[start:stop], areas)
            norms = np.linalg.norm(means[start:stop], axis=1)
            order = np.argsort(-norms, kind="stable")
            vecs[start:stop] = vecs[start:stop][order]
            means[start:stop] = means[start:stop][order]
            vals[start:stop] = vals[start:stop][order]
        start = stop
    for j in range(k):
        m = means[j]
        lead = m[np.argmax(np.abs(m))] if np.linalg.norm(m) > 1e-12 else \
            vecs[j].ravel()[np.argmax(np.abs(vecs[j]))]
        if lead < 0.0:
            vecs[j] = -vecs[j]
            means[j] = -means[j]
    return vals, vecs, means


def eigs_magnetization_harmonic(mesh: ParticleMesh, basis: np.ndarray) -> EigenSystem:
    """Galerkin projection of the magnetization operator onto a harmonic-gradient span.

    Solves the small generalized symmetric eigenproblem A v = lambda G v with
    A_kl = <B_k, M B_l> and Gram G_kl = <B_k, B_l> in the area-weighted inner
    product, then returns nodal eigenfunctions, descending eigenvalues, and
    their cell-integral means (degenerate clusters aligned deterministically).
    """
    areas = mesh.areas
    mb = apply_magnetization(mesh, basis)
    gram = np.einsum("knd,lnd,n->kl", basis, basis, areas)
    proj = np.einsum("knd,lnd,n->kl", basis, mb, areas)
    proj = 0.5 * (proj + proj.T)
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > 1e12:
        raise DegenerateBasisError(f"Gram matrix is numerically rank deficient (cond={cond:.3e})")
    vals, coef = scipy.linalg.eigh(proj, gram)
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    coef = coef[:, order]
    vecs = np.einsum("kc,knd->cnd", coef, basis)  # (modes, n, 2), G-orthonormal
    vals, vecs, means = _cluster_and_align(vals.copy(), vecs, areas)
    return EigenSystem(vals, vecs, means, "Magnetization")
