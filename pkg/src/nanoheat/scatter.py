"""Volume-integral (Lippmann-Schwinger) solvers for the TM and TE problems.

TM solves for the field gradient u = grad H:

    u(x) - alpha * int_Omega K^k(x,y) u(y) dy = grad H_in(x),

with K^k the second-gradient kernel of the outgoing 2D free-space kernel
(i/4) H0^(1)(k|x-y|).  The static part of K^k is the magnetization kernel and
reuses the deflected Nystrom matrix of :mod:`nanoheat.spectral`; the remainder
K^k - K^0 is only log-singular and is evaluated through ascending series in
(k r)^2, which stays accurate down to r = 0 without catastrophic cancellation.

TE solves the scalar equation

    E(x) - omega^2 mu_m tau_p * int_Omega G^k(x,y) E(y) dy = E_in(x)

with the same static/difference split of G^k.

Both systems are solved densely by LU with partial pivoting; near-singular
systems (condition above 1e12) raise ResonanceTooExactError.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from .errors import DomainError, ResonanceTooExactError, ShapeError
from .geometry import ParticleMesh
from .specfun import EULER_GAMMA, bessel_j0, bessel_j1, bessel_y0
from .spectral import EigenSystem, assemble_log_potential, log_self_integral, magnetization_matrix

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class IncidentWave:
    """Plane wave at angular frequency omega traveling along a unit direction."""

    omega: float
    direction: np.ndarray
    mu_m: float = 1.0
    eps_m: float = 1.0
    amplitude: complex = 1.0

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float).reshape(2)
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise DomainError("incident direction must be a unit vector")
        object.__setattr__(self, "direction", d)
        if self.omega <= 0:
            raise DomainError("omega must be positive")

    @property
    def k(self) -> float:
        return self.omega * math.sqrt(self.mu_m * self.eps_m)

    def h_field(self, points: np.ndarray) -> np.ndarray:
        phase = self.k * (np.asarray(points) @ self.direction)
        return self.amplitude * np.exp(1j * phase)

    def grad_h_field(self, points: np.ndarray) -> np.ndarray:
        return 1j * self.k * self.h_field(points)[:, None] * self.direction[None, :]

    def e_in_squared_at(self, point: np.ndarray, mode: str) -> float:
        """|E_in(point)|^2: amplitude^2 k^2 in TM (|grad H_in|), amplitude^2 in TE."""
        a2 = abs(self.amplitude) ** 2
        return a2 * self.k**2 if mode == "tm" else a2


@dataclass(frozen=True)
class ScatterSolution:
    """Solved field on the mesh cells with its energy and resonance data."""

    mode: str  # "tm" | "te"
    field: np.ndarray  # (n, 2) complex for TM, (n,) for TE
    energy: float  # integral of |E|^2 over the particle
    resonance_factor: float  # |1 - contrast * eigenvalue|^2 of the driven mode
    omega: float
    residual: float
    condition: float

    def energy_check(self, mesh: ParticleMesh) -> float:
        dens = np.abs(self.field) ** 2
        if dens.ndim == 2:
            dens = dens.sum(axis=1)
        return float(dens @ mesh.areas)


# ---------------------------------------------------------------------------
# Series for the smooth kernel difference
# ---------------------------------------------------------------------------


def _hankel_offset(k: float) -> complex:
    """C_k = value of (i/4)H0(kr) + (1/2pi) ln r at r -> 0."""
    return 0.25j - (math.log(0.5 * k) + EULER_GAMMA) / _TWO_PI


def _series_pq(u: np.ndarray, terms: int = 24):
    """Ascending series in u = (kr)^2/4 for the kernel-difference building blocks.

    Returns (p2, p1, ppp, s2, s1, spp) with
      P(z) = J0(z)-1,  p2 = P/z^2,  p1 = P'/z,  ppp = P'',
      S(z) = sum (-1)^(m+1) H_m u^m/(m!)^2,  s2 = S/z^2,  s1 = S'/z,  spp = S''.
    """
    shape = u.shape
    p2 = np.zeros(shape); p1 = np.zeros(shape); g = np.zeros(shape); gp = np.zeros(shape)
    s2 = np.zeros(shape); s1 = np.zeros(shape); h = np.zeros(shape); hp = np.zeros(shape)
    coef = 1.0  # 1/(m!)^2 iteratively
    um1 = np.ones_like(u)  # u^(m-1)
    um2 = np.zeros_like(u)  # u^(m-2)
    harm = 0.0
    for m in range(1, terms + 1):
        coef /= m * m
        harm += 1.0 / m
        sgn = -1.0 if m % 2 else 1.0
        base = sgn * coef * um1
        p2 += base * 0.25
        p1 += base * (0.5 * m)
        g += base * m
        s2 += -base * harm * 0.25
        s1 += -base * (0.5 * m) * harm
        h += -base * m * harm
        if m >= 2:
            gp += sgn * coef * m * (m - 1) * um2
            hp += -sgn * coef * m * (m - 1) * harm * um2
        um2 = um1 if m == 1 else um2 * u
        um1 = um1 * u
    ppp = 0.5 * g + u * gp
    spp = 0.5 * h + u * hp
    return p2, p1, ppp, s2, s1, spp


def te_kernel_difference(r: np.ndarray, k: float) -> np.ndarray:
    """D(r) = (i/4)H0(kr) + (1/2pi) ln r, via ascending series (entire in kr)."""
    r = np.asarray(r, dtype=float)
    z = k * r
    u = 0.25 * z * z
    p2, _, _, s2, _, _ = _series_pq(u)
    ln_r = np.log(np.where(r == 0.0, 1.0, r))
    ck = _hankel_offset(k)
    p = p2 * z * z
    s = s2 * z * z
    return -ln_r * p / _TWO_PI + ck * (1.0 + p) - s / _TWO_PI


def te_kernel_difference_prime(r: np.ndarray, k: float) -> np.ndarray:
    """d/dr of te_kernel_difference (used for exact equal-area-disc integrals)."""
    r = np.asarray(r, dtype=float)
    z = k * r
    u = 0.25 * z * z
    p2, p1, _, s2, s1, _ = _series_pq(u)
    ln_r = np.log(np.where(r == 0.0, 1.0, r))
    ck = _hankel_offset(k)
    p_over_r = p2 * k * k * r
    pp = p1 * k * k * r  # k P'(z)
    sp = s1 * k * k * r
    return -(p_over_r + ln_r * pp) / _TWO_PI + ck * pp - sp / _TWO_PI


def tm_kernel_difference_blocks(dx: np.ndarray, dy: np.ndarray, k: float):
    """(Axx, Axy, Ayy) of K^k - K^0 = -Hess(D) at displacement (dx, dy)."""
    r2 = dx * dx + dy * dy
    r = np.sqrt(r2)
    z = k * r
    u = 0.25 * z * z
    p2, p1, ppp, s2, s1, spp = _series_pq(u)
    ln_r = np.log(np.where(r == 0.0, 1.0, r))
    ck = _hankel_offset(k)
    k2 = k * k
    # D = -(ln r/2pi) P + Q + C_k, Q = C_k P - S/2pi
    dpr = -(k2 / _TWO_PI) * (p2 + ln_r * p1) + k2 * (ck * p1 - s1 / _TWO_PI)  # D'/r
    dpp = -(1.0 / _TWO_PI) * (-k2 * p2 + 2.0 * k2 * p1 + k2 * ln_r * ppp) \
        + k2 * (ck * ppp - spp / _TWO_PI)  # D''
    safe = np.where(r2 == 0.0, 1.0, r2)
    exx = dx * dx / safe
    eyy = dy * dy / safe
    exy = dx * dy / safe
    axx = -(dpp * exx + dpr * (1.0 - exx))
    ayy = -(dpp * eyy + dpr * (1.0 - eyy))
    axy = -(dpp - dpr) * exy
    return axx, axy, ayy


# ---------------------------------------------------------------------------
# Dense solvers
# ---------------------------------------------------------------------------


def _lu_solve_with_condition(a: np.ndarray, b: np.ndarray, resonance_factor: float):
    anorm = np.linalg.norm(a, 1)
    lu, piv = scipy.linalg.lu_factor(a)
    rcond, _ = lapack.zgecon(lu, anorm, norm="1")
    cond = np.inf if rcond == 0 else 1.0 / rcond
    if cond > 1e12:
        raise ResonanceTooExactError(cond, resonance_factor)
    x = scipy.linalg.lu_solve((lu, piv), b)
    residual = np.linalg.norm(a @ x - b) / max(np.linalg.norm(b), 1e-300)
    return x, residual, cond


def _te_system_matrix(mesh: ParticleMesh, k: float) -> np.ndarray:
    """Nystrom matrix of int G^k(x,.) dy: static log part + smooth difference."""
    n0 = assemble_log_potential(mesh).astype(complex)
    pts = mesh.centroids
    d = pts[:, None, :] - pts[None, :, :]
    r = np.sqrt(np.einsum("ijk,ijk->ij", d, d))
    diff = te_kernel_difference(r, k) * mesh.areas[None, :]
    # diagonal: 2pi int_0^rho D(r) r dr over the equal-area disc (Gauss rule)
    xg, wg = np.polynomial.legendre.leggauss(16)
    rho = mesh.equivalent_radii()
    rg = 0.5 * rho[:, None] * (xg[None, :] + 1.0)
    wgt = 0.5 * rho[:, None] * wg[None, :]
    diag = _TWO_PI * np.sum(te_kernel_difference(rg, k) * rg * wgt, axis=1)
    idx = np.arange(mesh.n_cells)
    diff[idx, idx] = diag
    return n0 + diff


def _tm_system_matrix(mesh: ParticleMesh, k: float) -> np.ndarray:
    """Interleaved (2n, 2n) Nystrom matrix of the gradient-kernel operator."""
    m0 = magnetization_matrix(mesh).astype(complex)
    pts, areas = mesh.centroids, mesh.areas
    dx = pts[:, 0, None] - pts[None, :, 0]
    dy = pts[:, 1, None] - pts[None, :, 1]
    axx, axy, ayy = tm_kernel_difference_blocks(dx, dy, k)
    axx *= areas[None, :]
    axy *= areas[None, :]
    ayy *= areas[None, :]
    # diagonal of the difference: int over the equal-area disc = -pi rho D'(rho) I
    rho = mesh.equivalent_radii()
    diag = -math.pi * rho * te_kernel_difference_prime(rho, k)
    idx = np.arange(mesh.n_cells)
    axx[idx, idx] = diag
    ayy[idx, idx] = diag
    axy[idx, idx] = 0.0
    n = mesh.n_cells
    out = np.empty((2 * n, 2 * n), dtype=complex)
    out[0::2, 0::2] = axx
    out[0::2, 1::2] = axy
    out[1::2, 0::2] = axy
    out[1::2, 1::2] = ayy
    return m0 + out


def solve_tm(mesh: ParticleMesh, alpha: complex, wave: IncidentWave,
             lambda_n0: float | None = None) -> ScatterSolution:
    """Solve the gradient-form volume integral equation for grad H.

    ``alpha`` is the TM contrast 1/eps_p - 1/eps_m.  ``lambda_n0`` (if given)
    fixes the resonance factor |1 - alpha lambda_n0|^2 reported back.
    """
    rf = abs(1.0 - alpha * lambda_n0) ** 2 if lambda_n0 is not None else math.nan
    n = mesh.n_cells
    rhs = wave.grad_h_field(mesh.centroids).reshape(2 * n)
    if alpha == 0:
        u = rhs.copy()
        residual, cond = 0.0, 1.0
    else:
        a = np.eye(2 * n, dtype=complex) - alpha * _tm_system_matrix(mesh, wave.k)
        u, residual, cond = _lu_solve_with_condition(a, rhs, rf)
    fieldv = u.reshape(n, 2)
    energy = float(np.einsum("nd,nd,n->", np.abs(fieldv), np.abs(fieldv), mesh.areas))
    return ScatterSolution("tm", fieldv, energy, rf, wave.omega, residual, cond)


def solve_te(mesh: ParticleMesh, tau_p: complex, wave: IncidentWave, mu_m: float,
             lambda_n0: float | None = None) -> ScatterSolution:
    """Solve the scalar volume integral equation for the TE field E.

    ``tau_p`` is the TE contrast eps_p - eps_m; the kernel is scaled by
    omega^2 mu_m tau_p.  ``lambda_n0`` (if given, at particle scale) fixes the
    reported resonance factor |1 - omega^2 mu_m eps_p lambda_n0|^2, with
    eps_p = tau_p + eps_m.
    """
    rf = math.nan
    if lambda_n0 is not None:
        eps_p = tau_p + wave.eps_m
        rf = abs(1.0 - wave.omega**2 * mu_m * eps_p * lambda_n0) ** 2
    n = mesh.n_cells
    rhs = wave.h_field(mesh.centroids).astype(complex)
    coef = wave.omega**2 * mu_m * tau_p
    if coef == 0:
        u = rhs.copy()
        residual, cond = 0.0, 1.0
    else:
        a = np.eye(n, dtype=complex) - coef * _te_system_matrix(mesh, wave.k)
        u, residual, cond = _lu_solve_with_condition(a, rhs, rf)
    energy = float((np.abs(u) ** 2) @ mesh.areas)
    return ScatterSolution("te", u, energy, rf, wave.omega, residual, cond)


def born_approximation_tm(mesh: ParticleMesh, alpha: complex, wave: IncidentWave) -> np.ndarray:
    """First-order field grad H_in + alpha K^k[grad H_in] (contrast sweep oracle)."""
    n = mesh.n_cells
    rhs = wave.grad_h_field(mesh.centroids).reshape(2 * n)
    return (rhs + alpha * (_tm_system_matrix(mesh, wave.k) @ rhs)).reshape(n, 2)


def dominant_energy(kind: str, wave_at_z: float, eigensystem: EigenSystem,
                    resonance_factor: float, n0: int | None = None) -> float:
    """Leading-term energy |E_in(z)|^2 (mean of driven eigenfunction)^2 / factor."""
    if resonance_factor <= 0:
        raise DomainError("resonance_factor must be positive")
    if wave_at_z == 0:
        return 0.0
    if n0 is None:
        n0 = eigensystem.mode_with_largest_mean()
    mean_sq = eigensystem.mean_norm(n0) ** 2
    return wave_at_z * mean_sq / resonance_factor


def apriori_norms(solution: ScatterSolution, mesh: ParticleMesh) -> dict:
    """Field norms used in the delta-scaling diagnostics.

    ``field_norm``   L2 norm of the solved field (|grad H| in TM, |E| in TE);
    ``esq_norm``     L2 norm of the pointwise energy density |E|^2.
    """
    dens = np.abs(solution.field) ** 2
    if dens.ndim == 2:
        dens = dens.sum(axis=1)
    return {
        "field_norm": math.sqrt(float(dens @ mesh.areas)),
        "esq_norm": math.sqrt(float((dens * dens) @ mesh.areas)),
    }


def plane_wave(omega: float, direction, medium_mu: float, medium_eps: float,
               amplitude: complex = 1.0) -> IncidentWave:
    return IncidentWave(omega=omega, direction=np.asarray(direction, dtype=float),
                        mu_m=medium_mu, eps_m=medium_eps, amplitude=amplitude)
