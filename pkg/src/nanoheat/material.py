"""Dispersive particle permittivity and the two resonance frequency rules.

The particle follows a single-pole damped-oscillator (Lorentz) dispersion

    eps_p(omega, gamma) = eps_inf * (1 + omega_p^2 / (omega_0^2 - omega^2 - i gamma omega)).

Two ways of driving it near resonance are provided:

- ``select_plasmonic_frequency`` places omega^2 at the exact zero of
  1 - alpha(omega) lambda_n0 (alpha = 1/eps_p - 1/eps_m) and detunes it by
  c_freq * delta^h, with damping gamma*omega = c_damp * delta^h;
- ``select_dielectric_frequency`` places omega just below omega_0 so that the
  scalar resonance factor 1 - omega^2 mu_m eps_p lambda_n0 has real part
  c_freq / |log delta|^h, with damping sized so that Im(eps_p) scales like
  delta^-2 |log delta|^-(1+h+s).

Thermal conductivity is called kappa throughout this package; gamma always
means the electric damping parameter.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import AssumptionViolationError, CoefficientError, DomainError, RegimeError, SingularityError

PLASMONIC = "plasmonic"
DIELECTRIC = "dielectric"


@dataclass(frozen=True)
class LorentzMaterial:
    """Single-pole dispersive permittivity parameters."""

    omega_p: float  # plasma frequency
    omega_0: float  # undamped resonance frequency
    gamma_damp: float = 0.0  # damping, may be overridden per evaluation
    eps_inf: float = 1.0  # free-space permittivity scale

    def __post_init__(self):
        if self.omega_p <= 0 or self.omega_0 <= 0 or self.eps_inf <= 0:
            raise CoefficientError("omega_p, omega_0 and eps_inf must be positive")
        if self.gamma_damp < 0:
            raise CoefficientError("gamma_damp must be nonnegative")


@dataclass(frozen=True)
class HostMedium:
    """Non-dispersive host: electromagnetic and thermal constants.

    ``alpha_m`` is the diffusion constant rho_m c_m / kappa_m; if omitted it is
    derived, and an explicit inconsistent value is rejected.
    """

    eps_m: float = 1.0
    mu_m: float = 1.0
    rho_m: float = 1.0
    c_m: float = 1.0
    kappa_m: float = 1.0
    alpha_m: float = field(default=None)

    def __post_init__(self):
        for name in ("eps_m", "mu_m", "rho_m", "c_m", "kappa_m"):
            if getattr(self, name) <= 0:
                raise CoefficientError(f"{name} must be positive")
        derived = self.rho_m * self.c_m / self.kappa_m
        if self.alpha_m is None:
            object.__setattr__(self, "alpha_m", derived)
        elif self.alpha_m != derived:
            raise CoefficientError("alpha_m inconsistent with rho_m*c_m/kappa_m")


@dataclass(frozen=True)
class RegimeChoice:
    """Resonance regime and its exponents.

    ``h`` in (0,1) sets the detuning size; ``s`` >= 0 (dielectric only) sets
    the damping size; ``n0`` selects the eigenvalue; c_freq/c_damp scale the
    detuning and damping (the asymptotic laws fix only the exponents).
    """

    kind: str
    h: float
    s: float = 0.0
    n0: int = 0
    c_freq: float = 1.0
    c_damp: float = 1.0

    def __post_init__(self):
        if self.kind not in (PLASMONIC, DIELECTRIC):
            raise RegimeError(f"unknown regime kind {self.kind!r}")
        if not (0.0 < self.h < 1.0):
            raise RegimeError("exponent h must lie in (0, 1)")
        if self.kind == DIELECTRIC and self.s < 0.0:
            raise RegimeError("exponent s must be >= 0")


def permittivity(mat: LorentzMaterial, omega: float, gamma_damp: float | None = None) -> complex:
    """eps_p(omega, gamma); the imaginary part is >= 0 for omega, gamma >= 0."""
    if omega < 0:
        raise DomainError("omega must be nonnegative")
    gamma = mat.gamma_damp if gamma_damp is None else gamma_damp
    den = mat.omega_0**2 - omega**2 - 1j * gamma * omega
    if den == 0:
        raise SingularityError("undamped evaluation exactly at omega_0")
    return mat.eps_inf * (1.0 + mat.omega_p**2 / den)


def tm_contrast(eps_p: complex, eps_m: float) -> complex:
    """alpha = 1/eps_p - 1/eps_m."""
    if eps_p == 0:
        raise SingularityError("eps_p = 0 in tm_contrast")
    return 1.0 / eps_p - 1.0 / eps_m


def te_contrast(eps_p: complex, eps_m: float) -> complex:
    """tau_p = eps_p - eps_m."""
    return eps_p - eps_m


def te_contrast_relative(eps_p: complex, eps_inf: float) -> complex:
    """Alternative normalization eps_p/eps_inf - 1 (diagnostic output only)."""
    return eps_p / eps_inf - 1.0


def select_plasmonic_frequency(mat: LorentzMaterial, medium: HostMedium,
                               lambda_n0: float, delta: float,
                               choice: RegimeChoice) -> tuple[float, float]:
    """(omega, gamma) with |1 - alpha(omega) lambda_n0| of size delta^h.

    omega^2 = omega_0^2 + omega_p^2 (eps_m + lambda)/(lambda (1 - eps_m/eps_inf) + eps_m)
              + c_freq delta^h,   gamma omega = c_damp delta^h.
    With c_freq = 0 and gamma = 0 the contrast resonance is exact.
    """
    if not (0.0 < lambda_n0 < 1.0):
        raise RegimeError("plasmonic eigenvalue must lie in (0, 1)")
    if not (0.0 < delta):
        raise DomainError("delta must be positive")
    den = lambda_n0 * (1.0 - medium.eps_m / mat.eps_inf) + medium.eps_m
    if den == 0:
        raise RegimeError("degenerate eigenvalue/permittivity combination")
    shift = choice.c_freq * delta**choice.h
    omega2 = mat.omega_0**2 + mat.omega_p**2 * (medium.eps_m + lambda_n0) / den + shift
    if omega2 <= 0:
        raise RegimeError(f"selected omega^2 = {omega2:.6g} is not positive")
    omega = math.sqrt(omega2)
    gamma = choice.c_damp * delta**choice.h / omega
    return omega, gamma


def select_dielectric_frequency(mat: LorentzMaterial, medium: HostMedium,
                                lambda_bar_n0: float, delta: float,
                                choice: RegimeChoice) -> tuple[float, float]:
    """(omega, gamma) with |1 - omega^2 mu_m eps_p lambda_n0| of size |log delta|^-h.

    ``lambda_bar_n0`` is the scaled eigenvalue of the logarithmic potential,
    lambda_n0 / (delta^2 |log delta|), which stays O(1) as delta -> 0.

    The damping follows
        gamma omega = c_damp delta^2 |log delta|^(1-h-s) (lambda_bar mu_m omega_0^2)^2,
    which makes Im(eps_p) scale like delta^-2 |log delta|^-(1+h+s).  The
    frequency solves the true scalar resonance condition detuned by a relative
    c_freq |log delta|^-h, so omega_0^2 - omega^2 is of order
    delta^2 |log delta| (lambda_bar mu_m omega_0^2) with an eps_inf omega_p^2
    prefactor.  gamma omega must remain small against omega_0^2 - omega^2.
    """
    if lambda_bar_n0 <= 0:
        raise RegimeError("scaled log-potential eigenvalue must be positive")
    if not (0.0 < delta < 1.0):
        raise DomainError("delta must lie in (0, 1)")
    log_abs = abs(math.log(delta))
    lam = lambda_bar_n0 * delta**2 * log_abs  # eigenvalue at scale delta
    q_scale = lambda_bar_n0 * medium.mu_m * mat.omega_0**2
    g = choice.c_damp * delta**2 * log_abs ** (1.0 - choice.h - choice.s) * q_scale**2

    detune = choice.c_freq * log_abs ** (-choice.h)
    if detune >= 1.0:
        raise RegimeError(
            f"relative detuning c_freq |log delta|^-h = {detune:.3g} >= 1; delta too large")

    def resonance_gap(x: float) -> float:
        # Re[1 - (omega_0^2 - x) mu_m eps_p lambda] - detune, at gamma*omega = g
        eps_re = mat.eps_inf * (1.0 + mat.omega_p**2 * x / (x * x + g * g))
        return 1.0 - (mat.omega_0**2 - x) * medium.mu_m * eps_re * lam - detune

    # The gap dips below zero between the damping scale g (absorption peak)
    # and large x; the admissible root is the upper one, where the damping is
    # small against the frequency offset.
    lo = g
    hi = min(0.999 * mat.omega_0**2,
             1e6 * mat.eps_inf * mat.omega_p**2 * medium.mu_m * mat.omega_0**2 * lam)
    if not (resonance_gap(lo) < 0.0 < resonance_gap(hi)):
        raise RegimeError("no resonant frequency below omega_0 for these parameters "
                          "(damping too strong or detuning too large)")
    x = brentq(resonance_gap, lo, hi, xtol=1e-300, rtol=8.9e-16)
    omega = math.sqrt(mat.omega_0**2 - x)
    gamma = g / omega
    if not g < 0.5 * x:
        raise AssumptionViolationError(
            f"damping gamma*omega = {g:.3e} is not small against omega_0^2-omega^2 = {x:.3e}")
    return omega, gamma


def resonance_factor_tm(mat: LorentzMaterial, medium: HostMedium, omega: float,
                        gamma: float, lambda_n0: float) -> complex:
    """1 - alpha(omega, gamma) lambda_n0."""
    return 1.0 - tm_contrast(permittivity(mat, omega, gamma), medium.eps_m) * lambda_n0


def resonance_factor_te(mat: LorentzMaterial, medium: HostMedium, omega: float,
                        gamma: float, lambda_n0: float) -> complex:
    """1 - omega^2 mu_m eps_p lambda_n0 (lambda_n0 at particle scale)."""
    return 1.0 - omega**2 * medium.mu_m * permittivity(mat, omega, gamma) * lambda_n0


def plasmonic_frequency_appendix_form(mat: LorentzMaterial, medium: HostMedium,
                                      lambda_n0: float) -> float:
    """Equivalent closed form omega^2 = omega_0^2 - omega_p^2 / beta of the base frequency."""
    lam = lambda_n0
    beta = -1.0 + lam / mat.eps_inf - (lam * lam / mat.eps_inf) / (medium.eps_m + lam)
    return mat.omega_0**2 - mat.omega_p**2 / beta


def wavenumber(medium: HostMedium, omega: float) -> float:
    """k = omega sqrt(mu_m eps_m)."""
    return omega * math.sqrt(medium.mu_m * medium.eps_m)
