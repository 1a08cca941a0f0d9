"""Self-contained special functions: J0, J1, Y0, H0^(1), E1, Gamma(1/2, .), erfc.

Everything here is pure and reentrant.  Bessel functions use the ascending
power series for x <= 12 and the large-argument (Hankel) expansion above;
the expansion is truncated at its smallest term, which at x = 12 leaves a
relative error below 1e-10.  The exponential integral uses the alternating
series for x <= 3 and a modified-Lentz continued fraction beyond.

All functions accept floats or numpy arrays and return matching types.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

# Euler-Mascheroni constant, 20 digits.
EULER_GAMMA = 0.57721566490153286061

_SERIES_CUTOFF = 12.0  # ascending series below, Hankel expansion above
_E1_SERIES_CUTOFF = 3.0  # alternating series below, continued fraction above
_E1_UNDERFLOW = 745.0  # exp(-x) underflows past this; E1 returned as 0
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class SpecFunResult:
    """Value of a special function together with a truncation error estimate.

    ``est_abs_error`` is a bound derived from the first neglected term of the
    generating series/expansion; it is finite and >= 0.  For real-valued
    functions ``value.imag`` is exactly 0.
    """

    value: complex
    est_abs_error: float


def _prepare(x, name: str, require: str = "none") -> tuple[np.ndarray, bool]:
    scalar = np.isscalar(x) or getattr(x, "ndim", 1) == 0
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} requires finite argument")
    if require == "positive" and np.any(arr <= 0.0):
        raise DomainError(f"{name} requires strictly positive argument")
    if require == "nonnegative" and np.any(arr < 0.0):
        raise DomainError(f"{name} requires nonnegative argument")
    return arr, scalar


def _finish(out: np.ndarray, scalar: bool):
    return out[0].item() if scalar else out


# ---------------------------------------------------------------------------
# Bessel functions of order 0 and 1
# ---------------------------------------------------------------------------


def _j0_series(x: np.ndarray) -> np.ndarray:
    q = 0.25 * x * x
    total = np.ones_like(x)
    term = np.ones_like(x)
    for m in range(1, 80):
        term = term * (-q) / (m * m)
        total = total + term
        if np.all(np.abs(term) <= 1e-18 * np.maximum(np.abs(total), 1e-300)):
            break
    return total


def _j1_series(x: np.ndarray) -> np.ndarray:
    q = 0.25 * x * x
    term = 0.5 * x
    total = term.copy()
    for m in range(1, 80):
        term = term * (-q) / (m * (m + 1))
        total = total + term
        if np.all(np.abs(term) <= 1e-18 * np.maximum(np.abs(total), 1e-300)):
            break
    return total


def _y0_series(x: np.ndarray, j0x: np.ndarray) -> np.ndarray:
    # Y0 = (2/pi)[(ln(x/2)+gamma) J0 + sum_{m>=1} (-1)^{m+1} H_m q^m / (m!)^2]
    q = 0.25 * x * x
    term = np.ones_like(x)  # (-q)^m/(m!)^2, built iteratively
    harmonic = 0.0
    total = np.zeros_like(x)
    for m in range(1, 80):
        term = term * (-q) / (m * m)
        harmonic += 1.0 / m
        contrib = -term * harmonic
        total = total + contrib
        if np.all(np.abs(contrib) <= 1e-18 * np.maximum(np.abs(total), 1e-300)):
            break
    return (2.0 / math.pi) * ((np.log(0.5 * x) + EULER_GAMMA) * j0x + total)


def _hankel_pq(x: np.ndarray, mu: float) -> tuple[np.ndarray, np.ndarray]:
    """P, Q of the large-argument expansion, truncated at the smallest term.

    With u_k the magnitude recurrence u_k = u_{k-1} (mu-(2k-1)^2)/(8kx),
    the k-th term of P+iQ is i^k u_k.
    """
    inv8x = 1.0 / (8.0 * x)
    p = np.ones_like(x)
    q = np.zeros_like(x)
    u = np.ones_like(x)
    active = np.ones(x.shape, dtype=bool)
    prev = np.full_like(x, np.inf)
    for k in range(1, 40):
        u = u * (mu - (2 * k - 1) ** 2) / k * inv8x
        mag = np.abs(u)
        active &= mag < prev
        sign = -1.0 if (k // 2) % 2 else 1.0  # Re/Im sign of i^k
        if k % 2 == 1:
            q = np.where(active, q + sign * u, q)
        else:
            p = np.where(active, p + sign * u, p)
        prev = mag
        if not active.any():
            break
    return p, q


def _bessel_pair_large(x: np.ndarray, nu: int) -> tuple[np.ndarray, np.ndarray]:
    p, q = _hankel_pq(x, 4.0 * nu * nu)
    chi = x - (0.5 * nu + 0.25) * math.pi
    amp = np.sqrt(2.0 / (math.pi * x))
    jn = amp * (p * np.cos(chi) - q * np.sin(chi))
    yn = amp * (p * np.sin(chi) + q * np.cos(chi))
    return jn, yn


def bessel_j0(x):
    """J0(x)."""
    arr, scalar = _prepare(x, "bessel_j0")
    a = np.abs(arr)
    out = np.empty_like(a)
    small = a <= _SERIES_CUTOFF
    if small.any():
        out[small] = _j0_series(a[small])
    if (~small).any():
        out[~small] = _bessel_pair_large(a[~small], 0)[0]
    return _finish(out, scalar)


def bessel_j1(x):
    """J1(x); odd in x."""
    arr, scalar = _prepare(x, "bessel_j1")
    a = np.abs(arr)
    out = np.empty_like(a)
    small = a <= _SERIES_CUTOFF
    if small.any():
        out[small] = _j1_series(a[small])
    if (~small).any():
        out[~small] = _bessel_pair_large(a[~small], 1)[0]
    out = out * np.where(arr < 0, -1.0, 1.0)
    return _finish(out, scalar)


def bessel_y0(x):
    """Y0(x) for x > 0."""
    arr, scalar = _prepare(x, "bessel_y0", require="positive")
    out = np.empty_like(arr)
    small = arr <= _SERIES_CUTOFF
    if small.any():
        xs = arr[small]
        out[small] = _y0_series(xs, _j0_series(xs))
    if (~small).any():
        out[~small] = _bessel_pair_large(arr[~small], 0)[1]
    return _finish(out, scalar)


def hankel1_0(x):
    """Hankel function of the first kind, order zero: J0(x) + i Y0(x), x > 0."""
    arr, scalar = _prepare(x, "hankel1_0", require="positive")
    out = np.asarray(bessel_j0(arr) + 1j * bessel_y0(arr))
    return _finish(out, scalar)


# ---------------------------------------------------------------------------
# Exponential integral E1 and the incomplete gamma of order 1/2
# ---------------------------------------------------------------------------


def _e1_series(x: np.ndarray) -> np.ndarray:
    # E1(x) = -gamma - ln x + sum_{k>=1} (-1)^{k+1} x^k / (k k!)
    term = np.ones_like(x)
    total = np.zeros_like(x)
    for k in range(1, 60):
        term = term * (-x) / k
        contrib = -term / k
        total = total + contrib
        if np.all(np.abs(contrib) <= 1e-18 * np.maximum(np.abs(total), 1e-300)):
            break
    return -EULER_GAMMA - np.log(x) + total


def _e1_contfrac(x: np.ndarray) -> np.ndarray:
    # Even form: E1(x) = exp(-x)/(x+1 - 1/(x+3 - 4/(x+5 - 9/(x+7 - ...)))),
    # evaluated with the modified Lentz algorithm (b0 = 0 handled by `tiny`).
    tiny = 1e-300
    f = np.full_like(x, tiny)
    c = np.full_like(x, tiny)
    d = np.zeros_like(x)
    for k in range(0, 240):
        a = 1.0 if k == 0 else -float(k * k)
        b = x + 1.0 + 2.0 * k
        d = b + a * d
        d = np.where(d == 0.0, tiny, d)
        c = b + a / c
        c = np.where(c == 0.0, tiny, c)
        d = 1.0 / d
        delta = c * d
        f = f * delta
        if np.all(np.abs(delta - 1.0) < 1e-16):
            break
    return np.exp(-x) * f


def exp_integral_e1(x):
    """E1(x) = integral_x^inf exp(-t)/t dt for x > 0.

    Returns 0.0 once exp(-x) underflows (x > ~745).
    """
    arr, scalar = _prepare(x, "exp_integral_e1", require="positive")
    out = np.zeros_like(arr)
    small = arr <= _E1_SERIES_CUTOFF
    mid = (~small) & (arr <= _E1_UNDERFLOW)
    if small.any():
        out[small] = _e1_series(arr[small])
    if mid.any():
        out[mid] = _e1_contfrac(arr[mid])
    return _finish(out, scalar)


_erfc_vec = np.vectorize(math.erfc, otypes=[float])


def erfc(x):
    """Complementary error function."""
    arr, scalar = _prepare(x, "erfc")
    return _finish(_erfc_vec(arr), scalar)


def upper_gamma_half(x):
    """Gamma(1/2, x) = sqrt(pi) * erfc(sqrt(x)) for x >= 0."""
    arr, scalar = _prepare(x, "upper_gamma_half", require="nonnegative")
    out = math.sqrt(math.pi) * _erfc_vec(np.sqrt(arr))
    return _finish(out, scalar)


# ---------------------------------------------------------------------------
# Error-estimated wrappers (used by the selftest CLI)
# ---------------------------------------------------------------------------


def _series_peak_term(x: float) -> float:
    """Largest magnitude among the J0 series terms; cancellation proxy."""
    q = 0.25 * x * x
    term, peak = 1.0, 1.0
    for m in range(1, 80):
        term = term * q / (m * m)
        peak = max(peak, term)
        if term < 1e-18:
            break
    return peak


def hankel1_0_with_error(x: float) -> SpecFunResult:
    xf = float(x)
    value = complex(hankel1_0(xf))
    if xf <= _SERIES_CUTOFF:
        est = 60.0 * _EPS * max(_series_peak_term(xf), abs(value))
    else:
        est = abs(value) * math.exp(-2.0 * xf) + 8.0 * _EPS * abs(value)
    return SpecFunResult(value, float(est))


def exp_integral_e1_with_error(x: float) -> SpecFunResult:
    xf = float(x)
    value = float(exp_integral_e1(xf))
    scale = abs(value) if xf > _E1_SERIES_CUTOFF else max(abs(value), abs(math.log(xf)) + 1.0)
    return SpecFunResult(complex(value), 16.0 * _EPS * scale)


def erfc_with_error(x: float) -> SpecFunResult:
    value = float(erfc(float(x)))
    return SpecFunResult(complex(value), 8.0 * _EPS * max(abs(value), 1e-300))


def upper_gamma_half_with_error(x: float) -> SpecFunResult:
    value = float(upper_gamma_half(float(x)))
    return SpecFunResult(complex(value), 8.0 * _EPS * max(abs(value), 1e-300))
