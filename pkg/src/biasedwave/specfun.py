"""Bessel J0, the angular oscillatory integral, and its large-argument form.

The angular integral over the unit circle of exp(+-i w cos(theta)) equals
2*pi*J0(w); for w > 1 it is approximated by the stationary-phase leading term
2*sqrt(2*pi) * w**-0.5 * cos(w - pi/4) with an O(w**-1.5) remainder.  J0 is
evaluated here without external special-function dependencies so the quadrature
kernels stay self-contained.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .fitting import FitResult, fit_exponent

SERIES_CUTOVER = 11.0
_SERIES_TERMS = 34

# Rational minimax coefficients for the large-argument modulus/phase functions
# P and Q in J0(z) = sqrt(2/(pi z)) * (P cos(z - pi/4) - Q sin(z - pi/4)),
# from the Cephes math library (Moshier); absolute error below 5e-16 for z >= 5.
_PP = np.array([
    7.96936729297347051624e-4, 8.28352392107440799803e-2, 1.23953371646414299388e0,
    5.44725003058768775090e0, 8.74716500199817011941e0, 5.30324038235394892183e0,
    9.99999999999999997821e-1])
_PQ = np.array([
    9.24408810558863637013e-4, 8.56288474354474431428e-2, 1.25352743901058953537e0,
    5.47097740330417105182e0, 8.76190883237069594232e0, 5.30605288235394617618e0,
    1.00000000000000000218e0])
_QP = np.array([
    -1.13663838898469149931e-2, -1.28252718670509318512e0, -1.95539544257735972385e1,
    -9.32060152123768231369e1, -1.77681167980488790968e2, -1.47077505154951170175e2,
    -5.14105326766599330220e1, -6.05014350600728481186e0])
_QQ = np.array([
    6.43178256118178023184e1, 8.56430025976980587198e2, 3.88240183605401609683e3,
    7.24046774195652478189e3, 5.93072701187316984827e3, 2.06209331660327847417e3,
    2.42005740240291393179e2])
_SQ2OPI = 0.7978845608028653558798921
_PIO4 = 0.7853981633974483096156608


def _polevl(x: np.ndarray, coef: np.ndarray) -> np.ndarray:
    out = np.full_like(x, coef[0])
    for c in coef[1:]:
        out *= x
        out += c
    return out


def _p1evl(x: np.ndarray, coef: np.ndarray) -> np.ndarray:
    out = x + coef[0]
    for c in coef[1:]:
        out *= x
        out += c
    return out


def _j0_series(z: np.ndarray) -> np.ndarray:
    """Ascending power series with compensated summation, reliable to ~13."""
    u = (np.asarray(z, dtype=float) / 2.0) ** 2
    term = np.ones_like(u)
    total = np.ones_like(u)
    comp = np.zeros_like(u)
    for m in range(1, _SERIES_TERMS + 1):
        term = term * (-u) / (m * m)
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


def _j0_large(z: np.ndarray) -> np.ndarray:
    """Hankel-form evaluation with rational modulus/phase, for z >= 5."""
    z = np.asarray(z, dtype=float)
    inv = 1.0 / z
    q = 25.0 * inv * inv
    pmod = _polevl(q, _PP)
    pmod /= _polevl(q, _PQ)
    qmod = _polevl(q, _QP)
    qmod /= _p1evl(q, _QQ)
    qmod *= 5.0 * inv
    xn = z - _PIO4
    pmod *= np.cos(xn)
    np.sin(xn, out=xn)
    qmod *= xn
    pmod -= qmod
    pmod *= _SQ2OPI * np.sqrt(inv)
    return pmod


def bessel_j0(z):
    """J0(z) for z >= 0, absolute error at most 1e-12 up to z = 1e4.

    Series branch below SERIES_CUTOVER, Hankel form with rational minimax
    corrections above; the branches agree to ~3e-12 across [11, 13].
    """
    arr = np.asarray(z, dtype=float)
    if arr.size and (np.min(arr) < 0.0 or not np.all(np.isfinite(arr))):
        raise ValueError("bessel_j0 requires finite z >= 0")
    out = np.empty_like(arr)
    small = arr <= SERIES_CUTOVER
    if np.any(small):
        out[small] = _j0_series(arr[small])
    large = ~small
    if np.any(large):
        out[large] = _j0_large(arr[large])
    if np.isscalar(z) or np.ndim(z) == 0:
        return float(out)
    return out


def angular_integral(w):
    """integral_{-pi}^{pi} exp(i w cos(theta)) dtheta = 2*pi*J0(w), real valued."""
    return 2.0 * np.pi * bessel_j0(w)


def angular_integral_quadrature(w: float) -> float:
    """Direct adaptive quadrature of cos(w cos(theta)); independent check path.

    The sine component vanishes by the theta -> -theta symmetry, so only the
    cosine part is integrated (over half the range, doubled).
    """
    w = float(w)
    if w < 0.0 or not np.isfinite(w):
        raise ValueError("angular_integral_quadrature requires finite w >= 0")
    limit = max(60, int(10 * w / np.pi) + 10)
    val, _ = quad(lambda theta: np.cos(w * np.cos(theta)), 0.0, np.pi,
                  limit=limit, epsabs=1e-12, epsrel=1e-12)
    return 2.0 * val


def stationary_leading_term(w):
    """Leading stationary-phase approximation 2*sqrt(2*pi)*w**-0.5*cos(w - pi/4)."""
    w = np.asarray(w, dtype=float)
    return 2.0 * np.sqrt(2.0 * np.pi) * w ** (-0.5) * np.cos(w - np.pi / 4.0)


@dataclass(frozen=True)
class AsymptoticCheck:
    """Sampled comparison of 2*pi*J0(w) against its leading asymptotic term.

    residual = exact - leading should decay like w**-1.5; c_check is the
    smallest single constant with |residual| <= c_check * w**-1.5 over the
    sampled arguments.
    """

    w: np.ndarray
    exact_value: np.ndarray
    leading_term: np.ndarray
    residual: np.ndarray
    c_check: float

    def residual_slope(self) -> FitResult:
        """Log-log slope of |residual| over the sampled w, expected -1.5."""
        mask = np.abs(self.residual) > 0
        return fit_exponent(self.w[mask], np.abs(self.residual[mask]))


def asymptotic_check(w) -> AsymptoticCheck:
    """Evaluate exact and leading values at the given arguments (all > 1)."""
    w = np.atleast_1d(np.asarray(w, dtype=float))
    if np.min(w) <= 1.0:
        raise ValueError("asymptotic comparison requires w > 1")
    exact = angular_integral(w)
    leading = stationary_leading_term(w)
    residual = exact - leading
    c_check = float(np.max(np.abs(residual) * w ** 1.5))
    return AsymptoticCheck(w=w, exact_value=exact, leading_term=leading,
                           residual=residual, c_check=c_check)


def residual_probe_points(w_min: float, w_max: float) -> np.ndarray:
    """Arguments where |sin(w - pi/4)| = 1, i.e. w = 3*pi/4 + k*pi.

    The residual's leading contribution oscillates like sin(w - pi/4), so its
    envelope is cleanly sampled at these points; elsewhere sign changes make
    pointwise magnitudes unusable for slope fits.
    """
    if not (0.0 < w_min < w_max):
        raise ValueError("need 0 < w_min < w_max")
    k_lo = int(np.ceil((w_min - 0.75 * np.pi) / np.pi))
    k_hi = int(np.floor((w_max - 0.75 * np.pi) / np.pi))
    if k_hi < k_lo:
        raise ValueError("window contains no probe points")
    return 0.75 * np.pi + np.pi * np.arange(k_lo, k_hi + 1)


@dataclass(frozen=True)
class EnvelopeTable:
    """Samples of the surface-measure wave magnitude and its fitted envelope."""

    radii: np.ndarray
    magnitudes: np.ndarray
    peak_arguments: np.ndarray
    peak_magnitudes: np.ndarray
    envelope_fit: FitResult

    @property
    def envelope_exponent(self) -> float:
        return self.envelope_fit.slope


def surface_wave_envelope(lam: float, radii) -> EnvelopeTable:
    """Magnitude of the inverse transform of circle surface measure, rescaled.

    v(x) = lam**0.5 * 2*pi*J0(lam*|x|); its local maxima in lam*|x| follow the
    envelope ~ (lam*|x|)**-0.5, and the fitted log-log exponent of the sampled
    maxima is returned.  Radii must be positive and sorted, fine enough to
    resolve the oscillation (several samples per period pi/lam).
    """
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or radii.size < 3:
        raise ValueError("radii must be a 1-d array with at least 3 entries")
    if np.min(radii) <= 0.0 or np.any(np.diff(radii) <= 0.0):
        raise ValueError("radii must be positive and strictly increasing")
    w = lam * radii
    mags = np.sqrt(lam) * np.abs(angular_integral(w))
    interior = np.flatnonzero((mags[1:-1] > mags[:-2]) & (mags[1:-1] >= mags[2:])) + 1
    if interior.size < 3:
        raise ValueError("too few local maxima; sample the radii more densely")
    fit = fit_exponent(w[interior], mags[interior])
    for arr in (radii, mags):
        arr.setflags(write=False)
    return EnvelopeTable(radii=radii, magnitudes=mags,
                         peak_arguments=w[interior],
                         peak_magnitudes=mags[interior],
                         envelope_fit=fit)
