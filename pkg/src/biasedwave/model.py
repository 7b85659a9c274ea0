"""Wave-model parameters, equispaced direction sets, and the radial cutoff.

The model is a planar superposition of ``N = round(gamma * lam)`` unit plane
waves ``exp(i * lam * x . xi_j)`` whose directions ``xi_j`` sit equally spaced
on the unit circle.  The local mass near the origin is smoothed by a fixed
radial bump ``a`` that equals 1 on ``[-1, 1]`` and vanishes outside
``(-2, 2)``; rescaling its argument by ``lam**alpha`` confines the mass window
to a ball of radius ``2 * lam**-alpha``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.integrate import quad

FLAT_RADIUS = 1.0
SUPPORT_RADIUS = 2.0
DERIVATIVE_ORDER = 8
_BOUNDS_GRID_SIZE = 100_000
_MASS_REL_TOL = 1e-10


@dataclass(frozen=True)
class WaveParams:
    """Experiment parameters (lam, gamma, alpha, p) plus the derived count N.

    lam    : frequency, > 1
    gamma  : direction-density factor, > 0
    alpha  : shrink exponent of the observation ball radius lam**-alpha, in [0, 1)
    p      : probability that a sign coefficient equals +1, in [0, 1]
    n_dirs : number of directions, round-half-even(gamma * lam), >= 1
    """

    lam: float
    gamma: float
    alpha: float
    p: float
    n_dirs: int

    @property
    def bias(self) -> float:
        return 2.0 * self.p - 1.0

    @property
    def ball_radius(self) -> float:
        """Radius scale lam**-alpha of the smoothed observation ball."""
        return self.lam ** (-self.alpha)

    @property
    def separation_scale(self) -> float:
        """Direction-separation scale lam**(-1 + alpha) of the decay bounds."""
        return self.lam ** (-1.0 + self.alpha)


def build_params(lam: float, gamma: float, alpha: float, p: float) -> WaveParams:
    """Validate raw inputs and derive the direction count.

    Rejects alpha >= 1 (the moment asymptotics hold only below the wavelength
    scale), non-finite inputs, and parameter combinations that round to zero
    directions.  The count uses round-half-to-even so that fractional
    gamma * lam resolves deterministically.
    """
    for name, value in (("lam", lam), ("gamma", gamma), ("alpha", alpha), ("p", p)):
        if not math.isfinite(value):
            raise ValueError(f"{name} must be finite, got {value!r}")
    if lam <= 1.0:
        raise ValueError(f"lam must exceed 1, got {lam}")
    if gamma <= 0.0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must lie in [0, 1), got {alpha}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    n_dirs = int(round(gamma * lam))
    if n_dirs < 1:
        raise ValueError(f"gamma * lam = {gamma * lam} rounds to zero directions")
    return WaveParams(lam=float(lam), gamma=float(gamma), alpha=float(alpha),
                      p=float(p), n_dirs=n_dirs)


@dataclass(frozen=True)
class DirectionSet:
    """Equispaced unit directions with their chord-distance table.

    angles[j] = 2*pi*j/N, unit_vectors[j] = (cos, sin) of that angle, and
    chord[k] = |xi_j - xi_{j+k}| = 2*sin(pi*k/N), which depends only on the
    index separation k mod N.
    """

    angles: np.ndarray
    unit_vectors: np.ndarray
    chord: np.ndarray

    @property
    def size(self) -> int:
        return self.angles.shape[0]


def build_directions(params: WaveParams) -> DirectionSet:
    """Place N = params.n_dirs directions at angles 2*pi*j/N, phase origin 0."""
    n = params.n_dirs
    j = np.arange(n)
    angles = 2.0 * np.pi * j / n
    unit_vectors = np.column_stack([np.cos(angles), np.sin(angles)])
    chord = 2.0 * np.sin(np.pi * j / n)
    for arr in (angles, unit_vectors, chord):
        arr.setflags(write=False)
    return DirectionSet(angles=angles, unit_vectors=unit_vectors, chord=chord)


def cutoff_value(t):
    """The fixed smooth even bump: 1 on [-1, 1], 0 outside (-2, 2).

    Uses the classic partition construction a = g(2-|t|) / (g(2-|t|) + g(|t|-1))
    with g(s) = exp(-1/s) for s > 0 and 0 otherwise, so both support conditions
    hold exactly and the profile is monotone on [1, 2].
    """
    arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("cutoff argument must be finite")
    u = np.abs(arr)
    out = np.zeros_like(u)
    out[u <= FLAT_RADIUS] = 1.0
    mid = (u > FLAT_RADIUS) & (u < SUPPORT_RADIUS)
    if np.any(mid):
        um = u[mid]
        g_outer = np.exp(-1.0 / (SUPPORT_RADIUS - um))
        g_inner = np.exp(-1.0 / (um - FLAT_RADIUS))
        out[mid] = g_outer / (g_outer + g_inner)
    if np.isscalar(t) or np.ndim(t) == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# Taylor-jet arithmetic.  A jet holds the Taylor coefficients f^(m)(t)/m! of a
# function at every grid point, shape (order + 1, npts).  Propagating jets
# through the bump's formula gives high-order derivatives without the roundoff
# blowup of repeated finite differencing.
# ---------------------------------------------------------------------------

def _jet_variable(t: np.ndarray, order: int) -> np.ndarray:
    jet = np.zeros((order + 1, t.size))
    jet[0] = t
    if order >= 1:
        jet[1] = 1.0
    return jet


def _jet_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    order = a.shape[0] - 1
    out = np.zeros_like(a)
    for m in range(order + 1):
        for i in range(m + 1):
            out[m] += a[i] * b[m - i]
    return out


def _jet_div(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    order = a.shape[0] - 1
    out = np.zeros_like(a)
    out[0] = a[0] / b[0]
    for m in range(1, order + 1):
        acc = a[m].copy()
        for i in range(1, m + 1):
            acc -= b[i] * out[m - i]
        out[m] = acc / b[0]
    return out


def _jet_exp(v: np.ndarray) -> np.ndarray:
    order = v.shape[0] - 1
    out = np.zeros_like(v)
    out[0] = np.exp(v[0])
    for m in range(1, order + 1):
        acc = np.zeros_like(v[0])
        for i in range(1, m + 1):
            acc += i * v[i] * out[m - i]
        out[m] = acc / m
    return out


def _squared_cutoff_jet(t: np.ndarray, order: int) -> np.ndarray:
    """Jet of a(t)**2 on grid points strictly inside (1, 2)."""
    tj = _jet_variable(t, order)
    one = np.zeros_like(tj)
    one[0] = 1.0
    two = np.zeros_like(tj)
    two[0] = 2.0
    s_outer = two - tj      # 2 - t
    s_inner = tj - one      # t - 1
    g_outer = _jet_exp(-_jet_div(one, s_outer))
    g_inner = _jet_exp(-_jet_div(one, s_inner))
    a = _jet_div(g_outer, g_outer + g_inner)
    return _jet_mul(a, a)


def _derivative_bounds(order: int = DERIVATIVE_ORDER,
                       grid_size: int = _BOUNDS_GRID_SIZE) -> np.ndarray:
    """sup |d^m/dt^m a(t)^2| for m = 0..order, tabulated on a dense grid.

    Derivatives vanish identically outside (1, 2) by flatness, so the grid
    covers only the transition band.  Entry 0 is sup a^2 = 1.
    """
    t = np.linspace(1.0, 2.0, grid_size + 2)[1:-1]
    jet = _squared_cutoff_jet(t, order)
    bounds = np.empty(order + 1)
    bounds[0] = 1.0
    fact = 1.0
    for m in range(1, order + 1):
        fact *= m
        bounds[m] = fact * np.max(np.abs(jet[m]))
    bounds.setflags(write=False)
    return bounds


@dataclass(frozen=True)
class CutoffSpec:
    """The bump profile with its derivative table and squared radial mass.

    derivative_bounds[m] = sup_t |d^m (a^2) / dt^m| for m <= 8, used to size
    decay-bound constants.  squared_radial_mass is m2 = integral_0^2 a(t)^2 t dt,
    so the planar mass of a(lam**alpha |x|)^2 equals 2*pi*lam**(-2*alpha)*m2.
    """

    profile: Callable
    derivative_bounds: np.ndarray
    squared_radial_mass: float


@lru_cache(maxsize=1)
def build_cutoff() -> CutoffSpec:
    """Construct (once) the fixed cutoff with its tabulated constants."""
    m2, abserr = quad(lambda t: cutoff_value(t) ** 2 * t, 0.0, SUPPORT_RADIUS,
                      points=[FLAT_RADIUS], epsabs=0.0, epsrel=_MASS_REL_TOL,
                      limit=200)
    if not math.isfinite(m2) or abserr > 100.0 * _MASS_REL_TOL * abs(m2):
        raise RuntimeError(
            f"radial mass quadrature did not converge (value={m2}, err={abserr}); "
            "the cutoff profile is defective")
    return CutoffSpec(profile=cutoff_value,
                      derivative_bounds=_derivative_bounds(),
                      squared_radial_mass=float(m2))


def cutoff_mass(params: WaveParams) -> float:
    """L1 mass of a(lam**alpha |x|)^2 over the plane: 2*pi*lam**(-2*alpha)*m2."""
    spec = build_cutoff()
    return 2.0 * np.pi * params.lam ** (-2.0 * params.alpha) * spec.squared_radial_mass
