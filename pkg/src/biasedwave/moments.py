"""Exact moments of the smoothed local mass and the scaling-law bounds.

With sign coefficients that are +1 with probability p (independently per
direction), the local mass Q = sum_{j,l} C_j C_l I_jl has

    E[Q]   = N * I_0 + (2p-1)**2 * sum_{j != l} I_jl,
    Var[Q] = (1-q)**2 * [S2 + S2'] + (q - q**2) * [four row/column-sum products],

where q = (2p-1)**2, S2 = sum_{j != l} I_jl**2 and S2' = sum_{j != l} I_jl I_lj.
On the circulant kernel the row sums are constant, collapsing everything to
closed forms in the first row.  Asymptotic upper/lower bounds use calibrated
constants because the bound constants are otherwise unspecified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import WaveParams, build_cutoff, build_params, cutoff_mass
from .oscint import PairKernel, build_kernel, kernel_matrix

ENUMERATION_LIMIT = 20
GENERIC_VARIANCE_LIMIT = 512
DEFAULT_GAMMA_MIN = 8.0
DEFAULT_DELTA = 0.2
DEFAULT_KAPPA = 10.0
DEFAULT_HEADROOM = 1.25
CALIBRATION_LAMBDA = 64.0
_VARIANCE_FLOOR = 1e-12


def coin_pair_moment(p: float) -> float:
    """E[C_j C_l] for independent +-1 coefficients, j != l: (2p-1)**2."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    return (2.0 * p - 1.0) ** 2


def exact_expectation(kernel: PairKernel) -> float:
    """N * I_0 + (2p-1)**2 * N * R via the circulant row-sum identity."""
    n = kernel.size
    q = coin_pair_moment(kernel.params.p)
    return n * kernel.diagonal + q * n * kernel.off_diagonal_row_sum


def exact_variance(kernel: PairKernel) -> float:
    """Closed-form variance on the circulant fast path.

    Symmetry gives S2' = S2 = N * sum_{k != 0} I_k**2 and each of the four
    row/column-sum products equals N * R**2.  A result below the numerical
    floor -1e-12 * E**2 indicates a corrupted kernel and raises.
    """
    n = kernel.size
    q = coin_pair_moment(kernel.params.p)
    s2 = n * kernel.off_diagonal_square_sum
    row_products = 4.0 * n * kernel.off_diagonal_row_sum ** 2
    variance = (1.0 - q) ** 2 * 2.0 * s2 + (q - q * q) * row_products
    expectation = exact_expectation(kernel)
    if variance < -_VARIANCE_FLOOR * expectation ** 2:
        raise RuntimeError(f"variance {variance:.3e} below numerical floor; "
                           "kernel values are corrupted")
    return max(variance, 0.0)


def exact_variance_generic(kernel: PairKernel, p: float | None = None) -> float:
    """Double-loop variance oracle making no symmetry or circulant assumptions.

    Evaluates every sum in the two-bracket formula from the dense matrix;
    limited to N <= 512.
    """
    n = kernel.size
    if n > GENERIC_VARIANCE_LIMIT:
        raise ValueError(f"generic variance path limited to N <= {GENERIC_VARIANCE_LIMIT}")
    q = coin_pair_moment(kernel.params.p if p is None else p)
    m = kernel_matrix(kernel, max_size=GENERIC_VARIANCE_LIMIT)
    diag = np.diag(m)
    s2 = float(np.sum(m * m) - np.sum(diag ** 2))
    s2_t = float(np.sum(m * m.T) - np.sum(diag ** 2))
    row = m.sum(axis=1) - diag
    col = m.sum(axis=0) - diag
    bracket = float(row @ row + 2.0 * (row @ col) + col @ col)
    return (1.0 - q) ** 2 * (s2 + s2_t) + (q - q * q) * bracket


def enumerate_moments(kernel: PairKernel, p: float):
    """Exhaustive expectation and variance over all 2**N sign vectors.

    Each vector c contributes weight p**(#+1) * (1-p)**(#-1) and mass
    c^T (I_jl) c evaluated through the dense matrix (independently of the
    spectral fast path).  Exact up to floating point; N <= 20 only.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    n = kernel.size
    if n > ENUMERATION_LIMIT:
        raise ValueError(f"enumeration limited to N <= {ENUMERATION_LIMIT}, got {n}")
    m = kernel_matrix(kernel, max_size=ENUMERATION_LIMIT)
    diagonal = n * kernel.diagonal
    # every +-1 vector contributes the same diagonal mass N * I_0 exactly, so
    # enumerating only the off-diagonal part avoids cancellation against it
    np.fill_diagonal(m, 0.0)
    total = 1 << n
    masses = np.empty(total)
    weights = np.empty(total)
    chunk = min(total, 1 << 16)
    bit_cols = np.arange(n, dtype=np.uint32)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.uint32)
        bits = (idx[:, None] >> bit_cols[None, :]) & 1
        signs = 2.0 * bits - 1.0
        masses[start:start + chunk] = np.einsum("ij,jk,ik->i", signs, m, signs)
        n_pos = bits.sum(axis=1)
        weights[start:start + chunk] = p ** n_pos * (1.0 - p) ** (n - n_pos)
    off_mean = float(weights @ masses)
    variance = float(weights @ (masses - off_mean) ** 2)
    return diagonal + off_mean, variance


@dataclass(frozen=True)
class CalibratedConstants:
    """Bound constants fixed at a small reference frequency.

    The asymptotic bounds only pin powers of lam and gamma; the constants in
    front are calibrated from the exact kernel at the reference point, with a
    symmetric headroom factor absorbing finite-frequency oscillation of the
    normalised ratios.  upper-type constants are scaled up by the headroom,
    lower-type down.
    """

    k_upper: float
    c_lower: float
    c1_diag: float
    c2_cross: float
    headroom: float
    reference_lam: float
    reference_gamma: float
    reference_alpha: float

    def as_dict(self) -> dict:
        return {
            "k_upper": self.k_upper,
            "c_lower": self.c_lower,
            "c1_diag": self.c1_diag,
            "c2_cross": self.c2_cross,
            "headroom": self.headroom,
            "reference_lam": self.reference_lam,
            "reference_gamma": self.reference_gamma,
            "reference_alpha": self.reference_alpha,
        }


def calibrate_constants(kernel: PairKernel,
                        headroom: float = DEFAULT_HEADROOM) -> CalibratedConstants:
    """Fix bound constants from one (small-lam) kernel.

    k_upper / c_lower scale the off-diagonal expectation term against
    gamma**2 * lam**(1-alpha); c1_diag and c2_cross scale the two variance
    terms against gamma**2 * lam**(1-3*alpha) and gamma**3 * lam**(1-2*alpha).
    """
    if headroom < 1.0:
        raise ValueError("headroom must be at least 1")
    pr = kernel.params
    n = kernel.size
    cross_scale = pr.gamma ** 2 * pr.lam ** (1.0 - pr.alpha)
    s_cross = n * kernel.off_diagonal_row_sum
    ratio = max(s_cross, 0.0) / cross_scale
    var_diag = 2.0 * n * kernel.off_diagonal_square_sum
    var_cross = 4.0 * n * kernel.off_diagonal_row_sum ** 2
    return CalibratedConstants(
        k_upper=headroom * ratio,
        c_lower=ratio / headroom,
        c1_diag=headroom * var_diag / (pr.gamma ** 2 * pr.lam ** (1.0 - 3.0 * pr.alpha)),
        c2_cross=headroom * var_cross / (pr.gamma ** 3 * pr.lam ** (1.0 - 2.0 * pr.alpha)),
        headroom=headroom,
        reference_lam=pr.lam,
        reference_gamma=pr.gamma,
        reference_alpha=pr.alpha,
    )


def _default_constants(params: WaveParams) -> CalibratedConstants:
    lam_ref = min(params.lam, CALIBRATION_LAMBDA)
    ref = build_params(lam_ref, params.gamma, params.alpha, params.p)
    return calibrate_constants(build_kernel(ref))


def expectation_bounds(params: WaveParams, mode: str = "two_sided",
                       constants: CalibratedConstants | None = None,
                       gamma_min: float = DEFAULT_GAMMA_MIN):
    """Numeric (lower, upper) envelope for the exact expectation.

    upper = 4*pi*gamma*lam**(1-2*alpha) + K*(2p-1)**2*gamma**2*lam**(1-alpha);
    the lower bound has the diagonal constant pi and the calibrated constant c,
    and is only meaningful for dense direction sets, so two_sided mode requires
    gamma >= gamma_min.  Returns (None, upper) in upper_only mode.
    """
    if mode not in ("upper_only", "two_sided"):
        raise ValueError(f"mode must be 'upper_only' or 'two_sided', got {mode!r}")
    if mode == "two_sided" and params.gamma < gamma_min:
        raise ValueError(
            f"two-sided bounds need gamma >= {gamma_min}, got {params.gamma}")
    if constants is None:
        constants = _default_constants(params)
    q = coin_pair_moment(params.p)
    diag_scale = params.gamma * params.lam ** (1.0 - 2.0 * params.alpha)
    cross_scale = params.gamma ** 2 * params.lam ** (1.0 - params.alpha)
    upper = 4.0 * np.pi * diag_scale + constants.k_upper * q * cross_scale
    if mode == "upper_only":
        return None, float(upper)
    lower = np.pi * diag_scale + constants.c_lower * q * cross_scale
    return float(lower), float(upper)


def variance_bound(params: WaveParams,
                   constants: CalibratedConstants | None = None) -> float:
    """Two-term variance bound C1*lam**(1-3a)*g**2*(1-q)**2 + C2*g**3*lam**(1-2a)*q*(1-q)."""
    if constants is None:
        constants = _default_constants(params)
    q = coin_pair_moment(params.p)
    term_diag = (constants.c1_diag * params.lam ** (1.0 - 3.0 * params.alpha)
                 * params.gamma ** 2 * (1.0 - q) ** 2)
    term_cross = (constants.c2_cross * params.gamma ** 3
                  * params.lam ** (1.0 - 2.0 * params.alpha) * q * (1.0 - q))
    return float(term_diag + term_cross)


@dataclass(frozen=True)
class Classification:
    """Equidistribution verdict with its diagnostic ratios.

    expectation_ratio = E_norm / vol_norm, variance_ratio = Var_norm / vol_norm**2,
    margin = |expectation_ratio - 1|.  threshold_ok records the analytic
    criterion |p - 0.5| <= lam**(-alpha/2) * gamma**(-1/2).
    """

    label: str
    expectation_ratio: float
    variance_ratio: float
    margin: float
    threshold_ok: bool


def _classify(e_norm: float, var_norm: float, vol_norm: float,
              params: WaveParams, delta: float, kappa: float) -> Classification:
    ratio = e_norm / vol_norm
    var_ratio = var_norm / vol_norm ** 2
    if abs(ratio - 1.0) <= delta and var_ratio <= delta:
        label = "strong"
    elif 1.0 / kappa <= ratio <= kappa and var_ratio <= delta:
        label = "weak"
    else:
        label = "none"
    threshold_scale = params.lam ** (-params.alpha / 2.0) / math.sqrt(params.gamma)
    # tiny slack keeps points constructed exactly on the boundary inside it
    threshold_ok = bool(abs(params.p - 0.5) <= threshold_scale * (1.0 + 1e-12))
    return Classification(label=label, expectation_ratio=float(ratio),
                          variance_ratio=float(var_ratio),
                          margin=float(abs(ratio - 1.0)), threshold_ok=threshold_ok)


@dataclass(frozen=True)
class MomentReport:
    """Exact moments, calibrated bounds, normalised ratios, and the verdict.

    Normalisation divides the mass by gamma * lam (the fair-coin expectation
    scale), so the fair-coin normalised expectation equals the reference
    volume 2*pi*m2*lam**(-2*alpha) up to direction-count rounding.
    """

    params: WaveParams
    expectation: float
    variance: float
    expectation_bound_upper: float
    expectation_bound_lower: float | None
    variance_bound: float
    normalized_expectation: float
    normalized_variance: float
    normalized_volume: float
    classification: Classification

    def as_dict(self) -> dict:
        return {
            "lambda": self.params.lam,
            "gamma": self.params.gamma,
            "alpha": self.params.alpha,
            "p": self.params.p,
            "N": self.params.n_dirs,
            "E": self.expectation,
            "Var": self.variance,
            "E_norm": self.normalized_expectation,
            "Var_norm": self.normalized_variance,
            "vol_norm": self.normalized_volume,
            "E_upper": self.expectation_bound_upper,
            "E_lower": self.expectation_bound_lower,
            "Var_upper": self.variance_bound,
            "class": self.classification.label,
            "threshold_ok": self.classification.threshold_ok,
        }


def build_report(kernel: PairKernel,
                 constants: CalibratedConstants | None = None,
                 delta: float = DEFAULT_DELTA,
                 kappa: float = DEFAULT_KAPPA,
                 gamma_min: float = DEFAULT_GAMMA_MIN) -> MomentReport:
    """Full moment report for one parameter point."""
    params = kernel.params
    if constants is None:
        constants = _default_constants(params)
    expectation = exact_expectation(kernel)
    variance = exact_variance(kernel)
    mode = "two_sided" if params.gamma >= gamma_min else "upper_only"
    lower, upper = expectation_bounds(params, mode=mode, constants=constants,
                                      gamma_min=gamma_min)
    var_bound = variance_bound(params, constants=constants)
    scale = params.gamma * params.lam
    e_norm = expectation / scale
    var_norm = variance / scale ** 2
    vol_norm = cutoff_mass(params)
    verdict = _classify(e_norm, var_norm, vol_norm, params, delta, kappa)
    return MomentReport(params=params, expectation=expectation, variance=variance,
                        expectation_bound_upper=upper,
                        expectation_bound_lower=lower,
                        variance_bound=var_bound,
                        normalized_expectation=e_norm,
                        normalized_variance=var_norm,
                        normalized_volume=vol_norm,
                        classification=verdict)


def equidistribution_margin(report: MomentReport, params: WaveParams,
                            delta: float = DEFAULT_DELTA,
                            kappa: float = DEFAULT_KAPPA) -> Classification:
    """Re-derive the classification from a report's normalised quantities."""
    return _classify(report.normalized_expectation, report.normalized_variance,
                     report.normalized_volume, params, delta, kappa)
