"""Configuration-driven sweeps, threshold experiments, and CSV/JSON emission.

A sweep walks the (lambda, gamma, alpha, p) grid in config order, emits one
moment report per point (plus optional Monte Carlo columns), and writes
<stem>.csv, <stem>.json, and <stem>.meta.json.  All numeric CSV fields use
17-significant-digit scientific notation with LF line endings so repeated runs
are byte-identical; the sweep touches no random state unless Monte Carlo is
enabled.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .fitting import FitResult, fit_exponent
from .model import build_params
from .moments import (DEFAULT_DELTA, DEFAULT_GAMMA_MIN, DEFAULT_KAPPA,
                      CalibratedConstants, build_report, calibrate_constants)
from .montecarlo import grid_quadrature_mass, mass_quadratic_form, mc_moments, \
    sample_coefficients
from .oscint import GL_ORDER, GL_REFINE_ORDER, PAIR_REL_TOL, build_kernel, \
    export_kernel_csv
from .specfun import asymptotic_check, residual_probe_points, surface_wave_envelope

SWEEP_COLUMNS = [
    "lambda", "gamma", "alpha", "p", "N", "E", "Var", "E_norm", "Var_norm",
    "vol_norm", "E_upper", "E_lower", "Var_upper", "class", "threshold_ok",
    "mc_samples", "mc_mean", "mc_var", "mc_se_mean", "mc_se_var", "mc_seed",
    "grid_rel_diff", "error",
]
THRESHOLD_COLUMNS = ["family", "beta"] + SWEEP_COLUMNS
_INT_COLUMNS = {"N", "mc_samples", "mc_seed"}
_STR_COLUMNS = {"class", "family", "error"}
_BOOL_COLUMNS = {"threshold_ok"}

THRESHOLD_FAMILIES = (
    ("fair", "fair"),
    ("at_threshold", 0.5),
    ("super_threshold", 0.25),
    ("unfair", "unfair"),
)


class ConfigError(ValueError):
    """Raised on malformed or unknown sweep-configuration content."""


def _require_keys(obj: dict, required: set, optional: set, where: str):
    keys = set(obj)
    unknown = keys - required - optional
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} in {where}")
    missing = required - keys
    if missing:
        raise ConfigError(f"missing keys {sorted(missing)} in {where}")


def _positive_floats(values, where: str) -> tuple:
    if not isinstance(values, list) or not values:
        raise ConfigError(f"{where} must be a non-empty list")
    out = tuple(float(v) for v in values)
    if any(not math.isfinite(v) or v <= 0 for v in out):
        raise ConfigError(f"{where} entries must be positive finite numbers")
    return out


@dataclass(frozen=True)
class SweepConfig:
    """Validated sweep description; see README for the JSON schema."""

    lambda_ladder: tuple
    gamma_mode: str
    gamma_values: tuple
    alpha_list: tuple
    p_mode: str
    p_values: tuple
    p_coefficient: float
    p_beta: float | None
    p_beta_factor: float | None
    mc_samples: int
    seed: int
    output_stem: str
    delta: float
    kappa: float
    gamma_min: float
    grid_check: bool
    grid_check_lambda_cap: float

    def gammas_for(self, lam: float) -> tuple:
        if self.gamma_mode == "fixed":
            return self.gamma_values
        return (float(math.ceil(math.log(lam))),)

    def beta_for(self, alpha: float) -> float:
        if self.p_beta is not None:
            return self.p_beta
        return self.p_beta_factor * alpha

    def p_for(self, lam: float, gamma: float, alpha: float) -> tuple:
        if self.p_mode == "fixed":
            return self.p_values
        beta = self.beta_for(alpha)
        return (0.5 + self.p_coefficient * lam ** (-beta) / math.sqrt(gamma),)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def parse_config(doc: dict) -> SweepConfig:
    """Validate a config document; unknown keys anywhere are rejected."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    _require_keys(doc, {"lambda_ladder", "gamma", "alpha_list", "p_rule",
                        "output_stem"},
                  {"mc_samples", "seed", "tolerances", "grid_check",
                   "grid_check_lambda_cap"}, "config")
    ladder = _positive_floats(doc["lambda_ladder"], "lambda_ladder")
    if any(v <= 1.0 for v in ladder):
        raise ConfigError("lambda_ladder entries must exceed 1")
    if any(b <= a for a, b in zip(ladder, ladder[1:])):
        raise ConfigError("lambda_ladder must be strictly increasing")

    gamma = doc["gamma"]
    if not isinstance(gamma, dict) or "mode" not in gamma:
        raise ConfigError("gamma must be an object with a 'mode'")
    if gamma["mode"] == "fixed":
        _require_keys(gamma, {"mode", "values"}, set(), "gamma")
        gamma_values = _positive_floats(gamma["values"], "gamma.values")
    elif gamma["mode"] == "log_lambda":
        _require_keys(gamma, {"mode"}, set(), "gamma")
        gamma_values = ()
    else:
        raise ConfigError(f"gamma.mode must be 'fixed' or 'log_lambda', "
                          f"got {gamma['mode']!r}")

    alpha_list = doc["alpha_list"]
    if not isinstance(alpha_list, list) or not alpha_list:
        raise ConfigError("alpha_list must be a non-empty list")
    alphas = tuple(float(a) for a in alpha_list)
    if any(not 0.0 <= a < 1.0 for a in alphas):
        raise ConfigError("alpha_list entries must lie in [0, 1)")

    p_rule = doc["p_rule"]
    if not isinstance(p_rule, dict) or "mode" not in p_rule:
        raise ConfigError("p_rule must be an object with a 'mode'")
    p_values: tuple = ()
    p_coefficient = 0.0
    p_beta = None
    p_beta_factor = None
    if p_rule["mode"] == "fixed":
        _require_keys(p_rule, {"mode", "values"}, set(), "p_rule")
        if not isinstance(p_rule["values"], list) or not p_rule["values"]:
            raise ConfigError("p_rule.values must be a non-empty list")
        p_values = tuple(float(v) for v in p_rule["values"])
        if any(not 0.0 <= v <= 1.0 for v in p_values):
            raise ConfigError("p_rule.values must lie in [0, 1]")
    elif p_rule["mode"] == "threshold":
        _require_keys(p_rule, {"mode", "c"}, {"beta", "beta_factor"}, "p_rule")
        p_coefficient = float(p_rule["c"])
        if p_coefficient < 0.0:
            raise ConfigError("p_rule.c must be non-negative")
        has_beta = "beta" in p_rule
        has_factor = "beta_factor" in p_rule
        if has_beta == has_factor:
            raise ConfigError("p_rule needs exactly one of 'beta' or 'beta_factor'")
        if has_beta:
            p_beta = float(p_rule["beta"])
            if p_beta < 0.0:
                raise ConfigError("p_rule.beta must be non-negative")
        else:
            p_beta_factor = float(p_rule["beta_factor"])
            if p_beta_factor < 0.0:
                raise ConfigError("p_rule.beta_factor must be non-negative")
    else:
        raise ConfigError(f"p_rule.mode must be 'fixed' or 'threshold', "
                          f"got {p_rule['mode']!r}")

    mc_samples = int(doc.get("mc_samples", 0))
    if mc_samples < 0 or 0 < mc_samples < 100:
        raise ConfigError("mc_samples must be 0 (disabled) or at least 100")
    seed = int(doc.get("seed", 0))
    if seed < 0:
        raise ConfigError("seed must be non-negative")

    tol = doc.get("tolerances", {})
    _require_keys(tol, set(), {"delta", "kappa", "gamma_min"}, "tolerances")
    delta = float(tol.get("delta", DEFAULT_DELTA))
    kappa = float(tol.get("kappa", DEFAULT_KAPPA))
    gamma_min = float(tol.get("gamma_min", DEFAULT_GAMMA_MIN))
    if delta <= 0 or kappa <= 1:
        raise ConfigError("tolerances require delta > 0 and kappa > 1")

    stem = doc["output_stem"]
    if not isinstance(stem, str) or not stem:
        raise ConfigError("output_stem must be a non-empty string")

    return SweepConfig(
        lambda_ladder=ladder, gamma_mode=gamma["mode"], gamma_values=gamma_values,
        alpha_list=alphas, p_mode=p_rule["mode"], p_values=p_values,
        p_coefficient=p_coefficient, p_beta=p_beta, p_beta_factor=p_beta_factor,
        mc_samples=mc_samples, seed=seed, output_stem=stem,
        delta=delta, kappa=kappa, gamma_min=gamma_min,
        grid_check=bool(doc.get("grid_check", False)),
        grid_check_lambda_cap=float(doc.get("grid_check_lambda_cap", 256.0)),
    )


def load_config(path) -> SweepConfig:
    with open(path) as fh:
        return parse_config(json.load(fh))


class _KernelCache:
    """Caches circulant rows per (lam, gamma, alpha); p only relabels params."""

    def __init__(self):
        self._store = {}

    def get(self, lam: float, gamma: float, alpha: float, p: float):
        key = (lam, gamma, alpha)
        base = self._store.get(key)
        if base is None:
            base = build_kernel(build_params(lam, gamma, alpha, 0.5))
            self._store[key] = base
        if p == 0.5:
            return base
        return dataclasses.replace(
            base, params=build_params(lam, gamma, alpha, p))


def _empty_row() -> dict:
    return {name: None for name in SWEEP_COLUMNS}


def _sweep_rows(config: SweepConfig, cache: _KernelCache):
    """Yield rows in config order together with the calibration table."""
    lam_cal = config.lambda_ladder[0]
    calibrations: dict = {}
    rows = []
    index = 0
    for lam in config.lambda_ladder:
        for gamma in config.gammas_for(lam):
            for alpha in config.alpha_list:
                cal_key = (gamma, alpha)
                for p in config.p_for(lam, gamma, alpha):
                    row = _empty_row()
                    row.update({"lambda": lam, "gamma": gamma, "alpha": alpha,
                                "p": p, "error": ""})
                    try:
                        if cal_key not in calibrations:
                            calibrations[cal_key] = calibrate_constants(
                                cache.get(lam_cal, gamma, alpha, 0.5))
                        constants = calibrations[cal_key]
                        kernel = cache.get(lam, gamma, alpha, p)
                        report = build_report(kernel, constants=constants,
                                              delta=config.delta,
                                              kappa=config.kappa,
                                              gamma_min=config.gamma_min)
                        row.update(report.as_dict())
                        if config.mc_samples > 0:
                            summary = mc_moments(kernel, config.mc_samples,
                                                 config.seed + index)
                            row.update(summary.as_dict())
                            if (config.grid_check
                                    and lam <= config.grid_check_lambda_cap):
                                coeffs = sample_coefficients(
                                    kernel.params, config.seed + index)
                                fast = mass_quadratic_form(kernel, coeffs)
                                slow = grid_quadrature_mass(kernel.params, coeffs)
                                row["grid_rel_diff"] = abs(fast - slow) / abs(slow)
                    except Exception as exc:  # recorded, sweep continues
                        row["error"] = f"{type(exc).__name__}: {exc}"
                    rows.append(row)
                    index += 1
    return rows, calibrations


def _format_cell(name: str, value) -> str:
    if value is None or value == "":
        return ""
    if name in _STR_COLUMNS:
        return str(value)
    if name in _BOOL_COLUMNS:
        return "true" if value else "false"
    if name in _INT_COLUMNS:
        return str(int(value))
    return f"{float(value):.16e}"


def parse_cell(name: str, text: str):
    """Inverse of the CSV cell formatting; used by round-trip checks."""
    if text == "":
        return None if name not in _STR_COLUMNS else ""
    if name in _STR_COLUMNS:
        return text
    if name in _BOOL_COLUMNS:
        return text == "true"
    if name in _INT_COLUMNS:
        return int(text)
    return float(text)


def _write_outputs(rows, columns, stem: str, meta: dict):
    base = Path(stem)
    if base.parent != Path("."):
        base.parent.mkdir(parents=True, exist_ok=True)
    csv_path = base.with_suffix(".csv")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(c, row.get(c)) for c in columns])
    json_path = base.with_suffix(".json")
    with open(json_path, "w") as fh:
        json.dump([{c: row.get(c) for c in columns} for row in rows],
                  fh, indent=2, sort_keys=False)
        fh.write("\n")
    meta_path = base.with_suffix(".meta.json")
    with open(meta_path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, json_path, meta_path


def _meta(config: SweepConfig, calibrations: dict) -> dict:
    return {
        "package": "biasedwave",
        "version": __version__,
        "seed": config.seed,
        "config": config.as_dict(),
        "quadrature": {"gl_order": GL_ORDER, "gl_refine_order": GL_REFINE_ORDER,
                       "pair_rel_tol": PAIR_REL_TOL},
        "calibrations": {f"gamma={g},alpha={a}": c.as_dict()
                         for (g, a), c in sorted(calibrations.items())},
    }


@dataclass(frozen=True)
class SweepResult:
    rows: list
    csv_path: Path
    json_path: Path
    meta_path: Path


def run_sweep(config: SweepConfig) -> SweepResult:
    """Evaluate every grid point, write CSV/JSON/meta, and return the rows."""
    cache = _KernelCache()
    rows, calibrations = _sweep_rows(config, cache)
    paths = _write_outputs(rows, SWEEP_COLUMNS, config.output_stem,
                           _meta(config, calibrations))
    return SweepResult(rows, *paths)


@dataclass(frozen=True)
class FamilyFit:
    """Lambda-exponent of the normalised expectation ratio for one family."""

    family: str
    gamma: float
    alpha: float
    beta: float | None
    fit: FitResult


@dataclass(frozen=True)
class ThresholdResult:
    rows: list
    fits: list
    csv_path: Path
    json_path: Path
    meta_path: Path


def _family_config(config: SweepConfig, family: str, rule) -> SweepConfig:
    if rule == "fair":
        p_rule = {"p_mode": "fixed", "p_values": (0.5,),
                  "p_coefficient": 0.0, "p_beta": None, "p_beta_factor": None}
    elif rule == "unfair":
        p_rule = {"p_mode": "fixed", "p_values": (1.0,),
                  "p_coefficient": 0.0, "p_beta": None, "p_beta_factor": None}
    else:
        p_rule = {"p_mode": "threshold", "p_values": (),
                  "p_coefficient": config.p_coefficient, "p_beta": None,
                  "p_beta_factor": float(rule)}
    return dataclasses.replace(config, **p_rule)


def threshold_experiment(config: SweepConfig) -> ThresholdResult:
    """Run the fair / at-threshold / super-threshold / fully-biased families.

    For each (family, gamma, alpha) the lambda-exponent of
    E_norm / vol_norm is fitted across the ladder.  The at-threshold family
    (beta = alpha/2) should stay flat; the super-threshold family
    (beta = alpha/4) should grow with exponent about alpha/2; the fully biased
    family should lose equidistribution at large lambda.
    """
    if config.p_mode != "threshold":
        raise ConfigError("threshold experiment requires a threshold p_rule")
    cache = _KernelCache()
    all_rows = []
    fits = []
    calibrations_all: dict = {}
    for family, rule in THRESHOLD_FAMILIES:
        fam_config = _family_config(config, family, rule)
        rows, calibrations = _sweep_rows(fam_config, cache)
        calibrations_all.update(calibrations)
        for row in rows:
            row["family"] = family
            row["beta"] = (fam_config.beta_for(row["alpha"])
                           if fam_config.p_mode == "threshold" else None)
        all_rows.extend(rows)
        for gamma in sorted({r["gamma"] for r in rows}):
            for alpha in fam_config.alpha_list:
                sel = [r for r in rows
                       if r["gamma"] == gamma and r["alpha"] == alpha
                       and not r["error"]]
                if len(sel) < 3:
                    continue
                lams = np.array([r["lambda"] for r in sel])
                ratio = np.array([r["E_norm"] / r["vol_norm"] for r in sel])
                beta = sel[0]["beta"]
                fits.append(FamilyFit(family=family, gamma=gamma, alpha=alpha,
                                      beta=beta,
                                      fit=fit_exponent(lams, ratio)))
    meta = _meta(config, calibrations_all)
    meta["fits"] = [{
        "family": f.family, "gamma": f.gamma, "alpha": f.alpha, "beta": f.beta,
        "slope": f.fit.slope, "r_squared": f.fit.r_squared,
        "point_count": f.fit.point_count,
    } for f in fits]
    paths = _write_outputs(all_rows, THRESHOLD_COLUMNS, config.output_stem, meta)
    return ThresholdResult(all_rows, fits, *paths)


# ---------------------------------------------------------------------------
# command-line interface
# ---------------------------------------------------------------------------

def _cmd_sweep(args) -> int:
    result = run_sweep(load_config(args.config))
    failures = sum(1 for r in result.rows if r["error"])
    print(f"wrote {result.csv_path} ({len(result.rows)} rows, {failures} failed)")
    return 0 if failures == 0 else 1


def _cmd_threshold(args) -> int:
    result = threshold_experiment(load_config(args.config))
    print(f"wrote {result.csv_path} ({len(result.rows)} rows, "
          f"{len(result.fits)} fits)")
    for f in result.fits:
        print(f"  {f.family:16s} gamma={f.gamma:g} alpha={f.alpha:g} "
              f"slope={f.fit.slope:+.3f} r2={f.fit.r_squared:.4f}")
    return 0


def _cmd_kernel(args) -> int:
    params = build_params(args.lam, args.gamma, args.alpha, args.p)
    kernel = build_kernel(params)
    export_kernel_csv(kernel, args.output)
    print(f"wrote {args.output} ({kernel.size} separations)")
    return 0


def _cmd_asymptotics(args) -> int:
    probes = residual_probe_points(args.w_min, args.w_max)
    check = asymptotic_check(probes)
    slope = check.residual_slope()
    radii = np.linspace(args.w_min, args.w_max,
                        max(2048, int(8 * (args.w_max - args.w_min) / np.pi)))
    envelope = surface_wave_envelope(2.0, radii / 2.0)
    print(json.dumps({
        "w_min": args.w_min, "w_max": args.w_max,
        "residual_slope": slope.slope, "residual_r_squared": slope.r_squared,
        "c_check": check.c_check,
        "envelope_exponent": envelope.envelope_exponent,
        "envelope_r_squared": envelope.envelope_fit.r_squared,
    }, indent=2))
    return 0


def _cmd_mc(args) -> int:
    config = load_config(args.config)
    config = dataclasses.replace(config, mc_samples=args.samples, seed=args.seed)
    result = run_sweep(config)
    failures = sum(1 for r in result.rows if r["error"])
    print(f"wrote {result.csv_path} ({len(result.rows)} rows, {failures} failed)")
    return 0 if failures == 0 else 1


def _cmd_fit(args) -> int:
    with open(args.csv) as fh:
        reader = csv.DictReader(fh)
        xs, ys = [], []
        for row in reader:
            x = row.get(args.x_col, "")
            y = row.get(args.y_col, "")
            if x and y:
                xs.append(float(x))
                ys.append(float(y))
    fit = fit_exponent(np.array(xs), np.array(ys))
    print(json.dumps({"slope": fit.slope, "intercept": fit.intercept,
                      "r_squared": fit.r_squared,
                      "point_count": fit.point_count}, indent=2))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="biasedwave",
        description="moment verification sweeps for biased-sign random waves")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="run a parameter sweep from a config")
    p_sweep.add_argument("config")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_thr = sub.add_parser("threshold", help="run the threshold-family experiment")
    p_thr.add_argument("config")
    p_thr.set_defaults(func=_cmd_threshold)

    p_ker = sub.add_parser("kernel", help="export one circulant kernel as CSV")
    p_ker.add_argument("--lambda", dest="lam", type=float, required=True)
    p_ker.add_argument("--gamma", type=float, required=True)
    p_ker.add_argument("--alpha", type=float, required=True)
    p_ker.add_argument("--p", type=float, default=0.5)
    p_ker.add_argument("--output", default="kernel.csv")
    p_ker.set_defaults(func=_cmd_kernel)

    p_asy = sub.add_parser("asymptotics",
                           help="check the large-argument angular integral")
    p_asy.add_argument("--w-min", type=float, required=True)
    p_asy.add_argument("--w-max", type=float, required=True)
    p_asy.set_defaults(func=_cmd_asymptotics)

    p_mc = sub.add_parser("mc", help="run a sweep with Monte Carlo overrides")
    p_mc.add_argument("--config", required=True)
    p_mc.add_argument("--samples", type=int, required=True)
    p_mc.add_argument("--seed", type=int, required=True)
    p_mc.set_defaults(func=_cmd_mc)

    p_fit = sub.add_parser("fit", help="fit a power-law exponent from CSV columns")
    p_fit.add_argument("csv")
    p_fit.add_argument("--x-col", required=True)
    p_fit.add_argument("--y-col", required=True)
    p_fit.set_defaults(func=_cmd_fit)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
