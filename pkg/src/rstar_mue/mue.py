"""Median-unbiased estimation of small variance ratios from break statistics."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import DataAssetError, InputError
from .breaks import BreakTestSuite, aggregate_break_stats, f_stat_sequence, nyblom_L, trimming

TESTS = ("L", "MW", "EW", "QLR")


@dataclass(frozen=True)
class LookupTable:
    """Statistic-to-lambda grids, one column per break test.

    `ci_lower`/`ci_upper` hold, per lambda, the statistic quantiles whose
    inversion gives the lower and upper ends of the 90% interval.
    `pvalue` holds (p, critical value) pairs under lambda = 0.
    """

    lam: np.ndarray
    stats: dict
    ci_lower: dict | None = None
    ci_upper: dict | None = None
    pvalue: tuple[np.ndarray, dict] | None = None
    source: str = ""

    def __post_init__(self):
        if self.lam[0] != 0.0 or np.any(np.diff(self.lam) < 0):
            raise DataAssetError("lambda grid must start at 0 and be nondecreasing")
        for t, col in self.stats.items():
            if np.any(np.diff(col) <= 0):
                raise DataAssetError(f"statistic grid for {t} not strictly increasing")


def _read_grid(path: Path, key: str):
    with path.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or key not in rows[0]:
        raise DataAssetError(f"{path}: missing {key!r} column")
    first = np.array([float(r[key]) for r in rows])
    cols = {t: np.array([float(r[t]) for r in rows]) for t in TESTS if t in rows[0]}
    return first, cols


def load_lookup_table(path=None) -> LookupTable:
    """Load the look-up asset and any CI / p-value sibling files next to it.

    Siblings: `<stem>_ci_lo.csv`, `<stem>_ci_hi.csv` (columns lambda,L,MW,EW,QLR)
    and `<stem>_pvalue.csv` (columns pvalue,L,MW,EW,QLR).
    """
    if path is None:
        path = Path(str(resources.files("rstar_mue") / "data" / "sw_lookup.csv"))
    path = Path(path)
    if not path.exists():
        raise DataAssetError(f"look-up table not found: {path}")
    lam, stats = _read_grid(path, "lambda")
    sib = {s: path.with_name(f"{path.stem}_{s}.csv") for s in ("ci_lo", "ci_hi", "pvalue")}
    ci_lo = ci_hi = pv = None
    if sib["ci_lo"].exists() and sib["ci_hi"].exists():
        _, ci_lo = _read_grid(sib["ci_lo"], "lambda")
        _, ci_hi = _read_grid(sib["ci_hi"], "lambda")
    if sib["pvalue"].exists():
        p, cols = _read_grid(sib["pvalue"], "pvalue")
        pv = (p, cols)
    return LookupTable(lam, stats, ci_lo, ci_hi, pv, str(path))


_DEFAULT: LookupTable | None = None


def default_table() -> LookupTable:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = load_lookup_table()
    return _DEFAULT


def _invert(grid_lam: np.ndarray, grid_stat: np.ndarray, stat: float) -> tuple[float, bool]:
    if stat <= grid_stat[0]:
        return 0.0, False
    if stat > grid_stat[-1]:
        return float(grid_lam[-1]), True
    return float(np.interp(stat, grid_stat, grid_lam)), False


def lambda_from_stat(table: LookupTable, test: str, stat: float) -> float:
    """Linear interpolation of lambda; 0 below the grid, clamped above it."""
    lam, _ = lambda_from_stat_flagged(table, test, stat)
    return lam


def lambda_from_stat_flagged(table: LookupTable, test: str, stat: float) -> tuple[float, bool]:
    if test not in table.stats:
        raise DataAssetError(f"look-up table has no column for {test}")
    if not np.isfinite(stat):
        raise InputError(f"non-finite {test} statistic")
    lam, extrapolated = _invert(table.lam, table.stats[test], float(stat))
    if extrapolated:
        warnings.warn(f"{test}={stat:.4g} above the look-up grid; lambda clamped at {lam}",
                      RuntimeWarning, stacklevel=2)
    return lam, extrapolated


def lookup_ci(table: LookupTable, test: str, stat: float) -> tuple[float, float]:
    """90% interval for lambda by inverting tabulated statistic quantiles."""
    if table.ci_lower is None or table.ci_upper is None:
        raise DataAssetError(
            f"no confidence-interval grids next to {table.source or 'the look-up table'}; "
            "supply <stem>_ci_lo.csv and <stem>_ci_hi.csv")
    if test not in table.ci_lower:
        raise DataAssetError(f"no CI grid for {test}")
    lo, _ = _invert(table.lam, np.maximum.accumulate(table.ci_lower[test]), float(stat))
    hi, _ = _invert(table.lam, np.maximum.accumulate(table.ci_upper[test]), float(stat))
    return min(lo, hi), max(lo, hi)


def lookup_pvalue(table: LookupTable, test: str, stat: float) -> float:
    """p-value of the no-break null by interpolating tabulated critical values."""
    if table.pvalue is None:
        raise DataAssetError(
            f"no p-value grid next to {table.source or 'the look-up table'}; supply <stem>_pvalue.csv")
    p, cols = table.pvalue
    if test not in cols:
        raise DataAssetError(f"no p-value grid for {test}")
    crit = cols[test]
    order = np.argsort(crit)
    return float(np.interp(stat, crit[order], p[order]))


def sigma_from_lambda(lam: float, T_eff: int, sigma_eps: float, a1: float) -> float:
    """sigma = (lambda / T) * sigma_eps / a(1)."""
    if T_eff <= 0:
        raise InputError("effective sample size must be positive")
    if a1 == 0:
        raise InputError("a(1) = 0: long-run scale undefined")
    return (lam / T_eff) * sigma_eps / a1


@dataclass(frozen=True)
class MueEstimate:
    test: str
    statistic: float
    lam: float
    lam_over_T: float
    sigma: float = float("nan")
    ci: tuple[float, float] | None = None
    sigma_ci: tuple[float, float] | None = None
    p_value: float | None = None
    extrapolated: bool = False


def _estimates(suite: BreakTestSuite, T_eff: int, table: LookupTable, scale: float | None) -> dict:
    out = {}
    for test in TESTS:
        stat = suite.stat(test)
        if not np.isfinite(stat) or test not in table.stats:
            continue
        lam, ext = lambda_from_stat_flagged(table, test, stat)
        ci = sci = pv = None
        if table.ci_lower is not None and table.ci_upper is not None:
            ci = lookup_ci(table, test, stat)
            if scale is not None:
                sci = (ci[0] / T_eff * scale, ci[1] / T_eff * scale)
        if table.pvalue is not None:
            pv = lookup_pvalue(table, test, stat)
        sigma = lam / T_eff * scale if scale is not None else float("nan")
        out[test] = MueEstimate(test, stat, lam, lam / T_eff, sigma, ci, sci, pv, ext)
    return out


@dataclass(frozen=True)
class ArFit:
    coef: np.ndarray
    sigma_eps: float
    a1: float
    mean: float
    filtered: np.ndarray
    explosive: bool


def fit_ar_filter(series, order: int = 4, lag_convention: str = "demeaned") -> ArFit:
    """OLS AR(p) on the demeaned series; returns a(L) applied to the series.

    lag_convention="gauss_legacy" reproduces a lag matrix whose first lag is
    demeaned while the remaining lags are raw.
    """
    x = np.asarray(series, dtype=float).ravel()
    T = len(x)
    if order < 0 or T <= 5 * max(order, 1):
        raise InputError(f"series of length {T} too short for AR({order})")
    mu = x.mean()
    e = x - mu
    if order == 0:
        return ArFit(np.zeros(0), float(np.std(e, ddof=0)), 1.0, mu, x.copy(), False)
    yv = e[order:]
    lags = []
    for j in range(1, order + 1):
        src = e if (lag_convention == "demeaned" or j == 1) else x
        lags.append(src[order - j: T - j])
    if lag_convention not in ("demeaned", "gauss_legacy"):
        raise InputError(f"unknown lag convention {lag_convention!r}")
    X = np.column_stack(lags)
    coef, *_ = np.linalg.lstsq(X, yv, rcond=None)
    resid = yv - X @ coef
    sigma = math.sqrt(float(resid @ resid) / (len(yv) - order))
    filt = x[order:] - sum(coef[j - 1] * x[order - j: T - j] for j in range(1, order + 1))
    roots = np.roots(np.r_[1.0, -coef][::-1]) if np.any(coef) else np.array([np.inf])
    explosive = bool(np.any(np.abs(roots) <= 1.0))
    if explosive:
        warnings.warn("fitted AR polynomial has a root on or inside the unit circle",
                      RuntimeWarning, stacklevel=2)
    return ArFit(coef, sigma, float(1.0 - coef.sum()), mu, filt, explosive)


@dataclass(frozen=True)
class MueResult:
    estimates: dict
    suite: BreakTestSuite
    T_eff: int
    ar: ArFit | None = None
    series: np.ndarray | None = None

    def lam(self, test: str = "EW") -> float:
        return self.estimates[test].lam_over_T


def sw_mue_local_level(series, ar_order: int = 4, trimming_mode: str = "sw",
                       table: LookupTable | None = None, lag_convention: str = "demeaned") -> MueResult:
    """Prefilter by a fitted AR(p), run break tests, invert the look-up table.

    The implied sigma is the standard deviation of the level increment,
    (lambda/T) sigma_eps / a(1), with T the filtered sample length.
    """
    table = table or default_table()
    ar = fit_ar_filter(series, ar_order, lag_convention)
    gy = ar.filtered
    T_eff = len(gy)
    tau0, tau1 = trimming(T_eff, trimming_mode)
    suite = aggregate_break_stats(f_stat_sequence(gy, None, tau0, tau1), gy, tau0, tau1)
    return MueResult(_estimates(suite, T_eff, table, ar.sigma_eps / ar.a1), suite, T_eff, ar, gy)


def stage1_mue_lambda_g(smoothed_trend, prefilter_ar1: bool = False,
                        table: LookupTable | None = None) -> MueResult:
    """lambda_g from break tests on annualised growth of the smoothed trend."""
    table = table or default_table()
    trend = np.asarray(smoothed_trend, dtype=float).ravel()
    if len(trend) < 2 * 4 + 4:
        raise InputError("smoothed trend too short for the break-date grid")
    growth = 400.0 * np.diff(trend)
    ar = None
    if prefilter_ar1:
        ar = fit_ar_filter(growth, 1)
        growth = ar.filtered
    n = len(growth)
    tau0, tau1 = trimming(n, "hlw")
    if np.ptp(growth) <= 1e-12 * max(1.0, np.abs(growth).max()):
        suite = BreakTestSuite(np.zeros(tau1 - tau0 + 1), tau0, tau1, 0.0, 0.0, 0.0, 0.0)
    else:
        suite = aggregate_break_stats(f_stat_sequence(growth, None, tau0, tau1), growth, tau0, tau1)
    return MueResult(_estimates(suite, n, table, None), suite, n, ar, growth)


@dataclass(frozen=True)
class Stage2MueInputs:
    """Smoothed cycle, lagged cycle, real-rate lags and trend-growth lags.

    All arrays cover the estimation sample. `g2` is only used by the
    corrected model.
    """

    gap: np.ndarray
    gap1: np.ndarray
    gap2: np.ndarray
    r1: np.ndarray
    r2: np.ndarray
    g1: np.ndarray
    g2: np.ndarray | None
    params: dict = field(default_factory=dict)


def stage2_regression(inp: Stage2MueInputs, model: str, phi_mode: str):
    """Dependent series and regressors of the lambda_z break regression.

    Returns (Y, X, GY) where X is None in constant mode and GY is the
    constant-coefficient series used for the L statistic.
    """
    p = inp.params
    if model == "hlw":
        gy = (inp.gap - p["a_y1"] * inp.gap1 - p["a_y2"] * inp.gap2
              - p["a_r"] * (inp.r1 + inp.r2) / 2.0 - p["a_g"] * inp.g1 - p["a_0"])
        X = np.column_stack([inp.gap1, inp.gap2, (inp.r1 + inp.r2) / 2.0, inp.g1,
                             np.ones(len(inp.gap))])
    elif model == "m0":
        if inp.g2 is None:
            raise InputError("corrected model needs the second trend-growth lag")
        rg = (inp.r1 + inp.r2 - 4.0 * (inp.g1 + inp.g2)) / 2.0
        gy = inp.gap - p["a_y1"] * inp.gap1 - p["a_y2"] * inp.gap2 - p["a_r"] * rg
        X = np.column_stack([inp.gap1, inp.gap2, rg])
    else:
        raise InputError(f"unknown stage-2 model {model!r}")
    if phi_mode == "time_varying":
        return inp.gap, X, gy
    if phi_mode == "constant":
        return gy, None, gy
    raise InputError(f"unknown phi mode {phi_mode!r}")


def stage2_mue_lambda_z(inp: Stage2MueInputs, model: str = "hlw", phi_mode: str = "time_varying",
                        table: LookupTable | None = None) -> MueResult:
    """lambda_z from break tests on the cycle equation."""
    table = table or default_table()
    Y, X, gy = stage2_regression(inp, model, phi_mode)
    n = len(Y)
    tau0, tau1 = trimming(n, "hlw")
    f = f_stat_sequence(Y, X, tau0, tau1)
    suite = aggregate_break_stats(f, gy, tau0, tau1)
    return MueResult(_estimates(suite, n, table, None), suite, n, None, Y)


def write_mue_csv(path, result: MueResult) -> None:
    def fmt(v):
        return "" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.10g}"

    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["test", "stat", "lambda", "lambda_over_T", "sigma", "ci_lo", "ci_hi", "pvalue"])
        for test in TESTS:
            if test not in result.estimates:
                continue
            e = result.estimates[test]
            lo, hi = e.ci if e.ci is not None else (None, None)
            w.writerow([test, fmt(e.statistic), fmt(e.lam), fmt(e.lam_over_T), fmt(e.sigma),
                        fmt(lo), fmt(hi), fmt(e.p_value)])
