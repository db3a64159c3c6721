"""Chow-type break-date F sequences and the L, MW, EW and QLR statistics."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from . import InputError

SW_TRIM = 0.15
HLW_EDGE = 4
_COLLINEAR_TOL = 1e-10


@dataclass(frozen=True)
class BreakTestSuite:
    f_sequence: np.ndarray
    tau0: int
    tau1: int
    L: float
    MW: float
    EW: float
    QLR: float

    @property
    def taus(self) -> np.ndarray:
        return np.arange(self.tau0, self.tau1 + 1)

    def stat(self, test: str) -> float:
        return float(getattr(self, test))


def trimming(T: int, mode: str = "sw") -> tuple[int, int]:
    """Candidate break-date range [tau0, tau1] for a sample of length T."""
    if mode == "sw":
        tau0 = int(math.floor(SW_TRIM * T))
    elif mode == "hlw":
        tau0 = HLW_EDGE
    else:
        raise InputError(f"unknown trimming mode {mode!r}")
    return tau0, T - tau0


def f_stat_sequence(Y, X=None, tau0: int | None = None, tau1: int | None = None) -> np.ndarray:
    """Squared t-statistics on a step dummy D_t(tau) = 1{t > tau}, t = 1..T.

    Without X the regression has an intercept and the dummy; with X the
    caller's regressors replace the intercept. Homoskedastic OLS variance.
    """
    Y = np.asarray(Y, dtype=float).ravel()
    T = len(Y)
    Z = np.ones((T, 1)) if X is None else np.asarray(X, dtype=float).reshape(T, -1)
    k = Z.shape[1]
    if tau0 is None or tau1 is None:
        tau0, tau1 = trimming(T, "sw")
    if not (1 <= tau0 < tau1 <= T - 1):
        raise InputError(f"invalid break-date range [{tau0}, {tau1}] for T={T}")
    if T - k - 1 <= 0:
        raise InputError("too few observations for the break regression")

    Zq, Zr = np.linalg.qr(Z)
    rank = int(np.sum(np.abs(np.diag(Zr)) > 1e-10 * max(1.0, np.abs(Zr).max())))
    if rank < k:
        raise InputError("break-regression design without the dummy is rank deficient")
    ey = Y - Zq @ (Zq.T @ Y)
    syy = float(ey @ ey)
    if syy <= 1e-14 * max(float(Y @ Y), 1e-300):
        raise InputError("zero residual variance: dependent series is constant or exactly fitted")

    taus = np.arange(tau0, tau1 + 1)
    D = (np.arange(1, T + 1)[:, None] > taus[None, :]).astype(float)
    ed = D - Zq @ (Zq.T @ D)
    sdd = np.einsum("ij,ij->j", ed, ed)
    sdy = ed.T @ ey
    dd_raw = np.einsum("ij,ij->j", D, D)
    ok = sdd > _COLLINEAR_TOL * np.maximum(dd_raw, 1.0)
    F = np.zeros(len(taus))
    if not np.all(ok):
        warnings.warn(f"collinear break regression at tau={taus[~ok].tolist()}; F set to 0",
                      RuntimeWarning, stacklevel=2)
    b2 = np.where(ok, sdy ** 2 / np.where(ok, sdd, 1.0), 0.0)
    ssr = np.maximum(syy - b2, 0.0)
    s2 = ssr / (T - k - 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        F = np.where(ok, b2 / s2, 0.0)
    return F


def nyblom_L(Y) -> float:
    """Mean squared scaled partial sum of the demeaned series over its variance."""
    Y = np.asarray(Y, dtype=float).ravel()
    T = len(Y)
    if T < 2:
        raise InputError("Nyblom statistic needs at least two observations")
    e = Y - Y.mean()
    var = float(e @ e) / T
    if var <= 1e-300 or var <= 1e-28 * float(Y @ Y) / T:
        raise InputError("Nyblom statistic undefined for a constant series")
    theta = np.cumsum(e) / math.sqrt(T)
    return float(np.sum(theta ** 2) / T / var)


def aggregate_break_stats(f_sequence, Y_for_L=None, tau0: int = 0, tau1: int | None = None) -> BreakTestSuite:
    f = np.asarray(f_sequence, dtype=float)
    if f.size == 0:
        raise InputError("empty F sequence")
    mw = float(np.mean(f))
    ew = float(logsumexp(0.5 * f) - math.log(f.size))
    qlr = float(np.max(f))
    L = nyblom_L(Y_for_L) if Y_for_L is not None else float("nan")
    return BreakTestSuite(f, tau0, tau0 + f.size - 1 if tau1 is None else tau1, L, mw, ew, qlr)


def break_test_suite(Y, X=None, trim: str = "sw", Y_for_L=None) -> BreakTestSuite:
    """Break statistics of Y with optional regressors; L uses Y unless Y_for_L is given."""
    Y = np.asarray(Y, dtype=float).ravel()
    tau0, tau1 = trimming(len(Y), trim)
    f = f_stat_sequence(Y, X, tau0, tau1)
    return aggregate_break_stats(f, Y if Y_for_L is None else Y_for_L, tau0, tau1)


def write_f_sequence(path, suite: BreakTestSuite) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tau", "F"])
        for tau, f in zip(suite.taus, suite.f_sequence):
            w.writerow([int(tau), f"{f:.10g}"])
