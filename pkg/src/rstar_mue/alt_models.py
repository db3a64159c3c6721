"""Univariate benchmarks: local level plus AR(p) noise, and Clark-type UC models."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import solve_discrete_lyapunov

from . import InputError, NumericalError
from .mle import ParameterSpec, maximize_likelihood, standard_errors
from .mue import LookupTable, MueResult, sw_mue_local_level
from .ssm import (DIFFUSE_KAPPA, StatePrior, StateSpace, kalman_filter, kalman_smoother,
                  log_likelihood)

MIN_LENGTH = 24


def pacf_to_ar(pacf) -> np.ndarray:
    """Map partial autocorrelations in (-1, 1) to stationary AR coefficients."""
    pacf = np.asarray(pacf, dtype=float)
    phi = np.zeros(0)
    for k, r in enumerate(pacf):
        phi = np.r_[phi - r * phi[::-1], r]
    return phi


def ar_to_pacf(phi) -> np.ndarray:
    """Inverse of `pacf_to_ar`; raises if the AR polynomial is not stationary."""
    phi = np.asarray(phi, dtype=float).copy()
    p = len(phi)
    out = np.zeros(p)
    for k in range(p, 0, -1):
        r = phi[k - 1]
        if abs(r) >= 1.0:
            raise InputError("AR coefficients are not stationary")
        out[k - 1] = r
        if k > 1:
            phi = (phi[: k - 1] + r * phi[: k - 1][::-1]) / (1.0 - r * r)
    return out


def ar_companion(phi) -> np.ndarray:
    p = len(phi)
    C = np.zeros((p, p))
    C[0] = phi
    C[1:, :-1] = np.eye(p - 1)
    return C


def ar_stationary_cov(phi, sigma: float) -> np.ndarray:
    """Unconditional covariance of the AR(p) companion state."""
    C = ar_companion(phi)
    Q = np.zeros_like(C)
    Q[0, 0] = sigma ** 2
    V = solve_discrete_lyapunov(C, Q)
    return 0.5 * (V + V.T)


# ---------------------------------------------------------------- local level

@dataclass(frozen=True)
class Sw98Params:
    sigma_level: float
    sigma_eps: float
    ar: np.ndarray
    level0: float | None
    loglik: float
    mode: str
    smoothed_level: np.ndarray = field(repr=False, default=None)
    lam: float | None = None
    mue: MueResult | None = field(repr=False, default=None)

    def as_dict(self) -> dict:
        d = {"sigma_level": self.sigma_level, "sigma_eps": self.sigma_eps}
        d.update({f"ar{i + 1}": float(v) for i, v in enumerate(self.ar)})
        if self.level0 is not None:
            d["level0"] = self.level0
        d["loglik"] = self.loglik
        if self.lam is not None:
            d["lambda"] = self.lam
        return d


def local_level_ssm(sigma_level: float, sigma_eps: float, phi) -> StateSpace:
    """State [level_t, u_t, ..., u_{t-p+1}], observation level_t + u_t."""
    p = len(phi)
    n = p + 1
    F = np.zeros((n, n))
    F[0, 0] = 1.0
    F[1:, 1:] = ar_companion(phi)
    H = np.zeros((1, n))
    H[0, 0] = H[0, 1] = 1.0
    S = np.zeros((n, 2))
    S[0, 0] = S[1, 1] = 1.0
    W = np.diag([sigma_level ** 2, sigma_eps ** 2])
    return StateSpace(np.zeros((1, 1)), H, F, S, np.zeros((1, 1)), W)


def local_level_prior(level0: float, phi, sigma_eps: float, diffuse: bool,
                      kappa: float = DIFFUSE_KAPPA) -> StatePrior:
    p = len(phi)
    P = np.zeros((p + 1, p + 1))
    P[1:, 1:] = ar_stationary_cov(phi, sigma_eps)
    if diffuse:
        P[0, 0] = kappa
    return StatePrior(np.r_[level0, np.zeros(p)], P, "diffuse" if diffuse else "fixed")


def estimate_sw98(gy, mode: str = "MPLE", sigma_fixed: float | None = None, ar_order: int = 4,
                  seed: int = 0, mue_test: str = "EW", table: LookupTable | None = None,
                  lag_convention: str = "demeaned") -> Sw98Params:
    """Local-level model with AR(p) noise.

    MPLE: the initial level is a parameter. MMLE: diffuse initial level.
    MUE: the level-shock sd is fixed (at `sigma_fixed`, or at the
    median-unbiased estimate when omitted) and the initial level estimated.
    """
    gy = np.asarray(gy, dtype=float).ravel()
    if len(gy) <= MIN_LENGTH:
        raise InputError(f"series length {len(gy)} must exceed {MIN_LENGTH}")
    if np.any(~np.isfinite(gy)):
        raise InputError("series contains non-finite values")
    mode = mode.upper()
    mue_res = None
    lam = None
    if mode == "MUE" and sigma_fixed is None:
        mue_res = sw_mue_local_level(gy, ar_order, table=table, lag_convention=lag_convention)
        est = mue_res.estimates[mue_test]
        sigma_fixed, lam = est.sigma, est.lam
    if mode not in ("MPLE", "MMLE", "MUE"):
        raise InputError(f"unknown mode {mode!r}")

    sd = float(np.std(gy))
    pac = [f"pacf{i + 1}" for i in range(ar_order)]
    names = (["sigma_level"] if mode != "MUE" else []) + ["sigma_eps"] + pac \
        + (["level0"] if mode != "MMLE" else [])
    init = {"sigma_level": 0.05 * sd, "sigma_eps": sd, "level0": float(gy[:8].mean())}
    init.update({n: 0.1 for n in pac})
    lower = [-1.0 if n in pac else -np.inf for n in names]
    upper = [1.0 if n in pac else np.inf for n in names]
    spec = ParameterSpec.build(names, [init[n] for n in names], lower, upper,
                               positive=("sigma_level", "sigma_eps"))
    idx = {n: i for i, n in enumerate(names)}
    diffuse = mode == "MMLE"
    y = gy[:, None]

    def unpack(theta):
        sl = float(sigma_fixed) if mode == "MUE" else theta[idx["sigma_level"]]
        phi = pacf_to_ar(theta[[idx[n] for n in pac]])
        l0 = 0.0 if diffuse else theta[idx["level0"]]
        return sl, theta[idx["sigma_eps"]], phi, l0

    def model(theta):
        sl, se, phi, l0 = unpack(theta)
        return local_level_ssm(sl, se, phi), local_level_prior(l0, phi, se, diffuse)

    def objective(theta):
        ssm, prior = model(theta)
        return log_likelihood(ssm, y, None, prior)

    res = maximize_likelihood(objective, spec, seed=seed)
    sl, se, phi, l0 = unpack(res.theta_hat)
    ssm, prior = model(res.theta_hat)
    f = kalman_filter(ssm, y, None, prior)
    with warnings.catch_warnings():
        # lagged noise states are revealed by the data, so P_{t+1|t} is singular
        warnings.simplefilter("ignore", RuntimeWarning)
        s = kalman_smoother(f, ssm)
    return Sw98Params(float(sl), float(se), phi, None if diffuse else float(l0), float(f.loglik),
                      mode, s.xi_smooth[:, 0], lam, mue_res)


def estimate_stage1_local_level(dy, ar_order: int = 4, mode: str = "MUE", seed: int = 0,
                                mue_test: str = "EW", table: LookupTable | None = None) -> Sw98Params:
    """Trend growth as the level of annualised output growth.

    `dy` is output growth in annualised percent; the level state plays the
    role of lagged trend growth.
    """
    return estimate_sw98(dy, mode, ar_order=ar_order, seed=seed, mue_test=mue_test, table=table)


# ---------------------------------------------------------------- Clark UC

CLARK_NAMES = ("a_y1", "a_y2", "sigma_ystar", "sigma_g", "sigma_ygap")


@dataclass(frozen=True)
class ClarkParams:
    a_y1: float
    a_y2: float
    sigma_ystar: float
    sigma_g: float
    sigma_ygap: float
    corr: float
    loglik: float
    std_errors: dict
    correlated: bool
    smoothed: np.ndarray = field(repr=False, default=None)

    def as_dict(self) -> dict:
        d = {n: getattr(self, n) for n in CLARK_NAMES}
        if self.correlated:
            d["corr"] = self.corr
        d["loglik"] = self.loglik
        return d


def clark_ssm(a1, a2, s_ystar, s_g, s_gap, corr=0.0) -> StateSpace:
    """State [y*_t, g_t, c_t, c_{t-1}]: y*_t = y*_{t-1} + g_{t-1} + e, g a random walk,
    c an AR(2); shocks (e_y*, e_g, e_c) with corr(e_c, e_y*) = corr."""
    F = np.array([[1.0, 1.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, a1, a2], [0.0, 0.0, 1.0, 0.0]])
    H = np.array([[1.0, 0.0, 1.0, 0.0]])
    S = np.zeros((4, 3))
    S[0, 0] = S[1, 1] = S[2, 2] = 1.0
    c = corr * s_ystar * s_gap
    W = np.array([[s_ystar ** 2, 0.0, c], [0.0, s_g ** 2, 0.0], [c, 0.0, s_gap ** 2]])
    return StateSpace(np.zeros((1, 1)), H, F, S, np.zeros((1, 1)), W)


def clark_prior(y0: float, g0: float, a1: float, a2: float, s_gap: float,
                kappa: float = DIFFUSE_KAPPA) -> StatePrior:
    P = np.zeros((4, 4))
    P[0, 0] = P[1, 1] = kappa
    P[2:, 2:] = ar_stationary_cov([a1, a2], s_gap)
    return StatePrior(np.array([y0, g0, 0.0, 0.0]), P, "diffuse")


def estimate_clark_uc(y, correlated: bool = False, corr_fixed: float | None = None,
                      seed: int = 0, kappa: float = DIFFUSE_KAPPA) -> ClarkParams:
    """UC model with random-walk drift and AR(2) cycle; y is 100 log GDP."""
    y = np.asarray(y, dtype=float).ravel()
    if len(y) <= MIN_LENGTH:
        raise InputError(f"series length {len(y)} must exceed {MIN_LENGTH}")
    y0, g0 = float(y[0]), float(np.mean(np.diff(y)))
    free_corr = correlated and corr_fixed is None
    names = ("pacf1", "pacf2", "sigma_ystar", "sigma_g", "sigma_ygap") + (("corr",) if free_corr else ())
    init = [0.9, -0.5, 0.6, 0.05, 0.5] + ([-0.5] if free_corr else [])
    lower = [-1.0, -1.0, 0.0, 0.0, 0.0] + ([-1.0] if free_corr else [])
    upper = [1.0, 1.0, np.inf, np.inf, np.inf] + ([1.0] if free_corr else [])
    spec = ParameterSpec.build(names, init, lower, upper,
                               positive=("sigma_ystar", "sigma_g", "sigma_ygap"))
    yy = y[:, None]
    rho_fixed = 0.0 if corr_fixed is None else float(corr_fixed)

    def natural_loglik(nat):
        a1, a2, sy, sg, sc = nat[:5]
        rho = nat[5] if free_corr else rho_fixed
        if abs(rho) > 1.0 or min(sy, sg, sc) < 0.0:
            raise NumericalError("parameters outside the admissible region")
        return log_likelihood(clark_ssm(a1, a2, sy, sg, sc, rho), yy, None,
                              clark_prior(y0, g0, a1, a2, sc, kappa))

    def to_natural(theta):
        phi = pacf_to_ar(theta[:2])
        return np.r_[phi, theta[2:]]

    res = maximize_likelihood(lambda th: natural_loglik(to_natural(th)), spec, seed=seed)
    nat = to_natural(res.theta_hat)
    a1, a2, sy, sg, sc = map(float, nat[:5])
    rho = float(nat[5]) if free_corr else rho_fixed
    out_names = CLARK_NAMES + (("corr",) if free_corr else ())

    def safe(v):
        try:
            return natural_loglik(v)
        except (NumericalError, InputError, ValueError, np.linalg.LinAlgError):
            return np.nan

    se = standard_errors(safe, nat)
    ssm = clark_ssm(a1, a2, sy, sg, sc, rho)
    prior = clark_prior(y0, g0, a1, a2, sc, kappa)
    f = kalman_filter(ssm, yy, None, prior)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        sm = kalman_smoother(f, ssm)
    return ClarkParams(a1, a2, sy, sg, sc, rho, float(f.loglik),
                       {n: (float(v) if np.isfinite(v) else None) for n, v in zip(out_names, se)},
                       correlated, sm.xi_smooth)


def write_params_csv(path, params: dict, std_errors: dict | None = None) -> None:
    std_errors = std_errors or {}
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["parameter", "value", "std_error"])
        for k, v in params.items():
            se = std_errors.get(k)
            w.writerow([k, f"{v:.10g}", "" if se is None else f"{se:.10g}"])
