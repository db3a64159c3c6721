"""Linear Gaussian state-space models: Kalman filter, fixed-interval smoother, likelihood.

Measurement:  y_t = A x_t + H xi_t + nu_t,      nu_t ~ N(0, R)
Transition:   xi_t = F xi_{t-1} + S eps_t,      eps_t ~ N(0, W)
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import NumericalError
from ._kernels import filter_loglik

DIFFUSE_KAPPA = 1e6
PIVOT_TOL = 1e-12
_LOG2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class StateSpace:
    A: np.ndarray
    H: np.ndarray
    F: np.ndarray
    S: np.ndarray
    R: np.ndarray
    W: np.ndarray

    def __post_init__(self):
        n_obs, n_state = self.H.shape
        if self.A.shape[0] != n_obs:
            raise ValueError("A and H disagree on the number of observables")
        if self.F.shape != (n_state, n_state):
            raise ValueError("F must be square with the state dimension of H")
        if self.S.shape[0] != n_state or self.W.shape != (self.S.shape[1], self.S.shape[1]):
            raise ValueError("S and W dimensions inconsistent")
        if self.R.shape != (n_obs, n_obs):
            raise ValueError("R must be n_obs x n_obs")
        if np.any(np.diag(self.R) < 0) or np.any(np.diag(self.W) < 0):
            raise ValueError("negative variance on the diagonal of R or W")

    @property
    def n_state(self) -> int:
        return self.F.shape[0]

    @property
    def n_obs(self) -> int:
        return self.H.shape[0]

    @property
    def Q(self) -> np.ndarray:
        q = self.S @ self.W @ self.S.T
        return 0.5 * (q + q.T)


@dataclass(frozen=True)
class StatePrior:
    xi00: np.ndarray
    P00: np.ndarray
    kind: str = "fixed"

    @classmethod
    def diffuse(cls, n_state: int, kappa: float = DIFFUSE_KAPPA, xi00=None) -> "StatePrior":
        xi = np.zeros(n_state) if xi00 is None else np.asarray(xi00, dtype=float)
        return cls(xi, kappa * np.eye(n_state), "diffuse")


@dataclass(frozen=True)
class FilterOutput:
    xi_pred: np.ndarray  # (T, n) xi_{t|t-1}
    P_pred: np.ndarray  # (T, n, n)
    xi_filt: np.ndarray  # (T, n) xi_{t|t}
    P_filt: np.ndarray
    innovations: np.ndarray  # (T, n_obs)
    innovation_cov: np.ndarray  # (T, n_obs, n_obs)
    loglik: float
    loglik_t: np.ndarray


@dataclass(frozen=True)
class SmootherOutput:
    xi_smooth: np.ndarray
    P_smooth: np.ndarray


def _as_2d(a, T=None) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    return a


def _chol(M: np.ndarray, t: int) -> np.ndarray:
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        raise NumericalError(f"innovation covariance not positive definite at t={t}") from None
    if np.min(np.diag(L)) ** 2 < PIVOT_TOL:
        raise NumericalError(f"innovation covariance singular at t={t}")
    return L


def kalman_filter(ssm: StateSpace, y, x, prior: StatePrior, store: bool = True) -> FilterOutput:
    """Prediction-error decomposition of the Gaussian likelihood.

    The prior is conditioned upon and adds no likelihood term of its own.
    """
    y = _as_2d(y)
    T = y.shape[0]
    if x is None:
        x = np.zeros((T, ssm.A.shape[1]))
    x = _as_2d(x)
    if x.shape[0] != T:
        raise ValueError(f"y has {T} rows but x has {x.shape[0]}")
    n = ssm.n_state
    m = ssm.n_obs
    xi = np.asarray(prior.xi00, dtype=float).reshape(n)
    P = np.asarray(prior.P00, dtype=float)
    if P.shape != (n, n):
        raise ValueError("prior dimension does not match the state")
    F, H, Q, R, A = ssm.F, ssm.H, ssm.Q, ssm.R, ssm.A
    Ht = H.T
    Ft = F.T
    offsets = x @ A.T

    if store:
        xi_pred = np.empty((T, n))
        P_pred = np.empty((T, n, n))
        xi_filt = np.empty((T, n))
        P_filt = np.empty((T, n, n))
        innov = np.empty((T, m))
        innov_cov = np.empty((T, m, m))
    ll_t = np.empty(T)
    const = m * _LOG2PI
    for t in range(T):
        xp = F @ xi
        Pp = F @ P @ Ft + Q
        Pp = 0.5 * (Pp + Pp.T)
        v = y[t] - offsets[t] - H @ xp
        PHt = Pp @ Ht
        Fv = H @ PHt + R
        L = _chol(Fv, t)
        # K = P H' Fv^{-1} via two triangular solves
        u = np.linalg.solve(L, v)
        Linv_HP = np.linalg.solve(L, PHt.T)
        ll_t[t] = -0.5 * (const + 2.0 * np.sum(np.log(np.diag(L))) + float(u @ u))
        xi = xp + Linv_HP.T @ u
        P = Pp - Linv_HP.T @ Linv_HP
        P = 0.5 * (P + P.T)
        if store:
            xi_pred[t] = xp
            P_pred[t] = Pp
            xi_filt[t] = xi
            P_filt[t] = P
            innov[t] = v
            innov_cov[t] = Fv
    ll = float(np.sum(ll_t))
    if not store:
        empty = np.empty((0,))
        return FilterOutput(empty, empty, xi[None, :], P[None], empty, empty, ll, ll_t)
    return FilterOutput(xi_pred, P_pred, xi_filt, P_filt, innov, innov_cov, ll, ll_t)


def log_likelihood(ssm: StateSpace, y, x, prior: StatePrior) -> float:
    """Log-likelihood only; same recursion as `kalman_filter`, compiled."""
    y = _as_2d(y)
    T = y.shape[0]
    x = np.zeros((T, ssm.A.shape[1])) if x is None else _as_2d(x)
    if x.shape[0] != T:
        raise ValueError(f"y has {T} rows but x has {x.shape[0]}")
    offsets = np.ascontiguousarray(x @ ssm.A.T)
    ll, t_fail = filter_loglik(
        np.ascontiguousarray(ssm.F, dtype=float), np.ascontiguousarray(ssm.H, dtype=float),
        ssm.Q, np.ascontiguousarray(ssm.R, dtype=float), offsets, np.ascontiguousarray(y),
        np.asarray(prior.xi00, dtype=float).reshape(ssm.n_state).copy(),
        np.ascontiguousarray(prior.P00, dtype=float), PIVOT_TOL)
    if t_fail >= 0:
        raise NumericalError(f"innovation covariance singular at t={t_fail}")
    return float(ll)


def kalman_smoother(f: FilterOutput, ssm: StateSpace) -> SmootherOutput:
    """Fixed-interval (Rauch-Tung-Striebel) smoother."""
    T, n = f.xi_filt.shape
    xs = np.empty((T, n))
    Ps = np.empty((T, n, n))
    xs[-1] = f.xi_filt[-1]
    Ps[-1] = f.P_filt[-1]
    F = ssm.F
    warned = False
    for t in range(T - 2, -1, -1):
        Pp = f.P_pred[t + 1]
        PfFt = f.P_filt[t] @ F.T
        try:
            c = np.linalg.cholesky(Pp)
            if np.min(np.diag(c)) ** 2 < PIVOT_TOL:
                raise np.linalg.LinAlgError
            J = np.linalg.solve(Pp, PfFt.T).T
        except np.linalg.LinAlgError:
            if not warned:
                warnings.warn(f"singular predicted covariance at t={t + 1}; using pseudo-inverse",
                              RuntimeWarning, stacklevel=2)
                warned = True
            J = PfFt @ np.linalg.pinv(Pp)
        xs[t] = f.xi_filt[t] + J @ (xs[t + 1] - f.xi_pred[t + 1])
        P = f.P_filt[t] + J @ (Ps[t + 1] - Pp) @ J.T
        Ps[t] = 0.5 * (P + P.T)
    return SmootherOutput(xs, Ps)


def hlw_initial_covariance(fit_model: Callable[[np.ndarray], StateSpace], n_state: int,
                           base: float = 0.2) -> np.ndarray:
    """Prior covariance F (base I) F' + Q evaluated at a preliminary fit.

    `fit_model(P00)` must estimate the model with the supplied prior
    covariance and return the state space at the estimates. The result equals
    the one-step-ahead covariance of the first period of that preliminary run.
    """
    P0 = base * np.eye(n_state)
    ssm = fit_model(P0)
    P = ssm.F @ P0 @ ssm.F.T + ssm.Q
    return 0.5 * (P + P.T)


def write_states_csv(path, xi: np.ndarray, P: np.ndarray, t_labels=None) -> None:
    T, n = xi.shape
    labels = range(1, T + 1) if t_labels is None else t_labels
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"state_{i + 1}" for i in range(n)] + [f"var_{i + 1}" for i in range(n)])
        for lab, row, cov in zip(labels, xi, P):
            w.writerow([str(lab)] + [f"{v:.10g}" for v in row] + [f"{v:.10g}" for v in np.diag(cov)])
