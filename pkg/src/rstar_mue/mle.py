"""Bounded derivative-free maximum likelihood."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit

from . import InputError, NumericalError, RstarError

MARGIN = 1e-10
FATOL = 1e-8
XATOL = 1e-7
MAX_ITER = 5000
MAX_RESTARTS = 3
JITTER = 0.01
_BAD = 1e10


@dataclass(frozen=True)
class ParameterSpec:
    """Names, bounds and starting values of a free parameter vector.

    Parameters listed in `positive` are mapped through a log transform.
    Other parameters with one or two finite bounds are mapped through
    shifted-exponential or logistic transforms.
    """

    names: tuple[str, ...]
    initial: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    positive: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        k = len(self.names)
        for a in ("initial", "lower", "upper"):
            if len(getattr(self, a)) != k:
                raise InputError(f"{a} has wrong length")
        if np.any(self.lower > self.upper):
            raise InputError("lower bound above upper bound")

    @classmethod
    def build(cls, names: Sequence[str], initial, lower=None, upper=None, positive=()) -> "ParameterSpec":
        k = len(names)
        lo = np.full(k, -np.inf) if lower is None else np.asarray(lower, dtype=float)
        hi = np.full(k, np.inf) if upper is None else np.asarray(upper, dtype=float)
        pos = frozenset(positive)
        lo = np.array([max(0.0, l) if n in pos else l for n, l in zip(names, lo)])
        init = np.asarray(initial, dtype=float)
        init = np.clip(init, lo, hi)
        return cls(tuple(names), init, lo, hi, pos)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def with_initial(self, **values) -> "ParameterSpec":
        init = self.initial.copy()
        for k, v in values.items():
            init[self.index(k)] = v
        return ParameterSpec(self.names, np.clip(init, self.lower, self.upper), self.lower,
                             self.upper, self.positive)


def transform_bounds(spec: ParameterSpec):
    """Return (to_free, from_free) maps between bounded and unconstrained coordinates."""
    kinds = []
    for n, lo, hi in zip(spec.names, spec.lower, spec.upper):
        if n in spec.positive and lo == 0.0 and not np.isfinite(hi):
            kinds.append("log")
        elif np.isfinite(lo) and np.isfinite(hi):
            kinds.append("logit")
        elif np.isfinite(lo):
            kinds.append("lower")
        elif np.isfinite(hi):
            kinds.append("upper")
        else:
            kinds.append("free")
    lower, upper = spec.lower, spec.upper

    def to_free(theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if np.any(theta < lower - 1e-12) or np.any(theta > upper + 1e-12):
            raise InputError("parameter outside its bounds")
        u = np.empty_like(theta)
        for i, k in enumerate(kinds):
            th, lo, hi = theta[i], lower[i], upper[i]
            if k == "log":
                u[i] = math.log(max(th, MARGIN))
            elif k == "lower":
                u[i] = math.log(max(th - lo, 0.0) + MARGIN)
            elif k == "upper":
                u[i] = math.log(max(hi - th, 0.0) + MARGIN)
            elif k == "logit":
                p = min(max((th - lo) / (hi - lo), 0.0), 1.0)
                u[i] = logit((p + MARGIN) / (1.0 + 2.0 * MARGIN))
            else:
                u[i] = th
        return u

    def from_free(u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        theta = np.empty_like(u)
        for i, k in enumerate(kinds):
            lo, hi = lower[i], upper[i]
            if k == "log":
                theta[i] = math.exp(min(u[i], 700.0))
            elif k == "lower":
                theta[i] = lo + max(math.exp(min(u[i], 700.0)) - MARGIN, 0.0)
            elif k == "upper":
                theta[i] = hi - max(math.exp(min(u[i], 700.0)) - MARGIN, 0.0)
            elif k == "logit":
                p = expit(u[i]) * (1.0 + 2.0 * MARGIN) - MARGIN
                theta[i] = lo + (hi - lo) * min(max(p, 0.0), 1.0)
            else:
                theta[i] = u[i]
        return theta

    return to_free, from_free


@dataclass(frozen=True)
class OptimizationResult:
    theta_hat: np.ndarray
    loglik: float
    converged: bool
    n_iter: int
    restarts: int
    n_eval: int
    initial_loglik: float
    names: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return dict(zip(self.names, map(float, self.theta_hat)))


def _safe(objective, from_free, counter):
    def neg(u):
        counter[0] += 1
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                v = objective(from_free(u))
        except (NumericalError, FloatingPointError, np.linalg.LinAlgError, ValueError):
            return _BAD
        if not np.isfinite(v):
            return _BAD
        return -v
    return neg


def maximize_likelihood(objective: Callable[[np.ndarray], float], spec: ParameterSpec,
                        seed: int = 0, max_restarts: int = MAX_RESTARTS,
                        max_iter: int = MAX_ITER) -> OptimizationResult:
    """Nelder-Mead in transformed coordinates with deterministic jittered restarts."""
    to_free, from_free = transform_bounds(spec)
    try:
        f0 = float(objective(spec.initial))
    except RstarError as exc:
        raise NumericalError(f"objective fails at the initial point: {exc}") from exc
    if not np.isfinite(f0):
        raise NumericalError("objective is not finite at the initial point")
    counter = [0]
    neg = _safe(objective, from_free, counter)
    rng = np.random.default_rng(seed)
    u_best = to_free(spec.initial)
    f_best = -f0
    total_iter = 0
    converged = False
    restarts = 0
    start = u_best.copy()
    for attempt in range(max_restarts + 1):
        res = minimize(neg, start, method="Nelder-Mead",
                       options={"fatol": FATOL, "xatol": XATOL, "maxiter": max_iter,
                                "maxfev": 4 * max_iter, "adaptive": len(start) > 4})
        total_iter += int(res.nit)
        improved = f_best - res.fun
        if res.fun < f_best:
            u_best, f_best = np.asarray(res.x, dtype=float), float(res.fun)
        converged = bool(res.success)
        if attempt > 0 and improved < FATOL * 10 and converged:
            break
        if attempt == max_restarts:
            break
        restarts += 1
        start = u_best * (1.0 + JITTER * rng.standard_normal(len(u_best))) \
            + JITTER * rng.standard_normal(len(u_best)) * (u_best == 0)
    theta = from_free(u_best)
    return OptimizationResult(theta, -f_best, converged, total_iter, restarts, counter[0], f0,
                              spec.names)


def numerical_hessian(f: Callable[[np.ndarray], float], theta, rel_step: float = 1e-4) -> np.ndarray:
    """Central-difference Hessian with step rel_step * max(1, |theta_i|)."""
    theta = np.asarray(theta, dtype=float)
    k = len(theta)
    h = rel_step * np.maximum(1.0, np.abs(theta))
    H = np.empty((k, k))
    f0 = f(theta)
    for i in range(k):
        ei = np.zeros(k)
        ei[i] = h[i]
        H[i, i] = (f(theta + ei) - 2.0 * f0 + f(theta - ei)) / h[i] ** 2
        for j in range(i):
            ej = np.zeros(k)
            ej[j] = h[j]
            v = (f(theta + ei + ej) - f(theta + ei - ej) - f(theta - ei + ej) + f(theta - ei - ej))
            H[i, j] = H[j, i] = v / (4.0 * h[i] * h[j])
    return H


def standard_errors(f: Callable[[np.ndarray], float], theta) -> np.ndarray:
    """Square roots of the diagonal of the inverse negative Hessian; NaN if not PD."""
    H = numerical_hessian(f, theta)
    try:
        np.linalg.cholesky(-H)
        cov = np.linalg.inv(-H)
    except np.linalg.LinAlgError:
        return np.full(len(theta), np.nan)
    return np.sqrt(np.diag(cov))
