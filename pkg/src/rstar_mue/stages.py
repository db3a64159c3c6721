"""The three-stage natural-rate state-space models and their estimation.

States (Stage 3): [y*_t, y*_{t-1}, y*_{t-2}, g_{t-1}, g_{t-2}, z_{t-1}, z_{t-2}].
Trend growth g is quarterly; the natural rate is r* = 4g + z.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import InputError, NumericalError
from .data_ingest import ModelDataset, hlw_initialization
from .mle import OptimizationResult, ParameterSpec, maximize_likelihood
from .ssm import (FilterOutput, SmootherOutput, StatePrior, StateSpace, kalman_filter,
                  kalman_smoother, log_likelihood, write_states_csv)

THETA1 = ("a_y1", "a_y2", "b_pi", "b_y", "g", "sigma_ygap", "sigma_pi", "sigma_ystar")
THETA2 = ("a_y1", "a_y2", "a_r", "a_0", "a_g", "b_pi", "b_y", "sigma_ygap", "sigma_pi", "sigma_ystar")
THETA3 = ("a_y1", "a_y2", "a_r", "b_pi", "b_y", "sigma_ygap", "sigma_pi", "sigma_ystar")
THETA_M0 = THETA3
SIGMAS = ("sigma_ygap", "sigma_pi", "sigma_ystar", "sigma_g", "sigma_z")

BY_FLOOR = 0.025
AR_CEILING = -0.0025
PRIOR_BASE = 0.2
Z_STATES = (5, 6)


@dataclass(frozen=True)
class StageData:
    """A built model: state space, observables, exogenous regressors and the
    deterministic offsets added back to the states after filtering."""

    ssm: StateSpace
    y: np.ndarray
    x: np.ndarray
    state_offset: np.ndarray


def _get(theta, names):
    if isinstance(theta, dict):
        missing = [n for n in names if n not in theta]
        if missing:
            raise InputError(f"parameter vector lacks {missing}")
        return {n: float(theta[n]) for n in names}
    theta = np.asarray(theta, dtype=float).ravel()
    if len(theta) < len(names):
        raise InputError(f"expected {len(names)} parameters, got {len(theta)}")
    return dict(zip(names, map(float, theta)))


def _observables(ds: ModelDataset) -> np.ndarray:
    return np.column_stack([ds.lagged("y"), ds.lagged("pi")])


def _ar_flag(p: dict) -> None:
    if abs(p["a_y1"] + p["a_y2"]) >= 1.0:
        warnings.warn("output-gap AR(2) has a unit or explosive root", RuntimeWarning, stacklevel=3)


def build_stage1(theta, ds: ModelDataset) -> StageData:
    """Output-gap/Phillips-curve model with a driftless random-walk trend,
    estimated on output net of the linear trend g*t."""
    p = _get(theta, THETA1)
    T = ds.T
    t = np.arange(1, T + 1, dtype=float)
    g = p["g"]
    y = _observables(ds)
    y[:, 0] -= g * t
    x = np.column_stack([ds.lagged("y", 1) - g * (t - 1), ds.lagged("y", 2) - g * (t - 2),
                         ds.lagged("pi", 1), ds.lagged("pi_lag_avg")])
    a1, a2, bp, by = p["a_y1"], p["a_y2"], p["b_pi"], p["b_y"]
    A = np.array([[a1, a2, 0.0, 0.0], [by, 0.0, bp, 1.0 - bp]])
    H = np.array([[1.0, -a1, -a2], [0.0, -by, 0.0]])
    F = np.array([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    S = np.array([[1.0], [0.0], [0.0]])
    W = np.array([[p["sigma_ystar"] ** 2]])
    R = np.diag([p["sigma_ygap"] ** 2, p["sigma_pi"] ** 2])
    offset = g * np.column_stack([t, t - 1, t - 2])
    return StageData(StateSpace(A, H, F, S, R, W), y, x, offset)


def _sigma_g(p: dict, lambda_g, sigma_g) -> float:
    if (lambda_g is None) == (sigma_g is None):
        raise InputError("supply exactly one of lambda_g and sigma_g")
    return float(sigma_g) if sigma_g is not None else float(lambda_g) * p["sigma_ystar"]


def build_stage2(theta, ds: ModelDataset, variant: str = "hlw", lambda_g=None,
                 sigma_g=None) -> StageData:
    """Stage 2 with trend growth as a random walk.

    variant "hlw" is the misspecified form whose trend equation loads on
    g_{t-2}; "m0" is the corrected five-state form without a_0 and a_g.
    """
    if variant == "hlw":
        p = _get(theta, THETA2)
    elif variant == "m0":
        p = _get(theta, THETA_M0)
    else:
        raise InputError(f"unknown stage-2 variant {variant!r}")
    sg = _sigma_g(p, lambda_g, sigma_g)
    T = ds.T
    y = _observables(ds)
    a1, a2, ar, bp, by = p["a_y1"], p["a_y2"], p["a_r"], p["b_pi"], p["b_y"]
    R = np.diag([p["sigma_ygap"] ** 2, p["sigma_pi"] ** 2])
    W = np.diag([p["sigma_ystar"] ** 2, sg ** 2])
    cols = [ds.lagged("y", 1), ds.lagged("y", 2), ds.lagged("real_rate", 1),
            ds.lagged("real_rate", 2), ds.lagged("pi", 1), ds.lagged("pi_lag_avg")]
    if variant == "hlw":
        x = np.column_stack(cols + [np.ones(T)])
        A = np.array([[a1, a2, ar / 2, ar / 2, 0.0, 0.0, p["a_0"]],
                      [by, 0.0, 0.0, 0.0, bp, 1.0 - bp, 0.0]])
        H = np.array([[1.0, -a1, -a2, p["a_g"]], [0.0, -by, 0.0, 0.0]])
        F = np.zeros((4, 4))
        F[0, 0] = F[0, 3] = F[1, 0] = F[2, 1] = F[3, 3] = 1.0
        S = np.zeros((4, 2))
        S[0, 0] = S[3, 1] = 1.0
    else:
        x = np.column_stack(cols)
        A = np.array([[a1, a2, ar / 2, ar / 2, 0.0, 0.0], [by, 0.0, 0.0, 0.0, bp, 1.0 - bp]])
        H = np.array([[1.0, -a1, -a2, -2.0 * ar, -2.0 * ar], [0.0, -by, 0.0, 0.0, 0.0]])
        F = np.zeros((5, 5))
        F[0, 0] = F[0, 3] = F[1, 0] = F[2, 1] = F[3, 3] = F[4, 3] = 1.0
        S = np.zeros((5, 2))
        S[0, 0] = S[0, 1] = S[3, 1] = 1.0
    n = F.shape[0]
    return StageData(StateSpace(A, H, F, S, R, W), y, x, np.zeros((T, n)))


def build_stage3(theta, ds: ModelDataset, lambda_g=None, lambda_z=None, sigma_g=None,
                 sigma_z=None) -> StageData:
    """Full model with r* = 4g + z in the output-gap equation.

    Unless given directly, sigma_g = lambda_g sigma_y* and
    sigma_z = lambda_z sigma_ygap / a_r.
    """
    p = _get(theta, THETA3)
    sg = _sigma_g(p, lambda_g, sigma_g)
    if (lambda_z is None) == (sigma_z is None):
        raise InputError("supply exactly one of lambda_z and sigma_z")
    a1, a2, ar, bp, by = p["a_y1"], p["a_y2"], p["a_r"], p["b_pi"], p["b_y"]
    if sigma_z is None:
        if ar == 0.0:
            raise InputError("a_r = 0: sigma_z = lambda_z sigma_ygap / a_r undefined")
        sz = float(lambda_z) * p["sigma_ygap"] / ar
    else:
        sz = float(sigma_z)
    T = ds.T
    y = _observables(ds)
    x = np.column_stack([ds.lagged("y", 1), ds.lagged("y", 2), ds.lagged("real_rate", 1),
                         ds.lagged("real_rate", 2), ds.lagged("pi", 1), ds.lagged("pi_lag_avg")])
    A = np.array([[a1, a2, ar / 2, ar / 2, 0.0, 0.0], [by, 0.0, 0.0, 0.0, bp, 1.0 - bp]])
    H = np.array([[1.0, -a1, -a2, -2.0 * ar, -2.0 * ar, -ar / 2, -ar / 2],
                  [0.0, -by, 0.0, 0.0, 0.0, 0.0, 0.0]])
    F = np.zeros((7, 7))
    for i, j in ((0, 0), (0, 3), (1, 0), (2, 1), (3, 3), (4, 3), (5, 5), (6, 5)):
        F[i, j] = 1.0
    S = np.zeros((7, 3))
    S[0, 0] = S[0, 1] = S[3, 1] = S[5, 2] = 1.0
    W = np.diag([p["sigma_ystar"] ** 2, sg ** 2, sz ** 2])
    R = np.diag([p["sigma_ygap"] ** 2, p["sigma_pi"] ** 2])
    return StageData(StateSpace(A, H, F, S, R, W), y, x, np.zeros((T, 7)))


def delete_states(ssm: StateSpace, drop, drop_shocks=()) -> StateSpace:
    """Remove state rows/columns (and optionally shocks) from a state space."""
    keep = [i for i in range(ssm.n_state) if i not in set(drop)]
    kw = [j for j in range(ssm.W.shape[0]) if j not in set(drop_shocks)]
    return StateSpace(ssm.A, ssm.H[:, keep], ssm.F[np.ix_(keep, keep)], ssm.S[np.ix_(keep, kw)],
                      ssm.R, ssm.W[np.ix_(kw, kw)])


def m0_from_stage3(stage3: StageData) -> StageData:
    """Corrected Stage 2 obtained by deleting the z block from Stage 3."""
    ssm = delete_states(stage3.ssm, Z_STATES, drop_shocks=(2,))
    return StageData(ssm, stage3.y, stage3.x, stage3.state_offset[:, :5])


@dataclass(frozen=True)
class StageResult:
    stage: str
    variant: str
    theta: dict
    loglik: float
    optimization: OptimizationResult | None
    prior: StatePrior
    data: StageData
    filtered: FilterOutput
    smoothed: SmootherOutput
    states_filtered: np.ndarray
    states_smoothed: np.ndarray
    series_filtered: dict
    series_smoothed: dict
    free: tuple = ()
    implied: dict = field(default_factory=dict)
    dates: tuple = ()
    flags: tuple = ()

    def series(self, smoothed: bool = True) -> dict:
        return self.series_smoothed if smoothed else self.series_filtered

    def all_parameters(self) -> dict:
        out = dict(self.theta)
        out.update(self.implied)
        return out


def _extract(stage: str, states: np.ndarray, y: np.ndarray) -> dict:
    out = {"y": y, "ystar": states[:, 0], "ygap": y - states[:, 0]}
    if states.shape[1] >= 4:
        out["g"] = states[:, 3]
        out["g_annual"] = 4.0 * states[:, 3]
    if states.shape[1] == 7:
        out["z"] = states[:, 5]
        out["rstar"] = 4.0 * states[:, 3] + states[:, 5]
    return out


def _run_filter(data: StageData, prior: StatePrior, stage: str):
    f = kalman_filter(data.ssm, data.y, data.x, prior)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        s = kalman_smoother(f, data.ssm)
    xf = f.xi_filt + data.state_offset
    xs = s.xi_smooth + data.state_offset
    y = data.y[:, 0] + data.state_offset[:, 0]
    return f, s, xf, xs, _extract(stage, xf, y), _extract(stage, xs, y)


def _fit(build, spec: ParameterSpec, prior_for, seed: int):
    """Two-pass HLW-style fit: a preliminary run with P00 = 0.2 I gives
    P00 = F (0.2 I) F' + Q, then the final run starts from the same values."""
    def objective_with(prior):
        def obj(theta):
            d = build(theta)
            return log_likelihood(d.ssm, d.y, d.x, prior)
        return obj

    prior = prior_for(None)
    if prior is None:
        d0 = build(spec.initial)
        n = d0.ssm.n_state
        base = StatePrior(prior_for("xi00"), PRIOR_BASE * np.eye(n), "fixed")
        pre = maximize_likelihood(objective_with(base), spec, seed=seed)
        ssm = build(pre.theta_hat).ssm
        P00 = ssm.F @ base.P00 @ ssm.F.T + ssm.Q
        prior = StatePrior(base.xi00, 0.5 * (P00 + P00.T), "hlw")
    res = maximize_likelihood(objective_with(prior), spec, seed=seed)
    return res, prior


def _prior_factory(kind: str, xi00: np.ndarray, kappa: float | None = None):
    def prior_for(request):
        if request == "xi00":
            return xi00
        if kind == "diffuse":
            from .ssm import DIFFUSE_KAPPA
            return StatePrior.diffuse(len(xi00), kappa or DIFFUSE_KAPPA, xi00)
        if kind == "hlw":
            return None
        raise InputError(f"unknown prior {kind!r}")
    return prior_for


def _finish(stage, variant, spec, res, prior, build, ds, free, implied_fn) -> StageResult:
    theta = dict(zip(spec.names, map(float, res.theta_hat)))
    data = build(res.theta_hat)
    f, s, xf, xs, sf, ss = _run_filter(data, prior, stage)
    flags = []
    if abs(theta["a_y1"] + theta["a_y2"]) >= 1.0:
        flags.append("ar2_nonstationary")
        warnings.warn("output-gap AR(2) has a unit or explosive root", RuntimeWarning, stacklevel=3)
    if not res.converged:
        flags.append("optimizer_not_converged")
        warnings.warn(f"{stage} optimizer did not report convergence", RuntimeWarning, stacklevel=3)
    dates = tuple(ds.dates[ds.start: ds.stop])
    return StageResult(stage, variant, theta, float(f.loglik), res, prior, data, f, s, xf, xs, sf, ss,
                       tuple(free), implied_fn(theta), dates, tuple(flags))


def _bounds(names, lower: dict, upper: dict):
    lo = [lower.get(n, -np.inf) for n in names]
    hi = [upper.get(n, np.inf) for n in names]
    return lo, hi


def estimate_stage1(ds: ModelDataset, prior: str = "hlw", by_bound: bool = True,
                    by_initial: float | None = None, seed: int = 0, kappa: float | None = None,
                    theta0=None) -> StageResult:
    """Maximum likelihood for Stage 1.

    prior "hlw" uses the two-pass F(0.2I)F' + Q covariance, "diffuse" uses
    kappa I. by_initial overrides the b_y starting value (e.g. the OLS slope).
    """
    init = hlw_initialization(ds)
    t0 = init.theta0[1].copy() if theta0 is None else np.asarray(theta0, dtype=float)
    if by_initial is not None:
        t0[THETA1.index("b_y")] = by_initial
    lo, hi = _bounds(THETA1, {"b_y": BY_FLOOR} if by_bound else {}, {})
    spec = ParameterSpec.build(THETA1, t0, lo, hi, positive=SIGMAS)

    def build(theta):
        return build_stage1(theta, ds)

    res, pr = _fit(build, spec, _prior_factory(prior, init.xi00[1], kappa), seed)
    return _finish("stage1", f"{prior}{'_bounded' if by_bound else '_free'}", spec, res, pr, build,
                   ds, THETA1, lambda th: {})


def estimate_stage2(ds: ModelDataset, variant: str = "hlw", sigma_g_mode: str = "from_lambda_g",
                    lambda_g: float | None = None, prior: str = "hlw", seed: int = 0,
                    theta0=None) -> StageResult:
    """Maximum likelihood for Stage 2, sigma_g tied to lambda_g or estimated."""
    init = hlw_initialization(ds)
    if variant == "hlw":
        names, base, xi00 = THETA2, init.theta0[2], init.xi00[2]
    elif variant == "m0":
        names, base, xi00 = THETA_M0, init.theta0["m0"], init.xi00["m0"]
    else:
        raise InputError(f"unknown stage-2 variant {variant!r}")
    t0 = base.copy() if theta0 is None else np.asarray(theta0, dtype=float)[:len(names)].copy()
    if sigma_g_mode == "from_lambda_g":
        if lambda_g is None:
            raise InputError("lambda_g is required when sigma_g is tied to it")
        lam = float(lambda_g)
    elif sigma_g_mode == "direct_mle":
        names = names + ("sigma_g",)
        sg0 = 0.05 if theta0 is None or len(theta0) <= len(t0) else float(theta0[len(t0)])
        t0 = np.r_[t0, sg0]
        lam = None
    else:
        raise InputError(f"unknown sigma_g mode {sigma_g_mode!r}")
    lo, hi = _bounds(names, {"b_y": BY_FLOOR}, {"a_r": AR_CEILING})
    spec = ParameterSpec.build(names, t0, lo, hi, positive=SIGMAS)

    def build(theta):
        if lam is None:
            return build_stage2(theta, ds, variant, sigma_g=theta[-1])
        return build_stage2(theta, ds, variant, lambda_g=lam)

    def implied(th):
        if lam is None:
            return {"lambda_g": th["sigma_g"] / th["sigma_ystar"]}
        return {"lambda_g": lam, "sigma_g": lam * th["sigma_ystar"]}

    res, pr = _fit(build, spec, _prior_factory(prior, xi00), seed)
    tag = "misspecified" if variant == "hlw" else "m0"
    return _finish("stage2", f"{tag}_{sigma_g_mode}", spec, res, pr, build, ds, names, implied)


def estimate_stage3(ds: ModelDataset, lambda_g: float | None, lambda_z: float | None,
                    mode: str = "hlw", prior: str = "hlw", seed: int = 0, theta0=None) -> StageResult:
    """Maximum likelihood for Stage 3.

    mode "hlw": sigma_g and sigma_z tied to lambda_g and lambda_z;
    "mle_sigma_g": sigma_g free, sigma_z tied to lambda_z;
    "mle_both": both free.
    """
    init = hlw_initialization(ds)
    names = THETA3
    t0 = init.theta0[3].copy() if theta0 is None else np.asarray(theta0, dtype=float)[:8].copy()
    if mode == "hlw":
        if lambda_g is None or lambda_z is None:
            raise InputError("hlw mode needs lambda_g and lambda_z")
    elif mode == "mle_sigma_g":
        if lambda_z is None:
            raise InputError("mle_sigma_g mode needs lambda_z")
        names = names + ("sigma_g",)
        t0 = np.r_[t0, 0.05]
    elif mode == "mle_both":
        names = names + ("sigma_g", "sigma_z")
        t0 = np.r_[t0, 0.05, 0.1]
    else:
        raise InputError(f"unknown stage-3 mode {mode!r}")
    lo, hi = _bounds(names, {"b_y": BY_FLOOR}, {"a_r": AR_CEILING})
    spec = ParameterSpec.build(names, t0, lo, hi, positive=SIGMAS)
    ig, iz = (names.index("sigma_g") if "sigma_g" in names else None,
              names.index("sigma_z") if "sigma_z" in names else None)

    def build(theta):
        kw = {}
        if ig is None:
            kw["lambda_g"] = lambda_g
        else:
            kw["sigma_g"] = theta[ig]
        if iz is None:
            kw["lambda_z"] = lambda_z
        else:
            kw["sigma_z"] = theta[iz]
        return build_stage3(theta, ds, **kw)

    def implied(th):
        out = {}
        if ig is None:
            out["sigma_g"] = lambda_g * th["sigma_ystar"]
            out["lambda_g"] = lambda_g
        else:
            out["lambda_g"] = th["sigma_g"] / th["sigma_ystar"]
        if iz is None:
            out["sigma_z"] = abs(lambda_z * th["sigma_ygap"] / th["a_r"])
            out["lambda_z"] = lambda_z
        else:
            out["lambda_z"] = abs(th["sigma_z"] * th["a_r"] / th["sigma_ygap"])
        return out

    res, pr = _fit(build, spec, _prior_factory(prior, init.xi00[3]), seed)
    return _finish("stage3", mode, spec, res, pr, build, ds, names, implied)


def stage_result_at(stage: str, theta, ds: ModelDataset, prior: StatePrior, variant: str = "hlw",
                    **kw) -> StageResult:
    """Filter and smooth at given parameters without estimation."""
    if stage == "stage1":
        names, build = THETA1, (lambda th: build_stage1(th, ds))
    elif stage == "stage2":
        names = THETA2 if variant == "hlw" else THETA_M0
        build = lambda th: build_stage2(th, ds, variant, **kw)  # noqa: E731
    elif stage == "stage3":
        names, build = THETA3, (lambda th: build_stage3(th, ds, **kw))
    else:
        raise InputError(f"unknown stage {stage!r}")
    p = _get(theta, names)
    vec = np.array([p[n] for n in names])
    data = build(vec)
    f, s, xf, xs, sf, ss = _run_filter(data, prior, stage)
    return StageResult(stage, variant, p, float(f.loglik), None, prior, data, f, s, xf, xs, sf, ss,
                       (), {}, tuple(ds.dates[ds.start: ds.stop]), ())


def extract_natural_rate(result: StageResult, smoothed: bool = True) -> dict:
    """r* = 4g + z with its components and the output gap."""
    if result.stage != "stage3":
        raise InputError("the natural rate is defined for the Stage-3 model only")
    s = result.series(smoothed)
    return {"rstar": s["rstar"], "g_annual": s["g_annual"], "z": s["z"], "ygap": s["ygap"]}


def stage2_mue_inputs(result: StageResult):
    """Break-regression inputs from smoothed Stage-2 states.

    Lagged gaps use the lagged trend states: ygap_{t-j} = y_{t-j} - y*_{t-j|T}.
    """
    from .mue import Stage2MueInputs

    if result.stage != "stage2":
        raise InputError("expects a Stage-2 result")
    xs = result.states_smoothed
    x = result.data.x
    y = result.data.y[:, 0]
    p = dict(result.theta)
    return Stage2MueInputs(gap=y - xs[:, 0], gap1=x[:, 0] - xs[:, 1], gap2=x[:, 1] - xs[:, 2],
                           r1=x[:, 2], r2=x[:, 3], g1=xs[:, 3],
                           g2=xs[:, 4] if xs.shape[1] > 4 else None, params=p)


def write_parameters_csv(path, result: StageResult) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["parameter", "value", "implied"])
        for k, v in result.theta.items():
            w.writerow([k, f"{v:.10g}", 0])
        for k, v in result.implied.items():
            if k not in result.theta:
                w.writerow([k, f"{v:.10g}", 1])
        w.writerow(["loglik", f"{result.loglik:.10g}", 0])


def write_stage_states(path, result: StageResult, smoothed: bool = True) -> None:
    xi = result.states_smoothed if smoothed else result.states_filtered
    P = result.smoothed.P_smooth if smoothed else result.filtered.P_filt
    write_states_csv(path, xi, P, [str(d) for d in result.dates])


def write_natural_rate_csv(path, result: StageResult, smoothed: bool = True) -> None:
    s = extract_natural_rate(result, smoothed)
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "rstar", "g_annual", "z", "ygap"])
        for i, d in enumerate(result.dates):
            w.writerow([str(d)] + [f"{s[k][i]:.10g}" for k in ("rstar", "g_annual", "z", "ygap")])
