"""Seeded Monte-Carlo experiments on the lambda_z break-test procedure."""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from . import InputError, NumericalError, RstarError
from .data_ingest import ModelDataset, hp_filter
from .mle import ParameterSpec, maximize_likelihood
from .mue import Stage2MueInputs, stage2_mue_lambda_z
from .reference import LAMBDA_G_HLW, LAMBDA_Z_HLW, STAGE2_HLW, STAGE2_HLW_SIGMA_G, STAGE3_HLW
from .ssm import StatePrior

log = logging.getLogger(__name__)

BURN_IN = 100
MAX_ORDER = 2
DIVERGENCE = 1e6
MAX_REDRAWS = 5
HIST_BINS = 40
HIST_RANGE = (0.0, 0.12)
SIM_LENGTH = 229
N_RESERVED = 4
# stand-in real-rate process when none is fitted to data
DEFAULT_R_AR1 = (0.9, 2.0, 0.6)


# ------------------------------------------------------------------ ARMA

@dataclass(frozen=True)
class ArmaModel:
    """x_t - mu = sum ar_i (x_{t-i} - mu) + e_t + sum ma_j e_{t-j}, e ~ N(0, sigma^2)."""

    ar: tuple = ()
    ma: tuple = ()
    intercept: float = 0.0
    sigma: float = 1.0
    reflected: bool = False

    def __post_init__(self):
        if len(self.ar) > MAX_ORDER or len(self.ma) > MAX_ORDER:
            raise InputError(f"ARMA orders are capped at {MAX_ORDER}")
        if self.sigma < 0:
            raise InputError("innovation sd must be nonnegative")

    @property
    def order(self) -> tuple[int, int]:
        return len(self.ar), len(self.ma)


def _css_residuals(w: np.ndarray, ar, ma) -> np.ndarray:
    p = len(ar)
    u = w[p:].copy()
    for i, a in enumerate(ar, start=1):
        u -= a * w[p - i: len(w) - i]
    if len(ma):
        u = lfilter([1.0], np.r_[1.0, ma], u)
    return u


def _reflect_ma(ma: np.ndarray, sigma: float) -> tuple[np.ndarray, float, bool]:
    """Move MA roots inside the unit circle to their reciprocals."""
    if len(ma) == 0 or not np.any(ma):
        return ma, sigma, False
    # 1 + m1 z + m2 z^2; invertible when all roots lie outside the unit circle
    roots = np.roots(np.r_[1.0, ma][::-1])
    bad = np.abs(roots) < 1.0
    if not np.any(bad):
        return ma, sigma, False
    scale = 1.0
    new = roots.copy()
    for i in np.where(bad)[0]:
        scale *= 1.0 / abs(roots[i])
        new[i] = 1.0 / np.conj(roots[i])
    poly = np.real(np.poly(new))[::-1]  # ascending powers, leading term at z^q
    poly = poly / poly[0]
    return poly[1:], sigma * scale, True


def _fit_order(x: np.ndarray, p: int, q: int, seed: int):
    T = len(x)
    if T <= 10 * (p + q + 1):
        raise InputError(f"series of length {T} too short for ARMA({p},{q})")
    mu0 = float(x.mean())
    if p == 0 and q == 0:
        sig = float(np.std(x))
        return ArmaModel((), (), mu0, sig), -0.5 * T * (math.log(2 * math.pi * max(sig, 1e-300) ** 2) + 1), T

    n = T - p

    def css(theta):
        mu = theta[0]
        u = _css_residuals(x - mu, theta[1:1 + p], theta[1 + p:])
        s2 = float(u @ u) / n
        if not np.isfinite(s2) or s2 <= 0:
            return -np.inf
        return -0.5 * n * (math.log(2 * math.pi * s2) + 1.0)

    names = ("mu",) + tuple(f"ar{i + 1}" for i in range(p)) + tuple(f"ma{j + 1}" for j in range(q))
    init = [mu0] + [0.1] * p + [0.1] * q
    lo = [-np.inf] + [-3.0] * p + [-3.0] * q
    hi = [np.inf] + [3.0] * p + [3.0] * q
    res = maximize_likelihood(css, ParameterSpec.build(names, init, lo, hi), seed=seed)
    th = res.theta_hat
    mu, ar, ma = float(th[0]), th[1:1 + p], th[1 + p:]
    u = _css_residuals(x - mu, ar, ma)
    sig = math.sqrt(float(u @ u) / n)
    ma2, sig2, refl = _reflect_ma(np.asarray(ma), sig)
    if refl:
        log.warning("non-invertible MA part reflected inside the unit circle")
    return ArmaModel(tuple(map(float, ar)), tuple(map(float, ma2)), mu, sig2, refl), res.loglik, n


def fit_arma(series, p: int | None = None, q: int | None = None, seed: int = 0) -> ArmaModel:
    """Conditional-sum-of-squares fit; BIC selection over p, q <= 2 when orders are omitted."""
    x = np.asarray(series, dtype=float).ravel()
    if np.any(~np.isfinite(x)):
        raise InputError("series contains non-finite values")
    if p is not None and q is not None:
        return _fit_order(x, p, q, seed)[0]
    best, best_bic = None, np.inf
    for pp in range(MAX_ORDER + 1) if p is None else [p]:
        for qq in range(MAX_ORDER + 1) if q is None else [q]:
            try:
                m, ll, n = _fit_order(x, pp, qq, seed)
            except RstarError:
                continue
            k = pp + qq + 2
            bic = -2.0 * ll + k * math.log(n)
            if bic < best_bic:
                best, best_bic = m, bic
    if best is None:
        raise InputError("no admissible ARMA order for this series")
    return best


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def simulate_arma(model: ArmaModel, T: int, seed) -> np.ndarray:
    """T draws after discarding a burn-in of 100, started at the mean."""
    if T <= 0:
        raise InputError("T must be positive")
    e = _rng(seed).standard_normal(T + BURN_IN) * model.sigma
    w = lfilter(np.r_[1.0, model.ma], np.r_[1.0, -np.asarray(model.ar, dtype=float)], e)
    return model.intercept + w[BURN_IN:]


# ------------------------------------------------------------------ full system

@dataclass(frozen=True)
class SystemInits:
    pi0: tuple
    ystar0: tuple
    g0: float = 0.75
    z0: float = 0.0
    gap0: float = 0.0


@dataclass(frozen=True)
class SimulatedSystem:
    dataset: ModelDataset
    ystar: np.ndarray
    gap: np.ndarray
    g: np.ndarray
    z: np.ndarray
    redraws: int = 0


def inits_from_dataset(ds: ModelDataset) -> SystemInits:
    """Empirical inflation and HP-trend output over the four presample quarters."""
    lo = ds.start - ds.n_init
    trend = hp_filter(ds.init_window()).trend
    return SystemInits(tuple(map(float, ds.pi[lo: ds.start])), tuple(map(float, trend[: ds.n_init])))


def _simulate_once(theta: dict, T: int, with_z: bool, r_process: ArmaModel, rng, inits: SystemInits):
    n0 = N_RESERVED
    a1, a2, ar = theta["a_y1"], theta["a_y2"], theta["a_r"]
    bp, by = theta["b_pi"], theta["b_y"]
    r = simulate_arma(r_process, T, rng)
    e = rng.standard_normal((T, 5))
    g = np.full(T, inits.g0)
    z = np.full(T, inits.z0)
    ys = np.zeros(T)
    ys[:n0] = inits.ystar0
    gap = np.full(T, inits.gap0)
    pi = np.zeros(T)
    pi[:n0] = inits.pi0
    sz = theta.get("sigma_z", 0.0) if with_z else 0.0
    for t in range(n0, T):
        g[t] = g[t - 1] + theta["sigma_g"] * e[t, 0]
        z[t] = z[t - 1] + sz * e[t, 1]
        ys[t] = ys[t - 1] + g[t - 1] + theta["sigma_ystar"] * e[t, 2]
        rg1 = r[t - 1] - 4.0 * g[t - 1] - z[t - 1]
        rg2 = r[t - 2] - 4.0 * g[t - 2] - z[t - 2]
        gap[t] = a1 * gap[t - 1] + a2 * gap[t - 2] + ar / 2.0 * (rg1 + rg2) + theta["sigma_ygap"] * e[t, 3]
        pi[t] = (bp * pi[t - 1] + (1.0 - bp) * (pi[t - 2] + pi[t - 3] + pi[t - 4]) / 3.0
                 + by * gap[t - 1] + theta["sigma_pi"] * e[t, 4])
        if abs(gap[t]) > DIVERGENCE or not np.isfinite(gap[t]):
            return None
    return r, ys, gap, g, z, pi


def simulate_hlw_system(theta3: dict, T: int = SIM_LENGTH, with_z: bool = False,
                        r_process: ArmaModel | None = None, seed=0,
                        inits: SystemInits | None = None) -> SimulatedSystem:
    """Data from the full model with r* = 4g + z (or 4g when with_z is False).

    The first four quarters hold the initial values and are the presample
    of the returned dataset. Divergent paths are redrawn from child seeds,
    at most five times.
    """
    need = ("a_y1", "a_y2", "a_r", "b_pi", "b_y", "sigma_ygap", "sigma_pi", "sigma_ystar", "sigma_g")
    missing = [k for k in need if k not in theta3]
    if missing or (with_z and "sigma_z" not in theta3):
        raise InputError(f"simulation parameters missing {missing or ['sigma_z']}")
    if T <= 2 * N_RESERVED + 8:
        raise InputError("simulation length too short")
    r_process = r_process or ArmaModel((), (), 0.0, 0.0)
    inits = inits or SystemInits((2.0,) * 4, tuple(800.0 + 0.75 * k for k in range(-3, 1)))
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    candidates = [ss] + ss.spawn(MAX_REDRAWS)
    for k, child in enumerate(candidates):
        out = _simulate_once(theta3, T, with_z, r_process, np.random.default_rng(child), inits)
        if out is not None:
            r, ys, gap, g, z, pi = out
            ds = ModelDataset.from_arrays(ys + gap, pi, r, start=N_RESERVED, label="simulated")
            return SimulatedSystem(ds, ys, gap, g, z, k)
    raise NumericalError(f"simulated path diverged {MAX_REDRAWS + 1} times")


# ------------------------------------------------------------------ reports

@dataclass(frozen=True)
class SimulationReport:
    draws: np.ndarray
    summary: dict
    exceed_prob: float
    hist_edges: np.ndarray
    hist_counts: np.ndarray
    seed: int
    config: dict
    failures: int = 0
    redraws: int = 0


def summarize(draws, threshold: float, seed: int, config: dict, failures: int = 0,
              redraws: int = 0) -> SimulationReport:
    d = np.asarray(draws, dtype=float)
    ok = d[np.isfinite(d)]
    if ok.size == 0:
        raise NumericalError("every replication failed")
    summary = {"min": float(ok.min()), "max": float(ok.max()),
               "stdev": float(ok.std(ddof=1)) if ok.size > 1 else 0.0,
               "mean": float(ok.mean()), "median": float(np.median(ok))}
    exceed = float(np.mean(ok > threshold))
    counts, edges = np.histogram(np.clip(ok, *HIST_RANGE), bins=HIST_BINS, range=HIST_RANGE)
    return SimulationReport(d, summary, exceed, edges, counts, seed, config, failures, redraws)


def write_report(outdir, report: SimulationReport) -> None:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "draws.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rep", "lambda_z"])
        for i, v in enumerate(report.draws):
            w.writerow([i, "" if not np.isfinite(v) else f"{v:.10g}"])
    with (out / "summary.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["statistic", "value"])
        for k, v in report.summary.items():
            w.writerow([k, f"{v:.10g}"])
        w.writerow(["exceed_prob", f"{report.exceed_prob:.10g}"])
        w.writerow(["failures", report.failures])
        w.writerow(["redraws", report.redraws])
        w.writerow(["seed", report.seed])
    with (out / "hist.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin_lo", "bin_hi", "count"])
        for lo, hi, c in zip(report.hist_edges[:-1], report.hist_edges[1:], report.hist_counts):
            w.writerow([f"{lo:.10g}", f"{hi:.10g}", int(c)])


def _map(fn, tasks, workers: int):
    if workers <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


# ------------------------------------------------------------------ experiment 1

@dataclass(frozen=True)
class SpuriousnessConfig:
    dgp: str = "without_z"
    theta_mode: str = "fixed"
    reps: int = 1000
    seed: int = 0
    threshold: float = LAMBDA_Z_HLW
    test: str = "EW"
    workers: int = 1
    theta3: dict = field(default_factory=lambda: dict(STAGE3_HLW))
    theta2: dict = field(default_factory=lambda: dict(STAGE2_HLW))
    lambda_g: float = LAMBDA_G_HLW
    r_process: ArmaModel = ArmaModel((DEFAULT_R_AR1[0],), (), DEFAULT_R_AR1[1], DEFAULT_R_AR1[2])
    inits: SystemInits | None = None

    def validate(self) -> None:
        if self.reps < 1:
            raise InputError("reps must be at least 1")
        if self.dgp not in ("with_z", "without_z"):
            raise InputError(f"unknown dgp {self.dgp!r}")
        if self.theta_mode not in ("fixed", "reestimate"):
            raise InputError(f"unknown theta mode {self.theta_mode!r}")

    def echo(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k not in ("inits",)}
        d["r_process"] = asdict(self.r_process)
        return d


def _fixed_stage2_prior(ds: ModelDataset, theta2: dict, lambda_g: float):
    from .data_ingest import hlw_initialization
    from .stages import PRIOR_BASE, build_stage2

    xi00 = hlw_initialization(ds).xi00[2]
    d = build_stage2(theta2, ds, "hlw", lambda_g=lambda_g)
    P0 = PRIOR_BASE * np.eye(4)
    P = d.ssm.F @ P0 @ d.ssm.F.T + d.ssm.Q
    return d, StatePrior(xi00, 0.5 * (P + P.T), "hlw")


def _spurious_rep(args):
    cfg, child = args
    from .stages import estimate_stage2, stage2_mue_inputs, stage_result_at

    try:
        sim = simulate_hlw_system(cfg.theta3, SIM_LENGTH, cfg.dgp == "with_z", cfg.r_process, child,
                                  cfg.inits)
        ds = sim.dataset
        if cfg.theta_mode == "fixed":
            _, prior = _fixed_stage2_prior(ds, cfg.theta2, cfg.lambda_g)
            res = stage_result_at("stage2", cfg.theta2, ds, prior, "hlw", lambda_g=cfg.lambda_g)
        else:
            res = estimate_stage2(ds, "hlw", "from_lambda_g", lambda_g=cfg.lambda_g)
        m = stage2_mue_lambda_z(stage2_mue_inputs(res), "hlw", "time_varying")
        return m.estimates[cfg.test].lam_over_T, sim.redraws
    except RstarError as exc:
        log.warning("replication failed: %s", exc)
        return float("nan"), 0


def spuriousness_experiment(cfg: SpuriousnessConfig) -> SimulationReport:
    """lambda_z from the break-test procedure on data simulated from the full model."""
    cfg.validate()
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.reps)
    out = _map(_spurious_rep, [(cfg, c) for c in children], cfg.workers)
    draws = np.array([o[0] for o in out])
    return summarize(draws, cfg.threshold, cfg.seed, cfg.echo(),
                     int(np.sum(~np.isfinite(draws))), int(sum(o[1] for o in out)))


# ------------------------------------------------------------------ experiment 2

G_MODES = ("smoothed", "rw", "wn", "arma_diff")


@dataclass(frozen=True)
class UnivariateConfig:
    g_mode: str = "rw"
    reps: int = 1000
    seed: int = 0
    threshold: float = LAMBDA_Z_HLW
    test: str = "EW"
    sigma_g: float = STAGE2_HLW_SIGMA_G
    workers: int = 1

    def validate(self) -> None:
        if self.reps < 1:
            raise InputError("reps must be at least 1")
        if self.g_mode not in G_MODES:
            raise InputError(f"unknown g mode {self.g_mode!r}")


@dataclass(frozen=True)
class UnivariateModels:
    gap: ArmaModel
    r: ArmaModel
    dg: ArmaModel | None
    g_smoothed: np.ndarray
    params: dict

    @classmethod
    def fit(cls, empirical: Stage2MueInputs, seed: int = 0) -> "UnivariateModels":
        return cls(fit_arma(empirical.gap, seed=seed), fit_arma(empirical.r1, seed=seed),
                   fit_arma(np.diff(empirical.g1), seed=seed), np.asarray(empirical.g1, dtype=float),
                   dict(empirical.params))


def _univariate_rep(args):
    cfg, models, child = args
    rng = np.random.default_rng(child)
    T = len(models.g_smoothed)
    try:
        gap = simulate_arma(models.gap, T + 2, rng)
        r = simulate_arma(models.r, T + 2, rng)
        g0 = float(models.g_smoothed[0])
        if cfg.g_mode == "smoothed":
            g1 = models.g_smoothed
        elif cfg.g_mode == "rw":
            g1 = g0 + np.cumsum(cfg.sigma_g * rng.standard_normal(T))
        elif cfg.g_mode == "wn":
            g1 = float(models.g_smoothed.mean()) + cfg.sigma_g * rng.standard_normal(T)
        else:
            g1 = g0 + np.cumsum(simulate_arma(models.dg, T, rng))
        inp = Stage2MueInputs(gap[2:], gap[1:-1], gap[:-2], r[1:-1], r[:-2], g1, None, models.params)
        m = stage2_mue_lambda_z(inp, "hlw", "time_varying")
        return m.estimates[cfg.test].lam_over_T
    except RstarError as exc:
        log.warning("replication failed: %s", exc)
        return float("nan")


def univariate_dgp_experiment(cfg: UnivariateConfig, models: UnivariateModels) -> SimulationReport:
    """Break-test lambda_z on unrelated ARMA-simulated cycle, real rate and trend growth."""
    cfg.validate()
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.reps)
    draws = np.array(_map(_univariate_rep, [(cfg, models, c) for c in children], cfg.workers))
    echo = asdict(cfg)
    echo.update({"gap_model": asdict(models.gap), "r_model": asdict(models.r)})
    return summarize(draws, cfg.threshold, cfg.seed, echo, int(np.sum(~np.isfinite(draws))))
