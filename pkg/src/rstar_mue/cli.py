"""Command-line interface: `rstar <subcommand> [options]`.

Exit status: 0 success, 1 numerical failure, 2 input error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import platform
import sys
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import DataAssetError, InputError, NumericalError, RstarError, __version__
from . import reference as ref
from .alt_models import (estimate_clark_uc, estimate_stage1_local_level, estimate_sw98,
                         write_params_csv)
from .breaks import break_test_suite, write_f_sequence
from .data_ingest import (build_dataset, growth_stats, load_csv, parse_quarter, write_growth_stats)
from .mue import (MueResult, load_lookup_table, stage1_mue_lambda_g, stage2_mue_lambda_z,
                  sw_mue_local_level, write_mue_csv)
from .stages import (estimate_stage1, estimate_stage2, estimate_stage3, stage2_mue_inputs,
                     write_natural_rate_csv, write_parameters_csv, write_stage_states)

log = logging.getLogger("rstar")

DATA_ENV = "RSTAR_DATA_DIR"
HLW_FILE = "hlw_us.csv"
SW98_FILE = "sw98_gy.csv"
FRED_FILE = "fred_percapita_gy.csv"
DEMO_FILE = "synthetic_demo.csv"
TESTS = ("L", "MW", "EW", "QLR")


def fmt(v) -> str:
    return f"{float(v):.10g}"


# ------------------------------------------------------------------ config

@dataclass(frozen=True)
class RunConfig:
    data: str | None
    start: str | None
    end: str | None
    prior: str
    variant: str
    test: str
    out: str
    seed: int


def read_config(path) -> dict:
    """Flat key=value file; blank lines and # comments ignored."""
    p = Path(path)
    if not p.exists():
        raise InputError(f"config file not found: {p}")
    out = {}
    for n, line in enumerate(p.read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{p}:{n}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def resolve_data(path: str | None, default_name: str = HLW_FILE, demo: bool = False) -> Path:
    """Locate an input file: explicit path, then RSTAR_DATA_DIR, then ./data."""
    if demo:
        return Path(str(resources.files("rstar_mue") / "data" / DEMO_FILE))
    name = path or default_name
    cand = [Path(name)]
    if not Path(name).is_absolute():
        if os.environ.get(DATA_ENV):
            cand.append(Path(os.environ[DATA_ENV]) / name)
        cand.append(Path("data") / name)
    for c in cand:
        if c.exists():
            return c
    raise InputError(f"data file not found: {name}" + (f" (searched {', '.join(map(str, cand))})"))


def load_series_csv(path: Path, column: str | None = None) -> tuple[list[str], np.ndarray]:
    """First column labels, values from `column` (default: second column)."""
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise InputError(f"{path}: no data rows")
    header = [h.strip() for h in rows[0]]
    j = 1 if column is None else (header.index(column) if column in header else -1)
    if j < 0 or j >= len(header):
        raise InputError(f"{path}: column {column!r} not found")
    labels, vals = [], []
    for n, r in enumerate(rows[1:], start=2):
        try:
            vals.append(float(r[j]))
        except (ValueError, IndexError):
            raise InputError(f"{path}:{n}: malformed value") from None
        labels.append(r[0])
    return labels, np.array(vals)


def _dataset(args):
    path = resolve_data(args.data, HLW_FILE, getattr(args, "demo", False))
    raw = load_csv(path)
    return build_dataset(raw, args.start, args.end, label=path.name), path


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _print_mue(title: str, m: MueResult) -> None:
    print(title)
    for t in TESTS:
        if t in m.estimates:
            e = m.estimates[t]
            print(f"  {t:>3}  stat={fmt(e.statistic)}  lambda={fmt(e.lam)}  lambda/T={fmt(e.lam_over_T)}")


def _print_params(title: str, d: dict) -> None:
    print(title)
    for k, v in d.items():
        print(f"  {k:<12} {fmt(v)}")


def _sha(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(out: Path, cfg: dict, results: dict, files: list[Path]) -> Path:
    import scipy

    man = {
        "package": __version__, "python": platform.python_version(), "numpy": np.__version__,
        "scipy": scipy.__version__, "config": cfg, "results": results,
        "files": {f.name: _sha(f) for f in sorted(files)},
    }
    p = out / "manifest.json"
    p.write_text(json.dumps(man, indent=2, sort_keys=True) + "\n")
    return p


# ------------------------------------------------------------------ commands

def cmd_ingest(args) -> int:
    ds, path = _dataset(args)
    out = _outdir(args)
    target = out / "model_data.csv"
    with target.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "y", "pi", "pi_lag_avg", "pi_expected", "nominal_rate", "real_rate"])
        for i in range(ds.start, ds.stop):
            w.writerow([str(ds.dates[i])] + [fmt(getattr(ds, k)[i]) for k in
                       ("y", "pi", "pi_lag_avg", "pi_expected", "nominal_rate", "real_rate")])
    print(f"sample {ds.est_start} - {ds.est_end}, T = {ds.T}; wrote {target}")
    if args.subperiods:
        periods = []
        for item in args.subperiods.split(","):
            a, b = item.split("-") if "-" in item and item.count("-") == 1 else item.split("/")
            periods.append((parse_quarter(a), parse_quarter(b)))
        stats = growth_stats(load_csv(path), periods)
        write_growth_stats(out / "growth_stats.csv", stats)
        print(f"wrote {out / 'growth_stats.csv'}")
    return 0


def _lambda_arg(v: str | None):
    if v is None or v == "auto":
        return None
    try:
        return float(v)
    except ValueError:
        raise InputError(f"expected a number or 'auto', got {v!r}") from None


def _run_stage1(ds, args, out: Path | None):
    s1 = estimate_stage1(ds, prior=args.prior, by_bound=not args.no_by_bound,
                         by_initial=args.by_init, seed=args.seed)
    m1 = stage1_mue_lambda_g(s1.states_smoothed[:, 0], prefilter_ar1=args.prefilter_ar1)
    if out is not None:
        write_parameters_csv(out / "stage1_params.csv", s1)
        write_stage_states(out / "stage1_states.csv", s1, args.smoothed)
        write_mue_csv(out / "stage1_mue.csv", m1)
    return s1, m1


def cmd_stage1(args) -> int:
    ds, _ = _dataset(args)
    out = _outdir(args)
    s1, m1 = _run_stage1(ds, args, out)
    _print_params(f"stage 1 ({s1.variant}), loglik {fmt(s1.loglik)}", s1.theta)
    _print_mue("lambda_g", m1)
    return 0


def _stage2_mue_all(res_hlw, res_m0, out: Path | None) -> dict:
    lam = {}
    for model, res in (("hlw", res_hlw), ("m0", res_m0)):
        if res is None:
            continue
        inp = stage2_mue_inputs(res)
        for phi in ("time_varying", "constant"):
            m = stage2_mue_lambda_z(inp, model, phi)
            lam[(model, phi)] = m
            if out is not None:
                write_mue_csv(out / f"stage2_mue_{model}_{phi}.csv", m)
    return lam


def cmd_stage2(args) -> int:
    ds, _ = _dataset(args)
    out = _outdir(args)
    lg = _lambda_arg(args.lambda_g)
    mode = "direct_mle" if args.sigma_g == "mle" else "from_lambda_g"
    if mode == "from_lambda_g" and lg is None:
        _, m1 = _run_stage1(ds, args, out)
        lg = m1.lam(args.test)
    s2 = estimate_stage2(ds, args.variant, mode, lambda_g=lg, seed=args.seed)
    tag = f"stage2_{args.variant}"
    write_parameters_csv(out / f"{tag}_params.csv", s2)
    write_stage_states(out / f"{tag}_states.csv", s2, args.smoothed)
    label = "misspecified" if args.variant == "hlw" else "corrected"
    _print_params(f"stage 2 [{label}] ({s2.variant}), loglik {fmt(s2.loglik)}", s2.all_parameters())
    lam = _stage2_mue_all(s2 if args.variant == "hlw" else None,
                          s2 if args.variant == "m0" else None, out)
    for (model, phi), m in lam.items():
        _print_mue(f"lambda_z [{model}, {phi}]", m)
    return 0


def _auto_lambdas(ds, args, out: Path | None):
    lg = _lambda_arg(args.lambda_g)
    lz = _lambda_arg(args.lambda_z)
    if lg is None:
        _, m1 = _run_stage1(ds, args, out)
        lg = m1.lam(args.test)
    if lz is None:
        if args.variant == "hlw":
            s2 = estimate_stage2(ds, "hlw", "from_lambda_g", lambda_g=lg, seed=args.seed)
            lz = _stage2_mue_all(s2, None, out)[("hlw", "time_varying")].lam(args.test)
        else:
            s2 = estimate_stage2(ds, "m0", "direct_mle", seed=args.seed)
            lz = _stage2_mue_all(None, s2, out)[("m0", "constant")].lam(args.test)
    return lg, lz


def cmd_stage3(args) -> int:
    ds, _ = _dataset(args)
    out = _outdir(args)
    lg, lz = _auto_lambdas(ds, args, out)
    s3 = estimate_stage3(ds, lg, lz, args.mode, seed=args.seed)
    write_parameters_csv(out / f"stage3_{args.mode}_params.csv", s3)
    write_stage_states(out / f"stage3_{args.mode}_states.csv", s3, args.smoothed)
    write_natural_rate_csv(out / f"stage3_{args.mode}_rstar.csv", s3, args.smoothed)
    _print_params(f"stage 3 ({args.mode}), loglik {fmt(s3.loglik)}", s3.all_parameters())
    return 0


def run_pipeline(cfg: RunConfig, args) -> dict:
    """Stage 1 -> lambda_g -> Stage 2 (both variants) -> lambda_z -> Stage 3 (four modes)."""
    path = resolve_data(cfg.data, HLW_FILE, getattr(args, "demo", False))
    ds = build_dataset(load_csv(path), cfg.start, cfg.end, label=path.name)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    results: dict = {"T": ds.T, "sample": [str(ds.est_start), str(ds.est_end)]}
    stage = "stage1"
    try:
        s1, m1 = _run_stage1(ds, args, out)
        lg = m1.lam(cfg.test)
        results["stage1_loglik"] = s1.loglik
        results["lambda_g"] = lg
        stage = "stage2"
        s2h = estimate_stage2(ds, "hlw", "from_lambda_g", lambda_g=lg, seed=cfg.seed)
        s2m = estimate_stage2(ds, "m0", "direct_mle", seed=cfg.seed)
        for name, res in (("stage2_hlw", s2h), ("stage2_m0", s2m)):
            write_parameters_csv(out / f"{name}_params.csv", res)
            write_stage_states(out / f"{name}_states.csv", res, args.smoothed)
            results[f"{name}_loglik"] = res.loglik
        lam = _stage2_mue_all(s2h, s2m, out)
        lz = {f"{m}_{p}": r.lam(cfg.test) for (m, p), r in lam.items()}
        results["lambda_z"] = lz
        lz_main = lz["hlw_time_varying"] if cfg.variant == "hlw" else lz["m0_constant"]
        stage = "stage3"
        runs = {
            "hlw": dict(lambda_g=lg, lambda_z=lz_main, mode="hlw"),
            "mle_sigma_g_hlw": dict(lambda_g=None, lambda_z=lz["hlw_time_varying"], mode="mle_sigma_g"),
            "mle_sigma_g_m0": dict(lambda_g=None, lambda_z=lz["m0_constant"], mode="mle_sigma_g"),
            "mle_both": dict(lambda_g=None, lambda_z=None, mode="mle_both"),
        }
        for name, kw in runs.items():
            s3 = estimate_stage3(ds, kw["lambda_g"], kw["lambda_z"], kw["mode"], seed=cfg.seed)
            write_parameters_csv(out / f"stage3_{name}_params.csv", s3)
            write_stage_states(out / f"stage3_{name}_states.csv", s3, args.smoothed)
            write_natural_rate_csv(out / f"stage3_{name}_rstar.csv", s3, args.smoothed)
            results[f"stage3_{name}_loglik"] = s3.loglik
    except RstarError as exc:
        raise type(exc)(f"[{stage}] {exc}") from exc
    files = [p for p in out.glob("*.csv")]
    echo = {k: v for k, v in cfg.__dict__.items() if k != "out"}
    write_manifest(out, {**echo, "data": path.name}, results, files)
    return results


def cmd_pipeline(args) -> int:
    cfg = RunConfig(args.data, args.start, args.end, args.prior, args.variant, args.test, args.out,
                    args.seed)
    res = run_pipeline(cfg, args)
    print(f"lambda_g = {fmt(res['lambda_g'])}")
    for k, v in res["lambda_z"].items():
        print(f"lambda_z[{k}] = {fmt(v)}")
    print(f"outputs in {args.out}")
    return 0


def cmd_mue(args) -> int:
    path = resolve_data(args.input)
    _, x = load_series_csv(path, args.column)
    table = load_lookup_table(args.table) if args.table else None
    if args.method == "sw":
        m = sw_mue_local_level(x, args.ar_order, table=table, lag_convention=args.lag_convention)
    else:
        m = stage1_mue_lambda_g(x, prefilter_ar1=args.prefilter_ar1, table=table)
    out = _outdir(args)
    write_mue_csv(out / "mue.csv", m)
    _print_mue(f"MUE ({args.method}), T = {m.T_eff}", m)
    return 0


def cmd_breaktest(args) -> int:
    path = resolve_data(args.input)
    _, x = load_series_csv(path, args.column)
    suite = break_test_suite(x, None, args.trim)
    out = _outdir(args)
    write_f_sequence(out / "f_sequence.csv", suite)
    for t in TESTS:
        print(f"{t:>3} {fmt(suite.stat(t))}")
    return 0


def cmd_sw98(args) -> int:
    path = resolve_data(args.input, SW98_FILE)
    _, gy = load_series_csv(path, args.column)
    sigma = None if args.sigma is None else float(args.sigma)
    res = estimate_sw98(gy, args.mode, sigma_fixed=sigma, ar_order=args.ar_order, seed=args.seed,
                        mue_test=args.test, lag_convention=args.lag_convention)
    out = _outdir(args)
    write_params_csv(out / f"sw98_{args.mode.lower()}.csv", res.as_dict())
    _print_params(f"local level ({args.mode})", res.as_dict())
    return 0


def cmd_clark(args) -> int:
    ds, _ = _dataset(args)
    res = estimate_clark_uc(ds.lagged("y"), correlated=args.correlated, seed=args.seed)
    out = _outdir(args)
    name = "clark_uc_corr.csv" if args.correlated else "clark_uc0.csv"
    write_params_csv(out / name, res.as_dict(), res.std_errors)
    _print_params("Clark UC" + (" (correlated)" if args.correlated else ""), res.as_dict())
    return 0


def cmd_simulate(args) -> int:
    from . import simulation as sim

    ds, _ = _dataset(args)
    out = _outdir(args)
    if args.g_mode:
        s1, m1 = _run_stage1(ds, args, None)
        s2 = estimate_stage2(ds, "hlw", "from_lambda_g", lambda_g=m1.lam(args.test), seed=args.seed)
        models = sim.UnivariateModels.fit(stage2_mue_inputs(s2), seed=args.seed)
        cfg = sim.UnivariateConfig(args.g_mode, args.reps, args.seed, workers=args.workers)
        rep = sim.univariate_dgp_experiment(cfg, models)
    else:
        r_proc = sim.fit_arma(ds.lagged("real_rate"), 2, 1, seed=args.seed)
        cfg = sim.SpuriousnessConfig(args.dgp, args.theta_mode, args.reps, args.seed,
                                     workers=args.workers, r_process=r_proc,
                                     inits=sim.inits_from_dataset(ds))
        rep = sim.spuriousness_experiment(cfg)
    sim.write_report(out, rep)
    _print_params("lambda_z draws", {**rep.summary, "exceed_prob": rep.exceed_prob,
                                     "failures": rep.failures})
    return 0


# ------------------------------------------------------------------ replicate

REPLICATE_IDS = ("sw98", "fred-robustness", "stage1", "stage1-mue", "stage2", "stage2-mue",
                 "stage3", "local-level", "clark-uc")


def _check(rows: list, name: str, value: float, expected: float, tol: float) -> None:
    ok = bool(np.isfinite(value) and abs(value - expected) <= tol)
    rows.append([name, fmt(value), fmt(expected), fmt(tol), int(ok)])


def _replicate_one(tid: str, seed: int) -> list:
    rows: list = []
    if tid in ("sw98", "fred-robustness"):
        fname = SW98_FILE if tid == "sw98" else FRED_FILE
        _, gy = load_series_csv(resolve_data(None, fname))
        if tid == "sw98":
            legacy = sw_mue_local_level(gy, 4, lag_convention="gauss_legacy")
            for t in TESTS:
                _check(rows, f"stat_{t}", legacy.estimates[t].statistic, ref.SW98_BREAK_STATS[t], 1e-4)
                _check(rows, f"lambda_{t}", legacy.estimates[t].lam, ref.SW98_LAMBDA[t], 1e-2)
            for mode, target, sigma in (("MPLE", ref.SW98_MPLE, None), ("MMLE", ref.SW98_MMLE, None),
                                        ("MUE", ref.SW98_MUE_013, 0.13)):
                got = estimate_sw98(gy, mode, sigma_fixed=sigma, seed=seed).as_dict()
                for k, v in target.items():
                    _check(rows, f"{mode.lower()}_{k}", got[k], v, 1e-3 if k == "loglik" else 5e-3)
        else:
            m = sw_mue_local_level(gy, 4)
            for t in TESTS:
                _check(rows, f"lambda_{t}", m.estimates[t].lam, 0.0, 0.0)
        return rows
    ds = build_dataset(load_csv(resolve_data(None, HLW_FILE)), "1961:Q1", "2017:Q1")
    if tid in ("stage1", "stage1-mue", "stage2", "stage2-mue", "stage3"):
        s1 = estimate_stage1(ds, seed=seed)
        m1 = stage1_mue_lambda_g(s1.states_smoothed[:, 0])
        if tid == "stage1":
            for k, v in ref.STAGE1_BOUNDED.items():
                _check(rows, k, s1.theta[k], v, 5e-3)
            _check(rows, "loglik", s1.loglik, ref.STAGE1_BOUNDED_LOGLIK, 1e-3)
            return rows
        if tid == "stage1-mue":
            for t in TESTS:
                _check(rows, f"lambda_g_{t}", m1.lam(t), ref.STAGE1_LAMBDA_G[t], 1e-4)
            ar1 = stage1_mue_lambda_g(s1.states_smoothed[:, 0], prefilter_ar1=True)
            _check(rows, "ar1_lambda_g_EW", ar1.lam("EW"), ref.STAGE1_AR1_LAMBDA_G_EW, 1e-3)
            return rows
        lg = m1.lam("EW")
        s2h = estimate_stage2(ds, "hlw", "from_lambda_g", lambda_g=lg, seed=seed)
        s2m = estimate_stage2(ds, "m0", "direct_mle", seed=seed)
        if tid == "stage2":
            for k, v in ref.STAGE2_HLW.items():
                _check(rows, f"hlw_{k}", s2h.theta[k], v, 5e-3)
            _check(rows, "hlw_loglik", s2h.loglik, ref.STAGE2_HLW_LOGLIK, 1e-3)
            _check(rows, "m0_loglik", s2m.loglik, ref.STAGE2_M0_LOGLIK, 1e-3)
            s2d = estimate_stage2(ds, "hlw", "direct_mle", seed=seed)
            _check(rows, "hlw_mle_sigma_g", s2d.theta["sigma_g"], ref.STAGE2_HLW_MLE_SIGMA_G, 2e-3)
            return rows
        lam = _stage2_mue_all(s2h, s2m, None)
        if tid == "stage2-mue":
            for (model, phi), vals in ref.STAGE2_LAMBDA_Z.items():
                for t, v in vals.items():
                    _check(rows, f"{model}_{phi}_{t}", lam[(model, phi)].lam(t), v, 5e-4)
            return rows
        s3 = estimate_stage3(ds, lg, lam[("hlw", "time_varying")].lam("EW"), "hlw", seed=seed)
        _check(rows, "hlw_loglik", s3.loglik, ref.STAGE3_LOGLIK, 1e-3)
        _check(rows, "hlw_sigma_z_implied", s3.implied["sigma_z"], ref.STAGE3_HLW["sigma_z"], 2e-3)
        s3b = estimate_stage3(ds, None, None, "mle_both", seed=seed)
        _check(rows, "mle_both_loglik", s3b.loglik, ref.STAGE3_MLE_BOTH_LOGLIK, 2e-3)
        _check(rows, "mle_both_sigma_z", s3b.theta["sigma_z"], 0.0, 1e-4)
        return rows
    if tid == "local-level":
        dy = 4.0 * (ds.lagged("y") - ds.lagged("y", 1))
        mue = estimate_stage1_local_level(dy, mode="MUE", seed=seed)
        _check(rows, "mue_lambda_EW", mue.lam, ref.LOCAL_LEVEL_LAMBDA_EW, 1e-2)
        for mode, target in (("MPLE", ref.LOCAL_LEVEL_MPLE), ("MMLE", ref.LOCAL_LEVEL_MMLE),
                             ("MUE", ref.LOCAL_LEVEL_MUE_EW)):
            got = mue if mode == "MUE" else estimate_stage1_local_level(dy, mode=mode, seed=seed)
            for k, v in target.items():
                _check(rows, f"{mode.lower()}_{k}", got.as_dict()[k], v, 1e-3 if k == "loglik" else 5e-3)
        return rows
    if tid == "clark-uc":
        y = ds.lagged("y")
        u0 = estimate_clark_uc(y, seed=seed)
        uc = estimate_clark_uc(y, correlated=True, seed=seed)
        for k, v in ref.CLARK_UC0.items():
            _check(rows, f"uc0_{k}", u0.as_dict()[k], v, 1e-3 if k == "loglik" else 2e-3)
        for k, v in ref.CLARK_UC_CORR.items():
            _check(rows, f"uc_{k}", uc.as_dict()[k], v, 1e-3 if k == "loglik" else 5e-3)
        return rows
    raise InputError(f"unknown table id {tid!r}")


def cmd_replicate(args) -> int:
    ids = [t for t in (args.tables or "").split(",") if t]
    if args.tables == "all":
        ids = list(REPLICATE_IDS)
    unknown = [t for t in ids if t not in REPLICATE_IDS]
    if unknown:
        raise InputError(f"unknown table ids {unknown}; choose from {', '.join(REPLICATE_IDS)}")
    if not ids:
        return 0
    out = _outdir(args)
    report, missing = [], []
    for tid in ids:
        try:
            rows = _replicate_one(tid, args.seed)
        except InputError as exc:
            if "not found" in str(exc):
                missing.append(tid)
                print(f"{tid}: missing fixture ({exc})")
                continue
            raise
        with (out / f"replicate_{tid}.csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["item", "value", "expected", "tolerance", "ok"])
            w.writerows(rows)
        n_ok = sum(r[-1] for r in rows)
        report.append([tid, len(rows), n_ok])
        print(f"{tid}: {n_ok}/{len(rows)} cells within tolerance")
    with (out / "replicate_report.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["table", "cells", "within_tolerance"])
        w.writerows(report)
        for tid in missing:
            w.writerow([tid, 0, "missing fixture"])
    return 0


# ------------------------------------------------------------------ parser

DEFAULTS = {
    "data": None, "start": None, "end": None, "prior": "hlw", "variant": "hlw", "test": "EW",
    "out": "rstar_out", "seed": 0, "smoothed": True, "no_by_bound": False, "by_init": None,
    "prefilter_ar1": False, "sigma_g": "lambda", "lambda_g": "auto", "lambda_z": "auto",
    "mode": "hlw", "demo": False, "column": None, "method": "sw", "ar_order": 4, "trim": "sw",
    "lag_convention": "demeaned", "table": None, "sigma": None, "correlated": False,
    "dgp": "without_z", "theta_mode": "fixed", "reps": 1000, "g_mode": None, "workers": 1,
    "tables": "", "subperiods": None, "input": None,
}
_TYPES = {"seed": int, "ar_order": int, "reps": int, "workers": int, "by_init": float}
_BOOLS = {"smoothed", "no_by_bound", "prefilter_ar1", "demo", "correlated"}


def _common(p: argparse.ArgumentParser, data=True) -> None:
    p.add_argument("--config", help="flat key=value file; command-line flags take precedence")
    p.add_argument("--out", help="output directory (default rstar_out)")
    p.add_argument("--seed", type=int, help="optimizer / simulation seed (default 0)")
    if data:
        p.add_argument("--data", help=f"input CSV date,gdp,inflation,interest (default {HLW_FILE}, "
                                      f"searched in ${DATA_ENV} and ./data)")
        p.add_argument("--demo", action="store_true", default=None,
                       help="use the bundled synthetic demonstration dataset")
        p.add_argument("--start", help="first estimation quarter, e.g. 1961:Q1")
        p.add_argument("--end", help="last estimation quarter")


def _stage_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--prior", choices=("hlw", "diffuse"), help="state prior (default hlw)")
    p.add_argument("--no-by-bound", action="store_true", default=None,
                   help="drop the b_y >= 0.025 restriction in Stage 1")
    p.add_argument("--by-init", type=float, help="starting value for b_y in Stage 1")
    p.add_argument("--prefilter-ar1", action="store_true", default=None,
                   help="AR(1)-filter trend growth before the lambda_g break tests")
    p.add_argument("--test", choices=TESTS, help="break test used for lambda (default EW)")
    p.add_argument("--smoothed", dest="smoothed", action="store_true", default=None,
                   help="write smoothed states (default)")
    p.add_argument("--filtered", dest="smoothed", action="store_false",
                   help="write filtered states")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rstar", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="build model variables and growth statistics")
    _common(p)
    p.add_argument("--subperiods", help="comma list of START-END quarters for growth statistics")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("stage1", help="estimate Stage 1 and lambda_g")
    _common(p)
    _stage_flags(p)
    p.set_defaults(func=cmd_stage1)

    p = sub.add_parser("stage2", help="estimate Stage 2 and lambda_z")
    _common(p)
    _stage_flags(p)
    p.add_argument("--variant", choices=("hlw", "m0"), help="misspecified (hlw) or corrected (m0)")
    p.add_argument("--sigma-g", choices=("mle", "lambda"), help="estimate sigma_g or tie it to lambda_g")
    p.add_argument("--lambda-g", help="lambda_g value or 'auto' (run Stage 1)")
    p.set_defaults(func=cmd_stage2)

    p = sub.add_parser("stage3", help="estimate Stage 3 and the natural rate")
    _common(p)
    _stage_flags(p)
    p.add_argument("--variant", choices=("hlw", "m0"),
                   help="source of an automatic lambda_z: hlw time-varying or m0 constant")
    p.add_argument("--lambda-g", help="lambda_g value or 'auto'")
    p.add_argument("--lambda-z", help="lambda_z value or 'auto'")
    p.add_argument("--mode", choices=("hlw", "mle_sigma_g", "mle_both"))
    p.set_defaults(func=cmd_stage3)

    p = sub.add_parser("pipeline", help="run all three stages with both Stage-2 variants")
    _common(p)
    _stage_flags(p)
    p.add_argument("--variant", choices=("hlw", "m0"), help="lambda_z source for the headline Stage 3")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("mue", help="median-unbiased lambda for a series")
    _common(p, data=False)
    p.add_argument("--input", required=False, help="CSV with a label column and a value column")
    p.add_argument("--column")
    p.add_argument("--method", choices=("sw", "stage1"),
                   help="sw: AR-filtered local level; stage1: growth of a smoothed trend")
    p.add_argument("--ar-order", type=int)
    p.add_argument("--lag-convention", choices=("demeaned", "gauss_legacy"))
    p.add_argument("--prefilter-ar1", action="store_true", default=None)
    p.add_argument("--table", help="alternative look-up table CSV")
    p.set_defaults(func=cmd_mue)

    p = sub.add_parser("breaktest", help="F sequence and L, MW, EW, QLR statistics")
    _common(p, data=False)
    p.add_argument("--input")
    p.add_argument("--column")
    p.add_argument("--trim", choices=("sw", "hlw"))
    p.set_defaults(func=cmd_breaktest)

    p = sub.add_parser("sw98", help="local-level model with AR(4) noise")
    _common(p, data=False)
    p.add_argument("--input", help=f"growth series CSV (default {SW98_FILE})")
    p.add_argument("--column")
    p.add_argument("--mode", type=str.upper, choices=("MPLE", "MMLE", "MUE"), default=None)
    p.add_argument("--sigma", type=float, help="fixed level-shock sd for MUE")
    p.add_argument("--ar-order", type=int)
    p.add_argument("--test", choices=TESTS)
    p.add_argument("--lag-convention", choices=("demeaned", "gauss_legacy"))
    p.set_defaults(func=cmd_sw98)

    p = sub.add_parser("clark-uc", help="unobserved-components model of log GDP")
    _common(p)
    p.add_argument("--correlated", action="store_true", default=None)
    p.set_defaults(func=cmd_clark)

    p = sub.add_parser("simulate", help="Monte-Carlo lambda_z experiments")
    _common(p)
    _stage_flags(p)
    p.add_argument("--dgp", choices=("with_z", "without_z"))
    p.add_argument("--theta-mode", choices=("fixed", "reestimate"))
    p.add_argument("--reps", type=int)
    p.add_argument("--g-mode", choices=("smoothed", "rw", "wn", "arma_diff"),
                   help="run the univariate-DGP experiment with this trend-growth process")
    p.add_argument("--workers", type=int, help="parallel processes (results do not depend on it)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("replicate", help="re-estimate published tables and diff against them")
    _common(p, data=False)
    p.add_argument("--tables", help=f"comma list of {', '.join(REPLICATE_IDS)} or 'all'")
    p.set_defaults(func=cmd_replicate)
    return ap


def _merge(args, defaults: dict) -> argparse.Namespace:
    file_cfg = read_config(args.config) if getattr(args, "config", None) else {}
    for k, v in defaults.items():
        cur = getattr(args, k, None)
        if cur is not None:
            continue
        if k in file_cfg:
            raw = file_cfg[k]
            if k in _BOOLS:
                v = raw.lower() in ("1", "true", "yes", "on")
            elif k in _TYPES:
                try:
                    v = _TYPES[k](raw)
                except ValueError:
                    raise InputError(f"config {k}={raw!r} is not a valid {_TYPES[k].__name__}") from None
            else:
                v = raw
        setattr(args, k, v)
    if getattr(args, "mode", None) and args.command == "sw98":
        args.mode = args.mode.upper()
    elif args.command == "sw98" and args.mode == "hlw":
        args.mode = "MPLE"
    return args


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if not args.verbose:
        warnings.simplefilter("ignore", RuntimeWarning)
    try:
        args = _merge(args, DEFAULTS)
        return args.func(args)
    except (InputError, DataAssetError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
