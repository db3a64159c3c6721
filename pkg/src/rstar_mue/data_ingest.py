"""Loading quarterly macro series, building model variables and HP-filter initialisation."""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.linalg import solveh_banded

from . import InputError

HLW_SMOOTHING = 36000.0
N_INIT = 4
MIN_PRESAMPLE = 8

_QUARTER_RE = re.compile(r"^\s*(\d{4})\s*(?:[.:/-]?\s*[Qq]|[.:])\s*(\d)\s*$")
_MONTH_RE = re.compile(r"^\s*(\d{4})-(\d{1,2})(?:-\d{1,2})?\s*$")


@dataclass(frozen=True, order=True)
class Quarter:
    year: int
    q: int

    def __post_init__(self):
        if not 1 <= self.q <= 4:
            raise InputError(f"quarter must be 1..4, got {self.q}")

    @property
    def ordinal(self) -> int:
        return 4 * self.year + (self.q - 1)

    @classmethod
    def from_ordinal(cls, n: int) -> "Quarter":
        return cls(n // 4, n % 4 + 1)

    def shift(self, k: int) -> "Quarter":
        return Quarter.from_ordinal(self.ordinal + k)

    def __str__(self) -> str:
        return f"{self.year}:Q{self.q}"


def parse_quarter(text: str) -> Quarter:
    """Parse `YYYY.Q`, `YYYY:Q`, `YYYYQq` or a `YYYY-MM` month into a quarter."""
    m = _QUARTER_RE.match(text)
    if m:
        return Quarter(int(m.group(1)), int(m.group(2)))
    m = _MONTH_RE.match(text)
    if m:
        month = int(m.group(2))
        if not 1 <= month <= 12:
            raise InputError(f"bad month in date {text!r}")
        return Quarter(int(m.group(1)), (month - 1) // 3 + 1)
    raise InputError(f"unrecognised date {text!r}")


@dataclass(frozen=True)
class RawMacroSeries:
    dates: tuple[Quarter, ...]
    gdp: np.ndarray
    inflation: np.ndarray
    nominal_rate: np.ndarray

    def __post_init__(self):
        n = len(self.dates)
        if n == 0:
            raise InputError("empty series")
        for name in ("gdp", "inflation", "nominal_rate"):
            if len(getattr(self, name)) != n:
                raise InputError(f"{name} has length {len(getattr(self, name))}, expected {n}")
        ords = np.array([d.ordinal for d in self.dates])
        if np.any(np.diff(ords) != 1):
            bad = int(np.argmax(np.diff(ords) != 1)) + 1
            raise InputError(f"dates not contiguous quarters at position {bad} ({self.dates[bad]})")
        if np.any(~(self.gdp > 0)):
            raise InputError("gdp must be positive everywhere")

    def index_of(self, quarter: Quarter) -> int:
        k = quarter.ordinal - self.dates[0].ordinal
        if not 0 <= k < len(self.dates):
            raise InputError(f"{quarter} outside data range {self.dates[0]}..{self.dates[-1]}")
        return k


def load_csv(path) -> RawMacroSeries:
    """Read a `date,gdp,inflation,interest` CSV file."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"data file not found: {path}")
    dates, gdp, infl, rate = [], [], [], []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise InputError(f"{path}: empty file")
        header = [h.strip().lower() for h in header]
        if header[:4] != ["date", "gdp", "inflation", "interest"]:
            raise InputError(f"{path}: header must be date,gdp,inflation,interest, got {','.join(header)}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 4:
                raise InputError(f"{path}:{line}: expected 4 fields, got {len(row)}")
            try:
                dates.append(parse_quarter(row[0]))
                gdp.append(float(row[1]))
                infl.append(float(row[2]))
                rate.append(float(row[3]))
            except (ValueError, InputError) as exc:
                raise InputError(f"{path}:{line}: {exc}") from None
    if not dates:
        raise InputError(f"{path}: no data rows")
    return RawMacroSeries(tuple(dates), np.array(gdp), np.array(infl), np.array(rate))


def write_csv(path, raw: RawMacroSeries) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "gdp", "inflation", "interest"])
        for d, g, p, i in zip(raw.dates, raw.gdp, raw.inflation, raw.nominal_rate):
            w.writerow([f"{d.year}.{d.q}", f"{g:.10g}", f"{p:.10g}", f"{i:.10g}"])


def moving_average(x: np.ndarray, lags: Sequence[int]) -> np.ndarray:
    """Average of x_{t-j} over j in `lags`; NaN where a lag is unavailable."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for j in lags:
        shifted = np.full_like(x, np.nan)
        if j < len(x):
            shifted[j:] = x[: len(x) - j]
        out += shifted
    return out / len(lags)


@dataclass(frozen=True)
class ModelDataset:
    """Aligned quarterly model variables.

    Arrays run over the whole raw range; `start` is the array index of the
    first estimation quarter and `stop` is one past the last.
    """

    dates: tuple[Quarter, ...]
    y: np.ndarray
    pi: np.ndarray
    pi_lag_avg: np.ndarray
    pi_expected: np.ndarray
    nominal_rate: np.ndarray
    real_rate: np.ndarray
    start: int
    stop: int
    n_init: int = N_INIT
    label: str = field(default="")

    @property
    def T(self) -> int:
        return self.stop - self.start

    @property
    def est_start(self) -> Quarter:
        return self.dates[self.start]

    @property
    def est_end(self) -> Quarter:
        return self.dates[self.stop - 1]

    def lagged(self, name: str, lag: int = 0) -> np.ndarray:
        """Series `name` at t - lag for every estimation quarter t."""
        x = getattr(self, name)
        lo = self.start - lag
        if lo < 0:
            raise InputError(f"{name} lag {lag} reaches before the data")
        out = np.asarray(x[lo: self.stop - lag], dtype=float)
        if np.any(np.isnan(out)):
            raise InputError(f"{name} lag {lag} undefined inside the estimation sample")
        return out

    def init_window(self) -> np.ndarray:
        """100*log GDP from n_init quarters before the sample start to its end."""
        return self.y[self.start - self.n_init: self.stop]

    def restrict(self, est_start: Quarter | None = None, est_end: Quarter | None = None) -> "ModelDataset":
        first = self.dates[0].ordinal
        start = self.start if est_start is None else est_start.ordinal - first
        stop = self.stop if est_end is None else est_end.ordinal - first + 1
        _check_bounds(self.dates, start, stop)
        return ModelDataset(self.dates, self.y, self.pi, self.pi_lag_avg, self.pi_expected,
                            self.nominal_rate, self.real_rate, start, stop, self.n_init, self.label)

    @classmethod
    def from_arrays(cls, y, pi, real_rate, start: int = N_INIT, first: Quarter = Quarter(1960, 1),
                    nominal_rate=None, label: str = "") -> "ModelDataset":
        """Dataset from already-built series (used for simulated data)."""
        y = np.asarray(y, dtype=float)
        pi = np.asarray(pi, dtype=float)
        real_rate = np.asarray(real_rate, dtype=float)
        n = len(y)
        dates = tuple(first.shift(k) for k in range(n))
        pe = moving_average(pi, [0, 1, 2, 3])
        nominal = real_rate + pe if nominal_rate is None else np.asarray(nominal_rate, dtype=float)
        return cls(dates, y, pi, moving_average(pi, [2, 3, 4]), pe, nominal, real_rate,
                   start, n, N_INIT, label)


def _check_bounds(dates, start: int, stop: int) -> None:
    if start < MIN_PRESAMPLE:
        raise InputError(
            f"sample start needs at least {MIN_PRESAMPLE} presample quarters, data begin {dates[0]}")
    if stop > len(dates) or stop - start < 2 * MIN_PRESAMPLE:
        raise InputError("estimation sample too short or beyond the data")


def build_dataset(raw: RawMacroSeries, est_start: Quarter | str | None = None,
                  est_end: Quarter | str | None = None, label: str = "") -> ModelDataset:
    """Construct y = 100 ln GDP, inflation averages and the ex-ante real rate."""
    if isinstance(est_start, str):
        est_start = parse_quarter(est_start)
    if isinstance(est_end, str):
        est_end = parse_quarter(est_end)
    start = MIN_PRESAMPLE if est_start is None else raw.index_of(est_start)
    stop = len(raw.dates) if est_end is None else raw.index_of(est_end) + 1
    _check_bounds(raw.dates, start, stop)
    pi = np.asarray(raw.inflation, dtype=float)
    pe = moving_average(pi, [0, 1, 2, 3])
    return ModelDataset(
        dates=raw.dates,
        y=100.0 * np.log(raw.gdp),
        pi=pi,
        pi_lag_avg=moving_average(pi, [2, 3, 4]),
        pi_expected=pe,
        nominal_rate=np.asarray(raw.nominal_rate, dtype=float),
        real_rate=raw.nominal_rate - pe,
        start=start,
        stop=stop,
        label=label,
    )


@dataclass(frozen=True)
class HpDecomposition:
    trend: np.ndarray
    cycle: np.ndarray
    smoothing: float


def _second_difference(n: int) -> np.ndarray:
    d = np.zeros((n - 2, n))
    for i in range(n - 2):
        d[i, i: i + 3] = (1.0, -2.0, 1.0)
    return d


def hp_filter(series, smoothing: float = HLW_SMOOTHING) -> HpDecomposition:
    """Hodrick-Prescott trend solving (I + smoothing * D'D) trend = series."""
    y = np.asarray(series, dtype=float)
    n = len(y)
    if n < 4:
        raise InputError("HP filter needs at least 4 observations")
    if not smoothing > 0:
        raise InputError("HP smoothing must be positive")
    if n < 8:
        d = _second_difference(n)
        trend = np.linalg.solve(np.eye(n) + smoothing * d.T @ d, y)
    else:
        # upper banded storage of the symmetric pentadiagonal matrix
        main = np.full(n, 6.0)
        main[[0, -1]] = 1.0
        main[[1, -2]] = 5.0
        off1 = np.full(n - 1, -4.0)
        off1[[0, -1]] = -2.0
        ab = np.zeros((3, n))
        ab[2] = 1.0 + smoothing * main
        ab[1, 1:] = smoothing * off1
        ab[0, 2:] = smoothing
        trend = solveh_banded(ab, y)
    return HpDecomposition(trend, y - trend, float(smoothing))


@dataclass(frozen=True)
class HlwInitialization:
    xi00: dict
    theta0: dict
    by_ols: float
    hp: HpDecomposition


def _ols(y, x):
    b, *_ = np.linalg.lstsq(x, y, rcond=None)
    e = y - x @ b
    s = math.sqrt(float(e @ e) / (len(y) - x.shape[1]))
    return b, s


def hlw_initialization(ds: ModelDataset, by_floor: float = 0.025) -> HlwInitialization:
    """State priors and optimizer starting values for the three stages.

    The HP trend is computed on 100 ln GDP from four quarters before the
    sample; the priors are its last three presample values and presample
    growth. Starting values come from OLS on the HP cycle.
    """
    hp = hp_filter(ds.init_window(), HLW_SMOOTHING)
    tr = hp.trend
    n0 = ds.n_init
    growth = np.diff(tr)
    y_star0 = np.array([tr[n0 - 1], tr[n0 - 2], tr[n0 - 3]])
    xi00 = {
        1: y_star0,
        2: np.r_[y_star0, growth[n0 - 2]],
        "m0": np.r_[y_star0, growth[n0 - 2], growth[n0 - 3]],
        3: np.r_[y_star0, growth[n0 - 2], growth[n0 - 3], 0.0, 0.0],
    }

    cyc = hp.cycle  # indices n0.. correspond to estimation quarters
    T = ds.T
    gap = cyc[n0:]
    gap1 = cyc[n0 - 1: n0 - 1 + T]
    gap2 = cyc[n0 - 2: n0 - 2 + T]
    r1 = ds.lagged("real_rate", 1)
    r2 = ds.lagged("real_rate", 2)
    pi = ds.lagged("pi")
    pi1 = ds.lagged("pi", 1)
    pi24 = ds.lagged("pi_lag_avg")

    b_is1, s_is1 = _ols(gap, np.column_stack([gap1, gap2]))
    b_ph, s_ph = _ols(pi, np.column_stack([pi1, pi24, gap1]))
    by_ols = float(b_ph[2])
    theta1 = np.array([b_is1[0], b_is1[1], b_ph[0], by_floor, 0.85, s_is1, s_ph, 0.5])

    x2 = np.column_stack([gap1, gap2, (r1 + r2) / 2.0, np.ones(T)])
    b_is2, s_is2 = _ols(gap, x2)
    by0 = max(by_ols, by_floor)
    theta2 = np.array([b_is2[0], b_is2[1], b_is2[2], b_is2[3], -b_is2[2], b_ph[0], by0,
                       s_is2, s_ph, 0.5])
    b_is3, s_is3 = _ols(gap, x2[:, :3])
    theta3 = np.array([b_is3[0], b_is3[1], b_is3[2], b_ph[0], by0, s_is3, s_ph, 0.7])
    theta_m0 = theta3.copy()
    return HlwInitialization(xi00, {1: theta1, 2: theta2, "m0": theta_m0, 3: theta3}, by_ols, hp)


@dataclass(frozen=True)
class GrowthStats:
    start: Quarter
    end: Quarter
    mean: float
    median: float
    stdev: float
    T: int
    stderr: float
    hac_stderr: float


def newey_west_se(x: np.ndarray, lags: int = 4) -> float:
    """HAC standard error of the sample mean with a Bartlett kernel."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    e = x - x.mean()
    lrv = float(e @ e) / n
    for j in range(1, min(lags, n - 1) + 1):
        lrv += 2.0 * (1.0 - j / (lags + 1.0)) * float(e[j:] @ e[:-j]) / n
    return math.sqrt(max(lrv, 0.0) / n)


def growth_stats(raw: RawMacroSeries, subperiods, hac_lags: int = 4) -> list[GrowthStats]:
    """Annualised GDP growth 400*dln(GDP) summarised over inclusive quarter ranges."""
    lg = np.log(raw.gdp)
    growth = np.full(len(lg), np.nan)
    growth[1:] = 400.0 * np.diff(lg)
    out = []
    for a, b in subperiods:
        a = parse_quarter(a) if isinstance(a, str) else a
        b = parse_quarter(b) if isinstance(b, str) else b
        i, j = raw.index_of(a), raw.index_of(b)
        seg = growth[max(i, 1): j + 1]
        if i == 0 or j < i or len(seg) == 0:
            raise InputError(f"empty or out-of-range subperiod {a}..{b}")
        n = len(seg)
        sd = float(np.std(seg, ddof=1)) if n > 1 else 0.0
        out.append(GrowthStats(a, b, float(seg.mean()), float(np.median(seg)), sd, n,
                               sd / math.sqrt(n), newey_west_se(seg, hac_lags)))
    return out


def write_growth_stats(path, stats: list[GrowthStats]) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["start", "end", "mean", "median", "stdev", "T", "stderr", "hac_stderr"])
        for s in stats:
            w.writerow([str(s.start), str(s.end), f"{s.mean:.10g}", f"{s.median:.10g}",
                        f"{s.stdev:.10g}", s.T, f"{s.stderr:.10g}", f"{s.hac_stderr:.10g}"])
