import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from rstar_mue import InputError
from rstar_mue.data_ingest import (HLW_SMOOTHING, ModelDataset, Quarter, RawMacroSeries, build_dataset,
                                   growth_stats, hlw_initialization, hp_filter, load_csv,
                                   moving_average, newey_west_se, parse_quarter, write_csv,
                                   write_growth_stats)

from oracles import dense_hp


def raw_series(n=40, first=Quarter(1958, 1), pi=None, rate=None, growth=0.008):
    dates = tuple(first.shift(k) for k in range(n))
    gdp = 3000.0 * np.exp(growth * np.arange(n))
    pi = np.full(n, 2.0) if pi is None else np.asarray(pi, float)
    rate = np.full(n, 5.0) if rate is None else np.asarray(rate, float)
    return RawMacroSeries(dates, gdp, pi, rate)


def write(tmp_path, text):
    p = tmp_path / "d.csv"
    p.write_text(text)
    return p


@pytest.mark.parametrize("text,expected", [
    ("1960.1", Quarter(1960, 1)), ("1961:Q1", Quarter(1961, 1)), ("1999Q4", Quarter(1999, 4)),
    ("2001-07", Quarter(2001, 3)), ("2001-12-01", Quarter(2001, 4)),
])
def test_parse_quarter(text, expected):
    assert parse_quarter(text) == expected


@pytest.mark.parametrize("bad", ["1960.5", "60.1", "2001-13", "yesterday"])
def test_parse_quarter_rejects(bad):
    with pytest.raises(InputError):
        parse_quarter(bad)


def test_load_csv_first_quarter(tmp_path):
    p = write(tmp_path, "date,gdp,inflation,interest\n1960.1,3517.181,2.0,3.9\n1960.2,3498.246,1.8,3.7\n")
    raw = load_csv(p)
    assert raw.dates[0] == Quarter(1960, 1)
    assert raw.gdp[0] == pytest.approx(3517.181)


def test_load_csv_errors(tmp_path):
    with pytest.raises(InputError, match="not found"):
        load_csv(tmp_path / "missing.csv")
    with pytest.raises(InputError, match="empty"):
        load_csv(write(tmp_path, ""))
    with pytest.raises(InputError, match="no data"):
        load_csv(write(tmp_path, "date,gdp,inflation,interest\n"))
    with pytest.raises(InputError, match=":3:"):
        load_csv(write(tmp_path, "date,gdp,inflation,interest\n1960.1,1,1,1\n1960.2,abc,1,1\n"))
    with pytest.raises(InputError, match="contiguous"):
        load_csv(write(tmp_path, "date,gdp,inflation,interest\n1960.1,1,1,1\n1960.1,1,1,1\n"))
    with pytest.raises(InputError, match="contiguous"):
        load_csv(write(tmp_path, "date,gdp,inflation,interest\n1960.1,1,1,1\n1960.3,1,1,1\n"))
    with pytest.raises(InputError, match="header"):
        load_csv(write(tmp_path, "when,gdp,inflation,interest\n1960.1,1,1,1\n"))
    with pytest.raises(InputError, match="positive"):
        load_csv(write(tmp_path, "date,gdp,inflation,interest\n1960.1,0,1,1\n"))


def test_csv_round_trip(tmp_path):
    raw = raw_series(12)
    write_csv(tmp_path / "r.csv", raw)
    back = load_csv(tmp_path / "r.csv")
    assert back.dates == raw.dates
    assert np.allclose(back.gdp, raw.gdp, rtol=1e-9)


def test_constant_inflation_passes_through():
    ds = build_dataset(raw_series(40), Quarter(1960, 1))
    assert np.allclose(ds.lagged("pi_lag_avg"), 2.0)
    assert np.allclose(ds.lagged("pi_expected"), 2.0)
    assert np.allclose(ds.lagged("real_rate"), 3.0)


def test_expected_inflation_arithmetic():
    pe = moving_average(np.array([1.0, 2, 3, 4, 5]), [0, 1, 2, 3])
    assert pe[4] == 3.5
    assert np.all(np.isnan(pe[:3]))


def test_real_rate_exact_and_sample_length():
    rng = np.random.default_rng(0)
    raw = raw_series(60, pi=rng.normal(2, 1, 60), rate=rng.normal(5, 1, 60))
    ds = build_dataset(raw, "1960:Q1", "1970:Q4")
    assert ds.T == 44
    assert np.array_equal(ds.real_rate[ds.start:], ds.nominal_rate[ds.start:] - ds.pi_expected[ds.start:])
    assert str(ds.est_start) == "1960:Q1"


def test_presample_bounds():
    with pytest.raises(InputError, match="presample"):
        build_dataset(raw_series(40), "1959:Q1")
    with pytest.raises(InputError):
        build_dataset(raw_series(40), "1960:Q1", "1962:Q1")


def test_restrict_reproduces_values():
    rng = np.random.default_rng(1)
    ds = build_dataset(raw_series(60, pi=rng.normal(2, 1, 60)), "1960:Q1")
    sub = ds.restrict(Quarter(1961, 1), Quarter(1966, 4))
    again = sub.restrict(Quarter(1961, 1), Quarter(1966, 4))
    assert np.array_equal(sub.lagged("real_rate"), again.lagged("real_rate"))
    assert np.array_equal(sub.lagged("pi_lag_avg"), ds.pi_lag_avg[sub.start:sub.stop])


@settings(max_examples=30, deadline=None)
@given(shift=st.floats(-50, 50), seed=st.integers(0, 1000))
def test_moving_averages_shift_with_inflation(shift, seed):
    pi = np.random.default_rng(seed).normal(2, 1, 30)
    for lags in ([0, 1, 2, 3], [2, 3, 4]):
        a = moving_average(pi, lags)
        b = moving_average(pi + shift, lags)
        assert np.allclose((b - a)[4:], shift, atol=1e-9)


def test_hp_linear_input_has_zero_cycle():
    y = 3.0 + 0.7 * np.arange(50)
    for lam in (1.0, 1600.0, HLW_SMOOTHING):
        assert np.max(np.abs(hp_filter(y, lam).cycle)) < 1e-10 * 50


def test_hp_matches_dense_solver():
    rng = np.random.default_rng(7)
    for n in (5, 20, 80):
        y = rng.normal(size=n).cumsum()
        ref = dense_hp(y, 1600.0)
        assert np.allclose(hp_filter(y, 1600.0).trend, ref, rtol=1e-8, atol=1e-8)


@settings(max_examples=50, deadline=None)
@given(y=arrays(np.float64, st.integers(4, 60), elements=st.floats(-1e3, 1e3)),
       lam=st.floats(0.1, 1e5))
def test_hp_identities(y, lam):
    hp = hp_filter(y, lam)
    assert np.allclose(hp.trend + hp.cycle, y, atol=1e-9)
    t = np.arange(len(y))
    scale = max(1.0, np.abs(y).max()) * len(y)
    assert abs(hp.cycle.sum()) < 1e-8 * scale
    assert abs(hp.cycle @ t) < 1e-8 * scale * len(y)


def test_hp_errors():
    with pytest.raises(InputError):
        hp_filter(np.ones(3))
    with pytest.raises(InputError):
        hp_filter(np.ones(10), 0.0)


def test_initialization_on_linear_output():
    n = 60
    dates = tuple(Quarter(1958, 1).shift(k) for k in range(n))
    rng = np.random.default_rng(3)
    raw = RawMacroSeries(dates, np.exp(0.01 * np.arange(n) + 7.0), rng.normal(2, 1, n),
                         rng.normal(5, 1, n))
    init = hlw_initialization(build_dataset(raw, "1960:Q1"))
    assert np.allclose(init.xi00[3][3:5], 1.0)
    assert np.array_equal(init.xi00[3][5:], [0.0, 0.0])
    assert np.allclose(init.xi00[1], init.hp.trend[[3, 2, 1]])
    assert init.theta0[1][3] == 0.025


def test_growth_stats_oracle(tmp_path):
    rng = np.random.default_rng(11)
    n = 13
    raw = RawMacroSeries(tuple(Quarter(2000, 1).shift(k) for k in range(n)),
                         np.exp(rng.normal(0.005, 0.01, n).cumsum() + 9), np.ones(n), np.ones(n))
    (s,) = growth_stats(raw, [(Quarter(2000, 2), Quarter(2003, 1))])
    g = 400 * np.diff(np.log(raw.gdp))
    assert s.T == 12
    assert s.mean == pytest.approx(sum(g) / 12)
    sd = (sum((v - sum(g) / 12) ** 2 for v in g) / 11) ** 0.5
    assert s.stdev == pytest.approx(sd)
    assert s.stderr == pytest.approx(sd / 12 ** 0.5)
    assert s.median == pytest.approx(np.median(g))
    write_growth_stats(tmp_path / "g.csv", [s])
    assert (tmp_path / "g.csv").read_text().splitlines()[0] == "start,end,mean,median,stdev,T,stderr,hac_stderr"


def test_growth_stats_constant_growth_and_bounds():
    raw = raw_series(20)
    (s,) = growth_stats(raw, [(Quarter(1958, 2), Quarter(1962, 4))])
    assert s.stdev == pytest.approx(0.0, abs=1e-10)
    assert s.stderr == pytest.approx(0.0, abs=1e-10)
    with pytest.raises(InputError):
        growth_stats(raw, [(Quarter(1990, 1), Quarter(1991, 1))])
    with pytest.raises(InputError):
        growth_stats(raw, [(Quarter(1960, 2), Quarter(1960, 1))])


def test_newey_west_zero_lag_is_plain_stderr():
    x = np.random.default_rng(5).normal(size=200)
    plain = np.sqrt(np.mean((x - x.mean()) ** 2) / len(x))
    assert newey_west_se(x, 0) == pytest.approx(plain)


def test_from_arrays_skips_presample_check():
    ds = ModelDataset.from_arrays(np.arange(30.0), np.full(30, 2.0), np.ones(30), start=4)
    assert ds.T == 26
