import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rstar_mue import InputError
from rstar_mue.ssm import StatePrior
from rstar_mue.stages import (THETA1, THETA2, THETA3, build_stage1, build_stage2, build_stage3,
                              estimate_stage1, extract_natural_rate, m0_from_stage3,
                              stage2_mue_inputs, stage_result_at, write_natural_rate_csv,
                              write_parameters_csv)

TH1 = dict(a_y1=1.5, a_y2=-0.55, b_pi=0.67, b_y=0.08, g=0.77, sigma_ygap=0.3, sigma_pi=0.8,
           sigma_ystar=0.5)
TH3 = dict(a_y1=1.53, a_y2=-0.59, a_r=-0.07, b_pi=0.67, b_y=0.08, sigma_ygap=0.33, sigma_pi=0.79,
           sigma_ystar=0.57)
TH2 = dict(TH3, a_0=-0.2, a_g=0.6)


def test_stage1_matrices(demo_ds):
    d = build_stage1(TH1, demo_ds)
    s = d.ssm
    assert np.array_equal(s.H, [[1.0, -1.5, 0.55], [0.0, -0.08, 0.0]])
    assert np.allclose(s.A, [[1.5, -0.55, 0, 0], [0.08, 0, 0.67, 0.33]], rtol=0, atol=1e-15)
    assert np.array_equal(s.F, [[1, 0, 0], [1, 0, 0], [0, 1, 0]])
    assert np.allclose(s.Q, np.diag([0.25, 0, 0]))
    assert np.allclose(s.R, np.diag([0.09, 0.64]))


def test_stage1_zero_drift_is_identity(demo_ds):
    d = build_stage1(dict(TH1, g=0.0), demo_ds)
    assert np.array_equal(d.y[:, 0], demo_ds.lagged("y"))
    assert np.array_equal(d.x[:, 0], demo_ds.lagged("y", 1))
    assert np.all(d.state_offset == 0.0)


def test_stage1_detrending(demo_ds):
    d = build_stage1(TH1, demo_ds)
    t = np.arange(1, demo_ds.T + 1)
    assert np.allclose(d.y[:, 0], demo_ds.lagged("y") - 0.77 * t)
    assert np.allclose(d.state_offset[:, 2], 0.77 * (t - 2))


def test_stage2_hlw_matrices(demo_ds):
    s = build_stage2(TH2, demo_ds, "hlw", lambda_g=0.05).ssm
    assert np.array_equal(s.H[0], [1.0, -1.53, 0.59, 0.6])
    assert s.A[0, 6] == -0.2 and s.A[0, 2] == s.A[0, 3] == -0.035
    Q = np.zeros((4, 4))
    Q[0, 0], Q[3, 3] = 0.57 ** 2, (0.05 * 0.57) ** 2
    assert np.allclose(s.Q, Q, atol=1e-15)


def test_stage2_m0_matrices(demo_ds):
    s = build_stage2(TH3, demo_ds, "m0", lambda_g=0.05).ssm
    sg2 = (0.05 * 0.57) ** 2
    assert np.allclose(s.H[0], [1.0, -1.53, 0.59, 0.14, 0.14])
    assert s.Q[0, 0] == pytest.approx(0.57 ** 2 + sg2)
    assert s.Q[0, 3] == pytest.approx(sg2) and s.Q[3, 0] == pytest.approx(sg2)
    assert s.Q[3, 3] == pytest.approx(sg2)
    assert np.array_equal(s.F[4], [0, 0, 0, 1, 0])


def test_zero_lambda_g_collapses_q(demo_ds):
    for variant, th in (("hlw", TH2), ("m0", TH3)):
        Q = build_stage2(th, demo_ds, variant, lambda_g=0.0).ssm.Q
        expected = np.zeros_like(Q)
        expected[0, 0] = 0.57 ** 2
        assert np.allclose(Q, expected, atol=1e-15)


def test_stage2_variant_errors(demo_ds):
    with pytest.raises(InputError):
        build_stage2(TH2, demo_ds, "other", lambda_g=0.05)
    with pytest.raises(InputError):
        build_stage2({k: v for k, v in TH2.items() if k != "a_g"}, demo_ds, "hlw", lambda_g=0.05)
    with pytest.raises(InputError):
        build_stage2(TH2, demo_ds, "hlw", lambda_g=0.05, sigma_g=0.03)


def test_stage3_matrices(demo_ds):
    s = build_stage3(TH3, demo_ds, lambda_g=0.05, lambda_z=0.03).ssm
    assert np.allclose(s.H[0], [1.0, -1.53, 0.59, 0.14, 0.14, 0.035, 0.035])
    assert s.Q[5, 5] == pytest.approx((0.03 * 0.33 / -0.07) ** 2)
    assert s.Q[0, 3] == pytest.approx((0.05 * 0.57) ** 2)
    assert s.Q[6, 6] == 0.0 and s.Q[0, 5] == 0.0


def test_stage3_zero_ar_rejected(demo_ds):
    with pytest.raises(InputError, match="a_r = 0"):
        build_stage3(dict(TH3, a_r=0.0), demo_ds, lambda_g=0.05, lambda_z=0.03)
    build_stage3(dict(TH3, a_r=0.0), demo_ds, lambda_g=0.05, sigma_z=0.1)


@settings(max_examples=60, deadline=None)
@given(vals=st.lists(st.floats(-2, 2), min_size=8, max_size=8),
       sig=st.lists(st.floats(0.01, 3), min_size=3, max_size=3), lg=st.floats(0, 0.5),
       lz=st.floats(0, 0.5))
def test_m0_by_deletion_equals_direct(demo_ds, vals, sig, lg, lz):
    th = dict(zip(THETA3, vals))
    th["a_r"] = -abs(th["a_r"]) - 0.01
    th.update(sigma_ygap=sig[0], sigma_pi=sig[1], sigma_ystar=sig[2])
    direct = build_stage2(th, demo_ds, "m0", lambda_g=lg)
    deleted = m0_from_stage3(build_stage3(th, demo_ds, lambda_g=lg, lambda_z=lz))
    for name in ("A", "H", "F", "S", "R", "W", "Q"):
        assert np.array_equal(getattr(direct.ssm, name), getattr(deleted.ssm, name)), name
    assert np.array_equal(direct.x, deleted.x) and np.array_equal(direct.y, deleted.y)


def test_identities_and_zero_z(demo_ds):
    prior = StatePrior(np.r_[demo_ds.lagged("y", 1)[0] * np.ones(3), 0.75, 0.75, 0.0, 0.0], np.eye(7))
    res = stage_result_at("stage3", TH3, demo_ds, prior, lambda_g=0.05, lambda_z=0.0)
    for smoothed in (True, False):
        s = res.series(smoothed)
        assert np.array_equal(s["ystar"] + s["ygap"], s["y"])
        assert np.allclose(s["rstar"], 4 * s["g"] + s["z"], atol=0)
    prior0 = StatePrior(prior.xi00, np.diag([1, 1, 1, 1, 1, 0, 0.0]))
    res0 = stage_result_at("stage3", TH3, demo_ds, prior0, lambda_g=0.05, lambda_z=0.0)
    r = extract_natural_rate(res0)
    assert np.allclose(r["z"], 0.0, atol=1e-12)
    assert np.allclose(r["rstar"], r["g_annual"], atol=1e-12)
    with pytest.raises(InputError):
        stage_result_at("stage4", TH3, demo_ds, prior0)


def test_stage1_estimation_on_demo(demo_ds, tmp_path):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = estimate_stage1(demo_ds)
        again = estimate_stage1(demo_ds)
    assert res.theta["b_y"] >= 0.025
    assert res.loglik == again.loglik
    assert res.loglik >= res.optimization.initial_loglik
    P = res.prior.P00
    assert np.allclose(P, P.T) and np.all(np.linalg.eigvalsh(P) > 0)
    assert P[1, 1] == pytest.approx(0.2) and P[0, 1] == pytest.approx(0.2)
    # first-pass sigma_ystar enters P00, so only the structure is pinned down
    assert P[0, 0] > 0.2 and np.allclose(P[2], [0.0, 0.0, 0.2])
    s = res.series()
    assert np.allclose(s["ystar"] + s["ygap"], demo_ds.lagged("y"), atol=1e-9)
    write_parameters_csv(tmp_path / "p.csv", res)
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "parameter,value,implied" and len(lines) == len(THETA1) + 2
    with pytest.raises(InputError):
        extract_natural_rate(res)
    with pytest.raises(InputError):
        stage2_mue_inputs(res)


def test_stage2_mue_inputs_use_lagged_states(demo_ds):
    prior = StatePrior(np.r_[demo_ds.lagged("y", 1)[0] * np.ones(3), 0.75], np.eye(4))
    res = stage_result_at("stage2", TH2, demo_ds, prior, "hlw", lambda_g=0.05)
    inp = stage2_mue_inputs(res)
    xs = res.states_smoothed
    assert np.allclose(inp.gap1, demo_ds.lagged("y", 1) - xs[:, 1])
    assert np.allclose(inp.r2, demo_ds.lagged("real_rate", 2))
    assert inp.g2 is None and len(THETA2) == len(res.theta)


def test_natural_rate_csv(demo_ds, tmp_path):
    prior = StatePrior(np.r_[demo_ds.lagged("y", 1)[0] * np.ones(3), 0.75, 0.75, 0.0, 0.0], np.eye(7))
    res = stage_result_at("stage3", TH3, demo_ds, prior, lambda_g=0.05, lambda_z=0.03)
    write_natural_rate_csv(tmp_path / "r.csv", res)
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "date,rstar,g_annual,z,ygap"
    assert lines[1].startswith("1961:Q1,") and len(lines) == demo_ds.T + 1
