"""Brute-force reference computations used by the tests."""

import numpy as np


def stacked_moments(ssm, T, x, prior):
    """Mean and covariance of (y_1', ..., y_T')' implied by the state-space model.

    Every state is written as a linear map of z = (xi_0, eps_1..eps_T, nu_1..nu_T).
    """
    n, m, k = ssm.n_state, ssm.n_obs, ssm.S.shape[1]
    dim = n + T * k + T * m
    cov_z = np.zeros((dim, dim))
    cov_z[:n, :n] = prior.P00
    for t in range(T):
        a = n + t * k
        cov_z[a:a + k, a:a + k] = ssm.W
        b = n + T * k + t * m
        cov_z[b:b + m, b:b + m] = ssm.R
    mean_z = np.zeros(dim)
    mean_z[:n] = prior.xi00
    state = np.zeros((n, dim))
    state[:, :n] = np.eye(n)
    rows, means = [], []
    for t in range(T):
        state = ssm.F @ state
        state[:, n + t * k: n + (t + 1) * k] += ssm.S
        obs = ssm.H @ state
        obs[:, n + T * k + t * m: n + T * k + (t + 1) * m] += np.eye(m)
        rows.append(obs)
        means.append(obs @ mean_z + ssm.A @ x[t])
    L = np.vstack(rows)
    return np.concatenate(means), L @ cov_z @ L.T, L, mean_z, cov_z, state


def gaussian_logpdf(y, mean, cov):
    d = y - mean
    sign, logdet = np.linalg.slogdet(cov)
    assert sign > 0
    return -0.5 * (len(y) * np.log(2 * np.pi) + logdet + d @ np.linalg.solve(cov, d))


def smoothed_by_conditioning(ssm, y, prior):
    """E[xi_t | y_1..y_T] by conditioning the joint normal of states and observations."""
    T = y.shape[0]
    n, k, m = ssm.n_state, ssm.S.shape[1], ssm.n_obs
    x = np.zeros((T, ssm.A.shape[1]))
    mean_y, cov_y, L, mean_z, cov_z, _ = stacked_moments(ssm, T, x, prior)
    dim = len(mean_z)
    out = np.empty((T, n))
    state = np.zeros((n, dim))
    state[:, :n] = np.eye(n)
    for t in range(T):
        state = ssm.F @ state
        state[:, n + t * k: n + (t + 1) * k] += ssm.S
        c_sy = state @ cov_z @ L.T
        out[t] = state @ mean_z + c_sy @ np.linalg.solve(cov_y, y.ravel() - mean_y)
    return out


def ols_dummy_t2(Y, Z, tau):
    """Squared t-statistic of D_t = 1{t > tau} in OLS of Y on [Z, D]."""
    T = len(Y)
    D = (np.arange(1, T + 1) > tau).astype(float)
    X = np.column_stack([Z, D])
    XtX_inv = np.linalg.inv(X.T @ X)
    b = XtX_inv @ X.T @ Y
    e = Y - X @ b
    s2 = e @ e / (T - X.shape[1])
    return b[-1] ** 2 / (s2 * XtX_inv[-1, -1])


def dense_hp(y, lam):
    n = len(y)
    D = np.zeros((n - 2, n))
    for i in range(n - 2):
        D[i, i:i + 3] = [1, -2, 1]
    return np.linalg.solve(np.eye(n) + lam * D.T @ D, y)
