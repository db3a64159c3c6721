"""Compiled likelihood-only Kalman recursion for the optimizer's inner loop."""

from __future__ import annotations

import math

import numpy as np
from numba import njit

_LOG2PI = math.log(2.0 * math.pi)


@njit(cache=True)
def filter_loglik(F, H, Q, R, offsets, y, xi0, P0, pivot_tol):
    """Return (loglik, t_fail). t_fail is -1 on success, else the failing period."""
    T, m = y.shape
    n = F.shape[0]
    xi = xi0.copy()
    P = P0.copy()
    xp = np.empty(n)
    Pp = np.empty((n, n))
    FP = np.empty((n, n))
    PHt = np.empty((n, m))
    Fv = np.empty((m, m))
    L = np.empty((m, m))
    v = np.empty(m)
    u = np.empty(m)
    G = np.empty((m, n))  # L^{-1} H Pp
    ll = 0.0
    for t in range(T):
        for i in range(n):
            s = 0.0
            for k in range(n):
                s += F[i, k] * xi[k]
            xp[i] = s
        for i in range(n):
            for j in range(n):
                s = 0.0
                for k in range(n):
                    s += F[i, k] * P[k, j]
                FP[i, j] = s
        for i in range(n):
            for j in range(i, n):
                s = 0.0
                for k in range(n):
                    s += FP[i, k] * F[j, k]
                s += 0.5 * (Q[i, j] + Q[j, i])
                Pp[i, j] = s
                Pp[j, i] = s
        for i in range(n):
            for a in range(m):
                s = 0.0
                for k in range(n):
                    s += Pp[i, k] * H[a, k]
                PHt[i, a] = s
        for a in range(m):
            s = y[t, a] - offsets[t, a]
            for k in range(n):
                s -= H[a, k] * xp[k]
            v[a] = s
            for b in range(m):
                s2 = R[a, b]
                for k in range(n):
                    s2 += H[a, k] * PHt[k, b]
                Fv[a, b] = s2
        # Cholesky of the innovation covariance
        for a in range(m):
            for b in range(a + 1):
                s = 0.5 * (Fv[a, b] + Fv[b, a])
                for k in range(b):
                    s -= L[a, k] * L[b, k]
                if a == b:
                    if s < pivot_tol:
                        return ll, t
                    L[a, a] = math.sqrt(s)
                else:
                    L[a, b] = s / L[b, b]
        logdet = 0.0
        for a in range(m):
            logdet += 2.0 * math.log(L[a, a])
        for a in range(m):
            s = v[a]
            for k in range(a):
                s -= L[a, k] * u[k]
            u[a] = s / L[a, a]
        for j in range(n):
            for a in range(m):
                s = PHt[j, a]
                for k in range(a):
                    s -= L[a, k] * G[k, j]
                G[a, j] = s / L[a, a]
        q = 0.0
        for a in range(m):
            q += u[a] * u[a]
        ll += -0.5 * (m * _LOG2PI + logdet + q)
        for i in range(n):
            s = xp[i]
            for a in range(m):
                s += G[a, i] * u[a]
            xi[i] = s
        for i in range(n):
            for j in range(i, n):
                s = Pp[i, j]
                for a in range(m):
                    s -= G[a, i] * G[a, j]
                P[i, j] = s
                P[j, i] = s
    return ll, -1
