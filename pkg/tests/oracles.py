"""Independent reference implementations used only by the tests."""
import itertools
import math

import numpy as np
from scipy.linalg import block_diag


def dense_gls_covariance(n, pi, s2, sa, s1):
    """``(U' Sigma^-1 U)^-1`` assembled participant by participant with
    explicit matrix inverses.  AD studies enter as one row ``(0, 1)`` with
    variance ``sigma_j^2 / (n_j pi_j (1 - pi_j))``."""
    rows, blocks = [], []
    for j in range(len(n)):
        m = int(round(n[j]))
        m_t = int(round(n[j] * pi[j]))
        if j in s1:
            x = np.r_[np.ones(m_t), np.zeros(m - m_t)]
            rows.append(np.column_stack([np.ones(m), x]))
            blocks.append(sa * np.ones((m, m)) + s2[j] * np.eye(m))
        else:
            rows.append(np.array([[0.0, 1.0]]))
            blocks.append(np.array([[s2[j] / (m * (m_t / m) * (1 - m_t / m))]]))
    u = np.vstack(rows)
    sigma_inv = np.linalg.inv(block_diag(*blocks))
    if not s1:
        # alpha is absent from every row; only the beta entry is defined
        out = np.full((2, 2), np.nan)
        out[1, 1] = 1 / (u[:, 1] @ sigma_inv @ u[:, 1])
        return out
    return np.linalg.inv(u.T @ sigma_inv @ u)


def dense_gls_estimate(collection, s1, s2, sa):
    """GLS estimate of ``(alpha, beta)`` from stacked IPD responses and AD
    estimates (with model-based AD variances)."""
    rows, blocks, ys = [], [], []
    for j, sid in enumerate(collection.order):
        st = collection.ipd[sid]
        if sid in s1:
            rows.append(np.column_stack([np.ones(st.n), st.treatment]))
            blocks.append(sa * np.ones((st.n, st.n)) + s2[j] * np.eye(st.n))
            ys.append(st.responses)
        else:
            y, x = st.responses, st.treatment == 1
            rows.append(np.array([[0.0, 1.0]]))
            blocks.append(np.array([[s2[j] / (st.n * st.pi * (1 - st.pi))]]))
            ys.append([y[x].mean() - y[~x].mean()])
    u = np.vstack(rows)
    w = np.linalg.inv(block_diag(*blocks))
    cov = np.linalg.inv(u.T @ w @ u)
    return cov @ u.T @ w @ np.concatenate(ys), cov


def plain_objective(u, v, subset):
    """``sum v (u - ubar)^2`` with the v-weighted mean, in plain Python."""
    sv = math.fsum(v[j] for j in subset)
    mean = math.fsum(v[j] * u[j] for j in subset) / sv
    return math.fsum(v[j] * (u[j] - mean) ** 2 for j in subset)


def enumerate_all(u, v, k1):
    """Every subset of size ``k1`` with its objective, no pruning."""
    return [(c, plain_objective(u, v, c)) for c in itertools.combinations(range(len(u)), k1)]


def fd_hessian(f, x, h=1e-3):
    """Central second differences with one Richardson step."""
    def at(step):
        k = x.size
        out = np.empty((k, k))
        for i in range(k):
            for j in range(k):
                ei, ej = np.eye(k)[i] * step, np.eye(k)[j] * step
                out[i, j] = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4 * step**2)
        return out
    return (4 * at(h / 2) - at(h)) / 3


def fd_grad(f, x, h=1e-5):
    g = np.empty(x.size)
    for i in range(x.size):
        e = np.eye(x.size)[i] * h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g
