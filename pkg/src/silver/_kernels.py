"""Numeric hot loops: numba-compiled when available, plain numpy otherwise.

Set ``SILVER_DISABLE_NUMBA=1`` to force the numpy path.  The flag is read
once at import.  Oracles share the parameter layout ``(A, b, delta)`` and are
selected by an integer kind, so every function below is an ordinary
module-level function that numba can compile and cache on disk.
"""

from __future__ import annotations

import os

import numpy as np

ENV_FLAG = "SILVER_DISABLE_NUMBA"

try:
    import numba
except ImportError:  # pragma: no cover - numba is an optional accelerator
    numba = None

NUMBA_ENABLED = numba is not None and os.environ.get(ENV_FLAG, "").lower() not in ("1", "true", "yes")

QUADRATIC, LOGSUMEXP, HUBER, NEG_QUADRATIC = 0, 1, 2, 3


# --------------------------------------------------------------------------
# oracles
# --------------------------------------------------------------------------


def quadratic(x, A, b, delta):
    # (x - b)^T A (x - b) / 2, so b is a minimizer
    r = x - b
    g = A @ r
    return 0.5 * (r @ g), g


def logsumexp(x, A, b, delta):
    # log sum_i exp(a_i.x - b_i) + exp(b_i - a_i.x): smoothed max of |Ax - b|
    z = A @ x - b
    m = np.max(np.abs(z))
    ep = np.exp(z - m)
    em = np.exp(-z - m)
    s = np.sum(ep) + np.sum(em)
    f = m + np.log(s)
    g = A.T @ ((ep - em) / s)
    return f, g


def huber(x, A, b, delta):
    r = A @ x - b
    a = np.abs(r)
    quad = a <= delta
    h = np.where(quad, 0.5 * r * r, delta * (a - 0.5 * delta))
    psi = np.where(quad, r, delta * np.sign(r))
    return np.sum(h), A.T @ psi


def negative_quadratic(x, A, b, delta):
    return -0.5 * (x @ x), -x


def evaluate(kind, x, A, b, delta):
    if kind == QUADRATIC:
        return quadratic(x, A, b, delta)
    if kind == LOGSUMEXP:
        return logsumexp(x, A, b, delta)
    if kind == HUBER:
        return huber(x, A, b, delta)
    return negative_quadratic(x, A, b, delta)


# --------------------------------------------------------------------------
# drivers
# --------------------------------------------------------------------------


def gd_loop(kind, A, b, delta, x0, scaled_steps):
    """``x_{t+1} = x_t - scaled_steps[t] * g_t``; records n + 1 points."""
    n = scaled_steps.shape[0]
    d = x0.shape[0]
    X = np.empty((n + 1, d))
    G = np.empty((n + 1, d))
    F = np.empty(n + 1)
    x = x0.copy()
    for t in range(n + 1):
        f, g = evaluate(kind, x, A, b, delta)
        X[t] = x
        G[t] = g
        F[t] = f
        if t < n:
            x = x - scaled_steps[t] * g
    return X, G, F


def nesterov_loop(kind, A, b, delta, x0, n, inv_m):
    """Accelerated method with the ``(1 + sqrt(1 + 4 t^2)) / 2`` sequence.

    Records the main sequence ``x_t`` with its own values and gradients.
    """
    d = x0.shape[0]
    X = np.empty((n + 1, d))
    G = np.empty((n + 1, d))
    F = np.empty(n + 1)
    x = x0.copy()
    y = x0.copy()
    theta = 1.0
    f, g = evaluate(kind, x, A, b, delta)
    X[0] = x
    G[0] = g
    F[0] = f
    for t in range(n):
        _, gy = evaluate(kind, y, A, b, delta)
        x_next = y - inv_m * gy
        theta_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * theta * theta))
        y = x_next + ((theta - 1.0) / theta_next) * (x_next - x)
        x = x_next
        theta = theta_next
        f, g = evaluate(kind, x, A, b, delta)
        X[t + 1] = x
        G[t + 1] = g
        F[t + 1] = f
    return X, G, F


def cocoercivity_loops(X, G, F):
    """``Q[i, j]`` for all ordered pairs by explicit loops; diagonal is ``inf``."""
    m = X.shape[0]
    d = X.shape[1]
    Q = np.empty((m, m))
    for i in range(m):
        for j in range(m):
            if i == j:
                Q[i, j] = np.inf
                continue
            inner = 0.0
            sq = 0.0
            for a in range(d):
                inner += G[j, a] * (X[j, a] - X[i, a])
                dg = G[j, a] - G[i, a]
                sq += dg * dg
            Q[i, j] = 2.0 * (F[i] - F[j]) + 2.0 * inner - sq
    return Q


def cocoercivity_numpy(X, G, F):
    """Vectorized ``Q[i, j]``; same contract as ``cocoercivity_loops``."""
    GX = G @ X.T  # GX[j, i] = <g_j, x_i>
    GG = G @ G.T
    own = np.diag(GX)
    sq = np.diag(GG)
    Q = 2.0 * (F[:, None] - F[None, :]) + 2.0 * (own[None, :] - GX.T) - (sq[None, :] - 2.0 * GG + sq[:, None])
    np.fill_diagonal(Q, np.inf)
    return Q


if NUMBA_ENABLED:
    # rebinding the globals makes compiled callers resolve compiled callees
    _jit = numba.njit(cache=True)
    quadratic = _jit(quadratic)
    logsumexp = _jit(logsumexp)
    huber = _jit(huber)
    negative_quadratic = _jit(negative_quadratic)
    evaluate = _jit(evaluate)
    gd_loop = _jit(gd_loop)
    nesterov_loop = _jit(nesterov_loop)
    cocoercivity_loops = _jit(cocoercivity_loops)
    cocoercivity_matrix = cocoercivity_loops
else:
    cocoercivity_matrix = cocoercivity_numpy
