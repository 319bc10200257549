"""Gradient descent with pluggable schedules, baselines and audits."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from . import _kernels
from .schedule import Schedule, horizon, rate, schedule_direct

__all__ = [
    "NonFinite",
    "Oracle",
    "Trajectory",
    "AuditResult",
    "BoundCheck",
    "quadratic_oracle",
    "logsumexp_oracle",
    "huber_oracle",
    "nonconvex_oracle",
    "make_oracle",
    "ORACLES",
    "run_gd",
    "run_silver",
    "run_constant",
    "run_nesterov",
    "cocoercivity_audit",
    "bound_check",
    "theoretical_bounds",
    "check_oracle",
]


class NonFinite(FloatingPointError):
    """A value or gradient overflowed or became NaN."""


@dataclass
class Oracle:
    """First-order oracle for an ``M``-smooth function.

    ``kind`` selects one of the kernels in ``_kernels`` and ``params`` is its
    ``(A, b, delta)`` tuple.  ``minimizer`` holds ``(x*, f*)`` when it is
    known analytically; otherwise ``reference_minimum`` estimates it.
    """

    name: str
    dimension: int
    kind: int
    params: tuple
    smoothness_M: float = 1.0
    minimizer: Optional[Tuple[np.ndarray, float]] = None
    convex: bool = True

    def eval(self, x) -> Tuple[float, np.ndarray]:
        f, g = _kernels.evaluate(self.kind, np.ascontiguousarray(x, dtype=np.float64), *self.params)
        return float(f), np.asarray(g)

    def __call__(self, x):
        return self.eval(x)

    def reference_minimum(self, x0=None) -> Tuple[np.ndarray, float]:
        """``(x*, f*)``: analytic if known, else a tight quasi-Newton solve."""
        if self.minimizer is not None:
            return self.minimizer
        from scipy.optimize import minimize

        start = np.zeros(self.dimension) if x0 is None else np.asarray(x0, dtype=float)
        res = minimize(
            self.eval,
            start,
            jac=True,
            method="L-BFGS-B",
            options={"gtol": 1e-14, "ftol": 0.0, "maxiter": 50000, "maxcor": 30},
        )
        self.minimizer = (np.asarray(res.x), float(res.fun))
        return self.minimizer


@dataclass
class Trajectory:
    points: np.ndarray  # (n + 1, d)
    gradients: np.ndarray  # (n + 1, d)
    values: np.ndarray  # (n + 1,)
    steps: np.ndarray  # (n,) normalized stepsizes alpha_t; Nesterov records 1.0
    M: float
    method: str = "gd"

    @property
    def n(self) -> int:
        return self.values.shape[0] - 1

    def reconstruction_error(self) -> float:
        """Largest ``|x_{t+1} - x_t + (alpha_t/M) g_t| / (1 + |x_t|)`` (GD runs only)."""
        X, G = self.points, self.gradients
        resid = X[1:] - X[:-1] + (self.steps / self.M)[:, None] * G[:-1]
        scale = 1.0 + np.linalg.norm(X[:-1], axis=1)
        return float(np.max(np.linalg.norm(resid, axis=1) / scale, initial=0.0))


# --------------------------------------------------------------------------
# built-in oracles
# --------------------------------------------------------------------------


def quadratic_oracle(dim: int, rng: np.random.Generator, M: float = 1.0) -> Oracle:
    """``(x - x*)^T A (x - x*) / 2`` with spectrum in ``[0, M]``, top eigenvalue ``M``."""
    Qm, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    eig = rng.uniform(0.0, M, size=dim)
    eig[0] = M
    A = (Qm * eig) @ Qm.T
    A = np.ascontiguousarray(0.5 * (A + A.T))
    xstar = rng.standard_normal(dim)
    return Oracle("quadratic", dim, _kernels.QUADRATIC, (A, xstar, 0.0), M, (xstar, 0.0))


def logsumexp_oracle(dim: int, rng: np.random.Generator, rows: Optional[int] = None) -> Oracle:
    """Smoothed ``max_i |a_i.x - b_i|`` with unit rows, hence 1-smooth."""
    m = rows or 2 * dim
    A = rng.standard_normal((m, dim))
    A /= np.linalg.norm(A, axis=1, keepdims=True)
    b = rng.standard_normal(m)
    return Oracle("logsumexp", dim, _kernels.LOGSUMEXP, (np.ascontiguousarray(A), b, 0.0), 1.0)


def huber_oracle(dim: int, rng: np.random.Generator, rows: Optional[int] = None, delta: float = 0.5) -> Oracle:
    """Huber regression ``sum_i h(a_i.x - b_i)`` with ``|A|_2 = 1``, hence 1-smooth."""
    m = rows or 3 * dim
    A = rng.standard_normal((m, dim))
    A /= np.linalg.norm(A, 2)
    b = 2.0 * rng.standard_normal(m)
    return Oracle("huber", dim, _kernels.HUBER, (np.ascontiguousarray(A), b, float(delta)), 1.0)


def nonconvex_oracle(dim: int, rng: Optional[np.random.Generator] = None) -> Oracle:
    """``-|x|^2 / 2``: smooth but concave, for audit negative controls."""
    empty = (np.zeros((1, dim)), np.zeros(1), 0.0)
    return Oracle("nonconvex", dim, _kernels.NEG_QUADRATIC, empty, 1.0, None, convex=False)


ORACLES = {
    "quadratic": quadratic_oracle,
    "logsumexp": logsumexp_oracle,
    "huber": huber_oracle,
}


def make_oracle(name: str, dim: int, seed: int) -> Tuple[Oracle, np.ndarray]:
    """Deterministic oracle plus starting point for ``seed``."""
    try:
        factory = ORACLES[name]
    except KeyError:
        raise ValueError(f"unknown oracle {name!r}; choose from {sorted(ORACLES)}") from None
    rng = np.random.default_rng(seed)
    oracle = factory(dim, rng)
    x0 = rng.standard_normal(dim) * 2.0
    return oracle, x0


def check_oracle(oracle: Oracle, rng: np.random.Generator, samples: int = 200, tol: float = 1e-9) -> bool:
    """Sampled check of M-Lipschitz gradients and the convexity inequality."""
    d = oracle.dimension
    for _ in range(samples):
        x = rng.standard_normal(d) * 3.0
        y = rng.standard_normal(d) * 3.0
        fx, gx = oracle.eval(x)
        fy, gy = oracle.eval(y)
        if np.linalg.norm(gx - gy) > (oracle.smoothness_M + tol) * np.linalg.norm(x - y):
            return False
        if oracle.convex and fy < fx + gx @ (y - x) - tol * (1 + abs(fx)):
            return False
    return True


# --------------------------------------------------------------------------
# runs
# --------------------------------------------------------------------------


def _finish(X, G, F, steps, M, method) -> Trajectory:
    if not (np.all(np.isfinite(F)) and np.all(np.isfinite(G)) and np.all(np.isfinite(X))):
        raise NonFinite(f"{method}: non-finite value, gradient or iterate")
    return Trajectory(X, G, F, np.asarray(steps, dtype=float), M, method)


def _as_steps(sched) -> np.ndarray:
    if isinstance(sched, Schedule):
        return np.array(sched.as_floats())
    return np.asarray(sched, dtype=float)


def run_gd(oracle: Oracle, x0, sched: Union[Schedule, Sequence[float]], method: str = "gd") -> Trajectory:
    """``x_{t+1} = x_t - (alpha_t / M) g_t`` for every step of ``sched``."""
    steps = _as_steps(sched)
    if steps.ndim != 1 or steps.size == 0:
        raise ValueError("schedule must be a non-empty list of stepsizes")
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    if x0.shape != (oracle.dimension,):
        raise ValueError(f"x0 must have shape ({oracle.dimension},)")
    M = oracle.smoothness_M
    with np.errstate(over="ignore", invalid="ignore"):
        X, G, F = _kernels.gd_loop(oracle.kind, *oracle.params, x0, steps / M)
    return _finish(X, G, F, steps, M, method)


def run_silver(oracle: Oracle, x0, k: int) -> Trajectory:
    return run_gd(oracle, x0, schedule_direct(k), method=f"silver:k={k}")


def run_constant(oracle: Oracle, x0, alpha_bar: float, n: int) -> Trajectory:
    if not 0 < alpha_bar < 2:
        raise ValueError("constant stepsize must lie in (0, 2)")
    if n < 1:
        raise ValueError("n must be >= 1")
    return run_gd(oracle, x0, np.full(n, float(alpha_bar)), method=f"constant:{alpha_bar:g}")


def run_nesterov(oracle: Oracle, x0, n: int) -> Trajectory:
    if n < 1:
        raise ValueError("n must be >= 1")
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    M = oracle.smoothness_M
    with np.errstate(over="ignore", invalid="ignore"):
        X, G, F = _kernels.nesterov_loop(oracle.kind, *oracle.params, x0, n, 1.0 / M)
    return _finish(X, G, F, np.ones(n), M, "nesterov")


# --------------------------------------------------------------------------
# audits
# --------------------------------------------------------------------------


class AuditResult(NamedTuple):
    min_q: float
    pair: Tuple[object, object]
    scale: float

    @property
    def passed(self) -> bool:
        return self.min_q >= -1e-9 * self.scale


def cocoercivity_audit(traj: Trajectory, xstar, fstar: float) -> AuditResult:
    """Smallest ``Q_ij`` over ordered pairs of ``{0..n, *}`` (``g* = 0``).

    Values and gradients are divided by ``M`` first so the conditions are
    those of a 1-smooth function.
    """
    M = traj.M
    xstar = np.asarray(xstar, dtype=float)
    X = np.vstack([traj.points, xstar[None, :]])
    G = np.vstack([traj.gradients / M, np.zeros((1, xstar.size))])
    F = np.append(traj.values / M, fstar / M)
    Q = _kernels.cocoercivity_matrix(np.ascontiguousarray(X), np.ascontiguousarray(G), F)
    flat = int(np.argmin(Q))
    i, j = divmod(flat, Q.shape[1])
    last = Q.shape[0] - 1
    label = lambda a: "*" if a == last else a  # noqa: E731
    scale = max(
        1.0,
        float(np.max(np.sum((X - xstar) ** 2, axis=1))),
        float(np.max(np.abs(F - F[-1]))),
        float(np.max(np.sum(G**2, axis=1))),
    )
    return AuditResult(float(Q[i, j]), (label(i), label(j)), scale)


class BoundCheck(NamedTuple):
    lhs: float
    rhs: float
    passed: bool


def bound_check(traj: Trajectory, xstar, fstar: float, k: int) -> BoundCheck:
    """``f(x_n) - f* <= r_k M |x0 - x*|^2`` with relative slack ``1e-9``."""
    if traj.n != horizon(k):
        raise ValueError(f"trajectory has {traj.n} steps, level {k} needs {horizon(k)}")
    r_k = float(rate(k).r.hi)
    lhs = float(traj.values[-1] - fstar)
    rhs = r_k * traj.M * float(np.sum((traj.points[0] - np.asarray(xstar)) ** 2))
    return BoundCheck(lhs, rhs, lhs <= rhs * (1 + 1e-9))


def theoretical_bounds(k: int, bits: int = 256) -> dict:
    """Worst-case bound factors at ``n = 2**k - 1`` (multiply by ``M |x0 - x*|^2``)."""
    n = horizon(k)
    return {
        "k": k,
        "n": n,
        "constant": 1.0 / (4 * n),
        "silver": float(rate(k, bits).r.mid),
        "nesterov": 2.0 / (n + 1) ** 2,
    }
