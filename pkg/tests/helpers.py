"""Shared brute-force oracles and instance builders for the test suite.

Oracles deliberately avoid the closed forms used by the library: prox
operators are checked against numeric minimization of their defining
objectives, gradients against central finite differences of the smooth
Lagrangian, and norms/metrics against explicit Python loops.
"""

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from titan.features import MultiTaskDataset, TaskDataset
from titan.roadnet import TaskGraph
from titan.solver import Hyperparams, SolverState, smooth_lagrangian

# ---------------------------------------------------------------- prox oracles


def oracle_soft_threshold(x, kappa):
    """argmin_u 0.5 (u - x)^2 + kappa |u|, by bounded scalar minimization."""
    lo = min(x, 0.0) - kappa - 1.0
    hi = max(x, 0.0) + kappa + 1.0
    res = minimize_scalar(
        lambda u: 0.5 * (u - x) ** 2 + kappa * abs(u),
        bounds=(lo, hi), method="bounded", options={"xatol": 1e-10},
    )
    return float(res.x)


def oracle_soft_threshold_nonneg(x, kappa):
    """argmin_{u >= 0} 0.5 (u - x)^2 + kappa u."""
    hi = max(x, 0.0) + kappa + 1.0
    res = minimize_scalar(
        lambda u: 0.5 * (u - x) ** 2 + kappa * u,
        bounds=(0.0, hi), method="bounded", options={"xatol": 1e-10},
    )
    return float(res.x)


def oracle_prox_l21_row(v, kappa):
    """argmin_u 0.5 ||u - v||^2 + kappa ||u||_2, by quasi-Newton descent.

    The objective is non-smooth only at u = 0, so the numeric minimizer
    is compared against the zero candidate explicitly.
    """
    v = np.asarray(v, dtype=float)

    def f(u):
        return 0.5 * float(np.sum((u - v) ** 2)) + kappa * float(np.linalg.norm(u))

    best = minimize(f, v, method="L-BFGS-B", options={"ftol": 1e-16, "gtol": 1e-12}).x
    return best if f(best) <= f(np.zeros_like(v)) else np.zeros_like(v)


# --------------------------------------------------------- finite differences


def fd_grad_W_column(data, state, hp, r, step=1e-5):
    """Central finite differences of the smooth Lagrangian w.r.t. W[:, r]."""
    k = state.W.shape[0]
    g = np.zeros(k)
    for i in range(k):
        Wp = state.W.copy()
        Wm = state.W.copy()
        Wp[i, r] += step
        Wm[i, r] -= step
        g[i] = (
            smooth_lagrangian(data, state.Q, Wp, state, hp)
            - smooth_lagrangian(data, state.Q, Wm, state, hp)
        ) / (2.0 * step)
    return g


def fd_grad_Q(data, state, hp, step=1e-5):
    """Central finite differences of the smooth Lagrangian w.r.t. Q."""
    p, k = state.Q.shape
    g = np.zeros((p, k))
    for i in range(p):
        for j in range(k):
            Qp = state.Q.copy()
            Qm = state.Q.copy()
            Qp[i, j] += step
            Qm[i, j] -= step
            g[i, j] = (
                smooth_lagrangian(data, Qp, state.W, state, hp)
                - smooth_lagrangian(data, Qm, state.W, state, hp)
            ) / (2.0 * step)
    return g


# --------------------------------------------------------- instance builders


def random_dataset(rng, T, p, n_range=(5, 12), edge_prob=0.5):
    """Random multi-task dataset on a random task graph."""
    names = tuple(f"t{i}" for i in range(T))
    edges = [
        (names[i], names[j])
        for i in range(T)
        for j in range(i + 1, T)
        if rng.random() < edge_prob
    ]
    graph = TaskGraph.from_task_edges(names, edges)
    tasks = []
    for name in names:
        n = int(rng.integers(*n_range))
        tasks.append(TaskDataset(name, rng.standard_normal((n, p)), rng.standard_normal(n)))
    h = p // 2
    return MultiTaskDataset(tuple(tasks), graph, h, p - h)


def random_state(rng, p, k, T):
    """Fully populated solver state with nonzero duals and multipliers."""
    L3 = rng.standard_normal((k, k))
    return SolverState(
        W=rng.standard_normal((k, T)),
        Q=np.abs(rng.standard_normal((p, k))),
        U_W=rng.standard_normal((k, T)),
        U_Q=rng.standard_normal((p, k)),
        Lambda1=rng.standard_normal((k, T)),
        Lambda2=rng.standard_normal((p, k)),
        Lambda3=0.5 * (L3 + L3.T),
    )


def random_instance(rng, t_max=4, p_max=12, k_max=4):
    """Random small (data, state, hyperparams) triple for gradient checks."""
    T = int(rng.integers(2, t_max + 1))
    p = int(rng.integers(4, p_max + 1))
    k = int(rng.integers(2, min(k_max, p) + 1))
    data = random_dataset(rng, T, p)
    hp = Hyperparams(
        lambda_w=float(rng.uniform(0, 0.5)),
        lambda_q=float(rng.uniform(0, 0.5)),
        lambda_conn=float(rng.uniform(0, 2)),
        rho=float(rng.uniform(0.5, 2)),
        k=k,
    )
    return data, random_state(rng, p, k, T), hp
