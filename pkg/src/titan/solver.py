"""Joint group/weight solver for multi-task duration regression.

The model couples a p×k non-negative grouping matrix Q with
near-orthonormal columns and a k×T task-weight matrix W:

    min  sum_r ||X_r Q W_r - Y_r||^2 / n_r  + lambda_w ||W||_{2,1}
         + lambda_q ||Q||_1
         + (lambda_conn / 2) sum_ij M_ij ||W_i - W_j||^2
    s.t. Q^T Q = I,  Q >= 0,

where M is the task-graph adjacency. Training runs an ADMM scheme with
auxiliary copies U_W, U_Q carrying the non-smooth penalties, a
multiplier on the orthogonality constraint, block coordinate descent on
W, and a projected backtracking gradient step on Q.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, NumericalAbort
from .features import MultiTaskDataset
from .prox import clip_nonneg, norm_fro, norm_l1, norm_l21, prox_l21, soft_threshold_nonneg

W_SOLVE_MODES = ("exact", "gradient")
MAX_BACKTRACKS = 30
GRADIENT_INNER_STEPS = 25


@dataclass(frozen=True)
class Hyperparams:
    lambda_w: float = 0.1
    lambda_q: float = 0.01
    lambda_conn: float = 1.0
    rho: float = 1.0
    k: int = 5
    alpha: float = 0.02
    max_iter: int = 2000
    eps_primal: float = 1e-3
    eps_dual: float = 1e-3
    inner_w_solve: str = "exact"
    seed: int = 0
    orthogonality: bool = True

    def __post_init__(self):
        if not self.rho > 0:
            raise InputError(f"rho must be positive, got {self.rho}")
        if self.k < 1:
            raise InputError(f"k must be a positive integer, got {self.k}")
        if min(self.lambda_w, self.lambda_q, self.lambda_conn) < 0:
            raise InputError("penalty weights must be >= 0")
        if not (self.alpha > 0 and self.eps_primal > 0 and self.eps_dual > 0):
            raise InputError("alpha and tolerances must be positive")
        if self.max_iter < 1:
            raise InputError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.inner_w_solve not in W_SOLVE_MODES:
            raise InputError(f"inner_w_solve must be one of {W_SOLVE_MODES}, got {self.inner_w_solve!r}")

    def to_dict(self):
        return dataclasses.asdict(self)

    @staticmethod
    def from_dict(d):
        try:
            return Hyperparams(**d)
        except TypeError as exc:
            raise InputError(f"bad hyperparameter set: {exc}") from None


@dataclass(eq=False)
class SolverState:
    """Mutable training state; shapes fixed at (p, k, T) for the run."""

    W: np.ndarray
    Q: np.ndarray
    U_W: np.ndarray
    U_Q: np.ndarray
    Lambda1: np.ndarray
    Lambda2: np.ndarray
    Lambda3: np.ndarray
    iteration: int = 0
    primal_residual: float = np.inf
    dual_residual: float = np.inf
    objective_history: list = field(default_factory=list)
    residual_history: list = field(default_factory=list)
    stalls: int = 0


@dataclass(frozen=True, eq=False)
class TrainedModel:
    Q: np.ndarray = field(repr=False)
    W: np.ndarray = field(repr=False)
    tasks: tuple = ()
    hyperparams: Hyperparams = Hyperparams()
    converged: bool = False
    iterations: int = 0
    final_residuals: tuple = (np.inf, np.inf)
    residual_history: tuple = field(default=(), repr=False, compare=False)
    objective_history: tuple = field(default=(), repr=False, compare=False)

    @property
    def p(self):
        return self.Q.shape[0]

    @property
    def k(self):
        return self.Q.shape[1]

    @property
    def orth_gap(self):
        """Final ||Q^T Q - I||_F (reported, not enforced)."""
        return orthogonality_gap(self.Q)


def orthogonality_gap(Q):
    k = Q.shape[1]
    return norm_fro(Q.T @ Q - np.eye(k))


def connectivity_penalty(W, adjacency):
    """(1/2) sum_ij M_ij ||W_i - W_j||^2 == tr(W L W^T) for L = D - M."""
    deg = adjacency.sum(axis=1)
    L = np.diag(deg) - adjacency
    return float(np.sum((W @ L) * W))


def objective(data: MultiTaskDataset, Q, W, hp: Hyperparams):
    """Model objective: per-task mean squared loss plus all penalties."""
    p, k = Q.shape
    if k != W.shape[0] or W.shape[1] != data.n_tasks or p != data.p:
        raise InputError(
            f"shape mismatch: Q {Q.shape}, W {W.shape} for p={data.p}, T={data.n_tasks}"
        )
    loss = 0.0
    for r, td in enumerate(data.tasks):
        resid = td.X @ (Q @ W[:, r]) - td.Y
        loss += float(resid @ resid) / td.n
    return (
        loss
        + hp.lambda_w * norm_l21(W)
        + hp.lambda_q * norm_l1(Q)
        + hp.lambda_conn * connectivity_penalty(W, data.graph.adjacency)
    )


def smooth_lagrangian(data: MultiTaskDataset, Q, W, state: SolverState, hp: Hyperparams):
    """Differentiable part of the augmented Lagrangian at (Q, W).

    Leaves out the non-smooth penalties, which attach to the dual copies
    U_W, U_Q; used by gradient checks and Q backtracking.
    """
    rho = hp.rho
    loss = 0.0
    for r, td in enumerate(data.tasks):
        resid = td.X @ (Q @ W[:, r]) - td.Y
        loss += float(resid @ resid) / td.n
    value = loss + hp.lambda_conn * connectivity_penalty(W, data.graph.adjacency)
    dW = W - state.U_W
    dQ = Q - state.U_Q
    value += float(np.sum(state.Lambda1 * dW)) + 0.5 * rho * float(np.sum(dW * dW))
    value += float(np.sum(state.Lambda2 * dQ)) + 0.5 * rho * float(np.sum(dQ * dQ))
    if hp.orthogonality:
        G = Q.T @ Q - np.eye(Q.shape[1])
        value += float(np.sum(state.Lambda3 * G)) + 0.5 * rho * float(np.sum(G * G))
    return value


def grad_W_r(r, data: MultiTaskDataset, state: SolverState, hp: Hyperparams):
    """Gradient of the smooth Lagrangian with respect to column r of W."""
    td = data.tasks[r]
    G = td.X @ state.Q
    w = state.W[:, r]
    g = (2.0 / td.n) * (G.T @ (G @ w - td.Y))
    g = g + state.Lambda1[:, r] + hp.rho * (w - state.U_W[:, r])
    M = data.graph.adjacency
    neighbors = state.W @ M[:, r]
    g = g + 2.0 * hp.lambda_conn * (data.graph.degree[r] * w - neighbors)
    return g


def solve_W_r_exact(r, data: MultiTaskDataset, state: SolverState, hp: Hyperparams):
    """Minimize the W_r subproblem by its k-by-k SPD normal equations."""
    td = data.tasks[r]
    G = td.X @ state.Q
    k = G.shape[1]
    A = (2.0 / td.n) * (G.T @ G)
    A[np.diag_indices(k)] += hp.rho + 2.0 * hp.lambda_conn * data.graph.degree[r]
    b = (
        (2.0 / td.n) * (G.T @ td.Y)
        - state.Lambda1[:, r]
        + hp.rho * state.U_W[:, r]
        + 2.0 * hp.lambda_conn * (state.W @ data.graph.adjacency[:, r])
    )
    try:
        return np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:  # unreachable for rho > 0
        raise NumericalAbort(f"W subproblem solve failed for task {td.road_id!r}: {exc}") from None


def power_iteration_sym(H, iters=60):
    """Largest eigenvalue of a symmetric PSD matrix by power iteration."""
    v = np.ones(H.shape[0]) / np.sqrt(H.shape[0])
    lam = 0.0
    for _ in range(iters):
        hv = H @ v
        lam = float(v @ hv)
        nrm = np.linalg.norm(hv)
        if nrm == 0:
            return 0.0
        v = hv / nrm
    return lam


def solve_W_r_gradient(r, data: MultiTaskDataset, state: SolverState, hp: Hyperparams):
    """Approximate the W_r subproblem by fixed-count gradient descent.

    Step size 1/L with L from power iteration on the subproblem Hessian;
    mirrors the exact solve without forming the normal-equation solve.
    """
    td = data.tasks[r]
    G = td.X @ state.Q
    k = G.shape[1]
    A = (2.0 / td.n) * (G.T @ G)
    A[np.diag_indices(k)] += hp.rho + 2.0 * hp.lambda_conn * data.graph.degree[r]
    b = (
        (2.0 / td.n) * (G.T @ td.Y)
        - state.Lambda1[:, r]
        + hp.rho * state.U_W[:, r]
        + 2.0 * hp.lambda_conn * (state.W @ data.graph.adjacency[:, r])
    )
    L = power_iteration_sym(A)
    step = 1.0 / (1.05 * L)
    w = state.W[:, r].copy()
    for _ in range(GRADIENT_INNER_STEPS):
        w = w - step * (A @ w - b)
    return w


def grad_Q(data: MultiTaskDataset, state: SolverState, hp: Hyperparams):
    """Gradient of the smooth Lagrangian with respect to Q."""
    Q, W = state.Q, state.W
    g = np.zeros_like(Q)
    for r, td in enumerate(data.tasks):
        resid = td.X @ (Q @ W[:, r]) - td.Y
        g += (2.0 / td.n) * np.outer(td.X.T @ resid, W[:, r])
    g = g + state.Lambda2 + hp.rho * (Q - state.U_Q)
    if hp.orthogonality:
        g = g + 2.0 * Q @ state.Lambda3
        g = g + 2.0 * hp.rho * Q @ (Q.T @ Q - np.eye(Q.shape[1]))
    return g


def update_Q(data: MultiTaskDataset, state: SolverState, g, hp: Hyperparams):
    """Projected backtracking step on Q.

    Halves the step from hp.alpha until the smooth Lagrangian at the
    non-negatively clipped candidate stops increasing; returns
    (new Q, stalled). A stalled step leaves Q unchanged.
    """
    base = smooth_lagrangian(data, state.Q, state.W, state, hp)
    alpha = hp.alpha
    for _ in range(MAX_BACKTRACKS):
        candidate = clip_nonneg(state.Q - alpha * g)
        if smooth_lagrangian(data, candidate, state.W, state, hp) <= base + 1e-12:
            return candidate, False
        alpha *= 0.5
    return state.Q.copy(), True


def update_duals(state: SolverState, hp: Hyperparams):
    """Proximal refresh of the auxiliary copies (scaled-form arguments)."""
    U_W = prox_l21(state.W + state.Lambda1 / hp.rho, hp.lambda_w / hp.rho)
    U_Q = soft_threshold_nonneg(state.Q + state.Lambda2 / hp.rho, hp.lambda_q / hp.rho)
    return U_W, U_Q


def update_multipliers(state: SolverState, hp: Hyperparams):
    """Ascent step on all three multipliers; Lambda3 kept symmetric."""
    L1 = state.Lambda1 + hp.rho * (state.W - state.U_W)
    L2 = state.Lambda2 + hp.rho * (state.Q - state.U_Q)
    if hp.orthogonality:
        G = state.Q.T @ state.Q - np.eye(state.Q.shape[1])
        L3 = state.Lambda3 + hp.rho * G
        L3 = 0.5 * (L3 + L3.T)
    else:
        L3 = state.Lambda3.copy()
    return L1, L2, L3


def residuals(state_prev: SolverState, state_new: SolverState, hp: Hyperparams):
    """(primal, dual) residual pair for the stopping rule."""
    p_res = norm_fro(state_new.W - state_new.U_W) + norm_fro(state_new.Q - state_new.U_Q)
    if hp.orthogonality:
        p_res += orthogonality_gap(state_new.Q)
    d_res = hp.rho * (
        norm_fro(state_new.U_W - state_prev.U_W) + norm_fro(state_new.U_Q - state_prev.U_Q)
    )
    return p_res, d_res


def identity_q0(p, k, seed):
    """Simple feasible start: first k identity columns plus uniform
    [0, 0.01] noise, columns normalized (non-negative, near-orthonormal).

    Kept as a reference initializer; in practice it parks every column
    on the lowest-index features and the solver then reliably falls into
    support-collapsed local minima, so fit defaults to structured_q0.
    """
    rng = np.random.default_rng(seed)
    Q = np.eye(p)[:, :k] + rng.uniform(0.0, 0.01, size=(p, k))
    return Q / np.linalg.norm(Q, axis=0)


def _segment_contiguous(rows, weights, k):
    """Split row indices 0..p-1 into k contiguous segments minimizing
    weighted within-segment dispersion, by dynamic programming.

    Returns the k+1 segment boundaries (0 = first, p = last).
    """
    p = rows.shape[0]
    Sw = np.vstack([np.zeros(rows.shape[1]), np.cumsum(rows * weights[:, None], axis=0)])
    sw = np.concatenate([[0.0], np.cumsum(weights)])
    sq = np.concatenate([[0.0], np.cumsum(weights * (rows * rows).sum(axis=1))])
    D = np.full((p + 1, k + 1), np.inf)
    arg = np.zeros((p + 1, k + 1), dtype=int)
    D[0, 0] = 0.0
    for c in range(1, k + 1):
        for i in range(c, p + 1):
            m = np.arange(c - 1, i)
            seg_w = np.maximum(sw[i] - sw[m], 1e-300)
            mu2 = ((Sw[i] - Sw[m]) ** 2).sum(axis=1)
            vals = D[m, c - 1] + (sq[i] - sq[m]) - mu2 / seg_w
            j = int(np.argmin(vals))
            D[i, c], arg[i, c] = vals[j], m[j]
    bounds = [p]
    i = p
    for c in range(k, 0, -1):
        i = int(arg[i, c])
        bounds.append(i)
    return bounds[::-1]


def structured_q0(data: MultiTaskDataset, k):
    """Data-driven feasible start from contiguous feature segments.

    Temporal feature groups are contiguous windows, so a good starting
    grouping is a segmentation of the feature axis: estimate per-task
    reference weights by lightly regularized ridge, smooth them along
    the feature axis (3-window average), and cut the smoothed weight
    rows into k contiguous segments by dynamic programming, weighting
    rows by magnitude so noise-dominated features do not place
    boundaries. Each segment becomes one Q column carrying the ridge
    magnitudes, normalized: disjoint supports, so Q0 is exactly
    feasible. Deterministic given the data.
    """
    from .baselines import fit_ridge

    B = np.column_stack([fit_ridge(td, 0.01) for td in data.tasks])
    norms = np.linalg.norm(B, axis=1)
    F = (np.vstack([B[:1], B[:-1]]) + B + np.vstack([B[1:], B[-1:]])) / 3.0
    fn = np.linalg.norm(F, axis=1)
    rows = F / np.where(fn > 0, fn, 1.0)[:, None]
    bounds = _segment_contiguous(rows, np.maximum(fn, 1e-12) ** 2, k)
    Q = np.zeros((data.p, k))
    for c in range(k):
        seg = slice(bounds[c], bounds[c + 1])
        Q[seg, c] = np.maximum(norms[seg], 1e-12)
    return Q / np.linalg.norm(Q, axis=0)


def initial_state(data: MultiTaskDataset, hp: Hyperparams, q0=None):
    """Feasible deterministic start: Q0 from structured_q0 (or the
    explicit q0 override); W0 = 0; duals copy the primals; multipliers
    zero."""
    p, k, T = data.p, hp.k, data.n_tasks
    if q0 is not None:
        Q = np.array(q0, dtype=float)
        if Q.shape != (p, k):
            raise InputError(f"q0 must have shape {(p, k)}, got {Q.shape}")
    else:
        Q = structured_q0(data, k)
    W = np.zeros((k, T))
    return SolverState(
        W=W,
        Q=Q,
        U_W=W.copy(),
        U_Q=Q.copy(),
        Lambda1=np.zeros((k, T)),
        Lambda2=np.zeros((p, k)),
        Lambda3=np.zeros((k, k)),
    )


def check_finite(state: SolverState, iteration):
    for name in ("W", "Q", "U_W", "U_Q", "Lambda1", "Lambda2", "Lambda3"):
        if not np.all(np.isfinite(getattr(state, name))):
            raise NumericalAbort(f"non-finite values in {name} at iteration {iteration}")


def fit(data: MultiTaskDataset, hp: Hyperparams, q0=None) -> TrainedModel:
    """Train by ADMM.

    Per outer iteration: one Gauss-Seidel BCD sweep over task weights in
    task order (exact SPD solve or fixed-count gradient descent per
    hp.inner_w_solve), one projected backtracking gradient step on Q,
    proximal dual refresh, multiplier ascent, then the residual check.
    Stops early once both residuals fall below their tolerances. Any
    non-finite value aborts with a diagnostic naming the variable.
    """
    if hp.k > data.p:
        raise InputError(f"group count k={hp.k} exceeds feature dimension p={data.p}")
    T = data.n_tasks
    state = initial_state(data, hp, q0=q0)
    solve_w = solve_W_r_exact if hp.inner_w_solve == "exact" else solve_W_r_gradient

    converged = False
    for it in range(1, hp.max_iter + 1):
        state.iteration = it
        for r in range(T):
            state.W[:, r] = solve_w(r, data, state, hp)
        g = grad_Q(data, state, hp)
        new_Q, stalled = update_Q(data, state, g, hp)
        state.Q = new_Q
        if stalled:
            state.stalls += 1
        prev_U_W, prev_U_Q = state.U_W, state.U_Q
        state.U_W, state.U_Q = update_duals(state, hp)
        state.Lambda1, state.Lambda2, state.Lambda3 = update_multipliers(state, hp)
        p_res = norm_fro(state.W - state.U_W) + norm_fro(state.Q - state.U_Q)
        if hp.orthogonality:
            p_res += orthogonality_gap(state.Q)
        d_res = hp.rho * (norm_fro(state.U_W - prev_U_W) + norm_fro(state.U_Q - prev_U_Q))
        state.primal_residual, state.dual_residual = p_res, d_res
        state.residual_history.append((p_res, d_res))
        state.objective_history.append(objective(data, state.Q, state.W, hp))
        check_finite(state, it)
        if p_res < hp.eps_primal and d_res < hp.eps_dual:
            converged = True
            break

    return TrainedModel(
        Q=state.Q.copy(),
        W=state.W.copy(),
        tasks=tuple(data.graph.tasks),
        hyperparams=hp,
        converged=converged,
        iterations=state.iteration,
        final_residuals=(state.primal_residual, state.dual_residual),
        residual_history=tuple(state.residual_history),
        objective_history=tuple(state.objective_history),
    )


def predict(model: TrainedModel, X, task):
    """Predicted durations X Q W_task for one task."""
    X = np.asarray(X, dtype=float)
    if task not in model.tasks:
        raise InputError(f"unknown task {task!r}; model covers {list(model.tasks)}")
    if X.ndim != 2 or X.shape[1] != model.p:
        raise InputError(f"X must have {model.p} columns, got shape {X.shape}")
    r = model.tasks.index(task)
    return X @ (model.Q @ model.W[:, r])
