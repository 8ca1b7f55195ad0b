"""Metrics, comparison reports, group diagnostics, and k sweeps.

Report values are rounded to 4 decimals at construction so the CSV form
(`method,task,k,rmse,mae,mape_percent`) round-trips exactly. Pooled
overall metrics concatenate all tasks' prediction pairs; they are a
convenience and excluded from report equality, since they cannot be
recovered from the per-task rows alone.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .baselines import BaselineModel, baseline_predict
from .errors import InputError
from .features import MultiTaskDataset
from .solver import Hyperparams, TrainedModel, fit, predict

# An entry below 5% of its column's peak carries < 0.25% of the squared
# column mass; such entries are treated as numerically off-support.
SUPPORT_REL_THRESHOLD = 0.05
REPORT_HEADER = "method,task,k,rmse,mae,mape_percent"


def _check_pair(y, yhat):
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.ndim != 1 or yhat.ndim != 1 or y.shape != yhat.shape:
        raise InputError(f"need equal-length vectors, got {y.shape} and {yhat.shape}")
    if y.size == 0:
        raise InputError("metrics need at least one pair")
    return y, yhat


def rmse(y, yhat):
    y, yhat = _check_pair(y, yhat)
    d = y - yhat
    return float(np.sqrt(np.mean(d * d)))


def mae(y, yhat):
    y, yhat = _check_pair(y, yhat)
    return float(np.mean(np.abs(y - yhat)))


def mape(y, yhat):
    """Mean absolute percentage error, in percent."""
    y, yhat = _check_pair(y, yhat)
    if np.any(y == 0):
        raise InputError("mape undefined for zero labels")
    return float(100.0 * np.mean(np.abs((y - yhat) / y)))


@dataclass(frozen=True)
class MetricTriple:
    rmse: float
    mae: float
    mape_percent: float

    def __post_init__(self):
        object.__setattr__(self, "rmse", round(float(self.rmse), 4))
        object.__setattr__(self, "mae", round(float(self.mae), 4))
        object.__setattr__(self, "mape_percent", round(float(self.mape_percent), 4))


@dataclass(frozen=True)
class MetricsReport:
    method: str
    per_task: dict  # road_id -> MetricTriple, in task order
    k: int = 0  # group count for grouped models, 0 for baselines
    overall: MetricTriple | None = field(default=None, compare=False)


def measure(y, yhat):
    return MetricTriple(rmse(y, yhat), mae(y, yhat), mape(y, yhat))


def evaluate(model, data: MultiTaskDataset, method=None) -> MetricsReport:
    """Score a trained model (grouped or baseline) on every task."""
    if isinstance(model, TrainedModel):
        predictor, label, k = predict, method or "titan", model.hyperparams.k
    elif isinstance(model, BaselineModel):
        predictor, label, k = baseline_predict, method or model.kind, 0
    else:
        raise InputError(f"cannot evaluate object of type {type(model).__name__}")
    if tuple(model.tasks) != tuple(data.graph.tasks):
        raise InputError(
            f"model tasks {list(model.tasks)} do not match dataset tasks {list(data.graph.tasks)}"
        )
    per_task = {}
    ys, yhats = [], []
    for td in data.tasks:
        yhat = predictor(model, td.X, td.road_id)
        per_task[td.road_id] = measure(td.Y, yhat)
        ys.append(td.Y)
        yhats.append(yhat)
    overall = measure(np.concatenate(ys), np.concatenate(yhats))
    return MetricsReport(method=label, per_task=per_task, k=k, overall=overall)


def pooled_rmse(model, data: MultiTaskDataset):
    """Test RMSE over all tasks' pairs concatenated (full precision)."""
    predictor = predict if isinstance(model, TrainedModel) else baseline_predict
    ys = np.concatenate([td.Y for td in data.tasks])
    yhats = np.concatenate([predictor(model, td.X, td.road_id) for td in data.tasks])
    return rmse(ys, yhats)


def top_group_per_task(model: TrainedModel):
    """Per task, the group index with the largest |weight| and its Q column.

    Ties break toward the lowest index.
    """
    out = {}
    for r, road in enumerate(model.tasks):
        i = int(np.argmax(np.abs(model.W[:, r])))
        out[road] = (i, model.Q[:, i].copy())
    return out


def column_support(Q, rel=SUPPORT_REL_THRESHOLD):
    """Boolean support masks: entries above rel * column max (column per row)."""
    Q = np.abs(np.asarray(Q, dtype=float))
    peaks = Q.max(axis=0)
    peaks[peaks == 0] = 1.0
    return (Q > rel * peaks[None, :]).T


def jaccard(a, b):
    """Jaccard similarity of two index sets (1.0 when both empty)."""
    a, b = frozenset(a), frozenset(b)
    union = a | b
    if not union:
        return 1.0
    return len(a & b) / len(union)


def support_overlap_matrix(Q, rel=SUPPORT_REL_THRESHOLD):
    """Pairwise Jaccard overlap of column supports (diagnostic; zero
    for any exactly feasible Q, whose supports are disjoint)."""
    masks = column_support(Q, rel)
    k = masks.shape[0]
    out = np.zeros((k, k))
    sets = [frozenset(np.flatnonzero(m)) for m in masks]
    for i in range(k):
        for j in range(k):
            out[i, j] = jaccard(sets[i], sets[j])
    return out


def recovery_jaccard(Q, block_supports, rel=SUPPORT_REL_THRESHOLD):
    """Mean Jaccard between each planted block and its best learned column."""
    masks = column_support(Q, rel)
    sets = [frozenset(np.flatnonzero(m)) for m in masks]
    scores = []
    for block in block_supports:
        scores.append(max(jaccard(block, s) for s in sets))
    return float(np.mean(scores))


def _thread_budget(n_jobs):
    env = os.environ.get("TITAN_THREADS", "").strip()
    if env:
        try:
            cap = int(env)
        except ValueError:
            raise InputError(f"TITAN_THREADS must be an integer, got {env!r}") from None
        if cap < 1:
            raise InputError(f"TITAN_THREADS must be >= 1, got {cap}")
        return min(cap, n_jobs)
    return min(n_jobs, os.cpu_count() or 1)


def sweep_group_count(train: MultiTaskDataset, test: MultiTaskDataset, hp_base: Hyperparams, k_values):
    """Train one model per k (shared seed) and score each on the test split.

    Fits run concurrently up to the TITAN_THREADS budget; results are
    returned in k order regardless of completion order.
    """
    ks = list(k_values)
    if not ks:
        raise InputError("k sweep needs at least one value")
    for k in ks:
        if not 1 <= k <= train.p:
            raise InputError(f"sweep k={k} outside valid range 1..p={train.p}")

    def job(k):
        try:
            model = fit(train, replace(hp_base, k=k))
        except Exception as exc:
            raise type(exc)(f"k={k}: {exc}") from exc
        return evaluate(model, test)

    workers = _thread_budget(len(ks))
    if workers == 1:
        reports = [job(k) for k in ks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(job, ks))
    return tuple(reports)


def emit_report_csv(reports):
    """Serialize reports as `method,task,k,rmse,mae,mape_percent` rows."""
    lines = [REPORT_HEADER]
    for rep in reports:
        for road, m in rep.per_task.items():
            lines.append(
                f"{rep.method},{road},{rep.k},{m.rmse:.4f},{m.mae:.4f},{m.mape_percent:.4f}"
            )
    return "\n".join(lines) + "\n"


def parse_report_csv(text, source="<report>"):
    """Inverse of emit_report_csv; overall metrics are not recoverable."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != REPORT_HEADER:
        raise InputError(f"{source}:1: expected header {REPORT_HEADER!r}")
    groups = {}  # (method, k) -> per-task dict, insertion ordered
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 6:
            raise InputError(f"{source}:{lineno}: expected 6 fields, got {len(parts)}")
        method, road = parts[0], parts[1]
        try:
            k = int(parts[2])
            triple = MetricTriple(float(parts[3]), float(parts[4]), float(parts[5]))
        except ValueError:
            raise InputError(f"{source}:{lineno}: bad numeric field") from None
        groups.setdefault((method, k), {})[road] = triple
    return tuple(
        MetricsReport(method=method, per_task=per_task, k=k)
        for (method, k), per_task in groups.items()
    )
