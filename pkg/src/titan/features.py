"""Temporal feature construction and per-road dataset assembly.

Each incident contributes one feature vector built from the speed
readings around its verification interval: the h readings immediately
before it (detection window) followed by the t readings from the
verification interval onward (early-verification window), oldest first,
so the feature dimension is always p = h + t.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .roadnet import TaskGraph

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SpeedSeries:
    """Per-minute speed readings from one sensor.

    ``start_index`` is the absolute time-interval index of readings[0].
    """

    sensor_id: str
    readings: np.ndarray = field(repr=False)
    start_index: int = 0

    def __post_init__(self):
        r = np.asarray(self.readings, dtype=float)
        if r.ndim != 1 or r.size == 0:
            raise InputError(f"series {self.sensor_id!r}: readings must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(r)) or np.any(r < 0):
            raise InputError(f"series {self.sensor_id!r}: readings must be finite and >= 0")
        object.__setattr__(self, "readings", r)

    @property
    def end_index(self):
        """Index one past the last reading."""
        return self.start_index + len(self.readings)


@dataclass(frozen=True)
class IncidentRecord:
    incident_id: str
    road_id: str
    verification_index: int
    duration_minutes: float

    def __post_init__(self):
        if not self.duration_minutes > 0:
            raise InputError(
                f"incident {self.incident_id!r}: duration must be positive, got {self.duration_minutes}"
            )


@dataclass(frozen=True, eq=False)
class TaskDataset:
    """Design matrix and duration labels for one road."""

    road_id: str
    X: np.ndarray = field(repr=False)
    Y: np.ndarray = field(repr=False)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        Y = np.asarray(self.Y, dtype=float)
        if X.ndim != 2 or Y.ndim != 1 or X.shape[0] != Y.shape[0]:
            raise InputError(f"task {self.road_id!r}: X rows must match Y length")
        if X.shape[0] < 1:
            raise InputError(f"task {self.road_id!r}: needs at least one sample")
        if not np.all(np.isfinite(X)):
            raise InputError(f"task {self.road_id!r}: X contains non-finite entries")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]


@dataclass(frozen=True, eq=False)
class MultiTaskDataset:
    """Per-road datasets in task-graph order plus the coupling graph."""

    tasks: tuple  # of TaskDataset, order matching graph.tasks
    graph: TaskGraph
    h: int
    t: int

    def __post_init__(self):
        if tuple(td.road_id for td in self.tasks) != tuple(self.graph.tasks):
            raise InputError("task dataset order must match the task graph ordering")
        dims = {td.p for td in self.tasks}
        if len(dims) > 1:
            raise InputError(f"all tasks must share one feature dimension, got {sorted(dims)}")
        if self.p != self.h + self.t:
            raise InputError(f"feature dimension {self.p} != h + t = {self.h + self.t}")

    @property
    def p(self):
        return self.tasks[0].p

    @property
    def n_tasks(self):
        return len(self.tasks)

    def task(self, road_id) -> TaskDataset:
        return self.tasks[self.graph.index_of(road_id)]


def construct_features(series: SpeedSeries, verification_index, h, t):
    """Extract the length-(h + t) window around a verification interval.

    Returns readings at absolute indices [tau_v - h, tau_v + t), oldest
    first. Raises InputError naming the missing range when the series
    does not cover the window.
    """
    if h < 1 or t < 1:
        raise InputError(f"window sizes must be >= 1, got h={h}, t={t}")
    lo = verification_index - h
    hi = verification_index + t  # exclusive
    if lo < series.start_index or hi > series.end_index:
        raise InputError(
            f"insufficient history in series {series.sensor_id!r}: need indices "
            f"[{lo}, {hi - 1}], have [{series.start_index}, {series.end_index - 1}]"
        )
    off = lo - series.start_index
    return series.readings[off : off + h + t].copy()


def split_rows(n, split, rng):
    """Shuffled train/test row indices: floor(split * n) train, min 1."""
    n_train = max(1, int(np.floor(split * n)))
    perm = rng.permutation(n)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def assemble_dataset(
    incidents,
    series_by_road,
    graph: TaskGraph,
    h,
    t,
    split=0.8,
    seed=0,
    standardize=False,
):
    """Build per-road train/test datasets from incident records.

    Incidents whose feature window falls outside their road's series are
    skipped (logged); each remaining task is shuffled with a seeded RNG
    and split per task, so every road keeps its own train rows. With
    ``standardize=True`` every feature column is centered and scaled
    using statistics of the pooled train rows only.

    Returns a (train, test) pair of MultiTaskDataset.
    """
    if not 0 < split < 1:
        raise InputError(f"split fraction must be in (0, 1), got {split}")
    for inc in incidents:
        if inc.road_id not in graph.tasks:
            raise InputError(f"incident {inc.incident_id!r} references unknown road {inc.road_id!r}")

    rows = {road: [] for road in graph.tasks}
    labels = {road: [] for road in graph.tasks}
    for inc in incidents:
        series = series_by_road.get(inc.road_id)
        if series is None:
            raise InputError(f"no speed series for road {inc.road_id!r}")
        try:
            x = construct_features(series, inc.verification_index, h, t)
        except InputError as exc:
            log.info("skipping incident %s: %s", inc.incident_id, exc)
            continue
        rows[inc.road_id].append(x)
        labels[inc.road_id].append(inc.duration_minutes)

    rng = np.random.default_rng(seed)
    train_tasks, test_tasks = [], []
    for road in graph.tasks:
        if not rows[road]:
            raise InputError(f"task {road!r} has no usable incidents after feature construction")
        X = np.vstack(rows[road])
        Y = np.asarray(labels[road], dtype=float)
        idx_train, idx_test = split_rows(len(Y), split, rng)
        if len(idx_test) == 0:
            raise InputError(
                f"task {road!r} has too few usable incidents ({len(Y)}) to fill both splits"
            )
        train_tasks.append(TaskDataset(road, X[idx_train], Y[idx_train]))
        test_tasks.append(TaskDataset(road, X[idx_test], Y[idx_test]))

    train = MultiTaskDataset(tuple(train_tasks), graph, h, t)
    test = MultiTaskDataset(tuple(test_tasks), graph, h, t)
    if standardize:
        train, test = standardize_columns(train, test)
    return train, test


def standardize_columns(train: MultiTaskDataset, test: MultiTaskDataset):
    """Center/scale every feature column by pooled train statistics."""
    pooled = np.vstack([td.X for td in train.tasks])
    mean = pooled.mean(axis=0)
    std = pooled.std(axis=0)
    std[std == 0] = 1.0

    def apply(ds):
        tasks = tuple(
            TaskDataset(td.road_id, (td.X - mean) / std, td.Y) for td in ds.tasks
        )
        return MultiTaskDataset(tasks, ds.graph, ds.h, ds.t)

    return apply(train), apply(test)


def parse_incidents_csv(text, source="<incidents>"):
    """Parse the incident CSV (header incident_id,road_id,verification_index,duration_minutes)."""
    lines = text.splitlines()
    if not lines:
        raise InputError(f"{source}: empty incident file")
    header = "incident_id,road_id,verification_index,duration_minutes"
    if lines[0].strip() != header:
        raise InputError(f"{source}:1: expected header {header!r}")
    records = []
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise InputError(f"{source}:{lineno}: expected 4 fields, got {len(parts)}")
        try:
            records.append(
                IncidentRecord(
                    incident_id=parts[0],
                    road_id=parts[1],
                    verification_index=int(parts[2]),
                    duration_minutes=float(parts[3]),
                )
            )
        except (ValueError, InputError) as exc:
            raise InputError(f"{source}:{lineno}: {exc}") from None
    return records


def parse_speed_csv(text, sensor_id, source="<speeds>"):
    """Parse a per-road speed file: ``# start_index=<int>`` then one reading per line."""
    lines = text.splitlines()
    if not lines or not lines[0].strip().startswith("# start_index="):
        raise InputError(f"{source}:1: expected '# start_index=<int>' header")
    try:
        start = int(lines[0].strip().split("=", 1)[1])
    except ValueError:
        raise InputError(f"{source}:1: bad start_index value") from None
    readings = []
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            readings.append(float(line))
        except ValueError:
            raise InputError(f"{source}:{lineno}: bad speed reading {line!r}") from None
    try:
        return SpeedSeries(sensor_id=sensor_id, readings=np.asarray(readings), start_index=start)
    except InputError as exc:
        raise InputError(f"{source}: {exc}") from None


def load_incidents_csv(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_incidents_csv(fh.read(), source=str(path))


def load_speed_csv(path, sensor_id):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_speed_csv(fh.read(), sensor_id, source=str(path))
