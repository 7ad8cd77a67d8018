"""Survival data containers, CSV ingestion, and the model interface.

An instance records covariates plus a right-censored label: the observed
time is min(death time, censor time) and the event flag says whether the
death was observed.  Feature values may be numeric, a category string, or
``None`` for a missing cell; models only ever see fully numeric feature
matrices (the preprocessing pipeline guarantees that).
"""

from __future__ import annotations

import csv
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Iterator

import numpy as np

__all__ = [
    "Instance",
    "SurvivalDataset",
    "SurvivalCurve",
    "SurvivalModel",
    "FitError",
    "ConvergenceError",
    "load_csv",
    "save_csv",
    "split_by_censoring",
]


class FitError(RuntimeError):
    """A model fit failed for a structural reason (e.g. singular Hessian)."""


class ConvergenceError(FitError):
    """An iterative fit ran out of iterations; carries the last iterate."""

    def __init__(self, message: str, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


@dataclass(frozen=True)
class Instance:
    """One patient: covariates plus the recorded (time, event) label.

    ``event`` is True when the recorded time is an observed death and
    False when it is a censoring time (a lower bound on the death time).
    A death tied with its censor time is encoded as event=True.
    """

    features: tuple
    time: float
    event: bool

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        object.__setattr__(self, "time", float(self.time))
        object.__setattr__(self, "event", bool(self.event))
        if not self.time >= 0:
            raise ValueError(f"time must be non-negative, got {self.time}")


@dataclass(frozen=True)
class SurvivalDataset:
    """A cohort of instances sharing one feature schema."""

    instances: tuple
    feature_names: tuple
    time_unit: str = ""

    def __post_init__(self):
        object.__setattr__(self, "instances", tuple(self.instances))
        object.__setattr__(self, "feature_names", tuple(str(n) for n in self.feature_names))
        k = len(self.feature_names)
        for i, inst in enumerate(self.instances):
            if len(inst.features) != k:
                raise ValueError(
                    f"instance {i} has {len(inst.features)} features, expected {k}"
                )

    def __len__(self) -> int:
        return len(self.instances)

    def __iter__(self) -> Iterator[Instance]:
        return iter(self.instances)

    @property
    def times(self) -> np.ndarray:
        return np.array([inst.time for inst in self.instances], dtype=float)

    @property
    def events(self) -> np.ndarray:
        return np.array([inst.event for inst in self.instances], dtype=bool)

    @property
    def n_uncensored(self) -> int:
        return int(self.events.sum())

    def feature_matrix(self) -> np.ndarray:
        """All features as a float matrix; raises if any cell is missing or
        categorical (run the preprocessing pipeline first in that case)."""
        n, k = len(self.instances), len(self.feature_names)
        out = np.empty((n, k), dtype=float)
        for i, inst in enumerate(self.instances):
            for j, value in enumerate(inst.features):
                if value is None or isinstance(value, str):
                    raise ValueError(
                        f"feature {self.feature_names[j]!r} of instance {i} is "
                        f"{value!r}; encode/impute before requesting a matrix"
                    )
                out[i, j] = value
        return out

    def subset(self, indices) -> "SurvivalDataset":
        idx = np.asarray(indices)
        if idx.dtype == bool:
            idx = np.flatnonzero(idx)
        return SurvivalDataset(
            tuple(self.instances[int(i)] for i in idx),
            self.feature_names,
            self.time_unit,
        )

    @classmethod
    def from_arrays(cls, x, times, events, feature_names=None, time_unit="") -> "SurvivalDataset":
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        times = np.asarray(times, dtype=float)
        events = np.asarray(events, dtype=bool)
        if feature_names is None:
            feature_names = tuple(f"x{j}" for j in range(x.shape[1]))
        instances = tuple(
            Instance(tuple(row), t, e) for row, t, e in zip(x, times, events)
        )
        return cls(instances, tuple(feature_names), time_unit)


@dataclass(frozen=True)
class SurvivalCurve:
    """Knots of a monotone survival function t -> P(T > t).

    interp="step": right-continuous step function (Kaplan-Meier style);
    interp="linear": piecewise linear through the knots, anchored at
    (0, 1) when no knot sits at t = 0.  Evaluation at t = 0 returns 1
    unless an explicit knot (0, p) says otherwise, and evaluation past
    the last knot returns the last probability.
    """

    times: np.ndarray
    probs: np.ndarray
    interp: str = "step"

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).copy()
        probs = np.asarray(self.probs, dtype=float).copy()
        if times.ndim != 1 or probs.ndim != 1 or times.size != probs.size:
            raise ValueError("times and probs must be 1-d arrays of equal length")
        if times.size == 0:
            raise ValueError("a survival curve needs at least one knot")
        if np.any(times < 0):
            raise ValueError("knot times must be non-negative")
        if np.any(np.diff(times) <= 0):
            raise ValueError("knot times must be strictly increasing")
        if np.any(probs < 0) or np.any(probs > 1):
            raise ValueError("survival probabilities must lie in [0, 1]")
        if np.any(np.diff(probs) > 0):
            raise ValueError("survival probabilities must be non-increasing")
        if self.interp not in ("step", "linear"):
            raise ValueError(f"unknown interpolation kind {self.interp!r}")
        times.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "probs", probs)


class SurvivalModel(ABC):
    """Anything that deterministically yields one survival curve per instance."""

    @abstractmethod
    def predict_curve(self, inst: Instance) -> SurvivalCurve:
        """Predicted survival curve for one instance."""


def split_by_censoring(d: SurvivalDataset):
    """Partition a dataset into (uncensored, censored) halves by event flag."""
    events = d.events
    return d.subset(events), d.subset(~events)


def _parse_cell(raw: str):
    text = raw.strip()
    if text == "":
        return None
    try:
        return float(text)
    except ValueError:
        return text


def load_csv(path, time_col: str, event_col: str) -> SurvivalDataset:
    """Read a survival dataset from a headed CSV file.

    One row per patient; `time_col` must parse as a non-negative real and
    `event_col` as 0 (censored) or 1 (death).  Every other column becomes a
    feature: numeric cells parse to floats, non-numeric cells are kept as
    category strings for later one-hot encoding, empty cells become missing
    markers.  Malformed cells raise a ValueError naming the row (1-based
    file line) and column.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected a header row")
        header = [h.strip() for h in header]
        for col in (time_col, event_col):
            if col not in header:
                raise ValueError(f"{path}: column {col!r} not found in header {header}")
        t_idx = header.index(time_col)
        e_idx = header.index(event_col)
        feature_names = tuple(h for i, h in enumerate(header) if i not in (t_idx, e_idx))
        feature_idx = [i for i in range(len(header)) if i not in (t_idx, e_idx)]

        instances = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ValueError(
                    f"{path}: row {line_no} has {len(row)} cells, expected {len(header)}"
                )
            try:
                time = float(row[t_idx])
            except ValueError:
                raise ValueError(
                    f"{path}: row {line_no}, column {time_col!r}: "
                    f"cannot parse time {row[t_idx]!r}"
                )
            if not time >= 0:
                raise ValueError(
                    f"{path}: row {line_no}, column {time_col!r}: "
                    f"negative time {time}"
                )
            try:
                event = float(row[e_idx])
            except ValueError:
                raise ValueError(
                    f"{path}: row {line_no}, column {event_col!r}: "
                    f"cannot parse event flag {row[e_idx]!r}"
                )
            if event not in (0.0, 1.0):
                raise ValueError(
                    f"{path}: row {line_no}, column {event_col!r}: "
                    f"event flag must be 0 or 1, got {row[e_idx]!r}"
                )
            features = tuple(_parse_cell(row[i]) for i in feature_idx)
            instances.append(Instance(features, time, event == 1.0))

    return SurvivalDataset(tuple(instances), feature_names)


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    return repr(float(value))


def save_csv(d: SurvivalDataset, path, time_col: str = "time", event_col: str = "event") -> None:
    """Write a dataset in the format `load_csv` reads (round-trip safe for
    times, events, and numeric features)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([time_col, event_col, *d.feature_names])
        for inst in d.instances:
            writer.writerow(
                [repr(inst.time), int(inst.event), *(_format_cell(v) for v in inst.features)]
            )
