"""Evaluation: RMSE, leakage-safe chronological splitting, the model x
data-source experiment grid, and permutation feature importance."""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import ConfigError
from .featurize import FeatureMatrix, canonical_groups
from .model import ModelArtifact, ModelSpec, fit_from_spec, predict

DEFAULT_COMBOS = (("HIST",), ("HIST", "WX"), ("HIST", "ATC"), ("HIST", "WX", "ATC"))


def rmse(y_true, y_pred) -> float:
    """Root mean squared error, in the target's units (minutes here)."""
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise ConfigError("rmse: inputs must be equal-length vectors")
    if y_true.size == 0:
        raise ConfigError("rmse: empty input")
    return float(np.sqrt(np.mean((y_true - y_pred) ** 2)))


def time_split(
    predicting_times: Sequence[datetime], train_fraction: float
) -> tuple[np.ndarray, np.ndarray]:
    """Split row indices by distinct calendar days of predicting time: the
    first ceil(fraction * n_days) days train, the rest test. No day straddles
    the boundary, so every test row postdates every training row."""
    if not 0.0 < train_fraction < 1.0:
        raise ConfigError("train_fraction must be in (0, 1)")
    days = sorted({t.date() for t in predicting_times})
    if len(days) < 2:
        raise ConfigError("time_split needs at least 2 distinct days")
    n_train_days = math.ceil(train_fraction * len(days))
    if n_train_days >= len(days):
        raise ConfigError(
            f"train_fraction {train_fraction} leaves no test days ({len(days)} days total)"
        )
    cutoff = days[n_train_days - 1]
    flags = np.asarray([t.date() <= cutoff for t in predicting_times], dtype=bool)
    idx = np.arange(len(predicting_times))
    return idx[flags], idx[~flags]


@dataclass
class ExperimentResult:
    family: str
    combo: tuple[str, ...]
    rmse_train: Optional[float]
    rmse_test: Optional[float]
    n_train: int
    n_test: int
    seed: int
    wall_ms: float
    error: Optional[str] = None

    @property
    def combo_label(self) -> str:
        return "+".join(self.combo)


def combo_label(combo: Iterable[str]) -> str:
    return "+".join(canonical_groups(combo))


def _run_cell(
    fm: FeatureMatrix,
    spec: ModelSpec,
    combo: tuple[str, ...],
    train_idx: np.ndarray,
    test_idx: np.ndarray,
    reuse: Optional[ModelArtifact],
) -> ExperimentResult:
    started = time.perf_counter()
    try:
        sub = fm.select_groups(combo)
        tr = train_idx[np.isfinite(sub.y[train_idx])]
        te = test_idx[np.isfinite(sub.y[test_idx])]
        if tr.size == 0 or te.size == 0:
            raise ConfigError("empty train or test partition after target filtering")
        artifact = reuse
        if artifact is None:
            artifact = fit_from_spec(spec, sub.X[tr], sub.y[tr], sub.columns)
        r_train = rmse(sub.y[tr], predict(artifact, sub.X[tr], sub.columns))
        r_test = rmse(sub.y[te], predict(artifact, sub.X[te], sub.columns))
        wall = (time.perf_counter() - started) * 1000.0
        return ExperimentResult(
            family=spec.family,
            combo=combo,
            rmse_train=r_train,
            rmse_test=r_test,
            n_train=int(tr.size),
            n_test=int(te.size),
            seed=spec.seed,
            wall_ms=wall,
        )
    except Exception as exc:  # a single cell failure must not stop the grid
        wall = (time.perf_counter() - started) * 1000.0
        return ExperimentResult(
            family=spec.family,
            combo=combo,
            rmse_train=None,
            rmse_test=None,
            n_train=0,
            n_test=0,
            seed=spec.seed,
            wall_ms=wall,
            error=str(exc),
        )


def run_grid(
    fm: FeatureMatrix,
    specs: Sequence[ModelSpec],
    combos: Sequence[Sequence[str]] = DEFAULT_COMBOS,
    train_fraction: float = 0.8,
    trained: Optional[dict[str, ModelArtifact]] = None,
    threads: int = 1,
) -> list[ExperimentResult]:
    """One result per (model family, data-source combo).

    ``fm`` is the full assembled matrix; each cell selects its column subset
    by group tag, so all cells share the same rows and split. When ``trained``
    artifacts are given, they are reused for the combo covering every group in
    the matrix; all other cells fit fresh models. Cells are independent and
    may run concurrently.
    """
    combos_t = [canonical_groups(c) for c in combos]
    train_idx, test_idx = time_split(fm.predicting_times, train_fraction)
    full = canonical_groups(set(fm.groups))

    jobs = []
    for spec in specs:
        for combo in combos_t:
            reuse = None
            if trained and combo == full:
                reuse = trained.get(spec.family)
            jobs.append((spec, combo, reuse))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(
                pool.map(
                    lambda j: _run_cell(fm, j[0], j[1], train_idx, test_idx, j[2]), jobs
                )
            )
    else:
        results = [_run_cell(fm, s, c, train_idx, test_idx, r) for s, c, r in jobs]
    return results


def learning_curve(
    fm: FeatureMatrix,
    spec: ModelSpec,
    train_fraction: float = 0.8,
    min_train_days: int = 2,
) -> list[dict]:
    """Test RMSE against a fixed chronological test set as the training window
    grows one day at a time. Exploratory: there is no reference protocol or
    target numbers for this curve."""
    train_idx, test_idx = time_split(fm.predicting_times, train_fraction)
    te = test_idx[np.isfinite(fm.y[test_idx])]
    days = sorted({fm.predicting_times[i].date() for i in train_idx})
    if min_train_days < 1 or min_train_days > len(days):
        raise ConfigError("min_train_days out of range for the training period")
    rows = []
    for d in range(min_train_days, len(days) + 1):
        cutoff = days[d - 1]
        tr = train_idx[
            np.asarray(
                [fm.predicting_times[i].date() <= cutoff for i in train_idx], dtype=bool
            )
        ]
        tr = tr[np.isfinite(fm.y[tr])]
        artifact = fit_from_spec(spec, fm.X[tr], fm.y[tr], fm.columns)
        rows.append(
            {
                "train_days": d,
                "n_train": int(tr.size),
                "rmse_test": rmse(fm.y[te], predict(artifact, fm.X[te], fm.columns)),
            }
        )
    return rows


@dataclass
class ColumnImportance:
    column: str
    group: str
    delta_rmse: float


@dataclass
class ImportanceReport:
    baseline_rmse: float
    columns: list[ColumnImportance] = field(default_factory=list)

    def by_group(self) -> dict[str, float]:
        """Group aggregate = exact sum of the member columns' mean deltas."""
        out: dict[str, float] = {}
        for ci in self.columns:
            out[ci.group] = out.get(ci.group, 0.0) + ci.delta_rmse
        return out


def permutation_importance(
    artifact: ModelArtifact,
    X_test,
    columns: Sequence[str],
    y_test,
    repeats: int = 20,
    seed: int = 0,
    groups: Optional[Sequence[str]] = None,
) -> ImportanceReport:
    """Mean RMSE increase after shuffling one column at a time.

    Each (column, repeat) pair uses an independent seeded permutation, so the
    report is deterministic for a given seed.
    """
    if repeats < 1:
        raise ConfigError("repeats must be >= 1")
    X_test = np.asarray(X_test, dtype=float)
    y_test = np.asarray(y_test, dtype=float)
    baseline = rmse(y_test, predict(artifact, X_test, columns))
    tags = list(groups) if groups is not None else [""] * len(columns)
    report = ImportanceReport(baseline_rmse=baseline)
    for j, name in enumerate(columns):
        deltas = []
        for r in range(repeats):
            rng = np.random.default_rng([seed, j, r])
            shuffled = X_test.copy()
            shuffled[:, j] = shuffled[rng.permutation(X_test.shape[0]), j]
            deltas.append(rmse(y_test, predict(artifact, shuffled, columns)) - baseline)
        report.columns.append(
            ColumnImportance(column=name, group=tags[j], delta_rmse=float(np.mean(deltas)))
        )
    return report
