"""Per-flight feature assembly at predicting time.

Features are drawn from three source groups:

* HIST — previous-leg linkage (delay propagation) plus calendar attributes.
* WX   — the most recent weather observation at or before predicting time,
         one-hot encoded and reduced with PCA.
* ATC  — surface-traffic complexity over the observation window: per-zone
         densities and aircraft/vehicle counts, plus potential take-offs and
         landings from the schedule.

Nothing here may read any event that happens after predicting time; that
leakage guard is part of every operation's contract and is exercised by the
test suite against truncated source copies.
"""

from __future__ import annotations

import bisect
import csv
import json
import math
from dataclasses import dataclass, field
from datetime import date, datetime
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .errors import ConfigError, ValidationError
from .ingest import FlightRecord, WeatherObservation, format_timestamp, parse_timestamp
from .trajectory import Trajectory

GROUP_ORDER = ("HIST", "WX", "ATC")

HIST_COLUMNS = (
    "hist_inbound_delay_min",
    "hist_turnaround_sched_min",
    "hist_has_previous",
    "hist_day_of_week",
    "hist_hour_of_day",
    "hist_sched_duration_min",
)

_ZONES = ("parking", "apron", "runway")
_ZONE_CODE = {"other": 0, "parking": 1, "apron": 2, "runway": 3}

ATC_COLUMNS = tuple(
    f"atc_{zone}_{kind}" for zone in _ZONES for kind in ("aircraft", "density", "moving", "vehicles")
) + ("atc_potential_takeoffs", "atc_potential_landings")

UNKNOWN_TOKEN = "<unknown>"


@dataclass(frozen=True)
class FeaturizeParams:
    gap_min: float = 240.0
    window_min: float = 60.0
    moving_threshold_mps: float = 2.0
    pca_components: int = 18
    weather_staleness_h: float = 6.0
    airport: Optional[str] = None


@dataclass(frozen=True)
class PredictionContext:
    """Timeline anchor for one flight: features may only read events at or
    before ``predicting_time`` = sched_gate_out - gap."""

    flight: FlightRecord
    gap_min: float
    window_min: float

    def __post_init__(self):
        if self.gap_min <= 0:
            raise ConfigError("gap_min must be > 0")
        if self.window_min <= 0:
            raise ConfigError("window_min must be > 0")

    @property
    def predicting_time(self) -> datetime:
        from datetime import timedelta

        return self.flight.sched_gate_out - timedelta(minutes=self.gap_min)

    @property
    def window_start(self) -> datetime:
        from datetime import timedelta

        return self.predicting_time - timedelta(minutes=self.window_min)


# --- PCA ---


@dataclass(frozen=True)
class PcaModel:
    means: np.ndarray
    scales: np.ndarray
    loadings: np.ndarray  # (p, k), orthonormal columns
    explained_variance: np.ndarray  # (k,), non-increasing
    column_names: tuple[str, ...] = ()

    @property
    def k(self) -> int:
        return self.loadings.shape[1]

    def to_dict(self) -> dict:
        return {
            "means": self.means.tolist(),
            "scales": self.scales.tolist(),
            "loadings": self.loadings.tolist(),
            "explained_variance": self.explained_variance.tolist(),
            "column_names": list(self.column_names),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PcaModel":
        return cls(
            means=np.asarray(d["means"], dtype=float),
            scales=np.asarray(d["scales"], dtype=float),
            loadings=np.asarray(d["loadings"], dtype=float),
            explained_variance=np.asarray(d["explained_variance"], dtype=float),
            column_names=tuple(d.get("column_names", ())),
        )


def fit_pca(X: np.ndarray, k: int, column_names: Sequence[str] = ()) -> PcaModel:
    """Top-k principal components of the z-scored data.

    Columns are standardized internally (constant columns get scale 1); the
    loadings are eigenvectors of the sample covariance, sign-fixed so each
    component's largest-magnitude loading is positive.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ConfigError("fit_pca needs a 2-D matrix with at least 2 rows")
    n, p = X.shape
    if not 1 <= k <= p:
        raise ConfigError(f"component count k={k} must be within [1, {p}]")
    means = X.mean(axis=0)
    scales = X.std(axis=0, ddof=1)
    scales = np.where(scales == 0.0, 1.0, scales)
    Z = (X - means) / scales
    cov = (Z.T @ Z) / (n - 1)
    evals, evecs = np.linalg.eigh(cov)
    # stable descending sort: tied eigenvalues keep their original axis order
    order = np.argsort(-evals, kind="stable")
    evals = evals[order][:k]
    evecs = evecs[:, order][:, :k]
    for j in range(evecs.shape[1]):
        pivot = int(np.argmax(np.abs(evecs[:, j])))
        if evecs[pivot, j] < 0:
            evecs[:, j] = -evecs[:, j]
    return PcaModel(
        means=means,
        scales=scales,
        loadings=evecs,
        explained_variance=evals,
        column_names=tuple(column_names),
    )


def project(pm: PcaModel, X: np.ndarray) -> np.ndarray:
    """Scores = standardized(X) @ loadings."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != pm.means.shape[0]:
        raise ConfigError(
            f"project: expected {pm.means.shape[0]} columns, got {X.shape[1]}"
        )
    return ((X - pm.means) / pm.scales) @ pm.loadings


def one_hot(values: Sequence[str], vocabulary: Sequence[str]) -> np.ndarray:
    """0/1 indicator columns, one per vocabulary entry plus a trailing
    'unknown' column that fires for out-of-vocabulary values."""
    index = {v: i for i, v in enumerate(vocabulary)}
    out = np.zeros((len(values), len(vocabulary) + 1), dtype=float)
    for r, v in enumerate(values):
        i = index.get(v)
        if i is None:
            out[r, -1] = 1.0
        else:
            out[r, i] = 1.0
    return out


def one_hot_names(prefix: str, vocabulary: Sequence[str]) -> list[str]:
    return [f"{prefix}={v}" for v in vocabulary] + [f"{prefix}={UNKNOWN_TOKEN}"]


# --- weather encoding ---

_WEATHER_NUMERICS = (
    "temperature",
    "humidity",
    "pressure",
    "wind_speed",
    "visibility",
    "precipitation",
)


@dataclass(frozen=True)
class WeatherEncoder:
    """One-hot expansion of categoricals plus PCA reduction, fitted on
    training-period observations only."""

    condition_vocab: tuple[str, ...]
    wind_vocab: tuple[str, ...]
    pca: PcaModel

    @property
    def k(self) -> int:
        return self.pca.k

    @staticmethod
    def design_columns(condition_vocab, wind_vocab) -> list[str]:
        return (
            list(_WEATHER_NUMERICS)
            + one_hot_names("condition", condition_vocab)
            + one_hot_names("wind_direction", wind_vocab)
        )

    @staticmethod
    def design_matrix(observations, condition_vocab, wind_vocab) -> np.ndarray:
        numerics = np.array(
            [[getattr(o, f) for f in _WEATHER_NUMERICS] for o in observations], dtype=float
        ).reshape(len(observations), len(_WEATHER_NUMERICS))
        cond = one_hot([o.condition for o in observations], condition_vocab)
        wind = one_hot([o.wind_direction for o in observations], wind_vocab)
        return np.hstack([numerics, cond, wind])

    @classmethod
    def fit(cls, observations: Sequence[WeatherObservation], k: int) -> "WeatherEncoder":
        if len(observations) < 2:
            raise ConfigError("weather encoder needs at least 2 observations to fit")
        condition_vocab = tuple(sorted({o.condition for o in observations}))
        wind_vocab = tuple(sorted({o.wind_direction for o in observations}))
        design = cls.design_matrix(observations, condition_vocab, wind_vocab)
        names = cls.design_columns(condition_vocab, wind_vocab)
        k_eff = min(k, design.shape[1])
        pca = fit_pca(design, k_eff, column_names=names)
        return cls(condition_vocab=condition_vocab, wind_vocab=wind_vocab, pca=pca)

    def encode(self, obs: WeatherObservation) -> np.ndarray:
        design = self.design_matrix([obs], self.condition_vocab, self.wind_vocab)
        return project(self.pca, design)[0]

    def to_dict(self) -> dict:
        return {
            "condition_vocab": list(self.condition_vocab),
            "wind_vocab": list(self.wind_vocab),
            "pca": self.pca.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WeatherEncoder":
        return cls(
            condition_vocab=tuple(d["condition_vocab"]),
            wind_vocab=tuple(d["wind_vocab"]),
            pca=PcaModel.from_dict(d["pca"]),
        )


# --- source indexes ---


class TrajectoryIndex:
    """Flat, time-sorted view over labeled trajectory points for fast
    window queries. Immutable after construction."""

    def __init__(self, trajectories: Iterable[Trajectory]):
        ts, vids, zones, aircraft, speeds = [], [], [], [], []
        vid_codes: dict[str, int] = {}
        for t in trajectories:
            for tp in t.points:
                p = tp.gps
                ts.append(p.timestamp.timestamp())
                code = vid_codes.setdefault(p.vehicle_id, len(vid_codes))
                vids.append(code)
                zones.append(_ZONE_CODE.get(tp.zone or "other", 0))
                aircraft.append(p.vehicle_class == "aircraft")
                speeds.append(tp.speed_mps if tp.speed_mps is not None else math.nan)
        order = np.argsort(np.asarray(ts, dtype=float), kind="stable")
        self.ts = np.asarray(ts, dtype=float)[order]
        self.vid = np.asarray(vids, dtype=np.int64)[order] if vids else np.zeros(0, np.int64)
        self.zone = np.asarray(zones, dtype=np.int8)[order] if zones else np.zeros(0, np.int8)
        self.aircraft = (
            np.asarray(aircraft, dtype=bool)[order] if aircraft else np.zeros(0, bool)
        )
        self.speed = np.asarray(speeds, dtype=float)[order] if speeds else np.zeros(0)

    def window(self, t0: float, t1: float) -> slice:
        """Indices of points with t0 <= ts <= t1."""
        return slice(
            int(np.searchsorted(self.ts, t0, side="left")),
            int(np.searchsorted(self.ts, t1, side="right")),
        )

    def truncated(self, t_max: float) -> "TrajectoryIndex":
        """Copy containing only points at or before ``t_max`` (leakage audits)."""
        hi = int(np.searchsorted(self.ts, t_max, side="right"))
        out = object.__new__(TrajectoryIndex)
        out.ts = self.ts[:hi]
        out.vid = self.vid[:hi]
        out.zone = self.zone[:hi]
        out.aircraft = self.aircraft[:hi]
        out.speed = self.speed[:hi]
        return out


class ScheduleIndex:
    """Schedule lookups: departures/arrivals at the configured airport and
    per-tail arrival history for previous-leg matching."""

    def __init__(self, flights: Sequence[FlightRecord], airport: Optional[str] = None):
        self.airport = airport
        self.flights = list(flights)
        self.departures = [f for f in self.flights if self._is_departure(f)]
        arrivals = [f for f in self.flights if self._is_arrival(f)]
        self._dep_eps = sorted(f.sched_gate_out.timestamp() for f in self.departures)
        self._arr_eps = sorted(f.sched_gate_in.timestamp() for f in arrivals)
        self._by_tail: dict[str, list[tuple[float, FlightRecord]]] = {}
        for f in arrivals:
            if f.actual_gate_in is None:
                continue
            self._by_tail.setdefault(f.tail_number, []).append(
                (f.actual_gate_in.timestamp(), f)
            )
        for entries in self._by_tail.values():
            entries.sort(key=lambda e: e[0])

    def _is_departure(self, f: FlightRecord) -> bool:
        return self.airport is None or f.origin == self.airport

    def _is_arrival(self, f: FlightRecord) -> bool:
        return self.airport is None or f.destination == self.airport

    def count_scheduled_departures(
        self, t0: float, t1: float, exclude: Optional[FlightRecord] = None
    ) -> int:
        n = bisect.bisect_right(self._dep_eps, t1) - bisect.bisect_right(self._dep_eps, t0)
        if exclude is not None and self._is_departure(exclude):
            ep = exclude.sched_gate_out.timestamp()
            if t0 < ep <= t1:
                n -= 1
        return n

    def count_scheduled_arrivals(
        self, t0: float, t1: float, exclude: Optional[FlightRecord] = None
    ) -> int:
        n = bisect.bisect_right(self._arr_eps, t1) - bisect.bisect_right(self._arr_eps, t0)
        if exclude is not None and self._is_arrival(exclude):
            ep = exclude.sched_gate_in.timestamp()
            if t0 < ep <= t1:
                n -= 1
        return n

    def latest_arrival_before(
        self, tail: str, t: float, exclude: Optional[FlightRecord] = None
    ) -> Optional[FlightRecord]:
        entries = self._by_tail.get(tail)
        if not entries:
            return None
        i = bisect.bisect_right([e[0] for e in entries], t) - 1
        while i >= 0:
            rec = entries[i][1]
            if rec is not exclude:
                return rec
            i -= 1
        return None


@dataclass(frozen=True)
class FeatureSources:
    schedule: ScheduleIndex
    trajectories: TrajectoryIndex
    weather: tuple[WeatherObservation, ...]  # sorted by timestamp
    weather_eps: np.ndarray = field(default=None, repr=False)

    @classmethod
    def build(
        cls,
        flights: Sequence[FlightRecord],
        weather: Sequence[WeatherObservation],
        trajectories: Union[Sequence[Trajectory], TrajectoryIndex],
        airport: Optional[str] = None,
    ) -> "FeatureSources":
        index = (
            trajectories
            if isinstance(trajectories, TrajectoryIndex)
            else TrajectoryIndex(trajectories)
        )
        obs = tuple(sorted(weather, key=lambda o: o.timestamp))
        eps = np.asarray([o.timestamp.timestamp() for o in obs], dtype=float)
        return cls(
            schedule=ScheduleIndex(flights, airport),
            trajectories=index,
            weather=obs,
            weather_eps=eps,
        )


# --- feature operations ---


def atc_features(
    ctx: PredictionContext,
    trajectories: TrajectoryIndex,
    schedule: ScheduleIndex,
    moving_threshold_mps: float = 2.0,
) -> list[tuple[str, float]]:
    """Surface-traffic features over the observation window plus scheduled
    potential take-offs/landings in (predicting_time, predicting_time + gap].
    The flight being predicted is not counted among the potentials."""
    pt = ctx.predicting_time.timestamp()
    ws = ctx.window_start.timestamp()
    sl = trajectories.window(ws, pt)
    zone = trajectories.zone[sl]
    vid = trajectories.vid[sl]
    aircraft = trajectories.aircraft[sl]
    speed = trajectories.speed[sl]

    out: list[tuple[str, float]] = []
    for zname in _ZONES:
        zmask = zone == _ZONE_CODE[zname]
        air = zmask & aircraft
        moving = air & (speed > moving_threshold_mps)
        out.append((f"atc_{zname}_aircraft", float(np.unique(vid[air]).size)))
        out.append((f"atc_{zname}_density", float(zmask.sum()) / ctx.window_min))
        out.append((f"atc_{zname}_moving", float(np.unique(vid[moving]).size)))
        out.append((f"atc_{zname}_vehicles", float(np.unique(vid[zmask & ~aircraft]).size)))
    horizon = pt + ctx.gap_min * 60.0
    out.append(
        (
            "atc_potential_takeoffs",
            float(schedule.count_scheduled_departures(pt, horizon, exclude=ctx.flight)),
        )
    )
    out.append(
        (
            "atc_potential_landings",
            float(schedule.count_scheduled_arrivals(pt, horizon, exclude=ctx.flight)),
        )
    )
    return out


def previous_leg(
    flight: FlightRecord,
    schedule: ScheduleIndex,
    predicting_time: datetime,
) -> tuple[float, float, float]:
    """Delay-propagation link: latest arrival of the same tail whose actual
    gate-in happened at or before predicting time. Returns
    (inbound_delay_min, turnaround_sched_min, has_previous)."""
    prev = schedule.latest_arrival_before(
        flight.tail_number, predicting_time.timestamp(), exclude=flight
    )
    if prev is None:
        return 0.0, 0.0, 0.0
    inbound = prev.arr_delay_min or 0.0
    turnaround = (flight.sched_gate_out - prev.sched_gate_in).total_seconds() / 60.0
    return inbound, turnaround, 1.0


def _hist_features(flight: FlightRecord, ctx: PredictionContext, schedule: ScheduleIndex):
    inbound, turnaround, has_prev = previous_leg(flight, schedule, ctx.predicting_time)
    sched_duration = (flight.sched_gate_in - flight.sched_gate_out).total_seconds() / 60.0
    return [
        ("hist_inbound_delay_min", inbound),
        ("hist_turnaround_sched_min", turnaround),
        ("hist_has_previous", has_prev),
        ("hist_day_of_week", float(flight.date.weekday())),
        ("hist_hour_of_day", float(flight.sched_gate_out.hour)),
        ("hist_sched_duration_min", sched_duration),
    ]


def canonical_groups(groups: Iterable[str]) -> tuple[str, ...]:
    requested = set(groups)
    unknown = requested - set(GROUP_ORDER)
    if unknown:
        raise ConfigError(f"unknown feature groups: {sorted(unknown)}")
    return tuple(g for g in GROUP_ORDER if g in requested)


def feature_columns(
    groups: Iterable[str], encoder: Optional[WeatherEncoder]
) -> tuple[list[str], list[str]]:
    """Column names and their group tags, in canonical group order."""
    names: list[str] = []
    tags: list[str] = []
    for g in canonical_groups(groups):
        if g == "HIST":
            cols = list(HIST_COLUMNS)
        elif g == "WX":
            if encoder is None:
                raise ConfigError("WX features requested without a fitted weather encoder")
            cols = [f"wx_pc{j + 1}" for j in range(encoder.k)]
        else:
            cols = list(ATC_COLUMNS)
        names.extend(cols)
        tags.extend([g] * len(cols))
    return names, tags


def compute_row(
    flight: FlightRecord,
    params: FeaturizeParams,
    sources: FeatureSources,
    encoder: Optional[WeatherEncoder],
    groups: Sequence[str],
) -> tuple[Optional[dict[str, float]], Optional[str]]:
    """Feature values for one flight, or (None, reason) when the row must be
    excluded (stale or missing weather)."""
    ctx = PredictionContext(flight, params.gap_min, params.window_min)
    values: dict[str, float] = {}
    for g in canonical_groups(groups):
        if g == "HIST":
            values.update(_hist_features(flight, ctx, sources.schedule))
        elif g == "WX":
            pt = ctx.predicting_time.timestamp()
            i = int(np.searchsorted(sources.weather_eps, pt, side="right")) - 1
            if i < 0:
                return None, "no weather observation at or before predicting time"
            if pt - sources.weather_eps[i] > params.weather_staleness_h * 3600.0:
                return None, "weather observation older than staleness cap"
            scores = encoder.encode(sources.weather[i])
            for j, s in enumerate(scores):
                values[f"wx_pc{j + 1}"] = float(s)
        else:
            values.update(
                atc_features(
                    ctx, sources.trajectories, sources.schedule, params.moving_threshold_mps
                )
            )
    return values, None


# --- feature matrix ---


@dataclass
class FeatureMatrix:
    columns: list[str]
    groups: list[str]
    X: np.ndarray
    y: np.ndarray  # NaN where the target is unknown (inference rows)
    flight_ids: list[str]
    dates: list[date]
    predicting_times: list[datetime]

    def __post_init__(self):
        if len(self.columns) != len(set(self.columns)):
            raise ValidationError("feature matrix: duplicate column names")
        if self.X.size and not np.isfinite(self.X).all():
            raise ValidationError("feature matrix: missing or non-finite feature values")

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    def select_groups(self, groups: Iterable[str]) -> "FeatureMatrix":
        wanted = set(canonical_groups(groups))
        mask = [g in wanted for g in self.groups]
        idx = [i for i, m in enumerate(mask) if m]
        return FeatureMatrix(
            columns=[self.columns[i] for i in idx],
            groups=[self.groups[i] for i in idx],
            X=self.X[:, idx],
            y=self.y,
            flight_ids=self.flight_ids,
            dates=self.dates,
            predicting_times=self.predicting_times,
        )


@dataclass
class AssembleReport:
    n_departures: int = 0
    n_rows: int = 0
    n_excluded_stale_weather: int = 0
    excluded_flight_ids: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "n_departures": self.n_departures,
            "n_rows": self.n_rows,
            "n_excluded_stale_weather": self.n_excluded_stale_weather,
            "excluded_flight_ids": self.excluded_flight_ids,
        }


def assemble(
    flights: Sequence[FlightRecord],
    weather: Sequence[WeatherObservation],
    trajectories: Union[Sequence[Trajectory], TrajectoryIndex],
    params: FeaturizeParams,
    groups: Iterable[str] = GROUP_ORDER,
    encoder: Optional[WeatherEncoder] = None,
) -> tuple[FeatureMatrix, AssembleReport]:
    """One feature row per departure; the column set is exactly the union of
    the requested groups in canonical order. Rows whose nearest weather
    observation is older than the staleness cap are excluded and reported."""
    groups_t = canonical_groups(groups)
    sources = FeatureSources.build(flights, weather, trajectories, params.airport)
    names, tags = feature_columns(groups_t, encoder)

    rows = sorted(
        sources.schedule.departures, key=lambda f: (f.sched_gate_out, f.flight_id)
    )
    report = AssembleReport(n_departures=len(rows))
    data: list[list[float]] = []
    y: list[float] = []
    ids: list[str] = []
    dates: list[date] = []
    pts: list[datetime] = []
    for flight in rows:
        values, reason = compute_row(flight, params, sources, encoder, groups_t)
        if values is None:
            report.n_excluded_stale_weather += 1
            report.excluded_flight_ids.append(flight.flight_id)
            continue
        data.append([values[c] for c in names])
        y.append(flight.dep_delay_min if flight.dep_delay_min is not None else math.nan)
        ids.append(flight.flight_id)
        dates.append(flight.date)
        ctx = PredictionContext(flight, params.gap_min, params.window_min)
        pts.append(ctx.predicting_time)
    report.n_rows = len(data)
    X = np.asarray(data, dtype=float).reshape(len(data), len(names))
    fm = FeatureMatrix(
        columns=names,
        groups=tags,
        X=X,
        y=np.asarray(y, dtype=float),
        flight_ids=ids,
        dates=dates,
        predicting_times=pts,
    )
    return fm, report


# --- persistence: delimited matrix + JSON sidecar ---


def write_feature_matrix(
    fm: FeatureMatrix,
    csv_path: str,
    meta_path: str,
    params: Optional[FeaturizeParams] = None,
    encoder: Optional[WeatherEncoder] = None,
    report: Optional[AssembleReport] = None,
) -> None:
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["flight_id", "date", "predicting_time", "target"] + fm.columns)
        for i in range(fm.n_rows):
            target = "" if math.isnan(fm.y[i]) else repr(float(fm.y[i]))
            writer.writerow(
                [
                    fm.flight_ids[i],
                    fm.dates[i].isoformat(),
                    format_timestamp(fm.predicting_times[i]),
                    target,
                ]
                + [repr(float(v)) for v in fm.X[i]]
            )
    meta = {
        "columns": [{"name": n, "group": g} for n, g in zip(fm.columns, fm.groups)],
        "params": params.__dict__ if params else None,
        "encoder": encoder.to_dict() if encoder else None,
        "report": report.as_dict() if report else None,
    }
    with open(meta_path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_feature_matrix(csv_path: str, meta_path: str) -> tuple[FeatureMatrix, dict]:
    with open(meta_path, "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    columns = [c["name"] for c in meta["columns"]]
    groups = [c["group"] for c in meta["columns"]]
    data, y, ids, dates, pts = [], [], [], [], []
    with open(csv_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[4:] != columns:
            raise ValidationError("feature matrix: csv columns do not match sidecar")
        for row in reader:
            ids.append(row[0])
            dates.append(date.fromisoformat(row[1]))
            pts.append(parse_timestamp(row[2]))
            y.append(float(row[3]) if row[3] else math.nan)
            data.append([float(v) for v in row[4:]])
    fm = FeatureMatrix(
        columns=columns,
        groups=groups,
        X=np.asarray(data, dtype=float).reshape(len(data), len(columns)),
        y=np.asarray(y, dtype=float),
        flight_ids=ids,
        dates=dates,
        predicting_times=pts,
    )
    return fm, meta
