"""Command-line pipeline: synth -> clean -> featurize -> train -> evaluate ->
importance, each runnable standalone or chained via ``all``.

Every artifact lands under the output directory; the effective config is
echoed there, and a manifest records SHA-256 hashes of everything written.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

import numpy as np

from . import evaluate as ev
from . import featurize as fz
from . import ingest, model, report, synth, trajectory
from .config import PipelineConfig
from .errors import TarmacError
from .evaluate import DEFAULT_COMBOS

FAMILIES = model.FAMILIES


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML config file")
    common.add_argument("--out", help="output directory (default from config)")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--threads", type=int, help="worker cap (0 = machine parallelism)")

    parser = argparse.ArgumentParser(
        prog="tarmac",
        description="Departure-delay prediction from surface traffic, weather, and schedules.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", parents=[common], help="generate a synthetic scenario")
    p_synth.add_argument("--days", type=int, help="number of days")
    p_synth.add_argument("--flights-per-day", type=int, help="departures per day")

    p_clean = sub.add_parser("clean", parents=[common], help="clean and label trajectories")
    p_clean.add_argument("--max-speed", type=float, help="discontinuity threshold, m/s")
    p_clean.add_argument("--gap-threshold", type=float, help="segmentation gap, seconds")
    p_clean.add_argument("--zones", help="zone map JSON file")

    p_feat = sub.add_parser("featurize", parents=[common], help="assemble the feature matrix")
    p_feat.add_argument("--gap-min", type=float, help="delay-predicting gap, minutes")
    p_feat.add_argument("--window-min", type=float, help="observation window, minutes")
    p_feat.add_argument("--pca-components", type=int, help="weather PCA components")

    p_train = sub.add_parser("train", parents=[common], help="fit the four regressor families")
    p_train.add_argument("--family", choices=FAMILIES, help="train a single family")

    p_eval = sub.add_parser("evaluate", parents=[common], help="run the model x sources grid")
    p_eval.add_argument("--train-fraction", type=float, help="chronological train fraction")

    p_imp = sub.add_parser("importance", parents=[common], help="permutation feature importance")
    p_imp.add_argument("--repeats", type=int, help="permutation repeats")
    p_imp.add_argument("--family", choices=FAMILIES, help="model family to explain")

    p_curve = sub.add_parser(
        "learning-curve", parents=[common], help="test RMSE vs training days (exploratory)"
    )
    p_curve.add_argument("--family", choices=FAMILIES, help="model family to fit")

    p_all = sub.add_parser("all", parents=[common], help="run the full chain")
    p_all.add_argument("--days", type=int, help="number of days")
    p_all.add_argument("--flights-per-day", type=int, help="departures per day")
    return parser


_FLAG_MAP = {
    "seed": ("", "seed"),
    "threads": ("", "threads"),
    "out": ("paths", "out"),
    "days": ("synth", "n_days"),
    "flights_per_day": ("synth", "flights_per_day"),
    "max_speed": ("trajectory", "max_ground_speed_mps"),
    "gap_threshold": ("trajectory", "gap_threshold_s"),
    "zones": ("paths", "zones"),
    "gap_min": ("featurize", "gap_min"),
    "window_min": ("featurize", "window_min"),
    "pca_components": ("featurize", "pca_components"),
    "train_fraction": ("evaluate", "train_fraction"),
    "repeats": ("evaluate", "importance_repeats"),
}


def resolve_config(args: argparse.Namespace) -> PipelineConfig:
    """Precedence: defaults < config file < TARMAC_* env < flags."""
    cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    cfg.apply_env(os.environ)
    for flag, (section, key) in _FLAG_MAP.items():
        value = getattr(args, flag, None)
        if value is not None:
            cfg.set(section, key, value)
    return cfg


class Workspace:
    """Output-directory layout plus the artifact manifest."""

    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.out = cfg.get("paths", "out")
        os.makedirs(self.out, exist_ok=True)
        self.written: list[str] = []

    def path(self, *parts: str) -> str:
        full = os.path.join(self.out, *parts)
        os.makedirs(os.path.dirname(full), exist_ok=True)
        return full

    def record(self, *paths: str) -> None:
        self.written.extend(paths)

    def input_path(self, name: str, default_parts: tuple[str, ...]) -> str:
        configured = self.cfg.get("paths", name)
        return configured if configured else os.path.join(self.out, *default_parts)

    def require(self, path: str, hint: str) -> str:
        if not os.path.exists(path):
            raise TarmacError(f"{hint}: {path} does not exist")
        return path

    def echo_config(self) -> None:
        path = self.path("effective_config.toml")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.cfg.to_toml())
        self.record(path)

    def write_manifest(self) -> None:
        manifest_path = os.path.join(self.out, "manifest.json")
        manifest = {}
        if os.path.exists(manifest_path):
            with open(manifest_path, "r", encoding="utf-8") as fh:
                manifest = json.load(fh)
        for p in self.written:
            manifest[os.path.relpath(p, self.out)] = synth.file_sha256(p)
        with open(manifest_path, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _write_diagnostics(ws: Workspace, name: str, diags) -> None:
    path = ws.path("diagnostics", f"{name}_diagnostics.csv")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        ingest.write_diagnostics(diags, fh, source_name=name)
    ws.record(path)


def _featurize_params(cfg: PipelineConfig) -> fz.FeaturizeParams:
    airport = cfg.get("ingest", "airport") or None
    return fz.FeaturizeParams(
        gap_min=cfg.get("featurize", "gap_min"),
        window_min=cfg.get("featurize", "window_min"),
        moving_threshold_mps=cfg.get("featurize", "moving_threshold_mps"),
        pca_components=cfg.get("featurize", "pca_components"),
        weather_staleness_h=cfg.get("featurize", "weather_staleness_h"),
        airport=airport,
    )


def _model_specs(cfg: PipelineConfig) -> list[model.ModelSpec]:
    return [
        model.ModelSpec(family=f, params=dict(cfg.values[f"model.{f}"]), seed=cfg.seed)
        for f in FAMILIES
    ]


def stage_synth(ws: Workspace) -> dict:
    cfg = ws.cfg
    zone_path = cfg.get("paths", "zones")
    zone_map = trajectory.load_zone_map(zone_path) if zone_path else None
    spec = synth.ScenarioSpec(
        n_days=cfg.get("synth", "n_days"),
        flights_per_day=cfg.get("synth", "flights_per_day"),
        beta_atc=cfg.get("synth", "beta_atc"),
        beta_wx=cfg.get("synth", "beta_wx"),
        noise_sigma_min=cfg.get("synth", "noise_sigma_min"),
        base_delay_min=cfg.get("synth", "base_delay_min"),
        carryover_coef=cfg.get("synth", "carryover_coef"),
        carryover_buffer_min=cfg.get("synth", "carryover_buffer_min"),
        gap_min=cfg.get("featurize", "gap_min"),
        window_min=cfg.get("featurize", "window_min"),
        seed=cfg.seed,
        start_date=cfg.get("synth", "start_date"),
        airport=cfg.get("ingest", "airport"),
    )
    result = synth.generate(spec, os.path.join(ws.out, "data"), zone_map=zone_map)
    ws.record(*result["paths"].values())
    print(
        f"synth: {result['n_departures']} departures over {spec.n_days} days, "
        f"{result['n_points']} GPS points"
    )
    return result


def stage_clean(ws: Workspace) -> list[trajectory.Trajectory]:
    cfg = ws.cfg
    traj_path = ws.require(
        ws.input_path("trajectories", ("data", "trajectories.csv")),
        "trajectory input missing",
    )
    zones_path = ws.require(
        ws.input_path("zones", ("data", "zones.json")), "zone map missing"
    )
    with open(traj_path, "rb") as fh:
        points, diags = ingest.parse_trajectory_stream(
            fh,
            delimiter=cfg.get("ingest", "delimiter"),
            airport_tz=cfg.get("ingest", "airport_tz"),
        )
    _write_diagnostics(ws, "trajectory", diags)
    zm = trajectory.load_zone_map(zones_path)
    trajs, stats = trajectory.process_points(
        points,
        zm,
        max_ground_speed_mps=cfg.get("trajectory", "max_ground_speed_mps"),
        gap_threshold_s=cfg.get("trajectory", "gap_threshold_s"),
    )
    labeled_path = ws.path("clean", "trajectories_clean.csv")
    with open(labeled_path, "w", encoding="utf-8", newline="") as fh:
        trajectory.write_labeled_trajectories(trajs, fh)
    stats_path = ws.path("clean", "drop_stats.json")
    with open(stats_path, "w", encoding="utf-8") as fh:
        json.dump(
            {"input_points": len(points), "kept": len(points) - stats.total, **stats.as_dict()},
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    ws.record(labeled_path, stats_path)
    print(f"clean: kept {len(points) - stats.total} of {len(points)} points ({stats.total} dropped)")
    return trajs


def _load_schedule_weather(ws: Workspace):
    cfg = ws.cfg
    tz = cfg.get("ingest", "airport_tz")
    delim = cfg.get("ingest", "delimiter")
    sched_path = ws.require(
        ws.input_path("schedule", ("data", "schedule.csv")), "schedule input missing"
    )
    wx_path = ws.require(
        ws.input_path("weather", ("data", "weather.csv")), "weather input missing"
    )
    with open(sched_path, "rb") as fh:
        flights, sched_diags = ingest.parse_schedule(fh, delimiter=delim, airport_tz=tz)
    with open(wx_path, "rb") as fh:
        weather, wx_diags = ingest.parse_weather(fh, delimiter=delim, airport_tz=tz)
    _write_diagnostics(ws, "schedule", sched_diags)
    _write_diagnostics(ws, "weather", wx_diags)
    return flights, weather


def stage_featurize(
    ws: Workspace, trajectories: Optional[list[trajectory.Trajectory]] = None
) -> fz.FeatureMatrix:
    cfg = ws.cfg
    flights, weather = _load_schedule_weather(ws)
    if trajectories is None:
        labeled = ws.require(
            os.path.join(ws.out, "clean", "trajectories_clean.csv"),
            "missing cleaned trajectories (run `clean` first)",
        )
        with open(labeled, "r", encoding="utf-8", newline="") as fh:
            trajectories = trajectory.read_labeled_trajectories(fh)

    params = _featurize_params(cfg)
    sched_index = fz.ScheduleIndex(flights, params.airport)
    pts = [
        fz.PredictionContext(f, params.gap_min, params.window_min).predicting_time
        for f in sched_index.departures
    ]
    train_idx, _ = ev.time_split(pts, cfg.get("evaluate", "train_fraction"))
    cutoff = max(pts[i] for i in train_idx)
    train_obs = [o for o in weather if o.timestamp <= cutoff]
    encoder = fz.WeatherEncoder.fit(train_obs, params.pca_components)

    fm, rep = fz.assemble(
        flights, weather, trajectories, params, groups=fz.GROUP_ORDER, encoder=encoder
    )
    csv_path = ws.path("features", "features.csv")
    meta_path = ws.path("features", "features_meta.json")
    fz.write_feature_matrix(fm, csv_path, meta_path, params=params, encoder=encoder, report=rep)
    ws.record(csv_path, meta_path)
    print(
        f"featurize: {fm.n_rows} rows x {len(fm.columns)} features "
        f"({rep.n_excluded_stale_weather} excluded for stale weather)"
    )
    return fm


def _load_matrix(ws: Workspace) -> fz.FeatureMatrix:
    csv_path = ws.require(
        os.path.join(ws.out, "features", "features.csv"),
        "missing feature matrix (run `featurize` first)",
    )
    meta_path = os.path.join(ws.out, "features", "features_meta.json")
    fm, _ = fz.load_feature_matrix(csv_path, meta_path)
    return fm


def stage_train(
    ws: Workspace, fm: Optional[fz.FeatureMatrix] = None, family: Optional[str] = None
) -> dict[str, model.ModelArtifact]:
    cfg = ws.cfg
    fm = fm if fm is not None else _load_matrix(ws)
    train_idx, _ = ev.time_split(fm.predicting_times, cfg.get("evaluate", "train_fraction"))
    tr = train_idx[np.isfinite(fm.y[train_idx])]
    if tr.size == 0:
        raise TarmacError("no training rows with a known target")
    artifacts = {}
    for spec in _model_specs(cfg):
        if family and spec.family != family:
            continue
        artifact = model.fit_from_spec(spec, fm.X[tr], fm.y[tr], fm.columns)
        path = ws.path("models", f"{spec.family}.json")
        model.save_model(artifact, path)
        ws.record(path)
        artifacts[spec.family] = artifact
        print(
            f"train: {spec.family} on {tr.size} rows, "
            f"train RMSE {artifact.meta['train_rmse']:.3f} min"
        )
    return artifacts


def _load_artifacts(ws: Workspace) -> dict[str, model.ModelArtifact]:
    artifacts = {}
    for family in FAMILIES:
        path = os.path.join(ws.out, "models", f"{family}.json")
        if not os.path.exists(path):
            raise TarmacError(f"missing model artifact for {family} (run `train` first)")
        artifacts[family] = model.load_model(path)
    return artifacts


def stage_evaluate(
    ws: Workspace,
    fm: Optional[fz.FeatureMatrix] = None,
    artifacts: Optional[dict[str, model.ModelArtifact]] = None,
) -> list[ev.ExperimentResult]:
    cfg = ws.cfg
    fm = fm if fm is not None else _load_matrix(ws)
    artifacts = artifacts if artifacts is not None else _load_artifacts(ws)
    threads = cfg.threads if cfg.threads > 0 else (os.cpu_count() or 1)
    results = ev.run_grid(
        fm,
        _model_specs(cfg),
        combos=DEFAULT_COMBOS,
        train_fraction=cfg.get("evaluate", "train_fraction"),
        trained=artifacts,
        threads=threads,
    )
    results_path = ws.path("results", "results.csv")
    timing_path = ws.path("results", "results_timing.csv")
    figure_path = ws.path("results", "rmse_by_combo.svg")
    report.write_results_table(results, results_path)
    report.write_timing_table(results, timing_path)
    report.render_rmse_figure(results, figure_path, seed=cfg.seed)
    ws.record(results_path, timing_path, figure_path)
    for r in results:
        cell = f"{r.family:<10} {r.combo_label:<12}"
        if r.error:
            print(f"evaluate: {cell} FAILED: {r.error}")
        else:
            print(f"evaluate: {cell} test RMSE {r.rmse_test:.3f} min (n={r.n_test})")
    return results


def stage_importance(
    ws: Workspace,
    fm: Optional[fz.FeatureMatrix] = None,
    artifacts: Optional[dict[str, model.ModelArtifact]] = None,
    family: Optional[str] = None,
) -> ev.ImportanceReport:
    cfg = ws.cfg
    fm = fm if fm is not None else _load_matrix(ws)
    artifacts = artifacts if artifacts is not None else _load_artifacts(ws)
    family = family or cfg.get("evaluate", "importance_family")
    artifact = artifacts.get(family)
    if artifact is None:
        raise TarmacError(f"missing model artifact for {family} (run `train` first)")
    _, test_idx = ev.time_split(fm.predicting_times, cfg.get("evaluate", "train_fraction"))
    te = test_idx[np.isfinite(fm.y[test_idx])]
    imp = ev.permutation_importance(
        artifact,
        fm.X[te],
        fm.columns,
        fm.y[te],
        repeats=cfg.get("evaluate", "importance_repeats"),
        seed=cfg.seed,
        groups=fm.groups,
    )
    cols_path = ws.path("results", "importance.csv")
    groups_path = ws.path("results", "importance_groups.csv")
    figure_path = ws.path("results", "importance.svg")
    report.write_importance_tables(imp, cols_path, groups_path)
    report.render_importance_figure(imp, figure_path, seed=cfg.seed)
    ws.record(cols_path, groups_path, figure_path)
    for group, total in sorted(imp.by_group().items(), key=lambda kv: -kv[1]):
        print(f"importance: group {group}: {total:+.3f} min summed RMSE increase")
    return imp


def stage_learning_curve(
    ws: Workspace, fm: Optional[fz.FeatureMatrix] = None, family: Optional[str] = None
) -> list[dict]:
    cfg = ws.cfg
    fm = fm if fm is not None else _load_matrix(ws)
    family = family or cfg.get("evaluate", "importance_family")
    spec = next(s for s in _model_specs(cfg) if s.family == family)
    rows = ev.learning_curve(fm, spec, train_fraction=cfg.get("evaluate", "train_fraction"))
    table_path = ws.path("results", "learning_curve.csv")
    figure_path = ws.path("results", "learning_curve.svg")
    report.write_learning_curve(rows, table_path, figure_path, seed=cfg.seed)
    ws.record(table_path, figure_path)
    for row in rows:
        print(
            f"learning-curve: {row['train_days']} days ({row['n_train']} rows) "
            f"-> test RMSE {row['rmse_test']:.3f} min"
        )
    return rows


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        ws = Workspace(cfg)
        ws.echo_config()
        if args.command == "synth":
            stage_synth(ws)
        elif args.command == "clean":
            stage_clean(ws)
        elif args.command == "featurize":
            stage_featurize(ws)
        elif args.command == "train":
            stage_train(ws, family=getattr(args, "family", None))
        elif args.command == "evaluate":
            stage_evaluate(ws)
        elif args.command == "importance":
            stage_importance(ws, family=getattr(args, "family", None))
        elif args.command == "learning-curve":
            stage_learning_curve(ws, family=getattr(args, "family", None))
        elif args.command == "all":
            stage_synth(ws)
            trajs = stage_clean(ws)
            fm = stage_featurize(ws, trajectories=trajs)
            artifacts = stage_train(ws, fm=fm)
            stage_evaluate(ws, fm=fm, artifacts=artifacts)
            stage_importance(ws, fm=fm, artifacts=artifacts)
        ws.write_manifest()
        return 0
    except TarmacError as exc:
        message = f"{args.command}: {exc}"
        print(message, file=sys.stderr)
        try:
            out = cfg.get("paths", "out") if "cfg" in locals() else "out"
            os.makedirs(os.path.join(out, "diagnostics"), exist_ok=True)
            with open(
                os.path.join(out, "diagnostics", "errors.txt"), "a", encoding="utf-8"
            ) as fh:
                fh.write(message + "\n")
        except OSError:
            pass
        return 1


if __name__ == "__main__":
    sys.exit(main())
