import argparse
import hashlib
import json
import sys
import traceback
from pathlib import Path
from typing import Callable, Dict, List, Optional

ROOT_DIR = Path(__file__).resolve().parents[1]
if str(ROOT_DIR) not in sys.path:
    sys.path.insert(0, str(ROOT_DIR))

try:
    from dotenv import load_dotenv
except Exception:
    load_dotenv = None

import numpy as np
import pandas as pd

from core import runlog
from core.analysis.decomposition import export_decomposition
from core.analysis.report import evaluate_forecasts, write_report
from core.cleaner.visit_cleaner import VisitCleaner
from core.config import SEED_ENV, AppConfig, load_config
from core.dataset.manifest import load_manifest
from core.dataset.prepare import PreparedDataset, prepare_dataset
from core.errors import EXIT_OK, EXIT_UNEXPECTED, BoardcastError, ConfigError, DataError, TrainingDivergedError, exit_code_for
from core.features.assemble import describe_hourly, featurize, read_hourly_table, write_hourly_table
from core.ingest.sources import load_sources
from core.nbeatsx.checkpoint import load_checkpoint, save_checkpoint
from core.nbeatsx.config import NBeatsXConfig
from core.nbeatsx.model import ForecastBatch, NBeatsXModel, predict_arrays
from core.nbeatsx.trainer import TrainingHistory, train
from core.runlog import log
from core.synth.generator import generate
from core.synth.scenario import load_scenario
from core.tuning.grid_search import grid_search, load_grid, write_results

HOURLY_FILE = "hourly.csv"
CHECKPOINT_FILE = "checkpoint.zip"
RUN_MANIFEST = "run_manifest.json"
PIPELINE_VARIANTS = ("DS1", "DS2", "DS3", "DS4", "DS5")


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _digests(paths: List[str]) -> Dict[str, str]:
    out: Dict[str, str] = {}
    for p in paths:
        path = Path(p)
        if path.is_dir():
            for child in sorted(x for x in path.rglob("*") if x.is_file()):
                out[str(child)] = sha256_file(child)
        elif path.is_file():
            out[str(path)] = sha256_file(path)
    return out


def _relative(path: Path, root: Path) -> str:
    try:
        return str(path.relative_to(root))
    except ValueError:
        return str(path)


def write_run_manifest(
    out_dir: Path,
    command: str,
    args: argparse.Namespace,
    seed: int,
    config: AppConfig,
    inputs: List[str],
    outputs: Dict[str, str],
) -> str:
    """Everything needed to rerun ``command``: arguments, seed, config echo and file digests."""
    manifest = {
        "command": command,
        "arguments": dict(sorted(vars(args).items())),
        "seed": seed,
        "config": config.to_dict(),
        "inputs": _digests(inputs),
        "outputs": {
            name: {"path": _relative(Path(p), out_dir), "sha256": sha256_file(Path(p))}
            for name, p in sorted(outputs.items())
            if Path(p).is_file()
        },
    }
    path = out_dir / RUN_MANIFEST
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")
    return str(path)


def _write_json(path: Path, payload) -> str:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")
    return str(path)


def _out_dir(args: argparse.Namespace, config: AppConfig) -> Path:
    out = Path(getattr(args, "out", "") or config.run_out_dir())
    out.mkdir(parents=True, exist_ok=True)
    return out


def _seed(args: argparse.Namespace, config: AppConfig) -> int:
    return int(args.seed) if getattr(args, "seed", None) is not None else config.run_seed()


def _model_config(args: argparse.Namespace, config: AppConfig, seed: int) -> NBeatsXConfig:
    return config.model_config(seed).with_overrides(
        lookback=getattr(args, "lookback", None),
        horizon=getattr(args, "horizon", None),
        learning_rate=getattr(args, "lr", None),
        dropout_p=getattr(args, "dropout", None),
        batch_size=getattr(args, "batch_size", None),
        max_epochs=getattr(args, "max_epochs", None),
        early_stop_patience=getattr(args, "patience", None),
    )


def _prepare(hourly_path: str, variant: str, horizon: int, config: AppConfig, verbose: bool) -> PreparedDataset:
    if not Path(hourly_path).is_file():
        raise ConfigError(f"Hourly table not found: {hourly_path}")
    table = read_hourly_table(hourly_path)
    manifest = load_manifest(variant, config.manifest_dir())
    return prepare_dataset(
        table,
        manifest,
        horizon=horizon,
        fractions=config.split_fractions(),
        rolling_alignment=config.rolling_alignment(),
        verbose=verbose,
    )


def _history_frame(history: TrainingHistory) -> pd.DataFrame:
    return pd.DataFrame(history.to_dicts(), columns=["epoch", "train_loss", "val_loss"])


def _forecast_frame(forecasts: ForecastBatch, actuals: np.ndarray) -> pd.DataFrame:
    n, horizon = forecasts.total.shape
    anchors = pd.DatetimeIndex(forecasts.anchors)
    steps = np.tile(np.arange(1, horizon + 1), n)
    anchor_col = anchors.repeat(horizon)
    return pd.DataFrame({
        "anchor": anchor_col,
        "step": steps,
        "hour": anchor_col + pd.to_timedelta(steps, unit="h"),
        "actual": np.asarray(actuals).ravel(),
        "total": forecasts.total.ravel(),
        "trend": forecasts.trend.ravel(),
        "seasonality": forecasts.seasonality.ravel(),
        "exogenous": forecasts.exogenous.ravel(),
    })


def run_synth(args: argparse.Namespace, config: AppConfig) -> Dict:
    out = _out_dir(args, config)
    scenario = load_scenario(args.scenario or config.synth_scenario())
    # --seed, then BOARDCAST_SEED, then the scenario's own seed.
    if args.seed is not None or config.get_env(SEED_ENV, ""):
        seed = _seed(args, config)
    else:
        seed = scenario.seed
    data = generate(scenario, str(out), seed=seed, verbose=True)
    for key, value in data.counts.items():
        log(f"[Synth] {key}: {value}")
    return {"seed": seed, "inputs": [], "outputs": data.files}


def run_featurize(args: argparse.Namespace, config: AppConfig) -> Dict:
    out = _out_dir(args, config)
    bundle = load_sources(args.data)
    log(f"[Ingest] rows: {bundle.row_counts}; rejected: {len(bundle.rejections)}")
    for source, reasons in sorted(bundle.rejection_summary().items()):
        log(f"[Ingest] {source} rejections: {reasons}")
    cleaner = VisitCleaner(**config.cleaning_limits())
    exclusions = [] if args.no_exclusion else config.exclusion_windows()
    result = featurize(bundle, cleaner=cleaner, exclusions=exclusions)
    report = result.report.to_dict()
    for rule, item in report["rules"].items():
        log(f"[Clean] {rule}: {item['count']} ({item['fraction'] * 100:.3f}%)")
    log(f"[Clean] esi imputed: {report['esi_imputation']['count']}")
    hourly_path = out / HOURLY_FILE
    write_hourly_table(result.table, str(hourly_path))
    log(f"[Featurize] {len(result.table)} hourly rows -> {hourly_path}")
    outputs = {
        "hourly": str(hourly_path),
        "cleaning_report": _write_json(out / "cleaning_report.json", report),
        "rejections": _write_json(out / "rejections.json", {
            "row_counts": bundle.row_counts,
            "summary": bundle.rejection_summary(),
            "rows": [r.to_dict() for r in bundle.rejections],
            "calendar": bundle.calendar.counts(),
        }),
    }
    return {"seed": _seed(args, config), "inputs": [args.data], "outputs": outputs}


def _build_to(out: Path, cfg: NBeatsXConfig, dataset: PreparedDataset) -> Dict[str, str]:
    windows = dataset.windows(cfg.lookback)
    for name, w in windows.items():
        log(f"[Dataset] {dataset.variant} {name}: {len(dataset.segments[name])} rows, {len(w)} windows")
    outputs = dict(dataset.matrix.export(str(out)))
    summary = dict(dataset.summary(), lookback=cfg.lookback, horizon=cfg.horizon,
                   windows={name: len(w) for name, w in windows.items()})
    outputs["split"] = _write_json(out / "split.json", summary)
    outputs["scaler"] = _write_json(out / "scaler.json", dataset.scaler.to_dict())
    return outputs


def run_build(args: argparse.Namespace, config: AppConfig) -> Dict:
    out = _out_dir(args, config)
    seed = _seed(args, config)
    cfg = _model_config(args, config, seed)
    dataset = _prepare(args.hourly, args.variant, cfg.horizon, config, verbose=True)
    outputs = _build_to(out, cfg, dataset)
    return {"seed": seed, "inputs": [args.hourly], "outputs": outputs}


def _train_to(out: Path, cfg: NBeatsXConfig, dataset: PreparedDataset) -> Dict[str, str]:
    windows = dataset.windows(cfg.lookback)
    log(f"[Train] {dataset.variant}: {len(windows['train'])} train / {len(windows['val'])} val windows, seed={cfg.seed}")
    try:
        model, history = train(cfg, windows["train"], windows["val"], verbose=True)
    except TrainingDivergedError as e:
        _write_json(out / "divergence.json", {"history": e.history, "diagnostic": e.diagnostic})
        raise
    counts = model.parameter_count()
    log(f"[Train] parameters: {counts['total']}; best epoch {history.best_epoch} of {len(history.epochs)}")
    extra = {"variant": dataset.variant, "history": history.summary(), "columns": dataset.matrix.columns}
    checkpoint = save_checkpoint(str(out / CHECKPOINT_FILE), model, dataset.scaler, extra=extra)
    history_path = out / "history.csv"
    _history_frame(history).to_csv(history_path, index=False, lineterminator="\n")
    return {
        "checkpoint": checkpoint,
        "history": str(history_path),
        "training": _write_json(out / "training.json", dict(history.summary(), parameters=counts)),
    }


def run_train(args: argparse.Namespace, config: AppConfig) -> Dict:
    out = _out_dir(args, config)
    seed = _seed(args, config)
    cfg = _model_config(args, config, seed)
    dataset = _prepare(args.hourly, args.variant, cfg.horizon, config, verbose=True)
    outputs = _train_to(out, cfg, dataset)
    return {"seed": seed, "inputs": [args.hourly], "outputs": outputs}


def _gridsearch_to(out: Path, grid_path: str, dataset: PreparedDataset, base: NBeatsXConfig, seed: int,
                   workers: int) -> Dict[str, str]:
    grid = load_grid(grid_path)
    results = grid_search(grid, dataset, base_config=base, base_seed=seed, workers=workers, verbose=True)
    outputs = write_results(results, str(out))
    best = results[0] if results else None
    if best is not None and best.val_metrics:
        log(f"[Tune] best trial {best.index}: val MAE {best.val_metrics['MAE']:.4f} params {best.params}")
        outputs["best"] = _write_json(out / "best.json", {
            "trial": best.index,
            "seed": best.seed,
            "params": best.params,
            "val_metrics": best.val_metrics,
            "config": best.config.to_dict() if best.config else None,
        })
    else:
        log("[Tune] no trial completed")
    return outputs


def run_gridsearch(args: argparse.Namespace, config: AppConfig) -> Dict:
    out = _out_dir(args, config)
    seed = _seed(args, config)
    grid_path = args.grid or config.tuning_grid_path()
    base = _model_config(args, config, seed)
    dataset = _prepare(args.hourly, args.variant, base.horizon, config, verbose=True)
    workers = int(args.workers) if args.workers else config.tuning_workers()
    outputs = _gridsearch_to(out, grid_path, dataset, base, seed, workers)
    return {"seed": seed, "inputs": [args.hourly, grid_path], "outputs": outputs}


def _load_for_eval(args: argparse.Namespace, config: AppConfig):
    if not args.checkpoint:
        raise ConfigError("--checkpoint is required")
    model, scaler, meta = load_checkpoint(args.checkpoint)
    extra = meta.get("extra") or {}
    variant = args.variant or extra.get("variant")
    if not variant:
        raise ConfigError("--variant is required when the checkpoint does not record one")
    dataset = _prepare(args.hourly, variant, model.config.horizon, config, verbose=False)
    if dataset.matrix.columns != extra.get("columns", dataset.matrix.columns):
        raise DataError(f"Checkpoint columns do not match variant {variant}")
    return model, scaler or dataset.scaler, dataset


def _evaluate_to(out: Path, model: NBeatsXModel, scaler, dataset: PreparedDataset, segment: str) -> Dict[str, str]:
    windows = dataset.windows(model.config.lookback)[segment]
    if len(windows) < 2:
        raise DataError(f"Segment {segment} has {len(windows)} window(s); need at least 2")
    forecasts = predict_arrays(model, windows, scaler)
    history = pd.Series(dataset.matrix.target, index=dataset.matrix.hours)
    report = evaluate_forecasts(forecasts, windows, history)
    report["segment"] = segment
    report["variant"] = dataset.variant
    m = report["t_plus_h"]
    log(f"[Eval] {dataset.variant}/{segment} t+{report['horizon']}: MAE={m['MAE']:.4f} RMSE={m['RMSE']:.4f} R2={m['R2']}")
    for kind, item in report["baselines"].items():
        if item["metrics"]:
            log(f"[Eval] baseline {kind}: MAE={item['metrics']['MAE']:.4f}")
    files = write_report(report, str(out))
    forecast_path = out / f"forecasts_{segment}.csv"
    _forecast_frame(forecasts, windows.target_raw).to_csv(
        forecast_path, index=False, lineterminator="\n", date_format="%Y-%m-%d %H:%M:%S", float_format="%.10g"
    )
    return {"metrics_json": files["json"], "metrics_csv": files["csv"], "forecasts": str(forecast_path)}


def run_evaluate(args: argparse.Namespace, config: AppConfig) -> Dict:
    out = _out_dir(args, config)
    model, scaler, dataset = _load_for_eval(args, config)
    outputs = _evaluate_to(out, model, scaler, dataset, args.segment)
    return {"seed": model.config.seed, "inputs": [args.hourly, args.checkpoint], "outputs": outputs}


def _first_covered_day(forecasts: ForecastBatch, actuals: np.ndarray, step: int) -> Optional[pd.Timestamp]:
    targets = pd.DatetimeIndex(forecasts.anchors) + pd.Timedelta(hours=step)
    for day in targets.normalize().unique():
        try:
            export_decomposition(forecasts, actuals, day, step=step)
            return day
        except DataError:
            continue
    return None


def _decompose_to(out: Path, model: NBeatsXModel, scaler, dataset: PreparedDataset, segment: str,
                  day: Optional[str], step: Optional[int]) -> Dict[str, str]:
    windows = dataset.windows(model.config.lookback)[segment]
    forecasts = predict_arrays(model, windows, scaler)
    step = int(step or model.config.horizon)
    chosen = pd.Timestamp(day) if day else _first_covered_day(forecasts, windows.target_raw, step)
    if chosen is None:
        raise DataError(f"No full day of {segment} forecasts to decompose")
    path = out / f"decomposition_{chosen.date()}.csv"
    table = export_decomposition(forecasts, windows.target_raw, chosen, path=str(path), step=step)
    log(f"[Decompose] {chosen.date()} step {step}: mean total {table['total'].mean():.3f} -> {path}")
    return {"decomposition": str(path)}


def run_decompose(args: argparse.Namespace, config: AppConfig) -> Dict:
    out = _out_dir(args, config)
    model, scaler, dataset = _load_for_eval(args, config)
    outputs = _decompose_to(out, model, scaler, dataset, args.segment, args.day, args.step)
    return {"seed": model.config.seed, "inputs": [args.hourly, args.checkpoint], "outputs": outputs}


def run_describe(args: argparse.Namespace, config: AppConfig) -> Dict:
    if not Path(args.hourly).is_file():
        raise ConfigError(f"Hourly table not found: {args.hourly}")
    summary = describe_hourly(read_hourly_table(args.hourly))
    print(json.dumps(summary, ensure_ascii=False, indent=2))
    outputs = {}
    if args.out:
        outputs["describe"] = _write_json(_out_dir(args, config) / "describe.json", summary)
    return {"seed": _seed(args, config), "inputs": [args.hourly], "outputs": outputs}


def run_pipeline(args: argparse.Namespace, config: AppConfig) -> Dict:
    """Synthetic data, features, every variant build, grid search, training, evaluation and decomposition."""
    out = _out_dir(args, config)
    seed = _seed(args, config)
    data_dir = out / "data"
    scenario = load_scenario(args.scenario or config.synth_scenario())
    data = generate(scenario, str(data_dir), seed=seed, verbose=True)

    bundle = load_sources(str(data_dir))
    cleaner = VisitCleaner(**config.cleaning_limits())
    result = featurize(bundle, cleaner=cleaner, exclusions=config.exclusion_windows())
    hourly_path = out / HOURLY_FILE
    write_hourly_table(result.table, str(hourly_path))
    excluded = sum(result.report.count(rule) for rule in result.report.excluded)
    log(f"[Featurize] {len(result.table)} hourly rows; {excluded} visits excluded by cleaning")

    cfg = _model_config(args, config, seed)
    outputs = {f"data_{k}": v for k, v in data.files.items()}
    outputs["hourly"] = str(hourly_path)
    outputs["cleaning_report"] = _write_json(out / "cleaning_report.json", result.report.to_dict())

    for variant in PIPELINE_VARIANTS:
        built = _prepare(str(hourly_path), variant, cfg.horizon, config, verbose=False)
        for name, path in _build_to(out / "variants" / variant, cfg, built).items():
            outputs[f"{variant}_{name}"] = path

    dataset = _prepare(str(hourly_path), args.variant, cfg.horizon, config, verbose=True)
    grid_path = args.grid or config.tuning_pipeline_grid_path()
    for name, path in _gridsearch_to(out / "tuning", grid_path, dataset, cfg, seed, config.tuning_workers()).items():
        outputs[f"tuning_{name}"] = path

    outputs.update(_train_to(out, cfg, dataset))
    model, scaler, _ = load_checkpoint(outputs["checkpoint"])
    outputs.update(_evaluate_to(out, model, scaler, dataset, "test"))
    try:
        outputs.update(_decompose_to(out, model, scaler, dataset, "test", None, None))
    except DataError as e:
        log(f"[Decompose][WARNING] {e}")
    return {"seed": seed, "inputs": [grid_path], "outputs": outputs}


COMMANDS: Dict[str, Callable[[argparse.Namespace, AppConfig], Dict]] = {
    "synth": run_synth,
    "featurize": run_featurize,
    "build": run_build,
    "train": run_train,
    "gridsearch": run_gridsearch,
    "evaluate": run_evaluate,
    "decompose": run_decompose,
    "describe": run_describe,
    "pipeline": run_pipeline,
}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", type=str, default="", help="Run output directory (default: run.out_dir)")
    p.add_argument("--seed", type=int, default=None, help="Seed (default: BOARDCAST_SEED, then run.seed)")


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lookback", type=int, default=None, help="Input window length L in hours")
    p.add_argument("--horizon", type=int, default=None, help="Forecast horizon H in hours")
    p.add_argument("--lr", type=float, default=None, help="Adam learning rate")
    p.add_argument("--dropout", type=float, default=None, help="Dropout probability on hidden layers")
    p.add_argument("--batch-size", type=int, default=None, help="Mini-batch size")
    p.add_argument("--max-epochs", type=int, default=None, help="Maximum training epochs")
    p.add_argument("--patience", type=int, default=None, help="Early-stopping patience in epochs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Hourly ED boarding count forecasting")
    parser.add_argument("--config", type=str, default="", help="Path to config.json (default: core/config.json)")
    parser.add_argument("--log-file", type=str, default="", help="Mirror console lines to this file")
    parser.add_argument("--quiet", action="store_true", help="Suppress console output")
    sub = parser.add_subparsers(dest="cmd", required=True)

    synth_p = sub.add_parser("synth", help="Generate a synthetic ED dataset")
    synth_p.add_argument("--scenario", type=str, default="", help="Scenario name or JSON path")
    _add_common(synth_p)

    feat_p = sub.add_parser("featurize", help="Ingest, clean and write the hourly feature table")
    feat_p.add_argument("--data", required=True, help="Directory holding the source CSV files")
    feat_p.add_argument("--no-exclusion", action="store_true", help="Keep hours inside the configured exclusion windows")
    _add_common(feat_p)

    for name, help_text in (
        ("build", "Build a variant matrix, split and windows"),
        ("train", "Train N-BEATSx on one variant"),
        ("gridsearch", "Grid search over training hyperparameters"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--hourly", required=True, help="hourly.csv from featurize")
        p.add_argument("--variant", default="DS3", help="DS1..DS5 or a manifest JSON path")
        if name == "gridsearch":
            p.add_argument("--grid", type=str, default="", help="Grid JSON (default: tuning.grid)")
            p.add_argument("--workers", type=int, default=0, help="Parallel trials (0=use config)")
        _add_common(p)
        _add_model_flags(p)

    for name, help_text in (("evaluate", "Metrics, extreme slices and baselines"), ("decompose", "One-day forecast decomposition")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--hourly", required=True, help="hourly.csv from featurize")
        p.add_argument("--checkpoint", type=str, default="", help="checkpoint.zip from train")
        p.add_argument("--variant", default="", help="Override the variant recorded in the checkpoint")
        p.add_argument("--segment", default="test", choices=["train", "val", "test"], help="Segment to forecast")
        if name == "decompose":
            p.add_argument("--day", type=str, default="", help="Day to export (default: first fully covered day)")
            p.add_argument("--step", type=int, default=None, help="Forecast step (default: horizon)")
        _add_common(p)

    desc_p = sub.add_parser("describe", help="Descriptive statistics of an hourly table")
    desc_p.add_argument("--hourly", required=True, help="hourly.csv from featurize")
    _add_common(desc_p)

    pipe_p = sub.add_parser("pipeline", help="synth -> featurize -> build -> gridsearch -> train -> evaluate -> decompose")
    pipe_p.add_argument("--scenario", type=str, default="", help="Scenario name or JSON path")
    pipe_p.add_argument("--variant", default="DS3", help="Variant to tune, train and evaluate")
    pipe_p.add_argument("--grid", type=str, default="", help="Grid JSON (default: tuning.pipeline_grid)")
    _add_common(pipe_p)
    _add_model_flags(pipe_p)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    if load_dotenv:
        try:
            load_dotenv()
        except Exception:
            pass

    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config or None)
        runlog.configure(args.log_file or config.run_log_file(), quiet=args.quiet)
        result = COMMANDS[args.cmd](args, config)
        outputs = result.get("outputs") or {}
        if outputs:
            out_dir = _out_dir(args, config).resolve()
            resolved = {k: str(Path(v).resolve()) for k, v in outputs.items()}
            path = write_run_manifest(out_dir, args.cmd, args, result["seed"], config, result["inputs"], resolved)
            log(f"[Run] manifest: {path}")
        return EXIT_OK
    except BoardcastError as e:
        log(f"[Error] {type(e).__name__}: {e}")
        return exit_code_for(e)
    except Exception as e:
        log(f"[Error] unexpected: {e}")
        traceback.print_exc()
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    raise SystemExit(main(sys.argv[1:]))
