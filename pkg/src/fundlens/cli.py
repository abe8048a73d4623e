"""Operator surface: ingest -> featurize -> screen -> train -> evaluate ->
predict, plus synthetic-data generation and histogram reports.

Runs are reproducible from a single INI config file; command-line flags win
over config values, and the seed is mandatory (no wall-clock default).
Exit codes: 0 success, 1 runtime failure, 2 config/path error, 3 data/shape
error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import sys
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Optional

import numpy as np

from . import forest as rf
from .core import (
    Campaign,
    CategoryRegistry,
    GoalBand,
    MAX_RATIO,
    assign_binary_class,
    assign_goal_band,
    assign_success_class,
)
from .errors import ConfigError, DataError, FundlensError, SchemaError
from .experiment import (
    ExperimentConfig,
    Setting,
    assemble,
    run_experiment,
)
from .features import FeatureMatrix, apply_imputation, build_feature_matrix, impute_with_indicators
from .images import StubFaceProvider, load_precomputed_quality
from .ingest import load_campaigns, load_population_table
from .stats import screen
from .synth import SynthSpec, generate_dataset, write_dataset
from .text import load_lexicon


@dataclass
class RunConfig:
    seed: Optional[int] = None
    out: Path = Path("out")
    campaigns: Optional[Path] = None
    census: Optional[Path] = None
    lexicon: Optional[Path] = None  # None -> bundled demo lexicon
    quality_scores: Optional[Path] = None
    sidecar_root: Optional[Path] = None
    categories: Optional[Path] = None
    models: Optional[Path] = None
    alpha: float = 0.05
    target: str = "two-class"
    assembly: str = "all-features"
    jobs: int = 1
    n_estimators: int = 100
    min_samples_split: int = 2
    max_depth: Optional[int] = None
    max_features: Optional[int] = None
    bootstrap: bool = True
    criterion: str = "gini"
    cv_folds: int = 10
    min_band_n: int = 30
    settings: tuple = tuple(Setting)
    full_settings_bands: tuple = ("B1", "B2")
    train_setting: str = "EarlyFusionAll"
    extra: dict = field(default_factory=dict)

    def forest_config(self, seed: int = 0) -> rf.ForestConfig:
        return rf.ForestConfig(
            n_estimators=self.n_estimators,
            min_samples_split=self.min_samples_split,
            max_features=self.max_features,
            max_depth=self.max_depth,
            bootstrap=self.bootstrap,
            seed=seed,
            criterion=self.criterion,
        )

    def experiment_config(self) -> ExperimentConfig:
        return ExperimentConfig(
            seed=self.seed,
            forest=self.forest_config(),
            settings=self.settings,
            cv_folds=self.cv_folds,
            min_band_n=self.min_band_n,
            target=self.target,
            assembly=self.assembly,
            full_settings_bands=self.full_settings_bands,
            jobs=self.jobs,
        )


def _parse_settings(raw: str):
    out = []
    for token in raw.split(","):
        token = token.strip()
        if not token:
            continue
        try:
            out.append(Setting(token))
        except ValueError:
            raise ConfigError(f"unknown setting {token!r}") from None
    if not out:
        raise ConfigError("settings list is empty")
    return tuple(out)


def load_config(path: Optional[str], args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        parser = configparser.ConfigParser()
        parser.read(p, encoding="utf-8")

        def get(section, key, fallback=None):
            return parser.get(section, key, fallback=fallback) if parser.has_section(section) else fallback

        for key in ("campaigns", "census", "lexicon", "quality_scores",
                    "sidecar_root", "categories", "models", "out"):
            raw = get("paths", key)
            if raw:
                setattr(cfg, key, Path(raw))
        seed = get("run", "seed")
        if seed is not None:
            cfg.seed = int(seed)
        for key, cast in (("alpha", float), ("target", str), ("assembly", str), ("jobs", int)):
            raw = get("run", key)
            if raw is not None:
                setattr(cfg, key, cast(raw))
        for key, cast in (("n_estimators", int), ("min_samples_split", int),
                          ("bootstrap", lambda s: s.lower() in ("1", "true", "yes")),
                          ("criterion", str)):
            raw = get("forest", key)
            if raw is not None:
                setattr(cfg, key, cast(raw))
        for key in ("max_depth", "max_features"):
            raw = get("forest", key)
            if raw:
                setattr(cfg, key, int(raw))
        for key, cast in (("cv_folds", int), ("min_band_n", int), ("train_setting", str)):
            raw = get("experiment", key)
            if raw is not None:
                setattr(cfg, key, cast(raw))
        raw = get("experiment", "settings")
        if raw:
            cfg.settings = _parse_settings(raw)
        raw = get("experiment", "full_settings_bands")
        if raw:
            cfg.full_settings_bands = tuple(t.strip() for t in raw.split(",") if t.strip())

    # Flags win over the config file.
    for key in ("seed", "jobs", "alpha", "target", "assembly", "cv_folds",
                "n_estimators", "max_depth", "min_band_n", "train_setting"):
        v = getattr(args, key, None)
        if v is not None:
            setattr(cfg, key, v)
    for key in ("out", "campaigns", "census", "lexicon", "quality_scores", "sidecar_root", "models"):
        v = getattr(args, key, None)
        if v is not None:
            setattr(cfg, key, Path(v))
    if getattr(args, "settings", None):
        cfg.settings = _parse_settings(args.settings)

    if cfg.seed is None:
        raise ConfigError("seed is mandatory: set [run] seed in the config or pass --seed")
    if cfg.target not in ("two-class", "four-class"):
        raise ConfigError(f"target must be two-class or four-class, got {cfg.target!r}")
    if cfg.assembly not in ("all-features", "screened"):
        raise ConfigError(f"assembly must be all-features or screened, got {cfg.assembly!r}")
    return cfg


def _require(path: Optional[Path], what: str) -> Path:
    if path is None:
        raise ConfigError(f"missing required path: {what}")
    if not Path(path).exists():
        raise ConfigError(f"{what} not found: {path}")
    return Path(path)


def _registry(cfg: RunConfig) -> CategoryRegistry:
    if cfg.categories is not None:
        return CategoryRegistry.load(_require(cfg.categories, "category registry"))
    return CategoryRegistry.default()


def _lexicon(cfg: RunConfig):
    if cfg.lexicon is not None:
        return load_lexicon(_require(cfg.lexicon, "lexicon file"))
    return load_lexicon(None)


def _lexicon_fingerprint(cfg: RunConfig) -> str:
    if cfg.lexicon is not None:
        blob = Path(cfg.lexicon).read_bytes()
    else:
        from importlib import resources

        blob = resources.files("fundlens.data").joinpath("demo_lexicon.dic").read_bytes()
    return hashlib.sha256(blob).hexdigest()[:16]


def _dataset_paths(cfg: RunConfig) -> dict:
    out = Path(cfg.out)
    return {
        "dataset": out / "dataset.jsonl",
        "ingest_report": out / "ingest_report.json",
        "features": out / "features.csv",
        "features_meta": out / "features_meta.json",
        "screening": out / "screening.csv",
        "screening_notes": out / "screening_notes.json",
        "report_csv": out / "report.csv",
        "report_json": out / "report.json",
        "models": (cfg.models or out / "models"),
        "predictions": out / "predictions.csv",
        "goal_hist": out / "goal_histogram.csv",
        "ratio_hist": out / "ratio_histogram.csv",
        "summary": out / "summary.json",
    }


def _load_dataset(path: Path, registry: CategoryRegistry):
    """Read the canonical dataset file written by cmd_ingest."""
    campaigns = []
    meta = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            campaigns.append(Campaign(
                id=obj["id"], launch_date=date.fromisoformat(obj["launch_date"]),
                city=obj["city"], state=obj["state"], country=obj["country"],
                title=obj["title"], description=obj["description"], category=obj["category"],
                goal_amount=obj["goal_amount"], raised_amount=obj["raised_amount"],
                num_followers=obj["num_followers"], num_shares=obj["num_shares"],
                num_donors=obj["num_donors"], cover_image=obj.get("cover_image"),
            ))
            meta.append({
                "ratio": obj["ratio"],
                "goal_band": obj["goal_band"],
                "class_four": obj["class_four"],
                "class_two": obj["class_two"],
            })
    return campaigns, meta


def cmd_ingest(cfg: RunConfig) -> int:
    paths = _dataset_paths(cfg)
    registry = _registry(cfg)
    src = _require(cfg.campaigns, "campaign snapshot")
    campaigns, report = load_campaigns(src, registry)
    Path(cfg.out).mkdir(parents=True, exist_ok=True)
    with paths["dataset"].open("w", encoding="utf-8") as fh:
        for c in campaigns:
            ratio = c.ratio
            band = assign_goal_band(c.goal_amount)
            four = assign_success_class(ratio) if ratio <= MAX_RATIO else None
            two = assign_binary_class(ratio) if ratio <= MAX_RATIO else None
            obj = {
                "id": c.id, "launch_date": c.launch_date.isoformat(),
                "city": c.city, "state": c.state, "country": c.country,
                "title": c.title, "description": c.description, "category": c.category,
                "goal_amount": c.goal_amount, "raised_amount": c.raised_amount,
                "num_followers": c.num_followers, "num_shares": c.num_shares,
                "num_donors": c.num_donors, "cover_image": c.cover_image,
                "ratio": ratio,
                "goal_band": band.name if band is not None else None,
                "class_four": int(four) if four is not None else None,
                "class_two": two,
            }
            fh.write(json.dumps(obj, sort_keys=True) + "\n")
    paths["ingest_report"].write_text(
        json.dumps(report.as_dict(), sort_keys=True, indent=1), encoding="utf-8")
    print(f"ingest: accepted={report.accepted} rejected={report.rejected} "
          f"non_us={report.non_us} -> {paths['dataset']}")
    return 0


def cmd_featurize(cfg: RunConfig) -> int:
    paths = _dataset_paths(cfg)
    registry = _registry(cfg)
    dataset = _require(paths["dataset"], "dataset file (run ingest first)")
    campaigns, _ = _load_dataset(dataset, registry)
    lexicon = _lexicon(cfg)
    population = load_population_table(_require(cfg.census, "census file")) if cfg.census else None
    quality = (load_precomputed_quality(_require(cfg.quality_scores, "quality score file"))
               if cfg.quality_scores else None)
    provider = StubFaceProvider(_require(cfg.sidecar_root, "sidecar root")) if cfg.sidecar_root else None
    matrix = build_feature_matrix(
        campaigns, registry, lexicon,
        population_table=population, quality_table=quality, face_provider=provider,
    )
    matrix.save(paths["features"], paths["features_meta"])
    meta = json.loads(paths["features_meta"].read_text(encoding="utf-8"))
    meta["provider_tags"] = {
        "quality": "precomputed" if quality is not None else "none",
        "faces": provider.tag if provider is not None else "none",
    }
    meta["lexicon_fingerprint"] = _lexicon_fingerprint(cfg)
    paths["features_meta"].write_text(json.dumps(meta, sort_keys=True, indent=1), encoding="utf-8")
    print(f"featurize: {len(matrix.ids)} rows x {len(matrix.names)} features -> {paths['features']}")
    return 0


_SCREEN_MODALITIES = ("text", "image_quality", "face", "population")


def _screen_all(matrix: FeatureMatrix, meta, cfg: RunConfig):
    """Screen every (band, category, modality) cell; returns (rows, notes)."""
    ratios = np.asarray([m["ratio"] for m in meta])
    bands = [m["goal_band"] for m in meta]
    analysis = [i for i, m in enumerate(meta)
                if m["goal_band"] is not None and m["ratio"] <= MAX_RATIO]
    categories = sorted({matrix.names[j] for j in range(len(matrix.names))})
    # Category of each row comes from the one-hot basic columns.
    cat_cols = [(j, matrix.names[j][4:]) for j in range(len(matrix.names))
                if matrix.names[j].startswith("cat_")]
    all_rows = []
    all_notes = []
    for band in ("B1", "B2", "B3", "B4"):
        band_rows = [i for i in analysis if bands[i] == band]
        for j, cat in sorted(cat_cols, key=lambda t: t[1]):
            cell = [i for i in band_rows if matrix.values[i, j] == 1.0]
            if not cell:
                continue
            cell_idx = np.asarray(cell, dtype=np.intp)
            for modality in _SCREEN_MODALITIES:
                cols = [k for k, m in enumerate(matrix.modalities)
                        if m == modality and not matrix.names[k].endswith("_missing")]
                if not cols:
                    continue
                rows, notes = screen(
                    matrix.values[np.ix_(cell_idx, cols)],
                    [matrix.names[k] for k in cols],
                    ratios[cell_idx],
                    band=band, category=cat, alpha=cfg.alpha,
                )
                for r in rows:
                    all_rows.append((modality, r))
                all_notes.extend(f"{modality}: {n}" for n in notes)
    return all_rows, all_notes


def cmd_screen(cfg: RunConfig) -> int:
    paths = _dataset_paths(cfg)
    registry = _registry(cfg)
    _require(paths["features"], "feature matrix (run featurize first)")
    matrix = FeatureMatrix.load(paths["features"], paths["features_meta"])
    _, meta = _load_dataset(_require(paths["dataset"], "dataset file"), registry)
    rows, notes = _screen_all(matrix, meta, cfg)
    with paths["screening"].open("w", encoding="utf-8", newline="") as fh:
        fh.write(f"# alpha={cfg.alpha}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["goal_band", "category", "modality", "feature",
                         "mean", "sd", "r", "p", "n", "threshold"])
        for modality, r in rows:
            writer.writerow([r.goal_band, r.category, modality, r.feature,
                             f"{r.mean:.6f}", f"{r.sd:.6f}", f"{r.r:.6f}",
                             f"{r.p:.6g}", r.n, f"{r.threshold:.6g}"])
    paths["screening_notes"].write_text(
        json.dumps({"notes": notes}, sort_keys=True, indent=1), encoding="utf-8")
    print(f"screen: {len(rows)} significant rows -> {paths['screening']}")
    return 0


def _labels_for_target(meta, target: str):
    key = "class_two" if target == "two-class" else "class_four"
    return [m[key] for m in meta]


def _screened_by_band(matrix, meta, cfg):
    rows, _ = _screen_all(matrix, meta, cfg)
    gate: dict = {}
    for _, r in rows:
        gate.setdefault(r.goal_band, set()).add(r.feature)
    return gate


def cmd_evaluate(cfg: RunConfig) -> int:
    paths = _dataset_paths(cfg)
    registry = _registry(cfg)
    matrix = FeatureMatrix.load(
        _require(paths["features"], "feature matrix (run featurize first)"),
        paths["features_meta"])
    _, meta = _load_dataset(_require(paths["dataset"], "dataset file"), registry)
    fmeta = json.loads(paths["features_meta"].read_text(encoding="utf-8"))
    bands = [m["goal_band"] for m in meta]
    labels = _labels_for_target(meta, cfg.target)
    screened = _screened_by_band(matrix, meta, cfg) if cfg.assembly == "screened" else None
    report = run_experiment(
        bands, labels, matrix, cfg.experiment_config(),
        screened_by_band=screened,
        extra_header={
            "provider_tags": json.dumps(fmeta.get("provider_tags", {}), sort_keys=True),
            "lexicon_fingerprint": fmeta.get("lexicon_fingerprint", ""),
            "alpha": cfg.alpha,
        },
    )
    paths["report_csv"].write_text(report.to_csv_text(), encoding="utf-8")
    paths["report_json"].write_text(report.to_json_text(), encoding="utf-8")
    print(f"evaluate: {len(report.rows)} rows, {len(report.totals)} totals -> {paths['report_csv']}")
    return 0


def cmd_train(cfg: RunConfig) -> int:
    paths = _dataset_paths(cfg)
    registry = _registry(cfg)
    matrix = FeatureMatrix.load(
        _require(paths["features"], "feature matrix (run featurize first)"),
        paths["features_meta"])
    _, meta = _load_dataset(_require(paths["dataset"], "dataset file"), registry)
    try:
        setting = Setting(cfg.train_setting)
    except ValueError:
        raise ConfigError(f"unknown train setting {cfg.train_setting!r}") from None
    if setting == Setting.LATE_FUSION:
        raise ConfigError("train persists single models; pick a non-late-fusion setting")
    labels = _labels_for_target(meta, cfg.target)
    bands = [m["goal_band"] for m in meta]
    model_dir = paths["models"]
    model_dir.mkdir(parents=True, exist_ok=True)
    trained = []
    for band in ("B1", "B2", "B3", "B4"):
        idx = np.asarray([i for i, (b, lab) in enumerate(zip(bands, labels))
                          if b == band and lab is not None], dtype=np.intp)
        if idx.size < cfg.min_band_n:
            continue
        sub = assemble(matrix.take_rows(idx), setting)
        y = np.asarray([labels[i] for i in idx])
        X, _, names, medians = impute_with_indicators(sub.values, sub.values, sub.names)
        model = rf.fit(X, y, cfg.forest_config(seed=cfg.seed), feature_names=names, jobs=cfg.jobs)
        model.save(model_dir / f"{band}.json")
        (model_dir / f"{band}_meta.json").write_text(json.dumps({
            "band": band, "setting": setting.value, "target": cfg.target,
            "base_names": sub.names, "out_names": names, "medians": medians,
        }, sort_keys=True, indent=1), encoding="utf-8")
        trained.append(band)
    if not trained:
        raise DataError("no band had enough labeled campaigns to train")
    print(f"train: models for {','.join(trained)} -> {model_dir}")
    return 0


def cmd_predict(cfg: RunConfig, campaign_file: str) -> int:
    paths = _dataset_paths(cfg)
    registry = _registry(cfg)
    model_dir = _require(paths["models"], "model directory (run train first)")
    src = _require(Path(campaign_file), "campaign file")
    campaigns, _ = load_campaigns(src, registry)
    lexicon = _lexicon(cfg)
    population = load_population_table(cfg.census) if cfg.census and Path(cfg.census).exists() else None
    quality = (load_precomputed_quality(cfg.quality_scores)
               if cfg.quality_scores and Path(cfg.quality_scores).exists() else None)
    provider = (StubFaceProvider(cfg.sidecar_root)
                if cfg.sidecar_root and Path(cfg.sidecar_root).exists() else None)
    matrix = build_feature_matrix(campaigns, registry, lexicon,
                                  population_table=population, quality_table=quality,
                                  face_provider=provider)
    models = {}
    metas = {}
    for band in ("B1", "B2", "B3", "B4"):
        mp = Path(model_dir) / f"{band}.json"
        if mp.is_file():
            models[band] = rf.RandomForest.load(mp)
            metas[band] = json.loads((Path(model_dir) / f"{band}_meta.json").read_text(encoding="utf-8"))
    if not models:
        raise ConfigError(f"no trained models found under {model_dir}")
    Path(cfg.out).mkdir(parents=True, exist_ok=True)
    with paths["predictions"].open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "goal_band", "predicted_class", "probability",
                         "top_features", "imputed_features"])
        for i, c in enumerate(campaigns):
            band = assign_goal_band(c.goal_amount)
            if band is None or band.name not in models:
                writer.writerow([c.id, band.name if band else "OutOfRange", "", "", "", ""])
                continue
            model = models[band.name]
            bmeta = metas[band.name]
            sub = matrix.take_rows([i]).select_names(bmeta["base_names"])
            order = [sub.names.index(n) for n in bmeta["base_names"]]
            row_vals = sub.values[:, order]
            imputed = [bmeta["base_names"][j] for j in range(len(order))
                       if np.isnan(row_vals[0, j])]
            X = apply_imputation(row_vals, bmeta["base_names"], bmeta["medians"], bmeta["out_names"])
            if X.shape[1] != model.n_features:
                raise SchemaError(
                    f"feature mismatch for {band.name}: model expects {model.n_features}, got {X.shape[1]}")
            proba = model.predict_proba(X)[0]
            k = int(np.argmax(proba))
            importances = model.feature_importances()
            top = np.argsort(-importances)[:5]
            top_names = ";".join(model.feature_names[j] for j in top if importances[j] > 0)
            writer.writerow([c.id, band.name, int(model.labels[k]), f"{proba[k]:.6f}",
                             top_names, ";".join(imputed)])
    print(f"predict: {len(campaigns)} campaigns -> {paths['predictions']}")
    return 0


def cmd_synth(cfg: RunConfig, spec_file: str) -> int:
    spec = SynthSpec.from_file(_require(Path(spec_file), "synthetic spec file"))
    registry = _registry(cfg)
    lexicon = _lexicon(cfg)
    ds = generate_dataset(spec, cfg.seed, lexicon, registry)
    paths = write_dataset(ds, cfg.out)
    print(f"synth: {ds.manifest['n_campaigns']} campaigns -> {paths['campaigns']}")
    return 0


def cmd_report(cfg: RunConfig) -> int:
    paths = _dataset_paths(cfg)
    registry = _registry(cfg)
    _, meta = _load_dataset(_require(paths["dataset"], "dataset file"), registry)

    def write_hist(path, values, lo, hi, width):
        edges = np.arange(lo, hi + width / 2, width)
        counts, _ = np.histogram(values, bins=edges)
        with Path(path).open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["bin_left", "bin_right", "count"])
            for left, right, count in zip(edges[:-1], edges[1:], counts):
                writer.writerow([f"{left:.6g}", f"{right:.6g}", int(count)])

    campaigns, _ = _load_dataset(paths["dataset"], registry)
    goals = [c.goal_amount for c in campaigns if c.goal_amount <= 100_000]
    ratios = [m["ratio"] for m in meta if m["ratio"] <= MAX_RATIO]
    write_hist(paths["goal_hist"], goals, 0.0, 100_000.0, 4_000.0)
    write_hist(paths["ratio_hist"], ratios, 0.0, MAX_RATIO, 0.1)
    summary = {
        "n": len(meta),
        "per_band": {b: sum(1 for m in meta if m["goal_band"] == b) for b in ("B1", "B2", "B3", "B4")},
        "per_class_two": {str(k): sum(1 for m in meta if m["class_two"] == k) for k in (-2, 2)},
        "dropped_ratio": sum(1 for m in meta if m["class_two"] is None),
    }
    paths["summary"].write_text(json.dumps(summary, sort_keys=True, indent=1), encoding="utf-8")
    print(f"report: histograms -> {paths['goal_hist']}, {paths['ratio_hist']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fundlens",
                                     description="Multimodal crowdfunding analytics pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="INI config file; flags override its values")
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.add_argument("--jobs", type=int)
        p.add_argument("--campaigns")
        p.add_argument("--census")
        p.add_argument("--lexicon")
        p.add_argument("--quality-scores", dest="quality_scores")
        p.add_argument("--sidecar-root", dest="sidecar_root")
        p.add_argument("--models")
        p.add_argument("--alpha", type=float)
        p.add_argument("--target", choices=["two-class", "four-class"])
        p.add_argument("--assembly", choices=["all-features", "screened"])
        p.add_argument("--trees", type=int, dest="n_estimators")
        p.add_argument("--max-depth", type=int, dest="max_depth")
        p.add_argument("--cv-folds", type=int, dest="cv_folds")
        p.add_argument("--min-band-n", type=int, dest="min_band_n")
        p.add_argument("--settings")
        p.add_argument("--train-setting", dest="train_setting")

    for name in ("ingest", "featurize", "screen", "train", "evaluate", "report"):
        add_common(sub.add_parser(name))
    p = sub.add_parser("predict")
    add_common(p)
    p.add_argument("campaign_file")
    p = sub.add_parser("synth")
    add_common(p)
    p.add_argument("spec_file")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args)
        if args.command == "ingest":
            return cmd_ingest(cfg)
        if args.command == "featurize":
            return cmd_featurize(cfg)
        if args.command == "screen":
            return cmd_screen(cfg)
        if args.command == "train":
            return cmd_train(cfg)
        if args.command == "evaluate":
            return cmd_evaluate(cfg)
        if args.command == "predict":
            return cmd_predict(cfg, args.campaign_file)
        if args.command == "synth":
            return cmd_synth(cfg, args.spec_file)
        if args.command == "report":
            return cmd_report(cfg)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2
    except FundlensError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
