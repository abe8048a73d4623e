"""Evaluation protocol: feature-set settings, early/late fusion, stratified
90/10 split plus k-fold cross-validation, per-band metrics, weighted totals.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, asdict
from enum import Enum
from typing import Optional

import numpy as np

from . import forest as rf
from .errors import EmptySetting, InsufficientData, LabelError, ShapeError
from .features import FeatureMatrix, impute_with_indicators


class Setting(Enum):
    BASIC = "Basic"
    LIWC = "LIWC"
    POPULATION = "Population"
    FACE = "Face"
    IMAGE_QUALITY = "ImageQuality"
    EARLY_FUSION_ALL = "EarlyFusionAll"
    LATE_FUSION = "LateFusion"


SETTING_MODALITIES = {
    Setting.BASIC: ("basic",),
    Setting.LIWC: ("text",),
    Setting.POPULATION: ("population",),
    Setting.FACE: ("face",),
    Setting.IMAGE_QUALITY: ("image_quality",),
    Setting.EARLY_FUSION_ALL: ("basic", "population", "text", "image_quality", "face"),
}

#: Modality groups for the late-fusion setting: one text model, one image model.
LATE_FUSION_GROUPS = (("text",), ("image_quality", "face"))


def assemble(matrix: FeatureMatrix, setting: Setting, screened_names=None) -> FeatureMatrix:
    """Column filter for a setting; optionally gated to screened features.

    In screened mode only features found significant for the cell are kept
    (the two-step screen-then-classify procedure); basic columns are never
    gated since screening covers the non-basic modalities.
    """
    if setting == Setting.LATE_FUSION:
        raise EmptySetting("LateFusion assembles per modality group; use assemble per group")
    sub = matrix.select_modalities(SETTING_MODALITIES[setting])
    if screened_names is not None and setting != Setting.BASIC:
        keep = [
            n for n, m in zip(sub.names, sub.modalities)
            if m == "basic" or n in screened_names or n.endswith("_missing")
        ]
        sub = sub.select_names(keep)
    return sub


def early_fuse(matrices) -> FeatureMatrix:
    """Column-wise concatenation of row-aligned matrices."""
    matrices = list(matrices)
    if not matrices:
        raise ShapeError("early_fuse needs at least one matrix")
    first = matrices[0]
    for m in matrices[1:]:
        if m.ids != first.ids:
            raise ShapeError("early_fuse requires identical campaign id order")
    names: list = []
    modalities: list = []
    for m in matrices:
        for n in m.names:
            if n in names:
                raise ShapeError(f"duplicate column {n!r} in early fusion")
        names.extend(m.names)
        modalities.extend(m.modalities)
    return FeatureMatrix(
        ids=first.ids,
        names=names,
        modalities=modalities,
        values=np.hstack([m.values for m in matrices]),
    )


def late_fuse_proba(models, xs, combiner: str = "average") -> np.ndarray:
    """Combine per-modality model outputs into one probability vector per row."""
    if len(models) < 2:
        raise LabelError("late fusion needs at least 2 models")
    if len(models) != len(xs):
        raise ShapeError("one input matrix per model required")
    base = models[0].labels
    for m in models[1:]:
        if m.labels.shape != base.shape or (m.labels != base).any():
            raise LabelError("late fusion requires a shared label set")
    probas = [m.predict_proba(x) for m, x in zip(models, xs)]
    if combiner == "average":
        return np.mean(probas, axis=0)
    if combiner == "vote":
        votes = np.zeros_like(probas[0])
        for p in probas:
            votes[np.arange(p.shape[0]), np.argmax(p, axis=1)] += 1.0
        return votes / len(probas)
    raise LabelError(f"unknown late-fusion combiner {combiner!r}")


def late_fuse(models, xs, combiner: str = "average") -> np.ndarray:
    """Fused label predictions; probability ties go to the lower label."""
    proba = late_fuse_proba(models, xs, combiner)
    return models[0].labels[np.argmax(proba, axis=1)]


def stratified_kfold(y, k: int = 10, seed: int = 0):
    """k disjoint stratified folds; per-fold class counts within 1 of proportion.

    When some class has fewer than k members, k is lowered to that count
    (never below 2) and a note is returned.
    """
    y = np.asarray(y)
    n = y.size
    if n < 2:
        raise InsufficientData(f"need at least 2 samples to fold, got {n}")
    labels, counts = np.unique(y, return_counts=True)
    note = None
    k_eff = int(k)
    min_count = int(counts.min())
    if min_count < k_eff:
        k_eff = max(2, min_count)
        note = f"k lowered from {k} to {k_eff}: smallest class has {min_count} members"
    rng = np.random.default_rng(seed)
    folds = [[] for _ in range(k_eff)]
    cursor = 0
    for label in labels:
        idx = np.flatnonzero(y == label)
        rng.shuffle(idx)
        for i in idx:
            folds[cursor % k_eff].append(int(i))
            cursor += 1
    return [np.asarray(sorted(f), dtype=np.intp) for f in folds], note


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    per_class: dict
    support: dict
    zero_division: bool = False


def compute_metrics(y_true, y_pred, labels=None) -> Metrics:
    """Support-weighted precision/recall/F1 from the confusion matrix.

    Weighted recall equals accuracy by construction. Zero-denominator
    per-class precision is defined as 0 and flagged.
    """
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape or y_true.size == 0:
        raise ShapeError("y_true and y_pred must be equal-length, non-empty")
    if labels is None:
        labels = np.unique(np.concatenate([y_true, y_pred]))
    else:
        labels = np.asarray(labels)
    accuracy = float((y_true == y_pred).mean())
    per_class = {}
    support = {}
    zero_division = False
    w_precision = w_recall = w_f1 = 0.0
    n = y_true.size
    for label in labels:
        tp = int(((y_true == label) & (y_pred == label)).sum())
        fp = int(((y_true != label) & (y_pred == label)).sum())
        fn = int(((y_true == label) & (y_pred != label)).sum())
        sup = tp + fn
        if tp + fp == 0:
            precision = 0.0
            if sup > 0:
                zero_division = True
        else:
            precision = tp / (tp + fp)
        recall = tp / sup if sup > 0 else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        per_class[int(label)] = {"precision": precision, "recall": recall, "f1": f1}
        support[int(label)] = sup
        w_precision += sup * precision / n
        w_recall += sup * recall / n
        w_f1 += sup * f1 / n
    return Metrics(
        accuracy=accuracy, precision=w_precision, recall=w_recall, f1=w_f1,
        per_class=per_class, support=support, zero_division=zero_division,
    )


@dataclass
class ExperimentConfig:
    seed: int = 0
    forest: rf.ForestConfig = field(default_factory=lambda: rf.ForestConfig(n_estimators=100))
    settings: tuple = tuple(Setting)
    cv_folds: int = 10
    min_band_n: int = 30
    target: str = "two-class"          # or "four-class"
    assembly: str = "all-features"     # or "screened"
    late_combiner: str = "average"
    #: Bands that run all settings; the rest run Basic only (no extra
    #: significant features were found in the high-goal bands).
    full_settings_bands: tuple = ("B1", "B2")
    jobs: int = 1

    def fingerprint(self) -> str:
        payload = asdict(self)
        payload["settings"] = [s.value for s in self.settings]
        blob = json.dumps(payload, sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class ReportRow:
    goal_band: str
    setting: str
    n_train: int
    n_test: int
    holdout: Metrics
    cv: Optional[dict] = None  # mean metrics over CV folds


@dataclass
class ExperimentReport:
    header: dict
    rows: list
    totals: list
    notes: list

    _COLUMNS = (
        "goal_band", "setting", "n_train", "n_test",
        "accuracy", "precision", "recall", "f1",
        "cv_accuracy", "cv_precision", "cv_recall", "cv_f1",
    )

    def to_csv_text(self) -> str:
        lines = [f"# {k}={self.header[k]}" for k in sorted(self.header)]
        lines.append(",".join(self._COLUMNS))

        def fmt(v):
            return "" if v is None else f"{v:.6f}"

        for row in self.rows + self.totals:
            cv = row.cv or {}
            lines.append(",".join([
                row.goal_band, row.setting, str(row.n_train), str(row.n_test),
                fmt(row.holdout.accuracy), fmt(row.holdout.precision),
                fmt(row.holdout.recall), fmt(row.holdout.f1),
                fmt(cv.get("accuracy")), fmt(cv.get("precision")),
                fmt(cv.get("recall")), fmt(cv.get("f1")),
            ]))
        for note in self.notes:
            lines.append(f"# note: {note}")
        return "\n".join(lines) + "\n"

    def to_json_text(self) -> str:
        def metrics_dict(m: Metrics):
            return {
                "accuracy": m.accuracy, "precision": m.precision,
                "recall": m.recall, "f1": m.f1,
                "per_class": {str(k): v for k, v in m.per_class.items()},
                "support": {str(k): v for k, v in m.support.items()},
                "zero_division": m.zero_division,
            }

        payload = {
            "header": self.header,
            "rows": [
                {
                    "goal_band": r.goal_band, "setting": r.setting,
                    "n_train": r.n_train, "n_test": r.n_test,
                    "holdout": metrics_dict(r.holdout), "cv": r.cv,
                }
                for r in self.rows
            ],
            "totals": [
                {
                    "goal_band": r.goal_band, "setting": r.setting,
                    "n_train": r.n_train, "n_test": r.n_test,
                    "holdout": metrics_dict(r.holdout),
                }
                for r in self.totals
            ],
            "notes": self.notes,
        }
        return json.dumps(payload, sort_keys=True, indent=1)


def _derived_seed(*parts) -> int:
    blob = "/".join(str(p) for p in parts)
    return int.from_bytes(hashlib.sha256(blob.encode()).digest()[:8], "big") >> 1


def _fit_predict(matrix_train, matrix_test, y_train, cfg: ExperimentConfig,
                 setting: Setting, seed_parts, screened_names=None):
    """Train per the setting and return test predictions."""
    if setting == Setting.LATE_FUSION:
        models = []
        xs = []
        for gi, group in enumerate(LATE_FUSION_GROUPS):
            sub_tr = matrix_train.select_modalities(group)
            sub_te = matrix_test.select_modalities(group)
            if screened_names is not None:
                keep = [n for n in sub_tr.names if n in screened_names or n.endswith("_missing")]
                sub_tr = sub_tr.select_names(keep)
                sub_te = sub_te.select_names(keep)
            Xtr, Xte, names, _ = impute_with_indicators(sub_tr.values, sub_te.values, sub_tr.names)
            fc = rf.ForestConfig(**{**asdict(cfg.forest), "seed": _derived_seed(*seed_parts, "late", gi)})
            models.append(rf.fit(Xtr, y_train, fc, feature_names=names, jobs=cfg.jobs))
            xs.append(Xte)
        return late_fuse(models, xs, combiner=cfg.late_combiner)
    sub_tr = assemble(matrix_train, setting, screened_names)
    sub_te = assemble(matrix_test, setting, screened_names)
    Xtr, Xte, names, _ = impute_with_indicators(sub_tr.values, sub_te.values, sub_tr.names)
    fc = rf.ForestConfig(**{**asdict(cfg.forest), "seed": _derived_seed(*seed_parts)})
    model = rf.fit(Xtr, y_train, fc, feature_names=names, jobs=cfg.jobs)
    return model.predict(Xte)


def run_experiment(bands, labels, matrix: FeatureMatrix, cfg: ExperimentConfig,
                   screened_by_band=None, extra_header=None) -> ExperimentReport:
    """Per-band 90/10 stratified holdout evaluation plus k-fold CV on the 90%.

    ``bands``/``labels`` align with matrix rows; None entries (dropped ratio,
    out-of-range goal) are excluded. Weighted totals use band test sizes.
    """
    bands = list(bands)
    labels = list(labels)
    if len(bands) != len(matrix.ids) or len(labels) != len(matrix.ids):
        raise ShapeError("bands and labels must align with matrix rows")
    notes: list = []
    rows: list = []
    band_names = ("B1", "B2", "B3", "B4")
    for band in band_names:
        idx = np.asarray(
            [i for i, (b, lab) in enumerate(zip(bands, labels)) if b == band and lab is not None],
            dtype=np.intp,
        )
        if idx.size < cfg.min_band_n:
            notes.append(f"skipped band {band}: n={idx.size} < {cfg.min_band_n}")
            continue
        y_band = np.asarray([labels[i] for i in idx])
        if np.unique(y_band).size < 2:
            notes.append(f"skipped band {band}: single class")
            continue
        sub = matrix.take_rows(idx)
        folds, note = stratified_kfold(y_band, k=10, seed=_derived_seed(cfg.seed, band, "holdout"))
        if note:
            notes.append(f"{band} holdout: {note}")
        test_rows = folds[0]
        train_rows = np.asarray(sorted(set(range(idx.size)) - set(test_rows.tolist())), dtype=np.intp)
        m_train = sub.take_rows(train_rows)
        m_test = sub.take_rows(test_rows)
        y_train = y_band[train_rows]
        y_test = y_band[test_rows]
        screened_names = None
        if cfg.assembly == "screened" and screened_by_band is not None:
            screened_names = screened_by_band.get(band, set())
        settings = cfg.settings if band in cfg.full_settings_bands else (Setting.BASIC,)
        for setting in settings:
            try:
                pred = _fit_predict(m_train, m_test, y_train, cfg, setting,
                                    (cfg.seed, band, setting.value), screened_names)
            except EmptySetting as exc:
                notes.append(f"skipped {band}/{setting.value}: {exc}")
                continue
            holdout = compute_metrics(y_test, pred)
            cv_means = None
            if cfg.cv_folds >= 2:
                cv_folds, cv_note = stratified_kfold(
                    y_train, k=cfg.cv_folds, seed=_derived_seed(cfg.seed, band, setting.value, "cv"))
                if cv_note:
                    notes.append(f"{band}/{setting.value} cv: {cv_note}")
                acc = []
                metric_rows = []
                for fi, fold in enumerate(cv_folds):
                    tr = np.asarray(sorted(set(range(y_train.size)) - set(fold.tolist())), dtype=np.intp)
                    pred_cv = _fit_predict(
                        m_train.take_rows(tr), m_train.take_rows(fold), y_train[tr],
                        cfg, setting, (cfg.seed, band, setting.value, "cv", fi), screened_names)
                    metric_rows.append(compute_metrics(y_train[fold], pred_cv))
                cv_means = {
                    "accuracy": float(np.mean([m.accuracy for m in metric_rows])),
                    "precision": float(np.mean([m.precision for m in metric_rows])),
                    "recall": float(np.mean([m.recall for m in metric_rows])),
                    "f1": float(np.mean([m.f1 for m in metric_rows])),
                }
            rows.append(ReportRow(
                goal_band=band, setting=setting.value,
                n_train=int(train_rows.size), n_test=int(test_rows.size),
                holdout=holdout, cv=cv_means,
            ))

    totals = []
    by_setting: dict = {}
    for row in rows:
        by_setting.setdefault(row.setting, []).append(row)
    for setting in [s.value for s in cfg.settings]:
        group = by_setting.get(setting)
        if not group:
            continue
        weights = np.asarray([r.n_test for r in group], dtype=np.float64)
        weights = weights / weights.sum()

        def wavg(get):
            return float(sum(w * get(r.holdout) for w, r in zip(weights, group)))

        total_metrics = Metrics(
            accuracy=wavg(lambda m: m.accuracy),
            precision=wavg(lambda m: m.precision),
            recall=wavg(lambda m: m.recall),
            f1=wavg(lambda m: m.f1),
            per_class={}, support={},
        )
        totals.append(ReportRow(
            goal_band="Total(Weighted)", setting=setting,
            n_train=int(sum(r.n_train for r in group)),
            n_test=int(sum(r.n_test for r in group)),
            holdout=total_metrics,
        ))

    header = {
        "seed": cfg.seed,
        "config_fingerprint": cfg.fingerprint(),
        "target": cfg.target,
        "assembly": cfg.assembly,
        "n_estimators": cfg.forest.n_estimators,
        "min_samples_split": cfg.forest.min_samples_split,
        "cv_folds": cfg.cv_folds,
    }
    if extra_header:
        header.update(extra_header)
    return ExperimentReport(header=header, rows=rows, totals=totals, notes=notes)
