"""Campaign feature matrix assembly across all modalities.

Columns are modality-tagged; NaN marks a missing value and each modality
with possible misses carries an explicit missingness indicator, so nothing
is ever silently fabricated.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .core import Campaign, CategoryRegistry
from .errors import EmptySetting, SchemaError, ShapeError
from .images import EMOTION_KEYS, aggregate_face_features
from .ingest import PopulationTable
from .text import Lexicon, campaign_text, clout_surrogate, extract


@dataclass
class FeatureMatrix:
    """Dense named feature matrix; rows align with campaign ids."""

    ids: list
    names: list
    modalities: list
    values: np.ndarray  # (n, d) float64, NaN = missing

    def __post_init__(self):
        if len(self.names) != len(self.modalities):
            raise ShapeError("names and modalities must align")
        if self.values.shape != (len(self.ids), len(self.names)):
            raise ShapeError(
                f"values shape {self.values.shape} does not match "
                f"{len(self.ids)} ids x {len(self.names)} names"
            )

    def select_modalities(self, modalities) -> "FeatureMatrix":
        keep = [j for j, m in enumerate(self.modalities) if m in modalities]
        if not keep:
            raise EmptySetting(f"no columns for modalities {tuple(modalities)}")
        return FeatureMatrix(
            ids=self.ids,
            names=[self.names[j] for j in keep],
            modalities=[self.modalities[j] for j in keep],
            values=self.values[:, keep],
        )

    def select_names(self, names) -> "FeatureMatrix":
        wanted = set(names)
        keep = [j for j, n in enumerate(self.names) if n in wanted]
        if not keep:
            raise EmptySetting("no columns left after name filter")
        return FeatureMatrix(
            ids=self.ids,
            names=[self.names[j] for j in keep],
            modalities=[self.modalities[j] for j in keep],
            values=self.values[:, keep],
        )

    def take_rows(self, rows) -> "FeatureMatrix":
        rows = np.asarray(rows, dtype=np.intp)
        return FeatureMatrix(
            ids=[self.ids[i] for i in rows],
            names=self.names,
            modalities=self.modalities,
            values=self.values[rows],
        )

    def column(self, name: str) -> np.ndarray:
        try:
            j = self.names.index(name)
        except ValueError:
            raise SchemaError(f"no such feature column: {name!r}") from None
        return self.values[:, j]

    def save(self, csv_path, meta_path) -> None:
        with Path(csv_path).open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["id", *self.names])
            for i, cid in enumerate(self.ids):
                row = [cid]
                for v in self.values[i]:
                    row.append("" if math.isnan(v) else f"{v:.10g}")
                writer.writerow(row)
        meta = {"modalities": {n: m for n, m in zip(self.names, self.modalities)}}
        Path(meta_path).write_text(json.dumps(meta, sort_keys=True, indent=1), encoding="utf-8")

    @classmethod
    def load(cls, csv_path, meta_path) -> "FeatureMatrix":
        meta = json.loads(Path(meta_path).read_text(encoding="utf-8"))
        mod_map = meta["modalities"]
        with Path(csv_path).open("r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if not header or header[0] != "id":
                raise SchemaError(f"feature CSV must start with an id column: {csv_path}")
            names = header[1:]
            ids = []
            data = []
            for row in reader:
                ids.append(row[0])
                data.append([float(v) if v != "" else math.nan for v in row[1:]])
        modalities = []
        for n in names:
            if n not in mod_map:
                raise SchemaError(f"feature {n!r} missing from modality metadata")
            modalities.append(mod_map[n])
        values = np.asarray(data, dtype=np.float64) if data else np.zeros((0, len(names)))
        return cls(ids=ids, names=names, modalities=modalities, values=values)


def _state_code(state: str) -> float:
    s = state.strip().upper()
    if len(s) != 2 or not s.isalpha():
        return math.nan
    return float((ord(s[0]) - 65) * 26 + (ord(s[1]) - 65))


def build_feature_matrix(
    campaigns,
    registry: CategoryRegistry,
    lexicon: Lexicon,
    population_table: Optional[PopulationTable] = None,
    quality_table: Optional[dict] = None,
    face_provider=None,
) -> FeatureMatrix:
    """One wide matrix per dataset: basic, population, text, image_quality, face."""
    names: list = []
    modalities: list = []

    def col(name, modality):
        names.append(name)
        modalities.append(modality)

    col("launch_year", "basic")
    col("launch_month", "basic")
    col("launch_dow", "basic")
    col("state_code", "basic")
    for label in registry.labels:
        col(f"cat_{label}", "basic")
    col("city_population", "population")
    col("population_missing", "population")
    col("word_count", "text")
    for cat in lexicon.categories:
        col(f"liwc_{cat}", "text")
    has_clout = all(c in lexicon.categories for c in ("we", "you", "i"))
    if has_clout:
        col("clout_surrogate", "text")
    col("aesthetic_score", "image_quality")
    col("technical_score", "image_quality")
    col("image_quality_missing", "image_quality")
    col("num_faces", "face")
    col("any_smile", "face")
    col("is_child", "face")
    col("face_mean_age", "face")
    col("face_mean_beauty", "face")
    for k in EMOTION_KEYS:
        col(f"face_emotion_{k}", "face")
    col("face_missing", "face")

    n, d = len(campaigns), len(names)
    values = np.full((n, d), math.nan)
    ids = []
    jdx = {name: j for j, name in enumerate(names)}

    for i, c in enumerate(campaigns):
        ids.append(c.id)
        values[i, jdx["launch_year"]] = c.launch_date.year
        values[i, jdx["launch_month"]] = c.launch_date.month
        values[i, jdx["launch_dow"]] = c.launch_date.weekday()
        values[i, jdx["state_code"]] = _state_code(c.state)
        for label in registry.labels:
            values[i, jdx[f"cat_{label}"]] = 1.0 if c.category == label else 0.0

        if population_table is not None:
            pop = population_table.lookup(c.city, c.state)
            values[i, jdx["population_missing"]] = 0.0 if pop is not None else 1.0
            if pop is not None:
                values[i, jdx["city_population"]] = float(pop)

        tf = extract(campaign_text(c.title, c.description), lexicon)
        values[i, jdx["word_count"]] = tf.word_count
        for cat, pct in tf.percentages.items():
            values[i, jdx[f"liwc_{cat}"]] = pct
        if has_clout:
            values[i, jdx["clout_surrogate"]] = clout_surrogate(tf)

        if c.cover_image is not None and quality_table is not None:
            q = quality_table.get(c.cover_image)
            if q is not None:
                values[i, jdx["aesthetic_score"]] = q.aesthetic_score
                values[i, jdx["technical_score"]] = q.technical_score
                values[i, jdx["image_quality_missing"]] = 0.0
            else:
                values[i, jdx["image_quality_missing"]] = 1.0
        else:
            values[i, jdx["image_quality_missing"]] = 1.0

        if c.cover_image is not None and face_provider is not None:
            faces = face_provider.analyze(c.cover_image)
            agg = aggregate_face_features(faces)
            values[i, jdx["face_missing"]] = 0.0
            values[i, jdx["num_faces"]] = agg.num_faces
            values[i, jdx["any_smile"]] = agg.any_smile
            values[i, jdx["is_child"]] = agg.is_child
            if agg.num_faces > 0:
                values[i, jdx["face_mean_age"]] = agg.mean_age
                values[i, jdx["face_mean_beauty"]] = agg.mean_beauty
                for k in EMOTION_KEYS:
                    values[i, jdx[f"face_emotion_{k}"]] = agg.mean_emotion[k]
        else:
            values[i, jdx["face_missing"]] = 1.0

    return FeatureMatrix(ids=ids, names=names, modalities=modalities, values=values)


def impute_with_indicators(train_values: np.ndarray, apply_values: np.ndarray, names):
    """Median-impute NaNs using training medians; append an indicator column
    per feature that has any missing training or apply value.

    Returns (train_imputed, apply_imputed, out_names, medians).
    """
    train = np.array(train_values, dtype=np.float64, copy=True)
    apply_ = np.array(apply_values, dtype=np.float64, copy=True)
    out_names = list(names)
    medians = {}
    extra_train = []
    extra_apply = []
    for j, name in enumerate(names):
        col_t = train[:, j]
        col_a = apply_[:, j]
        nan_t = np.isnan(col_t)
        nan_a = np.isnan(col_a)
        if not nan_t.any() and not nan_a.any():
            continue
        finite = col_t[~nan_t]
        med = float(np.median(finite)) if finite.size else 0.0
        medians[name] = med
        col_t[nan_t] = med
        col_a[nan_a] = med
        extra_train.append(nan_t.astype(np.float64))
        extra_apply.append(nan_a.astype(np.float64))
        out_names.append(f"{name}__missing")
    if extra_train:
        train = np.column_stack([train, *extra_train])
        apply_ = np.column_stack([apply_, *extra_apply])
    return train, apply_, out_names, medians


def apply_imputation(values: np.ndarray, names, medians: dict, out_names):
    """Re-apply stored training medians at prediction time."""
    vals = np.array(values, dtype=np.float64, copy=True)
    extra = []
    base = {n: j for j, n in enumerate(names)}
    for name in out_names:
        if name in base:
            continue
        if not name.endswith("__missing"):
            raise SchemaError(f"model expects unknown feature {name!r}")
        src = name[: -len("__missing")]
        if src not in base:
            raise SchemaError(f"model expects unknown feature {name!r}")
        extra.append(np.isnan(vals[:, base[src]]).astype(np.float64))
    for name, med in medians.items():
        j = base.get(name)
        if j is None:
            raise SchemaError(f"stored median for unknown feature {name!r}")
        col = vals[:, j]
        col[np.isnan(col)] = med
    if extra:
        vals = np.column_stack([vals, *extra])
    if np.isnan(vals).any():
        bad = [names[j] for j in np.where(np.isnan(vals).any(axis=0))[0] if j < len(names)]
        raise SchemaError(f"missing values remain after imputation in columns {bad}")
    return vals
