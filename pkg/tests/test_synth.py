import json
from pathlib import Path

import numpy as np
import pytest

from fundlens.core import GoalBand, assign_goal_band
from fundlens.errors import SpecError
from fundlens.features import build_feature_matrix
from fundlens.images import StubFaceProvider, load_precomputed_quality
from fundlens.ingest import load_campaigns, load_population_table
from fundlens.stats import pearson_r
from fundlens.synth import Cell, Interaction, PlantedEffect, SynthSpec, generate_dataset, write_dataset


def _spec(**kw):
    base = dict(
        cells=[Cell("B1", "Other", 150), Cell("B2", "Animals & Pets", 120)],
        effects=[
            PlantedEffect("insight", "text", -0.25),
            PlantedEffect("technical", "image_quality", 0.2),
            PlantedEffect("num_faces", "face", 0.15),
        ],
        noise_sigma=0.05,
    )
    base.update(kw)
    return SynthSpec(**base)


def test_spec_from_dict_roundtrip(registry, lexicon):
    payload = {
        "cells": [{"band": "B1", "category": "Other", "n": 10}],
        "effects": [{"feature": "we", "modality": "text", "slope": 0.1}],
        "interactions": [
            {"a_feature": "insight", "a_modality": "text",
             "b_feature": "technical", "b_modality": "image_quality",
             "magnitude": 0.5}
        ],
        "noise_sigma": 0.1,
    }
    spec = SynthSpec.from_dict(payload)
    spec.validate(registry, lexicon)
    assert spec.cells[0].n == 10
    assert spec.interactions[0].magnitude == 0.5


def test_spec_validation_errors(registry, lexicon):
    with pytest.raises(SpecError):
        _spec(cells=[Cell("B9", "Other", 5)]).validate(registry, lexicon)
    with pytest.raises(SpecError):
        _spec(cells=[Cell("B1", "Bogus", 5)]).validate(registry, lexicon)
    with pytest.raises(SpecError):
        _spec(effects=[PlantedEffect("notacategory", "text", 0.1)]).validate(registry, lexicon)
    with pytest.raises(SpecError):
        _spec(effects=[PlantedEffect("blur", "image_quality", 0.1)]).validate(registry, lexicon)
    with pytest.raises(SpecError):
        SynthSpec.from_dict({"cells": [{"band": "B1"}]})


def test_generate_respects_cells_and_bands(registry, lexicon):
    ds = generate_dataset(_spec(), seed=3, lexicon=lexicon, registry=registry)
    assert ds.manifest["n_campaigns"] == 270
    per_cell = {}
    for c in ds.campaigns:
        band = assign_goal_band(c["goal_amount"])
        per_cell[(band.name, c["category"])] = per_cell.get((band.name, c["category"]), 0) + 1
        assert 0.0 <= c["raised_amount"] / c["goal_amount"] <= 2.5 + 1e-9
    assert per_cell == {("B1", "Other"): 150, ("B2", "Animals & Pets"): 120}


def test_generate_is_deterministic(registry, lexicon):
    a = generate_dataset(_spec(), seed=9, lexicon=lexicon, registry=registry)
    b = generate_dataset(_spec(), seed=9, lexicon=lexicon, registry=registry)
    assert a.campaigns == b.campaigns
    assert a.quality_rows == b.quality_rows
    c = generate_dataset(_spec(), seed=10, lexicon=lexicon, registry=registry)
    assert a.campaigns != c.campaigns


def test_manifest_records_expected_signs(registry, lexicon):
    ds = generate_dataset(_spec(), seed=1, lexicon=lexicon, registry=registry)
    assert ds.manifest["expected_signs"] == {
        "text/insight": -1,
        "image_quality/technical": 1,
        "face/num_faces": 1,
    }
    assert ds.manifest["seed"] == 1
    assert ds.manifest["spec"]["noise_sigma"] == 0.05


def test_planted_effects_visible_in_features(registry, lexicon, tmp_path):
    ds = generate_dataset(_spec(), seed=7, lexicon=lexicon, registry=registry)
    paths = write_dataset(ds, tmp_path)
    campaigns, report = load_campaigns(paths["campaigns"], registry)
    assert report.accepted == 270
    matrix = build_feature_matrix(
        campaigns, registry, lexicon,
        population_table=load_population_table(paths["census"]),
        quality_table=load_precomputed_quality(paths["quality"]),
        face_provider=StubFaceProvider(paths["sidecar_root"]),
    )
    ratios = np.array([c.ratio for c in campaigns])
    # each planted effect shows up with the manifest-recorded sign
    assert pearson_r(matrix.column("liwc_insight"), ratios) < -0.5
    assert pearson_r(matrix.column("technical_score"), ratios) > 0.5
    assert pearson_r(matrix.column("num_faces"), ratios) > 0.3
    # an unplanted text category stays near zero
    assert abs(pearson_r(matrix.column("liwc_family"), ratios)) < 0.25


def test_xor_interaction_hides_from_linear_screen(registry, lexicon, tmp_path):
    spec = SynthSpec(
        cells=[Cell("B1", "Other", 300)],
        interactions=[Interaction("insight", "text", "technical", "image_quality", 0.6)],
        base_ratio=1.25,
        noise_sigma=0.05,
    )
    ds = generate_dataset(spec, seed=5, lexicon=lexicon, registry=registry)
    paths = write_dataset(ds, tmp_path)
    campaigns, _ = load_campaigns(paths["campaigns"], registry)
    matrix = build_feature_matrix(
        campaigns, registry, lexicon,
        quality_table=load_precomputed_quality(paths["quality"]),
        face_provider=StubFaceProvider(paths["sidecar_root"]),
    )
    ratios = np.array([c.ratio for c in campaigns])
    # marginally the two interacting features are (nearly) uncorrelated with
    # the outcome, but their XOR determines it
    assert abs(pearson_r(matrix.column("liwc_insight"), ratios)) < 0.2
    assert abs(pearson_r(matrix.column("technical_score"), ratios)) < 0.2
    a = matrix.column("liwc_insight") > np.median(matrix.column("liwc_insight"))
    b = matrix.column("technical_score") > np.median(matrix.column("technical_score"))
    xor_corr = pearson_r((a ^ b).astype(float), ratios)
    assert abs(xor_corr) > 0.8


def test_write_dataset_outputs(registry, lexicon, tmp_path):
    ds = generate_dataset(_spec(cells=[Cell("B1", "Other", 20)]), seed=2,
                          lexicon=lexicon, registry=registry)
    paths = write_dataset(ds, tmp_path)
    for key in ("campaigns", "census", "quality", "manifest"):
        assert Path(paths[key]).exists()
    manifest = json.loads(Path(paths["manifest"]).read_text())
    assert manifest["n_campaigns"] == 20
    # every campaign with faces has a readable sidecar
    provider = StubFaceProvider(paths["sidecar_root"])
    refs = [c["cover_image"] for c in ds.campaigns if c["cover_image"]]
    assert any(provider.analyze(ref) for ref in refs)


def test_emotions_sum_to_100(registry, lexicon):
    ds = generate_dataset(_spec(cells=[Cell("B1", "Other", 30)]), seed=4,
                          lexicon=lexicon, registry=registry)
    for faces in ds.faces.values():
        for face in faces:
            assert sum(face.emotion.values()) == pytest.approx(100.0, abs=0.5)
