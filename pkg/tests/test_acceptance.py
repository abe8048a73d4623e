"""Acceptance suite: one test per criterion, one printed pass/fail line each.

Every expected value here is produced by an independent oracle computed in
this file (quadrature, brute-force two-pass statistics, hand-worked confusion
matrices) or is an exact boundary from the binning definitions.
"""

import json
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from fundlens.cli import main as cli_main
from fundlens.core import (
    GoalBand,
    SuccessClass,
    assign_binary_class,
    assign_goal_band,
    assign_success_class,
    CategoryRegistry,
)
from fundlens.experiment import Setting, assemble, compute_metrics, stratified_kfold
from fundlens.features import build_feature_matrix, impute_with_indicators
from fundlens.forest import ForestConfig, fit
from fundlens.images import ImageQuality
from fundlens.ingest import _parse_record
from fundlens.stats import (
    bonferroni_threshold,
    incomplete_beta,
    pearson_r,
    screen,
    student_t_cdf,
    two_sample_t,
)
from fundlens.synth import Cell, Interaction, PlantedEffect, SynthSpec, generate_dataset
from fundlens.text import load_lexicon

integrate = pytest.importorskip("scipy.integrate")

EPS = 1e-9

_CAPMAN = None


@pytest.fixture(autouse=True)
def _expose_capture_manager(request):
    # Allows the verdict lines to reach the real terminal despite capture.
    global _CAPMAN
    _CAPMAN = request.config.pluginmanager.getplugin("capturemanager")
    yield


def _verdict(num, name, ok, detail=""):
    line = f"[ACCEPTANCE {num:02d}] {name}: {'PASS' if ok else 'FAIL'} {detail}".rstrip()
    if _CAPMAN is not None:
        with _CAPMAN.global_and_fixture_disabled():
            print(line, flush=True)
    else:
        print(line, flush=True)
    assert ok, line


# ---------------------------------------------------------------------------
# 1. binning boundary table
# ---------------------------------------------------------------------------

def test_criterion_01_binning_boundaries():
    t0 = time.monotonic()
    band_table = {
        8000.0: GoalBand.B1,
        8000.01: GoalBand.B2,
        40000.0: GoalBand.B2,
        68000.0: GoalBand.B3,
        100000.0: GoalBand.B4,
        100000.01: None,
    }
    class_table = {
        0.0: SuccessClass.HIGHLY_UNSUCCESSFUL,
        0.5: SuccessClass.HIGHLY_UNSUCCESSFUL,
        0.5 + EPS: SuccessClass.UNSUCCESSFUL,
        1.0: SuccessClass.UNSUCCESSFUL,
        1.25: SuccessClass.SUCCESSFUL,
        2.5: SuccessClass.HIGHLY_SUCCESSFUL,
        2.5 + EPS: None,
    }
    ok = all(assign_goal_band(g) is b for g, b in band_table.items())
    ok = ok and all(assign_success_class(r) is c for r, c in class_table.items())
    ok = ok and assign_binary_class(1.25) == -2 and assign_binary_class(1.25 + EPS) == 2
    elapsed = time.monotonic() - t0
    _verdict(1, "binning boundary table", ok and elapsed < 1.0, f"({elapsed:.3f}s)")


# ---------------------------------------------------------------------------
# 2. special-function numerics vs quadrature oracles
# ---------------------------------------------------------------------------

def test_criterion_02_numerics_vs_quadrature():
    t0 = time.monotonic()
    rng = np.random.default_rng(2024)
    worst_beta = 0.0
    for _ in range(1000):
        a = float(rng.uniform(0.5, 30.0))
        b = float(rng.uniform(0.5, 30.0))
        x = float(rng.uniform(0.0, 1.0))
        ln_b = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)

        def density(u, a=a, b=b, ln_b=ln_b):
            if not 0.0 < u < 1.0:
                return 0.0
            return math.exp((a - 1) * math.log(u) + (b - 1) * math.log1p(-u) - ln_b)

        want, _ = integrate.quad(density, 0.0, x, epsabs=1e-13, epsrel=1e-12, limit=300)
        worst_beta = max(worst_beta, abs(incomplete_beta(x, a, b) - want))

    worst_t = 0.0
    for df in list(range(1, 31)) + [50, 100]:
        ln_c = (math.lgamma((df + 1) / 2.0) - math.lgamma(df / 2.0)
                - 0.5 * math.log(df * math.pi))

        def t_pdf(u, df=df, ln_c=ln_c):
            return math.exp(ln_c - (df + 1) / 2.0 * math.log1p(u * u / df))

        for t in np.linspace(-6.0, 6.0, 25):
            half, _ = integrate.quad(t_pdf, 0.0, abs(float(t)), epsabs=1e-13, limit=200)
            want = 0.5 + half if t >= 0 else 0.5 - half
            worst_t = max(worst_t, abs(student_t_cdf(float(t), df) - want))

    worst_cauchy = max(
        abs(student_t_cdf(float(t), 1) - (0.5 + math.atan(float(t)) / math.pi))
        for t in np.linspace(-6.0, 6.0, 121)
    )
    elapsed = time.monotonic() - t0
    ok = worst_beta <= 1e-10 and worst_t <= 1e-8 and worst_cauchy <= 1e-12 and elapsed < 30
    _verdict(2, "incomplete beta / t CDF vs quadrature",
             ok, f"(beta {worst_beta:.1e}, t {worst_t:.1e}, cauchy {worst_cauchy:.1e}, {elapsed:.1f}s)")


# ---------------------------------------------------------------------------
# 3. pearson + t-test oracles
# ---------------------------------------------------------------------------

def test_criterion_03_pearson_and_ttest():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(3, 120))
        x = rng.normal(size=n)
        y = rng.normal(size=n) + rng.uniform(-1, 1) * x
        if np.std(x) == 0 or np.std(y) == 0:
            continue
        # independent two-pass oracle
        mx, my = x.mean(), y.mean()
        num = float(((x - mx) * (y - my)).sum())
        den = math.sqrt(float(((x - mx) ** 2).sum()) * float(((y - my) ** 2).sum()))
        worst = max(worst, abs(pearson_r(x, y) - num / den))

    res = two_sample_t([1, 2, 3], [4, 5, 6])
    hand_ok = abs(res.t - (-3.6742)) <= 1e-4 and res.df == 4

    worst_affine = 0.0
    for _ in range(100):
        x = rng.normal(size=40)
        y = rng.normal(size=40)
        r0 = pearson_r(x, y)
        a, b = float(rng.uniform(0.1, 50)), float(rng.uniform(-20, 20))
        worst_affine = max(worst_affine, abs(pearson_r(a * x + b, y) - r0))

    ok = worst <= 1e-12 and hand_ok and worst_affine <= 1e-12
    _verdict(3, "pearson/t-test oracles",
             ok, f"(pearson {worst:.1e}, t {res.t:.4f}, affine {worst_affine:.1e})")


# ---------------------------------------------------------------------------
# 4. Bonferroni replication
# ---------------------------------------------------------------------------

def test_criterion_04_bonferroni_thresholds():
    t92 = bonferroni_threshold(0.05, 92)
    t2 = bonferroni_threshold(0.05, 2)
    ok = f"{t92:.1E}" == "5.4E-04" and t2 == 0.025
    _verdict(4, "bonferroni thresholds", ok, f"({t92:.1E}, {t2})")


# ---------------------------------------------------------------------------
# 5. screening recovery + null calibration
# ---------------------------------------------------------------------------

def test_criterion_05_screening_recovery():
    t0 = time.monotonic()
    names = [f"f{i:02d}" for i in range(20)]
    hits = 0
    for seed in range(100):
        rng = np.random.default_rng([1000, seed])
        values = rng.normal(size=(300, 20))
        ratios = np.clip(1.0 - 0.3 * values[:, 7] + rng.normal(0, 0.05, 300), 0, 2.5)
        rows, _ = screen(values, names, ratios, band="B1", category="Other")
        if any(r.feature == "f07" and r.r < 0 for r in rows):
            hits += 1

    null_names = [f"g{i:02d}" for i in range(92)]
    false_runs = 0
    for seed in range(100):
        rng = np.random.default_rng([2000, seed])
        values = rng.normal(size=(300, 92))
        ratios = np.clip(rng.normal(1.1, 0.35, 300), 0, 2.5)
        rows, _ = screen(values, null_names, ratios, band="B1", category="Other")
        if rows:
            false_runs += 1
    elapsed = time.monotonic() - t0
    ok = hits >= 99 and false_runs / 100.0 <= 0.05 and elapsed < 120
    _verdict(5, "screening recovery / null calibration",
             ok, f"(hits {hits}/100, null FWER {false_runs}/100, {elapsed:.1f}s)")


# ---------------------------------------------------------------------------
# 6. forest sanity
# ---------------------------------------------------------------------------

def test_criterion_06_forest_sanity():
    t0 = time.monotonic()
    rng = np.random.default_rng(6)
    n, d = 400, 4
    X = np.vstack([rng.normal(0, 1, (n // 2, d)), rng.normal(3, 1, (n // 2, d))])
    y = np.array([-2] * (n // 2) + [2] * (n // 2))
    perm = rng.permutation(n)
    X, y = X[perm], y[perm]
    X_tr, y_tr, X_te, y_te = X[:300], y[:300], X[300:], y[300:]

    cfg = ForestConfig(n_estimators=100, seed=1)
    serial = fit(X_tr, y_tr, cfg, jobs=1)
    acc = float((serial.predict(X_te) == y_te).mean())

    parallel = fit(X_tr, y_tr, cfg, jobs=2)
    again = fit(X_tr, y_tr, cfg, jobs=1)
    blob = lambda m: json.dumps(m.to_json(), sort_keys=True)
    deterministic = blob(serial) == blob(parallel) == blob(again)

    proba = serial.predict_proba(X_te)
    proba_ok = bool(np.all(np.abs(proba.sum(axis=1) - 1.0) <= 1e-9))

    single = fit(X_tr, y_tr, ForestConfig(n_estimators=1, bootstrap=False,
                                          max_features=d, seed=0))
    memorized = bool((single.predict(X_tr) == y_tr).all())
    elapsed = time.monotonic() - t0
    ok = acc >= 0.95 and deterministic and proba_ok and memorized and elapsed < 60
    _verdict(6, "forest sanity",
             ok, f"(holdout {acc:.3f}, deterministic {deterministic}, {elapsed:.1f}s)")


# ---------------------------------------------------------------------------
# 7. fusion superiority on a planted XOR interaction
# ---------------------------------------------------------------------------

def test_criterion_07_fusion_superiority():
    t0 = time.monotonic()
    registry = CategoryRegistry.default()
    lexicon = load_lexicon()
    spec = SynthSpec(
        cells=[Cell("B1", "Other", 600)],
        interactions=[Interaction("insight", "text", "technical", "image_quality", 0.6)],
        base_ratio=1.25,
        noise_sigma=0.05,
        background_poisson=0.0,
        missing_city_rate=0.0,
    )
    accs = {"fused": [], "text": [], "image": []}
    for seed in range(10):
        ds = generate_dataset(spec, seed=seed, lexicon=lexicon, registry=registry)
        campaigns = [_parse_record(c, registry) for c in ds.campaigns]
        quality = {ref: ImageQuality(a, t, "precomputed") for ref, a, t in ds.quality_rows}
        matrix = build_feature_matrix(campaigns, registry, lexicon, quality_table=quality)
        y = np.array([assign_binary_class(c.ratio) for c in campaigns])
        folds, _ = stratified_kfold(y, k=10, seed=seed)
        test = folds[0]
        train = np.asarray(sorted(set(range(y.size)) - set(test.tolist())))
        for key, setting in (("fused", Setting.EARLY_FUSION_ALL),
                             ("text", Setting.LIWC),
                             ("image", Setting.IMAGE_QUALITY)):
            sub = assemble(matrix, setting)
            tr, te, _, _ = impute_with_indicators(sub.values[train], sub.values[test], sub.names)
            model = fit(tr, y[train], ForestConfig(n_estimators=100, seed=seed, max_features=32))
            accs[key].append(float((model.predict(te) == y[test]).mean()))
    med = {k: float(np.median(v)) for k, v in accs.items()}
    elapsed = time.monotonic() - t0
    ok = (med["fused"] >= max(med["text"], med["image"]) + 0.05
          and med["fused"] >= 0.85 and elapsed < 180)
    _verdict(7, "fusion superiority on planted interaction", ok,
             f"(fused {med['fused']:.3f}, text {med['text']:.3f}, "
             f"image {med['image']:.3f}, {elapsed:.0f}s)")


# ---------------------------------------------------------------------------
# 8. metrics identity
# ---------------------------------------------------------------------------

def test_criterion_08_metrics_identity():
    m = compute_metrics([-2, -2, 2, 2], [-2, 2, 2, 2])
    hand_ok = (abs(m.accuracy - 0.75) <= 1e-4
               and abs(m.precision - 0.8333) <= 1e-4
               and abs(m.f1 - 0.7333) <= 1e-4)
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(1000):
        labels = np.array([-2, -1, 1, 2])[: int(rng.integers(2, 5))]
        y_true = rng.choice(labels, size=int(rng.integers(5, 100)))
        y_pred = rng.choice(labels, size=y_true.size)
        mm = compute_metrics(y_true, y_pred)
        worst = max(worst, abs(mm.recall - mm.accuracy))
    ok = hand_ok and worst <= 1e-12
    _verdict(8, "metrics identity", ok, f"(hand {hand_ok}, recall-acc gap {worst:.1e})")


# ---------------------------------------------------------------------------
# 9. protocol structure: Table-shaped report, reruns, folds
# ---------------------------------------------------------------------------

def test_criterion_09_protocol_structure(tmp_path):
    spec = {
        "cells": [
            {"band": "B1", "category": "Other", "n": 300},
            {"band": "B2", "category": "Medical, Illness & Healing", "n": 300},
        ],
        "effects": [
            {"feature": "insight", "modality": "text", "slope": -0.25},
            {"feature": "technical", "modality": "image_quality", "slope": 0.2},
        ],
        "noise_sigma": 0.05,
    }
    spec_file = tmp_path / "spec.json"
    spec_file.write_text(json.dumps(spec))
    data, out = tmp_path / "data", tmp_path / "out"
    base = [
        "--seed", "21", "--out", str(out),
        "--campaigns", str(data / "campaigns.jsonl"),
        "--census", str(data / "census.csv"),
        "--quality-scores", str(data / "quality.csv"),
        "--sidecar-root", str(data),
    ]
    assert cli_main(["synth", *base, "--out", str(data), str(spec_file)]) == 0
    assert cli_main(["ingest", *base]) == 0
    assert cli_main(["featurize", *base]) == 0
    eval_args = ["evaluate", *base, "--trees", "20", "--cv-folds", "2",
                 "--settings", "Basic,LIWC,EarlyFusionAll"]
    assert cli_main(eval_args) == 0
    first = (out / "report.csv").read_bytes()
    assert cli_main(eval_args) == 0
    identical = (out / "report.csv").read_bytes() == first

    # Table shape: per-band setting rows plus a weighted total per setting,
    # with the total equal to the test-size weighted mean of the band rows.
    rows = [ln.split(",") for ln in first.decode().splitlines()
            if ln and not ln.startswith("#")][1:]
    bands = {r[0] for r in rows}
    shape_ok = {"B1", "B2", "Total(Weighted)"} <= bands
    weights_ok = True
    for setting in ("Basic", "LIWC", "EarlyFusionAll"):
        per_band = [r for r in rows if r[1] == setting and r[0].startswith("B")]
        total = next(r for r in rows if r[1] == setting and r[0] == "Total(Weighted)")
        n_test = np.array([float(r[3]) for r in per_band])
        acc = np.array([float(r[4]) for r in per_band])
        want = float((n_test * acc).sum() / n_test.sum())
        weights_ok = weights_ok and abs(float(total[4]) - want) <= 1e-6

    # stratified fold checks: disjoint cover, per-class balance within 1
    rng = np.random.default_rng(9)
    folds_ok = True
    for _ in range(20):
        y = rng.choice([-2, 2], size=int(rng.integers(40, 200)), p=[0.35, 0.65])
        folds, _ = stratified_kfold(y, k=10, seed=int(rng.integers(0, 1000)))
        got = sorted(np.concatenate(folds).tolist())
        folds_ok = folds_ok and got == list(range(y.size))
        for label in (-2, 2):
            per = [(y[f] == label).sum() for f in folds]
            folds_ok = folds_ok and max(per) - min(per) <= 1

    ok = identical and shape_ok and weights_ok and folds_ok
    _verdict(9, "protocol structure", ok,
             f"(rerun identical {identical}, shape {shape_ok}, weights {weights_ok})")


# ---------------------------------------------------------------------------
# 10. end-to-end pipeline on 5,000 campaigns
# ---------------------------------------------------------------------------

def test_criterion_10_end_to_end(tmp_path):
    t0 = time.monotonic()
    spec = {
        "cells": [
            {"band": "B1", "category": "Other", "n": 800},
            {"band": "B1", "category": "Medical, Illness & Healing", "n": 700},
            {"band": "B2", "category": "Animals & Pets", "n": 800},
            {"band": "B2", "category": "Funerals & Memorials", "n": 700},
            {"band": "B3", "category": "Non-Profits & Charities", "n": 1000},
            {"band": "B4", "category": "Education & Learning", "n": 1000},
        ],
        "effects": [
            {"feature": "insight", "modality": "text", "slope": -0.25},
            {"feature": "technical", "modality": "image_quality", "slope": 0.2},
            {"feature": "num_faces", "modality": "face", "slope": 0.15},
            {"feature": "city_population", "modality": "population", "slope": 0.1},
        ],
        "noise_sigma": 0.2,
    }
    spec_file = tmp_path / "spec.json"
    spec_file.write_text(json.dumps(spec))
    data, out = tmp_path / "data", tmp_path / "out"
    base = [
        "--seed", "42", "--out", str(out),
        "--campaigns", str(data / "campaigns.jsonl"),
        "--census", str(data / "census.csv"),
        "--quality-scores", str(data / "quality.csv"),
        "--sidecar-root", str(data),
    ]
    steps_ok = (
        cli_main(["synth", *base, "--out", str(data), str(spec_file)]) == 0
        and cli_main(["ingest", *base]) == 0
        and cli_main(["featurize", *base]) == 0
        and cli_main(["screen", *base]) == 0
        and cli_main(["evaluate", *base, "--trees", "100", "--max-depth", "8",
                      "--cv-folds", "2"]) == 0
        and cli_main(["report", *base]) == 0
    )
    artifacts = ["dataset.jsonl", "ingest_report.json", "features.csv",
                 "features_meta.json", "screening.csv", "report.csv",
                 "report.json", "goal_histogram.csv", "ratio_histogram.csv",
                 "summary.json"]
    missing = [a for a in artifacts if not (out / a).exists()]
    n_rows = len((out / "dataset.jsonl").read_text().strip().splitlines())
    elapsed = time.monotonic() - t0
    ok = steps_ok and not missing and n_rows == 5000 and elapsed < 600
    _verdict(10, "end-to-end pipeline (5000 campaigns)", ok,
             f"(rows {n_rows}, missing {missing}, {elapsed:.0f}s)")
