"""Synthetic dataset generator with planted, manifest-recorded effects.

The real crawled dataset is not public, so every statistical claim in this
package is verified on generated data whose ground truth is known: each
campaign's success ratio is a clipped linear combination of planted feature
effects (plus optional multimodal interaction effects) and Gaussian noise,
and the manifest records every planted parameter for oracle checks.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, asdict
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .core import CategoryRegistry, GoalBand, MAX_RATIO
from .errors import SpecError
from .images import EMOTION_KEYS, FaceAttributes, write_sidecar
from .text import Lexicon

_STATES = ("NY", "CA", "TX", "IL", "WA", "OH", "FL", "PA", "GA", "MI")

# Latent-to-observable maps per supported planted feature: value = loc + scale * z.
_FEATURE_MAPS = {
    ("image_quality", "aesthetic"): (5.0, 0.8, 1.0, 10.0),
    ("image_quality", "technical"): (5.0, 0.8, 1.0, 10.0),
    ("face", "num_faces"): (2.0, 1.0, 0.0, 12.0),
    ("face", "age"): (30.0, 10.0, 1.0, 90.0),
    ("population", "city_population"): (11.0, 1.0, 6.0, 16.0),  # log scale
}
_TEXT_LOC, _TEXT_SCALE = 10.0, 3.0  # planted word-category percent = 10 + 3z


@dataclass(frozen=True)
class PlantedEffect:
    feature: str    # lexicon category, "aesthetic", "technical", "num_faces", "age", "city_population"
    modality: str   # text, image_quality, face, population
    slope: float


@dataclass(frozen=True)
class Interaction:
    """XOR-style multimodal effect invisible to per-feature linear screening."""

    a_feature: str
    a_modality: str
    b_feature: str
    b_modality: str
    magnitude: float


@dataclass(frozen=True)
class Cell:
    band: str
    category: str
    n: int


@dataclass
class SynthSpec:
    cells: list
    effects: list = field(default_factory=list)
    interactions: list = field(default_factory=list)
    base_ratio: float = 1.1
    noise_sigma: float = 0.35
    words_per_description: int = 120
    missing_city_rate: float = 0.05
    background_poisson: float = 2.0  # mean unplanted-category words per campaign

    @classmethod
    def from_dict(cls, payload: dict) -> "SynthSpec":
        try:
            cells = [Cell(**c) for c in payload["cells"]]
            effects = [PlantedEffect(**e) for e in payload.get("effects", [])]
            interactions = [Interaction(**i) for i in payload.get("interactions", [])]
        except (KeyError, TypeError) as exc:
            raise SpecError(f"malformed synthetic spec: {exc}") from exc
        return cls(
            cells=cells, effects=effects, interactions=interactions,
            base_ratio=float(payload.get("base_ratio", 1.1)),
            noise_sigma=float(payload.get("noise_sigma", 0.35)),
            words_per_description=int(payload.get("words_per_description", 120)),
            missing_city_rate=float(payload.get("missing_city_rate", 0.05)),
            background_poisson=float(payload.get("background_poisson", 2.0)),
        )

    @classmethod
    def from_file(cls, path) -> "SynthSpec":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def validate(self, registry: CategoryRegistry, lexicon: Lexicon) -> None:
        band_names = {b.name for b in GoalBand}
        for cell in self.cells:
            if cell.band not in band_names:
                raise SpecError(f"unknown band {cell.band!r}")
            if cell.category not in registry:
                raise SpecError(f"unknown category {cell.category!r}")
            if cell.n <= 0:
                raise SpecError(f"cell size must be positive, got {cell.n}")
        for eff in list(self.effects) + [
            PlantedEffect(i.a_feature, i.a_modality, 0.0) for i in self.interactions
        ] + [PlantedEffect(i.b_feature, i.b_modality, 0.0) for i in self.interactions]:
            if eff.modality == "text":
                if eff.feature not in lexicon.categories:
                    raise SpecError(f"planted text feature {eff.feature!r} not a lexicon category")
            elif (eff.modality, eff.feature) not in _FEATURE_MAPS:
                raise SpecError(f"unsupported planted feature {eff.modality}/{eff.feature}")
        if self.noise_sigma < 0 or self.words_per_description < 10:
            raise SpecError("noise_sigma must be >= 0 and words_per_description >= 10")


def _exclusive_words(lexicon: Lexicon, category: str):
    """Entry patterns belonging to this category only, to keep plants clean."""
    idx = lexicon.category_index(category)
    words = [e.pattern for e in lexicon.entries if e.categories == frozenset({idx})]
    if not words:
        words = [e.pattern for e in lexicon.entries if idx in e.categories]
    if not words:
        raise SpecError(f"lexicon has no entries for category {category!r}")
    return words


@dataclass
class SynthDataset:
    campaigns: list        # JSON-serializable campaign dicts
    census_rows: list      # (city, state, population)
    quality_rows: list     # (image_ref, aesthetic, technical)
    faces: dict            # image_ref -> list[FaceAttributes]
    manifest: dict


def _make_faces(rng, num_faces: int, mean_age: float):
    faces = []
    for _ in range(num_faces):
        raw = rng.gamma(2.0, 1.0, size=7)
        emotion = {k: float(100.0 * v / raw.sum()) for k, v in zip(EMOTION_KEYS, raw)}
        age = float(np.clip(rng.normal(mean_age, 3.0), 0.0, 100.0))
        faces.append(FaceAttributes(
            gender="female" if rng.random() < 0.5 else "male",
            age=age,
            beauty_female_rater=float(rng.uniform(20, 90)),
            beauty_male_rater=float(rng.uniform(20, 90)),
            smile=bool(rng.random() < 0.4),
            emotion=emotion,
        ))
    return faces


def generate_dataset(spec: SynthSpec, seed: int, lexicon: Lexicon,
                     registry: CategoryRegistry = None) -> SynthDataset:
    """Deterministic (spec, seed) -> dataset with a ground-truth manifest."""
    registry = registry or CategoryRegistry.default()
    spec.validate(registry, lexicon)
    rng = np.random.default_rng(seed)

    planted_text = [e for e in spec.effects if e.modality == "text"]
    interaction_feats = {(i.a_modality, i.a_feature) for i in spec.interactions} | {
        (i.b_modality, i.b_feature) for i in spec.interactions
    }
    latent_names = sorted({(e.modality, e.feature) for e in spec.effects}
                          | {(i.a_modality, i.a_feature) for i in spec.interactions}
                          | {(i.b_modality, i.b_feature) for i in spec.interactions})
    word_pool = {e.feature: _exclusive_words(lexicon, e.feature)
                 for e in planted_text}
    for inter in spec.interactions:
        for feat, mod in ((inter.a_feature, inter.a_modality), (inter.b_feature, inter.b_modality)):
            if mod == "text" and feat not in word_pool:
                word_pool[feat] = _exclusive_words(lexicon, feat)

    background_cats = [c for c in lexicon.categories if c not in word_pool]
    background_words = {c: _exclusive_words(lexicon, c) for c in background_cats}

    # Fixed city pool for campaigns without a planted population effect.
    city_pool = [(f"baseville {i}", _STATES[i % len(_STATES)], int(2_000 * (i + 1) ** 2))
                 for i in range(40)]
    census_rows = list(city_pool)

    campaigns = []
    quality_rows = []
    faces_by_ref = {}
    epoch = date(2019, 1, 1)
    cid = 0
    L = spec.words_per_description

    for cell in spec.cells:
        band = GoalBand[cell.band]
        for _ in range(cell.n):
            cid += 1
            ident = f"c{cid:06d}"
            # Features driving an interaction get bimodal latents: two well
            # separated clusters per feature, so the planted XOR is learnable
            # by the forest while each marginal stays uninformative;
            # linear-effect latents stay standard normal.
            z = {
                key: (
                    float(rng.choice([-1.0, 1.0]) + rng.normal(0.0, 0.25))
                    if key in interaction_feats
                    else float(rng.standard_normal())
                )
                for key in latent_names
            }

            # Realize observables, tracking the effective standardized value
            # actually recoverable from the files (quantization included).
            z_hat = {}
            word_counts = {}
            for (mod, feat) in latent_names:
                if mod == "text":
                    v = float(np.clip(_TEXT_LOC + _TEXT_SCALE * z[(mod, feat)], 0.0, 40.0))
                    cnt = int(round(v / 100.0 * L))
                    word_counts[feat] = cnt
                    z_hat[(mod, feat)] = (100.0 * cnt / L - _TEXT_LOC) / _TEXT_SCALE
                else:
                    loc, scale, lo, hi = _FEATURE_MAPS[(mod, feat)]
                    v = float(np.clip(loc + scale * z[(mod, feat)], lo, hi))
                    z_hat[(mod, feat)] = (v - loc) / scale

            ratio = spec.base_ratio + float(rng.normal(0.0, spec.noise_sigma))
            for eff in spec.effects:
                ratio += eff.slope * z_hat[(eff.modality, eff.feature)]
            for inter in spec.interactions:
                xor = (z_hat[(inter.a_modality, inter.a_feature)] > 0.0) != (
                    z_hat[(inter.b_modality, inter.b_feature)] > 0.0)
                ratio += inter.magnitude if xor else -inter.magnitude
            ratio = float(np.clip(ratio, 0.0, MAX_RATIO))

            # Text: planted counts first, background categories, then filler.
            tokens = []
            for feat, cnt in word_counts.items():
                pool = word_pool[feat]
                tokens.extend(str(pool[rng.integers(0, len(pool))]).rstrip("*") or "word"
                              for _ in range(cnt))
            for cat in background_cats:
                pool = background_words[cat]
                for _ in range(int(rng.poisson(spec.background_poisson)) if spec.background_poisson > 0 else 0):
                    tokens.append(str(pool[rng.integers(0, len(pool))]).rstrip("*"))
            while len(tokens) < L - 2:
                tokens.append(f"zq{rng.integers(0, 500)}")
            tokens = tokens[: L - 2]
            rng.shuffle(tokens)
            title = f"zt{cid} zfiller"
            description = " ".join(tokens)

            # Image quality scores (precomputed table route).
            ref = f"images/img_{ident}.ppm"
            if ("image_quality", "aesthetic") in z_hat:
                loc, scale, lo, hi = _FEATURE_MAPS[("image_quality", "aesthetic")]
                aesthetic = float(np.clip(loc + scale * z[("image_quality", "aesthetic")], lo, hi))
            else:
                aesthetic = float(np.clip(rng.normal(5.0, 0.8), 1.0, 10.0))
            if ("image_quality", "technical") in z_hat:
                loc, scale, lo, hi = _FEATURE_MAPS[("image_quality", "technical")]
                technical = float(np.clip(loc + scale * z[("image_quality", "technical")], lo, hi))
            else:
                technical = float(np.clip(rng.normal(5.0, 0.8), 1.0, 10.0))
            quality_rows.append((ref, aesthetic, technical))

            # Faces.
            if ("face", "num_faces") in z_hat:
                loc, scale, lo, hi = _FEATURE_MAPS[("face", "num_faces")]
                num_faces = int(np.clip(round(loc + scale * z[("face", "num_faces")]), lo, hi))
                z_hat[("face", "num_faces")] = (num_faces - loc) / scale
            else:
                num_faces = int(rng.poisson(1.2))
            if ("face", "age") in z_hat:
                loc, scale, lo, hi = _FEATURE_MAPS[("face", "age")]
                mean_age = float(np.clip(loc + scale * z[("face", "age")], lo, hi))
                if num_faces == 0:
                    num_faces = 1
            else:
                mean_age = float(rng.uniform(5, 70))
            faces_by_ref[ref] = _make_faces(rng, num_faces, mean_age)

            # Location / population.
            if ("population", "city_population") in z_hat:
                logpop = float(np.clip(11.0 + z[("population", "city_population")], 6.0, 16.0))
                pop = max(1, int(round(math.exp(logpop))))
                city, state = f"plantcity {ident}", _STATES[cid % len(_STATES)]
                census_rows.append((city, state, pop))
                z_hat[("population", "city_population")] = math.log(pop) - 11.0
            elif rng.random() < spec.missing_city_rate:
                city, state = f"ghosttown {ident}", _STATES[cid % len(_STATES)]
            else:
                city, state, _ = city_pool[int(rng.integers(0, len(city_pool)))]

            goal = float(int(rng.uniform(band.low + 1.0, band.high)))
            campaigns.append({
                "id": ident,
                "launch_date": (epoch + timedelta(days=int(rng.integers(0, 322)))).isoformat(),
                "city": city,
                "state": state,
                "country": "US",
                "title": title,
                "description": description,
                "category": cell.category,
                "goal_amount": goal,
                "raised_amount": round(ratio * goal, 2),
                "num_followers": int(rng.poisson(20)),
                "num_shares": int(rng.poisson(40)),
                "num_donors": int(rng.poisson(15)),
                "cover_image": ref,
            })

    manifest = {
        "seed": seed,
        "spec": {
            "cells": [asdict(c) for c in spec.cells],
            "effects": [asdict(e) for e in spec.effects],
            "interactions": [asdict(i) for i in spec.interactions],
            "base_ratio": spec.base_ratio,
            "noise_sigma": spec.noise_sigma,
            "words_per_description": spec.words_per_description,
            "missing_city_rate": spec.missing_city_rate,
            "background_poisson": spec.background_poisson,
        },
        "n_campaigns": len(campaigns),
        "expected_signs": {f"{e.modality}/{e.feature}": (1 if e.slope > 0 else -1)
                           for e in spec.effects if e.slope != 0},
    }
    return SynthDataset(
        campaigns=campaigns, census_rows=census_rows,
        quality_rows=quality_rows, faces=faces_by_ref, manifest=manifest,
    )


def write_dataset(ds: SynthDataset, outdir) -> dict:
    """Write campaigns.jsonl, census.csv, quality.csv, face sidecars, manifest.json."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {
        "campaigns": outdir / "campaigns.jsonl",
        "census": outdir / "census.csv",
        "quality": outdir / "quality.csv",
        "manifest": outdir / "manifest.json",
        "sidecar_root": outdir,
    }
    with paths["campaigns"].open("w", encoding="utf-8") as fh:
        for c in ds.campaigns:
            fh.write(json.dumps(c, sort_keys=True) + "\n")
    with paths["census"].open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["city", "state", "population"])
        for city, state, pop in ds.census_rows:
            writer.writerow([city, state, pop])
    with paths["quality"].open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["image_ref", "aesthetic", "technical"])
        for ref, a, t in ds.quality_rows:
            writer.writerow([ref, f"{a:.6f}", f"{t:.6f}"])
    for ref, faces in ds.faces.items():
        write_sidecar(outdir, ref, faces)
    paths["manifest"].write_text(json.dumps(ds.manifest, sort_keys=True, indent=1), encoding="utf-8")
    return {k: str(v) for k, v in paths.items()}
