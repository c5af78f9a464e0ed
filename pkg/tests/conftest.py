"""Shared fixtures: synthetic field scenes and datasets harvested from them.

Scene parameters are tuned so every tile size / coverage threshold cell in
the standard grid yields at least a few tiles per class; the seeds freeze
the exact pixels, so fixture-derived numbers are stable across runs.
"""

import numpy as np
import pytest

from vegmap.features import embed_tiles
from vegmap.imaging import CoverMask, HueRangeSet
from vegmap.learners import LabeledDataset
from vegmap.synthfield import ClassSpec, SceneSpec, generate_scene
from vegmap.tiling import SelectionParams, TileManifest, select_training_tiles

SCENE_SEED_A = 1201
SCENE_SEED_B = 1202

# (size, sth) grid exercised by the dataset-scale tests: tighter coverage
# thresholds pair with smaller tiles.
STH_GRID = {64: (0.98, 0.99, 0.999), 128: (0.8, 0.9, 0.95), 256: (0.5, 0.6, 0.7)}

ALL_KINDS = ("kNN", "LogisticRegression", "Tree", "RandomForest", "NeuralNetwork", "SVM")


def field_spec(seed: int) -> SceneSpec:
    """A 4-class field: bimodal bare soil plus three vegetation hue profiles."""
    return SceneSpec(
        width=1792,
        height=1792,
        classes=[
            ClassSpec("soil", HueRangeSet.parse("25-55,210-235"), [0.85, 0.15], 0.50, 0.08, 0.62, 0.08),
            ClassSpec("beet", HueRangeSet.parse("85-125"), [1.0], 0.65, 0.08, 0.55, 0.08, patch_count=10),
            ClassSpec("mustard", HueRangeSet.parse("56-84"), [1.0], 0.70, 0.06, 0.70, 0.07, patch_count=10),
            ClassSpec("goosefoot", HueRangeSet.parse("126-165"), [1.0], 0.55, 0.07, 0.50, 0.07, patch_count=10),
        ],
        background="soil",
        radius_mean=200.0,
        radius_spread=12.0,
        shadow_fraction=0.10,
        noise_sigma=2.0,
        blur_radius=1,
        seed=seed,
    )


def small_spec(seed: int = 77) -> SceneSpec:
    """Cheap 512px variant for unit tests that only need a plausible image."""
    return SceneSpec(
        width=512,
        height=512,
        classes=[
            ClassSpec("soil", HueRangeSet.parse("25-55,210-235"), [0.85, 0.15], 0.50, 0.08, 0.62, 0.08),
            ClassSpec("beet", HueRangeSet.parse("85-125"), [1.0], 0.65, 0.08, 0.55, 0.08, patch_count=4),
            ClassSpec("mustard", HueRangeSet.parse("56-84"), [1.0], 0.70, 0.06, 0.70, 0.07, patch_count=4),
        ],
        background="soil",
        radius_mean=90.0,
        radius_spread=8.0,
        shadow_fraction=0.10,
        noise_sigma=2.0,
        blur_radius=1,
        seed=seed,
    )


def select_all_classes(img, truth, size, sth, shifts=3, image_id="A") -> TileManifest:
    """Harvest tiles for every class using the ground-truth masks."""
    merged = TileManifest()
    for index, name in enumerate(truth.class_list):
        mask = CoverMask(name, truth.labels == index)
        params = SelectionParams(size=size, sth=sth, class_name=name, shifts=shifts)
        merged = merged.extend(select_training_tiles(img, mask, params, image_id=image_id))
    return merged


def dataset_from_scene(img, truth, size, sth, image_id="A") -> LabeledDataset:
    manifest = select_all_classes(img, truth, size, sth, image_id=image_id)
    matrix = embed_tiles({image_id: img}, [e.tile for e in manifest.entries])
    labels = [e.label for e in manifest.entries]
    return LabeledDataset.build(matrix, labels, sorted(set(labels)))


@pytest.fixture(scope="session")
def scene_a():
    return generate_scene(field_spec(SCENE_SEED_A))


@pytest.fixture(scope="session")
def scene_b():
    return generate_scene(field_spec(SCENE_SEED_B))


@pytest.fixture(scope="session")
def small_scene():
    return generate_scene(small_spec())


@pytest.fixture(scope="session")
def dataset_128(scene_a):
    """Labeled 67-feature dataset at 128 px, coverage 0.9; ~250 rows."""
    img, truth = scene_a
    return dataset_from_scene(img, truth, size=128, sth=0.9)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260813)
