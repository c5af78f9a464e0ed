"""Synthetic scene generator: determinism, coverage geometry, hue fidelity."""

import math

import numpy as np
import pytest

from vegmap.imaging import HueRangeSet, hsv_channels
from vegmap.synthfield import (
    ClassSpec,
    GroundTruth,
    SceneSpec,
    expected_patch_area,
    generate_scene,
    majority_label,
)
from vegmap.tiling import TileSpec


def _cls(name, ranges, patches=0, weights=None, sat=0.6, val=0.6):
    rs = HueRangeSet.parse(ranges)
    return ClassSpec(
        name=name,
        hue_ranges=rs,
        weights=weights or [1.0] * len(rs.intervals),
        sat_mean=sat,
        sat_spread=0.05,
        val_mean=val,
        val_spread=0.05,
        patch_count=patches,
    )


def _spec(seed=3, **overrides):
    kwargs = dict(
        width=256,
        height=256,
        classes=[_cls("soil", "20-50"), _cls("weed", "90-130", patches=5)],
        background="soil",
        radius_mean=24.0,
        radius_spread=3.0,
        seed=seed,
    )
    kwargs.update(overrides)
    return SceneSpec(**kwargs)


def test_same_seed_reproduces_identical_bytes():
    one_img, one_gt = generate_scene(_spec(seed=9, noise_sigma=1.5, blur_radius=1, shadow_fraction=0.1))
    two_img, two_gt = generate_scene(_spec(seed=9, noise_sigma=1.5, blur_radius=1, shadow_fraction=0.1))
    np.testing.assert_array_equal(one_img.data, two_img.data)
    np.testing.assert_array_equal(one_gt.labels, two_gt.labels)
    other_img, other_gt = generate_scene(_spec(seed=10, noise_sigma=1.5, blur_radius=1, shadow_fraction=0.1))
    assert (other_img.data != one_img.data).any()
    assert (other_gt.labels != one_gt.labels).any()


def test_scene_matches_declared_geometry():
    img, gt = generate_scene(_spec())
    assert (img.height, img.width) == (256, 256)
    assert gt.labels.shape == (256, 256)
    assert gt.class_list == ["soil", "weed"]
    assert set(np.unique(gt.labels)) <= {0, 1}


def test_zero_patches_leaves_pure_background():
    spec = _spec(classes=[_cls("soil", "20-50"), _cls("weed", "90-130", patches=0)])
    _, gt = generate_scene(spec)
    assert (gt.labels == 0).all()


def test_coverage_follows_boolean_disk_model():
    # Disks overpaint sequentially, so the later class keeps its full Boolean
    # coverage q = 1 - exp(-n * pi * E[r^2] / A) and earlier classes keep
    # q * (1 - q_later). Edge clipping biases this by well under the tolerance.
    spec = SceneSpec(
        width=1024,
        height=1024,
        classes=[
            _cls("soil", "20-50"),
            _cls("first", "90-130", patches=200),
            _cls("second", "180-220", patches=200),
        ],
        background="soil",
        radius_mean=20.0,
        radius_spread=3.0,
        seed=42,
    )
    _, gt = generate_scene(spec)
    area = spec.width * spec.height
    q = 1.0 - math.exp(-200 * expected_patch_area(spec) / area)
    fractions = np.bincount(gt.labels.ravel(), minlength=3) / area
    assert fractions[2] == pytest.approx(q, abs=0.05)
    assert fractions[1] == pytest.approx(q * (1.0 - q), abs=0.05)
    assert fractions[0] == pytest.approx((1.0 - q) ** 2, abs=0.05)


def test_clean_scene_keeps_hue_inside_declared_ranges():
    spec = _spec(seed=5, shadow_fraction=0.15, noise_sigma=0.0, blur_radius=0)
    img, gt = generate_scene(spec)
    hue, _, _, _ = hsv_channels(img)
    for index, cspec in enumerate(spec.classes):
        sel = gt.labels == index
        ok = cspec.hue_ranges.membership(hue[sel])
        assert ok.mean() >= 0.99
        assert sel.sum() > 0


def test_shadow_count_and_darkening():
    # weight 0 on the second soil interval reserves it for shadows, so hue
    # membership identifies shadow pixels exactly on a clean scene
    soil = _cls("soil", "40-80,300-340", weights=[1.0, 0.0], val=0.62)
    spec = _spec(classes=[soil, _cls("weed", "90-130", patches=0)], shadow_fraction=0.25, seed=11)
    img, gt = generate_scene(spec)
    hue, _, val, _ = hsv_channels(img)
    shadow = HueRangeSet.parse("300-340").membership(hue)
    assert int(shadow.sum()) == round(0.25 * 256 * 256)
    assert val[shadow].mean() < val[~shadow].mean() - 0.1


def test_no_shadows_when_fraction_zero():
    soil = _cls("soil", "40-80,300-340", weights=[1.0, 0.0])
    spec = _spec(classes=[soil, _cls("weed", "90-130", patches=0)], shadow_fraction=0.0, seed=11)
    img, _ = generate_scene(spec)
    hue, _, _, _ = hsv_channels(img)
    assert not HueRangeSet.parse("300-340").membership(hue).any()


def test_majority_label_mode_and_tie():
    labels = np.zeros((4, 6), dtype=np.uint8)
    labels[:, 3:] = 1
    labels[0, 0] = 2
    gt = GroundTruth(labels, ["a", "b", "c"])
    assert majority_label(gt, TileSpec("i", 0, 0, 4)) == "a"  # 11 a, 4 b, 1 c
    assert majority_label(gt, TileSpec("i", 1, 0, 4)) == "a"  # 8 vs 8 tie, earlier class
    assert majority_label(gt, TileSpec("i", 3, 0, 2)) == "b"
    with pytest.raises(ValueError, match="exceeds"):
        majority_label(gt, TileSpec("i", 4, 0, 4))


def test_ground_truth_roundtrip(tmp_path):
    labels = np.arange(12, dtype=np.uint8).reshape(3, 4) % 3
    gt = GroundTruth(labels, ["a", "b", "c"], seed=7)
    gt.save(tmp_path / "gt.png", tmp_path / "gt.json")
    again = GroundTruth.load(tmp_path / "gt.png", tmp_path / "gt.json")
    np.testing.assert_array_equal(again.labels, labels)
    assert again.class_list == ["a", "b", "c"]
    assert again.seed == 7


def test_ground_truth_validation():
    with pytest.raises(ValueError, match="2-D"):
        GroundTruth(np.zeros(4, dtype=np.uint8), ["a"])
    with pytest.raises(ValueError, match="outside"):
        GroundTruth(np.full((2, 2), 3, dtype=np.uint8), ["a", "b"])


def test_scene_spec_json_roundtrip():
    spec = _spec(seed=4, shadow_fraction=0.2, noise_sigma=1.0, blur_radius=2)
    again = SceneSpec.from_json(spec.to_json())
    assert again.to_json() == spec.to_json()
    assert again.class_list == spec.class_list
    assert again.classes[1].patch_count == 5


def test_scene_spec_toml():
    text = """
width = 64
height = 48
background = "soil"
radius_mean = 9.0
seed = 13

[[classes]]
name = "soil"
hue_ranges = "20-50"
weights = [1.0]
sat_mean = 0.5
sat_spread = 0.05
val_mean = 0.6
val_spread = 0.05

[[classes]]
name = "weed"
hue_ranges = "90-130"
weights = [1.0]
sat_mean = 0.6
sat_spread = 0.05
val_mean = 0.6
val_spread = 0.05
patch_count = 2
"""
    spec = SceneSpec.from_toml(text)
    assert (spec.width, spec.height, spec.seed) == (64, 48, 13)
    assert spec.classes[1].patch_count == 2
    assert spec.radius_spread == 0.0 and spec.blur_radius == 0


def test_scene_spec_load_dispatches_on_suffix(tmp_path):
    spec = _spec(seed=2)
    (tmp_path / "scene.json").write_text(spec.to_json(), encoding="utf-8")
    assert SceneSpec.load(tmp_path / "scene.json").to_json() == spec.to_json()


def test_scene_spec_validation():
    with pytest.raises(ValueError, match="background"):
        _spec(background="mud")
    with pytest.raises(ValueError, match="unique"):
        _spec(classes=[_cls("soil", "20-50"), _cls("soil", "90-130")])
    with pytest.raises(ValueError, match="shadow_fraction"):
        _spec(shadow_fraction=1.5)
    with pytest.raises(ValueError, match="noise_sigma"):
        _spec(noise_sigma=-1.0)
    with pytest.raises(ValueError, match="do not fit"):
        _spec(radius_mean=200.0)
    with pytest.raises(ValueError, match="at least 1x1"):
        _spec(width=0)


def test_class_spec_validation():
    with pytest.raises(ValueError, match="weights"):
        _cls("soil", "20-50,60-80", weights=[1.0])
    with pytest.raises(ValueError, match="positive sum"):
        _cls("soil", "20-50", weights=[0.0])
    with pytest.raises(ValueError, match="sat_mean"):
        _cls("soil", "20-50", sat=1.5)
    with pytest.raises(ValueError, match="patch_count"):
        _cls("soil", "20-50", patches=-1)


def test_expected_patch_area_formula():
    spec = _spec(radius_mean=24.0, radius_spread=3.0)
    assert expected_patch_area(spec) == pytest.approx(math.pi * (24.0**2 + 3.0**2), abs=1e-12)
