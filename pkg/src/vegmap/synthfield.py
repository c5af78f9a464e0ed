"""Seeded synthetic field scenes with pixel ground truth.

Stands in for field imagery in tests: soil background, disk-union vegetation
patches sampled from declared HSV distributions, optional soil shadows,
noise, and blur. Labels always record the painted (pre-noise) class.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image
from scipy.ndimage import uniform_filter

from .imaging import HueRangeSet, RgbImage, hsv_to_rgb_array
from .tiling import TileSpec

# Sampled S and V are floored so 8-bit quantization moves hue by well under
# this margin; hues are kept this far inside their interval ends.
HUE_MARGIN = 4.0
SV_FLOOR = 0.3
SHADOW_VALUE_FACTOR = 0.55
SHADOW_SAT_FLOOR = 0.35


@dataclass
class ClassSpec:
    name: str
    hue_ranges: HueRangeSet
    weights: list[float]
    sat_mean: float
    sat_spread: float
    val_mean: float
    val_spread: float
    patch_count: int = 0

    def __post_init__(self):
        n = len(self.hue_ranges.intervals)
        if len(self.weights) != n:
            raise ValueError(f"class {self.name!r}: {n} hue intervals but {len(self.weights)} weights")
        if any(w < 0 for w in self.weights) or sum(self.weights) <= 0:
            raise ValueError(f"class {self.name!r}: weights must be non-negative with a positive sum")
        for what, mean in (("sat_mean", self.sat_mean), ("val_mean", self.val_mean)):
            if not 0.0 <= mean <= 1.0:
                raise ValueError(f"class {self.name!r}: {what} must be in [0, 1], got {mean}")
        if self.sat_spread < 0 or self.val_spread < 0:
            raise ValueError(f"class {self.name!r}: spreads must be >= 0")
        if self.patch_count < 0:
            raise ValueError(f"class {self.name!r}: patch_count must be >= 0")


@dataclass
class SceneSpec:
    width: int
    height: int
    classes: list[ClassSpec]
    background: str
    radius_mean: float
    radius_spread: float = 0.0
    shadow_fraction: float = 0.0
    noise_sigma: float = 0.0
    blur_radius: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"scene must be at least 1x1, got {self.width}x{self.height}")
        names = [c.name for c in self.classes]
        if len(set(names)) != len(names):
            raise ValueError("class names must be unique")
        if self.background not in names:
            raise ValueError(f"background {self.background!r} is not a declared class")
        if not 0.0 <= self.shadow_fraction <= 1.0:
            raise ValueError(f"shadow_fraction must be in [0, 1], got {self.shadow_fraction}")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if self.blur_radius < 0:
            raise ValueError(f"blur_radius must be >= 0, got {self.blur_radius}")
        if self.radius_mean < 1 or self.radius_spread < 0:
            raise ValueError("radius_mean must be >= 1 and radius_spread >= 0")
        if 2 * self.radius_mean > min(self.width, self.height):
            raise ValueError(
                f"patches of radius {self.radius_mean} do not fit a {self.width}x{self.height} scene"
            )

    @property
    def class_list(self) -> list[str]:
        return [c.name for c in self.classes]

    def to_json(self) -> str:
        return json.dumps(
            {
                "width": self.width,
                "height": self.height,
                "background": self.background,
                "radius_mean": self.radius_mean,
                "radius_spread": self.radius_spread,
                "shadow_fraction": self.shadow_fraction,
                "noise_sigma": self.noise_sigma,
                "blur_radius": self.blur_radius,
                "seed": self.seed,
                "classes": [
                    {
                        "name": c.name,
                        "hue_ranges": c.hue_ranges.to_text(),
                        "weights": c.weights,
                        "sat_mean": c.sat_mean,
                        "sat_spread": c.sat_spread,
                        "val_mean": c.val_mean,
                        "val_spread": c.val_spread,
                        "patch_count": c.patch_count,
                    }
                    for c in self.classes
                ],
            },
            sort_keys=True,
        )

    @classmethod
    def from_dict(cls, raw: dict) -> "SceneSpec":
        classes = [
            ClassSpec(
                name=str(c["name"]),
                hue_ranges=HueRangeSet.parse(c["hue_ranges"]),
                weights=[float(w) for w in c["weights"]],
                sat_mean=float(c["sat_mean"]),
                sat_spread=float(c["sat_spread"]),
                val_mean=float(c["val_mean"]),
                val_spread=float(c["val_spread"]),
                patch_count=int(c.get("patch_count", 0)),
            )
            for c in raw["classes"]
        ]
        return cls(
            width=int(raw["width"]),
            height=int(raw["height"]),
            classes=classes,
            background=str(raw["background"]),
            radius_mean=float(raw["radius_mean"]),
            radius_spread=float(raw.get("radius_spread", 0.0)),
            shadow_fraction=float(raw.get("shadow_fraction", 0.0)),
            noise_sigma=float(raw.get("noise_sigma", 0.0)),
            blur_radius=int(raw.get("blur_radius", 0)),
            seed=int(raw.get("seed", 0)),
        )

    @classmethod
    def from_json(cls, text: str) -> "SceneSpec":
        return cls.from_dict(json.loads(text))

    @classmethod
    def from_toml(cls, text: str) -> "SceneSpec":
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        return cls.from_dict(tomllib.loads(text))

    @classmethod
    def load(cls, path: str | Path) -> "SceneSpec":
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        return cls.from_toml(text) if path.suffix.lower() == ".toml" else cls.from_json(text)


@dataclass
class GroundTruth:
    """Row-major class index per pixel, aligned with the scene's class list."""

    labels: np.ndarray
    class_list: list[str]
    seed: int = 0

    def __post_init__(self):
        arr = np.asarray(self.labels)
        if arr.ndim != 2:
            raise ValueError(f"labels must be 2-D, got shape {arr.shape}")
        if arr.size and int(arr.max()) >= len(self.class_list):
            raise ValueError("label index outside class list")
        self.labels = arr.astype(np.uint8)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    def save(self, png_path: str | Path, sidecar_path: str | Path | None = None) -> None:
        Image.fromarray(self.labels, mode="L").save(png_path, format="PNG")
        if sidecar_path is not None:
            Path(sidecar_path).write_text(
                json.dumps({"class_list": self.class_list, "seed": self.seed}, sort_keys=True),
                encoding="utf-8",
            )

    @classmethod
    def load(cls, png_path: str | Path, sidecar_path: str | Path) -> "GroundTruth":
        labels = np.asarray(Image.open(png_path).convert("L"))
        meta = json.loads(Path(sidecar_path).read_text(encoding="utf-8"))
        return cls(labels, list(meta["class_list"]), int(meta.get("seed", 0)))


def _sample_hue(rng, n: int, ranges: HueRangeSet, weights: list[float]) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64)
    w = w / w.sum()
    picks = rng.choice(len(ranges.intervals), size=n, p=w)
    hues = np.empty(n)
    for i, (lo, hi) in enumerate(ranges.intervals):
        sel = picks == i
        width = hi + 1.0 - lo
        margin = min(HUE_MARGIN, width / 2.0 - 0.25)
        hues[sel] = rng.uniform(lo + margin, lo + width - margin, size=int(sel.sum()))
    return hues


def _sample_patch_hsv(rng, n: int, cspec: ClassSpec):
    h = _sample_hue(rng, n, cspec.hue_ranges, cspec.weights)
    s = np.clip(rng.normal(cspec.sat_mean, cspec.sat_spread, size=n), SV_FLOOR, 1.0)
    v = np.clip(rng.normal(cspec.val_mean, cspec.val_spread, size=n), SV_FLOOR, 1.0)
    return h, s, v


def generate_scene(spec: SceneSpec) -> tuple[RgbImage, GroundTruth]:
    """Render the scene and its label plane; identical seeds give identical bytes."""
    rng = np.random.default_rng(spec.seed)
    w, h = spec.width, spec.height
    bg_index = spec.class_list.index(spec.background)
    bg = spec.classes[bg_index]

    labels = np.full((h, w), bg_index, dtype=np.uint8)
    hue = np.empty((h, w))
    sat = np.empty((h, w))
    val = np.empty((h, w))
    hs, ss, vs = _sample_patch_hsv(rng, h * w, bg)
    hue[:], sat[:], val[:] = hs.reshape(h, w), ss.reshape(h, w), vs.reshape(h, w)

    yy, xx = np.mgrid[0:h, 0:w]
    for index, cspec in enumerate(spec.classes):
        if index == bg_index:
            continue
        for _ in range(cspec.patch_count):
            cx = rng.uniform(0, w)
            cy = rng.uniform(0, h)
            radius = max(1.0, rng.normal(spec.radius_mean, spec.radius_spread))
            x0, x1 = max(0, int(cx - radius) - 1), min(w, int(cx + radius) + 2)
            y0, y1 = max(0, int(cy - radius) - 1), min(h, int(cy + radius) + 2)
            disk = (xx[y0:y1, x0:x1] - cx) ** 2 + (yy[y0:y1, x0:x1] - cy) ** 2 <= radius**2
            count = int(disk.sum())
            if count == 0:
                continue
            labels[y0:y1, x0:x1][disk] = index
            ph, ps, pv = _sample_patch_hsv(rng, count, cspec)
            hue[y0:y1, x0:x1][disk] = ph
            sat[y0:y1, x0:x1][disk] = ps
            val[y0:y1, x0:x1][disk] = pv

    if spec.shadow_fraction > 0.0:
        soil = np.flatnonzero(labels.ravel() == bg_index)
        n_shadow = int(round(spec.shadow_fraction * len(soil)))
        chosen = rng.permutation(soil)[:n_shadow]
        sh = _sample_hue(rng, n_shadow, HueRangeSet([bg.hue_ranges.intervals[-1]]), [1.0])
        ssat = np.clip(rng.normal(max(bg.sat_mean, SHADOW_SAT_FLOOR), bg.sat_spread, n_shadow), SHADOW_SAT_FLOOR, 1.0)
        sval = np.clip(
            rng.normal(bg.val_mean * SHADOW_VALUE_FACTOR, bg.val_spread, n_shadow), SV_FLOOR, 1.0
        )
        hue.ravel()[chosen] = sh
        sat.ravel()[chosen] = ssat
        val.ravel()[chosen] = sval

    rgb = hsv_to_rgb_array(hue, sat, val).astype(np.float64)
    if spec.noise_sigma > 0.0:
        rgb += rng.normal(0.0, spec.noise_sigma, size=rgb.shape)
    if spec.blur_radius > 0:
        size = 2 * spec.blur_radius + 1
        for ch in range(3):
            rgb[:, :, ch] = uniform_filter(rgb[:, :, ch], size=size, mode="reflect")
    img = RgbImage(np.clip(np.rint(rgb), 0, 255).astype(np.uint8))
    return img, GroundTruth(labels, spec.class_list, spec.seed)


def majority_label(gt: GroundTruth, tile: TileSpec) -> str:
    """Modal pixel class inside the tile; ties go to the earlier class."""
    if tile.x + tile.size > gt.width or tile.y + tile.size > gt.height:
        raise ValueError(f"tile {tile.key()} exceeds {gt.width}x{gt.height} ground truth")
    window = gt.labels[tile.y : tile.y + tile.size, tile.x : tile.x + tile.size]
    counts = np.bincount(window.ravel(), minlength=len(gt.class_list))
    return gt.class_list[int(np.argmax(counts))]


def expected_patch_area(spec: SceneSpec) -> float:
    """Mean disk area implied by the radius distribution (pi * E[r^2])."""
    return math.pi * (spec.radius_mean**2 + spec.radius_spread**2)
