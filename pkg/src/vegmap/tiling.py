"""Square tile grids, shift multiplication, and mask-driven training-tile selection."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .imaging import CoverMask, RgbImage

DEFAULT_TILE_SIZES = (64, 128, 256)
DEFAULT_SHIFTS = 3

PROVENANCES = ("direct", "mask-hue", "neighbor-suggested")


@dataclass(frozen=True, order=True)
class TileSpec:
    """One square tile: image id plus top-left pixel offset and side length."""

    image_id: str
    x: int
    y: int
    size: int

    def key(self) -> tuple[str, int, int, int]:
        return (self.image_id, self.x, self.y, self.size)


@dataclass
class ManifestEntry:
    tile: TileSpec
    label: str | None = None
    provenance: str = "direct"

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")


@dataclass
class TileManifest:
    """Ordered tile records harvested for training or prediction."""

    entries: list[ManifestEntry] = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            k = e.tile.key()
            if k in seen:
                raise ValueError(f"duplicate tile entry {k}")
            seen.add(k)

    def __len__(self) -> int:
        return len(self.entries)

    def labels(self) -> list[str | None]:
        return [e.label for e in self.entries]

    def extend(self, other: "TileManifest") -> "TileManifest":
        return TileManifest(self.entries + other.entries)

    def to_jsonl(self) -> str:
        lines = []
        for e in self.entries:
            lines.append(
                json.dumps(
                    {
                        "image_id": e.tile.image_id,
                        "x": e.tile.x,
                        "y": e.tile.y,
                        "size": e.tile.size,
                        "label": e.label,
                        "provenance": e.provenance,
                    },
                    sort_keys=True,
                )
            )
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_jsonl(cls, text: str) -> "TileManifest":
        entries = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            entries.append(
                ManifestEntry(
                    TileSpec(rec["image_id"], rec["x"], rec["y"], rec["size"]),
                    rec.get("label"),
                    rec.get("provenance", "direct"),
                )
            )
        return cls(entries)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "TileManifest":
        return cls.from_jsonl(Path(path).read_text(encoding="utf-8"))


@dataclass
class SelectionParams:
    """Knobs for mask-driven harvesting: tile size, overlay threshold, shifts."""

    size: int
    sth: float
    class_name: str
    shifts: int = DEFAULT_SHIFTS

    def __post_init__(self):
        if not 0.0 < self.sth <= 1.0:
            raise ValueError(f"sth must be in (0,1], got {self.sth}")
        if self.shifts < 1:
            raise ValueError(f"shifts must be >= 1, got {self.shifts}")
        if self.size < 1:
            raise ValueError(f"size must be >= 1, got {self.size}")


def grid_tiles(width: int, height: int, size: int, shifts: int = 1, image_id: str = "") -> list[TileSpec]:
    """Tiles of the union of ``shifts`` diagonally offset non-overlapping grids.

    Grid k starts at offset floor(k*size/shifts) in both axes; tiles that
    would overflow the image are dropped. Order is by grid, then row-major.
    """
    if size > min(width, height):
        raise ValueError(f"tile size {size} exceeds image dimensions {width}x{height}")
    if shifts < 1:
        raise ValueError(f"shifts must be >= 1, got {shifts}")
    tiles = []
    offsets = dict.fromkeys((k * size) // shifts for k in range(shifts))
    for off in offsets:
        for y in range(off, height - size + 1, size):
            for x in range(off, width - size + 1, size):
                tiles.append(TileSpec(image_id, x, y, size))
    return tiles


def overlay_fraction(tile: TileSpec, mask: CoverMask) -> float:
    """Fraction of the tile footprint covered by set mask bits."""
    if tile.x < 0 or tile.y < 0 or tile.x + tile.size > mask.width or tile.y + tile.size > mask.height:
        raise ValueError(f"tile {tile.key()} exceeds mask bounds {mask.width}x{mask.height}")
    window = mask.bits[tile.y : tile.y + tile.size, tile.x : tile.x + tile.size]
    return float(window.sum()) / (tile.size * tile.size)


def select_training_tiles(
    img: RgbImage,
    refined: CoverMask,
    params: SelectionParams,
    image_id: str = "",
) -> TileManifest:
    """All shifted grid tiles whose refined-mask overlay meets the threshold.

    Uses a summed-area table so the per-tile coverage lookup is O(1); the
    result is ordered like :func:`grid_tiles` and labeled with the params'
    class under provenance ``mask-hue``.
    """
    if (img.height, img.width) != (refined.height, refined.width):
        raise ValueError("image and refined mask dimensions differ")
    sat = np.zeros((refined.height + 1, refined.width + 1), dtype=np.int64)
    np.cumsum(refined.bits, axis=0, out=sat[1:, 1:])
    np.cumsum(sat[1:, 1:], axis=1, out=sat[1:, 1:])
    area = params.size * params.size
    entries = []
    for tile in grid_tiles(img.width, img.height, params.size, params.shifts, image_id):
        x0, y0 = tile.x, tile.y
        x1, y1 = x0 + params.size, y0 + params.size
        inside = sat[y1, x1] - sat[y0, x1] - sat[y1, x0] + sat[y0, x0]
        if inside / area >= params.sth:
            entries.append(ManifestEntry(tile, params.class_name, "mask-hue"))
    return TileManifest(entries)


def crop_tile(img: RgbImage, tile: TileSpec) -> RgbImage:
    """Copy of the size x size pixel block at the tile's offset."""
    if tile.x < 0 or tile.y < 0 or tile.x + tile.size > img.width or tile.y + tile.size > img.height:
        raise ValueError(f"tile {tile.key()} exceeds image bounds {img.width}x{img.height}")
    return RgbImage(img.data[tile.y : tile.y + tile.size, tile.x : tile.x + tile.size].copy())
