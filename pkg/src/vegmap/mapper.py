"""Whole-image classification: tile grid prediction, overlays, area stats."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .features import BASELINE_LAYOUT_ID, FeatureMatrix, embed_baseline
from .imaging import RgbImage
from .learners.base import Model
from .tiling import TileSpec, crop_tile

# High-contrast colors, assigned to classes by list order.
DEFAULT_COLORS = (
    (230, 25, 75),
    (60, 180, 75),
    (255, 225, 25),
    (0, 130, 200),
    (245, 130, 48),
    (145, 30, 180),
    (70, 240, 240),
    (240, 50, 230),
)

EMBEDDERS = {"baseline": (BASELINE_LAYOUT_ID, embed_baseline)}


@dataclass
class MapCell:
    class_index: int
    probs: list[float]


@dataclass
class PredictionMap:
    """Per-cell class decisions over a non-overlapping tile grid."""

    image_id: str
    size: int
    rows: int
    cols: int
    class_list: list[str]
    cells: list[MapCell]

    def __post_init__(self):
        if len(self.cells) != self.rows * self.cols:
            raise ValueError(f"{self.rows}x{self.cols} grid needs {self.rows * self.cols} cells, got {len(self.cells)}")
        for i, cell in enumerate(self.cells):
            p = np.asarray(cell.probs, dtype=np.float64)
            if len(p) != len(self.class_list) or (p < 0).any() or abs(p.sum() - 1.0) > 1e-9:
                raise ValueError(f"cell {i} probabilities are not a distribution over {len(self.class_list)} classes")
            if cell.class_index != int(np.argmax(p)):
                raise ValueError(f"cell {i} class_index is not the distribution argmax")

    def cell(self, row: int, col: int) -> MapCell:
        if not (0 <= row < self.rows and 0 <= col < self.cols):
            raise IndexError(f"cell ({row}, {col}) outside {self.rows}x{self.cols} grid")
        return self.cells[row * self.cols + col]

    def cell_class(self, row: int, col: int) -> str:
        return self.class_list[self.cell(row, col).class_index]

    def to_json(self) -> str:
        return json.dumps(
            {
                "image_id": self.image_id,
                "size": self.size,
                "rows": self.rows,
                "cols": self.cols,
                "class_list": self.class_list,
                "cells": [{"class_index": c.class_index, "probs": c.probs} for c in self.cells],
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "PredictionMap":
        raw = json.loads(text)
        cells = [MapCell(int(c["class_index"]), [float(p) for p in c["probs"]]) for c in raw["cells"]]
        return cls(raw["image_id"], int(raw["size"]), int(raw["rows"]), int(raw["cols"]), list(raw["class_list"]), cells)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "PredictionMap":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def predict_map(
    model: Model,
    img: RgbImage,
    size: int,
    embedder: str = "baseline",
    image_id: str = "image",
) -> PredictionMap:
    """Classify every cell of the floor(h/size) x floor(w/size) grid."""
    if embedder not in EMBEDDERS:
        raise ValueError(f"unknown embedder {embedder!r}; expected one of {sorted(EMBEDDERS)}")
    layout_id, embed = EMBEDDERS[embedder]
    if model.layout_id != layout_id:
        raise ValueError(f"layout mismatch: model {model.layout_id!r}, embedder {layout_id!r}")
    if size > img.width or size > img.height:
        raise ValueError(f"tile size {size} exceeds image {img.width}x{img.height}")
    rows = img.height // size
    cols = img.width // size
    vectors = np.empty((rows * cols, model.dim))
    for r in range(rows):
        for c in range(cols):
            tile = TileSpec(image_id, c * size, r * size, size)
            vectors[r * cols + c] = embed(crop_tile(img, tile))
    probs = model.predict_proba(vectors)
    cells = [MapCell(int(np.argmax(p)), [float(x) for x in p]) for p in probs]
    return PredictionMap(image_id, size, rows, cols, list(model.class_list), cells)


def default_palette(class_list: list[str]) -> dict[str, tuple[int, int, int]]:
    return {name: DEFAULT_COLORS[i % len(DEFAULT_COLORS)] for i, name in enumerate(class_list)}


def render_overlay(
    pmap: PredictionMap,
    img: RgbImage,
    classes: list[str],
    palette: dict[str, tuple[int, int, int]] | None = None,
    alpha: float = 0.5,
) -> RgbImage:
    """Tint the cells of the selected classes; everything else is untouched."""
    if pmap.rows != img.height // pmap.size or pmap.cols != img.width // pmap.size:
        raise ValueError(
            f"map grid {pmap.rows}x{pmap.cols} (size {pmap.size}) does not fit image {img.width}x{img.height}"
        )
    unknown = set(classes) - set(pmap.class_list)
    if unknown:
        raise ValueError(f"classes not in map: {sorted(unknown)}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    palette = palette or default_palette(pmap.class_list)
    wanted = {pmap.class_list.index(c) for c in classes}
    out = img.data.copy()
    for r in range(pmap.rows):
        for c in range(pmap.cols):
            cell = pmap.cells[r * pmap.cols + c]
            if cell.class_index not in wanted:
                continue
            color = np.array(palette[pmap.class_list[cell.class_index]], dtype=np.float64)
            y, x, s = r * pmap.size, c * pmap.size, pmap.size
            block = out[y : y + s, x : x + s].astype(np.float64)
            out[y : y + s, x : x + s] = np.rint((1.0 - alpha) * block + alpha * color).astype(np.uint8)
    return RgbImage(out)


def class_area_stats(pmap: PredictionMap) -> list[dict]:
    """Cell count and fraction per class, in class-list order; fractions sum to 1."""
    counts = np.zeros(len(pmap.class_list), dtype=np.int64)
    for cell in pmap.cells:
        counts[cell.class_index] += 1
    total = len(pmap.cells)
    return [
        {"class": name, "cells": int(counts[i]), "fraction": counts[i] / total}
        for i, name in enumerate(pmap.class_list)
    ]


def stats_to_csv(stats: list[dict]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["class", "cells", "fraction"])
    for row in stats:
        w.writerow([row["class"], row["cells"], repr(float(row["fraction"]))])
    return out.getvalue()
