"""Tile feature extraction, external-embedding import, and feature ranking.

The baseline embedder is a fixed 67-value layout of color and texture
statistics; externally produced vectors (e.g. from a pretrained CNN) can be
imported from CSV and used interchangeably wherever the dimensions agree.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .imaging import DEFAULT_SAT_MIN, RgbImage, hsv_channels
from .tiling import TileSpec

BASELINE_DIM = 67
BASELINE_LAYOUT_ID = "baseline:67"

GLCM_LEVELS = 16
EDGE_THRESHOLD = 0.1
MIN_TILE_SIDE = 16

# Layout of the baseline vector:
#   [0:36]   hue histogram, 10-degree bins, saturation-gated (s >= 0.05)
#   [36:44]  saturation histogram, 8 bins on [0,1]
#   [44:52]  value histogram, 8 bins on [0,1]
#   [52:58]  mean_h, spread_h, mean_s, std_s, mean_v, std_v
#            (hue mean is circular, mapped to [0,1]; hue spread is
#            sqrt(1 - R) with R the mean resultant length)
#   [58:62]  GLCM contrast, correlation, energy, homogeneity at offset (1,0)
#   [62:66]  the same four at offset (0,1)
#   [66]     edge density: fraction of pixels with value-gradient magnitude > 0.1


@dataclass
class FeatureMatrix:
    """Per-tile feature vectors sharing one embedder layout."""

    tiles: list[TileSpec]
    values: np.ndarray
    layout_id: str

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"expected 2-D feature array, got shape {arr.shape}")
        if arr.shape[0] != len(self.tiles):
            raise ValueError(f"{len(self.tiles)} tiles but {arr.shape[0]} feature rows")
        if not np.isfinite(arr).all():
            raise ValueError("feature matrix contains non-finite values")
        self.values = arr

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def __len__(self) -> int:
        return len(self.tiles)

    def subset(self, indices) -> "FeatureMatrix":
        idx = list(indices)
        return FeatureMatrix([self.tiles[i] for i in idx], self.values[idx], self.layout_id)

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["image_id", "x", "y", "size"] + [f"f{i}" for i in range(self.dim)])
        for tile, row in zip(self.tiles, self.values):
            w.writerow([tile.image_id, tile.x, tile.y, tile.size] + [repr(float(v)) for v in row])
        return out.getvalue()

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8")


@dataclass
class RankedFeatures:
    """Per-feature relevance scores and the induced descending order."""

    scores: np.ndarray
    order: np.ndarray


def _histogram(values: np.ndarray, nbins: int, vmax: float = 1.0) -> np.ndarray:
    if values.size == 0:
        return np.zeros(nbins)
    idx = np.minimum((values / vmax * nbins).astype(np.int64), nbins - 1)
    return np.bincount(idx, minlength=nbins).astype(np.float64) / values.size


def _glcm_features(levels: np.ndarray, dx: int, dy: int) -> tuple[float, float, float, float]:
    h, w = levels.shape
    a = levels[: h - dy, : w - dx].ravel()
    b = levels[dy:, dx:].ravel()
    pair_count = a.size
    joint = np.bincount(a * GLCM_LEVELS + b, minlength=GLCM_LEVELS * GLCM_LEVELS)
    p = joint.reshape(GLCM_LEVELS, GLCM_LEVELS).astype(np.float64) / pair_count
    lv = np.arange(GLCM_LEVELS, dtype=np.float64)
    diff = lv[:, None] - lv[None, :]
    contrast = float((p * diff**2).sum())
    energy = float((p * p).sum())
    homogeneity = float((p / (1.0 + diff**2)).sum())
    pi = p.sum(axis=1)
    pj = p.sum(axis=0)
    mi = float((lv * pi).sum())
    mj = float((lv * pj).sum())
    vi = float((((lv - mi) ** 2) * pi).sum())
    vj = float((((lv - mj) ** 2) * pj).sum())
    if vi <= 0.0 or vj <= 0.0:
        correlation = 0.0  # constant tile: 0/0 by convention
    else:
        cov = float((p * (lv[:, None] - mi) * (lv[None, :] - mj)).sum())
        correlation = cov / math.sqrt(vi * vj)
    return contrast, correlation, energy, homogeneity


def embed_baseline(tile: RgbImage, sat_min: float = DEFAULT_SAT_MIN) -> np.ndarray:
    """Compute the 67-value baseline descriptor of a square tile."""
    if tile.width != tile.height:
        raise ValueError(f"tile must be square, got {tile.width}x{tile.height}")
    if tile.width < MIN_TILE_SIDE:
        raise ValueError(f"tile side must be >= {MIN_TILE_SIDE}, got {tile.width}")
    h, s, v, defined = hsv_channels(tile)
    out = np.zeros(BASELINE_DIM)

    gated = defined & (s >= sat_min)
    hues = h[gated]
    out[0:36] = _histogram(hues, 36, vmax=360.0)
    out[36:44] = _histogram(s.ravel(), 8)
    out[44:52] = _histogram(v.ravel(), 8)

    if hues.size:
        rad = np.deg2rad(hues)
        cx, sx = float(np.cos(rad).mean()), float(np.sin(rad).mean())
        mean_h = math.degrees(math.atan2(sx, cx)) % 360.0
        resultant = min(1.0, math.hypot(cx, sx))
        out[52] = mean_h / 360.0
        out[53] = math.sqrt(1.0 - resultant)
    out[54] = float(s.mean())
    out[55] = float(s.std())
    out[56] = float(v.mean())
    out[57] = float(v.std())

    levels = np.minimum((v * GLCM_LEVELS).astype(np.int64), GLCM_LEVELS - 1)
    out[58:62] = _glcm_features(levels, 1, 0)
    out[62:66] = _glcm_features(levels, 0, 1)

    gy, gx = np.gradient(v)
    out[66] = float((np.hypot(gx, gy) > EDGE_THRESHOLD).mean())
    return out


def embed_tiles(
    images: dict[str, RgbImage],
    tiles: list[TileSpec],
    sat_min: float = DEFAULT_SAT_MIN,
) -> FeatureMatrix:
    """Crop each tile from its source image and run the baseline embedder."""
    from .tiling import crop_tile

    rows = np.empty((len(tiles), BASELINE_DIM))
    for i, tile in enumerate(tiles):
        if tile.image_id not in images:
            raise KeyError(f"tile references unknown image {tile.image_id!r}")
        rows[i] = embed_baseline(crop_tile(images[tile.image_id], tile), sat_min)
    return FeatureMatrix(list(tiles), rows, BASELINE_LAYOUT_ID)


class EmbeddingImportError(ValueError):
    pass


def import_embeddings(source: str | Path, layout_id: str | None = None) -> FeatureMatrix:
    """Read a feature CSV: key columns image_id,x,y,size then f0..f{D-1}.

    Rejects ragged rows, non-numeric or non-finite cells, and duplicate tile
    keys, pointing at the offending row and column. Unless overridden the
    layout is recorded as ``external:D``.
    """
    text = Path(source).read_text(encoding="utf-8") if not str(source).lstrip().startswith("image_id") else str(source)
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise EmbeddingImportError("empty embeddings file")
    header = rows[0]
    if header[:4] != ["image_id", "x", "y", "size"]:
        raise EmbeddingImportError(f"expected key columns image_id,x,y,size, got {header[:4]}")
    dim = len(header) - 4
    if dim < 1:
        raise EmbeddingImportError("no feature columns found")
    tiles = []
    values = np.empty((len(rows) - 1, dim))
    seen = set()
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise EmbeddingImportError(f"row {r}: expected {len(header)} cells, got {len(row)}")
        try:
            tile = TileSpec(row[0], int(row[1]), int(row[2]), int(row[3]))
        except ValueError as exc:
            raise EmbeddingImportError(f"row {r}: bad tile key: {exc}") from exc
        if tile.key() in seen:
            raise EmbeddingImportError(f"row {r}: duplicate tile key {tile.key()}")
        seen.add(tile.key())
        tiles.append(tile)
        for c, cell in enumerate(row[4:]):
            try:
                val = float(cell)
            except ValueError as exc:
                raise EmbeddingImportError(f"row {r}, column f{c}: non-numeric cell {cell!r}") from exc
            if not math.isfinite(val):
                raise EmbeddingImportError(f"row {r}, column f{c}: non-finite value {cell!r}")
            values[r - 2, c] = val
    return FeatureMatrix(tiles, values, layout_id or f"external:{dim}")


def rank_features(matrix: FeatureMatrix, labels: list[str]) -> RankedFeatures:
    """Rank features by one-way ANOVA F against the class labels.

    Zero-variance features score 0; features that separate classes with no
    within-class variance get an infinite score and sort ahead of the rest.
    Ties break toward the lower feature index.
    """
    if len(labels) != len(matrix):
        raise ValueError("labels and matrix row counts differ")
    classes = sorted(set(labels))
    if len(classes) < 2:
        raise ValueError("feature ranking needs at least two classes")
    groups = [np.array([i for i, l in enumerate(labels) if l == c]) for c in classes]
    if any(len(g) < 2 for g in groups):
        raise ValueError("every class needs at least two rows")
    x = matrix.values
    n, d = x.shape
    k = len(classes)
    grand = x.mean(axis=0)
    ssb = np.zeros(d)
    ssw = np.zeros(d)
    for g in groups:
        gm = x[g].mean(axis=0)
        ssb += len(g) * (gm - grand) ** 2
        ssw += ((x[g] - gm) ** 2).sum(axis=0)
    scores = np.zeros(d)
    tol = 1e-12 * np.maximum(ssb + ssw, 1.0)
    separated = (ssw <= tol) & (ssb > tol)
    normal = ~separated & (ssb > tol)
    scores[separated] = np.inf
    scores[normal] = (ssb[normal] / (k - 1)) / (ssw[normal] / (n - k))
    order = np.array(sorted(range(d), key=lambda i: (-scores[i], i)), dtype=np.int64)
    return RankedFeatures(scores, order)


def cosine_distance(u: np.ndarray, v: np.ndarray) -> float:
    """1 - cos(u, v); scale-invariant, in [0, 2]. Zero vectors are an error."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine distance is undefined for a zero vector")
    return float(min(2.0, max(0.0, 1.0 - float(u @ v) / (nu * nv))))
