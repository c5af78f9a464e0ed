"""Baseline embedder layout, external import diagnostics, and feature ranking."""

import math

import numpy as np
import pytest
from scipy.stats import f_oneway

from vegmap.features import (
    BASELINE_DIM,
    BASELINE_LAYOUT_ID,
    GLCM_LEVELS,
    MIN_TILE_SIDE,
    EmbeddingImportError,
    FeatureMatrix,
    cosine_distance,
    embed_baseline,
    embed_tiles,
    import_embeddings,
    rank_features,
)
from vegmap.imaging import RgbImage, hsv_channels, hsv_to_rgb
from vegmap.tiling import TileSpec


def _uniform_tile(rgb, side=16):
    data = np.tile(np.array(rgb, dtype=np.uint8), (side, side, 1))
    return RgbImage(data)


def _random_tile(rng, side=16):
    return RgbImage(rng.integers(0, 256, size=(side, side, 3), dtype=np.uint8))


# -- layout ----------------------------------------------------------------------------


def test_uniform_green_tile_layout():
    vec = embed_baseline(_uniform_tile((0, 255, 0)))
    assert vec.shape == (BASELINE_DIM,)
    # hue 120 falls in 10-degree bin 12
    assert vec[12] == 1.0
    assert vec[0:36].sum() == 1.0
    # saturation 1.0 tops the last of 8 bins; value 1.0 likewise
    assert vec[36 + 7] == 1.0
    assert vec[44 + 7] == 1.0
    # circular stats: mean 120/360, zero spread; s/v stats exact
    assert vec[52] == pytest.approx(120.0 / 360.0, abs=1e-12)
    assert vec[53] == pytest.approx(0.0, abs=1e-7)
    assert vec[54] == 1.0 and vec[55] == 0.0
    assert vec[56] == 1.0 and vec[57] == 0.0
    # constant texture: contrast 0, correlation 0 by convention, energy 1
    for base in (58, 62):
        assert vec[base + 0] == 0.0
        assert vec[base + 1] == 0.0
        assert vec[base + 2] == 1.0
        assert vec[base + 3] == 1.0
    assert vec[66] == 0.0


def test_sat_gate_excludes_gray_from_hue_stats():
    data = np.tile(np.array((90, 90, 90), dtype=np.uint8), (16, 16, 1))
    data[:8] = (0, 255, 0)  # top half green, bottom half gray
    vec = embed_baseline(RgbImage(data))
    assert vec[0:36].sum() == 1.0  # only gated pixels feed the histogram
    assert vec[12] == 1.0
    assert vec[52] == pytest.approx(120.0 / 360.0)


def test_all_gray_tile_leaves_hue_block_zero():
    vec = embed_baseline(_uniform_tile((77, 77, 77)))
    assert vec[0:36].sum() == 0.0
    assert vec[52] == 0.0 and vec[53] == 0.0
    assert vec[54] == 0.0  # saturation 0 everywhere


def _brute_glcm(levels, dx, dy):
    h, w = levels.shape
    pairs = {}
    count = 0
    for y in range(h - dy):
        for x in range(w - dx):
            key = (int(levels[y, x]), int(levels[y + dy, x + dx]))
            pairs[key] = pairs.get(key, 0) + 1
            count += 1
    contrast = sum(n * (i - j) ** 2 for (i, j), n in pairs.items()) / count
    energy = sum((n / count) ** 2 for n in pairs.values())
    homog = sum(n / (1 + (i - j) ** 2) for (i, j), n in pairs.items()) / count
    mi = sum(i * n for (i, _), n in pairs.items()) / count
    mj = sum(j * n for (_, j), n in pairs.items()) / count
    vi = sum((i - mi) ** 2 * n for (i, _), n in pairs.items()) / count
    vj = sum((j - mj) ** 2 * n for (_, j), n in pairs.items()) / count
    cov = sum((i - mi) * (j - mj) * n for (i, j), n in pairs.items()) / count
    corr = 0.0 if vi <= 0 or vj <= 0 else cov / math.sqrt(vi * vj)
    return contrast, corr, energy, homog


def test_glcm_block_matches_bruteforce(rng):
    for _ in range(5):
        tile = _random_tile(rng)
        vec = embed_baseline(tile)
        _, _, v, _ = hsv_channels(tile)
        levels = np.minimum((v * GLCM_LEVELS).astype(np.int64), GLCM_LEVELS - 1)
        np.testing.assert_allclose(vec[58:62], _brute_glcm(levels, 1, 0), atol=1e-12)
        np.testing.assert_allclose(vec[62:66], _brute_glcm(levels, 0, 1), atol=1e-12)


def test_hue_stats_match_direct_recomputation(rng):
    tile = _random_tile(rng)
    vec = embed_baseline(tile)
    h, s, _, defined = hsv_channels(tile)
    hues = h[defined & (s >= 0.05)]
    rad = np.deg2rad(hues)
    mean = math.degrees(math.atan2(np.sin(rad).mean(), np.cos(rad).mean())) % 360
    resultant = math.hypot(np.cos(rad).mean(), np.sin(rad).mean())
    assert vec[52] == pytest.approx(mean / 360.0, abs=1e-12)
    assert vec[53] == pytest.approx(math.sqrt(1 - min(1.0, resultant)), abs=1e-12)
    # histogram masses line up with a direct bincount
    hist = np.bincount(np.minimum((hues / 10).astype(int), 35), minlength=36) / hues.size
    np.testing.assert_allclose(vec[0:36], hist, atol=1e-12)


def test_edge_density_counts_gradient_pixels():
    data = np.zeros((16, 16, 3), dtype=np.uint8)
    data[:, 8:] = 255  # vertical step edge
    vec = embed_baseline(RgbImage(data))
    _, _, v, _ = hsv_channels(RgbImage(data))
    gy, gx = np.gradient(v)
    expected = (np.hypot(gx, gy) > 0.1).mean()
    assert vec[66] == expected
    assert expected > 0


def test_embedder_rejects_bad_tiles():
    with pytest.raises(ValueError):
        embed_baseline(RgbImage(np.zeros((16, 20, 3), dtype=np.uint8)))
    with pytest.raises(ValueError):
        embed_baseline(RgbImage(np.zeros((MIN_TILE_SIDE - 1, MIN_TILE_SIDE - 1, 3), dtype=np.uint8)))


def test_embed_tiles_orders_rows_by_tile(rng):
    img = RgbImage(rng.integers(0, 256, size=(64, 64, 3), dtype=np.uint8))
    tiles = [TileSpec("im", 0, 0, 16), TileSpec("im", 32, 16, 16), TileSpec("im", 48, 48, 16)]
    matrix = embed_tiles({"im": img}, tiles)
    assert matrix.layout_id == BASELINE_LAYOUT_ID
    assert matrix.tiles == tiles
    for row, tile in zip(matrix.values, tiles):
        crop = RgbImage(img.data[tile.y : tile.y + 16, tile.x : tile.x + 16].copy())
        np.testing.assert_array_equal(row, embed_baseline(crop))
    with pytest.raises(KeyError):
        embed_tiles({"im": img}, [TileSpec("other", 0, 0, 16)])


# -- matrix and import -------------------------------------------------------------------


def test_matrix_validation():
    t = [TileSpec("a", 0, 0, 16)]
    with pytest.raises(ValueError):
        FeatureMatrix(t, np.zeros((2, 3)), "external:3")
    with pytest.raises(ValueError):
        FeatureMatrix(t, np.array([[1.0, np.nan]]), "external:2")
    with pytest.raises(ValueError):
        FeatureMatrix(t, np.zeros(3), "external:3")


def test_csv_roundtrip_preserves_values(rng):
    tiles = [TileSpec("a", 0, 0, 16), TileSpec("a", 16, 0, 16)]
    matrix = FeatureMatrix(tiles, rng.normal(size=(2, 5)), "external:5")
    again = import_embeddings(matrix.to_csv())
    assert again.layout_id == "external:5"
    assert [t.key() for t in again.tiles] == [t.key() for t in tiles]
    np.testing.assert_array_equal(again.values, matrix.values)  # repr() is lossless


def test_import_respects_layout_override(tmp_path, rng):
    matrix = FeatureMatrix([TileSpec("a", 0, 0, 16)], rng.normal(size=(1, 4)), "external:4")
    path = tmp_path / "f.csv"
    path.write_text(matrix.to_csv(), encoding="utf-8")
    got = import_embeddings(path, layout_id="cnn-pool:4")
    assert got.layout_id == "cnn-pool:4"


def test_import_diagnostics_name_row_and_column():
    head = "image_id,x,y,size,f0,f1\n"
    with pytest.raises(EmbeddingImportError, match="key columns"):
        import_embeddings("image_id,x,y,f0\na,0,0,1.0\n")
    with pytest.raises(EmbeddingImportError, match="row 3"):
        import_embeddings(head + "a,0,0,16,1.0,2.0\na,16,0,16,1.0\n")
    with pytest.raises(EmbeddingImportError, match=r"row 2, column f1"):
        import_embeddings(head + "a,0,0,16,1.0,oops\n")
    with pytest.raises(EmbeddingImportError, match=r"row 2, column f0"):
        import_embeddings(head + "a,0,0,16,inf,2.0\n")
    with pytest.raises(EmbeddingImportError, match="duplicate"):
        import_embeddings(head + "a,0,0,16,1.0,2.0\na,0,0,16,3.0,4.0\n")
    with pytest.raises(EmbeddingImportError, match="no feature columns"):
        import_embeddings("image_id,x,y,size\na,0,0,16\n")


# -- ranking -----------------------------------------------------------------------------


def test_rank_features_matches_scipy(rng):
    x = rng.normal(size=(30, 6))
    labels = ["a"] * 10 + ["b"] * 10 + ["c"] * 10
    x[:10, 0] += 3.0
    x[10:20, 0] -= 3.0
    ranked = rank_features(FeatureMatrix([TileSpec("t", i, 0, 16) for i in range(30)], x, "external:6"), labels)
    for j in range(6):
        ref = f_oneway(x[:10, j], x[10:20, j], x[20:, j]).statistic
        assert ranked.scores[j] == pytest.approx(ref, rel=1e-9)
    assert ranked.order[0] == 0  # the shifted feature dominates


def test_rank_features_sentinels():
    # f0 separates perfectly with zero within-class variance, f1 is constant
    x = np.array(
        [[1.0, 5.0, 0.1], [1.0, 5.0, 0.2], [2.0, 5.0, 0.3], [2.0, 5.0, 0.4]]
    )
    labels = ["a", "a", "b", "b"]
    ranked = rank_features(FeatureMatrix([TileSpec("t", i, 0, 16) for i in range(4)], x, "external:3"), labels)
    assert math.isinf(ranked.scores[0])
    assert ranked.scores[1] == 0.0
    assert ranked.order[0] == 0
    assert list(ranked.order).index(1) == 2  # constant feature ranks last


def test_rank_features_validation(rng):
    m = FeatureMatrix([TileSpec("t", i, 0, 16) for i in range(4)], rng.normal(size=(4, 2)), "external:2")
    with pytest.raises(ValueError):
        rank_features(m, ["a", "a", "a", "a"])
    with pytest.raises(ValueError):
        rank_features(m, ["a", "a", "a", "b"])  # class b has one row
    with pytest.raises(ValueError):
        rank_features(m, ["a", "a", "b"])


# -- cosine ------------------------------------------------------------------------------


def test_cosine_distance_hand_values():
    assert cosine_distance([1, 0], [0, 1]) == pytest.approx(1.0)
    assert cosine_distance([1, 1], [2, 2]) == pytest.approx(0.0, abs=1e-12)
    assert cosine_distance([1, 0], [-1, 0]) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        cosine_distance([1, 0], [0, 0])
    with pytest.raises(ValueError):
        cosine_distance([1, 0], [1, 0, 0])


def test_scene_embeddings_are_finite_and_bounded(dataset_128):
    values = dataset_128.matrix.values
    assert values.shape[1] == BASELINE_DIM
    assert np.isfinite(values).all()
    # histogram blocks are distributions (hue block can be empty only for gray tiles)
    np.testing.assert_allclose(values[:, 36:44].sum(axis=1), 1.0, atol=1e-9)
    np.testing.assert_allclose(values[:, 44:52].sum(axis=1), 1.0, atol=1e-9)
    assert ((values[:, 66] >= 0) & (values[:, 66] <= 1)).all()
