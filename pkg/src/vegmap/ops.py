"""Core operations shared verbatim by the CLI and the HTTP service.

Both entry points deserialize their inputs, call these functions, and write
the results with the same serializers, which is what makes their artifacts
byte-identical for equal parameters and seeds.
"""

from __future__ import annotations

from .features import FeatureMatrix, embed_tiles
from .imaging import DEFAULT_SAT_MIN, CoverMask, HueRangeSet, RgbImage, refine_mask
from .learners import LabeledDataset, LearnerConfig, Model, cross_validate, fit
from .learners.validation import CvReport
from .mapper import PredictionMap, predict_map
from .tiling import SelectionParams, TileManifest, select_training_tiles

LEARNER_ALIASES = {
    "knn": "kNN",
    "lr": "LogisticRegression",
    "tree": "Tree",
    "rf": "RandomForest",
    "nn": "NeuralNetwork",
    "svm": "SVM",
}


def resolve_learner(name: str) -> str:
    if name in LEARNER_ALIASES.values():
        return name
    try:
        return LEARNER_ALIASES[name.lower()]
    except KeyError:
        raise ValueError(
            f"unknown learner {name!r}; expected one of {sorted(LEARNER_ALIASES)}"
        ) from None


def select_op(
    img: RgbImage,
    image_id: str,
    mask: CoverMask,
    class_name: str,
    size: int,
    sth: float,
    shifts: int,
    hue_ranges: HueRangeSet | None = None,
    sat_min: float = DEFAULT_SAT_MIN,
    keep_undefined: bool = False,
) -> TileManifest:
    """Optionally refine the mask by hue, then harvest training tiles."""
    if hue_ranges is not None:
        mask = refine_mask(mask, img, hue_ranges, sat_min=sat_min, keep_undefined=keep_undefined)
    params = SelectionParams(size=size, sth=sth, class_name=class_name, shifts=shifts)
    return select_training_tiles(img, mask, params, image_id=image_id)


def embed_op(images: dict[str, RgbImage], manifest: TileManifest) -> FeatureMatrix:
    return embed_tiles(images, [e.tile for e in manifest.entries])


def labels_for(matrix: FeatureMatrix, manifest: TileManifest) -> list[str]:
    """Per-row labels by tile key; every feature row must appear in the manifest."""
    lookup = {e.tile.key(): e.label for e in manifest.entries}
    labels = []
    for tile in matrix.tiles:
        if tile.key() not in lookup:
            raise KeyError(f"tile {tile.key()} is not in the manifest")
        labels.append(lookup[tile.key()])
    return labels


def dataset_for(matrix: FeatureMatrix, labels: list[str], class_list: list[str] | None = None) -> LabeledDataset:
    return LabeledDataset.build(matrix, labels, class_list)


def train_op(
    matrix: FeatureMatrix,
    labels: list[str],
    learner: str,
    hyperparameters: dict | None = None,
    seed: int = 0,
    class_list: list[str] | None = None,
) -> Model:
    cfg = LearnerConfig(resolve_learner(learner), hyperparameters or {}, seed)
    return fit(cfg, dataset_for(matrix, labels, class_list))


def cv_op(
    matrix: FeatureMatrix,
    labels: list[str],
    learners: list[str],
    folds: int = 3,
    seed: int = 0,
    dataset_name: str = "dataset",
    hyperparameters: dict | None = None,
    class_list: list[str] | None = None,
) -> CvReport:
    cfgs = [
        LearnerConfig(resolve_learner(name), (hyperparameters or {}).get(resolve_learner(name), {}), seed)
        for name in learners
    ]
    return cross_validate(cfgs, dataset_for(matrix, labels, class_list), k=folds, seed=seed, dataset_name=dataset_name)


def predict_op(model: Model, img: RgbImage, size: int, image_id: str) -> PredictionMap:
    return predict_map(model, img, size, embedder="baseline", image_id=image_id)
