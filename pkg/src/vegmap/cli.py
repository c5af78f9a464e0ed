"""Command-line interface: thin, validated wrappers over the core modules.

Every command that writes an artifact prints the output path with its content
id, so runs can be cross-referenced against a project store or job log.
"""

from __future__ import annotations

import csv
import io
import json
import sys
from pathlib import Path

import click

from . import ops
from .cluster import hclust, nearest_neighbors
from .features import import_embeddings
from .imaging import (
    DEFAULT_SAT_MIN,
    CoverMask,
    HueRangeSet,
    HueSpectrum,
    RgbImage,
    compute_hue_spectrum,
    derive_hue_ranges,
    refine_mask,
)
from .learners import LearnerConfig, loo_validate
from .learners.base import load_model
from .learners.validation import focus_coverage
from .mapper import PredictionMap, class_area_stats, render_overlay, stats_to_csv
from .project import Project, content_id
from .synthfield import SceneSpec, generate_scene
from .tiling import TileManifest


def _load_config(path: str | None) -> dict:
    candidate = Path(path) if path else Path("vegmap.toml")
    if not candidate.is_file():
        if path:
            raise click.ClickException(f"config file {candidate} not found")
        return {}
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    raw = tomllib.loads(candidate.read_text(encoding="utf-8"))
    return raw.get("defaults", {})


def _fallback(value, config: dict, key: str, builtin):
    """Flag beats config file beats built-in default."""
    if value is not None:
        return value
    return config.get(key, builtin)


def _write(path: str, text: str) -> None:
    data = text.encode("utf-8")
    Path(path).write_bytes(data)
    click.echo(f"{path} id={content_id(data)}")


def _write_bytes(path: str, data: bytes) -> None:
    Path(path).write_bytes(data)
    click.echo(f"{path} id={content_id(data)}")


def _load_labels(matrix, manifest_path: str | None, labels_opt: str):
    if labels_opt == "from-manifest":
        if manifest_path is None:
            raise click.ClickException("--labels from-manifest requires --manifest")
        manifest = TileManifest.load(manifest_path)
        return ops.labels_for(matrix, manifest)
    rows = list(csv.DictReader(Path(labels_opt).open(encoding="utf-8")))
    lookup = {(r["image_id"], int(r["x"]), int(r["y"]), int(r["size"])): r["label"] for r in rows}
    try:
        return [lookup[t.key()] for t in matrix.tiles]
    except KeyError as exc:
        raise click.ClickException(f"labels file misses tile {exc}") from exc


def _parse_images(pairs: tuple[str, ...]) -> dict[str, RgbImage]:
    images = {}
    for pair in pairs:
        if "=" in pair:
            image_id, _, path = pair.partition("=")
        else:
            image_id, path = Path(pair).stem, pair
        images[image_id] = RgbImage.load(path)
    return images


class _Group(click.Group):
    """Reports core validation errors as one-line messages, not tracebacks."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.ClickException:
            raise
        except (ValueError, KeyError) as exc:
            raise click.ClickException(str(exc)) from exc


@click.group(cls=_Group)
def main():
    """Vegetation mapping from visible-band imagery."""


# -- imaging -------------------------------------------------------------------


@main.command()
@click.option("--image", "image_path", required=True, type=click.Path(exists=True))
@click.option("--mask", "mask_path", required=True, type=click.Path(exists=True))
@click.option("--sat-min", type=float, default=None, help="Saturation gate, default 0.05.")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--out", required=True, type=click.Path())
def spectrum(image_path, mask_path, sat_min, config_path, out):
    """1-degree hue spectrum of the masked pixels, as a 360-row CSV."""
    config = _load_config(config_path)
    sat_min = float(_fallback(sat_min, config, "sat_min", DEFAULT_SAT_MIN))
    img = RgbImage.load(image_path)
    mask = CoverMask.load(mask_path, class_name="mask")
    spec = compute_hue_spectrum(img, mask, sat_min=sat_min)
    _write(out, spec.to_csv())
    click.echo(f"pixels={spec.pixel_count}")


@main.command("derive-ranges")
@click.option("--spectrum", "spectrum_path", required=True, type=click.Path(exists=True))
@click.option("--mass", type=float, default=0.95, show_default=True)
@click.option("--max-intervals", type=int, default=2, show_default=True)
@click.option("--out", required=True, type=click.Path())
def derive_ranges(spectrum_path, mass, max_intervals, out):
    """Smallest hue intervals that cover the requested spectrum mass."""
    spec = HueSpectrum.from_csv(Path(spectrum_path).read_text(encoding="utf-8"), pixel_count=1)
    ranges = derive_hue_ranges(spec, mass=mass, max_intervals=max_intervals)
    _write(out, ranges.to_json())
    click.echo(f"ranges={ranges.to_text()}")


@main.command("refine-mask")
@click.option("--image", "image_path", required=True, type=click.Path(exists=True))
@click.option("--mask", "mask_path", required=True, type=click.Path(exists=True))
@click.option("--class", "class_name", required=True)
@click.option("--hue", "hue_text", required=True, help="Hue intervals, e.g. 25-55,210-235.")
@click.option("--sat-min", type=float, default=DEFAULT_SAT_MIN, show_default=True)
@click.option("--keep-undefined", is_flag=True, help="Also keep gray pixels with no defined hue.")
@click.option("--out", required=True, type=click.Path())
def refine_mask_cmd(image_path, mask_path, class_name, hue_text, sat_min, keep_undefined, out):
    """Intersect a painted mask with the pixels inside the hue intervals."""
    img = RgbImage.load(image_path)
    mask = CoverMask.load(mask_path, class_name)
    refined = refine_mask(mask, img, HueRangeSet.parse(hue_text), sat_min=sat_min, keep_undefined=keep_undefined)
    _write_bytes(out, refined.to_png_bytes())
    click.echo(f"kept={refined.count} of {mask.count}")


# -- tiles and features -----------------------------------------------------------


@main.command()
@click.option("--image", "image_path", required=True, type=click.Path(exists=True))
@click.option("--image-id", default=None, help="Tile key image id; defaults to the file stem.")
@click.option("--mask", "mask_path", required=True, type=click.Path(exists=True))
@click.option("--class", "class_name", required=True)
@click.option("--hue", "hue_text", default=None, help="Optional hue refinement intervals.")
@click.option("--size", type=int, required=True)
@click.option("--sth", type=float, default=None, help="Minimum mask coverage per tile, default 0.9.")
@click.option("--shifts", type=int, default=None, help="Diagonal grid shifts, default 3.")
@click.option("--sat-min", type=float, default=None)
@click.option("--keep-undefined", is_flag=True)
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--out", required=True, type=click.Path())
def select(image_path, image_id, mask_path, class_name, hue_text, size, sth, shifts, sat_min, keep_undefined, config_path, out):
    """Harvest labeled training tiles from a (refined) cover mask."""
    config = _load_config(config_path)
    sth = float(_fallback(sth, config, "sth", 0.9))
    shifts = int(_fallback(shifts, config, "shifts", 3))
    sat_min = float(_fallback(sat_min, config, "sat_min", DEFAULT_SAT_MIN))
    img = RgbImage.load(image_path)
    mask = CoverMask.load(mask_path, class_name)
    ranges = HueRangeSet.parse(hue_text) if hue_text else None
    manifest = ops.select_op(
        img,
        image_id or Path(image_path).stem,
        mask,
        class_name,
        size=size,
        sth=sth,
        shifts=shifts,
        hue_ranges=ranges,
        sat_min=sat_min,
        keep_undefined=keep_undefined,
    )
    _write(out, manifest.to_jsonl())
    click.echo(f"tiles={len(manifest.entries)}")


@main.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--image", "image_pairs", multiple=True, required=True, help="id=path (repeatable); bare path uses the file stem as id.")
@click.option("--out", required=True, type=click.Path())
def embed(manifest_path, image_pairs, out):
    """Embed every manifest tile with the 67-value baseline descriptor."""
    manifest = TileManifest.load(manifest_path)
    matrix = ops.embed_op(_parse_images(image_pairs), manifest)
    _write(out, matrix.to_csv())
    click.echo(f"rows={len(matrix)} layout={matrix.layout_id}")


# -- learning ---------------------------------------------------------------------


def _matrix_from_flags(features_path: str, layout: str | None):
    return import_embeddings(features_path, layout_id=layout)


@main.command()
@click.option("--features", "features_path", required=True, type=click.Path(exists=True))
@click.option("--manifest", "manifest_path", type=click.Path(exists=True), default=None)
@click.option("--labels", "labels_opt", default="from-manifest", show_default=True)
@click.option("--learner", required=True, help="knn, lr, tree, rf, nn, or svm.")
@click.option("--layout", default=None, help="Embedder layout id of the features, e.g. baseline:67.")
@click.option("--hyper", "hyper_json", default=None, help="Hyperparameter overrides as JSON.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True, type=click.Path())
def train(features_path, manifest_path, labels_opt, learner, layout, hyper_json, seed, out):
    """Fit one classifier and write its model envelope JSON."""
    matrix = _matrix_from_flags(features_path, layout)
    labels = _load_labels(matrix, manifest_path, labels_opt)
    model = ops.train_op(matrix, labels, learner, json.loads(hyper_json) if hyper_json else {}, seed)
    _write(out, model.to_json())
    click.echo(f"learner={model.kind} classes={','.join(model.class_list)}")


@main.command()
@click.option("--features", "features_path", required=True, type=click.Path(exists=True))
@click.option("--manifest", "manifest_path", type=click.Path(exists=True), default=None)
@click.option("--labels", "labels_opt", default="from-manifest", show_default=True)
@click.option("--learners", "learners_text", default=None, help="Comma list, default knn,lr,tree,rf,nn,svm.")
@click.option("--folds", type=int, default=None, help="Stratified fold count, default 3.")
@click.option("--layout", default=None)
@click.option("--dataset-name", default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--out", required=True, type=click.Path())
def cv(features_path, manifest_path, labels_opt, learners_text, folds, layout, dataset_name, seed, config_path, out):
    """Stratified k-fold cross-validation report over the chosen learners."""
    config = _load_config(config_path)
    learners_text = _fallback(learners_text, config, "learners", "knn,lr,tree,rf,nn,svm")
    folds = int(_fallback(folds, config, "folds", 3))
    matrix = _matrix_from_flags(features_path, layout)
    labels = _load_labels(matrix, manifest_path, labels_opt)
    report = ops.cv_op(
        matrix,
        labels,
        learners=[s.strip() for s in learners_text.split(",") if s.strip()],
        folds=folds,
        seed=seed,
        dataset_name=dataset_name or Path(features_path).stem,
    )
    _write(out, report.to_csv())
    for row in report.rows:
        if row.metrics is None:
            click.echo(f"{row.learner}: failed: {row.error}")
        else:
            click.echo(f"{row.learner}: CA={row.metrics['CA']:.4f} AUC={row.metrics['AUC']:.4f}")


@main.command()
@click.option("--features", "features_path", required=True, type=click.Path(exists=True))
@click.option("--manifest", "manifest_path", type=click.Path(exists=True), default=None)
@click.option("--labels", "labels_opt", default="from-manifest", show_default=True)
@click.option("--learner", required=True)
@click.option("--fraction", type=float, default=0.10, show_default=True)
@click.option("--layout", default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True, type=click.Path())
def loo(features_path, manifest_path, labels_opt, learner, fraction, layout, seed, out):
    """Leave-one-out checks on a stratified sample of tiles."""
    matrix = _matrix_from_flags(features_path, layout)
    labels = _load_labels(matrix, manifest_path, labels_opt)
    data = ops.dataset_for(matrix, labels)
    records = loo_validate(LearnerConfig(ops.resolve_learner(learner), seed=seed), data, fraction, seed)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["image_id", "x", "y", "size", "actual", "predicted", "probability"])
    for r in records:
        writer.writerow([r.tile.image_id, r.tile.x, r.tile.y, r.tile.size, r.actual, r.predicted, repr(r.probability)])
    _write(out, buf.getvalue())
    hits = sum(1 for r in records if r.actual == r.predicted)
    click.echo(f"evaluations={len(records)} correct={hits}")


# -- mapping ---------------------------------------------------------------------


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--image", "image_path", required=True, type=click.Path(exists=True))
@click.option("--image-id", default=None)
@click.option("--size", type=int, required=True)
@click.option("--out", required=True, type=click.Path())
def predict(model_path, image_path, image_id, size, out):
    """Classify the full non-overlapping tile grid of an image."""
    model = load_model(model_path)
    img = RgbImage.load(image_path)
    pmap = ops.predict_op(model, img, size, image_id or Path(image_path).stem)
    _write(out, pmap.to_json())
    click.echo(f"grid={pmap.rows}x{pmap.cols}")


@main.command()
@click.option("--map", "map_path", required=True, type=click.Path(exists=True))
@click.option("--image", "image_path", required=True, type=click.Path(exists=True))
@click.option("--classes", "classes_text", required=True, help="Comma list of classes to tint.")
@click.option("--alpha", type=float, default=0.5, show_default=True)
@click.option("--out", required=True, type=click.Path())
def overlay(map_path, image_path, classes_text, alpha, out):
    """Tint the map's cells of the selected classes over the image."""
    pmap = PredictionMap.load(map_path)
    img = RgbImage.load(image_path)
    wanted = [s.strip() for s in classes_text.split(",") if s.strip()]
    _write_bytes(out, render_overlay(pmap, img, wanted, alpha=alpha).to_png_bytes())


@main.command("map-stats")
@click.option("--map", "map_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
def map_stats(map_path, out):
    """Per-class cell counts and area fractions of a prediction map."""
    stats = class_area_stats(PredictionMap.load(map_path))
    _write(out, stats_to_csv(stats))
    for row in stats:
        click.echo(f"{row['class']}: cells={row['cells']} fraction={row['fraction']:.4f}")


@main.command()
@click.option("--features", "features_path", required=True, type=click.Path(exists=True))
@click.option("--models", "models_text", required=True, help="Comma list of model JSON paths.")
@click.option("--class", "focus_class", required=True)
@click.option("--thresholds", "thresholds_text", required=True, help="Comma list, one per model.")
@click.option("--layout", default=None)
@click.option("--out", required=True, type=click.Path())
def focus(features_path, models_text, focus_class, thresholds_text, layout, out):
    """Union of tiles any model assigns to the focus class above threshold."""
    matrix = _matrix_from_flags(features_path, layout)
    models = [load_model(p.strip()) for p in models_text.split(",") if p.strip()]
    thresholds = [float(t) for t in thresholds_text.split(",") if t.strip()]
    report = focus_coverage(models, matrix, focus_class, thresholds)
    payload = {
        "focus": report.focus,
        "per_model": [[list(t.key()) for t in tiles] for tiles in report.per_model],
        "union": [list(t.key()) for t in report.union],
        "total": report.total,
        "fraction": report.fraction,
    }
    _write(out, json.dumps(payload, sort_keys=True))
    click.echo(f"union={len(report.union)}/{report.total} fraction={report.fraction:.4f}")


# -- exploration -------------------------------------------------------------------


@main.command()
@click.option("--features", "features_path", required=True, type=click.Path(exists=True))
@click.option("--seed-features", "seeds_path", required=True, type=click.Path(exists=True))
@click.option("--k", type=int, default=8, show_default=True)
@click.option("--layout", default=None)
@click.option("--out", required=True, type=click.Path())
def neighbors(features_path, seeds_path, k, layout, out):
    """Pool tiles nearest (cosine) to any seed tile, for label suggestion."""
    pool = _matrix_from_flags(features_path, layout)
    seeds = _matrix_from_flags(seeds_path, layout)
    pairs = nearest_neighbors(seeds, pool, k)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["image_id", "x", "y", "size", "distance"])
    for tile, dist in pairs:
        writer.writerow([tile.image_id, tile.x, tile.y, tile.size, repr(dist)])
    _write(out, buf.getvalue())


@main.command()
@click.option("--features", "features_path", required=True, type=click.Path(exists=True))
@click.option("--layout", default=None)
@click.option("--depth", type=int, default=None, help="Also print the clusters at this cut depth.")
@click.option("--out", required=True, type=click.Path())
def cluster(features_path, layout, depth, out):
    """Average-linkage dendrogram over cosine distances between tiles."""
    matrix = _matrix_from_flags(features_path, layout)
    dendro = hclust(matrix)
    _write(out, dendro.to_json())
    if depth is not None:
        for i, group in enumerate(dendro.cut_at_depth(depth)):
            click.echo(f"cluster {i}: {len(group)} tiles")


@main.command("rank-features")
@click.option("--features", "features_path", required=True, type=click.Path(exists=True))
@click.option("--manifest", "manifest_path", type=click.Path(exists=True), default=None)
@click.option("--labels", "labels_opt", default="from-manifest", show_default=True)
@click.option("--layout", default=None)
@click.option("--out", required=True, type=click.Path())
def rank_features_cmd(features_path, manifest_path, labels_opt, layout, out):
    """Rank features by class separation (one-way ANOVA F)."""
    from .features import rank_features

    matrix = _matrix_from_flags(features_path, layout)
    labels = _load_labels(matrix, manifest_path, labels_opt)
    ranked = rank_features(matrix, labels)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["rank", "feature", "score"])
    for rank, idx in enumerate(ranked.order):
        writer.writerow([rank, int(idx), repr(float(ranked.scores[idx]))])
    _write(out, buf.getvalue())


# -- synthetic scenes -----------------------------------------------------------------


@main.command()
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True), help="Scene spec JSON or TOML.")
@click.option("--seed", type=int, default=None, help="Override the spec seed.")
@click.option("--out-image", required=True, type=click.Path())
@click.option("--out-labels", required=True, type=click.Path())
@click.option("--out-meta", required=True, type=click.Path())
def scene(spec_path, seed, out_image, out_labels, out_meta):
    """Generate a synthetic field image with pixel ground truth."""
    spec = SceneSpec.load(spec_path)
    if seed is not None:
        spec.seed = seed
    img, truth = generate_scene(spec)
    _write_bytes(out_image, img.to_png_bytes())
    truth.save(out_labels, out_meta)
    _write_bytes(out_labels, Path(out_labels).read_bytes())
    _write(out_meta, Path(out_meta).read_text(encoding="utf-8"))


# -- project and service ----------------------------------------------------------------


@main.command()
@click.option("--project", "project_dir", required=True, type=click.Path())
@click.option("--classes", "classes_text", default="", help="Comma list of cover classes.")
def init(project_dir, classes_text):
    """Create an empty project directory."""
    names = [s.strip() for s in classes_text.split(",") if s.strip()]
    Project.create(project_dir, names)
    click.echo(f"project={project_dir} classes={','.join(names) or '(none)'}")


@main.command("add-image")
@click.option("--project", "project_dir", required=True, type=click.Path(exists=True))
@click.argument("image_path", type=click.Path(exists=True))
def add_image(project_dir, image_path):
    """Register an image with the project; prints its content id."""
    project = Project.open(project_dir)
    image_id = project.add_image(Path(image_path).read_bytes())
    click.echo(f"image={image_id}")


@main.command("add-mask")
@click.option("--project", "project_dir", required=True, type=click.Path(exists=True))
@click.option("--image-id", required=True)
@click.option("--class", "class_name", required=True)
@click.argument("mask_path", type=click.Path(exists=True))
def add_mask(project_dir, image_id, class_name, mask_path):
    """Store a painted cover mask for an image."""
    project = Project.open(project_dir)
    project.put_mask(image_id, class_name, Path(mask_path).read_bytes())
    click.echo(f"mask={image_id}/{class_name}")


@main.command()
@click.option("--project", "project_dir", required=True, type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--static", "static_dir", type=click.Path(exists=True), default=None, help="Directory with the browser UI build.")
def serve(project_dir, host, port, static_dir):
    """Run the HTTP service backing the browser annotation tool."""
    import uvicorn

    from .service import create_app

    app = create_app(Project.open(project_dir), static_dir=static_dir)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    sys.exit(main())
