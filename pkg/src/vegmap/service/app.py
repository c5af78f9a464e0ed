"""HTTP service over a project store; backs the browser annotation tool.

Long operations run as queued jobs on a single worker; everything else is a
direct read or a journaled write against the project directory.
"""

from __future__ import annotations

import io
import json
from contextlib import asynccontextmanager
from dataclasses import asdict

from fastapi import FastAPI, Query, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from PIL import Image

from ..cluster import nearest_neighbors
from ..features import FeatureMatrix
from ..imaging import DEFAULT_SAT_MIN, HueRangeSet, compute_hue_spectrum, derive_hue_ranges
from ..jobs import JobWorker, load_features
from ..learners.base import model_from_json
from ..mapper import PredictionMap, render_overlay
from ..project import Project, ProjectError
from ..tiling import TileManifest
from . import schemas


def _error(status: int, code: str, message: str, detail: str | None = None) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content=schemas.ErrorBody(code=code, message=message, detail=detail).model_dump(),
    )


def create_app(project: Project, static_dir: str | None = None) -> FastAPI:
    worker = JobWorker(project)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        worker.start()
        yield
        worker.stop()

    app = FastAPI(title="vegmap", lifespan=lifespan)
    app.state.project = project
    app.state.worker = worker

    @app.exception_handler(KeyError)
    async def missing(_req: Request, exc: KeyError):
        return _error(404, "not_found", str(exc).strip("'\""))

    @app.exception_handler(ProjectError)
    async def bad_project(_req: Request, exc: ProjectError):
        return _error(400, "bad_request", str(exc))

    @app.exception_handler(ValueError)
    async def bad_value(_req: Request, exc: ValueError):
        return _error(400, "bad_request", str(exc))

    @app.exception_handler(RequestValidationError)
    async def bad_body(_req: Request, exc: RequestValidationError):
        return _error(422, "validation_error", "request body failed validation", detail=str(exc.errors()))

    # -- project and classes ----------------------------------------------------

    @app.get("/api/project", response_model=schemas.ProjectInfo)
    def get_project():
        return schemas.ProjectInfo(
            format_version=1,
            classes=[schemas.ClassEntry(**c) for c in project.classes],
            images=project.image_ids(),
        )

    @app.post("/api/classes", response_model=schemas.ProjectInfo, status_code=201)
    def add_class(body: schemas.NewClassRequest):
        project.add_class(body.name, tuple(body.color) if body.color else None)
        return get_project()

    @app.get("/api/classes/{class_name}/hue-ranges", response_model=schemas.HueRangesBody)
    def get_ranges(class_name: str):
        project.require_class(class_name)
        return schemas.HueRangesBody(intervals=project.get_hue_ranges(class_name).intervals)

    @app.put("/api/classes/{class_name}/hue-ranges", response_model=schemas.HueRangesBody)
    def put_ranges(class_name: str, body: schemas.HueRangesBody):
        project.require_class(class_name)
        ranges = HueRangeSet([tuple(iv) for iv in body.intervals])
        project.put_hue_ranges(class_name, ranges)
        return schemas.HueRangesBody(intervals=ranges.intervals)

    # -- images and masks ----------------------------------------------------------

    @app.get("/api/images", response_model=list[schemas.ImageMeta])
    def list_images():
        return [schemas.ImageMeta(id=i, **project.image_meta(i)) for i in project.image_ids()]

    @app.post("/api/images", response_model=schemas.ImageMeta, status_code=201)
    async def upload_image(request: Request):
        data = await request.body()
        if not data:
            raise ValueError("empty upload body")
        image_id = project.add_image(data)
        return schemas.ImageMeta(id=image_id, **project.image_meta(image_id))

    @app.get("/api/images/{image_id}/full.png")
    def full_png(image_id: str, maxdim: int | None = Query(default=None, ge=1)):
        blob = project.image_bytes(image_id)
        if maxdim is not None:
            img = Image.open(io.BytesIO(blob))
            if max(img.size) > maxdim:
                img.thumbnail((maxdim, maxdim), Image.LANCZOS)
                out = io.BytesIO()
                img.save(out, format="PNG")
                blob = out.getvalue()
        return Response(blob, media_type="image/png")

    @app.get("/api/images/{image_id}/masks/{class_name}")
    def get_mask(image_id: str, class_name: str):
        return Response(project.mask_bytes(image_id, class_name), media_type="image/png")

    @app.put("/api/images/{image_id}/masks/{class_name}")
    async def put_mask(image_id: str, class_name: str, request: Request):
        data = await request.body()
        project.put_mask(image_id, class_name, data)
        return {"image_id": image_id, "class": class_name, "bytes": len(data)}

    @app.get("/api/images/{image_id}/spectrum", response_model=schemas.SpectrumResponse)
    def spectrum(
        image_id: str,
        class_name: str = Query(alias="class"),
        satmin: float = Query(default=DEFAULT_SAT_MIN, ge=0.0, le=1.0),
        mass: float | None = Query(default=None, gt=0.0, le=1.0),
    ):
        img = project.get_image(image_id)
        mask = project.get_mask(image_id, class_name)
        spec = compute_hue_spectrum(img, mask, sat_min=satmin)
        derived = None
        if mass is not None:
            derived = derive_hue_ranges(spec, mass=mass).intervals
        return schemas.SpectrumResponse(
            bins=spec.bins.tolist(), pixel_count=spec.pixel_count, derived=derived
        )

    # -- jobs ------------------------------------------------------------------------

    def _submit(kind: str, params: dict) -> schemas.JobRef:
        job = worker.submit(kind, params)
        return schemas.JobRef(job_id=job.id)

    @app.post("/api/select", response_model=schemas.JobRef, status_code=202)
    def post_select(body: schemas.SelectRequest):
        project.image_meta(body.image_id)
        project.require_class(body.class_name)
        if not project.has_mask(body.image_id, body.class_name):
            raise KeyError(f"no mask for image {body.image_id!r} class {body.class_name!r}")
        if body.hue_ranges is not None:
            HueRangeSet.parse(body.hue_ranges)
        return _submit("select", body.model_dump(by_alias=False))

    @app.post("/api/embed", response_model=schemas.JobRef, status_code=202)
    def post_embed(body: schemas.EmbedRequest):
        project.artifact_meta("manifests", body.manifest_id)
        return _submit("embed", body.model_dump())

    @app.post("/api/train", response_model=schemas.JobRef, status_code=202)
    def post_train(body: schemas.TrainRequest):
        project.artifact_meta("features", body.features_id)
        from ..ops import resolve_learner

        resolve_learner(body.learner)
        return _submit("train", body.model_dump())

    @app.post("/api/cv", response_model=schemas.JobRef, status_code=202)
    def post_cv(body: schemas.CvRequest):
        project.artifact_meta("features", body.features_id)
        from ..ops import resolve_learner

        for name in body.learners:
            resolve_learner(name)
        return _submit("cv", body.model_dump())

    @app.post("/api/predict", response_model=schemas.JobRef, status_code=202)
    def post_predict(body: schemas.PredictRequest):
        project.artifact_meta("models", body.model_id)
        project.image_meta(body.image_id)
        return _submit("predict", body.model_dump())

    @app.get("/api/jobs/{job_id}", response_model=schemas.JobRecord)
    def get_job(job_id: str):
        return schemas.JobRecord(**asdict(project.get_job(job_id)))

    # -- artifacts ----------------------------------------------------------------------

    @app.get("/api/manifests/{aid}")
    def get_manifest(aid: str):
        return Response(project.artifact_text("manifests", aid), media_type="application/jsonl")

    @app.post("/api/manifests", response_model=schemas.ManifestInfo, status_code=201)
    async def post_manifest(request: Request):
        """Store a client-authored manifest: direct selections, review patches,
        or a merge of per-class select outputs."""
        try:
            text = (await request.body()).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ValueError(f"manifest body is not UTF-8: {exc}") from exc
        manifest = TileManifest.from_jsonl(text)
        if not manifest.entries:
            raise ValueError("manifest has no entries")
        images = sorted({e.tile.image_id for e in manifest.entries})
        aid = project.save_artifact("manifests", manifest.to_jsonl(), {"images": images}, "client")
        return schemas.ManifestInfo(id=aid, tiles=len(manifest.entries))

    @app.get("/api/features/{aid}")
    def get_features(aid: str):
        return Response(project.artifact_text("features", aid), media_type="text/csv")

    @app.post("/api/neighbors", response_model=schemas.NeighborsResponse)
    def post_neighbors(body: schemas.NeighborsRequest):
        """Pool tiles nearest to the labelled seed tiles, for suggestion review."""
        matrix, _, _ = load_features(project, body.features_id)
        by_key = {t.key(): i for i, t in enumerate(matrix.tiles)}
        rows = []
        for seed in body.seeds:
            key = (seed.image_id, seed.x, seed.y, seed.size)
            if key not in by_key:
                raise ValueError(f"seed tile {key} is not in features {body.features_id!r}")
            rows.append(by_key[key])
        seeds = FeatureMatrix(
            [matrix.tiles[i] for i in rows], matrix.values[rows], matrix.layout_id
        )
        pairs = nearest_neighbors(seeds, matrix, body.k)
        return schemas.NeighborsResponse(
            rows=[
                schemas.NeighborRow(
                    image_id=t.image_id, x=t.x, y=t.y, size=t.size, distance=d
                )
                for t, d in pairs
            ]
        )

    @app.get("/api/models/{aid}")
    def get_model(aid: str):
        return Response(project.artifact_text("models", aid), media_type="application/json")

    @app.get("/api/reports/{aid}")
    def get_report(aid: str, format: str = Query(default="csv", pattern="^(csv|json)$")):
        text = project.artifact_text("reports", aid)
        if text.lstrip().startswith(("{", "[")):
            # confusion matrices and other JSON-bodied reports
            return Response(text, media_type="application/json")
        if format == "csv":
            return Response(text, media_type="text/csv")
        import csv as _csv

        rows = list(_csv.DictReader(io.StringIO(text)))
        return JSONResponse({"rows": rows})

    @app.get("/api/maps/{aid}")
    def get_map(aid: str):
        return Response(project.artifact_text("maps", aid), media_type="application/json")

    @app.get("/api/maps/{aid}/overlay.png")
    def get_overlay(
        aid: str,
        classes: str = Query(),
        alpha: float = Query(default=0.5, ge=0.0, le=1.0),
    ):
        pmap = PredictionMap.from_json(project.artifact_text("maps", aid))
        meta = project.artifact_meta("maps", aid)
        img = project.get_image(meta["inputs"]["image"])
        wanted = [c for c in classes.split(",") if c]
        out = render_overlay(pmap, img, wanted, alpha=alpha)
        return Response(out.to_png_bytes(), media_type="image/png")

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app


def open_project_app(root: str, static_dir: str | None = None) -> FastAPI:
    """Refuses to start on a corrupt project, with diagnostics in the error."""
    return create_app(Project.open(root), static_dir=static_dir)
