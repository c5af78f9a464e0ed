"""Request and response bodies for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field


class ClassEntry(BaseModel):
    name: str
    color: list[int]


class ProjectInfo(BaseModel):
    format_version: int
    classes: list[ClassEntry]
    images: list[str]


class NewClassRequest(BaseModel):
    name: str = Field(min_length=1)
    color: list[int] | None = None


class ImageMeta(BaseModel):
    id: str
    width: int
    height: int


class HueRangesBody(BaseModel):
    intervals: list[tuple[int, int]]


class SpectrumResponse(BaseModel):
    bins: list[float]
    pixel_count: int
    # present when the caller asked for auto-derived ranges via ?mass=
    derived: list[tuple[int, int]] | None = None


class ManifestInfo(BaseModel):
    id: str
    tiles: int


class SelectRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    image_id: str
    class_name: str = Field(alias="class")
    size: int = Field(ge=1)
    sth: float = Field(gt=0.0, le=1.0)
    shifts: int = Field(default=3, ge=1)
    hue_ranges: str | None = None
    sat_min: float = Field(default=0.05, ge=0.0, le=1.0)
    keep_undefined: bool = False


class EmbedRequest(BaseModel):
    manifest_id: str


class TrainRequest(BaseModel):
    features_id: str
    learner: str
    hyperparameters: dict = Field(default_factory=dict)
    seed: int = 0


class CvRequest(BaseModel):
    features_id: str
    learners: list[str] = Field(min_length=1)
    folds: int = Field(default=3, ge=2)
    seed: int = 0
    dataset_name: str | None = None


class PredictRequest(BaseModel):
    model_id: str
    image_id: str
    size: int = Field(ge=1)


class TileKey(BaseModel):
    image_id: str
    x: int = Field(ge=0)
    y: int = Field(ge=0)
    size: int = Field(ge=1)


class NeighborsRequest(BaseModel):
    features_id: str
    seeds: list[TileKey] = Field(min_length=1)
    k: int = Field(default=8, ge=1)


class NeighborRow(BaseModel):
    image_id: str
    x: int
    y: int
    size: int
    distance: float


class NeighborsResponse(BaseModel):
    rows: list[NeighborRow]


class JobRef(BaseModel):
    job_id: str


class JobRecord(BaseModel):
    id: str
    kind: str
    parameters: dict
    status: str
    result: dict | None
    diagnostics: str | None
    created: float
    started: float | None
    finished: float | None


class ErrorBody(BaseModel):
    code: str
    message: str
    detail: str | None = None
