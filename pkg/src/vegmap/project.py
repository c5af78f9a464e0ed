"""Plain-directory project store with JSON indices and content-hash ids.

Every derived artifact is written under its content hash and indexed with
the ids of its inputs, so re-running a deterministic operation lands on the
same id and nothing in the store is unexplained.
"""

from __future__ import annotations

import hashlib
import io
import json
import threading
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from PIL import Image

from .imaging import CoverMask, HueRangeSet, RgbImage
from .mapper import DEFAULT_COLORS

PROJECT_FORMAT_VERSION = 1

ARTIFACT_KINDS = {
    "manifests": "jsonl",
    "features": "csv",
    "models": "json",
    "reports": "csv",
    "maps": "json",
}

JOB_KINDS = ("select", "embed", "train", "cv", "predict")
JOB_STATUSES = ("queued", "running", "done", "failed")


class ProjectError(ValueError):
    pass


def content_id(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()[:12]


def _write_atomic(path: Path, data: bytes) -> None:
    # write-then-rename so concurrent readers (job polling, another process)
    # never observe a truncated file
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    tmp.replace(path)


@dataclass
class Job:
    id: str
    kind: str
    parameters: dict
    status: str = "queued"
    result: dict | None = None
    diagnostics: str | None = None
    created: float = field(default_factory=time.time)
    started: float | None = None
    finished: float | None = None

    def __post_init__(self):
        if self.kind not in JOB_KINDS:
            raise ValueError(f"unknown job kind {self.kind!r}")
        if self.status not in JOB_STATUSES:
            raise ValueError(f"unknown job status {self.status!r}")
        if self.status in ("done", "failed") and self.result is None and not self.diagnostics:
            raise ValueError("terminal job needs a result or diagnostics")


class Project:
    """One annotation project rooted at a directory."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._lock = threading.RLock()
        meta_path = self.root / "project.json"
        if not meta_path.is_file():
            raise ProjectError(f"{self.root} is not a project: missing project.json")
        try:
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ProjectError(f"corrupt project.json under {self.root}: {exc}") from exc
        if meta.get("format_version") != PROJECT_FORMAT_VERSION:
            raise ProjectError(f"unsupported project format_version {meta.get('format_version')!r}")
        if not isinstance(meta.get("classes"), list):
            raise ProjectError("project.json lacks a class list")
        self._meta = meta

    @classmethod
    def create(cls, root: str | Path, classes: list[str] | None = None) -> "Project":
        root = Path(root)
        if (root / "project.json").exists():
            raise ProjectError(f"{root} already holds a project")
        root.mkdir(parents=True, exist_ok=True)
        for sub in ("images", "masks", "ranges", "jobs", *ARTIFACT_KINDS):
            (root / sub).mkdir(exist_ok=True)
        meta = {"format_version": PROJECT_FORMAT_VERSION, "classes": []}
        (root / "project.json").write_text(json.dumps(meta, sort_keys=True), encoding="utf-8")
        project = cls(root)
        for name in classes or ():
            project.add_class(name)
        return project

    @classmethod
    def open(cls, root: str | Path) -> "Project":
        return cls(root)

    def _save_meta(self) -> None:
        _write_atomic(self.root / "project.json", json.dumps(self._meta, sort_keys=True).encode("utf-8"))

    # -- classes (append-only) ------------------------------------------------

    @property
    def classes(self) -> list[dict]:
        return [dict(c) for c in self._meta["classes"]]

    @property
    def class_names(self) -> list[str]:
        return [c["name"] for c in self._meta["classes"]]

    def add_class(self, name: str, color: tuple[int, int, int] | None = None) -> None:
        with self._lock:
            if name in self.class_names:
                raise ProjectError(f"class {name!r} already exists")
            if color is None:
                color = DEFAULT_COLORS[len(self._meta["classes"]) % len(DEFAULT_COLORS)]
            self._meta["classes"].append({"name": name, "color": list(color)})
            self._save_meta()

    def require_class(self, name: str) -> None:
        if name not in self.class_names:
            raise KeyError(f"unknown class {name!r}")

    # -- images ----------------------------------------------------------------

    def _index_path(self, kind: str) -> Path:
        return self.root / kind / "index.json"

    def _read_index(self, kind: str) -> dict:
        path = self._index_path(kind)
        if not path.is_file():
            return {}
        return json.loads(path.read_text(encoding="utf-8"))

    def _write_index(self, kind: str, index: dict) -> None:
        _write_atomic(self._index_path(kind), json.dumps(index, sort_keys=True, indent=1).encode("utf-8"))

    def add_image(self, data: bytes) -> str:
        """Decode PNG/JPEG bytes, canonicalize to PNG, store under content id."""
        try:
            decoded = Image.open(io.BytesIO(data))
            decoded.load()
        except Exception as exc:
            raise ProjectError(f"not a decodable image: {exc}") from exc
        img = RgbImage.from_bytes(data)
        blob = img.to_png_bytes()
        image_id = content_id(blob)
        with self._lock:
            _write_atomic(self.root / "images" / f"{image_id}.png", blob)
            index = self._read_index("images")
            index[image_id] = {"width": img.width, "height": img.height}
            self._write_index("images", index)
        return image_id

    def image_ids(self) -> list[str]:
        return sorted(self._read_index("images"))

    def image_meta(self, image_id: str) -> dict:
        index = self._read_index("images")
        if image_id not in index:
            raise KeyError(f"unknown image {image_id!r}")
        return index[image_id]

    def image_bytes(self, image_id: str) -> bytes:
        self.image_meta(image_id)
        return (self.root / "images" / f"{image_id}.png").read_bytes()

    def get_image(self, image_id: str) -> RgbImage:
        return RgbImage.from_bytes(self.image_bytes(image_id))

    # -- masks -----------------------------------------------------------------

    def _mask_path(self, image_id: str, class_name: str) -> Path:
        return self.root / "masks" / f"{image_id}__{class_name}.png"

    def put_mask(self, image_id: str, class_name: str, data: bytes) -> None:
        meta = self.image_meta(image_id)
        self.require_class(class_name)
        try:
            mask = CoverMask.from_bytes(data, class_name)
        except Exception as exc:
            raise ProjectError(f"not a decodable mask: {exc}") from exc
        if (mask.width, mask.height) != (meta["width"], meta["height"]):
            raise ProjectError(
                f"mask is {mask.width}x{mask.height} but image {image_id} is {meta['width']}x{meta['height']}"
            )
        with self._lock:
            _write_atomic(self._mask_path(image_id, class_name), mask.to_png_bytes())

    def mask_bytes(self, image_id: str, class_name: str) -> bytes:
        path = self._mask_path(image_id, class_name)
        if not path.is_file():
            raise KeyError(f"no mask for image {image_id!r} class {class_name!r}")
        return path.read_bytes()

    def get_mask(self, image_id: str, class_name: str) -> CoverMask:
        return CoverMask.from_bytes(self.mask_bytes(image_id, class_name), class_name)

    def has_mask(self, image_id: str, class_name: str) -> bool:
        return self._mask_path(image_id, class_name).is_file()

    # -- hue ranges --------------------------------------------------------------

    def put_hue_ranges(self, class_name: str, ranges: HueRangeSet) -> None:
        self.require_class(class_name)
        with self._lock:
            path = self.root / "ranges" / f"{class_name}.json"
            _write_atomic(path, json.dumps({"intervals": ranges.intervals}, sort_keys=True).encode("utf-8"))

    def get_hue_ranges(self, class_name: str) -> HueRangeSet:
        path = self.root / "ranges" / f"{class_name}.json"
        if not path.is_file():
            raise KeyError(f"no hue ranges stored for class {class_name!r}")
        raw = json.loads(path.read_text(encoding="utf-8"))
        return HueRangeSet([tuple(iv) for iv in raw["intervals"]])

    def has_hue_ranges(self, class_name: str) -> bool:
        return (self.root / "ranges" / f"{class_name}.json").is_file()

    # -- derived artifacts -------------------------------------------------------

    def save_artifact(self, kind: str, text: str, inputs: dict, origin: str, extra: dict | None = None) -> str:
        if kind not in ARTIFACT_KINDS:
            raise ValueError(f"unknown artifact kind {kind!r}")
        blob = text.encode("utf-8")
        aid = content_id(blob)
        with self._lock:
            _write_atomic(self.root / kind / f"{aid}.{ARTIFACT_KINDS[kind]}", blob)
            index = self._read_index(kind)
            index[aid] = {"inputs": inputs, "origin": origin, **(extra or {})}
            self._write_index(kind, index)
        return aid

    def artifact_text(self, kind: str, aid: str) -> str:
        if kind not in ARTIFACT_KINDS:
            raise ValueError(f"unknown artifact kind {kind!r}")
        path = self.root / kind / f"{aid}.{ARTIFACT_KINDS[kind]}"
        if not path.is_file():
            raise KeyError(f"unknown {kind[:-1]} {aid!r}")
        return path.read_text(encoding="utf-8")

    def artifact_meta(self, kind: str, aid: str) -> dict:
        index = self._read_index(kind)
        if aid not in index:
            raise KeyError(f"unknown {kind[:-1]} {aid!r}")
        return index[aid]

    def artifact_ids(self, kind: str) -> list[str]:
        return sorted(self._read_index(kind))

    # -- jobs ----------------------------------------------------------------------

    def new_job(self, kind: str, parameters: dict) -> Job:
        with self._lock:
            counter_path = self.root / "jobs" / "counter.json"
            count = json.loads(counter_path.read_text())["next"] if counter_path.is_file() else 1
            _write_atomic(counter_path, json.dumps({"next": count + 1}).encode("utf-8"))
            job = Job(f"j{count:06d}", kind, parameters)
            self.save_job(job)
        return job

    def save_job(self, job: Job) -> None:
        with self._lock:
            path = self.root / "jobs" / f"{job.id}.json"
            _write_atomic(path, json.dumps(asdict(job), sort_keys=True).encode("utf-8"))

    def get_job(self, job_id: str) -> Job:
        path = self.root / "jobs" / f"{job_id}.json"
        if not path.is_file():
            raise KeyError(f"unknown job {job_id!r}")
        return Job(**json.loads(path.read_text(encoding="utf-8")))

    def job_ids(self) -> list[str]:
        return sorted(p.stem for p in (self.root / "jobs").glob("j*.json"))
