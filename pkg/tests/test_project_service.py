"""Project store semantics and the HTTP service end to end."""

import json
import time

import numpy as np
import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from vegmap.cli import main as cli_main
from vegmap.imaging import CoverMask, HueRangeSet
from vegmap.project import Job, Project, ProjectError, content_id
from vegmap.service import create_app

BEET_RANGES = "85-125"


def _png(img):
    return img.to_png_bytes()


def _mask_bytes(truth, index, name):
    return CoverMask(name, truth.labels == index).to_png_bytes()


# -- project store ---------------------------------------------------------------------


def test_project_create_and_reopen(tmp_path):
    root = tmp_path / "proj"
    project = Project.create(root, ["soil", "beet"])
    assert project.class_names == ["soil", "beet"]
    again = Project.open(root)
    assert again.class_names == ["soil", "beet"]
    assert [len(c["color"]) for c in again.classes] == [3, 3]
    with pytest.raises(ProjectError, match="already holds"):
        Project.create(root)
    with pytest.raises(ProjectError, match="missing project.json"):
        Project.open(tmp_path / "nowhere")


def test_project_rejects_corrupt_metadata(tmp_path):
    root = tmp_path / "proj"
    Project.create(root)
    (root / "project.json").write_text("{not json", encoding="utf-8")
    with pytest.raises(ProjectError, match="corrupt"):
        Project.open(root)
    (root / "project.json").write_text(json.dumps({"format_version": 99, "classes": []}))
    with pytest.raises(ProjectError, match="format_version"):
        Project.open(root)


def test_class_registry_is_append_only(tmp_path):
    project = Project.create(tmp_path / "p", ["soil"])
    project.add_class("beet", color=(1, 2, 3))
    assert {"name": "beet", "color": [1, 2, 3]} in project.classes
    with pytest.raises(ProjectError, match="already exists"):
        project.add_class("soil")
    with pytest.raises(KeyError):
        project.require_class("thistle")


def test_images_are_content_addressed(tmp_path, small_scene):
    img, _ = small_scene
    project = Project.create(tmp_path / "p")
    image_id = project.add_image(_png(img))
    assert image_id == content_id(project.image_bytes(image_id))
    assert len(image_id) == 12
    # re-adding the same pixels lands on the same id
    assert project.add_image(_png(img)) == image_id
    assert project.image_ids() == [image_id]
    assert project.image_meta(image_id) == {"width": 512, "height": 512}
    np.testing.assert_array_equal(project.get_image(image_id).data, img.data)
    with pytest.raises(ProjectError, match="not a decodable image"):
        project.add_image(b"not a png")
    with pytest.raises(KeyError):
        project.image_meta("doesnotexist")


def test_mask_store_roundtrip(tmp_path, small_scene):
    img, truth = small_scene
    project = Project.create(tmp_path / "p", ["soil", "beet"])
    image_id = project.add_image(_png(img))
    blob = _mask_bytes(truth, 1, "beet")
    project.put_mask(image_id, "beet", blob)
    assert project.has_mask(image_id, "beet")
    assert not project.has_mask(image_id, "soil")
    got = project.get_mask(image_id, "beet")
    np.testing.assert_array_equal(got.bits, truth.labels == 1)
    with pytest.raises(KeyError):
        project.put_mask(image_id, "thistle", blob)
    with pytest.raises(KeyError):
        project.mask_bytes(image_id, "soil")
    tiny = CoverMask("beet", np.ones((4, 4), dtype=bool)).to_png_bytes()
    with pytest.raises(ProjectError, match="mask is 4x4"):
        project.put_mask(image_id, "beet", tiny)


def test_hue_range_store(tmp_path):
    project = Project.create(tmp_path / "p", ["beet"])
    ranges = HueRangeSet.parse("85-125,200-210")
    project.put_hue_ranges("beet", ranges)
    assert project.has_hue_ranges("beet")
    assert project.get_hue_ranges("beet").intervals == ranges.intervals
    with pytest.raises(KeyError):
        project.get_hue_ranges("soil")
    with pytest.raises(KeyError):
        project.put_hue_ranges("soil", ranges)


def test_artifact_store(tmp_path):
    project = Project.create(tmp_path / "p")
    aid = project.save_artifact("reports", "a,b\n1,2\n", {"features": "f1"}, "job:j000001")
    assert aid == content_id(b"a,b\n1,2\n")
    assert project.artifact_text("reports", aid) == "a,b\n1,2\n"
    assert project.artifact_meta("reports", aid)["inputs"] == {"features": "f1"}
    # same content from a different origin keeps the id stable
    assert project.save_artifact("reports", "a,b\n1,2\n", {}, "cli") == aid
    assert project.artifact_ids("reports") == [aid]
    with pytest.raises(ValueError, match="unknown artifact kind"):
        project.save_artifact("blobs", "x", {}, "cli")
    with pytest.raises(KeyError):
        project.artifact_text("reports", "ffffffffffff")


def test_job_journal(tmp_path):
    project = Project.create(tmp_path / "p")
    one = project.new_job("select", {"size": 64})
    two = project.new_job("embed", {})
    assert (one.id, two.id) == ("j000001", "j000002")
    assert project.job_ids() == ["j000001", "j000002"]
    one.status = "done"
    one.result = {"kind": "manifests", "id": "abc"}
    project.save_job(one)
    back = project.get_job("j000001")
    assert back.status == "done" and back.result == {"kind": "manifests", "id": "abc"}
    with pytest.raises(KeyError):
        project.get_job("j999999")
    with pytest.raises(ValueError, match="job kind"):
        Job("j1", "compile", {})
    with pytest.raises(ValueError, match="terminal job"):
        Job("j1", "select", {}, status="failed")


# -- HTTP service -------------------------------------------------------------------------


@pytest.fixture(scope="module")
def service(tmp_path_factory, small_scene):
    img, truth = small_scene
    root = tmp_path_factory.mktemp("svc") / "proj"
    project = Project.create(root, list(truth.class_list))
    with TestClient(create_app(project)) as client:
        image_id = client.post(
            "/api/images", content=_png(img), headers={"content-type": "image/png"}
        ).json()["id"]
        for index, name in enumerate(truth.class_list):
            resp = client.put(f"/api/images/{image_id}/masks/{name}", content=_mask_bytes(truth, index, name))
            assert resp.status_code == 200
        yield client, project, image_id, img, truth


def _wait(client, job_id, timeout=120.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        job = client.get(f"/api/jobs/{job_id}").json()
        if job["status"] in ("done", "failed"):
            return job
        time.sleep(0.02)
    raise TimeoutError(f"job {job_id} did not finish")


def _run(client, endpoint, body):
    resp = client.post(endpoint, json=body)
    assert resp.status_code == 202, resp.text
    job = _wait(client, resp.json()["job_id"])
    assert job["status"] == "done", job["diagnostics"]
    return job["result"]


def test_project_info_lists_classes_and_images(service):
    client, _, image_id, _, truth = service
    info = client.get("/api/project").json()
    assert info["format_version"] == 1
    assert [c["name"] for c in info["classes"]] == list(truth.class_list)
    assert info["images"] == [image_id]
    listed = client.get("/api/images").json()
    assert listed == [{"id": image_id, "width": 512, "height": 512}]


def test_full_png_and_thumbnail(service):
    client, project, image_id, _, _ = service
    full = client.get(f"/api/images/{image_id}/full.png")
    assert full.status_code == 200
    assert full.content == project.image_bytes(image_id)
    thumb = client.get(f"/api/images/{image_id}/full.png", params={"maxdim": 100})
    from PIL import Image
    import io

    with Image.open(io.BytesIO(thumb.content)) as im:
        assert max(im.size) == 100


def test_mask_roundtrip_over_http(service):
    client, _, image_id, _, truth = service
    got = client.get(f"/api/images/{image_id}/masks/beet")
    assert got.headers["content-type"] == "image/png"
    mask = CoverMask.from_bytes(got.content, "beet")
    np.testing.assert_array_equal(mask.bits, truth.labels == truth.class_list.index("beet"))


def test_spectrum_has_360_normalized_bins(service):
    client, _, image_id, _, _ = service
    resp = client.get(f"/api/images/{image_id}/spectrum", params={"class": "beet"})
    assert resp.status_code == 200
    body = resp.json()
    bins = body["bins"]
    assert len(bins) == 360
    assert sum(bins) == pytest.approx(1.0, abs=1e-6)
    assert body["pixel_count"] > 0
    assert body["derived"] is None
    # the beet hue body peaks inside its declared interval
    assert 85 <= int(np.argmax(bins)) <= 125

    # asking for ?mass= also returns auto-derived intervals around that peak
    derived = client.get(
        f"/api/images/{image_id}/spectrum", params={"class": "beet", "mass": 0.95}
    ).json()["derived"]
    assert 1 <= len(derived) <= 2
    lo, hi = derived[0]
    assert 85 <= lo <= hi <= 125


def test_hue_ranges_put_get(service):
    client, _, _, _, _ = service
    missing = client.get("/api/classes/beet/hue-ranges")
    assert missing.status_code == 404
    put = client.put("/api/classes/beet/hue-ranges", json={"intervals": [[85, 125]]})
    assert put.status_code == 200
    assert client.get("/api/classes/beet/hue-ranges").json() == {"intervals": [[85, 125]]}


def test_annotation_to_map_workflow(service, tmp_path):
    client, project, image_id, img, truth = service
    # the beet ranges stored by the previous test refine its mask during select
    client.put("/api/classes/beet/hue-ranges", json={"intervals": [[85, 125]]})
    manifests = {}
    for name in truth.class_list:
        result = _run(
            client,
            "/api/select",
            {"image_id": image_id, "class": name, "size": 64, "sth": 0.6, "shifts": 2},
        )
        assert result["kind"] == "manifests" and result["tiles"] > 0
        manifests[name] = result["id"]

    # merge the per-class manifests client-side and store the combined set
    merged_text = "".join(
        client.get(f"/api/manifests/{manifests[name]}").text for name in truth.class_list
    )
    posted = client.post("/api/manifests", content=merged_text.encode("utf-8"))
    assert posted.status_code == 201
    merged_id = posted.json()["id"]
    assert posted.json()["tiles"] == sum(
        len(client.get(f"/api/manifests/{mid}").text.splitlines()) for mid in manifests.values()
    )

    embedded = _run(client, "/api/embed", {"manifest_id": merged_id})
    features_id = embedded["id"]
    assert embedded["rows"] == posted.json()["tiles"]
    csv_text = client.get(f"/api/features/{features_id}").text
    assert csv_text.splitlines()[0].startswith("image_id")

    trained = _run(client, "/api/train", {"features_id": features_id, "learner": "tree", "seed": 1})
    model_id = trained["id"]
    envelope = json.loads(client.get(f"/api/models/{model_id}").text)
    assert envelope["kind"] == "Tree"

    report = _run(
        client, "/api/cv", {"features_id": features_id, "learners": ["knn", "tree"], "folds": 3}
    )
    csv_report = client.get(f"/api/reports/{report['id']}").text
    assert csv_report.splitlines()[0].startswith("learner,dataset")
    rows = client.get(f"/api/reports/{report['id']}", params={"format": "json"}).json()["rows"]
    assert {r["learner"] for r in rows} == {"kNN", "Tree"}
    assert all(r["CA"] for r in rows)

    # each learner also gets a confusion-matrix report, served as JSON
    assert set(report["confusions"]) == {"kNN", "Tree"}
    for cid in report["confusions"].values():
        resp = client.get(f"/api/reports/{cid}")
        assert resp.headers["content-type"].startswith("application/json")
        cm = resp.json()
        assert cm["classes"] == sorted(truth.class_list)
        for col in range(len(cm["classes"])):
            total = sum(row[col] for row in cm["percent"])
            assert total == pytest.approx(100.0, abs=0.1)

    # neighbor suggestions: seed with the first manifest tile, distances ascend
    line = json.loads(merged_text.splitlines()[0])
    first = {k: line[k] for k in ("image_id", "x", "y", "size")}
    suggested = client.post(
        "/api/neighbors", json={"features_id": features_id, "seeds": [first], "k": 5}
    )
    assert suggested.status_code == 200
    distances = [r["distance"] for r in suggested.json()["rows"]]
    assert len(distances) == 5
    assert distances == sorted(distances)
    bad_seed = client.post(
        "/api/neighbors",
        json={"features_id": features_id, "seeds": [{"image_id": "ghost", "x": 0, "y": 0, "size": 64}]},
    )
    assert bad_seed.status_code == 400

    predicted = _run(client, "/api/predict", {"model_id": model_id, "image_id": image_id, "size": 64})
    assert predicted["cells"] == 64
    pmap = json.loads(client.get(f"/api/maps/{predicted['id']}").text)
    assert (pmap["rows"], pmap["cols"]) == (8, 8)

    overlay = client.get(
        f"/api/maps/{predicted['id']}/overlay.png", params={"classes": "beet,mustard", "alpha": 0.4}
    )
    assert overlay.status_code == 200
    from PIL import Image
    import io

    with Image.open(io.BytesIO(overlay.content)) as im:
        assert im.size == (512, 512)

    # identical parameters through the CLI yield byte-identical manifests
    runner = CliRunner()
    with runner.isolated_filesystem(temp_dir=tmp_path):
        img.save("scene.png")
        CoverMask("beet", truth.labels == truth.class_list.index("beet")).save("beet.png")
        run = runner.invoke(
            cli_main,
            [
                "select",
                "--image", "scene.png",
                "--image-id", image_id,
                "--mask", "beet.png",
                "--class", "beet",
                "--hue", BEET_RANGES,
                "--size", "64",
                "--sth", "0.6",
                "--shifts", "2",
                "--out", "manifest.jsonl",
            ],
        )
        assert run.exit_code == 0, run.output
        cli_bytes = open("manifest.jsonl", "rb").read()
    assert cli_bytes == client.get(f"/api/manifests/{manifests['beet']}").content


def test_failed_job_reports_diagnostics(service):
    client, _, _, _, _ = service
    line = json.dumps(
        {"image_id": "ghost", "x": 0, "y": 0, "size": 64, "label": "beet", "provenance": "direct"}
    )
    posted = client.post("/api/manifests", content=(line + "\n").encode("utf-8"))
    assert posted.status_code == 201
    resp = client.post("/api/embed", json={"manifest_id": posted.json()["id"]})
    job = _wait(client, resp.json()["job_id"])
    assert job["status"] == "failed"
    assert "ghost" in job["diagnostics"]


def test_error_bodies_are_machine_readable(service):
    client, _, image_id, _, _ = service
    missing = client.get("/api/images/nope/full.png")
    assert missing.status_code == 404
    body = missing.json()
    assert set(body) == {"code", "message", "detail"}
    assert body["code"] == "not_found" and "nope" in body["message"]

    unknown_artifact = client.post("/api/train", json={"features_id": "nope", "learner": "tree"})
    assert unknown_artifact.status_code == 404

    invalid = client.post("/api/select", json={"image_id": image_id, "class": "beet", "size": 64, "sth": 1.5})
    assert invalid.status_code == 422
    assert invalid.json()["code"] == "validation_error"
    assert invalid.json()["detail"]

    duplicate = client.post("/api/classes", json={"name": "beet"})
    assert duplicate.status_code == 400
    assert duplicate.json()["code"] == "bad_request"

    empty = client.post("/api/manifests", content=b"")
    assert empty.status_code == 400
    dup_line = json.dumps({"image_id": "a", "x": 0, "y": 0, "size": 8, "label": None, "provenance": "direct"})
    doubled = client.post("/api/manifests", content=f"{dup_line}\n{dup_line}\n".encode())
    assert doubled.status_code == 400
    assert "duplicate" in doubled.json()["message"]

    unknown_learner = client.post("/api/cv", json={"features_id": "nope", "learners": ["quantum"]})
    assert unknown_learner.status_code == 404  # artifact check precedes learner parsing

    bad_mask = client.put(f"/api/images/{image_id}/masks/beet", content=b"junk")
    assert bad_mask.status_code == 400


def test_select_requires_existing_mask(service):
    client, project, image_id, _, _ = service
    client.post("/api/classes", json={"name": "lamium"})
    resp = client.post(
        "/api/select", json={"image_id": image_id, "class": "lamium", "size": 64, "sth": 0.5}
    )
    assert resp.status_code == 404
    assert "no mask" in resp.json()["message"]
