"""Local HTTP API for the operator review workflow.

Serves the project state machine over loopback. Request and response
bodies are JSON like the sidecar files; errors always carry the shape
{"error": <code>, "detail": <message>} with a matching HTTP status.

The service is deliberately local-only by default: recordings contain
sensitive personal data, so media bytes never leave the machine unless
the operator explicitly binds a non-loopback interface.
"""

from __future__ import annotations

import os
import uuid
from typing import Optional

from fastapi import Body, FastAPI, Query, Request, Response
from fastapi.responses import JSONResponse

from ..model import AnonymisationTask
from ..redaction import MarginConfig
from ..tracking import TrackerConfig
from .project import (
    InvalidInput,
    ProjectInputs,
    ReviewError,
    ReviewProject,
    UnknownResource,
)


def create_app(projects_root: str) -> FastAPI:
    os.makedirs(projects_root, exist_ok=True)
    app = FastAPI(title="anonymisation review", docs_url=None, redoc_url=None)
    projects: dict[str, ReviewProject] = {}

    def get_project(project_id: str) -> ReviewProject:
        project = projects.get(project_id)
        if project is None:
            project = ReviewProject.load(os.path.join(projects_root, project_id))
            projects[project_id] = project
        return project

    @app.exception_handler(ReviewError)
    async def _review_error(request: Request, exc: ReviewError):
        return JSONResponse(status_code=exc.status,
                            content={"error": exc.code, "detail": exc.detail})

    @app.exception_handler(ValueError)
    async def _value_error(request: Request, exc: ValueError):
        # covers sidecar/manifest loader errors and bad domain values
        return JSONResponse(status_code=422,
                            content={"error": "invalid", "detail": str(exc)})

    @app.exception_handler(FileNotFoundError)
    async def _missing_file(request: Request, exc: FileNotFoundError):
        return JSONResponse(status_code=422,
                            content={"error": "missing_file", "detail": str(exc)})

    @app.post("/projects")
    def create_project(payload: dict = Body(...)):
        for key in ("frames_dir", "detections", "embeddings"):
            if key not in payload:
                raise InvalidInput(f"payload is missing required key {key!r}")
        project_id = payload.get("project_id") or uuid.uuid4().hex[:12]
        inputs = ProjectInputs(
            frames_dir=payload["frames_dir"],
            detections=payload["detections"],
            embeddings=payload["embeddings"],
            diarization=payload.get("diarization"),
            shots=payload.get("shots"),
            labels=payload.get("labels"),
        )
        task = AnonymisationTask.from_dict(payload.get("task", {}))
        project = ReviewProject.create(
            os.path.join(projects_root, project_id), inputs, task,
            project_id=project_id)
        projects[project_id] = project
        return project.snapshot()

    @app.get("/projects/{project_id}")
    def project_snapshot(project_id: str):
        return get_project(project_id).snapshot()

    @app.post("/projects/{project_id}/track")
    def run_tracking(project_id: str, payload: dict = Body(default={})):
        config = TrackerConfig(
            iou_min=float(payload.get("iou_min", 0.3)),
            max_gap=int(payload.get("max_gap", 10)),
            min_track_len=int(payload.get("min_track_len", 5)),
        )
        return get_project(project_id).run_tracking(config)

    @app.get("/projects/{project_id}/tracklets")
    def list_tracklets(project_id: str, scene: Optional[int] = Query(default=None)):
        return {"tracklets": get_project(project_id).tracklet_summaries(scene)}

    @app.get("/projects/{project_id}/summary")
    def decision_summary(project_id: str):
        return get_project(project_id).decision_summary()

    @app.post("/projects/{project_id}/reference")
    def set_reference(project_id: str, payload: dict = Body(...)):
        track_ids = payload.get("track_ids")
        if not isinstance(track_ids, list) or not track_ids:
            raise InvalidInput("payload needs a non-empty track_ids list")
        return get_project(project_id).set_reference(
            [str(t) for t in track_ids],
            aggregator=payload.get("aggregator"),
            sample_stride=payload.get("sample_stride"),
        )

    @app.post("/projects/{project_id}/threshold")
    def set_threshold(project_id: str, payload: dict = Body(...)):
        if "value" not in payload:
            raise InvalidInput("payload needs a value field")
        value = payload["value"]
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise InvalidInput("threshold value must be a number")
        return get_project(project_id).set_threshold(float(value))

    @app.get("/projects/{project_id}/clusters")
    def list_clusters(project_id: str):
        return get_project(project_id).cluster_summaries()

    @app.post("/projects/{project_id}/clusters/pick")
    def pick_clusters(project_id: str, payload: dict = Body(...)):
        cluster_ids = payload.get("cluster_ids")
        if not isinstance(cluster_ids, list):
            raise InvalidInput("payload needs a cluster_ids list")
        return get_project(project_id).pick_clusters(
            [int(c) for c in cluster_ids], pad=payload.get("pad"))

    @app.get("/projects/{project_id}/segments/{sid}/audio")
    def segment_audio(project_id: str, sid: str):
        wav = get_project(project_id).snippet_wav(sid)
        return Response(content=wav, media_type="audio/wav")

    @app.get("/projects/{project_id}/frames/{frame_index}/thumb")
    def frame_thumb(project_id: str, frame_index: int,
                    track: Optional[str] = Query(default=None)):
        png = get_project(project_id).thumb_png(frame_index, track_id=track)
        return Response(content=png, media_type="image/png")

    @app.post("/projects/{project_id}/approve")
    def approve(project_id: str, payload: dict = Body(default={})):
        margins = None
        if "margins" in payload:
            margins = MarginConfig.from_dict(payload["margins"])
        style = payload.get("style")
        temporal_pad = payload.get("temporal_pad")
        return get_project(project_id).approve(
            confirm=bool(payload.get("confirm", False)), style=style,
            margins=margins,
            temporal_pad=None if temporal_pad is None else int(temporal_pad))

    @app.post("/projects/{project_id}/execute")
    def execute(project_id: str):
        return get_project(project_id).execute()

    @app.get("/projects/{project_id}/report")
    def report(project_id: str):
        return get_project(project_id).report()

    @app.get("/projects/{project_id}/export/{fmt}")
    def export(project_id: str, fmt: str):
        if fmt not in ("via", "eaf"):
            raise UnknownResource(f"unknown export format {fmt!r}")
        text, media_type = get_project(project_id).export(fmt)
        return Response(content=text, media_type=media_type)

    return app
