"""HTTP face of a labeling session, consumed by the browser labeler.

Frames and masks travel as the exact binary file formats; everything else is
JSON. Mutating endpoints are serialized through the session lock.
"""

from __future__ import annotations

from contextlib import asynccontextmanager
from pathlib import Path

from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel, Field

from .frameio import write_mask
from .propagation import PropagationParams
from .session import LabelPalette, Session, save_session


class BrushRequest(BaseModel):
    frame: int
    center: list[float] = Field(min_length=3, max_length=3)
    radius: float
    label: int


class PropagateRequest(BaseModel):
    from_: int = Field(alias="from")
    to: int
    mode: str | None = None


def create_app(session: Session, save_dir: Path | None = None) -> FastAPI:
    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        if save_dir is not None:
            with session.lock:
                save_session(session, save_dir)

    app = FastAPI(title="pointbrush", lifespan=lifespan)

    def check_frame(i: int):
        if i < 0 or i >= session.frame_count:
            raise HTTPException(status_code=404, detail=f"no such frame: {i}")

    @app.get("/api/sequence")
    def get_sequence():
        return {
            "frame_count": session.frame_count,
            "fps": session.sequence.nominal_fps,
            "point_counts": session.sequence.point_counts,
        }

    @app.get("/api/frame/{i}")
    def get_frame(i: int):
        check_frame(i)
        data = session.sequence.read_frame_bytes(i)
        return Response(content=data, media_type="application/octet-stream")

    @app.get("/api/mask/{i}")
    def get_mask(i: int):
        check_frame(i)
        with session.lock:
            data = write_mask(session.label_mask(i))
        return Response(content=data, media_type="application/octet-stream")

    @app.post("/api/brush")
    def post_brush(req: BrushRequest):
        check_frame(req.frame)
        try:
            with session.lock:
                changed = session.apply_brush(req.frame, req.center, req.radius, req.label)
        except ValueError as err:
            raise HTTPException(status_code=400, detail=str(err))
        return {"changed": changed}

    @app.post("/api/undo")
    def post_undo():
        try:
            with session.lock:
                frame = session.undo()
        except ValueError as err:
            raise HTTPException(status_code=400, detail=str(err))
        return {"frame": frame}

    @app.post("/api/propagate")
    def post_propagate(req: PropagateRequest):
        check_frame(req.from_)
        check_frame(req.to)
        try:
            with session.lock:
                reports = session.run_propagation(req.from_, req.to, mode=req.mode)
        except ValueError as err:
            raise HTTPException(status_code=400, detail=str(err))
        return [r.to_dict() for r in reports]

    @app.get("/api/palette")
    def get_palette():
        return session.palette.to_list()

    @app.put("/api/palette")
    def put_palette(entries: list[dict]):
        try:
            palette = LabelPalette.from_list(entries)
        except (KeyError, ValueError, TypeError) as err:
            raise HTTPException(status_code=400, detail=f"invalid palette: {err}")
        with session.lock:
            session.palette = palette
            if session.active_label != 0 and session.active_label not in palette:
                session.active_label = palette.entries[0].label if len(palette) else 0
        return palette.to_list()

    @app.get("/api/params")
    def get_params():
        return session.params.to_dict()

    @app.put("/api/params")
    def put_params(payload: dict):
        try:
            params = PropagationParams.from_dict(payload)
        except (KeyError, ValueError, TypeError) as err:
            raise HTTPException(status_code=400, detail=f"invalid params: {err}")
        with session.lock:
            session.params = params
        return params.to_dict()

    return app
