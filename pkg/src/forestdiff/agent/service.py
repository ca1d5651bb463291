"""HTTP facade: sessions, uploads, chat, point queries, artifacts.

State lives in memory; artifact names are content-addressed so repeated runs
of the same analysis overwrite rather than accumulate.
"""

import io
import json
import threading
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, File, Form, HTTPException, UploadFile
from fastapi.responses import Response
from fastapi.staticfiles import StaticFiles
from PIL import Image
from pydantic import BaseModel

from .. import __version__, latent
from ..raster import BitemporalPair, ChangeMask
from .backends import BackendError, make_backend
from .orchestrator import ChatError, handle_chat
from .session import Session
from .tools import ToolCall, execute_tool


class ChatRequest(BaseModel):
    message: str


class PointQueryRequest(BaseModel):
    points: list
    change_angle_threshold: Optional[float] = None
    object_similarity_threshold: Optional[float] = None


def _decode_rgb(data, name):
    try:
        with Image.open(io.BytesIO(data)) as im:
            return np.asarray(im.convert("RGB")).copy()
    except Exception as err:
        raise HTTPException(422, "%s is not a readable image: %s"
                            % (name, err)) from err


def _decode_mask(data, name):
    try:
        with Image.open(io.BytesIO(data)) as im:
            return ChangeMask.from_array(np.asarray(im))
    except HTTPException:
        raise
    except Exception as err:
        raise HTTPException(422, "%s is not a readable mask: %s"
                            % (name, err)) from err


def create_app(backend=None, static_dir=None):
    app = FastAPI(title="forest change workbench", version=__version__)
    if backend is None:
        backend = make_backend()
    sessions = {}
    ids_lock = threading.Lock()
    next_id = [1]

    def get_session(sid):
        session = sessions.get(sid)
        if session is None:
            raise HTTPException(404, "unknown session %r" % (sid,))
        return session

    @app.post("/api/session")
    def new_session():
        with ids_lock:
            sid = "s-%06d" % (next_id[0],)
            next_id[0] += 1
            sessions[sid] = Session(sid)
        return {"session_id": sid}

    @app.post("/api/session/{sid}/pair")
    async def upload_pair(sid: str,
                          image_a: UploadFile = File(...),
                          image_b: UploadFile = File(...),
                          ground_truth: Optional[UploadFile] = File(None),
                          prediction: Optional[UploadFile] = File(None),
                          human_caption: Optional[str] = Form(None)):
        session = get_session(sid)
        a = _decode_rgb(await image_a.read(), "image_a")
        b = _decode_rgb(await image_b.read(), "image_b")
        gt = (_decode_mask(await ground_truth.read(), "ground_truth")
              if ground_truth is not None else None)
        pred = (_decode_mask(await prediction.read(), "prediction")
                if prediction is not None else None)
        try:
            pair = BitemporalPair(a, b, gt)
        except ValueError as err:
            raise HTTPException(422, str(err)) from err
        if pred is not None and pred.bits.shape != a.shape[:2]:
            raise HTTPException(422, "prediction mask dimensions do not "
                                     "match the image pair")
        with session.lock:
            session.pair = pair
            session.precomputed_pred = pred
            session.human_caption = human_caption or None
            session.last_mask = None
            session.last_captions = None
        return {"width": int(a.shape[1]), "height": int(a.shape[0]),
                "ground_truth": gt is not None,
                "prediction": pred is not None}

    @app.post("/api/session/{sid}/proposals")
    async def upload_proposals(sid: str, file: UploadFile = File(...)):
        session = get_session(sid)
        body = await file.read()
        try:
            pf = latent.parse_proposals(json.loads(body))
        except (ValueError, KeyError, TypeError) as err:
            raise HTTPException(422, "bad proposal file: %s" % (err,)) from err
        with session.lock:
            session.proposals = pf
        return {"count": len(pf.proposals), "width": pf.width,
                "height": pf.height, "embedding_dim": pf.embedding_dim}

    @app.post("/api/session/{sid}/chat")
    def chat(sid: str, req: ChatRequest):
        session = get_session(sid)
        with session.lock:
            try:
                outcome = handle_chat(session, req.message, backend)
            except (ChatError, BackendError) as err:
                raise HTTPException(502, str(err)) from err
        return {"reply": outcome.reply, "artifacts": outcome.artifacts,
                "tools_used": outcome.tools_used}

    @app.post("/api/session/{sid}/point-query")
    def point_query(sid: str, req: PointQueryRequest):
        session = get_session(sid)
        args = {"points": req.points}
        if req.change_angle_threshold is not None:
            args["change_angle_threshold"] = req.change_angle_threshold
        if req.object_similarity_threshold is not None:
            args["object_similarity_threshold"] = \
                req.object_similarity_threshold
        with session.lock:
            result = execute_tool(session,
                                  ToolCall("point_query_changes", args))
        if not result.ok:
            raise HTTPException(422, result.text)
        return {"summary": result.text, **result.data}

    @app.get("/api/session/{sid}/artifact/{name}")
    def artifact(sid: str, name: str):
        session = get_session(sid)
        item = session.artifacts.get(name)
        if item is None:
            raise HTTPException(404, "unknown artifact %r" % (name,))
        data, content_type = item
        return Response(content=data, media_type=content_type)

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "version": __version__,
                "backend": getattr(backend, "name", "custom")}

    if static_dir is None:
        static_dir = Path(__file__).parent / "static"
    static_dir = Path(static_dir)
    if static_dir.is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True),
                  name="static")
    return app


def run(host="127.0.0.1", port=8000, backend=None, static_dir=None):
    import uvicorn
    uvicorn.run(create_app(backend, static_dir), host=host, port=port)
