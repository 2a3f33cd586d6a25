"""HTTP frontend for the interactive refinement loop.

A session pins one loaded volume; the client fetches windowed slice images,
posts segmentation requests (one primary seed plus any number of extras),
and exports the latest result.  Within a session requests serialize with a
latest-wins queue of depth one: the run in flight always completes and its
result stays available, a waiting request is superseded by any newer one.
"""

from __future__ import annotations

import io
import json
import os
import tempfile
import threading
import uuid
import zipfile

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response
from PIL import Image

from .errors import ConfigError, EngineError, VolumeFormatError
from .metrics import CaseStats, volume_cm3
from .pipeline import run_segmentation
from .spheregraph import GraphParams
from .surface import save_obj
from .volume import SeedSet, load_mask, load_volume, save_mask


def _error(status, kind, message):
    return JSONResponse(status_code=status,
                        content={"error": {"kind": kind, "message": message}})


def _engine_error(status, exc):
    return JSONResponse(status_code=status, content=exc.to_json())


class _Session:
    """Server-side state for one loaded volume."""

    def __init__(self, vol, reference=None):
        self.id = uuid.uuid4().hex
        self.vol = vol
        self.reference = reference
        self.lock = threading.Lock()          # held for the whole run
        self.ticket_lock = threading.Lock()   # guards the arrival counter only
        self.counter = 0
        self.pending = 0
        self.latest = None     # most recent completed run
        self.oneclick = None   # most recent zero-extras run

    def next_ticket(self):
        with self.ticket_lock:
            self.counter += 1
            self.pending = self.counter
            return self.counter


def _window(data, lo, hi):
    """Linear 8-bit windowing: lo -> 0, hi -> 255, clamped; a degenerate
    window (hi <= lo) maps everything at or above lo to 255."""
    if hi <= lo:
        return np.where(data >= lo, 255, 0).astype(np.uint8)
    scaled = (data.astype(np.float64) - lo) / (hi - lo)
    return np.rint(np.clip(scaled, 0.0, 1.0) * 255.0).astype(np.uint8)


def _to_mm(point, vol, voxel_coords):
    # voxel indices address voxel centers: index i sits at (i + 0.5) * spacing
    p = np.asarray(point, dtype=np.float64)
    if voxel_coords:
        return (p + 0.5) * np.asarray(vol.spacing_mm)
    return p


async def _open_payload(request):
    """Volume (+ optional reference mask) from a JSON path body or a
    multipart upload of the native payload/sidecar pair."""
    ctype = request.headers.get("content-type", "")
    if ctype.startswith("multipart/form-data"):
        form = await request.form()
        if "volume" not in form or "meta" not in form:
            raise VolumeFormatError("upload needs 'volume' payload and 'meta' sidecar parts")
        with tempfile.TemporaryDirectory() as tmp:
            vol_path = os.path.join(tmp, "upload.vol")
            with open(vol_path, "wb") as fh:
                fh.write(await form["volume"].read())
            with open(vol_path + ".json", "w") as fh:
                fh.write(form["meta"] if isinstance(form["meta"], str)
                         else (await form["meta"].read()).decode())
            vol = load_volume(vol_path)
            reference = None
            if "reference" in form:
                if "reference_meta" not in form:
                    raise VolumeFormatError("reference upload needs a 'reference_meta' part")
                ref_path = os.path.join(tmp, "upload.mask")
                with open(ref_path, "wb") as fh:
                    fh.write(await form["reference"].read())
                with open(ref_path + ".json", "w") as fh:
                    fh.write(form["reference_meta"] if isinstance(form["reference_meta"], str)
                             else (await form["reference_meta"].read()).decode())
                reference = load_mask(ref_path)
        return vol, reference
    body = await request.json()
    if not isinstance(body, dict) or "path" not in body:
        raise VolumeFormatError("JSON body must carry a 'path' to a volume")
    vol = load_volume(str(body["path"]))
    reference = load_mask(str(body["reference"])) if body.get("reference") else None
    return vol, reference


def create_app(allow_queue=True):
    """Build the HTTP app. ``allow_queue=False`` turns waiting requests into
    immediate 409s instead of queueing behind the in-flight run."""
    app = FastAPI(title="polarcut")
    sessions = {}

    def session_or_none(session_id):
        return sessions.get(session_id)

    @app.post("/session")
    async def open_session(request: Request):
        try:
            vol, reference = await _open_payload(request)
        except EngineError as exc:
            return _engine_error(400, exc)
        except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
            return _error(400, "bad_volume", str(exc))
        if reference is not None and reference.dims != vol.dims:
            return _error(400, "mask_mismatch",
                          "reference dims %r do not match volume dims %r"
                          % (reference.dims, vol.dims))
        session = _Session(vol, reference)
        sessions[session.id] = session
        data = vol.data
        return {
            "session_id": session.id,
            "dims": list(vol.dims),
            "spacing_mm": list(vol.spacing_mm),
            "intensity_range": [float(data.min()), float(data.max())],
        }

    @app.get("/session/{session_id}/slice/{z}")
    def get_slice(session_id: str, z: int, lo: float = None, hi: float = None):
        session = session_or_none(session_id)
        if session is None:
            return _error(404, "unknown_session", "no session %s" % session_id)
        vol = session.vol
        if not (0 <= z < vol.dims[2]):
            return _error(404, "out_of_bounds",
                          "slice %d outside [0, %d)" % (z, vol.dims[2]))
        if lo is None:
            lo = float(vol.data.min())
        if hi is None:
            hi = float(vol.data.max())
        plane = _window(vol.data[:, :, z], lo, hi).T  # rows = y, cols = x
        buf = io.BytesIO()
        Image.fromarray(plane, mode="L").save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    @app.post("/session/{session_id}/segment")
    def segment(session_id: str, body: dict):
        session = session_or_none(session_id)
        if session is None:
            return _error(404, "unknown_session", "no session %s" % session_id)
        try:
            if "seed" not in body:
                raise ConfigError("segment request needs a 'seed' triple")
            params = GraphParams.from_json(body.get("params", {}))
            voxel = bool(body.get("voxel_coords", False))
            seeds = SeedSet(
                primary=_to_mm(body["seed"], session.vol, voxel),
                extras=[_to_mm(e, session.vol, voxel)
                        for e in body.get("extra_seeds", [])],
            )
        except EngineError as exc:
            return _engine_error(422, exc)
        except (TypeError, ValueError) as exc:
            return _error(422, "bad_config", str(exc))

        ticket = session.next_ticket()
        if not session.lock.acquire(blocking=allow_queue):
            return _error(409, "busy", "a segmentation is already running")
        try:
            if session.pending != ticket:
                return _error(409, "superseded",
                              "a newer segmentation request replaced this one")
            try:
                result = run_segmentation(session.vol, seeds, params,
                                          reference=session.reference)
            except EngineError as exc:
                return _engine_error(422, exc)
            run = {
                "seeds": seeds,
                "params": params,
                "mask": result.mask,
                "mesh": result.mesh,
                "contours": result.contours,
                "stats": result.stats_blob(),
            }
            session.latest = run
            if not seeds.extras:
                session.oneclick = run
            return {"contours": run["contours"], "stats": run["stats"]}
        finally:
            session.lock.release()

    @app.get("/session/{session_id}/export/{what}")
    def export(session_id: str, what: str):
        session = session_or_none(session_id)
        if session is None:
            return _error(404, "unknown_session", "no session %s" % session_id)
        if what not in ("mask", "mesh", "csv"):
            return _error(404, "bad_config", "export one of mask, mesh, csv")
        if session.latest is None:
            return _error(404, "no_result", "nothing segmented in this session yet")
        if what == "mask":
            with tempfile.TemporaryDirectory() as tmp:
                path = os.path.join(tmp, "result.mask")
                save_mask(session.latest["mask"], path)
                buf = io.BytesIO()
                with zipfile.ZipFile(buf, "w") as zf:
                    zf.write(path, "result.mask")
                    zf.write(path + ".json", "result.mask.json")
            return Response(content=buf.getvalue(), media_type="application/zip",
                            headers={"Content-Disposition":
                                     "attachment; filename=result.mask.zip"})
        if what == "mesh":
            with tempfile.TemporaryDirectory() as tmp:
                path = os.path.join(tmp, "result.obj")
                save_obj(session.latest["mesh"], path)
                text = open(path, "r").read()
            return Response(content=text, media_type="text/plain",
                            headers={"Content-Disposition":
                                     "attachment; filename=result.obj"})
        # csv: manual column needs the session reference
        if session.reference is None:
            return _error(422, "bad_config",
                          "csv export needs a reference mask on the session")
        one = session.oneclick or session.latest
        semi = session.latest
        row = CaseStats(
            case=session.id[:8],
            vol_manual_cm3=volume_cm3(session.reference),
            vol_oneclick_cm3=volume_cm3(one["mask"]),
            vol_semi_cm3=volume_cm3(semi["mask"]),
            vox_manual=session.reference.voxel_count,
            vox_oneclick=one["mask"].voxel_count,
            vox_semi=semi["mask"].voxel_count,
            dsc_oneclick=one["stats"].get("dsc", 0.0),
            dsc_semi=semi["stats"].get("dsc", 0.0),
        )
        text = CaseStats.CSV_HEADER + "\n" + row.csv_row() + "\n"
        return Response(content=text, media_type="text/csv",
                        headers={"Content-Disposition":
                                 "attachment; filename=result.csv"})

    return app
