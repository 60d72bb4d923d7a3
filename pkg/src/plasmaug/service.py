"""HTTP preview backend for the interactive parameter tuner.

Stateless apart from an in-memory image store with TTL eviction: a preview
response is a pure function of (stored image bytes, pipeline text, seed), so
identical requests produce byte-identical bodies.  The multipart boundary is
derived from a digest of the parts to keep responses deterministic.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import threading
import time
from dataclasses import dataclass

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse, Response
from pydantic import BaseModel, Field

from . import dsl, graph, io as pio, ops
from .errors import ConfigurationError, InvalidInputError
from .field import SampleBundle
from .presets import PRESET_NAMES, preset_source

MAX_UPLOAD_BYTES = 32 * 1024 * 1024


@dataclass
class _StoredImage:
    image: np.ndarray
    mode: str
    stamp: float


class _ImageStore:
    def __init__(self, ttl_seconds: float, clock):
        self._ttl = ttl_seconds
        self._clock = clock
        self._lock = threading.Lock()
        self._items: dict[str, _StoredImage] = {}
        self._counter = itertools.count(1)

    def _evict(self, now: float) -> None:
        dead = [k for k, v in self._items.items() if now - v.stamp > self._ttl]
        for k in dead:
            del self._items[k]

    def put(self, image: np.ndarray, mode: str) -> str:
        now = self._clock()
        with self._lock:
            self._evict(now)
            n = next(self._counter)
            image_id = f"img-{n:06d}"
            self._items[image_id] = _StoredImage(image, mode, now)
        return image_id

    def get(self, image_id: str) -> _StoredImage | None:
        now = self._clock()
        with self._lock:
            self._evict(now)
            return self._items.get(image_id)


class PreviewRequest(BaseModel):
    pipeline: str
    image_id: str
    seed: int = 0
    grid: int | None = Field(default=None, ge=1, le=16)


def _multipart(parts: list[tuple[str, str, bytes]]) -> tuple[bytes, str]:
    """Assemble (name, content-type, payload) parts into a multipart/mixed
    body with a content-derived (hence deterministic) boundary."""
    digest = hashlib.sha256()
    for name, ctype, payload in parts:
        digest.update(name.encode())
        digest.update(ctype.encode())
        digest.update(payload)
    boundary = "pb" + digest.hexdigest()[:32]
    chunks = []
    for name, ctype, payload in parts:
        chunks.append(
            f"--{boundary}\r\nContent-Type: {ctype}\r\n"
            f"Content-Disposition: inline; name=\"{name}\"\r\n\r\n".encode())
        chunks.append(payload)
        chunks.append(b"\r\n")
    chunks.append(f"--{boundary}--\r\n".encode())
    return b"".join(chunks), boundary


def _error_json(status: int, message: str, **extra) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": {"message": message, **extra}})


def create_app(*, ttl_seconds: float = 3600.0, clock=time.monotonic,
               max_upload: int = MAX_UPLOAD_BYTES, static_dir: str | None = None) -> FastAPI:
    """Build the preview application; all knobs exist for tests."""
    app = FastAPI(title="plasmaug preview service")
    store = _ImageStore(ttl_seconds, clock)

    @app.post("/images")
    async def upload_image(request: Request):
        declared = request.headers.get("content-length")
        if declared is not None and declared.isdigit() and int(declared) > max_upload:
            return _error_json(413, f"upload exceeds {max_upload} bytes")
        data = await request.body()
        if len(data) > max_upload:
            return _error_json(413, f"upload exceeds {max_upload} bytes")
        try:
            image, mode = pio.decode_image_png(data)
        except InvalidInputError as exc:
            return _error_json(400, str(exc))
        image_id = store.put(image, mode)
        return {"id": image_id, "width": image.shape[2], "height": image.shape[1]}

    @app.post("/preview")
    def preview(req: PreviewRequest):
        stored = store.get(req.image_id)
        if stored is None:
            return _error_json(404, f"unknown image id {req.image_id!r}")
        try:
            ast = dsl.parse(req.pipeline)
            dsl.compile_pipeline(ast, req.seed)
        except dsl.PipelineError as exc:
            return _error_json(422, str(exc), line=exc.line, col=exc.col,
                               kind=type(exc).__name__)
        except ConfigurationError as exc:
            return _error_json(422, str(exc), kind=type(exc).__name__)

        canonical = dsl.format_pipeline(ast)
        count = req.grid or 1
        parts: list[tuple[str, str, bytes]] = []
        for i in range(count):
            seed_i = req.seed + i
            node = dsl.compile_pipeline(ast, seed_i)
            bundle = SampleBundle(image=stored.image)
            out, applied = graph.apply_traced(node, bundle)
            suffix = f"-{i}" if count > 1 else ""
            parts.append((f"augmented{suffix}", "image/png",
                          pio.encode_image_png(out.image, mode=stored.mode)))
            if out.mask is not None:
                parts.append((f"mask{suffix}", "image/png",
                              pio.encode_image_png(out.mask[None], mode="L")))
            parts.append((f"validity{suffix}", "image/png",
                          pio.encode_image_png(out.validity[None], mode="L")))
            params_doc = {"seed": seed_i, "canonical": canonical,
                          "applied": applied.to_json()}
            parts.append((f"params{suffix}", "application/json",
                          json.dumps(params_doc, sort_keys=True).encode()))
        body, boundary = _multipart(parts)
        return Response(content=body,
                        media_type=f"multipart/mixed; boundary={boundary}")

    @app.get("/catalog")
    def catalog():
        return {"ops": [d.to_json() for d in ops.catalog()],
                "presets": list(PRESET_NAMES)}

    @app.get("/presets/{name}")
    def preset(name: str):
        try:
            return PlainTextResponse(preset_source(name))
        except ConfigurationError as exc:
            return _error_json(404, str(exc))

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles
        app.mount("/ui", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
