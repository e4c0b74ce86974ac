"""HTTP service backing the mask board: health, inpaint, metrics."""

from __future__ import annotations

import base64
import io
import os
import time

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from PIL import Image, UnidentifiedImageError

from .classical_ns import NSConfig, ns_inpaint
from .metrics import image_metrics
from .unet import composite, unet_forward
from .weights_io import load_model

MAX_BODY = 16 * 1024 * 1024


class RequestError(ValueError):
    def __init__(self, status, message, **extra):
        super().__init__(message)
        self.status = status
        self.payload = {"detail": message, **extra}


def _decode_image(data, name):
    try:
        with Image.open(io.BytesIO(data)) as im:
            arr = np.asarray(im.convert("RGB"), np.float32) / 255.0
    except (UnidentifiedImageError, OSError):
        raise RequestError(400, f"field {name!r} is not a decodable image")
    return arr.transpose(2, 0, 1)[None]


def _decode_mask(data, shape):
    try:
        with Image.open(io.BytesIO(data)) as im:
            arr = np.asarray(im.convert("L"))
    except (UnidentifiedImageError, OSError):
        raise RequestError(400, "field 'mask' is not a decodable image")
    mask = (arr >= 128).astype(np.float32)[None, None]
    if mask.shape[2:] != shape[2:]:
        raise RequestError(
            400, f"mask dims {mask.shape[2:]} do not match image {shape[2:]}")
    return mask


def _encode_png(arr):
    arr = np.clip(arr, 0.0, 1.0)
    q = np.floor(arr * 255.0 + 0.5).astype(np.uint8)
    im = Image.fromarray(q[0].transpose(1, 2, 0), mode="RGB")
    buf = io.BytesIO()
    im.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def create_app(weights_path, ns_config=None):
    model = load_model(weights_path)
    ns_cfg = ns_config or NSConfig()
    app = FastAPI(title="pcinpaint")
    divisor = model.config.divisor

    @app.exception_handler(RequestError)
    async def _request_error(request, exc):
        return JSONResponse(status_code=exc.status, content=exc.payload)

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request, exc):
        return JSONResponse(status_code=400,
                            content={"detail": "malformed multipart request"})

    async def _read_multipart(request, fields):
        if int(request.headers.get("content-length") or 0) > MAX_BODY:
            raise RequestError(413, "payload exceeds 16 MiB")
        try:
            form = await request.form()
        except Exception:
            raise RequestError(400, "malformed multipart request")
        out = []
        for name in fields:
            item = form.get(name)
            if item is None or isinstance(item, str):
                raise RequestError(400, f"missing multipart file field {name!r}")
            data = await item.read()
            if len(data) > MAX_BODY:
                raise RequestError(413, "payload exceeds 16 MiB")
            out.append(data)
        return out

    @app.get("/api/health")
    async def health():
        return {"status": "ok", "model": os.path.basename(weights_path)}

    @app.post("/api/inpaint")
    async def inpaint(request: Request, method: str = "pconv"):
        if method not in ("pconv", "ns", "both"):
            raise RequestError(400, f"unknown method {method!r}")
        img_bytes, mask_bytes = await _read_multipart(request, ("image", "mask"))
        img = _decode_image(img_bytes, "image")
        h, w = img.shape[2:]
        if h % divisor or w % divisor:
            raise RequestError(
                422, f"image dims {h}x{w} must be divisible by {divisor}",
                required_divisor=divisor)
        mask = _decode_mask(mask_bytes, img.shape)
        methods = ("pconv", "ns") if method == "both" else (method,)
        results, timing = {}, {}
        for m in methods:
            t0 = time.perf_counter()
            if m == "pconv":
                out, _ = unet_forward(model, img * mask, mask)
                result = composite(out, img, mask).data
            else:
                result = ns_inpaint(img, mask, ns_cfg)
                result = mask * img + (1 - mask) * result
            timing[m] = round((time.perf_counter() - t0) * 1000.0, 3)
            results[m] = _encode_png(result)
        return {"results": results, "timing_ms": timing}

    @app.post("/api/metrics")
    async def metrics(request: Request):
        img_bytes, mask_bytes, gt_bytes = await _read_multipart(
            request, ("image", "mask", "ground_truth"))
        img = _decode_image(img_bytes, "image")
        gt = _decode_image(gt_bytes, "ground_truth")
        if img.shape != gt.shape:
            raise RequestError(
                400, f"image dims {img.shape[2:]} do not match "
                f"ground_truth {gt.shape[2:]}")
        mask = _decode_mask(mask_bytes, img.shape)
        rec = image_metrics(img * 255.0, gt * 255.0,
                            mask_ratio=float(1.0 - mask.mean()))
        return rec.as_dict()

    static_dir = os.environ.get("PCINPAINT_STATIC", "")
    if static_dir and os.path.isdir(static_dir):
        app.mount("/", StaticFiles(directory=static_dir, html=True),
                  name="board")
    return app
