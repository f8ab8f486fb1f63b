"""HTTP service the studio front end drives.

The model is held immutably; every request is stateless and pure, so
identical requests produce identical bytes.
"""

import os

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import FileResponse, HTMLResponse, JSONResponse, Response
from pydantic import BaseModel

from .lights import LightError, light_from_record
from .render import layer_png, model_summary, relight_png

FALLBACK_PAGE = """<!doctype html>
<html><head><title>relightkit</title></head>
<body><h1>relightkit service</h1>
<p>The studio front end is not built. The API is live:</p>
<ul><li>GET /api/model</li><li>POST /api/relight</li>
<li>GET /api/layers/{albedo|coarse|sp|sg}</li></ul>
</body></html>
"""


class RelightRequest(BaseModel):
    light: dict
    wp: float = 1.0
    wg: float = 1.0
    exposure: float = 1.0


def create_app(model, studio_dir=None):
    app = FastAPI(title="relightkit", docs_url=None, redoc_url=None)

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc.errors())})

    @app.get("/api/model")
    def get_model():
        return model_summary(model)

    @app.post("/api/relight")
    def post_relight(req: RelightRequest):
        try:
            light = light_from_record(req.light)
        except LightError as e:
            return JSONResponse(status_code=400, content={"error": str(e)})
        png = relight_png(model, light, req.wp, req.wg, req.exposure)
        return Response(content=png, media_type="image/png")

    @app.get("/api/layers/{name}")
    def get_layer(name: str):
        try:
            png = layer_png(model, name)
        except KeyError:
            return JSONResponse(status_code=404, content={"error": f"unknown layer {name}"})
        return Response(content=png, media_type="image/png")

    @app.get("/")
    def index():
        if studio_dir:
            page = os.path.join(studio_dir, "index.html")
            if os.path.exists(page):
                return FileResponse(page, media_type="text/html")
        return HTMLResponse(FALLBACK_PAGE)

    if studio_dir and os.path.isdir(studio_dir):
        from fastapi.staticfiles import StaticFiles

        app.mount("/static", StaticFiles(directory=studio_dir), name="static")

    return app
