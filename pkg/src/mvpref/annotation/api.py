"""HTTP front of the annotation store.

    GET  /tasks/next?annotator=ID      next task or {"task": null}
    POST /rankings                     submit one RankingRecord
    GET  /rankings/export?role=...     ndjson, annotator records by default
    GET  /conflicts/{asset_list_id}    consensus-vs-researcher inversions
    GET  /assets/{id}/views/{k}        PNG bytes, k = canonical slot index

Errors come back as {"code", "message"} bodies: 404 for unknown names, 409
for refusals (duplicate, cap), 400 for invalid rankings.
"""

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse, PlainTextResponse, Response

from ..errors import CatalogError, ValidationError
from ..ndjson import dumps_ndjson
from ..dataset.repository import AssetRepository
from ..dataset.types import RankingRecord
from .store import (
    AnnotationStore,
    CapExceededError,
    DuplicateSubmissionError,
    UnknownAnnotatorError,
    UnknownAssetListError,
)


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


def create_app(store: AnnotationStore, repo: AssetRepository | None = None) -> FastAPI:
    app = FastAPI(title="mvpref annotation service")

    @app.exception_handler(UnknownAnnotatorError)
    async def _unknown_annotator(_: Request, exc):
        return _error(404, "unknown_annotator", str(exc))

    @app.exception_handler(UnknownAssetListError)
    async def _unknown_list(_: Request, exc):
        return _error(404, "unknown_asset_list", str(exc))

    @app.exception_handler(DuplicateSubmissionError)
    async def _duplicate(_: Request, exc):
        return _error(409, "duplicate_submission", str(exc))

    @app.exception_handler(CapExceededError)
    async def _capped(_: Request, exc):
        return _error(409, "cap_exceeded", str(exc))

    @app.exception_handler(ValidationError)
    async def _invalid(_: Request, exc):
        return _error(400, "validation_error", str(exc))

    @app.exception_handler(CatalogError)
    async def _missing(_: Request, exc):
        return _error(404, "not_found", str(exc))

    @app.get("/tasks/next")
    def next_task(annotator: str = Query(...)):
        task = store.next_task(annotator)
        return {"task": task.to_json() if task else None}

    @app.post("/rankings")
    def submit_ranking(body: dict):
        record = RankingRecord.from_json(body)
        completed = store.submit_ranking(record.annotator_id, record)
        return {"status": "accepted", "completed_lists": completed}

    @app.get("/rankings/export")
    def export_rankings(role: str | None = None):
        records = store.export_rankings(role)
        return PlainTextResponse(
            dumps_ndjson(r.to_json() for r in records),
            media_type="application/x-ndjson",
        )

    @app.get("/conflicts/{asset_list_id}")
    def conflicts(asset_list_id: str):
        pairs = store.flag_conflicts(asset_list_id)
        return {"asset_list_id": asset_list_id,
                "conflicts": [list(p) for p in pairs]}

    @app.get("/assets/{asset_id}/views/{k}")
    def asset_view(asset_id: str, k: int):
        if repo is None:
            return _error(404, "not_found", "no asset repository mounted")
        return Response(content=repo.view_png_bytes(asset_id, k),
                        media_type="image/png")

    return app
