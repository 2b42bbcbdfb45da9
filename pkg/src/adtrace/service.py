"""HTTP service exposing the zero-shot backend protocol over the baseline scorer.

Run with ``adtrace serve`` or ``uvicorn adtrace.service:app``; point the
classifier's ``backend`` at ``http://host:port/zero-shot``.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .relevance import HYPOTHESIS_TEMPLATE, ZeroShotRequest, baseline_classify


class ZeroShotIn(BaseModel):
    text: str
    hypothesis_template: str = HYPOTHESIS_TEMPLATE
    candidate_labels: list[str] = Field(min_length=1)


class ZeroShotOut(BaseModel):
    labels: list[str]
    scores: list[float]


def create_app() -> FastAPI:
    app = FastAPI(title="adtrace zero-shot baseline")

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/zero-shot", response_model=ZeroShotOut)
    def zero_shot(body: ZeroShotIn):
        try:
            request = ZeroShotRequest(body.text, tuple(body.candidate_labels),
                                      body.hypothesis_template)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        result = baseline_classify(request)
        return ZeroShotOut(labels=[l for l, _ in result.scores],
                           scores=[p for _, p in result.scores])

    return app


app = create_app()
