"""HTTP scoring service.

Wire protocol: POST /score with {"pairs": [["text_a", "text_b"], ...]} is
answered by {"scores": [s1, ...]} with one score in [0, 1] per pair, in
request order. Batches above the configured bound get HTTP 413. GET /health
reports readiness.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel, field_validator

from .model import PairClassifier, load_model


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8591
    model_path: Optional[str] = None
    max_batch_size: int = 512
    timeout: float = 30.0

    def __post_init__(self):
        if self.max_batch_size < 1:
            raise ValueError(f"max_batch_size must be >= 1, got {self.max_batch_size}")


class ScoreRequest(BaseModel):
    pairs: list[list[str]]

    @field_validator("pairs")
    @classmethod
    def _two_texts_each(cls, value):
        for i, pair in enumerate(value):
            if len(pair) != 2:
                raise ValueError(f"pair {i} must have exactly two texts")
        return value


def create_app(config: ServiceConfig, model: Optional[PairClassifier] = None) -> FastAPI:
    if model is None:
        if config.model_path is None:
            raise ValueError("a model or a model path is required")
        model = load_model(config.model_path)
    app = FastAPI(title="scorer-service")

    @app.get("/health")
    def health():
        return {
            "status": "ok",
            "model": str(config.model_path) if config.model_path else "in-memory",
            "max_batch_size": config.max_batch_size,
        }

    @app.post("/score")
    def score(request: ScoreRequest):
        if len(request.pairs) > config.max_batch_size:
            return JSONResponse(
                status_code=413,
                content={
                    "error": f"batch of {len(request.pairs)} exceeds "
                    f"max_batch_size {config.max_batch_size}"
                },
            )
        scores = model.score([(a, b) for a, b in request.pairs])
        return {"scores": scores}

    return app


def serve(config: ServiceConfig) -> None:
    """Run the service until interrupted. Startup failures exit nonzero."""
    import uvicorn

    if config.model_path and not Path(config.model_path).exists():
        raise SystemExit(f"model artifact not found: {config.model_path}")
    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
