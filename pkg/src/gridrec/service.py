"""HTTP facade over a trained model: recommend, explain, feedback, inspect.

All mutations (feedback, retrain, snapshot) run under one lock so observable
model states form a single total order; reads take the same lock briefly.
"""

from __future__ import annotations

import logging
import threading
import time
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .mdp import Action, valid_actions
from .online import FeedbackEvent, FeedbackLog, RetrainSchedule, apply_feedback, maybe_retrain
from .persistence import load_model, save_model
from .recommender import RecommendationRequest, explain, walk_and_recommend

logger = logging.getLogger(__name__)


class RecommendBody(BaseModel):
    profile: list[int] = Field(min_length=1)
    n: int = 30
    k: int = 3
    epsilon: float = 0.1
    max_steps: int = 100
    seed: int = 0


class FeedbackBody(BaseModel):
    user: int
    cell: tuple[int, int]
    satisfied: bool


def create_app(
    model_path: str | Path,
    feedback_log_path: str | Path | None = None,
    snapshot_every: int = 100,
    retrain_schedule: RetrainSchedule | None = None,
) -> FastAPI:
    model_path = Path(model_path)
    log_path = (
        Path(feedback_log_path)
        if feedback_log_path is not None
        else model_path.with_suffix(".feedback.jsonl")
    )
    schedule = retrain_schedule or RetrainSchedule()

    model = load_model(model_path)
    log = FeedbackLog(log_path)
    replayed = log.replay(model, schedule)
    if replayed:
        logger.info("recovered %d feedback events on startup", replayed)

    lock = threading.Lock()
    app = FastAPI(title="gridrec", version="1")

    @app.exception_handler(RequestValidationError)
    async def malformed_body(_request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    def cell_or_404(row: int, col: int):
        if not (0 <= row < model.n and 0 <= col < model.n):
            return JSONResponse(
                status_code=404,
                content={"detail": f"cell ({row}, {col}) out of bounds for n={model.n}"},
            )
        return None

    @app.post("/v1/recommendations")
    def recommendations(body: RecommendBody):
        try:
            request = RecommendationRequest(
                profile=frozenset(body.profile),
                n=body.n,
                k=body.k,
                epsilon=body.epsilon,
                max_steps=body.max_steps,
                seed=body.seed,
            )
            with lock:
                rec = walk_and_recommend(model, request)
        except ValueError as exc:
            return JSONResponse(status_code=400, content={"detail": str(exc)})
        return {
            "items": [
                {
                    "item": it.item_id,
                    "cell": list(it.explanation.cell),
                    "users": it.explanation.user_set_size,
                    "items": it.explanation.item_set_size,
                }
                for it in rec.items
            ],
            "trace": [list(cell) for cell in rec.trace],
        }

    @app.post("/v1/feedback")
    def feedback(body: FeedbackBody):
        row, col = body.cell
        err = cell_or_404(row, col)
        if err is not None:
            return err
        with lock:
            event = FeedbackEvent(
                user_id=body.user,
                cell=(row, col),
                satisfied=body.satisfied,
                seq=model.feedback_seq + 1,
                ts=int(time.time()),
            )
            log.append(event)
            apply_feedback(model, event)
            retrained = maybe_retrain(model, schedule)
            if model.feedback_seq % snapshot_every == 0:
                save_model(model, model_path)
            size = len(model.user_sets[model.cell_index(row, col)])
        return {"applied": True, "new_user_set_size": size, "retrained": retrained}

    @app.get("/v1/grid")
    def grid():
        with lock:
            cells = [
                {
                    "row": idx // model.n,
                    "col": idx % model.n,
                    "user_set_size": len(model.user_sets[idx]),
                    "item_set_size": len(model.item_sets[idx]),
                }
                for idx in range(model.n * model.n)
            ]
        return {"n": model.n, "cells": cells}

    @app.get("/v1/q")
    def q_table():
        with lock:
            values = []
            for idx in range(model.n * model.n):
                r, c = divmod(idx, model.n)
                valid = valid_actions(r, c, model.n)
                values.append(
                    [
                        float(model.q[r, c, a]) if a in valid else None
                        for a in range(model.q.shape[2])
                    ]
                )
        return {
            "n": model.n,
            "actions": [a.name for a in Action],
            "values": values,
        }

    @app.get("/v1/cell/{row}/{col}")
    def cell(row: int, col: int):
        err = cell_or_404(row, col)
        if err is not None:
            return err
        with lock:
            info = explain(model, (row, col))
        return {
            "row": row,
            "col": col,
            "user_set_size": info.user_set_size,
            "item_set_size": info.item_set_size,
        }

    @app.get("/v1/health")
    def health():
        with lock:
            return {
                "status": "ok",
                "model_version": model.schema_version,
                "feedback_seq": model.feedback_seq,
            }

    app.state.model = model
    app.state.lock = lock
    app.state.log = log
    return app
