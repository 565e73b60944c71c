"""HTTP surface: consumer personalize endpoint, content fetch, review-queue
admin API with optimistic locking, purge, and the story composer.

The app wraps a PipelineRunner. Handlers that need fresh pipeline output
(story generation, reject-regenerate) pump the runner inline, which is
cheap, bounded, and keeps the API usable both under tests (simulated clock)
and live serving (wall clock with the background pump thread).
"""

from __future__ import annotations

import threading
from pathlib import Path
from typing import Any, Optional

from fastapi import Depends, FastAPI, HTTPException, Query, Request
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field, model_validator

from .model import ContentState, GeneratedContent, ValidationError
from .pipeline import ConflictError, PipelineRunner
from .retrieval import retrieve_context
from .slots import RationaleEntry, UserPayload, load_artifacts, personalize
from .store import NotFoundError

STORY_KINDS = ("headline", "bullets", "witty", "summary")


class PersonalizeRationale(BaseModel):
    stat_type: str
    percentile: float
    values: dict[str, Any] = Field(default_factory=dict)


class PersonalizeRequest(BaseModel):
    user_id: str = ""
    week: int = 1
    player: str
    payload: dict[str, Any] = Field(default_factory=dict)
    rationale: list[PersonalizeRationale] = Field(default_factory=list)


class EditRequest(BaseModel):
    final_text: str
    revision: int


class RevisionRequest(BaseModel):
    revision: int


class PurgeRequest(BaseModel):
    keys: list[str]


class StoryRequest(BaseModel):
    artist: str
    mode: str = "free"
    category: Optional[str] = None
    avoid_topics: list[str] = Field(default_factory=list)
    kinds: list[str] = Field(default_factory=lambda: ["summary"])

    @model_validator(mode="after")
    def _category_matches_mode(self):
        if self.mode not in ("free", "categorical"):
            raise ValueError("mode must be 'free' or 'categorical'")
        if self.mode == "categorical" and not self.category:
            raise ValueError("categorical requests require a category")
        if self.mode == "free" and self.category:
            raise ValueError("free requests must not carry a category")
        bad = [k for k in self.kinds if k not in STORY_KINDS]
        if bad:
            raise ValueError(f"unknown output kinds: {bad}")
        return self


def _content_view(content: GeneratedContent) -> dict:
    doc = content.to_dict()
    doc["corrected_claims"] = sum(
        1 for v in content.verdicts if v.status.value == "corrected"
    )
    return doc


def create_app(
    runner: PipelineRunner,
    auth_token: str = "",
    static_dir: Optional[str | Path] = None,
) -> FastAPI:
    app = FastAPI(title="eventscribe", version="0.1.0")
    app.state.runner = runner
    artifacts_lock = threading.Lock()

    def check_auth(request: Request) -> None:
        if auth_token and request.headers.get("x-auth-token") != auth_token:
            raise HTTPException(status_code=401, detail="bad or missing token")

    guarded = [Depends(check_auth)]

    def pump() -> None:
        runner.run_until_quiescent()

    @app.exception_handler(ConflictError)
    async def _conflict(request, exc):  # pragma: no cover - wiring
        from fastapi.responses import JSONResponse

        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.get("/health")
    def health():
        return {"status": "ok"}

    # -- consumer endpoints ------------------------------------------------------

    @app.post("/personalize")
    def personalize_endpoint(req: PersonalizeRequest):
        try:
            artifacts = _artifacts()
        except NotFoundError as exc:
            raise HTTPException(status_code=503, detail=f"slot artifacts missing: {exc}")
        try:
            payload = UserPayload.from_dict(req.payload)
        except ValidationError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        result = personalize(
            payload,
            req.player,
            [RationaleEntry(r.stat_type, r.percentile, dict(r.values)) for r in req.rationale],
            artifacts,
            user_id=req.user_id,
            week=req.week,
        )
        return {"sentences": list(result.sentences), "diagnostics": list(result.diagnostics)}

    def _artifacts():
        with artifacts_lock:
            return load_artifacts(runner.publisher.cdn)

    @app.get("/content/{content_id:path}")
    def get_content(content_id: str):
        try:
            content = runner.repository.get(content_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=content_id)
        return _content_view(content)

    # -- review admin ---------------------------------------------------------------

    @app.get("/review", dependencies=guarded)
    def list_review(state: str = Query("pending_review")):
        try:
            wanted = ContentState(state)
        except ValueError:
            raise HTTPException(status_code=422, detail=f"unknown state {state!r}")
        items = runner.repository.list_by_state(wanted)
        return {"items": [_content_view(c) for c in items]}

    @app.post("/review/{content_id:path}/approve", dependencies=guarded)
    def approve(content_id: str, req: RevisionRequest):
        try:
            content, purged = runner.repository.approve(content_id, req.revision)
        except KeyError:
            raise HTTPException(status_code=404, detail=content_id)
        view = _content_view(content)
        view["purge_issued"] = purged
        return view

    @app.post("/review/{content_id:path}/reject", dependencies=guarded)
    def reject(content_id: str, req: RevisionRequest):
        try:
            runner.repository.reject(content_id, req.revision)
        except KeyError:
            raise HTTPException(status_code=404, detail=content_id)
        update = runner.regenerate(content_id)
        pump()
        content = runner.repository.get(content_id)
        return {"regenerated_from": update.event_id, "item": _content_view(content)}

    @app.put("/review/{content_id:path}", dependencies=guarded)
    def edit(content_id: str, req: EditRequest):
        try:
            content = runner.repository.edit_text(content_id, req.final_text, req.revision)
        except KeyError:
            raise HTTPException(status_code=404, detail=content_id)
        return _content_view(content)

    @app.get("/review/{content_id:path}", dependencies=guarded)
    def get_review_item(content_id: str):
        try:
            content = runner.repository.get(content_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=content_id)
        return _content_view(content)

    # -- purge ------------------------------------------------------------------------

    @app.post("/purge", dependencies=guarded)
    def purge(req: PurgeRequest):
        return {"purged": runner.publisher.cdn.purge(req.keys)}

    # -- story composer ------------------------------------------------------------------

    @app.get("/story/context", dependencies=guarded)
    def story_context(
        artist: str,
        mode: str = "free",
        category: Optional[str] = None,
        k: int = 5,
    ):
        if runner.corpus is None:
            raise HTTPException(status_code=503, detail="no retrieval corpus configured")
        if mode == "categorical" and not category:
            raise HTTPException(status_code=422, detail="categorical mode requires a category")
        passages = retrieve_context(
            f"{artist} {category or ''}".strip(),
            runner.corpus,
            k,
            category=category if mode == "categorical" else None,
        )
        return {
            "passages": [
                {"doc_id": p.doc_id, "text": p.text, "category": p.category}
                for p in passages
            ]
        }

    story_counter = {"n": 0}

    @app.post("/story", dependencies=guarded)
    def story(req: StoryRequest):
        from .model import Property, ScoringEvent

        if runner.feeds.snapshot().person(req.artist) is None:
            raise HTTPException(status_code=422, detail=f"unknown artist {req.artist!r}")
        created = []
        for kind in req.kinds:
            payload = {
                "artist": req.artist,
                "kind": kind,
                "avoid_topics": list(req.avoid_topics),
            }
            if req.category:
                payload["category"] = req.category
            story_counter["n"] += 1
            event = ScoringEvent(
                event_id=f"story-{req.artist}-{kind}-{story_counter['n']}",
                property=Property.MUSIC,
                scene_type="artist_story",
                payload=payload,
            )
            runner.submit(event)
            created.append(event)
        pump()
        items = []
        for event in created:
            from .model import canonical_key

            try:
                items.append(_content_view(runner.repository.get(canonical_key(event))))
            except KeyError:
                items.append({"source_event": event.event_id, "state": "dead_letter"})
        return {"items": items}

    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="console")

    return app
