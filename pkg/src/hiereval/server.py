"""HTTP service for live evaluator sessions and read-only reports.

Endpoints (bearer token identifies the evaluator within the campaign):

    GET  /campaigns/{id}/next             next task for the calling evaluator
    POST /campaigns/{id}/judgments        submit one judgment (idempotent)
    GET  /campaigns/{id}/reports/{kind}   canonical report payload

All writes for a campaign funnel through one in-process lock and are
appended to the campaign's journal before the in-memory state advances, so
a crash can never leave the journal behind the served state.  Idempotency
keys replay the original response without appending a second record.
"""

from __future__ import annotations

import threading

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel, Field

from . import _canon, scoring
from .campaign import (
    AlreadyTerminatedError,
    CampaignError,
    Evaluator,
    StaleNodeError,
    UnknownTraversalError,
)
from .store import CampaignDir, load_campaign_dir
from .trees import UnknownAnswerError


class JudgmentIn(BaseModel):
    item_id: str
    tree_target: str
    node_id: str
    answer: str
    elapsed_seconds: float = Field(ge=0)
    idempotency_key: str = Field(min_length=1)


class ApiError(Exception):
    def __init__(self, status_code: int, code: str, message: str, **extra):
        self.status_code = status_code
        self.payload = {"error": {"code": code, "message": message, **extra}}
        super().__init__(message)


class CampaignHost:
    """One served campaign: replayed state, journal writer, idempotency cache."""

    def __init__(self, campaign_dir: CampaignDir):
        self.dir = campaign_dir
        self.campaign = campaign_dir.campaign
        self.state = campaign_dir.replayed_state()
        self.write_lock = threading.Lock()
        self.idempotency: dict[str, dict] = {}

    def authenticate(self, token: str | None) -> Evaluator:
        if token:
            evaluator = self.campaign.evaluator_by_token(token)
            if evaluator is not None:
                return evaluator
        raise ApiError(401, "unauthorized", "missing or unknown bearer token")

    def next_payload(self, evaluator: Evaluator) -> dict:
        with self.write_lock:
            task = self.state.next_task(evaluator.id)
            progress = self.state.progress(evaluator.id)
        if task is None:
            return {"status": "done", "progress": progress}
        item, tree_target, node = task
        item_payload = {"id": item.id, "input_text": item.input_text, "output_text": item.output_text}
        if node.uses_explanation and item.explanation_text is not None:
            item_payload["explanation_text"] = item.explanation_text
        judged_so_far = len(self.state.traversals[(item.id, evaluator.id, tree_target)].history)
        return {
            "status": "task",
            "campaign_id": self.campaign.id,
            "item_id": item.id,
            "tree_target": tree_target,
            "item": item_payload,
            "node": {
                "id": node.id,
                "prompt": node.prompt,
                "characteristic": node.characteristic,
                "answers": list(node.answers),
                "answer_help": dict(node.answer_help),
            },
            "progress": {**progress, "judgments_this_item": judged_so_far},
        }

    def submit_payload(self, evaluator: Evaluator, body: JudgmentIn) -> dict:
        with self.write_lock:
            cached = self.idempotency.get(body.idempotency_key)
            if cached is not None:
                return cached
            try:
                record = self.state.make_record(
                    evaluator_id=evaluator.id,
                    item_id=body.item_id,
                    tree_target=body.tree_target,
                    node_id=body.node_id,
                    answer=body.answer,
                    elapsed_seconds=body.elapsed_seconds,
                )
            except StaleNodeError as exc:
                raise ApiError(409, "stale_node", str(exc), current_node=exc.expected)
            except AlreadyTerminatedError as exc:
                raise ApiError(409, "already_terminated", str(exc))
            except UnknownAnswerError as exc:
                raise ApiError(400, "unknown_answer", str(exc), field="answer")
            except UnknownTraversalError as exc:
                raise ApiError(404, "unknown_traversal", str(exc), field="item_id")
            except CampaignError as exc:
                raise ApiError(400, "invalid_submission", str(exc))
            # persist first, then advance the in-memory state
            self.dir.append_record(record)
            traversal = self.state.apply_record(record)
            if traversal.is_terminated:
                payload = {
                    "status": "terminated",
                    "item_id": traversal.item_id,
                    "tree_target": traversal.tree_target,
                    "outcome": traversal.outcome.as_dict(),
                    "judgments": len(traversal.history),
                    "sequence_no": record.sequence_no,
                }
            else:
                payload = {
                    "status": "in_progress",
                    "item_id": traversal.item_id,
                    "tree_target": traversal.tree_target,
                    "next_node_id": traversal.current_node,
                    "judgments": len(traversal.history),
                    "sequence_no": record.sequence_no,
                }
            self.idempotency[body.idempotency_key] = payload
            return payload

    def report_payload(self, kind: str) -> dict:
        if kind not in scoring.REPORT_KINDS:
            raise ApiError(400, "unknown_kind", f"unknown report kind {kind!r}", kinds=list(scoring.REPORT_KINDS))
        with self.write_lock:
            records = list(self.state.records)
        return scoring.render_report(self.campaign, records, kind)


def create_app(hosts: dict[str, CampaignHost]) -> FastAPI:
    app = FastAPI(title="hiereval", docs_url=None, redoc_url=None)
    app.state.hosts = hosts
    # the evaluator UI is served as static files, usually from another origin
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    def host_for(campaign_id: str) -> CampaignHost:
        host = hosts.get(campaign_id)
        if host is None:
            raise ApiError(404, "unknown_campaign", f"no campaign {campaign_id!r} is being served")
        return host

    def bearer_token(request: Request) -> str | None:
        header = request.headers.get("authorization", "")
        if header.lower().startswith("bearer "):
            return header[len("bearer "):].strip()
        return None

    @app.exception_handler(ApiError)
    async def on_api_error(_request: Request, exc: ApiError) -> JSONResponse:
        return JSONResponse(status_code=exc.status_code, content=exc.payload)

    @app.get("/campaigns/{campaign_id}/next")
    def get_next_task(campaign_id: str, request: Request) -> dict:
        host = host_for(campaign_id)
        evaluator = host.authenticate(bearer_token(request))
        return host.next_payload(evaluator)

    @app.post("/campaigns/{campaign_id}/judgments")
    def post_judgment(campaign_id: str, body: JudgmentIn, request: Request) -> dict:
        host = host_for(campaign_id)
        evaluator = host.authenticate(bearer_token(request))
        return host.submit_payload(evaluator, body)

    @app.get("/campaigns/{campaign_id}/reports/{kind}")
    def get_report(campaign_id: str, kind: str) -> Response:
        host = host_for(campaign_id)
        payload = host.report_payload(kind)
        return Response(content=_canon.dumps(payload), media_type="application/json")

    return app


def app_for_directory(path: str) -> FastAPI:
    """Serve the campaign directory at `path` (or every campaign subdirectory)."""
    import os

    hosts: dict[str, CampaignHost] = {}
    if os.path.exists(os.path.join(path, "campaign.json")):
        host = CampaignHost(load_campaign_dir(path))
        hosts[host.campaign.id] = host
    else:
        for entry in sorted(os.listdir(path)):
            candidate = os.path.join(path, entry)
            if os.path.isdir(candidate) and os.path.exists(os.path.join(candidate, "campaign.json")):
                host = CampaignHost(load_campaign_dir(candidate))
                hosts[host.campaign.id] = host
    if not hosts:
        raise FileNotFoundError(f"no campaign.json found under {path}")
    return create_app(hosts)
