"""FastAPI application exposing the community, what-if scoring, and the
admit/reject decision flow with If-Match optimistic concurrency."""

from __future__ import annotations

from fastapi import FastAPI, Header, Request
from fastapi.responses import JSONResponse

from ..clustering import ClusteringError, model_to_dict
from ..community import CommunityError, community_to_dict, daily_average_traces, report_to_dict
from ..profiles import (
    DuplicateTimestamp,
    EmptyInput,
    InvalidTimestamp,
    MalformedRow,
    ProfileError,
)
from ..recommender import RecommenderError, recommendation_to_dict
from . import schemas
from .state import DuplicateCandidate, RevisionMismatch, ServiceState, UnknownCandidate

_PARSE_ERRORS = (MalformedRow, InvalidTimestamp, DuplicateTimestamp, EmptyInput)


def _error_body(status: int, name: str, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": name, "detail": detail})


def _parse_if_match(value: str | None) -> int | None:
    """If-Match carries the last-seen revision, quoted or bare."""
    if value is None:
        return None
    token = value.strip().removeprefix("W/").strip('"')
    try:
        return int(token)
    except ValueError:
        raise MalformedIfMatch(value) from None


class MalformedIfMatch(Exception):
    pass


def create_app(state: ServiceState, cors_origin: str | None = None, static_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="recmate decision service", version="0.1.0")

    if cors_origin:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=[cors_origin],
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.exception_handler(ProfileError)
    def profile_error(_, exc: ProfileError):
        status = 400 if isinstance(exc, _PARSE_ERRORS) else 422
        return _error_body(status, type(exc).__name__, str(exc))

    @app.exception_handler(ClusteringError)
    @app.exception_handler(CommunityError)
    @app.exception_handler(RecommenderError)
    def domain_error(_, exc: Exception):
        return _error_body(422, type(exc).__name__, str(exc))

    @app.exception_handler(UnknownCandidate)
    def unknown_candidate(_, exc: UnknownCandidate):
        return _error_body(404, "UnknownCandidate", f"no pending candidate {exc.args[0]!r}")

    @app.exception_handler(DuplicateCandidate)
    def duplicate_candidate(_, exc: DuplicateCandidate):
        return _error_body(409, "DuplicateCandidate", f"candidate {exc.args[0]!r} already pending")

    @app.exception_handler(RevisionMismatch)
    def revision_mismatch(_, exc: RevisionMismatch):
        return _error_body(409, "RevisionMismatch", str(exc))

    @app.exception_handler(MalformedIfMatch)
    def malformed_if_match(_, exc: MalformedIfMatch):
        return _error_body(400, "MalformedIfMatch", f"cannot parse If-Match value {exc.args[0]!r}")

    @app.get("/api/health", response_model=schemas.HealthResponse)
    def health():
        return {"status": "ok", "revision": state.revision}

    @app.get("/api/community", response_model=schemas.CommunityResponse)
    def community():
        report = state.current_report()
        doc = community_to_dict(state.community)
        avg_prod, avg_cons = daily_average_traces(report)
        summary = {
            "member_ids": [m["consumer_id"] for m in doc["members"]],
            "member_count": len(doc["members"]),
            "producers": doc["producers"],
            "horizon_hours": doc["horizon_hours"],
            "initial_soc": doc["initial_soc"],
            "total_storage_capacity": state.community.total_storage_capacity(),
            "start": doc.get("start"),
        }
        return {
            "revision": state.revision,
            "community": summary,
            "report": report_to_dict(report),
            "avg_hourly_production": avg_prod,
            "avg_hourly_consumption": avg_cons,
        }

    @app.get("/api/model", response_model=schemas.ModelPayload)
    def model():
        return model_to_dict(state.model)

    @app.post("/api/candidates", response_model=schemas.CandidateCreatedResponse, status_code=201)
    async def upload_candidate(request: Request):
        content_type = request.headers.get("content-type", "")
        if content_type.startswith("text/csv"):
            csv_text = (await request.body()).decode("utf-8")
            candidate_id = request.query_params.get("candidate_id")
        else:
            payload = schemas.CandidateUploadRequest.model_validate(await request.json())
            csv_text = payload.csv
            candidate_id = payload.candidate_id
        cid = state.add_candidate(csv_text, candidate_id)
        return {"candidate_id": cid, "revision": state.revision}

    @app.get("/api/candidates", response_model=schemas.CandidatesResponse)
    def list_candidates():
        entries = []
        for cid in sorted(state.candidates):
            try:
                rec = state.whatif(cid)
                entries.append({"candidate_id": cid, "recommendation": recommendation_to_dict(rec)})
            except (ProfileError, ClusteringError, CommunityError, RecommenderError) as exc:
                entries.append({"candidate_id": cid, "error": {"error": type(exc).__name__, "detail": str(exc)}})
        return {"revision": state.revision, "candidates": entries}

    @app.post("/api/whatif/{candidate_id}", response_model=schemas.RecommendationPayload)
    def whatif(candidate_id: str):
        return recommendation_to_dict(state.whatif(candidate_id))

    @app.post("/api/admit/{candidate_id}", response_model=schemas.AdmitResponse)
    def admit(candidate_id: str, if_match: str | None = Header(default=None)):
        report = state.admit(candidate_id, _parse_if_match(if_match))
        return {"candidate_id": candidate_id, "revision": state.revision, "report": report_to_dict(report)}

    @app.post("/api/reject/{candidate_id}", response_model=schemas.RejectResponse)
    def reject(candidate_id: str, if_match: str | None = Header(default=None)):
        state.reject(candidate_id, _parse_if_match(if_match))
        return {"candidate_id": candidate_id, "revision": state.revision}

    if static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="dashboard")

    return app
