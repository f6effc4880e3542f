"""Pydantic request/response models for the HTTP API."""

from __future__ import annotations

from pydantic import BaseModel


class HealthResponse(BaseModel):
    status: str
    revision: int


class ErrorInfo(BaseModel):
    error: str
    detail: str


class ProducerPayload(BaseModel):
    producer_id: str
    p_max: float
    avg_profile: list[float]
    storage_capacity: float
    storage_efficiency: float
    storage_power_limit: float


class CommunitySummary(BaseModel):
    member_ids: list[str]
    member_count: int
    producers: list[ProducerPayload]
    horizon_hours: int
    initial_soc: float
    total_storage_capacity: float
    start: str | None = None


class ReportSummary(BaseModel):
    total_production: float
    total_consumption: float
    shared_energy: float
    exported: float
    imported: float
    self_consumption_ratio: float
    self_sufficiency: float


class HourlyFlowPayload(BaseModel):
    production: float
    consumption: float
    direct_use: float
    charge: float
    discharge: float
    soc_end: float
    shared: float
    exported: float
    imported: float


class SharingReportPayload(ReportSummary):
    hourly_trace: list[HourlyFlowPayload]


class CommunityResponse(BaseModel):
    revision: int
    community: CommunitySummary
    report: SharingReportPayload
    avg_hourly_production: list[float]
    avg_hourly_consumption: list[float]


class ModelPayload(BaseModel):
    k: int
    layout: str
    normalization: str
    tolerance: float
    seed_used: int
    wcss: float
    iterations_run: int
    converged: bool
    centroids: list[list[float]]


class CandidateUploadRequest(BaseModel):
    csv: str
    candidate_id: str | None = None


class CandidateCreatedResponse(BaseModel):
    candidate_id: str
    revision: int


class ClusterInfo(BaseModel):
    index: int
    distance: float


class RecommendationPayload(BaseModel):
    candidate_id: str
    cluster: ClusterInfo
    marginal_shared_kwh: float
    marginal_scr: float
    mix_fit: float
    decision: str
    baseline: ReportSummary
    with_candidate: ReportSummary


class CandidateEntry(BaseModel):
    candidate_id: str
    recommendation: RecommendationPayload | None = None
    error: ErrorInfo | None = None


class CandidatesResponse(BaseModel):
    revision: int
    candidates: list[CandidateEntry]


class AdmitResponse(BaseModel):
    candidate_id: str
    revision: int
    report: SharingReportPayload


class RejectResponse(BaseModel):
    candidate_id: str
    revision: int
