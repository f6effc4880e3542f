"""Admission scoring: cluster fit plus marginal shared-energy impact.

A candidate is profiled with the community's fitted model, then the
community is simulated with and without them; the difference in shared
energy (and self-consumption ratio) drives an ADMIT / REJECT / REVIEW
decision under an AdmissionPolicy. Batch ranking scores every candidate
against the same baseline so scores stay comparable.
"""

from __future__ import annotations

import datetime as dt
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .clustering import Assignment, ClusterModel, assign
from .community import CommunityState, Member, SharingReport, simulate
from .profiles import (
    ConsumerDataset,
    ProfileError,
    build_feature_vector,
    dataset_to_series,
    series_to_dataset,
)

# Calendar anchor for members when the community has no start date; a Monday,
# so weekday/weekend featurization is well defined.
DEFAULT_EPOCH = dt.date(2024, 1, 1)


class RecommenderError(Exception):
    pass


class HorizonAlignment(RecommenderError):
    """Candidate history too short to align with the community horizon."""


class AllCandidatesFailed(RecommenderError):
    pass


class Decision(enum.Enum):
    ADMIT = "ADMIT"
    REJECT = "REJECT"
    REVIEW = "REVIEW"


@dataclass(frozen=True)
class AdmissionPolicy:
    """Thresholds for the admit/reject decision.

    ``review_band`` widens the marginal-shared threshold into a REVIEW zone:
    ADMIT needs marginal >= min_marginal_shared*(1+band), REJECT triggers
    below min_marginal_shared*(1-band). ``target_mix`` caps members per
    cluster; clusters absent from the map are uncapped.
    """

    min_marginal_shared: float = 0.0
    min_marginal_scr: float = -math.inf
    target_mix: dict[int, int] | None = None
    review_band: float = 0.05

    def __post_init__(self):
        if self.review_band < 0:
            raise ValueError("review_band must be >= 0")
        # negative thresholds would let the ADMIT and REJECT bands overlap
        if self.min_marginal_shared < 0:
            raise ValueError("min_marginal_shared must be >= 0")
        if self.target_mix is not None:
            for cluster, count in self.target_mix.items():
                if count < 0:
                    raise ValueError(f"target_mix[{cluster}] must be >= 0")


@dataclass(frozen=True)
class Recommendation:
    candidate_id: str
    cluster: Assignment
    baseline: SharingReport = field(repr=False)
    with_candidate: SharingReport = field(repr=False)
    marginal_shared: float
    marginal_scr: float
    mix_fit: float
    decision: Decision


@dataclass(frozen=True)
class CandidateFailure:
    candidate_id: str
    error: str
    detail: str


def align_candidate_series(candidate: ConsumerDataset, horizon_hours: int) -> np.ndarray:
    """Hourly series over the community horizon: tiled when the candidate's
    span is shorter, truncated when longer. Requires at least 24 h of span."""
    series, _ = dataset_to_series(candidate)
    if len(series) < 24:
        raise HorizonAlignment(f"candidate {candidate.consumer_id!r} spans {len(series)} h, need >= 24")
    idx = np.arange(horizon_hours) % len(series)
    return series[idx]


def _member_cluster_counts(state: CommunityState, model: ClusterModel) -> dict[int, int]:
    """Current members per cluster, re-profiled with the model's layout.

    Members whose series cannot be profiled (e.g. all-zero consumption) are
    left out of the count.
    """
    start = state.start or DEFAULT_EPOCH
    counts: dict[int, int] = {}
    for member in state.members:
        try:
            ds = series_to_dataset(member.consumer_id, member.series, start)
            fv = build_feature_vector(ds, model.layout, model.normalization)
        except ProfileError:
            continue
        idx = assign(model, fv).cluster_index
        counts[idx] = counts.get(idx, 0) + 1
    return counts


def _decide(marginal_shared: float, marginal_scr: float, mix_ok: bool, policy: AdmissionPolicy) -> Decision:
    admit_floor = policy.min_marginal_shared * (1.0 + policy.review_band)
    reject_ceiling = policy.min_marginal_shared * (1.0 - policy.review_band)
    if marginal_shared >= admit_floor and marginal_scr >= policy.min_marginal_scr and mix_ok:
        return Decision.ADMIT
    if marginal_shared < reject_ceiling or (policy.target_mix is not None and not mix_ok):
        return Decision.REJECT
    return Decision.REVIEW


def _score(
    state: CommunityState,
    model: ClusterModel,
    candidate: ConsumerDataset,
    policy: AdmissionPolicy,
    baseline: SharingReport,
) -> Recommendation:
    feature = build_feature_vector(candidate, model.layout, model.normalization)
    cluster = assign(model, feature)

    series = align_candidate_series(candidate, state.horizon_hours)
    extended = CommunityState(
        members=state.members + (Member(candidate.consumer_id, tuple(float(v) for v in series)),),
        producers=state.producers,
        horizon_hours=state.horizon_hours,
        initial_soc=state.initial_soc,
        start=state.start,
    )
    with_candidate = simulate(extended)

    marginal_shared = with_candidate.shared_energy - baseline.shared_energy
    marginal_scr = with_candidate.self_consumption_ratio - baseline.self_consumption_ratio

    if policy.target_mix is None:
        mix_fit = 0.5
        mix_ok = True
    else:
        counts = _member_cluster_counts(state, model)
        target = policy.target_mix.get(cluster.cluster_index)
        under = target is None or counts.get(cluster.cluster_index, 0) < target
        mix_fit = 1.0 if under else 0.0
        mix_ok = under

    return Recommendation(
        candidate_id=candidate.consumer_id,
        cluster=cluster,
        baseline=baseline,
        with_candidate=with_candidate,
        marginal_shared=marginal_shared,
        marginal_scr=marginal_scr,
        mix_fit=mix_fit,
        decision=_decide(marginal_shared, marginal_scr, mix_ok, policy),
    )


def score_candidate(
    state: CommunityState,
    model: ClusterModel,
    candidate: ConsumerDataset,
    policy: AdmissionPolicy = AdmissionPolicy(),
) -> Recommendation:
    """Profile one candidate and measure their marginal shared-energy gain."""
    return _score(state, model, candidate, policy, baseline=simulate(state))


def rank_candidates(
    state: CommunityState,
    model: ClusterModel,
    candidates: list[ConsumerDataset],
    policy: AdmissionPolicy = AdmissionPolicy(),
) -> tuple[list[Recommendation], list[CandidateFailure]]:
    """Score every candidate against the same baseline and rank them.

    Order: marginal_shared descending, then mix_fit descending, then
    candidate_id ascending. Per-candidate failures are returned alongside;
    the batch only fails if every single candidate fails.
    """
    if not candidates:
        raise ValueError("candidates must be non-empty")
    baseline = simulate(state)
    scored: list[Recommendation] = []
    failures: list[CandidateFailure] = []
    for candidate in candidates:
        try:
            scored.append(_score(state, model, candidate, policy, baseline))
        except Exception as exc:  # per-candidate isolation
            failures.append(CandidateFailure(candidate.consumer_id, type(exc).__name__, str(exc)))
    if not scored:
        raise AllCandidatesFailed(f"all {len(candidates)} candidates failed; first: {failures[0].error}: {failures[0].detail}")
    scored.sort(key=lambda r: (-r.marginal_shared, -r.mix_fit, r.candidate_id))
    return scored, failures


def policy_to_dict(policy: AdmissionPolicy) -> dict:
    return {
        "min_marginal_shared": policy.min_marginal_shared,
        # -inf means disabled and is not representable in JSON
        "min_marginal_scr": None if policy.min_marginal_scr == -math.inf else policy.min_marginal_scr,
        "target_mix": None if policy.target_mix is None else {str(k): v for k, v in policy.target_mix.items()},
        "review_band": policy.review_band,
    }


def policy_from_dict(doc: dict) -> AdmissionPolicy:
    scr = doc.get("min_marginal_scr")
    mix = doc.get("target_mix")
    return AdmissionPolicy(
        min_marginal_shared=float(doc.get("min_marginal_shared", 0.0)),
        min_marginal_scr=-math.inf if scr is None else float(scr),
        target_mix=None if mix is None else {int(k): int(v) for k, v in mix.items()},
        review_band=float(doc.get("review_band", 0.05)),
    )


def recommendation_to_dict(rec: Recommendation) -> dict:
    from .community import report_summary_dict

    return {
        "candidate_id": rec.candidate_id,
        "cluster": {"index": rec.cluster.cluster_index, "distance": rec.cluster.distance},
        "marginal_shared_kwh": rec.marginal_shared,
        "marginal_scr": rec.marginal_scr,
        "mix_fit": rec.mix_fit,
        "decision": rec.decision.value,
        "baseline": report_summary_dict(rec.baseline),
        "with_candidate": report_summary_dict(rec.with_candidate),
    }
