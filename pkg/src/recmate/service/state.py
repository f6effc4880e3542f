"""Mutable service state: one community, its model and policy, pending
candidates, and a revision counter backing optimistic concurrency.

Every mutation bumps the revision by exactly 1 and rewrites the snapshot
atomically (write to a temp file, then rename), so a restarted server
resumes at the last committed revision.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, replace
from pathlib import Path

from ..clustering import ClusterModel, model_from_dict, model_to_dict
from ..community import CommunityState, Member, SharingReport, community_from_dict, community_to_dict, simulate
from ..profiles import ConsumerDataset, parse_consumption_csv, serialize_consumption_csv
from ..recommender import (
    AdmissionPolicy,
    Recommendation,
    align_candidate_series,
    policy_from_dict,
    policy_to_dict,
    score_candidate,
)


class UnknownCandidate(KeyError):
    pass


class DuplicateCandidate(Exception):
    pass


class RevisionMismatch(Exception):
    def __init__(self, expected: int, actual: int):
        self.expected = expected
        self.actual = actual
        super().__init__(f"If-Match revision {expected} does not match current revision {actual}")


@dataclass
class StoredCandidate:
    candidate_id: str
    dataset: ConsumerDataset


class ServiceState:
    def __init__(
        self,
        community: CommunityState,
        model: ClusterModel,
        policy: AdmissionPolicy | None = None,
        snapshot_path: Path | None = None,
        revision: int = 0,
        candidates: dict[str, StoredCandidate] | None = None,
        next_candidate_seq: int = 1,
    ):
        self.community = community
        self.model = model
        self.policy = policy or AdmissionPolicy()
        self.snapshot_path = snapshot_path
        self.revision = revision
        self.candidates = candidates or {}
        self.next_candidate_seq = next_candidate_seq
        self._lock = threading.Lock()
        # caches keyed by revision; immutable values are safe to share
        self._report_cache: tuple[int, SharingReport] | None = None
        self._score_cache: dict[str, tuple[int, Recommendation]] = {}

    # --- reads ---------------------------------------------------------------

    def current_report(self) -> SharingReport:
        cached = self._report_cache
        if cached is not None and cached[0] == self.revision:
            return cached[1]
        report = simulate(self.community)
        self._report_cache = (self.revision, report)
        return report

    def whatif(self, candidate_id: str) -> Recommendation:
        """Score a pending candidate without touching state.

        Results are cached per revision, so repeated calls under an
        unchanged community return the identical recommendation.
        """
        candidate = self._get(candidate_id)
        cached = self._score_cache.get(candidate_id)
        if cached is not None and cached[0] == self.revision:
            return cached[1]
        rec = score_candidate(self.community, self.model, candidate.dataset, self.policy)
        self._score_cache[candidate_id] = (self.revision, rec)
        return rec

    def _get(self, candidate_id: str) -> StoredCandidate:
        try:
            return self.candidates[candidate_id]
        except KeyError:
            raise UnknownCandidate(candidate_id) from None

    # --- mutations -----------------------------------------------------------

    def add_candidate(self, csv_text: str, candidate_id: str | None = None) -> str:
        """Parse and store an uploaded candidate CSV; bumps the revision."""
        with self._lock:
            if candidate_id is None:
                candidate_id = f"candidate-{self.next_candidate_seq:04d}"
                self.next_candidate_seq += 1
            if candidate_id in self.candidates:
                raise DuplicateCandidate(candidate_id)
            dataset = parse_consumption_csv(csv_text, consumer_id=candidate_id)
            self.candidates[candidate_id] = StoredCandidate(candidate_id, dataset)
            self._commit()
            return candidate_id

    def admit(self, candidate_id: str, if_match: int | None = None) -> SharingReport:
        """Move a pending candidate into the member list; bumps the revision.

        The returned report is computed exactly like the ``with_candidate``
        leg of a what-if at the same revision.
        """
        with self._lock:
            self._check_revision(if_match)
            candidate = self._get(candidate_id)
            series = align_candidate_series(candidate.dataset, self.community.horizon_hours)
            member = Member(candidate_id, tuple(float(v) for v in series))
            self.community = replace(self.community, members=self.community.members + (member,))
            del self.candidates[candidate_id]
            self._commit()
            return self.current_report()

    def reject(self, candidate_id: str, if_match: int | None = None) -> None:
        with self._lock:
            self._check_revision(if_match)
            self._get(candidate_id)
            del self.candidates[candidate_id]
            self._commit()

    def _check_revision(self, if_match: int | None) -> None:
        if if_match is not None and if_match != self.revision:
            raise RevisionMismatch(if_match, self.revision)

    def _commit(self) -> None:
        self.revision += 1
        self.save()

    # --- persistence ---------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "revision": self.revision,
            "next_candidate_seq": self.next_candidate_seq,
            "community": community_to_dict(self.community),
            "model": model_to_dict(self.model),
            "policy": policy_to_dict(self.policy),
            "candidates": [
                {"candidate_id": c.candidate_id, "csv": serialize_consumption_csv(c.dataset)}
                for c in sorted(self.candidates.values(), key=lambda c: c.candidate_id)
            ],
        }

    def save(self) -> None:
        if self.snapshot_path is None:
            return
        path = Path(self.snapshot_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")
        os.replace(tmp, path)

    @classmethod
    def load(cls, snapshot_path: Path) -> "ServiceState":
        doc = json.loads(Path(snapshot_path).read_text(encoding="utf-8"))
        candidates = {}
        for entry in doc.get("candidates", []):
            cid = entry["candidate_id"]
            candidates[cid] = StoredCandidate(cid, parse_consumption_csv(entry["csv"], consumer_id=cid))
        return cls(
            community=community_from_dict(doc["community"]),
            model=model_from_dict(doc["model"]),
            policy=policy_from_dict(doc.get("policy", {})),
            snapshot_path=Path(snapshot_path),
            revision=int(doc.get("revision", 0)),
            candidates=candidates,
            next_candidate_seq=int(doc.get("next_candidate_seq", 1)),
        )
