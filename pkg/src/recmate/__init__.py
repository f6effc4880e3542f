"""recmate: load-profile clustering and shared-energy admission
recommendations for renewable energy communities."""

from .clustering import Assignment, ClusterModel, Init, KMeansConfig, assign, kmeans_fit
from .community import CommunityState, Member, ProducerSpec, SharingReport, simulate
from .datagen import Archetype, ArchetypeParams, gen_consumer, gen_corpus, gen_producer
from .profiles import (
    ConsumerDataset,
    ConsumptionRecord,
    FeatureVector,
    Layout,
    Normalization,
    build_feature_vector,
    parse_consumption_csv,
)
from .recommender import AdmissionPolicy, Decision, Recommendation, rank_candidates, score_candidate

__version__ = "0.1.0"

__all__ = [
    "AdmissionPolicy",
    "Archetype",
    "ArchetypeParams",
    "Assignment",
    "ClusterModel",
    "CommunityState",
    "ConsumerDataset",
    "ConsumptionRecord",
    "Decision",
    "FeatureVector",
    "Init",
    "KMeansConfig",
    "Layout",
    "Member",
    "Normalization",
    "ProducerSpec",
    "Recommendation",
    "SharingReport",
    "assign",
    "build_feature_vector",
    "gen_consumer",
    "gen_corpus",
    "gen_producer",
    "kmeans_fit",
    "parse_consumption_csv",
    "rank_candidates",
    "score_candidate",
    "simulate",
]
