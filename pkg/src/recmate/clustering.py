"""K-means load-profile clustering: Lloyd fits with restarts, assignment,
and evaluation metrics (WCSS, silhouette, one-vs-rest ROC AUC).

The fit is deterministic for a given seed: restart ``r`` draws from
``default_rng(seed + r)`` and the best-of-restarts reduction breaks WCSS
ties by lowest restart index.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .profiles import FeatureVector, Layout, Normalization


class ClusteringError(Exception):
    """Base class for clustering failures."""


class TooFewPoints(ClusteringError):
    def __init__(self, n: int, k: int):
        super().__init__(f"need at least k={k} profiles, got {n}")


class MixedLayouts(ClusteringError):
    pass


class NonFiniteInput(ClusteringError):
    pass


class LayoutMismatch(ClusteringError):
    pass


class SingleCluster(ClusteringError):
    pass


class LabelCountMismatch(ClusteringError):
    pass


class DegenerateClass(ClusteringError):
    pass


class Init(enum.Enum):
    RANDOM_POINTS = "RANDOM_POINTS"
    KMEANSPP = "KMEANSPP"


@dataclass(frozen=True)
class KMeansConfig:
    k: int = 3
    init: Init = Init.KMEANSPP
    tolerance: float = 1e-6
    max_iterations: int = 300
    restarts: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.tolerance < 0:
            raise ValueError("tolerance must be >= 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class ClusterModel:
    """Fitted centroids plus the metadata needed to reuse them safely."""

    centroids: tuple[tuple[float, ...], ...]
    layout: Layout
    normalization: Normalization
    tolerance: float
    wcss: float
    iterations_run: int
    converged: bool
    seed_used: int

    @property
    def k(self) -> int:
        return len(self.centroids)


@dataclass(frozen=True)
class Assignment:
    cluster_index: int
    distance: float


@dataclass(frozen=True)
class LloydResult:
    """Outcome of a single Lloyd run, with per-iteration WCSS for auditing."""

    centroids: np.ndarray
    wcss: float
    iterations: int
    converged: bool
    wcss_history: tuple[float, ...] = field(repr=False, default=())


@dataclass(frozen=True)
class RocReport:
    """Per-cluster one-vs-rest AUCs after majority-label mapping."""

    auc_per_cluster: tuple[float, ...]
    mapped_labels: tuple[str, ...]
    macro_auc: float


def _pairwise_sq_dists(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - centroids[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def _nearest(points: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Labels (ties -> lowest index) and squared distance to the winner."""
    sq = _pairwise_sq_dists(points, centroids)
    labels = np.argmin(sq, axis=1)
    return labels, sq[np.arange(len(points)), labels]


def _total_wcss(points: np.ndarray, centroids: np.ndarray) -> float:
    _, sq = _nearest(points, centroids)
    return float(sq.sum())


def init_random_points(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    idx = rng.choice(len(points), size=k, replace=False)
    return points[idx].copy()


def init_kmeanspp(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """D^2 sampling: each new centroid drawn with probability proportional to
    its squared distance from the nearest centroid chosen so far."""
    n = len(points)
    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[rng.integers(n)]
    sq = np.sum((points - centroids[0]) ** 2, axis=1)
    for i in range(1, k):
        total = sq.sum()
        if total == 0.0:  # all remaining mass at existing centroids
            centroids[i] = points[rng.integers(n)]
            continue
        next_idx = rng.choice(n, p=sq / total)
        centroids[i] = points[next_idx]
        sq = np.minimum(sq, np.sum((points - centroids[i]) ** 2, axis=1))
    return centroids


def lloyd_fit(
    points: np.ndarray,
    initial_centroids: np.ndarray,
    tolerance: float = 1e-6,
    max_iterations: int = 300,
) -> LloydResult:
    """One Lloyd run from explicit starting centroids.

    Each iteration assigns every point to its nearest centroid, recomputes
    centroids as cluster means, and repairs empty clusters by re-seeding
    them at the point farthest from its assigned centroid. Converges when
    the largest centroid displacement is within ``tolerance``.

    ``wcss_history`` holds WCSS at the initial centroids followed by the
    WCSS after every assignment+update iteration; Lloyd guarantees it is
    non-increasing.
    """
    centroids = initial_centroids.astype(float).copy()
    k = len(centroids)
    history = [_total_wcss(points, centroids)]
    converged = False
    iterations = 0

    for _ in range(max_iterations):
        iterations += 1
        labels, min_sq = _nearest(points, centroids)

        new_centroids = centroids.copy()
        empty: list[int] = []
        for c in range(k):
            mask = labels == c
            if mask.any():
                new_centroids[c] = points[mask].mean(axis=0)
            else:
                empty.append(c)

        # Re-seed each empty cluster at the currently worst-fitted point;
        # claimed points are excluded so two empties never collide.
        if empty:
            claimable = min_sq.copy()
            for c in empty:
                far = int(np.argmax(claimable))
                new_centroids[c] = points[far]
                claimable[far] = -np.inf

        displacement = float(np.max(np.linalg.norm(new_centroids - centroids, axis=1)))
        centroids = new_centroids
        history.append(_total_wcss(points, centroids))
        if displacement <= tolerance:
            converged = True
            break

    return LloydResult(centroids, history[-1], iterations, converged, tuple(history))


def _swap_refine(
    points: np.ndarray,
    result: LloydResult,
    tolerance: float,
    max_iterations: int,
) -> LloydResult:
    """Escape Lloyd-stable local optima via single-point swaps.

    Repeatedly looks for one point whose move to another cluster strictly
    lowers the partition WCSS (Hartigan delta, exact for the two affected
    clusters), applies the first such move, and re-runs Lloyd. Every applied
    swap strictly decreases WCSS, so the concatenated iteration history
    stays non-increasing and the loop terminates.
    """
    max_rounds = max(100, len(points))
    for _ in range(max_rounds):
        centroids = result.centroids
        k = len(centroids)
        if k < 2:
            break
        sq = _pairwise_sq_dists(points, centroids)
        labels = np.argmin(sq, axis=1)
        sizes = np.bincount(labels, minlength=k)
        threshold = -1e-12 * max(1.0, result.wcss)

        move = None
        for i in range(len(points)):
            a = labels[i]
            if sizes[a] < 2:
                continue  # never empty a cluster
            loss = sizes[a] / (sizes[a] - 1) * sq[i, a]
            for b in range(k):
                if b == a:
                    continue
                gain = sizes[b] / (sizes[b] + 1) * sq[i, b]
                if gain - loss < threshold:
                    move = (i, a, b)
                    break
            if move:
                break
        if move is None:
            break

        i, a, b = move
        swapped = centroids.copy()
        swapped[b] = (centroids[b] * sizes[b] + points[i]) / (sizes[b] + 1)
        swapped[a] = (centroids[a] * sizes[a] - points[i]) / (sizes[a] - 1)
        rerun = lloyd_fit(points, swapped, tolerance, max_iterations)
        result = LloydResult(
            rerun.centroids,
            rerun.wcss,
            result.iterations + rerun.iterations,
            rerun.converged,
            result.wcss_history + rerun.wcss_history,
        )
    return result


def _as_matrix(profiles: list[FeatureVector]) -> tuple[np.ndarray, Layout, Normalization]:
    layout = profiles[0].layout
    normalization = profiles[0].normalization
    for p in profiles:
        if p.layout is not layout or p.normalization is not normalization:
            raise MixedLayouts(f"profile {p.consumer_id!r} has {p.layout.name}/{p.normalization.name}, expected {layout.name}/{normalization.name}")
    matrix = np.array([p.values for p in profiles], dtype=float)
    if not np.isfinite(matrix).all():
        raise NonFiniteInput("profiles contain NaN or infinite values")
    return matrix, layout, normalization


def fit_matrix(points: np.ndarray, config: KMeansConfig = KMeansConfig()) -> LloydResult:
    """Best-of-restarts Lloyd on a raw (n, d) matrix.

    Restart ``r`` is seeded with ``config.seed + r`` and runs Lloyd followed
    by the swap refinement; the lowest-WCSS run wins, ties going to the
    earliest restart. ``iterations`` counts all Lloyd iterations of the
    winning restart, including re-runs after swaps.
    """
    points = np.asarray(points, dtype=float)
    if len(points) < config.k:
        raise TooFewPoints(len(points), config.k)
    if not np.isfinite(points).all():
        raise NonFiniteInput("points contain NaN or infinite values")

    init_fn = init_kmeanspp if config.init is Init.KMEANSPP else init_random_points
    best: LloydResult | None = None
    for restart in range(config.restarts):
        rng = np.random.default_rng(config.seed + restart)
        initial = init_fn(points, config.k, rng)
        result = lloyd_fit(points, initial, config.tolerance, config.max_iterations)
        result = _swap_refine(points, result, config.tolerance, config.max_iterations)
        if best is None or result.wcss < best.wcss:
            best = result
    return best


def kmeans_fit(profiles: list[FeatureVector], config: KMeansConfig = KMeansConfig()) -> ClusterModel:
    """Best-of-restarts k-means over equal-layout feature vectors."""
    if not profiles:
        raise TooFewPoints(0, config.k)
    points, layout, normalization = _as_matrix(profiles)
    best = fit_matrix(points, config)

    return ClusterModel(
        centroids=tuple(tuple(float(v) for v in row) for row in best.centroids),
        layout=layout,
        normalization=normalization,
        tolerance=config.tolerance,
        wcss=best.wcss,
        iterations_run=best.iterations,
        converged=best.converged,
        seed_used=config.seed,
    )


def _check_profile(model: ClusterModel, profile: FeatureVector) -> np.ndarray:
    if profile.layout is not model.layout or profile.normalization is not model.normalization:
        raise LayoutMismatch(f"profile {profile.consumer_id!r} is {profile.layout.name}/{profile.normalization.name}, model expects {model.layout.name}/{model.normalization.name}")
    vec = np.asarray(profile.values, dtype=float)
    if not np.isfinite(vec).all():
        raise NonFiniteInput(f"profile {profile.consumer_id!r} contains NaN or infinite values")
    return vec


def assign(model: ClusterModel, profile: FeatureVector) -> Assignment:
    """Nearest-centroid assignment; exact ties go to the lowest index."""
    vec = _check_profile(model, profile)
    centroids = np.asarray(model.centroids, dtype=float)
    sq = np.sum((centroids - vec) ** 2, axis=1)
    idx = int(np.argmin(sq))
    return Assignment(idx, float(np.sqrt(sq[idx])))


def wcss(model: ClusterModel, profiles: list[FeatureVector]) -> float:
    """Sum of squared distances from each profile to its nearest centroid."""
    centroids = np.asarray(model.centroids, dtype=float)
    total = 0.0
    for p in profiles:
        vec = _check_profile(model, p)
        total += float(np.min(np.sum((centroids - vec) ** 2, axis=1)))
    return total


def silhouette(profiles: list[FeatureVector], assignments: list[Assignment]) -> float:
    """Mean silhouette coefficient (Euclidean); singleton clusters score 0."""
    if len(profiles) != len(assignments):
        raise ValueError("profiles and assignments must have equal length")
    if not profiles:
        raise SingleCluster("silhouette needs at least 2 distinct clusters")
    points, _, _ = _as_matrix(profiles)
    labels = np.array([a.cluster_index for a in assignments])
    clusters = np.unique(labels)
    if len(clusters) < 2:
        raise SingleCluster("silhouette needs at least 2 distinct clusters")

    diff = points[:, None, :] - points[None, :, :]
    dists = np.sqrt(np.einsum("ijd,ijd->ij", diff, diff))

    scores = np.zeros(len(points))
    for i in range(len(points)):
        own = labels == labels[i]
        own_size = own.sum()
        if own_size == 1:
            continue  # singleton convention: contributes 0
        a = dists[i, own].sum() / (own_size - 1)  # exclude self
        b = min(dists[i, labels == c].mean() for c in clusters if c != labels[i])
        denom = max(a, b)
        scores[i] = 0.0 if denom == 0.0 else (b - a) / denom
    return float(scores.mean())


def _midranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing their average rank."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def mann_whitney_auc(scores: np.ndarray, positives: np.ndarray) -> float:
    """Rank-statistic AUC; tied scores contribute 0.5 per positive/negative pair."""
    n_pos = int(positives.sum())
    n_neg = len(positives) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateClass("AUC needs at least one positive and one negative")
    ranks = _midranks(np.asarray(scores, dtype=float))
    rank_sum = float(ranks[positives].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg)


def roc_auc_vs_labels(model: ClusterModel, profiles: list[FeatureVector], labels: list[str]) -> RocReport:
    """One-vs-rest AUC per cluster after mapping clusters to majority labels.

    Cluster c is scored with -distance(x, centroid_c) for every profile x;
    positives are the profiles whose true label equals c's majority label
    (ties in the majority vote go to the smallest label).
    """
    if len(labels) != len(profiles):
        raise LabelCountMismatch(f"{len(labels)} labels for {len(profiles)} profiles")
    if not profiles:
        raise DegenerateClass("no profiles to evaluate")
    points = np.stack([_check_profile(model, p) for p in profiles])
    centroids = np.asarray(model.centroids, dtype=float)
    cluster_of = np.argmin(_pairwise_sq_dists(points, centroids), axis=1)
    label_arr = np.array(labels, dtype=object)

    aucs: list[float] = []
    mapped: list[str] = []
    for c in range(model.k):
        member_labels = label_arr[cluster_of == c]
        if len(member_labels) == 0:
            raise DegenerateClass(f"cluster {c} has no members to vote on a label")
        counts = Counter(member_labels)
        top = max(counts.values())
        majority = min(lbl for lbl, cnt in counts.items() if cnt == top)
        scores = -np.sqrt(np.sum((points - centroids[c]) ** 2, axis=1))
        aucs.append(mann_whitney_auc(scores, label_arr == majority))
        mapped.append(str(majority))

    return RocReport(tuple(aucs), tuple(mapped), float(np.mean(aucs)))


def model_to_dict(model: ClusterModel) -> dict:
    """JSON-ready representation; float repr round-trips exactly."""
    return {
        "k": model.k,
        "layout": model.layout.name,
        "normalization": model.normalization.name,
        "tolerance": model.tolerance,
        "seed_used": model.seed_used,
        "wcss": model.wcss,
        "iterations_run": model.iterations_run,
        "converged": model.converged,
        "centroids": [list(row) for row in model.centroids],
    }


def model_from_dict(doc: dict) -> ClusterModel:
    centroids = tuple(tuple(float(v) for v in row) for row in doc["centroids"])
    if len(centroids) != doc["k"]:
        raise ValueError(f"document claims k={doc['k']} but has {len(centroids)} centroids")
    return ClusterModel(
        centroids=centroids,
        layout=Layout[doc["layout"]],
        normalization=Normalization[doc["normalization"]],
        tolerance=float(doc["tolerance"]),
        wcss=float(doc["wcss"]),
        iterations_run=int(doc["iterations_run"]),
        converged=bool(doc["converged"]),
        seed_used=int(doc["seed_used"]),
    )
