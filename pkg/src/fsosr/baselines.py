"""Inductive reference methods: nearest-centroid softmax classifier and a
k-nearest-neighbor outlier detector. Their combination is the strong
baseline the transductive methods are measured against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .episodes import Episode
from .predictions import PredictionSheet
from .transforms import CenteringPolicy, center_normalize


@dataclass(frozen=True)
class BaselineConfig:
    knn_k: int = 1
    temperature: float = 10.0

    def __post_init__(self) -> None:
        if self.knn_k < 1:
            raise ValueError(f"knn_k must be >= 1, got {self.knn_k}")
        if not self.temperature > 0:
            raise ValueError(f"temperature must be > 0, got {self.temperature}")


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def simpleshot_classify(
    episode: Episode, policy: CenteringPolicy, temperature: float = 10.0
) -> PredictionSheet:
    """Nearest-centroid classification on center-normalized features.

    Class centroids are the per-class means of the transformed support
    vectors, re-normalized to unit length; probabilities are a softmax over
    temperature-scaled cosine similarities. Outlierness is the negative of
    the maximum class probability.
    """
    mu = policy.resolve(episode)
    support = center_normalize(episode.support_vectors, mu)
    queries = center_normalize(episode.query_vectors, mu)
    k_way = episode.n_way
    centroids = np.stack(
        [support[episode.support_labels == k].mean(axis=0) for k in range(k_way)]
    )
    centroids = center_normalize(centroids, np.zeros(episode.dim))
    logits = temperature * (queries @ centroids.T)
    probs = _softmax(logits)
    return PredictionSheet(
        probs=probs,
        outlier_score=-probs.max(axis=1),
        closed_pred=probs.argmax(axis=1),
        n_closed=k_way,
    )


def knn_outlier_score(
    episode: Episode, policy: CenteringPolicy, k: int = 1
) -> np.ndarray:
    """Mean Euclidean distance from each query to its k nearest support
    vectors, all in the center-normalized space. Higher means more outlying.
    """
    n_support = episode.support_vectors.shape[0]
    if not 1 <= k <= n_support:
        raise ValueError(f"k must be in [1, {n_support}], got {k}")
    mu = policy.resolve(episode)
    support = center_normalize(episode.support_vectors, mu)
    queries = center_normalize(episode.query_vectors, mu)
    diffs = queries[:, None, :] - support[None, :, :]
    distances = np.sqrt((diffs**2).sum(axis=-1))
    distances.sort(axis=1)
    return distances[:, :k].mean(axis=1)
