"""Shared test fixtures and small builders."""

from __future__ import annotations

import numpy as np
import pytest

from fsosr import Episode, FeatureSet, OUTLIER


def make_feature_set(
    rng: np.random.Generator,
    n_classes: int = 6,
    per_class: int = 20,
    dim: int = 4,
    splits: dict[int, str] | None = None,
    spread: float = 0.5,
    radius: float = 3.0,
) -> FeatureSet:
    """Gaussian clusters with per-class split assignment (default all test)."""
    centroids = rng.normal(size=(n_classes, dim)) * radius
    vectors = np.concatenate(
        [centroids[c] + spread * rng.normal(size=(per_class, dim)) for c in range(n_classes)]
    )
    labels = np.repeat(np.arange(n_classes), per_class)
    if splits is None:
        splits = {c: "test" for c in range(n_classes)}
    return FeatureSet(
        vectors=vectors.astype(np.float32),
        labels=labels,
        class_names=tuple(f"c{i}" for i in range(n_classes)),
        split_of_class=splits,
    )


def make_episode(
    rng: np.random.Generator,
    n_way: int = 3,
    n_shot: int = 2,
    n_query_per_class: int = 4,
    n_open_classes: int = 2,
    dim: int = 5,
    spread: float = 0.4,
    radius: float = 2.0,
) -> Episode:
    """Synthetic episode with Gaussian class clusters, outliers included."""
    centroids = radius * rng.normal(size=(n_way + n_open_classes, dim))
    support_vectors = []
    support_labels = []
    query_vectors = []
    query_truth = []
    for k in range(n_way):
        support_vectors.append(centroids[k] + spread * rng.normal(size=(n_shot, dim)))
        support_labels.append(np.full(n_shot, k))
        query_vectors.append(centroids[k] + spread * rng.normal(size=(n_query_per_class, dim)))
        query_truth.append(np.full(n_query_per_class, k))
    for j in range(n_open_classes):
        query_vectors.append(
            centroids[n_way + j] + spread * rng.normal(size=(n_query_per_class, dim))
        )
        query_truth.append(np.full(n_query_per_class, OUTLIER))
    return Episode(
        support_vectors=np.concatenate(support_vectors),
        support_labels=np.concatenate(support_labels).astype(np.int64),
        query_vectors=np.concatenate(query_vectors),
        query_truth=np.concatenate(query_truth).astype(np.int64),
        closed_classes=np.arange(n_way, dtype=np.int64),
        open_classes=np.arange(n_way, n_way + n_open_classes, dtype=np.int64),
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240913)
