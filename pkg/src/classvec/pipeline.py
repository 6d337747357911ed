"""Per-image vectors to per-class embeddings.

The pipeline applies, in order: optional threshold, optional image-stage
normalization, aggregation across the class's images, optional class-stage
normalization, optional restriction to layer groups. Every stage is pure, and
summation order is canonicalized by sorting image ids, so rebuilding from
the same records is bit-reproducible regardless of input order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    ManifestMismatchError,
    UnknownClassError,
    ValidationError,
)
from .manifold import DistanceMatrix
from .util import parallel_map
from .vectors import (
    LayerManifest,
    SparseActivationVector,
    apply_threshold,
    cosine_similarity,
    euclidean_distance,
    normalize_by_layer,
    normalize_whole,
    restrict_to_groups,
)

AGGREGATION_MODES = ("arithmetic", "geometric", "harmonic")
NORM_STAGES = ("image", "class", "none")
NORM_SCOPES = ("layer", "whole", "none")
DISTANCE_METRICS = ("cosine", "euclidean")


@dataclass(frozen=True)
class PipelineConfig:
    """Aggregation settings; defaults are the best-performing combination
    (arithmetic mean, class-stage normalization by layer, no threshold)."""

    aggregation: str = "arithmetic"
    norm_stage: str = "class"
    norm_scope: str = "layer"
    threshold: float | None = None
    groups: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.aggregation not in AGGREGATION_MODES:
            raise ValidationError(
                f"aggregation must be one of {AGGREGATION_MODES}, got {self.aggregation!r}"
            )
        if self.norm_stage not in NORM_STAGES:
            raise ValidationError(f"norm_stage must be one of {NORM_STAGES}, got {self.norm_stage!r}")
        if self.norm_scope not in NORM_SCOPES:
            raise ValidationError(f"norm_scope must be one of {NORM_SCOPES}, got {self.norm_scope!r}")
        if (self.norm_stage == "none") != (self.norm_scope == "none"):
            raise ValidationError("norm_scope must be 'none' exactly when norm_stage is 'none'")
        if self.threshold is not None:
            object.__setattr__(self, "threshold", float(self.threshold))
            if self.threshold < 0:
                raise ValidationError(f"threshold must be non-negative, got {self.threshold}")
        if self.groups is not None:
            groups = tuple(str(g) for g in self.groups)
            if not groups:
                raise ValidationError("groups, when given, must be non-empty")
            if len(set(groups)) != len(groups):
                raise ValidationError("groups contains duplicates")
            object.__setattr__(self, "groups", groups)

    def to_dict(self) -> dict:
        return {
            "aggregation": self.aggregation,
            "norm_stage": self.norm_stage,
            "norm_scope": self.norm_scope,
            "threshold": self.threshold,
            "groups": list(self.groups) if self.groups is not None else None,
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "PipelineConfig":
        known = {"aggregation", "norm_stage", "norm_scope", "threshold", "groups"}
        unknown = set(raw) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(raw)
        if kwargs.get("groups") is not None:
            kwargs["groups"] = tuple(kwargs["groups"])
        return cls(**kwargs)


DEFAULT_CONFIG = PipelineConfig()


@dataclass(frozen=True)
class ClassEmbedding:
    """One class's aggregated vector plus its identity and image count."""

    class_id: str
    synset_id: str
    vector: SparseActivationVector
    image_count: int

    def __post_init__(self):
        if self.image_count < 1:
            raise ValidationError(
                f"class {self.class_id!r}: image_count must be >= 1, got {self.image_count}"
            )


def aggregate(images: Sequence[SparseActivationVector], mode: str) -> SparseActivationVector:
    """Per-feature mean over all n images, counting absent entries as 0.

    arithmetic: sum/n over the union of supports. geometric ((prod)^(1/n))
    and harmonic (n/sum(1/v)) are zero wherever any image lacks the feature,
    so their support is the intersection. A feature whose value is identical
    in every image keeps that exact value under all three modes.
    """
    if mode not in AGGREGATION_MODES:
        raise ValidationError(f"aggregation must be one of {AGGREGATION_MODES}, got {mode!r}")
    images = list(images)
    if not images:
        raise ValidationError("cannot aggregate an empty image list")
    manifest = images[0].manifest
    for img in images[1:]:
        if img.manifest != manifest:
            raise ManifestMismatchError("aggregate: images use different manifests")
    n = len(images)
    if n == 1:
        return images[0]

    out: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    layer_ids = sorted({lid for img in images for lid in img.stored_layers})
    inv_n = 1.0 / n
    for lid in layer_ids:
        parts_idx = []
        parts_val = []
        for img in images:
            idx, val = img.layer(lid)
            if idx.size:
                parts_idx.append(idx)
                parts_val.append(val)
        cat_idx = np.concatenate(parts_idx)
        cat_val = np.concatenate(parts_val)
        uniq, inverse, counts = np.unique(cat_idx, return_inverse=True, return_counts=True)

        lo = np.full(uniq.size, np.inf)
        hi = np.full(uniq.size, -np.inf)
        np.minimum.at(lo, inverse, cat_val)
        np.maximum.at(hi, inverse, cat_val)
        constant = (counts == n) & (lo == hi)

        if mode == "arithmetic":
            acc = np.zeros(uniq.size)
            np.add.at(acc, inverse, cat_val)
            mean = acc * inv_n
            keep = np.ones(uniq.size, dtype=bool)
        elif mode == "geometric":
            acc = np.ones(uniq.size)
            np.multiply.at(acc, inverse, cat_val)
            mean = acc**inv_n
            keep = counts == n
        else:
            acc = np.zeros(uniq.size)
            np.add.at(acc, inverse, 1.0 / cat_val)
            with np.errstate(divide="ignore"):
                mean = n / acc
            keep = counts == n
        mean = np.where(constant, lo, mean)

        keep &= mean > 0
        if keep.any():
            out[lid] = (uniq[keep], mean[keep])
    return SparseActivationVector(manifest, out)


def _normalize(vector: SparseActivationVector, scope: str) -> SparseActivationVector:
    if scope == "layer":
        return normalize_by_layer(vector)
    if scope == "whole":
        return normalize_whole(vector)
    return vector


def build_class_embeddings(
    records: Iterable,
    config: PipelineConfig,
    class_map: Mapping[str, str],
    manifest: LayerManifest,
) -> list[ClassEmbedding]:
    """Run the full pipeline; one embedding per class, sorted by class_id.

    ``records`` yields objects with image_id, class_id and vector attributes.
    Classes are processed independently (and concurrently when the worker
    pool is sized above 1); within a class, images are sorted by image_id so
    results do not depend on input order.
    """
    by_class: dict[str, dict[str, SparseActivationVector]] = {}
    for rec in records:
        if rec.class_id not in class_map:
            raise UnknownClassError(f"record {rec.image_id!r}: unknown class {rec.class_id!r}")
        if rec.vector.manifest != manifest:
            raise ManifestMismatchError(
                f"record {rec.image_id!r} does not match the provided manifest"
            )
        images = by_class.setdefault(rec.class_id, {})
        if rec.image_id in images:
            raise ValidationError(
                f"duplicate image_id {rec.image_id!r} for class {rec.class_id!r}"
            )
        images[rec.image_id] = rec.vector

    def finish(class_id: str) -> ClassEmbedding:
        images = by_class[class_id]
        vecs = [images[image_id] for image_id in sorted(images)]
        if config.threshold is not None:
            vecs = [apply_threshold(v, config.threshold) for v in vecs]
        if config.norm_stage == "image":
            vecs = [_normalize(v, config.norm_scope) for v in vecs]
        combined = aggregate(vecs, config.aggregation)
        if config.norm_stage == "class":
            combined = _normalize(combined, config.norm_scope)
        if config.groups is not None:
            combined = restrict_to_groups(combined, config.groups)
        return ClassEmbedding(
            class_id=class_id,
            synset_id=class_map[class_id],
            vector=combined,
            image_count=len(images),
        )

    return parallel_map(finish, sorted(by_class))


def build_distance_matrix(
    embeddings: Sequence[ClassEmbedding], metric: str = "cosine"
) -> DistanceMatrix:
    """Pairwise distances between class vectors, rows sorted by class_id.

    cosine distance is 1 - cosine_similarity and lies in [0, 1] for
    non-negative vectors; each unordered pair is computed once and mirrored
    so the matrix is exactly symmetric.
    """
    if metric not in DISTANCE_METRICS:
        raise ValidationError(f"metric must be one of {DISTANCE_METRICS}, got {metric!r}")
    embeddings = sorted(embeddings, key=lambda e: e.class_id)
    if not embeddings:
        raise ValidationError("cannot build a distance matrix from zero embeddings")
    labels = [e.class_id for e in embeddings]
    if len(set(labels)) != len(labels):
        raise ValidationError("duplicate class_id among embeddings")
    vectors = [e.vector for e in embeddings]
    n = len(vectors)

    if metric == "cosine":
        pair = lambda a, b: 1.0 - cosine_similarity(a, b)
    else:
        pair = euclidean_distance

    def row_tail(i: int) -> list[float]:
        return [pair(vectors[i], vectors[j]) for j in range(i + 1, n)]

    tails = parallel_map(row_tail, range(n))
    vals = np.zeros((n, n))
    for i, tail in enumerate(tails):
        vals[i, i + 1 :] = tail
    vals = vals + vals.T
    return DistanceMatrix(labels, vals)
