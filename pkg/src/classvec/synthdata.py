"""Deterministic synthetic activations with planted taxonomy structure.

Classes are the leaves of a balanced random hierarchy. Every hierarchy node
owns a DISJOINT feature block inside every layer, and each image of a class
activates the blocks of all the class's ancestors, scaled by its layer
group's signal weight and jittered by the noise scale. Taxonomically close
classes therefore share more active features, which makes class-pair cosine
similarity a closed-form function of shared ancestry:

    cosine(c1, c2) = |anc(c1) & anc(c2)| / sqrt(|anc(c1)| * |anc(c2)|)

exactly, at noise 0, under the default pipeline (any per-layer-constant
signal weights cancel during normalization). Background noise occupies a
reserved index range past the signal blocks, so it never collides with
signal features.

All randomness flows from one seeded generator (numpy PCG64, algorithm
recorded in the metadata file), and generation is single-threaded, so equal
specs produce byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from . import io as cvio
from .errors import ValidationError
from .vectors import LayerManifest, SparseActivationVector

DEFAULT_GROUPS = ("3a", "3b", "4a", "4b", "4c", "4d", "4e", "5a", "5b")
KERNELS = ("1x1", "3x3", "5x5")
RNG_ALGORITHM = "numpy.random.default_rng (PCG64)"


@dataclass(frozen=True)
class GeneratorSpec:
    """Knobs for one synthetic dataset; equal specs give identical bytes."""

    seed: int = 0
    n_classes: int = 50
    images_per_class: tuple[int, int] = (11, 32)
    block_size: int = 4
    noise_scale: float = 0.0
    branching: int = 4
    group_weights: Mapping[str, float] | None = None
    manifest: LayerManifest | None = None

    def __post_init__(self):
        if self.n_classes < 2:
            raise ValidationError(f"need at least 2 classes, got {self.n_classes}")
        lo, hi = self.images_per_class
        if not (1 <= int(lo) <= int(hi)):
            raise ValidationError(f"bad images_per_class range {self.images_per_class}")
        object.__setattr__(self, "images_per_class", (int(lo), int(hi)))
        if self.block_size < 1:
            raise ValidationError(f"block_size must be >= 1, got {self.block_size}")
        if self.noise_scale < 0:
            raise ValidationError(f"noise_scale must be >= 0, got {self.noise_scale}")
        if self.branching < 2:
            raise ValidationError(f"branching must be >= 2, got {self.branching}")
        if self.group_weights is not None:
            weights = {str(g): float(w) for g, w in self.group_weights.items()}
            if any(w < 0 for w in weights.values()):
                raise ValidationError("group weights must be non-negative")
            object.__setattr__(self, "group_weights", weights)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "n_classes": self.n_classes,
            "images_per_class": list(self.images_per_class),
            "block_size": self.block_size,
            "noise_scale": self.noise_scale,
            "branching": self.branching,
            "group_weights": dict(self.group_weights) if self.group_weights else None,
            "manifest": (
                [[s.layer_id, s.group, s.dim] for s in self.manifest]
                if self.manifest is not None
                else None
            ),
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "GeneratorSpec":
        kwargs = dict(raw)
        if kwargs.get("images_per_class") is not None:
            kwargs["images_per_class"] = tuple(kwargs["images_per_class"])
        if kwargs.get("manifest") is not None:
            kwargs["manifest"] = LayerManifest(
                [(lid, grp, dim) for lid, grp, dim in kwargs["manifest"]]
            )
        return cls(**kwargs)


def _build_hierarchy(rng: np.random.Generator, n_classes: int, branching: int):
    """Balanced random tree: shuffled leaves chunked level by level.

    Returns (edges sorted, leaf synsets in class order, ancestor sets)."""
    leaves = [f"n{i + 1:08d}" for i in range(n_classes)]
    order = [leaves[i] for i in rng.permutation(n_classes)]
    edges: list[tuple[str, str]] = []
    next_internal = 0
    level = order
    while len(level) > 1:
        parents = []
        for start in range(0, len(level), branching):
            parent = f"i{next_internal:06d}"
            next_internal += 1
            for child in level[start : start + branching]:
                edges.append((child, parent))
            parents.append(parent)
        level = parents
    return sorted(edges), leaves


def _signal_manifest(n_nodes: int, block_size: int) -> LayerManifest:
    """27 layers (9 groups x 3 kernels), each wide enough for every block
    plus a reserved background-noise range."""
    capacity = n_nodes * block_size
    dim = capacity + max(16, capacity // 4)
    return LayerManifest(
        [(f"{g}_{k}", g, dim) for g in DEFAULT_GROUPS for k in KERNELS]
    )


def closed_form_cosine(ancestors_a: frozenset, ancestors_b: frozenset) -> float:
    """Expected class-pair cosine at noise 0 under the default pipeline."""
    shared = len(ancestors_a & ancestors_b)
    return shared / float(np.sqrt(len(ancestors_a) * len(ancestors_b)))


def generate(spec: GeneratorSpec, out_dir) -> dict[str, Path]:
    """Write the five dataset files plus metadata; return their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(spec.seed)

    edges, leaves = _build_hierarchy(rng, spec.n_classes, spec.branching)
    synsets = sorted({s for e in edges for s in e})
    parent_of: dict[str, str] = {c: p for c, p in edges}

    def ancestors(s: str) -> list[str]:
        chain = [s]
        while chain[-1] in parent_of:
            chain.append(parent_of[chain[-1]])
        return chain

    n_nodes = len(synsets)
    manifest = spec.manifest
    if manifest is None:
        manifest = _signal_manifest(n_nodes, spec.block_size)
    capacity = n_nodes * spec.block_size
    for layer in manifest:
        if layer.dim < capacity:
            raise ValidationError(
                f"layer {layer.layer_id!r} dim {layer.dim} cannot hold "
                f"{n_nodes} blocks of size {spec.block_size}"
            )
    block_of = {s: i * spec.block_size for i, s in enumerate(synsets)}
    weights = dict(spec.group_weights or {})

    class_ids = [f"c{i:04d}" for i in range(spec.n_classes)]
    class_map = dict(zip(class_ids, leaves))
    counts = {s: int(rng.integers(1, 100)) for s in synsets}

    lo, hi = spec.images_per_class
    image_counts = {cid: int(rng.integers(lo, hi + 1)) for cid in class_ids}

    block = spec.block_size
    noise = spec.noise_scale

    def make_records():
        for cid in class_ids:
            chain = ancestors(class_map[cid])
            starts = sorted(block_of[a] for a in chain)
            signal_idx = np.concatenate(
                [np.arange(s, s + block, dtype=np.int64) for s in starts]
            )
            for img in range(image_counts[cid]):
                entries = {}
                for layer in manifest:
                    weight = weights.get(layer.group, 1.0)
                    idx_parts = []
                    val_parts = []
                    if weight > 0:
                        if noise > 0:
                            jitter = 1.0 + noise * (rng.random(signal_idx.size) - 0.5)
                        else:
                            jitter = np.ones(signal_idx.size)
                        idx_parts.append(signal_idx)
                        val_parts.append(weight * jitter)
                    if noise > 0:
                        n_bg = int(rng.integers(2, 6))
                        bg_idx = capacity + rng.choice(
                            layer.dim - capacity, size=n_bg, replace=False
                        )
                        bg_val = noise * (0.05 + 0.95 * rng.random(n_bg))
                        idx_parts.append(np.sort(bg_idx).astype(np.int64))
                        val_parts.append(bg_val)
                    if not idx_parts:
                        continue
                    values = np.round(np.concatenate(val_parts), 4)
                    values = np.maximum(values, 1e-4)  # quantization floor
                    entries[layer.layer_id] = (np.concatenate(idx_parts), values)
                yield cvio.ActivationRecord(
                    f"{cid}_img{img:03d}", cid, SparseActivationVector(manifest, entries)
                )

    paths = {
        "manifest": out / "manifest.tsv",
        "activations": out / "activations.tsv",
        "taxonomy": out / "taxonomy.tsv",
        "counts": out / "counts.tsv",
        "class_map": out / "class_map.tsv",
        "meta": out / "dataset_meta.json",
    }
    cvio.write_manifest(manifest, paths["manifest"])
    cvio.write_activations(make_records(), paths["activations"])
    cvio.write_taxonomy_edges(edges, paths["taxonomy"])
    cvio.write_counts(counts, paths["counts"])
    cvio.write_class_map(class_map, paths["class_map"])
    meta = {
        "format_version": 1,
        "rng_algorithm": RNG_ALGORITHM,
        "spec": spec.to_dict(),
        "n_taxonomy_nodes": n_nodes,
        "total_images": sum(image_counts.values()),
    }
    paths["meta"].write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return paths
