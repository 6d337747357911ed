"""Sparse layered activation vectors and their arithmetic.

Every vector is addressed through a LayerManifest: an ordered list of named
layers, each carrying a group tag and a dimension. Entries are stored per
layer as index-sorted arrays, so binary operations are linear merges over the
stored entries and never touch absent coordinates. Vectors are immutable
after construction; all operations return new vectors and are safe to call
concurrently.
"""

from __future__ import annotations

import hashlib
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import (
    ManifestError,
    ManifestMismatchError,
    ValidationError,
    ZeroVectorError,
)


class LayerSpec(NamedTuple):
    layer_id: str
    group: str
    dim: int


class LayerManifest:
    """Ordered layer structure shared by every vector that uses it.

    Layer ids are unique, dims are >= 1, and each layer belongs to exactly
    one group. The manifest fixes the coordinate system: the flattened index
    of (layer, i) is offset_of(layer) + i.
    """

    __slots__ = ("_layers", "_position", "_offsets", "_total_dim", "_groups", "_digest")

    def __init__(self, layers: Iterable[tuple[str, str, int]]):
        specs = tuple(LayerSpec(str(lid), str(grp), int(dim)) for lid, grp, dim in layers)
        if not specs:
            raise ManifestError("manifest must declare at least one layer")
        position: dict[str, int] = {}
        offsets: dict[str, int] = {}
        total = 0
        groups: list[str] = []
        for pos, spec in enumerate(specs):
            if spec.dim < 1:
                raise ManifestError(f"layer {spec.layer_id!r} has non-positive dim {spec.dim}")
            if spec.layer_id in position:
                raise ManifestError(f"duplicate layer_id {spec.layer_id!r}")
            position[spec.layer_id] = pos
            offsets[spec.layer_id] = total
            total += spec.dim
            if spec.group not in groups:
                groups.append(spec.group)
        self._layers = specs
        self._position = position
        self._offsets = offsets
        self._total_dim = total
        self._groups = tuple(groups)
        payload = "\n".join(f"{s.layer_id}\t{s.group}\t{s.dim}" for s in specs)
        self._digest = hashlib.sha256(payload.encode("utf-8")).hexdigest()[:12]

    @property
    def layers(self) -> tuple[LayerSpec, ...]:
        return self._layers

    @property
    def layer_ids(self) -> tuple[str, ...]:
        return tuple(s.layer_id for s in self._layers)

    @property
    def groups(self) -> tuple[str, ...]:
        """Group tags in first-appearance order."""
        return self._groups

    @property
    def total_dim(self) -> int:
        return self._total_dim

    @property
    def digest(self) -> str:
        return self._digest

    def __len__(self) -> int:
        return len(self._layers)

    def __iter__(self) -> Iterator[LayerSpec]:
        return iter(self._layers)

    def __contains__(self, layer_id: str) -> bool:
        return layer_id in self._position

    def spec_of(self, layer_id: str) -> LayerSpec:
        try:
            return self._layers[self._position[layer_id]]
        except KeyError:
            raise ValidationError(f"unknown layer_id {layer_id!r}") from None

    def dim_of(self, layer_id: str) -> int:
        return self.spec_of(layer_id).dim

    def group_of(self, layer_id: str) -> str:
        return self.spec_of(layer_id).group

    def offset_of(self, layer_id: str) -> int:
        self.spec_of(layer_id)
        return self._offsets[layer_id]

    def layers_in_groups(self, groups: Iterable[str]) -> tuple[str, ...]:
        """Layer ids whose group tag is in ``groups``, manifest order."""
        wanted = set(groups)
        unknown = wanted - set(self._groups)
        if unknown:
            raise ValidationError(f"unknown group tags: {sorted(unknown)}")
        return tuple(s.layer_id for s in self._layers if s.group in wanted)

    def describe(self) -> str:
        return (
            f"{len(self._layers)} layers / {len(self._groups)} groups / "
            f"total_dim={self._total_dim} / digest={self._digest}"
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, LayerManifest):
            return NotImplemented
        return self._layers == other._layers

    def __hash__(self) -> int:
        return hash(self._layers)

    def __repr__(self) -> str:
        return f"LayerManifest({self.describe()})"


def _coerce_layer(layer_id: str, dim: int, raw) -> tuple[np.ndarray, np.ndarray]:
    """Normalize one layer's entries to sorted, validated index/value arrays."""
    if isinstance(raw, tuple) and len(raw) == 2 and not np.isscalar(raw[0]):
        idx = np.asarray(raw[0], dtype=np.int64)
        val = np.asarray(raw[1], dtype=np.float64)
        if idx.shape != val.shape:
            raise ValidationError(f"layer {layer_id!r}: index/value arrays differ in length")
    else:
        pairs = list(raw)
        idx = np.asarray([p[0] for p in pairs], dtype=np.int64)
        val = np.asarray([p[1] for p in pairs], dtype=np.float64)
    if idx.size == 0:
        return idx, val
    order = np.argsort(idx, kind="stable")
    idx = idx[order]
    val = val[order]
    if idx[0] < 0 or idx[-1] >= dim:
        bad = int(idx[0]) if idx[0] < 0 else int(idx[-1])
        raise ValidationError(f"layer {layer_id!r}: feature index {bad} out of range (dim {dim})")
    if idx.size > 1 and np.any(np.diff(idx) == 0):
        dup = int(idx[np.flatnonzero(np.diff(idx) == 0)[0]])
        raise ValidationError(f"layer {layer_id!r}: duplicate feature index {dup}")
    if not np.all(np.isfinite(val)):
        raise ValidationError(f"layer {layer_id!r}: non-finite activation value")
    if np.any(val < 0):
        bad = float(val[val < 0][0])
        raise ValidationError(f"layer {layer_id!r}: negative activation value {bad}")
    keep = val > 0  # explicit zeros are never stored
    if not keep.all():
        idx = idx[keep]
        val = val[keep]
    return idx, val


def _lock(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


_EMPTY_IDX = _lock(np.empty(0, dtype=np.int64))
_EMPTY_VAL = _lock(np.empty(0, dtype=np.float64))


class SparseActivationVector:
    """Non-negative sparse activations segmented by manifest layer.

    Within each layer, indices are strictly increasing and values strictly
    positive (explicit zeros are dropped at construction). Two vectors are
    operable together only when their manifests compare equal.
    """

    __slots__ = ("manifest", "_data")

    def __init__(self, manifest: LayerManifest, entries: Mapping[str, object] | None = None):
        data: dict[str, tuple[np.ndarray, np.ndarray]] = {}
        if entries:
            for layer_id in entries:
                dim = manifest.dim_of(layer_id)  # raises on unknown layer
                idx, val = _coerce_layer(layer_id, dim, entries[layer_id])
                if idx.size:
                    data[layer_id] = (_lock(idx), _lock(val))
        self.manifest = manifest
        self._data = data

    @classmethod
    def _trusted(cls, manifest: LayerManifest, data: dict[str, tuple[np.ndarray, np.ndarray]]):
        """Internal fast path; arrays must already be sorted, positive, locked."""
        v = object.__new__(cls)
        v.manifest = manifest
        v._data = data
        return v

    @classmethod
    def empty(cls, manifest: LayerManifest) -> "SparseActivationVector":
        return cls._trusted(manifest, {})

    def layer(self, layer_id: str) -> tuple[np.ndarray, np.ndarray]:
        """Read-only (indices, values) for one layer; empty arrays if silent."""
        self.manifest.spec_of(layer_id)
        return self._data.get(layer_id, (_EMPTY_IDX, _EMPTY_VAL))

    @property
    def stored_layers(self) -> tuple[str, ...]:
        """Ids of layers holding at least one entry, manifest order."""
        return tuple(lid for lid in self.manifest.layer_ids if lid in self._data)

    @property
    def nnz(self) -> int:
        return sum(idx.size for idx, _ in self._data.values())

    @property
    def is_zero(self) -> bool:
        return not self._data

    def iter_entries(self) -> Iterator[tuple[str, int, float]]:
        """(layer_id, index, value) triples in canonical order."""
        for lid in self.manifest.layer_ids:
            got = self._data.get(lid)
            if got is None:
                continue
            idx, val = got
            for i, v in zip(idx.tolist(), val.tolist()):
                yield lid, i, v

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseActivationVector):
            return NotImplemented
        if self.manifest != other.manifest or self._data.keys() != other._data.keys():
            return False
        return all(
            np.array_equal(self._data[k][0], other._data[k][0])
            and np.array_equal(self._data[k][1], other._data[k][1])
            for k in self._data
        )

    def __repr__(self) -> str:
        return (
            f"SparseActivationVector(nnz={self.nnz}, "
            f"layers={len(self._data)}/{len(self.manifest)})"
        )


def _require_same_manifest(a: SparseActivationVector, b: SparseActivationVector, op: str):
    if a.manifest != b.manifest:
        raise ManifestMismatchError(
            f"{op}: operands use different manifests "
            f"({a.manifest.describe()} vs {b.manifest.describe()})"
        )


def _align(src_idx: np.ndarray, src_val: np.ndarray, dst_idx: np.ndarray):
    """Values of src at dst's indices (0 where absent) plus membership mask."""
    pos = np.searchsorted(src_idx, dst_idx)
    inside = pos < src_idx.size
    hit = np.zeros(dst_idx.size, dtype=bool)
    hit[inside] = src_idx[pos[inside]] == dst_idx[inside]
    vals = np.zeros(dst_idx.size, dtype=np.float64)
    vals[hit] = src_val[pos[hit]]
    return vals, hit


def dot(a: SparseActivationVector, b: SparseActivationVector) -> float:
    """Inner product over shared coordinates."""
    _require_same_manifest(a, b, "dot")
    total = 0.0
    for lid in a._data:
        if lid not in b._data:
            continue
        ai, av = a._data[lid]
        bi, bv = b._data[lid]
        b_at_a, _ = _align(bi, bv, ai)
        total += float(np.dot(av, b_at_a))
    return total


def _sq_norm(v: SparseActivationVector) -> float:
    sq = 0.0
    for _, val in v._data.values():
        sq += float(np.dot(val, val))
    return sq


def l2_norm(v: SparseActivationVector) -> float:
    return float(np.sqrt(_sq_norm(v)))


def cosine_similarity(a: SparseActivationVector, b: SparseActivationVector) -> float:
    """Cosine of the angle between two non-zero vectors, clamped into [0, 1].

    The denominator is sqrt(|a|^2 * |b|^2): with a correctly rounded sqrt
    this makes cosine(v, v) exactly 1.0, and the top clamp absorbs any
    remaining 1-ulp overshoot for near-parallel inputs.
    """
    _require_same_manifest(a, b, "cosine_similarity")
    if a.is_zero or b.is_zero:
        raise ZeroVectorError("undefined cosine for zero vector")
    return min(1.0, dot(a, b) / float(np.sqrt(_sq_norm(a) * _sq_norm(b))))


def euclidean_distance(a: SparseActivationVector, b: SparseActivationVector) -> float:
    """L2 distance of the true (unclamped) difference."""
    _require_same_manifest(a, b, "euclidean_distance")
    sq = 0.0
    for lid in set(a._data) | set(b._data):
        ai, av = a.layer(lid)
        bi, bv = b.layer(lid)
        if bi.size == 0:
            sq += float(np.dot(av, av))
            continue
        if ai.size == 0:
            sq += float(np.dot(bv, bv))
            continue
        b_at_a, _ = _align(bi, bv, ai)
        diff = av - b_at_a
        sq += float(np.dot(diff, diff))
        _, b_hit = _align(ai, av, bi)
        rest = bv[~b_hit]
        sq += float(np.dot(rest, rest))
    return float(np.sqrt(sq))


def subtract(a: SparseActivationVector, b: SparseActivationVector) -> SparseActivationVector:
    """Clamped per-feature difference: a - b where a > b, else 0.

    The result is non-negative with support contained in a's support; the
    operation is not commutative.
    """
    _require_same_manifest(a, b, "subtract")
    out: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for lid in a._data:
        ai, av = a._data[lid]
        bi, bv = b.layer(lid)
        if bi.size == 0:
            out[lid] = (ai, av)
            continue
        b_at_a, _ = _align(bi, bv, ai)
        diff = av - b_at_a
        keep = diff > 0
        if keep.any():
            out[lid] = (_lock(ai[keep]), _lock(diff[keep]))
    return SparseActivationVector._trusted(a.manifest, out)


def apply_threshold(v: SparseActivationVector, t: float) -> SparseActivationVector:
    """Drop entries with value strictly below t; t = 0 is the identity."""
    t = float(t)
    if t < 0:
        raise ValidationError(f"threshold must be non-negative, got {t}")
    if t == 0:
        return v
    out: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for lid, (idx, val) in v._data.items():
        keep = val >= t
        if keep.all():
            out[lid] = (idx, val)
        elif keep.any():
            out[lid] = (_lock(idx[keep]), _lock(val[keep]))
    return SparseActivationVector._trusted(v.manifest, out)


def normalize_by_layer(v: SparseActivationVector) -> SparseActivationVector:
    """Rescale each stored layer segment to unit L2 norm.

    Silent (all-zero) layers stay silent rather than raising: sparse class
    vectors legitimately have layers with no activation at all.
    """
    out: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for lid, (idx, val) in v._data.items():
        norm = float(np.sqrt(np.dot(val, val)))
        out[lid] = (idx, _lock(val / norm))
    return SparseActivationVector._trusted(v.manifest, out)


def normalize_whole(v: SparseActivationVector) -> SparseActivationVector:
    """Rescale the full vector to unit L2 norm; the zero vector stays zero."""
    norm = l2_norm(v)
    if norm == 0.0:
        return v
    out = {lid: (idx, _lock(val / norm)) for lid, (idx, val) in v._data.items()}
    return SparseActivationVector._trusted(v.manifest, out)


def restrict_to_groups(v: SparseActivationVector, groups: Iterable[str]) -> SparseActivationVector:
    """Keep only entries in layers whose group tag is selected.

    The manifest is retained, so downstream distances are computed over the
    surviving coordinates of the unchanged coordinate system.
    """
    keep = set(v.manifest.layers_in_groups(groups))
    out = {lid: pair for lid, pair in v._data.items() if lid in keep}
    return SparseActivationVector._trusted(v.manifest, out)
