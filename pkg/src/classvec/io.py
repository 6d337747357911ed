"""File formats: loaders with positional diagnostics, writers that round-trip.

Five tab-separated input formats (manifest, activations, taxonomy edges,
corpus counts, class map) plus the produced artifacts: class embeddings,
distance matrix CSV, coordinates/eigenvalue CSVs, rho tables, histogram
CSVs, equation tables, and 2-D scatter SVGs. All text is UTF-8 with LF
line endings; reals use Python's shortest round-trip representation except
CSV matrix cells, which carry 9 significant digits.
"""

from __future__ import annotations

import csv
import math
from typing import IO, Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np

from .correlation import RhoDistribution, SweepEntry
from .equations import EquationResult
from .errors import FormatError, ValidationError
from .manifold import DistanceMatrix, EmbeddingCoordinates
from .pipeline import ClassEmbedding
from .taxonomy import Taxonomy
from .vectors import LayerManifest, SparseActivationVector


class ActivationRecord(NamedTuple):
    image_id: str
    class_id: str
    vector: SparseActivationVector


def _fmt(value: float) -> str:
    """Shortest decimal that parses back to exactly the same float."""
    return repr(float(value))


def _check_id(kind: str, value: str) -> str:
    value = str(value)
    if not value or any(c in value for c in "\t\n\r"):
        raise ValidationError(f"{kind} {value!r} is empty or contains tab/newline")
    return value


def _open_read(path) -> IO[str]:
    return open(path, "r", encoding="utf-8", newline="")


def _open_write(path) -> IO[str]:
    return open(path, "w", encoding="utf-8", newline="")


# -- manifest ---------------------------------------------------------------


def load_manifest(path) -> LayerManifest:
    """Parse layer_id TAB group TAB dim lines, keeping file order."""
    layers = []
    with _open_read(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise FormatError(path, lineno, f"expected 3 tab-separated fields, got {len(parts)}")
            layer_id, group, dim_text = parts
            try:
                dim = int(dim_text)
            except ValueError:
                raise FormatError(path, lineno, f"dim {dim_text!r} is not an integer") from None
            if dim < 1:
                raise FormatError(path, lineno, f"layer {layer_id!r} has non-positive dim {dim}")
            if any(layer_id == seen for seen, _, _ in layers):
                raise FormatError(path, lineno, f"duplicate layer_id {layer_id!r}")
            layers.append((layer_id, group, dim))
    if not layers:
        raise FormatError(path, 1, "manifest file is empty")
    return LayerManifest(layers)


def write_manifest(manifest: LayerManifest, path) -> None:
    with _open_write(path) as fh:
        for spec in manifest:
            fh.write(f"{_check_id('layer_id', spec.layer_id)}\t{spec.group}\t{spec.dim}\n")


# -- activations ------------------------------------------------------------


def stream_activations(path, manifest: LayerManifest) -> Iterator[ActivationRecord]:
    """Yield records one at a time in file order; memory stays O(1 record).

    Line format: image_id TAB class_id TAB space-separated
    layer_id:index:value triplets (the third field may be empty).
    """
    with _open_read(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise FormatError(path, lineno, f"expected 3 tab-separated fields, got {len(parts)}")
            image_id, class_id, payload = parts
            if not image_id or not class_id:
                raise FormatError(path, lineno, "empty image_id or class_id")
            entries: dict[str, tuple[list[int], list[float]]] = {}
            if payload:
                for token in payload.split(" "):
                    pieces = token.rsplit(":", 2)
                    if len(pieces) != 3:
                        raise FormatError(path, lineno, f"malformed triplet {token!r}")
                    layer_id, idx_text, val_text = pieces
                    if layer_id not in manifest:
                        raise FormatError(path, lineno, f"unknown layer_id {layer_id!r}")
                    try:
                        idx = int(idx_text)
                        val = float(val_text)
                    except ValueError:
                        raise FormatError(path, lineno, f"malformed triplet {token!r}") from None
                    dim = manifest.dim_of(layer_id)
                    if not 0 <= idx < dim:
                        raise FormatError(
                            path,
                            lineno,
                            f"layer {layer_id!r}: index {idx} out of range (dim {dim})",
                        )
                    if not math.isfinite(val) or val < 0:
                        raise FormatError(
                            path, lineno, f"layer {layer_id!r}: bad value {val_text!r}"
                        )
                    bucket = entries.setdefault(layer_id, ([], []))
                    bucket[0].append(idx)
                    bucket[1].append(val)
            try:
                vector = SparseActivationVector(
                    manifest,
                    {lid: (np.array(ix, dtype=np.int64), np.array(vs)) for lid, (ix, vs) in entries.items()},
                )
            except ValidationError as exc:
                raise FormatError(path, lineno, str(exc)) from None
            yield ActivationRecord(image_id, class_id, vector)


def write_activations(records: Iterable[ActivationRecord], path) -> None:
    with _open_write(path) as fh:
        for rec in records:
            triplets = " ".join(
                f"{lid}:{idx}:{_fmt(val)}" for lid, idx, val in rec.vector.iter_entries()
            )
            fh.write(
                f"{_check_id('image_id', rec.image_id)}\t"
                f"{_check_id('class_id', rec.class_id)}\t{triplets}\n"
            )


# -- taxonomy edges ---------------------------------------------------------


def load_taxonomy_edges(path) -> list[tuple[str, str]]:
    edges = []
    with _open_read(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise FormatError(path, lineno, f"expected child TAB parent, got {len(parts)} fields")
            if not parts[0] or not parts[1]:
                raise FormatError(path, lineno, "empty synset id")
            edges.append((parts[0], parts[1]))
    if not edges:
        raise FormatError(path, 1, "taxonomy file is empty")
    return edges


def load_taxonomy(path) -> Taxonomy:
    return Taxonomy(load_taxonomy_edges(path))


def write_taxonomy_edges(edges: Iterable[tuple[str, str]], path) -> None:
    with _open_write(path) as fh:
        for child, parent in edges:
            fh.write(f"{_check_id('synset', child)}\t{_check_id('synset', parent)}\n")


# -- corpus counts ----------------------------------------------------------


def load_counts(path) -> dict[str, int]:
    counts: dict[str, int] = {}
    with _open_read(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise FormatError(path, lineno, f"expected synset TAB count, got {len(parts)} fields")
            synset, count_text = parts
            try:
                count = int(count_text)
            except ValueError:
                raise FormatError(path, lineno, f"count {count_text!r} is not an integer") from None
            if count < 0:
                raise FormatError(path, lineno, f"negative count {count} for {synset!r}")
            if synset in counts:
                raise FormatError(path, lineno, f"duplicate synset {synset!r}")
            counts[synset] = count
    if not counts:
        raise FormatError(path, 1, "counts file is empty")
    return counts


def write_counts(counts: Mapping[str, int], path) -> None:
    with _open_write(path) as fh:
        for synset in sorted(counts):
            fh.write(f"{_check_id('synset', synset)}\t{int(counts[synset])}\n")


# -- class map ---------------------------------------------------------------


def load_class_map(path, taxonomy: Taxonomy | None = None) -> dict[str, str]:
    """class_id -> synset_id, validated bijective (and in-taxonomy if given)."""
    mapping: dict[str, str] = {}
    seen_synsets: dict[str, int] = {}
    with _open_read(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise FormatError(
                    path, lineno, f"expected class_id TAB synset_id, got {len(parts)} fields"
                )
            class_id, synset_id = parts
            if not class_id or not synset_id:
                raise FormatError(path, lineno, "empty class_id or synset_id")
            if class_id in mapping:
                raise FormatError(path, lineno, f"duplicate class_id {class_id!r}")
            if synset_id in seen_synsets:
                raise FormatError(
                    path,
                    lineno,
                    f"synset {synset_id!r} already mapped at line {seen_synsets[synset_id]}",
                )
            if taxonomy is not None and synset_id not in taxonomy:
                raise FormatError(path, lineno, f"synset {synset_id!r} not in taxonomy")
            mapping[class_id] = synset_id
            seen_synsets[synset_id] = lineno
    if not mapping:
        raise FormatError(path, 1, "class map file is empty")
    return mapping


def write_class_map(mapping: Mapping[str, str], path) -> None:
    with _open_write(path) as fh:
        for class_id in sorted(mapping):
            fh.write(
                f"{_check_id('class_id', class_id)}\t{_check_id('synset_id', mapping[class_id])}\n"
            )


# -- class embeddings --------------------------------------------------------


def write_class_embeddings(embeddings: Sequence[ClassEmbedding], path) -> None:
    """class_id TAB synset_id TAB image_count TAB triplets, sorted by class."""
    with _open_write(path) as fh:
        for embedding in sorted(embeddings, key=lambda e: e.class_id):
            triplets = " ".join(
                f"{lid}:{idx}:{_fmt(val)}"
                for lid, idx, val in embedding.vector.iter_entries()
            )
            fh.write(
                f"{_check_id('class_id', embedding.class_id)}\t"
                f"{_check_id('synset_id', embedding.synset_id)}\t"
                f"{embedding.image_count}\t{triplets}\n"
            )


def load_class_embeddings(path, manifest: LayerManifest) -> list[ClassEmbedding]:
    out = []
    seen: set[str] = set()
    with _open_read(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise FormatError(path, lineno, f"expected 4 tab-separated fields, got {len(parts)}")
            class_id, synset_id, count_text, payload = parts
            if class_id in seen:
                raise FormatError(path, lineno, f"duplicate class_id {class_id!r}")
            seen.add(class_id)
            try:
                image_count = int(count_text)
            except ValueError:
                raise FormatError(path, lineno, f"image_count {count_text!r} is not an integer") from None
            entries: dict[str, tuple[list[int], list[float]]] = {}
            if payload:
                for token in payload.split(" "):
                    pieces = token.rsplit(":", 2)
                    if len(pieces) != 3:
                        raise FormatError(path, lineno, f"malformed triplet {token!r}")
                    layer_id, idx_text, val_text = pieces
                    if layer_id not in manifest:
                        raise FormatError(path, lineno, f"unknown layer_id {layer_id!r}")
                    try:
                        idx, val = int(idx_text), float(val_text)
                    except ValueError:
                        raise FormatError(path, lineno, f"malformed triplet {token!r}") from None
                    bucket = entries.setdefault(layer_id, ([], []))
                    bucket[0].append(idx)
                    bucket[1].append(val)
            try:
                vector = SparseActivationVector(
                    manifest,
                    {lid: (np.array(ix, dtype=np.int64), np.array(vs)) for lid, (ix, vs) in entries.items()},
                )
                out.append(ClassEmbedding(class_id, synset_id, vector, image_count))
            except ValidationError as exc:
                raise FormatError(path, lineno, str(exc)) from None
    if not out:
        raise FormatError(path, 1, "class embeddings file is empty")
    return out


# -- distance matrix CSV ------------------------------------------------------


def write_distance_matrix_csv(matrix: DistanceMatrix, path, labels: Sequence[str] | None = None) -> None:
    """Header row of labels, then one row of %.9g cells per class."""
    if labels is not None and tuple(labels) != matrix.labels:
        raise ValidationError("labels argument does not match the matrix labels")
    # mirror the upper triangle so the file is exactly symmetric
    vals = np.triu(matrix.values) + np.triu(matrix.values, 1).T
    with _open_write(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(matrix.labels)
        for i in range(matrix.size):
            writer.writerow([f"{v:.9g}" for v in vals[i]])


def load_distance_matrix_csv(path) -> DistanceMatrix:
    with _open_read(path) as fh:
        reader = csv.reader(fh)
        try:
            labels = next(reader)
        except StopIteration:
            raise FormatError(path, 1, "distance matrix CSV is empty") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(labels):
                raise FormatError(
                    path, lineno, f"expected {len(labels)} cells, got {len(row)}"
                )
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                raise FormatError(path, lineno, "non-numeric cell") from None
    if len(rows) != len(labels):
        raise FormatError(path, 1, f"expected {len(labels)} rows, got {len(rows)}")
    try:
        return DistanceMatrix(labels, rows)
    except ValidationError as exc:
        raise FormatError(path, 1, str(exc)) from None


# -- coordinates and eigenvalues ----------------------------------------------


def write_coordinates_csv(coords: EmbeddingCoordinates, path) -> None:
    if coords.dims <= 3:
        axes = ["x", "y", "z"][: coords.dims]
    else:
        axes = [f"x{i}" for i in range(coords.dims)]
    with _open_write(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["label", *axes])
        for label, row in zip(coords.labels, coords.coords):
            writer.writerow([label, *(_fmt(v) for v in row)])


def load_coordinates_csv(path) -> tuple[tuple[str, ...], np.ndarray]:
    with _open_read(path) as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(path, 1, "coordinates CSV is empty") from None
        labels = []
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise FormatError(path, lineno, f"expected {len(header)} cells, got {len(row)}")
            labels.append(row[0])
            try:
                rows.append([float(c) for c in row[1:]])
            except ValueError:
                raise FormatError(path, lineno, "non-numeric coordinate") from None
    return tuple(labels), np.array(rows)


def write_eigenvalues_csv(coords: EmbeddingCoordinates, path) -> None:
    """Full descending spectrum; the first `dims` rows back the coordinates."""
    with _open_write(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["rank", "eigenvalue", "used"])
        for i, value in enumerate(coords.eigenvalues):
            writer.writerow([i + 1, _fmt(value), "yes" if i < coords.dims else "no"])


# -- scatter SVG ---------------------------------------------------------------

SVG_SIZE = 800
SVG_MARGIN_FRACTION = 0.05
DEFAULT_SHADE = "#bbbbbb"
HIGHLIGHT_SHADES = ("#000000", "#e41a1c", "#377eb8", "#4daf4a", "#984ea3", "#ff7f00")


def write_scatter_svg(
    coords: EmbeddingCoordinates,
    highlight_sets: Mapping[str, Iterable[str]] | None = None,
    path=None,
    *,
    point_radius: float = 4.0,
) -> None:
    """One circle per class, geometry-preserving fit with a 5% margin.

    Highlight sets are drawn in fixed shades, first set black; remaining
    classes use a light default shade. Only 2-D embeddings are accepted.
    """
    if coords.dims != 2:
        raise ValidationError(f"scatter SVG requires 2-D coordinates, got {coords.dims}-D")
    if path is None:
        raise ValidationError("path is required")
    highlight_sets = dict(highlight_sets or {})
    known = set(coords.labels)
    shade_of: dict[str, str] = {}
    legend: list[tuple[str, str]] = []
    for i, (name, ids) in enumerate(highlight_sets.items()):
        shade = HIGHLIGHT_SHADES[i % len(HIGHLIGHT_SHADES)]
        legend.append((name, shade))
        for cid in ids:
            if cid not in known:
                raise ValidationError(f"highlight set {name!r}: unknown class {cid!r}")
            shade_of[cid] = shade

    xy = coords.coords
    margin = SVG_SIZE * SVG_MARGIN_FRACTION
    inner = SVG_SIZE - 2 * margin
    spans = xy.max(axis=0) - xy.min(axis=0)
    scale = inner / max(float(spans.max()), 1e-300)
    # uniform scale preserves the embedding geometry; center both axes
    offsets = margin + (inner - spans * scale) / 2.0
    mins = xy.min(axis=0)

    def to_svg(px: float, py: float) -> tuple[float, float]:
        sx = offsets[0] + (px - mins[0]) * scale
        sy = SVG_SIZE - (offsets[1] + (py - mins[1]) * scale)  # flip y upward
        return sx, sy

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {SVG_SIZE} {SVG_SIZE}" '
        f'width="{SVG_SIZE}" height="{SVG_SIZE}">',
        f'<rect width="{SVG_SIZE}" height="{SVG_SIZE}" fill="#ffffff"/>',
    ]
    for label, (px, py) in zip(coords.labels, xy):
        sx, sy = to_svg(float(px), float(py))
        fill = shade_of.get(label, DEFAULT_SHADE)
        lines.append(
            f'<circle cx="{sx:.2f}" cy="{sy:.2f}" r="{point_radius:g}" fill="{fill}">'
            f"<title>{label}</title></circle>"
        )
    for i, (name, shade) in enumerate(legend):
        ly = 20 + 18 * i
        lines.append(f'<circle cx="16" cy="{ly}" r="5" fill="{shade}"/>')
        lines.append(f'<text x="28" y="{ly + 4}" font-size="13" fill="#333333">{name}</text>')
    lines.append("</svg>")
    with _open_write(path) as fh:
        fh.write("\n".join(lines) + "\n")


# -- rho tables -----------------------------------------------------------------


def write_rho_csv(distributions: Sequence[RhoDistribution], path) -> None:
    """Long form: class_id, measure, corpus, rho."""
    with _open_write(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["class_id", "measure", "corpus", "rho"])
        for dist in distributions:
            corpus = dist.corpus if dist.corpus is not None else ""
            for cid, rho in zip(dist.class_ids, dist.rhos):
                writer.writerow([cid, dist.measure, corpus, _fmt(rho)])


def write_rho_summary_csv(distributions: Sequence[RhoDistribution], path) -> None:
    with _open_write(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["measure", "corpus", "n_classes", "mean_rho"])
        for dist in distributions:
            corpus = dist.corpus if dist.corpus is not None else ""
            writer.writerow([dist.measure, corpus, len(dist), _fmt(dist.mean)])


def write_histogram_csv(dist: RhoDistribution, path) -> None:
    """Rows bin_lo, bin_hi, count over the fixed [-1, 1] 0.05-wide bins."""
    edges, counts = dist.histogram()
    with _open_write(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["bin_lo", "bin_hi", "count"])
        for lo, hi, count in zip(edges[:-1], edges[1:], counts):
            writer.writerow([_fmt(lo), _fmt(hi), int(count)])


def write_sweep_csv(entries: Sequence[SweepEntry], path) -> None:
    with _open_write(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["groups", "n_classes", "mean_rho"])
        for entry in entries:
            writer.writerow([entry.label, entry.n_classes, _fmt(entry.mean_rho)])


# -- equation results --------------------------------------------------------------


def write_equation_csv(result: EquationResult, path) -> None:
    with _open_write(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["rank", "class_id", "similarity"])
        for rank, (cid, sim) in enumerate(result.neighbors, start=1):
            writer.writerow([rank, cid, _fmt(sim)])


def format_equation_table(result: EquationResult) -> str:
    """Plain text table for terminal output."""
    width = max([len(cid) for cid, _ in result.neighbors] + [8])
    lines = [f"query: {result.query}"]
    if result.excluded:
        lines.append(f"excluded: {', '.join(result.excluded)}")
    lines.append(f"{'rank':>4}  {'class_id':<{width}}  similarity")
    for rank, (cid, sim) in enumerate(result.neighbors, start=1):
        lines.append(f"{rank:>4}  {cid:<{width}}  {sim:.6f}")
    return "\n".join(lines)
