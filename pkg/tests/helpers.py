"""Shared test fixtures: dense mirrors of sparse vectors and random builders.

The dense mirror is the independent reference for every vector operation:
tests compute in sparse form and re-check against plain numpy arithmetic on
the flattened array.
"""

from __future__ import annotations

import numpy as np

from classvec.vectors import LayerManifest, SparseActivationVector


def densify(v: SparseActivationVector) -> np.ndarray:
    """Flatten a sparse vector onto the manifest's full coordinate axis."""
    m = v.manifest
    out = np.zeros(m.total_dim, dtype=np.float64)
    for lid, idx, val in v.iter_entries():
        out[m.offset_of(lid) + idx] = val
    return out


def sparsify(manifest: LayerManifest, dense: np.ndarray) -> SparseActivationVector:
    """Inverse of densify: slice the flat array back into layer segments."""
    entries = {}
    for spec in manifest:
        off = manifest.offset_of(spec.layer_id)
        seg = dense[off : off + spec.dim]
        nz = np.flatnonzero(seg)
        if nz.size:
            entries[spec.layer_id] = (nz, seg[nz])
    return SparseActivationVector(manifest, entries)


def small_manifest() -> LayerManifest:
    return LayerManifest(
        [
            ("a1", "low", 16),
            ("a2", "low", 8),
            ("b1", "mid", 32),
            ("b2", "mid", 4),
            ("c1", "top", 12),
        ]
    )


def random_vector(
    rng: np.random.Generator,
    manifest: LayerManifest,
    density: float = 0.3,
    allow_zero: bool = False,
) -> SparseActivationVector:
    """Draw a vector with roughly ``density`` of coordinates active."""
    while True:
        entries = {}
        for spec in manifest:
            mask = rng.random(spec.dim) < density
            nz = np.flatnonzero(mask)
            if nz.size:
                entries[spec.layer_id] = (nz, rng.random(nz.size) * 0.999 + 0.001)
        if entries or allow_zero:
            return SparseActivationVector(manifest, entries)


def floyd_warshall(weights: np.ndarray) -> np.ndarray:
    """All-pairs shortest paths by dense relaxation; inf marks no path."""
    dist = weights.astype(np.float64, copy=True)
    n = dist.shape[0]
    for k in range(n):
        np.minimum(dist, dist[:, k : k + 1] + dist[k : k + 1, :], out=dist)
    return dist


def graph_to_dense(graph) -> np.ndarray:
    """Adjacency of a NeighborGraph as a dense matrix, inf where no edge."""
    n = graph.size
    dense = np.full((n, n), np.inf)
    np.fill_diagonal(dense, 0.0)
    for i, row in enumerate(graph.adjacency):
        for j, w in row:
            dense[i, j] = w
    return dense


def random_dyadic_dmatrix(rng: np.random.Generator, n: int):
    """Symmetric distances that are exact multiples of 1/8.

    Dyadic weights make shortest-path sums exact in float64, so two correct
    all-pairs algorithms must agree bitwise.
    """
    from classvec.manifold import DistanceMatrix

    raw = rng.integers(1, 64, size=(n, n)).astype(np.float64) / 8.0
    sym = np.triu(raw, 1)
    sym = sym + sym.T
    return DistanceMatrix([f"n{i:02d}" for i in range(n)], sym)


def random_tree_edges(rng: np.random.Generator, n: int) -> list[tuple[str, str]]:
    """Random rooted tree: node i attaches below a uniformly drawn earlier node."""
    return [(f"s{i:02d}", f"s{int(rng.integers(0, i)):02d}") for i in range(1, n)]


def random_dag_edges(rng: np.random.Generator, n: int, extra: int) -> list[tuple[str, str]]:
    """Random tree plus extra child->parent links to earlier nodes."""
    edges = set(random_tree_edges(rng, n))
    added = 0
    while added < extra:
        child = int(rng.integers(2, n))
        parent = int(rng.integers(0, child))
        edge = (f"s{child:02d}", f"s{parent:02d}")
        if edge not in edges:
            edges.add(edge)
            added += 1
    return sorted(edges)


class DagOracle:
    """Brute-force reference for hierarchy queries, built per node by search."""

    def __init__(self, edges):
        self.parents = {}
        self.children = {}
        nodes = set()
        for child, parent in edges:
            nodes.add(child)
            nodes.add(parent)
            self.parents.setdefault(child, set()).add(parent)
            self.children.setdefault(parent, set()).add(child)
        self.nodes = sorted(nodes)
        self.root = next(n for n in self.nodes if n not in self.parents)
        # depth by breadth-first descent from the root, min node count
        self.depth = {self.root: 1}
        frontier = [self.root]
        while frontier:
            nxt = []
            for u in frontier:
                for c in self.children.get(u, ()):
                    if c not in self.depth:
                        self.depth[c] = self.depth[u] + 1
                        nxt.append(c)
            frontier = nxt
        self.max_depth = max(self.depth.values())

    def ancestors(self, node):
        out = {node}
        stack = [node]
        while stack:
            for p in self.parents.get(stack.pop(), ()):
                if p not in out:
                    out.add(p)
                    stack.append(p)
        return out

    def up_distances(self, node):
        dist = {node: 0}
        frontier = [node]
        while frontier:
            nxt = []
            for u in frontier:
                for p in self.parents.get(u, ()):
                    if p not in dist:
                        dist[p] = dist[u] + 1
                        nxt.append(p)
            frontier = nxt
        return dist

    def path_length(self, a, b):
        ua, ub = self.up_distances(a), self.up_distances(b)
        return min(ua[c] + ub[c] for c in set(ua) & set(ub))

    def lcs(self, a, b):
        common = self.ancestors(a) & self.ancestors(b)
        best = max(self.depth[c] for c in common)
        return min(c for c in common if self.depth[c] == best)

    def descendant_cum(self, counts):
        cum = {}
        for node in self.nodes:
            seen = {node}
            stack = [node]
            while stack:
                for c in self.children.get(stack.pop(), ()):
                    if c not in seen:
                        seen.add(c)
                        stack.append(c)
            cum[node] = sum(counts.get(s, 0) for s in seen)
        return cum
