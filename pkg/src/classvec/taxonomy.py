"""Rooted hypernym hierarchy and the six concept similarity measures.

The hierarchy is a single-rooted DAG: every non-root synset has one or more
parents and the root has none. Depth counts nodes from the root (root depth
is 1) and multi-parent nodes take the minimum over their parents. Three
measures need only the graph (path, lch, wup); three weigh concepts by
corpus information content (res, jcn, lin).
"""

from __future__ import annotations

import math
from collections import deque
from typing import Iterable, Mapping

from .errors import TaxonomyError, UnknownSynsetError, ValidationError

JCN_MIN_DISTANCE = 1e-10


class Taxonomy:
    """Immutable single-rooted acyclic hierarchy with precomputed ancestry.

    Ancestor sets include the node itself, and per-node upward distances
    record the minimal edge count to each ancestor, so shortest connecting
    paths and deepest common subsumers are dictionary lookups.
    """

    __slots__ = ("_parents", "_children", "_root", "_depth", "_anc", "_updist", "_max_depth")

    def __init__(self, edges: Iterable[tuple[str, str]]):
        parents: dict[str, set[str]] = {}
        children: dict[str, set[str]] = {}
        nodes: set[str] = set()
        for child, parent in edges:
            child, parent = str(child), str(parent)
            if child == parent:
                raise TaxonomyError(f"self-loop at {child!r}")
            nodes.add(child)
            nodes.add(parent)
            parents.setdefault(child, set()).add(parent)
            children.setdefault(parent, set()).add(child)
        if not nodes:
            raise TaxonomyError("taxonomy has no edges")

        roots = sorted(n for n in nodes if n not in parents)
        if len(roots) != 1:
            raise TaxonomyError(f"expected exactly one root, found {len(roots)}: {roots[:5]}")
        root = roots[0]

        # Kahn order over parent -> child edges; leftovers mean a cycle.
        pending = {n: len(parents.get(n, ())) for n in nodes}
        order: list[str] = []
        queue = deque([root])
        while queue:
            u = queue.popleft()
            order.append(u)
            for c in sorted(children.get(u, ())):
                pending[c] -= 1
                if pending[c] == 0:
                    queue.append(c)
        if len(order) != len(nodes):
            stuck = sorted(n for n in nodes if pending[n] > 0)
            raise TaxonomyError(f"cycle detected involving {stuck[:5]}")

        depth: dict[str, int] = {}
        anc: dict[str, frozenset[str]] = {}
        updist: dict[str, dict[str, int]] = {}
        for node in order:
            ps = parents.get(node, set())
            if not ps:
                depth[node] = 1
                anc[node] = frozenset((node,))
                updist[node] = {node: 0}
                continue
            depth[node] = 1 + min(depth[p] for p in ps)
            merged: dict[str, int] = {node: 0}
            for p in ps:
                for a, dist in updist[p].items():
                    alt = dist + 1
                    if alt < merged.get(a, alt + 1):
                        merged[a] = alt
            anc[node] = frozenset(merged)
            updist[node] = merged

        self._parents = {n: frozenset(parents.get(n, ())) for n in nodes}
        self._children = {n: frozenset(children.get(n, ())) for n in nodes}
        self._root = root
        self._depth = depth
        self._anc = anc
        self._updist = updist
        self._max_depth = max(depth.values())

    @property
    def root(self) -> str:
        return self._root

    @property
    def synsets(self) -> tuple[str, ...]:
        return tuple(sorted(self._parents))

    @property
    def max_depth(self) -> int:
        """Deepest node depth D, counted in nodes with depth(root) = 1."""
        return self._max_depth

    def __contains__(self, synset: str) -> bool:
        return synset in self._parents

    def __len__(self) -> int:
        return len(self._parents)

    def _require(self, synset: str) -> str:
        if synset not in self._parents:
            raise UnknownSynsetError(f"synset {synset!r} not in taxonomy")
        return synset

    def parents(self, synset: str) -> frozenset[str]:
        return self._parents[self._require(synset)]

    def children(self, synset: str) -> frozenset[str]:
        return self._children[self._require(synset)]

    def depth(self, synset: str) -> int:
        return self._depth[self._require(synset)]

    def ancestors(self, synset: str) -> frozenset[str]:
        """All hypernyms of the synset, itself included."""
        return self._anc[self._require(synset)]

    def up_distance(self, synset: str, ancestor: str) -> int:
        """Minimal edge count climbing from synset to one of its ancestors."""
        self._require(ancestor)
        got = self._updist[self._require(synset)].get(ancestor)
        if got is None:
            raise TaxonomyError(f"{ancestor!r} is not an ancestor of {synset!r}")
        return got

    def lcs(self, a: str, b: str) -> str:
        """Deepest common subsumer; depth ties go to the smallest synset_id."""
        common = self.ancestors(a) & self.ancestors(b)
        return min(common, key=lambda s: (-self._depth[s], s))

    def path_length(self, a: str, b: str) -> int:
        """Minimal edge count of a path joining a and b via a common ancestor."""
        ua = self._updist[self._require(a)]
        ub = self._updist[self._require(b)]
        if len(ub) < len(ua):
            ua, ub = ub, ua
        return min(d + ub[c] for c, d in ua.items() if c in ub)

    def __repr__(self) -> str:
        return f"Taxonomy(n={len(self._parents)}, max_depth={self._max_depth})"


class ICTable:
    """Information content per synset from cumulative corpus counts.

    cum(s) is the synset's own count plus every distinct descendant's count
    (each node counted once even when reachable along several paths);
    ic(s) = -ln(cum(s)/cum(root)). Rarer concepts carry more content and
    the root always has ic 0.
    """

    __slots__ = ("_cum", "_total", "_ic")

    def __init__(self, cumulative: Mapping[str, int]):
        cum = {str(k): int(v) for k, v in cumulative.items()}
        if not cum:
            raise TaxonomyError("information content table is empty")
        total = max(cum.values())
        if total <= 0:
            raise TaxonomyError("cumulative counts are all zero")
        self._cum = cum
        self._total = total
        self._ic = {
            s: (-math.log(c / total) if c > 0 else math.inf) for s, c in cum.items()
        }

    @classmethod
    def from_counts(cls, taxonomy: Taxonomy, counts: Mapping[str, int]) -> "ICTable":
        """Accumulate raw per-synset counts up every ancestor chain.

        Synsets absent from ``counts`` contribute 0; synsets unknown to the
        taxonomy are rejected rather than silently dropped.
        """
        own: dict[str, int] = {}
        for synset, count in counts.items():
            synset = str(synset)
            if synset not in taxonomy:
                raise UnknownSynsetError(f"count for unknown synset {synset!r}")
            count = int(count)
            if count < 0:
                raise ValidationError(f"negative count for synset {synset!r}")
            own[synset] = count
        cum = {s: 0 for s in taxonomy.synsets}
        for synset, count in own.items():
            for a in taxonomy.ancestors(synset):
                cum[a] += count
        return cls(cum)

    @property
    def total(self) -> int:
        return self._total

    def __contains__(self, synset: str) -> bool:
        return synset in self._cum

    def cum(self, synset: str) -> int:
        try:
            return self._cum[synset]
        except KeyError:
            raise UnknownSynsetError(f"synset {synset!r} missing from IC table") from None

    def ic(self, synset: str) -> float:
        try:
            return self._ic[synset]
        except KeyError:
            raise UnknownSynsetError(f"synset {synset!r} missing from IC table") from None

    def __repr__(self) -> str:
        return f"ICTable(n={len(self._cum)}, total={self._total})"


def path_sim(taxonomy: Taxonomy, a: str, b: str) -> float:
    """1 / (1 + shortest connecting path length in edges)."""
    return 1.0 / (1.0 + taxonomy.path_length(a, b))


def lch_sim(taxonomy: Taxonomy, a: str, b: str) -> float:
    """-ln((len + 1) / (2 * D)) with D the taxonomy's maximum node depth."""
    length = taxonomy.path_length(a, b)
    return -math.log((length + 1) / (2.0 * taxonomy.max_depth))


def wup_sim(taxonomy: Taxonomy, a: str, b: str) -> float:
    """2 * depth(lcs) / (depth(a) + depth(b)), depths counted in nodes."""
    shared = taxonomy.lcs(a, b)
    return 2.0 * taxonomy.depth(shared) / (taxonomy.depth(a) + taxonomy.depth(b))


def res_sim(taxonomy: Taxonomy, a: str, b: str, ic: ICTable) -> float:
    """Information content of the deepest common subsumer."""
    taxonomy._require(a)
    taxonomy._require(b)
    return ic.ic(taxonomy.lcs(a, b))


def jcn_sim(taxonomy: Taxonomy, a: str, b: str, ic: ICTable) -> float:
    """Inverse of the ic distance ic(a) + ic(b) - 2 * ic(lcs).

    The distance is clamped below at 1e-10, so identical concepts score
    1e10 instead of dividing by zero.
    """
    dist = ic.ic(a) + ic.ic(b) - 2.0 * res_sim(taxonomy, a, b, ic)
    return 1.0 / max(dist, JCN_MIN_DISTANCE)


def lin_sim(taxonomy: Taxonomy, a: str, b: str, ic: ICTable) -> float:
    """2 * ic(lcs) / (ic(a) + ic(b)), with 0/0 defined as 0."""
    denom = ic.ic(a) + ic.ic(b)
    num = 2.0 * res_sim(taxonomy, a, b, ic)
    if num == 0.0:
        return 0.0
    if math.isinf(denom):
        return 0.0
    return num / denom


SIMILARITY_MEASURES: tuple[str, ...] = ("path", "lch", "wup", "res", "jcn", "lin")

_GRAPH_MEASURES = {"path": path_sim, "lch": lch_sim, "wup": wup_sim}
_IC_MEASURES = {"res": res_sim, "jcn": jcn_sim, "lin": lin_sim}


def similarity(
    taxonomy: Taxonomy,
    measure: str,
    a: str,
    b: str,
    ic: ICTable | None = None,
) -> float:
    """Dispatch one of the six measures by name; ic ones require an ICTable."""
    if measure in _GRAPH_MEASURES:
        return _GRAPH_MEASURES[measure](taxonomy, a, b)
    if measure in _IC_MEASURES:
        if ic is None:
            raise ValidationError(f"measure {measure!r} needs an information content table")
        return _IC_MEASURES[measure](taxonomy, a, b, ic)
    raise ValidationError(f"unknown measure {measure!r}; choose from {SIMILARITY_MEASURES}")
