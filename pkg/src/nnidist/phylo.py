"""Core data structure for leaf-labeled, edge-weighted phylogenies.

A phylogeny here is an unrooted tree whose internal nodes have degree exactly
three, whose leaves carry unique taxon labels, and whose edges carry positive
rational weights.  Storage is deliberately plain: integer node and edge ids,
dict adjacency, and a handful of derived views (splits, weight multisets,
node classes) that the rest of the package builds on.

Weights are `fractions.Fraction` throughout so that costs compose exactly.
"""

from __future__ import annotations

import enum
from collections import Counter
from fractions import Fraction
from typing import Mapping, NamedTuple


class TreeError(ValueError):
    """Raised when a structure fails phylogeny validation."""


class NodeClass(enum.Enum):
    """Classification of internal nodes by their number of leaf neighbors."""

    ENDNODE = "endnode"    # two or more leaf neighbors
    PATHNODE = "pathnode"  # exactly one leaf neighbor
    JUNCTION = "junction"  # no leaf neighbor


class WeightMultiset(NamedTuple):
    """Sorted internal-edge weights and their sum."""

    weights: tuple[Fraction, ...]
    total: Fraction


class Phylogeny:
    """Unrooted binary phylogeny with positive rational edge weights.

    Construction validates the full shape contract (connectivity, degree-3
    internal nodes, label bijection, weight positivity, at least 3 taxa) and
    raises :class:`TreeError` listing every violation found.
    """

    __slots__ = ("_ends", "_wt", "_adj", "_leaf_label", "_label_leaf")

    def __init__(
        self,
        edges: Mapping[int, tuple[int, int]],
        weights: Mapping[int, Fraction],
        leaf_labels: Mapping[int, str],
    ) -> None:
        self._ends: dict[int, tuple[int, int]] = {
            int(e): (int(u), int(v)) for e, (u, v) in edges.items()
        }
        self._wt: dict[int, Fraction] = {int(e): Fraction(w) for e, w in weights.items()}
        self._adj: dict[int, list[int]] = {}
        for e, (u, v) in self._ends.items():
            self._adj.setdefault(u, []).append(e)
            self._adj.setdefault(v, []).append(e)
        self._leaf_label: dict[int, str] = {int(v): str(s) for v, s in leaf_labels.items()}
        self._label_leaf: dict[str, int] = {s: v for v, s in self._leaf_label.items()}
        problems = self.validate()
        if problems:
            raise TreeError("; ".join(problems))

    # ------------------------------------------------------------------
    # validation

    def validate(self) -> list[str]:
        """Return a list of violation messages, empty when the tree is valid."""
        problems: list[str] = []
        if set(self._wt) != set(self._ends):
            problems.append("weight keys do not match edge keys")
        for e, w in self._wt.items():
            if w <= 0:
                problems.append(f"edge {e} has nonpositive weight {w}")
        for e, (u, v) in self._ends.items():
            if u == v:
                problems.append(f"edge {e} is a self-loop at node {u}")
        nodes = set(self._adj)
        if not nodes:
            problems.append("tree has no nodes")
            return problems
        if len(self._ends) != len(nodes) - 1:
            problems.append(
                f"{len(self._ends)} edges for {len(nodes)} nodes, not a tree"
            )
        # connectivity
        seen = {next(iter(nodes))}
        stack = list(seen)
        while stack:
            x = stack.pop()
            for e in self._adj[x]:
                y = self.other_end(e, x)
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        if seen != nodes:
            problems.append("tree is not connected")
        # degrees and labels
        if len(self._label_leaf) != len(self._leaf_label):
            problems.append("duplicate taxon labels")
        for s in self._label_leaf:
            if not s:
                problems.append("empty taxon label")
        n_leaves = 0
        for x in nodes:
            d = len(self._adj[x])
            if d == 1:
                n_leaves += 1
                if x not in self._leaf_label:
                    problems.append(f"leaf node {x} has no taxon label")
            else:
                if x in self._leaf_label:
                    problems.append(f"internal node {x} carries a taxon label")
                if d != 3:
                    problems.append(f"internal node {x} has degree {d}, expected 3")
        for x in self._leaf_label:
            if x not in nodes:
                problems.append(f"labeled node {x} does not exist")
        if n_leaves < 3:
            problems.append(f"only {n_leaves} leaves, need at least 3")
        return problems

    # ------------------------------------------------------------------
    # read access

    def nodes(self) -> list[int]:
        return sorted(self._adj)

    def edge_ids(self) -> list[int]:
        return sorted(self._ends)

    def endpoints(self, e: int) -> tuple[int, int]:
        return self._ends[e]

    def weight(self, e: int) -> Fraction:
        return self._wt[e]

    def other_end(self, e: int, node: int) -> int:
        u, v = self._ends[e]
        if node == u:
            return v
        if node == v:
            return u
        raise KeyError(f"node {node} is not an endpoint of edge {e}")

    def adjacent_edges(self, node: int) -> tuple[int, ...]:
        return tuple(self._adj[node])

    def degree(self, node: int) -> int:
        return len(self._adj[node])

    def is_leaf(self, node: int) -> bool:
        return len(self._adj[node]) == 1

    def leaf_label(self, node: int) -> str:
        return self._leaf_label[node]

    def leaf_node(self, label: str) -> int:
        return self._label_leaf[label]

    def taxa(self) -> tuple[str, ...]:
        return tuple(sorted(self._label_leaf))

    @property
    def n_taxa(self) -> int:
        return len(self._leaf_label)

    def leaf_edges(self) -> list[int]:
        return [e for e in self.edge_ids() if self.is_edge_leaf(e)]

    def internal_edges(self) -> list[int]:
        return [e for e in self.edge_ids() if not self.is_edge_leaf(e)]

    def is_edge_leaf(self, e: int) -> bool:
        u, v = self._ends[e]
        return self.is_leaf(u) or self.is_leaf(v)

    def leaf_edge_of(self, label: str) -> int:
        """The unique edge incident to the leaf carrying ``label``."""
        return self._adj[self._label_leaf[label]][0]

    def leaf_weight_map(self) -> dict[str, Fraction]:
        return {s: self._wt[self._adj[v][0]] for s, v in self._label_leaf.items()}

    def internal_weight_multiset(self) -> tuple[Fraction, ...]:
        return tuple(sorted(self._wt[e] for e in self.internal_edges()))

    def weight_multiset(self) -> "WeightMultiset":
        weights = self.internal_weight_multiset()
        return WeightMultiset(weights, sum(weights, Fraction(0)))

    def root_handle(self) -> int:
        """Internal node adjacent to the lexicographically smallest taxon."""
        leaf = self._label_leaf[min(self._label_leaf)]
        return self.other_end(self._adj[leaf][0], leaf)

    def max_node_id(self) -> int:
        return max(self._adj)

    def max_edge_id(self) -> int:
        return max(self._ends)

    # ------------------------------------------------------------------
    # derived views

    def classify_nodes(self) -> dict[int, NodeClass]:
        """Node class for every internal node (leaves are not classified)."""
        out: dict[int, NodeClass] = {}
        for x in self.nodes():
            if self.is_leaf(x):
                continue
            k = sum(1 for e in self._adj[x] if self.is_leaf(self.other_end(e, x)))
            if k >= 2:
                out[x] = NodeClass.ENDNODE
            elif k == 1:
                out[x] = NodeClass.PATHNODE
            else:
                out[x] = NodeClass.JUNCTION
        return out

    def rooted_parents(self, root: int) -> tuple[list[int], dict[int, int | None]]:
        """BFS orientation away from ``root``.

        Returns (order, parent_edge) where order lists nodes root-first and
        parent_edge maps each node to the edge toward the root (None at root).
        """
        parent_edge: dict[int, int | None] = {root: None}
        order: list[int] = [root]
        head = 0
        while head < len(order):
            x = order[head]
            head += 1
            for e in self._adj[x]:
                y = self.other_end(e, x)
                if y not in parent_edge:
                    parent_edge[y] = e
                    order.append(y)
        return order, parent_edge

    def _below_taxa(self) -> tuple[dict[int, frozenset[str]], dict[int, int | None]]:
        """Taxa below each edge when rooted at the smallest taxon's leaf."""
        root = self._label_leaf[min(self._label_leaf)]
        order, parent_edge = self.rooted_parents(root)
        below: dict[int, set[str]] = {}
        for x in reversed(order):
            e = parent_edge[x]
            if e is None:
                continue
            acc: set[str] = set()
            if self.is_leaf(x):
                acc.add(self._leaf_label[x])
            for f in self._adj[x]:
                if f != e:
                    acc |= below[f]
            below[e] = acc
        return {e: frozenset(s) for e, s in below.items()}, parent_edge

    def edge_splits(self) -> dict[int, frozenset[str]]:
        """For each internal edge, the taxa on the side away from the smallest taxon."""
        below, _ = self._below_taxa()
        return {e: below[e] for e in self.internal_edges()}

    def splits(self) -> dict[frozenset[str], Fraction]:
        """Weighted splits: away-side taxon set of each internal edge -> weight."""
        return {side: self._wt[e] for e, side in self.edge_splits().items()}

    def edge_weight_partitions(self) -> dict[int, tuple[tuple[Fraction, ...], tuple[Fraction, ...]]]:
        """Per internal edge: (away, near) multisets of the other internal weights.

        The edge's own weight is excluded from both sides, so the two tuples
        always partition the remaining internal weight multiset.
        """
        internal = self.internal_edges()
        total = Counter(self._wt[e] for e in internal)
        # weights of internal edges strictly below each edge
        root = self._label_leaf[min(self._label_leaf)]
        order, parent_edge = self.rooted_parents(root)
        below_w: dict[int, Counter] = {}
        internal_set = set(internal)
        for x in reversed(order):
            e = parent_edge[x]
            if e is None:
                continue
            acc: Counter = Counter()
            for f in self._adj[x]:
                if f != e:
                    acc += below_w[f]
                    if f in internal_set:
                        acc[self._wt[f]] += 1
            below_w[e] = acc
        out = {}
        for e in internal:
            away = below_w[e]
            near = total - away
            near[self._wt[e]] -= 1
            out[e] = (
                tuple(sorted(away.elements())),
                tuple(sorted((+near).elements())),
            )
        return out

    # ------------------------------------------------------------------
    # comparison and copying

    def canonical_equal(self, other: "Phylogeny") -> bool:
        """Same taxa, same per-taxon leaf weights, same weighted splits."""
        if self.taxa() != other.taxa():
            return False
        if self.leaf_weight_map() != other.leaf_weight_map():
            return False
        return self.splits() == other.splits()

    def copy(self) -> "Phylogeny":
        return Phylogeny(dict(self._ends), dict(self._wt), dict(self._leaf_label))

    def __repr__(self) -> str:
        return f"Phylogeny(n_taxa={self.n_taxa}, edges={len(self._ends)})"

    # ------------------------------------------------------------------
    # engine-only mutation

    def _reattach(self, e: int, old: int, new: int) -> None:
        """Move one endpoint of ``e`` from ``old`` to ``new``. No validation."""
        u, v = self._ends[e]
        if u == old:
            self._ends[e] = (new, v)
        elif v == old:
            self._ends[e] = (u, new)
        else:
            raise KeyError(f"node {old} is not an endpoint of edge {e}")
        self._adj[old].remove(e)
        self._adj[new].append(e)


def finiteness_check(a: Phylogeny, b: Phylogeny) -> tuple[bool, list[str]]:
    """Decide whether any NNI sequence can transform ``a`` into ``b``.

    The rearrangement moves subtrees but never changes which weight sits on
    which kind of edge, so a transformation exists only when per-taxon
    leaf-edge weights and the internal weight multisets both agree.  Returns
    (feasible, reasons) with one message per failed requirement.

    A taxon-set mismatch is a usage error, not an infinite distance, and
    raises TreeError.
    """
    if a.taxa() != b.taxa():
        only_a = set(a.taxa()) - set(b.taxa())
        only_b = set(b.taxa()) - set(a.taxa())
        raise TreeError(
            f"taxon sets differ (only first: {sorted(only_a)}, only second: {sorted(only_b)})"
        )
    reasons: list[str] = []
    wa, wb = a.leaf_weight_map(), b.leaf_weight_map()
    bad = sorted(s for s in wa if wa[s] != wb[s])
    if bad:
        reasons.append(f"leaf edge weights differ at taxa {bad}")
    if a.internal_weight_multiset() != b.internal_weight_multiset():
        reasons.append("internal edge weight multisets differ")
    return not reasons, reasons
