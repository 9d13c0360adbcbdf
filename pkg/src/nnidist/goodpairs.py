"""Matching edge pairs across two trees and splitting the instance on them.

An internal edge of one tree and one of the other form a good pair when they
have the same weight and cutting them induces the same partition of taxa and
of the remaining internal weights.  Components obtained by cutting both
trees at all good pairs can then be solved independently.

Detection reduces everything to one question about leaf contents: each tree
is augmented by subdividing every internal edge and hanging a pseudo-leaf
labeled with the edge weight's rank off the new node.  Two subdivision nodes
then cut identical taxa and weight partitions exactly when the leaf-label
multisets below them agree, which a partition labeling makes directly
comparable: nodes across both trees receive equal integer labels if and only
if their descendant label multisets are equal.

The labeling is built label class by label class (a node's class count
suffices for a single class) and merged pairwise: every node of a contracted
union tree gets a two-component fingerprint (the largest label of each half
found below it, zero when that half is absent), fingerprints are radix
sorted, and each distinct fingerprint becomes a fresh dense label.  Labels
stay monotone along root paths, so "largest below" is the label of the
topmost labeled descendant and fingerprints capture exact contents.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

from nnidist.phylo import Phylogeny, TreeError, finiteness_check
from nnidist.runtime import ParRuntime, ParTask, par_prefix_sums


@dataclass
class AugmentedTree:
    root: int
    parent: dict[int, int | None]
    children: dict[int, list[int]]
    label: dict[int, str]              # leaf node -> label (taxon or weight class)
    subdivision_edge: dict[int, int]   # subdivision node -> source internal edge
    weight_leaf_edge: dict[int, int]   # weight leaf -> source internal edge
    pre: dict[int, int] = field(default_factory=dict)
    post: dict[int, int] = field(default_factory=dict)
    depth: dict[int, int] = field(default_factory=dict)
    euler: list[int] = field(default_factory=list)
    first: dict[int, int] = field(default_factory=dict)
    _table: list[list[int]] = field(default_factory=list)

    def _index(self) -> None:
        counter = 0
        post_counter = 0
        stack: list[tuple[int, int]] = [(self.root, 0)]
        self.depth[self.root] = 0
        while stack:
            node, child_pos = stack.pop()
            if child_pos == 0:
                self.pre[node] = counter
                counter += 1
                self.first[node] = len(self.euler)
            self.euler.append(node)
            kids = self.children.get(node, [])
            if child_pos < len(kids):
                stack.append((node, child_pos + 1))
                child = kids[child_pos]
                self.depth[child] = self.depth[node] + 1
                stack.append((child, 0))
            else:
                self.post[node] = post_counter
                post_counter += 1
        # sparse table of minimum-depth positions over the tour
        idx = list(range(len(self.euler)))
        self._table = [idx]
        span = 1
        while 2 * span <= len(self.euler):
            prev = self._table[-1]
            row = []
            for i in range(len(self.euler) - 2 * span + 1):
                a, b = prev[i], prev[i + span]
                row.append(a if self.depth[self.euler[a]] <= self.depth[self.euler[b]] else b)
            self._table.append(row)
            span *= 2

    def lca(self, u: int, v: int) -> int:
        lo, hi = sorted((self.first[u], self.first[v]))
        width = hi - lo + 1
        k = width.bit_length() - 1
        row = self._table[k]
        a, b = row[lo], row[hi - (1 << k) + 1]
        best = a if self.depth[self.euler[a]] <= self.depth[self.euler[b]] else b
        return self.euler[best]

    def is_leaf(self, v: int) -> bool:
        return v in self.label


def augment_and_root(tree: Phylogeny) -> AugmentedTree:
    anchor = min(tree.taxa())
    anchor_node = tree.leaf_node(anchor)
    root = tree.other_end(tree.leaf_edge_of(anchor), anchor_node)

    ranks = {w: i for i, w in enumerate(sorted({tree.weight(e) for e in tree.internal_edges()}))}
    base = tree.max_node_id() + 1
    sub_node = {}
    wt_node = {}
    for i, e in enumerate(tree.internal_edges()):
        sub_node[e] = base + 2 * i
        wt_node[e] = base + 2 * i + 1

    parent: dict[int, int | None] = {root: None}
    children: dict[int, list[int]] = {}
    label: dict[int, str] = {}
    stack = [(root, None)]
    while stack:
        node, up_edge = stack.pop()
        kids = []
        for e in sorted(tree.adjacent_edges(node)):
            if e == up_edge:
                continue
            other = tree.other_end(e, node)
            if tree.is_edge_leaf(e):
                kids.append(other)
                parent[other] = node
                label[other] = tree.leaf_label(other)
            else:
                s, w = sub_node[e], wt_node[e]
                kids.append(s)
                parent[s] = node
                children[s] = [other, w]
                parent[other] = s
                parent[w] = s
                label[w] = f":w:{ranks[tree.weight(e)]}"
                stack.append((other, e))
        children[node] = kids
    out = AugmentedTree(
        root,
        parent,
        children,
        label,
        {s: e for e, s in sub_node.items()},
        {w: e for e, w in wt_node.items()},
    )
    out._index()
    return out


@dataclass
class ContractedSubtree:
    source: AugmentedTree
    labels: frozenset[str]
    nodes: list[int]              # in source preorder
    parent: dict[int, int | None]
    children: dict[int, list[int]]
    leaves: list[int]
    root: int


def induced_subtree(aug: AugmentedTree, labels: set[str]) -> ContractedSubtree:
    """The subtree spanned by leaves with the given labels, chains contracted."""
    if not labels:
        raise TreeError("cannot induce a subtree on an empty label set")
    sel = sorted(
        (v for v, lab in aug.label.items() if lab in labels),
        key=lambda v: aug.pre[v],
    )
    if not sel:
        raise TreeError("no leaves carry the requested labels")
    picked = set(sel)
    for a, b in zip(sel, sel[1:]):
        picked.add(aug.lca(a, b))
    nodes = sorted(picked, key=lambda v: aug.pre[v])

    parent: dict[int, int | None] = {}
    stack: list[int] = []
    for x in nodes:
        while stack and not (
            aug.pre[stack[-1]] <= aug.pre[x] and aug.post[stack[-1]] >= aug.post[x]
        ):
            stack.pop()
        parent[x] = stack[-1] if stack else None
        stack.append(x)
    children: dict[int, list[int]] = {v: [] for v in nodes}
    for v in nodes:
        if parent[v] is not None:
            children[parent[v]].append(v)
    return ContractedSubtree(aug, frozenset(labels), nodes, parent, children, sel, nodes[0])


@dataclass
class PartitionLabeling:
    rho: dict[int, int]     # first tree's contraction nodes -> label
    rho_p: dict[int, int]   # second tree's
    pairing_rounds: int = 0


def single_label_partition(ra: ContractedSubtree, rpa: ContractedSubtree) -> PartitionLabeling:
    """Descendant-leaf counts label a single-class contraction pair."""

    def counts(sub: ContractedSubtree) -> dict[int, int]:
        out: dict[int, int] = {}
        for v in reversed(sub.nodes):
            kids = sub.children[v]
            out[v] = 1 if not kids else sum(out[c] for c in kids)
        return out

    return PartitionLabeling(counts(ra), counts(rpa))


def _subtree_max(
    sub: ContractedSubtree, init: dict[int, int], rt: ParRuntime, phase: str
) -> dict[int, int]:
    """Max of initial values over each contraction subtree, by pointer jumping.

    Every node repeatedly pushes its running value to its jump target and the
    pointers double, so log-many two-phase rounds cover the whole subtree.
    """
    val = {v: init.get(v, 0) for v in sub.nodes}
    ptr = dict(sub.parent)
    while any(p is not None for p in ptr.values()):
        movers = [v for v in sub.nodes if ptr[v] is not None]
        tasks = [
            ParTask(
                v,
                frozenset({("push", v)}),
                lambda v=v, t=ptr[v], x=val[v]: {("push", v): (t, x)},
            )
            for v in movers
        ]
        pushed = rt.round(phase, tasks)
        received: dict[int, int] = {}
        for key, (target, x) in pushed.items():
            received[target] = max(received.get(target, 0), x)
        tasks = [
            ParTask(
                v,
                frozenset({("val", v)}),
                lambda v=v, x=max(val[v], received[v]): {("val", v): x},
            )
            for v in received
        ]
        for key, x in rt.round(phase, tasks).items():
            val[key[1]] = x
        ptr = {v: (ptr[p] if p is not None else None) for v, p in ((v, ptr[v]) for v in sub.nodes)}
    return val


def _radix_rank(items: list[tuple[int, int]], rt: ParRuntime, phase: str) -> list[int]:
    """Dense ranks (from 1) of two-component fingerprints, radix style."""
    order = list(range(len(items)))
    for component in (1, 0):
        keys = sorted({items[i][component] for i in order})
        pos = {k: p for p, k in enumerate(keys)}
        counts = [0] * len(keys)
        for i in order:
            counts[pos[items[i][component]]] += 1
        offsets = [a - b for a, b in zip(par_prefix_sums(rt, phase, counts), counts)]
        placed = [0] * len(order)
        slots = list(offsets)
        for i in order:
            b = pos[items[i][component]]
            placed[slots[b]] = i
            slots[b] += 1
        order = placed
    flags = [0] * len(items)
    tasks = []
    for r, i in enumerate(order):
        different = r == 0 or items[i] != items[order[r - 1]]
        tasks.append(
            ParTask(r, frozenset({("flag", r)}), lambda r=r, d=int(different): {("flag", r): d})
        )
    flagged = rt.round(phase, tasks)
    running = par_prefix_sums(rt, phase, [flagged[("flag", r)] for r in range(len(order))])
    rank = [0] * len(items)
    for r, i in enumerate(order):
        rank[i] = running[r]
    return rank


def relabel_merge(
    rab: ContractedSubtree,
    rpab: ContractedSubtree,
    rho_a: PartitionLabeling,
    rho_b: PartitionLabeling,
    rt: ParRuntime | None = None,
    phase: str = "gep",
) -> PartitionLabeling:
    """Combine two half labelings over the union contraction pair."""
    rt = rt or ParRuntime()
    fingerprints: list[tuple[int, int]] = []
    owners: list[tuple[int, int]] = []
    for side, (sub, half_a, half_b) in enumerate(
        ((rab, rho_a.rho, rho_b.rho), (rpab, rho_a.rho_p, rho_b.rho_p))
    ):
        max_a = _subtree_max(sub, half_a, rt, phase)
        max_b = _subtree_max(sub, half_b, rt, phase)
        for v in sub.nodes:
            fingerprints.append((max_a[v], max_b[v]))
            owners.append((side, v))
    ranks = _radix_rank(fingerprints, rt, phase)
    rho: dict[int, int] = {}
    rho_p: dict[int, int] = {}
    for (side, v), r in zip(owners, ranks):
        (rho if side == 0 else rho_p)[v] = r
    return PartitionLabeling(rho, rho_p)


def partition_labeling(
    aug1: AugmentedTree, aug2: AugmentedTree, rt: ParRuntime | None = None
) -> PartitionLabeling:
    """Joint labeling of both trees' nodes by descendant label multisets."""
    rt = rt or ParRuntime()
    if Counter(aug1.label.values()) != Counter(aug2.label.values()):
        raise TreeError("leaf label multisets differ between the trees")

    items = []
    for a in sorted(set(aug1.label.values())):
        ra = induced_subtree(aug1, {a})
        rpa = induced_subtree(aug2, {a})
        items.append((frozenset({a}), single_label_partition(ra, rpa)))

    rounds = 0
    while len(items) > 1:
        rounds += 1
        tasks = [
            ParTask(
                i,
                frozenset({("pairing", rounds, i)}),
                lambda i=i, key=tuple(sorted(items[2 * i][0] | items[2 * i + 1][0])): {
                    ("pairing", rounds, i): key
                },
            )
            for i in range(len(items) // 2)
        ]
        rt.round("gep.pairing", tasks)
        merged = []
        for i in range(0, len(items) - 1, 2):
            (set_a, lab_a), (set_b, lab_b) = items[i], items[i + 1]
            union = set_a | set_b
            rab = induced_subtree(aug1, set(union))
            rpab = induced_subtree(aug2, set(union))
            merged.append((union, relabel_merge(rab, rpab, lab_a, lab_b, rt)))
        if len(items) % 2:
            merged.append(items[-1])
        items = merged

    final = items[0][1]
    final.pairing_rounds = rounds
    return final


@dataclass
class GoodEdgePairSet:
    pairs: list[tuple[int, int]]

    def __len__(self) -> int:
        return len(self.pairs)


def good_pair_oracle(t1: Phylogeny, t2: Phylogeny) -> list[tuple[int, int]]:
    """Quadratic reference: test every edge pair against the definition."""
    sp1, sp2 = t1.edge_splits(), t2.edge_splits()
    wp1, wp2 = t1.edge_weight_partitions(), t2.edge_weight_partitions()
    out = []
    for e1 in t1.internal_edges():
        for e2 in t2.internal_edges():
            if (
                t1.weight(e1) == t2.weight(e2)
                and sp1[e1] == sp2[e2]
                and wp1[e1] == wp2[e2]
            ):
                out.append((e1, e2))
    return out


def find_good_edge_pairs(
    t1: Phylogeny, t2: Phylogeny, rt: ParRuntime | None = None
) -> GoodEdgePairSet:
    ok, reasons = finiteness_check(t1, t2)
    if not ok:
        raise TreeError("instance is not finite: " + "; ".join(reasons))
    if not t1.internal_edges():
        return GoodEdgePairSet([])
    aug1 = augment_and_root(t1)
    aug2 = augment_and_root(t2)
    labeling = partition_labeling(aug1, aug2, rt)

    # the label multiset below a subdivision node covers the taxa and weight
    # partitions but not which side of it holds the edge's own weight, so the
    # weight itself joins the matching key
    groups1: dict[tuple[int, Fraction], list[int]] = {}
    groups2: dict[tuple[int, Fraction], list[int]] = {}
    for s, e in aug1.subdivision_edge.items():
        groups1.setdefault((labeling.rho[s], t1.weight(e)), []).append(e)
    for s, e in aug2.subdivision_edge.items():
        groups2.setdefault((labeling.rho_p[s], t2.weight(e)), []).append(e)

    pairs: list[tuple[int, int]] = []
    for key in sorted(groups1):
        if key in groups2:
            pairs.extend(zip(sorted(groups1[key]), sorted(groups2[key])))

    sp1, sp2 = t1.edge_splits(), t2.edge_splits()
    wp1, wp2 = t1.edge_weight_partitions(), t2.edge_weight_partitions()
    for e1, e2 in pairs:
        if (
            t1.weight(e1) != t2.weight(e2)
            or sp1[e1] != sp2[e2]
            or wp1[e1] != wp2[e2]
        ):
            raise TreeError("partition labels matched an edge pair that is not good")
    return GoodEdgePairSet(sorted(pairs))


def _cut_components(tree: Phylogeny, cuts: dict[int, int]) -> list[Phylogeny]:
    """Split at the cut edges; each cut becomes a pseudo-leaf in both parts."""
    cut_ids = set(cuts)
    comp_of: dict[int, int] = {}
    for v in tree.nodes():
        if v in comp_of:
            continue
        comp = len(set(comp_of.values()))
        queue = [v]
        comp_of[v] = comp
        while queue:
            u = queue.pop()
            for e in tree.adjacent_edges(u):
                if e in cut_ids:
                    continue
                w = tree.other_end(e, u)
                if w not in comp_of:
                    comp_of[w] = comp
                    queue.append(w)

    base = tree.max_node_id() + 1
    built: list[Phylogeny] = []
    for comp in sorted(set(comp_of.values())):
        nodes = {v for v, c in comp_of.items() if c == comp}
        edges: dict[int, tuple[int, int]] = {}
        weights: dict[int, Fraction] = {}
        labels: dict[int, str] = {}
        for e in tree.edge_ids():
            u, v = tree.endpoints(e)
            if e in cut_ids:
                inside = u if u in nodes else (v if v in nodes else None)
                if inside is None:
                    continue
                k = cuts[e]
                pseudo = base + k
                edges[e] = (inside, pseudo)
                weights[e] = tree.weight(e)
                labels[pseudo] = f":cut:{k}:"
            elif u in nodes and v in nodes:
                edges[e] = (u, v)
                weights[e] = tree.weight(e)
        for v in nodes:
            if tree.is_leaf(v):
                labels[v] = tree.leaf_label(v)
        built.append(Phylogeny(edges, weights, labels))
    return built


def decompose(
    t1: Phylogeny, t2: Phylogeny, pair_set: GoodEdgePairSet
) -> list[tuple[Phylogeny, Phylogeny]]:
    """Cut both trees at all good pairs and match the components by taxa."""
    if not pair_set.pairs:
        return [(t1, t2)]
    cuts1 = {e1: k for k, (e1, _) in enumerate(pair_set.pairs)}
    cuts2 = {e2: k for k, (_, e2) in enumerate(pair_set.pairs)}
    parts1 = _cut_components(t1, cuts1)
    parts2 = _cut_components(t2, cuts2)
    by_taxa = {frozenset(p.taxa()): p for p in parts2}
    out = []
    for part in sorted(parts1, key=lambda p: min(p.taxa())):
        match = by_taxa.pop(frozenset(part.taxa()), None)
        if match is None:
            raise TreeError("decomposition components do not match between trees")
        ok, reasons = finiteness_check(part, match)
        if not ok:
            raise TreeError("component pair is not finite: " + "; ".join(reasons))
        out.append((part, match))
    if by_taxa:
        raise TreeError("decomposition left unmatched components")
    return out
