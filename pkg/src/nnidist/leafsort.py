"""Permuting the leaves of one tree to match another with the same shape.

Both inputs carry the same internal structure (topology plus internal edge
weights in matching positions) and the same taxa; only the assignment of
taxa to leaf positions differs.  Leaf edge weights travel with their taxa.

Two leaves are exchanged by walking one of them along the tree path to the
other: each step swaps the walking leaf with the subtree hanging off the
next path node, so the forward pass leaves a trail of displaced subtrees
one step behind their homes.  The evicted leaf then walks the same path
backwards, swapping each displaced subtree back as it goes, and settles in
the walker's original spot.  The net effect is an exact transposition of
the two leaves, 2k-1 moves for a path of k edges, touching each path edge
at most twice.

Which leaf goes where is decided by a recursive matching of the two trees
that maximizes the number of taxa already in place: structurally
interchangeable sibling subtrees (equal sizes and internal weights) may be
matched crosswise, which costs nothing because exchanging them yields the
same unrooted tree.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations

from nnidist.nni import NniOp, apply_nni
from nnidist.phylo import Phylogeny, TreeError
from nnidist.runtime import ParRuntime, ParTask

Slot = tuple[int, ...]


@dataclass
class SlotView:
    """A deterministic rooted reading of a tree for position bookkeeping."""

    tree: Phylogeny
    root: int
    children: dict[int, list[int]]
    parent: dict[int, int | None]
    node_slot: dict[int, Slot]
    taxon_slot: dict[str, Slot]
    sig: dict[int, tuple]


def build_slot_view(tree: Phylogeny, root: int | None = None) -> SlotView:
    root = tree.root_handle() if root is None else root
    order, parent_edge = tree.rooted_parents(root)
    parent = {
        v: (tree.other_end(e, v) if e is not None else None)
        for v, e in parent_edge.items()
    }

    # child ordering must not depend on which taxon sits where, so leaf
    # children contribute only a terminal marker and no weight to the key
    sig: dict[int, tuple] = {}
    size: dict[int, int] = {}
    kids: dict[int, list[int]] = {v: [] for v in order}
    for v in order:
        if parent[v] is not None:
            kids[parent[v]].append(v)
    for v in reversed(order):
        if tree.is_leaf(v):
            sig[v] = (0,)
            size[v] = 1
            continue
        ranked = sorted(
            kids[v],
            key=lambda c: (
                -size[c],
                (0,) if tree.is_leaf(c) else (1, tree.weight(parent_edge[c])),
                sig[c],
                min(_taxa_below(tree, c, parent[c])),
            ),
        )
        kids[v] = ranked
        size[v] = sum(size[c] for c in ranked)
        parts: list = [1]
        for c in ranked:
            parts.append(Fraction(0) if tree.is_leaf(c) else tree.weight(parent_edge[c]))
            parts.append(sig[c])
        sig[v] = tuple(parts)

    node_slot: dict[int, Slot] = {root: ()}
    for v in order:
        for i, c in enumerate(kids[v]):
            node_slot[c] = node_slot[v] + (i,)
    taxon_slot = {
        tree.leaf_label(v): node_slot[v] for v in order if tree.is_leaf(v)
    }
    return SlotView(tree, root, kids, parent, node_slot, taxon_slot, sig)


def _taxa_below(tree: Phylogeny, node: int, parent: int) -> list[str]:
    out = []
    stack = [(node, parent)]
    while stack:
        v, up = stack.pop()
        if tree.is_leaf(v):
            out.append(tree.leaf_label(v))
            continue
        for e in tree.adjacent_edges(v):
            w = tree.other_end(e, v)
            if w != up:
                stack.append((w, v))
    return out


def _child_sig(view: SlotView, node: int) -> tuple:
    edge_wt = (
        Fraction(0)
        if view.tree.is_leaf(node)
        else view.tree.weight(
            next(
                e
                for e in view.tree.adjacent_edges(node)
                if view.tree.other_end(e, node) == view.parent[node]
            )
        )
    )
    return (edge_wt, view.sig[node])


def leaf_permutation(s1: SlotView | Phylogeny, s2: SlotView | Phylogeny) -> dict[str, Slot]:
    """Where each taxon must sit in ``s1``'s coordinates to realize ``s2``.

    Interchangeable sibling subtrees are matched to keep as many taxa in
    place as possible.  Returns taxon -> target slot.
    """
    v1 = s1 if isinstance(s1, SlotView) else build_slot_view(s1)
    v2 = s2 if isinstance(s2, SlotView) else build_slot_view(s2)
    if v1.sig[v1.root] != v2.sig[v2.root]:
        raise TreeError("trees do not share an internal structure")

    memo: dict[tuple[int, int], tuple[int, tuple]] = {}

    def agree(u1: int, u2: int) -> int:
        if v1.tree.is_leaf(u1):
            return 1 if v1.tree.leaf_label(u1) == v2.tree.leaf_label(u2) else 0
        key = (u1, u2)
        if key in memo:
            return memo[key][0]
        c1, c2 = v1.children[u1], v2.children[u2]
        best, best_perm = -1, None
        for perm in permutations(range(len(c2))):
            if any(
                _child_sig(v1, c1[i]) != _child_sig(v2, c2[p])
                for i, p in enumerate(perm)
            ):
                continue
            total = sum(agree(c1[i], c2[p]) for i, p in enumerate(perm))
            if total > best:
                best, best_perm = total, perm
        memo[key] = (best, best_perm)
        return best

    def descend(u1: int, u2: int, out: dict[str, Slot]) -> None:
        if v1.tree.is_leaf(u1):
            out[v2.tree.leaf_label(u2)] = v1.node_slot[u1]
            return
        agree(u1, u2)
        perm = memo[(u1, u2)][1]
        c1, c2 = v1.children[u1], v2.children[u2]
        for i, p in enumerate(perm):
            descend(c1[i], c2[p], out)

    want: dict[str, Slot] = {}
    descend(v1.root, v2.root, want)
    return want


def _tree_path(tree: Phylogeny, start: int, goal: int) -> list[int]:
    prev = {start: None}
    queue = [start]
    while queue:
        nxt = []
        for v in queue:
            if v == goal:
                path = [v]
                while prev[path[-1]] is not None:
                    path.append(prev[path[-1]])
                return path[::-1]
            for e in tree.adjacent_edges(v):
                w = tree.other_end(e, v)
                if w not in prev:
                    prev[w] = v
                    nxt.append(w)
        queue = nxt
    raise TreeError("no path between swap endpoints")


def _edge_between(tree: Phylogeny, a: int, b: int) -> int:
    shared = set(tree.adjacent_edges(a)) & set(tree.adjacent_edges(b))
    return next(iter(shared))


def swap_leaves(tree: Phylogeny, x: str, y: str) -> list[NniOp]:
    """Exchange the positions of taxa ``x`` and ``y`` in place."""
    lx = tree.leaf_edge_of(x)
    ly = tree.leaf_edge_of(y)
    u = tree.other_end(lx, tree.leaf_node(x))
    w = tree.other_end(ly, tree.leaf_node(y))
    if u == w:
        return []  # same attachment point; the unrooted tree is unchanged
    nodes = _tree_path(tree, u, w)
    edges = [_edge_between(tree, a, b) for a, b in zip(nodes, nodes[1:])]
    m = len(edges)

    ops: list[NniOp] = []
    displaced: dict[int, int] = {}
    for i in range(m):
        if i < m - 1:
            partner = next(
                e
                for e in tree.adjacent_edges(nodes[i + 1])
                if e not in (edges[i], edges[i + 1])
            )
            displaced[i + 1] = partner
        else:
            partner = ly
        op = NniOp(lx, edges[i], partner)
        apply_nni(tree, op)
        ops.append(op)
    for i in range(m - 2, -1, -1):
        op = NniOp(ly, edges[i], displaced[i + 1])
        apply_nni(tree, op)
        ops.append(op)
    return ops


@dataclass
class LeafSortResult:
    ops: list[NniOp]
    tree: Phylogeny
    cycles: int


def sort_leaves(
    source: Phylogeny,
    target: Phylogeny,
    rt: ParRuntime | None = None,
    phase: str = "leafsort",
    source_root: int | None = None,
    target_root: int | None = None,
) -> LeafSortResult:
    """Emit NNI moves turning ``source`` into ``target`` by moving leaves only.

    When the two trees' anchors sit at different structural positions, pass
    corresponding internal nodes as explicit view roots so the position
    bookkeeping lines up.
    """
    rt = rt or ParRuntime()
    work = source.copy()
    v1 = build_slot_view(work, source_root)
    want = leaf_permutation(v1, build_slot_view(target, target_root))

    at = dict(v1.taxon_slot)
    slot_taxon = {s: t for t, s in at.items()}

    # permutation on occupied leaf slots; each cycle is resolved by swapping
    # the displaced taxon onward until the last one lands in the first slot
    seen: set[Slot] = set()
    cycles: list[list[str]] = []
    for s in sorted(slot_taxon):
        if s in seen:
            continue
        cycle_slots = []
        cur = s
        while cur not in seen:
            seen.add(cur)
            cycle_slots.append(cur)
            cur = want[slot_taxon[cur]]
        if len(cycle_slots) > 1:
            cycles.append([slot_taxon[c] for c in cycle_slots])

    tasks = [
        ParTask(
            i,
            frozenset({("cycle", i)}),
            lambda i=i, c=tuple(cycles[i]): {("cycle", i): c},
        )
        for i in range(len(cycles))
    ]
    planned = rt.round(phase, tasks)

    ops: list[NniOp] = []
    for i in range(len(cycles)):
        taxa = planned[("cycle", i)]
        carry = taxa[0]
        for other in taxa[1:]:
            ops += swap_leaves(work, carry, other)
            carry = other
        problems = work.validate()
        if problems:
            raise TreeError("leaf cycle broke the tree: " + problems[0])

    if not work.canonical_equal(target):
        raise TreeError("leaf sort failed to reach the target arrangement")
    return LeafSortResult(ops, work, len(cycles))
