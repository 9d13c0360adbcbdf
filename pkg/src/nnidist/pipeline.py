"""The full approximation: decompose on good pairs, then per component
linearize, merge-sort edges, rebalance, and transport leaves.

Each component is solved by meeting in the middle.  Tree 1 is made linear,
its internal edges are merge-sorted into the order of the linearized
balanced companion, and the companion's linearization is replayed backwards
to reach the balanced shape.  Tree 2 travels the same road forward; its
sequence is inverted and appended after a leaf sort aligns the two balanced
forms.  Operation sequences produced on one tree's edge ids are carried to
the other's through structural isomorphisms: corresponding edges are matched
once (positionally for two linear trees with equal spine weight sequences,
by canonical traversal for equal trees) and the correspondence stays valid
because matched operations change both trees in lockstep.

Pseudo-leaf edges inside components carry the edge id of the cut they stand
for, so stitched sequences are valid on the full trees as emitted: a swap
that moves a pseudo-leaf moves the whole subtree beyond the cut, and a cut
edge can never be an operating edge because one of its endpoints is a leaf
in every component.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from nnidist.balance import build_auxiliary, check_auxiliary
from nnidist.edgesort import merge_sort_edges, spine_edge_order
from nnidist.goodpairs import decompose, find_good_edge_pairs
from nnidist.leafsort import sort_leaves
from nnidist.linearize import linearize, spine_nodes
from nnidist.nni import NniOp, apply_sequence, invert_sequence, verify_transform
from nnidist.phylo import Phylogeny, TreeError, finiteness_check
from nnidist.runtime import ParRuntime

PHASE_NAMES = (
    "linearize_1",
    "edge_sort_1",
    "linearize_aux_1",
    "leaf_sort",
    "linearize_aux_2",
    "edge_sort_2",
    "linearize_2",
)


@dataclass
class ApproxResult:
    cost: Fraction
    sequence: list[NniOp]
    phase_costs: dict[str, Fraction]
    metrics: dict
    good_pairs: int
    w: Fraction
    ratio_to_w: Fraction | None

    def as_dict(self) -> dict:
        return {
            "cost": str(self.cost),
            "ops": len(self.sequence),
            "phase_costs": {k: str(v) for k, v in self.phase_costs.items()},
            "good_pairs": self.good_pairs,
            "w": str(self.w),
            "ratio_to_w": None if self.ratio_to_w is None else float(self.ratio_to_w),
            "metrics": self.metrics,
        }


def _translate(ops: list[NniOp], emap: dict[int, int]) -> list[NniOp]:
    return [NniOp(emap[o.e1], emap[o.e2], emap[o.e3]) for o in ops]


def _linear_maps(
    a: Phylogeny, b: Phylogeny
) -> tuple[dict[int, int], dict[int, int]]:
    """Edge and node maps from linear tree ``b`` onto linear tree ``a``.

    The spines must carry the same weight sequence up to direction; leaves
    at corresponding spine positions are matched in label order.
    """
    spine_a = spine_nodes(a)
    spine_b = spine_nodes(b)
    order_a = spine_edge_order(a, spine_a)
    order_b = spine_edge_order(b, spine_b)
    wa = [a.weight(e) for e in order_a]
    wb = [b.weight(e) for e in order_b]
    if wb != wa:
        if wb[::-1] != wa:
            raise TreeError("linear trees do not share a spine weight sequence")
        spine_b.reverse()
        order_b.reverse()
    emap = dict(zip(order_b, order_a))
    nmap = dict(zip(spine_b, spine_a))
    for na, nb in zip(spine_a, spine_b):
        leaves_a = sorted(
            (a.leaf_label(a.other_end(e, na)), e)
            for e in a.adjacent_edges(na)
            if a.is_edge_leaf(e)
        )
        leaves_b = sorted(
            (b.leaf_label(b.other_end(e, nb)), e)
            for e in b.adjacent_edges(nb)
            if b.is_edge_leaf(e)
        )
        if len(leaves_a) != len(leaves_b):
            raise TreeError("linear trees do not have matching leaf positions")
        for (_, ea), (_, eb) in zip(leaves_a, leaves_b):
            emap[eb] = ea
            nmap[b.other_end(eb, nb)] = a.other_end(ea, na)
    return emap, nmap


def _min_taxon_below(tree: Phylogeny, node: int, via: int | None) -> str:
    best = None
    stack = [(node, via)]
    while stack:
        x, up = stack.pop()
        if tree.is_leaf(x):
            lab = tree.leaf_label(x)
            best = lab if best is None else min(best, lab)
            continue
        for e in tree.adjacent_edges(x):
            if e != up:
                stack.append((tree.other_end(e, x), e))
    return best


def _canonical_edge_order(tree: Phylogeny) -> list[int]:
    root = tree.root_handle()
    out: list[int] = []
    stack = [(root, None)]
    while stack:
        node, via = stack.pop()
        ranked = sorted(
            (e for e in tree.adjacent_edges(node) if e != via),
            key=lambda e: _min_taxon_below(tree, tree.other_end(e, node), e),
        )
        for e in reversed(ranked):
            stack.append((tree.other_end(e, node), e))
        out.extend(ranked)
    return out


def _equal_tree_edge_map(a: Phylogeny, b: Phylogeny) -> dict[int, int]:
    """Edge map from ``b`` onto the canonically equal tree ``a``."""
    return dict(zip(_canonical_edge_order(b), _canonical_edge_order(a)))


def _aux_order_target(linear: Phylogeny, aux_linear: Phylogeny) -> list[int]:
    """``linear``'s internal edges listed in ``aux_linear``'s spine order.

    Edges are matched by weight; repeated weights pair up k-th with k-th in
    edge-id order, which is all the isomorphism translation needs.
    """
    groups: dict[Fraction, list[int]] = {}
    for e in linear.internal_edges():
        groups.setdefault(linear.weight(e), []).append(e)
    for lst in groups.values():
        lst.sort(reverse=True)
    target = []
    spine = spine_edge_order(aux_linear, spine_nodes(aux_linear))
    for e in spine:
        w = aux_linear.weight(e)
        if w not in groups or not groups[w]:
            raise TreeError("companion spine weights do not match the component")
        target.append(groups[w].pop())
    return target


def _forward_to_balanced(component: Phylogeny, rt: ParRuntime):
    """Transform one component into its balanced companion's shape.

    Returns (phase op lists, resulting tree, view root in the result's ids).
    """
    lin = linearize(component, rt)
    aux = build_auxiliary(component)
    check_auxiliary(component, aux)
    aux_lin = linearize(aux.tree, rt)
    target = _aux_order_target(lin.tree, aux_lin.tree)
    sorted_edges = merge_sort_edges(lin.tree, target, rt)
    emap, nmap = _linear_maps(sorted_edges.tree, aux_lin.tree)
    rebalance = _translate(invert_sequence(aux_lin.ops), emap)
    balanced, _ = apply_sequence(sorted_edges.tree, rebalance)
    root = nmap[aux.tree.root_handle()]
    return (lin.ops, sorted_edges.ops, rebalance), balanced, root


def _component_sequence(
    c1: Phylogeny, c2: Phylogeny, rt: ParRuntime
) -> tuple[list[NniOp], dict[str, Fraction]]:
    costs = {name: Fraction(0) for name in PHASE_NAMES}
    if c1.canonical_equal(c2):
        return [], costs

    (lin1, sort1, rebal1), balanced1, root1 = _forward_to_balanced(c1, rt)
    (lin2, sort2, rebal2), balanced2, root2 = _forward_to_balanced(c2, rt)

    leafs = sort_leaves(
        balanced1, balanced2, rt, source_root=root1, target_root=root2
    )

    back = invert_sequence(lin2 + sort2 + rebal2)
    back = _translate(back, _equal_tree_edge_map(leafs.tree, balanced2))

    def tally(ops: list[NniOp]) -> Fraction:
        return sum((c1.weight(o.e2) for o in ops), Fraction(0))

    costs["linearize_1"] = tally(lin1)
    costs["edge_sort_1"] = tally(sort1)
    costs["linearize_aux_1"] = tally(rebal1)
    costs["leaf_sort"] = tally(leafs.ops)
    costs["linearize_aux_2"] = tally(back[: len(rebal2)])
    costs["edge_sort_2"] = tally(back[len(rebal2): len(rebal2) + len(sort2)])
    costs["linearize_2"] = tally(back[len(rebal2) + len(sort2):])
    return lin1 + sort1 + rebal1 + leafs.ops + back, costs


def approx_nni(
    t1: Phylogeny, t2: Phylogeny, rt: ParRuntime | None = None
) -> ApproxResult:
    """Approximate transformation sequence from ``t1`` to ``t2``."""
    rt = rt or ParRuntime()
    ok, reasons = finiteness_check(t1, t2)
    if not ok:
        raise TreeError("distance is infinite: " + "; ".join(reasons))

    totals = {name: Fraction(0) for name in PHASE_NAMES}
    pair_count = 0

    def solve(a: Phylogeny, b: Phylogeny) -> list[NniOp]:
        nonlocal pair_count
        pairs = find_good_edge_pairs(a, b, rt)
        if pairs.pairs:
            pair_count += len(pairs.pairs)
            ops: list[NniOp] = []
            for part1, part2 in decompose(a, b, pairs):
                ops.extend(solve(part1, part2))
            return ops
        ops, costs = _component_sequence(a, b, rt)
        for name, value in costs.items():
            totals[name] += value
        return ops

    sequence = solve(t1, t2)
    ok, cost, reason = verify_transform(t1, sequence, t2)
    if not ok:
        raise TreeError(f"pipeline produced a bad sequence: {reason}")
    if cost != sum(totals.values(), Fraction(0)):
        raise TreeError("phase cost accounting does not add up")

    w = sum((t1.weight(e) for e in t1.internal_edges()), Fraction(0))
    return ApproxResult(
        cost=cost,
        sequence=sequence,
        phase_costs=totals,
        metrics=rt.snapshot(),
        good_pairs=pair_count,
        w=w,
        ratio_to_w=(cost / w) if w else None,
    )
