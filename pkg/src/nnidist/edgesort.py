"""Reordering the internal edges of a linear tree into a target order.

The sort is a bottom-up merge over "blocks": maximal runs of spine positions
whose edges are already sorted by target rank, ascending or descending in
alternation.  A first pass swaps adjacent edges pairwise so size-2 blocks
alternate (block j ascending exactly when j is odd); each merge stage then
pairs blocks middle-out (first with last, and so on) and merges every pair
with "pull" moves.

A pull (f, g, leaf-at-far-end-of-g) takes the edge g nearest the current
junction, hangs it below, and walks the junction one step outward; the edges
pulled so far dangle as a single chain whose top-to-bottom order is exactly
the merged run.  Pairs are processed innermost first so the one junction and
chain are shared by the whole stage; the outermost pair ends by running into
a tree end, which re-attaches the chain as the new spine.  Each edge is
operated on at most once per merge stage and at most twice in the
alternating pass.

When a stage's predicted outcome already matches the current spine order the
stage emits nothing; when the strictly cheaper endgame leaves the spine
holding the merged order read from the opposite end, the reading direction
simply flips for the next stage.
"""

from __future__ import annotations

from dataclasses import dataclass

from nnidist.linearize import spine_nodes
from nnidist.nni import NniOp, apply_nni
from nnidist.phylo import Phylogeny, TreeError
from nnidist.runtime import ParRuntime, ParTask


@dataclass
class Block:
    edges: list[int]   # edge ids in reading order along the spine
    ascending: bool    # sorted by target rank in this orientation


@dataclass
class EdgeSortResult:
    ops: list[NniOp]
    tree: Phylogeny
    stages: int


def spine_edge_order(tree: Phylogeny, spine: list[int]) -> list[int]:
    """Internal edges between consecutive spine nodes."""
    out = []
    for a, b in zip(spine, spine[1:]):
        shared = set(tree.adjacent_edges(a)) & set(tree.adjacent_edges(b))
        out.append(next(iter(shared)))
    return out


def _min_leaf_edge(tree: Phylogeny, node: int) -> int:
    """The leaf edge at ``node`` whose leaf has the smallest id."""
    return min(
        (tree.other_end(f, node), f)
        for f in tree.adjacent_edges(node)
        if tree.is_edge_leaf(f)
    )[1]


def _end_swap(tree: Phylogeny, end_node: int, first: int, second: int) -> list[NniOp]:
    """Swap the outermost two spine edges; ``first`` touches the end node."""
    v1 = tree.other_end(first, end_node)
    v2 = tree.other_end(second, v1)
    ops = [NniOp(first, second, _min_leaf_edge(tree, v2))]
    apply_nni(tree, ops[0])
    ops.append(NniOp(_min_leaf_edge(tree, end_node), first, second))
    apply_nni(tree, ops[1])
    return ops


def _mid_swap(tree: Phylogeny, a: int, b: int) -> list[NniOp]:
    """Swap two adjacent mid-spine edges (four moves, each edge twice)."""
    shared = set(tree.endpoints(a)) & set(tree.endpoints(b))
    node_b = next(iter(shared))
    node_a = tree.other_end(a, node_b)
    node_c = tree.other_end(b, node_b)
    e_prev = next(
        e for e in tree.adjacent_edges(node_a) if e != a and not tree.is_edge_leaf(e)
    )
    e_next = next(
        e for e in tree.adjacent_edges(node_c) if e != b and not tree.is_edge_leaf(e)
    )
    ops = []
    for op in (
        NniOp(e_prev, a, _min_leaf_edge(tree, node_b)),
        NniOp(e_next, b, a),
        NniOp(e_next, b, _min_leaf_edge(tree, node_c)),
        NniOp(e_next, a, _min_leaf_edge(tree, node_a)),
    ):
        apply_nni(tree, op)
        ops.append(op)
    return ops


def make_alternating(
    tree: Phylogeny,
    order: list[int],
    rank: dict[int, int],
    rt: ParRuntime,
    phase: str,
) -> tuple[list[NniOp], list[Block]]:
    """Swap adjacent position pairs in place so size-2 blocks alternate.

    Mutates ``tree`` and returns (ops, blocks).  ``order`` is the current
    spine edge order in reading direction.
    """
    m = len(order)
    tasks = []
    for j in range(0, m - 1, 2):
        a, b = order[j], order[j + 1]
        want_ascending = (j // 2) % 2 == 0
        swap = (rank[a] < rank[b]) != want_ascending
        tasks.append(ParTask(j, frozenset({("swap", j)}), lambda j=j, s=swap: {("swap", j): s}))
    decisions = rt.round(phase, tasks)

    ops: list[NniOp] = []
    new_order = list(order)
    for j in range(0, m - 1, 2):
        if not decisions[("swap", j)]:
            continue
        a, b = new_order[j], new_order[j + 1]
        shared = set(tree.endpoints(a)) & set(tree.endpoints(b))
        node_b = next(iter(shared))
        if j == 0:
            end = tree.other_end(a, node_b)
            ops += _end_swap(tree, end, a, b)
        elif j + 1 == m - 1:
            end = tree.other_end(b, node_b)
            ops += _end_swap(tree, end, b, a)
        else:
            ops += _mid_swap(tree, a, b)
        new_order[j], new_order[j + 1] = b, a

    blocks = []
    for j in range(0, m, 2):
        blocks.append(Block(new_order[j : j + 2], ascending=(j // 2) % 2 == 0))
    return ops, blocks


def _pull_plan(
    left: Block, right: Block, rank: dict[int, int], outer: bool
) -> list[tuple[str, int]]:
    """The pull order merging one block pair.

    The left block exposes edges right-to-left, the right one left-to-right;
    with alternating orientations both expose their extreme rank, and pulling
    the larger (ascending result) or smaller (descending) gives the merge.
    Inner pairs drain both blocks completely; the outermost pair stops when
    the right block is exhausted, leaving its left remainder in place as the
    prefix of the stage outcome.
    """
    maxfirst = left.ascending
    li = len(left.edges) - 1
    ri = 0
    pulls = []
    while True:
        lv = rank[left.edges[li]] if li >= 0 else None
        rv = rank[right.edges[ri]] if ri < len(right.edges) else None
        if rv is None and (outer or lv is None):
            break
        if rv is None:
            take_left = True
        elif lv is None:
            take_left = False
        else:
            take_left = (lv > rv) if maxfirst else (lv < rv)
        if take_left:
            pulls.append(("L", left.edges[li]))
            li -= 1
        else:
            pulls.append(("R", right.edges[ri]))
            ri += 1
    return pulls


def merge_stage(
    tree: Phylogeny,
    blocks: list[Block],
    rank: dict[int, int],
    rt: ParRuntime,
    phase: str,
) -> tuple[list[NniOp], list[Block]]:
    """Merge paired blocks in place; returns (ops, next stage's blocks)."""
    q = len(blocks)
    if q % 2 == 0:
        pair_idx = [(i, q - 1 - i) for i in range(q // 2)]
        passed: list[Block] = []
    else:
        # a same-parity pair would not be bitonic, so the first block sits out
        pair_idx = [(i, q - i) for i in range(1, (q + 1) // 2)]
        passed = [blocks[0]]

    # round 1: every participating edge publishes its target rank
    tasks = [
        ParTask(e, frozenset({("rank", e)}), lambda e=e, r=rank[e]: {("rank", e): r})
        for li, ri in pair_idx
        for e in blocks[li].edges + blocks[ri].edges
    ]
    ranks = rt.round(phase, tasks)
    local_rank = {key[1]: v for key, v in ranks.items()}

    # round 2: one planning task per pair
    tasks = []
    for pos, (li, ri) in enumerate(pair_idx):
        left, right = blocks[li], blocks[ri]

        def fn(pos=pos, left=left, right=right):
            run = sorted(
                left.edges + right.edges,
                key=lambda e: local_rank[e],
                reverse=not left.ascending,
            )
            pulls = _pull_plan(left, right, local_rank, outer=(pos == 0))
            return {("plan", pos): (pulls, run)}

        tasks.append(ParTask(pos, frozenset({("plan", pos)}), fn))
    plans = rt.round(phase, tasks)

    predicted = [e for b in passed for e in b.edges]
    for pos in range(len(pair_idx)):
        predicted += plans[("plan", pos)][1]

    ops: list[NniOp] = []
    current = spine_edge_order(tree, spine_nodes(tree))
    if current == predicted or current == predicted[::-1]:
        pass  # already in stage order; nothing to emit
    else:
        junction: int | None = None
        chain_top: int | None = None
        stopped = False
        for pos in reversed(range(len(pair_idx))):
            if stopped:
                break
            li, ri = pair_idx[pos]
            left, right = blocks[li], blocks[ri]
            pulls = plans[("plan", pos)][0]
            if junction is None:
                ends_a = set(tree.endpoints(left.edges[-1]))
                ends_b = set(tree.endpoints(right.edges[0]))
                junction = next(iter(ends_a & ends_b))
            for side, g in pulls:
                if g not in tree.adjacent_edges(junction):
                    raise TreeError("merge pull lost the junction")
                if chain_top is None:
                    f = next(
                        e
                        for e in tree.adjacent_edges(junction)
                        if e != g and not tree.is_edge_leaf(e)
                    )
                else:
                    f = next(
                        e
                        for e in tree.adjacent_edges(junction)
                        if e not in (g, chain_top)
                    )
                far = tree.other_end(g, junction)
                far_leaves = sum(
                    1 for e in tree.adjacent_edges(far) if tree.is_edge_leaf(e)
                )
                op = NniOp(f, g, _min_leaf_edge(tree, far))
                apply_nni(tree, op)
                ops.append(op)
                if far_leaves == 2:
                    # ran into a tree end: the chain is spliced back in
                    if side == "L":
                        # left end reached; the remaining right part already
                        # trails the chain in merged (reversed) order
                        stopped = True
                        break
                    if pos != 0 or (side, g) != pulls[-1]:
                        raise TreeError("merge spliced a tree end mid-stage")
                else:
                    junction = far
                    chain_top = g

    actual = spine_edge_order(tree, spine_nodes(tree))
    if actual != predicted and actual != predicted[::-1]:
        raise TreeError("merge stage did not produce its predicted order")

    new_blocks = [Block(list(b.edges), b.ascending) for b in passed]
    for pos, (li, _) in enumerate(pair_idx):
        new_blocks.append(Block(list(plans[("plan", pos)][1]), blocks[li].ascending))
    return ops, new_blocks


def merge_sort_edges(
    source: Phylogeny,
    target: list[int],
    rt: ParRuntime | None = None,
    phase: str = "edgesort",
) -> EdgeSortResult:
    """Emit NNI moves arranging ``source``'s internal edges into ``target`` order.

    ``source`` must be linear; it is not modified.  The result tree's spine,
    read from one of its two ends, lists the internal edges exactly in
    ``target`` order.
    """
    rt = rt or ParRuntime()
    tree = source.copy()
    internal = tree.internal_edges()
    if sorted(target) != internal:
        raise TreeError("target is not a permutation of the internal edges")
    if len(internal) <= 1:
        return EdgeSortResult([], tree, 0)

    rank = {e: i for i, e in enumerate(target)}
    spine = spine_nodes(tree)
    order = spine_edge_order(tree, spine)
    fixed_fwd = sum(1 for i, e in enumerate(order) if rank[e] == i)
    fixed_rev = sum(1 for i, e in enumerate(reversed(order)) if rank[e] == i)
    if fixed_rev > fixed_fwd:
        order.reverse()
    if order == target:
        return EdgeSortResult([], tree, 0)

    ops, blocks = make_alternating(tree, order, rank, rt, phase)
    stages = 1
    while len(blocks) > 1:
        stage_ops, blocks = merge_stage(tree, blocks, rank, rt, phase)
        ops += stage_ops
        stages += 1

    if blocks[0].edges != target:
        raise TreeError("merge sort finished with the wrong edge order")
    return EdgeSortResult(ops, tree, stages)
