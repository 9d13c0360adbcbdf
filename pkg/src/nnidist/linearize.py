"""Making a tree linear: every internal node adjacent to at least one leaf.

Per iteration the tree is oriented toward the root handle and every non-root
node learns, by pointer jumping, the path to its nearest ancestor that is not
a pathnode.  Each junction then picks the nearest endnode chain hanging below
it and splices that chain's leaves upward with one NNI per chain edge, which
turns the junction into a pathnode and the chain's endnode into a pathnode.
Junctions are never created, and at least half of them disappear each
iteration, so the loop runs at most ceil(log2 n) times.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from nnidist.nni import NniOp, apply_nni
from nnidist.phylo import NodeClass, Phylogeny, TreeError
from nnidist.runtime import ParRuntime, ParTask


@dataclass(frozen=True)
class PathInfo:
    """Walk from a node toward the root, stopping before the first non-pathnode.

    ``next`` is that terminal ancestor (a junction, an endnode, or the root),
    ``head`` the last node on the path before it, ``path`` the edge ids walked
    in order, ``dist`` their weight sum, ``length`` their count.
    """

    next: int
    head: int
    dist: Fraction
    length: int
    path: tuple[int, ...]


@dataclass
class LinearizeResult:
    ops: list[NniOp]
    tree: Phylogeny
    iterations: int


def is_linear(tree: Phylogeny) -> bool:
    """True when every internal node has an adjacent leaf."""
    return NodeClass.JUNCTION not in tree.classify_nodes().values()


def spine_nodes(tree: Phylogeny) -> list[int]:
    """Internal nodes of a linear tree in path order, from the smaller-id end."""
    classes = tree.classify_nodes()
    internal = sorted(classes)
    if len(internal) <= 2:
        return internal
    ends = sorted(x for x, c in classes.items() if c is NodeClass.ENDNODE)
    if len(ends) != 2:
        raise ValueError("tree is not linear")
    order = [ends[0]]
    prev = None
    while order[-1] != ends[1]:
        x = order[-1]
        step = [
            tree.other_end(e, x)
            for e in tree.adjacent_edges(x)
            if not tree.is_edge_leaf(e) and tree.other_end(e, x) != prev
        ]
        if len(step) != 1:
            raise ValueError("tree is not linear")
        prev = x
        order.append(step[0])
    return order


def classify_round(rt: ParRuntime, phase: str, tree: Phylogeny) -> dict[int, NodeClass]:
    """Node classification as one parallel round (one task per internal node)."""
    tasks = []
    for x in tree.nodes():
        if tree.is_leaf(x):
            continue

        def fn(x=x):
            k = sum(1 for e in tree.adjacent_edges(x) if tree.is_leaf(tree.other_end(e, x)))
            cls = (
                NodeClass.ENDNODE
                if k >= 2
                else NodeClass.PATHNODE if k == 1 else NodeClass.JUNCTION
            )
            return {("class", x): cls}

        tasks.append(ParTask(x, frozenset({("class", x)}), fn))
    return {key[1]: c for key, c in rt.round(phase, tasks).items()}


def endnode_paths(
    tree: Phylogeny,
    rt: ParRuntime | None = None,
    phase: str = "endnode_paths",
    classes: dict[int, NodeClass] | None = None,
) -> dict[int, PathInfo]:
    """PathInfo for every non-root node, by pointer jumping.

    Uses one initialization round plus at most ceil(log2 n) jump rounds: each
    jump concatenates a node's walk with its terminal's walk, doubling the
    settled length.
    """
    rt = rt or ParRuntime()
    root = tree.root_handle()
    order, parent_edge = tree.rooted_parents(root)
    if classes is None:
        classes = tree.classify_nodes()
    terminal = {x for x, c in classes.items() if c is not NodeClass.PATHNODE}
    terminal.add(root)

    tasks = []
    for v in order:
        e = parent_edge[v]
        if e is None:
            continue
        u = tree.other_end(e, v)
        info = PathInfo(next=u, head=v, dist=tree.weight(e), length=1, path=(e,))
        tasks.append(
            ParTask(v, frozenset({("path", v)}), lambda v=v, info=info: {("path", v): info})
        )
    state = rt.round(phase, tasks)

    while True:
        tasks = []
        for v in sorted(x for x in order if parent_edge[x] is not None):
            mine = state[("path", v)]
            if mine.next in terminal:
                continue
            theirs = state[("path", mine.next)]
            combined = PathInfo(
                next=theirs.next,
                head=theirs.head,
                dist=mine.dist + theirs.dist,
                length=mine.length + theirs.length,
                path=mine.path + theirs.path,
            )
            tasks.append(
                ParTask(
                    v,
                    frozenset({("path", v)}),
                    lambda v=v, combined=combined: {("path", v): combined},
                )
            )
        if not tasks:
            break
        state.update(rt.round(phase, tasks))
    return {key[1]: info for key, info in state.items()}


def linearize(
    tree: Phylogeny, rt: ParRuntime | None = None, phase: str = "linearize"
) -> LinearizeResult:
    """Emit an NNI sequence turning ``tree`` into a linear tree.

    The input is not modified; the result carries the transformed copy, the
    operations (already applied to it), and the outer iteration count.
    """
    rt = rt or ParRuntime()
    work = tree.copy()
    ops: list[NniOp] = []
    iterations = 0
    while True:
        classes = classify_round(rt, phase, work)
        junctions = {x for x, c in classes.items() if c is NodeClass.JUNCTION}
        if not junctions:
            break
        iterations += 1
        info = endnode_paths(work, rt, phase=phase + ".paths", classes=classes)
        root = work.root_handle()
        _, parent_edge = work.rooted_parents(root)

        # endnodes whose upward walk ends at a junction announce themselves;
        # the cell is keyed by arrival edge, so at most one writer per cell
        tasks = []
        for E in sorted(x for x, c in classes.items() if c is NodeClass.ENDNODE):
            pi = info.get(E)
            if pi is None or pi.next not in junctions:
                continue
            cell = ("act", pi.next, pi.path[-1])
            tasks.append(
                ParTask(E, frozenset({cell}), lambda cell=cell, E=E, pi=pi: {cell: (pi.dist, E, pi.path)})
            )
        acts = rt.round(phase, tasks)

        candidates: dict[int, list] = {}
        for (_, junction, _), val in acts.items():
            candidates.setdefault(junction, []).append(val)

        # each activated junction keeps its nearest chain (ties by endnode id)
        tasks = [
            ParTask(
                J,
                frozenset({("sel", J)}),
                lambda J=J, best=min(cands): {("sel", J): best},
            )
            for J, cands in sorted(candidates.items())
        ]
        selected = rt.round(phase, tasks)

        # plan the splices against the frozen pre-round tree
        tasks = []
        for (_, J), (dist, E, path) in sorted(selected.items()):

            def fn(J=J, path=path):
                chain = list(reversed(path))
                e_x = next(
                    e
                    for e in work.adjacent_edges(J)
                    if e != chain[0] and e != parent_edge[J]
                )
                plan = []
                node = J
                for e_i in chain:
                    node = work.other_end(e_i, node)
                    # smaller leaf node id wins when the endnode offers two
                    leaf_edge = min(
                        (work.other_end(f, node), f)
                        for f in work.adjacent_edges(node)
                        if work.is_edge_leaf(f)
                    )[1]
                    plan.append(NniOp(leaf_edge, e_i, e_x))
                return {("plan", J): tuple(plan)}

            tasks.append(ParTask(J, frozenset({("plan", J)}), fn))
        plans = rt.round(phase, tasks)

        for key in sorted(plans):
            for op in plans[key]:
                apply_nni(work, op)
                ops.append(op)

    if not is_linear(work):
        raise TreeError("linearize postcondition failed: junction survived")
    return LinearizeResult(ops, work, iterations)
