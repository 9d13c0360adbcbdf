"""Exact distance by uniform-cost search over canonical tree states.

Only practical for very small instances (six, maybe seven taxa); its job is
to be unarguably correct so the approximation can be measured against it.
States are canonical serializations, moves are the two non-redundant swaps
per internal edge, and ties break on the canonical string so the returned
witness is deterministic.
"""

from __future__ import annotations

import heapq
import itertools
from fractions import Fraction

from nnidist import newick
from nnidist.nni import NniOp, apply_nni, verify_transform
from nnidist.phylo import Phylogeny, TreeError, finiteness_check

DEFAULT_STATE_LIMIT = 5_000_000


class StateLimitError(RuntimeError):
    """The search settled more states than the caller allowed."""


def neighbors(tree: Phylogeny) -> list[tuple[NniOp, Phylogeny, Fraction]]:
    """The 2(n-3) distinct single-move successors of ``tree``.

    A swap across edge e moves one subtree from each side; fixing the lowest
    numbered edge on the u side and varying the v side covers both reachable
    arrangements, the other two operand choices are mirror images.
    """
    out = []
    for e2 in tree.internal_edges():
        u, v = tree.endpoints(e2)
        a1 = min(e for e in tree.adjacent_edges(u) if e != e2)
        for e3 in sorted(e for e in tree.adjacent_edges(v) if e != e2):
            op = NniOp(a1, e2, e3)
            nxt = tree.copy()
            cost = apply_nni(nxt, op)
            out.append((op, nxt, cost))
    return out


def exact_dnni(
    t1: Phylogeny,
    t2: Phylogeny,
    state_limit: int = DEFAULT_STATE_LIMIT,
) -> tuple[Fraction, list[NniOp]]:
    """Minimum transformation cost and one optimal witness sequence."""
    ok, reasons = finiteness_check(t1, t2)
    if not ok:
        raise TreeError("distance is infinite: " + "; ".join(reasons))
    goal = newick.serialize(t2)
    start = newick.serialize(t1)
    if start == goal:
        return Fraction(0), []

    counter = itertools.count()
    frontier: list[tuple[Fraction, str, int, Phylogeny]] = [
        (Fraction(0), start, next(counter), t1)
    ]
    best: dict[str, Fraction] = {start: Fraction(0)}
    via: dict[str, tuple[str, NniOp]] = {}
    settled: set[str] = set()

    while frontier:
        cost, key, _, tree = heapq.heappop(frontier)
        if key in settled:
            continue
        settled.add(key)
        if key == goal:
            ops: list[NniOp] = []
            back = key
            while back != start:
                back, op = via[back]
                ops.append(op)
            ops.reverse()
            replayed, total, reason = verify_transform(t1, ops, t2)
            if not replayed or total != cost:
                raise TreeError(f"witness failed replay: {reason}")
            return cost, ops
        if len(settled) > state_limit:
            raise StateLimitError(
                f"settled more than {state_limit} states without reaching the target"
            )
        for op, nxt, step in neighbors(tree):
            nkey = newick.serialize(nxt)
            ncost = cost + step
            if nkey not in best or ncost < best[nkey]:
                best[nkey] = ncost
                via[nkey] = (key, op)
                heapq.heappush(frontier, (ncost, nkey, next(counter), nxt))

    raise TreeError("search space exhausted without reaching the target tree")
