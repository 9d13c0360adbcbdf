"""Exact search against an independent exhaustive DFS and small-case laws."""

from __future__ import annotations

import random
from fractions import Fraction

import pytest

from nnidist import newick
from nnidist.exact import StateLimitError, exact_dnni, neighbors
from nnidist.goodpairs import find_good_edge_pairs
from nnidist.nni import NniOp, apply_nni, verify_transform
from nnidist.phylo import Phylogeny, TreeError
from oracles import random_phylogeny, random_valid_op


def dfs_bound_oracle(t1: Phylogeny, t2: Phylogeny, bound: Fraction) -> Fraction:
    """Cheapest transformation below ``bound`` by exhaustive DFS.

    Explores every operand triplet (redundant ones included) with cost and
    dominance pruning; shares nothing with the searched implementation
    except the move semantics.
    """
    goal = newick.serialize(t2)
    best = [bound]
    cheapest: dict[str, Fraction] = {}

    def visit(tree: Phylogeny, cost: Fraction) -> None:
        key = newick.serialize(tree)
        if key in cheapest and cheapest[key] <= cost:
            return
        cheapest[key] = cost
        if key == goal:
            best[0] = min(best[0], cost)
            return
        for e2 in tree.internal_edges():
            u, v = tree.endpoints(e2)
            for e1 in tree.adjacent_edges(u):
                if e1 == e2:
                    continue
                for e3 in tree.adjacent_edges(v):
                    if e3 == e2:
                        continue
                    nxt = tree.copy()
                    step = apply_nni(nxt, NniOp(e1, e2, e3))
                    if cost + step < best[0]:
                        visit(nxt, cost + step)

    visit(t1, Fraction(0))
    return best[0]


def quartet(w: Fraction, pairing: str) -> Phylogeny:
    """4-taxon tree with internal weight w; pairing picks a's cherry mate."""
    others = {"b": ("c", "d"), "c": ("b", "d"), "d": ("b", "c")}[pairing]
    edges = {0: (0, 1), 1: (0, 2), 2: (0, 3), 3: (1, 4), 4: (1, 5)}
    weights = {0: w, 1: Fraction(1), 2: Fraction(1), 3: Fraction(1), 4: Fraction(1)}
    labels = {2: "a", 3: pairing, 4: others[0], 5: others[1]}
    return Phylogeny(edges, weights, labels)


def scrambled(seed: int, n: int, moves: int, weights: str = "small"):
    rng = random.Random(seed)
    t1 = random_phylogeny(rng, n, weights=weights)
    t2 = t1.copy()
    cost = Fraction(0)
    for _ in range(moves):
        op = random_valid_op(rng, t2)
        cost += apply_nni(t2, op)
    return t1, t2, cost


def test_identity_distance_is_zero():
    tree = random_phylogeny(random.Random(1), 5)
    d, ops = exact_dnni(tree, tree.copy())
    assert d == 0 and ops == []


def test_four_taxa_single_swap_is_forced():
    t1 = quartet(Fraction(7, 2), "b")
    t2 = quartet(Fraction(7, 2), "c")
    d, ops = exact_dnni(t1, t2)
    assert d == Fraction(7, 2)
    assert len(ops) == 1
    ok, cost, _ = verify_transform(t1, ops, t2)
    assert ok and cost == d


def test_four_taxa_has_two_neighbors_and_involution():
    t = quartet(Fraction(2), "b")
    moves = neighbors(t)
    assert len(moves) == 2
    seen = set()
    for op, nxt, cost in moves:
        assert cost == Fraction(2)
        assert not nxt.canonical_equal(t)
        seen.add(newick.serialize(nxt))
        undone = nxt.copy()
        apply_nni(undone, op)
        assert undone.canonical_equal(t)
    assert len(seen) == 2


def test_five_taxa_move_count_and_topology_closure():
    tree = random_phylogeny(random.Random(3), 5)
    frontier = [tree]
    states = {newick.serialize(tree)}
    shapes = {frozenset(tree.edge_splits().values())}
    while frontier:
        cur = frontier.pop()
        moves = neighbors(cur)
        assert len(moves) == 2 * (5 - 3)
        for _, nxt, _ in moves:
            key = newick.serialize(nxt)
            if key not in states:
                states.add(key)
                shapes.add(frozenset(nxt.edge_splits().values()))
                frontier.append(nxt)
    assert len(shapes) == 15


@pytest.mark.parametrize("seed", range(8))
def test_five_taxa_distance_matches_dfs_oracle(seed):
    t1, t2, applied = scrambled(seed, 5, 2)
    d, ops = exact_dnni(t1, t2)
    assert d <= applied
    assert d == dfs_bound_oracle(t1, t2, applied + 1)
    ok, cost, _ = verify_transform(t1, ops, t2)
    assert ok and cost == d


@pytest.mark.parametrize("seed", [11, 12, 13])
def test_symmetry(seed):
    t1, t2, _ = scrambled(seed, 5, 3)
    assert exact_dnni(t1, t2)[0] == exact_dnni(t2, t1)[0]


def test_triangle_inequality_on_sampled_triples():
    for seed in (21, 22):
        rng = random.Random(seed)
        a = random_phylogeny(rng, 5, weights="small")
        b = a.copy()
        for _ in range(2):
            apply_nni(b, random_valid_op(rng, b))
        c = b.copy()
        for _ in range(2):
            apply_nni(c, random_valid_op(rng, c))
        dab = exact_dnni(a, b)[0]
        dbc = exact_dnni(b, c)[0]
        dac = exact_dnni(a, c)[0]
        assert dac <= dab + dbc


def test_internal_weight_sum_bounds_distance_without_good_pairs():
    checked = 0
    for seed in range(40):
        t1, t2, _ = scrambled(100 + seed, 5, 4)
        if t1.canonical_equal(t2) or find_good_edge_pairs(t1, t2).pairs:
            continue
        w = sum(t1.weight(e) for e in t1.internal_edges())
        assert exact_dnni(t1, t2)[0] >= w
        checked += 1
    assert checked >= 5


def test_state_limit_is_an_error_not_an_answer():
    t1, t2, _ = scrambled(9, 5, 3)
    assert not t1.canonical_equal(t2)
    with pytest.raises(StateLimitError):
        exact_dnni(t1, t2, state_limit=0)


def test_infinite_instances_are_rejected():
    t1 = random_phylogeny(random.Random(5), 5)
    t2 = random_phylogeny(random.Random(6), 5)
    with pytest.raises(TreeError):
        exact_dnni(t1, t2)


def test_witness_is_deterministic():
    t1, t2, _ = scrambled(31, 5, 3)
    d1, w1 = exact_dnni(t1, t2)
    d2, w2 = exact_dnni(t1, t2)
    assert d1 == d2 and w1 == w2
