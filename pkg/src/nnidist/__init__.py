"""Weighted-phylogeny NNI distance toolkit.

Approximate and exact minimum-cost nearest-neighbor-interchange sequences
between edge-weighted phylogenies, plus the supporting machinery: Newick
I/O with exact decimal lengths, replayable operation traces, a good-edge-pair
decomposition, and a deterministic round-synchronous parallel runtime.
"""

from nnidist.exact import exact_dnni
from nnidist.goodpairs import decompose, find_good_edge_pairs
from nnidist.nni import NniOp, apply_nni, apply_sequence, verify_transform
from nnidist.phylo import NodeClass, Phylogeny, TreeError, finiteness_check
from nnidist.pipeline import ApproxResult, approx_nni
from nnidist.runtime import ParRuntime

__all__ = [
    "ApproxResult",
    "NodeClass",
    "NniOp",
    "ParRuntime",
    "Phylogeny",
    "TreeError",
    "approx_nni",
    "apply_nni",
    "apply_sequence",
    "decompose",
    "exact_dnni",
    "find_good_edge_pairs",
    "finiteness_check",
    "verify_transform",
]
