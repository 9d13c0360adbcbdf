"""Newick reading and writing with exact decimal branch lengths.

The accepted dialect is strict: bare labels (no quotes, no structural
characters), mandatory positive branch lengths written as plain decimals
(no sign, no exponent), and an unweighted root with two or three children.
A two-child root is treated as a subdivision point and suppressed on parse,
summing the two incident lengths into one edge.

Serialization is canonical: the tree is rooted at the internal node next to
the smallest taxon and children are ordered by the smallest taxon they
contain, so equal phylogenies always produce byte-identical text.
"""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path

from nnidist.phylo import Phylogeny, TreeError

_STRUCTURAL = set("():,;")


class ParseError(ValueError):
    """Syntax error with the byte offset where parsing failed."""

    def __init__(self, offset: int, message: str) -> None:
        super().__init__(f"offset {offset}: {message}")
        self.offset = offset
        self.message = message


def parse_weight(text: str, offset: int = 0) -> Fraction:
    """Parse a positive plain-decimal string (``7``, ``0.25``) into a Fraction."""
    ok = text and text.count(".") <= 1 and all(c.isdigit() or c == "." for c in text)
    if not ok or not any(c.isdigit() for c in text):
        raise ParseError(offset, f"malformed branch length {text!r}")
    if "." in text:
        whole, frac = text.split(".")
        value = Fraction(int(whole or "0") * 10 ** len(frac) + int(frac or "0"), 10 ** len(frac))
    else:
        value = Fraction(int(text))
    if value <= 0:
        raise ParseError(offset, f"branch length {text!r} is not positive")
    return value


def format_weight(w: Fraction) -> str:
    """Render a Fraction as the shortest plain decimal, e.g. 13/4 -> ``3.25``."""
    den = w.denominator
    a = 0
    while den % 2 == 0:
        den //= 2
        a += 1
    b = 0
    while den % 5 == 0:
        den //= 5
        b += 1
    if den != 1:
        raise ValueError(f"{w} has no finite decimal form")
    k = max(a, b)
    scaled = w.numerator * 10**k // w.denominator
    digits = str(scaled).rjust(k + 1, "0")
    if k == 0:
        return digits
    tail = digits[-k:].rstrip("0")
    return digits[:-k] + ("." + tail if tail else "")


class _Parser:
    def __init__(self, text: str) -> None:
        self.text = text
        self.pos = 0
        self.edges: dict[int, tuple[int, int]] = {}
        self.weights: dict[int, Fraction] = {}
        self.labels: dict[int, str] = {}
        self.next_node = 0
        self.next_edge = 0

    def error(self, message: str) -> ParseError:
        return ParseError(self.pos, message)

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str) -> None:
        if self.peek() != ch:
            raise self.error(f"expected {ch!r}")
        self.pos += 1

    def new_node(self) -> int:
        v = self.next_node
        self.next_node += 1
        return v

    def add_edge(self, u: int, v: int, w: Fraction) -> int:
        e = self.next_edge
        self.next_edge += 1
        self.edges[e] = (u, v)
        self.weights[e] = w
        return e

    def read_label(self) -> str:
        start = self.pos
        while self.pos < len(self.text):
            c = self.text[self.pos]
            if c in _STRUCTURAL or c.isspace():
                break
            self.pos += 1
        if self.pos == start:
            raise self.error("expected a taxon label or '('")
        return self.text[start:self.pos]

    def read_weight(self) -> Fraction:
        self.skip_ws()
        self.expect(":")
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and (self.text[self.pos].isdigit() or self.text[self.pos] == "."):
            self.pos += 1
        return parse_weight(self.text[start:self.pos], start)

    def read_subtree(self, parent: int) -> None:
        """One child of ``parent``: either a leaf or an internal binary node."""
        self.skip_ws()
        if self.peek() == "(":
            self.pos += 1
            node = self.new_node()
            self.read_subtree(node)
            self.skip_ws()
            self.expect(",")
            self.read_subtree(node)
            self.skip_ws()
            if self.peek() == ",":
                raise self.error("internal nodes take exactly two children")
            self.expect(")")
        else:
            node = self.new_node()
            self.labels[node] = self.read_label()
        w = self.read_weight()
        self.add_edge(parent, node, w)

    def parse(self) -> Phylogeny:
        self.skip_ws()
        self.expect("(")
        root = self.new_node()
        children = 1
        self.read_subtree(root)
        self.skip_ws()
        while self.peek() == ",":
            self.pos += 1
            self.read_subtree(root)
            children += 1
            self.skip_ws()
        self.expect(")")
        if children not in (2, 3):
            raise self.error(f"root has {children} children, expected 2 or 3")
        self.skip_ws()
        self.expect(";")
        self.skip_ws()
        if self.pos != len(self.text):
            raise self.error("trailing characters after ';'")
        if children == 2:
            self._suppress_root(root)
        dup = len(self.labels) - len(set(self.labels.values()))
        if dup:
            raise self.error(f"{dup} duplicate taxon label(s)")
        try:
            return Phylogeny(self.edges, self.weights, self.labels)
        except TreeError as exc:
            raise ParseError(self.pos, f"not a valid phylogeny: {exc}") from exc

    def _suppress_root(self, root: int) -> None:
        e1, e2 = (e for e, (u, v) in self.edges.items() if root in (u, v))
        a = self.edges[e1][0] if self.edges[e1][1] == root else self.edges[e1][1]
        b = self.edges[e2][0] if self.edges[e2][1] == root else self.edges[e2][1]
        w = self.weights.pop(e1) + self.weights.pop(e2)
        del self.edges[e1], self.edges[e2]
        self.add_edge(a, b, w)


def parse(text: str) -> Phylogeny:
    """Parse one Newick document into a phylogeny."""
    return _Parser(text).parse()


def serialize(tree: Phylogeny) -> str:
    """Canonical Newick text for ``tree`` (see module docstring)."""

    def emit(node: int, via: int) -> tuple[str, str]:
        if tree.is_leaf(node):
            label = tree.leaf_label(node)
            return label, f"{label}:{format_weight(tree.weight(via))}"
        parts = []
        for e in tree.adjacent_edges(node):
            if e != via:
                parts.append(emit(tree.other_end(e, node), e))
        parts.sort()
        inner = ",".join(text for _, text in parts)
        return parts[0][0], f"({inner}):{format_weight(tree.weight(via))}"

    root = tree.root_handle()
    parts = [emit(tree.other_end(e, root), e) for e in tree.adjacent_edges(root)]
    parts.sort()
    return "(" + ",".join(text for _, text in parts) + ");"


def read_tree(path: str | Path) -> Phylogeny:
    return parse(Path(path).read_text())


def write_tree(path: str | Path, tree: Phylogeny) -> None:
    Path(path).write_text(serialize(tree) + "\n")
