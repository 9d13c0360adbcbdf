"""Newick parsing, canonical serialization, exact decimal weights."""

import random
from fractions import Fraction

import pytest

from nnidist import newick
from nnidist.newick import ParseError, format_weight, parse, parse_weight, serialize

from oracles import random_phylogeny, splits_by_removal


def test_parse_simple_quartet():
    t = parse("(a:1,b:2,(c:3,d:4):5);")
    assert t.taxa() == ("a", "b", "c", "d")
    assert t.leaf_weight_map() == {"a": 1, "b": 2, "c": 3, "d": 4}
    assert t.splits() == {frozenset({"c", "d"}): Fraction(5)}


def test_parse_decimal_weights():
    t = parse("(a:0.5,b:12.25,c:3);")
    assert t.leaf_weight_map() == {
        "a": Fraction(1, 2),
        "b": Fraction(49, 4),
        "c": Fraction(3),
    }


def test_binary_root_is_suppressed():
    t = parse("((a:1,b:2):3,(c:4,d:5):6);")
    # the two root edges merge into one internal edge of weight 9
    assert t.splits() == {frozenset({"c", "d"}): Fraction(9)}
    assert t.leaf_weight_map() == {"a": 1, "b": 2, "c": 4, "d": 5}


def test_parse_allows_whitespace_between_tokens():
    t = parse("(a:1, b:2, (c:3, d:4):5);\n")
    assert t.taxa() == ("a", "b", "c", "d")


@pytest.mark.parametrize(
    "text",
    [
        "",
        "(a:1,b:2,c:3)",            # missing ;
        "(a:1,b:2,c:3);x",          # trailing garbage
        "(a:1,b:2,c);",             # leaf without length
        "(a:1,b:2,(c:3,d:4));",     # internal edge without length
        "(a:1,b:2,c:-3);",          # signed length
        "(a:1,b:2,c:0);",           # zero length
        "(a:1,b:2,c:0.000);",       # zero length in decimal clothing
        "(a:1,b:2,c:1e3);",         # exponent notation
        "(a:1,b:2,c:1.2.3);",       # two dots
        "(a:1,b:2,c:.);",           # no digits
        "(a:1;b:2,c:3);",           # stray ;
        "(a:1,b:2,(c:3):4);",       # one-child internal node
        "((a:1,b:2,c:3):4,d:5);",   # three-child internal (non-root)
        "(a:1,b:2,c:3,d:4);",       # four-child root
        "(a:1);",                   # one-child root
        "(a:1,b:2,(c:3,d:4):5",     # unbalanced
        "(a:1,a:2,c:3);",           # duplicate taxa
    ],
)
def test_parse_rejects(text):
    with pytest.raises(ParseError):
        parse(text)


def test_parse_error_carries_offset():
    with pytest.raises(ParseError) as info:
        parse("(a:1,b:2,c:0);")
    assert info.value.offset == 11
    assert "positive" in info.value.message


@pytest.mark.parametrize(
    "text,expected",
    [
        ("7", Fraction(7)),
        ("0.25", Fraction(1, 4)),
        ("10.100", Fraction(101, 10)),
        (".5", Fraction(1, 2)),
        ("3.", Fraction(3)),
    ],
)
def test_parse_weight_values(text, expected):
    assert parse_weight(text) == expected


@pytest.mark.parametrize(
    "value,expected",
    [
        (Fraction(5), "5"),
        (Fraction(13, 4), "3.25"),
        (Fraction(1, 10), "0.1"),
        (Fraction(1, 8), "0.125"),
        (Fraction(101, 10), "10.1"),
        (Fraction(1200), "1200"),
    ],
)
def test_format_weight_values(value, expected):
    assert format_weight(value) == expected


def test_format_weight_rejects_non_decimal():
    with pytest.raises(ValueError):
        format_weight(Fraction(1, 3))


def test_serialize_is_canonical_for_quartet():
    # same tree, different construction orders, same bytes
    a = parse("(a:1,b:2,(c:3,d:4):5);")
    b = parse("((d:4,c:3):2.5,(b:2,a:1):2.5);")
    assert serialize(a) == "(a:1,b:2,(c:3,d:4):5);"
    assert serialize(b) == serialize(a)


def test_round_trip_random_trees():
    rng = random.Random(411)
    for _ in range(25):
        t = random_phylogeny(rng, rng.randint(3, 30))
        text = serialize(t)
        u = parse(text)
        assert t.canonical_equal(u)
        assert serialize(u) == text
        assert splits_by_removal(u) is not None  # sanity: parse yields a real tree


def test_file_round_trip(tmp_path):
    rng = random.Random(412)
    t = random_phylogeny(rng, 9)
    path = tmp_path / "t.nwk"
    newick.write_tree(path, t)
    assert newick.read_tree(path).canonical_equal(t)
    assert path.read_text().endswith(");\n")
