import pytest

from ztac_py.crypto_core.encoding import Decoder, Encoder
from ztac_py.pairing.access_tree import (
    AccessGate,
    all_of,
    any_of,
    decode_policy,
    encode_policy,
    format_policy,
    leaf,
    parse_policy,
    policy_attributes,
    policy_depth,
    satisfying_children,
    threshold_of,
    tree_satisfies,
)
from ztac_py.pairing.error import PolicySyntaxError


def test_gates() -> None:
    """
    AND, OR and threshold gates evaluate like their boolean counterparts
    """
    policy = all_of("vital", any_of("urgent", "geoA"))

    assert tree_satisfies(policy, {"vital", "urgent"})
    assert tree_satisfies(policy, {"vital", "geoA", "other"})
    assert not tree_satisfies(policy, {"vital"})
    assert not tree_satisfies(policy, {"urgent", "geoA"})

    two_of_three = threshold_of(2, "a", "b", "c")
    assert tree_satisfies(two_of_three, {"a", "c"})
    assert not tree_satisfies(two_of_three, {"b"})

    assert tree_satisfies(leaf("a"), {"a"})
    assert not tree_satisfies(leaf("a"), set())


def test_satisfying_children() -> None:
    """
    the first threshold satisfied children are chosen, in index order
    """
    gate = threshold_of(2, "a", "b", "c")

    assert [index for index, _ in satisfying_children(gate, {"a", "b", "c"})] == [1, 2]
    assert [index for index, _ in satisfying_children(gate, {"b", "c"})] == [2, 3]
    assert not satisfying_children(gate, {"c"})


def test_parse_and_format() -> None:
    """
    text policies parse into trees and format back into the same text
    """
    policy = parse_policy("and(vital, or(urgent, geoA))")
    assert policy == all_of("vital", any_of("urgent", "geoA"))
    assert format_policy(policy) == "and(vital, or(urgent, geoA))"

    threshold = parse_policy(" 2of( a ,b, c ) ")
    assert threshold == threshold_of(2, "a", "b", "c")
    assert format_policy(threshold) == "2of(a, b, c)"

    assert parse_policy("AND(x, y)") == all_of("x", "y")
    assert parse_policy("vital") == leaf("vital")

    nested = parse_policy("or(and(a, b), 2of(c, d, e), f)")
    assert policy_attributes(nested) == ["a", "b", "c", "d", "e", "f"]
    assert policy_depth(nested) == 3
    assert parse_policy(format_policy(nested)) == nested


@pytest.mark.parametrize(
    "text",
    [
        "",
        "and(a, b",
        "and(a,, b)",
        "xor(a, b)",
        "3of(a, b)",
        "0of(a)",
        "and()",
        "a b",
        "and(a, b))",
        "and(a; b)",
    ],
)
def test_parse_errors(text: str) -> None:
    """
    malformed policy text raises PolicySyntaxError
    """
    with pytest.raises(PolicySyntaxError):
        parse_policy(text)


def test_malformed_trees() -> None:
    """
    gates with impossible thresholds can not be built directly either
    """
    with pytest.raises(PolicySyntaxError):
        AccessGate(0, (leaf("a"),))
    with pytest.raises(PolicySyntaxError):
        AccessGate(1, ())
    with pytest.raises(PolicySyntaxError):
        leaf("")


def test_policy_encoding() -> None:
    """
    the canonical encoding of a tree decodes to an equal tree
    """
    policy = parse_policy("and(vital, 2of(ecg, motion, temperature))")
    encoder = Encoder()
    encode_policy(policy, encoder)

    decoder = Decoder(encoder.to_bytes())
    assert decode_policy(decoder) == policy
    decoder.finish()
