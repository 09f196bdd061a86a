"""
Threshold gate access trees.

A tree is either an AccessLeaf naming one attribute, or an AccessGate with a
threshold t over n >= t children. AND is an n-of-n gate, OR a 1-of-n gate.
Children are numbered from 1 in the order given; that index is the point a
parent polynomial is evaluated at when sharing a secret down the tree.

Policies can be written as text:

    and(vital, or(urgent, geoA))
    2of(vital, urgent, geoA)
"""

# use annotations to type hint a method with the type of the enclosing class
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import AbstractSet, Iterator, List, Tuple, Union

from ztac_py.crypto_core.encoding import Decoder, Encoder

from .error import PolicySyntaxError


@dataclass(frozen=True)
class AccessLeaf:
    """a single attribute requirement"""

    attribute: str

    def __post_init__(self) -> None:
        if not self.attribute:
            raise PolicySyntaxError("leaf attribute must be a non-empty label")


@dataclass(frozen=True)
class AccessGate:
    """t-of-n threshold over child nodes"""

    threshold: int
    children: Tuple[AccessNode, ...]

    def __post_init__(self) -> None:
        if not self.children:
            raise PolicySyntaxError("gate needs at least one child")
        if not 1 <= self.threshold <= len(self.children):
            raise PolicySyntaxError(f"threshold {self.threshold} outside of 1..{len(self.children)}")


AccessNode = Union[AccessLeaf, AccessGate]


def leaf(attribute: str) -> AccessLeaf:
    """leaf for attribute"""
    return AccessLeaf(attribute)


def _nodes(children: Tuple[Union[AccessNode, str], ...]) -> Tuple[AccessNode, ...]:
    return tuple(AccessLeaf(child) if isinstance(child, str) else child for child in children)


def all_of(*children: Union[AccessNode, str]) -> AccessGate:
    """AND gate; plain strings become leaves"""
    nodes = _nodes(children)
    return AccessGate(len(nodes), nodes)


def any_of(*children: Union[AccessNode, str]) -> AccessGate:
    """OR gate; plain strings become leaves"""
    return AccessGate(1, _nodes(children))


def threshold_of(threshold: int, *children: Union[AccessNode, str]) -> AccessGate:
    """t-of-n gate; plain strings become leaves"""
    return AccessGate(threshold, _nodes(children))


def tree_satisfies(policy: AccessNode, attrs: AbstractSet[str]) -> bool:
    """recursive threshold evaluation of policy over an attribute set"""
    if isinstance(policy, AccessLeaf):
        return policy.attribute in attrs
    satisfied = sum(1 for child in policy.children if tree_satisfies(child, attrs))
    return satisfied >= policy.threshold


def satisfying_children(gate: AccessGate, attrs: AbstractSet[str]) -> List[Tuple[int, AccessNode]]:
    """
    the first threshold satisfied children of gate, in index order, as
    (1-based index, child) pairs. empty if the gate is not satisfied.
    """
    chosen = []
    for index, child in enumerate(gate.children, start=1):
        if tree_satisfies(child, attrs):
            chosen.append((index, child))
            if len(chosen) == gate.threshold:
                return chosen
    return []


def policy_leaves(policy: AccessNode) -> Iterator[AccessLeaf]:
    """leaves in depth first, left to right order"""
    if isinstance(policy, AccessLeaf):
        yield policy
        return
    for child in policy.children:
        yield from policy_leaves(child)


def policy_attributes(policy: AccessNode) -> List[str]:
    """distinct leaf attributes in first appearance order"""
    seen: List[str] = []
    for node in policy_leaves(policy):
        if node.attribute not in seen:
            seen.append(node.attribute)
    return seen


def policy_depth(policy: AccessNode) -> int:
    """1 for a leaf, 1 + deepest child for a gate"""
    if isinstance(policy, AccessLeaf):
        return 1
    return 1 + max(policy_depth(child) for child in policy.children)


def format_policy(policy: AccessNode) -> str:
    """text form accepted by parse_policy"""
    if isinstance(policy, AccessLeaf):
        return policy.attribute
    inner = ", ".join(format_policy(child) for child in policy.children)
    if policy.threshold == len(policy.children) and len(policy.children) > 1:
        return f"and({inner})"
    if policy.threshold == 1:
        return f"or({inner})"
    return f"{policy.threshold}of({inner})"


_TOKEN = re.compile(r"\s*(?:(?P<label>[A-Za-z0-9_.:\-]+)|(?P<punct>[(),]))")
_THRESHOLD = re.compile(r"^(?P<threshold>[0-9]+)of$")


def _tokenize(text: str) -> List[str]:
    tokens = []
    position = 0
    text = text.rstrip()
    while position < len(text):
        match = _TOKEN.match(text, position)
        if match is None:
            raise PolicySyntaxError(f"unexpected character {text[position]!r} at offset {position}")
        tokens.append(match.group("label") or match.group("punct"))
        position = match.end()
    return tokens


def parse_policy(text: str) -> AccessNode:
    """parse the text policy syntax into an access tree"""
    tokens = _tokenize(text)
    if not tokens:
        raise PolicySyntaxError("empty policy")
    node, position = _parse_node(tokens, 0)
    if position != len(tokens):
        raise PolicySyntaxError(f"unexpected {tokens[position]!r} after end of policy")
    return node


def _parse_node(tokens: List[str], position: int) -> Tuple[AccessNode, int]:
    if position >= len(tokens) or tokens[position] in ("(", ")", ","):
        raise PolicySyntaxError("expected an attribute or gate")
    name = tokens[position]
    position += 1
    if position >= len(tokens) or tokens[position] != "(":
        return AccessLeaf(name), position

    children: List[AccessNode] = []
    position += 1
    while True:
        child, position = _parse_node(tokens, position)
        children.append(child)
        if position >= len(tokens):
            raise PolicySyntaxError(f"unclosed gate {name!r}")
        if tokens[position] == ")":
            position += 1
            break
        if tokens[position] != ",":
            raise PolicySyntaxError(f"expected ',' or ')' in gate {name!r}")
        position += 1

    lowered = name.lower()
    if lowered == "and":
        return AccessGate(len(children), tuple(children)), position
    if lowered == "or":
        return AccessGate(1, tuple(children)), position
    threshold = _THRESHOLD.match(lowered)
    if threshold is None:
        raise PolicySyntaxError(f"unknown gate {name!r}")
    return AccessGate(int(threshold.group("threshold")), tuple(children)), position


def encode_policy(policy: AccessNode, encoder: Encoder) -> None:
    """append the canonical encoding of policy"""
    if isinstance(policy, AccessLeaf):
        encoder.put_int(0).put_str(policy.attribute)
        return
    encoder.put_int(1).put_int(policy.threshold).put_int(len(policy.children))
    for child in policy.children:
        encode_policy(child, encoder)


def decode_policy(decoder: Decoder, depth: int = 0) -> AccessNode:
    """read a policy written by encode_policy"""
    if depth > 64:
        raise PolicySyntaxError("policy nesting too deep")
    kind = decoder.take_int()
    if kind == 0:
        return AccessLeaf(decoder.take_str())
    if kind != 1:
        raise PolicySyntaxError(f"unknown node kind {kind}")
    threshold = decoder.take_int()
    count = decoder.take_count(limit=1024)
    children = tuple(decode_policy(decoder, depth + 1) for _ in range(count))
    return AccessGate(threshold, children)
