"""
Key-policy attribute based encryption with threshold access trees.

The construction is GPSW style secret sharing over BN254 with one random
element per key leaf, which makes decryption keys re-randomizable:

  * setup picks y and one t_i per attribute; PK = (Y = e(g, h)^y, H_i = h^t_i)
  * keygen shares y down the access tree with random polynomials of degree
    t - 1 per gate; leaf x of attribute i gets D_x = h^(q_x(0) + t_i r_x)
    and R_x = g^r_x
  * encrypt picks s and a random KEM element M in GT; E' = M Y^s, E'' = g^s,
    E_i = H_i^s for i in I. the byte payload is AEAD encrypted under
    KDF(M) with the ciphertext header as associated data
  * decrypt pairs e(D_x, E'') / e(E_i, R_x) = e(g, h)^(s q_x(0)) at every
    leaf on a satisfying path and combines them with Lagrange coefficients
    into Y^s, taking one final exponentiation for the whole product
"""

# use annotations to type hint a method with the type of the enclosing class
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import AbstractSet, Dict, Iterable, Iterator, List, Tuple

from ztac_py.crypto_core.encoding import Decoder, Encoder
from ztac_py.crypto_core.error import AuthenticationFailure
from ztac_py.crypto_core.primitives import NONCE_LENGTH, SymKey, kdf, sym_decrypt, sym_encrypt
from ztac_py.runtime_utils.op_tally import Term, counted

from .access_tree import (
    AccessLeaf,
    AccessNode,
    decode_policy,
    encode_policy,
    policy_leaves,
    satisfying_children,
    tree_satisfies,
)
from .error import EmptyAttributeSet, EmptyUniverse, PolicyNotSatisfied, PolicySyntaxError, UnknownAttribute
from .group import (
    ORDER,
    G1Point,
    G2Point,
    GTElement,
    base_pairing,
    decode_g1,
    decode_g2,
    decode_gt,
    encode_g1,
    encode_g2,
    encode_gt,
    final_exp,
    g1_add,
    g1_generator,
    g1_mul,
    g2_add,
    g2_generator,
    g2_mul,
    gt_one,
    gt_pow,
    inverse,
    miller,
    random_scalar,
)

CONSTRUCTION = "gpsw-rerandomizable/bn254"
DEFAULT_SECURITY_PARAMETER = 128

_KEM_LABEL = b"ztac-kpabe-kem"
# every KEM key is single use, so a constant nonce is safe
_KEM_NONCE = bytes(NONCE_LENGTH)


@dataclass(frozen=True)
class AttributeUniverse:
    """ordered attribute labels; the index of a label is its position plus one"""

    labels: Tuple[str, ...]

    def __post_init__(self) -> None:
        if len(set(self.labels)) != len(self.labels):
            raise PolicySyntaxError("attribute labels must be unique")

    @classmethod
    def of(cls, labels: Iterable[str]) -> AttributeUniverse:
        """universe over labels, in the given order"""
        return cls(tuple(labels))

    def __contains__(self, label: object) -> bool:
        return label in self.labels

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self) -> Iterator[str]:
        return iter(self.labels)

    def index(self, label: str) -> int:
        """stable 1-based index of label"""
        if label not in self.labels:
            raise UnknownAttribute(label)
        return self.labels.index(label) + 1

    def restrict(self, labels: Iterable[str]) -> AttributeUniverse:
        """sub-universe of labels, kept in this universe's order"""
        wanted = set(labels)
        for label in wanted:
            if label not in self.labels:
                raise UnknownAttribute(label)
        return AttributeUniverse(tuple(label for label in self.labels if label in wanted))


@dataclass(frozen=True)
class AbePublicKey:
    """PK: the target component Y and one G2 component per attribute"""

    universe: AttributeUniverse
    security_parameter: int
    pair_y: GTElement
    components: Dict[str, G2Point] = field(compare=False)

    def restrict(self, labels: Iterable[str]) -> AbePublicKey:
        """PK covering only labels"""
        universe = self.universe.restrict(labels)
        return AbePublicKey(
            universe, self.security_parameter, self.pair_y, {label: self.components[label] for label in universe}
        )

    def to_bytes(self) -> bytes:
        """canonical encoding"""
        encoder = Encoder().put_strs(self.universe).put_int(self.security_parameter)
        encoder.put_bytes(encode_gt(self.pair_y))
        for label in self.universe:
            encoder.put_bytes(encode_g2(self.components[label]))
        return encoder.to_bytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> AbePublicKey:
        """decode the output of to_bytes"""
        decoder = Decoder(data)
        universe = AttributeUniverse.of(decoder.take_strs())
        security_parameter = decoder.take_int()
        pair_y = decode_gt(decoder.take_bytes())
        components = {label: decode_g2(decoder.take_bytes()) for label in universe}
        decoder.finish()
        return cls(universe, security_parameter, pair_y, components)


@dataclass(frozen=True)
class AbeMasterKey:
    """MK: the master scalar y and one secret scalar per attribute"""

    universe: AttributeUniverse
    security_parameter: int
    y: int = field(repr=False)
    secrets: Dict[str, int] = field(repr=False, compare=False)

    def restrict(self, labels: Iterable[str]) -> AbeMasterKey:
        """MK covering only labels; keys for other attributes can not be issued from it"""
        universe = self.universe.restrict(labels)
        return AbeMasterKey(universe, self.security_parameter, self.y, {label: self.secrets[label] for label in universe})

    def to_bytes(self) -> bytes:
        """canonical encoding, only ever sent encrypted"""
        encoder = Encoder().put_strs(self.universe).put_int(self.security_parameter)
        encoder.put_bytes(self.y.to_bytes(32, "big"))
        for label in self.universe:
            encoder.put_bytes(self.secrets[label].to_bytes(32, "big"))
        return encoder.to_bytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> AbeMasterKey:
        """decode the output of to_bytes"""
        decoder = Decoder(data)
        universe = AttributeUniverse.of(decoder.take_strs())
        security_parameter = decoder.take_int()
        y = int.from_bytes(decoder.take_bytes(), "big")
        secrets = {label: int.from_bytes(decoder.take_bytes(), "big") for label in universe}
        decoder.finish()
        return cls(universe, security_parameter, y, secrets)


@dataclass(frozen=True)
class LeafComponent:
    """D_x in G2 and R_x in G1 for one leaf of the key's access tree"""

    attribute: str
    d: G2Point = field(repr=False)
    r: G1Point = field(repr=False)


@dataclass(frozen=True)
class AbeDecryptionKey:
    """access tree plus one component per leaf, in depth first leaf order"""

    policy: AccessNode
    components: Tuple[LeafComponent, ...]

    def to_bytes(self) -> bytes:
        """canonical encoding"""
        encoder = Encoder()
        encode_policy(self.policy, encoder)
        encoder.put_int(len(self.components))
        for component in self.components:
            encoder.put_str(component.attribute).put_bytes(encode_g2(component.d)).put_bytes(encode_g1(component.r))
        return encoder.to_bytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> AbeDecryptionKey:
        """decode the output of to_bytes"""
        decoder = Decoder(data)
        policy = decode_policy(decoder)
        components = []
        for _ in range(decoder.take_count(limit=1024)):
            attribute = decoder.take_str()
            d = decode_g2(decoder.take_bytes())
            r = decode_g1(decoder.take_bytes())
            components.append(LeafComponent(attribute, d, r))
        decoder.finish()
        return cls(policy, tuple(components))


@dataclass(frozen=True)
class AbeCiphertext:
    """attribute set I in clear, E', E'', E_i per attribute and the AEAD payload"""

    attributes: Tuple[str, ...]
    e_mask: GTElement = field(repr=False)
    e_base: G1Point = field(repr=False)
    components: Dict[str, G2Point] = field(repr=False, compare=False)
    payload: bytes = field(repr=False)

    def header_bytes(self) -> bytes:
        """canonical encoding of everything but the payload"""
        encoder = Encoder().put_strs(self.attributes)
        encoder.put_bytes(encode_gt(self.e_mask)).put_bytes(encode_g1(self.e_base))
        for attribute in self.attributes:
            encoder.put_bytes(encode_g2(self.components[attribute]))
        return encoder.to_bytes()

    def to_bytes(self) -> bytes:
        """canonical encoding"""
        return Encoder().put_bytes(self.header_bytes()).put_bytes(self.payload).to_bytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> AbeCiphertext:
        """decode the output of to_bytes"""
        outer = Decoder(data)
        header = Decoder(outer.take_bytes())
        payload = outer.take_bytes()
        outer.finish()

        attributes = tuple(header.take_strs())
        e_mask = decode_gt(header.take_bytes())
        e_base = decode_g1(header.take_bytes())
        components = {attribute: decode_g2(header.take_bytes()) for attribute in attributes}
        header.finish()
        return cls(attributes, e_mask, e_base, components, payload)


def _polynomial(constant: int, degree: int, rng: random.Random) -> List[int]:
    return [constant % ORDER] + [random_scalar(rng) for _ in range(degree)]


def _evaluate(coefficients: List[int], point: int) -> int:
    value = 0
    for coefficient in reversed(coefficients):
        value = (value * point + coefficient) % ORDER
    return value


def lagrange_at_zero(index: int, indices: Iterable[int]) -> int:
    """Lagrange basis coefficient of index over the index set, evaluated at 0"""
    value = 1
    for other in indices:
        if other != index:
            value = value * other % ORDER * inverse(other - index) % ORDER
    return value


def _kem_key(element: GTElement) -> SymKey:
    return SymKey(kdf(encode_gt(element), _KEM_LABEL))


@counted(Term.ABE_SETUP)
def abe_setup(
    security_parameter: int, universe: AttributeUniverse, rng: random.Random
) -> Tuple[AbePublicKey, AbeMasterKey]:
    """PK and MK over universe"""
    if len(universe) == 0:
        raise EmptyUniverse("attribute universe is empty")
    y = random_scalar(rng)
    secrets = {label: random_scalar(rng) for label in universe}
    h = g2_generator()
    public = AbePublicKey(
        universe=universe,
        security_parameter=security_parameter,
        pair_y=gt_pow(base_pairing(), y),
        components={label: g2_mul(h, secret) for label, secret in secrets.items()},
    )
    master = AbeMasterKey(universe=universe, security_parameter=security_parameter, y=y, secrets=secrets)
    return public, master


def _share(node: AccessNode, value: int, out: List[Tuple[str, int]], rng: random.Random) -> None:
    """top down sharing of value; appends (attribute, share) per leaf"""
    if isinstance(node, AccessLeaf):
        out.append((node.attribute, value))
        return
    coefficients = _polynomial(value, node.threshold - 1, rng)
    for index, child in enumerate(node.children, start=1):
        _share(child, _evaluate(coefficients, index), out, rng)


@counted(Term.ABE_KEYGEN)
def abe_keygen(policy: AccessNode, mk: AbeMasterKey, rng: random.Random) -> AbeDecryptionKey:
    """decryption key embedding policy; every leaf must be in the master key's universe"""
    for node in policy_leaves(policy):
        if node.attribute not in mk.secrets:
            raise UnknownAttribute(node.attribute)

    shares: List[Tuple[str, int]] = []
    _share(policy, mk.y, shares, rng)

    g, h = g1_generator(), g2_generator()
    components = []
    for attribute, share in shares:
        r = random_scalar(rng)
        components.append(LeafComponent(attribute, g2_mul(h, share + mk.secrets[attribute] * r), g1_mul(g, r)))
    return AbeDecryptionKey(policy, tuple(components))


@counted(Term.ABE_KEYGEN)
def abe_rerandomize(key: AbeDecryptionKey, pk: AbePublicKey, rng: random.Random) -> AbeDecryptionKey:
    """
    equivalent key for the same policy with fresh randomness: adds a random
    sharing of zero and fresh leaf randomness, using only public parameters
    """
    shares: List[Tuple[str, int]] = []
    _share(key.policy, 0, shares, rng)
    if len(shares) != len(key.components):
        raise PolicyNotSatisfied("key components do not match its access tree")

    g, h = g1_generator(), g2_generator()
    components = []
    for (attribute, share), component in zip(shares, key.components):
        if attribute not in pk.components:
            raise UnknownAttribute(attribute)
        r = random_scalar(rng)
        d = g2_add(component.d, g2_add(g2_mul(h, share), g2_mul(pk.components[attribute], r)))
        components.append(LeafComponent(attribute, d, g1_add(component.r, g1_mul(g, r))))
    return AbeDecryptionKey(key.policy, tuple(components))


@counted(Term.ABE_ENC)
def abe_encrypt(message: bytes, attrs: Iterable[str], pk: AbePublicKey, rng: random.Random) -> AbeCiphertext:
    """encrypt message under attribute set I"""
    attributes = tuple(sorted(set(attrs)))
    if not attributes:
        raise EmptyAttributeSet("attribute set is empty")
    for attribute in attributes:
        if attribute not in pk.components:
            raise UnknownAttribute(attribute)

    s = random_scalar(rng)
    kem_element = gt_pow(base_pairing(), random_scalar(rng))
    unsealed = AbeCiphertext(
        attributes=attributes,
        e_mask=kem_element * gt_pow(pk.pair_y, s),
        e_base=g1_mul(g1_generator(), s),
        components={attribute: g2_mul(pk.components[attribute], s) for attribute in attributes},
        payload=b"",
    )
    payload = sym_encrypt(_kem_key(kem_element), message, _KEM_NONCE, unsealed.header_bytes())
    return AbeCiphertext(unsealed.attributes, unsealed.e_mask, unsealed.e_base, unsealed.components, payload)


def _leaf_count(node: AccessNode) -> int:
    return sum(1 for _ in policy_leaves(node))


def _decryption_plan(
    node: AccessNode, attrs: AbstractSet[str], coefficient: int, offset: int, plan: List[Tuple[int, int]]
) -> None:
    """(leaf position, combined Lagrange coefficient) for every leaf on the chosen satisfying path"""
    if isinstance(node, AccessLeaf):
        plan.append((offset, coefficient))
        return
    chosen = satisfying_children(node, attrs)
    indices = [index for index, _ in chosen]
    child_offset = offset
    for index, child in enumerate(node.children, start=1):
        if index in indices:
            child_coefficient = coefficient * lagrange_at_zero(index, indices) % ORDER
            _decryption_plan(child, attrs, child_coefficient, child_offset, plan)
        child_offset += _leaf_count(child)


@counted(Term.ABE_DEC)
def abe_decrypt(ct: AbeCiphertext, key: AbeDecryptionKey) -> bytes:
    """payload of ct if its attributes satisfy the key's access tree"""
    attrs = set(ct.attributes)
    if not tree_satisfies(key.policy, attrs):
        raise PolicyNotSatisfied(f"attributes {sorted(attrs)} do not satisfy the key policy")
    leaves = list(policy_leaves(key.policy))
    if len(leaves) != len(key.components):
        raise PolicyNotSatisfied("key components do not match its access tree")

    plan: List[Tuple[int, int]] = []
    _decryption_plan(key.policy, attrs, 1, 0, plan)

    numerator = gt_one()
    denominator = gt_one()
    for position, coefficient in plan:
        component = key.components[position]
        if component.attribute != leaves[position].attribute or component.attribute not in ct.components:
            raise PolicyNotSatisfied("key component does not match its leaf")
        numerator = numerator * miller(component.d, g1_mul(ct.e_base, coefficient))
        denominator = denominator * miller(ct.components[component.attribute], g1_mul(component.r, coefficient))

    blinding = final_exp(numerator / denominator)
    kem_element = ct.e_mask / blinding
    try:
        return sym_decrypt(_kem_key(kem_element), _KEM_NONCE, ct.payload, ct.header_bytes())
    except AuthenticationFailure as exception:
        raise PolicyNotSatisfied("key components do not reconstruct the ciphertext key") from exception
