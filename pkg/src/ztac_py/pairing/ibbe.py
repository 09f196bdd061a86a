"""
Identity based broadcast encryption with constant size headers, after
Delerablee, over BN254.

  * setup picks a secret g in G1, h in G2 and gamma. PK = (w = g^gamma,
    v = e(g, h), h^(gamma^i) for i = 0..m), MK = (g, gamma)
  * key extraction gives sk_ID = g^(1 / (gamma + H(ID)))
  * encryption to S picks k: C1 = w^-k, C2 = h^(k prod(gamma + H(ID_j))),
    K = v^k
  * a member ID_i recovers K = (e(C1, h^p_i(gamma)) e(sk_i, C2))^(1 / prod_(j != i) H(ID_j))
    where p_i(gamma) = (prod_(j != i)(gamma + H(ID_j)) - prod_(j != i) H(ID_j)) / gamma

K never leaves the module as a group element; it is mapped through HKDF into
a 32 byte SymKey.
"""

# use annotations to type hint a method with the type of the enclosing class
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Collection, List, Tuple

from ztac_py.crypto_core.encoding import Decoder, Encoder
from ztac_py.crypto_core.primitives import SymKey, kdf
from ztac_py.runtime_utils.op_tally import Term, counted

from .error import EmptySet, IdTooLong, InvalidParams, KeyMismatch, NotAReceiver, TooManyReceivers
from .group import (
    ORDER,
    G1_LENGTH,
    G2_LENGTH,
    G1Point,
    G2Point,
    GTElement,
    decode_g1,
    decode_g2,
    decode_gt,
    encode_g1,
    encode_g2,
    encode_gt,
    final_exp,
    g1_generator,
    g1_mul,
    g2_add,
    g2_generator,
    g2_mul,
    g2_sum,
    gt_pow,
    hash_to_scalar,
    inverse,
    is_identity_g2,
    miller,
    pair,
    random_scalar,
)

CONSTRUCTION = "delerablee/bn254"
HEADER_LENGTH = G1_LENGTH + G2_LENGTH

_ID_LABEL = b"ztac-ibbe-id:"
_KEY_LABEL = b"ztac-ibbe-broadcast-key"

BroadcastKey = SymKey


@dataclass(frozen=True)
class IbbeParams:
    """maximum receiver set size m, identity length bound l in bytes, security parameter"""

    max_receivers: int
    id_length: int = 32
    security_parameter: int = 128


@dataclass(frozen=True)
class IbbePublicKey:
    """w, v and h^(gamma^i) for i = 0..m"""

    params: IbbeParams
    w: G1Point = field(repr=False)
    v: GTElement = field(repr=False)
    h_powers: Tuple[G2Point, ...] = field(repr=False, compare=False)

    def to_bytes(self) -> bytes:
        """canonical encoding"""
        encoder = Encoder()
        encoder.put_int(self.params.max_receivers).put_int(self.params.id_length)
        encoder.put_int(self.params.security_parameter)
        encoder.put_bytes(encode_g1(self.w)).put_bytes(encode_gt(self.v))
        encoder.put_blobs(encode_g2(point) for point in self.h_powers)
        return encoder.to_bytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> IbbePublicKey:
        """decode the output of to_bytes"""
        decoder = Decoder(data)
        params = IbbeParams(decoder.take_int(), decoder.take_int(), decoder.take_int())
        w = decode_g1(decoder.take_bytes())
        v = decode_gt(decoder.take_bytes())
        h_powers = tuple(decode_g2(blob) for blob in decoder.take_blobs())
        decoder.finish()
        if len(h_powers) != params.max_receivers + 1:
            raise InvalidParams("public key size does not match its receiver bound")
        return cls(params, w, v, h_powers)


@dataclass(frozen=True)
class IbbeMasterKey:
    """secret generator g and gamma; has no wire encoding"""

    g: G1Point = field(repr=False)
    gamma: int = field(repr=False)


@dataclass(frozen=True)
class IdentityKey:
    """SK_Id = g^(1 / (gamma + H(Id)))"""

    identity: str
    sk: G1Point = field(repr=False)

    def to_bytes(self) -> bytes:
        """canonical encoding"""
        return Encoder().put_str(self.identity).put_bytes(encode_g1(self.sk)).to_bytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> IdentityKey:
        """decode the output of to_bytes"""
        decoder = Decoder(data)
        identity = decoder.take_str()
        sk = decode_g1(decoder.take_bytes())
        decoder.finish()
        return cls(identity, sk)


@dataclass(frozen=True)
class BroadcastHeader:
    """(C1, C2), constant size regardless of the receiver set"""

    c1: G1Point = field(repr=False)
    c2: G2Point = field(repr=False)

    def to_bytes(self) -> bytes:
        """fixed length encoding: C1 then C2"""
        return encode_g1(self.c1) + encode_g2(self.c2)

    @classmethod
    def from_bytes(cls, data: bytes) -> BroadcastHeader:
        """decode the output of to_bytes"""
        return cls(decode_g1(data[:G1_LENGTH]), decode_g2(data[G1_LENGTH:]))


def identity_scalar(identity: str) -> int:
    """H(Id) in Z_r"""
    return hash_to_scalar(_ID_LABEL, identity.encode("utf-8"))


def _check_identity(identity: str, params: IbbeParams) -> None:
    if len(identity.encode("utf-8")) > params.id_length:
        raise IdTooLong(identity, params.id_length)


def _receivers(receivers: Collection[str], params: IbbeParams) -> List[str]:
    members = sorted(set(receivers))
    if not members:
        raise EmptySet("receiver set is empty")
    if len(members) > params.max_receivers:
        raise TooManyReceivers(len(members), params.max_receivers)
    for member in members:
        _check_identity(member, params)
    return members


def _poly_from_roots(roots: List[int]) -> List[int]:
    """coefficients, lowest degree first, of prod(X + root)"""
    coefficients = [1]
    for root in roots:
        shifted = [0] + coefficients
        for degree, value in enumerate(coefficients):
            shifted[degree] = (shifted[degree] + value * root) % ORDER
        coefficients = shifted
    return coefficients


def _h_poly(pk: IbbePublicKey, coefficients: List[int]) -> G2Point:
    """h^P(gamma) for P given by coefficients, from the public powers"""
    return g2_sum(g2_mul(pk.h_powers[degree], value) for degree, value in enumerate(coefficients) if value)


def _broadcast_key(element: GTElement) -> BroadcastKey:
    return SymKey(kdf(encode_gt(element), _KEY_LABEL))


@counted(Term.IBBE_SETUP)
def ibbe_setup(params: IbbeParams, rng: random.Random) -> Tuple[IbbePublicKey, IbbeMasterKey]:
    """PK supporting receiver sets of up to params.max_receivers identities"""
    if params.max_receivers < 1:
        raise InvalidParams(f"max_receivers must be at least 1, got {params.max_receivers}")
    if params.id_length < 1:
        raise InvalidParams(f"id_length must be at least 1, got {params.id_length}")

    g = g1_mul(g1_generator(), random_scalar(rng))
    h = g2_mul(g2_generator(), random_scalar(rng))
    gamma = random_scalar(rng)

    powers = [h]
    for _ in range(params.max_receivers):
        powers.append(g2_mul(powers[-1], gamma))

    public = IbbePublicKey(params=params, w=g1_mul(g, gamma), v=pair(h, g), h_powers=tuple(powers))
    return public, IbbeMasterKey(g=g, gamma=gamma)


@counted(Term.IBBE)
def ibbe_key_ext(pk: IbbePublicKey, mk: IbbeMasterKey, identity: str) -> IdentityKey:
    """SK for identity"""
    _check_identity(identity, pk.params)
    exponent = inverse(mk.gamma + identity_scalar(identity))
    return IdentityKey(identity=identity, sk=g1_mul(mk.g, exponent))


@counted(Term.IBBE)
def ibbe_key_check(pk: IbbePublicKey, key: IdentityKey) -> bool:
    """e(sk, h^gamma h^H(Id)) == v, i.e. the key was extracted for its identity under pk"""
    target = g2_add(pk.h_powers[1], g2_mul(pk.h_powers[0], identity_scalar(key.identity)))
    return encode_gt(pair(target, key.sk)) == encode_gt(pk.v)


@counted(Term.IBBE)
def ibbe_enc(receivers: Collection[str], pk: IbbePublicKey, rng: random.Random) -> Tuple[BroadcastHeader, BroadcastKey]:
    """header and fresh broadcast key for receiver set S"""
    members = _receivers(receivers, pk.params)
    k = random_scalar(rng)
    coefficients = _poly_from_roots([identity_scalar(member) for member in members])
    header = BroadcastHeader(c1=g1_mul(pk.w, -k), c2=g2_mul(_h_poly(pk, coefficients), k))
    return header, _broadcast_key(gt_pow(pk.v, k))


@counted(Term.IBBE)
def ibbe_dec(
    receivers: Collection[str], identity: str, key: IdentityKey, header: BroadcastHeader, pk: IbbePublicKey
) -> BroadcastKey:
    """broadcast key for a member of S holding a valid key for its identity"""
    members = _receivers(receivers, pk.params)
    if identity not in members:
        raise NotAReceiver(f"{identity!r} is not in the receiver set")
    if key.identity != identity:
        raise KeyMismatch(f"key was extracted for {key.identity!r}, not {identity!r}")
    if not ibbe_key_check(pk, key):
        raise KeyMismatch(f"key for {identity!r} is not valid under this public key")

    others = [identity_scalar(member) for member in members if member != identity]
    coefficients = _poly_from_roots(others)
    # p_i(gamma) drops the constant term and divides by gamma
    h_p = _h_poly(pk, coefficients[1:])
    constant = coefficients[0]

    product = miller(header.c2, key.sk)
    if not is_identity_g2(h_p):
        product = product * miller(h_p, header.c1)
    return _broadcast_key(gt_pow(final_exp(product), inverse(constant)))
