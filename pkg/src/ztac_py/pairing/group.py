"""
Thin wrapper over the BN254 optimal ate pairing of py_ecc.

G1 points live over FQ, G2 points over FQ2, and the target group GT is the
order r subgroup of FQ12. Points are kept in py_ecc's projective form and
serialized in affine coordinates:

  * G1: flag byte (0x04 point, 0x00 infinity) then x, y as 32 byte values
  * G2: flag byte then x.c0, x.c1, y.c0, y.c1 as 32 byte values
  * GT: the 12 FQ12 coefficients as 32 byte values
"""

import functools
import hashlib
import random
from typing import Any, Iterable, List, Sequence, Tuple

from py_ecc.optimized_bn128 import (
    FQ,
    FQ2,
    FQ12,
    G1,
    G2,
    Z1,
    Z2,
    add,
    b,
    b2,
    curve_order,
    final_exponentiate,
    is_inf,
    is_on_curve,
    multiply,
    neg,
    normalize,
    pairing,
)

from ztac_py.crypto_core.error import MalformedEncoding

from .error import InvalidGroupElement

G1Point = Tuple[Any, Any, Any]
G2Point = Tuple[Any, Any, Any]
GTElement = Any

ORDER: int = curve_order
COORD_LENGTH = 32
G1_LENGTH = 1 + 2 * COORD_LENGTH
G2_LENGTH = 1 + 4 * COORD_LENGTH
GT_LENGTH = 12 * COORD_LENGTH

_POINT = b"\x04"
_INFINITY = b"\x00"


def _coeff(value: Any) -> int:
    """reduced integer value of an FQ coefficient"""
    return (value.n if hasattr(value, "n") else int(value)) % FQ.field_modulus


def random_scalar(rng: random.Random) -> int:
    """uniform non-zero scalar mod r"""
    return rng.randrange(1, ORDER)


def hash_to_scalar(label: bytes, data: bytes) -> int:
    """domain separated SHA-256 mapping into Z_r, never zero"""
    value = int.from_bytes(hashlib.sha256(label + data).digest(), "big") % ORDER
    return value if value != 0 else 1


def inverse(value: int) -> int:
    """multiplicative inverse mod r"""
    return pow(value % ORDER, -1, ORDER)


def g1_mul(point: G1Point, scalar: int) -> G1Point:
    """scalar multiple of a G1 point"""
    return multiply(point, scalar % ORDER)


def g2_mul(point: G2Point, scalar: int) -> G2Point:
    """scalar multiple of a G2 point"""
    return multiply(point, scalar % ORDER)


def g1_add(left: G1Point, right: G1Point) -> G1Point:
    """group law in G1"""
    return add(left, right)


def g2_add(left: G2Point, right: G2Point) -> G2Point:
    """group law in G2"""
    return add(left, right)


def g1_neg(point: G1Point) -> G1Point:
    """inverse in G1"""
    return neg(point)


def g1_generator() -> G1Point:
    """standard G1 generator"""
    return G1


def g2_generator() -> G2Point:
    """standard G2 generator"""
    return G2


def g2_identity() -> G2Point:
    """point at infinity of G2"""
    return Z2


def is_identity_g2(point: G2Point) -> bool:
    """is point the G2 point at infinity?"""
    return bool(is_inf(point))


def g2_sum(points: Iterable[G2Point]) -> G2Point:
    """sum of G2 points, the identity for an empty iterable"""
    total = Z2
    for point in points:
        total = add(total, point)
    return total


def miller(q: G2Point, p: G1Point) -> GTElement:
    """pairing without the final exponentiation"""
    return pairing(q, p, final_exponentiate=False)


def pair(q: G2Point, p: G1Point) -> GTElement:
    """full pairing e(p, q), written with the G2 argument first as py_ecc does"""
    return pairing(q, p)


def final_exp(value: GTElement) -> GTElement:
    """map a Miller loop product into GT"""
    return final_exponentiate(value)


def gt_one() -> GTElement:
    """identity of GT"""
    return FQ12.one()


def gt_pow(value: GTElement, scalar: int) -> GTElement:
    """exponentiation in GT"""
    return value ** (scalar % ORDER)


@functools.lru_cache(maxsize=1)
def base_pairing() -> GTElement:
    """e(g, h) for the standard generators, computed once"""
    return pairing(G2, G1)


def points_equal(left: Any, right: Any) -> bool:
    """projective equality check for G1 or G2 points"""
    return normalize(left) == normalize(right)


def encode_g1(point: G1Point) -> bytes:
    """65 byte affine encoding"""
    if is_inf(point):
        return _INFINITY + bytes(2 * COORD_LENGTH)
    x, y = normalize(point)
    return _POINT + _coeff(x).to_bytes(COORD_LENGTH, "big") + _coeff(y).to_bytes(COORD_LENGTH, "big")


def encode_g2(point: G2Point) -> bytes:
    """129 byte affine encoding"""
    if is_inf(point):
        return _INFINITY + bytes(4 * COORD_LENGTH)
    x, y = normalize(point)
    parts = [_coeff(c).to_bytes(COORD_LENGTH, "big") for c in list(x.coeffs) + list(y.coeffs)]
    return _POINT + b"".join(parts)


def encode_gt(value: GTElement) -> bytes:
    """384 byte coefficient encoding"""
    return b"".join(_coeff(c).to_bytes(COORD_LENGTH, "big") for c in value.coeffs)


def _split(data: bytes, expected: int, kind: str) -> List[int]:
    if len(data) != expected:
        raise MalformedEncoding(f"{kind} encoding must be {expected} bytes, got {len(data)}")
    body = data[len(data) % COORD_LENGTH :]
    return [int.from_bytes(body[i : i + COORD_LENGTH], "big") for i in range(0, len(body), COORD_LENGTH)]


def _field_check(values: Sequence[int], kind: str) -> None:
    if any(value >= FQ.field_modulus for value in values):
        raise InvalidGroupElement(kind, "coordinate outside of the base field")


def decode_g1(data: bytes) -> G1Point:
    """decode and validate a G1 point"""
    values = _split(data, G1_LENGTH, "G1")
    flag = data[:1]
    if flag == _INFINITY and not any(values):
        return Z1
    if flag != _POINT:
        raise InvalidGroupElement("G1", "unknown point flag")
    _field_check(values, "G1")
    point = (FQ(values[0]), FQ(values[1]), FQ.one())
    if not is_on_curve(point, b):
        raise InvalidGroupElement("G1", "point not on curve")
    return point


def decode_g2(data: bytes) -> G2Point:
    """decode and validate a G2 point, including the subgroup check"""
    values = _split(data, G2_LENGTH, "G2")
    flag = data[:1]
    if flag == _INFINITY and not any(values):
        return Z2
    if flag != _POINT:
        raise InvalidGroupElement("G2", "unknown point flag")
    _field_check(values, "G2")
    point = (FQ2(values[0:2]), FQ2(values[2:4]), FQ2.one())
    if not is_on_curve(point, b2):
        raise InvalidGroupElement("G2", "point not on curve")
    if not is_inf(multiply(point, ORDER)):
        raise InvalidGroupElement("G2", "point outside of the prime order subgroup")
    return point


def decode_gt(data: bytes) -> GTElement:
    """decode a GT element; membership is implied by later authenticated use"""
    values = _split(data, GT_LENGTH, "GT")
    _field_check(values, "GT")
    return FQ12(values)
