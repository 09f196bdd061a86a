# use annotations to type hint a method with the type of the enclosing class
from __future__ import annotations

import hashlib
import hmac
import random
from dataclasses import dataclass
from typing import Union

from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import ec
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from ztac_py.runtime_utils.op_tally import Term, counted, register_nonce

from .error import AuthenticationFailure, InvalidKeyLength, InvalidPoint

DIGEST_LENGTH = 32
KEY_LENGTH = 32
NONCE_LENGTH = 12

# order of the P-256 base point
P256_ORDER = 0xFFFFFFFF00000000FFFFFFFFFFFFFFFFBCE6FAADA7179E84F3B9CAC2FC632551


@dataclass(frozen=True)
class FixedBytes:
    """32 byte opaque value"""

    raw: bytes

    def __post_init__(self) -> None:
        if len(self.raw) != KEY_LENGTH:
            raise InvalidKeyLength(type(self).__name__, KEY_LENGTH, len(self.raw))

    def __bytes__(self) -> bytes:
        return self.raw

    def hex(self) -> str:
        """lowercase hex encoding"""
        return self.raw.hex()


class HashDigest(FixedBytes):
    """SHA-256 output"""


class MacKey(FixedBytes):
    """pairwise HMAC key between two entities"""


class SymKey(FixedBytes):
    """AES-256-GCM key, also the key hash chain element"""

    @classmethod
    def from_digest(cls, digest: HashDigest) -> SymKey:
        """the digest bytes are used as the key directly"""
        return cls(digest.raw)


@counted(Term.SHA)
def hash_bytes(data: bytes) -> HashDigest:
    """SHA-256 of data"""
    return HashDigest(hashlib.sha256(data).digest())


@counted(Term.MAC)
def hmac_tag(key: MacKey, data: bytes) -> HashDigest:
    """HMAC-SHA256 of data under key"""
    return HashDigest(hmac.new(key.raw, data, hashlib.sha256).digest())


@counted(Term.MAC)
def hmac_verify(key: MacKey, data: bytes, tag: Union[HashDigest, bytes]) -> bool:
    """constant time check of an HMAC-SHA256 tag; never raises on mismatch"""
    expected = hmac.new(key.raw, data, hashlib.sha256).digest()
    return hmac.compare_digest(expected, bytes(tag))


def kdf(secret: bytes, label: bytes, length: int = KEY_LENGTH) -> bytes:
    """HKDF-SHA256 expansion of secret, domain separated by label"""
    return HKDF(algorithm=hashes.SHA256(), length=length, salt=None, info=label).derive(secret)


@counted(Term.ENC)
def sym_encrypt(key: SymKey, plaintext: bytes, nonce: bytes, aad: bytes = b"") -> bytes:
    """
    AES-256-GCM encryption. the (key, nonce) pair is registered with the
    active nonce ledger, which raises NonceReuse on a repeat.
    """
    if len(nonce) != NONCE_LENGTH:
        raise InvalidKeyLength("nonce", NONCE_LENGTH, len(nonce))
    register_nonce(key.raw, nonce)
    return AESGCM(key.raw).encrypt(nonce, plaintext, aad)


@counted(Term.ENC)
def sym_decrypt(key: SymKey, nonce: bytes, ciphertext: bytes, aad: bytes = b"") -> bytes:
    """AES-256-GCM decryption, AuthenticationFailure on any modification"""
    if len(nonce) != NONCE_LENGTH:
        raise AuthenticationFailure(f"nonce must be {NONCE_LENGTH} bytes")
    try:
        return AESGCM(key.raw).decrypt(nonce, ciphertext, aad)
    except InvalidTag as exception:
        raise AuthenticationFailure("ciphertext failed authentication") from exception


def seal(key: SymKey, plaintext: bytes, nonce: bytes, aad: bytes = b"") -> bytes:
    """nonce followed by the AEAD ciphertext"""
    return nonce + sym_encrypt(key, plaintext, nonce, aad)


def unseal(key: SymKey, sealed: bytes, aad: bytes = b"") -> bytes:
    """open the output of seal"""
    if len(sealed) < NONCE_LENGTH:
        raise AuthenticationFailure("sealed value shorter than its nonce")
    return sym_decrypt(key, sealed[:NONCE_LENGTH], sealed[NONCE_LENGTH:], aad)


class NonceSequence:
    """
    12 byte counter nonces for one entity: a 4 byte prefix derived from the
    owner name followed by an 8 byte big-endian counter
    """

    def __init__(self, owner: str) -> None:
        self.prefix = hashlib.sha256(b"nonce-prefix:" + owner.encode()).digest()[:4]
        self.counter = 0

    def next(self) -> bytes:
        """next unused nonce"""
        self.counter += 1
        return self.prefix + self.counter.to_bytes(8, "big")


@dataclass(frozen=True)
class AgreementKeyPair:
    """P-256 key pair for ECDH and public key sealing"""

    private: ec.EllipticCurvePrivateKey
    public: bytes

    @classmethod
    def from_scalar(cls, scalar: int) -> AgreementKeyPair:
        """key pair for a private scalar in [1, n)"""
        private = ec.derive_private_key(scalar, ec.SECP256R1())
        public = private.public_key().public_bytes(
            encoding=serialization.Encoding.X962,
            format=serialization.PublicFormat.UncompressedPoint,
        )
        return cls(private=private, public=public)


def load_agreement_public(encoded: bytes) -> ec.EllipticCurvePublicKey:
    """decode and validate an X9.62 encoded P-256 point"""
    try:
        return ec.EllipticCurvePublicKey.from_encoded_point(ec.SECP256R1(), encoded)
    except ValueError as exception:
        raise InvalidPoint(str(exception)) from exception


@counted(Term.KEYGEN)
def ecdh_keygen(rng: random.Random) -> AgreementKeyPair:
    """fresh agreement key pair drawn from rng"""
    return AgreementKeyPair.from_scalar(rng.randrange(1, P256_ORDER))


@counted(Term.ECDH)
def ecdh_shared(my_private: AgreementKeyPair, their_public: bytes, context_label: bytes) -> MacKey:
    """
    ECDH on P-256 followed by HKDF-SHA256 with context_label as info. the
    peer point is validated, InvalidPoint on off-curve or identity input.
    """
    peer = load_agreement_public(their_public)
    shared = my_private.private.exchange(ec.ECDH(), peer)
    return MacKey(kdf(shared, context_label))


@dataclass(frozen=True)
class SignatureKeyPair:
    """Ed25519 signing key with its raw 32 byte verification key"""

    signing: Ed25519PrivateKey
    verification: bytes

    @classmethod
    def from_seed(cls, seed: bytes) -> SignatureKeyPair:
        """key pair for a 32 byte private seed"""
        signing = Ed25519PrivateKey.from_private_bytes(seed)
        verification = signing.public_key().public_bytes(
            encoding=serialization.Encoding.Raw,
            format=serialization.PublicFormat.Raw,
        )
        return cls(signing=signing, verification=verification)


@counted(Term.KEYGEN)
def signing_keygen(rng: random.Random) -> SignatureKeyPair:
    """fresh signature key pair drawn from rng"""
    return SignatureKeyPair.from_seed(rng.randbytes(32))


@counted(Term.SIGN)
def sign(key: SignatureKeyPair, data: bytes) -> bytes:
    """Ed25519 signature over data"""
    return key.signing.sign(data)


@counted(Term.VER)
def sig_verify(verification_key: bytes, data: bytes, signature: bytes) -> bool:
    """Ed25519 verification; false for bad signatures or malformed keys"""
    try:
        Ed25519PublicKey.from_public_bytes(verification_key).verify(signature, data)
    except (InvalidSignature, ValueError):
        return False
    return True
