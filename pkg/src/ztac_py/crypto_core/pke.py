"""
Public key sealing to a long-term P-256 encryption key: an ephemeral ECDH
agreement, HKDF into a one-time AES-256-GCM key, and the ciphertext appended
to the ephemeral public point.
"""

import random

from cryptography.hazmat.primitives.asymmetric import ec

from ztac_py.runtime_utils.op_tally import Term, counted

from .error import AuthenticationFailure
from .primitives import (
    NONCE_LENGTH,
    P256_ORDER,
    AgreementKeyPair,
    SymKey,
    kdf,
    load_agreement_public,
    sym_decrypt,
    sym_encrypt,
)

POINT_LENGTH = 65

# every sealing key is single use, so a constant nonce is safe
_SEAL_NONCE = bytes(NONCE_LENGTH)


def _sealing_key(shared: bytes, label: bytes, ephemeral: bytes, recipient: bytes) -> SymKey:
    return SymKey(kdf(shared, b"ztac-pke:" + label + ephemeral + recipient))


@counted(Term.PKE)
def pke_seal(recipient_public: bytes, plaintext: bytes, rng: random.Random, label: bytes = b"") -> bytes:
    """seal plaintext so that only the holder of the recipient key opens it"""
    recipient = load_agreement_public(recipient_public)
    ephemeral = AgreementKeyPair.from_scalar(rng.randrange(1, P256_ORDER))
    shared = ephemeral.private.exchange(ec.ECDH(), recipient)
    key = _sealing_key(shared, label, ephemeral.public, recipient_public)
    return ephemeral.public + sym_encrypt(key, plaintext, _SEAL_NONCE, label)


@counted(Term.PKE)
def pke_open(recipient: AgreementKeyPair, sealed: bytes, label: bytes = b"") -> bytes:
    """open the output of pke_seal, AuthenticationFailure on tamper"""
    if len(sealed) <= POINT_LENGTH:
        raise AuthenticationFailure("sealed value shorter than its ephemeral key")
    ephemeral_public = sealed[:POINT_LENGTH]
    shared = recipient.private.exchange(ec.ECDH(), load_agreement_public(ephemeral_public))
    key = _sealing_key(shared, label, ephemeral_public, recipient.public)
    return sym_decrypt(key, _SEAL_NONCE, sealed[POINT_LENGTH:], label)
