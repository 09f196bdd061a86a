# use annotations to type hint a method with the type of the enclosing class
from __future__ import annotations

import random
from dataclasses import dataclass

from ztac_py.runtime_utils.op_tally import Term, counted

from .encoding import Decoder, Encoder
from .primitives import sig_verify, sign, signing_keygen


@dataclass(frozen=True)
class Certificate:
    """
    binds a subject name to its Ed25519 verification key and its P-256
    encryption key, signed by a single issuing root
    """

    subject: str
    issuer: str
    verification_key: bytes
    encryption_key: bytes
    signature: bytes = b""

    def body(self) -> bytes:
        """the signed portion of the certificate"""
        return (
            Encoder()
            .put_str("ztac-cert")
            .put_str(self.subject)
            .put_str(self.issuer)
            .put_bytes(self.verification_key)
            .put_bytes(self.encryption_key)
            .to_bytes()
        )

    def to_bytes(self) -> bytes:
        """canonical encoding including the signature"""
        return Encoder().put_bytes(self.body()).put_bytes(self.signature).to_bytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> Certificate:
        """decode the output of to_bytes"""
        outer = Decoder(data)
        body = Decoder(outer.take_bytes())
        signature = outer.take_bytes()
        outer.finish()

        body.take_str()
        subject = body.take_str()
        issuer = body.take_str()
        verification_key = body.take_bytes()
        encryption_key = body.take_bytes()
        body.finish()
        return cls(subject, issuer, verification_key, encryption_key, signature)


class RootAuthority:
    """the simulation's one issuer of certificates"""

    def __init__(self, name: str, rng: random.Random) -> None:
        self.name = name
        self.key = signing_keygen(rng)

    @property
    def verification_key(self) -> bytes:
        """root of trust distributed to every entity"""
        return self.key.verification

    def issue(self, subject: str, verification_key: bytes, encryption_key: bytes) -> Certificate:
        """sign a certificate for subject"""
        unsigned = Certificate(subject, self.name, verification_key, encryption_key)
        return Certificate(subject, self.name, verification_key, encryption_key, sign(self.key, unsigned.body()))


@counted(Term.VER)
def certificate_valid(cert: Certificate, root_key: bytes) -> bool:
    """does the root key sign this certificate?"""
    return sig_verify(root_key, cert.body(), cert.signature)


@counted(Term.VER)
def verify_certified(cert: Certificate, root_key: bytes, data: bytes, signature: bytes) -> bool:
    """
    one certificate bound verification: the certificate chains to the root
    and signature over data verifies under the certified key
    """
    if not sig_verify(root_key, cert.body(), cert.signature):
        return False
    return sig_verify(cert.verification_key, data, signature)
