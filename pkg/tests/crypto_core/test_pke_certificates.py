import random

import pytest

from ztac_py.crypto_core.certificates import Certificate, RootAuthority, certificate_valid, verify_certified
from ztac_py.crypto_core.error import AuthenticationFailure
from ztac_py.crypto_core.pke import pke_open, pke_seal
from ztac_py.crypto_core.primitives import ecdh_keygen, sign, signing_keygen
from ztac_py.runtime_utils.op_tally import OperationTally, Term


def test_pke(rng: random.Random) -> None:
    """
    only the recipient opens a sealed value, and only under the same label
    """
    recipient = ecdh_keygen(rng)
    stranger = ecdh_keygen(rng)
    sealed = pke_seal(recipient.public, b"identity key", rng, b"user-1")

    assert pke_open(recipient, sealed, b"user-1") == b"identity key"

    with pytest.raises(AuthenticationFailure):
        pke_open(stranger, sealed, b"user-1")
    with pytest.raises(AuthenticationFailure):
        pke_open(recipient, sealed, b"user-2")
    with pytest.raises(AuthenticationFailure):
        pke_open(recipient, sealed[:-1] + bytes([sealed[-1] ^ 1]), b"user-1")
    with pytest.raises(AuthenticationFailure):
        pke_open(recipient, sealed[:40], b"user-1")


def test_pke_counts(tally: OperationTally, rng: random.Random) -> None:
    """
    the inner AEAD calls of public key sealing are not counted on their own
    """
    recipient = ecdh_keygen(rng)
    pke_open(recipient, pke_seal(recipient.public, b"x", rng), b"")

    totals = tally.totals()
    assert totals[Term.PKE] == 2
    assert Term.ENC not in totals


def test_certificates(rng: random.Random) -> None:
    """
    issued certificates verify against their root and survive encoding
    """
    root = RootAuthority("root", rng)
    impostor = RootAuthority("root", rng)
    user_key = signing_keygen(rng)
    cert = root.issue("user-1", user_key.verification, ecdh_keygen(rng).public)

    assert certificate_valid(cert, root.verification_key)
    assert not certificate_valid(cert, impostor.verification_key)
    assert Certificate.from_bytes(cert.to_bytes()) == cert

    swapped_key = signing_keygen(rng).verification
    forged = Certificate(cert.subject, cert.issuer, swapped_key, cert.encryption_key, cert.signature)
    assert not certificate_valid(forged, root.verification_key)


def test_verify_certified(tally: OperationTally, rng: random.Random) -> None:
    """
    a certified signature is one verification, failing for any broken link
    """
    root = RootAuthority("root", rng)
    user_key = signing_keygen(rng)
    cert = root.issue("user-1", user_key.verification, ecdh_keygen(rng).public)
    signature = sign(user_key, b"access request")

    before = tally.totals().get(Term.VER, 0)
    assert verify_certified(cert, root.verification_key, b"access request", signature)
    assert tally.totals()[Term.VER] == before + 1

    assert not verify_certified(cert, root.verification_key, b"other request", signature)
    assert not verify_certified(cert, RootAuthority("root", rng).verification_key, b"access request", signature)
