import hashlib
import hmac
import os
import random
from typing import Set

import pytest

from ztac_py.crypto_core.error import AuthenticationFailure, InvalidKeyLength, InvalidPoint, NonceReuse
from ztac_py.crypto_core.primitives import (
    NONCE_LENGTH,
    MacKey,
    NonceSequence,
    SymKey,
    ecdh_keygen,
    ecdh_shared,
    hash_bytes,
    hmac_tag,
    hmac_verify,
    seal,
    sig_verify,
    sign,
    signing_keygen,
    sym_decrypt,
    sym_encrypt,
    unseal,
)
from ztac_py.runtime_utils.op_tally import OperationTally, Term

from ..test_resources import test_files_dir


def test_sha256_vectors() -> None:
    """
    check hash_bytes against the published SHA-256 test vectors
    """
    with open(os.path.join(test_files_dir, "sha256_vectors.txt"), "r", encoding="utf-8") as vectors:
        lines = [line.rstrip("\n") for line in vectors if line.strip()]

    assert len(lines) == 3
    for line in lines:
        digest, _, message = line.partition(" ")
        assert hash_bytes(message.encode()).hex() == digest


def test_hmac(rng: random.Random) -> None:
    """
    tags match the standard library HMAC-SHA256 and any change to the data or
    the tag fails verification
    """
    key = MacKey(rng.randbytes(32))
    data = b"sensor reading"

    tag = hmac_tag(key, data)
    assert tag.raw == hmac.new(key.raw, data, hashlib.sha256).digest()
    assert hmac_verify(key, data, tag)
    assert hmac_verify(key, data, tag.raw)

    assert not hmac_verify(key, data + b"!", tag)
    assert not hmac_verify(MacKey(rng.randbytes(32)), data, tag)
    flipped = bytes([tag.raw[0] ^ 1]) + tag.raw[1:]
    assert not hmac_verify(key, data, flipped)


def test_fixed_length_keys() -> None:
    """
    keys and digests reject the wrong number of bytes
    """
    with pytest.raises(InvalidKeyLength):
        SymKey(bytes(31))
    with pytest.raises(InvalidKeyLength):
        MacKey(bytes(33))

    assert SymKey(bytes(32)).hex() == "00" * 32


def test_aead(rng: random.Random) -> None:
    """
    encryption round trips and every modification raises AuthenticationFailure
    """
    key = SymKey(rng.randbytes(32))
    nonce = rng.randbytes(NONCE_LENGTH)
    ciphertext = sym_encrypt(key, b"plaintext", nonce, b"aad")

    assert sym_decrypt(key, nonce, ciphertext, b"aad") == b"plaintext"

    with pytest.raises(AuthenticationFailure):
        sym_decrypt(key, nonce, ciphertext, b"other aad")
    with pytest.raises(AuthenticationFailure):
        sym_decrypt(SymKey(rng.randbytes(32)), nonce, ciphertext, b"aad")
    with pytest.raises(AuthenticationFailure):
        sym_decrypt(key, nonce, bytes([ciphertext[0] ^ 0x80]) + ciphertext[1:], b"aad")
    with pytest.raises(AuthenticationFailure):
        sym_decrypt(key, nonce[:-1], ciphertext, b"aad")

    with pytest.raises(InvalidKeyLength):
        sym_encrypt(key, b"plaintext", bytes(8))


def test_seal(rng: random.Random) -> None:
    """
    sealed values carry their nonce up front
    """
    key = SymKey(rng.randbytes(32))
    nonces = NonceSequence("wnc")
    sealed = seal(key, b"escrow", nonces.next(), b"label")

    assert unseal(key, sealed, b"label") == b"escrow"
    with pytest.raises(AuthenticationFailure):
        unseal(key, sealed[:5])


def test_nonce_sequence() -> None:
    """
    nonces are unique per owner and never repeat for one owner
    """
    first = NonceSequence("sensor-1")
    second = NonceSequence("sensor-2")

    drawn = [first.next() for _ in range(100)] + [second.next() for _ in range(100)]
    assert len(set(drawn)) == 200
    assert all(len(nonce) == NONCE_LENGTH for nonce in drawn)


def test_nonce_reuse(tally: OperationTally, rng: random.Random) -> None:
    """
    encrypting twice under one (key, nonce) pair raises while a tally records
    """
    key = SymKey(rng.randbytes(32))
    nonce = bytes(NONCE_LENGTH)

    sym_encrypt(key, b"first", nonce)
    with pytest.raises(NonceReuse):
        sym_encrypt(key, b"second", nonce)

    # a different key may use the same nonce
    sym_encrypt(SymKey(rng.randbytes(32)), b"third", nonce)
    assert tally.nonce_count == 2


def test_ecdh(rng: random.Random) -> None:
    """
    both sides derive the same key, labels separate keys, bad points raise
    """
    alice = ecdh_keygen(rng)
    bob = ecdh_keygen(rng)

    assert len(alice.public) == 65
    assert ecdh_shared(alice, bob.public, b"link") == ecdh_shared(bob, alice.public, b"link")
    assert ecdh_shared(alice, bob.public, b"link") != ecdh_shared(alice, bob.public, b"other")

    with pytest.raises(InvalidPoint):
        ecdh_shared(alice, b"\x04" + bytes(64), b"link")
    with pytest.raises(InvalidPoint):
        ecdh_shared(alice, bob.public[:33], b"link")


def test_signatures(rng: random.Random) -> None:
    """
    signatures verify only for their own key and data
    """
    key = signing_keygen(rng)
    other = signing_keygen(rng)
    signature = sign(key, b"request")

    assert sig_verify(key.verification, b"request", signature)
    assert not sig_verify(key.verification, b"request!", signature)
    assert not sig_verify(other.verification, b"request", signature)
    assert not sig_verify(b"short", b"request", signature)


def test_primitive_counts(tally: OperationTally, rng: random.Random) -> None:
    """
    each primitive call adds one operation of its own term
    """
    key = SymKey(rng.randbytes(32))
    nonce = rng.randbytes(NONCE_LENGTH)

    hash_bytes(b"x")
    hmac_tag(MacKey(key.raw), b"x")
    ciphertext = sym_encrypt(key, b"x", nonce)
    sym_decrypt(key, nonce, ciphertext)
    alice, bob = ecdh_keygen(rng), ecdh_keygen(rng)
    ecdh_shared(alice, bob.public, b"link")

    totals = tally.totals()
    assert totals[Term.SHA] == 1
    assert totals[Term.MAC] == 1
    assert totals[Term.ENC] == 2
    assert totals[Term.ECDH] == 1
    assert totals[Term.KEYGEN] == 2


def flipped_bit(data: bytes, bit: int) -> bytes:
    """data with one bit inverted, bit 0 is the high bit of the first byte"""
    mutated = bytearray(data)
    mutated[bit // 8] ^= 0x80 >> (bit % 8)
    return bytes(mutated)


def test_hmac_bit_flips(rng: random.Random) -> None:
    """
    each of the 1000 single bit changes to the data, and each change to the
    tag, fails verification; different keys give different tags
    """
    key = MacKey(rng.randbytes(32))
    data = rng.randbytes(125)
    tag = hmac_tag(key, data)

    for bit in range(len(data) * 8):
        assert not hmac_verify(key, flipped_bit(data, bit), tag)
    for bit in range(len(tag.raw) * 8):
        assert not hmac_verify(key, data, flipped_bit(tag.raw, bit))
    assert hmac_verify(key, data, tag)

    tags = {hmac_tag(MacKey(rng.randbytes(32)), data).raw for _ in range(100)}
    assert len(tags) == 100


def test_aead_mutations(rng: random.Random) -> None:
    """
    1000 random changes to the ciphertext or its associated data all raise
    AuthenticationFailure
    """
    key = SymKey(rng.randbytes(32))
    nonce = rng.randbytes(NONCE_LENGTH)
    aad = b"wnc->csp window=3"
    ciphertext = sym_encrypt(key, rng.randbytes(64), nonce, aad)

    for trial in range(1000):
        mutated_ciphertext, mutated_aad = ciphertext, aad
        kind = trial % 4
        if kind == 0:
            mutated_ciphertext = flipped_bit(ciphertext, rng.randrange(len(ciphertext) * 8))
        elif kind == 1:
            mutated_ciphertext = ciphertext[: rng.randrange(len(ciphertext))]
        elif kind == 2:
            mutated_ciphertext = ciphertext + rng.randbytes(rng.randint(1, 8))
        else:
            mutated_aad = flipped_bit(aad, rng.randrange(len(aad) * 8))

        with pytest.raises(AuthenticationFailure):
            sym_decrypt(key, nonce, mutated_ciphertext, mutated_aad)


def test_ecdh_symmetry(rng: random.Random) -> None:
    """
    for 100 key pairs both sides derive the same key, and no two pairs share one
    """
    shared: Set[bytes] = set()
    for _ in range(100):
        alice, bob = ecdh_keygen(rng), ecdh_keygen(rng)
        key = ecdh_shared(alice, bob.public, b"link")
        assert ecdh_shared(bob, alice.public, b"link") == key
        shared.add(key.raw)

    assert len(shared) == 100
