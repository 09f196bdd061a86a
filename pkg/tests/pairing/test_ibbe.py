# pylint: disable=[W0621]
# disable these warnings that are triggered by pylint not understanding how test
# fixtures work. https://stackoverflow.com/q/59664605

import itertools
import random
from typing import Dict, Tuple

import pytest

from ztac_py.pairing.error import EmptySet, IdTooLong, InvalidParams, KeyMismatch, NotAReceiver, TooManyReceivers
from ztac_py.pairing.ibbe import (
    HEADER_LENGTH,
    BroadcastHeader,
    IbbeMasterKey,
    IbbeParams,
    IbbePublicKey,
    IdentityKey,
    ibbe_dec,
    ibbe_enc,
    ibbe_key_check,
    ibbe_key_ext,
    ibbe_setup,
)
from ztac_py.runtime_utils.op_tally import Term, recording

IDENTITIES = ("user-1", "user-2", "user-3", "user-4", "user-5")

SchemeKeys = Tuple[IbbePublicKey, IbbeMasterKey]


@pytest.fixture(scope="module")
def scheme() -> SchemeKeys:
    """one setup for receiver sets of up to four identities"""
    return ibbe_setup(IbbeParams(max_receivers=4), random.Random("ibbe"))


@pytest.fixture(scope="module")
def identity_keys(scheme: SchemeKeys) -> Dict[str, IdentityKey]:
    """an extracted key for every test identity"""
    public, master = scheme
    return {identity: ibbe_key_ext(public, master, identity) for identity in IDENTITIES}


def test_key_check(scheme: SchemeKeys, identity_keys: Dict[str, IdentityKey]) -> None:
    """
    extracted keys verify for their identity and nothing else
    """
    public, _ = scheme
    key = identity_keys["user-1"]

    assert ibbe_key_check(public, key)
    assert not ibbe_key_check(public, IdentityKey("user-2", key.sk))
    assert IdentityKey.from_bytes(key.to_bytes()).to_bytes() == key.to_bytes()


def test_membership(scheme: SchemeKeys, identity_keys: Dict[str, IdentityKey]) -> None:
    """
    for receiver sets over the first four identities, every member recovers
    the broadcast key and every outsider is refused
    """
    public, _ = scheme
    rng = random.Random("ibbe-membership")

    for receivers in [("user-1",), ("user-2", "user-4"), ("user-1", "user-2", "user-3", "user-4")]:
        header, key = ibbe_enc(receivers, public, rng)
        assert len(header.to_bytes()) == HEADER_LENGTH
        for identity in IDENTITIES:
            if identity in receivers:
                assert ibbe_dec(receivers, identity, identity_keys[identity], header, public) == key
            else:
                with pytest.raises(NotAReceiver):
                    ibbe_dec(receivers, identity, identity_keys[identity], header, public)


def test_every_receiver_set(scheme: SchemeKeys, identity_keys: Dict[str, IdentityKey]) -> None:
    """
    every non-empty subset of four identities: members recover the key,
    the other identities are refused
    """
    public, _ = scheme
    rng = random.Random("ibbe-subsets")
    population = IDENTITIES[:4]

    subsets = [
        receivers for size in range(1, len(population) + 1) for receivers in itertools.combinations(population, size)
    ]
    assert len(subsets) == 15

    for receivers in subsets:
        header, key = ibbe_enc(receivers, public, rng)
        for identity in population:
            if identity in receivers:
                assert ibbe_dec(receivers, identity, identity_keys[identity], header, public) == key
            else:
                with pytest.raises(NotAReceiver):
                    ibbe_dec(receivers, identity, identity_keys[identity], header, public)


def test_fresh_keys(scheme: SchemeKeys) -> None:
    """
    repeated encryptions to the same receiver set yield distinct keys and headers
    """
    public, _ = scheme
    rng = random.Random("ibbe-fresh")
    receivers = ("user-1", "user-3")

    keys, headers = set(), set()
    for _ in range(100):
        header, key = ibbe_enc(receivers, public, rng)
        keys.add(key.raw)
        headers.add(header.to_bytes())
    assert len(keys) == 100
    assert len(headers) == 100


def test_pairs(scheme: SchemeKeys, identity_keys: Dict[str, IdentityKey]) -> None:
    """
    each two member set yields a distinct key that both members agree on
    """
    public, _ = scheme
    rng = random.Random("ibbe-pairs")

    seen = set()
    for receivers in itertools.combinations(IDENTITIES[:3], 2):
        header, key = ibbe_enc(receivers, public, rng)
        decoded = BroadcastHeader.from_bytes(header.to_bytes())
        for identity in receivers:
            assert ibbe_dec(receivers, identity, identity_keys[identity], decoded, public) == key
        seen.add(key.raw)
    assert len(seen) == 3


def test_wrong_keys(scheme: SchemeKeys, identity_keys: Dict[str, IdentityKey]) -> None:
    """
    a key for another identity or from another setup is a mismatch
    """
    public, _ = scheme
    rng = random.Random("ibbe-wrong-keys")
    receivers = ("user-1", "user-2")
    header, _ = ibbe_enc(receivers, public, rng)

    with pytest.raises(KeyMismatch):
        ibbe_dec(receivers, "user-1", identity_keys["user-2"], header, public)

    other_public, other_master = ibbe_setup(IbbeParams(max_receivers=2), rng)
    foreign = ibbe_key_ext(other_public, other_master, "user-1")
    with pytest.raises(KeyMismatch):
        ibbe_dec(receivers, "user-1", foreign, header, public)


def test_bounds(scheme: SchemeKeys) -> None:
    """
    empty, oversized and over long receiver sets are refused
    """
    public, master = scheme
    rng = random.Random("ibbe-bounds")

    with pytest.raises(EmptySet):
        ibbe_enc((), public, rng)
    with pytest.raises(TooManyReceivers):
        ibbe_enc(IDENTITIES, public, rng)
    with pytest.raises(IdTooLong):
        ibbe_key_ext(public, master, "u" * 33)
    with pytest.raises(InvalidParams):
        ibbe_setup(IbbeParams(max_receivers=0), rng)

    assert IbbePublicKey.from_bytes(public.to_bytes()).to_bytes() == public.to_bytes()


def test_operation_counts(scheme: SchemeKeys, identity_keys: Dict[str, IdentityKey]) -> None:
    """
    decapsulation counts once even though it checks the identity key
    """
    public, _ = scheme
    rng = random.Random("ibbe-counts")

    with recording() as tally:
        header, _ = ibbe_enc(("user-1",), public, rng)
        ibbe_dec(("user-1",), "user-1", identity_keys["user-1"], header, public)

    assert tally.totals() == {Term.IBBE: 2}
