# pylint: disable=[W0621]
# disable these warnings that are triggered by pylint not understanding how test
# fixtures work. https://stackoverflow.com/q/59664605

import itertools
import random
from typing import Dict, Tuple

import pytest

from ztac_py.pairing.access_tree import AccessNode, all_of, any_of, leaf, parse_policy, threshold_of, tree_satisfies
from ztac_py.pairing.error import EmptyAttributeSet, EmptyUniverse, PolicyNotSatisfied, UnknownAttribute
from ztac_py.pairing.kp_abe import (
    DEFAULT_SECURITY_PARAMETER,
    AbeCiphertext,
    AbeDecryptionKey,
    AbeMasterKey,
    AbePublicKey,
    AttributeUniverse,
    abe_decrypt,
    abe_encrypt,
    abe_keygen,
    abe_rerandomize,
    abe_setup,
)
from ztac_py.runtime_utils.op_tally import Term, recording

UNIVERSE = ("vital", "ecg", "motion", "temperature")

POLICIES: Dict[str, AccessNode] = {
    "and2": all_of("vital", "ecg"),
    "or2": any_of("motion", "temperature"),
    "2of3": threshold_of(2, "vital", "ecg", "motion"),
    "and_or_leaf": all_of(any_of("ecg", "motion"), leaf("temperature")),
}

SchemeKeys = Tuple[AbePublicKey, AbeMasterKey]


@pytest.fixture(scope="module")
def scheme() -> SchemeKeys:
    """pairing work is slow, share one setup across the module"""
    return abe_setup(DEFAULT_SECURITY_PARAMETER, AttributeUniverse.of(UNIVERSE), random.Random("kp-abe"))


@pytest.fixture(scope="module")
def keys(scheme: SchemeKeys) -> Dict[str, AbeDecryptionKey]:
    """one decryption key per test policy"""
    rng = random.Random("kp-abe-keys")
    return {name: abe_keygen(policy, scheme[1], rng) for name, policy in POLICIES.items()}


def test_decryption_oracle(scheme: SchemeKeys, keys: Dict[str, AbeDecryptionKey]) -> None:
    """
    for every non-empty attribute subset and every policy, decryption
    succeeds exactly when the subset satisfies the policy
    """
    public, _ = scheme
    rng = random.Random("kp-abe-oracle")

    successes = 0
    cases = 0
    for size in range(1, len(UNIVERSE) + 1):
        for subset in itertools.combinations(UNIVERSE, size):
            message = f"reading under {','.join(subset)}".encode()
            ciphertext = abe_encrypt(message, subset, public, rng)
            for name, policy in POLICIES.items():
                cases += 1
                if tree_satisfies(policy, set(subset)):
                    assert abe_decrypt(ciphertext, keys[name]) == message
                    successes += 1
                else:
                    with pytest.raises(PolicyNotSatisfied):
                        abe_decrypt(ciphertext, keys[name])

    assert cases == 60
    assert 20 <= successes <= 40


def test_ciphertext_encoding(scheme: SchemeKeys, keys: Dict[str, AbeDecryptionKey]) -> None:
    """
    a decoded ciphertext still decrypts, a modified payload does not
    """
    public, _ = scheme
    ciphertext = abe_encrypt(b"window 3", ("vital", "ecg"), public, random.Random("kp-abe-encoding"))

    decoded = AbeCiphertext.from_bytes(ciphertext.to_bytes())
    assert decoded.attributes == ("ecg", "vital")
    assert abe_decrypt(decoded, keys["and2"]) == b"window 3"

    tampered = AbeCiphertext(
        decoded.attributes,
        decoded.e_mask,
        decoded.e_base,
        decoded.components,
        bytes([decoded.payload[0] ^ 1]) + decoded.payload[1:],
    )
    with pytest.raises(PolicyNotSatisfied):
        abe_decrypt(tampered, keys["and2"])


def test_rerandomize(scheme: SchemeKeys, keys: Dict[str, AbeDecryptionKey]) -> None:
    """
    a rerandomized key differs from the original but decrypts the same data
    """
    public, _ = scheme
    rng = random.Random("kp-abe-rerandomize")
    original = keys["or2"]
    fresh = abe_rerandomize(original, public, rng)

    assert fresh.policy == original.policy
    assert fresh.to_bytes() != original.to_bytes()
    assert AbeDecryptionKey.from_bytes(fresh.to_bytes()).to_bytes() == fresh.to_bytes()

    ciphertext = abe_encrypt(b"motion alert", ("motion",), public, rng)
    assert abe_decrypt(ciphertext, fresh) == b"motion alert"


def test_restricted_master(scheme: SchemeKeys) -> None:
    """
    a master key restricted to part of the universe can not issue keys over
    the rest, and encryption outside the universe is refused
    """
    public, master = scheme
    rng = random.Random("kp-abe-restrict")
    restricted = master.restrict(["vital", "ecg"])

    abe_keygen(parse_policy("and(vital, ecg)"), restricted, rng)
    with pytest.raises(UnknownAttribute):
        abe_keygen(parse_policy("or(vital, motion)"), restricted, rng)
    with pytest.raises(UnknownAttribute):
        public.restrict(["vital", "ward-7"])

    with pytest.raises(UnknownAttribute):
        abe_encrypt(b"x", ("ward-7",), public, rng)
    with pytest.raises(EmptyAttributeSet):
        abe_encrypt(b"x", (), public, rng)
    with pytest.raises(EmptyUniverse):
        abe_setup(DEFAULT_SECURITY_PARAMETER, AttributeUniverse.of([]), rng)


def test_operation_counts(scheme: SchemeKeys, keys: Dict[str, AbeDecryptionKey]) -> None:
    """
    each scheme call is one operation of its own term, the inner AEAD work is
    not counted separately
    """
    public, _ = scheme
    rng = random.Random("kp-abe-counts")

    with recording() as tally:
        ciphertext = abe_encrypt(b"x", ("vital", "ecg"), public, rng)
        abe_decrypt(ciphertext, keys["and2"])

    assert tally.totals() == {Term.ABE_ENC: 1, Term.ABE_DEC: 1}


def random_policy(rng: random.Random, depth: int = 0) -> AccessNode:
    """threshold tree of depth at most two over the test universe"""
    if depth == 2 or (depth > 0 and rng.random() < 0.5):
        return leaf(rng.choice(UNIVERSE))
    children = [random_policy(rng, depth + 1) for _ in range(rng.randint(2, 3))]
    return threshold_of(rng.randint(1, len(children)), *children)


def test_randomized_decryption(scheme: SchemeKeys) -> None:
    """
    over 500 random (policy, attribute set) pairs, decryption succeeds exactly
    when the attribute set satisfies the policy
    """
    public, master = scheme
    rng = random.Random("kp-abe-randomized")

    subsets = [subset for size in range(1, len(UNIVERSE) + 1) for subset in itertools.combinations(UNIVERSE, size)]
    ciphertexts = {subset: abe_encrypt(",".join(subset).encode(), subset, public, rng) for subset in subsets}

    trials = 0
    satisfied = 0
    for _ in range(25):
        policy = random_policy(rng)
        key = abe_keygen(policy, master, rng)
        for subset in rng.sample(subsets, 15) + rng.sample(subsets, 5):
            trials += 1
            if tree_satisfies(policy, set(subset)):
                satisfied += 1
                assert abe_decrypt(ciphertexts[subset], key) == ",".join(subset).encode()
            else:
                with pytest.raises(PolicyNotSatisfied):
                    abe_decrypt(ciphertexts[subset], key)

    assert trials == 500
    assert 0 < satisfied < trials


def test_collusion(scheme: SchemeKeys) -> None:
    """
    components of two keys that are each refused can not be combined into a
    key that opens the ciphertext
    """
    public, master = scheme
    rng = random.Random("kp-abe-collusion")
    ciphertext = abe_encrypt(b"ecg trace", ("vital", "ecg"), public, rng)

    first = abe_keygen(all_of("vital", "motion"), master, rng)
    second = abe_keygen(all_of("temperature", "ecg"), master, rng)
    for key in (first, second):
        with pytest.raises(PolicyNotSatisfied):
            abe_decrypt(ciphertext, key)

    merged = AbeDecryptionKey(all_of("vital", "ecg"), (first.components[0], second.components[1]))
    assert [component.attribute for component in merged.components] == ["vital", "ecg"]
    with pytest.raises(PolicyNotSatisfied):
        abe_decrypt(ciphertext, merged)

    swapped = AbeDecryptionKey(all_of("vital", "ecg"), (second.components[1], first.components[0]))
    with pytest.raises(PolicyNotSatisfied):
        abe_decrypt(ciphertext, swapped)


def test_identities_stay_out_of_ciphertexts() -> None:
    """
    with identity labels in the universe, a ciphertext over data attributes
    names only those attributes and carries no identity string
    """
    identities = ("alice-ward-3", "bob-ward-7")
    rng = random.Random("kp-abe-identities")
    public, _ = abe_setup(DEFAULT_SECURITY_PARAMETER, AttributeUniverse.of(identities + UNIVERSE[:2]), rng)

    ciphertext = abe_encrypt(b"spo2=97", ("vital", "ecg"), public, rng)
    encoded = ciphertext.to_bytes()

    assert ciphertext.attributes == ("ecg", "vital")
    assert set(ciphertext.components) == {"ecg", "vital"}
    for identity in identities:
        assert identity.encode() not in encoded
