"""
Post-run audits: the plaintext leak detector and the curious cloud provider.
"""

import random
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Set, Tuple

from ztac_py.crypto_core.error import CryptoCoreException
from ztac_py.crypto_core.pke import pke_open
from ztac_py.pairing.access_tree import all_of, leaf, tree_satisfies
from ztac_py.pairing.error import PairingSchemeException, UnknownAttribute
from ztac_py.pairing.group import encode_g1
from ztac_py.pairing.kp_abe import AbeCiphertext, abe_decrypt, abe_keygen
from ztac_py.protocol.csp import Csp
from ztac_py.protocol.messages import UploadRecord
from ztac_py.protocol.sensor import Sensor
from ztac_py.protocol.user import User
from ztac_py.protocol.wnc import Wnc, identity_key_label
from ztac_py.runtime_utils.op_tally import suspended


@dataclass(frozen=True)
class Leak:
    """a secret found somewhere it must never be"""

    holder: str
    kind: str
    label: str

    def __str__(self) -> str:
        return f"{self.kind} {self.label} found in {self.holder}"


@dataclass(frozen=True)
class Secret:
    """a plaintext reading or chain key the audit looks for"""

    kind: str
    label: str
    value: bytes
    owner: str = ""


def chain_secrets(wnc: Wnc) -> List[Secret]:
    """every chain key h_0..h_n of every sensor, from the coordinator's copy"""
    secrets = []
    for sensor, state in sorted(wnc.sensors.items()):
        if state.chain is None:
            continue
        for index, key in enumerate(state.chain.keys):
            secrets.append(Secret("chain_key", f"{sensor}/h{index}", key.raw, owner=sensor))
    return secrets


def scan(holder: str, blobs: Iterable[bytes], secrets: Iterable[Secret]) -> List[Leak]:
    """leaks of secrets inside any of blobs"""
    wanted = list(secrets)
    found: Dict[Tuple[str, str], Leak] = {}
    for blob in blobs:
        for secret in wanted:
            if secret.value and secret.value in blob:
                found.setdefault((secret.kind, secret.label), Leak(holder, secret.kind, secret.label))
    return list(found.values())


def authorized_windows(user: User, records: Iterable[UploadRecord]) -> Set[int]:
    """windows whose record both the policy and the receiver set grant to user"""
    if user.abe_key is None:
        return set()
    return {
        record.window
        for record in records
        if user.name in record.receivers and tree_satisfies(user.abe_key.policy, set(record.attributes))
    }


def find_leaks(
    wnc: Wnc,
    csp: Csp,
    users: Iterable[User],
    plaintexts: Mapping[Tuple[str, int], bytes],
    wire: Iterable[bytes],
    sensors: Iterable[Sensor] = (),
) -> List[Leak]:
    """
    scan the cloud provider, every user, every sensor and the bus transcript.
    the cloud provider and the wire may hold no plaintext and no chain key; a
    user may hold only plaintexts of windows it is authorized for; a sensor
    may hold only its own chain, readings are gone once sealed
    """
    chain = chain_secrets(wnc)
    readings = [
        Secret("plaintext", f"{sensor}@{window}", value, owner=sensor) for (sensor, window), value in plaintexts.items()
    ]

    leaks = scan(csp.name, csp.state_blobs(), chain + readings)
    leaks.extend(scan("wire", wire, chain + readings))
    for user in users:
        allowed = authorized_windows(user, csp.records)
        forbidden = [secret for secret, (_, window) in zip(readings, plaintexts) if window not in allowed]
        leaks.extend(scan(user.name, user.state_blobs(), chain + forbidden))
    for sensor in sensors:
        foreign = [secret for secret in chain if secret.owner != sensor.name]
        leaks.extend(scan(sensor.name, sensor.state_blobs(), foreign + readings))
    return leaks


@dataclass(frozen=True)
class CuriousAttempt:
    """what an honest-but-curious cloud provider manages with its own state"""

    records: int
    abe_layer_opened: bool
    identity_keys_opened: int
    identity_keygen_refused: bool
    plaintext_recovered: bool
    holds_ibbe_master: bool

    @property
    def contained(self) -> bool:
        """did the provider learn nothing it should not?"""
        return not self.plaintext_recovered and self.identity_keys_opened == 0 and not self.holds_ibbe_master


def curious_csp_attempt(
    csp: Csp,
    wnc: Wnc,
    users: Iterable[User],
    plaintexts: Mapping[Tuple[str, int], bytes],
    identity_labels: Iterable[str],
    rng: random.Random,
) -> CuriousAttempt:
    """
    try to read stored data from the provider's state alone: issue itself a
    KP-ABE key for the first stored record, open the sealed identity keys with
    its own key, look for any user's identity key in its state and issue a key
    over an identity label. runs outside of any tally
    """
    with suspended():
        abe_opened = False
        if csp.abe_master is not None and csp.records:
            record = csp.records[0]
            policy = all_of(*(leaf(attribute) for attribute in record.attributes))
            try:
                key = abe_keygen(policy, csp.abe_master, rng)
                abe_decrypt(AbeCiphertext.from_bytes(record.abe_ciphertext), key)
                abe_opened = True
            except (PairingSchemeException, CryptoCoreException):
                abe_opened = False

        opened = 0
        for user, sealed in sorted(csp.sealed_keys.items()):
            try:
                pke_open(csp.agreement, sealed, identity_key_label(user))
                opened += 1
            except CryptoCoreException:
                pass

        refused = True
        if csp.abe_master is not None:
            for label in identity_labels:
                try:
                    abe_keygen(leaf(label), csp.abe_master, rng)
                    refused = False
                except UnknownAttribute:
                    pass

        blobs = list(csp.state_blobs())
        holds_master = False
        if wnc.access is not None:
            master = wnc.access.ibbe_master.gamma.to_bytes(32, "big")
            holds_master = any(master in blob for blob in blobs)
        identity_keys = [encode_g1(user.identity_key.sk) for user in users if user.identity_key is not None]
        if any(secret in blob for secret in identity_keys for blob in blobs):
            opened = max(opened, 1)
        recovered = bool(find_leaks(wnc, csp, [], plaintexts, []))

    return CuriousAttempt(
        records=len(csp.records),
        abe_layer_opened=abe_opened,
        identity_keys_opened=opened,
        identity_keygen_refused=refused,
        plaintext_recovered=recovered,
        holds_ibbe_master=holds_master,
    )
