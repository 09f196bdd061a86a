# use annotations to type hint a method with the type of the enclosing class
from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import Collection, Dict, Iterator, List, Optional, Tuple

from ztac_py.crypto_core.certificates import Certificate, RootAuthority, verify_certified
from ztac_py.crypto_core.error import CryptoCoreException
from ztac_py.crypto_core.pke import pke_open
from ztac_py.crypto_core.primitives import SymKey, sign, signing_keygen, unseal
from ztac_py.pairing.access_tree import tree_satisfies
from ztac_py.pairing.error import NotAReceiver, PairingSchemeException, PolicyNotSatisfied
from ztac_py.pairing.ibbe import BroadcastHeader, IdentityKey, ibbe_dec, ibbe_key_check
from ztac_py.pairing.kp_abe import AbeCiphertext, AbeDecryptionKey, abe_decrypt, abe_rerandomize

from .csp import REGISTRATION_LABEL
from .entity import Directory, ProtocolEntity, Role
from .error import AccessDenied, BothLayersDenied, DenialReason, IntegrityFailure, RejectReason
from .messages import (
    AccessRequest,
    AccessResponse,
    RegisterRequest,
    RegisterResponse,
    RegistrationBundle,
    UploadRecord,
    WireMessage,
    decode_key_entries,
    decode_message,
    record_aad,
    sensor_aad,
)
from .transport import HandleResult, Outgoing
from .wnc import identity_key_label


@dataclass(frozen=True)
class Reading:
    """one recovered sensor plaintext"""

    sensor: str
    epoch: int
    window: int
    plaintext: bytes


class User(ProtocolEntity):
    """
    Data consumer. Holds a certificate, the KP-ABE key D for its predefined
    policy and the IBBE identity key SK_Id; a record opens only with both.
    """

    role = Role.USER

    def __init__(self, name: str, rng: random.Random, directory: Directory, authority: RootAuthority, csp: str) -> None:
        super().__init__(name, rng, directory)
        self.csp = csp
        with self.acting():
            self.signing = signing_keygen(rng)
        self.certificate = authority.issue(name, self.signing.verification, self.agreement.public)
        directory.certify(self.certificate)

        self.abe_key: Optional[AbeDecryptionKey] = None
        self.identity_key: Optional[IdentityKey] = None
        self.requests = 0
        self.readings: List[Reading] = []
        self.denials: List[DenialReason] = []
        self.failures: List[Tuple[int, Exception]] = []

    @property
    def registered(self) -> bool:
        """does the user hold both D and SK_Id?"""
        return self.abe_key is not None and self.identity_key is not None

    def registration_request(self) -> Outgoing:
        """own id and certificate, signed with the long-term key"""
        unsigned = RegisterRequest(self.name, self.csp, self.certificate.to_bytes())
        with self.acting():
            request = replace(unsigned, signature=sign(self.signing, unsigned.authenticated_bytes()))
        return Outgoing(self.csp, request.encode())

    def access_request(self, attributes: Collection[str]) -> Outgoing:
        """signed request for every stored record whose attribute set contains attributes"""
        self.requests += 1
        unsigned = AccessRequest(
            self.name, self.csp, self.certificate.to_bytes(), tuple(sorted(set(attributes))), self.requests
        )
        with self.acting():
            request = replace(unsigned, signature=sign(self.signing, unsigned.authenticated_bytes()))
        return Outgoing(self.csp, request.encode())

    def _handle_message(self, message: WireMessage) -> HandleResult:
        if message.sender != self.csp:
            return HandleResult.reject(RejectReason.WRONG_SENDER, f"users only talk to {self.csp}")
        if isinstance(message, RegisterResponse):
            return self._on_register_response(message)
        if isinstance(message, AccessResponse):
            return self._on_access_response(message)
        return HandleResult.reject(RejectReason.UNEXPECTED, f"{message.MESSAGE_TYPE} is not handled by users")

    def _on_register_response(self, message: RegisterResponse) -> HandleResult:
        try:
            certificate = Certificate.from_bytes(message.certificate)
        except CryptoCoreException as exception:
            return HandleResult.reject(RejectReason.BAD_CERTIFICATE, str(exception))
        if certificate.subject != self.csp or not verify_certified(
            certificate, self.directory.root_key, message.authenticated_bytes(), message.signature
        ):
            return HandleResult.reject(RejectReason.SIGNATURE_FAILURE, "registration response disregarded")

        ibbe_public = self.directory.ibbe_public
        abe_public = self.directory.abe_public
        if ibbe_public is None or abe_public is None:
            return HandleResult.reject(RejectReason.UNEXPECTED, "scheme public keys are not published")
        try:
            bundle = RegistrationBundle.from_bytes(pke_open(self.agreement, message.sealed_bundle, REGISTRATION_LABEL))
            sealed_identity = bundle.sealed_identity_key
            identity_key = IdentityKey.from_bytes(
                pke_open(self.agreement, sealed_identity, identity_key_label(self.name))
            )
            abe_key = AbeDecryptionKey.from_bytes(bundle.abe_key)
        except (CryptoCoreException, PairingSchemeException) as exception:
            return HandleResult.reject(RejectReason.AUTH_FAILURE, str(exception))
        if identity_key.identity != self.name or not ibbe_key_check(ibbe_public, identity_key):
            return HandleResult.reject(RejectReason.INTEGRITY_FAILURE, "identity key does not check")

        try:
            self.abe_key = abe_rerandomize(abe_key, abe_public, self.rng)
        except PairingSchemeException as exception:
            return HandleResult.reject(RejectReason.INTEGRITY_FAILURE, str(exception))
        self.identity_key = identity_key
        return HandleResult.accept()

    def _on_access_response(self, message: AccessResponse) -> HandleResult:
        if not message.granted:
            if message.records:
                return HandleResult.reject(RejectReason.MALFORMED, "denial carries records")
            try:
                denial = DenialReason[message.reason]
            except KeyError:
                return HandleResult.reject(RejectReason.MALFORMED, f"unknown denial {message.reason!r}")
            self.denials.append(denial)
            return HandleResult.accept(detail=f"denied: {denial}")
        if message.reason:
            return HandleResult.reject(RejectReason.MALFORMED, "grant carries a denial reason")

        readings: List[Reading] = []
        failures: List[Tuple[int, Exception]] = []
        for position, data in enumerate(message.records):
            try:
                record = decode_message(data)
                if not isinstance(record, UploadRecord) or record.tag:
                    raise IntegrityFailure("response item is not a stored record")
                readings.extend(self.open_record(record))
            except (CryptoCoreException, PairingSchemeException, IntegrityFailure) as exception:
                failures.append((position, exception))

        self.readings.extend(readings)
        self.failures.extend(failures)
        if failures:
            first = failures[0][1]
            return HandleResult.reject(
                RejectReason.ACCESS_FAILED, f"{len(failures)} of {len(message.records)} records: {type(first).__name__}"
            )
        return HandleResult.accept(detail=f"{len(readings)} readings")

    def open_record(self, record: UploadRecord) -> List[Reading]:
        """
        recover every sensor plaintext of record. the attribute layer and the
        receiver set layer are checked independently; failing both raises
        BothLayersDenied, failing one raises that layer's error
        """
        ibbe_public = self.directory.ibbe_public
        if self.abe_key is None or self.identity_key is None or ibbe_public is None:
            raise AccessDenied(DenialReason.NOT_REGISTERED)

        policy_error: Optional[Exception] = None
        if not tree_satisfies(self.abe_key.policy, set(record.attributes)):
            policy_error = PolicyNotSatisfied(f"attributes {list(record.attributes)} do not satisfy the key policy")
        receiver_error: Optional[Exception] = None
        if self.name not in record.receivers:
            receiver_error = NotAReceiver(f"{self.name!r} is not in the receiver set")
        if policy_error is not None and receiver_error is not None:
            raise BothLayersDenied(f"{policy_error}; {receiver_error}")
        if policy_error is not None:
            raise policy_error
        if receiver_error is not None:
            raise receiver_error

        with self.acting():
            ciphertext = AbeCiphertext.from_bytes(record.abe_ciphertext)
            if ciphertext.attributes != record.attributes:
                raise IntegrityFailure("attribute set of the record and its ciphertext differ")
            try:
                masked = abe_decrypt(ciphertext, self.abe_key)
            except PolicyNotSatisfied as exception:
                raise IntegrityFailure("KP-ABE ciphertext does not decrypt") from exception

            header = BroadcastHeader.from_bytes(record.header)
            broadcast_key = ibbe_dec(record.receivers, self.name, self.identity_key, header, ibbe_public)
            entries = decode_key_entries(unseal(broadcast_key, masked, record_aad(record)))

            keys: Dict[Tuple[str, int], bytes] = {(entry.sensor, entry.epoch): entry.key for entry in entries}
            readings = []
            for item in record.sensor_ciphertexts:
                key = keys.get((item.sensor, item.epoch))
                if key is None:
                    raise IntegrityFailure(f"no chain key for {item.sensor} epoch {item.epoch}")
                plaintext = unseal(SymKey(key), item.ciphertext, sensor_aad(item.sensor, item.epoch, record.window))
                readings.append(Reading(item.sensor, item.epoch, record.window, plaintext))
        return readings

    def state_blobs(self) -> Iterator[bytes]:
        yield from super().state_blobs()
        if self.abe_key is not None:
            yield self.abe_key.to_bytes()
        if self.identity_key is not None:
            yield self.identity_key.to_bytes()
        yield from (reading.plaintext for reading in self.readings)
