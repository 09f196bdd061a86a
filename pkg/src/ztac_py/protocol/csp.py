# use annotations to type hint a method with the type of the enclosing class
from __future__ import annotations

import logging
import random
from dataclasses import replace
from typing import Dict, Iterator, List, Optional, Set

from ztac_py.crypto_core.certificates import Certificate, RootAuthority, verify_certified
from ztac_py.crypto_core.error import CryptoCoreException
from ztac_py.crypto_core.pke import pke_seal
from ztac_py.crypto_core.primitives import sign, signing_keygen, unseal
from ztac_py.pairing.access_tree import AccessNode, parse_policy
from ztac_py.pairing.error import PairingSchemeException
from ztac_py.pairing.kp_abe import AbeMasterKey, abe_keygen
from ztac_py.trust_ledger.dump import LedgerEntry, record_entry
from ztac_py.trust_ledger.evaluator import (
    DEFAULT_EVALUATOR,
    CspEvent,
    CspEventKind,
    Decision,
    EntityTrustRecord,
    TrustEvaluator,
    csp_evaluate,
    csp_record_event,
)
from ztac_py.trust_ledger.scoring import DEFAULT_THRESHOLD

from .entity import Directory, ProtocolEntity, Role
from .error import DenialReason, RejectReason
from .messages import (
    AccessRequest,
    AccessResponse,
    Escrow,
    RegisterRequest,
    RegisterResponse,
    RegistrationBundle,
    UploadRecord,
    WireMessage,
)
from .transport import HandleResult, Outgoing
from .wnc import ESCROW_PURPOSE, escrow_aad

REGISTRATION_LABEL = b"ztac-registration"


class Csp(ProtocolEntity):
    """
    Honest-but-curious cloud service provider. Holds PK_2 and MK_2, the
    sealed identity keys per user, the user list, the stored records and a
    trust record per user and coordinator. Never holds an identity key or a
    chain key in the clear.
    """

    role = Role.CSP

    def __init__(
        self,
        name: str,
        rng: random.Random,
        directory: Directory,
        authority: RootAuthority,
        wnc: str,
        threshold: float = DEFAULT_THRESHOLD,
        evaluator: TrustEvaluator = DEFAULT_EVALUATOR,
    ) -> None:
        super().__init__(name, rng, directory)
        self.wnc = wnc
        self.threshold = threshold
        self.evaluator = evaluator

        with self.acting():
            self.signing = signing_keygen(rng)
        self.certificate = authority.issue(name, self.signing.verification, self.agreement.public)
        directory.certify(self.certificate)

        self.abe_public: Optional[bytes] = None
        self.abe_master: Optional[AbeMasterKey] = None
        self.sealed_keys: Dict[str, bytes] = {}
        self.policies: Dict[str, AccessNode] = {}
        self.user_list: Set[str] = set()
        self.records: List[UploadRecord] = []
        self.trust: Dict[str, EntityTrustRecord] = {}

    @property
    def escrowed(self) -> bool:
        """has a valid escrow message been stored?"""
        return self.abe_master is not None

    def trust_record(self, entity: str) -> EntityTrustRecord:
        """trust record of a user or coordinator, created at full score"""
        if entity not in self.trust:
            self.trust[entity] = EntityTrustRecord(entity_id=entity, threshold=self.threshold)
        return self.trust[entity]

    def record_event(self, entity: str, kind: CspEventKind, severity: float = 1.0, timestamp: int = 0) -> None:
        """score an event against entity"""
        record = csp_record_event(self.trust_record(entity), CspEvent(kind, severity, timestamp), self.evaluator)
        self.trust[entity] = record
        logging.info("%s recorded %s against %s: score=%.2f", self.name, kind, entity, record.score)

    def report_abuse(self, user: str, severity: float, timestamp: int = 0) -> None:
        """reported abuse by a user"""
        self.record_event(user, CspEventKind.REPORTED_ABUSE, severity, timestamp)

    def granted(self, entity: str) -> bool:
        """does the trust evaluator currently grant entity?"""
        return csp_evaluate(self.trust_record(entity), self.evaluator) == Decision.GRANT

    def ledger(self, window: int) -> List[LedgerEntry]:
        """snapshot of every trust record"""
        return [record_entry(window, self.name, record) for _, record in sorted(self.trust.items())]

    def _on_malformed(self, sender: str, payload: bytes, exception: Exception) -> HandleResult:
        if sender == self.wnc or sender in self.user_list:
            self.record_event(sender, CspEventKind.MALFORMED_REQUEST)
        return super()._on_malformed(sender, payload, exception)

    def _handle_message(self, message: WireMessage) -> HandleResult:
        if isinstance(message, Escrow):
            return self.receive_escrow(message)
        if isinstance(message, RegisterRequest):
            return self.register(message)
        if isinstance(message, UploadRecord):
            return self.validate_upload(message)
        if isinstance(message, AccessRequest):
            return self.access(message)
        return HandleResult.reject(RejectReason.UNEXPECTED, f"{message.MESSAGE_TYPE} is not handled by the CSP")

    def receive_escrow(self, message: Escrow) -> HandleResult:
        """verify h(*) over the escrow message, then store PK_2, MK_2, sealed keys and policies"""
        if message.sender != self.wnc or not self.mac_valid(message, message.tag):
            return HandleResult.reject(RejectReason.INTEGRITY_FAILURE, "escrow message discarded")
        try:
            key = self.link_cipher_key(self.wnc, ESCROW_PURPOSE)
            master = AbeMasterKey.from_bytes(unseal(key, message.sealed_master, escrow_aad(self.wnc, self.name)))
            policies = {user: parse_policy(text) for user, text in message.policies}
        except (CryptoCoreException, PairingSchemeException) as exception:
            return HandleResult.reject(RejectReason.INTEGRITY_FAILURE, str(exception))

        self.abe_public = message.abe_public
        self.abe_master = master
        self.sealed_keys = dict(message.sealed_keys)
        self.policies = policies
        return HandleResult.accept()

    def register(self, message: RegisterRequest) -> HandleResult:
        """
        user registration: known id, certificate bound signature, trust
        evaluation, then KP-ABE keygen for the user's predefined policy
        """
        user = message.sender
        if self.abe_master is None or user not in self.sealed_keys or user not in self.policies:
            return HandleResult.reject(RejectReason.UNKNOWN_ID, f"no escrowed key for {user}")
        try:
            certificate = Certificate.from_bytes(message.certificate)
        except CryptoCoreException as exception:
            return HandleResult.reject(RejectReason.BAD_CERTIFICATE, str(exception))
        if certificate.subject != user or not verify_certified(
            certificate, self.directory.root_key, message.authenticated_bytes(), message.signature
        ):
            self.record_event(user, CspEventKind.SIGNATURE_FAILURE)
            return HandleResult.reject(RejectReason.SIGNATURE_FAILURE, "registration request disregarded")
        if not self.granted(user):
            return HandleResult.reject(RejectReason.UNTRUSTED, f"score {self.trust_record(user).score:.2f}")

        abe_key = abe_keygen(self.policies[user], self.abe_master, self.rng)
        bundle = RegistrationBundle(abe_key.to_bytes(), self.sealed_keys[user])
        sealed = pke_seal(certificate.encryption_key, bundle.to_bytes(), self.rng, REGISTRATION_LABEL)
        unsigned = RegisterResponse(self.name, user, self.certificate.to_bytes(), sealed)
        response = replace(unsigned, signature=sign(self.signing, unsigned.authenticated_bytes()))
        self.user_list.add(user)
        return HandleResult.accept(Outgoing(user, response.encode()))

    def validate_upload(self, message: UploadRecord) -> HandleResult:
        """store an upload if the coordinator is trusted and the record HMAC verifies"""
        if message.sender != self.wnc:
            return HandleResult.reject(RejectReason.WRONG_SENDER, f"uploads only come from {self.wnc}")
        if not self.granted(self.wnc):
            return HandleResult.reject(RejectReason.UNTRUSTED, f"score {self.trust_record(self.wnc).score:.2f}")
        if not self.mac_valid(message, message.tag):
            self.record_event(self.wnc, CspEventKind.HMAC_FAILURE, timestamp=message.window)
            return HandleResult.reject(RejectReason.HMAC_FAILURE, f"upload for window {message.window}")
        self.records.append(message.stored())
        return HandleResult.accept()

    def access(self, message: AccessRequest) -> HandleResult:
        """
        certificate bound signature, user list membership and trust, then
        every stored record whose attribute set contains the request's
        """
        user = message.sender
        try:
            certificate = Certificate.from_bytes(message.certificate)
            valid = certificate.subject == user and verify_certified(
                certificate, self.directory.root_key, message.authenticated_bytes(), message.signature
            )
        except CryptoCoreException:
            valid = False
        if not valid:
            if user in self.user_list:
                self.record_event(user, CspEventKind.SIGNATURE_FAILURE)
            return self._deny(user, DenialReason.BAD_CERTIFICATE, RejectReason.BAD_CERTIFICATE)
        if user not in self.user_list:
            return self._deny(user, DenialReason.NOT_REGISTERED, RejectReason.NOT_REGISTERED)
        if not self.granted(user):
            return self._deny(user, DenialReason.UNTRUSTED, RejectReason.UNTRUSTED)

        wanted = set(message.attributes)
        matching = tuple(record.encode() for record in self.records if wanted <= set(record.attributes))
        response = AccessResponse(self.name, user, True, "", matching)
        return HandleResult.accept(Outgoing(user, response.encode()), detail=f"{len(matching)} records")

    def _deny(self, user: str, denial: DenialReason, reason: RejectReason) -> HandleResult:
        response = AccessResponse(self.name, user, False, denial.name, ())
        return HandleResult.reject(reason, f"access denied to {user}", Outgoing(user, response.encode()))

    def state_blobs(self) -> Iterator[bytes]:
        yield from super().state_blobs()
        if self.abe_public is not None:
            yield self.abe_public
        if self.abe_master is not None:
            yield self.abe_master.to_bytes()
        yield from self.sealed_keys.values()
        yield from (record.encode() for record in self.records)
