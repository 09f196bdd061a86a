# use annotations to type hint a method with the type of the enclosing class
from __future__ import annotations

import hmac
import logging
import random
from dataclasses import dataclass, replace
from typing import Collection, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

from ztac_py.crypto_core.error import CryptoCoreException
from ztac_py.crypto_core.hash_chain import KeyHashChain, chain_generate, chain_key
from ztac_py.crypto_core.pke import pke_seal
from ztac_py.crypto_core.primitives import SymKey, seal
from ztac_py.pairing.access_tree import AccessNode, format_policy, policy_attributes
from ztac_py.pairing.error import UnknownAttribute
from ztac_py.pairing.ibbe import IbbeMasterKey, IbbeParams, IbbePublicKey, ibbe_enc, ibbe_key_ext, ibbe_setup
from ztac_py.pairing.kp_abe import (
    DEFAULT_SECURITY_PARAMETER,
    AbeMasterKey,
    AbePublicKey,
    AttributeUniverse,
    abe_encrypt,
    abe_setup,
)
from ztac_py.trust_ledger.dump import LedgerEntry, sensor_entry
from ztac_py.trust_ledger.merkle import TrustMerkleTree, TrustToken, init_token, update_tree, verify_token
from ztac_py.trust_ledger.scoring import (
    DEFAULT_SCHEDULE,
    DEFAULT_THRESHOLD,
    DEFAULT_WEIGHTS,
    EventKind,
    PenaltySchedule,
    ScoringWeights,
    TrustEvent,
    TrustFactors,
    apply_penalty,
    compute_score,
    is_trusted,
)

from .entity import Directory, ProtocolEntity, Role
from .error import LinkNotEstablished, NoDataForEpoch, RejectReason
from .messages import (
    Escrow,
    KeyEntry,
    Provision,
    ProvisionBundle,
    SensorCiphertext,
    SensorData,
    TokenUpdate,
    UploadRecord,
    WireMessage,
    encode_key_entries,
    record_aad,
)
from .sensor import PROVISION_PURPOSE, provision_aad
from .transport import HandleResult, Outgoing

ESCROW_PURPOSE = b"escrow"


def escrow_aad(wnc: str, csp: str) -> bytes:
    """associated data of the sealed MK_2"""
    return b"ztac-escrow:" + wnc.encode() + b"->" + csp.encode()


def identity_key_label(identity: str) -> bytes:
    """public key sealing label of an identity key"""
    return b"ztac-identity-key:" + identity.encode()


@dataclass
class SensorTrust:
    """coordinator side state of one sensor"""

    seed: SymKey
    tree: TrustMerkleTree
    factors: TrustFactors
    chain: Optional[KeyHashChain] = None
    seen: bool = False
    accepted: bool = False
    # last issued TokenUpdate, the token it replaced, and the window it was issued in
    issued: Optional[Outgoing] = None
    previous: Optional[TrustToken] = None
    issued_window: int = 0


@dataclass(frozen=True)
class AccessSetup:
    """scheme keys and the key distribution decided at initialization"""

    identity_universe: AttributeUniverse
    data_universe: AttributeUniverse
    abe_public: AbePublicKey
    abe_master: AbeMasterKey
    ibbe_public: IbbePublicKey
    ibbe_master: IbbeMasterKey
    receivers: Tuple[str, ...]


class Wnc(ProtocolEntity):
    """
    Wearable network coordinator: owner of the data, the ABE master key MK,
    the IBBE master key and one trust tree per sensor.
    """

    role = Role.WNC

    def __init__(
        self,
        name: str,
        rng: random.Random,
        directory: Directory,
        csp: str,
        chain_length: int = 16,
        threshold: float = DEFAULT_THRESHOLD,
        weights: ScoringWeights = DEFAULT_WEIGHTS,
        schedule: PenaltySchedule = DEFAULT_SCHEDULE,
    ) -> None:
        super().__init__(name, rng, directory)
        self.csp = csp
        self.chain_length = chain_length
        self.threshold = threshold
        self.weights = weights
        self.schedule = schedule

        self.sensors: Dict[str, SensorTrust] = {}
        self.window = 0
        self.pending: Dict[int, List[SensorCiphertext]] = {}
        self.ledger: List[LedgerEntry] = []
        self.access: Optional[AccessSetup] = None

    def score(self, sensor: str) -> float:
        """current weighted trust score of sensor"""
        return compute_score(self.sensors[sensor].factors, self.weights)

    def trusted(self, sensor: str) -> bool:
        """is sensor at or above the threshold?"""
        return is_trusted(self.score(sensor), self.threshold)

    def seed_token(self, sensor: str) -> TrustToken:
        """initialize the trust tree of sensor at score 100 and draw its chain seed"""
        with self.acting():
            tree, token = init_token(sensor.encode("utf-8"))
        self.sensors[sensor] = SensorTrust(seed=SymKey(self.rng.randbytes(32)), tree=tree, factors=TrustFactors())
        return token

    def distribute(self, sensor: str) -> Outgoing:
        """provisioning bundle {k, n, TS_(i,0)} sealed under the sensor link"""
        state = self.sensors[sensor]
        with self.acting():
            state.chain = chain_generate(state.seed, self.chain_length)
            bundle = ProvisionBundle(state.seed.raw, self.chain_length, state.tree.token().to_bytes())
            key = self.link_cipher_key(sensor, PROVISION_PURPOSE)
            sealed = seal(key, bundle.to_bytes(), self.nonces.next(), provision_aad(self.name, sensor))
        return Outgoing(sensor, Provision(self.name, sensor, sealed).encode())

    def setup_access_structures(
        self,
        identity_labels: Sequence[str],
        data_labels: Sequence[str],
        receivers: Collection[str],
        users: Collection[str],
        policies: Mapping[str, AccessNode],
        ibbe_params: IbbeParams,
        security_parameter: int = DEFAULT_SECURITY_PARAMETER,
    ) -> Outgoing:
        """
        run KP-ABE setup over U = U1 u U2 and IBBE setup, extract an identity
        key per user and build the escrow message carrying PK_2, MK_2, the
        sealed identity keys and the predefined policies
        """
        if not self.has_link(self.csp):
            raise LinkNotEstablished(self.name, self.csp)
        identity_universe = AttributeUniverse.of(identity_labels)
        data_universe = AttributeUniverse.of(data_labels)
        for policy in policies.values():
            for attribute in policy_attributes(policy):
                if attribute not in data_universe:
                    raise UnknownAttribute(attribute)

        with self.acting():
            universe = AttributeUniverse.of(list(identity_labels) + list(data_labels))
            abe_public, abe_master = abe_setup(security_parameter, universe, self.rng)
            ibbe_public, ibbe_master = ibbe_setup(ibbe_params, self.rng)

            sealed_keys = []
            for user in sorted(users):
                identity_key = ibbe_key_ext(ibbe_public, ibbe_master, user)
                certificate = self.directory.certificates[user]
                sealed = pke_seal(
                    certificate.encryption_key, identity_key.to_bytes(), self.rng, identity_key_label(user)
                )
                sealed_keys.append((user, sealed))

            public_2 = abe_public.restrict(data_labels)
            master_2 = abe_master.restrict(data_labels)
            key = self.link_cipher_key(self.csp, ESCROW_PURPOSE)
            sealed_master = seal(key, master_2.to_bytes(), self.nonces.next(), escrow_aad(self.name, self.csp))
            unsigned = Escrow(
                self.name,
                self.csp,
                public_2.to_bytes(),
                sealed_master,
                tuple(sealed_keys),
                tuple((user, format_policy(policy)) for user, policy in sorted(policies.items())),
            )
            escrow = replace(unsigned, tag=self.mac_for(unsigned))

        self.access = AccessSetup(
            identity_universe=identity_universe,
            data_universe=data_universe,
            abe_public=abe_public,
            abe_master=abe_master,
            ibbe_public=ibbe_public,
            ibbe_master=ibbe_master,
            receivers=tuple(sorted(set(receivers))),
        )
        self.directory.abe_public = public_2
        self.directory.ibbe_public = ibbe_public
        return Outgoing(self.csp, escrow.encode())

    def open_window(self, window: int) -> None:
        """start collecting sensor messages for window"""
        self.window = window
        for state in self.sensors.values():
            state.seen = False
            state.accepted = False

    def close_window(self) -> List[LedgerEntry]:
        """log inactivity for every silent sensor and snapshot the trust ledger"""
        for sensor, state in sorted(self.sensors.items()):
            if not state.seen:
                self._penalize(sensor, EventKind.INACTIVITY)
        entries = [
            sensor_entry(self.window, self.name, state.factors, self.weights, state.tree)
            for _, state in sorted(self.sensors.items())
        ]
        self.ledger.extend(entries)
        return entries

    def user_report(self, sensor: str, severity: float) -> None:
        """apply a user reported event against sensor"""
        self._penalize(sensor, EventKind.USER_REPORT, severity)

    def reinstate(self, sensor: str) -> Outgoing:
        """operator re-initialization: full factors and a fresh token at the next epoch"""
        state = self.sensors[sensor]
        state.factors = TrustFactors()
        with self.acting():
            return self._advance(sensor, self.score(sensor), state.tree.epoch + 1)

    def _penalize(self, sensor: str, kind: EventKind, severity: float = 1.0) -> None:
        state = self.sensors[sensor]
        state.factors = apply_penalty(state.factors, TrustEvent(kind, severity, self.window), self.schedule)
        logging.info(
            "%s penalized %s: event=%s window=%s score=%.2f", self.name, sensor, kind, self.window, self.score(sensor)
        )

    def _advance(self, sensor: str, score: float, epoch: int) -> Outgoing:
        """move a sensor's tree to epoch and remember the update for a later resync"""
        state = self.sensors[sensor]
        state.previous = state.tree.token()
        state.tree, token = update_tree(state.tree, score, epoch)
        state.issued = self._token_update(sensor, token)
        state.issued_window = self.window
        return state.issued

    def _resync_due(self, state: SensorTrust, token: TrustToken, message: SensorData) -> bool:
        """
        a fresh message for the open window still carrying the token the last
        update replaced: that update never reached the sensor
        """
        return (
            state.issued is not None
            and state.previous is not None
            and hmac.compare_digest(token.to_bytes(), state.previous.to_bytes())
            and message.epoch == token.epoch
            and message.window == self.window
            and message.window > state.issued_window
        )

    def _token_update(self, sensor: str, token: TrustToken) -> Outgoing:
        unsigned = TokenUpdate(self.name, sensor, token.to_bytes())
        return Outgoing(sensor, replace(unsigned, tag=self.mac_for(unsigned)).encode())

    def _on_malformed(self, sender: str, payload: bytes, exception: Exception) -> HandleResult:
        if sender in self.sensors:
            self.sensors[sender].seen = True
            self._penalize(sender, EventKind.UNAUTHORIZED_MESSAGE)
        return super()._on_malformed(sender, payload, exception)

    def _handle_message(self, message: WireMessage) -> HandleResult:
        if isinstance(message, SensorData):
            return self.receive(message)
        return HandleResult.reject(RejectReason.UNEXPECTED, f"{message.MESSAGE_TYPE} is not handled by coordinators")

    def receive(self, message: SensorData) -> HandleResult:
        """
        validate sensor data: trust gate, HMAC, token, window, chain bound. on
        success the tree moves to epoch j+1 and the new token is returned
        """
        state = self.sensors.get(message.sender)
        if state is None:
            return HandleResult.reject(RejectReason.WRONG_SENDER, f"unknown sensor {message.sender}")
        state.seen = True

        if not self.trusted(message.sender):
            return HandleResult.reject(RejectReason.UNTRUSTED, f"score {self.score(message.sender):.2f}")

        if not self.mac_valid(message, message.tag):
            self._penalize(message.sender, EventKind.AUTH_FAILURE)
            return HandleResult.reject(RejectReason.HMAC_FAILURE)

        try:
            token = TrustToken.from_bytes(message.token)
        except CryptoCoreException as exception:
            self._penalize(message.sender, EventKind.UNAUTHORIZED_MESSAGE)
            return HandleResult.reject(RejectReason.TOKEN_MISMATCH, str(exception))
        if not verify_token(state.tree, token) or message.epoch != token.epoch:
            if self._resync_due(state, token, message):
                logging.info("%s re-issued the epoch %s token to %s", self.name, state.tree.epoch, message.sender)
                return HandleResult.reject(
                    RejectReason.TOKEN_RESYNC, f"token for epoch {token.epoch} was replaced", state.issued
                )
            self._penalize(message.sender, EventKind.UNAUTHORIZED_MESSAGE)
            return HandleResult.reject(RejectReason.TOKEN_MISMATCH, f"token for epoch {token.epoch}")

        if message.window < self.window:
            return HandleResult.reject(RejectReason.LATE, f"sent in window {message.window}")
        if message.window > self.window or state.accepted:
            self._penalize(message.sender, EventKind.UNAUTHORIZED_MESSAGE)
            return HandleResult.reject(RejectReason.EPOCH_WINDOW, f"window {message.window}")

        if message.epoch > self.chain_length:
            return HandleResult.reject(RejectReason.CHAIN_EXHAUSTED, f"epoch {message.epoch}")

        state.accepted = True
        self.pending.setdefault(self.window, []).append(
            SensorCiphertext(message.sender, message.epoch, message.ciphertext)
        )
        return HandleResult.accept(self._advance(message.sender, self.score(message.sender), message.epoch + 1))

    def build_upload(self, window: int, attributes: Collection[str]) -> Outgoing:
        """
        UploadRecord for window: IBBE header and broadcast key K_S for the
        receiver set, the window's h_j entries sealed under K_S, that payload
        KP-ABE encrypted under attribute set I
        """
        entries = sorted(self.pending.pop(window, []), key=lambda item: item.sensor)
        if not entries:
            raise NoDataForEpoch(window)
        if self.access is None:
            raise LinkNotEstablished(self.name, self.csp)
        for attribute in attributes:
            if attribute not in self.access.data_universe:
                raise UnknownAttribute(attribute)

        with self.acting():
            header, broadcast_key = ibbe_enc(self.access.receivers, self.access.ibbe_public, self.rng)
            unsigned = UploadRecord(
                sender=self.name,
                receiver=self.csp,
                window=window,
                attributes=tuple(sorted(set(attributes))),
                receivers=self.access.receivers,
                header=header.to_bytes(),
                abe_ciphertext=b"",
                sensor_ciphertexts=tuple(entries),
            )
            keys = [KeyEntry(item.sensor, item.epoch, self._chain_key(item.sensor, item.epoch)) for item in entries]
            masked = seal(broadcast_key, encode_key_entries(keys), self.nonces.next(), record_aad(unsigned))
            ciphertext = abe_encrypt(masked, unsigned.attributes, self.access.abe_public, self.rng)
            record = replace(unsigned, abe_ciphertext=ciphertext.to_bytes())
            record = replace(record, tag=self.mac_for(record))
        return Outgoing(self.csp, record.encode())

    def _chain_key(self, sensor: str, epoch: int) -> bytes:
        chain = self.sensors[sensor].chain
        if chain is None:
            raise LinkNotEstablished(self.name, sensor)
        return chain_key(chain, epoch).raw

    def state_blobs(self) -> Iterator[bytes]:
        yield from super().state_blobs()
        for state in self.sensors.values():
            yield state.seed.raw
            if state.chain is not None:
                yield from (key.raw for key in state.chain.keys)
