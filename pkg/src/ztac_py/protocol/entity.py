# use annotations to type hint a method with the type of the enclosing class
from __future__ import annotations

import logging
import random
from abc import ABC, abstractmethod
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import ClassVar, ContextManager, Dict, Iterator, Optional

from ztac_py.crypto_core.certificates import Certificate
from ztac_py.crypto_core.encoding import Encoder
from ztac_py.crypto_core.error import CryptoCoreException
from ztac_py.crypto_core.primitives import (
    MacKey,
    NonceSequence,
    SymKey,
    ecdh_keygen,
    ecdh_shared,
    hmac_tag,
    hmac_verify,
    kdf,
)
from ztac_py.pairing.ibbe import IbbePublicKey
from ztac_py.pairing.kp_abe import AbePublicKey
from ztac_py.runtime_utils.op_tally import acting_as

from .error import LinkNotEstablished, RejectReason
from .messages import Hello, HelloFinish, HelloReply, WireMessage, decode_message, peek_type
from .transport import HandleResult, Outgoing

HANDSHAKE_NONCE_LENGTH = 16


class Role(Enum):
    """the four kinds of protocol entity"""

    SENSOR = "sensor"
    WNC = "wnc"
    CSP = "csp"
    USER = "user"

    def __str__(self) -> str:
        return self.value


@dataclass
class Directory:
    """
    public material every entity can look up: pinned agreement keys,
    certificates, the root key and the published scheme public keys
    """

    root_key: bytes
    agreement_keys: Dict[str, bytes] = field(default_factory=dict)
    certificates: Dict[str, Certificate] = field(default_factory=dict)
    abe_public: Optional[AbePublicKey] = None
    ibbe_public: Optional[IbbePublicKey] = None

    def pin(self, name: str, agreement_public: bytes) -> None:
        """record the long-term agreement key of name"""
        self.agreement_keys[name] = agreement_public

    def certify(self, certificate: Certificate) -> None:
        """publish a certificate under its subject"""
        self.certificates[certificate.subject] = certificate


@dataclass
class _Handshake:
    peer: str
    initiator: bool
    nonce: bytes
    label: bytes = b""
    key: Optional[MacKey] = None


def link_label(initiator: str, responder: str, initiator_nonce: bytes, responder_nonce: bytes) -> bytes:
    """KDF info of a link key: both names and both handshake nonces"""
    encoder = Encoder().put_str("ztac-link").put_str(initiator).put_str(responder)
    return encoder.put_bytes(initiator_nonce).put_bytes(responder_nonce).to_bytes()


class ProtocolEntity(ABC):
    """
    Abstract base class for protocol entities. An entity owns its keys and
    state, runs the key agreement handshake and hands every other decoded
    message to _handle_message. Operations run inside handle are attributed
    to the entity in the active operation tally.
    """

    role: ClassVar[Role]

    def __init__(self, name: str, rng: random.Random, directory: Directory) -> None:
        self.name = name
        self.rng = rng
        self.directory = directory
        self.nonces = NonceSequence(name)
        self.rejections: Counter[RejectReason] = Counter()

        with self.acting():
            self.agreement = ecdh_keygen(rng)
        directory.pin(name, self.agreement.public)

        self.links: Dict[str, MacKey] = {}
        self._handshakes: Dict[str, _Handshake] = {}

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name!r})"

    def acting(self) -> ContextManager[None]:
        """attribute operations inside the block to this entity"""
        return acting_as(self.name, self.role.value)

    def has_link(self, peer: str) -> bool:
        """has a link key been agreed with peer?"""
        return peer in self.links

    def link_key(self, peer: str) -> MacKey:
        """pairwise HMAC key shared with peer"""
        if peer not in self.links:
            raise LinkNotEstablished(self.name, peer)
        return self.links[peer]

    def link_cipher_key(self, peer: str, purpose: bytes) -> SymKey:
        """AEAD key derived from the link with peer for one purpose"""
        return SymKey(kdf(self.link_key(peer).raw, b"ztac-link-aead:" + purpose))

    def mac_valid(self, message: WireMessage, tag: bytes) -> bool:
        """does tag authenticate message under the link with its sender?"""
        if message.sender not in self.links:
            return False
        return hmac_verify(self.links[message.sender], message.authenticated_bytes(), tag)

    def mac_for(self, message: WireMessage) -> bytes:
        """HMAC tag of message under the link with its receiver"""
        return hmac_tag(self.link_key(message.receiver), message.authenticated_bytes()).raw

    def start_handshake(self, peer: str) -> Outgoing:
        """first message of the key agreement with peer"""
        nonce = self.rng.randbytes(HANDSHAKE_NONCE_LENGTH)
        self._handshakes[peer] = _Handshake(peer=peer, initiator=True, nonce=nonce)
        hello = Hello(self.name, peer, self.agreement.public, nonce)
        return Outgoing(peer, hello.encode())

    def handle(self, sender: str, payload: bytes) -> HandleResult:
        """process one delivery claimed to come from sender"""
        with self.acting():
            try:
                message = decode_message(payload)
            except CryptoCoreException as exception:
                result = self._on_malformed(sender, payload, exception)
            else:
                if message.receiver != self.name:
                    result = HandleResult.reject(RejectReason.MALFORMED, f"addressed to {message.receiver}")
                elif message.sender != sender:
                    result = HandleResult.reject(RejectReason.WRONG_SENDER, f"claims to be {message.sender}")
                else:
                    result = self._dispatch(message)

        if not result.accepted and result.reason is not None:
            self.rejections[result.reason] += 1
            logging.warning(
                "%s rejected delivery from %s: reason=%s %s", self.name, sender, result.reason, result.detail
            )
        return result

    def _dispatch(self, message: WireMessage) -> HandleResult:
        if isinstance(message, Hello):
            return self._on_hello(message)
        if isinstance(message, HelloReply):
            return self._on_hello_reply(message)
        if isinstance(message, HelloFinish):
            return self._on_hello_finish(message)
        return self._handle_message(message)

    @abstractmethod
    def _handle_message(self, message: WireMessage) -> HandleResult:
        """entity specific processing of a decoded, correctly addressed message"""

    def _on_malformed(self, sender: str, payload: bytes, exception: Exception) -> HandleResult:
        try:
            kind = str(peek_type(payload))
        except CryptoCoreException:
            kind = "unknown"
        return HandleResult.reject(RejectReason.MALFORMED, f"{kind}: {exception}")

    def _pinned(self, peer: str, presented: bytes) -> Optional[bytes]:
        pinned = self.directory.agreement_keys.get(peer)
        if pinned is None or pinned != presented:
            return None
        return pinned

    def _on_hello(self, hello: Hello) -> HandleResult:
        pinned = self._pinned(hello.sender, hello.public)
        if pinned is None:
            return HandleResult.reject(RejectReason.HANDSHAKE_FAILURE, "agreement key is not pinned for sender")

        nonce = self.rng.randbytes(HANDSHAKE_NONCE_LENGTH)
        label = link_label(hello.sender, self.name, hello.nonce, nonce)
        try:
            key = ecdh_shared(self.agreement, pinned, label)
        except CryptoCoreException as exception:
            return HandleResult.reject(RejectReason.HANDSHAKE_FAILURE, str(exception))

        self._handshakes[hello.sender] = _Handshake(hello.sender, False, nonce, label, key)
        reply = HelloReply(self.name, hello.sender, self.agreement.public, nonce)
        confirm = hmac_tag(key, b"ztac-confirm-reply" + label + reply.authenticated_bytes()).raw
        reply = HelloReply(reply.sender, reply.receiver, reply.public, reply.nonce, confirm)
        return HandleResult.accept(Outgoing(hello.sender, reply.encode()), provisional=True)

    def _on_hello_reply(self, reply: HelloReply) -> HandleResult:
        pending = self._handshakes.get(reply.sender)
        if pending is None or not pending.initiator:
            return HandleResult.reject(RejectReason.UNEXPECTED, "no handshake in progress")
        pinned = self._pinned(reply.sender, reply.public)
        if pinned is None:
            return HandleResult.reject(RejectReason.HANDSHAKE_FAILURE, "agreement key is not pinned for sender")

        label = link_label(self.name, reply.sender, pending.nonce, reply.nonce)
        try:
            key = ecdh_shared(self.agreement, pinned, label)
        except CryptoCoreException as exception:
            return HandleResult.reject(RejectReason.HANDSHAKE_FAILURE, str(exception))
        if not hmac_verify(key, b"ztac-confirm-reply" + label + reply.authenticated_bytes(), reply.confirm):
            del self._handshakes[reply.sender]
            return HandleResult.reject(RejectReason.HANDSHAKE_FAILURE, "key confirmation failed")

        del self._handshakes[reply.sender]
        self.links[reply.sender] = key
        finish = HelloFinish(self.name, reply.sender)
        confirm = hmac_tag(key, b"ztac-confirm-finish" + label + finish.authenticated_bytes()).raw
        return HandleResult.accept(Outgoing(reply.sender, HelloFinish(self.name, reply.sender, confirm).encode()))

    def _on_hello_finish(self, finish: HelloFinish) -> HandleResult:
        pending = self._handshakes.get(finish.sender)
        if pending is None or pending.initiator or pending.key is None:
            return HandleResult.reject(RejectReason.UNEXPECTED, "no handshake awaiting confirmation")
        del self._handshakes[finish.sender]
        confirmed = b"ztac-confirm-finish" + pending.label + finish.authenticated_bytes()
        if not hmac_verify(pending.key, confirmed, finish.confirm):
            return HandleResult.reject(RejectReason.HANDSHAKE_FAILURE, "key confirmation failed")
        self.links[finish.sender] = pending.key
        return HandleResult.accept()

    def state_blobs(self) -> Iterator[bytes]:
        """every secret or stored byte string this entity holds"""
        for key in self.links.values():
            yield key.raw
