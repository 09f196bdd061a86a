"""
Canonical wire messages.

Every message is a 1 byte type tag followed by the canonical field encoding of
crypto_core.encoding: sender, receiver, the type specific fields in a fixed
order and, for authenticated types, one trailing field holding the HMAC tag,
key confirmation or signature. The trailer always covers the tag byte and
every field before it. See MESSAGES.md for the field tables.
"""

# use annotations to type hint a method with the type of the enclosing class
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import ClassVar, Dict, List, Optional, Tuple, Type

from ztac_py.crypto_core.encoding import Decoder, Encoder
from ztac_py.crypto_core.error import MalformedEncoding


class MessageType(Enum):
    """one byte type tags"""

    HELLO = 1
    HELLO_REPLY = 2
    HELLO_FINISH = 3
    PROVISION = 4
    ESCROW = 5
    REGISTER_REQUEST = 6
    REGISTER_RESPONSE = 7
    SENSOR_DATA = 8
    TOKEN_UPDATE = 9
    UPLOAD_RECORD = 10
    ACCESS_REQUEST = 11
    ACCESS_RESPONSE = 12

    def __str__(self) -> str:
        return self.name

    @classmethod
    def from_tag(cls, tag: int) -> MessageType:
        """type for a tag byte, MalformedEncoding for unknown tags"""
        for message_type in cls:
            if message_type.value == tag:
                return message_type
        raise MalformedEncoding(f"unknown message tag {tag}")

    @classmethod
    def from_name(cls, name: str) -> MessageType:
        """type for its name, e.g. SENSOR_DATA"""
        try:
            return cls[name.strip().upper()]
        except KeyError as exception:
            raise ValueError(f"Unknown message type {name}") from exception


@dataclass(frozen=True)
class WireMessage:
    """fields common to every message"""

    sender: str
    receiver: str

    MESSAGE_TYPE: ClassVar[MessageType]
    # name of the field carried as authentication trailer, if any
    TRAILER: ClassVar[Optional[str]] = None

    def _put_fields(self, encoder: Encoder) -> None:
        raise NotImplementedError

    @classmethod
    def _take_fields(cls, decoder: Decoder, sender: str, receiver: str) -> WireMessage:
        raise NotImplementedError

    def authenticated_bytes(self) -> bytes:
        """tag byte and every field except the trailer"""
        encoder = Encoder().put_str(self.sender).put_str(self.receiver)
        self._put_fields(encoder)
        return bytes([self.MESSAGE_TYPE.value]) + encoder.to_bytes()

    def encode(self) -> bytes:
        """full wire encoding"""
        data = self.authenticated_bytes()
        if self.TRAILER is None:
            return data
        return data + Encoder().put_bytes(getattr(self, self.TRAILER)).to_bytes()


@dataclass(frozen=True)
class Hello(WireMessage):
    """handshake opener: initiator's agreement key and nonce"""

    public: bytes
    nonce: bytes

    MESSAGE_TYPE = MessageType.HELLO

    def _put_fields(self, encoder: Encoder) -> None:
        encoder.put_bytes(self.public).put_bytes(self.nonce)

    @classmethod
    def _take_fields(cls, decoder: Decoder, sender: str, receiver: str) -> Hello:
        return cls(sender, receiver, decoder.take_bytes(), decoder.take_bytes())


@dataclass(frozen=True)
class HelloReply(WireMessage):
    """responder's agreement key, nonce and key confirmation"""

    public: bytes
    nonce: bytes
    confirm: bytes = b""

    MESSAGE_TYPE = MessageType.HELLO_REPLY
    TRAILER = "confirm"

    def _put_fields(self, encoder: Encoder) -> None:
        encoder.put_bytes(self.public).put_bytes(self.nonce)

    @classmethod
    def _take_fields(cls, decoder: Decoder, sender: str, receiver: str) -> HelloReply:
        return cls(sender, receiver, decoder.take_bytes(), decoder.take_bytes())


@dataclass(frozen=True)
class HelloFinish(WireMessage):
    """initiator's key confirmation"""

    confirm: bytes = b""

    MESSAGE_TYPE = MessageType.HELLO_FINISH
    TRAILER = "confirm"

    def _put_fields(self, encoder: Encoder) -> None:
        pass

    @classmethod
    def _take_fields(cls, decoder: Decoder, sender: str, receiver: str) -> HelloFinish:
        return cls(sender, receiver)


@dataclass(frozen=True)
class Provision(WireMessage):
    """provisioning bundle sealed under the sensor link"""

    sealed: bytes

    MESSAGE_TYPE = MessageType.PROVISION

    def _put_fields(self, encoder: Encoder) -> None:
        encoder.put_bytes(self.sealed)

    @classmethod
    def _take_fields(cls, decoder: Decoder, sender: str, receiver: str) -> Provision:
        return cls(sender, receiver, decoder.take_bytes())


@dataclass(frozen=True)
class Escrow(WireMessage):
    """
    PK for U2 in clear, MK for U2 sealed under the coordinator link, every
    identity key sealed to its user and the predefined policy per user
    """

    abe_public: bytes
    sealed_master: bytes
    sealed_keys: Tuple[Tuple[str, bytes], ...]
    policies: Tuple[Tuple[str, str], ...]
    tag: bytes = b""

    MESSAGE_TYPE = MessageType.ESCROW
    TRAILER = "tag"

    def _put_fields(self, encoder: Encoder) -> None:
        encoder.put_bytes(self.abe_public).put_bytes(self.sealed_master)
        encoder.put_int(len(self.sealed_keys))
        for identity, sealed in self.sealed_keys:
            encoder.put_str(identity).put_bytes(sealed)
        encoder.put_int(len(self.policies))
        for identity, policy in self.policies:
            encoder.put_str(identity).put_str(policy)

    @classmethod
    def _take_fields(cls, decoder: Decoder, sender: str, receiver: str) -> Escrow:
        abe_public = decoder.take_bytes()
        sealed_master = decoder.take_bytes()
        sealed_keys = tuple((decoder.take_str(), decoder.take_bytes()) for _ in range(decoder.take_count()))
        policies = tuple((decoder.take_str(), decoder.take_str()) for _ in range(decoder.take_count()))
        return cls(sender, receiver, abe_public, sealed_master, sealed_keys, policies)


@dataclass(frozen=True)
class RegisterRequest(WireMessage):
    """user id and certificate, signed by the user"""

    certificate: bytes
    signature: bytes = b""

    MESSAGE_TYPE = MessageType.REGISTER_REQUEST
    TRAILER = "signature"

    def _put_fields(self, encoder: Encoder) -> None:
        encoder.put_bytes(self.certificate)

    @classmethod
    def _take_fields(cls, decoder: Decoder, sender: str, receiver: str) -> RegisterRequest:
        return cls(sender, receiver, decoder.take_bytes())


@dataclass(frozen=True)
class RegisterResponse(WireMessage):
    """{D, sealed SK_Id} sealed to the user, signed by the cloud provider"""

    certificate: bytes
    sealed_bundle: bytes
    signature: bytes = b""

    MESSAGE_TYPE = MessageType.REGISTER_RESPONSE
    TRAILER = "signature"

    def _put_fields(self, encoder: Encoder) -> None:
        encoder.put_bytes(self.certificate).put_bytes(self.sealed_bundle)

    @classmethod
    def _take_fields(cls, decoder: Decoder, sender: str, receiver: str) -> RegisterResponse:
        return cls(sender, receiver, decoder.take_bytes(), decoder.take_bytes())


@dataclass(frozen=True)
class SensorData(WireMessage):
    """Enc_hj(M) || TS_(i,j) || HMAC, with the sending window"""

    epoch: int
    window: int
    ciphertext: bytes
    token: bytes
    tag: bytes = b""

    MESSAGE_TYPE = MessageType.SENSOR_DATA
    TRAILER = "tag"

    def _put_fields(self, encoder: Encoder) -> None:
        encoder.put_int(self.epoch).put_int(self.window).put_bytes(self.ciphertext).put_bytes(self.token)

    @classmethod
    def _take_fields(cls, decoder: Decoder, sender: str, receiver: str) -> SensorData:
        return cls(sender, receiver, decoder.take_int(), decoder.take_int(), decoder.take_bytes(), decoder.take_bytes())


@dataclass(frozen=True)
class TokenUpdate(WireMessage):
    """TS_(i,j+1) after an accepted message"""

    token: bytes
    tag: bytes = b""

    MESSAGE_TYPE = MessageType.TOKEN_UPDATE
    TRAILER = "tag"

    def _put_fields(self, encoder: Encoder) -> None:
        encoder.put_bytes(self.token)

    @classmethod
    def _take_fields(cls, decoder: Decoder, sender: str, receiver: str) -> TokenUpdate:
        return cls(sender, receiver, decoder.take_bytes())


@dataclass(frozen=True)
class SensorCiphertext:
    """one accepted sensor ciphertext and the chain index it was sealed under"""

    sensor: str
    epoch: int
    ciphertext: bytes


@dataclass(frozen=True)
class UploadRecord(WireMessage):
    """
    window, attribute set I, receiver set S, IBBE header, KP-ABE ciphertext
    of the masked key entries and the window's sensor ciphertexts
    """

    window: int
    attributes: Tuple[str, ...]
    receivers: Tuple[str, ...]
    header: bytes
    abe_ciphertext: bytes
    sensor_ciphertexts: Tuple[SensorCiphertext, ...]
    tag: bytes = b""

    MESSAGE_TYPE = MessageType.UPLOAD_RECORD
    TRAILER = "tag"

    def _put_fields(self, encoder: Encoder) -> None:
        encoder.put_int(self.window).put_strs(self.attributes).put_strs(self.receivers)
        encoder.put_bytes(self.header).put_bytes(self.abe_ciphertext)
        encoder.put_int(len(self.sensor_ciphertexts))
        for item in self.sensor_ciphertexts:
            encoder.put_str(item.sensor).put_int(item.epoch).put_bytes(item.ciphertext)

    @classmethod
    def _take_fields(cls, decoder: Decoder, sender: str, receiver: str) -> UploadRecord:
        window = decoder.take_int()
        attributes = tuple(decoder.take_strs())
        receivers = tuple(decoder.take_strs())
        header = decoder.take_bytes()
        abe_ciphertext = decoder.take_bytes()
        sensor_ciphertexts = tuple(
            SensorCiphertext(decoder.take_str(), decoder.take_int(), decoder.take_bytes())
            for _ in range(decoder.take_count())
        )
        return cls(sender, receiver, window, attributes, receivers, header, abe_ciphertext, sensor_ciphertexts)

    def stored(self) -> UploadRecord:
        """the record as kept by the cloud provider, without the link tag"""
        return replace(self, tag=b"")


@dataclass(frozen=True)
class AccessRequest(WireMessage):
    """certificate and desired attribute set, signed by the user"""

    certificate: bytes
    attributes: Tuple[str, ...]
    request: int
    signature: bytes = b""

    MESSAGE_TYPE = MessageType.ACCESS_REQUEST
    TRAILER = "signature"

    def _put_fields(self, encoder: Encoder) -> None:
        encoder.put_bytes(self.certificate).put_strs(self.attributes).put_int(self.request)

    @classmethod
    def _take_fields(cls, decoder: Decoder, sender: str, receiver: str) -> AccessRequest:
        return cls(sender, receiver, decoder.take_bytes(), tuple(decoder.take_strs()), decoder.take_int())


@dataclass(frozen=True)
class AccessResponse(WireMessage):
    """matching stored records, or the denial reason"""

    granted: bool
    reason: str
    records: Tuple[bytes, ...]

    MESSAGE_TYPE = MessageType.ACCESS_RESPONSE

    def _put_fields(self, encoder: Encoder) -> None:
        encoder.put_bool(self.granted).put_str(self.reason).put_blobs(self.records)

    @classmethod
    def _take_fields(cls, decoder: Decoder, sender: str, receiver: str) -> AccessResponse:
        return cls(sender, receiver, decoder.take_bool(), decoder.take_str(), tuple(decoder.take_blobs()))


_REGISTRY: Dict[MessageType, Type[WireMessage]] = {
    message_class.MESSAGE_TYPE: message_class
    for message_class in (
        Hello,
        HelloReply,
        HelloFinish,
        Provision,
        Escrow,
        RegisterRequest,
        RegisterResponse,
        SensorData,
        TokenUpdate,
        UploadRecord,
        AccessRequest,
        AccessResponse,
    )
}


def peek_type(data: bytes) -> MessageType:
    """type of an encoded message without decoding its fields"""
    if not data:
        raise MalformedEncoding("empty message")
    return MessageType.from_tag(data[0])


def decode_message(data: bytes) -> WireMessage:
    """decode any message, MalformedEncoding unless every byte is consumed"""
    message_class = _REGISTRY[peek_type(data)]
    decoder = Decoder(data[1:])
    sender = decoder.take_str()
    receiver = decoder.take_str()
    message = message_class._take_fields(decoder, sender, receiver)  # pylint: disable=protected-access
    if message_class.TRAILER is not None:
        message = replace(message, **{message_class.TRAILER: decoder.take_bytes()})
    decoder.finish()
    return message


@dataclass(frozen=True)
class ProvisionBundle:
    """chain seed k, chain length n and seed token TS_(i,0)"""

    seed: bytes
    length: int
    token: bytes

    def to_bytes(self) -> bytes:
        """canonical encoding"""
        return Encoder().put_bytes(self.seed).put_int(self.length).put_bytes(self.token).to_bytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> ProvisionBundle:
        """decode the output of to_bytes"""
        decoder = Decoder(data)
        bundle = cls(decoder.take_bytes(), decoder.take_int(), decoder.take_bytes())
        decoder.finish()
        return bundle


@dataclass(frozen=True)
class RegistrationBundle:
    """the user's KP-ABE key D and its identity key, itself sealed to the user"""

    abe_key: bytes
    sealed_identity_key: bytes

    def to_bytes(self) -> bytes:
        """canonical encoding"""
        return Encoder().put_bytes(self.abe_key).put_bytes(self.sealed_identity_key).to_bytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> RegistrationBundle:
        """decode the output of to_bytes"""
        decoder = Decoder(data)
        bundle = cls(decoder.take_bytes(), decoder.take_bytes())
        decoder.finish()
        return bundle


@dataclass(frozen=True)
class KeyEntry:
    """h_j for one sensor ciphertext of a record"""

    sensor: str
    epoch: int
    key: bytes


def encode_key_entries(entries: List[KeyEntry]) -> bytes:
    """payload masked under the broadcast key"""
    encoder = Encoder().put_int(len(entries))
    for entry in entries:
        encoder.put_str(entry.sensor).put_int(entry.epoch).put_bytes(entry.key)
    return encoder.to_bytes()


def decode_key_entries(data: bytes) -> List[KeyEntry]:
    """decode the output of encode_key_entries"""
    decoder = Decoder(data)
    entries = [KeyEntry(decoder.take_str(), decoder.take_int(), decoder.take_bytes()) for _ in range(decoder.take_count())]
    decoder.finish()
    return entries


def sensor_aad(sensor: str, epoch: int, window: int) -> bytes:
    """associated data binding a sensor ciphertext to its origin"""
    return Encoder().put_str("ztac-sensor-data").put_str(sensor).put_int(epoch).put_int(window).to_bytes()


def record_aad(record: UploadRecord) -> bytes:
    """associated data binding the masked key entries to the record fields"""
    encoder = Encoder().put_str("ztac-record").put_str(record.sender).put_int(record.window)
    encoder.put_strs(record.attributes).put_strs(record.receivers).put_bytes(record.header)
    for item in record.sensor_ciphertexts:
        encoder.put_str(item.sensor).put_int(item.epoch)
    return encoder.to_bytes()
