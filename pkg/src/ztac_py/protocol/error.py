from enum import Enum, auto

from ztac_py.pairing.error import NotAReceiver, PolicyNotSatisfied


class RejectReason(Enum):
    """why a receiver refused a delivery"""

    MALFORMED = auto()
    UNEXPECTED = auto()
    WRONG_SENDER = auto()
    HANDSHAKE_FAILURE = auto()
    NO_LINK = auto()
    AUTH_FAILURE = auto()
    UNTRUSTED = auto()
    HMAC_FAILURE = auto()
    TOKEN_MISMATCH = auto()
    TOKEN_RESYNC = auto()
    LATE = auto()
    EPOCH_WINDOW = auto()
    CHAIN_EXHAUSTED = auto()
    INTEGRITY_FAILURE = auto()
    SIGNATURE_FAILURE = auto()
    UNKNOWN_ID = auto()
    BAD_CERTIFICATE = auto()
    NOT_REGISTERED = auto()
    ACCESS_FAILED = auto()

    def __str__(self) -> str:
        return self.name


class DenialReason(Enum):
    """why the cloud provider refused an access request"""

    NOT_REGISTERED = auto()
    UNTRUSTED = auto()
    BAD_CERTIFICATE = auto()

    def __str__(self) -> str:
        return self.name


class ProtocolException(Exception):
    """
    Generic exception for the ztac protocol entities
    """


class HandshakeFailure(ProtocolException):
    """
    Key agreement did not complete: unpinned key, invalid point or failed key
    confirmation
    """


class IntegrityFailure(ProtocolException):
    """
    An authenticated message or record did not verify
    """


class SignatureFailure(ProtocolException):
    """
    A certificate bound signature did not verify
    """


class UnknownId(ProtocolException):
    """
    A registration names an identity the cloud provider holds no key for
    """

    def __init__(self, identity: str):
        message = f"No escrowed identity key for {identity!r}"
        super().__init__(message)
        self.identity = identity


class ChainExhausted(ProtocolException):
    """
    The key hash chain has no key left for the requested epoch
    """

    def __init__(self, epoch: int, length: int):
        message = f"Epoch {epoch} is beyond the chain length {length}"
        super().__init__(message)
        self.epoch = epoch
        self.length = length


class NoDataForEpoch(ProtocolException):
    """
    No sensor message was accepted in the window being uploaded
    """

    def __init__(self, window: int):
        message = f"No accepted sensor data in window {window}"
        super().__init__(message)
        self.window = window


class AccessDenied(ProtocolException):
    """
    The cloud provider refused an access request
    """

    def __init__(self, reason: DenialReason):
        message = f"Access denied: {reason}"
        super().__init__(message)
        self.reason = reason


class LinkNotEstablished(ProtocolException):
    """
    An operation needs a pairwise key that has not been agreed yet
    """

    def __init__(self, owner: str, peer: str):
        message = f"{owner} has no established link with {peer}"
        super().__init__(message)
        self.owner = owner
        self.peer = peer


class BothLayersDenied(PolicyNotSatisfied, NotAReceiver, ProtocolException):
    """
    Neither the attribute policy nor the receiver set admits the user
    """
