# use annotations to type hint a method with the type of the enclosing class
from __future__ import annotations

from abc import ABC, abstractmethod
from collections import deque
from dataclasses import dataclass
from typing import TYPE_CHECKING, Deque, Dict, List, Optional, Tuple

from .error import RejectReason

if TYPE_CHECKING:
    from .entity import ProtocolEntity


@dataclass(frozen=True)
class Outgoing:
    """a message an entity wants sent"""

    receiver: str
    payload: bytes


@dataclass(frozen=True)
class Envelope:
    """a message in flight; index is its position in the send order"""

    sender: str
    receiver: str
    payload: bytes
    index: int
    tick: int = 0


@dataclass(frozen=True)
class HandleResult:
    """
    outcome of one delivery. receivers never raise to the transport; refused
    deliveries carry a reason instead. provisional acceptances (a handshake
    opener) only count once the handshake completes.
    """

    accepted: bool
    reason: Optional[RejectReason] = None
    replies: Tuple[Outgoing, ...] = ()
    detail: str = ""
    provisional: bool = False

    @classmethod
    def accept(cls, *replies: Outgoing, detail: str = "", provisional: bool = False) -> HandleResult:
        """accepted delivery with optional replies"""
        return cls(accepted=True, replies=tuple(replies), detail=detail, provisional=provisional)

    @classmethod
    def reject(cls, reason: RejectReason, detail: str = "", *replies: Outgoing) -> HandleResult:
        """refused delivery"""
        return cls(accepted=False, reason=reason, replies=tuple(replies), detail=detail)


@dataclass(frozen=True)
class Delivery:
    """an envelope and what its receiver made of it"""

    envelope: Envelope
    result: HandleResult


class Transport(ABC):
    """
    Abstract base class for moving encoded messages between registered
    entities.
    """

    def __init__(self) -> None:
        self.entities: Dict[str, ProtocolEntity] = {}
        self.sent = 0

    def register(self, *entities: ProtocolEntity) -> None:
        """make entities reachable by name"""
        for entity in entities:
            self.entities[entity.name] = entity

    def _envelope(self, sender: str, message: Outgoing, tick: int = 0) -> Envelope:
        envelope = Envelope(sender, message.receiver, message.payload, self.sent, tick)
        self.sent += 1
        return envelope

    @abstractmethod
    def send(self, sender: str, message: Outgoing) -> Envelope:
        """queue a message for delivery"""

    @abstractmethod
    def flush(self) -> List[Delivery]:
        """deliver queued messages, and their replies, until nothing is in flight"""


class DirectTransport(Transport):
    """in order delivery without delay or interference"""

    def __init__(self) -> None:
        super().__init__()
        self.queue: Deque[Envelope] = deque()

    def send(self, sender: str, message: Outgoing) -> Envelope:
        envelope = self._envelope(sender, message)
        self.queue.append(envelope)
        return envelope

    def flush(self) -> List[Delivery]:
        deliveries = []
        while self.queue:
            envelope = self.queue.popleft()
            entity = self.entities.get(envelope.receiver)
            if entity is None:
                continue
            result = entity.handle(envelope.sender, envelope.payload)
            deliveries.append(Delivery(envelope, result))
            for reply in result.replies:
                self.send(envelope.receiver, reply)
        return deliveries
