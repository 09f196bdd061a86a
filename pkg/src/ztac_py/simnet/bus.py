# use annotations to type hint a method with the type of the enclosing class
from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Iterator, List, Optional

from ztac_py.protocol.transport import Delivery, Envelope, HandleResult, Outgoing, Transport

from .adversary import Adversary, Scheduled

LATENCY = 1


@dataclass(frozen=True)
class BusDelivery(Delivery):
    """a delivery plus what the adversary did to it"""

    tampered: bool = False
    injected: bool = False


@dataclass(frozen=True)
class BusStats:
    """message conservation counters"""

    sent: int
    delivered: int
    dropped: int
    delayed: int
    injected: int
    in_flight: int
    tampered: int
    tampered_accepted: int

    @property
    def balanced(self) -> bool:
        """is every sent message exactly one of delivered, dropped or still in flight?"""
        return self.sent == self.delivered + self.dropped + self.in_flight


@dataclass(order=True)
class _Pending:
    tick: int
    sequence: int
    item: Scheduled = field(compare=False)


class SimBus(Transport):
    """
    Deterministic discrete tick bus. Every send is delivered LATENCY ticks
    later (plus any adversary delay); deliveries due at the same tick run in
    send order. Replies are sent at the tick of the delivery that caused them.
    """

    def __init__(self, adversary: Optional[Adversary] = None, latency: int = LATENCY) -> None:
        super().__init__()
        self.adversary = adversary
        self.latency = latency
        self.tick = 0
        self.transcript: List[Envelope] = []
        self.log: List[BusDelivery] = []

        self._queue: List[_Pending] = []
        self._sequence = 0
        self._dropped = 0
        self._delayed = 0
        self._injected = 0
        self._delivered_originals = 0

    def send(self, sender: str, message: Outgoing) -> Envelope:
        envelope = self._envelope(sender, message, self.tick)
        if self.adversary is None:
            scheduled = [Scheduled(envelope)]
        else:
            scheduled = self.adversary.intercept(envelope, self.transcript)
        self.transcript.append(envelope)

        if not scheduled:
            self._dropped += 1
        for item in scheduled:
            if item.injected:
                self._injected += 1
            if item.delay:
                self._delayed += 1
            heapq.heappush(self._queue, _Pending(self.tick + self.latency + item.delay, self._sequence, item))
            self._sequence += 1
        return envelope

    def _deliver(self, item: Scheduled) -> BusDelivery:
        envelope = item.envelope
        entity = self.entities.get(envelope.receiver)
        if entity is None:
            result = HandleResult(accepted=False, detail=f"no entity named {envelope.receiver}")
        else:
            result = entity.handle(envelope.sender, envelope.payload)
        if not item.injected:
            self._delivered_originals += 1

        delivery = BusDelivery(envelope, result, tampered=item.tampered, injected=item.injected)
        self.log.append(delivery)
        for reply in result.replies:
            self.send(envelope.receiver, reply)
        return delivery

    def run_until(self, tick: int) -> List[Delivery]:
        """deliver everything due at or before tick, then move the clock to tick"""
        deliveries: List[Delivery] = []
        while self._queue and self._queue[0].tick <= tick:
            pending = heapq.heappop(self._queue)
            self.tick = pending.tick
            deliveries.append(self._deliver(pending.item))
        self.tick = max(self.tick, tick)
        return deliveries

    def flush(self) -> List[Delivery]:
        deliveries: List[Delivery] = []
        while self._queue:
            deliveries.extend(self.run_until(self._queue[0].tick))
        return deliveries

    @property
    def in_flight(self) -> int:
        """originals scheduled but not yet delivered"""
        return sum(1 for pending in self._queue if not pending.item.injected)

    def stats(self) -> BusStats:
        """conservation counters for the run so far"""
        tampered = [delivery for delivery in self.log if delivery.tampered]
        return BusStats(
            sent=self.sent,
            delivered=self._delivered_originals,
            dropped=self._dropped,
            delayed=self._delayed,
            injected=self._injected,
            in_flight=self.in_flight,
            tampered=len(tampered),
            tampered_accepted=sum(
                1 for delivery in tampered if delivery.result.accepted and not delivery.result.provisional
            ),
        )

    def wire_bytes(self) -> Iterator[bytes]:
        """every payload that crossed the bus, as sent and as delivered"""
        for envelope in self.transcript:
            yield envelope.payload
        for delivery in self.log:
            yield delivery.envelope.payload
