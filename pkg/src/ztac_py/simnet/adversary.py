"""
Scripted network adversary with full control of the channel and no keys.

Scripts hold one action per line:

    <drop|flip|replace|replay|delay> type=<MESSAGE_TYPE|*> [link=a->b]
        [index=N|*] [bit=N|*] [hex=...] [of=N] [ticks=N]

`index` selects the N-th (0 based) message matching type and link, `*` or no
index selects every match. `bit=*` flips a bit drawn from the run's random
generator. `of` names the send index of the message a replay re-injects;
without it the matched message is delivered twice.
"""

# use annotations to type hint a method with the type of the enclosing class
from __future__ import annotations

import random
from dataclasses import dataclass, replace
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

from ztac_py.crypto_core.error import MalformedEncoding
from ztac_py.protocol.messages import MessageType, peek_type
from ztac_py.protocol.transport import Envelope

from .error import AdversaryScriptError


class ActionKind(Enum):
    """what the adversary does to a selected message"""

    DROP = "drop"
    FLIP = "flip"
    REPLACE = "replace"
    REPLAY = "replay"
    DELAY = "delay"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Selector:
    """which in-flight messages an action applies to"""

    message_type: Optional[MessageType] = None
    link: Optional[Tuple[str, str]] = None
    index: Optional[int] = None

    def matches(self, envelope: Envelope) -> bool:
        """does envelope have the selected type and link? index is counted by the adversary"""
        if self.link is not None and (envelope.sender, envelope.receiver) != self.link:
            return False
        if self.message_type is None:
            return True
        try:
            return peek_type(envelope.payload) == self.message_type
        except MalformedEncoding:
            return False


@dataclass(frozen=True)
class AdversaryAction:
    """one script line"""

    kind: ActionKind
    selector: Selector = Selector()
    bit: Optional[int] = None
    data: bytes = b""
    of: Optional[int] = None
    ticks: int = 1


@dataclass(frozen=True)
class Scheduled:
    """an envelope the bus should deliver, delay ticks later than normal"""

    envelope: Envelope
    delay: int = 0
    tampered: bool = False
    injected: bool = False


@dataclass(frozen=True)
class Interference:
    """log entry of one applied action"""

    index: int
    kind: ActionKind
    link: Tuple[str, str]
    detail: str = ""


def flip_bit(data: bytes, bit: int) -> bytes:
    """data with bit (counted from the first byte's most significant bit) inverted"""
    position = bit % (len(data) * 8)
    mutated = bytearray(data)
    mutated[position // 8] ^= 0x80 >> (position % 8)
    return bytes(mutated)


class Adversary:
    """
    Dolev-Yao attacker over a simulated bus. The first action whose selector
    matches an envelope decides its fate; unmatched envelopes pass untouched.
    """

    def __init__(self, actions: Sequence[AdversaryAction], rng: random.Random) -> None:
        self.actions = list(actions)
        self.rng = rng
        self._matches = [0] * len(self.actions)
        self.log: List[Interference] = []

    def intercept(self, envelope: Envelope, transcript: Sequence[Envelope]) -> List[Scheduled]:
        """what becomes of envelope; transcript holds every envelope sent before it"""
        for position, action in enumerate(self.actions):
            if not action.selector.matches(envelope):
                continue
            count = self._matches[position]
            self._matches[position] += 1
            if action.selector.index is not None and count != action.selector.index:
                continue
            return self._apply(action, envelope, transcript)
        return [Scheduled(envelope)]

    def _record(self, action: AdversaryAction, envelope: Envelope, detail: str = "") -> None:
        self.log.append(Interference(envelope.index, action.kind, (envelope.sender, envelope.receiver), detail))

    def _apply(self, action: AdversaryAction, envelope: Envelope, transcript: Sequence[Envelope]) -> List[Scheduled]:
        if action.kind == ActionKind.DROP:
            self._record(action, envelope)
            return []

        if action.kind == ActionKind.FLIP:
            if not envelope.payload:
                return [Scheduled(envelope)]
            bit = self.rng.randrange(len(envelope.payload) * 8) if action.bit is None else action.bit
            self._record(action, envelope, f"bit={bit % (len(envelope.payload) * 8)}")
            return [Scheduled(replace(envelope, payload=flip_bit(envelope.payload, bit)), tampered=True)]

        if action.kind == ActionKind.REPLACE:
            self._record(action, envelope, f"bytes={len(action.data)}")
            tampered = action.data != envelope.payload
            return [Scheduled(replace(envelope, payload=action.data), tampered=tampered)]

        if action.kind == ActionKind.REPLAY:
            source = envelope
            if action.of is not None and 0 <= action.of < len(transcript):
                source = transcript[action.of]
            self._record(action, envelope, f"of={source.index}")
            copy = Envelope(source.sender, source.receiver, source.payload, envelope.index, envelope.tick)
            return [Scheduled(envelope), Scheduled(copy, injected=True)]

        self._record(action, envelope, f"ticks={action.ticks}")
        return [Scheduled(envelope, delay=action.ticks)]


def _int_or_star(key: str, value: str, line_number: int) -> Optional[int]:
    if value == "*":
        return None
    try:
        number = int(value)
    except ValueError as exception:
        raise AdversaryScriptError(line_number, f"{key} must be an integer or *") from exception
    if number < 0:
        raise AdversaryScriptError(line_number, f"{key} must not be negative")
    return number


def parse_action(line: str, line_number: int = 1) -> AdversaryAction:
    """one script line as an AdversaryAction"""
    words = line.split()
    try:
        kind = ActionKind(words[0].lower())
    except ValueError as exception:
        raise AdversaryScriptError(line_number, f"unknown action {words[0]!r}") from exception

    options: Dict[str, str] = {}
    for word in words[1:]:
        key, separator, value = word.partition("=")
        if not separator:
            raise AdversaryScriptError(line_number, f"expected key=value, got {word!r}")
        options[key.lower()] = value

    unknown = set(options) - {"type", "link", "index", "bit", "hex", "of", "ticks"}
    if unknown:
        raise AdversaryScriptError(line_number, f"unknown options {sorted(unknown)}")

    message_type = None
    if options.get("type", "*") != "*":
        try:
            message_type = MessageType.from_name(options["type"])
        except ValueError as exception:
            raise AdversaryScriptError(line_number, str(exception)) from exception

    link = None
    if "link" in options:
        sender, arrow, receiver = options["link"].partition("->")
        if not arrow or not sender or not receiver:
            raise AdversaryScriptError(line_number, "link must look like sender->receiver")
        link = (sender, receiver)

    data = b""
    if "hex" in options:
        try:
            data = bytes.fromhex(options["hex"])
        except ValueError as exception:
            raise AdversaryScriptError(line_number, "hex is not valid hexadecimal") from exception
    elif kind == ActionKind.REPLACE:
        raise AdversaryScriptError(line_number, "replace needs hex=")

    ticks = _int_or_star("ticks", options.get("ticks", "1"), line_number)
    return AdversaryAction(
        kind=kind,
        selector=Selector(message_type, link, _int_or_star("index", options.get("index", "*"), line_number)),
        bit=_int_or_star("bit", options.get("bit", "*"), line_number),
        data=data,
        of=_int_or_star("of", options.get("of", "*"), line_number),
        ticks=1 if ticks is None else ticks,
    )


def parse_script(text: str) -> List[AdversaryAction]:
    """every action of a script, AdversaryScriptError on the first bad line"""
    actions = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            actions.append(parse_action(line, number))
    return actions


def load_script(path: str) -> List[AdversaryAction]:
    """parse an adversary script file"""
    try:
        with open(path, "r", encoding="utf-8") as script_file:
            return parse_script(script_file.read())
    except OSError as exception:
        raise AdversaryScriptError(0, f"can not read {path}: {exception.strerror}") from exception
