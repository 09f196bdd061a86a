import random
from typing import Tuple

import pytest

from ztac_py.crypto_core.certificates import RootAuthority
from ztac_py.protocol.entity import Directory
from ztac_py.protocol.error import HandshakeFailure
from ztac_py.protocol.messages import MessageType
from ztac_py.protocol.phases import phase1_key_agreement
from ztac_py.protocol.sensor import Sensor
from ztac_py.protocol.wnc import Wnc
from ztac_py.simnet.adversary import ActionKind, Adversary, flip_bit, parse_action, parse_script
from ztac_py.simnet.bus import SimBus
from ztac_py.simnet.error import AdversaryScriptError


def wired(script: str = "") -> Tuple[SimBus, Wnc, Sensor]:
    """a coordinator and one sensor on a bus run by script"""
    rng = random.Random("ztac-bus")
    directory = Directory(root_key=RootAuthority("root", rng).verification_key)
    wnc = Wnc("wnc", rng, directory, "csp")
    sensor = Sensor("w1", rng, directory, "wnc")
    adversary = Adversary(parse_script(script), random.Random(1)) if script else None
    bus = SimBus(adversary)
    bus.register(wnc, sensor)
    return bus, wnc, sensor


def test_flip_bit() -> None:
    """
    bits count from the most significant bit of the first byte and wrap
    """
    assert flip_bit(b"\x00\x00", 0) == b"\x80\x00"
    assert flip_bit(b"\x00\x00", 15) == b"\x00\x01"
    assert flip_bit(b"\x00\x00", 16) == b"\x80\x00"


def test_parse_action() -> None:
    """
    script lines become selectors and options
    """
    action = parse_action("flip type=sensor_data link=w1->wnc index=2 bit=17")
    assert action.kind == ActionKind.FLIP
    assert action.selector.message_type == MessageType.SENSOR_DATA
    assert action.selector.link == ("w1", "wnc")
    assert action.selector.index == 2
    assert action.bit == 17

    wildcard = parse_action("DROP type=* index=*")
    assert wildcard.kind == ActionKind.DROP
    assert wildcard.selector.message_type is None
    assert wildcard.selector.index is None

    assert parse_action("replace type=TOKEN_UPDATE hex=00ff").data == b"\x00\xff"
    assert parse_action("delay type=HELLO ticks=5").ticks == 5
    assert parse_action("replay type=UPLOAD_RECORD of=12").of == 12


def test_parse_script() -> None:
    """
    comments and blank lines are skipped, the first bad line is reported
    """
    actions = parse_script("# header\n\ndrop type=HELLO   # lose the opener\ndelay type=PROVISION ticks=2\n")
    assert [action.kind for action in actions] == [ActionKind.DROP, ActionKind.DELAY]

    with pytest.raises(AdversaryScriptError) as excinfo:
        parse_script("drop type=HELLO\nsteal type=HELLO\n")
    assert excinfo.value.line_number == 2


@pytest.mark.parametrize(
    "line",
    [
        "drop type=NOT_A_TYPE",
        "drop link=w1",
        "drop index=-1",
        "flip bit=high",
        "replace type=HELLO",
        "replace type=HELLO hex=zz",
        "drop colour=red",
        "drop type",
    ],
)
def test_bad_actions(line: str) -> None:
    """
    malformed actions are refused with their line number
    """
    with pytest.raises(AdversaryScriptError):
        parse_action(line, 4)


def test_clean_bus() -> None:
    """
    without an adversary every message is delivered exactly once
    """
    bus, wnc, sensor = wired()
    phase1_key_agreement(bus, wnc, sensor)

    stats = bus.stats()
    assert (stats.sent, stats.delivered, stats.dropped, stats.in_flight) == (3, 3, 0, 0)
    assert stats.balanced
    assert bus.tick == 3


def test_delayed_handshake() -> None:
    """
    delays move deliveries later without losing them
    """
    bus, wnc, sensor = wired("delay type=HELLO ticks=3")
    phase1_key_agreement(bus, wnc, sensor)

    stats = bus.stats()
    assert stats.delayed == 1
    assert stats.delivered == 3
    assert stats.balanced
    assert bus.tick == 6


def test_dropped_handshake() -> None:
    """
    a dropped confirmation leaves the responder without a link, and the
    conservation counters still balance
    """
    bus, wnc, sensor = wired("drop type=HELLO_FINISH")
    with pytest.raises(HandshakeFailure):
        phase1_key_agreement(bus, wnc, sensor)

    stats = bus.stats()
    assert (stats.sent, stats.delivered, stats.dropped) == (3, 2, 1)
    assert stats.balanced
    assert not sensor.has_link("wnc")
    assert bus.adversary is not None
    assert [str(item.kind) for item in bus.adversary.log] == ["drop"]


def test_tampered_confirmation() -> None:
    """
    a flipped handshake message is counted as tampered and never accepted
    """
    bus, wnc, sensor = wired("flip type=HELLO_REPLY bit=*")
    with pytest.raises(HandshakeFailure):
        phase1_key_agreement(bus, wnc, sensor)

    stats = bus.stats()
    assert stats.tampered == 1
    assert stats.tampered_accepted == 0
    assert not wnc.has_link("w1")
