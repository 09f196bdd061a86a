import random

import pytest

from ztac_py.crypto_core.hash_chain import chain_key
from ztac_py.protocol.entity import Directory
from ztac_py.protocol.error import HandshakeFailure, LinkNotEstablished
from ztac_py.protocol.phases import phase1_distribute_chain, phase1_key_agreement, phase1_seed_token
from ztac_py.protocol.sensor import Sensor
from ztac_py.runtime_utils.op_tally import Phase, Term, recording

from ..test_resources import build_network


def test_key_agreement() -> None:
    """
    both ends of a handshake hold the same key, and keys differ per link
    """
    network = build_network(["w1", "w2"], [])
    wnc = network.wnc

    first = phase1_key_agreement(network.transport, wnc, network.sensors["w1"])
    second = phase1_key_agreement(network.transport, wnc, network.sensors["w2"])

    assert network.sensors["w1"].link_key("wnc") == first
    assert wnc.link_key("w1") == first
    assert first != second

    with pytest.raises(LinkNotEstablished):
        network.sensors["w1"].link_key("w2")


def test_unpinned_peer() -> None:
    """
    a responder that can not look up the initiator's key refuses the handshake
    """
    network = build_network(["w1"], [])
    stranger = Sensor("w9", random.Random("stranger"), Directory(root_key=network.directory.root_key), "wnc")
    network.transport.register(stranger)

    with pytest.raises(HandshakeFailure):
        phase1_key_agreement(network.transport, network.wnc, stranger)
    assert not network.wnc.has_link("w9")


def test_provisioning() -> None:
    """
    the sensor derives the coordinator's chain from the delivered seed and
    starts at the seed token
    """
    network = build_network(["w1"], [], chain_length=6)
    wnc, sensor = network.wnc, network.sensors["w1"]

    phase1_key_agreement(network.transport, wnc, sensor)
    seed_token = phase1_seed_token(wnc, sensor)
    chain = phase1_distribute_chain(network.transport, wnc, sensor)

    assert sensor.provisioned
    assert sensor.token == seed_token
    assert sensor.epoch == 0
    assert chain.length == 6
    assert wnc.sensors["w1"].chain is not None
    assert chain.keys == wnc.sensors["w1"].chain.keys
    assert chain_key(chain, 0) == wnc.sensors["w1"].seed


def test_initialization_costs() -> None:
    """
    a sensor pays one agreement, one decryption and n hashes; the coordinator
    one agreement, one encryption and n + 1 hashes
    """
    network = build_network(["w1"], [], chain_length=5)
    wnc, sensor = network.wnc, network.sensors["w1"]

    with recording() as tally:
        phase1_key_agreement(network.transport, wnc, sensor)
        phase1_seed_token(wnc, sensor)
        phase1_distribute_chain(network.transport, wnc, sensor)

    phase = Phase.INITIALIZATION
    assert tally.cell(phase, Term.ECDH, entity="w1") == 1
    assert tally.cell(phase, Term.ENC, entity="w1") == 1
    assert tally.cell(phase, Term.SHA, entity="w1") == 5
    assert tally.cell(phase, Term.ECDH, role="wnc") == 1
    assert tally.cell(phase, Term.ENC, role="wnc") == 1
    assert tally.cell(phase, Term.SHA, role="wnc") == 6
