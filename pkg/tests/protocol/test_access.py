# pylint: disable=[W0621]
# disable redefined-outer-name, needed for pytest fixtures

import random
from dataclasses import replace

import pytest

from ztac_py.pairing.error import NotAReceiver, PolicyNotSatisfied
from ztac_py.protocol.error import AccessDenied, BothLayersDenied, DenialReason, RejectReason, UnknownId
from ztac_py.protocol.messages import RegisterRequest, decode_message
from ztac_py.protocol.phases import phase2_register, phase3_access
from ztac_py.protocol.user import User
from ztac_py.runtime_utils.op_tally import Phase, Term, recording
from ztac_py.simnet.adversary import flip_bit
from ztac_py.trust_ledger.evaluator import CspEventKind

from ..test_resources import Network, build_network, initialize_network, register_users, transfer_window

POLICIES = {"both": "vital", "policy_only": "vital", "receiver_only": "ecg", "neither": "ecg"}
RECEIVERS = ("both", "receiver_only")
READING = b"hr=71 spo2=98"


@pytest.fixture(scope="module")
def network() -> Network:
    """
    four users covering every combination of the two access layers, and one
    stored record over (vital,) for receivers both and receiver_only
    """
    network = build_network(["w1"], list(POLICIES), seed="ztac-access")
    initialize_network(network, ("vital", "ecg"), RECEIVERS, POLICIES)
    register_users(network)
    results = transfer_window(network, 1, ("vital",), {"w1": READING})
    assert results["w1"].accepted
    assert len(network.csp.records) == 1
    return network


def test_both_layers_grant(network: Network) -> None:
    """
    a user admitted by the policy and the receiver set recovers the reading
    """
    readings = phase3_access(network.transport, network.users["both"], network.csp, ("vital",))

    assert [(reading.sensor, reading.window, reading.plaintext) for reading in readings] == [("w1", 1, READING)]


def test_each_layer_alone_denies(network: Network) -> None:
    """
    passing only one of the two layers is never enough, and the error names
    the failing layer
    """
    record = network.csp.records[0]

    with pytest.raises(NotAReceiver) as excinfo:
        network.users["policy_only"].open_record(record)
    assert excinfo.type is NotAReceiver

    with pytest.raises(PolicyNotSatisfied) as excinfo:
        network.users["receiver_only"].open_record(record)
    assert excinfo.type is PolicyNotSatisfied

    with pytest.raises(BothLayersDenied):
        network.users["neither"].open_record(record)

    with pytest.raises(NotAReceiver):
        phase3_access(network.transport, network.users["policy_only"], network.csp, ("vital",))
    assert not network.users["policy_only"].readings


def test_no_matching_records(network: Network) -> None:
    """
    a request for attributes no record carries is granted with nothing in it
    """
    assert not phase3_access(network.transport, network.users["both"], network.csp, ("ecg",))


def test_download_costs(network: Network) -> None:
    """
    one record with one sensor: the provider verifies once, the user pays one
    ABE decryption, one IBBE decryption and two symmetric decryptions
    """
    with recording() as tally:
        phase3_access(network.transport, network.users["both"], network.csp, ("vital",))

    phase = Phase.DOWNLOADING
    assert tally.cell(phase, Term.VER, role="csp") == 1
    assert tally.cell(phase, Term.ABE_DEC, entity="both") == 1
    assert tally.cell(phase, Term.IBBE, entity="both") == 1
    assert tally.cell(phase, Term.ENC, entity="both") == 2


def test_unknown_user(network: Network) -> None:
    """
    an identity without an escrowed key can neither register nor download
    """
    stranger = User("stranger", random.Random("stranger"), network.directory, network.authority, "csp")
    network.transport.register(stranger)

    with pytest.raises(UnknownId):
        phase2_register(network.transport, stranger, network.csp)

    with pytest.raises(AccessDenied) as excinfo:
        phase3_access(network.transport, stranger, network.csp, ("vital",))
    assert excinfo.value.reason == DenialReason.NOT_REGISTERED


def test_forged_registration(network: Network) -> None:
    """
    a registration whose signature does not verify is disregarded and counted
    against the user
    """
    request = decode_message(network.users["both"].registration_request().payload)
    assert isinstance(request, RegisterRequest)
    forged = replace(request, signature=flip_bit(request.signature, 9))

    result = network.csp.handle("both", forged.encode())

    assert result.reason == RejectReason.SIGNATURE_FAILURE
    assert network.csp.trust_record("both").score == pytest.approx(90.0)


def test_untrusted_user(network: Network) -> None:
    """
    once its score falls below the threshold a registered user is denied
    """
    for _ in range(4):
        network.csp.record_event("neither", CspEventKind.SIGNATURE_FAILURE)
    network.csp.report_abuse("neither", 1.0)
    assert not network.csp.granted("neither")

    with pytest.raises(AccessDenied) as excinfo:
        phase3_access(network.transport, network.users["neither"], network.csp, ("vital",))
    assert excinfo.value.reason == DenialReason.UNTRUSTED
