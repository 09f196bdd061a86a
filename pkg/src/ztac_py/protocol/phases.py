"""
Phase drivers: each function moves one protocol step over a transport inside
the matching tally phase and turns a refused delivery into the exception the
caller expects.
"""

from typing import Collection, List, Mapping, Optional, Sequence

from ztac_py.crypto_core.error import AuthenticationFailure
from ztac_py.crypto_core.hash_chain import KeyHashChain
from ztac_py.crypto_core.primitives import MacKey
from ztac_py.pairing.access_tree import AccessNode
from ztac_py.pairing.ibbe import IbbeParams
from ztac_py.runtime_utils.op_tally import Phase, in_phase
from ztac_py.trust_ledger.merkle import TrustToken

from .csp import Csp
from .entity import ProtocolEntity
from .error import (
    AccessDenied,
    HandshakeFailure,
    IntegrityFailure,
    RejectReason,
    SignatureFailure,
    UnknownId,
)
from .sensor import Sensor
from .transport import Delivery, HandleResult, Outgoing, Transport
from .user import Reading, User
from .wnc import Wnc


def _result_for(deliveries: List[Delivery], sender: str, receiver: str) -> Optional[HandleResult]:
    """result of the first delivery from sender to receiver, None if it never arrived"""
    for delivery in deliveries:
        if delivery.envelope.sender == sender and delivery.envelope.receiver == receiver:
            return delivery.result
    return None


def _send(transport: Transport, sender: ProtocolEntity, message: Outgoing) -> List[Delivery]:
    transport.send(sender.name, message)
    return transport.flush()


def phase1_key_agreement(transport: Transport, initiator: ProtocolEntity, responder: ProtocolEntity) -> MacKey:
    """run the three message handshake; both ends hold the same link key afterwards"""
    with in_phase(Phase.INITIALIZATION):
        _send(transport, initiator, initiator.start_handshake(responder.name))

    if not initiator.has_link(responder.name) or not responder.has_link(initiator.name):
        raise HandshakeFailure(f"no link between {initiator.name} and {responder.name}")
    key = initiator.link_key(responder.name)
    if key != responder.link_key(initiator.name):
        raise HandshakeFailure(f"{initiator.name} and {responder.name} derived different keys")
    return key


def phase1_seed_token(wnc: Wnc, sensor: Sensor) -> TrustToken:
    """initialize the coordinator's trust tree for sensor at full score"""
    with in_phase(Phase.INITIALIZATION):
        return wnc.seed_token(sensor.name)


def phase1_distribute_chain(transport: Transport, wnc: Wnc, sensor: Sensor) -> KeyHashChain:
    """deliver seed, chain length and seed token; the sensor derives its chain"""
    with in_phase(Phase.INITIALIZATION):
        deliveries = _send(transport, wnc, wnc.distribute(sensor.name))

    result = _result_for(deliveries, wnc.name, sensor.name)
    if result is None or not result.accepted or sensor.chain is None:
        detail = "not delivered" if result is None else f"{result.reason} {result.detail}"
        raise AuthenticationFailure(f"provisioning of {sensor.name} failed: {detail}")
    return sensor.chain


def phase1_abe_setup_and_escrow(
    transport: Transport,
    wnc: Wnc,
    csp: Csp,
    identity_labels: Sequence[str],
    data_labels: Sequence[str],
    receivers: Collection[str],
    users: Collection[str],
    policies: Mapping[str, AccessNode],
    ibbe_params: IbbeParams,
) -> None:
    """scheme setup at the coordinator and escrow of PK_2, MK_2 and the sealed identity keys"""
    with in_phase(Phase.INITIALIZATION):
        escrow = wnc.setup_access_structures(identity_labels, data_labels, receivers, users, policies, ibbe_params)
        deliveries = _send(transport, wnc, escrow)

    result = _result_for(deliveries, wnc.name, csp.name)
    if result is None or not result.accepted:
        raise IntegrityFailure(f"escrow discarded by {csp.name}")


def phase2_register(transport: Transport, user: User, csp: Csp) -> None:
    """signed registration; the user ends up holding D and SK_Id"""
    with in_phase(Phase.REGISTRATION):
        deliveries = _send(transport, user, user.registration_request())

    request = _result_for(deliveries, user.name, csp.name)
    if request is None:
        raise SignatureFailure(f"registration request of {user.name} never arrived")
    if not request.accepted:
        if request.reason == RejectReason.UNKNOWN_ID:
            raise UnknownId(user.name)
        raise SignatureFailure(f"registration of {user.name} disregarded: {request.reason}")

    response = _result_for(deliveries, csp.name, user.name)
    if response is None or not response.accepted or not user.registered:
        raise SignatureFailure(f"registration response to {user.name} did not verify")


def phase3_sensor_emit(sensor: Sensor, plaintext: bytes, window: int) -> Outgoing:
    """Enc_hj(M) || TS_(i,j) || HMAC for the current window"""
    with in_phase(Phase.UPLOADING):
        return sensor.emit(plaintext, window)


def phase3_wnc_receive(transport: Transport, sensor: Sensor, wnc: Wnc, message: Outgoing) -> HandleResult:
    """deliver sensor data; an accepted message returns the next token to the sensor"""
    with in_phase(Phase.UPLOADING):
        deliveries = _send(transport, sensor, message)
    result = _result_for(deliveries, sensor.name, wnc.name)
    if result is None:
        return HandleResult(accepted=False, detail="not delivered")
    return result


def phase3_wnc_upload(wnc: Wnc, window: int, attributes: Collection[str]) -> Outgoing:
    """UploadRecord for a window with at least one accepted sensor message"""
    with in_phase(Phase.UPLOADING):
        return wnc.build_upload(window, attributes)


def phase3_csp_validate(transport: Transport, wnc: Wnc, csp: Csp, record: Outgoing) -> HandleResult:
    """deliver an upload for HMAC and trust validation at the cloud provider"""
    with in_phase(Phase.UPLOADING):
        deliveries = _send(transport, wnc, record)
    result = _result_for(deliveries, wnc.name, csp.name)
    if result is None:
        return HandleResult(accepted=False, detail="not delivered")
    return result


def phase3_access(transport: Transport, user: User, csp: Csp, attributes: Collection[str]) -> List[Reading]:
    """
    request every stored record matching attributes and open them. raises
    AccessDenied on a provider denial and the user side error (policy or
    receiver set) of the first record that does not open
    """
    readings_before = len(user.readings)
    failures_before = len(user.failures)
    denials_before = len(user.denials)
    with in_phase(Phase.DOWNLOADING):
        deliveries = _send(transport, user, user.access_request(attributes))

    if len(user.denials) > denials_before:
        raise AccessDenied(user.denials[-1])
    if len(user.failures) > failures_before:
        raise user.failures[failures_before][1]
    response = _result_for(deliveries, csp.name, user.name)
    if response is None or not response.accepted:
        raise IntegrityFailure(f"no valid access response for {user.name}")
    return user.readings[readings_before:]
