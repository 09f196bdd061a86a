import random
from typing import Iterator, Optional

from ztac_py.crypto_core.error import CryptoCoreException
from ztac_py.crypto_core.hash_chain import KeyHashChain, chain_generate, chain_key
from ztac_py.crypto_core.primitives import SymKey, seal, unseal
from ztac_py.trust_ledger.merkle import TrustToken

from .entity import Directory, ProtocolEntity, Role
from .error import ChainExhausted, LinkNotEstablished, RejectReason
from .messages import Provision, ProvisionBundle, SensorData, TokenUpdate, WireMessage, sensor_aad
from .transport import HandleResult, Outgoing

PROVISION_PURPOSE = b"provision"


def provision_aad(wnc: str, sensor: str) -> bytes:
    """associated data of the provisioning bundle"""
    return b"ztac-provision:" + wnc.encode() + b"->" + sensor.encode()


class Sensor(ProtocolEntity):
    """
    Wearable sensor W_i. Holds its coordinator link, the key hash chain, its
    chain index j and the current trust token. The token is opaque to the
    sensor; it only moves forward when the coordinator acknowledges.
    """

    role = Role.SENSOR

    def __init__(self, name: str, rng: random.Random, directory: Directory, wnc: str) -> None:
        super().__init__(name, rng, directory)
        self.wnc = wnc
        self.chain: Optional[KeyHashChain] = None
        self.epoch = 0
        self.token: Optional[TrustToken] = None

    @property
    def provisioned(self) -> bool:
        """has the provisioning bundle been received?"""
        return self.chain is not None and self.token is not None

    def _handle_message(self, message: WireMessage) -> HandleResult:
        if message.sender != self.wnc:
            return HandleResult.reject(RejectReason.WRONG_SENDER, "sensors only talk to their coordinator")
        if isinstance(message, Provision):
            return self._on_provision(message)
        if isinstance(message, TokenUpdate):
            return self._on_token_update(message)
        return HandleResult.reject(RejectReason.UNEXPECTED, f"{message.MESSAGE_TYPE} is not handled by sensors")

    def _on_provision(self, message: Provision) -> HandleResult:
        if not self.has_link(self.wnc):
            return HandleResult.reject(RejectReason.NO_LINK)
        try:
            key = self.link_cipher_key(self.wnc, PROVISION_PURPOSE)
            bundle = ProvisionBundle.from_bytes(unseal(key, message.sealed, provision_aad(self.wnc, self.name)))
            token = TrustToken.from_bytes(bundle.token)
            chain = chain_generate(SymKey(bundle.seed), bundle.length)
        except CryptoCoreException as exception:
            return HandleResult.reject(RejectReason.AUTH_FAILURE, str(exception))

        self.chain = chain
        self.token = token
        self.epoch = token.epoch
        return HandleResult.accept()

    def _on_token_update(self, message: TokenUpdate) -> HandleResult:
        if not self.mac_valid(message, message.tag):
            return HandleResult.reject(RejectReason.HMAC_FAILURE)
        try:
            token = TrustToken.from_bytes(message.token)
        except CryptoCoreException as exception:
            return HandleResult.reject(RejectReason.MALFORMED, str(exception))
        if token.epoch <= self.epoch:
            return HandleResult.reject(RejectReason.EPOCH_WINDOW, f"stale token for epoch {token.epoch}")

        self.token = token
        self.epoch = token.epoch
        return HandleResult.accept()

    def emit(self, plaintext: bytes, window: int, forge: bool = False) -> Outgoing:
        """
        SensorData for plaintext under h_j. forge corrupts the HMAC tag, which
        scenarios use to script authentication failures.
        """
        if self.chain is None or self.token is None:
            raise LinkNotEstablished(self.name, self.wnc)
        if self.epoch > self.chain.length:
            raise ChainExhausted(self.epoch, self.chain.length)

        with self.acting():
            key = chain_key(self.chain, self.epoch)
            ciphertext = seal(key, plaintext, self.nonces.next(), sensor_aad(self.name, self.epoch, window))
            unsigned = SensorData(self.name, self.wnc, self.epoch, window, ciphertext, self.token.to_bytes())
            tag = self.mac_for(unsigned)
        if forge:
            tag = bytes([tag[0] ^ 0xFF]) + tag[1:]
        message = SensorData(
            unsigned.sender, unsigned.receiver, unsigned.epoch, unsigned.window, ciphertext, unsigned.token, tag
        )
        return Outgoing(self.wnc, message.encode())

    def state_blobs(self) -> Iterator[bytes]:
        yield from super().state_blobs()
        if self.chain is not None:
            yield from (key.raw for key in self.chain.keys)
        if self.token is not None:
            yield self.token.to_bytes()
