"""
Opaque EAP-5G stand-in carried in IKE_AUTH.

Only the framing is real: EAP expanded type, 3GPP vendor id and EAP-5G message ids. NAS content is
zero filled to the configured packet sizes.
"""
# Standard Libraries
import struct
# Third party packages
from pydantic import ValidationError
from pydantic.typing import Optional
# Local package
from qkd_ike.config import LOGGER_HANDSHAKE
from qkd_ike.constants import (
    EapCode, Eap5gMessageId, EAP_5G_HEADER, EAP_HEADER, EAP_TYPE_EXPANDED, EAP_VENDOR_3GPP, EAP_VENDOR_TYPE_EAP_5G
)
from qkd_ike.exceptions import ProtocolError
from qkd_ike.keys import prf
from qkd_ike.models.handshake import EapPacket, EapRoundPlan
from qkd_ike.models.keys import CryptoCounters
# Local module

LOGGER = LOGGER_HANDSHAKE

MSK_LABEL = b"EAP-5G MSK"


def _build_5g(code: int, identifier: int, length: int, message_id: int) -> bytes:
    if length < EAP_5G_HEADER.size:
        raise ValueError(f"EAP-5G packet length {length} is below the {EAP_5G_HEADER.size} byte header")
    header = EAP_5G_HEADER.pack(
        code, identifier & 0xFF, length, EAP_TYPE_EXPANDED, EAP_VENDOR_3GPP.to_bytes(3, "big"),
        EAP_VENDOR_TYPE_EAP_5G, message_id, 0
    )
    return header + bytes(length - EAP_5G_HEADER.size)


def build_request(identifier: int, length: int, message_id: int = Eap5gMessageId.NAS) -> bytes:
    return _build_5g(code=EapCode.REQUEST, identifier=identifier, length=length, message_id=message_id)


def build_response(identifier: int, length: int, message_id: int = Eap5gMessageId.NAS) -> bytes:
    return _build_5g(code=EapCode.RESPONSE, identifier=identifier, length=length, message_id=message_id)


def build_success(identifier: int) -> bytes:
    return EAP_HEADER.pack(EapCode.SUCCESS, identifier & 0xFF, EAP_HEADER.size)


def build_failure(identifier: int) -> bytes:
    return EAP_HEADER.pack(EapCode.FAILURE, identifier & 0xFF, EAP_HEADER.size)


def parse(data: bytes) -> EapPacket:
    """Raises ProtocolError on anything that is not a well formed EAP-5G, success or failure packet."""
    try:
        code, identifier, length = EAP_HEADER.unpack_from(data, 0)
        if length != len(data):
            raise ValueError(f"EAP length field {length} does not match {len(data)} bytes")
        if code in (EapCode.SUCCESS, EapCode.FAILURE):
            return EapPacket(code=code, identifier=identifier, length=length)
        _, _, _, eap_type, vendor_id, vendor_type, message_id, _ = EAP_5G_HEADER.unpack_from(data, 0)
        return EapPacket(
            code=code, identifier=identifier, length=length, eap_type=eap_type,
            vendor_id=int.from_bytes(vendor_id, "big"), vendor_type=vendor_type, message_id=message_id,
            body=bytes(data[EAP_5G_HEADER.size:])
        )
    except (struct.error, ValueError, ValidationError) as e:
        msg = f"Malformed EAP packet: {repr(e)}"
        LOGGER.error(msg)
        raise ProtocolError(msg, phase="AUTH")


def eap_msk(sk_d: bytes, nonce_i: bytes, nonce_r: bytes, counters: Optional[CryptoCounters] = None) -> bytes:
    """Stand-in for the MSK both ends would export from a real EAP-5G run."""
    return prf(key=sk_d, data=MSK_LABEL + nonce_i + nonce_r, counters=counters)


class EapServer(object):
    """N3IWF side of the stub. Round n is the n-th EAP message the N3IWF sends."""

    def __init__(self, plan: EapRoundPlan):
        self.plan = plan
        self.round = 0

    @property
    def finished(self) -> bool:
        return self.round >= self.plan.round_count

    def next_message(self) -> bytes:
        self.round += 1
        if self.plan.fail_at_round == self.round:
            LOGGER.info(f"Injecting EAP-Failure at round {self.round}")
            return build_failure(identifier=self.round)
        if self.round == self.plan.round_count:
            return build_success(identifier=self.round)
        message_id = Eap5gMessageId.START if self.round == 1 else Eap5gMessageId.NAS
        return build_request(identifier=self.round, length=self.plan.request_length(self.round), message_id=message_id)

    def check_response(self, data: bytes) -> EapPacket:
        packet = parse(data)
        if packet.code != EapCode.RESPONSE or packet.identifier != self.round & 0xFF:
            msg = f"Unexpected EAP packet code={packet.code} id={packet.identifier} in round {self.round}"
            LOGGER.error(msg)
            raise ProtocolError(msg, phase="AUTH")
        return packet


class EapPeer(object):
    """UE side of the stub."""

    def __init__(self, plan: EapRoundPlan):
        self.plan = plan

    def answer(self, packet: EapPacket) -> bytes:
        if packet.code != EapCode.REQUEST:
            msg = f"EAP packet with code {packet.code} cannot be answered"
            LOGGER.error(msg)
            raise ProtocolError(msg, phase="AUTH")
        return build_response(identifier=packet.identifier, length=self.plan.response_length(packet.identifier))
