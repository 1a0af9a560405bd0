# Standard Libraries
import ipaddress
# Third party packages
from pydantic import root_validator, validator, conint, conbytes
from pydantic.typing import List, Optional, Literal, Union, Type
# Local package
from qkd_ike.constants import (
    PayloadType, ExchangeType, ProtocolId, TransformType, NotifyType, AuthMethod, IdType, CertEncoding, TsType,
    CfgType, SK_IV_LENGTH, SK_ICV_LENGTH, SK_BLOCK_LENGTH
)
from qkd_ike.fields import IKE_SPI, NONCE, UINT8, UINT16, MESSAGE_ID, NOTIFY_TYPE
from qkd_ike.models.BaseModels import WireModel
# Local module

__all__ = [
    'IkeHeader', 'IkeWireHeader', 'Transform', 'Proposal',
    'SaPayload', 'KePayload', 'IdPayload', 'CertPayload', 'AuthPayload', 'NoncePayload', 'NotifyPayload',
    'TrafficSelector', 'TsPayload', 'CpAttribute', 'CpPayload', 'EapPayload', 'SkPayload',
    'Payload', 'PAYLOAD_CLASSES', 'IkeMessage'
]


class IkeHeader(WireModel):

    initiator_spi: IKE_SPI
    responder_spi: IKE_SPI = bytes(8)
    major_version: Literal[2] = 2
    minor_version: conint(ge=0, le=15) = 0
    exchange_type: Literal[34, 35, 36, 37]
    initiator: bool
    response: bool = False
    message_id: MESSAGE_ID = 0

    @property
    def exchange_name(self) -> str:
        return ExchangeType(self.exchange_type).name


class IkeWireHeader(IkeHeader):
    """Header as found on the wire, including the fields computed by the encoder."""

    next_payload: UINT8
    length: conint(ge=28, le=4294967295)


class Transform(WireModel):

    transform_type: conint(ge=1, le=255)
    transform_id: UINT16
    key_length: Optional[UINT16]

    @property
    def is_dh(self) -> bool:
        return self.transform_type == TransformType.DH


class Proposal(WireModel):

    number: conint(ge=1, le=255) = 1
    protocol: Literal[1, 3] = ProtocolId.IKE.value
    spi: conbytes(max_length=255) = b""
    transforms: List[Transform]

    @property
    def dh_transforms(self) -> List[Transform]:
        return [t for t in self.transforms if t.is_dh]

    def transform_ids(self, transform_type: int) -> List[int]:
        return [t.transform_id for t in self.transforms if t.transform_type == transform_type]


class SaPayload(WireModel):

    payload_type: Literal[33] = PayloadType.SA.value
    proposals: List[Proposal]

    @validator("proposals", allow_reuse=True)
    def validate_proposal_numbers(cls, value):
        if len(value) == 0:
            raise AssertionError("SA payload needs at least one proposal")
        return value


class KePayload(WireModel):

    payload_type: Literal[34] = PayloadType.KE.value
    dh_group: UINT16
    public_value: bytes


class IdPayload(WireModel):

    payload_type: Literal[35, 36] = PayloadType.IDi.value
    id_type: UINT8 = IdType.FQDN.value
    value: bytes


class CertPayload(WireModel):

    payload_type: Literal[37] = PayloadType.CERT.value
    encoding: UINT8 = CertEncoding.X509_SIGNATURE.value
    data: bytes


class AuthPayload(WireModel):

    payload_type: Literal[39] = PayloadType.AUTH.value
    auth_method: Literal[1, 2] = AuthMethod.SHARED_KEY.value
    data: bytes


class NoncePayload(WireModel):

    payload_type: Literal[40] = PayloadType.NONCE.value
    nonce: NONCE


class NotifyPayload(WireModel):

    payload_type: Literal[41] = PayloadType.NOTIFY.value
    protocol_id: UINT8 = ProtocolId.NONE.value
    spi: conbytes(max_length=255) = b""
    notify_type: NOTIFY_TYPE
    data: bytes = b""

    @property
    def is_error(self) -> bool:
        return self.notify_type < 16384

    @property
    def type_name(self) -> str:
        try:
            return NotifyType(self.notify_type).name
        except ValueError:
            return str(self.notify_type)


class TrafficSelector(WireModel):

    ts_type: Literal[7] = TsType.IPV4_ADDR_RANGE.value
    ip_protocol: UINT8 = 0
    start_port: UINT16 = 0
    end_port: UINT16 = 65535
    start_address: ipaddress.IPv4Address = ipaddress.IPv4Address("0.0.0.0")
    end_address: ipaddress.IPv4Address = ipaddress.IPv4Address("255.255.255.255")

    @root_validator(allow_reuse=True)
    def validate_ranges(cls, values):
        if values.get("start_port") is not None and values.get("end_port") is not None:
            if values["start_port"] > values["end_port"]:
                raise AssertionError("start_port must not exceed end_port")
        if values.get("start_address") is not None and values.get("end_address") is not None:
            if values["start_address"] > values["end_address"]:
                raise AssertionError("start_address must not exceed end_address")
        return values


class TsPayload(WireModel):

    payload_type: Literal[44, 45] = PayloadType.TSi.value
    selectors: List[TrafficSelector] = [TrafficSelector()]


class CpAttribute(WireModel):

    attribute_type: conint(ge=0, le=0x7FFF)
    value: bytes = b""


class CpPayload(WireModel):

    payload_type: Literal[47] = PayloadType.CP.value
    cfg_type: UINT8 = CfgType.CFG_REQUEST.value
    attributes: List[CpAttribute] = []


class EapPayload(WireModel):

    payload_type: Literal[48] = PayloadType.EAP.value
    data: conbytes(min_length=4)


class SkPayload(WireModel):
    """Encrypted and authenticated payload. inner_type is the type of the first protected payload."""

    payload_type: Literal[46] = PayloadType.SK.value
    inner_type: UINT8
    iv: conbytes(min_length=SK_IV_LENGTH, max_length=SK_IV_LENGTH)
    ciphertext: bytes
    integrity_tag: conbytes(min_length=SK_ICV_LENGTH, max_length=SK_ICV_LENGTH)

    @validator("ciphertext", allow_reuse=True)
    def validate_block_aligned(cls, value):
        if len(value) == 0 or len(value) % SK_BLOCK_LENGTH != 0:
            raise AssertionError(f"Ciphertext length {len(value)} is not a positive multiple of {SK_BLOCK_LENGTH}")
        return value


Payload = Union[
    SaPayload, KePayload, IdPayload, CertPayload, AuthPayload, NoncePayload,
    NotifyPayload, TsPayload, CpPayload, EapPayload, SkPayload
]

PAYLOAD_CLASSES = {
    PayloadType.SA: SaPayload,
    PayloadType.KE: KePayload,
    PayloadType.IDi: IdPayload,
    PayloadType.IDr: IdPayload,
    PayloadType.CERT: CertPayload,
    PayloadType.AUTH: AuthPayload,
    PayloadType.NONCE: NoncePayload,
    PayloadType.NOTIFY: NotifyPayload,
    PayloadType.TSi: TsPayload,
    PayloadType.TSr: TsPayload,
    PayloadType.CP: CpPayload,
    PayloadType.EAP: EapPayload,
    PayloadType.SK: SkPayload,
}


class IkeMessage(WireModel):

    header: IkeHeader
    payloads: List[Payload] = []

    @validator("payloads", allow_reuse=True)
    def validate_sk_last(cls, value):
        positions = [i for i, p in enumerate(value) if isinstance(p, SkPayload)]
        if positions and positions != [len(value) - 1]:
            raise AssertionError("SK payload must be the single last payload of a message")
        return value

    def find_all(self, payload_class: Type[WireModel], payload_type: int = None) -> list:
        return [
            p for p in self.payloads
            if isinstance(p, payload_class) and (payload_type is None or p.payload_type == payload_type)
        ]

    def find(self, payload_class: Type[WireModel], payload_type: int = None):
        found = self.find_all(payload_class=payload_class, payload_type=payload_type)
        return found[0] if found else None

    def notifies(self, notify_type: int = None) -> List[NotifyPayload]:
        return [n for n in self.find_all(NotifyPayload) if notify_type is None or n.notify_type == notify_type]

    def error_notifies(self) -> List[NotifyPayload]:
        return [n for n in self.find_all(NotifyPayload) if n.is_error]

    @property
    def payload_types(self) -> List[int]:
        return [p.payload_type for p in self.payloads]
