"""
RFC 7296 encoder and decoder for the payloads exchanged by the handshake.

Pure functions, safe to share between threads.
"""
# Standard Libraries
import ipaddress
import struct
# Third party packages
from pydantic import ValidationError
from pydantic.typing import List, Tuple
# Local package
from qkd_ike.config import LOGGER_CODEC
from qkd_ike.constants import (
    IKE_HEADER, PAYLOAD_HEADER, PROPOSAL_HEADER, TRANSFORM_HEADER, TRANSFORM_ATTRIBUTE, TS_HEADER,
    CP_ATTRIBUTE_HEADER, IKE_HEADER_LENGTH, PAYLOAD_HEADER_LENGTH, IKE_VERSION, CRITICAL_FLAG, FLAG_INITIATOR,
    FLAG_RESPONSE, KEY_LENGTH_ATTRIBUTE, MAX_PAYLOAD_LENGTH, SK_IV_LENGTH, SK_ICV_LENGTH, PayloadType
)
from qkd_ike.exceptions import IkeEncodeError, IkeParseError
from qkd_ike.models.ike import (
    IkeHeader, IkeWireHeader, IkeMessage, Transform, Proposal, SaPayload, KePayload, IdPayload, CertPayload,
    AuthPayload, NoncePayload, NotifyPayload, TrafficSelector, TsPayload, CpAttribute, CpPayload, EapPayload,
    SkPayload, PAYLOAD_CLASSES
)
# Local module

LOGGER = LOGGER_CODEC

UINT32_MAX = 0xFFFFFFFF


# Encoding

def _encode_transform(transform: Transform, last: bool) -> bytes:
    attributes = b""
    if transform.key_length is not None:
        attributes = TRANSFORM_ATTRIBUTE.pack(KEY_LENGTH_ATTRIBUTE, transform.key_length)
    length = TRANSFORM_HEADER.size + len(attributes)
    header = TRANSFORM_HEADER.pack(0 if last else 3, 0, length, transform.transform_type, 0, transform.transform_id)
    return header + attributes


def _encode_proposal(proposal: Proposal, last: bool) -> bytes:
    if len(proposal.transforms) > 255:
        raise IkeEncodeError(f"Proposal {proposal.number} has too many transforms")
    transforms = b"".join(
        _encode_transform(t, last=(i == len(proposal.transforms) - 1)) for i, t in enumerate(proposal.transforms)
    )
    length = PROPOSAL_HEADER.size + len(proposal.spi) + len(transforms)
    header = PROPOSAL_HEADER.pack(
        0 if last else 2, 0, length, proposal.number, proposal.protocol, len(proposal.spi), len(proposal.transforms)
    )
    return header + proposal.spi + transforms


def _encode_selector(selector: TrafficSelector) -> bytes:
    return TS_HEADER.pack(
        selector.ts_type, selector.ip_protocol, TS_HEADER.size + 8, selector.start_port, selector.end_port
    ) + selector.start_address.packed + selector.end_address.packed


def encode_payload_body(payload) -> bytes:
    if isinstance(payload, SaPayload):
        return b"".join(
            _encode_proposal(p, last=(i == len(payload.proposals) - 1)) for i, p in enumerate(payload.proposals)
        )
    if isinstance(payload, KePayload):
        return struct.pack("!HH", payload.dh_group, 0) + payload.public_value
    if isinstance(payload, IdPayload):
        return struct.pack("!B3x", payload.id_type) + payload.value
    if isinstance(payload, CertPayload):
        return struct.pack("!B", payload.encoding) + payload.data
    if isinstance(payload, AuthPayload):
        return struct.pack("!B3x", payload.auth_method) + payload.data
    if isinstance(payload, NoncePayload):
        return payload.nonce
    if isinstance(payload, NotifyPayload):
        return struct.pack("!BBH", payload.protocol_id, len(payload.spi), payload.notify_type) + payload.spi + payload.data
    if isinstance(payload, TsPayload):
        return struct.pack("!B3x", len(payload.selectors)) + b"".join(_encode_selector(s) for s in payload.selectors)
    if isinstance(payload, CpPayload):
        attributes = b"".join(
            CP_ATTRIBUTE_HEADER.pack(a.attribute_type, len(a.value)) + a.value for a in payload.attributes
        )
        return struct.pack("!B3x", payload.cfg_type) + attributes
    if isinstance(payload, EapPayload):
        return payload.data
    if isinstance(payload, SkPayload):
        return payload.iv + payload.ciphertext + payload.integrity_tag
    msg = f"Cannot encode payload of type {type(payload).__name__}"
    LOGGER.error(msg)
    raise IkeEncodeError(msg)


def encode_payloads(payloads: list) -> Tuple[int, bytes]:
    """
    Encodes a payload chain.

    Returns: Type of the first payload and the chained bytes.
    """
    chunks = []
    for index, payload in enumerate(payloads):
        if isinstance(payload, SkPayload):
            if index != len(payloads) - 1:
                raise IkeEncodeError("SK payload must be the last payload of a chain")
            next_payload = payload.inner_type
        else:
            next_payload = payloads[index + 1].payload_type if index + 1 < len(payloads) else PayloadType.NONE.value
        body = encode_payload_body(payload)
        length = PAYLOAD_HEADER_LENGTH + len(body)
        if length > MAX_PAYLOAD_LENGTH:
            msg = f"Payload #{index} ({PayloadType(payload.payload_type).name}) is {length} bytes, max {MAX_PAYLOAD_LENGTH}"
            LOGGER.error(msg)
            raise IkeEncodeError(msg)
        chunks.append(PAYLOAD_HEADER.pack(next_payload, 0, length) + body)
    first = payloads[0].payload_type if payloads else PayloadType.NONE.value
    return first, b"".join(chunks)


def encode_header(header: IkeHeader, next_payload: int, length: int) -> bytes:
    flags = (FLAG_INITIATOR if header.initiator else 0) | (FLAG_RESPONSE if header.response else 0)
    version = (header.major_version << 4) | header.minor_version
    return IKE_HEADER.pack(
        header.initiator_spi, header.responder_spi, next_payload, version, header.exchange_type, flags,
        header.message_id, length
    )


def encode(message: IkeMessage) -> bytes:
    """Encodes a message. Header next_payload and length are computed here."""
    first, body = encode_payloads(message.payloads)
    length = IKE_HEADER_LENGTH + len(body)
    if length > UINT32_MAX:
        raise IkeEncodeError(f"Message length {length} overflows the header length field")
    return encode_header(header=message.header, next_payload=first, length=length) + body


# Decoding

def peek_header(data: bytes) -> IkeWireHeader:
    """Parses the fixed header only, including next_payload and the declared length."""
    if len(data) < IKE_HEADER_LENGTH:
        raise IkeParseError(f"Truncated header: {len(data)} bytes", offset=len(data))
    spi_i, spi_r, next_payload, version, exchange_type, flags, message_id, length = IKE_HEADER.unpack_from(data, 0)
    if version >> 4 != IKE_VERSION >> 4:
        raise IkeParseError(f"Unsupported major version {version >> 4}", offset=17)
    try:
        return IkeWireHeader(
            initiator_spi=spi_i,
            responder_spi=spi_r,
            minor_version=version & 0x0F,
            exchange_type=exchange_type,
            initiator=bool(flags & FLAG_INITIATOR),
            response=bool(flags & FLAG_RESPONSE),
            message_id=message_id,
            next_payload=next_payload,
            length=length
        )
    except ValidationError as e:
        raise IkeParseError(f"Invalid header: {e.errors()[0]['msg']}", offset=0)


def _decode_transforms(data: bytes, count: int, offset: int) -> List[Transform]:
    transforms = []
    position = 0
    for _ in range(count):
        last, _reserved, length, transform_type, _reserved2, transform_id = TRANSFORM_HEADER.unpack_from(data, position)
        if length < TRANSFORM_HEADER.size or position + length > len(data):
            raise IkeParseError(f"Invalid transform length {length}", offset=offset + position)
        key_length = None
        attr_position = position + TRANSFORM_HEADER.size
        while attr_position < position + length:
            attr_type, attr_value = TRANSFORM_ATTRIBUTE.unpack_from(data, attr_position)
            if not attr_type & 0x8000:
                raise IkeParseError("Variable length transform attributes are not supported", offset=offset + attr_position)
            if attr_type == KEY_LENGTH_ATTRIBUTE:
                key_length = attr_value
            attr_position += TRANSFORM_ATTRIBUTE.size
        if attr_position != position + length:
            raise IkeParseError("Transform attributes overrun the transform", offset=offset + position)
        transforms.append(Transform(transform_type=transform_type, transform_id=transform_id, key_length=key_length))
        position += length
        if last == 0:
            break
    if len(transforms) != count or position != len(data):
        raise IkeParseError(f"Expected {count} transforms", offset=offset + position)
    return transforms


def _decode_sa(body: bytes, offset: int) -> SaPayload:
    proposals = []
    position = 0
    while position < len(body):
        last, _reserved, length, number, protocol, spi_size, count = PROPOSAL_HEADER.unpack_from(body, position)
        if length < PROPOSAL_HEADER.size + spi_size or position + length > len(body):
            raise IkeParseError(f"Invalid proposal length {length}", offset=offset + position)
        spi_start = position + PROPOSAL_HEADER.size
        spi = body[spi_start:spi_start + spi_size]
        transforms = _decode_transforms(
            data=body[spi_start + spi_size:position + length], count=count, offset=offset + spi_start + spi_size
        )
        proposals.append(Proposal(number=number, protocol=protocol, spi=spi, transforms=transforms))
        position += length
        if last == 0:
            break
    if position != len(body):
        raise IkeParseError("Trailing bytes after last proposal", offset=offset + position)
    return SaPayload(proposals=proposals)


def _decode_ts(payload_type: int, body: bytes, offset: int) -> TsPayload:
    count = body[0]
    selectors = []
    position = 4
    for _ in range(count):
        ts_type, ip_protocol, length, start_port, end_port = TS_HEADER.unpack_from(body, position)
        if length != TS_HEADER.size + 8 or position + length > len(body):
            raise IkeParseError(f"Unsupported traffic selector length {length}", offset=offset + position)
        addresses = position + TS_HEADER.size
        selectors.append(TrafficSelector(
            ts_type=ts_type,
            ip_protocol=ip_protocol,
            start_port=start_port,
            end_port=end_port,
            start_address=ipaddress.IPv4Address(body[addresses:addresses + 4]),
            end_address=ipaddress.IPv4Address(body[addresses + 4:addresses + 8])
        ))
        position += length
    if position != len(body):
        raise IkeParseError("Trailing bytes after traffic selectors", offset=offset + position)
    return TsPayload(payload_type=payload_type, selectors=selectors)


def _decode_cp(body: bytes, offset: int) -> CpPayload:
    cfg_type = body[0]
    attributes = []
    position = 4
    while position < len(body):
        attribute_type, length = CP_ATTRIBUTE_HEADER.unpack_from(body, position)
        start = position + CP_ATTRIBUTE_HEADER.size
        if start + length > len(body):
            raise IkeParseError(f"Configuration attribute length {length} overruns payload", offset=offset + position)
        attributes.append(CpAttribute(attribute_type=attribute_type & 0x7FFF, value=body[start:start + length]))
        position = start + length
    return CpPayload(cfg_type=cfg_type, attributes=attributes)


def decode_payload_body(payload_type: int, body: bytes, offset: int, next_payload: int = 0):
    if payload_type == PayloadType.SA:
        return _decode_sa(body=body, offset=offset)
    if payload_type == PayloadType.KE:
        dh_group, _reserved = struct.unpack_from("!HH", body, 0)
        return KePayload(dh_group=dh_group, public_value=body[4:])
    if payload_type in (PayloadType.IDi, PayloadType.IDr):
        id_type, = struct.unpack_from("!B3x", body, 0)
        return IdPayload(payload_type=payload_type, id_type=id_type, value=body[4:])
    if payload_type == PayloadType.CERT:
        return CertPayload(encoding=body[0], data=body[1:])
    if payload_type == PayloadType.AUTH:
        auth_method, = struct.unpack_from("!B3x", body, 0)
        return AuthPayload(auth_method=auth_method, data=body[4:])
    if payload_type == PayloadType.NONCE:
        return NoncePayload(nonce=body)
    if payload_type == PayloadType.NOTIFY:
        protocol_id, spi_size, notify_type = struct.unpack_from("!BBH", body, 0)
        if 4 + spi_size > len(body):
            raise IkeParseError(f"Notify SPI size {spi_size} overruns payload", offset=offset)
        return NotifyPayload(
            protocol_id=protocol_id, spi=body[4:4 + spi_size], notify_type=notify_type, data=body[4 + spi_size:]
        )
    if payload_type in (PayloadType.TSi, PayloadType.TSr):
        return _decode_ts(payload_type=payload_type, body=body, offset=offset)
    if payload_type == PayloadType.CP:
        return _decode_cp(body=body, offset=offset)
    if payload_type == PayloadType.EAP:
        return EapPayload(data=body)
    if payload_type == PayloadType.SK:
        if len(body) < SK_IV_LENGTH + SK_ICV_LENGTH:
            raise IkeParseError(f"Encrypted payload too short: {len(body)} bytes", offset=offset)
        return SkPayload(
            inner_type=next_payload,
            iv=body[:SK_IV_LENGTH],
            ciphertext=body[SK_IV_LENGTH:-SK_ICV_LENGTH],
            integrity_tag=body[-SK_ICV_LENGTH:]
        )
    return None


def decode_payloads(data: bytes, first_type: int, base_offset: int = IKE_HEADER_LENGTH) -> list:
    """
    Decodes a payload chain. Never reads past a declared length.

    Unknown payloads are skipped unless their critical bit is set.
    """
    payloads = []
    position = 0
    next_type = first_type
    index = 0
    while next_type != PayloadType.NONE:
        offset = base_offset + position
        if position + PAYLOAD_HEADER_LENGTH > len(data):
            raise IkeParseError("Truncated payload header", offset=offset, payload_index=index)
        following, flags, length = PAYLOAD_HEADER.unpack_from(data, position)
        if length < PAYLOAD_HEADER_LENGTH:
            raise IkeParseError(f"Payload length {length} below header size", offset=offset, payload_index=index)
        if position + length > len(data):
            raise IkeParseError(
                f"Payload length {length} exceeds remaining {len(data) - position} bytes", offset=offset, payload_index=index
            )
        body = data[position + PAYLOAD_HEADER_LENGTH:position + length]
        if next_type in PAYLOAD_CLASSES:
            try:
                payload = decode_payload_body(payload_type=next_type, body=body, offset=offset + PAYLOAD_HEADER_LENGTH, next_payload=following)
            except IkeParseError as e:
                e.payload_index = index
                raise
            except (struct.error, IndexError, ValueError, ValidationError) as e:
                raise IkeParseError(f"Malformed {PayloadType(next_type).name} payload: {repr(e)}", offset=offset, payload_index=index)
            payloads.append(payload)
        elif flags & CRITICAL_FLAG:
            raise IkeParseError(f"Unsupported critical payload type {next_type}", offset=offset, payload_index=index)
        else:
            LOGGER.debug(f"Skipping unknown non-critical payload type {next_type} at offset {offset}")
        position += length
        index += 1
        if next_type == PayloadType.SK:
            break
        next_type = following
    if position != len(data):
        raise IkeParseError(f"{len(data) - position} trailing bytes after payload chain", offset=base_offset + position, payload_index=index)
    return payloads


def decode(data: bytes) -> IkeMessage:
    """
    Decodes a complete message.

    Raises IkeParseError identifying the offset and payload index of the first problem.
    """
    data = bytes(data)
    header = peek_header(data)
    if header.length != len(data):
        raise IkeParseError(f"Header length {header.length} does not match message size {len(data)}", offset=24)
    payloads = decode_payloads(data=data[IKE_HEADER_LENGTH:], first_type=header.next_payload)
    try:
        return IkeMessage(header=IkeHeader(**header.dict(exclude={"next_payload", "length"})), payloads=payloads)
    except ValidationError as e:
        raise IkeParseError(f"Invalid message structure: {e.errors()[0]['msg']}", offset=IKE_HEADER_LENGTH)
