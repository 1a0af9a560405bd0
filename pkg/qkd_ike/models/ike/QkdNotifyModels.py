# Standard Libraries
import struct
import uuid
# Third party packages
from pydantic import root_validator, conbytes, conint
from pydantic.typing import List
# Local package
from qkd_ike.constants import NotifyType, PRF_OUTPUT_LENGTH
from qkd_ike.fields import SAE_ID, KEY_ID_ENCODING, UINT16
from qkd_ike.validators import validate_key_ids_octets, validate_multiple_of, validate_unique
from qkd_ike.models.BaseModels import WireModel
# Local module
from .IkeModels import NotifyPayload

__all__ = ['QkdKeyIdsNotify', 'QkdKeyContextNotify', 'KEY_CONTEXT_VERSION']

KEY_CONTEXT_VERSION = 1
TEXT_KEY_ID_LENGTH = 36
# Version, Flags, KeySizeBits, KeyCount, Reserved
KEY_CONTEXT_HEADER = struct.Struct("!BBHH2x")
FLAG_TEXT_KEY_IDS = 0x01


class QkdKeyIdsNotify(WireModel):
    """
    Ordered QKD key identifiers sent by the responder in the IKE_SA_INIT response.

    The raw encoding concatenates 16-byte UUIDs, the count is implied by the data length.
    The text encoding concatenates 36-character UUID strings.
    """

    key_ids: List[uuid.UUID]
    encoding: KEY_ID_ENCODING = "raw"

    @root_validator(allow_reuse=True)
    def validate_ids_unique(cls, values):
        if values.get("key_ids") is not None:
            validate_unique(values=values["key_ids"])
        return values

    @property
    def count(self) -> int:
        return len(self.key_ids)

    def octets(self) -> bytes:
        if self.encoding == "text":
            return b"".join(str(x).encode("ascii") for x in self.key_ids)
        return b"".join(x.bytes for x in self.key_ids)

    def to_notify(self) -> NotifyPayload:
        return NotifyPayload(notify_type=NotifyType.QKD_KEY_IDS.value, data=self.octets())

    @classmethod
    def from_octets(cls, data: bytes, encoding: str = "raw") -> "QkdKeyIdsNotify":
        if encoding == "text":
            validate_multiple_of(value=len(data), base=TEXT_KEY_ID_LENGTH, name="key_ids length")
            key_ids = [
                uuid.UUID(data[i:i + TEXT_KEY_ID_LENGTH].decode("ascii"))
                for i in range(0, len(data), TEXT_KEY_ID_LENGTH)
            ]
        else:
            key_ids = validate_key_ids_octets(data=data)
        return cls(key_ids=key_ids, encoding=encoding)

    @classmethod
    def from_notify(cls, notify: NotifyPayload, encoding: str = "raw") -> "QkdKeyIdsNotify":
        if notify.notify_type != NotifyType.QKD_KEY_IDS:
            raise ValueError(f"Notify type {notify.notify_type} does not carry QKD key IDs")
        return cls.from_octets(data=notify.data, encoding=encoding)


class QkdKeyContextNotify(WireModel):
    """
    Context of the QKD keys announced in the same message.

    The UE needs master_sae_id to address its own KME, checks key_count and key_size_bits against
    its assignment plan and verifies confirmation_tag once it holds the keys.
    """

    version: conint(ge=0, le=255) = KEY_CONTEXT_VERSION
    text_key_ids: bool = False
    key_size_bits: UINT16
    key_count: UINT16
    master_sae_id: SAE_ID
    slave_sae_id: SAE_ID
    confirmation_tag: conbytes(min_length=PRF_OUTPUT_LENGTH, max_length=PRF_OUTPUT_LENGTH)

    def octets(self) -> bytes:
        flags = FLAG_TEXT_KEY_IDS if self.text_key_ids else 0
        master = self.master_sae_id.encode("utf-8")
        slave = self.slave_sae_id.encode("utf-8")
        return b"".join([
            KEY_CONTEXT_HEADER.pack(self.version, flags, self.key_size_bits, self.key_count),
            struct.pack("!B", len(master)), master,
            struct.pack("!B", len(slave)), slave,
            self.confirmation_tag
        ])

    def to_notify(self) -> NotifyPayload:
        return NotifyPayload(notify_type=NotifyType.QKD_KEY_CONTEXT.value, data=self.octets())

    @classmethod
    def from_octets(cls, data: bytes) -> "QkdKeyContextNotify":
        try:
            version, flags, key_size_bits, key_count = KEY_CONTEXT_HEADER.unpack_from(data, 0)
            offset = KEY_CONTEXT_HEADER.size
            master_len = data[offset]
            master = data[offset + 1:offset + 1 + master_len]
            offset += 1 + master_len
            slave_len = data[offset]
            slave = data[offset + 1:offset + 1 + slave_len]
            offset += 1 + slave_len
            tag = data[offset:]
        except (struct.error, IndexError) as e:
            raise ValueError(f"Truncated QKD key context: {repr(e)}")
        if len(master) != master_len or len(slave) != slave_len or len(tag) != PRF_OUTPUT_LENGTH:
            raise ValueError("Inconsistent QKD key context lengths")
        return cls(
            version=version,
            text_key_ids=bool(flags & FLAG_TEXT_KEY_IDS),
            key_size_bits=key_size_bits,
            key_count=key_count,
            master_sae_id=master.decode("utf-8"),
            slave_sae_id=slave.decode("utf-8"),
            confirmation_tag=bytes(tag)
        )

    @classmethod
    def from_notify(cls, notify: NotifyPayload) -> "QkdKeyContextNotify":
        if notify.notify_type != NotifyType.QKD_KEY_CONTEXT:
            raise ValueError(f"Notify type {notify.notify_type} does not carry a QKD key context")
        return cls.from_octets(data=notify.data)
